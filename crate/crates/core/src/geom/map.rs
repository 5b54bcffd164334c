use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Manifold, Point, SecondTangent, Tangent};
use crate::ad::{self, values, AmbientFn, Jet, Scalar};
use crate::error::{Error, Result};

pub type AmbientPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Smooth map given by an ambient formula; chart expressions are
/// `φ_j ∘ F ∘ φ_i⁻¹`.
#[derive(Clone)]
pub struct SmoothMap {
    pub name: String,
    pub source: Manifold,
    pub target: Manifold,
    pub formula: AmbientFn,
    /// Declared differentiability order (`u8::MAX` for smooth).
    pub order: u8,
    pub domain: Option<AmbientPredicate>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothMap({}: {} -> {})", self.name, self.source.id(), self.target.id())
    }
}

impl SmoothMap {
    pub fn new(name: &str, source: Manifold, target: Manifold, formula: AmbientFn) -> Self {
        SmoothMap { name: name.to_string(), source, target, formula, order: u8::MAX, domain: None }
    }

    pub fn with_order(mut self, order: u8) -> Self {
        self.order = order;
        self
    }

    pub fn with_domain(mut self, domain: AmbientPredicate) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn identity(m: &Manifold) -> Self {
        SmoothMap::new("id", m.clone(), m.clone(), crate::ambient_fn!(|x| x.to_vec()))
    }

    pub fn constant(source: &Manifold, target: &Manifold, value: &[f64]) -> Self {
        let v = value.to_vec();
        SmoothMap::new(
            "const",
            source.clone(),
            target.clone(),
            crate::generic_fn!([v] |_x: S| v.iter().map(|&c| <S as Scalar>::cst(c)).collect()),
        )
    }

    pub fn in_domain(&self, amb: &[f64]) -> bool {
        self.domain.as_ref().map_or(true, |d| d(amb))
    }

    pub fn eval_ambient(&self, amb: &[f64]) -> Result<Vec<f64>> {
        if !self.in_domain(amb) {
            return Err(Error::DomainViolation(format!("outside the domain of {}", self.name)));
        }
        Ok(self.formula.eval(amb))
    }

    pub fn eval(&self, p: &Point) -> Result<Point> {
        Point::from_ambient(&self.target, &self.eval_ambient(&p.ambient)?)
    }

    /// Chart expression `φ_j ∘ F ∘ φ_i⁻¹`.
    pub fn local_expr<S: Scalar>(&self, i: usize, j: usize, x: &[S]) -> Vec<S> {
        let amb = self.source.chart_inverse(i, x);
        let y = self.formula.eval_s(&amb);
        self.target.chart_forward(j, &y)
    }

    fn require(&self, needed: u8) -> Result<()> {
        if self.order < needed {
            Err(Error::NotDifferentiable { name: self.name.clone(), order: self.order, needed })
        } else {
            Ok(())
        }
    }

    pub fn tangent_map(&self, v: &Tangent) -> Result<Tangent> {
        self.require(1)?;
        let q = self.eval(&v.base)?;
        let (i, j) = (v.base.chart, q.chart);
        let (_, d) = ad::directional(
            |x| self.local_expr(i, j, x),
            &ad::constants(&v.base.coords),
            &ad::constants(&v.vel),
        );
        Ok(Tangent { base: q, vel: values(&d) })
    }

    /// Jacobian of the chart expression at `p`, with the chart used on the
    /// target side.
    pub fn jacobian(&self, p: &Point) -> Result<(DMatrix<f64>, usize)> {
        self.require(1)?;
        let q = self.eval(p)?;
        let (i, j) = (p.chart, q.chart);
        let jac = ad::jacobian(|x| self.local_expr(i, j, x), &p.coords);
        Ok((jac, j))
    }

    /// `(x, y, z, w) ↦ (f(x), df(x)y, df(x)z, df(x)w + d²f(x)(y, z))`, from
    /// one evaluation at `x + ε₀y + ε₁z + ε₀ε₁w`.
    pub fn second_tangent_map(&self, s: &SecondTangent) -> Result<SecondTangent> {
        self.require(2)?;
        let base = Point::in_chart(&self.source, s.chart, &s.x)?;
        let q = self.eval(&base)?;
        let (i, j) = (s.chart, q.chart);
        let e0 = Jet::variable(0.0, 0);
        let e1 = Jet::variable(0.0, 1);
        let e01 = e0 * e1;
        let xs: Vec<Jet> =
            (0..s.x.len()).map(|k| e0 * s.y[k] + e1 * s.z[k] + e01 * s.w[k] + s.x[k]).collect();
        let out = self.local_expr(i, j, &xs);
        Ok(SecondTangent {
            chart: j,
            x: out.iter().map(|v| v.value()).collect(),
            y: out.iter().map(|v| v.coeff(0b01)).collect(),
            z: out.iter().map(|v| v.coeff(0b10)).collect(),
            w: out.iter().map(|v| v.coeff(0b11)).collect(),
        })
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SmoothMap) -> SmoothMap {
        assert_eq!(inner.target, self.source, "maps are not composable");
        let domain: Option<AmbientPredicate> = match (&inner.domain, &self.domain) {
            (None, None) => None,
            _ => {
                let (a, b) = (inner.clone(), self.clone());
                Some(Arc::new(move |x: &[f64]| a.in_domain(x) && b.in_domain(&a.formula.eval(x))))
            }
        };
        SmoothMap {
            name: format!("{}∘{}", self.name, inner.name),
            source: inner.source.clone(),
            target: self.target.clone(),
            formula: self.formula.after(&inner.formula),
            order: self.order.min(inner.order),
            domain,
        }
    }

    /// The tangent map `Tf: TM → TN` as a smooth map of bundle manifolds.
    pub fn tangent_lift(&self) -> SmoothMap {
        let f = self.formula.clone();
        let a = self.source.ambient_dim();
        let formula = AmbientFn::from_jet(move |pu: &[Jet]| {
            let (p, u) = pu.split_at(a);
            let (y, dy) = ad::directional(|q| f.eval_jet(q), p, u);
            let mut out = y;
            out.extend(dy);
            out
        });
        SmoothMap {
            name: format!("T{}", self.name),
            source: self.source.tangent_bundle(),
            target: self.target.tangent_bundle(),
            formula,
            order: self.order.saturating_sub(1),
            domain: None,
        }
    }

    /// The bundle projection `π: TM → M`.
    pub fn bundle_projection(m: &Manifold) -> SmoothMap {
        let a = m.ambient_dim();
        SmoothMap::new("pi", m.tangent_bundle(), m.clone(), crate::ambient_fn!([a] | x | x[..a].to_vec()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient_fn;
    use crate::lie_group::complex_mul;

    fn square() -> SmoothMap {
        SmoothMap::new("square", Manifold::Circle, Manifold::Circle, ambient_fn!(|z| complex_mul(z, z)))
    }

    #[test]
    fn circle_square_tangent() {
        let m = Manifold::Circle;
        let v = Tangent { base: Point::in_chart(&m, 0, &[0.7]).unwrap(), vel: vec![1.0] };
        let w = square().tangent_map(&v).unwrap();
        assert!((w.base.coords[0] - 1.4).abs() < 1e-14);
        assert!((w.vel[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_map_has_zero_tangent() {
        let m = Manifold::Sphere;
        let c = SmoothMap::constant(&m, &m, &[0.0, 0.0, 1.0]);
        let v = Tangent { base: Point::in_chart(&m, 0, &[0.2, 0.1]).unwrap(), vel: vec![1.0, -1.0] };
        let w = c.tangent_map(&v).unwrap();
        assert_eq!(w.vel, vec![0.0, 0.0]);
        assert!((w.base.ambient[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_second_tangents() {
        let r = Manifold::Euclidean(1);
        let sq = SmoothMap::new("x^2", r.clone(), r.clone(), ambient_fn!(|x| vec![x[0] * x[0]]));
        let s = SecondTangent { chart: 0, x: vec![1.0], y: vec![1.0], z: vec![1.0], w: vec![0.0] };
        let t = sq.second_tangent_map(&s).unwrap();
        assert_eq!((t.x[0], t.y[0], t.z[0], t.w[0]), (1.0, 2.0, 2.0, 2.0));
        let lin = SmoothMap::new("2x", r.clone(), r, ambient_fn!(|x| vec![x[0] * 2.0]));
        let s = SecondTangent { chart: 0, x: vec![0.3], y: vec![-1.0], z: vec![0.5], w: vec![4.0] };
        let t = lin.second_tangent_map(&s).unwrap();
        assert_eq!((t.x[0], t.y[0], t.z[0], t.w[0]), (0.6, -2.0, 1.0, 8.0));
    }

    #[test]
    fn order_is_enforced() {
        let m = Manifold::Circle;
        let f = square().with_order(1);
        let s = SecondTangent { chart: 0, x: vec![0.1], y: vec![1.0], z: vec![0.0], w: vec![0.0] };
        assert!(matches!(f.second_tangent_map(&s), Err(Error::NotDifferentiable { .. })));
        let v = Tangent::zero(Point::in_chart(&m, 0, &[0.1]).unwrap());
        assert!(f.with_order(0).tangent_map(&v).is_err());
    }
}
