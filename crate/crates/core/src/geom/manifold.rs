use std::f64::consts::PI;

use rand::Rng;

use crate::ad::{directional_s, Scalar};
use crate::error::{Error, Result};
use crate::lie_group::{mat3_mul, mat3_transpose, so3_angle, so3_exp, so3_log};

/// Catalog manifolds, each embedded in some `ℝ^ambient_dim`.
///
/// Charts are numbered `0..n_charts()`. Every chart map is written for a
/// generic [`Scalar`] and extends smoothly to a neighbourhood of the manifold
/// in ambient space, so jets may be pushed through off-manifold points.
#[derive(Clone, Debug, PartialEq)]
pub enum Manifold {
    Euclidean(usize),
    /// Unit circle in ℝ², charts: angle in (−π, π) and angle in (0, 2π).
    Circle,
    /// Unit sphere in ℝ³, charts: stereographic from the north and south poles.
    Sphere,
    /// Rotation matrices (row-major in ℝ⁹), exponential charts at
    /// `I, diag(1,−1,−1), diag(−1,1,−1), diag(−1,−1,1)`.
    So3,
    /// `{0, …, n−1}` as a 0-dimensional manifold embedded in ℝ.
    Discrete(usize),
    Product(Box<Manifold>, Box<Manifold>),
    Power(Box<Manifold>, usize),
    /// Tangent bundle, embedded as `(p, u)` in ℝ^(2a).
    Tangent(Box<Manifold>),
}

const SO3_CENTERS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];

fn so3_center(c: usize) -> Vec<f64> {
    let d = SO3_CENTERS[c];
    vec![d[0], 0.0, 0.0, 0.0, d[1], 0.0, 0.0, 0.0, d[2]]
}

impl Manifold {
    pub fn product(a: Manifold, b: Manifold) -> Manifold {
        Manifold::Product(Box::new(a), Box::new(b))
    }

    pub fn power(a: Manifold, n: usize) -> Manifold {
        Manifold::Power(Box::new(a), n)
    }

    pub fn tangent_bundle(&self) -> Manifold {
        Manifold::Tangent(Box::new(self.clone()))
    }

    pub fn torus() -> Manifold {
        Manifold::product(Manifold::Circle, Manifold::Circle)
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::Euclidean(n) => *n,
            Manifold::Circle => 1,
            Manifold::Sphere => 2,
            Manifold::So3 => 3,
            Manifold::Discrete(_) => 0,
            Manifold::Product(a, b) => a.dim() + b.dim(),
            Manifold::Power(a, n) => a.dim() * n,
            Manifold::Tangent(a) => 2 * a.dim(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Euclidean(n) => *n,
            Manifold::Circle => 2,
            Manifold::Sphere => 3,
            Manifold::So3 => 9,
            Manifold::Discrete(_) => 1,
            Manifold::Product(a, b) => a.ambient_dim() + b.ambient_dim(),
            Manifold::Power(a, n) => a.ambient_dim() * n,
            Manifold::Tangent(a) => 2 * a.ambient_dim(),
        }
    }

    pub fn n_charts(&self) -> usize {
        match self {
            Manifold::Euclidean(_) => 1,
            Manifold::Circle | Manifold::Sphere => 2,
            Manifold::So3 => 4,
            Manifold::Discrete(n) => *n,
            Manifold::Product(a, b) => a.n_charts() * b.n_charts(),
            Manifold::Power(a, n) => a.n_charts().saturating_pow(*n as u32),
            Manifold::Tangent(a) => a.n_charts(),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Manifold::Euclidean(n) => format!("R{n}"),
            Manifold::Circle => "S1".into(),
            Manifold::Sphere => "S2".into(),
            Manifold::So3 => "SO3".into(),
            Manifold::Discrete(n) => format!("Z{n}"),
            Manifold::Product(a, b) => format!("{}x{}", a.id(), b.id()),
            Manifold::Power(a, n) => format!("({})^{n}", a.id()),
            Manifold::Tangent(a) => format!("T({})", a.id()),
        }
    }

    /// Inverse of [`Manifold::id`] for products of the basic factors.
    pub fn parse(id: &str) -> Result<Manifold> {
        let id = id.trim();
        if id == "T2" {
            return Ok(Manifold::torus());
        }
        if let Some(inner) = id.strip_prefix("T(").and_then(|s| s.strip_suffix(')')) {
            return Ok(Manifold::parse(inner)?.tangent_bundle());
        }
        if let Some((a, b)) = id.split_once('x') {
            return Ok(Manifold::product(Manifold::parse(a)?, Manifold::parse(b)?));
        }
        match id {
            "S1" => Ok(Manifold::Circle),
            "S2" => Ok(Manifold::Sphere),
            "SO3" => Ok(Manifold::So3),
            _ => {
                if let Some(n) = id.strip_prefix('R').and_then(|s| s.parse().ok()) {
                    Ok(Manifold::Euclidean(n))
                } else if let Some(n) = id.strip_prefix('Z').and_then(|s| s.parse().ok()) {
                    Ok(Manifold::Discrete(n))
                } else {
                    Err(Error::UnknownId(id.to_string()))
                }
            }
        }
    }

    /// Splits a product ambient vector into its factors.
    pub fn split_ambient<'a, T>(&self, amb: &'a [T]) -> (&'a [T], &'a [T]) {
        match self {
            Manifold::Product(a, _) => amb.split_at(a.ambient_dim()),
            Manifold::Tangent(a) => amb.split_at(a.ambient_dim()),
            _ => panic!("split_ambient on a non-product manifold"),
        }
    }

    fn split_chart(&self, chart: usize) -> (usize, usize) {
        match self {
            Manifold::Product(_, b) => (chart / b.n_charts(), chart % b.n_charts()),
            _ => unreachable!(),
        }
    }

    fn power_digits(a: &Manifold, n: usize, mut chart: usize) -> Vec<usize> {
        let base = a.n_charts();
        (0..n)
            .map(|_| {
                let d = chart % base;
                chart /= base;
                d
            })
            .collect()
    }

    /// Interior margin of an ambient point in a chart: positive inside the
    /// chart domain, larger is safer.
    pub fn chart_margin(&self, chart: usize, amb: &[f64]) -> f64 {
        match self {
            Manifold::Euclidean(_) => f64::INFINITY,
            Manifold::Circle => {
                if chart == 0 {
                    PI - amb[1].atan2(amb[0]).abs()
                } else {
                    PI - (-amb[1]).atan2(-amb[0]).abs()
                }
            }
            Manifold::Sphere => {
                if chart == 0 {
                    1.0 - amb[2]
                } else {
                    1.0 + amb[2]
                }
            }
            Manifold::So3 => {
                let rel = mat3_mul(&mat3_transpose(&so3_center(chart)), amb);
                PI - so3_angle(&rel)
            }
            Manifold::Discrete(_) => 0.5 - (amb[0] - chart as f64).abs(),
            Manifold::Product(a, b) => {
                let (i, j) = self.split_chart(chart);
                let (x, y) = self.split_ambient(amb);
                a.chart_margin(i, x).min(b.chart_margin(j, y))
            }
            Manifold::Power(a, n) => {
                let d = a.ambient_dim();
                Self::power_digits(a, *n, chart)
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| a.chart_margin(c, &amb[k * d..(k + 1) * d]))
                    .fold(f64::INFINITY, f64::min)
            }
            Manifold::Tangent(a) => a.chart_margin(chart, &amb[..a.ambient_dim()]),
        }
    }

    fn best_local(&self, amb: &[f64]) -> (usize, f64) {
        match self {
            Manifold::Product(a, b) => {
                let (x, y) = self.split_ambient(amb);
                let (i, mi) = a.best_local(x);
                let (j, mj) = b.best_local(y);
                (i * b.n_charts() + j, mi.min(mj))
            }
            Manifold::Power(a, n) => {
                let d = a.ambient_dim();
                let base = a.n_charts();
                let mut chart = 0usize;
                let mut margin = f64::INFINITY;
                let mut place = 1usize;
                for k in 0..*n {
                    let (c, m) = a.best_local(&amb[k * d..(k + 1) * d]);
                    chart += c * place;
                    place = place.saturating_mul(base);
                    margin = margin.min(m);
                }
                (chart, margin)
            }
            Manifold::Tangent(a) => a.best_local(&amb[..a.ambient_dim()]),
            Manifold::Discrete(n) => {
                let k = amb[0].round().clamp(0.0, (*n as f64) - 1.0) as usize;
                (k, self.chart_margin(k, amb))
            }
            _ => {
                let mut best = (0, f64::NEG_INFINITY);
                for c in 0..self.n_charts() {
                    let m = self.chart_margin(c, amb);
                    if m > best.1 {
                        best = (c, m);
                    }
                }
                best
            }
        }
    }

    /// Chart with maximal margin (ties to the lowest id; products choose
    /// factorwise).
    pub fn best_chart(&self, amb: &[f64]) -> Result<usize> {
        let (c, m) = self.best_local(amb);
        if m > 0.0 {
            Ok(c)
        } else {
            Err(Error::OutOfChart { chart: c })
        }
    }

    /// Ambient point to chart coordinates.
    pub fn chart_forward<S: Scalar>(&self, chart: usize, amb: &[S]) -> Vec<S> {
        match self {
            Manifold::Euclidean(_) => amb.to_vec(),
            Manifold::Circle => {
                if chart == 0 {
                    vec![amb[1].atan2(amb[0])]
                } else {
                    vec![(-amb[1]).atan2(-amb[0]) + PI]
                }
            }
            Manifold::Sphere => {
                let d = if chart == 0 { -amb[2] + 1.0 } else { amb[2] + 1.0 };
                vec![amb[0] / d, amb[1] / d]
            }
            Manifold::So3 => {
                let c0: Vec<S> = so3_center(chart).into_iter().map(S::cst).collect();
                so3_log(&mat3_mul(&mat3_transpose(&c0), amb))
            }
            Manifold::Discrete(_) => vec![],
            Manifold::Product(a, b) => {
                let (i, j) = self.split_chart(chart);
                let (x, y) = self.split_ambient(amb);
                let mut out = a.chart_forward(i, x);
                out.extend(b.chart_forward(j, y));
                out
            }
            Manifold::Power(a, n) => {
                let d = a.ambient_dim();
                Self::power_digits(a, *n, chart)
                    .iter()
                    .enumerate()
                    .flat_map(|(k, &c)| a.chart_forward(c, &amb[k * d..(k + 1) * d]))
                    .collect()
            }
            Manifold::Tangent(a) => {
                let (p, u) = amb.split_at(a.ambient_dim());
                let (x, y) = directional_s(|q| a.chart_forward(chart, q), p, u);
                let mut out = x;
                out.extend(y);
                out
            }
        }
    }

    /// Chart coordinates to ambient point.
    pub fn chart_inverse<S: Scalar>(&self, chart: usize, x: &[S]) -> Vec<S> {
        match self {
            Manifold::Euclidean(_) => x.to_vec(),
            Manifold::Circle => vec![x[0].cos(), x[0].sin()],
            Manifold::Sphere => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                let d = (r2 + 1.0).recip();
                let z = if chart == 0 { r2 - 1.0 } else { -r2 + 1.0 };
                vec![x[0] * d * 2.0, x[1] * d * 2.0, z * d]
            }
            Manifold::So3 => {
                let c0: Vec<S> = so3_center(chart).into_iter().map(S::cst).collect();
                mat3_mul(&c0, &so3_exp(x))
            }
            Manifold::Discrete(_) => vec![S::cst(chart as f64)],
            Manifold::Product(a, b) => {
                let (i, j) = self.split_chart(chart);
                let (x1, x2) = x.split_at(a.dim());
                let mut out = a.chart_inverse(i, x1);
                out.extend(b.chart_inverse(j, x2));
                out
            }
            Manifold::Power(a, n) => {
                let d = a.dim();
                Self::power_digits(a, *n, chart)
                    .iter()
                    .enumerate()
                    .flat_map(|(k, &c)| a.chart_inverse(c, &x[k * d..(k + 1) * d]))
                    .collect()
            }
            Manifold::Tangent(a) => {
                let (xb, y) = x.split_at(a.dim());
                let (p, u) = directional_s(|q| a.chart_inverse(chart, q), xb, y);
                let mut out = p;
                out.extend(u);
                out
            }
        }
    }

    /// `D(φ⁻¹)(x)·y`: chart velocity to ambient velocity.
    pub fn velocity_to_ambient<S: Scalar>(&self, chart: usize, x: &[S], y: &[S]) -> Vec<S> {
        if let Manifold::Euclidean(_) = self {
            return y.to_vec();
        }
        directional_s(|q| self.chart_inverse(chart, q), x, y).1
    }

    /// `Dφ(p)·u`: ambient velocity to chart velocity.
    pub fn velocity_to_chart<S: Scalar>(&self, chart: usize, p: &[S], u: &[S]) -> Vec<S> {
        if let Manifold::Euclidean(_) = self {
            return u.to_vec();
        }
        directional_s(|q| self.chart_forward(chart, q), p, u).1
    }

    /// Default coherence bound δ_coh for grid maps: half the injectivity
    /// radius, with 2 standing in for the infinite radius of flat space.
    pub fn coherence_radius(&self) -> f64 {
        match self {
            Manifold::Euclidean(_) => 1.0,
            Manifold::Circle | Manifold::Sphere | Manifold::So3 => PI / 2.0,
            Manifold::Discrete(_) => 0.5,
            Manifold::Product(a, b) => a.coherence_radius().min(b.coherence_radius()),
            Manifold::Power(a, _) | Manifold::Tangent(a) => a.coherence_radius(),
        }
    }

    /// Nearest point on the manifold (used to clean up sampled data).
    pub fn project(&self, amb: &[f64]) -> Vec<f64> {
        match self {
            Manifold::Euclidean(_) => amb.to_vec(),
            Manifold::Circle | Manifold::Sphere => {
                let n = crate::linalg::norm(amb);
                amb.iter().map(|v| v / n).collect()
            }
            Manifold::So3 => {
                let m = nalgebra::Matrix3::from_row_slice(amb);
                let svd = m.svd(true, true);
                let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
                let mut d = nalgebra::Matrix3::identity();
                if (u * vt).determinant() < 0.0 {
                    d[(2, 2)] = -1.0;
                }
                let r = u * d * vt;
                (0..9).map(|k| r[(k / 3, k % 3)]).collect()
            }
            Manifold::Discrete(n) => vec![amb[0].round().clamp(0.0, *n as f64 - 1.0)],
            Manifold::Product(a, b) => {
                let (x, y) = self.split_ambient(amb);
                let mut out = a.project(x);
                out.extend(b.project(y));
                out
            }
            Manifold::Power(a, n) => {
                let d = a.ambient_dim();
                (0..*n).flat_map(|k| a.project(&amb[k * d..(k + 1) * d])).collect()
            }
            Manifold::Tangent(a) => {
                let (p, u) = amb.split_at(a.ambient_dim());
                let p = a.project(p);
                let c = a.best_chart(&p).expect("projected point lies in a chart");
                let x = a.chart_forward(c, &p);
                let y = a.velocity_to_chart(c, &p, u);
                let mut out = p;
                out.extend(a.velocity_to_ambient(c, &x, &y));
                out
            }
        }
    }

    /// Random ambient point (Euclidean factors in `[-2, 2]`).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Manifold::Euclidean(n) => (0..*n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            Manifold::Circle => {
                let t: f64 = rng.gen_range(-PI..PI);
                vec![t.cos(), t.sin()]
            }
            Manifold::Sphere => {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(-PI..PI);
                let r = (1.0 - z * z).sqrt();
                vec![r * phi.cos(), r * phi.sin(), z]
            }
            Manifold::So3 => {
                // Uniform over the unit-quaternion sphere.
                let q = loop {
                    let q: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let n = crate::linalg::norm(&q);
                    if n > 0.1 && n <= 1.0 {
                        break q.iter().map(|v| v / n).collect::<Vec<_>>();
                    }
                };
                let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
                vec![
                    1.0 - 2.0 * (y * y + z * z),
                    2.0 * (x * y - w * z),
                    2.0 * (x * z + w * y),
                    2.0 * (x * y + w * z),
                    1.0 - 2.0 * (x * x + z * z),
                    2.0 * (y * z - w * x),
                    2.0 * (x * z - w * y),
                    2.0 * (y * z + w * x),
                    1.0 - 2.0 * (x * x + y * y),
                ]
            }
            Manifold::Discrete(n) => vec![rng.gen_range(0..*n) as f64],
            Manifold::Product(a, b) => {
                let mut out = a.sample(rng);
                out.extend(b.sample(rng));
                out
            }
            Manifold::Power(a, n) => (0..*n).flat_map(|_| a.sample(rng)).collect(),
            Manifold::Tangent(a) => {
                let p = a.sample(rng);
                let c = a.best_chart(&p).expect("sampled point lies in a chart");
                let x = a.chart_forward(c, &p);
                let y: Vec<f64> = (0..a.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut out = p;
                out.extend(a.velocity_to_ambient(c, &x, &y));
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dist;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn catalog() -> Vec<Manifold> {
        vec![
            Manifold::Euclidean(2),
            Manifold::Circle,
            Manifold::Sphere,
            Manifold::So3,
            Manifold::torus(),
            Manifold::product(Manifold::Discrete(4), Manifold::Euclidean(2)),
            Manifold::power(Manifold::Circle, 3),
            Manifold::Circle.tangent_bundle(),
            Manifold::Sphere.tangent_bundle(),
        ]
    }

    #[test]
    fn charts_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in catalog() {
            for _ in 0..200 {
                let p = m.sample(&mut rng);
                let c = m.best_chart(&p).unwrap();
                let x = m.chart_forward(c, &p);
                assert_eq!(x.len(), m.dim());
                let q = m.chart_inverse(c, &x);
                assert!(dist(&p, &q) < 1e-9, "{} {p:?} {q:?}", m.id());
            }
        }
    }

    #[test]
    fn so3_charts_cover() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = Manifold::So3.sample(&mut rng);
            let c = Manifold::So3.best_chart(&p).unwrap();
            assert!(Manifold::So3.chart_margin(c, &p) >= PI / 3.0 - 1e-9);
        }
    }

    #[test]
    fn circle_chart_b_angles() {
        let p = [0.5f64.cos(), 0.5f64.sin()];
        assert!((Manifold::Circle.chart_forward(1, &p)[0] - 0.5).abs() < 1e-15);
        let q = [(-0.5f64).cos(), (-0.5f64).sin()];
        assert!((Manifold::Circle.chart_forward(1, &q)[0] - (2.0 * PI - 0.5)).abs() < 1e-14);
    }

    #[test]
    fn parse_round_trip() {
        for m in catalog() {
            if matches!(m, Manifold::Power(..)) {
                continue;
            }
            assert_eq!(Manifold::parse(&m.id()).unwrap(), m);
        }
        assert!(Manifold::parse("Q7").is_err());
    }
}
