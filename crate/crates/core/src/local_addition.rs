//! Local additions `Σ: U ⊆ TM → M` with `θ = (π, Σ)` a diffeomorphism onto a
//! neighbourhood of the diagonal.
//!
//! `Σ` is stored as an ambient formula of `(p, u)` where `u` is an ambient
//! velocity at `p`, so that it can be differentiated by jets along fibres and
//! along the base.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ad::{self, directional_s, AmbientFn, Jet, Scalar};
use crate::error::{Error, Result};
use crate::geom::{Manifold, Point, Tangent};
use crate::lie_group::{hat, mat3_mul, mat3_transpose, so3_exp, so3_log, vee, LieGroupInstance};
use crate::linalg::{dist, norm, Mat};
use crate::special::{cos_sqrt, sinc_sqrt};

/// Margin subtracted from the injectivity radius π of the round catalog
/// manifolds.
pub const INJECTIVITY_MARGIN: f64 = 1e-3;
pub const TOL_THETA: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;

pub type TangentPredicate = Arc<dyn Fn(&[f64], &[f64]) -> bool + Send + Sync>;
pub type ClosedInverse = Arc<dyn Fn(&[f64], &[f64]) -> Option<Vec<f64>> + Send + Sync>;

#[derive(Clone)]
pub enum ThetaInverse {
    /// Ambient `u` with `Σ(p, u) = q`, or `None` outside `U′`.
    Closed(ClosedInverse),
    Newton,
}

#[derive(Clone)]
pub struct LocalAddition {
    pub name: String,
    pub manifold: Manifold,
    /// `Σ(p, u)` on the concatenation `[p, u]`.
    pub sigma: AmbientFn,
    pub domain: TangentPredicate,
    pub normalized: bool,
    pub inverse: ThetaInverse,
}

impl fmt::Debug for LocalAddition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalAddition({} on {})", self.name, self.manifold.id())
    }
}

fn speed_bound(p: &[f64], u: &[f64]) -> bool {
    let _ = p;
    norm(u) < std::f64::consts::PI - INJECTIVITY_MARGIN
}

fn concat<S: Clone>(a: &[S], b: &[S]) -> Vec<S> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v
}

/// Great-circle exponential `cos|u|·p + (sin|u|/|u|)·u`.
fn round_exp<S: Scalar>(pu: &[S], a: usize) -> Vec<S> {
    let (p, u) = pu.split_at(a);
    let u2 = u.iter().fold(S::cst(0.0), |acc, &x| acc + x * x);
    let c = cos_sqrt(u2);
    let s = sinc_sqrt(u2);
    p.iter().zip(u).map(|(&pi, &ui)| pi * c + ui * s).collect()
}

fn round_log(p: &[f64], q: &[f64]) -> Option<Vec<f64>> {
    let c: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
    let w: Vec<f64> = q.iter().zip(p).map(|(qi, pi)| qi - c * pi).collect();
    let s = norm(&w);
    let theta = s.atan2(c);
    if theta >= std::f64::consts::PI - INJECTIVITY_MARGIN {
        return None;
    }
    let k = if s < 1e-300 { 1.0 } else { theta / s };
    Some(w.iter().map(|v| v * k).collect())
}

fn so3_sigma<S: Scalar>(pu: &[S]) -> Vec<S> {
    let (r, u) = pu.split_at(9);
    let xi = vee(&mat3_mul(&mat3_transpose(r), u));
    mat3_mul(r, &so3_exp(&xi))
}

fn so3_theta_inverse(r: &[f64], q: &[f64]) -> Option<Vec<f64>> {
    let rel = mat3_mul(&mat3_transpose(r), q);
    if crate::lie_group::so3_angle(&rel) >= std::f64::consts::PI - INJECTIVITY_MARGIN {
        return None;
    }
    Some(mat3_mul(r, &hat(&so3_log(&rel))))
}

fn so3_speed_bound(r: &[f64], u: &[f64]) -> bool {
    norm(&vee(&mat3_mul(&mat3_transpose(r), u))) < std::f64::consts::PI - INJECTIVITY_MARGIN
}

impl LocalAddition {
    /// Exponential map of the standard metric, restricted to the declared
    /// injectivity neighbourhood.
    pub fn riemannian(m: &Manifold) -> Result<LocalAddition> {
        let name = format!("exp[{}]", m.id());
        let la = match m {
            Manifold::Euclidean(n) => {
                let n = *n;
                LocalAddition {
                    name,
                    manifold: m.clone(),
                    sigma: crate::ambient_fn!([n] | pu | (0..n).map(|k| pu[k] + pu[n + k]).collect()),
                    domain: Arc::new(|_, _| true),
                    normalized: true,
                    inverse: ThetaInverse::Closed(Arc::new(|p, q| {
                        Some(q.iter().zip(p).map(|(a, b)| a - b).collect())
                    })),
                }
            }
            Manifold::Circle | Manifold::Sphere => {
                let a = m.ambient_dim();
                LocalAddition {
                    name,
                    manifold: m.clone(),
                    sigma: crate::ambient_fn!([a] | pu | round_exp(pu, a)),
                    domain: Arc::new(speed_bound),
                    normalized: true,
                    inverse: ThetaInverse::Closed(Arc::new(round_log)),
                }
            }
            Manifold::So3 => LocalAddition {
                name,
                manifold: m.clone(),
                sigma: crate::ambient_fn!(|pu| so3_sigma(pu)),
                domain: Arc::new(so3_speed_bound),
                normalized: true,
                inverse: ThetaInverse::Closed(Arc::new(so3_theta_inverse)),
            },
            Manifold::Discrete(_) => LocalAddition {
                name,
                manifold: m.clone(),
                sigma: crate::ambient_fn!(|pu| vec![pu[0]]),
                domain: Arc::new(|_, _| true),
                normalized: true,
                inverse: ThetaInverse::Closed(Arc::new(|p, q| {
                    ((p[0] - q[0]).abs() < 0.5).then(|| vec![0.0])
                })),
            },
            Manifold::Product(a, b) => {
                LocalAddition::product(&LocalAddition::riemannian(a)?, &LocalAddition::riemannian(b)?)
            }
            Manifold::Power(a, n) => {
                let mut acc = LocalAddition::riemannian(a)?;
                for _ in 1..*n {
                    acc = LocalAddition::product(&acc, &LocalAddition::riemannian(a)?);
                }
                // The nested product manifold has the same charts and ambient
                // layout as the power.
                acc.manifold = m.clone();
                acc
            }
            Manifold::Tangent(_) => {
                return Err(Error::Unsupported(format!("no closed-form exponential on {}", m.id())))
            }
        };
        Ok(la)
    }

    /// `Σ(v) = π(v)·exp(ω(v))` with `ω` the left trivialization.
    pub fn lie_group(g: &LieGroupInstance) -> LocalAddition {
        let m = g.manifold();
        let a = m.ambient_dim();
        let name = format!("lie[{}]", g.id());
        let grp = g.clone();
        let sigma = crate::generic_fn!([grp, a] |pu: S| {
            let (p, u) = pu.split_at(a);
            let omega = grp.ambient_to_algebra(&grp.mul(&grp.inv(p), u));
            grp.mul(p, &grp.exp(&omega))
        });
        let grp = g.clone();
        let domain: TangentPredicate = match g {
            LieGroupInstance::Translations(_) => Arc::new(|_, _| true),
            _ => Arc::new(move |p, u| {
                let omega = grp.ambient_to_algebra(&grp.mul(&grp.inv(p), u));
                norm(&omega) < std::f64::consts::PI - INJECTIVITY_MARGIN
            }),
        };
        let grp = g.clone();
        let inverse = ThetaInverse::Closed(Arc::new(move |p, q| {
            let xi = grp.log(&grp.mul(&grp.inv(p), q));
            if !matches!(grp, LieGroupInstance::Translations(_))
                && norm(&xi) >= std::f64::consts::PI - INJECTIVITY_MARGIN
            {
                return None;
            }
            Some(grp.mul(p, &grp.algebra_to_ambient(&xi)))
        }));
        LocalAddition { name, manifold: m, sigma, domain, normalized: true, inverse }
    }

    /// Componentwise local addition on a product.
    pub fn product(a: &LocalAddition, b: &LocalAddition) -> LocalAddition {
        let (na, nb) = (a.manifold.ambient_dim(), b.manifold.ambient_dim());
        let (sa, sb) = (a.sigma.clone(), b.sigma.clone());
        let (sa2, sb2) = (a.sigma.clone(), b.sigma.clone());
        let split = move |pu: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let (p, u) = pu.split_at(na + nb);
            (concat(&p[..na], &u[..na]), concat(&p[na..], &u[na..]))
        };
        let sigma = AmbientFn::new(
            move |pu: &[f64]| {
                let (x, y) = split(pu);
                concat(&sa.eval(&x), &sb.eval(&y))
            },
            move |pu: &[Jet]| {
                let (p, u) = pu.split_at(na + nb);
                let x = concat(&p[..na], &u[..na]);
                let y = concat(&p[na..], &u[na..]);
                concat(&sa2.eval_jet(&x), &sb2.eval_jet(&y))
            },
        );
        let (da, db) = (a.domain.clone(), b.domain.clone());
        let domain: TangentPredicate = Arc::new(move |p, u| da(&p[..na], &u[..na]) && db(&p[na..], &u[na..]));
        let inverse = match (&a.inverse, &b.inverse) {
            (ThetaInverse::Closed(ia), ThetaInverse::Closed(ib)) => {
                let (ia, ib) = (ia.clone(), ib.clone());
                ThetaInverse::Closed(Arc::new(move |p, q| {
                    let ua = ia(&p[..na], &q[..na])?;
                    let ub = ib(&p[na..], &q[na..])?;
                    Some(concat(&ua, &ub))
                }))
            }
            _ => ThetaInverse::Newton,
        };
        LocalAddition {
            name: format!("{}x{}", a.name, b.name),
            manifold: Manifold::product(a.manifold.clone(), b.manifold.clone()),
            sigma,
            domain,
            normalized: a.normalized && b.normalized,
            inverse,
        }
    }

    /// `Σ′(v) = Σ(c·v)`; not normalized unless `c = 1`.
    pub fn scaled(&self, c: f64) -> LocalAddition {
        let a = self.manifold.ambient_dim();
        let s = self.sigma.clone();
        let sigma = crate::generic_fn!([s, a, c] |pu: S| {
            let mut v = pu.to_vec();
            for x in &mut v[a..] {
                *x = *x * c;
            }
            s.eval_s(&v)
        });
        let d = self.domain.clone();
        let inverse = match &self.inverse {
            ThetaInverse::Closed(f) => {
                let f = f.clone();
                ThetaInverse::Closed(Arc::new(move |p, q| f(p, q).map(|u| u.iter().map(|x| x / c).collect())))
            }
            ThetaInverse::Newton => ThetaInverse::Newton,
        };
        LocalAddition {
            name: format!("{}∘{c}", self.name),
            manifold: self.manifold.clone(),
            sigma,
            domain: Arc::new(move |p, u| {
                let cu: Vec<f64> = u.iter().map(|x| x * c).collect();
                d(p, &cu)
            }),
            normalized: c == 1.0 && self.normalized,
            inverse,
        }
    }

    pub fn in_domain(&self, p: &[f64], u: &[f64]) -> bool {
        (self.domain)(p, u)
    }

    pub fn sigma_ambient(&self, p: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        if !self.in_domain(p, u) {
            return Err(Error::DomainViolation(format!(
                "tangent vector outside the domain of {}",
                self.name
            )));
        }
        Ok(self.sigma.eval(&concat(p, u)))
    }

    pub fn apply(&self, v: &Tangent) -> Result<Point> {
        let u = v.ambient_velocity(&self.manifold);
        Point::from_ambient(&self.manifold, &self.sigma_ambient(&v.base.ambient, &u)?)
    }

    /// Chart expression of `y ↦ Σ(p, Dφ⁻¹(x)·y)` in the chart of `p`.
    fn fiber_expr<S: Scalar>(&self, p: &Point, y: &[S]) -> Vec<S> {
        let m = &self.manifold;
        let x: Vec<S> = p.coords.iter().map(|&c| S::cst(c)).collect();
        let pa: Vec<S> = p.ambient.iter().map(|&c| S::cst(c)).collect();
        let u = m.velocity_to_ambient(p.chart, &x, y);
        let q = self.sigma.eval_s(&concat(&pa, &u));
        m.chart_forward(p.chart, &q)
    }

    /// `α_p = T_{0_p}(Σ|T_pM)` in the chart of `p`, by AD.
    pub fn fiber_derivative(&self, p: &Point) -> DMatrix<f64> {
        let d = self.manifold.dim();
        ad::jacobian(|y| self.fiber_expr(p, y), &vec![0.0; d])
    }

    /// Central-difference estimate of `α_p` with step `h`.
    pub fn fiber_derivative_fd(&self, p: &Point, h: f64) -> DMatrix<f64> {
        let d = self.manifold.dim();
        let mut out = DMatrix::zeros(d, d);
        for k in 0..d {
            let mut e = vec![0.0; d];
            e[k] = h;
            let fp = self.fiber_expr(p, &e);
            e[k] = -h;
            let fm = self.fiber_expr(p, &e);
            for i in 0..d {
                out[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        out
    }

    /// `θ⁻¹(p, q)`: the vector `v ∈ U ∩ T_pM` with `Σ(v) = q`.
    pub fn theta_inverse(&self, p: &Point, q: &Point) -> Result<Tangent> {
        let m = &self.manifold;
        let u = match &self.inverse {
            ThetaInverse::Closed(f) => f(&p.ambient, &q.ambient)
                .ok_or_else(|| Error::NotInThetaImage("outside the injectivity neighbourhood".into()))?,
            ThetaInverse::Newton => {
                let y = self.newton(p, q)?;
                let x = p.coords.clone();
                m.velocity_to_ambient(p.chart, &x, &y)
            }
        };
        if !self.in_domain(&p.ambient, &u) {
            return Err(Error::NotInThetaImage("solution leaves U".into()));
        }
        let t = Tangent { base: p.clone(), vel: m.velocity_to_chart(p.chart, &p.ambient, &u) };
        let back = self.sigma.eval(&concat(&p.ambient, &u));
        let r = dist(&back, &q.ambient);
        if r > 1e3 * TOL_THETA {
            return Err(Error::NotInThetaImage(format!("residual {r:e}")));
        }
        Ok(t)
    }

    fn newton(&self, p: &Point, q: &Point) -> Result<Vec<f64>> {
        let m = &self.manifold;
        // Solve in the chart of p whenever q lies in it; the image of a small
        // fibre stays close to p.
        let j = if m.chart_margin(p.chart, &q.ambient) > 0.0 { p.chart } else { q.chart };
        let target = &m.chart_forward(j, &q.ambient);
        let d = m.dim();
        let g = |y: &[Jet]| {
            let x = ad::constants(&p.coords);
            let pa = ad::constants(&p.ambient);
            let u = m.velocity_to_ambient(p.chart, &x, y);
            let out = self.sigma.eval_jet(&concat(&pa, &u));
            m.chart_forward(j, &out)
        };
        let mut y = vec![0.0; d];
        for _ in 0..NEWTON_MAX_ITER {
            let val = ad::values(&g(&ad::constants(&y)));
            let res: Vec<f64> = val.iter().zip(target).map(|(a, b)| a - b).collect();
            if norm(&res) < TOL_THETA {
                return Ok(y);
            }
            let jac = ad::jacobian(g, &y);
            let step = jac
                .lu()
                .solve(&nalgebra::DVector::from_vec(res))
                .ok_or_else(|| Error::NotInThetaImage("singular Newton step".into()))?;
            for k in 0..d {
                y[k] -= step[k];
            }
            if y.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
        Err(Error::NotInThetaImage(format!("Newton did not converge in {NEWTON_MAX_ITER} iterations")))
    }

    /// `Σ ∘ h` with `h(v) = α_{π(v)}⁻¹ v`, so that the fibre derivative at the
    /// zero section becomes the identity. The domain is `h⁻¹(U)`.
    pub fn normalize(&self) -> Result<LocalAddition> {
        let m = self.manifold.clone();
        // Invertibility of α_p on a fixed deterministic sample.
        let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f726d);
        for _ in 0..32 {
            let p = Point::from_ambient(&m, &m.sample(&mut rng))?;
            let a = self.fiber_derivative(&p);
            if m.dim() == 0 {
                break;
            }
            let det = a.determinant();
            let tol = 1e-10 * a.norm();
            if det.abs() <= tol {
                return Err(Error::SingularNormalization { det, tol });
            }
        }
        let a_dim = m.ambient_dim();
        let base = self.clone();
        let h = Arc::new(move |pu: &[Jet]| -> Vec<Jet> { normalizing_map(&base, pu) });
        let s = self.sigma.clone();
        let h2 = h.clone();
        let sigma = AmbientFn::from_jet(move |pu: &[Jet]| {
            let u = h2(pu);
            s.eval_jet(&concat(&pu[..a_dim], &u))
        });
        let d = self.domain.clone();
        let h3 = h.clone();
        let domain: TangentPredicate = Arc::new(move |p, u| {
            let hu = ad::values(&h3(&ad::constants(&concat(p, u))));
            d(p, &hu)
        });
        let inverse = match &self.inverse {
            ThetaInverse::Closed(f) => {
                let f = f.clone();
                let base = self.clone();
                ThetaInverse::Closed(Arc::new(move |p, q| {
                    let u0 = f(p, q)?;
                    Some(fiber_apply(&base, p, &u0))
                }))
            }
            ThetaInverse::Newton => ThetaInverse::Newton,
        };
        Ok(LocalAddition {
            name: format!("norm({})", self.name),
            manifold: m,
            sigma,
            domain,
            normalized: true,
            inverse,
        })
    }

    /// `Σ_TM = TΣ ∘ κ` on the tangent bundle, with domain `κ(TU)`.
    ///
    /// In ambient terms `Σ_TM((p, u), (ṗ, u̇)) = (Σ(p, ṗ), DΣ(p, ṗ)·(u, u̇))`.
    pub fn tangent_lift(&self) -> LocalAddition {
        let a = self.manifold.ambient_dim();
        let s = self.sigma.clone();
        let sigma = AmbientFn::from_jet(move |w: &[Jet]| {
            let (p, u, pd, ud) = (&w[..a], &w[a..2 * a], &w[2 * a..3 * a], &w[3 * a..]);
            let base = concat(p, pd);
            let dir = concat(u, ud);
            let (q, dq) = ad::directional(|x| s.eval_jet(x), &base, &dir);
            concat(&q, &dq)
        });
        let d = self.domain.clone();
        LocalAddition {
            name: format!("T{}", self.name),
            manifold: self.manifold.tangent_bundle(),
            sigma,
            domain: Arc::new(move |pu, vel| d(&pu[..a], &vel[..a])),
            normalized: self.normalized,
            inverse: ThetaInverse::Newton,
        }
    }
}

/// `h(p, u) = Dφ⁻¹ · α_p⁻¹ · Dφ · u` in the chart of `p` chosen by value.
fn normalizing_map(sigma: &LocalAddition, pu: &[Jet]) -> Vec<Jet> {
    fiber_linear(sigma, pu, true)
}

/// `α_p · u` for plain data (used to transport closed-form inverses).
fn fiber_apply(sigma: &LocalAddition, p: &[f64], u: &[f64]) -> Vec<f64> {
    ad::values(&fiber_linear(sigma, &ad::constants(&concat(p, u)), false))
}

fn fiber_linear(sigma: &LocalAddition, pu: &[Jet], invert: bool) -> Vec<Jet> {
    let m = &sigma.manifold;
    let a = m.ambient_dim();
    let d = m.dim();
    let (p, u) = pu.split_at(a);
    if d == 0 {
        return u.to_vec();
    }
    let c = m.best_chart(&ad::values(p)).expect("base point lies in a chart");
    let x = m.chart_forward(c, p);
    let y = m.velocity_to_chart(c, p, u);
    // α_p column by column.
    let cols: Vec<Vec<Jet>> = (0..d)
        .map(|k| {
            let mut e = vec![Jet::constant(0.0); d];
            e[k] = Jet::constant(1.0);
            let zero = vec![Jet::constant(0.0); d];
            directional_s(
                |yy: &[Jet]| {
                    let uu = m.velocity_to_ambient(c, &x, yy);
                    m.chart_forward(c, &sigma.sigma.eval_jet(&concat(p, &uu)))
                },
                &zero,
                &e,
            )
            .1
        })
        .collect();
    let alpha = Mat::from_columns(&cols, d);
    let z = if invert {
        alpha.solve_vec(&y).expect("fibre derivative is invertible on the normalization domain")
    } else {
        alpha.mul_vec(&y)
    };
    m.velocity_to_ambient(c, &x, &z)
}
