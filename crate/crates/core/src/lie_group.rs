//! Catalog Lie groups: the circle group, `ℝⁿ` under addition, and SO(3).
//!
//! Elements are stored in the ambient representation of the underlying
//! [`Manifold`]: a unit complex number `(re, im)`, a vector, or a row-major
//! 3×3 rotation matrix.

use crate::ad::Scalar;
use crate::geom::Manifold;
use crate::special::{atan_sqrt_over, sinc_sqrt, versin_sqrt_over};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LieGroupInstance {
    Circle,
    Translations(usize),
    So3,
}

impl LieGroupInstance {
    pub fn manifold(&self) -> Manifold {
        match self {
            LieGroupInstance::Circle => Manifold::Circle,
            LieGroupInstance::Translations(n) => Manifold::Euclidean(*n),
            LieGroupInstance::So3 => Manifold::So3,
        }
    }

    pub fn id(&self) -> String {
        match self {
            LieGroupInstance::Circle => "S1".into(),
            LieGroupInstance::Translations(n) => format!("R{n}"),
            LieGroupInstance::So3 => "SO3".into(),
        }
    }

    pub fn algebra_dim(&self) -> usize {
        self.manifold().dim()
    }

    pub fn identity(&self) -> Vec<f64> {
        match self {
            LieGroupInstance::Circle => vec![1.0, 0.0],
            LieGroupInstance::Translations(n) => vec![0.0; *n],
            LieGroupInstance::So3 => mat3_identity(),
        }
    }

    pub fn mul<S: Scalar>(&self, a: &[S], b: &[S]) -> Vec<S> {
        match self {
            LieGroupInstance::Circle => complex_mul(a, b),
            LieGroupInstance::Translations(_) => a.iter().zip(b).map(|(&x, &y)| x + y).collect(),
            LieGroupInstance::So3 => mat3_mul(a, b),
        }
    }

    pub fn inv<S: Scalar>(&self, a: &[S]) -> Vec<S> {
        match self {
            LieGroupInstance::Circle => vec![a[0], -a[1]],
            LieGroupInstance::Translations(_) => a.iter().map(|&x| -x).collect(),
            LieGroupInstance::So3 => mat3_transpose(a),
        }
    }

    /// Group exponential of algebra coordinates.
    pub fn exp<S: Scalar>(&self, xi: &[S]) -> Vec<S> {
        match self {
            LieGroupInstance::Circle => vec![xi[0].cos(), xi[0].sin()],
            LieGroupInstance::Translations(_) => xi.to_vec(),
            LieGroupInstance::So3 => so3_exp(xi),
        }
    }

    /// Principal logarithm (inverse of `exp` near the identity).
    pub fn log<S: Scalar>(&self, g: &[S]) -> Vec<S> {
        match self {
            LieGroupInstance::Circle => vec![g[1].atan2(g[0])],
            LieGroupInstance::Translations(_) => g.to_vec(),
            LieGroupInstance::So3 => so3_log(g),
        }
    }

    /// Ambient velocity at the identity of the algebra element `xi`.
    pub fn algebra_to_ambient<S: Scalar>(&self, xi: &[S]) -> Vec<S> {
        match self {
            LieGroupInstance::Circle => vec![S::cst(0.0), xi[0]],
            LieGroupInstance::Translations(_) => xi.to_vec(),
            LieGroupInstance::So3 => hat(xi),
        }
    }

    /// Algebra element of an ambient velocity at the identity.
    pub fn ambient_to_algebra<S: Scalar>(&self, u: &[S]) -> Vec<S> {
        match self {
            LieGroupInstance::Circle => vec![u[1]],
            LieGroupInstance::Translations(_) => u.to_vec(),
            LieGroupInstance::So3 => vee(u),
        }
    }

    /// Matrix-commutator bracket on the algebra.
    pub fn bracket(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match self {
            LieGroupInstance::Circle => vec![0.0],
            LieGroupInstance::Translations(n) => vec![0.0; *n],
            LieGroupInstance::So3 => cross(a, b),
        }
    }

    pub fn is_abelian(&self) -> bool {
        !matches!(self, LieGroupInstance::So3)
    }

    /// Linear action on `ℝᵏ` used by the catalog action groupoids:
    /// rotation of ℝ³ by SO(3), rotation of ℝ² by the circle, translation.
    pub fn act<S: Scalar>(&self, g: &[S], m: &[S]) -> Vec<S> {
        match self {
            LieGroupInstance::Circle => complex_mul(g, m),
            LieGroupInstance::Translations(_) => g.iter().zip(m).map(|(&x, &y)| x + y).collect(),
            LieGroupInstance::So3 => mat3_vec(g, m),
        }
    }
}

pub fn complex_mul<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    vec![a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

pub fn mat3_identity() -> Vec<f64> {
    vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
}

pub fn mat3_mul<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut out = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            out.push(a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j] + a[3 * i + 2] * b[6 + j]);
        }
    }
    out
}

pub fn mat3_vec<S: Scalar>(a: &[S], v: &[S]) -> Vec<S> {
    (0..3).map(|i| a[3 * i] * v[0] + a[3 * i + 1] * v[1] + a[3 * i + 2] * v[2]).collect()
}

pub fn mat3_transpose<S: Scalar>(a: &[S]) -> Vec<S> {
    vec![a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]]
}

pub fn hat<S: Scalar>(w: &[S]) -> Vec<S> {
    let z = S::cst(0.0);
    vec![z, -w[2], w[1], w[2], z, -w[0], -w[1], w[0], z]
}

/// Axial vector of the skew part, `vee((A - Aᵀ)/2)`.
pub fn vee<S: Scalar>(a: &[S]) -> Vec<S> {
    vec![(a[7] - a[5]) * 0.5, (a[2] - a[6]) * 0.5, (a[3] - a[1]) * 0.5]
}

pub fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Rodrigues formula, smooth through `ξ = 0`.
pub fn so3_exp<S: Scalar>(xi: &[S]) -> Vec<S> {
    let t2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let a = sinc_sqrt(t2);
    let b = versin_sqrt_over(t2);
    let k = hat(xi);
    let k2 = mat3_mul(&k, &k);
    let id = mat3_identity();
    (0..9).map(|i| k[i] * a + k2[i] * b + id[i]).collect()
}

/// Principal logarithm for rotation angles below π.
///
/// With `c = cos θ` and `w = sin θ · n`, the result is `(θ / sin θ) · w`. For
/// `c > 0` the factor is written as `g(s²/c²)/c` with `g(u) = atan(√u)/√u`,
/// which is smooth at the identity.
pub fn so3_log<S: Scalar>(r: &[S]) -> Vec<S> {
    let w = vee(r);
    let c = (r[0] + r[4] + r[8] - 1.0) * 0.5;
    let s2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let k = if c.val() > 0.0 {
        atan_sqrt_over(s2 / (c * c)) / c
    } else {
        let s = s2.sqrt();
        s.atan2(c) / s
    };
    w.iter().map(|&wi| wi * k).collect()
}

/// Rotation angle of a rotation matrix, in `[0, π]`.
pub fn so3_angle(r: &[f64]) -> f64 {
    let c = ((r[0] + r[4] + r[8] - 1.0) * 0.5).clamp(-1.0, 1.0);
    let w = vee(r);
    let s = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    s.atan2(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::{jacobian, Jet};
    use crate::linalg::dist;

    #[test]
    fn exp_log_round_trip() {
        for xi in [[0.0, 0.0, 0.0], [1e-9, -2e-9, 0.0], [0.3, -0.2, 0.9], [2.0, 1.0, -1.5]] {
            let r = so3_exp(&xi);
            let back = so3_log(&r);
            assert!(dist(&back, &xi) < 1e-12, "{xi:?} -> {back:?}");
        }
    }

    #[test]
    fn exp_is_orthogonal() {
        let r = so3_exp(&[0.4, 1.1, -0.7]);
        let rtr = mat3_mul(&mat3_transpose(&r), &r);
        assert!(dist(&rtr, &mat3_identity()) < 1e-14);
    }

    #[test]
    fn exp_derivative_at_zero_is_hat() {
        let j = jacobian(|x: &[Jet]| so3_exp(x), &[0.0, 0.0, 0.0]);
        for k in 0..3 {
            let mut e = [0.0; 3];
            e[k] = 1.0;
            let h = hat(&e);
            for i in 0..9 {
                assert!((j[(i, k)] - h[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn commutator_is_cross_product() {
        let g = LieGroupInstance::So3;
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 1.0, 0.0];
        let ha = hat(&a);
        let hb = hat(&b);
        let ab = mat3_mul(&ha, &hb);
        let ba = mat3_mul(&hb, &ha);
        let comm: Vec<f64> = ab.iter().zip(&ba).map(|(x, y)| x - y).collect();
        assert_eq!(vee(&comm), g.bracket(&a, &b));
    }
}
