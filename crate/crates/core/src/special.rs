//! Even functions of a square root, written so that they stay smooth (and
//! hence differentiable by jets) through `u = 0`.

use crate::ad::Scalar;

const SERIES_CUTOFF: f64 = 0.1;
const TERMS: usize = 14;

/// `Σ_k (-u)^k c_k` with `c_k` produced by `coef`.
fn alt_series<S: Scalar>(u: S, coef: impl Fn(usize) -> f64) -> S {
    let mut acc = S::cst(0.0);
    let mut pow = S::cst(1.0);
    for k in 0..TERMS {
        acc = acc + pow * coef(k);
        pow = pow * (-u);
    }
    acc
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// `sin(√u)/√u`.
pub fn sinc_sqrt<S: Scalar>(u: S) -> S {
    if u.val().abs() < SERIES_CUTOFF {
        alt_series(u, |k| 1.0 / factorial(2 * k + 1))
    } else {
        let r = u.sqrt();
        r.sin() / r
    }
}

/// `(1 - cos√u)/u`.
pub fn versin_sqrt_over<S: Scalar>(u: S) -> S {
    if u.val().abs() < SERIES_CUTOFF {
        alt_series(u, |k| 1.0 / factorial(2 * k + 2))
    } else {
        let h = u.sqrt() * 0.5;
        let s = h.sin();
        s * s * 2.0 / u
    }
}

/// `cos√u`.
pub fn cos_sqrt<S: Scalar>(u: S) -> S {
    if u.val().abs() < SERIES_CUTOFF {
        alt_series(u, |k| 1.0 / factorial(2 * k))
    } else {
        u.sqrt().cos()
    }
}

/// `atan(√u)/√u` for `u ≥ 0`.
pub fn atan_sqrt_over<S: Scalar>(u: S) -> S {
    if u.val().abs() < SERIES_CUTOFF {
        // Converges geometrically with ratio u, so TERMS=14 gives < 1e-16.
        alt_series(u, |k| 1.0 / (2 * k + 1) as f64)
    } else {
        let r = u.sqrt();
        r.atan2(S::cst(1.0)) / r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::Jet;

    #[test]
    fn values_match_closed_forms() {
        for &u in &[1e-8, 0.05, 0.0999, 0.1001, 2.0, 9.0] {
            let r: f64 = u.sqrt();
            assert!((sinc_sqrt(u) - r.sin() / r).abs() < 1e-14);
            assert!((versin_sqrt_over(u) - 2.0 * (r / 2.0).sin().powi(2) / u).abs() < 1e-14);
            assert!((cos_sqrt(u) - r.cos()).abs() < 1e-14);
            assert!((atan_sqrt_over(u) - r.atan() / r).abs() < 1e-14);
        }
    }

    #[test]
    fn smooth_at_zero() {
        // d/du sin(√u)/√u at 0 is -1/6.
        let u = Jet::variable(0.0, 0);
        assert!((sinc_sqrt(u).coeff(1) + 1.0 / 6.0).abs() < 1e-15);
        assert!((atan_sqrt_over(u).coeff(1) + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn branches_agree_in_derivative() {
        let below = sinc_sqrt(Jet::variable(0.0999999, 0)).coeff(1);
        let above = sinc_sqrt(Jet::variable(0.1000001, 0)).coeff(1);
        assert!((below - above).abs() < 1e-6);
    }
}
