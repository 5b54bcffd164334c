//! Forward-mode automatic differentiation.
//!
//! A [`Jet`] is a truncated polynomial in a small number of nilpotent
//! infinitesimals `ε_0, ε_1, …` with `ε_i² = 0`. One infinitesimal is an
//! ordinary dual number; two of them reproduce a once-nested dual number
//! `Dual<Dual<f64>>`, and so on. Coefficients are indexed by the bitmask of the
//! infinitesimals they multiply, so the coefficient of `ε_0 ε_1` lives at
//! index `0b11`.
//!
//! Nesting is dynamic: to differentiate a function whose inputs already carry
//! `k` infinitesimals, a fresh one with index `k` is introduced, the function
//! is evaluated, and the result is split back into value and derivative parts
//! (see [`directional`]). This lets formulas that differentiate internally
//! (chart maps of tangent bundles, normalized local additions, algebroid
//! brackets) be differentiated again without type-level nesting.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::Arc;

/// Maximum number of simultaneously live infinitesimals.
pub const MAX_INFINITESIMALS: usize = 6;
const WIDTH: usize = 1 << MAX_INFINITESIMALS;

/// Truncated multivariate Taylor polynomial in nilpotent infinitesimals.
#[derive(Clone, Copy)]
pub struct Jet {
    order: u8,
    c: [f64; WIDTH],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet").field("order", &self.order).field("coeffs", &&self.c[..self.len()]).finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        let n = self.len().max(other.len());
        self.c[..n] == other.c[..n]
    }
}

impl Jet {
    #[inline]
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; WIDTH];
        c[0] = v;
        Jet { order: 0, c }
    }

    /// `v + ε_index`.
    pub fn variable(v: f64, index: usize) -> Self {
        assert!(index < MAX_INFINITESIMALS, "too many nested derivatives");
        let mut j = Jet::constant(v);
        j.order = index as u8 + 1;
        j.c[1 << index] = 1.0;
        j
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Number of infinitesimals this jet may depend on.
    #[inline]
    pub fn order(&self) -> usize {
        self.order as usize
    }

    #[inline]
    fn len(&self) -> usize {
        1 << self.order
    }

    /// Coefficient of the monomial with the given bitmask.
    pub fn coeff(&self, mask: usize) -> f64 {
        if mask < self.len() {
            self.c[mask]
        } else {
            0.0
        }
    }

    pub fn set_coeff(&mut self, mask: usize, v: f64) {
        assert!(mask < WIDTH, "too many nested derivatives");
        let need = (usize::BITS - mask.leading_zeros()) as u8;
        if need > self.order {
            self.order = need;
        }
        self.c[mask] = v;
    }

    /// Jet with nonzero coefficient only at `mask`.
    pub fn monomial(mask: usize, v: f64) -> Self {
        let mut j = Jet::constant(0.0);
        j.set_coeff(mask, v);
        j
    }

    fn nilpotent_part(self) -> Jet {
        let mut n = self;
        n.c[0] = 0.0;
        n
    }

    fn is_zero(&self) -> bool {
        self.c[..self.len()].iter().all(|&v| v == 0.0)
    }

    /// Evaluate `Σ_m t[m] (self - value)^m`, i.e. compose a scalar function
    /// with Taylor coefficients `t` (already divided by `m!`).
    fn compose_taylor(self, t: &[f64]) -> Jet {
        let mut out = Jet::constant(t[0]);
        if self.order == 0 {
            return out;
        }
        let n = self.nilpotent_part();
        let mut pow = n;
        for &tm in t.iter().skip(1).take(self.order as usize) {
            if pow.is_zero() {
                break;
            }
            out += pow * tm;
            pow = pow * n;
        }
        out
    }

    fn taylor_len(&self) -> usize {
        self.order as usize + 1
    }

    pub fn sin(self) -> Jet {
        let x = self.c[0];
        let (s, c) = x.sin_cos();
        let mut t = Vec::with_capacity(self.taylor_len());
        let mut fact = 1.0;
        for m in 0..self.taylor_len() {
            if m > 0 {
                fact *= m as f64;
            }
            let d = match m % 4 {
                0 => s,
                1 => c,
                2 => -s,
                _ => -c,
            };
            t.push(d / fact);
        }
        self.compose_taylor(&t)
    }

    pub fn cos(self) -> Jet {
        let x = self.c[0];
        let (s, c) = x.sin_cos();
        let mut t = Vec::with_capacity(self.taylor_len());
        let mut fact = 1.0;
        for m in 0..self.taylor_len() {
            if m > 0 {
                fact *= m as f64;
            }
            let d = match m % 4 {
                0 => c,
                1 => -s,
                2 => -c,
                _ => s,
            };
            t.push(d / fact);
        }
        self.compose_taylor(&t)
    }

    pub fn exp(self) -> Jet {
        let e = self.c[0].exp();
        let mut t = Vec::with_capacity(self.taylor_len());
        let mut fact = 1.0;
        for m in 0..self.taylor_len() {
            if m > 0 {
                fact *= m as f64;
            }
            t.push(e / fact);
        }
        self.compose_taylor(&t)
    }

    pub fn ln(self) -> Jet {
        let x = self.c[0];
        let mut t = vec![x.ln()];
        for m in 1..self.taylor_len() {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (m as f64 * x.powi(m as i32)));
        }
        self.compose_taylor(&t)
    }

    /// Real power `self^r` for `value > 0` (or integer-like use away from 0).
    pub fn powf(self, r: f64) -> Jet {
        let x = self.c[0];
        let mut t = Vec::with_capacity(self.taylor_len());
        let mut binom = 1.0;
        for m in 0..self.taylor_len() {
            if m > 0 {
                binom *= (r - (m as f64 - 1.0)) / m as f64;
            }
            t.push(binom * x.powf(r - m as f64));
        }
        self.compose_taylor(&t)
    }

    pub fn sqrt(self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(self) -> Jet {
        let x = self.c[0];
        let mut t = Vec::with_capacity(self.taylor_len());
        let mut p = 1.0 / x;
        for m in 0..self.taylor_len() {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            t.push(sign * p);
            p /= x;
        }
        self.compose_taylor(&t)
    }

    pub fn powi(self, n: i32) -> Jet {
        if n == 0 {
            return Jet::constant(1.0);
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Jet::constant(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Two-argument arctangent `atan2(self, x)`.
    ///
    /// The branch is fixed by the values; the infinitesimal part is obtained
    /// from `atan(t)` with the nilpotent `t = (y x0 - x y0) / (x x0 + y y0)`.
    pub fn atan2(self, x: Jet) -> Jet {
        let y = self;
        let (y0, x0) = (y.c[0], x.c[0]);
        let theta0 = y0.atan2(x0);
        if y.order == 0 && x.order == 0 {
            return Jet::constant(theta0);
        }
        let num = y * x0 - x * y0;
        let den = x * x0 + y * y0;
        let t = num / den;
        let t = t.nilpotent_part();
        // atan(t) = t - t^3/3 + t^5/5 - ...
        let t2 = t * t;
        let mut term = t;
        let mut out = Jet::constant(theta0);
        let mut k = 0usize;
        while !term.is_zero() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            out += term * (sign / (2 * k + 1) as f64);
            term = term * t2;
            k += 1;
        }
        out
    }

    pub fn atan(self) -> Jet {
        self.atan2(Jet::constant(1.0))
    }

    /// Keep only the coefficients not involving infinitesimal `index` (value
    /// part) and the coefficients involving it, shifted down (derivative part).
    pub fn split(&self, index: usize) -> (Jet, Jet) {
        let bit = 1usize << index;
        let mut val = Jet::constant(0.0);
        let mut der = Jet::constant(0.0);
        val.order = (index as u8).min(self.order);
        der.order = val.order;
        for s in 0..(1usize << index) {
            val.c[s] = self.coeff(s);
            der.c[s] = self.coeff(s | bit);
        }
        // Infinitesimals above `index` must have been eliminated by the caller.
        debug_assert!(self.order as usize <= index + 1);
        (val, der)
    }
}

impl From<f64> for Jet {
    fn from(v: f64) -> Self {
        Jet::constant(v)
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: Jet) -> Jet {
        let order = self.order.max(rhs.order);
        let n = 1usize << order;
        for i in 0..n {
            self.c[i] += rhs.c[i];
        }
        self.order = order;
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: Jet) -> Jet {
        let order = self.order.max(rhs.order);
        let n = 1usize << order;
        for i in 0..n {
            self.c[i] -= rhs.c[i];
        }
        self.order = order;
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        if self.order == 0 {
            return rhs * self.c[0];
        }
        if rhs.order == 0 {
            return self * rhs.c[0];
        }
        let order = self.order.max(rhs.order);
        let n = 1usize << order;
        let mut out = Jet::constant(0.0);
        out.order = order;
        for s in 0..n {
            // Sum over subsets a of s.
            let mut acc = 0.0;
            let mut a = s;
            loop {
                acc += self.c[a] * rhs.c[s ^ a];
                if a == 0 {
                    break;
                }
                a = (a - 1) & s;
            }
            out.c[s] = acc;
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        if rhs.order == 0 {
            return self / rhs.c[0];
        }
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        let n = self.len();
        for v in &mut self.c[..n] {
            *v = -*v;
        }
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        let n = self.len();
        for v in &mut self.c[..n] {
            *v *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip() * self
    }
}

/// Number type shared by the `f64` fast path and the [`Jet`] path, so that
/// formulas can be written once.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + fmt::Debug
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn val(self) -> f64;
    fn to_jet(self) -> Jet;
    /// Inverse of [`Scalar::to_jet`]; for `f64` only the value survives.
    fn from_jet(j: Jet) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn recip(self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(self) -> f64 {
        self
    }
    fn to_jet(self) -> Jet {
        Jet::constant(self)
    }
    fn from_jet(j: Jet) -> Self {
        j.value()
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn recip(self) -> Self {
        f64::recip(self)
    }
}

impl Scalar for Jet {
    fn cst(v: f64) -> Self {
        Jet::constant(v)
    }
    fn val(self) -> f64 {
        self.value()
    }
    fn to_jet(self) -> Jet {
        self
    }
    fn from_jet(j: Jet) -> Self {
        j
    }
    fn sin(self) -> Self {
        Jet::sin(self)
    }
    fn cos(self) -> Self {
        Jet::cos(self)
    }
    fn exp(self) -> Self {
        Jet::exp(self)
    }
    fn ln(self) -> Self {
        Jet::ln(self)
    }
    fn sqrt(self) -> Self {
        Jet::sqrt(self)
    }
    fn atan2(self, x: Self) -> Self {
        Jet::atan2(self, x)
    }
    fn recip(self) -> Self {
        Jet::recip(self)
    }
}

pub fn to_jets<S: Scalar>(x: &[S]) -> Vec<Jet> {
    x.iter().map(|v| v.to_jet()).collect()
}

pub fn from_jets<S: Scalar>(x: &[Jet]) -> Vec<S> {
    x.iter().map(|&v| S::from_jet(v)).collect()
}

pub fn constants(x: &[f64]) -> Vec<Jet> {
    x.iter().map(|&v| Jet::constant(v)).collect()
}

pub fn values(x: &[Jet]) -> Vec<f64> {
    x.iter().map(|v| v.value()).collect()
}

/// Smallest index not used by any of the given jets.
pub fn fresh_index(groups: &[&[Jet]]) -> usize {
    groups.iter().flat_map(|g| g.iter()).map(|j| j.order()).max().unwrap_or(0)
}

/// `(f(x), Df(x)·v)` for jet-valued `x` and `v`.
pub fn directional<F>(f: F, x: &[Jet], v: &[Jet]) -> (Vec<Jet>, Vec<Jet>)
where
    F: FnOnce(&[Jet]) -> Vec<Jet>,
{
    assert_eq!(x.len(), v.len());
    let e = fresh_index(&[x, v]);
    assert!(e < MAX_INFINITESIMALS, "too many nested derivatives");
    let eps = Jet::variable(0.0, e);
    let xs: Vec<Jet> = x.iter().zip(v).map(|(&a, &b)| a + b * eps).collect();
    let y = f(&xs);
    y.iter().map(|j| j.split(e)).unzip()
}

/// Generic-scalar wrapper around [`directional`].
pub fn directional_s<S: Scalar, F>(f: F, x: &[S], v: &[S]) -> (Vec<S>, Vec<S>)
where
    F: FnOnce(&[Jet]) -> Vec<Jet>,
{
    let (a, b) = directional(f, &to_jets(x), &to_jets(v));
    (from_jets(&a), from_jets(&b))
}

/// Dense Jacobian `Df(x)` (rows = outputs) at a plain point.
pub fn jacobian<F>(f: F, x: &[f64]) -> nalgebra::DMatrix<f64>
where
    F: Fn(&[Jet]) -> Vec<Jet>,
{
    let xj = constants(x);
    let mut cols = Vec::with_capacity(x.len());
    let mut rows = 0;
    for k in 0..x.len() {
        let mut e = vec![Jet::constant(0.0); x.len()];
        e[k] = Jet::constant(1.0);
        let (_, d) = directional(&f, &xj, &e);
        rows = d.len();
        cols.push(values(&d));
    }
    if x.is_empty() {
        rows = f(&xj).len();
    }
    nalgebra::DMatrix::from_fn(rows, x.len(), |i, j| cols[j][i])
}

type F64Fn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type JetFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

/// A smooth vector-valued formula with an `f64` fast path and a [`Jet`] path.
#[derive(Clone)]
pub struct AmbientFn {
    fast: Arc<F64Fn>,
    jet: Arc<JetFn>,
}

impl fmt::Debug for AmbientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AmbientFn")
    }
}

impl AmbientFn {
    pub fn new<A, B>(fast: A, jet: B) -> Self
    where
        A: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        B: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        AmbientFn { fast: Arc::new(fast), jet: Arc::new(jet) }
    }

    /// Build from a jet formula only; the `f64` path promotes to constants.
    pub fn from_jet<B>(jet: B) -> Self
    where
        B: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        let jet: Arc<JetFn> = Arc::new(jet);
        let j2 = jet.clone();
        AmbientFn { fast: Arc::new(move |x: &[f64]| values(&j2(&constants(x)))), jet }
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.fast)(x)
    }

    #[inline]
    pub fn eval_jet(&self, x: &[Jet]) -> Vec<Jet> {
        (self.jet)(x)
    }

    /// Dispatch on the scalar type.
    pub fn eval_s<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        if std::any::TypeId::of::<S>() == std::any::TypeId::of::<f64>() {
            let xf: Vec<f64> = x.iter().map(|v| v.val()).collect();
            self.eval(&xf).into_iter().map(S::cst).collect()
        } else {
            from_jets(&self.eval_jet(&to_jets(x)))
        }
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &AmbientFn) -> AmbientFn {
        let (a, b) = (self.clone(), inner.clone());
        let (a2, b2) = (self.clone(), inner.clone());
        AmbientFn::new(move |x: &[f64]| a.eval(&b.eval(x)), move |x: &[Jet]| a2.eval_jet(&b2.eval_jet(x)))
    }
}

/// Write a formula once and get both the `f64` and [`Jet`] paths.
///
/// ```
/// use lie_currents::ambient_fn;
/// let square = ambient_fn!(|x| vec![x[0] * x[0] - x[1] * x[1], x[0] * x[1] * 2.0]);
/// assert_eq!(square.eval(&[0.0, 1.0]), vec![-1.0, 0.0]);
/// ```
#[macro_export]
macro_rules! ambient_fn {
    (|$x:ident| $body:expr) => {
        $crate::ad::AmbientFn::new(
            move |$x: &[f64]| -> Vec<f64> { $body },
            move |$x: &[$crate::ad::Jet]| -> Vec<$crate::ad::Jet> { $body },
        )
    };
    ([$($cap:ident),* $(,)?] |$x:ident| $body:expr) => {{
        let fast = {
            $(let $cap = $cap.clone();)*
            move |$x: &[f64]| -> Vec<f64> { $body }
        };
        let jet = {
            $(let $cap = $cap.clone();)*
            move |$x: &[$crate::ad::Jet]| -> Vec<$crate::ad::Jet> { $body }
        };
        $crate::ad::AmbientFn::new(fast, jet)
    }};
}

/// Generic version of [`ambient_fn!`] for bodies that call helpers generic in
/// [`Scalar`]: the body is instantiated once per scalar type as `fn<S>`.
#[macro_export]
macro_rules! generic_fn {
    ([$($cap:ident),* $(,)?] |$x:ident : $s:ident| $body:expr) => {{
        let fast = {
            $(let $cap = $cap.clone();)*
            move |$x: &[f64]| -> Vec<f64> { #[allow(dead_code)] type $s = f64; $body }
        };
        let jet = {
            $(let $cap = $cap.clone();)*
            move |$x: &[$crate::ad::Jet]| -> Vec<$crate::ad::Jet> { #[allow(dead_code)] type $s = $crate::ad::Jet; $body }
        };
        $crate::ad::AmbientFn::new(fast, jet)
    }};
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn dual_product_rule() {
        let x = Jet::variable(3.0, 0);
        let y = x * x * x;
        assert_eq!(y.value(), 27.0);
        assert_eq!(y.coeff(1), 27.0);
    }

    #[test]
    fn nested_second_derivative() {
        // f(x) = x^2, x = 1 + ε0 + ε1 -> coefficient of ε0ε1 is f'' = 2.
        let x = Jet::constant(1.0) + Jet::variable(0.0, 0) + Jet::variable(0.0, 1);
        let y = x * x;
        assert_eq!(y.coeff(0b11), 2.0);
        assert_eq!(y.coeff(0b01), 2.0);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let x0 = 0.7_f64;
        let x = Jet::constant(x0) + Jet::variable(0.0, 0) + Jet::variable(0.0, 1);
        let checks: Vec<(Jet, f64, f64)> = vec![
            (x.sin(), x0.cos(), -x0.sin()),
            (x.cos(), -x0.sin(), -x0.cos()),
            (x.exp(), x0.exp(), x0.exp()),
            (x.ln(), 1.0 / x0, -1.0 / (x0 * x0)),
            (x.sqrt(), 0.5 / x0.sqrt(), -0.25 / x0.powf(1.5)),
            (x.recip(), -1.0 / (x0 * x0), 2.0 / x0.powi(3)),
            (x.atan(), 1.0 / (1.0 + x0 * x0), -2.0 * x0 / (1.0 + x0 * x0).powi(2)),
        ];
        for (j, d1, d2) in checks {
            assert!(close(j.coeff(1), d1, 1e-14), "{j:?} {d1}");
            assert!(close(j.coeff(3), d2, 1e-13), "{j:?} {d2}");
        }
    }

    #[test]
    fn atan2_keeps_branch() {
        let y = Jet::constant(1e-3) + Jet::variable(1.0, 0) * 0.0;
        let x = Jet::constant(-1.0);
        let t = y.atan2(x);
        assert!(close(t.value(), (1e-3f64).atan2(-1.0), 1e-15));
        // d/dy atan2(y, x) = x / (x^2 + y^2)
        let y = Jet::variable(0.5, 0);
        let t = y.atan2(Jet::constant(-2.0));
        assert!(close(t.coeff(1), -2.0 / 4.25, 1e-14));
    }

    #[test]
    fn directional_nests() {
        let f = |x: &[Jet]| vec![x[0].sin() * x[1]];
        let (v, d) = directional(f, &constants(&[0.3, 2.0]), &constants(&[1.0, 0.0]));
        assert!(close(v[0].value(), 0.3f64.sin() * 2.0, 1e-15));
        assert!(close(d[0].value(), 0.3f64.cos() * 2.0, 1e-15));
        // second derivative through nesting
        let g = |x: &[Jet]| {
            let (_, d) = directional(f, x, &constants(&[1.0, 0.0]));
            d
        };
        let (_, dd) = directional(g, &constants(&[0.3, 2.0]), &constants(&[1.0, 0.0]));
        assert!(close(dd[0].value(), -0.3f64.sin() * 2.0, 1e-14));
    }

    #[test]
    fn macro_paths_agree() {
        let f = ambient_fn!(|x| vec![x[0] * x[1] + 1.0, 2.0 - x[0]]);
        let a = f.eval(&[2.0, 3.0]);
        let b = values(&f.eval_jet(&constants(&[2.0, 3.0])));
        assert_eq!(a, b);
    }
}
