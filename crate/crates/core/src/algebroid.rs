//! Lie algebroids of catalog groupoids: the kernel of `Tα` along the units,
//! anchor `Tβ`, and the bracket of right-invariant vector fields.
//!
//! Every tangent vector is an ambient vector. A section is evaluated on jets,
//! so brackets and their derivatives come from nested forward-mode AD.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::ad::{self, AmbientFn, Jet};
use crate::current::CurrentGroupoid;
use crate::error::{Error, Result};
use crate::geom::{Manifold, Tangent};
use crate::groupoid::{group, power_groupoid, LieGroupoid};
use crate::lie_group::LieGroupInstance;
use crate::linalg::{dist, dot, norm, Mat};
use crate::mapping::{GridMap, GridSection, GridSpec};
use crate::seed::stream_rng;

pub const TOL_BRACKET: f64 = 1e-5;

/// Gram–Schmidt keeps a projected chart axis only above this norm.
const FRAME_THRESHOLD: f64 = 0.1;

/// Polynomial in ambient coordinates, as `(coefficient, variable indices)`
/// monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub terms: Vec<(f64, Vec<usize>)>,
}

impl Poly {
    pub fn constant(c: f64) -> Poly {
        Poly { terms: vec![(c, vec![])] }
    }

    /// `c · y_i`.
    pub fn monomial(c: f64, vars: &[usize]) -> Poly {
        Poly { terms: vec![(c, vars.to_vec())] }
    }

    /// Degree ≤ 2 with coefficients uniform in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(nvars: usize, rng: &mut R) -> Poly {
        let mut terms = vec![(rng.gen_range(-1.0..1.0), vec![])];
        for i in 0..nvars {
            terms.push((rng.gen_range(-1.0..1.0), vec![i]));
            for j in i..nvars {
                terms.push((rng.gen_range(-1.0..1.0), vec![i, j]));
            }
        }
        Poly { terms }
    }

    pub fn eval(&self, y: &[Jet]) -> Jet {
        let mut s = Jet::constant(0.0);
        for (c, vars) in &self.terms {
            let mut t = Jet::constant(*c);
            for &v in vars {
                t = t * y[v];
            }
            s = s + t;
        }
        s
    }

    pub fn eval_f64(&self, y: &[f64]) -> f64 {
        self.eval(&ad::constants(y)).value()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                let mut w = u.clone();
                w.extend_from_slice(v);
                terms.push((a * b, w));
            }
        }
        Poly { terms }
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly { terms: self.terms.iter().map(|(a, v)| (a * c, v.clone())).collect() }
    }

    /// Same polynomial with every variable index moved by `offset`.
    pub fn shifted(&self, offset: usize) -> Poly {
        Poly { terms: self.terms.iter().map(|(a, v)| (*a, v.iter().map(|i| i + offset).collect())).collect() }
    }
}

/// A section of the algebroid, evaluated at units `1_y`.
#[derive(Clone, Debug)]
pub enum AlgebroidSection {
    /// `Σ_i c_i(y) f_i(y)` in the deterministic frame.
    Frame(Vec<Poly>),
    /// Values prescribed in ambient coordinates; must lie in `ker T_{1_y}α`.
    Ambient(AmbientFn),
    /// `f · X`.
    Scaled(Poly, Box<AlgebroidSection>),
    Sum(Vec<(f64, AlgebroidSection)>),
    Bracket(Box<AlgebroidSection>, Box<AlgebroidSection>),
}

impl AlgebroidSection {
    pub fn zero(rank: usize) -> Self {
        AlgebroidSection::Frame(vec![Poly { terms: vec![] }; rank])
    }

    pub fn constant(coeffs: &[f64]) -> Self {
        AlgebroidSection::Frame(coeffs.iter().map(|&c| Poly::constant(c)).collect())
    }

    pub fn random<R: Rng + ?Sized>(alg: &LieAlgebroid, rng: &mut R) -> Self {
        let nv = alg.base.ambient_dim();
        AlgebroidSection::Frame((0..alg.rank).map(|_| Poly::random(nv, rng)).collect())
    }

    pub fn bracket(x: &AlgebroidSection, y: &AlgebroidSection) -> Self {
        AlgebroidSection::Bracket(Box::new(x.clone()), Box::new(y.clone()))
    }

    pub fn scaled(f: &Poly, x: &AlgebroidSection) -> Self {
        AlgebroidSection::Scaled(f.clone(), Box::new(x.clone()))
    }
}

/// Runs `f` along `x + εv` for a fresh infinitesimal `ε`, forwarding errors.
fn try_directional<F>(f: F, x: &[Jet], v: &[Jet]) -> Result<(Vec<Jet>, Vec<Jet>)>
where
    F: FnOnce(&[Jet]) -> Result<Vec<Jet>>,
{
    let mut err = None;
    let out = ad::directional(
        |w| match f(w) {
            Ok(r) => r,
            Err(e) => {
                err = Some(e);
                Vec::new()
            }
        },
        x,
        v,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn zeros(n: usize) -> Vec<Jet> {
    vec![Jet::constant(0.0); n]
}

fn axis(n: usize, k: usize) -> Vec<Jet> {
    let mut e = zeros(n);
    e[k] = Jet::constant(1.0);
    e
}

fn sub(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

#[derive(Clone, Debug)]
pub struct LieAlgebroid {
    pub groupoid: LieGroupoid,
    pub base: Manifold,
    pub rank: usize,
}

/// The algebroid `ker Tα|_1 → M` of `gpd`, with its rank checked on sampled
/// base points.
pub fn algebroid_of_groupoid(gpd: &LieGroupoid) -> Result<LieAlgebroid> {
    let expected = gpd.arrows.dim() - gpd.base.dim();
    let alg = LieAlgebroid { groupoid: gpd.clone(), base: gpd.base.clone(), rank: expected };
    let mut rng = stream_rng(0x0a1e_b201d, 0);
    let mut seen = 0;
    for _ in 0..200 {
        if seen == 8 {
            break;
        }
        let x = gpd.base.sample(&mut rng);
        if !gpd.contains_object(&x) {
            continue;
        }
        seen += 1;
        let found = alg.frame(&x)?.len();
        if found != expected {
            return Err(Error::RankDrop { expected, found });
        }
    }
    Ok(alg)
}

impl LieAlgebroid {
    /// Frame of `ker T_{1_y}α` as ambient vectors. The chart-coordinate
    /// projector `I − Ãᵀ(ÃÃᵀ)⁻¹Ã` of `Ã = D(φ_M ∘ α ∘ φ_G⁻¹)` is applied to the
    /// chart axes in order and orthonormalised, so the frame is smooth in `y`
    /// wherever the selected axes stay the same.
    pub fn frame_jet(&self, y: &[Jet]) -> Result<Vec<Vec<Jet>>> {
        let g = &self.groupoid;
        let u = g.unit.eval_jet(y);
        let cg = g.arrows.best_chart(&ad::values(&u))?;
        let cm = self.base.best_chart(&ad::values(y))?;
        let z: Vec<Jet> = g.arrows.chart_forward(cg, &u);
        let (d, m) = (g.arrows.dim(), self.base.dim());
        let mut e_cols = Vec::with_capacity(d);
        let mut a_cols = Vec::with_capacity(d);
        for k in 0..d {
            let dir = axis(d, k);
            let (_, e) = ad::directional(|w| g.arrows.chart_inverse(cg, w), &z, &dir);
            let (_, a) = ad::directional(
                |w| {
                    let amb = g.arrows.chart_inverse(cg, w);
                    self.base.chart_forward(cm, &g.alpha.eval_jet(&amb))
                },
                &z,
                &dir,
            );
            e_cols.push(e);
            a_cols.push(a);
        }
        let mut p = Mat::<Jet>::identity(d);
        if m > 0 {
            let a = Mat::from_columns(&a_cols, m);
            let gram = a.mul(&a.transpose());
            let x = gram.solve(&a).ok_or(Error::RankDrop { expected: m, found: m.saturating_sub(1) })?;
            let q = a.transpose().mul(&x);
            for (pv, qv) in p.data.iter_mut().zip(&q.data) {
                *pv = *pv - *qv;
            }
        }
        let mut basis: Vec<Vec<Jet>> = Vec::new();
        for i in 0..d {
            let mut v = p.column(i);
            for b in &basis {
                let c = dot(&v, b);
                v = v.iter().zip(b).map(|(&vi, &bi)| vi - c * bi).collect();
            }
            let n = dot(&v, &v).sqrt();
            if n.value() > FRAME_THRESHOLD {
                basis.push(v.iter().map(|&vi| vi / n).collect());
            }
        }
        let amb = g.arrows.ambient_dim();
        Ok(basis
            .iter()
            .map(|b| {
                (0..amb)
                    .map(|r| b.iter().zip(&e_cols).fold(Jet::constant(0.0), |s, (&c, e)| s + c * e[r]))
                    .collect()
            })
            .collect())
    }

    pub fn frame(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.frame_jet(&ad::constants(x))?.iter().map(|v| ad::values(v)).collect())
    }

    /// Ambient value of `s` at `1_y`.
    pub fn section_jet(&self, s: &AlgebroidSection, y: &[Jet]) -> Result<Vec<Jet>> {
        let amb = self.groupoid.arrows.ambient_dim();
        match s {
            AlgebroidSection::Frame(c) => {
                if c.len() != self.rank {
                    return Err(Error::Config(format!(
                        "section has {} coefficients, rank is {}",
                        c.len(),
                        self.rank
                    )));
                }
                let mut v = zeros(amb);
                if self.rank == 0 {
                    return Ok(v);
                }
                for (ci, f) in c.iter().zip(self.frame_jet(y)?) {
                    let w = ci.eval(y);
                    for (vr, fr) in v.iter_mut().zip(&f) {
                        *vr = *vr + w * *fr;
                    }
                }
                Ok(v)
            }
            AlgebroidSection::Ambient(f) => Ok(f.eval_jet(y)),
            AlgebroidSection::Scaled(f, x) => {
                let w = f.eval(y);
                Ok(self.section_jet(x, y)?.into_iter().map(|v| w * v).collect())
            }
            AlgebroidSection::Sum(parts) => {
                let mut v = zeros(amb);
                for (c, x) in parts {
                    for (vr, xr) in v.iter_mut().zip(self.section_jet(x, y)?) {
                        *vr = *vr + xr * *c;
                    }
                }
                Ok(v)
            }
            AlgebroidSection::Bracket(x, z) => self.bracket_jet(x, z, y),
        }
    }

    pub fn section_at(&self, s: &AlgebroidSection, x: &[f64]) -> Result<Vec<f64>> {
        Ok(ad::values(&self.section_jet(s, &ad::constants(x))?))
    }

    /// `→X(g) = T(R_g) X(β(g))`, differentiated through `μ(·, g)`.
    pub fn right_invariant_jet(&self, s: &AlgebroidSection, g: &[Jet]) -> Result<Vec<Jet>> {
        let gp = &self.groupoid;
        let y = gp.beta.eval_jet(g);
        let mut arg = gp.unit.eval_jet(&y);
        let mut dir = self.section_jet(s, &y)?;
        arg.extend_from_slice(g);
        dir.extend(zeros(g.len()));
        Ok(ad::directional(|w| gp.mu.eval_jet(w), &arg, &dir).1)
    }

    pub fn right_invariant_at(&self, s: &AlgebroidSection, g: &[f64]) -> Result<Vec<f64>> {
        Ok(ad::values(&self.right_invariant_jet(s, &ad::constants(g))?))
    }

    /// `[→X, →Y](1_y) = D→Y·→X − D→X·→Y` at the unit.
    fn bracket_jet(&self, x: &AlgebroidSection, z: &AlgebroidSection, y: &[Jet]) -> Result<Vec<Jet>> {
        let g0 = self.groupoid.unit.eval_jet(y);
        let (vx, vz) = (self.section_jet(x, y)?, self.section_jet(z, y)?);
        let (_, a) = try_directional(|g| self.right_invariant_jet(z, g), &g0, &vx)?;
        let (_, b) = try_directional(|g| self.right_invariant_jet(x, g), &g0, &vz)?;
        Ok(sub(&a, &b))
    }

    pub fn bracket_at(&self, x: &AlgebroidSection, z: &AlgebroidSection, y: &[f64]) -> Result<Vec<f64>> {
        Ok(ad::values(&self.bracket_jet(x, z, &ad::constants(y))?))
    }

    /// Frame coordinates of the ambient vector `v` at `1_y`.
    pub fn coefficients(&self, y: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let frame = self.frame(y)?;
        // The frame is orthonormal in chart coordinates, not ambiently.
        let r = frame.len();
        let mut gram = nalgebra::DMatrix::zeros(r, r);
        let mut rhs = nalgebra::DVector::zeros(r);
        for i in 0..r {
            rhs[i] = dot(&frame[i], v);
            for j in 0..r {
                gram[(i, j)] = dot(&frame[i], &frame[j]);
            }
        }
        let c: Vec<f64> = if r == 0 {
            vec![]
        } else {
            gram.lu().solve(&rhs).ok_or(Error::RankDrop { expected: r, found: 0 })?.iter().cloned().collect()
        };
        let mut back = vec![0.0; v.len()];
        for (ci, f) in c.iter().zip(&frame) {
            for (b, fr) in back.iter_mut().zip(f) {
                *b += ci * fr;
            }
        }
        let residual = dist(&back, v);
        if residual > TOL_BRACKET * norm(v).max(1.0) {
            return Err(Error::FrameProjectionError { residual });
        }
        Ok(c)
    }

    pub fn bracket_coefficients(
        &self,
        x: &AlgebroidSection,
        z: &AlgebroidSection,
        y: &[f64],
    ) -> Result<Vec<f64>> {
        self.coefficients(y, &self.bracket_at(x, z, y)?)
    }

    fn anchor_jet(&self, s: &AlgebroidSection, y: &[Jet]) -> Result<Vec<Jet>> {
        let u = self.groupoid.unit.eval_jet(y);
        let v = self.section_jet(s, y)?;
        Ok(ad::directional(|w| self.groupoid.beta.eval_jet(w), &u, &v).1)
    }

    /// `a(X)(y) = T_{1_y}β · X(y)`, ambient on `M`.
    pub fn anchor_at(&self, s: &AlgebroidSection, y: &[f64]) -> Result<Vec<f64>> {
        Ok(ad::values(&self.anchor_jet(s, &ad::constants(y))?))
    }

    /// `[a(X), a(Y)]` as vector fields on `M`.
    pub fn anchor_field_bracket(
        &self,
        x: &AlgebroidSection,
        z: &AlgebroidSection,
        y: &[f64],
    ) -> Result<Vec<f64>> {
        let y = ad::constants(y);
        let (vx, vz) = (self.anchor_jet(x, &y)?, self.anchor_jet(z, &y)?);
        let (_, a) = try_directional(|w| self.anchor_jet(z, w), &y, &vx)?;
        let (_, b) = try_directional(|w| self.anchor_jet(x, w), &y, &vz)?;
        Ok(ad::values(&sub(&a, &b)))
    }

    /// `a(X) f` for a polynomial `f` on `M`.
    pub fn anchor_derivative(&self, s: &AlgebroidSection, f: &Poly, y: &[f64]) -> Result<f64> {
        let a = self.anchor_at(s, y)?;
        let (_, d) = ad::directional(|w| vec![f.eval(w)], &ad::constants(y), &ad::constants(&a));
        Ok(d[0].value())
    }

    fn sample_base<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..1000 {
            let x = self.base.sample(rng);
            if self.groupoid.contains_object(&x) && self.base.best_chart(&x).is_ok() {
                return Ok(x);
            }
        }
        Err(Error::SamplingFailure(format!("no base points for {}", self.groupoid.id)))
    }

    /// Bracket laws on random polynomial sections; sample `s` uses stream `s`.
    pub fn check_laws(&self, n_samples: usize, seed: u64, with_jacobi: bool) -> Result<BracketReport> {
        let mut report = BracketReport::new(&LAW_NAMES);
        for s in 0..n_samples {
            let mut rng = stream_rng(seed, s as u64);
            let y = self.sample_base(&mut rng)?;
            let [x, z, w] = [(); 3].map(|_| AlgebroidSection::random(self, &mut rng));
            let f = Poly::random(self.base.ambient_dim(), &mut rng);
            let c = rng.gen_range(-2.0..2.0);

            let xz = self.bracket_at(&x, &z, &y)?;
            let zx = self.bracket_at(&z, &x, &y)?;
            report.record("antisymmetry", dist(&xz, &zx.iter().map(|v| -v).collect::<Vec<_>>()));

            let lhs = self.bracket_at(&x, &AlgebroidSection::scaled(&f, &z), &y)?;
            let fy = f.eval_f64(&y);
            let af = self.anchor_derivative(&x, &f, &y)?;
            let zv = self.section_at(&z, &y)?;
            let rhs: Vec<f64> = xz.iter().zip(&zv).map(|(b, v)| fy * b + af * v).collect();
            report.record("leibniz", dist(&lhs, &rhs));

            let ab = self.anchor_at(&AlgebroidSection::bracket(&x, &z), &y)?;
            report.record("anchor_morphism", dist(&ab, &self.anchor_field_bracket(&x, &z, &y)?));

            let comb = AlgebroidSection::Sum(vec![(c, x.clone()), (1.0, z.clone())]);
            let lin: Vec<f64> =
                self.anchor_at(&x, &y)?.iter().zip(self.anchor_at(&z, &y)?).map(|(a, b)| c * a + b).collect();
            report.record("anchor_linearity", dist(&self.anchor_at(&comb, &y)?, &lin));

            let proj_err = match self.coefficients(&y, &xz) {
                Ok(_) => 0.0,
                Err(Error::FrameProjectionError { residual }) => residual,
                Err(e) => return Err(e),
            };
            report.record("frame_projection", proj_err);

            report.record("right_invariance", self.right_invariance_residual(&x, &mut rng)?);

            if with_jacobi {
                let b = AlgebroidSection::bracket;
                let j1 = self.bracket_at(&x, &b(&z, &w), &y)?;
                let j2 = self.bracket_at(&z, &b(&w, &x), &y)?;
                let j3 = self.bracket_at(&w, &b(&x, &z), &y)?;
                let sum: Vec<f64> = (0..j1.len()).map(|i| j1[i] + j2[i] + j3[i]).collect();
                report.record("jacobi", norm(&sum));
            }
            report.n_samples += 1;
        }
        Ok(report)
    }

    /// `|→X(μ(h, g)) − T(R_g)→X(h)|` on one composable pair.
    fn right_invariance_residual<R: Rng + ?Sized>(&self, x: &AlgebroidSection, rng: &mut R) -> Result<f64> {
        let gp = &self.groupoid;
        let [h, g, _] = gp.sample_triple(rng)?;
        let mut hg = h.clone();
        hg.extend_from_slice(&g);
        let lhs = self.right_invariant_at(x, &gp.mu.eval(&hg))?;
        let vh = self.right_invariant_jet(x, &ad::constants(&h))?;
        let mut dir = vh;
        dir.extend(zeros(g.len()));
        let (_, d) = ad::directional(|w| gp.mu.eval_jet(w), &ad::constants(&hg), &dir);
        Ok(dist(&lhs, &ad::values(&d)))
    }
}

pub const LAW_NAMES: [&str; 7] = [
    "antisymmetry",
    "jacobi",
    "leibniz",
    "anchor_morphism",
    "anchor_linearity",
    "frame_projection",
    "right_invariance",
];

#[derive(Clone, Debug, Serialize)]
pub struct BracketReport {
    pub n_samples: usize,
    pub residuals: BTreeMap<String, f64>,
}

impl BracketReport {
    pub fn new(names: &[&str]) -> Self {
        BracketReport { n_samples: 0, residuals: names.iter().map(|n| (n.to_string(), 0.0)).collect() }
    }

    pub fn record(&mut self, name: &str, v: f64) {
        let e = self.residuals.entry(name.to_string()).or_insert(0.0);
        // NaN must surface as a failure.
        *e = if v.is_nan() { f64::NAN } else { e.max(v) };
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.values().fold(0.0, |a, &b| if b.is_nan() { f64::NAN } else { a.max(b) })
    }
}

/// `C(K, L(G))` with anchor and bracket applied node by node.
#[derive(Clone, Debug)]
pub struct CurrentAlgebroid {
    pub alg: LieAlgebroid,
    pub grid: GridSpec,
}

pub fn current_algebroid(alg: &LieAlgebroid, grid: GridSpec) -> CurrentAlgebroid {
    CurrentAlgebroid { alg: alg.clone(), grid }
}

impl CurrentAlgebroid {
    fn check_len(&self, x: &[AlgebroidSection]) -> Result<()> {
        if x.len() != self.grid.n {
            return Err(Error::Config(format!("{} node sections for {} nodes", x.len(), self.grid.n)));
        }
        Ok(())
    }

    /// Nodewise bracket of `K`-dependent sections along the object grid map
    /// `base`, as tangent vectors at the units.
    pub fn bracket(
        &self,
        x: &[AlgebroidSection],
        z: &[AlgebroidSection],
        base: &GridMap,
    ) -> Result<GridSection> {
        self.check_len(x)?;
        self.check_len(z)?;
        let gp = &self.alg.groupoid;
        let units: Vec<Vec<f64>> = base.values.iter().map(|p| gp.unit.eval(&p.ambient)).collect();
        let ub = GridMap::from_ambient(self.grid, &gp.arrows, &units)?;
        let vectors = (0..self.grid.n)
            .map(|i| {
                let v = self.alg.bracket_at(&x[i], &z[i], &base.values[i].ambient)?;
                Tangent::from_ambient(&gp.arrows, &units[i], &v)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridSection { base: ub, vectors })
    }

    pub fn anchor(&self, x: &[AlgebroidSection], base: &GridMap) -> Result<GridSection> {
        self.check_len(x)?;
        let vectors = (0..self.grid.n)
            .map(|i| {
                let p = &base.values[i].ambient;
                Tangent::from_ambient(&self.alg.base, p, &self.alg.anchor_at(&x[i], p)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GridSection { base: base.clone(), vectors })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoPathReport {
    pub groupoid: String,
    pub grid: GridSpec,
    pub n_pairs: usize,
    /// Largest nodewise gap between the two bracket computations.
    pub max_residual: f64,
    /// Largest gap between frames of the power groupoid and nodewise frames.
    pub frame_residual: f64,
}

/// Compares the bracket of the algebroid of the grid-level current groupoid
/// `G^n ⇉ M^n` with the nodewise bracket of `C(K, L(G))` on random
/// node-dependent polynomial sections.
pub fn bracket_two_path_check(
    gpd: &LieGroupoid,
    grid: GridSpec,
    n_pairs: usize,
    seed: u64,
) -> Result<TwoPathReport> {
    let base_alg = algebroid_of_groupoid(gpd)?;
    let pow = power_groupoid(gpd, grid.n);
    let pow_alg = LieAlgebroid { base: pow.base.clone(), rank: base_alg.rank * grid.n, groupoid: pow };
    let cur = current_algebroid(&base_alg, grid);
    let objects = CurrentGroupoid::build(gpd.clone(), grid);
    let (r, mb, ga) = (base_alg.rank, gpd.base.ambient_dim(), gpd.arrows.ambient_dim());
    let mut max_residual: f64 = 0.0;
    let mut frame_residual: f64 = 0.0;
    for s in 0..n_pairs {
        let mut rng = stream_rng(seed, s as u64);
        let xbar = objects.sample_object(&mut rng)?;
        let base = GridMap::from_ambient(grid, &gpd.base, &xbar)?;
        let node_sections = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<Poly>> {
            (0..grid.n).map(|_| (0..r).map(|_| Poly::random(mb, rng)).collect()).collect()
        };
        let (px, pz) = (node_sections(&mut rng), node_sections(&mut rng));
        let lift = |p: &[Vec<Poly>]| {
            AlgebroidSection::Frame(
                p.iter().enumerate().flat_map(|(k, c)| c.iter().map(move |q| q.shifted(k * mb))).collect(),
            )
        };
        let flat: Vec<f64> = xbar.concat();
        if s == 0 {
            let pf = pow_alg.frame(&flat)?;
            for k in 0..grid.n {
                for (i, f) in base_alg.frame(&xbar[k])?.iter().enumerate() {
                    let big = &pf[k * r + i];
                    let mut gap = dist(&big[k * ga..(k + 1) * ga], f);
                    gap = gap.max(norm(&big[..k * ga]).max(norm(&big[(k + 1) * ga..])));
                    frame_residual = frame_residual.max(gap);
                }
            }
        }
        let whole = pow_alg.bracket_at(&lift(&px), &lift(&pz), &flat)?;
        let nx: Vec<AlgebroidSection> = px.into_iter().map(AlgebroidSection::Frame).collect();
        let nz: Vec<AlgebroidSection> = pz.into_iter().map(AlgebroidSection::Frame).collect();
        let nodewise = cur.bracket(&nx, &nz, &base)?;
        for (k, v) in nodewise.ambient_velocities().iter().enumerate() {
            max_residual = max_residual.max(dist(&whole[k * ga..(k + 1) * ga], v));
        }
    }
    Ok(TwoPathReport { groupoid: gpd.id.clone(), grid, n_pairs, max_residual, frame_residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct SignReport {
    pub group: String,
    pub abelian: bool,
    /// `s` in `[e_i, e_j]_groupoid = s · [e_i, e_j]_matrix` for the basis
    /// pairs (1,2), (2,3), (3,1).
    pub signs: Vec<f64>,
    /// Distance of each groupoid bracket from `s` times the matrix bracket.
    pub proportionality_residual: f64,
    /// Sign measured by the flow-commutator oracle, per basis pair.
    pub oracle_signs: Vec<f64>,
    pub oracle_residual: f64,
    pub linearity_residual: f64,
    pub consistent: bool,
    pub note: String,
}

/// Flows of `→ξ` are left translations `g ↦ exp(tξ) g`; the commutator
/// `ψ_{-t} φ_{-t} ψ_t φ_t (e)` gives `e + t²[→ξ, →η](e) + O(t³)`.
fn flow_commutator(h: &LieGroupInstance, xi: &[f64], eta: &[f64], t: f64) -> Vec<f64> {
    let ex = |c: f64| h.exp::<f64>(&xi.iter().map(|v| v * c).collect::<Vec<_>>());
    let ey = |c: f64| h.exp::<f64>(&eta.iter().map(|v| v * c).collect::<Vec<_>>());
    let e = h.identity();
    let p = h.mul(&ex(t), &e);
    let p = h.mul(&ey(t), &p);
    let p = h.mul(&ex(-t), &p);
    let p = h.mul(&ey(-t), &p);
    p.iter().zip(&e).map(|(a, b)| (a - b) / (t * t)).collect()
}

/// Measures the sign relating the groupoid bracket of `H ⇉ ⋆` to the matrix
/// commutator on a basis of the Lie algebra.
pub fn sign_convention_check(h: &LieGroupInstance) -> Result<SignReport> {
    let alg = algebroid_of_groupoid(&group(h.clone()))?;
    let k = h.algebra_dim();
    let basis: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            e
        })
        .collect();
    let section = |xi: Vec<f64>| {
        let amb = h.algebra_to_ambient::<f64>(&xi);
        AlgebroidSection::Ambient(AmbientFn::from_jet(move |_| ad::constants(&amb)))
    };
    let pairs: Vec<(usize, usize)> = if k >= 3 { vec![(0, 1), (1, 2), (2, 0)] } else { vec![(0, 0)] };
    let mut signs = Vec::new();
    let mut oracle_signs = Vec::new();
    let (mut prop, mut orc): (f64, f64) = (0.0, 0.0);
    for &(i, j) in &pairs {
        let b = alg.bracket_at(&section(basis[i].clone()), &section(basis[j].clone()), &[])?;
        let c = h.algebra_to_ambient::<f64>(&h.bracket(&basis[i], &basis[j]));
        let fc = flow_commutator(h, &basis[i], &basis[j], 1e-4);
        let cc = dot(&c, &c);
        if cc > 0.0 {
            let s = dot(&b, &c) / cc;
            prop = prop.max(dist(&b, &c.iter().map(|v| s * v).collect::<Vec<_>>()));
            signs.push(s);
            oracle_signs.push(dot(&fc, &c).signum());
        } else {
            prop = prop.max(norm(&b));
        }
        orc = orc.max(dist(&fc, &b));
    }
    let lin = if k > 1 {
        let b1 = alg.bracket_at(
            &section(basis[0].iter().map(|v| 2.0 * v).collect()),
            &section(basis[1].clone()),
            &[],
        )?;
        let b2 = alg.bracket_at(&section(basis[0].clone()), &section(basis[1].clone()), &[])?;
        dist(&b1, &b2.iter().map(|v| 2.0 * v).collect::<Vec<_>>())
    } else {
        0.0
    };
    let abelian = h.is_abelian();
    let rounded: Vec<f64> = signs.iter().map(|s| s.round()).collect();
    let consistent = rounded.windows(2).all(|w| w[0] == w[1])
        && signs.iter().all(|s| (s.abs() - 1.0).abs() < TOL_BRACKET)
        && rounded == oracle_signs;
    let note = if abelian {
        "abelian: vacuous".to_string()
    } else {
        format!("groupoid bracket = {:+} x matrix commutator", rounded.first().copied().unwrap_or(0.0))
    };
    Ok(SignReport {
        group: h.id(),
        abelian,
        signs,
        proportionality_residual: prop,
        oracle_signs,
        oracle_residual: orc,
        linearity_residual: lin,
        consistent,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient_fn;
    use crate::groupoid::catalog;

    fn alg(id: &str) -> LieAlgebroid {
        algebroid_of_groupoid(&catalog(id).unwrap()).unwrap()
    }

    #[test]
    fn ranks() {
        for (id, r) in [
            ("unit:S1", 0),
            ("pair:R2", 2),
            ("pair:S1", 1),
            ("action:R-S1", 1),
            ("action:SO3-R3", 3),
            ("bundle:S1xS1", 1),
            ("finite:Z4-R2", 0),
            ("group:SO3", 3),
        ] {
            assert_eq!(alg(id).rank, r, "{id}");
        }
    }

    #[test]
    fn pair_frame_and_anchor() {
        let a = alg("pair:R2");
        let y = [0.3, -0.4];
        let f = a.frame(&y).unwrap();
        assert!(dist(&f[0], &[1.0, 0.0, 0.0, 0.0]) < 1e-14);
        let x = AlgebroidSection::constant(&[0.5, 2.0]);
        assert!(dist(&a.anchor_at(&x, &y).unwrap(), &[0.5, 2.0]) < 1e-14);
    }

    #[test]
    fn pair_bracket_is_vector_field_bracket() {
        let a = alg("pair:R2");
        // V = ∂_x, W = x ∂_y, lifted to (V(a), 0).
        let v = AlgebroidSection::Ambient(ambient_fn!(|y| vec![
            y[0] * 0.0 + 1.0,
            y[0] * 0.0,
            y[0] * 0.0,
            y[0] * 0.0
        ]));
        let w = AlgebroidSection::Ambient(ambient_fn!(|y| vec![y[0] * 0.0, y[0], y[0] * 0.0, y[0] * 0.0]));
        let y = [0.7, 0.2];
        assert!(dist(&a.bracket_at(&v, &w, &y).unwrap(), &[0.0, 1.0, 0.0, 0.0]) < 1e-12);
        assert!(dist(&a.bracket_coefficients(&v, &w, &y).unwrap(), &[0.0, 1.0]) < 1e-12);
    }

    #[test]
    fn right_invariant_extension() {
        let a = alg("pair:R2");
        let v = AlgebroidSection::Ambient(ambient_fn!(|y| vec![y[1], y[0] * y[0], y[0] * 0.0, y[0] * 0.0]));
        let g = [0.2, 0.5, -1.0, 3.0];
        assert!(dist(&a.right_invariant_at(&v, &g).unwrap(), &[0.5, 0.04, 0.0, 0.0]) < 1e-14);
        let z = AlgebroidSection::zero(2);
        assert!(norm(&a.right_invariant_at(&z, &g).unwrap()) == 0.0);
        let u = [0.3, 0.1, 0.3, 0.1];
        assert!(
            dist(&a.right_invariant_at(&v, &u).unwrap(), &a.section_at(&v, &[0.3, 0.1]).unwrap()) < 1e-15
        );
    }

    #[test]
    fn bundle_bracket_vanishes() {
        let a = alg("bundle:S1xS1");
        let x = AlgebroidSection::constant(&[1.0]);
        let z = AlgebroidSection::constant(&[-0.5]);
        let y = [0.6, 0.8];
        assert!(norm(&a.bracket_at(&x, &z, &y).unwrap()) < 1e-14);
        assert!(norm(&a.anchor_at(&x, &y).unwrap()) < 1e-14);
    }

    #[test]
    fn action_anchor_is_fundamental_field() {
        let a = alg("action:SO3-R3");
        let m = [0.3, -0.2, 0.9];
        let h = LieGroupInstance::So3;
        for i in 0..3 {
            let mut xi = vec![0.0; 3];
            xi[i] = 1.0;
            let amb = h.algebra_to_ambient::<f64>(&xi);
            let mut val = amb.clone();
            val.extend([0.0; 3]);
            let s = AlgebroidSection::Ambient(AmbientFn::from_jet(move |_| ad::constants(&val)));
            let t = 1e-6;
            let flow =
                |c: f64| h.act::<f64>(&h.exp::<f64>(&xi.iter().map(|v| v * c).collect::<Vec<_>>()), &m);
            let fd: Vec<f64> = flow(t).iter().zip(flow(-t)).map(|(p, q)| (p - q) / (2.0 * t)).collect();
            assert!(dist(&a.anchor_at(&s, &m).unwrap(), &fd) < 1e-8);
        }
    }

    #[test]
    fn laws_hold() {
        for id in ["pair:R2", "pair:S1", "action:R-S1", "action:SO3-R3", "bundle:S1xS1", "group:SO3"] {
            let r = alg(id).check_laws(3, 4, true).unwrap();
            assert!(r.max_residual() <= TOL_BRACKET, "{id}: {:?}", r.residuals);
        }
    }

    #[test]
    fn two_path_bracket_small() {
        for id in ["pair:R2", "action:R-S1"] {
            let r = bracket_two_path_check(&catalog(id).unwrap(), GridSpec::circle(8), 3, 1).unwrap();
            assert!(r.max_residual <= TOL_BRACKET && r.frame_residual < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn so3_sign_is_negative() {
        let r = sign_convention_check(&LieGroupInstance::So3).unwrap();
        assert!(r.consistent, "{r:?}");
        assert!(r.signs.iter().all(|s| (s + 1.0).abs() < 1e-10));
        assert!(r.linearity_residual < 1e-12 && r.oracle_residual < 1e-3);
        let c = sign_convention_check(&LieGroupInstance::Circle).unwrap();
        assert!(c.abelian && c.note == "abelian: vacuous" && c.proportionality_residual < 1e-14);
    }
}
