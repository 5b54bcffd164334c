//! Lie groupoids `G ⇉ M` given by ambient formulas for α, β, μ, ι, 1.
//!
//! A pair `(g, h)` is composable when `α(g) = β(h)`; then `α(gh) = α(h)` and
//! `β(gh) = β(g)`. The anchor is `(α, β)`.

mod catalog;
mod finite;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ad::AmbientFn;
use crate::error::{Error, Result};
use crate::geom::{Manifold, Point, SmoothMap, TOL_CHART};
use crate::lie_group::LieGroupInstance;
use crate::linalg::{dist, rank_info};
use crate::local_addition::LocalAddition;

pub use catalog::{catalog, catalog_ids, group, power_groupoid};
pub use finite::FiniteGroup;

pub type ArrowBuilder = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Open subsets of the base, as ambient predicates.
#[derive(Clone)]
pub enum OpenSet {
    All,
    Empty,
    /// Product of open intervals on the ambient coordinates.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Custom(Arc<dyn Fn(&[f64]) -> bool + Send + Sync>),
}

impl fmt::Debug for OpenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpenSet::All => write!(f, "All"),
            OpenSet::Empty => write!(f, "Empty"),
            OpenSet::Box { lo, hi } => write!(f, "Box({lo:?}, {hi:?})"),
            OpenSet::Ball { center, radius } => write!(f, "Ball({center:?}, {radius})"),
            OpenSet::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl OpenSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            OpenSet::All => true,
            OpenSet::Empty => false,
            OpenSet::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l < v && v < h),
            OpenSet::Ball { center, radius } => dist(x, center) < *radius,
            OpenSet::Custom(f) => f(x),
        }
    }

    /// Both sets at once.
    pub fn intersect(&self, other: &OpenSet) -> OpenSet {
        match (self, other) {
            (OpenSet::All, o) | (o, OpenSet::All) => o.clone(),
            (OpenSet::Empty, _) | (_, OpenSet::Empty) => OpenSet::Empty,
            (a, b) => {
                let (a, b) = (a.clone(), b.clone());
                OpenSet::Custom(Arc::new(move |x| a.contains(x) && b.contains(x)))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum GroupoidKind {
    Unit,
    Pair,
    /// `H ⋉ M` for a Lie group action.
    Action {
        group: LieGroupInstance,
        act: AmbientFn,
    },
    /// Group bundle `S¹ × S¹ ⇉ S¹`.
    Bundle,
    FiniteAction(Arc<FiniteGroup>),
    /// A Lie group as a groupoid over a point.
    Group(LieGroupInstance),
    /// Pointwise `n`-fold power of another groupoid.
    Power(Box<GroupoidKind>, usize),
}

#[derive(Clone)]
pub struct LieGroupoid {
    pub id: String,
    pub arrows: Manifold,
    pub base: Manifold,
    pub alpha: AmbientFn,
    pub beta: AmbientFn,
    /// `μ(g, h)` on the concatenation `[g, h]`.
    pub mu: AmbientFn,
    pub iota: AmbientFn,
    pub unit: AmbientFn,
    pub kind: GroupoidKind,
    pub restriction: OpenSet,
    /// Parameter manifold `F` for arrows with a prescribed target.
    pub fiber: Manifold,
    /// `(x, f) ↦ h` with `β(h) = x`; surjective onto `β⁻¹(x)` as `f` ranges
    /// over `F`.
    pub arrow_with_target: ArrowBuilder,
}

impl fmt::Debug for LieGroupoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LieGroupoid({}: {} ⇉ {})", self.id, self.arrows.id(), self.base.id())
    }
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v
}

/// Maximum violation of each groupoid law over the sampled triples.
#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub n_samples: usize,
    pub residuals: BTreeMap<String, f64>,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().cloned().fold(0.0, f64::max)
    }

    pub fn merge(&mut self, other: &AxiomReport) {
        self.n_samples += other.n_samples;
        for (k, v) in &other.residuals {
            let e = self.residuals.entry(k.clone()).or_insert(0.0);
            *e = e.max(*v);
        }
    }

    pub fn empty() -> AxiomReport {
        AxiomReport { n_samples: 0, residuals: AXIOM_NAMES.iter().map(|n| (n.to_string(), 0.0)).collect() }
    }
}

pub const AXIOM_NAMES: [&str; 9] = [
    "associativity",
    "left_unit",
    "right_unit",
    "left_inverse",
    "right_inverse",
    "source_of_product",
    "target_of_product",
    "source_of_unit",
    "target_of_unit",
];

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub arrow: Vec<f64>,
    pub sigma_min: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub holds: bool,
    pub n_samples: usize,
    pub witness: Option<Witness>,
}

/// Isotropy group of a finite action groupoid at a point, as a subgroup.
#[derive(Clone, Debug, Serialize)]
pub struct Isotropy {
    pub elements: Vec<usize>,
    /// Multiplication table in positions of `elements`.
    pub table: Vec<Vec<usize>>,
}

impl Isotropy {
    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

impl LieGroupoid {
    pub fn alpha_of(&self, g: &[f64]) -> Vec<f64> {
        self.alpha.eval(g)
    }
    pub fn beta_of(&self, g: &[f64]) -> Vec<f64> {
        self.beta.eval(g)
    }
    pub fn mu_of(&self, g: &[f64], h: &[f64]) -> Vec<f64> {
        self.mu.eval(&concat(g, h))
    }
    pub fn iota_of(&self, g: &[f64]) -> Vec<f64> {
        self.iota.eval(g)
    }
    pub fn unit_of(&self, x: &[f64]) -> Vec<f64> {
        self.unit.eval(x)
    }

    pub fn contains_object(&self, x: &[f64]) -> bool {
        self.restriction.contains(x)
    }

    pub fn contains_arrow(&self, g: &[f64]) -> bool {
        self.contains_object(&self.alpha_of(g)) && self.contains_object(&self.beta_of(g))
    }

    pub fn compose(&self, g: &Point, h: &Point) -> Result<Point> {
        let mismatch = dist(&self.alpha_of(&g.ambient), &self.beta_of(&h.ambient));
        if mismatch >= TOL_CHART {
            return Err(Error::NotComposable { mismatch });
        }
        Point::from_ambient(&self.arrows, &self.mu_of(&g.ambient, &h.ambient))
    }

    pub fn inverse(&self, g: &Point) -> Result<Point> {
        Point::from_ambient(&self.arrows, &self.iota_of(&g.ambient))
    }

    pub fn unit_at(&self, x: &Point) -> Result<Point> {
        Point::from_ambient(&self.arrows, &self.unit_of(&x.ambient))
    }

    pub fn anchor(&self, g: &Point) -> Result<(Point, Point)> {
        Ok((
            Point::from_ambient(&self.base, &self.alpha_of(&g.ambient))?,
            Point::from_ambient(&self.base, &self.beta_of(&g.ambient))?,
        ))
    }

    pub fn alpha_map(&self) -> SmoothMap {
        SmoothMap::new("alpha", self.arrows.clone(), self.base.clone(), self.alpha.clone())
    }

    pub fn beta_map(&self) -> SmoothMap {
        SmoothMap::new("beta", self.arrows.clone(), self.base.clone(), self.beta.clone())
    }

    pub fn anchor_map(&self) -> SmoothMap {
        let (a, b) = (self.alpha.clone(), self.beta.clone());
        let (a2, b2) = (self.alpha.clone(), self.beta.clone());
        SmoothMap::new(
            "anchor",
            self.arrows.clone(),
            Manifold::product(self.base.clone(), self.base.clone()),
            AmbientFn::new(
                move |g: &[f64]| concat(&a.eval(g), &b.eval(g)),
                move |g: &[crate::ad::Jet]| {
                    let mut v = a2.eval_jet(g);
                    v.extend(b2.eval_jet(g));
                    v
                },
            ),
        )
    }

    /// Local additions on arrows and objects (exponential maps of the
    /// catalog metrics).
    pub fn local_additions(&self) -> Result<(LocalAddition, LocalAddition)> {
        Ok((LocalAddition::riemannian(&self.arrows)?, LocalAddition::riemannian(&self.base)?))
    }

    /// `G|_Ω = α⁻¹(Ω) ∩ β⁻¹(Ω)`.
    pub fn restrict(&self, omega: OpenSet) -> LieGroupoid {
        let mut r = self.clone();
        r.id = format!("{}|Ω", self.id);
        r.restriction = self.restriction.intersect(&omega);
        r
    }

    pub fn is_known_empty(&self) -> bool {
        matches!(self.restriction, OpenSet::Empty)
    }

    fn sample_object<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..10_000 {
            let x = self.base.sample(rng);
            if self.contains_object(&x) {
                return Ok(x);
            }
        }
        Err(Error::SamplingFailure(format!("no objects of {} found in the restriction", self.id)))
    }

    /// An arrow in the restriction with target `x`.
    fn sample_arrow_to<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        for _ in 0..10_000 {
            let f = self.fiber.sample(rng);
            let h = (self.arrow_with_target)(x, &f);
            if self.contains_arrow(&h) {
                return Ok(h);
            }
        }
        Err(Error::SamplingFailure(format!("no arrows of {} with the given target", self.id)))
    }

    pub fn sample_arrow<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let x = self.sample_object(rng)?;
        self.sample_arrow_to(&x, rng)
    }

    /// Composable triple `(g, h, k)`: `α(g) = β(h)`, `α(h) = β(k)`.
    pub fn sample_triple<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<[Vec<f64>; 3]> {
        let g = self.sample_arrow(rng)?;
        let h = self.sample_arrow_to(&self.alpha_of(&g), rng)?;
        let k = self.sample_arrow_to(&self.alpha_of(&h), rng)?;
        Ok([g, h, k])
    }

    /// Law violations for one composable triple.
    pub fn axiom_residuals(&self, g: &[f64], h: &[f64], k: &[f64]) -> [f64; 9] {
        let gh = self.mu_of(g, h);
        let hk = self.mu_of(h, k);
        let assoc = dist(&self.mu_of(&gh, k), &self.mu_of(g, &hk));
        let (ag, bg) = (self.alpha_of(g), self.beta_of(g));
        let (ua, ub) = (self.unit_of(&ag), self.unit_of(&bg));
        let left_unit = dist(&self.mu_of(&ub, g), g);
        let right_unit = dist(&self.mu_of(g, &ua), g);
        let ig = self.iota_of(g);
        let left_inv = dist(&self.mu_of(&ig, g), &ua);
        let right_inv = dist(&self.mu_of(g, &ig), &ub);
        let src = dist(&self.alpha_of(&gh), &self.alpha_of(h));
        let tgt = dist(&self.beta_of(&gh), &bg);
        let su = dist(&self.alpha_of(&ua), &ag);
        let tu = dist(&self.beta_of(&ua), &ag);
        [assoc, left_unit, right_unit, left_inv, right_inv, src, tgt, su, tu]
    }

    /// Maximum law violations over `n_samples` composable triples. A groupoid
    /// restricted to the empty set passes vacuously.
    pub fn check_axioms(&self, n_samples: usize, seed: u64) -> Result<AxiomReport> {
        let mut report = AxiomReport::empty();
        if self.is_known_empty() {
            return Ok(report);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_samples {
            let [g, h, k] = self.sample_triple(&mut rng)?;
            let r = self.axiom_residuals(&g, &h, &k);
            for (name, v) in AXIOM_NAMES.iter().zip(r) {
                let e = report.residuals.get_mut(*name).unwrap();
                *e = e.max(v);
            }
            report.n_samples += 1;
        }
        Ok(report)
    }

    /// Étale: `dim G = dim M` and `Tα` invertible at every sampled arrow.
    pub fn classify_etale(&self, n_samples: usize, seed: u64) -> Result<Classification> {
        if self.arrows.dim() != self.base.dim() {
            return Ok(Classification {
                holds: false,
                n_samples: 0,
                witness: Some(Witness {
                    arrow: vec![],
                    sigma_min: 0.0,
                    reason: format!("dim G = {} ≠ dim M = {}", self.arrows.dim(), self.base.dim()),
                }),
            });
        }
        self.rank_scan(&self.alpha_map(), n_samples, seed, |r| r.full_row_rank() && r.full_column_rank())
    }

    /// Locally transitive: the anchor `(α, β)` is a submersion at every
    /// sampled arrow.
    pub fn classify_locally_transitive(&self, n_samples: usize, seed: u64) -> Result<Classification> {
        self.rank_scan(&self.anchor_map(), n_samples, seed, |r| r.full_row_rank())
    }

    /// Étale test at a single arrow.
    pub fn etale_at(&self, g: &Point) -> Result<bool> {
        if self.arrows.dim() != self.base.dim() {
            return Ok(false);
        }
        let r = rank_info(&self.alpha_map().jacobian(g)?.0);
        Ok(r.full_row_rank() && r.full_column_rank())
    }

    /// Local transitivity test at a single arrow.
    pub fn locally_transitive_at(&self, g: &Point) -> Result<bool> {
        Ok(rank_info(&self.anchor_map().jacobian(g)?.0).full_row_rank())
    }

    fn rank_scan(
        &self,
        f: &SmoothMap,
        n_samples: usize,
        seed: u64,
        ok: impl Fn(&crate::linalg::RankInfo) -> bool,
    ) -> Result<Classification> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n_samples {
            let g = self.sample_arrow(&mut rng)?;
            let p = Point::from_ambient(&self.arrows, &g)?;
            let (jac, _) = f.jacobian(&p)?;
            let r = rank_info(&jac);
            if !ok(&r) {
                return Ok(Classification {
                    holds: false,
                    n_samples: i + 1,
                    witness: Some(Witness {
                        arrow: g,
                        sigma_min: r.sigma_min,
                        reason: format!("rank {} of a {}×{} Jacobian", r.rank, r.rows, r.cols),
                    }),
                });
            }
        }
        Ok(Classification { holds: true, n_samples, witness: None })
    }

    /// α and β each pass the pointwise submersion test at sampled arrows.
    pub fn check_submersions(&self, n_samples: usize, seed: u64) -> Result<Classification> {
        let a = self.rank_scan(&self.alpha_map(), n_samples, seed, |r| r.full_row_rank())?;
        if !a.holds {
            return Ok(a);
        }
        self.rank_scan(&self.beta_map(), n_samples, seed ^ 0x5eed, |r| r.full_row_rank())
    }

    /// `anchor ∘ ι = swap ∘ anchor` on sampled arrows; returns the largest
    /// violation.
    pub fn anchor_naturality(&self, n_samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        if self.is_known_empty() {
            return Ok(0.0);
        }
        for _ in 0..n_samples {
            let g = self.sample_arrow(&mut rng)?;
            let ig = self.iota_of(&g);
            worst = worst
                .max(dist(&self.alpha_of(&ig), &self.beta_of(&g)))
                .max(dist(&self.beta_of(&ig), &self.alpha_of(&g)));
        }
        Ok(worst)
    }

    /// Searches for arrows `x ← y` between sampled object pairs. A positive
    /// verdict means "surjective on samples", never global transitivity,
    /// except for pair groupoids where `(x, y)` is an explicit witness.
    pub fn classify_surjective_on_samples(&self, n_samples: usize, seed: u64) -> Result<Classification> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n_samples {
            let x = self.sample_object(&mut rng)?;
            let y = self.sample_object(&mut rng)?;
            let best = self.search_arrow(&x, &y, &mut rng);
            if best.1 > 1e-8 {
                return Ok(Classification {
                    holds: false,
                    n_samples: i + 1,
                    witness: Some(Witness {
                        arrow: best.0,
                        sigma_min: best.1,
                        reason: format!(
                            "no arrow found from {y:?} to {x:?}; best source miss {:.3e}",
                            best.1
                        ),
                    }),
                });
            }
        }
        Ok(Classification { holds: true, n_samples, witness: None })
    }

    /// Best arrow with target `x` and source near `y`: random starts in the
    /// fiber, then Gauss-Newton in fiber charts.
    fn search_arrow<R: Rng + ?Sized>(&self, x: &[f64], y: &[f64], rng: &mut R) -> (Vec<f64>, f64) {
        let miss = |f: &[f64]| {
            let h = (self.arrow_with_target)(x, f);
            let d = dist(&self.alpha_of(&h), y);
            (h, d)
        };
        let mut best_f = self.fiber.sample(rng);
        let mut best = miss(&best_f);
        for _ in 0..32 {
            let f = self.fiber.sample(rng);
            let m = miss(&f);
            if m.1 < best.1 {
                best = m;
                best_f = f;
            }
        }
        let fdim = self.fiber.dim();
        if fdim == 0 {
            return best;
        }
        for _ in 0..30 {
            let Ok(c) = self.fiber.best_chart(&best_f) else { break };
            let u = self.fiber.chart_forward(c, &best_f);
            let res = |u: &[f64]| {
                let f = self.fiber.chart_inverse(c, u);
                let h = (self.arrow_with_target)(x, &f);
                self.alpha_of(&h).iter().zip(y).map(|(a, b)| a - b).collect::<Vec<f64>>()
            };
            let r0 = res(&u);
            let step = 1e-7;
            let cols: Vec<nalgebra::DVector<f64>> = (0..fdim)
                .map(|k| {
                    let mut up = u.clone();
                    let mut dn = u.clone();
                    up[k] += step;
                    dn[k] -= step;
                    let (a, b) = (res(&up), res(&dn));
                    nalgebra::DVector::from_iterator(
                        a.len(),
                        a.iter().zip(&b).map(|(p, q)| (p - q) / (2.0 * step)),
                    )
                })
                .collect();
            let jac = nalgebra::DMatrix::from_columns(&cols);
            let Ok(du) = jac.svd(true, true).solve(&nalgebra::DVector::from_vec(r0), 1e-6) else { break };
            // Backtracking keeps the step inside the chart.
            let mut improved = false;
            let mut t = 1.0;
            for _ in 0..8 {
                let cand: Vec<f64> = u.iter().zip(du.iter()).map(|(a, d)| a - t * d).collect();
                let f = self.fiber.project(&self.fiber.chart_inverse(c, &cand));
                let m = miss(&f);
                if m.1 < best.1 {
                    best = m;
                    best_f = f;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved || best.1 < 1e-13 {
                break;
            }
        }
        best
    }

    pub fn finite_group(&self) -> Option<&FiniteGroup> {
        match &self.kind {
            GroupoidKind::FiniteAction(g) => Some(g),
            _ => None,
        }
    }

    /// `G_x = α⁻¹(x) ∩ β⁻¹(x)` for a finite action groupoid.
    pub fn isotropy_group(&self, x: &[f64]) -> Result<Isotropy> {
        let grp = self
            .finite_group()
            .ok_or_else(|| Error::Unsupported(format!("{} is not a finite action groupoid", self.id)))?;
        let elements: Vec<usize> =
            (0..grp.order()).filter(|&k| dist(&grp.act(k, x), x) < TOL_CHART).collect();
        let table = elements
            .iter()
            .map(|&a| {
                elements
                    .iter()
                    .map(|&b| {
                        let c = grp.mul(a, b);
                        elements.iter().position(|&e| e == c).expect("subgroup")
                    })
                    .collect()
            })
            .collect();
        Ok(Isotropy { elements, table })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient_fn;

    fn pt(m: &Manifold, amb: &[f64]) -> Point {
        Point::from_ambient(m, amb).unwrap()
    }

    #[test]
    fn pair_composition() {
        let g = catalog("pair:R1").unwrap();
        let a = pt(&g.arrows, &[1.0, 2.0]);
        let b = pt(&g.arrows, &[2.0, 5.0]);
        assert_eq!(g.compose(&a, &b).unwrap().ambient, vec![1.0, 5.0]);
        let c = pt(&g.arrows, &[3.0, 5.0]);
        assert!(matches!(g.compose(&a, &c), Err(Error::NotComposable { .. })));
        assert_eq!(g.inverse(&a).unwrap().ambient, vec![2.0, 1.0]);
        let (s, t) = g.anchor(&a).unwrap();
        assert_eq!((s.ambient[0], t.ambient[0]), (2.0, 1.0));
    }

    #[test]
    fn unit_groupoid_is_trivial() {
        let g = catalog("unit:R1").unwrap();
        let x = pt(&g.arrows, &[0.7]);
        assert_eq!(g.compose(&x, &x).unwrap().ambient, vec![0.7]);
        assert_eq!(g.inverse(&x).unwrap().ambient, vec![0.7]);
        let r = g.check_axioms(200, 1).unwrap();
        assert_eq!(r.max_residual(), 0.0);
    }

    #[test]
    fn action_inverse_and_anchor() {
        let g = catalog("action:R-S1").unwrap();
        let (t, th) = (0.4f64, 1.1f64);
        let a = pt(&g.arrows, &[t, th.cos(), th.sin()]);
        let inv = g.inverse(&a).unwrap();
        let expect = [-t, (t + th).cos(), (t + th).sin()];
        assert!(dist(&inv.ambient, &expect) < 1e-15);
        let (s, tg) = g.anchor(&a).unwrap();
        assert!(dist(&s.ambient, &[th.cos(), th.sin()]) < 1e-15);
        assert!(dist(&tg.ambient, &[(t + th).cos(), (t + th).sin()]) < 1e-15);
    }

    #[test]
    fn catalog_passes_axioms() {
        for id in catalog_ids() {
            let g = catalog(id).unwrap();
            let r = g.check_axioms(300, 5).unwrap();
            assert!(r.max_residual() <= 1e-9, "{id}: {:?}", r.residuals);
        }
    }

    #[test]
    fn corrupted_pair_fails() {
        let mut g = catalog("pair:R1").unwrap();
        g.mu = ambient_fn!(|x| vec![x[0], x[3] + 0.1]);
        let r = g.check_axioms(50, 2).unwrap();
        assert!(r.residuals["associativity"] > 0.05);
        assert!(r.residuals["right_unit"] > 0.05);
    }

    #[test]
    fn classifiers() {
        assert!(catalog("finite:Z4-R2").unwrap().classify_etale(50, 1).unwrap().holds);
        assert!(!catalog("pair:R1").unwrap().classify_etale(50, 1).unwrap().holds);
        assert!(catalog("unit:R1").unwrap().classify_etale(50, 1).unwrap().holds);
        assert!(catalog("action:R-S1").unwrap().classify_locally_transitive(50, 1).unwrap().holds);
        assert!(catalog("pair:R2").unwrap().classify_locally_transitive(50, 1).unwrap().holds);
        assert!(!catalog("unit:R1").unwrap().classify_locally_transitive(50, 1).unwrap().holds);
    }

    #[test]
    fn bundle_is_totally_intransitive() {
        let g = catalog("bundle:S1xS1").unwrap();
        assert!(!g.classify_locally_transitive(20, 1).unwrap().holds);
        assert!(!g.classify_surjective_on_samples(5, 1).unwrap().holds);
        assert!(catalog("pair:S1").unwrap().classify_surjective_on_samples(20, 1).unwrap().holds);
        assert!(catalog("action:R-S1").unwrap().classify_surjective_on_samples(20, 1).unwrap().holds);
        assert!(catalog("action:SO3-S2").unwrap().classify_surjective_on_samples(10, 1).unwrap().holds);
    }

    #[test]
    fn submersions_and_naturality() {
        for id in catalog_ids() {
            let g = catalog(id).unwrap();
            assert!(g.check_submersions(30, 4).unwrap().holds, "{id}");
            assert!(g.anchor_naturality(100, 4).unwrap() < 1e-12, "{id}");
        }
    }

    #[test]
    fn isotropy_examples() {
        let g = catalog("finite:Z4-R2").unwrap();
        assert_eq!(g.isotropy_group(&[0.0, 0.0]).unwrap().order(), 4);
        assert_eq!(g.isotropy_group(&[1.0, 0.0]).unwrap().order(), 1);
        let r = catalog("finite:Z2-R1").unwrap();
        assert_eq!(r.isotropy_group(&[0.0]).unwrap().order(), 2);
        assert!(catalog("pair:R1").unwrap().isotropy_group(&[0.0]).is_err());
    }

    #[test]
    fn restrictions() {
        let g = catalog("pair:R1").unwrap();
        let r = g.restrict(OpenSet::Box { lo: vec![0.0], hi: vec![1.0] });
        let rep = r.check_axioms(200, 9).unwrap();
        assert!(rep.max_residual() <= 1e-12);
        assert!(r.contains_arrow(&[0.2, 0.9]));
        assert!(!r.contains_arrow(&[0.2, 1.5]));
        let e = g.restrict(OpenSet::Empty);
        assert_eq!(e.check_axioms(100, 1).unwrap().n_samples, 0);
        let all = g.restrict(OpenSet::All);
        assert!(all.contains_arrow(&[-5.0, 7.0]));
    }
}
