//! Current groupoids `C^ℓ(K, 𝒢)`: grid maps into the arrows of a Lie
//! groupoid with every structure map applied nodewise.

mod certificates;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{Point, TOL_CHART};
use crate::groupoid::{AxiomReport, GroupoidKind, LieGroupoid, OpenSet, AXIOM_NAMES};
use crate::linalg::{dist, rank_info};
use crate::mapping::{random_curve, GridMap, GridSpec};
use crate::seed::stream_rng;

pub use certificates::{
    anchor_preimage, enumerate_fiber, proper_etale_fiber_bound, properness_failure_witness,
    transitivity_obstruction, Certificate, FiberEnumeration, Verdict,
};

/// Ambient samples of a grid map, one vector per node.
pub type Samples = Vec<Vec<f64>>;

/// Membership rule of a restricted current groupoid on object grid maps.
#[derive(Clone, Debug)]
pub enum CurrentRestriction {
    Whole,
    /// `⌊K, Ω⌋`: the whole image lies in `Ω`.
    Floor(OpenSet),
    /// `𝓘_K(Ω)`: the image meets `Ω`.
    Intersect(OpenSet),
}

#[derive(Clone, Debug)]
pub struct CurrentGroupoid {
    pub base: LieGroupoid,
    pub grid: GridSpec,
    pub restriction: CurrentRestriction,
}

/// Result of a nodewise rank test over sampled grid arrows.
#[derive(Clone, Debug, Serialize)]
pub struct LiftingReport {
    pub holds: bool,
    pub n_arrows: usize,
    pub n_nodes: usize,
    /// Smallest singular value seen over all blocks.
    pub sigma_min: f64,
    /// Blocks where the current-level verdict and the base classifier at the
    /// same arrow disagree.
    pub disagreements: usize,
}

fn map_nodes(f: impl Fn(&[f64]) -> Vec<f64>, a: &[Vec<f64>]) -> Samples {
    a.iter().map(|x| f(x)).collect()
}

fn max_dist(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| dist(x, y)).fold(0.0, f64::max)
}

impl CurrentGroupoid {
    pub fn build(base: LieGroupoid, grid: GridSpec) -> CurrentGroupoid {
        CurrentGroupoid { base, grid, restriction: CurrentRestriction::Whole }
    }

    pub fn restriction_subgroupoid(&self, r: CurrentRestriction) -> CurrentGroupoid {
        CurrentGroupoid { restriction: r, ..self.clone() }
    }

    pub fn contains_object(&self, x: &[Vec<f64>]) -> bool {
        match &self.restriction {
            CurrentRestriction::Whole => x.iter().all(|p| self.base.contains_object(p)),
            CurrentRestriction::Floor(o) => x.iter().all(|p| o.contains(p) && self.base.contains_object(p)),
            CurrentRestriction::Intersect(o) => {
                x.iter().all(|p| self.base.contains_object(p)) && x.iter().any(|p| o.contains(p))
            }
        }
    }

    pub fn contains_arrow(&self, g: &[Vec<f64>]) -> bool {
        self.contains_object(&self.alpha_s(g)) && self.contains_object(&self.beta_s(g))
    }

    fn arrow_delta(&self) -> f64 {
        self.base.arrows.coherence_radius()
    }

    fn coherent(&self, a: &[Vec<f64>], delta: f64) -> bool {
        self.grid.edges().all(|(i, j)| dist(&a[i], &a[j]) < delta)
    }

    pub fn alpha_s(&self, g: &[Vec<f64>]) -> Samples {
        map_nodes(|x| self.base.alpha_of(x), g)
    }
    pub fn beta_s(&self, g: &[Vec<f64>]) -> Samples {
        map_nodes(|x| self.base.beta_of(x), g)
    }
    pub fn iota_s(&self, g: &[Vec<f64>]) -> Samples {
        map_nodes(|x| self.base.iota_of(x), g)
    }
    pub fn unit_s(&self, x: &[Vec<f64>]) -> Samples {
        map_nodes(|p| self.base.unit_of(p), x)
    }
    pub fn mu_s(&self, g: &[Vec<f64>], h: &[Vec<f64>]) -> Samples {
        g.iter().zip(h).map(|(a, b)| self.base.mu_of(a, b)).collect()
    }

    fn to_objects(&self, a: &[Vec<f64>]) -> Result<GridMap> {
        GridMap::from_ambient(self.grid, &self.base.base, a)
    }

    fn to_arrows(&self, a: &[Vec<f64>]) -> Result<GridMap> {
        GridMap::from_ambient(self.grid, &self.base.arrows, a)
    }

    pub fn alpha(&self, g: &GridMap) -> Result<GridMap> {
        self.to_objects(&self.alpha_s(&g.ambient()))
    }

    pub fn beta(&self, g: &GridMap) -> Result<GridMap> {
        self.to_objects(&self.beta_s(&g.ambient()))
    }

    pub fn anchor(&self, g: &GridMap) -> Result<(GridMap, GridMap)> {
        Ok((self.alpha(g)?, self.beta(g)?))
    }

    pub fn inverse(&self, g: &GridMap) -> Result<GridMap> {
        self.to_arrows(&self.iota_s(&g.ambient()))
    }

    pub fn unit(&self, x: &GridMap) -> Result<GridMap> {
        self.to_arrows(&self.unit_s(&x.ambient()))
    }

    /// Nodewise product; composable iff composable at every node.
    pub fn compose(&self, g: &GridMap, h: &GridMap) -> Result<GridMap> {
        let (ga, ha) = (g.ambient(), h.ambient());
        let mismatch = max_dist(&self.alpha_s(&ga), &self.beta_s(&ha));
        if mismatch >= TOL_CHART {
            return Err(Error::NotComposable { mismatch });
        }
        self.to_arrows(&self.mu_s(&ga, &ha))
    }

    /// A random object grid map inside the restriction.
    pub fn sample_object<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Samples> {
        // Objects keep half the arrow coherence radius so that arrows over
        // them have room for a fibre component.
        let delta = 0.5 * self.arrow_delta();
        let mut amp = 1.0;
        for attempt in 0..10_000 {
            let x = random_curve(self.grid, &self.base.base, amp, rng)?;
            if self.contains_object(&x) && self.coherent(&self.unit_s(&x), delta) {
                return Ok(x);
            }
            if attempt % 10 == 9 {
                amp *= 0.7;
            }
        }
        Err(Error::SamplingFailure(format!("no object loops of {} in the restriction", self.base.id)))
    }

    /// A coherent grid arrow with target `x`, built nodewise from a random
    /// loop in the target fibre.
    pub fn sample_arrow_to<R: Rng + ?Sized>(&self, x: &[Vec<f64>], rng: &mut R) -> Result<Samples> {
        let delta = self.arrow_delta();
        let mut amp = 1.0;
        for _ in 0..200 {
            let f = random_curve(self.grid, &self.base.fiber, amp, rng)?;
            let h: Samples = x.iter().zip(&f).map(|(p, q)| (self.base.arrow_with_target)(p, q)).collect();
            if self.coherent(&h, delta) && self.contains_arrow(&h) {
                return Ok(h);
            }
            amp *= 0.8;
        }
        Err(Error::SamplingFailure(format!("no coherent arrows of the current groupoid of {}", self.base.id)))
    }

    pub fn sample_arrow_samples<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Samples> {
        let x = self.sample_object(rng)?;
        self.sample_arrow_to(&x, rng)
    }

    pub fn sample_arrow<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GridMap> {
        let g = self.sample_arrow_samples(rng)?;
        self.to_arrows(&g)
    }

    /// Composable triple of grid arrows.
    pub fn sample_triple<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<[Samples; 3]> {
        let g = self.sample_arrow_samples(rng)?;
        let h = self.sample_arrow_to(&self.alpha_s(&g), rng)?;
        let k = self.sample_arrow_to(&self.alpha_s(&h), rng)?;
        Ok([g, h, k])
    }

    /// The groupoid laws evaluated on grid arrows with the pointwise
    /// operations; residuals are sup-norms over nodes. Sample `s` draws from
    /// stream `s` of `seed`.
    pub fn check_axioms(&self, n_samples: usize, seed: u64) -> Result<AxiomReport> {
        let mut report = AxiomReport::empty();
        if self.base.is_known_empty() {
            return Ok(report);
        }
        for s in 0..n_samples {
            let mut rng = stream_rng(seed, s as u64);
            let [g, h, k] = self.sample_triple(&mut rng)?;
            let r = self.triple_residuals(&g, &h, &k);
            for (name, v) in AXIOM_NAMES.iter().zip(r) {
                let e = report.residuals.get_mut(*name).unwrap();
                *e = e.max(v);
            }
            report.n_samples += 1;
        }
        Ok(report)
    }

    fn triple_residuals(&self, g: &[Vec<f64>], h: &[Vec<f64>], k: &[Vec<f64>]) -> [f64; 9] {
        let gh = self.mu_s(g, h);
        let hk = self.mu_s(h, k);
        let (ag, bg) = (self.alpha_s(g), self.beta_s(g));
        let (ua, ub) = (self.unit_s(&ag), self.unit_s(&bg));
        let ig = self.iota_s(g);
        [
            max_dist(&self.mu_s(&gh, k), &self.mu_s(g, &hk)),
            max_dist(&self.mu_s(&ub, g), g),
            max_dist(&self.mu_s(g, &ua), g),
            max_dist(&self.mu_s(&ig, g), &ua),
            max_dist(&self.mu_s(g, &ig), &ub),
            max_dist(&self.alpha_s(&gh), &self.alpha_s(h)),
            max_dist(&self.beta_s(&gh), &bg),
            max_dist(&self.alpha_s(&ua), &ag),
            max_dist(&self.beta_s(&ua), &ag),
        ]
    }

    /// Nodewise rank test of `map` (α or the anchor) over sampled arrows,
    /// compared with the base classifier's verdict at each node.
    fn lifting(&self, n_arrows: usize, seed: u64, anchor: bool) -> Result<LiftingReport> {
        let f = if anchor { self.base.anchor_map() } else { self.base.alpha_map() };
        let etale_dims = self.base.arrows.dim() == self.base.base.dim();
        let mut report = LiftingReport {
            holds: true,
            n_arrows: 0,
            n_nodes: 0,
            sigma_min: f64::INFINITY,
            disagreements: 0,
        };
        for s in 0..n_arrows {
            let mut rng = stream_rng(seed, s as u64);
            let g = self.sample_arrow(&mut rng)?;
            for p in &g.values {
                let (j, _) = f.jacobian(p)?;
                let r = rank_info(&j);
                let block_ok = if anchor {
                    r.full_row_rank()
                } else {
                    etale_dims && r.full_row_rank() && r.full_column_rank()
                };
                let base_ok = self.base_verdict_at(p, anchor)?;
                if block_ok != base_ok {
                    report.disagreements += 1;
                }
                report.holds &= block_ok;
                report.sigma_min = report.sigma_min.min(r.sigma_min);
                report.n_nodes += 1;
            }
            report.n_arrows += 1;
        }
        Ok(report)
    }

    fn base_verdict_at(&self, p: &Point, anchor: bool) -> Result<bool> {
        if anchor {
            self.base.locally_transitive_at(p)
        } else {
            self.base.etale_at(p)
        }
    }

    /// Étale lifting: per-node Jacobians of `α_*` are invertible.
    pub fn etale_lifting(&self, n_arrows: usize, seed: u64) -> Result<LiftingReport> {
        self.lifting(n_arrows, seed, false)
    }

    /// Pointwise anchor rank: per-node anchor Jacobians have full row rank.
    pub fn anchor_rank_lifting(&self, n_arrows: usize, seed: u64) -> Result<LiftingReport> {
        self.lifting(n_arrows, seed, true)
    }
}

/// Largest commutation defect of a reindexing isomorphism over samples.
#[derive(Clone, Debug, Serialize)]
pub struct IsoReport {
    pub n_samples: usize,
    pub max_residual: f64,
    pub per_map: Vec<(String, f64)>,
}

fn split_nodes(a: &[Vec<f64>], at: usize) -> (Samples, Samples) {
    a.iter().map(|v| (v[..at].to_vec(), v[at..].to_vec())).unzip()
}

fn join_nodes(a: &[Vec<f64>], b: &[Vec<f64>]) -> Samples {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut v = x.clone();
            v.extend_from_slice(y);
            v
        })
        .collect()
}

fn record(per: &mut [(String, f64)], k: usize, v: f64) {
    per[k].1 = per[k].1.max(v);
}

fn iso_names() -> Vec<(String, f64)> {
    ["alpha", "beta", "mu", "iota", "unit"].iter().map(|s| (s.to_string(), 0.0)).collect()
}

/// `C(K, 𝒫(M)) ≅ 𝒫(C(K, M))`: a grid arrow of pairs is a pair of grid maps.
pub fn pair_iso(cur: &CurrentGroupoid, n_samples: usize, seed: u64) -> Result<IsoReport> {
    if !matches!(cur.base.kind, GroupoidKind::Pair) {
        return Err(Error::Unsupported("pair_iso needs a pair groupoid".into()));
    }
    let d = cur.base.base.ambient_dim();
    let mut per = iso_names();
    for s in 0..n_samples {
        let mut rng = stream_rng(seed, s as u64);
        let [g, h, _] = cur.sample_triple(&mut rng)?;
        // Pair groupoid of grid maps: (A, B) with α = B, β = A.
        let (ga, gb) = split_nodes(&g, d);
        let (_, hb) = split_nodes(&h, d);
        record(&mut per, 0, max_dist(&cur.alpha_s(&g), &gb));
        record(&mut per, 1, max_dist(&cur.beta_s(&g), &ga));
        record(&mut per, 2, max_dist(&cur.mu_s(&g, &h), &join_nodes(&ga, &hb)));
        record(&mut per, 3, max_dist(&cur.iota_s(&g), &join_nodes(&gb, &ga)));
        record(&mut per, 4, max_dist(&cur.unit_s(&ga), &join_nodes(&ga, &ga)));
    }
    let max_residual = per.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(IsoReport { n_samples, max_residual, per_map: per })
}

/// `C(K, H) ⋉ C(K, X) ≅ C(K, H ⋉ X)` with the loop group acting nodewise.
pub fn action_iso(cur: &CurrentGroupoid, n_samples: usize, seed: u64) -> Result<IsoReport> {
    let GroupoidKind::Action { group, act } = &cur.base.kind else {
        return Err(Error::Unsupported("action_iso needs an action groupoid".into()));
    };
    let hd = group.manifold().ambient_dim();
    let loop_act = |h: &[Vec<f64>], x: &[Vec<f64>]| -> Samples {
        join_nodes(h, x).iter().map(|v| act.eval(v)).collect()
    };
    let loop_mul = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Samples {
        a.iter().zip(b).map(|(p, q)| group.mul::<f64>(p, q)).collect()
    };
    let mut per = iso_names();
    for s in 0..n_samples {
        let mut rng = stream_rng(seed, s as u64);
        let [g, h, _] = cur.sample_triple(&mut rng)?;
        let (gh_, gx) = split_nodes(&g, hd);
        let (hh, hx) = split_nodes(&h, hd);
        record(&mut per, 0, max_dist(&cur.alpha_s(&g), &gx));
        record(&mut per, 1, max_dist(&cur.beta_s(&g), &loop_act(&gh_, &gx)));
        record(&mut per, 2, max_dist(&cur.mu_s(&g, &h), &join_nodes(&loop_mul(&gh_, &hh), &hx)));
        let inv: Samples = gh_.iter().map(|p| group.inv::<f64>(p)).collect();
        record(&mut per, 3, max_dist(&cur.iota_s(&g), &join_nodes(&inv, &loop_act(&gh_, &gx))));
        let e = vec![group.identity(); cur.grid.n];
        record(&mut per, 4, max_dist(&cur.unit_s(&gx), &join_nodes(&e, &gx)));
    }
    let max_residual = per.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(IsoReport { n_samples, max_residual, per_map: per })
}
