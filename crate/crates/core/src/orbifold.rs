//! Finite action groupoids `Γ ⋉ M`: local action form around a point, path
//! lifting through the orbit map, and the two-chart atlas obstruction.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::current::{Certificate, Verdict};
use crate::error::{Error, Result};
use crate::geom::{Manifold, TOL_CHART};
use crate::groupoid::{FiniteGroup, LieGroupoid};
use crate::linalg::dist;
use crate::mapping::{GridKind, GridMap, GridSpec};
use crate::seed::stream_rng;

pub const MAX_HALVINGS: usize = 40;
pub const N_VERIFY: usize = 500;

fn finite(gpd: &LieGroupoid) -> Result<&FiniteGroup> {
    gpd.finite_group()
        .ok_or_else(|| Error::Unsupported(format!("{} is not a finite action groupoid", gpd.id)))
}

fn arrow(k: usize, y: &[f64]) -> Vec<f64> {
    let mut a = vec![k as f64];
    a.extend_from_slice(y);
    a
}

/// `𝒢|_N ≅ G_x ⋉ N` around `center`, with `N` the open ball of `radius`.
#[derive(Clone, Debug, Serialize)]
pub struct LocalActionForm {
    pub groupoid: String,
    pub center: Vec<f64>,
    /// Elements of `Γ` fixing the centre.
    pub isotropy: Vec<usize>,
    pub radius: f64,
    pub halvings: usize,
    pub n_verify: usize,
    pub residuals: LocalActionResiduals,
    #[serde(skip)]
    group: FiniteGroup,
    #[serde(skip)]
    base: Manifold,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct LocalActionResiduals {
    /// `δ_g ∘ δ_h = δ_{gh}` and `δ_e = id`.
    pub action: f64,
    /// `Φ⁻¹ ∘ Φ = id` on arrows over `N × N` and `Φ ∘ Φ⁻¹ = id` on `G_x × N`.
    pub bijectivity: f64,
    /// `Φ(γ₁γ₂) = Φ(γ₁)·Φ(γ₂)`.
    pub multiplicativity: f64,
    /// `β(γ) = δ_g(α(γ))` for `γ ∈ O_g`.
    pub anchor: f64,
}

impl LocalActionResiduals {
    pub fn max(&self) -> f64 {
        self.action.max(self.bijectivity).max(self.multiplicativity).max(self.anchor)
    }
}

/// Uniform sample of the ball of radius `r` about `x` in a chart of `m`.
fn sample_ball<R: Rng + ?Sized>(m: &Manifold, x: &[f64], r: f64, rng: &mut R) -> Result<Vec<f64>> {
    let c = m.best_chart(x)?;
    let z = m.chart_forward(c, x);
    for _ in 0..1000 {
        let w: Vec<f64> = z.iter().map(|v| v + rng.gen_range(-r..r)).collect();
        let y = m.chart_inverse(c, &w);
        if dist(&y, x) < r {
            return Ok(y);
        }
    }
    Err(Error::SamplingFailure("empty neighbourhood sample".into()))
}

pub fn local_action_form(gpd: &LieGroupoid, center: &[f64]) -> Result<LocalActionForm> {
    let grp = finite(gpd)?.clone();
    let iso = gpd.isotropy_group(center)?.elements;
    let others = (0..grp.order())
        .filter(|k| !iso.contains(k))
        .map(|k| dist(&grp.act(k, center), center))
        .fold(f64::INFINITY, f64::min);
    let mut radius = if others.is_finite() { others } else { 1.0 };
    let mut form = LocalActionForm {
        groupoid: gpd.id.clone(),
        center: center.to_vec(),
        isotropy: iso,
        radius,
        halvings: 0,
        n_verify: N_VERIFY,
        residuals: LocalActionResiduals::default(),
        group: grp,
        base: gpd.base.clone(),
    };
    for halvings in 0..=MAX_HALVINGS {
        form.radius = radius;
        form.halvings = halvings;
        if form.neighbourhood_admissible(gpd)? {
            form.residuals = form.verify(gpd)?;
            return Ok(form);
        }
        radius *= 0.5;
    }
    Err(Error::DegenerateNeighborhood { halvings: MAX_HALVINGS })
}

impl LocalActionForm {
    pub fn contains(&self, y: &[f64]) -> bool {
        dist(y, &self.center) < self.radius
    }

    /// `δ_g = β ∘ (α|_{W_g})⁻¹` on `N`.
    pub fn delta(&self, gpd: &LieGroupoid, g: usize, y: &[f64]) -> Result<Vec<f64>> {
        if !self.isotropy.contains(&g) {
            return Err(Error::DomainViolation(format!("{g} is not in the isotropy group")));
        }
        if !self.contains(y) {
            return Err(Error::DomainViolation("point outside the neighbourhood".into()));
        }
        Ok(gpd.beta_of(&self.alpha_section(g, y)))
    }

    /// Inverse of `α` on the sheet `W_g` through `(g, x)`.
    fn alpha_section(&self, g: usize, y: &[f64]) -> Vec<f64> {
        arrow(g, y)
    }

    /// Arrows `γ` with `α(γ) = y` and `β(γ) ∈ N`.
    fn arrows_from(&self, gpd: &LieGroupoid, y: &[f64]) -> Vec<Vec<f64>> {
        (0..self.group.order()).map(|k| arrow(k, y)).filter(|a| self.contains(&gpd.beta_of(a))).collect()
    }

    /// `Φ(γ) = (g, α(γ))` for `γ ∈ O_g`.
    pub fn phi(&self, gpd: &LieGroupoid, gamma: &[f64]) -> Result<(usize, Vec<f64>)> {
        let (a, b) = (gpd.alpha_of(gamma), gpd.beta_of(gamma));
        if !self.contains(&a) || !self.contains(&b) {
            return Err(Error::DomainViolation("arrow not over the neighbourhood".into()));
        }
        let g = self.group.index_of(gamma[0]);
        if !self.isotropy.contains(&g) {
            return Err(Error::DomainViolation("arrow outside every sheet O_g".into()));
        }
        Ok((g, a))
    }

    pub fn phi_inverse(&self, g: usize, y: &[f64]) -> Vec<f64> {
        self.alpha_section(g, y)
    }

    /// `W_g W_h ⊂ W_{gh}` over `N`, invariance of `N` under `δ` and
    /// disjointness of the `O_g` from the other sheets, on the verification
    /// sample.
    fn neighbourhood_admissible(&self, gpd: &LieGroupoid) -> Result<bool> {
        for s in 0..N_VERIFY {
            let mut rng = stream_rng(0x0b1f0, s as u64);
            let y = sample_ball(&self.base, &self.center, self.radius, &mut rng)?;
            for &g in &self.isotropy {
                let gy = gpd.beta_of(&self.alpha_section(g, &y));
                if !self.contains(&gy) {
                    return Ok(false);
                }
                for &h in &self.isotropy {
                    let hy = gpd.beta_of(&self.alpha_section(h, &y));
                    let prod = gpd.mu_of(&self.alpha_section(g, &hy), &self.alpha_section(h, &y));
                    if self.group.index_of(prod[0]) != self.group.mul(g, h)
                        || !self.contains(&gpd.alpha_of(&prod))
                    {
                        return Ok(false);
                    }
                }
            }
            // O_g exhausts the arrows over N × N.
            if self.arrows_from(gpd, &y).len() != self.isotropy.len() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn verify(&self, gpd: &LieGroupoid) -> Result<LocalActionResiduals> {
        let mut r = LocalActionResiduals::default();
        for s in 0..N_VERIFY {
            let mut rng = stream_rng(0x0b1f1, s as u64);
            let y = sample_ball(&self.base, &self.center, self.radius, &mut rng)?;
            r.action = r.action.max(dist(&self.delta(gpd, 0, &y)?, &y));
            for &g in &self.isotropy {
                for &h in &self.isotropy {
                    let lhs = self.delta(gpd, g, &self.delta(gpd, h, &y)?)?;
                    let rhs = self.delta(gpd, self.group.mul(g, h), &y)?;
                    r.action = r.action.max(dist(&lhs, &rhs));
                }
            }
            let arrows = self.arrows_from(gpd, &y);
            for gamma in &arrows {
                let (g, a) = self.phi(gpd, gamma)?;
                r.bijectivity = r.bijectivity.max(dist(&self.phi_inverse(g, &a), gamma));
                r.anchor = r.anchor.max(dist(&gpd.beta_of(gamma), &self.delta(gpd, g, &a)?));
                for &h in &self.isotropy {
                    // γ₂ ∈ O_h with target α(γ) = y.
                    let src = self.delta(gpd, self.group.inverse[h], &y)?;
                    let gamma2 = self.phi_inverse(h, &src);
                    let (h2, a2) = self.phi(gpd, &gamma2)?;
                    let (gh, b) = self.phi(gpd, &gpd.mu_of(gamma, &gamma2))?;
                    let mis = if gh == self.group.mul(g, h2) { 0.0 } else { f64::INFINITY };
                    r.multiplicativity = r.multiplicativity.max(mis).max(dist(&b, &a2));
                }
            }
            for &g in &self.isotropy {
                let (g2, a) = self.phi(gpd, &self.phi_inverse(g, &y))?;
                let mis = if g2 == g { 0.0 } else { f64::INFINITY };
                r.bijectivity = r.bijectivity.max(mis).max(dist(&a, &y));
            }
            if arrows.len() != self.isotropy.len() {
                r.bijectivity = f64::INFINITY;
            }
        }
        Ok(r)
    }
}

/// Distance between the orbits `Γ.p` and `Γ.q`.
pub fn orbit_distance(grp: &FiniteGroup, p: &[f64], q: &[f64]) -> f64 {
    (0..grp.order()).map(|k| dist(&grp.act(k, p), q)).fold(f64::INFINITY, f64::min)
}

/// A path in `M/Γ` on a grid, one arbitrary orbit representative per node.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitSpacePath {
    pub grid: GridSpec,
    pub representatives: Vec<Vec<f64>>,
}

impl OrbitSpacePath {
    /// Checks that consecutive orbits are closer than the coherence radius.
    pub fn new(gpd: &LieGroupoid, grid: GridSpec, representatives: Vec<Vec<f64>>) -> Result<Self> {
        let grp = finite(gpd)?;
        if representatives.len() != grid.n {
            return Err(Error::Config(format!(
                "{} representatives for {} nodes",
                representatives.len(),
                grid.n
            )));
        }
        let delta = gpd.base.coherence_radius();
        for (i, j) in grid.edges() {
            if orbit_distance(grp, &representatives[i], &representatives[j]) >= delta {
                return Err(Error::CoherenceLost { index: i });
            }
        }
        Ok(OrbitSpacePath { grid, representatives })
    }
}

/// Lifts a path in `M/Γ`, given by arbitrary orbit representatives, to a
/// coherent grid map into `M` starting at `start`. Each node takes the
/// translate of the next representative nearest to the current lift; a
/// runner-up within `δ_coh/4` of the nearest is a branch ambiguity.
pub fn path_lift(gpd: &LieGroupoid, reps: &OrbitSpacePath, start: &[f64]) -> Result<GridMap> {
    let grp = finite(gpd)?;
    let m = &gpd.base;
    let delta = m.coherence_radius();
    let first = &reps.representatives[0];
    if orbit_distance(grp, first, start) > TOL_CHART {
        return Err(Error::StartNotInOrbit);
    }
    let mut lift: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 1..reps.grid.n {
        let prev = &lift[i - 1];
        let mut cands: Vec<(f64, Vec<f64>)> = (0..grp.order())
            .map(|k| {
                let p = grp.act(k, &reps.representatives[i]);
                (dist(&p, prev), p)
            })
            .collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0));
        if cands.len() > 1 && cands[1].0 - cands[0].0 < delta / 4.0 {
            return Err(Error::BranchAmbiguity { index: i });
        }
        if cands[0].0 >= delta {
            return Err(Error::CoherenceLost { index: i - 1 });
        }
        lift.push(cands.swap_remove(0).1);
    }
    if reps.grid.kind == GridKind::Circle && dist(&lift[reps.grid.n - 1], &lift[0]) >= delta {
        return Err(Error::LiftNotClosed);
    }
    GridMap::from_ambient(reps.grid, m, &lift)
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftReport {
    pub n_paths: usize,
    /// Largest orbit distance between the lift and the input representatives.
    pub projection_residual: f64,
    /// Largest `|lift(g·s) − g·lift(s)|`.
    pub equivariance_residual: f64,
    /// Smallest nodewise gap between lifts from distinct start translates.
    pub min_branch_gap: f64,
}

/// Random paths in `ℝ²/Γ` away from the fixed point, with every node
/// replaced by a random orbit representative.
pub fn check_path_lifting(
    gpd: &LieGroupoid,
    grid: GridSpec,
    n_paths: usize,
    seed: u64,
) -> Result<LiftReport> {
    let grp = finite(gpd)?.clone();
    let m = &gpd.base;
    let mut rep = LiftReport {
        n_paths: 0,
        projection_residual: 0.0,
        equivariance_residual: 0.0,
        min_branch_gap: f64::INFINITY,
    };
    for s in 0..n_paths {
        let mut rng = stream_rng(seed, s as u64);
        let path = loop {
            let c = crate::mapping::random_curve(grid, m, 1.0, &mut rng)?;
            let shift: Vec<f64> = (0..m.ambient_dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let c: Vec<Vec<f64>> =
                c.iter().map(|p| p.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
            if c.iter().all(|p| crate::linalg::norm(p) > 0.5) {
                break c;
            }
        };
        let reps: Vec<Vec<f64>> = path.iter().map(|p| grp.act(rng.gen_range(0..grp.order()), p)).collect();
        let reps = OrbitSpacePath::new(gpd, grid, reps)?;
        let start = path[0].clone();
        let base = path_lift(gpd, &reps, &start)?;
        for (l, r) in base.values.iter().zip(&reps.representatives) {
            rep.projection_residual = rep.projection_residual.max(orbit_distance(&grp, &l.ambient, r));
        }
        for g in 0..grp.order() {
            let other = path_lift(gpd, &reps, &grp.act(g, &start))?;
            for (a, b) in other.values.iter().zip(&base.values) {
                let gb = grp.act(g, &b.ambient);
                rep.equivariance_residual = rep.equivariance_residual.max(dist(&a.ambient, &gb));
                if g != 0 {
                    rep.min_branch_gap = rep.min_branch_gap.min(dist(&a.ambient, &b.ambient));
                }
            }
        }
        rep.n_paths += 1;
    }
    Ok(rep)
}

/// Chart label in the two-chart atlas of the circle: `A` covers
/// `S¹ \ {−1}` by the angle in `(−π, π)`, `B` covers `S¹ \ {1}` by the angle
/// in `(0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AtlasChart {
    A,
    B,
}

/// Coordinate of the angle `phi` in `chart`, if the point lies in its domain.
pub fn atlas_coordinate(chart: AtlasChart, phi: f64) -> Option<f64> {
    let t = match chart {
        AtlasChart::A => (phi + PI).rem_euclid(2.0 * PI) - PI,
        AtlasChart::B => phi.rem_euclid(2.0 * PI),
    };
    let (lo, hi) = match chart {
        AtlasChart::A => (-PI, PI),
        AtlasChart::B => (0.0, 2.0 * PI),
    };
    (t > lo + TOL_CHART && t < hi - TOL_CHART).then_some(t)
}

/// Component of a grid loop into the disjoint union of the chart domains;
/// fails at the first edge that changes component or breaks coherence.
pub fn atlas_loop_component(grid: GridSpec, values: &[(AtlasChart, f64)]) -> Result<AtlasChart> {
    let delta = Manifold::Euclidean(1).coherence_radius();
    for (i, j) in grid.edges() {
        let ((ci, ti), (cj, tj)) = (values[i], values[j]);
        if ci != cj || (ti - tj).abs() >= delta {
            return Err(Error::CoherenceLost { index: i });
        }
    }
    Ok(values[0].0)
}

/// The identity of the circle is not a grid loop into the unit space
/// `U_A ⊔ U_B` of the atlas groupoid: a coherent loop keeps one label, and
/// under either label the identity breaks coherence.
pub fn atlas_connectivity_negative_test(grid: GridSpec) -> Result<Certificate> {
    if grid.kind != GridKind::Circle {
        return Err(Error::Unsupported("atlas test needs a circle grid".into()));
    }
    let mut scans = Vec::new();
    let mut all_break = true;
    for chart in [AtlasChart::A, AtlasChart::B] {
        let coords: Vec<Option<f64>> = (0..grid.n).map(|i| atlas_coordinate(chart, grid.node(i))).collect();
        let outcome = match coords.iter().position(|c| c.is_none()) {
            Some(i) => json!({ "chart": chart, "uncovered_node": i }),
            None => {
                let vals: Vec<(AtlasChart, f64)> = coords.iter().map(|c| (chart, c.unwrap())).collect();
                match atlas_loop_component(grid, &vals) {
                    Err(Error::CoherenceLost { index }) => {
                        json!({ "chart": chart, "coherence_break": index })
                    }
                    Err(e) => return Err(e),
                    Ok(_) => {
                        all_break = false;
                        json!({ "chart": chart, "realized": true })
                    }
                }
            }
        };
        scans.push(outcome);
    }
    Ok(Certificate {
        kind: "atlas-connectivity".into(),
        inputs: json!({ "grid": grid, "atlas": "two angle charts of S1", "target": "identity" }),
        witness_data: json!({
            "label_changes_break_coherence": true,
            "uncovered_points": { "A": [-1.0, 0.0], "B": [1.0, 0.0] },
            "scans": scans,
        }),
        verdict: if all_break { Verdict::Obstructed } else { Verdict::Failed },
        max_residual: 0.0,
    })
}
