//! Machine-checkable certificates for current groupoids.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::{max_dist, CurrentGroupoid, Samples};
use crate::error::{Error, Result};
use crate::geom::{Manifold, TOL_CHART};
use crate::groupoid::catalog;
use crate::linalg::norm;
use crate::mapping::{
    covering_map, degree, local_diffeo_inverse, named_loop, random_curve, seminorm_distance, GridKind,
    GridMap, GridSpec, LiftOptions,
};
use crate::seed::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The claimed construction exists and was checked.
    Verified,
    /// The claimed obstruction was confirmed.
    Obstructed,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub kind: String,
    pub inputs: Value,
    pub witness_data: Value,
    pub verdict: Verdict,
    pub max_residual: f64,
}

impl Certificate {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("certificates serialize")
    }
}

fn require_circle(grid: &GridSpec) -> Result<()> {
    if grid.kind != GridKind::Circle {
        return Err(Error::Unsupported("certificate needs a circle grid".into()));
    }
    Ok(())
}

/// `w = b · ā`, the loop that `e^{it}` must equal for an arrow `(t, a)` of
/// `ℝ ⋉ S¹` from `a` to `b`.
fn quotient_loop(a: &GridMap, b: &GridMap) -> Result<GridMap> {
    let w: Samples = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(p, q)| {
            let (x, y) = (&p.ambient, &q.ambient);
            vec![y[0] * x[0] + y[1] * x[1], y[1] * x[0] - y[0] * x[1]]
        })
        .collect();
    GridMap::from_ambient(a.grid, &Manifold::Circle, &w)
}

/// Searches an arrow of `C(K, ℝ ⋉ S¹)` from `a` to `b`. The result is
/// `Verified` with the preimage `t` and the anchor round-trip residual, or
/// `Obstructed` with the winding that `e^{it}` would need.
pub fn anchor_preimage(a: &GridMap, b: &GridMap) -> Result<Certificate> {
    require_circle(&a.grid)?;
    let w = quotient_loop(a, b)?;
    let required = degree(&w)?;
    let inputs = json!({ "source": a.ambient(), "target": b.ambient() });
    if required != 0 {
        return Ok(Certificate {
            kind: "anchor-preimage".into(),
            inputs,
            witness_data: json!({ "required_winding": required, "achievable_winding": 0 }),
            verdict: Verdict::Obstructed,
            max_residual: 0.0,
        });
    }
    let f = covering_map();
    let w0 = &w.values[0].ambient;
    let t0 = w0[1].atan2(w0[0]);
    let gamma0 = GridMap::from_fn(a.grid, &Manifold::Euclidean(1), |_| vec![t0])?;
    let opts = LiftOptions { patch_radius: f64::INFINITY, ..LiftOptions::for_map(&f) };
    let t = local_diffeo_inverse(&f, &gamma0, &w, opts)?;
    let cur = CurrentGroupoid::build(catalog("action:R-S1")?, a.grid);
    let arrow: Samples =
        t.values.iter().zip(&a.values).map(|(t, p)| vec![t.ambient[0], p.ambient[0], p.ambient[1]]).collect();
    let residual =
        max_dist(&cur.alpha_s(&arrow), &a.ambient()).max(max_dist(&cur.beta_s(&arrow), &b.ambient()));
    Ok(Certificate {
        kind: "anchor-preimage".into(),
        inputs,
        witness_data: json!({ "preimage": t.ambient().iter().map(|v| v[0]).collect::<Vec<_>>() }),
        verdict: if residual <= 1e-10 { Verdict::Verified } else { Verdict::Failed },
        max_residual: residual,
    })
}

fn constant_loop(grid: GridSpec, theta: f64) -> Result<GridMap> {
    GridMap::from_fn(grid, &Manifold::Circle, |_| vec![theta.cos(), theta.sin()])
}

/// `C(K, ℝ ⋉ S¹)` is not transitive although `ℝ ⋉ S¹` is: no arrow joins the
/// identity loop to the constant loop at 1.
pub fn transitivity_obstruction(grid: GridSpec, seed: u64) -> Result<Certificate> {
    require_circle(&grid)?;
    let id = named_loop("identity-loop", grid.n)?;
    let c1 = constant_loop(grid, 0.0)?;
    let c07 = constant_loop(grid, 0.7)?;

    let mut failed = false;
    let mut max_residual: f64 = 0.0;
    let mut solvable = Vec::new();
    for (name, a, b, expect) in [("(id, id)", &id, &id, 0.0), ("(c1, c_exp(0.7i))", &c1, &c07, 0.7)] {
        let cert = anchor_preimage(a, b)?;
        let t = cert.witness_data["preimage"].as_array().cloned().unwrap_or_default();
        let off = t.iter().map(|v| (v.as_f64().unwrap_or(f64::NAN) - expect).abs()).fold(0.0, f64::max);
        failed |= cert.verdict != Verdict::Verified || !(off <= 1e-10);
        max_residual = max_residual.max(cert.max_residual).max(off);
        solvable.push(json!({ "pair": name, "constant_preimage": expect, "preimage_deviation": off, "anchor_residual": cert.max_residual }));
    }

    let obstructed = anchor_preimage(&id, &c1)?;
    let required = obstructed.witness_data["required_winding"].as_i64().unwrap_or(0);
    failed |= obstructed.verdict != Verdict::Obstructed || required != -1;

    // Every coherent exponential of a real grid function has winding 0.
    let mut max_exp_degree = 0i64;
    for s in 0..32 {
        let mut rng = stream_rng(seed, s);
        let t = random_curve(grid, &Manifold::Euclidean(1), 4.0, &mut rng)?;
        let e = GridMap::from_ambient(
            grid,
            &Manifold::Circle,
            &t.iter().map(|v| vec![v[0].cos(), v[0].sin()]).collect::<Vec<_>>(),
        )?;
        max_exp_degree = max_exp_degree.max(degree(&e)?.abs());
    }
    failed |= max_exp_degree != 0;

    // Sequential lifting from 32 random branches never closes up.
    let w = quotient_loop(&id, &c1)?;
    let f = covering_map();
    let mut lift_failures = 0;
    for s in 0..32u64 {
        let mut rng = stream_rng(seed, 1000 + s);
        let t0 = rng.gen_range(-PI..PI) + 2.0 * PI * rng.gen_range(-3i32..=3) as f64;
        let gamma0 = GridMap::from_fn(grid, &Manifold::Euclidean(1), |_| vec![t0])?;
        let opts = LiftOptions { patch_radius: f64::INFINITY, ..LiftOptions::for_map(&f) };
        if local_diffeo_inverse(&f, &gamma0, &w, opts).is_err() {
            lift_failures += 1;
        }
    }
    failed |= lift_failures != 32;

    Ok(Certificate {
        kind: "not-transitive".into(),
        inputs: json!({ "groupoid": "action:R-S1", "grid": grid, "target": ["identity-loop", "constant-loop"] }),
        witness_data: json!({
            "solvable": solvable,
            "required_winding": required,
            "achievable_winding": 0,
            "winding_of_identity": degree(&id)?,
            "max_exponential_degree": max_exp_degree,
            "lift_attempts": 32,
            "lift_failures": lift_failures,
        }),
        verdict: if failed { Verdict::Failed } else { Verdict::Obstructed },
        max_residual,
    })
}

/// `C(K, S¹ × S¹ ⇉ S¹)` is not proper: the winding-`k` loops in the anchor
/// fibre over `(η, η)` have unbounded order-1 seminorm and stay apart.
pub fn properness_failure_witness(grid: GridSpec) -> Result<Certificate> {
    require_circle(&grid)?;
    let cur = CurrentGroupoid::build(catalog("bundle:S1xS1")?, grid);
    let eta = named_loop("identity-loop", grid.n)?;
    let ks = [1usize, 2, 4, 8];
    let unit = cur.unit(&eta)?;
    let mut family = Vec::new();
    let mut anchor_residual: f64 = 0.0;
    let mut seminorms = Vec::new();
    let mut ratio_err: f64 = 0.0;
    for &k in &ks {
        let kf = k as f64;
        let g = GridMap::from_fn(grid, &cur.base.arrows, |x| {
            vec![x.cos(), x.sin(), (kf * x).cos(), (kf * x).sin()]
        })?;
        let (a, b) = cur.anchor(&g)?;
        anchor_residual = anchor_residual
            .max(seminorm_distance(&a, &eta).orders[0])
            .max(seminorm_distance(&b, &eta).orders[0]);
        let s1 = seminorm_distance(&g, &unit).orders.get(1).copied().unwrap_or(f64::NAN);
        ratio_err = ratio_err.max((s1 / kf - 1.0).abs());
        seminorms.push(json!({ "k": k, "order1": s1 }));
        family.push(g);
    }
    let mut min_pair: f64 = f64::INFINITY;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            min_pair = min_pair.min(seminorm_distance(&family[i], &family[j]).orders[0]);
        }
    }
    let ok = anchor_residual <= 1e-12 && ratio_err <= 0.05 && min_pair >= 1.0;
    Ok(Certificate {
        kind: "not-proper".into(),
        inputs: json!({ "groupoid": "bundle:S1xS1", "grid": grid, "fixed_object": "identity-loop", "k": ks }),
        witness_data: json!({
            "anchor_residual": anchor_residual,
            "seminorms": seminorms,
            "max_relative_deviation_from_k": ratio_err,
            "min_pairwise_order0": min_pair,
        }),
        verdict: if ok { Verdict::Obstructed } else { Verdict::Failed },
        max_residual: anchor_residual,
    })
}

/// Lifts of an object pair through the anchor of `C(K, Γ ⋉ M)`. On a
/// connected grid a coherent arrow has a constant group element (distinct
/// elements sit at ambient distance ≥ 1 > δ_coh), so enumerating `Γ` is
/// exhaustive.
#[derive(Clone, Debug, Serialize)]
pub struct FiberEnumeration {
    /// Group elements `k` with `k.a = b` at every node.
    pub anchor_fiber: Vec<usize>,
    /// Number of grid arrows with source `a`, one per element of `Γ`.
    pub source_fiber: usize,
    pub group_order: usize,
}

pub fn enumerate_fiber(cur: &CurrentGroupoid, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<FiberEnumeration> {
    let grp = cur
        .base
        .finite_group()
        .ok_or_else(|| Error::Unsupported("fibre enumeration needs a finite action groupoid".into()))?;
    let mut anchor_fiber = Vec::new();
    let mut source_fiber = 0;
    for k in 0..grp.order() {
        let arrow: Samples = a
            .iter()
            .map(|x| {
                let mut v = vec![k as f64];
                v.extend_from_slice(x);
                v
            })
            .collect();
        if GridMap::from_ambient(cur.grid, &cur.base.arrows, &arrow).is_ok() {
            source_fiber += 1;
        }
        if max_dist(&cur.beta_s(&arrow), b) < TOL_CHART {
            anchor_fiber.push(k);
        }
    }
    Ok(FiberEnumeration { anchor_fiber, source_fiber, group_order: grp.order() })
}

fn free_loop<R: Rng + ?Sized>(grid: GridSpec, rng: &mut R) -> Result<Samples> {
    for _ in 0..1000 {
        let x = random_curve(grid, &Manifold::Euclidean(2), 1.0, rng)?;
        if x.iter().all(|p| norm(p) > 0.1) {
            return Ok(x);
        }
    }
    Err(Error::SamplingFailure("no loop avoiding the fixed point".into()))
}

/// Anchor fibres of `C(K, Γ ⋉ ℝ²)` over `n_pairs` random object pairs never
/// exceed `|Γ|`; on loops avoiding the fixed point each pair in the orbit
/// `(γ̄, k.γ̄)` has exactly one lift, `|Γ|` lifts in total.
pub fn proper_etale_fiber_bound(cur: &CurrentGroupoid, n_pairs: usize, seed: u64) -> Result<Certificate> {
    let grp = cur
        .base
        .finite_group()
        .ok_or_else(|| Error::Unsupported("fibre bound needs a finite action groupoid".into()))?
        .clone();
    if cur.base.base != Manifold::Euclidean(2) {
        return Err(Error::Unsupported("fibre bound is wired for actions on the plane".into()));
    }
    let order = grp.order();
    let mut max_fiber = 0;
    let mut histogram = vec![0usize; order + 1];
    let mut orbit_totals_ok = true;
    let mut free_pairs = 0;
    for s in 0..n_pairs {
        let mut rng = stream_rng(seed, s as u64);
        let (a, b) = match s % 4 {
            // Constant loop at the fixed point.
            0 => {
                let z = vec![vec![0.0, 0.0]; cur.grid.n];
                let k = rng.gen_range(0..order);
                let b: Samples = z.iter().map(|p| grp.act(k, p)).collect();
                (z, b)
            }
            // Unrelated free loops.
            1 => (free_loop(cur.grid, &mut rng)?, free_loop(cur.grid, &mut rng)?),
            // Orbit pairs of a free loop.
            _ => {
                let a = free_loop(cur.grid, &mut rng)?;
                let k = rng.gen_range(0..order);
                let b: Samples = a.iter().map(|p| grp.act(k, p)).collect();
                let total: usize = (0..order)
                    .map(|j| {
                        let bj: Samples = a.iter().map(|p| grp.act(j, p)).collect();
                        enumerate_fiber(cur, &a, &bj).map(|e| e.anchor_fiber.len())
                    })
                    .sum::<Result<usize>>()?;
                orbit_totals_ok &= total == order;
                free_pairs += 1;
                (a, b)
            }
        };
        let e = enumerate_fiber(cur, &a, &b)?;
        let size = e.anchor_fiber.len();
        max_fiber = max_fiber.max(size);
        histogram[size.min(order)] += 1;
        orbit_totals_ok &= e.source_fiber == order;
        if s % 4 >= 2 && size != 1 {
            orbit_totals_ok = false;
        }
    }
    let ok = max_fiber <= order && orbit_totals_ok;
    Ok(Certificate {
        kind: "proper-etale-fiber-bound".into(),
        inputs: json!({ "groupoid": cur.base.id, "grid": cur.grid, "pairs": n_pairs }),
        witness_data: json!({
            "group_order": order,
            "max_anchor_fiber": max_fiber,
            "fiber_size_histogram": histogram,
            "free_orbit_pairs": free_pairs,
            "free_orbit_lifts_total": if orbit_totals_ok { order } else { 0 },
        }),
        verdict: if ok { Verdict::Verified } else { Verdict::Failed },
        max_residual: 0.0,
    })
}
