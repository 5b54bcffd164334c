//! Standard maps and grid maps used by the suites and the CLI.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{GridKind, GridMap, GridSection, GridSpec};
use crate::ad::{self, Scalar};
use crate::error::{Error, Result};
use crate::geom::{Manifold, Point, SmoothMap, Tangent};
use crate::lie_group::complex_mul;
use crate::{ambient_fn, generic_fn};

pub const NAMED_LOOPS: [&str; 4] = ["identity-loop", "constant-loop", "double-loop", "reverse-loop"];

/// Loops `S¹ → S¹` of degree 1, 0, 2 and -1 on the circle grid with `n` nodes.
pub fn named_loop(id: &str, n: usize) -> Result<GridMap> {
    let grid = GridSpec::new(GridKind::Circle, n, 2)?;
    let winding = match id {
        "identity-loop" => 1.0,
        "constant-loop" => 0.0,
        "double-loop" => 2.0,
        "reverse-loop" => -1.0,
        _ => return Err(Error::UnknownId(id.to_string())),
    };
    GridMap::from_fn(grid, &Manifold::Circle, |x| vec![(winding * x).cos(), (winding * x).sin()])
}

/// `z ↦ z²` on the circle.
pub fn circle_square() -> SmoothMap {
    SmoothMap::new("z^2", Manifold::Circle, Manifold::Circle, generic_fn!([] |z: S| complex_mul(z, z)))
}

/// The inclusion `S¹ ⊂ ℝ²`.
pub fn circle_embedding() -> SmoothMap {
    SmoothMap::new("e", Manifold::Circle, Manifold::Euclidean(2), ambient_fn!(|z| z.to_vec()))
}

/// Radial retraction `ℝ² \ {0} → S¹`, a left inverse of [`circle_embedding`].
pub fn circle_retraction() -> SmoothMap {
    SmoothMap::new(
        "r",
        Manifold::Euclidean(2),
        Manifold::Circle,
        ambient_fn!(|y| {
            let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
            vec![y[0] / r, y[1] / r]
        }),
    )
    .with_domain(Arc::new(|y: &[f64]| y[0].hypot(y[1]) > 1e-6))
}

/// `t ↦ e^{it}`, a local diffeomorphism `ℝ → S¹`.
pub fn covering_map() -> SmoothMap {
    SmoothMap::new(
        "exp(it)",
        Manifold::Euclidean(1),
        Manifold::Circle,
        ambient_fn!(|t| vec![t[0].cos(), t[0].sin()]),
    )
}

pub fn projection_r2_r() -> SmoothMap {
    SmoothMap::new("pr1", Manifold::Euclidean(2), Manifold::Euclidean(1), ambient_fn!(|x| vec![x[0]]))
}

pub fn inclusion_r_r2() -> SmoothMap {
    SmoothMap::new(
        "x->(x,0)",
        Manifold::Euclidean(1),
        Manifold::Euclidean(2),
        generic_fn!([] |x: S| vec![x[0], S::cst(0.0)]),
    )
}

/// Smooth random loop (or path, on intervals) inside a single chart of
/// `target`, as ambient samples. The trigonometric amplitude starts at `amp`
/// and is halved until every node keeps a chart margin of 0.05 and
/// consecutive nodes stay closer than the coherence radius.
pub fn random_curve<R: Rng + ?Sized>(
    grid: GridSpec,
    target: &Manifold,
    amp: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let centre = target.sample(rng);
    let d = target.dim();
    if d == 0 {
        return Ok(vec![centre; grid.n]);
    }
    let c = target.best_chart(&centre)?;
    let x0 = target.chart_forward(c, &centre);
    let coef: Vec<[f64; 6]> = (0..d)
        .map(|_| {
            let mut a = [0.0; 6];
            for v in a.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            a
        })
        .collect();
    let curve = |t: f64, amp: f64| -> Vec<f64> {
        let s = match grid.kind {
            GridKind::Circle => t,
            GridKind::Interval => 2.0 * PI * t,
        };
        (0..d)
            .map(|k| {
                let a = &coef[k];
                let mut v = x0[k];
                for j in 0..3 {
                    let f = (j + 1) as f64;
                    v += amp * (a[2 * j] * (f * s).cos() + a[2 * j + 1] * (f * s).sin()) / (f * f);
                }
                v
            })
            .collect()
    };
    let delta = target.coherence_radius();
    let mut amp = amp;
    'shrink: for _ in 0..60 {
        let mut pts = Vec::with_capacity(grid.n);
        for i in 0..grid.n {
            let amb = target.chart_inverse(c, &curve(grid.node(i), amp));
            if target.chart_margin(c, &amb) <= 0.05 {
                amp *= 0.5;
                continue 'shrink;
            }
            pts.push(amb);
        }
        if grid.edges().all(|(i, j)| crate::linalg::dist(&pts[i], &pts[j]) < delta) {
            return Ok(pts);
        }
        amp *= 0.5;
    }
    Err(Error::SamplingFailure("no random loop fits in a chart".into()))
}

/// [`random_curve`] with unit starting amplitude, as a grid map.
pub fn random_loop<R: Rng + ?Sized>(grid: GridSpec, target: &Manifold, rng: &mut R) -> Result<GridMap> {
    let amb = random_curve(grid, target, 1.0, rng)?;
    GridMap::from_ambient(grid, target, &amb)
}

/// Orthogonal projection of `w` onto `T_pM` in the chart of `p`.
fn tangent_projection(m: &Manifold, p: &Point, w: &[f64]) -> Vec<f64> {
    let j: DMatrix<f64> = ad::jacobian(|x| m.chart_inverse(p.chart, x), &p.coords);
    let jt = j.transpose();
    let y = (&jt * &j).lu().solve(&(&jt * DVector::from_column_slice(w))).expect("charts are immersions");
    y.iter().cloned().collect()
}

/// Smooth random section over `base` with ambient speeds at most `scale`:
/// a trigonometric ambient field projected orthogonally onto each tangent
/// space.
pub fn random_section<R: Rng + ?Sized>(base: &GridMap, scale: f64, rng: &mut R) -> GridSection {
    let m = &base.target;
    let a = m.ambient_dim();
    let coef: Vec<[f64; 4]> = (0..a)
        .map(|_| {
            let mut c = [0.0; 4];
            for v in c.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            c
        })
        .collect();
    let mut vectors: Vec<Tangent> = (0..base.grid.n)
        .map(|i| {
            let t = base.grid.node(i);
            let w: Vec<f64> = coef
                .iter()
                .map(|c| c[0] + c[1] * t.cos() + c[2] * t.sin() + c[3] * (2.0 * t).cos())
                .collect();
            let p = &base.values[i];
            let vel = if m.dim() == 0 { vec![] } else { tangent_projection(m, p, &w) };
            Tangent { base: p.clone(), vel }
        })
        .collect();
    let top = vectors.iter().map(|v| crate::linalg::norm(&v.ambient_velocity(m))).fold(0.0, f64::max);
    if top > 0.0 {
        for y in vectors.iter_mut().flat_map(|v| v.vel.iter_mut()) {
            *y *= scale / top;
        }
    }
    GridSection { base: base.clone(), vectors }
}
