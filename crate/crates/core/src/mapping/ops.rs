//! Pointwise operations on grid maps.

use std::f64::consts::PI;

use serde::Serialize;

use super::{GridKind, GridMap, GridSection};
use crate::ad::{self, Jet};
use crate::error::{Error, Result};
use crate::geom::{Point, SmoothMap, Tangent};
use crate::linalg::{dist, rank_info, RankInfo};
use crate::local_addition::LocalAddition;

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v
}

/// `γ ↦ f ∘ γ`; coherence is re-checked on the result.
pub fn pushforward(f: &SmoothMap, gamma: &GridMap) -> Result<GridMap> {
    if f.source != gamma.target {
        return Err(Error::DomainViolation(format!(
            "{} is defined on {}, the grid map lands in {}",
            f.name,
            f.source.id(),
            gamma.target.id()
        )));
    }
    let values = gamma.values.iter().map(|p| f.eval(p)).collect::<Result<Vec<_>>>()?;
    GridMap::new(gamma.grid, f.target.clone(), values)
}

/// `γ ↦ f ∘ (id_K, γ)` for `f` defined on an open subset of `K × M`.
pub fn superposition(f: &SmoothMap, gamma: &GridMap) -> Result<GridMap> {
    let values = (0..gamma.grid.n)
        .map(|i| {
            let arg = concat(&gamma.grid.node_ambient(i), &gamma.values[i].ambient);
            if !f.in_domain(&arg) {
                return Err(Error::GraphOutsideDomain { index: i });
            }
            Point::from_ambient(&f.target, &f.formula.eval(&arg))
        })
        .collect::<Result<Vec<_>>>()?;
    GridMap::new(gamma.grid, f.target.clone(), values)
}

/// `φ_f(τ) = Σ ∘ τ`.
pub fn chart_phi(sigma: &LocalAddition, f: &GridMap, tau: &GridSection) -> Result<GridMap> {
    let m = &sigma.manifold;
    let values = tau
        .vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let u = v.ambient_velocity(m);
            if !sigma.in_domain(&v.base.ambient, &u) {
                return Err(Error::NotInDomainU { index: i });
            }
            sigma.apply(v)
        })
        .collect::<Result<Vec<_>>>()?;
    GridMap::with_delta_coh(f.grid, m.clone(), values, f.delta_coh)
}

/// `g ↦ θ⁻¹ ∘ (f, g)`.
pub fn chart_phi_inverse(sigma: &LocalAddition, f: &GridMap, g: &GridMap) -> Result<GridSection> {
    let vectors = f
        .values
        .iter()
        .zip(&g.values)
        .enumerate()
        .map(|(i, (p, q))| {
            sigma.theta_inverse(p, q).map_err(|e| match e {
                Error::NotInThetaImage(msg) => Error::NotInThetaImage(format!("node {i}: {msg}")),
                e => e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridSection { base: f.clone(), vectors })
}

/// `τ ↦ Tf ∘ τ`, nodewise.
pub fn pushforward_tangent(f: &SmoothMap, gamma: &GridMap, tau: &GridSection) -> Result<GridSection> {
    let vectors = tau.vectors.iter().map(|v| f.tangent_map(v)).collect::<Result<Vec<Tangent>>>()?;
    let base = GridMap::new(gamma.grid, f.target.clone(), vectors.iter().map(|v| v.base.clone()).collect())?;
    Ok(GridSection { base, vectors })
}

/// The same tangent computed through the mapping-space chart:
/// `d/dt|₀ f(Σ(t τ))` at each node, one jet evaluation per node. Agrees with
/// [`pushforward_tangent`] when `Σ` is normalized.
pub fn pushforward_tangent_via_chart(
    f: &SmoothMap,
    sigma: &LocalAddition,
    gamma: &GridMap,
    tau: &GridSection,
) -> Result<GridSection> {
    let m = &sigma.manifold;
    let base = pushforward(f, gamma)?;
    let vectors = tau
        .vectors
        .iter()
        .zip(&base.values)
        .map(|(v, q)| {
            let t = Jet::variable(0.0, 0);
            let p = ad::constants(&v.base.ambient);
            let u: Vec<Jet> = v.ambient_velocity(m).iter().map(|&c| t * c).collect();
            let mut pu = p;
            pu.extend(u);
            let moved = sigma.sigma.eval_jet(&pu);
            let image = f.formula.eval_jet(&moved);
            let y = f.target.chart_forward(q.chart, &image);
            Tangent { base: q.clone(), vel: y.iter().map(|c| c.coeff(1)).collect() }
        })
        .collect();
    Ok(GridSection { base, vectors })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PushforwardVerdict {
    LocalDiffeoOnTrace,
    SubmersionOnTrace,
    ImmersionOnTrace,
    Neither,
}

#[derive(Clone, Debug, Serialize)]
pub struct PushforwardClass {
    pub verdict: PushforwardVerdict,
    pub submersion: bool,
    pub immersion: bool,
    pub nodes: Vec<RankInfo>,
}

/// The tangent of `C^ℓ(K, f)` is block diagonal with blocks `T_{γ(x_i)}f`;
/// each lifted property holds iff it holds blockwise.
pub fn classify_pushforward(f: &SmoothMap, gamma: &GridMap) -> Result<PushforwardClass> {
    let nodes =
        gamma.values.iter().map(|p| f.jacobian(p).map(|(j, _)| rank_info(&j))).collect::<Result<Vec<_>>>()?;
    let submersion = nodes.iter().all(|r| r.full_row_rank());
    let immersion = nodes.iter().all(|r| r.full_column_rank());
    let verdict = match (submersion, immersion) {
        (true, true) => PushforwardVerdict::LocalDiffeoOnTrace,
        (true, false) => PushforwardVerdict::SubmersionOnTrace,
        (false, true) => PushforwardVerdict::ImmersionOnTrace,
        (false, false) => PushforwardVerdict::Neither,
    };
    Ok(PushforwardClass { verdict, submersion, immersion, nodes })
}

#[derive(Clone, Copy, Debug)]
pub struct LiftOptions {
    /// Radius of the ambient ball around `γ₀(x_i)` on which the local
    /// inverse is used.
    pub patch_radius: f64,
    /// Preimages closer than this are treated as the same branch point.
    pub delta_coh: f64,
    pub tol: f64,
}

impl LiftOptions {
    pub fn for_map(f: &SmoothMap) -> LiftOptions {
        let r = f.source.coherence_radius();
        LiftOptions { patch_radius: r, delta_coh: r, tol: 1e-12 }
    }
}

/// Newton for `f(x) = y` starting at `start`, re-charting every step.
fn solve_preimage(f: &SmoothMap, start: &Point, y: &[f64], tol: f64) -> Option<Point> {
    let m = &f.source;
    let mut p = start.clone();
    for _ in 0..60 {
        let fx = f.formula.eval(&p.ambient);
        if dist(&fx, y) < tol {
            return Some(p);
        }
        let q = Point::from_ambient(&f.target, &fx).ok()?;
        let j =
            if f.target.chart_margin(q.chart, y) > 0.0 { q.chart } else { f.target.best_chart(y).ok()? };
        let target = f.target.chart_forward(j, y);
        let i = p.chart;
        let jac = ad::jacobian(|x| f.local_expr(i, j, x), &p.coords);
        let cur = f.local_expr::<f64>(i, j, &p.coords);
        let res: Vec<f64> = cur.iter().zip(&target).map(|(a, b)| a - b).collect();
        let step = jac.lu().solve(&nalgebra::DVector::from_vec(res))?;
        let x: Vec<f64> = p.coords.iter().zip(step.iter()).map(|(a, d)| a - d).collect();
        let amb = m.project(&m.chart_inverse(i, &x));
        p = Point::from_ambient(m, &amb).ok()?;
    }
    None
}

/// The lift `γ` near `γ₀` with `f ∘ γ = η`, built node by node in grid order
/// from the branch nearest to the previous node's lift.
pub fn local_diffeo_inverse(
    f: &SmoothMap,
    gamma0: &GridMap,
    eta: &GridMap,
    opts: LiftOptions,
) -> Result<GridMap> {
    let n = eta.grid.n;
    let mut lift: Vec<Point> = Vec::with_capacity(n);
    for i in 0..n {
        let anchor = &gamma0.values[i];
        let prev = lift.last().unwrap_or(anchor).clone();
        let target = &eta.values[i].ambient;
        let mut cands: Vec<Point> = Vec::new();
        for start in [&prev, anchor] {
            if let Some(c) = solve_preimage(f, start, target, opts.tol) {
                if !cands.iter().any(|d| d.distance(&c) < 1e-8) {
                    cands.push(c);
                }
            }
        }
        if cands.len() > 1 && cands[0].distance(&cands[1]) < opts.delta_coh {
            return Err(Error::BranchAmbiguity { index: i });
        }
        let best = cands
            .into_iter()
            .min_by(|a, b| a.distance(&prev).total_cmp(&b.distance(&prev)))
            .ok_or(Error::OutsideNeighborhood { index: i })?;
        if best.distance(anchor) >= opts.patch_radius {
            return Err(Error::OutsideNeighborhood { index: i });
        }
        lift.push(best);
    }
    if eta.grid.kind == GridKind::Circle && lift[n - 1].distance(&lift[0]) >= gamma0.delta_coh {
        return Err(Error::LiftNotClosed);
    }
    GridMap::with_delta_coh(eta.grid, f.source.clone(), lift, gamma0.delta_coh)
}

/// Winding number of a coherent loop in the circle.
pub fn degree(gamma: &GridMap) -> Result<i64> {
    if gamma.grid.kind != GridKind::Circle || gamma.target != crate::geom::Manifold::Circle {
        return Err(Error::Unsupported("degree needs a loop S¹ → S¹".into()));
    }
    gamma.check_coherence()?;
    let total: f64 = gamma
        .grid
        .edges()
        .map(|(i, j)| {
            let (a, b) = (&gamma.values[i].ambient, &gamma.values[j].ambient);
            // arg(b · conj(a))
            (b[1] * a[0] - b[0] * a[1]).atan2(b[0] * a[0] + b[1] * a[1])
        })
        .sum();
    Ok((total / (2.0 * PI)).round() as i64)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::ambient_fn;
    use crate::geom::Manifold;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn pushforward_examples() {
        let gamma = named_loop("identity-loop", 256).unwrap();
        let id = SmoothMap::identity(&Manifold::Circle);
        assert!(seminorm_distance(&pushforward(&id, &gamma).unwrap(), &gamma).orders[0] < 1e-15);
        let c = SmoothMap::constant(&Manifold::Circle, &Manifold::Sphere, &[0.0, 0.0, 1.0]);
        let pc = pushforward(&c, &gamma).unwrap();
        assert!(pc.values.iter().all(|p| p.ambient == vec![0.0, 0.0, 1.0]));
        let sq = pushforward(&circle_square(), &gamma).unwrap();
        assert_eq!(degree(&sq).unwrap(), 2);
    }

    #[test]
    fn degrees() {
        for (id, d) in [("identity-loop", 1), ("constant-loop", 0), ("double-loop", 2), ("reverse-loop", -1)]
        {
            assert_eq!(degree(&named_loop(id, 64).unwrap()).unwrap(), d);
        }
        let g = GridSpec::interval(16);
        let p = GridMap::from_fn(g, &Manifold::Circle, |x| vec![x.cos(), x.sin()]).unwrap();
        assert!(degree(&p).is_err());
    }

    #[test]
    fn superposition_examples() {
        let gamma = named_loop("identity-loop", 32).unwrap();
        let k_m = Manifold::product(Manifold::Circle, Manifold::Circle);
        let g = circle_square();
        let gf = g.formula.clone();
        let f = SmoothMap::new(
            "g(y)",
            k_m.clone(),
            Manifold::Circle,
            ambient_fn!([gf] | x | gf.eval_s(&x[2..4])),
        );
        let a = superposition(&f, &gamma).unwrap();
        let b = pushforward(&g, &gamma).unwrap();
        assert!(seminorm_distance(&a, &b).max() < 1e-15);
        let proj = SmoothMap::new("y", k_m.clone(), Manifold::Circle, ambient_fn!(|x| x[2..4].to_vec()));
        assert!(seminorm_distance(&superposition(&proj, &gamma).unwrap(), &gamma).orders[0] < 1e-15);
        // Remove the fibre over node 5.
        let x5 = gamma.grid.node_ambient(5);
        let holed = proj.with_domain(Arc::new(move |x: &[f64]| dist(&x[..2], &x5) > 1e-9));
        assert!(matches!(superposition(&holed, &gamma), Err(Error::GraphOutsideDomain { index: 5 })));
    }

    #[test]
    fn chart_phi_examples() {
        let sigma = LocalAddition::riemannian(&Manifold::Circle).unwrap();
        let gamma = named_loop("identity-loop", 64).unwrap();
        let zero = GridSection::zero(&gamma);
        assert!(seminorm_distance(&chart_phi(&sigma, &gamma, &zero).unwrap(), &gamma).orders[0] < 1e-15);
        let u: Vec<Vec<f64>> =
            gamma.values.iter().map(|p| vec![-0.1 * p.ambient[1], 0.1 * p.ambient[0]]).collect();
        let tau = GridSection::from_ambient(&gamma, &u);
        let rotated = chart_phi(&sigma, &gamma, &tau).unwrap();
        let expect =
            GridMap::from_fn(gamma.grid, &Manifold::Circle, |x| vec![(x + 0.1).cos(), (x + 0.1).sin()])
                .unwrap();
        assert!(seminorm_distance(&rotated, &expect).orders[0] < 1e-14);
        let back = chart_phi_inverse(&sigma, &gamma, &rotated).unwrap();
        assert!(back.distance(&tau) < 1e-12);
    }

    #[test]
    fn chart_phi_domain_errors() {
        let sigma = LocalAddition::riemannian(&Manifold::Circle).unwrap();
        let gamma = named_loop("identity-loop", 16).unwrap();
        let mut u = vec![vec![0.0, 0.0]; 16];
        let p3 = &gamma.values[3].ambient;
        u[3] = vec![-4.0 * p3[1], 4.0 * p3[0]];
        let tau = GridSection::from_ambient(&gamma, &u);
        assert!(matches!(chart_phi(&sigma, &gamma, &tau), Err(Error::NotInDomainU { index: 3 })));
        let far = named_loop("reverse-loop", 16).unwrap();
        match chart_phi_inverse(&sigma, &gamma, &far) {
            Err(Error::NotInThetaImage(msg)) => assert!(msg.starts_with("node 0") || msg.contains("node")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tangent_pushforward_doubles_speed() {
        let gamma = named_loop("identity-loop", 32).unwrap();
        let u: Vec<Vec<f64>> = gamma.values.iter().map(|p| vec![-p.ambient[1], p.ambient[0]]).collect();
        let tau = GridSection::from_ambient(&gamma, &u);
        let out = pushforward_tangent(&circle_square(), &gamma, &tau).unwrap();
        for v in out.ambient_velocities() {
            assert!((crate::linalg::norm(&v) - 2.0).abs() < 1e-13);
        }
        let id = pushforward_tangent(&SmoothMap::identity(&Manifold::Circle), &gamma, &tau).unwrap();
        assert!(id.distance(&tau) < 1e-15);
        let z = pushforward_tangent(&circle_square(), &gamma, &GridSection::zero(&gamma)).unwrap();
        assert!(z.vectors.iter().all(|v| v.vel.iter().all(|&c| c == 0.0)));
    }

    #[test]
    fn tangent_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sigma = LocalAddition::riemannian(&Manifold::Sphere).unwrap();
        let f = SmoothMap::new(
            "rot",
            Manifold::Sphere,
            Manifold::Sphere,
            ambient_fn!(|x| {
                let (c, s) = (0.3f64.cos(), 0.3f64.sin());
                vec![c * x[0] - s * x[2], x[1], s * x[0] + c * x[2]]
            }),
        );
        let gamma = random_loop(GridSpec::circle(32), &Manifold::Sphere, &mut rng).unwrap();
        let tau = random_section(&gamma, 0.5, &mut rng);
        let a = pushforward_tangent(&f, &gamma, &tau).unwrap();
        let b = pushforward_tangent_via_chart(&f, &sigma, &gamma, &tau).unwrap();
        assert!(a.distance(&b) < 1e-12);
    }

    #[test]
    fn classifier_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g2 = random_loop(GridSpec::circle(16), &Manifold::Euclidean(2), &mut rng).unwrap();
        let g1 = random_loop(GridSpec::circle(16), &Manifold::Euclidean(1), &mut rng).unwrap();
        assert_eq!(
            classify_pushforward(&projection_r2_r(), &g2).unwrap().verdict,
            PushforwardVerdict::SubmersionOnTrace
        );
        assert_eq!(
            classify_pushforward(&inclusion_r_r2(), &g1).unwrap().verdict,
            PushforwardVerdict::ImmersionOnTrace
        );
        assert_eq!(
            classify_pushforward(&covering_map(), &g1).unwrap().verdict,
            PushforwardVerdict::LocalDiffeoOnTrace
        );
        let fold = SmoothMap::new(
            "x^2",
            Manifold::Euclidean(1),
            Manifold::Euclidean(1),
            ambient_fn!(|x| vec![x[0] * x[0]]),
        );
        let through0 =
            GridMap::from_fn(GridSpec::circle(16), &Manifold::Euclidean(1), |x| vec![0.5 * x.sin()]).unwrap();
        assert_eq!(classify_pushforward(&fold, &through0).unwrap().verdict, PushforwardVerdict::Neither);
    }

    #[test]
    fn covering_lifts() {
        let f = covering_map();
        let grid = GridSpec::circle(128);
        let gamma0 = GridMap::from_fn(grid, &Manifold::Euclidean(1), |_| vec![0.0]).unwrap();
        let eta = GridMap::from_fn(grid, &Manifold::Circle, |x| {
            let t = 0.4 * x.sin() + 0.2 * (2.0 * x).cos();
            vec![t.cos(), t.sin()]
        })
        .unwrap();
        let opts = LiftOptions::for_map(&f);
        let lift = local_diffeo_inverse(&f, &gamma0, &eta, opts).unwrap();
        for (i, p) in lift.values.iter().enumerate() {
            let x = grid.node(i);
            assert!((p.ambient[0] - (0.4 * x.sin() + 0.2 * (2.0 * x).cos())).abs() < 1e-10);
        }
        assert!(seminorm_distance(&pushforward(&f, &lift).unwrap(), &eta).orders[0] <= 1e-10);
        let full = named_loop("identity-loop", 128).unwrap();
        assert!(matches!(
            local_diffeo_inverse(&f, &gamma0, &full, opts),
            Err(Error::OutsideNeighborhood { .. })
        ));
        let id = SmoothMap::identity(&Manifold::Circle);
        let back = local_diffeo_inverse(&id, &full, &full, LiftOptions::for_map(&id)).unwrap();
        assert!(seminorm_distance(&back, &full).orders[0] < 1e-15);
    }

    #[test]
    fn degree_is_refinement_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = GridSpec::circle(64);
        let k = 3.0;
        let phase: f64 = rand::Rng::gen_range(&mut rng, 0.0..1.0);
        let loop_at = |grid: GridSpec| {
            GridMap::from_fn(grid, &Manifold::Circle, |x| {
                let t = k * x + 0.5 * (x + phase).sin();
                vec![t.cos(), t.sin()]
            })
            .unwrap()
        };
        assert_eq!(degree(&loop_at(g)).unwrap(), 3);
        assert_eq!(degree(&loop_at(g.refined())).unwrap(), 3);
    }
}
