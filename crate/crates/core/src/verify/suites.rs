//! Bodies of the registered suites.

use rand::Rng;
use serde_json::json;

use super::{Outcome, SuiteCtx};
use crate::algebroid::{algebroid_of_groupoid, bracket_two_path_check, sign_convention_check};
use crate::current::{
    action_iso, pair_iso, proper_etale_fiber_bound, properness_failure_witness, transitivity_obstruction,
    CurrentGroupoid, Verdict,
};
use crate::error::Result;
use crate::geom::{canonical_flip, second_tangent_base, Manifold, Point, SecondTangent, SmoothMap, Tangent};
use crate::groupoid::catalog;
use crate::lie_group::LieGroupInstance;
use crate::linalg::{dist, norm};
use crate::local_addition::LocalAddition;
use crate::mapping::{
    circle_embedding, circle_square, classify_pushforward, covering_map, inclusion_r_r2,
    local_diffeo_inverse, named_loop, projection_r2_r, pushforward_tangent, pushforward_tangent_via_chart,
    random_curve, random_loop, random_section, GridMap, GridSpec, LiftOptions, PushforwardVerdict,
};
use crate::orbifold::{atlas_connectivity_negative_test, check_path_lifting, local_action_form};
use crate::seed::stream_rng;

pub(super) fn run(ctx: &mut SuiteCtx) {
    match ctx.info.id {
        "groupoid-axioms" => groupoid_axioms(ctx),
        "current-axioms" => current_axioms(ctx),
        "flip-identities" => flip_identities(ctx),
        "local-additions" => local_additions(ctx),
        "tangent-diagram" => tangent_diagram(ctx),
        "pushforward-classifier" => pushforward_classifier(ctx),
        "not-tra-certificate" => not_tra(ctx),
        "not-proper-certificate" => not_proper(ctx),
        "etale-current" => etale_current(ctx),
        "theorem-D-pointwise-bracket" => pointwise_bracket(ctx),
        "local-action-form" => local_action(ctx),
        "orbifold-path-lifting" => path_lifting(ctx),
        other => unreachable!("suite `{other}` has no body"),
    }
}

/// Manifolds exercised by the pointwise differential-geometry suites.
fn test_manifolds() -> Vec<Manifold> {
    vec![
        Manifold::Euclidean(1),
        Manifold::Euclidean(2),
        Manifold::Circle,
        Manifold::Sphere,
        Manifold::So3,
        Manifold::torus(),
    ]
}

fn random_point<R: Rng + ?Sized>(m: &Manifold, rng: &mut R) -> Result<Point> {
    Point::from_ambient(m, &m.sample(rng))
}

/// Tangent at `p` with a uniformly random direction and ambient speed in
/// `[0, speed)`.
fn random_tangent<R: Rng + ?Sized>(m: &Manifold, p: &Point, speed: f64, rng: &mut R) -> Tangent {
    let vel: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v = Tangent { base: p.clone(), vel };
    let s = norm(&v.ambient_velocity(m));
    if s == 0.0 {
        return v;
    }
    let c = rng.gen_range(0.0..speed) / s;
    Tangent { base: p.clone(), vel: v.vel.iter().map(|x| x * c).collect() }
}

fn tangent_gap(m: &Manifold, a: &Tangent, b: &Tangent) -> f64 {
    dist(&a.base.ambient, &b.base.ambient).max(dist(&a.ambient_velocity(m), &b.ambient_velocity(m)))
}

fn groupoid_axioms(ctx: &mut SuiteCtx) {
    let n = ctx.cfg.samples.axioms;
    let tol = ctx.cfg.tolerances.tol_chart;
    for id in ctx.cfg.catalog_ids() {
        ctx.check(&id, |seed| {
            let rep = catalog(&id)?.check_axioms(n, seed)?;
            Ok(Outcome::new(rep.max_residual(), tol, rep.n_samples, json!(rep.residuals)))
        });
    }
}

fn current_axioms(ctx: &mut SuiteCtx) {
    let n = ctx.cfg.samples.axioms;
    let tol = ctx.cfg.tolerances.tol_chart;
    let grids = ctx.cfg.grids.clone();
    for id in ctx.cfg.catalog_ids() {
        for g in &grids {
            let name = format!("{id}@{:?}{}", g.kind, g.n).to_lowercase();
            ctx.check(&name, |seed| {
                let cur = CurrentGroupoid::build(catalog(&id)?, g.spec()?);
                let rep = cur.check_axioms(n, seed)?;
                Ok(Outcome::new(rep.max_residual(), tol, rep.n_samples, json!(rep.residuals)))
            });
        }
    }
    let Some(g) = grids.first() else { return };
    for (id, iso) in
        [("pair:R2", pair_iso as fn(&CurrentGroupoid, usize, u64) -> Result<_>), ("action:R-S1", action_iso)]
    {
        ctx.check(&format!("reindexing-iso:{id}"), |seed| {
            let cur = CurrentGroupoid::build(catalog(id)?, g.spec()?);
            let rep = iso(&cur, n, seed)?;
            Ok(Outcome::new(rep.max_residual, tol, rep.n_samples, json!(rep.per_map)))
        });
    }
}

fn flip_identities(ctx: &mut SuiteCtx) {
    let n = ctx.cfg.samples.flips;
    let tol = ctx.cfg.tolerances.tol_machine;
    for m in test_manifolds() {
        ctx.check(&format!("involution:{}", m.id()), |seed| {
            let mut broken = 0usize;
            for s in 0..n {
                let st = random_second_tangent(&m, &mut stream_rng(seed, s as u64))?;
                broken += usize::from(canonical_flip(&canonical_flip(&st)) != st);
            }
            Ok(Outcome::new(broken as f64, 0.0, n, json!({ "inexact": broken })))
        });
        ctx.check(&format!("projection-after-flip:{}", m.id()), |seed| {
            let proj = SmoothMap::bundle_projection(&m);
            let mut worst: f64 = 0.0;
            for s in 0..n {
                let st = random_second_tangent(&m, &mut stream_rng(seed, s as u64))?;
                let lhs = second_tangent_base(&m, &canonical_flip(&st));
                let rhs = proj.tangent_map(&st.as_bundle_tangent(&m))?;
                worst = worst.max(tangent_gap(&m, &lhs, &rhs));
            }
            Ok(Outcome::new(worst, tol, n, json!({})))
        });
    }
}

fn random_second_tangent<R: Rng + ?Sized>(m: &Manifold, rng: &mut R) -> Result<SecondTangent> {
    let p = random_point(m, rng)?;
    let mut v = || -> Vec<f64> { (0..m.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    Ok(SecondTangent { chart: p.chart, x: p.coords.clone(), y: v(), z: v(), w: v() })
}

fn local_additions(ctx: &mut SuiteCtx) {
    let n = ctx.cfg.samples.local_additions;
    let t = ctx.cfg.tolerances.clone();
    for m in test_manifolds() {
        let id = m.id();
        ctx.check(&format!("zero-section:{id}"), |seed| {
            let la = LocalAddition::riemannian(&m)?;
            let mut worst: f64 = 0.0;
            for s in 0..n {
                let p = random_point(&m, &mut stream_rng(seed, s as u64))?;
                worst = worst.max(la.apply(&Tangent::zero(p.clone()))?.distance(&p));
            }
            Ok(Outcome::new(worst, t.tol_theta, n, json!({ "addition": la.name })))
        });
        ctx.check(&format!("theta-round-trip:{id}"), |seed| {
            let la = LocalAddition::riemannian(&m)?;
            let mut worst: f64 = 0.0;
            for s in 0..n {
                let mut rng = stream_rng(seed, s as u64);
                let p = random_point(&m, &mut rng)?;
                let v = random_tangent(&m, &p, 1.5, &mut rng);
                let q = la.apply(&v)?;
                let back = la.theta_inverse(&p, &q)?;
                worst = worst
                    .max(dist(&back.ambient_velocity(&m), &v.ambient_velocity(&m)))
                    .max(la.apply(&back)?.distance(&q));
            }
            Ok(Outcome::new(worst, t.tol_theta, n, json!({ "addition": la.name, "max_speed": 1.5 })))
        });
        ctx.check(&format!("normalization:{id}"), |seed| {
            let base = LocalAddition::riemannian(&m)?;
            let mut inputs = vec![base.clone(), base.scaled(2.0)];
            inputs.extend(lie_group_of(&m).map(|g| LocalAddition::lie_group(&g)));
            let mut per = Vec::new();
            let mut worst: f64 = 0.0;
            for la in &inputs {
                let norm_la = la.normalize()?;
                let mut e: f64 = 0.0;
                for s in 0..n {
                    let p = random_point(&m, &mut stream_rng(seed, s as u64))?;
                    let fd = norm_la.fiber_derivative_fd(&p, 1e-5);
                    let id = nalgebra::DMatrix::<f64>::identity(fd.nrows(), fd.ncols());
                    e = e.max((fd - id).amax());
                }
                per.push(json!({ "input": la.name, "max_deviation": e }));
                worst = worst.max(e);
            }
            Ok(Outcome::new(worst, t.tol_fd, n * inputs.len(), json!(per)))
        });
        ctx.check(&format!("tangent-lift-zero:{id}"), |seed| {
            let lift = LocalAddition::riemannian(&m)?.tangent_lift();
            let mut worst: f64 = 0.0;
            for s in 0..n {
                let mut rng = stream_rng(seed, s as u64);
                let p = random_point(&m, &mut rng)?;
                let v = random_tangent(&m, &p, 2.0, &mut rng).as_bundle_point(&m);
                let out = lift.apply(&Tangent::zero(v.clone()))?;
                worst = worst.max(dist(&out.ambient, &v.ambient));
            }
            Ok(Outcome::new(worst, t.tol_theta, n, json!({ "addition": lift.name })))
        });
    }
}

fn lie_group_of(m: &Manifold) -> Option<LieGroupInstance> {
    match m {
        Manifold::Circle => Some(LieGroupInstance::Circle),
        Manifold::So3 => Some(LieGroupInstance::So3),
        Manifold::Euclidean(k) => Some(LieGroupInstance::Translations(*k)),
        _ => None,
    }
}

fn tangent_diagram(ctx: &mut SuiteCtx) {
    let n = ctx.cfg.samples.tangent_pairs;
    let tol = ctx.cfg.tolerances.tol_fd;
    for f in [circle_square(), circle_embedding(), covering_map()] {
        ctx.check(&f.name.clone(), |seed| {
            let sigma = LocalAddition::riemannian(&f.source)?;
            let grid = GridSpec::circle(32);
            let mut worst: f64 = 0.0;
            for s in 0..n {
                let mut rng = stream_rng(seed, s as u64);
                let gamma = random_loop(grid, &f.source, &mut rng)?;
                let tau = random_section(&gamma, 0.5, &mut rng);
                let direct = pushforward_tangent(&f, &gamma, &tau)?;
                let chart = pushforward_tangent_via_chart(&f, &sigma, &gamma, &tau)?;
                worst = worst.max(direct.distance(&chart));
            }
            Ok(Outcome::new(worst, tol, n, json!({ "grid": grid, "local_addition": sigma.name })))
        });
    }
}

fn pushforward_classifier(ctx: &mut SuiteCtx) {
    let n = ctx.cfg.samples.classifier;
    let cases = [
        (projection_r2_r(), PushforwardVerdict::SubmersionOnTrace),
        (inclusion_r_r2(), PushforwardVerdict::ImmersionOnTrace),
        (covering_map(), PushforwardVerdict::LocalDiffeoOnTrace),
        (
            SmoothMap::constant(&Manifold::Circle, &Manifold::Sphere, &[0.0, 0.0, 1.0]),
            PushforwardVerdict::Neither,
        ),
    ];
    for (f, want) in cases {
        ctx.check(&format!("classify:{}", f.name), |seed| {
            let grid = GridSpec::circle(32);
            let mut wrong = 0usize;
            for s in 0..n {
                let gamma = random_loop(grid, &f.source, &mut stream_rng(seed, s as u64))?;
                wrong += usize::from(classify_pushforward(&f, &gamma)?.verdict != want);
            }
            Ok(Outcome::new(wrong as f64, 0.0, n, json!({ "expected": want, "misclassified": wrong })))
        });
    }

    let delta = ctx.cfg.tolerances.delta_coh;
    let tol = ctx.cfg.tolerances.tol_theta;
    let f = covering_map();
    let mut opts = LiftOptions::for_map(&f);
    if let Some(d) = delta {
        opts.delta_coh = d;
    }
    let grid = GridSpec::circle(64);
    let m = ctx.cfg.samples.inverse_instances;
    ctx.check("local-inverse:solvable", |seed| {
        let mut worst: f64 = 0.0;
        for s in 0..m {
            let mut rng = stream_rng(seed, s as u64);
            let t = random_curve(grid, &Manifold::Euclidean(1), 2.0, &mut rng)?;
            let offset = rng.gen_range(-0.3..0.3);
            let gamma0 = GridMap::from_ambient(
                grid,
                &f.source,
                &t.iter().map(|v| vec![v[0] + offset]).collect::<Vec<_>>(),
            )?;
            let eta = GridMap::from_ambient(
                grid,
                &f.target,
                &t.iter().map(|v| vec![v[0].cos(), v[0].sin()]).collect::<Vec<_>>(),
            )?;
            let lift = local_diffeo_inverse(&f, &gamma0, &eta, opts)?;
            for (p, v) in lift.values.iter().zip(&t) {
                worst = worst.max(dist(&p.ambient, v));
            }
        }
        Ok(Outcome::new(worst, tol, m, json!({ "grid": grid, "max_offset": 0.3 })))
    });
    let k = ctx.cfg.samples.branch_attempts;
    ctx.check("local-inverse:winding-one-rejected", |seed| {
        let eta = named_loop("identity-loop", grid.n)?;
        let unbounded = LiftOptions { patch_radius: f64::INFINITY, ..opts };
        let mut accepted = 0usize;
        for s in 0..k {
            let mut rng = stream_rng(seed, s as u64);
            let t0 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
                + 2.0 * std::f64::consts::PI * rng.gen_range(-3i32..=3) as f64;
            let gamma0 = GridMap::from_fn(grid, &f.source, |_| vec![t0])?;
            accepted += usize::from(local_diffeo_inverse(&f, &gamma0, &eta, unbounded).is_ok());
        }
        Ok(Outcome::new(accepted as f64, 0.0, k, json!({ "accepted_lifts": accepted })))
    });
}

fn not_tra(ctx: &mut SuiteCtx) {
    let tol = ctx.cfg.tolerances.tol_theta;
    let mut windings = Vec::new();
    for n in ctx.cfg.certificate_grids.clone() {
        ctx.check(&format!("n={n}"), |seed| {
            let cert = transitivity_obstruction(GridSpec::circle(n), seed)?;
            windings.push(cert.witness_data["required_winding"].clone());
            let details = json!({ "required_winding": cert.witness_data["required_winding"] });
            Ok(Outcome::new(cert.max_residual, tol, 1, details).certified(cert, Verdict::Obstructed))
        });
    }
    ctx.check("refinement-stability", |_| {
        let distinct = windings.iter().filter(|w| **w != windings[0]).count();
        Ok(Outcome::new(distinct as f64, 0.0, windings.len(), json!({ "required_winding": windings })))
    });
}

fn not_proper(ctx: &mut SuiteCtx) {
    ctx.check("n=256", |_| {
        let cert = properness_failure_witness(GridSpec::circle(256))?;
        let dev = cert.witness_data["max_relative_deviation_from_k"].as_f64().unwrap_or(f64::NAN);
        let details = json!({ "min_pairwise_order0": cert.witness_data["min_pairwise_order0"] });
        Ok(Outcome::new(dev, 0.05, 4, details).certified(cert, Verdict::Obstructed))
    });
}

fn etale_current(ctx: &mut SuiteCtx) {
    let s = ctx.cfg.samples.clone();
    let t = ctx.cfg.tolerances.clone();
    let cur = || -> Result<CurrentGroupoid> {
        Ok(CurrentGroupoid::build(catalog("finite:Z4-R2")?, GridSpec::circle(64)))
    };
    ctx.check("alpha-nodewise-invertible", |seed| {
        let rep = cur()?.etale_lifting(s.etale_arrows, seed)?;
        let ok = rep.holds && rep.disagreements == 0 && rep.sigma_min > t.tol_rank;
        Ok(Outcome::new(f64::from(u8::from(!ok)), 0.0, rep.n_arrows, json!(rep)))
    });
    ctx.check("anchor-fibre-bound", |seed| {
        let cert = proper_etale_fiber_bound(&cur()?, s.fiber_pairs, seed)?;
        let details = json!({ "max_anchor_fiber": cert.witness_data["max_anchor_fiber"] });
        Ok(Outcome::new(cert.max_residual, t.tol_chart, s.fiber_pairs, details)
            .certified(cert, Verdict::Verified))
    });
}

fn pointwise_bracket(ctx: &mut SuiteCtx) {
    let s = ctx.cfg.samples.clone();
    let tol = ctx.cfg.tolerances.tol_bracket;
    for id in ["pair:R2", "action:R-S1"] {
        ctx.check(&format!("two-paths:{id}"), |seed| {
            let rep = bracket_two_path_check(&catalog(id)?, GridSpec::circle(8), s.bracket_pairs, seed)?;
            Ok(Outcome::new(rep.max_residual, tol, rep.n_pairs, json!(rep)))
        });
    }
    for id in ["pair:R2", "pair:S1", "action:R-S1", "action:SO3-R3", "bundle:S1xS1", "group:SO3"] {
        ctx.check(&format!("bracket-laws:{id}"), |seed| {
            let rep = algebroid_of_groupoid(&catalog(id)?)?.check_laws(s.law_samples, seed, true)?;
            Ok(Outcome::new(rep.max_residual(), tol, rep.n_samples, json!(rep.residuals)))
        });
    }
    ctx.check("sign-convention:SO3", |_| {
        let rep = sign_convention_check(&LieGroupInstance::So3)?;
        let r = if rep.consistent {
            rep.proportionality_residual.max(rep.linearity_residual)
        } else {
            f64::INFINITY
        };
        Ok(Outcome::new(r, tol, rep.signs.len(), json!(rep)))
    });
}

fn local_action(ctx: &mut SuiteCtx) {
    let tol = ctx.cfg.tolerances.tol_chart;
    for (id, center) in
        [("finite:Z4-R2", vec![0.0, 0.0]), ("finite:Z4-R2", vec![1.0, 0.0]), ("finite:Z2-R1", vec![0.0])]
    {
        ctx.check(&format!("{id}@{center:?}"), |_| {
            let form = local_action_form(&catalog(id)?, &center)?;
            Ok(Outcome::new(form.residuals.max(), tol, form.n_verify, json!(form)))
        });
    }
}

fn path_lifting(ctx: &mut SuiteCtx) {
    let n = ctx.cfg.samples.paths;
    let t = ctx.cfg.tolerances.clone();
    // One computation feeds three records; it runs under the first check's seed.
    let mut report = None;
    ctx.check("projection", |seed| {
        let rep = check_path_lifting(&catalog("finite:Z4-R2")?, GridSpec::interval(64), n, seed)?;
        report = Some(rep.clone());
        Ok(Outcome::new(rep.projection_residual, t.tol_theta, rep.n_paths, json!(rep)))
    });
    ctx.check("equivariance", |_| {
        let rep = report.clone().ok_or_else(missing_lift)?;
        Ok(Outcome::new(rep.equivariance_residual, t.tol_machine, rep.n_paths, json!(rep)))
    });
    ctx.check("distinct-branches", |_| {
        let rep = report.clone().ok_or_else(missing_lift)?;
        let ok = rep.min_branch_gap > t.tol_chart;
        Ok(Outcome::new(
            f64::from(u8::from(!ok)),
            0.0,
            rep.n_paths,
            json!({ "min_branch_gap": rep.min_branch_gap }),
        ))
    });
    let n0 = ctx.cfg.certificate_grids.first().copied().unwrap_or(64);
    for n in [n0, 4 * n0] {
        ctx.check(&format!("atlas-identity:n={n}"), |_| {
            let cert = atlas_connectivity_negative_test(GridSpec::circle(n))?;
            Ok(Outcome::new(cert.max_residual, t.tol_chart, 1, json!({ "grid_n": n }))
                .certified(cert, Verdict::Obstructed))
        });
    }
}

fn missing_lift() -> crate::Error {
    crate::Error::Unsupported("path lifting did not produce a report".into())
}
