//! Closed-form and enumeration oracles, computed here independently of the
//! library's own differentiation and chart machinery.

use std::f64::consts::{FRAC_PI_2, PI};

use lie_currents::algebroid::{algebroid_of_groupoid, sign_convention_check, AlgebroidSection};
use lie_currents::current::{
    action_iso, anchor_preimage, enumerate_fiber, pair_iso, properness_failure_witness, CurrentGroupoid,
    CurrentRestriction, Verdict,
};
use lie_currents::geom::{transition, Manifold, Point, SecondTangent, SmoothMap, Tangent};
use lie_currents::groupoid::{catalog, OpenSet};
use lie_currents::lie_group::LieGroupInstance;
use lie_currents::local_addition::LocalAddition;
use lie_currents::mapping::{
    chart_phi, circle_square, classify_pushforward, covering_map, degree, inclusion_r_r2,
    local_diffeo_inverse, named_loop, projection_r2_r, pushforward, pushforward_tangent, seminorm_distance,
    GridKind, GridMap, GridSection, GridSpec, LiftOptions, PushforwardVerdict,
};
use lie_currents::orbifold::{
    atlas_connectivity_negative_test, atlas_coordinate, atlas_loop_component, local_action_form, path_lift,
    AtlasChart, OrbitSpacePath,
};
use lie_currents::{ambient_fn, generic_fn};
use nalgebra::{Matrix3, Rotation3, Vector3};

fn angle(p: &[f64]) -> f64 {
    p[1].atan2(p[0])
}

fn circle(t: f64) -> Vec<f64> {
    vec![t.cos(), t.sin()]
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn circle_chart_transition() {
    let p = Point::in_chart(&Manifold::Circle, 0, &[0.5]).unwrap();
    let q = transition(&Manifold::Circle, &p, 1).unwrap();
    assert!((q.coords[0] - 0.5).abs() < 1e-15);
    let p = Point::in_chart(&Manifold::Circle, 0, &[-0.5]).unwrap();
    let q = transition(&Manifold::Circle, &p, 1).unwrap();
    assert!((q.coords[0] - (2.0 * PI - 0.5)).abs() < 1e-14);
}

#[test]
fn squaring_doubles_angle_and_speed() {
    let f = circle_square();
    let v = Tangent { base: Point::in_chart(&Manifold::Circle, 0, &[0.7]).unwrap(), vel: vec![1.0] };
    let w = f.tangent_map(&v).unwrap();
    assert!((angle(&w.base.ambient) - 1.4).abs() < 1e-14);
    let expect = [-2.0 * 1.4f64.sin(), 2.0 * 1.4f64.cos()];
    assert!(close(&w.ambient_velocity(&Manifold::Circle), &expect, 1e-14));
}

#[test]
fn second_tangent_of_scalar_maps() {
    let r = Manifold::Euclidean(1);
    let sq = SmoothMap::new("x^2", r.clone(), r.clone(), generic_fn!([] |x: S| vec![x[0] * x[0]]));
    let s = SecondTangent { chart: 0, x: vec![1.0], y: vec![1.0], z: vec![1.0], w: vec![0.0] };
    let out = sq.second_tangent_map(&s).unwrap();
    // (f(x), f'(x) y, f'(x) z, f'(x) w + f''(x) y z)
    assert_eq!((out.x[0], out.y[0], out.z[0], out.w[0]), (1.0, 2.0, 2.0, 2.0));

    let lin = SmoothMap::new("2x", r.clone(), r, ambient_fn!(|x| vec![x[0] * 2.0]));
    let s = SecondTangent { chart: 0, x: vec![0.3], y: vec![-1.1], z: vec![0.4], w: vec![2.5] };
    let out = lin.second_tangent_map(&s).unwrap();
    assert!(close(&[out.x[0], out.y[0], out.z[0], out.w[0]], &[0.6, -2.2, 0.8, 5.0], 1e-15));
}

#[test]
fn sphere_exponential_and_logarithm() {
    let m = Manifold::Sphere;
    let la = LocalAddition::riemannian(&m).unwrap();
    let p = vec![0.6, 0.0, 0.8];
    let u = vec![0.8 * 0.9, 0.5, -0.6 * 0.9];
    let speed = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let expect: Vec<f64> = p.iter().zip(&u).map(|(a, b)| speed.cos() * a + speed.sin() * b / speed).collect();
    let v = Tangent::from_ambient(&m, &p, &u).unwrap();
    let q = la.apply(&v).unwrap();
    assert!(close(&q.ambient, &expect, 1e-13));

    let back = la.theta_inverse(&v.base, &q).unwrap();
    let c: f64 = p.iter().zip(&q.ambient).map(|(a, b)| a * b).sum();
    let perp: Vec<f64> = q.ambient.iter().zip(&p).map(|(b, a)| b - c * a).collect();
    let pn = perp.iter().map(|v| v * v).sum::<f64>().sqrt();
    let log: Vec<f64> = perp.iter().map(|v| c.acos() * v / pn).collect();
    assert!(close(&back.ambient_velocity(&m), &log, 1e-12));
}

#[test]
fn circle_logarithm() {
    let la = LocalAddition::riemannian(&Manifold::Circle).unwrap();
    let p = Point::from_ambient(&Manifold::Circle, &circle(0.0)).unwrap();
    let q = Point::from_ambient(&Manifold::Circle, &circle(0.3)).unwrap();
    let v = la.theta_inverse(&p, &q).unwrap();
    assert!(close(&v.ambient_velocity(&Manifold::Circle), &[0.0, 0.3], 1e-14));
}

#[test]
fn circle_group_addition_is_exponential() {
    let la = LocalAddition::lie_group(&LieGroupInstance::Circle);
    for s in [0.1, 1.0, 2.5] {
        let v = Tangent::from_ambient(&Manifold::Circle, &[1.0, 0.0], &[0.0, s]).unwrap();
        assert!(close(&la.apply(&v).unwrap().ambient, &circle(s), 1e-14));
    }
}

#[test]
fn so3_addition_matches_matrix_exponential() {
    let la = LocalAddition::lie_group(&LieGroupInstance::So3);
    let r0 = Rotation3::from_scaled_axis(Vector3::new(0.3, -0.2, 0.9));
    let xi = Vector3::new(0.05, 0.02, -0.04);
    let hat = Matrix3::new(0.0, -xi[2], xi[1], xi[2], 0.0, -xi[0], -xi[1], xi[0], 0.0);
    let row_major =
        |m: &Matrix3<f64>| -> Vec<f64> { (0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])).collect() };
    let p = row_major(r0.matrix());
    let u = row_major(&(r0.matrix() * hat));
    let v = Tangent::from_ambient(&Manifold::So3, &p, &u).unwrap();
    let expect = row_major((r0 * Rotation3::from_scaled_axis(xi)).matrix());
    assert!(close(&la.apply(&v).unwrap().ambient, &expect, 1e-13));
}

#[test]
fn scaled_addition_normalizes() {
    let m = Manifold::Circle;
    let la = LocalAddition::riemannian(&m).unwrap().scaled(2.0).normalize().unwrap();
    for t in [-2.0, 0.4, 3.0] {
        let p = Point::from_ambient(&m, &circle(t)).unwrap();
        let h = 1e-5;
        // Independent central difference of the angle of Σ(p, s·Jp) at s = 0.
        let at = |s: f64| {
            let v = Tangent::from_ambient(&m, &p.ambient, &[-s * t.sin(), s * t.cos()]).unwrap();
            angle(&la.apply(&v).unwrap().ambient)
        };
        let d = (at(h) - at(-h)) / (2.0 * h);
        assert!((d - 1.0).abs() < 1e-6, "{d}");
    }
}

#[test]
fn tangent_lift_projects_to_flipped_base() {
    for m in [Manifold::Circle, Manifold::Sphere] {
        let la = LocalAddition::riemannian(&m).unwrap();
        let lift = la.tangent_lift();
        let d = m.dim();
        let base = m.sample(&mut lie_currents::seed::stream_rng(d as u64, 77));
        let p = Point::from_ambient(&m, &base).unwrap();
        let s = SecondTangent {
            chart: p.chart,
            x: p.coords.clone(),
            y: vec![0.3; d],
            z: vec![0.2; d],
            w: vec![-0.1; d],
        };
        let out = lift.apply(&s.as_bundle_tangent(&m)).unwrap();
        let flipped_base = Tangent { base: p.clone(), vel: s.z.clone() };
        let expect = la.apply(&flipped_base).unwrap();
        let (proj, _) = m.tangent_bundle().split_ambient(&out.ambient);
        assert!(close(proj, &expect.ambient, 1e-12), "{}", m.id());
    }
}

#[test]
fn circle_tangent_lift_is_product_addition() {
    let m = Manifold::Circle;
    let lift = LocalAddition::riemannian(&m).unwrap().tangent_lift();
    let tm = m.tangent_bundle();
    let (th, s, a, b): (f64, f64, f64, f64) = (0.4, 0.7, 0.25, -0.3);
    // TS¹ ≅ S¹ × ℝ by (p, s·Jp); the product addition adds angles and speeds.
    let w = Point::from_ambient(&tm, &[th.cos(), th.sin(), -s * th.sin(), s * th.cos()]).unwrap();
    let dir =
        [-a * th.sin(), a * th.cos(), -b * th.sin() - s * a * th.cos(), b * th.cos() - s * a * th.sin()];
    let v = Tangent::from_ambient(&tm, &w.ambient, &dir).unwrap();
    let out = lift.apply(&v).unwrap();
    let (t2, s2) = (th + a, s + b);
    assert!(close(&out.ambient, &[t2.cos(), t2.sin(), -s2 * t2.sin(), s2 * t2.cos()], 1e-12));
}

#[test]
fn pair_groupoid_inverse_and_product() {
    let g = catalog("pair:R2").unwrap();
    let (a, b, c) = ([1.0, 2.0], [3.0, -1.0], [0.5, 0.25]);
    let cat = |x: &[f64], y: &[f64]| [x, y].concat();
    assert_eq!(g.iota_of(&cat(&a, &b)), cat(&b, &a));
    assert_eq!(g.mu_of(&cat(&a, &b), &cat(&b, &c)), cat(&a, &c));
    assert_eq!(g.alpha_of(&cat(&a, &b)), b.to_vec());
    assert_eq!(g.beta_of(&cat(&a, &b)), a.to_vec());
}

#[test]
fn classification_of_catalog_groupoids() {
    assert!(catalog("finite:Z4-R2").unwrap().classify_etale(50, 1).unwrap().holds);
    assert!(catalog("pair:R1").unwrap().classify_locally_transitive(50, 1).unwrap().holds);
    let unit = catalog("unit:R1").unwrap().classify_locally_transitive(50, 1).unwrap();
    assert!(!unit.holds);
}

#[test]
fn isotropy_by_enumeration() {
    let z4 = catalog("finite:Z4-R2").unwrap();
    let grp = z4.finite_group().unwrap();
    for (x, expect) in [([0.0, 0.0], 4), ([1.0, 0.0], 1)] {
        let brute = (0..grp.order()).filter(|&k| close(&grp.act(k, &x), &x, 1e-14)).count();
        assert_eq!(brute, expect);
        assert_eq!(z4.isotropy_group(&x).unwrap().order(), expect);
    }
    assert_eq!(catalog("finite:Z2-R1").unwrap().isotropy_group(&[0.0]).unwrap().order(), 2);
}

#[test]
fn squaring_pushforward_doubles_winding_and_speed() {
    let id = named_loop("identity-loop", 256).unwrap();
    let sq = pushforward(&circle_square(), &id).unwrap();
    assert_eq!(degree(&sq).unwrap(), 2);
    assert_eq!(degree(&named_loop("double-loop", 64).unwrap()).unwrap(), 2);
    let u: Vec<Vec<f64>> = id.values.iter().map(|p| vec![-0.5 * p.ambient[1], 0.5 * p.ambient[0]]).collect();
    let tau = GridSection::from_ambient(&id, &u);
    let out = pushforward_tangent(&circle_square(), &id, &tau).unwrap();
    for v in out.ambient_velocities() {
        assert!(((v[0] * v[0] + v[1] * v[1]).sqrt() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn chart_rotates_identity_loop() {
    let id = named_loop("identity-loop", 64).unwrap();
    let sigma = LocalAddition::riemannian(&Manifold::Circle).unwrap();
    let u: Vec<Vec<f64>> = id.values.iter().map(|p| vec![-0.1 * p.ambient[1], 0.1 * p.ambient[0]]).collect();
    let moved = chart_phi(&sigma, &id, &GridSection::from_ambient(&id, &u)).unwrap();
    for (i, p) in moved.values.iter().enumerate() {
        assert!(close(&p.ambient, &circle(id.grid.node(i) + 0.1), 1e-13));
    }
}

#[test]
fn classifier_on_catalog_maps() {
    let grid = GridSpec::circle(16);
    let line = GridMap::from_fn(grid, &Manifold::Euclidean(1), |x| vec![x.sin()]).unwrap();
    let plane = GridMap::from_fn(grid, &Manifold::Euclidean(2), |x| vec![x.cos(), 0.3]).unwrap();
    let cases = [
        (projection_r2_r(), &plane, PushforwardVerdict::SubmersionOnTrace),
        (inclusion_r_r2(), &line, PushforwardVerdict::ImmersionOnTrace),
        (covering_map(), &line, PushforwardVerdict::LocalDiffeoOnTrace),
    ];
    for (f, g, want) in cases {
        assert_eq!(classify_pushforward(&f, g).unwrap().verdict, want, "{}", f.name);
    }
}

#[test]
fn covering_lift_is_logarithm_branch() {
    let grid = GridSpec::circle(64);
    let f = covering_map();
    let gamma0 = GridMap::from_fn(grid, &Manifold::Euclidean(1), |_| vec![0.0]).unwrap();
    let eta = GridMap::from_fn(grid, &Manifold::Circle, |x| circle(0.3 * x.sin())).unwrap();
    let lift = local_diffeo_inverse(&f, &gamma0, &eta, LiftOptions::for_map(&f)).unwrap();
    for (i, p) in lift.values.iter().enumerate() {
        let e = &eta.values[i].ambient;
        assert!((p.ambient[0] - e[1].atan2(e[0])).abs() < 1e-10);
    }
    let back = pushforward(&f, &lift).unwrap();
    assert!(seminorm_distance(&back, &eta).orders[0] < 1e-10);
}

#[test]
fn identity_loop_order_one_seminorm() {
    for n in [64, 256, 1024] {
        let id = named_loop("identity-loop", n).unwrap();
        let c = named_loop("constant-loop", n).unwrap();
        let s = seminorm_distance(&id, &c).orders[1];
        assert!((s - 1.0).abs() <= 10.0 / n as f64, "{n}: {s}");
    }
}

#[test]
fn constant_anchor_preimage() {
    let grid = GridSpec::circle(32);
    let a = GridMap::from_fn(grid, &Manifold::Circle, |_| circle(0.0)).unwrap();
    let b = GridMap::from_fn(grid, &Manifold::Circle, |_| circle(0.7)).unwrap();
    let cert = anchor_preimage(&a, &b).unwrap();
    assert_eq!(cert.verdict, Verdict::Verified);
    for t in cert.witness_data["preimage"].as_array().unwrap() {
        assert!((t.as_f64().unwrap() - 0.7).abs() < 1e-12);
    }
}

#[test]
fn winding_family_seminorms() {
    let cert = properness_failure_witness(GridSpec::circle(256)).unwrap();
    let n = 256.0;
    let h = 2.0 * PI / n;
    for row in cert.witness_data["seminorms"].as_array().unwrap() {
        let k = row["k"].as_f64().unwrap();
        // Chord over one grid step of the unit-speed base and the speed-k fibre loop.
        let fd = ((2.0 * (h / 2.0).sin()).powi(2) + (2.0 * (k * h / 2.0).sin()).powi(2)).sqrt() / h;
        let base_chord = 2.0 * (h / 2.0).sin() / h;
        let s = row["order1"].as_f64().unwrap();
        assert!((s / k - 1.0).abs() <= 0.05);
        assert!(s <= fd + 1e-9 && s >= (fd - base_chord) - 1e-9, "{k}: {s} vs {fd}");
    }
    assert!(cert.witness_data["min_pairwise_order0"].as_f64().unwrap() >= 1.0);
}

#[test]
fn z4_fibres_by_enumeration() {
    let cur = CurrentGroupoid::build(catalog("finite:Z4-R2").unwrap(), GridSpec::circle(32));
    let a: Vec<Vec<f64>> = (0..32)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / 32.0;
            vec![2.0 + 0.5 * t.cos(), 0.5 * t.sin()]
        })
        .collect();
    let quarter = |p: &Vec<f64>| vec![-p[1], p[0]];
    let b: Vec<Vec<f64>> = a.iter().map(quarter).collect();
    let same = enumerate_fiber(&cur, &a, &a).unwrap();
    let turned = enumerate_fiber(&cur, &a, &b).unwrap();
    assert_eq!(same.anchor_fiber, vec![0]);
    assert_eq!(turned.anchor_fiber.len(), 1);
    assert_eq!(same.source_fiber, 4);
    let total: usize = (0..4)
        .map(|k| {
            let bk: Vec<Vec<f64>> = a.iter().map(|p| cur.base.finite_group().unwrap().act(k, p)).collect();
            enumerate_fiber(&cur, &a, &bk).unwrap().anchor_fiber.len()
        })
        .sum();
    assert_eq!(total, 4);
}

#[test]
fn restricted_current_membership() {
    let grid = GridSpec::circle(8);
    let cur = CurrentGroupoid::build(catalog("pair:R1").unwrap(), grid);
    let omega = OpenSet::Box { lo: vec![0.0], hi: vec![1.0] };
    let mut x = vec![vec![1.5]; 8];
    let floor = cur.restriction_subgroupoid(CurrentRestriction::Floor(omega.clone()));
    assert!(!floor.contains_object(&x));
    x[3] = vec![0.5];
    let meet = cur.restriction_subgroupoid(CurrentRestriction::Intersect(omega));
    assert!(meet.contains_object(&x));
    assert!(!floor.contains_object(&x));
}

#[test]
fn reindexing_isomorphisms_commute() {
    let cur = CurrentGroupoid::build(catalog("pair:S1").unwrap(), GridSpec::circle(16));
    assert!(pair_iso(&cur, 500, 3).unwrap().max_residual <= 1e-10);
    let act = CurrentGroupoid::build(catalog("action:R-S1").unwrap(), GridSpec::circle(16));
    assert!(action_iso(&act, 200, 3).unwrap().max_residual <= 1e-10);
}

#[test]
fn pair_algebroid_is_tangent_bundle() {
    let alg = algebroid_of_groupoid(&catalog("pair:R2").unwrap()).unwrap();
    assert_eq!(alg.rank, 2);
    let v = AlgebroidSection::Ambient(ambient_fn!(|y| vec![
        y[0] * 0.0 + 1.0,
        y[0] * 0.0,
        y[0] * 0.0,
        y[0] * 0.0
    ]));
    let w = AlgebroidSection::Ambient(ambient_fn!(|y| vec![y[0] * 0.0, y[0], y[0] * 0.0, y[0] * 0.0]));
    let y = [0.4, -1.3];
    assert!(close(&alg.anchor_at(&w, &y).unwrap(), &[0.0, 0.4], 1e-15));
    // →W(a, b) = (W(a), 0).
    let g = [2.0, 1.0, -0.5, 0.7];
    assert!(close(&alg.right_invariant_at(&w, &g).unwrap(), &[0.0, 2.0, 0.0, 0.0], 1e-14));
    // [∂x, x∂y] = ∂y.
    assert!(close(&alg.bracket_at(&v, &w, &y).unwrap(), &[0.0, 1.0, 0.0, 0.0], 1e-13));
}

#[test]
fn action_anchor_is_fundamental_field() {
    let gpd = catalog("action:R-S1").unwrap();
    let alg = algebroid_of_groupoid(&gpd).unwrap();
    assert_eq!(alg.rank, 1);
    let one = AlgebroidSection::constant(&[1.0]);
    for th in [0.0, 1.0, -2.5] {
        let a = alg.anchor_at(&one, &circle(th)).unwrap();
        // d/dt e^{it}·m is tangent to the circle: a multiple of (−sin, cos).
        let fundamental = [-th.sin(), th.cos()];
        let cross = a[0] * fundamental[1] - a[1] * fundamental[0];
        assert!(cross.abs() < 1e-12 && (a[0] * a[0] + a[1] * a[1]).sqrt() > 0.1);
    }
}

#[test]
fn so3_bracket_sign_is_anti() {
    let rep = sign_convention_check(&LieGroupInstance::So3).unwrap();
    assert!(rep.consistent);
    assert!(rep.signs.iter().all(|&s| s == -1.0), "{:?}", rep.signs);
    assert_eq!(rep.signs, rep.oracle_signs);
    let circle = sign_convention_check(&LieGroupInstance::Circle).unwrap();
    assert!(circle.abelian);
}

#[test]
fn local_action_forms() {
    let z4 = catalog("finite:Z4-R2").unwrap();
    let at0 = local_action_form(&z4, &[0.0, 0.0]).unwrap();
    assert_eq!(at0.isotropy.len(), 4);
    assert!(at0.residuals.max() <= 1e-9);
    let y = [0.01, 0.02];
    let quarter = [-y[1], y[0]];
    let k = (0..4).find(|&k| close(&z4.finite_group().unwrap().act(k, &y), &quarter, 1e-15)).unwrap();
    assert!(close(&at0.delta(&z4, k, &y).unwrap(), &quarter, 1e-15));
    assert_eq!(local_action_form(&z4, &[1.0, 0.0]).unwrap().isotropy, vec![0]);
    let z2 = catalog("finite:Z2-R1").unwrap();
    let f = local_action_form(&z2, &[0.0]).unwrap();
    assert_eq!(f.isotropy.len(), 2);
    assert!((f.delta(&z2, 1, &[0.05]).unwrap()[0] + 0.05).abs() < 1e-15);
}

#[test]
fn quarter_arc_lifts_to_rotation() {
    let z4 = catalog("finite:Z4-R2").unwrap();
    let grp = z4.finite_group().unwrap().clone();
    let grid = GridSpec::new(GridKind::Interval, 33, 2).unwrap();
    let reps: Vec<Vec<f64>> =
        (0..33).map(|i| grp.act((i * 7) % 4, &circle(FRAC_PI_2 * grid.node(i)))).collect();
    let path = OrbitSpacePath::new(&z4, grid, reps).unwrap();
    let lift = path_lift(&z4, &path, &[1.0, 0.0]).unwrap();
    assert!(close(&lift.values[32].ambient, &[0.0, 1.0], 1e-12));
    for g in 0..4 {
        let other = path_lift(&z4, &path, &grp.act(g, &[1.0, 0.0])).unwrap();
        assert!(close(&other.values[32].ambient, &grp.act(g, &[0.0, 1.0]), 1e-12));
    }
}

#[test]
fn atlas_loops_and_identity() {
    let grid = GridSpec::circle(64);
    let arc: Vec<(AtlasChart, f64)> = (0..64)
        .map(|i| (AtlasChart::A, atlas_coordinate(AtlasChart::A, 0.5 * grid.node(i).sin()).unwrap()))
        .collect();
    assert_eq!(atlas_loop_component(grid, &arc).unwrap(), AtlasChart::A);
    for n in [64, 256] {
        assert_eq!(
            atlas_connectivity_negative_test(GridSpec::circle(n)).unwrap().verdict,
            Verdict::Obstructed
        );
    }
}
