//! Named groupoid instances.
//!
//! Ids: `unit:<M>`, `pair:<M>`, `action:R-S1`, `action:SO3-R3`,
//! `action:SO3-S2`, `action:S1-S2`, `bundle:S1xS1`, `finite:Z<k>-R2`
//! (rotations), `finite:Z2-R1` (reflection), `finite:Z<k>-S1` (rotations),
//! `group:<G>` for `G ∈ {S1, SO3, R<n>}`.

use std::sync::Arc;

use super::{FiniteGroup, GroupoidKind, LieGroupoid, OpenSet};
use crate::ad::{AmbientFn, Jet, Scalar};
use crate::error::{Error, Result};
use crate::geom::Manifold;
use crate::lie_group::{complex_mul, LieGroupInstance};
use crate::{ambient_fn, generic_fn};

/// Ids of the default catalog, in report order.
pub fn catalog_ids() -> &'static [&'static str] {
    &[
        "unit:R1",
        "unit:S1",
        "pair:R1",
        "pair:R2",
        "pair:S1",
        "action:R-S1",
        "action:SO3-R3",
        "bundle:S1xS1",
        "finite:Z4-R2",
        "finite:Z2-R1",
        "finite:Z3-S1",
        "group:S1",
        "group:SO3",
        "group:R2",
    ]
}

pub fn catalog(id: &str) -> Result<LieGroupoid> {
    let unknown = || Error::UnknownId(id.to_string());
    let (family, arg) = id.split_once(':').ok_or_else(unknown)?;
    let mut g = match (family, arg) {
        ("unit", m) => unit(Manifold::parse(m).map_err(|_| unknown())?),
        ("pair", m) => pair(Manifold::parse(m).map_err(|_| unknown())?),
        ("action", "R-S1") => {
            let act = generic_fn!([] |x: S| {
                let (c, s) = (x[0].cos(), x[0].sin());
                complex_mul(&[c, s], &x[1..3])
            });
            action(LieGroupInstance::Translations(1), Manifold::Circle, act)
        }
        ("action", "SO3-R3") | ("action", "SO3-S2") => {
            let m = if arg.ends_with("R3") { Manifold::Euclidean(3) } else { Manifold::Sphere };
            let act = generic_fn!([] |x: S| LieGroupInstance::So3.act(&x[..9], &x[9..12]));
            action(LieGroupInstance::So3, m, act)
        }
        ("action", "S1-S2") => {
            // Rotation about the z-axis.
            let act = generic_fn!([] |x: S| {
                let r = complex_mul(&x[..2], &x[2..4]);
                vec![r[0], r[1], x[4]]
            });
            action(LieGroupInstance::Circle, Manifold::Sphere, act)
        }
        ("bundle", "S1xS1") => bundle(),
        ("finite", spec) => {
            let (grp, m) = spec.split_once('-').ok_or_else(unknown)?;
            let k: usize =
                grp.strip_prefix('Z').and_then(|s| s.parse().ok()).filter(|&k| k >= 1).ok_or_else(unknown)?;
            match m {
                "R2" => finite(FiniteGroup::rotations(k), Manifold::Euclidean(2)),
                "S1" => finite(FiniteGroup::rotations(k), Manifold::Circle),
                "R1" if k == 2 => finite(FiniteGroup::reflection(), Manifold::Euclidean(1)),
                _ => return Err(unknown()),
            }
        }
        ("group", "S1") => group(LieGroupInstance::Circle),
        ("group", "SO3") => group(LieGroupInstance::So3),
        ("group", r) => match r.strip_prefix('R').and_then(|s| s.parse().ok()) {
            Some(n) => group(LieGroupInstance::Translations(n)),
            None => return Err(unknown()),
        },
        _ => return Err(unknown()),
    };
    g.id = id.to_string();
    Ok(g)
}

fn base_groupoid(
    id: String,
    arrows: Manifold,
    base: Manifold,
    maps: [AmbientFn; 5],
    kind: GroupoidKind,
    fiber: Manifold,
    arrow_with_target: super::ArrowBuilder,
) -> LieGroupoid {
    let [alpha, beta, mu, iota, unit] = maps;
    LieGroupoid {
        id,
        arrows,
        base,
        alpha,
        beta,
        mu,
        iota,
        unit,
        kind,
        restriction: OpenSet::All,
        fiber,
        arrow_with_target,
    }
}

/// Every structure map is the identity.
pub fn unit(m: Manifold) -> LieGroupoid {
    let a = m.ambient_dim();
    let id = ambient_fn!(|x| x.to_vec());
    base_groupoid(
        format!("unit:{}", m.id()),
        m.clone(),
        m,
        [id.clone(), id.clone(), ambient_fn!([a] | x | x[..a].to_vec()), id.clone(), id],
        GroupoidKind::Unit,
        Manifold::Euclidean(0),
        Arc::new(|x, _| x.to_vec()),
    )
}

/// `(a, b)·(b, c) = (a, c)` with `β(a, b) = a`, `α(a, b) = b`.
pub fn pair(m: Manifold) -> LieGroupoid {
    let a = m.ambient_dim();
    base_groupoid(
        format!("pair:{}", m.id()),
        Manifold::product(m.clone(), m.clone()),
        m.clone(),
        [
            ambient_fn!([a] | g | g[a..].to_vec()),
            ambient_fn!([a] | g | g[..a].to_vec()),
            ambient_fn!(
                [a] | g | {
                    let mut v = g[..a].to_vec();
                    v.extend_from_slice(&g[3 * a..]);
                    v
                }
            ),
            ambient_fn!(
                [a] | g | {
                    let mut v = g[a..].to_vec();
                    v.extend_from_slice(&g[..a]);
                    v
                }
            ),
            ambient_fn!(|x| {
                let mut v = x.to_vec();
                v.extend_from_slice(x);
                v
            }),
        ],
        GroupoidKind::Pair,
        m,
        Arc::new(|x, f| {
            let mut v = x.to_vec();
            v.extend_from_slice(f);
            v
        }),
    )
}

/// `H ⋉ M`: `α(h, m) = m`, `β(h, m) = h.m`, `(g, h.m)(h, m) = (gh, m)`.
/// `act` takes the concatenation `[h, m]`.
pub fn action(h: LieGroupInstance, m: Manifold, act: AmbientFn) -> LieGroupoid {
    let hd = h.manifold().ambient_dim();
    let md = m.ambient_dim();
    let ad = hd + md;
    let e = h.identity();
    let grp = h.clone();
    let act_b = act.clone();
    let act_i = act.clone();
    let act_f = act.clone();
    let grp_i = h.clone();
    let grp_f = h.clone();
    let beta = generic_fn!([act_b] |g: S| act_b.eval_s::<S>(g));
    let mu = generic_fn!([grp, hd, ad] |x: S| {
        let mut v = grp.mul::<S>(&x[..hd], &x[ad..ad + hd]);
        v.extend_from_slice(&x[ad + hd..]);
        v
    });
    let iota = generic_fn!([grp_i, act_i, hd] |g: S| {
        let mut v = grp_i.inv::<S>(&g[..hd]);
        v.extend(act_i.eval_s::<S>(g));
        v
    });
    let unit = generic_fn!([e] |x: S| {
        let mut v: Vec<S> = e.iter().map(|&c| S::cst(c)).collect();
        v.extend_from_slice(x);
        v
    });
    base_groupoid(
        format!("action:{}-{}", h.id(), m.id()),
        Manifold::product(h.manifold(), m.clone()),
        m,
        [ambient_fn!([hd] | g | g[hd..].to_vec()), beta, mu, iota, unit],
        GroupoidKind::Action { group: h.clone(), act },
        h.manifold(),
        // (k, k⁻¹.x) has target x.
        Arc::new(move |x, k| {
            let mut arg = grp_f.inv::<f64>(k);
            arg.extend_from_slice(x);
            let mut v = k.to_vec();
            v.extend(act_f.eval(&arg));
            v
        }),
    )
}

/// Group bundle `S¹ × S¹ ⇉ S¹` over the first factor.
pub fn bundle() -> LieGroupoid {
    let pr1 = ambient_fn!(|g| g[..2].to_vec());
    base_groupoid(
        "bundle:S1xS1".into(),
        Manifold::torus(),
        Manifold::Circle,
        [
            pr1.clone(),
            pr1,
            generic_fn!([] |x: S| {
                let mut v = x[..2].to_vec();
                v.extend(complex_mul(&x[2..4], &x[6..8]));
                v
            }),
            ambient_fn!(|g| vec![g[0], g[1], g[2], -g[3]]),
            generic_fn!([] |x: S| vec![x[0], x[1], S::cst(1.0), S::cst(0.0)]),
        ],
        GroupoidKind::Bundle,
        Manifold::Circle,
        Arc::new(|x, f| vec![x[0], x[1], f[0], f[1]]),
    )
}

fn jet_index(k: usize) -> Jet {
    Jet::constant(k as f64)
}

/// `Γ ⋉ M` for a finite group of affine maps of the ambient space of `M`.
/// Arrows are `(k, m)` with `k` the element index.
pub fn finite(grp: FiniteGroup, m: Manifold) -> LieGroupoid {
    assert_eq!(grp.dim, m.ambient_dim());
    let n = grp.order();
    let md = m.ambient_dim();
    let ad = 1 + md;
    let grp = Arc::new(grp);
    let (g1, g2, g3, g4) = (grp.clone(), grp.clone(), grp.clone(), grp.clone());
    let (j1, j2, j3) = (grp.clone(), grp.clone(), grp.clone());
    let beta = AmbientFn::new(
        move |g: &[f64]| g1.act(g1.index_of(g[0]), &g[1..]),
        move |g: &[Jet]| j1.act(j1.index_of(g[0]), &g[1..]),
    );
    let mu = AmbientFn::new(
        move |x: &[f64]| {
            let c = g2.mul(g2.index_of(x[0]), g2.index_of(x[ad]));
            let mut v = vec![c as f64];
            v.extend_from_slice(&x[ad + 1..]);
            v
        },
        move |x: &[Jet]| {
            let c = j2.mul(j2.index_of(x[0]), j2.index_of(x[ad]));
            let mut v = vec![jet_index(c)];
            v.extend_from_slice(&x[ad + 1..]);
            v
        },
    );
    let iota = AmbientFn::new(
        move |g: &[f64]| {
            let k = g3.index_of(g[0]);
            let mut v = vec![g3.inverse[k] as f64];
            v.extend(g3.act(k, &g[1..]));
            v
        },
        move |g: &[Jet]| {
            let k = j3.index_of(g[0]);
            let mut v = vec![jet_index(j3.inverse[k])];
            v.extend(j3.act(k, &g[1..]));
            v
        },
    );
    let unit = generic_fn!([] |x: S| {
        let mut v = vec![S::cst(0.0)];
        v.extend_from_slice(x);
        v
    });
    base_groupoid(
        format!("finite:{}-{}", grp.name, m.id()),
        Manifold::product(Manifold::Discrete(n), m.clone()),
        m,
        [ambient_fn!(|g| g[1..].to_vec()), beta, mu, iota, unit],
        GroupoidKind::FiniteAction(grp),
        Manifold::Discrete(n),
        Arc::new(move |x, f| {
            let k = g4.index_of(f[0]);
            let mut v = vec![k as f64];
            v.extend(g4.act(g4.inverse[k], x));
            v
        }),
    )
}

/// A Lie group as a groupoid over a point.
pub fn group(h: LieGroupInstance) -> LieGroupoid {
    let a = h.manifold().ambient_dim();
    let e = h.identity();
    let (g1, g2) = (h.clone(), h.clone());
    base_groupoid(
        format!("group:{}", h.id()),
        h.manifold(),
        Manifold::Euclidean(0),
        [
            ambient_fn!(|_g| Vec::new()),
            ambient_fn!(|_g| Vec::new()),
            generic_fn!([g1, a] |x: S| g1.mul::<S>(&x[..a], &x[a..])),
            generic_fn!([g2] |x: S| g2.inv::<S>(x)),
            generic_fn!([e] |_x: S| e.iter().map(|&c| S::cst(c)).collect()),
        ],
        GroupoidKind::Group(h.clone()),
        h.manifold(),
        Arc::new(|_, f| f.to_vec()),
    )
}

/// Apply `f` blockwise to `n` consecutive blocks of width `w`.
fn blockwise(f: AmbientFn, w: usize, n: usize) -> AmbientFn {
    let f2 = f.clone();
    AmbientFn::new(
        move |x: &[f64]| (0..n).flat_map(|k| f.eval(&x[k * w..(k + 1) * w])).collect(),
        move |x: &[Jet]| (0..n).flat_map(|k| f2.eval_jet(&x[k * w..(k + 1) * w])).collect(),
    )
}

/// Pointwise `n`-fold power `Gⁿ ⇉ Mⁿ`.
pub fn power_groupoid(g: &LieGroupoid, n: usize) -> LieGroupoid {
    let a = g.arrows.ambient_dim();
    let b = g.base.ambient_dim();
    let fd = g.fiber.ambient_dim();
    // μ on powers takes [g_0..g_{n-1}, h_0..h_{n-1}]; interleave for the base μ.
    let mu0 = g.mu.clone();
    let mu1 = g.mu.clone();
    let mu = AmbientFn::new(
        move |x: &[f64]| {
            (0..n)
                .flat_map(|k| {
                    let mut arg = x[k * a..(k + 1) * a].to_vec();
                    arg.extend_from_slice(&x[(n + k) * a..(n + k + 1) * a]);
                    mu0.eval(&arg)
                })
                .collect()
        },
        move |x: &[Jet]| {
            (0..n)
                .flat_map(|k| {
                    let mut arg = x[k * a..(k + 1) * a].to_vec();
                    arg.extend_from_slice(&x[(n + k) * a..(n + k + 1) * a]);
                    mu1.eval_jet(&arg)
                })
                .collect()
        },
    );
    let builder = g.arrow_with_target.clone();
    let restriction = g.restriction.clone();
    LieGroupoid {
        id: format!("({})^{n}", g.id),
        arrows: Manifold::power(g.arrows.clone(), n),
        base: Manifold::power(g.base.clone(), n),
        alpha: blockwise(g.alpha.clone(), a, n),
        beta: blockwise(g.beta.clone(), a, n),
        mu,
        iota: blockwise(g.iota.clone(), a, n),
        unit: blockwise(g.unit.clone(), b, n),
        kind: GroupoidKind::Power(Box::new(g.kind.clone()), n),
        restriction: match restriction {
            OpenSet::All => OpenSet::All,
            OpenSet::Empty => OpenSet::Empty,
            r => OpenSet::Custom(Arc::new(move |x| (0..n).all(|k| r.contains(&x[k * b..(k + 1) * b])))),
        },
        fiber: Manifold::power(g.fiber.clone(), n),
        arrow_with_target: Arc::new(move |x, f| {
            (0..n).flat_map(|k| builder(&x[k * b..(k + 1) * b], &f[k * fd..(k + 1) * fd])).collect()
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in catalog_ids() {
            assert_eq!(catalog(id).unwrap().id, *id);
        }
        assert!(catalog("finite:Z6-R2").is_ok());
        assert!(matches!(catalog("pair:Q7"), Err(Error::UnknownId(_))));
        assert!(matches!(catalog("nonsense"), Err(Error::UnknownId(_))));
    }

    #[test]
    fn target_builder_hits_target() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        for id in catalog_ids() {
            let g = catalog(id).unwrap();
            for _ in 0..20 {
                let x = g.base.sample(&mut rng);
                let f = g.fiber.sample(&mut rng);
                let h = (g.arrow_with_target)(&x, &f);
                assert!(crate::linalg::dist(&g.beta_of(&h), &x) < 1e-12, "{id}");
            }
        }
    }

    #[test]
    fn power_passes_axioms() {
        let p = power_groupoid(&catalog("action:R-S1").unwrap(), 4);
        assert!(p.check_axioms(100, 3).unwrap().max_residual() < 1e-12);
        let f = power_groupoid(&catalog("finite:Z4-R2").unwrap(), 3);
        assert!(f.check_axioms(100, 3).unwrap().max_residual() < 1e-12);
    }
}
