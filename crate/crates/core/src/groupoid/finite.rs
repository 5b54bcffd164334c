//! Finite groups of affine maps `x ↦ A x + b` on an ambient space.

use serde::Serialize;

use crate::ad::Scalar;
use crate::linalg::dist;

#[derive(Clone, Debug, Serialize)]
pub struct FiniteGroup {
    pub name: String,
    /// Ambient dimension the maps act on.
    pub dim: usize,
    /// Row-major `dim × dim` matrices; element 0 is the identity.
    pub mats: Vec<Vec<f64>>,
    pub trans: Vec<Vec<f64>>,
    /// `table[a][b]` is the index of `a·b` (apply `b` first).
    pub table: Vec<Vec<usize>>,
    pub inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Closure of the given affine generators under composition.
    pub fn generated(name: &str, dim: usize, gens: &[(Vec<f64>, Vec<f64>)]) -> FiniteGroup {
        let mut id = vec![0.0; dim * dim];
        for i in 0..dim {
            id[i * dim + i] = 1.0;
        }
        let mut elems: Vec<(Vec<f64>, Vec<f64>)> = vec![(id, vec![0.0; dim])];
        let mut frontier = 0;
        while frontier < elems.len() {
            let (a, b) = elems[frontier].clone();
            for (ga, gb) in gens {
                let c = compose_affine(dim, (ga, gb), (&a, &b));
                if !elems.iter().any(|e| same(e, &c)) {
                    elems.push(c);
                }
                assert!(elems.len() <= 1024, "generators do not close up to a small finite group");
            }
            frontier += 1;
        }
        let n = elems.len();
        let table: Vec<Vec<usize>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let c = compose_affine(dim, (&elems[a].0, &elems[a].1), (&elems[b].0, &elems[b].1));
                        elems.iter().position(|e| same(e, &c)).expect("closed")
                    })
                    .collect()
            })
            .collect();
        let inverse = (0..n).map(|a| (0..n).find(|&b| table[a][b] == 0).expect("group")).collect();
        let (mats, trans) = elems.into_iter().unzip();
        FiniteGroup { name: name.to_string(), dim, mats, trans, table, inverse }
    }

    /// Cyclic group of rotations of ℝ² by multiples of `2π/k`.
    pub fn rotations(k: usize) -> FiniteGroup {
        let t = 2.0 * std::f64::consts::PI / k as f64;
        let (s, c) = t.sin_cos();
        FiniteGroup::generated(&format!("Z{k}"), 2, &[(vec![c, -s, s, c], vec![0.0, 0.0])])
    }

    /// `x ↦ −x` on ℝ.
    pub fn reflection() -> FiniteGroup {
        FiniteGroup::generated("Z2", 1, &[(vec![-1.0], vec![0.0])])
    }

    pub fn order(&self) -> usize {
        self.mats.len()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn act<S: Scalar>(&self, k: usize, x: &[S]) -> Vec<S> {
        let d = self.dim;
        let a = &self.mats[k];
        let b = &self.trans[k];
        (0..d)
            .map(|i| {
                let mut acc = S::cst(b[i]);
                for j in 0..d {
                    if a[i * d + j] != 0.0 {
                        acc = acc + x[j] * a[i * d + j];
                    }
                }
                acc
            })
            .collect()
    }

    /// Group element encoded in a jet or float coordinate.
    pub fn index_of<S: Scalar>(&self, v: S) -> usize {
        (v.val().round().max(0.0) as usize).min(self.order() - 1)
    }
}

fn compose_affine(
    dim: usize,
    (a1, b1): (&Vec<f64>, &Vec<f64>),
    (a2, b2): (&Vec<f64>, &Vec<f64>),
) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; dim * dim];
    let mut b = b1.clone();
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = 0.0;
            for k in 0..dim {
                acc += a1[i * dim + k] * a2[k * dim + j];
            }
            a[i * dim + j] = clean(acc);
            b[i] += a1[i * dim + j] * b2[j];
        }
    }
    let b = b.into_iter().map(clean).collect();
    (a, b)
}

/// Snap round-off so that rotation tables close exactly.
fn clean(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-12 {
        r
    } else {
        v
    }
}

fn same(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)) -> bool {
    dist(&a.0, &b.0) < 1e-9 && dist(&a.1, &b.1) < 1e-9
}
