//! Grid shadows of mapping spaces `C^ℓ(K, M)` for `K` a circle or a closed
//! interval.

mod maps;
mod ops;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Manifold, Point, Tangent};
use crate::linalg::dist;

pub use maps::{
    circle_embedding, circle_retraction, circle_square, covering_map, inclusion_r_r2, named_loop,
    projection_r2_r, random_curve, random_loop, random_section, NAMED_LOOPS,
};
pub use ops::{
    chart_phi, chart_phi_inverse, classify_pushforward, degree, local_diffeo_inverse, pushforward,
    pushforward_tangent, pushforward_tangent_via_chart, superposition, LiftOptions, PushforwardClass,
    PushforwardVerdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Circle,
    Interval,
}

/// Uniform grid on `K`: circle nodes `2πi/n`, interval nodes `i/(n-1)` on
/// `[0, 1]` (both endpoints included).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub n: usize,
    pub ell: usize,
}

impl GridSpec {
    pub fn new(kind: GridKind, n: usize, ell: usize) -> Result<GridSpec> {
        if n < 8 {
            return Err(Error::Config(format!("grid needs n ≥ 8, got {n}")));
        }
        if ell > 2 {
            return Err(Error::Config(format!("regularity order ell ≤ 2, got {ell}")));
        }
        Ok(GridSpec { kind, n, ell })
    }

    pub fn circle(n: usize) -> GridSpec {
        GridSpec::new(GridKind::Circle, n, 2).expect("valid circle grid")
    }

    pub fn interval(n: usize) -> GridSpec {
        GridSpec::new(GridKind::Interval, n, 2).expect("valid interval grid")
    }

    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Circle => 2.0 * PI / self.n as f64,
            GridKind::Interval => 1.0 / (self.n - 1) as f64,
        }
    }

    /// Parameter of node `i`.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// `K` as a manifold: the circle (ambient `(cos x, sin x)`) or `ℝ`.
    pub fn domain_manifold(&self) -> Manifold {
        match self.kind {
            GridKind::Circle => Manifold::Circle,
            GridKind::Interval => Manifold::Euclidean(1),
        }
    }

    pub fn node_ambient(&self, i: usize) -> Vec<f64> {
        let x = self.node(i);
        match self.kind {
            GridKind::Circle => vec![x.cos(), x.sin()],
            GridKind::Interval => vec![x],
        }
    }

    /// Consecutive node pairs, including the wrap `(n-1, 0)` on circles.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = match self.kind {
            GridKind::Circle => self.n,
            GridKind::Interval => self.n - 1,
        };
        (0..m).map(move |i| (i, (i + 1) % self.n))
    }

    /// Same underlying parameter, twice as many nodes.
    pub fn refined(&self) -> GridSpec {
        let n = match self.kind {
            GridKind::Circle => 2 * self.n,
            GridKind::Interval => 2 * self.n - 1,
        };
        GridSpec { n, ..*self }
    }
}

/// A map `K → M` sampled at the grid nodes.
#[derive(Clone, Debug)]
pub struct GridMap {
    pub grid: GridSpec,
    pub target: Manifold,
    pub values: Vec<Point>,
    /// Largest admissible ambient jump between neighbouring nodes.
    pub delta_coh: f64,
}

impl GridMap {
    pub fn new(grid: GridSpec, target: Manifold, values: Vec<Point>) -> Result<GridMap> {
        let delta_coh = target.coherence_radius();
        GridMap::with_delta_coh(grid, target, values, delta_coh)
    }

    pub fn with_delta_coh(
        grid: GridSpec,
        target: Manifold,
        values: Vec<Point>,
        delta_coh: f64,
    ) -> Result<GridMap> {
        assert_eq!(values.len(), grid.n, "one value per grid node");
        let g = GridMap { grid, target, values, delta_coh };
        g.check_coherence()?;
        Ok(g)
    }

    pub fn from_ambient(grid: GridSpec, target: &Manifold, amb: &[Vec<f64>]) -> Result<GridMap> {
        let values = amb.iter().map(|a| Point::from_ambient(target, a)).collect::<Result<Vec<_>>>()?;
        GridMap::new(grid, target.clone(), values)
    }

    /// Samples `x ↦ f(x)` (ambient output) at the nodes.
    pub fn from_fn(grid: GridSpec, target: &Manifold, f: impl Fn(f64) -> Vec<f64>) -> Result<GridMap> {
        let amb: Vec<Vec<f64>> = (0..grid.n).map(|i| f(grid.node(i))).collect();
        GridMap::from_ambient(grid, target, &amb)
    }

    /// First edge `(i, i+1)` whose ambient jump reaches `delta_coh`.
    pub fn check_coherence(&self) -> Result<()> {
        for (i, j) in self.grid.edges() {
            if self.values[i].distance(&self.values[j]) >= self.delta_coh {
                return Err(Error::CoherenceLost { index: i });
            }
        }
        Ok(())
    }

    pub fn evaluation(&self, i: usize) -> &Point {
        &self.values[i]
    }

    pub fn ambient(&self) -> Vec<Vec<f64>> {
        self.values.iter().map(|p| p.ambient.clone()).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let d = self.target.ambient_dim();
        let mut header = vec!["index".to_string()];
        header.extend((0..d).map(|k| format!("ambient_{k}")));
        w.write_record(&header).map_err(csv_err)?;
        for (i, p) in self.values.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(p.ambient.iter().map(|v| format!("{v:e}")));
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(grid: GridSpec, target: &Manifold, text: &str) -> Result<GridMap> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut amb = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .skip(1)
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(e.to_string())))
                .collect::<Result<Vec<f64>>>()?;
            amb.push(row);
        }
        GridMap::from_ambient(grid, target, &amb)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": self.grid,
            "target": self.target.id(),
            "delta_coh": self.delta_coh,
            "values": self.ambient(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<GridMap> {
        #[derive(Deserialize)]
        struct Raw {
            grid: GridSpec,
            target: String,
            delta_coh: Option<f64>,
            values: Vec<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_value(v.clone())?;
        let grid = GridSpec::new(raw.grid.kind, raw.grid.n, raw.grid.ell)?;
        let target = Manifold::parse(&raw.target)?;
        let values =
            raw.values.iter().map(|a| Point::from_ambient(&target, a)).collect::<Result<Vec<_>>>()?;
        let dc = raw.delta_coh.unwrap_or_else(|| target.coherence_radius());
        GridMap::with_delta_coh(grid, target, values, dc)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// A section of `f*(TM)`: one tangent vector over each node of `f`.
#[derive(Clone, Debug)]
pub struct GridSection {
    pub base: GridMap,
    pub vectors: Vec<Tangent>,
}

impl GridSection {
    pub fn zero(base: &GridMap) -> GridSection {
        GridSection { vectors: base.values.iter().cloned().map(Tangent::zero).collect(), base: base.clone() }
    }

    /// Ambient velocities over the nodes of `base`.
    pub fn from_ambient(base: &GridMap, u: &[Vec<f64>]) -> GridSection {
        let m = &base.target;
        let vectors = base
            .values
            .iter()
            .zip(u)
            .map(|(p, u)| Tangent { base: p.clone(), vel: m.velocity_to_chart(p.chart, &p.ambient, u) })
            .collect();
        GridSection { base: base.clone(), vectors }
    }

    pub fn ambient_velocities(&self) -> Vec<Vec<f64>> {
        self.vectors.iter().map(|v| v.ambient_velocity(&self.base.target)).collect()
    }

    /// Largest ambient distance between corresponding vectors.
    pub fn distance(&self, other: &GridSection) -> f64 {
        self.ambient_velocities()
            .iter()
            .zip(other.ambient_velocities())
            .zip(self.base.values.iter().zip(&other.base.values))
            .map(|((u, v), (p, q))| dist(u, &v).max(p.distance(q)))
            .fold(0.0, f64::max)
    }
}

/// `orders[j]`: sup over nodes of the distance between the order-`j` finite
/// differences; `orders[0]` is the max ambient distance.
#[derive(Clone, Debug, Serialize)]
pub struct SeminormProfile {
    pub orders: Vec<f64>,
}

impl SeminormProfile {
    pub fn max(&self) -> f64 {
        self.orders.iter().cloned().fold(0.0, f64::max)
    }
}

/// Order-`j` difference of the ambient samples at node `i`: central in the
/// interior (cyclic on circles), second-order one-sided at interval ends.
fn difference(grid: &GridSpec, a: &[Vec<f64>], i: usize, j: usize) -> Vec<f64> {
    let n = grid.n;
    let h = grid.spacing();
    let d = a[0].len();
    let comb = |w: &[(usize, f64)], scale: f64| -> Vec<f64> {
        (0..d).map(|k| w.iter().map(|&(idx, c)| c * a[idx][k]).sum::<f64>() / scale).collect()
    };
    match (grid.kind, j) {
        (_, 0) => a[i].clone(),
        (GridKind::Circle, 1) => comb(&[((i + 1) % n, 1.0), ((i + n - 1) % n, -1.0)], 2.0 * h),
        (GridKind::Circle, _) => comb(&[((i + 1) % n, 1.0), (i, -2.0), ((i + n - 1) % n, 1.0)], h * h),
        (GridKind::Interval, 1) => match i {
            0 => comb(&[(0, -3.0), (1, 4.0), (2, -1.0)], 2.0 * h),
            _ if i == n - 1 => comb(&[(n - 1, 3.0), (n - 2, -4.0), (n - 3, 1.0)], 2.0 * h),
            _ => comb(&[(i + 1, 1.0), (i - 1, -1.0)], 2.0 * h),
        },
        (GridKind::Interval, _) => match i {
            0 => comb(&[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)], h * h),
            _ if i == n - 1 => comb(&[(n - 1, 2.0), (n - 2, -5.0), (n - 3, 4.0), (n - 4, -1.0)], h * h),
            _ => comb(&[(i + 1, 1.0), (i, -2.0), (i - 1, 1.0)], h * h),
        },
    }
}

pub fn seminorm_distance(a: &GridMap, b: &GridMap) -> SeminormProfile {
    assert_eq!(a.grid, b.grid, "grid maps on different grids");
    let (aa, ba) = (a.ambient(), b.ambient());
    let orders = (0..=a.grid.ell)
        .map(|j| {
            (0..a.grid.n)
                .map(|i| dist(&difference(&a.grid, &aa, i, j), &difference(&a.grid, &ba, i, j)))
                .fold(0.0, f64::max)
        })
        .collect();
    SeminormProfile { orders }
}
