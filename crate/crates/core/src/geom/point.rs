use serde::{Deserialize, Serialize};

use super::Manifold;
use crate::error::{Error, Result};
use crate::linalg::dist;

/// Ambient distance below which two points are equal.
pub const TOL_CHART: f64 = 1e-9;

/// A point with chart coordinates and its cached ambient representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub chart: usize,
    pub coords: Vec<f64>,
    pub ambient: Vec<f64>,
}

impl Point {
    /// Places an ambient point in its best chart.
    pub fn from_ambient(m: &Manifold, amb: &[f64]) -> Result<Point> {
        let chart = m.best_chart(amb)?;
        let coords = m.chart_forward(chart, amb);
        let ambient = m.chart_inverse(chart, &coords);
        Ok(Point { chart, coords, ambient })
    }

    pub fn in_chart(m: &Manifold, chart: usize, coords: &[f64]) -> Result<Point> {
        let ambient = m.chart_inverse(chart, coords);
        if m.chart_margin(chart, &ambient) <= 0.0
            || dist(&m.chart_forward(chart, &ambient), coords) > TOL_CHART
        {
            return Err(Error::OutOfChart { chart });
        }
        Ok(Point { chart, coords: coords.to_vec(), ambient })
    }

    pub fn distance(&self, other: &Point) -> f64 {
        dist(&self.ambient, &other.ambient)
    }

    pub fn approx_eq(&self, other: &Point) -> bool {
        self.distance(other) < TOL_CHART
    }
}

/// Re-express `p` in chart `j`.
pub fn transition(m: &Manifold, p: &Point, j: usize) -> Result<Point> {
    if j == p.chart {
        return Ok(p.clone());
    }
    if j >= m.n_charts() || m.chart_margin(j, &p.ambient) <= 0.0 {
        return Err(Error::OutOfChart { chart: j });
    }
    let coords = m.chart_forward(j, &p.ambient);
    Ok(Point { chart: j, ambient: m.chart_inverse(j, &coords), coords })
}

/// A tangent vector, with velocity components in the chart of its base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    pub base: Point,
    pub vel: Vec<f64>,
}

impl Tangent {
    pub fn zero(base: Point) -> Tangent {
        let vel = vec![0.0; base.coords.len()];
        Tangent { base, vel }
    }

    pub fn from_ambient(m: &Manifold, p: &[f64], u: &[f64]) -> Result<Tangent> {
        let base = Point::from_ambient(m, p)?;
        let vel = m.velocity_to_chart(base.chart, &base.ambient, u);
        Ok(Tangent { base, vel })
    }

    pub fn ambient_velocity(&self, m: &Manifold) -> Vec<f64> {
        m.velocity_to_ambient(self.base.chart, &self.base.coords, &self.vel)
    }

    /// The same vector in chart `j`; the velocity moves by the transition
    /// Jacobian.
    pub fn in_chart(&self, m: &Manifold, j: usize) -> Result<Tangent> {
        let base = transition(m, &self.base, j)?;
        let i = self.base.chart;
        let vel = crate::ad::directional_s(
            |x| m.chart_forward(j, &m.chart_inverse(i, x)),
            &self.base.coords,
            &self.vel,
        )
        .1;
        Ok(Tangent { base, vel })
    }

    /// As a point of the tangent-bundle manifold `TM`, in the matching chart.
    pub fn as_bundle_point(&self, m: &Manifold) -> Point {
        let mut coords = self.base.coords.clone();
        coords.extend(&self.vel);
        let tm = m.tangent_bundle();
        let ambient = tm.chart_inverse(self.base.chart, &coords);
        Point { chart: self.base.chart, coords, ambient }
    }

    pub fn from_bundle_point(m: &Manifold, p: &Point) -> Tangent {
        let d = m.dim();
        let (x, y) = p.coords.split_at(d);
        Tangent {
            base: Point { chart: p.chart, coords: x.to_vec(), ambient: m.chart_inverse(p.chart, x) },
            vel: y.to_vec(),
        }
    }
}

/// A point of `T²M = T(TM)` as the chart 4-tuple `(x, y, z, w)`: `(x, y)` is
/// the base point in `TM` and `(z, w)` its velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondTangent {
    pub chart: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

impl SecondTangent {
    /// As a tangent vector of the manifold `TM`.
    pub fn as_bundle_tangent(&self, m: &Manifold) -> Tangent {
        let mut coords = self.x.clone();
        coords.extend(&self.y);
        let mut vel = self.z.clone();
        vel.extend(&self.w);
        let ambient = m.tangent_bundle().chart_inverse(self.chart, &coords);
        Tangent { base: Point { chart: self.chart, coords, ambient }, vel }
    }

    pub fn from_bundle_tangent(m: &Manifold, t: &Tangent) -> SecondTangent {
        let d = m.dim();
        let (x, y) = t.base.coords.split_at(d);
        let (z, w) = t.vel.split_at(d);
        SecondTangent { chart: t.base.chart, x: x.to_vec(), y: y.to_vec(), z: z.to_vec(), w: w.to_vec() }
    }
}

/// The canonical flip `(x, y, z, w) ↦ (x, z, y, w)`.
pub fn canonical_flip(s: &SecondTangent) -> SecondTangent {
    SecondTangent { chart: s.chart, x: s.x.clone(), y: s.z.clone(), z: s.y.clone(), w: s.w.clone() }
}

/// The bundle projection `T²M → TM`, `(x, y, z, w) ↦ (x, y)`.
pub fn second_tangent_base(m: &Manifold, s: &SecondTangent) -> Tangent {
    Tangent {
        base: Point { chart: s.chart, coords: s.x.clone(), ambient: m.chart_inverse(s.chart, &s.x) },
        vel: s.y.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_transition_examples() {
        let m = Manifold::Circle;
        let p = Point::in_chart(&m, 0, &[0.5]).unwrap();
        let q = transition(&m, &p, 1).unwrap();
        assert!((q.coords[0] - 0.5).abs() < 1e-15);
        assert_eq!(transition(&m, &p, 0).unwrap(), p);
        let origin = Point::in_chart(&m, 0, &[0.0]).unwrap();
        assert!(matches!(transition(&m, &origin, 1), Err(Error::OutOfChart { chart: 1 })));
    }

    #[test]
    fn tangent_chart_change() {
        let m = Manifold::Sphere;
        let t = Tangent { base: Point::in_chart(&m, 0, &[0.3, -0.4]).unwrap(), vel: vec![1.0, 2.0] };
        let t1 = t.in_chart(&m, 1).unwrap();
        let a = t.ambient_velocity(&m);
        let b = t1.ambient_velocity(&m);
        assert!(dist(&a, &b) < 1e-12);
        let back = t1.in_chart(&m, 0).unwrap();
        assert!(dist(&back.vel, &t.vel) < 1e-12);
    }

    #[test]
    fn flip_example() {
        let s = SecondTangent { chart: 0, x: vec![0.3], y: vec![1.0], z: vec![2.0], w: vec![-0.5] };
        let f = canonical_flip(&s);
        assert_eq!((f.y[0], f.z[0], f.w[0]), (2.0, 1.0, -0.5));
        assert_eq!(canonical_flip(&f), s);
    }

    #[test]
    fn out_of_chart_coordinates_rejected() {
        assert!(Point::in_chart(&Manifold::Circle, 0, &[PI + 0.1]).is_err());
    }
}
