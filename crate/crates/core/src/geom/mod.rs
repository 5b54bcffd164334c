//! Charted manifolds, points, tangent vectors and smooth maps.

mod manifold;
mod map;
mod point;

pub use manifold::Manifold;
pub use map::{AmbientPredicate, SmoothMap};
pub use point::{canonical_flip, second_tangent_base, transition, Point, SecondTangent, Tangent, TOL_CHART};
