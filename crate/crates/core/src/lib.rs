//! Lie groupoids, local additions and discretized mapping spaces, with
//! executable checks of their structural identities.
//!
//! Everything is finite-dimensional: manifolds are catalog manifolds with
//! explicit charts, maps are ambient formulas differentiated by forward-mode
//! jets, and mapping spaces `C^ℓ(K, M)` are sampled on uniform grids over a
//! circle or an interval.

pub mod ad;
pub mod algebroid;
pub mod current;
pub mod error;
pub mod geom;
pub mod groupoid;
pub mod lie_group;
pub mod linalg;
pub mod local_addition;
pub mod mapping;
pub mod orbifold;
pub mod seed;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
