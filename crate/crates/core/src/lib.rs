//! Neural collision detection for deformable objects.
//!
//! A small MLP `f(q, z)` is trained to return the signed distance from a
//! query point `q` to a deforming surface whose shape is summarized by a
//! reduced code `z`: linear FEM modal coordinates or skinning joint angles.
//! Queries then need no spatial data structure update when the object
//! deforms, which is the comparison the `bench` module measures against a
//! rebuild-per-step AABB tree.

pub mod assets;
pub mod bench;
pub mod collide;
pub mod dataset;
mod binio;
pub mod distance;
pub mod error;
pub mod geom;
pub mod modes;
pub mod net;
pub mod skin;

pub use error::{Error, Result};
