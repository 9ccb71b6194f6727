//! Rotation-invariant sketching of planar star-shaped outlines.
//!
//! The pipeline: ingest an outline, standardize it (area centroid to the
//! origin, max radius to 1), discretize it into a radial star function on
//! `m` wedges, and embed that function as a Euclidean sketch vector built
//! from per-lag averages of a kernel applied to cyclic differences. Cyclic
//! rotation, constant shift, and rotation-of-circle leave the sketch
//! unchanged; exact combinatorial oracles and verification routines probe
//! when the converse holds.

pub mod analysis;
pub mod circfn;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod sketch;
pub mod verify;

pub use circfn::{CircleFunction, DifferenceTable};
pub use error::{Error, Result};
pub use geometry::{Outline, RadialProfile, StandardizedOutline, StarFunction};
pub use sketch::{PhiKind, PhiSpec, RandomSketch, Sketch};
