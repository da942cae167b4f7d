// SPDX-License-Identifier: MIT OR Apache-2.0

//! Folded mapping tori of free group outer automorphisms.
//!
//! Starting from a train-track graph map, the crate builds a Stallings fold
//! sequence, assembles the folded mapping torus as a complex of trapezoids,
//! computes its first cohomology and positive cone, and for integral classes
//! in the cone constructs the cross-section graph and its first-return map.

pub mod cohomology_cone;
pub mod error;
pub mod folding;
pub mod graph_core;
pub mod graph_maps;
pub mod linalg;
pub mod lp;
pub mod mapping_torus;
pub mod pf;
pub mod rational;
pub mod report;
pub mod section_dynamics;
pub mod text;

pub use error::{Error, Result};
