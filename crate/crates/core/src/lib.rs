//! Ontology-driven synthetic training data for Earth-observation object
//! detection.
//!
//! The crate follows the generation workflow end to end:
//!
//! 1. [`ontology`] parses, validates and samples the expert knowledge base
//!    (entities, characteristic dimensions, context links, topology).
//! 2. [`scene`] turns sampled specifications into a discrete geometric
//!    composition (sea/coast/land partition, wind farms, rig fields).
//! 3. [`texture`] renders a composition into a single-band 8-bit raster,
//!    using [`templates`] for template texture and procedural kernels for
//!    point targets.
//! 4. [`dataset`] orchestrates recipes, annotations, snapshots, export and
//!    sharding.
//!
//! Every random decision flows from a single 64-bit seed through a
//! [`rng::GenRng`], so any example can be regenerated from its snapshot.

pub mod dataset;
pub mod geometry;
pub mod ontology;
pub mod rng;
pub mod scene;
pub mod raster;
pub mod templates;
pub mod texture;
pub mod xml;

/// The wind-farm ontology shipped with the crate.
pub const SHIPPED_ONTOLOGY: &str = include_str!("../data/windfarm.ontology.xml");
