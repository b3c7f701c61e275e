//! Replay memory for class-incremental learning built on edge-map
//! super-compression.
//!
//! Exemplar images are either kept as-is or reduced to a 1-bit edge map
//! plus a class-name prompt (about 24× smaller), and regenerated through a
//! pluggable image-generation backend when old classes are replayed.

pub mod harness;
pub mod imaging;
pub mod memory;
pub mod prompts;
pub mod regen;
