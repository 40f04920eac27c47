//! Pixel-art tileset analysis and narrative-driven tile scene synthesis.
//!
//! The analysis side splits tilesets into tiles, scores tile boundaries with
//! SSIM, grows object segments, infers directional connectivity and attaches
//! semantic and affordance labels. The synthesis side turns narrative
//! predicates into scene graphs, generates cellular-automata terrain and
//! places matched tiles on it.

pub mod affordance;
pub mod config;
pub mod connectivity;
pub mod error;
pub mod scenegen;
pub mod segmentation;
pub mod semantics;
pub mod similarity;
pub mod tile;

pub use error::{Error, Result};
pub use tile::{split_tileset, TileImage, Tileset};
