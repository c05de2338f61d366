//! Beam discovery for sparse on-grid mm-wave channels.
//!
//! Parity-check rows of a binary linear block code define multi-armed
//! combiners and precoders. Their noiseless outputs form a "channel
//! syndrome" `H q`, which a lookup table maps back to the sparse angular
//! channel.

pub mod beams;
pub mod channel;
pub mod codes;
pub mod config;
pub mod discovery;
pub mod eval;
pub mod gf2;
pub mod json;
pub mod measure;

pub use beams::{build_plan, MeasurementPlan};
pub use channel::{ArrayGeometry, ChannelMatrix, Path};
pub use codes::{matched_code, LinearBlockCode};
pub use config::SimConfig;
pub use discovery::{build_table, discover, GainAlphabet, SyndromeTable};
pub use eval::{run_sweep, Simulator, SweepReport};
pub use gf2::{Gf2Matrix, Gf2Vector};
