//! Shadowed double-scattering channel model for UAV-to-ground links.
//!
//! The received SNR is a product of two Nakagami-m power factors and one or
//! two inverse-gamma shadowing factors. The crate provides exact samplers,
//! numerically evaluated PDFs, CDFs and link metrics, the statistics of the
//! shadowing-based UAV selection combiner, moment fitting with goodness-of-fit
//! scoring, and replay of selection strategies on power traces.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod error;
pub mod fitgof;
pub mod model;
pub mod quad;
pub mod rng;
pub mod selection;
pub mod special;
pub mod trace;

pub use error::{Error, Result};
pub use model::{ChannelParams, DoubleShadowParams, ModelKind, SampleBatch, SingleShadowParams};
pub use rng::Seed;
