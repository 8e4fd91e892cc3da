#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Qutrit-inspired self-supervised lattice network for image segmentation.
//!
//! The network runs on a trinity of fuzzy-membership layers. Links carry
//! phase-encoded weights and a multi-class sigmoidal activation, and the
//! output layer counter-propagates back to the intermediate layer each epoch.

pub mod error;
pub mod imaging;
pub mod lattice;
pub mod metrics;
pub mod pgm;
pub mod phantom;
pub mod pipeline;
pub mod qsig;
pub mod qudit;
pub mod schemes;

pub use error::{Error, Result};
