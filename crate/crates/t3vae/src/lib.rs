//! Student-t variational autoencoders with a closed-form γ-power-divergence
//! loss, Gaussian VAE / β-VAE baselines, a two-level hierarchical variant,
//! synthetic heavy-tailed data, and MMD-based tail evaluation.
//!
//! Start with the runnable examples, one per capability:
//!
//! ```text
//! cargo run --release --example student_t_basics
//! cargo run --release --example divergence_closed_form
//! cargo run --release --example gamma_loss_anatomy
//! cargo run --release --example shallow_posterior
//! cargo run --release --example synthetic_data
//! cargo run --release --example train_univariate
//! cargo run --release --example tail_mmd
//! cargo run --release --example hierarchical_loss
//! ```
//!
//! A thin CLI binary (`t3vae`) wraps the same library for batch use:
//! `gen-data`, `train`, `generate`, `eval`, `hist`. See the README.

pub mod autodiff;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data;
pub mod divergence;
pub mod error;
pub mod eval;
pub mod hvae;
pub mod models;
pub mod nn;
pub mod quadrature;
pub mod special;
pub mod tdist;
pub mod train;

pub use error::{Error, Result};
