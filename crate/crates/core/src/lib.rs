//! Neural channel equalization and polar decoding over dispersive
//! nonlinear channels, with BCJR baselines and a Monte-Carlo BER harness.
//!
//! The crate is organised bottom-up: [`nn`] is a small CPU network engine,
//! [`channel`] simulates the link, [`polar`] and [`classic`] provide the
//! code and the optimal-detection baselines, [`models`] builds and trains
//! the equalizer and decoder, and [`harness`] runs the experiments.

pub mod channel;
pub mod classic;
pub mod error;
pub mod harness;
pub mod models;
pub mod nn;
pub mod par;
pub mod polar;
pub mod rng;

pub use error::{Error, Result};
