//! Deterministic simulator for Byzantine-resilient federated learning.
//!
//! Workers hold local models tied to a server model through a Huber
//! consensus penalty and only ever upload penalty gradients, whose norm is
//! capped by the penalty weight. The accelerated proximal-gradient method
//! (FRPG) and its local-update variant (LFRPG, one upload per frame of `T`
//! slots) run against label-flipping and Gaussian faulty workers, next to the
//! RSA, Krum, geometric-median and plain-averaging baselines.

pub mod adversary;
pub mod algorithms;
pub mod baselines;
pub mod data;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod loss;
pub mod objective;
pub mod penalty;
pub mod problem;
pub mod rng;
pub mod vector;

pub use error::{Error, ErrorClass, Result};
pub use vector::ModelVector;
