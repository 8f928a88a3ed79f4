//! Core library for kinetics-informed neural networks (KINNs).
//!
//! Builds mean-field microkinetic models from reaction-network text, generates
//! synthetic transient data, and trains neural-network surrogate approximators
//! to solve both the forward kinetic ODEs and the regularized inverse problem
//! of recovering kinetic parameters.
//!
//! The crate is `no_std`-compatible (with `alloc`); transcendental float math
//! is routed through `std` or `libm` depending on the enabled feature.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("kinn-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod ad;
pub mod corpus;
pub mod dataset;
pub mod dual;
pub mod forward;
pub mod inverse;
pub mod kinetics;
pub mod math;
pub mod metrics;
pub mod network;
pub mod nn;
pub mod ode;
pub mod surrogate;

pub use network::{ElementaryStep, ReactionKind, ReactionNetwork, Species, SpeciesClass};
