//! Learnability lab for generalized quantifiers over set-theoretic scenes.
//!
//! The crate bundles everything needed to ask whether the mix of
//! conservative vs. non-conservative quantifiers in training data changes
//! how well a recurrent classifier picks up scarce quantifiers:
//!
//! - [`quant`] — exact semantics for the ten quantifiers plus brute-force
//!   checkers for conservativity, duality, and symmetry.
//! - [`data`] — deterministic balanced dataset generation and the bit-exact
//!   sequence encoding fed to the network.
//! - [`nn`] — a from-scratch stacked LSTM classifier with full
//!   backpropagation through time, generic over the scalar type.
//! - [`experiment`] — the five distribution conditions, seeded trials, and
//!   accuracy-curve aggregation.
//! - [`stats`] — paired t-tests with Bonferroni correction.
//! - [`chart`] — dependency-free SVG emission for accuracy curves.

pub mod chart;
pub mod data;
pub mod experiment;
pub mod nn;
pub mod quant;
pub mod seeds;
pub mod stats;

#[cfg(feature = "testutil")]
pub mod testutil;

/// Scalar type used by the shipped binaries; the math in [`nn`] is generic
/// over any `num_traits::Float`.
pub type Scalar = f64;

/// Model parameters at the default scalar type.
pub type Model = nn::ModelParams<Scalar>;

/// Optimizer state at the default scalar type.
pub type OptimState = nn::AdamState<Scalar>;

/// Encoded input sequence at the default scalar type.
pub type Sequence = data::EncodedSeq<Scalar>;
