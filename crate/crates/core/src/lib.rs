//! Simulation-to-detection laboratory for volumetric floods in a 5G/IoT access network.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`sim`] — a deterministic discrete-event simulator of a small 5G topology
//!    (UEs behind a gNodeB, a core segment, a router, and attached hosts) that
//!    runs either a benign PING scenario or a volumetric flood scenario.
//! 2. [`telemetry`] — scalar/histogram statistics recorded during a run and
//!    exported as labeled CSV rows.
//! 3. [`preprocess`] — column dropping, forward-fill imputation, ordinal
//!    encoding, seeded splitting, and min-max scaling of the merged corpus.
//! 4. [`nn`] — a from-scratch dense/conv1d neural-network core with hand-derived
//!    gradients and an Adam training loop.
//! 5. [`models`] — builders for the two reference architectures (CNN and FNN).
//! 6. [`eval`] — confusion-matrix construction and the derived detection metrics.

pub mod eval;
pub mod models;
pub mod nn;
pub mod preprocess;
pub mod sim;
pub mod telemetry;
