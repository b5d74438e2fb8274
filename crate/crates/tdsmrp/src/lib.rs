//! Temporal-difference value learning over irregularly sampled event
//! sequences under a semi-Markov reward process.
//!
//! The crate is organized as a processing chain:
//!
//! * [`domain`] — event/episode types and label arithmetic shared everywhere.
//! * [`sim`] — continuous-time Markov cohort simulator with an exact
//!   absorption-probability oracle and a dataset-shift generator.
//! * [`pipeline`] — observation-window assembly, next-state selection,
//!   standardization, splits and class weights.
//! * [`model`] — the embed/conv/recurrent/decoder value network with
//!   hand-written analytic gradients.
//! * [`train`] — TD and supervised trainers, AdamW, target-network sync,
//!   delay sweeps.
//! * [`eval`] — AUROC, paired one-tailed t-tests, Benjamini-Yekutieli
//!   adjustment and report assembly.
//! * [`io`] — on-disk formats: datasets, configs, standardization stats,
//!   fold maps, checkpoints, run manifests.
//! * [`report`] — table and SVG emission for evaluation reports.
//! * [`fixtures`] — programmatic cohort/shift configurations used by tests
//!   and shipped as config files.

pub mod domain;
pub mod eval;
pub mod fixtures;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod sim;
pub mod train;

pub use domain::{
    Episode, FeatureId, FeatureKind, FeatureRegistry, LatentState, MeasurementTuple, Outcome,
    RawEvent, RewardSpec, Sex,
};
pub use pipeline::{ObservationWindow, StandardizationStats, TransitionSample};
