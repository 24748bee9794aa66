//! Desk-scale physics consistency toolkit for falling-object videos.
//!
//! The crate synthesizes pixel trajectories of dropped balls (and sliding
//! blocks) under a pinhole camera, detects ground-impact events, and turns the
//! timings into gravity diagnostics that survive unknown scale, focal length,
//! and frame rate: effective gravity from drop height and fall time, global
//! and per-sample time-scaling corrections, the unit-free two-ball relative
//! timing protocol, and incline acceleration checks.
//!
//! Modules mirror the pipeline: [`scene`] describes what is filmed, [`sim`]
//! renders it to pixel tracks (optionally degraded by seeded failure modes),
//! [`detect`] finds impacts, [`metrics`] computes the physics numbers,
//! [`bench`] orchestrates multi-scene evaluation runs into reports, and
//! [`strobe`] renders stroboscopic composites for visual inspection.

// Validation guards are written `!(x > 0.0)` on purpose: NaN fails every
// comparison, so the negated form rejects NaN along with zero and negatives,
// where `x <= 0.0` would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod detect;
pub mod metrics;
pub mod scene;
pub mod sim;
pub mod strobe;

pub mod cli;
