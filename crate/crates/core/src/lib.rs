//! Sliding-window social network analysis for issue-tracker communities.
//!
//! The library ingests a canonical event log of bug reports and comments,
//! normalizes author identities, slides an overlapping day-granular window
//! across the analysis range, builds a weighted interaction graph per
//! window, scores every participant by normalized betweenness centrality,
//! classifies temporal activity patterns (one-time, phaser, continuous),
//! clusters the per-participant centrality time-series with cosine k-means,
//! and cross-references version-control commits to derive expertise tags.
//! A deterministic synthetic generator plants ground-truth patterns for
//! end-to-end verification, and the `bugnet` binary drives the whole
//! pipeline from a flat config file.

pub mod activity;
pub mod centrality;
pub mod clustering;
pub mod error;
pub mod events;
pub mod expertise;
pub mod graph;
pub mod identity;
pub mod pipeline;
pub mod sampling;
pub mod synth;
pub mod windows;

pub use error::{Error, Result};
