//! Decision support for choosing a NoSQL store.
//!
//! * [`dataset`] — the 80-solution feature/area matrix, parsing and validation.
//! * [`stats`] — Spearman and chi-square association between features.
//! * [`clustering`] — k-modes with Cao initialisation and partition agreement.
//! * [`tree`] — CART trees, random forests and Gini importance.
//! * [`advisor`] — per-area suitability bundle, predictions and what-if queries.
//! * [`service`] — HTTP API over all of the above.

pub mod advisor;
pub mod clustering;
pub mod dataset;
pub mod service;
pub mod stats;
pub mod tree;
