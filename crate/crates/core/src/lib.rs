//! Visualising the generative spaces of 2D tile-based level generators.
//!
//! The pipeline: parse level corpora and one-hot encode them ([`corpus`]),
//! compute per-level behavioural characteristics ([`metrics`]), train a
//! convolutional network to predict those characteristics ([`nn`]), project
//! penultimate-layer embeddings to 2D with PCA ([`compression`]), and score
//! how well 2D distances track characteristic differences with Spearman rank
//! correlation ([`validation`]). [`harness`] orchestrates seeded multi-run
//! experiments and writes CSV/SVG reports.

pub mod compression;
pub mod corpus;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod validation;

mod seeding;
