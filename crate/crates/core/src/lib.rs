//! MQM-style translation evaluation: annotation parsing and scoring,
//! rank-correlation meta-evaluation, surface metrics, feature-based quality
//! regression, and corpus tooling.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod experiments;
pub mod features;
pub mod metrics;
pub mod model;
pub mod parser;
pub mod provider;
pub mod rank_stats;
pub mod regressor;
pub mod scoring;
pub mod synth;

pub use model::{
    validate_annotation, Corpus, Dimension, ErrorAnnotation, ErrorCounts, MqmScore, Severity, SpanSide, SubErrorType, TranslationUnit,
    UnitAnnotation, Violation, ViolationCode,
};
pub use rank_stats::{kendall_tau, CorrelationResult, TauVariant};
pub use scoring::{count_errors, score_unit};
