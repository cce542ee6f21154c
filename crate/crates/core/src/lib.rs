//! Embedded spatiotemporal stream processing for railway telemetry.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod engine;
pub mod geo;
pub mod ingest;
pub mod model;
pub mod queries;
pub mod st_ops;
pub mod temporal;
