//! File formats, configuration, the decision log and the HTTP curation
//! service around `knowcert-core`.

pub mod artifact;
pub mod config;
pub mod decision_log;
pub mod findings;
pub mod pipeline;
pub mod render;
pub mod service;
pub mod tsv;
