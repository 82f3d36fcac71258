//! Static detection of resource-leak code smells in PyTorch, TensorFlow and
//! Keras programs, with a rule catalog, text/JSON/SARIF reporting and a
//! fixture-corpus harness.

pub mod catalog;
pub mod cli;
pub mod engine;
pub mod facts;
pub mod frontend;
pub mod harness;
pub mod output;
pub mod rules;
