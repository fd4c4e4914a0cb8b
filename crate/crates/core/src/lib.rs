//! Move Method refactoring recommendation from path-based code embeddings.

pub mod artifact;
pub mod config;
pub mod corpus;
pub mod embed;
pub mod featurize;
pub mod frontend;
pub mod injector;
pub mod pathctx;
pub mod pipeline;
pub mod svm;
pub mod synth;
