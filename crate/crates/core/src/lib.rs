//! Weakly supervised stance and issue analysis for political ad archives.

pub mod analysis;
pub mod corpus;
pub mod embed;
pub mod graph;
pub mod infer;
pub mod labels;
pub mod lexicon;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;
pub mod textproc;
pub mod weaklabel;
