//! Measuring how faithfully LLM persona responses reproduce the topic
//! distribution of open-ended survey answers.

pub mod corpus;
pub mod experiments;
pub mod genclient;
pub mod labeling;
pub mod metrics;
pub mod persona;
pub mod report;
