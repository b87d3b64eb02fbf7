//! Neologism-aware translation harness: dictionary ingestion and retrieval,
//! the search-augmented agent protocol, rewards and metrics, difficulty-driven
//! rollout budgeting and masked GRPO objective evaluation.

pub mod agent;
pub mod config;
pub mod dictionary;
pub mod grpo;
pub mod hash;
pub mod lang;
pub mod pipeline;
pub mod reward;
pub mod rqe;
pub mod scorer;
pub mod template;
pub mod wiktionary;
