//! Next point-of-interest prediction built from cooperating pipeline stages.
//!
//! The crate turns raw check-in logs into per-user trajectory splits, converts
//! trajectories into language-ready statistical summaries, retrieves and
//! refines candidate POI sets with exact cosine-similarity search, and lets a
//! chat-completion backend (remote HTTP or a deterministic mock) rank the
//! final prediction. Around that pipeline sit a reverse-reasoning sample
//! emitter for fine-tuning data, a ranking-metrics harness, and a
//! candidate-space error analysis with a Monte Carlo verifier.
//!
//! Modules map onto pipeline stages:
//!
//! - [`dataset`]: ingestion, sparsity filtering, trajectory splitting
//! - [`stat_tools`]: frequency/category/time/location summaries
//! - [`vector_store`]: POI embeddings and exact top-K retrieval
//! - [`llm_gateway`]: prompt templates, backends, tolerant output parsing
//! - [`agents`]: the profile -> candidates -> prediction pipeline
//! - [`rrf`]: label-consistent training-sample construction
//! - [`analysis`]: stage hit rates, error decomposition, hit-rate lower bound
//! - [`evalkit`]: HR@k / NDCG@k / MRR and run comparison
//! - [`config`]: run configuration and artifact hashing
//! - [`synth`]: deterministic synthetic check-in fixtures

pub mod agents;
pub mod analysis;
pub mod config;
pub mod dataset;
pub mod evalkit;
pub mod geo;
pub mod llm_gateway;
pub mod rrf;
pub mod stat_tools;
pub mod synth;
pub mod vector_store;

pub use agents::{PredictionResult, UserContext};
pub use config::RunConfig;
pub use dataset::{CheckIn, Dataset, PoiRecord, TrajectoryPair};
pub use llm_gateway::{DecodingParams, Gateway, PromptRecord, RoleTag};
pub use stat_tools::DistributionSummary;
pub use vector_store::{CandidateBundle, VectorIndex};
