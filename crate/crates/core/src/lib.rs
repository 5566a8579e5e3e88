//! Fine-grained tool-call rewards, reward-based dynamic sampling and a
//! three-stage sub-task curriculum for group-relative policy optimization,
//! plus a synthetic-policy simulator for exercising them without a model.
//!
//! ```
//! use dscl_core::reward::{score_response, compose_reward, RewardScheme};
//! use dscl_core::toolcall::{call, ToolCallList};
//! use serde_json::json;
//!
//! let truth = ToolCallList::new(vec![call("get_weather", json!({"city": "Paris"}))]);
//! let raw = "<think>look it up</think>\n<tool_call>\n{\"name\": \"get_weather\", \"parameters\": {\"city\": \"Paris\"}}\n</tool_call>";
//! let scored = score_response(raw, &truth);
//! assert_eq!(compose_reward(&scored.sub_rewards, &RewardScheme::BASE).unwrap(), 4.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod pipeline;
pub mod rds;
pub mod reward;
pub mod sim;
pub mod stats;
pub mod tdcl;
pub mod toolcall;

pub use error::{Error, Result};
pub use pipeline::{compute_advantages, dscl_step, DsclPipeline, PipelineConfig, StepOutput};
pub use rds::{categorize, Category, RdsConfig, SamplingDecision, WarmupGate};
pub use reward::{compose_reward, RewardScheme, SchemeId, SubRewards};
pub use stats::{GroupIndicators, RolloutGroup, StatsTracker};
pub use tdcl::{Stage, TdclConfig, TdclController};
