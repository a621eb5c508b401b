//! Motion-aware caption analysis.
//!
//! - [`amr`] and [`dep`] read PENMAN graphs and CoNLL-U trees.
//! - [`mope`] extracts motion actions with subjects, objects, directions
//!   and modifiers; [`temporal`] orders them.
//! - [`rewards`] scores a generated caption against a reference and counts
//!   motion hallucinations.
//! - [`kinematics`] turns pose-keypoint sequences into speed, joint-angle and
//!   spectral features.

pub mod amr;
pub mod cli;
pub mod dep;
pub mod fixtures;
pub mod json;
pub mod kinematics;
pub mod mope;
pub mod rewards;
pub mod temporal;

pub use amr::{parse_penman, parse_penman_multi, AmrGraph};
pub use dep::{parse_conllu, DepSentence, DepToken};
pub use mope::{run_mope, MopeConfig, MotionAction};
pub use rewards::{composite_reward, RewardBreakdown, RewardWeights};
