//! UCB1 learning from noisy human state judgements.

mod hyper;
mod math;
mod priors;
mod session;
mod table;

pub use hyper::Hyperparameters;
pub use math::{compute_reward, update_q, uncertainty, validate_confidence, RewardUpdate, CONFIDENCE_MAX, CONFIDENCE_MIN};
pub use priors::Priors;
pub use session::{
    FeedbackEvent, InitMode, Initialization, LearnerConfig, LearnerSession, PendingTrial, Response, Schedule,
    StateAction, Status, TrialOutcome,
};
pub use table::{select_action, QTable, UnvisitedOrder};
