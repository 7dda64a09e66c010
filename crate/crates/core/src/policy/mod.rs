//! The learned dispatcher: network, PPO, self-play training and checkpoints.

pub mod checkpoint;
pub mod net;
pub mod ppo;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use net::{forward_executor, forward_planner, Categorical, NetInput, PolicyNet, Role, PARAM_COUNT};
pub use ppo::{gae, loss_and_grad, ppo_update, Adam, LossStats, LossWeights, PpoSettings, Sample};
pub use train::{self_play_train, write_curve, CurveRow, MrtAgent, TrainConfig, TrainOutcome, Trainer};
