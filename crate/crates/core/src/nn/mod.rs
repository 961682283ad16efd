//! Dense network core with hand-written gradients.

pub mod checkpoint;
pub mod gradcheck;
pub mod matrix;
pub mod network;
pub mod params;

pub use checkpoint::{load_network, save_network, CheckpointError};
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use matrix::Matrix;
pub use network::{LstmState, Network, NetworkRole, NetworkSpec, OutputActivation, SeqCache, SeqOutput};
pub use params::{soft_update, AdamConfig, Grads, ParamArray, ParamSet};
