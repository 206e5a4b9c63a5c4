//! The multi-label classifier and its loss-prediction head.
//!
//! The classifier is a fully connected network with ReLU hidden layers and
//! sigmoid outputs, trained with plain minibatch SGD on mean binary cross
//! entropy. An optional head maps the penultimate features to a predicted
//! loss rank and is trained jointly through a pairwise margin ranking loss.
//! Gradients are computed by hand; see [`backward`](backward::backward).

mod backward;
mod loss;
mod network;
mod train;

pub use backward::{backward, batch_gradients, BatchGradients, SampleContext};
pub use loss::{bce_loss, joint_loss, ranking_loss, sign, RankingPair};
pub use network::{
    forward, sigmoid, Dense, ForwardTrace, HeadTrace, LossHeadParams, ModelConfig, NetworkParams,
    PROB_EPS,
};
pub use train::{train, train_on, TrainConfig};
