//! Dense-layer kernels, reverse-mode tape, Adam and the plateau scheduler.

mod adam;
mod ops;
mod scheduler;
mod tape;
mod tensor;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use ops::{
    affine, batch_moments, batch_norm, power_normalize, softmax_pairs, tanh_layer, BatchNormStats, Mode,
    BN_MOMENTUM, BN_VARIANCE_FLOOR,
};
pub use scheduler::{PlateauScheduler, DECAY, INITIAL_LR, MIN_LR, PATIENCE, REL_THRESHOLD};
pub use tape::{GradTape, Gradients, Var};
pub use tensor::Tensor2;

pub(crate) use ops::{column_affine, softmax2};
