//! Complex-valued 1-D convolutional residual network with split activations,
//! phase mapping and a real-valued regression head.
//!
//! Parameters of a network live in one flat `Vec<f64>`. Complex layers store
//! each block as `[W_R | W_I | b_R | b_I]`, real layers as `[W | b]`.
//! Convolution weights are indexed `(k * in + i) * out + o`, affine weights
//! are row-major `out x in`.

pub mod checkpoint;
pub mod flops;
pub mod gradcheck;
pub mod loss;
pub mod network;
pub mod ops;
pub mod optim;
pub mod tensor;

pub use checkpoint::Checkpoint;
pub use flops::flops_count;
pub use gradcheck::{gradient_check, loss_gradient, GradCheckReport};
pub use loss::{mae_loss, mse_loss, Loss};
pub use network::{cvnn, LayerSpec, Network, RealActivation};
pub use optim::{Optimizer, OptimizerKind, TrainConfig};
pub use tensor::{ComplexTensor, RealTensor, Shape, Signal};
