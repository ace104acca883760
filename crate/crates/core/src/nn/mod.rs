//! Minimal trainable dense networks.

pub mod adam;
pub mod format;
pub mod loss;
pub mod matrix;
pub mod net;

pub use adam::AdamState;
pub use loss::{softmax, softmax_cross_entropy};
pub use matrix::Matrix;
pub use net::{Activation, DenseNet, ForwardCache, Gradients, Layer, LayerGradient, LayerSpec};

/// One Adam update of `net` from `grads`.
pub fn adam_step(net: &mut DenseNet, grads: &Gradients, state: &mut AdamState) -> crate::Result<()> {
    let g = grads.as_slices();
    let mut p = net.params_mut();
    state.step(&mut p, &g)
}
