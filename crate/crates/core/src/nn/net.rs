//! Dense feed-forward network with manual backpropagation.
//!
//! Each [`Layer`] is an affine map followed by an [`Activation`]. The
//! `L2Normalize` activation has no parameters of its own; it projects the
//! preceding affine output onto the unit sphere, and its Jacobian
//! `(I - y yᵀ)/||x||` is applied exactly in both backward passes.
//!
//! Besides the usual parameter backward pass, scalar-output networks support
//! [`DenseNet::input_gradient_penalty`], which differentiates
//! `mean_i ||∂y_i/∂x_i restricted to a column range||²` with respect to the
//! parameters (double backpropagation).

use std::ops::Range;

use rand_distr::{Distribution, Normal};

use super::matrix::{add_mul_tn, mul_nn, mul_nt, Matrix};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
    L2Normalize,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
            Activation::Sigmoid => 3,
            Activation::L2Normalize => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Activation::Identity,
            1 => Activation::Relu,
            2 => Activation::Tanh,
            3 => Activation::Sigmoid,
            4 => Activation::L2Normalize,
            _ => return None,
        })
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `output × input`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// Width and activation of one layer, for [`DenseNet::init`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        LayerSpec { width, activation }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Everything [`DenseNet::backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl ForwardCache {
    pub fn input(&self) -> &Matrix {
        &self.input
    }

    /// Output of layer `i` after its activation.
    pub fn layer_output(&self, i: usize) -> &Matrix {
        &self.post[i]
    }

    /// Output of layer `i` before its activation.
    pub fn layer_pre_activation(&self, i: usize) -> &Matrix {
        &self.pre[i]
    }

    fn layer_input(&self, i: usize) -> &Matrix {
        if i == 0 {
            &self.input
        } else {
            &self.post[i - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Parameter gradients, congruent with [`DenseNet::params_mut`], plus the
/// gradient with respect to the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
    pub input: Matrix,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet, batch: usize) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: Matrix::zeros(l.output_dim(), l.input_dim()),
                    bias: vec![0.0; l.output_dim()],
                })
                .collect(),
            input: Matrix::zeros(batch, net.input_dim()),
        }
    }

    pub fn as_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    /// `self += scale * other` over parameter gradients (input gradient untouched).
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights
                .as_mut_slice()
                .iter_mut()
                .zip(b.weights.as_slice())
                .for_each(|(x, y)| *x += scale * y);
            a.bias
                .iter_mut()
                .zip(&b.bias)
                .for_each(|(x, y)| *x += scale * y);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

fn apply_activation(act: Activation, z: &Matrix) -> Matrix {
    let mut h = z.clone();
    match act {
        Activation::Identity => {}
        Activation::Relu => h.map_inplace(|x| x.max(0.0)),
        Activation::Tanh => h.map_inplace(f64::tanh),
        Activation::Sigmoid => h.map_inplace(sigmoid),
        Activation::L2Normalize => {
            for i in 0..h.rows() {
                let row = h.row_mut(i);
                let r = super::matrix::dot(row, row).sqrt().max(f64::MIN_POSITIVE);
                row.iter_mut().for_each(|x| *x /= r);
            }
        }
    }
    h
}

/// `v ↦ Jv` for the activation Jacobian `J = ∂h/∂z` (symmetric in every case).
fn activation_jvp(act: Activation, z: &Matrix, h: &Matrix, v: &Matrix) -> Matrix {
    match act {
        Activation::Identity => v.clone(),
        Activation::Relu => z.zip_map(v, |zi, vi| if zi > 0.0 { vi } else { 0.0 }),
        Activation::Tanh => h.zip_map(v, |hi, vi| (1.0 - hi * hi) * vi),
        Activation::Sigmoid => h.zip_map(v, |hi, vi| hi * (1.0 - hi) * vi),
        Activation::L2Normalize => {
            let mut out = v.clone();
            for i in 0..z.rows() {
                let r = super::matrix::dot(z.row(i), z.row(i)).sqrt();
                let hr = h.row(i);
                let hv = super::matrix::dot(hr, v.row(i));
                out.row_mut(i)
                    .iter_mut()
                    .zip(hr)
                    .for_each(|(o, hj)| *o = (*o - hv * hj) / r);
            }
            out
        }
    }
}

/// Gradient with respect to `z` of `Σ δ̄ ⊙ (J(z) γ)`, with `γ`, `δ̄` held fixed.
fn activation_second_order(act: Activation, z: &Matrix, h: &Matrix, gamma: &Matrix, dbar: &Matrix) -> Option<Matrix> {
    let mut out = Matrix::zeros(z.rows(), z.cols());
    match act {
        Activation::Identity | Activation::Relu => return None,
        Activation::Tanh | Activation::Sigmoid => {
            let o = out.as_mut_slice();
            for (k, oi) in o.iter_mut().enumerate() {
                let hi = h.as_slice()[k];
                let second = if act == Activation::Tanh {
                    -2.0 * hi * (1.0 - hi * hi)
                } else {
                    hi * (1.0 - hi) * (1.0 - 2.0 * hi)
                };
                *oi = dbar.as_slice()[k] * gamma.as_slice()[k] * second;
            }
        }
        Activation::L2Normalize => {
            for i in 0..z.rows() {
                let r = super::matrix::dot(z.row(i), z.row(i)).sqrt();
                let hr = h.row(i);
                let g = gamma.row(i);
                let d = dbar.row(i);
                let gh = super::matrix::dot(g, hr);
                let dh = super::matrix::dot(d, hr);
                let f = (super::matrix::dot(d, g) - dh * gh) / r;
                for (j, o) in out.row_mut(i).iter_mut().enumerate() {
                    let jd = (d[j] - hr[j] * dh) / r;
                    let jg = (g[j] - hr[j] * gh) / r;
                    *o = -f * hr[j] / r - (gh * jd + dh * jg) / r;
                }
            }
        }
    }
    Some(out)
}

impl DenseNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("network has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i}: bias length {} != output width {}",
                    l.bias.len(),
                    l.output_dim()
                )));
            }
            if l.input_dim() == 0 || l.output_dim() == 0 {
                return Err(Error::ShapeMismatch(format!("layer {i} has zero width")));
            }
            if i > 0 && layers[i - 1].output_dim() != l.input_dim() {
                return Err(Error::ShapeMismatch(format!(
                    "layer {i} expects {} inputs but layer {} produces {}",
                    l.input_dim(),
                    i - 1,
                    layers[i - 1].output_dim()
                )));
            }
        }
        let l2_count = layers
            .iter()
            .filter(|l| l.activation == Activation::L2Normalize)
            .count();
        if l2_count > 1 {
            return Err(Error::ShapeMismatch(
                "at most one l2_normalize layer is allowed".into(),
            ));
        }
        Ok(DenseNet { layers })
    }

    /// Seeded initialization: He (`std = sqrt(2/fan_in)`) for ReLU layers,
    /// Glorot (`std = sqrt(2/(fan_in+fan_out))`) otherwise; zero biases.
    pub fn init(input_dim: usize, specs: &[LayerSpec], seed: RngSeed) -> Result<Self> {
        let mut rng = seed.rng();
        let mut fan_in = input_dim;
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let std = match spec.activation {
                Activation::Relu => (2.0 / fan_in as f64).sqrt(),
                _ => (2.0 / (fan_in + spec.width) as f64).sqrt(),
            };
            let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            let data = (0..spec.width * fan_in).map(|_| normal.sample(&mut rng)).collect();
            layers.push(Layer {
                weights: Matrix::from_vec(spec.width, fan_in, data)?,
                bias: vec![0.0; spec.width],
                activation: spec.activation,
            });
            fan_in = spec.width;
        }
        DenseNet::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Index of the `L2Normalize` layer, if any.
    pub fn l2_layer(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| l.activation == Activation::L2Normalize)
    }

    /// Weight and bias slices in a fixed order (layer by layer, weights first).
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn forward(&self, inputs: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: inputs.cols(),
            });
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = post.last().unwrap_or(inputs);
            let mut z = mul_nt(x, &layer.weights);
            for i in 0..z.rows() {
                z.row_mut(i)
                    .iter_mut()
                    .zip(&layer.bias)
                    .for_each(|(a, b)| *a += b);
            }
            let h = apply_activation(layer.activation, &z);
            pre.push(z);
            post.push(h);
        }
        let out = post.last().cloned().expect("at least one layer");
        Ok((
            out,
            ForwardCache {
                input: inputs.clone(),
                pre,
                post,
            },
        ))
    }

    pub fn predict(&self, inputs: &Matrix) -> Result<Matrix> {
        self.forward(inputs).map(|(out, _)| out)
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        if cache.pre.len() != self.layers.len() {
            return Err(Error::StaleCache(format!(
                "{} cached layers for a {}-layer network",
                cache.pre.len(),
                self.layers.len()
            )));
        }
        for (i, (l, z)) in self.layers.iter().zip(&cache.pre).enumerate() {
            if z.cols() != l.output_dim() || z.rows() != cache.input.rows() {
                return Err(Error::StaleCache(format!("layer {i} shape differs")));
            }
        }
        if cache.input.cols() != self.input_dim() {
            return Err(Error::StaleCache("input width differs".into()));
        }
        Ok(())
    }

    /// Gradients of `Σ output_gradient ⊙ output` with respect to all parameters
    /// and the input.
    pub fn backward(&self, cache: &ForwardCache, output_gradient: &Matrix) -> Result<Gradients> {
        self.check_cache(cache)?;
        if output_gradient.shape() != (cache.input.rows(), self.output_dim()) {
            return Err(Error::StaleCache(format!(
                "output gradient shape {:?} does not match {:?}",
                output_gradient.shape(),
                (cache.input.rows(), self.output_dim())
            )));
        }
        let mut grads = Gradients::zeros_like(self, cache.input.rows());
        let mut upstream = output_gradient.clone();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let zbar = activation_jvp(layer.activation, &cache.pre[li], &cache.post[li], &upstream);
            accumulate_affine(&mut grads.layers[li], &zbar, cache.layer_input(li));
            upstream = mul_nn(&zbar, &layer.weights);
        }
        grads.input = upstream;
        Ok(grads)
    }

    fn require_scalar_output(&self) -> Result<()> {
        if self.output_dim() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "input gradients need a scalar-output network, output width is {}",
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// Backward chain of `∂y/∂x` for a scalar-output network. Returns, for
    /// each layer, the gradient of `y` with respect to that layer's output
    /// (`gamma`) and pre-activation (`delta`), and the input gradient.
    fn input_gradient_chain(&self, cache: &ForwardCache) -> (Vec<Matrix>, Vec<Matrix>, Matrix) {
        let rows = cache.input.rows();
        let count = self.layers.len();
        let mut gammas = vec![Matrix::zeros(0, 0); count];
        let mut deltas = vec![Matrix::zeros(0, 0); count];
        let mut gamma = Matrix::from_vec(rows, 1, vec![1.0; rows]).expect("shape");
        for li in (0..count).rev() {
            let layer = &self.layers[li];
            let delta = activation_jvp(layer.activation, &cache.pre[li], &cache.post[li], &gamma);
            let next = mul_nn(&delta, &layer.weights);
            gammas[li] = gamma;
            deltas[li] = delta;
            gamma = next;
        }
        (gammas, deltas, gamma)
    }

    /// `∂y_i/∂x_i` for every row of a scalar-output network.
    pub fn input_gradients(&self, inputs: &Matrix) -> Result<Matrix> {
        self.require_scalar_output()?;
        let (_, cache) = self.forward(inputs)?;
        Ok(self.input_gradient_chain(&cache).2)
    }

    /// Penalty `mean_i ||(∂y_i/∂x_i)[columns]||²` and its parameter gradients.
    pub fn input_gradient_penalty(&self, inputs: &Matrix, columns: Range<usize>) -> Result<(f64, Gradients)> {
        self.require_scalar_output()?;
        if columns.end > self.input_dim() || columns.start > columns.end {
            return Err(Error::InvalidArgument(format!(
                "penalized columns {columns:?} outside input width {}",
                self.input_dim()
            )));
        }
        let rows = inputs.rows();
        if rows == 0 {
            return Err(Error::EmptyBatch("gradient penalty"));
        }
        let (_, cache) = self.forward(inputs)?;
        let (gammas, deltas, input_grad) = self.input_gradient_chain(&cache);
        let count = self.layers.len();

        let mut penalty = 0.0;
        let mut gbar = Matrix::zeros(rows, self.input_dim());
        for i in 0..rows {
            let g = input_grad.row(i);
            let gb = gbar.row_mut(i);
            for c in columns.clone() {
                penalty += g[c] * g[c];
                gb[c] = 2.0 * g[c] / rows as f64;
            }
        }
        penalty /= rows as f64;

        let mut grads = Gradients::zeros_like(self, rows);
        let mut zbar_extra: Vec<Option<Matrix>> = vec![None; count];
        // Reverse of the chain gamma_{in} = delta · W, delta = J gamma_{out},
        // walked from the input side towards the output.
        for li in 0..count {
            let layer = &self.layers[li];
            let dbar = mul_nt(&gbar, &layer.weights);
            add_mul_tn(&mut grads.layers[li].weights, &deltas[li], &gbar);
            zbar_extra[li] = activation_second_order(
                layer.activation,
                &cache.pre[li],
                &cache.post[li],
                &gammas[li],
                &dbar,
            );
            gbar = activation_jvp(layer.activation, &cache.pre[li], &cache.post[li], &dbar);
        }
        // Reverse of the forward pass, seeded only by the second-order terms.
        let mut hbar = Matrix::zeros(rows, self.output_dim());
        for li in (0..count).rev() {
            let layer = &self.layers[li];
            let mut zbar = activation_jvp(layer.activation, &cache.pre[li], &cache.post[li], &hbar);
            if let Some(extra) = &zbar_extra[li] {
                zbar.add_assign(extra);
            }
            accumulate_affine(&mut grads.layers[li], &zbar, cache.layer_input(li));
            hbar = mul_nn(&zbar, &layer.weights);
        }
        grads.input = hbar;
        Ok((penalty, grads))
    }
}

fn accumulate_affine(grad: &mut LayerGradient, zbar: &Matrix, layer_input: &Matrix) {
    add_mul_tn(&mut grad.weights, zbar, layer_input);
    for row in zbar.row_iter() {
        grad.bias.iter_mut().zip(row).for_each(|(b, z)| *b += z);
    }
}
