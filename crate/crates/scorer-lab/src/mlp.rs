//! Parameterized MLPs with hand-rolled reverse-mode gradients.
//!
//! Gradients are specialized to the fixed feed-forward shapes used by the
//! perception and control networks rather than going through a general tape.
//! A central finite-difference oracle lives here too so every gradient path
//! can be cross-checked.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::RealMatrix;

#[derive(Debug, thiserror::Error)]
pub enum MlpError {
    #[error("input width {got} does not match first layer input width {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error("output grad width {got} does not match final layer output width {expected}")]
    OutputGradWidth { expected: usize, got: usize },
    #[error("cache does not match this parameter set (layer {layer}: {detail})")]
    StaleCache { layer: usize, detail: String },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the post-activation value.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// One affine layer. `weight` is stored input-major as `(in, out)` so a batch
/// forward is `x · W + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub weight: RealMatrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Ordered stack of affine layers sharing one activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub layers: Vec<Layer>,
    pub activation: Activation,
}

impl ParamSet {
    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.weight.data());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat length mismatch");
        let mut at = 0;
        for l in &mut self.layers {
            let wlen = l.weight.data().len();
            l.weight.data_mut().copy_from_slice(&flat[at..at + wlen]);
            at += wlen;
            let blen = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + blen]);
            at += blen;
        }
    }

    /// Polyak blend `self = tau * online + (1 - tau) * self`.
    pub fn polyak_from(&mut self, online: &ParamSet, tau: f64) {
        assert_eq!(self.layers.len(), online.layers.len());
        if tau == 1.0 {
            // Hard copy keeps targets bit-equal to the online parameters.
            for (t, o) in self.layers.iter_mut().zip(&online.layers) {
                t.weight.data_mut().copy_from_slice(o.weight.data());
                t.bias.copy_from_slice(&o.bias);
            }
            return;
        }
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            for (tv, ov) in t.weight.data_mut().iter_mut().zip(o.weight.data()) {
                *tv = tau * ov + (1.0 - tau) * *tv;
            }
            for (tv, ov) in t.bias.iter_mut().zip(&o.bias) {
                *tv = tau * ov + (1.0 - tau) * *tv;
            }
        }
    }
}

/// Fan-in style uniform initialization: He for ReLU, Xavier/Glorot for Tanh.
/// Biases start at zero.
pub fn init_mlp<R: Rng>(
    dims: &[usize],
    names: &[&str],
    activation: Activation,
    rng: &mut R,
) -> ParamSet {
    assert!(dims.len() >= 2);
    assert_eq!(names.len(), dims.len() - 1);
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for (i, name) in names.iter().enumerate() {
        let (fan_in, fan_out) = (dims[i], dims[i + 1]);
        let limit = match activation {
            Activation::Relu => (6.0 / fan_in as f64).sqrt(),
            Activation::Tanh => (6.0 / (fan_in + fan_out) as f64).sqrt(),
        };
        let data = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        layers.push(Layer {
            name: (*name).to_string(),
            weight: RealMatrix::from_vec(fan_in, fan_out, data),
            bias: vec![0.0; fan_out],
        });
    }
    ParamSet { layers, activation }
}

/// Activation trace from a forward pass: per layer, the layer input and the
/// post-activation output (for the final layer of a `final_activation: false`
/// pass, the raw affine output).
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub layer_inputs: Vec<RealMatrix>,
    pub layer_outputs: Vec<RealMatrix>,
    pub final_activation: bool,
}

impl ForwardCache {
    pub fn output(&self) -> &RealMatrix {
        self.layer_outputs.last().expect("non-empty")
    }
}

/// Batched MLP forward. `final_activation: false` leaves the last layer
/// affine (Q-value heads); `true` activates every layer (perception output).
pub fn mlp_forward(
    params: &ParamSet,
    input: &RealMatrix,
    final_activation: bool,
) -> Result<ForwardCache, MlpError> {
    if input.cols() != params.input_dim() {
        return Err(MlpError::InputWidth {
            expected: params.input_dim(),
            got: input.cols(),
        });
    }
    let n_layers = params.layers.len();
    let mut layer_inputs = Vec::with_capacity(n_layers);
    let mut layer_outputs = Vec::with_capacity(n_layers);
    let mut x = input.clone();
    for (li, layer) in params.layers.iter().enumerate() {
        let mut y = x.matmul(&layer.weight);
        y.add_row_bias(&layer.bias);
        let activate = final_activation || li + 1 < n_layers;
        if activate {
            for v in y.data_mut() {
                *v = params.activation.apply(*v);
            }
        }
        layer_inputs.push(x);
        layer_outputs.push(y.clone());
        x = y;
    }
    Ok(ForwardCache {
        layer_inputs,
        layer_outputs,
        final_activation,
    })
}

/// Parameter-shaped gradient accumulator mirroring a `ParamSet`.
#[derive(Debug, Clone)]
pub struct GradSet {
    pub layers: Vec<(RealMatrix, Vec<f64>)>,
}

impl GradSet {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| {
                    (
                        RealMatrix::zeros(l.weight.rows(), l.weight.cols()),
                        vec![0.0; l.bias.len()],
                    )
                })
                .collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn add_assign(&mut self, other: &GradSet) {
        assert_eq!(self.layers.len(), other.layers.len());
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            for (v, o) in w.data_mut().iter_mut().zip(ow.data()) {
                *v += o;
            }
            for (v, o) in b.iter_mut().zip(ob) {
                *v += o;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.is_finite() && b.iter().all(|v| v.is_finite()))
    }
}

/// Reverse pass through a cached forward. Returns parameter grads plus the
/// gradient with respect to the batch input, which is what lets leader losses
/// chain from the Q head back into the perception stack.
pub fn backprop(
    params: &ParamSet,
    cache: &ForwardCache,
    output_grad: &RealMatrix,
) -> Result<(GradSet, RealMatrix), MlpError> {
    let n_layers = params.layers.len();
    if cache.layer_inputs.len() != n_layers {
        return Err(MlpError::StaleCache {
            layer: 0,
            detail: format!(
                "cache has {} layers, params have {}",
                cache.layer_inputs.len(),
                n_layers
            ),
        });
    }
    if output_grad.cols() != params.output_dim() || output_grad.rows() != cache.output().rows() {
        return Err(MlpError::OutputGradWidth {
            expected: params.output_dim(),
            got: output_grad.cols(),
        });
    }
    for (li, layer) in params.layers.iter().enumerate() {
        if cache.layer_inputs[li].cols() != layer.input_dim()
            || cache.layer_outputs[li].cols() != layer.output_dim()
        {
            return Err(MlpError::StaleCache {
                layer: li,
                detail: format!(
                    "cached widths {}x{} vs layer {}x{}",
                    cache.layer_inputs[li].cols(),
                    cache.layer_outputs[li].cols(),
                    layer.input_dim(),
                    layer.output_dim()
                ),
            });
        }
    }

    let mut grads = GradSet::zeros_like(params);
    let mut g = output_grad.clone();
    for li in (0..n_layers).rev() {
        let layer = &params.layers[li];
        let activated = cache.final_activation || li + 1 < n_layers;
        if activated {
            let out = &cache.layer_outputs[li];
            for (gv, &ov) in g.data_mut().iter_mut().zip(out.data()) {
                *gv *= params.activation.derivative_from_output(ov);
            }
        }
        let input = &cache.layer_inputs[li];
        grads.layers[li].0 = input.transpose_matmul(&g);
        grads.layers[li].1 = g.column_sums();
        g = g.matmul_transpose(&layer.weight);
    }
    Ok((grads, g))
}

/// Central finite differences of a scalar loss over the flattened parameters.
pub fn finite_diff_grad<F: FnMut(&ParamSet) -> f64>(
    loss_fn: &mut F,
    params: &ParamSet,
    step: f64,
) -> Vec<f64> {
    let mut flat = params.flatten();
    let mut probe = params.clone();
    let mut grads = vec![0.0; flat.len()];
    for i in 0..flat.len() {
        let orig = flat[i];
        flat[i] = orig + step;
        probe.assign_flat(&flat);
        let hi = loss_fn(&probe);
        flat[i] = orig - step;
        probe.assign_flat(&flat);
        let lo = loss_fn(&probe);
        flat[i] = orig;
        grads[i] = (hi - lo) / (2.0 * step);
    }
    grads
}
