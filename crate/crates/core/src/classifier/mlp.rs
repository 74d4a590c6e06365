//! Feed-forward MLP head: dense layers with ReLU on the hidden layers and
//! raw logits at the output. Backprop is hand-written; gradient correctness
//! is pinned by finite-difference tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hashing::mix64;
use crate::matrix::Matrix;

/// One dense layer: `z = w·x + b`, with `w` of shape `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl DenseLayer {
    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }
}

/// MLP with ReLU hidden activations and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpHead {
    layers: Vec<DenseLayer>,
}

impl MlpHead {
    /// Builds from layer sizes `[in, h1, …, out]` with fan-in scaled uniform
    /// weight init (`U[-1/√fan_in, 1/√fan_in]`) and zero biases.
    pub fn new(dims: &[usize], seed: u64) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        assert!(dims.iter().all(|&d| d > 0), "all dims must be positive");
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, pair)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let scale = 1.0 / (fan_in as f64).sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed, l as u64));
                DenseLayer {
                    w: Matrix::from_fn(fan_out, fan_in, |_, _| {
                        (rng.random::<f64>() * 2.0 - 1.0) * scale
                    }),
                    b: vec![0.0; fan_out],
                }
            })
            .collect();
        MlpHead { layers }
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Self {
        assert!(!layers.is_empty());
        for pair in layers.windows(2) {
            assert_eq!(
                pair[0].out_dim(),
                pair[1].in_dim(),
                "consecutive layer dims must be compatible"
            );
        }
        MlpHead { layers }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].in_dim()];
        dims.extend(self.layers.iter().map(|l| l.out_dim()));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    /// Logits for one input.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_trace(x).logits().to_vec()
    }

    /// Forward pass retaining everything backprop needs.
    pub fn forward_trace(&self, x: &[f64]) -> HeadTrace {
        assert_eq!(x.len(), self.input_dim());
        let last = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.b.clone();
            let mut wx = vec![0.0; layer.out_dim()];
            layer.w.matvec(&current, &mut wx);
            for (zi, wi) in z.iter_mut().zip(&wx) {
                *zi += wi;
            }
            let a = if l == last {
                z.clone()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            pre.push(z);
            post.push(a.clone());
            current = a;
        }
        HeadTrace {
            input: x.to_vec(),
            pre,
            post,
        }
    }

    /// Backprop from `d_logits` through the trace, accumulating parameter
    /// gradients into `grads` and returning the gradient w.r.t. the input.
    pub fn backward(&self, trace: &HeadTrace, d_logits: &[f64], grads: &mut HeadGrads) -> Vec<f64> {
        assert_eq!(d_logits.len(), self.output_dim());
        let mut delta = d_logits.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = if l == 0 {
                &trace.input
            } else {
                &trace.post[l - 1]
            };
            let (gw, gb) = &mut grads.layers[l];
            gw.add_outer(&delta, input);
            for (g, d) in gb.iter_mut().zip(&delta) {
                *g += d;
            }
            let mut dx = vec![0.0; layer.in_dim()];
            layer.w.transpose_matvec(&delta, &mut dx);
            if l > 0 {
                for (d, &z) in dx.iter_mut().zip(&trace.pre[l - 1]) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            delta = dx;
        }
        delta
    }
}

/// Activations cached by [`MlpHead::forward_trace`].
#[derive(Debug, Clone)]
pub struct HeadTrace {
    pub input: Vec<f64>,
    /// Pre-activation `z` per layer.
    pub pre: Vec<Vec<f64>>,
    /// Post-activation per layer (logits for the last layer).
    pub post: Vec<Vec<f64>>,
}

impl HeadTrace {
    pub fn logits(&self) -> &[f64] {
        self.post.last().unwrap()
    }
}

/// Parameter gradients shaped like an [`MlpHead`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrads {
    pub layers: Vec<(Matrix, Vec<f64>)>,
}

impl HeadGrads {
    pub fn zeros_like(head: &MlpHead) -> Self {
        HeadGrads {
            layers: head
                .layers()
                .iter()
                .map(|l| {
                    (
                        Matrix::zeros(l.out_dim(), l.in_dim()),
                        vec![0.0; l.out_dim()],
                    )
                })
                .collect(),
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
