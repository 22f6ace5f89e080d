//! Residual-ELU multilayer perceptron with reverse-mode gradients.
//!
//! Topology is fixed: an input projection (no activation, no residual)
//! lifts inputs to the hidden width, three equal-width residual blocks
//! `z -> z + elu(Lz)` follow, and a linear head produces the output.
//! The head is optionally passed through a logistic sigmoid.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

pub const HIDDEN_BLOCKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    Linear,
    Sigmoid,
}

/// One dense layer: `weight` is out x in, `bias` has length out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl LinearLayer {
    fn zeros(out_width: usize, in_width: usize) -> Self {
        LinearLayer {
            weight: Matrix::zeros(out_width, in_width),
            bias: vec![0.0; out_width],
        }
    }

    pub fn in_width(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_width(&self) -> usize {
        self.weight.rows()
    }

    /// y[b] = W x[b] + bias, for every batch row.
    fn forward(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows(), self.out_width());
        for b in 0..x.rows() {
            let xr = x.row(b);
            for (o, y) in out.row_mut(b).iter_mut().enumerate() {
                *y = dot(self.weight.row(o), xr) + self.bias[o];
            }
        }
        out
    }

    /// Accumulates dW and db from `delta` (grad w.r.t. this layer's output)
    /// and returns the grad w.r.t. this layer's input.
    fn backward(&self, x: &Matrix, delta: &Matrix, grad: &mut LayerGrad) -> Matrix {
        let mut dx = Matrix::zeros(x.rows(), self.in_width());
        for b in 0..x.rows() {
            let xr = x.row(b);
            let dr = delta.row(b);
            for (o, &d) in dr.iter().enumerate() {
                grad.bias[o] += d;
                let wr = self.weight.row(o);
                let gw = grad.weight.row_mut(o);
                let dxr = dx.row_mut(b);
                for j in 0..self.in_width() {
                    gw[j] += d * xr[j];
                    dxr[j] += d * wr[j];
                }
            }
        }
        dx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub input_proj: LinearLayer,
    pub hidden: Vec<LinearLayer>,
    pub head: LinearLayer,
    pub output_mode: OutputMode,
}

/// Exponential linear unit with alpha = 1.
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

fn elu_deriv(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Activations recorded by `forward` for a later `backward`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Matrix,
    proj_out: Matrix,
    block_pre: Vec<Matrix>,
    block_out: Vec<Matrix>,
    output: Matrix,
}

/// Per-parameter gradients mirroring an `Mlp`, plus the gradient with
/// respect to the network input (needed when a frozen network sits
/// downstream of the one being trained).
#[derive(Debug, Clone)]
pub struct GradientTape {
    pub input_proj: LayerGrad,
    pub hidden: Vec<LayerGrad>,
    pub head: LayerGrad,
    pub input_grad: Matrix,
}

#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    fn zeros_like(layer: &LinearLayer) -> Self {
        LayerGrad {
            weight: Matrix::zeros(layer.out_width(), layer.in_width()),
            bias: vec![0.0; layer.bias.len()],
        }
    }
}

impl Mlp {
    /// Zero-initialized network of the given widths.
    pub fn zeros(in_width: usize, hidden_width: usize, out_width: usize, mode: OutputMode) -> Self {
        Mlp {
            input_proj: LinearLayer::zeros(hidden_width, in_width),
            hidden: (0..HIDDEN_BLOCKS)
                .map(|_| LinearLayer::zeros(hidden_width, hidden_width))
                .collect(),
            head: LinearLayer::zeros(out_width, hidden_width),
            output_mode: mode,
        }
    }

    /// Seeded uniform initialization: weights in `[-sqrt(6/fan_in), +sqrt(6/fan_in)]`,
    /// biases zero. Same seed gives bit-identical parameters.
    pub fn init(
        in_width: usize,
        hidden_width: usize,
        out_width: usize,
        mode: OutputMode,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut net = Mlp::zeros(in_width, hidden_width, out_width, mode);
        for layer in net.layers_mut() {
            let bound = (6.0 / layer.in_width() as f64).sqrt();
            for w in layer.weight.values_mut() {
                *w = rng.random_range(-bound..bound);
            }
        }
        net
    }

    pub fn in_width(&self) -> usize {
        self.input_proj.in_width()
    }

    pub fn hidden_width(&self) -> usize {
        self.input_proj.out_width()
    }

    pub fn out_width(&self) -> usize {
        self.head.out_width()
    }

    fn layers_mut(&mut self) -> Vec<&mut LinearLayer> {
        let mut layers = vec![&mut self.input_proj];
        layers.extend(self.hidden.iter_mut());
        layers.push(&mut self.head);
        layers
    }

    fn layers(&self) -> Vec<&LinearLayer> {
        let mut layers = vec![&self.input_proj];
        layers.extend(self.hidden.iter());
        layers.push(&self.head);
        layers
    }

    /// Flat views of every parameter tensor, in a fixed order
    /// (proj weight, proj bias, hidden weights/biases, head weight, head bias).
    pub fn param_tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * (HIDDEN_BLOCKS + 2));
        for layer in self.layers() {
            out.push(layer.weight.values());
            out.push(layer.bias.as_slice());
        }
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * (HIDDEN_BLOCKS + 2));
        for layer in self.layers_mut() {
            // split the borrow: weight buffer and bias live in the same layer
            let LinearLayer { weight, bias } = layer;
            out.push(weight.values_mut());
            out.push(bias.as_mut_slice());
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_tensors().iter().map(|t| t.len()).sum()
    }

    /// SHA-256 over the little-endian bytes of every parameter, hex encoded.
    /// Used as a frozenness witness for the Teacher.
    pub fn param_digest(&self) -> String {
        let mut hasher = Sha256::new();
        for tensor in self.param_tensors() {
            for v in tensor {
                hasher.update(v.to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.in_width() {
            return Err(Error::dim(
                "Mlp::forward",
                format!("{} input cols", self.in_width()),
                format!("{}", x.cols()),
            ));
        }
        let proj_out = self.input_proj.forward(x);
        let mut block_pre = Vec::with_capacity(HIDDEN_BLOCKS);
        let mut block_out = Vec::with_capacity(HIDDEN_BLOCKS);
        let mut z = proj_out.clone();
        for layer in &self.hidden {
            let pre = layer.forward(&z);
            let mut next = z.clone();
            for (n, p) in next.values_mut().iter_mut().zip(pre.values()) {
                *n += elu(*p);
            }
            block_pre.push(pre);
            block_out.push(next.clone());
            z = next;
        }
        let head_out = self.head.forward(&z);
        let output = match self.output_mode {
            OutputMode::Linear => head_out,
            OutputMode::Sigmoid => head_out.map(sigmoid),
        };
        let cache = ForwardCache {
            input: x.clone(),
            proj_out,
            block_pre,
            block_out,
            output: output.clone(),
        };
        Ok((output, cache))
    }

    /// Convenience forward without keeping the cache.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x)?.0)
    }

    pub fn backward(&self, cache: &ForwardCache, dl_dy: &Matrix) -> Result<GradientTape> {
        let out = &cache.output;
        if dl_dy.rows() != out.rows() || dl_dy.cols() != out.cols() {
            return Err(Error::dim(
                "Mlp::backward",
                format!("{}x{}", out.rows(), out.cols()),
                format!("{}x{}", dl_dy.rows(), dl_dy.cols()),
            ));
        }
        if cache.input.cols() != self.in_width() || cache.block_pre.len() != HIDDEN_BLOCKS {
            return Err(Error::Invariant(
                "Mlp::backward: cache does not match this network".into(),
            ));
        }

        // Head pre-activation gradient (undo sigmoid if present; the cached
        // output is post-sigmoid, so sigma' = y(1-y)).
        let mut delta = dl_dy.clone();
        if self.output_mode == OutputMode::Sigmoid {
            for (d, y) in delta.values_mut().iter_mut().zip(out.values()) {
                *d *= y * (1.0 - y);
            }
        }

        let mut tape = GradientTape {
            input_proj: LayerGrad::zeros_like(&self.input_proj),
            hidden: self.hidden.iter().map(LayerGrad::zeros_like).collect(),
            head: LayerGrad::zeros_like(&self.head),
            input_grad: Matrix::zeros(cache.input.rows(), self.in_width()),
        };

        let last_z = &cache.block_out[HIDDEN_BLOCKS - 1];
        let mut dz = self.head.backward(last_z, &delta, &mut tape.head);

        // Residual blocks, last to first: z_i = z_{i-1} + elu(L_i z_{i-1}).
        for i in (0..HIDDEN_BLOCKS).rev() {
            let block_in = if i == 0 {
                &cache.proj_out
            } else {
                &cache.block_out[i - 1]
            };
            let mut scaled = dz.clone();
            for (s, p) in scaled.values_mut().iter_mut().zip(cache.block_pre[i].values()) {
                *s *= elu_deriv(*p);
            }
            let through = self.hidden[i].backward(block_in, &scaled, &mut tape.hidden[i]);
            for (d, t) in dz.values_mut().iter_mut().zip(through.values()) {
                *d += t;
            }
        }

        tape.input_grad = self
            .input_proj
            .backward(&cache.input, &dz, &mut tape.input_proj);
        Ok(tape)
    }
}

impl GradientTape {
    /// Flat views matching `Mlp::param_tensors` order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * (HIDDEN_BLOCKS + 2));
        out.push(self.input_proj.weight.values());
        out.push(self.input_proj.bias.as_slice());
        for g in &self.hidden {
            out.push(g.weight.values());
            out.push(g.bias.as_slice());
        }
        out.push(self.head.weight.values());
        out.push(self.head.bias.as_slice());
        out
    }
}

/// Mean squared error over all entries, with its gradient w.r.t. `pred`.
pub fn mse(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::dim(
            "mse",
            format!("{}x{}", target.rows(), target.cols()),
            format!("{}x{}", pred.rows(), pred.cols()),
        ));
    }
    let n = (pred.rows() * pred.cols()) as f64;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut loss = 0.0;
    for ((g, p), t) in grad
        .values_mut()
        .iter_mut()
        .zip(pred.values())
        .zip(target.values())
    {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// 1 -> 1 net computing the identity: proj = 1, hidden zero, head = 1.
    fn identity_net() -> Mlp {
        let mut net = Mlp::zeros(1, 1, 1, OutputMode::Linear);
        net.input_proj.weight.set(0, 0, 1.0);
        net.head.weight.set(0, 0, 1.0);
        net
    }

    #[test]
    fn elu_values() {
        assert_eq!(elu(0.0), 0.0);
        assert_eq!(elu(2.5), 2.5);
        assert_relative_eq!(elu(-1.0), -0.6321205588, max_relative = 1e-9);
    }

    #[test]
    fn forward_zero_net_is_zero_map() {
        let net = Mlp::zeros(3, 4, 2, OutputMode::Linear);
        let x = Matrix::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.0]).unwrap();
        let (y, _) = net.forward(&x).unwrap();
        assert!(y.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_identity_net_passes_value_through() {
        let net = identity_net();
        let x = Matrix::from_vec(1, 1, vec![3.0]).unwrap();
        let (y, _) = net.forward(&x).unwrap();
        assert_eq!(y.get(0, 0), 3.0);
    }

    #[test]
    fn forward_shape_mismatch_is_error() {
        let net = Mlp::zeros(3, 4, 2, OutputMode::Linear);
        let x = Matrix::zeros(2, 4);
        assert!(net.forward(&x).is_err());
    }

    #[test]
    fn batch_forward_equals_stacked_rows_exactly() {
        let net = Mlp::init(4, 8, 2, OutputMode::Linear, 7);
        let x = Matrix::from_vec(2, 4, vec![0.3, -1.2, 0.7, 2.0, -0.5, 0.1, 0.0, 1.5]).unwrap();
        let (batch_y, _) = net.forward(&x).unwrap();
        for b in 0..2 {
            let xb = Matrix::from_vec(1, 4, x.row(b).to_vec()).unwrap();
            let (yb, _) = net.forward(&xb).unwrap();
            assert_eq!(yb.row(0), batch_y.row(b), "row {b} differs bitwise");
        }
    }

    #[test]
    fn residual_identity_with_zero_hidden() {
        let mut net = Mlp::init(3, 5, 2, OutputMode::Linear, 11);
        for layer in &mut net.hidden {
            layer.weight = Matrix::zeros(5, 5);
            layer.bias = vec![0.0; 5];
        }
        let x = Matrix::from_vec(1, 3, vec![0.4, -0.2, 1.1]).unwrap();
        let (y, _) = net.forward(&x).unwrap();
        // head(proj(x)) computed by hand
        let proj = net.input_proj.forward(&x);
        let expect = net.head.forward(&proj);
        assert_eq!(y.values(), expect.values());
    }

    #[test]
    fn sigmoid_output_stays_in_unit_interval() {
        // f64 sigmoid saturates to exactly 0.0 or 1.0 at extreme inputs,
        // so the guarantee is the closed interval
        let net = Mlp::init(2, 8, 3, OutputMode::Sigmoid, 3);
        let x = Matrix::from_vec(2, 2, vec![100.0, -100.0, 0.0, 1.0]).unwrap();
        let (y, _) = net.forward(&x).unwrap();
        assert!(y.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn backward_zero_cotangent_gives_zero_gradients() {
        let net = Mlp::init(3, 4, 2, OutputMode::Linear, 5);
        let x = Matrix::from_vec(1, 3, vec![0.1, 0.2, 0.3]).unwrap();
        let (y, cache) = net.forward(&x).unwrap();
        let tape = net.backward(&cache, &Matrix::zeros(y.rows(), y.cols())).unwrap();
        for t in tape.tensors() {
            assert!(t.iter().all(|&g| g == 0.0));
        }
        assert!(tape.input_grad.values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_identity_net_input_grad_is_one() {
        let net = identity_net();
        let x = Matrix::from_vec(1, 1, vec![3.0]).unwrap();
        let (_, cache) = net.forward(&x).unwrap();
        // L = y, so dL/dy = 1 and dL/dx must be 1 through the skips
        let tape = net.backward(&cache, &Matrix::from_vec(1, 1, vec![1.0]).unwrap()).unwrap();
        assert_eq!(tape.input_grad.get(0, 0), 1.0);
    }

    #[test]
    fn backward_rejects_mismatched_cotangent() {
        let net = Mlp::init(3, 4, 2, OutputMode::Linear, 5);
        let x = Matrix::zeros(1, 3);
        let (_, cache) = net.forward(&x).unwrap();
        assert!(net.backward(&cache, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = Mlp::init(13, 16, 1, OutputMode::Linear, 42);
        let b = Mlp::init(13, 16, 1, OutputMode::Linear, 42);
        assert_eq!(a.param_digest(), b.param_digest());
        let c = Mlp::init(13, 16, 1, OutputMode::Linear, 43);
        assert_ne!(a.param_digest(), c.param_digest());
    }

    #[test]
    fn init_weight_magnitudes_bounded_by_fan_in() {
        let net = Mlp::init(13, 16, 1, OutputMode::Linear, 9);
        for layer in net.layers() {
            let bound = (6.0 / layer.in_width() as f64).sqrt();
            assert!(layer.weight.values().iter().all(|w| w.abs() <= bound));
            assert!(layer.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn mse_examples() {
        let a = Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let z = Matrix::zeros(1, 2);
        let (loss, grad) = mse(&a, &z).unwrap();
        assert_eq!(loss, 2.5);
        assert_eq!(grad.values(), &[1.0, 2.0]);

        let (loss, grad) = mse(&a, &a).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.values().iter().all(|&g| g == 0.0));

        assert!(mse(&a, &Matrix::zeros(2, 2)).is_err());
    }
}
