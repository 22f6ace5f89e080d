//! Adam optimizer with bias correction.

use super::mlp::{GradientTape, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &Mlp, lr: f64) -> Self {
        let shapes: Vec<usize> = net.param_tensors().iter().map(|t| t.len()).collect();
        AdamState {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }
}

/// One Adam update over every parameter tensor of `net`.
pub fn adam_step(net: &mut Mlp, tape: &GradientTape, state: &mut AdamState) -> Result<()> {
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    let grads = tape.tensors();
    let mut params = net.param_tensors_mut();
    if grads.len() != params.len() {
        return Err(Error::dim(
            "adam_step",
            format!("{} tensors", params.len()),
            format!("{}", grads.len()),
        ));
    }
    for (k, param) in params.iter_mut().enumerate() {
        let g = grads[k];
        if g.len() != param.len() {
            return Err(Error::dim(
                "adam_step",
                format!("tensor {k} of len {}", param.len()),
                format!("{}", g.len()),
            ));
        }
        let m = &mut state.m[k];
        let v = &mut state.v[k];
        for i in 0..param.len() {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            param[i] -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{Matrix, OutputMode};

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut net = Mlp::init(2, 4, 1, OutputMode::Linear, 1);
        let before = net.param_digest();
        let x = Matrix::zeros(1, 2);
        let (y, cache) = net.forward(&x).unwrap();
        let tape = net.backward(&cache, &Matrix::zeros(y.rows(), y.cols())).unwrap();
        let mut state = AdamState::new(&net, 1e-3);
        adam_step(&mut net, &tape, &mut state).unwrap();
        assert_eq!(net.param_digest(), before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_with_unit_gradient_moves_by_lr() {
        // isolate one scalar parameter: 1x1 net, craft a tape with g=1 on
        // the head weight and 0 elsewhere
        let mut net = Mlp::zeros(1, 1, 1, OutputMode::Linear);
        let x = Matrix::zeros(1, 1);
        let (y, cache) = net.forward(&x).unwrap();
        let mut tape = net.backward(&cache, &Matrix::zeros(y.rows(), y.cols())).unwrap();
        tape.head.weight.set(0, 0, 1.0);
        let mut state = AdamState::new(&net, 0.1);
        adam_step(&mut net, &tape, &mut state).unwrap();
        // bias-corrected ratio is 1, so the step is -lr up to epsilon
        let w = net.head.weight.get(0, 0);
        assert!((w + 0.1).abs() < 1e-8, "got {w}");
    }

    #[test]
    fn identical_nets_and_gradients_update_identically() {
        let net = Mlp::init(3, 8, 2, OutputMode::Sigmoid, 7);
        let x = Matrix::from_vec(2, 3, vec![0.1, 0.4, -0.3, 0.9, -0.2, 0.6]).unwrap();
        let run = || {
            let mut n = net.clone();
            let (y, cache) = n.forward(&x).unwrap();
            let target = Matrix::zeros(y.rows(), y.cols());
            let (_, grad) = crate::nncore::mse(&y, &target).unwrap();
            let tape = n.backward(&cache, &grad).unwrap();
            let mut state = AdamState::new(&n, 1e-2);
            for _ in 0..5 {
                adam_step(&mut n, &tape, &mut state).unwrap();
            }
            n.param_digest()
        };
        assert_eq!(run(), run());
    }
}
