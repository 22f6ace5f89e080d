//! Numerical gradient verification via central finite differences.

use super::matrix::Matrix;
use super::mlp::{mse, Mlp};
use crate::error::Result;

/// Loss used when checking gradients.
#[derive(Debug, Clone)]
pub enum GradCheckLoss {
    /// mean(y^2), i.e. MSE against a zero target.
    MeanSquare,
    /// MSE against the given target.
    MseAgainst(Matrix),
}

const FD_STEP: f64 = 1e-5;

fn loss_of(net: &Mlp, x: &Matrix, kind: &GradCheckLoss) -> Result<f64> {
    let (y, _) = net.forward(x)?;
    let target = match kind {
        GradCheckLoss::MeanSquare => Matrix::zeros(y.rows(), y.cols()),
        GradCheckLoss::MseAgainst(t) => t.clone(),
    };
    Ok(mse(&y, &target)?.0)
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Max relative error between analytic and central-finite-difference
/// gradients, over every parameter and every input entry.
pub fn grad_check(net: &Mlp, x: &Matrix, kind: &GradCheckLoss) -> Result<f64> {
    let (y, cache) = net.forward(x)?;
    let target = match kind {
        GradCheckLoss::MeanSquare => Matrix::zeros(y.rows(), y.cols()),
        GradCheckLoss::MseAgainst(t) => t.clone(),
    };
    let (_, dl_dy) = mse(&y, &target)?;
    let tape = net.backward(&cache, &dl_dy)?;

    let mut max_err: f64 = 0.0;

    // Parameters.
    let n_tensors = net.param_tensors().len();
    for k in 0..n_tensors {
        let len = net.param_tensors()[k].len();
        for i in 0..len {
            let analytic = tape.tensors()[k][i];
            let mut perturbed = net.clone();
            perturbed.param_tensors_mut()[k][i] += FD_STEP;
            let plus = loss_of(&perturbed, x, kind)?;
            let mut perturbed = net.clone();
            perturbed.param_tensors_mut()[k][i] -= FD_STEP;
            let minus = loss_of(&perturbed, x, kind)?;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            max_err = max_err.max(rel_err(analytic, numeric));
        }
    }

    // Inputs.
    for i in 0..x.values().len() {
        let analytic = tape.input_grad.values()[i];
        let mut xp = x.clone();
        xp.values_mut()[i] += FD_STEP;
        let plus = loss_of(net, &xp, kind)?;
        let mut xm = x.clone();
        xm.values_mut()[i] -= FD_STEP;
        let minus = loss_of(net, &xm, kind)?;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        max_err = max_err.max(rel_err(analytic, numeric));
    }

    Ok(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{Mlp, OutputMode};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_input(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let values = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::from_vec(rows, cols, values).unwrap()
    }

    #[test]
    fn random_net_matches_finite_differences() {
        for h in [4, 8, 16] {
            let net = Mlp::init(3, h, 2, OutputMode::Linear, h as u64);
            let x = random_input(2, 3, 100 + h as u64);
            let err = grad_check(&net, &x, &GradCheckLoss::MeanSquare).unwrap();
            assert!(err < 1e-4, "h={h}: {err}");
        }
    }

    #[test]
    fn sigmoid_head_matches_finite_differences() {
        let net = Mlp::init(4, 8, 3, OutputMode::Sigmoid, 21);
        let x = random_input(2, 4, 22);
        let target = random_input(2, 3, 23).map(|v| 0.5 + 0.4 * v);
        let err = grad_check(&net, &x, &GradCheckLoss::MseAgainst(target)).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn zero_net_zero_input_has_zero_error() {
        let net = Mlp::zeros(2, 4, 1, OutputMode::Linear);
        let x = Matrix::zeros(1, 2);
        let err = grad_check(&net, &x, &GradCheckLoss::MeanSquare).unwrap();
        assert_eq!(err, 0.0);
    }
}
