//! Linear readout trained by ridge regression on the reservoir state history.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{RealMatrix, SpdFactor};

pub const DEFAULT_LAMBDA: f64 = 1e-8;
pub const DEFAULT_WASHOUT: usize = 100;
const REFINEMENT_STEPS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    #[serde(rename = "W_out")]
    pub w_out: RealMatrix,
    pub lambda: f64,
    /// One entry per output dimension; `None` where the target column is
    /// constant over the training window and NRMSE is undefined.
    pub train_nrmse: Vec<Option<f64>>,
}

impl ReadoutModel {
    pub fn state_dim(&self) -> usize {
        self.w_out.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w_out.cols()
    }

    /// Mean of the defined per-dimension training errors.
    pub fn mean_train_nrmse(&self) -> Option<f64> {
        let defined: Vec<f64> = self.train_nrmse.iter().flatten().copied().collect();
        if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        }
    }
}

/// Solves `(XᵀX + λI) W_out = XᵀY` on the rows after `washout`.
pub fn train_ridge(x: &RealMatrix, y: &RealMatrix, lambda: f64, washout: usize) -> Result<ReadoutModel> {
    if x.rows() != y.rows() {
        return Err(Error::dim(format!("state history has {} rows but target has {}", x.rows(), y.rows())));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::input(format!("lambda must be positive, got {lambda}")));
    }
    if x.rows() <= washout || x.rows() - washout < 2 {
        return Err(Error::input(format!("{} samples leave fewer than 2 rows after a washout of {washout}", x.rows())));
    }
    let xs = x.row_range(washout, x.rows())?;
    let ys = y.row_range(washout, y.rows())?;

    let mut a = xs.gram();
    let n = a.rows();
    let mut data = std::mem::replace(&mut a, RealMatrix::zeros(1, 1)).into_vec();
    for i in 0..n {
        data[i * n + i] += lambda;
    }
    let a = RealMatrix::new(n, n, data)?;
    let b = xs.transpose_mul(&ys)?;

    let factor = SpdFactor::new(&a)?;
    let mut w = factor.solve(&b)?;
    // Forming XᵀX squares the condition number of X. A few refinement steps
    // driven by the least-squares residual Y - XW recover most of the lost
    // accuracy while reusing the same factorization.
    for _ in 0..REFINEMENT_STEPS {
        let r = subtract(&ys, &xs.matmul(&w)?)?;
        let g = subtract(&xs.transpose_mul(&r)?, &w.scaled(lambda)?)?;
        let dw = factor.solve(&g)?;
        let done = dw.max_abs() <= f64::EPSILON * w.max_abs();
        w = add(&w, &dw)?;
        if done {
            break;
        }
    }

    let pred = xs.matmul(&w)?;
    let train_nrmse = (0..ys.cols())
        .map(|j| match nrmse(&ys.column(j), &pred.column(j)) {
            Ok(v) => Ok(Some(v)),
            Err(Error::UndefinedMetric(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReadoutModel { w_out: w, lambda, train_nrmse })
}

fn subtract(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| p - q).collect();
    RealMatrix::new(a.rows(), a.cols(), data)
}

fn add(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| p + q).collect();
    RealMatrix::new(a.rows(), a.cols(), data)
}

/// `X · W_out`, no bias.
pub fn predict(model: &ReadoutModel, x: &RealMatrix) -> Result<RealMatrix> {
    if x.cols() != model.state_dim() {
        return Err(Error::dim(format!(
            "state has {} columns but the readout expects {}",
            x.cols(),
            model.state_dim()
        )));
    }
    x.matmul(&model.w_out)
}

/// Root-mean-square error divided by the (population) standard deviation of
/// `y_true`.
pub fn nrmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::dim(format!("series lengths differ: {} vs {}", y_true.len(), y_pred.len())));
    }
    if y_true.len() < 2 {
        return Err(Error::input("nrmse needs at least 2 samples"));
    }
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let var = y_true.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::UndefinedMetric("target has zero variance".into()));
    }
    let mse = y_true.iter().zip(y_pred).map(|(t, p)| (t - p).powi(2)).sum::<f64>() / n;
    Ok((mse / var).sqrt())
}
