//! L2-regularized hinge-loss linear classifier trained by dual coordinate
//! descent, with the intercept learned as the weight of a constant feature.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::{Result, UbeError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tol: 1e-4,
            max_epochs: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearSvm {
    pub weights: Array1<f64>,
    pub bias: f64,
    pub epochs: usize,
    pub converged: bool,
}

impl LinearSvm {
    /// Fit on rows of `x` with labels `y ∈ {−1, +1}`.
    pub fn fit<R: Rng + ?Sized>(x: ArrayView2<'_, f64>, y: &[f64], params: SvmParams, rng: &mut R) -> Result<Self> {
        if x.nrows() != y.len() || y.is_empty() {
            return Err(UbeError::config("classifier needs one label per row"));
        }
        if y.iter().any(|&l| l != 1.0 && l != -1.0) {
            return Err(UbeError::config("labels must be -1 or +1"));
        }
        let d = x.ncols();
        let mut w = Array1::<f64>::zeros(d);
        let mut b = 0.0;
        let mut alpha = vec![0.0; y.len()];
        let diag: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r) + 1.0).collect();
        let mut order: Vec<usize> = (0..y.len()).collect();
        let mut epochs = 0;
        let mut converged = false;

        while epochs < params.max_epochs {
            epochs += 1;
            order.shuffle(rng);
            let mut pg_max = f64::NEG_INFINITY;
            let mut pg_min = f64::INFINITY;
            for &i in &order {
                let xi = x.row(i);
                let g = y[i] * (w.dot(&xi) + b) - 1.0;
                let pg = if alpha[i] == 0.0 {
                    g.min(0.0)
                } else if alpha[i] == params.c {
                    g.max(0.0)
                } else {
                    g
                };
                pg_max = pg_max.max(pg);
                pg_min = pg_min.min(pg);
                if pg != 0.0 {
                    let old = alpha[i];
                    alpha[i] = (old - g / diag[i]).clamp(0.0, params.c);
                    let step = (alpha[i] - old) * y[i];
                    w.scaled_add(step, &xi);
                    b += step;
                }
            }
            if pg_max - pg_min < params.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            tracing::warn!(target: "ube::names", epochs, "linear classifier did not reach tolerance");
        }
        Ok(LinearSvm {
            weights: w,
            bias: b,
            epochs,
            converged,
        })
    }

    /// Signed distance-like margin `w·x + b`.
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.weights.dot(&x) + self.bias
    }
}
