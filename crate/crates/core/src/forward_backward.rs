//! Scaled forward-backward recursions.
//!
//! With per-step normalizers `c_t` the stored tables relate to the unscaled
//! ones by `alpha_t(j) = fwd[t][j] * prod_{u<=t} c_u` and
//! `beta_t(j) = bwd[t][j] * prod_{u>t} c_u`. Emission probabilities are
//! shifted by their per-step maximum before exponentiation, so the
//! normalizers are kept as logarithms and extreme counts cannot underflow a
//! whole row.

use crate::error::{Error, Result};
use crate::model::{HmmModel, ObsSeq};

#[derive(Debug, Clone)]
pub struct FBTables {
    num_states: usize,
    /// Row-major `n x K`, every row sums to one.
    fwd: Vec<f64>,
    /// Row-major `n x K`.
    bwd: Vec<f64>,
    /// `log c_t`.
    log_scale: Vec<f64>,
    /// `log Phi(x_t | j)`, row-major `n x K`.
    log_emission: Vec<f64>,
    loglik: f64,
}

impl FBTables {
    pub fn len(&self) -> usize {
        self.log_scale.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_scale.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// `log P(x)`.
    pub fn loglik(&self) -> f64 {
        self.loglik
    }

    pub fn fwd_scaled(&self, t: usize) -> &[f64] {
        let k = self.num_states;
        &self.fwd[t * k..(t + 1) * k]
    }

    pub fn bwd_scaled(&self, t: usize) -> &[f64] {
        let k = self.num_states;
        &self.bwd[t * k..(t + 1) * k]
    }

    pub fn log_scale(&self) -> &[f64] {
        &self.log_scale
    }

    /// The normalizers `c_t` themselves. Can underflow for very unlikely
    /// observations; prefer [`FBTables::log_scale`].
    pub fn scale(&self) -> Vec<f64> {
        self.log_scale.iter().map(|l| l.exp()).collect()
    }

    pub fn log_emission(&self, t: usize, state: usize) -> f64 {
        self.log_emission[t * self.num_states + state]
    }

    /// `Phi(x_t | j) / c_t`, the emission factor that appears in every ratio
    /// of scaled backward values.
    pub(crate) fn scaled_emission(&self, t: usize, state: usize) -> f64 {
        (self.log_emission(t, state) - self.log_scale[t]).exp()
    }

    /// `P(y_t = j | x)` for all `j`, written into `out`.
    pub fn marginal_into(&self, t: usize, out: &mut [f64]) {
        let f = self.fwd_scaled(t);
        let b = self.bwd_scaled(t);
        let mut sum = 0.0;
        for j in 0..self.num_states {
            out[j] = f[j] * b[j];
            sum += out[j];
        }
        out.iter_mut().for_each(|p| *p /= sum);
    }

    pub fn posterior_marginals(&self) -> Marginals {
        let k = self.num_states;
        let mut probs = vec![0.0; self.fwd.len()];
        for (t, row) in probs.chunks_exact_mut(k).enumerate() {
            self.marginal_into(t, row);
        }
        Marginals {
            num_states: k,
            probs,
        }
    }
}

/// `n x K` matrix of posterior state probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    num_states: usize,
    probs: Vec<f64>,
}

impl Marginals {
    /// Wraps a row-major `n x K` matrix. Rows are not re-checked.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument(
                "marginal rows must be non-empty and equal length".into(),
            ));
        }
        Ok(Self {
            num_states: k,
            probs: rows.concat(),
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len() / self.num_states
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.probs[t * self.num_states..(t + 1) * self.num_states]
    }

    pub fn get(&self, t: usize, state: usize) -> f64 {
        self.probs[t * self.num_states + state]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks_exact(self.num_states)
    }
}

pub fn forward_backward(model: &HmmModel, obs: &ObsSeq) -> Result<FBTables> {
    let k = model.num_states();
    let x = obs.counts();
    let n = x.len();

    let mut log_emission = Vec::with_capacity(n * k);
    for &count in x {
        log_emission.extend((0..k).map(|j| model.log_emission(j, count)));
    }

    let mut fwd = vec![0.0; n * k];
    let mut log_scale = vec![0.0; n];
    let mut shifted = vec![0.0; k];
    for t in 0..n {
        let le = &log_emission[t * k..(t + 1) * k];
        let shift = le.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::ImpossibleObservation {
                position: t + 1,
                count: x[t],
            });
        }
        for j in 0..k {
            shifted[j] = (le[j] - shift).exp();
        }

        let (prev, cur) = fwd.split_at_mut(t * k);
        let cur = &mut cur[..k];
        if t == 0 {
            for j in 0..k {
                cur[j] = model.pi()[j] * shifted[j];
            }
        } else {
            let prev = &prev[(t - 1) * k..];
            cur.iter_mut().for_each(|v| *v = 0.0);
            for (i, &p) in prev.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (j, g) in model.gamma_row(i).iter().enumerate() {
                    cur[j] += p * g;
                }
            }
            for j in 0..k {
                cur[j] *= shifted[j];
            }
        }
        let sum: f64 = cur.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::ImpossibleObservation {
                position: t + 1,
                count: x[t],
            });
        }
        cur.iter_mut().for_each(|v| *v /= sum);
        log_scale[t] = shift + sum.ln();
    }

    let mut bwd = vec![0.0; n * k];
    bwd[(n - 1) * k..].iter_mut().for_each(|v| *v = 1.0);
    let mut weighted = vec![0.0; k];
    for t in (0..n - 1).rev() {
        for j in 0..k {
            weighted[j] =
                (log_emission[(t + 1) * k + j] - log_scale[t + 1]).exp() * bwd[(t + 1) * k + j];
        }
        for i in 0..k {
            bwd[t * k + i] = model
                .gamma_row(i)
                .iter()
                .zip(&weighted)
                .map(|(g, w)| g * w)
                .sum();
        }
    }

    let loglik = log_scale.iter().sum();
    Ok(FBTables {
        num_states: k,
        fwd,
        bwd,
        log_scale,
        log_emission,
        loglik,
    })
}
