//! Posterior, Viterbi and hybrid decoding.
//!
//! Hybrid decoding maximizes
//!
//! ```text
//! h(u) = (1 - alpha) * sum_t log P(y_t = u_t | x) + alpha * log P(y = u | x)
//! ```
//!
//! by a Viterbi-like recursion over
//! `delta_t(j) = max_i { delta_{t-1}(i) + alpha log Gamma_ij } + alpha log Phi(x_t|j) + (1 - alpha) log P(y_t = j | x)`.
//! Terms whose weight is exactly zero are skipped, so `0 * log 0` never
//! enters a score. Ties are broken toward the lowest state index everywhere.
//! Viterbi is the same recursion at `alpha = 1`, which makes the endpoint
//! paths identical to the dedicated decoders.

use crate::error::{Error, Result};
use crate::forward_backward::{FBTables, Marginals};
use crate::model::{log_joint, HmmModel, ObsSeq, StateSeq};

/// Index of the largest value, lowest index on ties. `NaN` never wins.
fn argmax(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (j, v);
        }
    }
    best
}

/// Per-position argmax of the posterior marginals.
pub fn posterior_decode(marginals: &Marginals) -> StateSeq {
    StateSeq::new(
        marginals
            .rows()
            .map(|r| argmax(r.iter().copied()).0)
            .collect(),
    )
}

/// Filled dynamic-programming table.
///
/// `delta` rows are stored relative to the previous row's maximum;
/// `offsets[t]` is the amount subtracted, so the recursion's score is
/// `delta[t][j] + sum_{u<=t} offsets[u]`.
#[derive(Debug, Clone)]
pub struct HybridTable {
    pub num_states: usize,
    /// Row-major `n x K`; `-inf` allowed.
    pub delta: Vec<f64>,
    pub offsets: Vec<f64>,
    /// Row-major `(n-1) x K`: `psi[t-1][j]` is the best predecessor of state `j` at position `t`.
    pub psi: Vec<usize>,
    /// `argmax_j delta[n-1][j]`.
    pub last: usize,
}

impl HybridTable {
    pub fn backtrack(&self) -> StateSeq {
        let k = self.num_states;
        let n = self.delta.len() / k;
        let mut path = vec![0; n];
        path[n - 1] = self.last;
        for t in (1..n).rev() {
            path[t - 1] = self.psi[(t - 1) * k + path[t]];
        }
        StateSeq::new(path)
    }
}

/// Shared recursion. `weight` multiplies the joint term, `1 - weight` the
/// marginal term; `log_marginals` (row-major `n x K`) may be `None` only when
/// `weight == 1`.
fn fill_table(
    model: &HmmModel,
    obs: &ObsSeq,
    log_emission: impl Fn(usize, usize) -> f64,
    log_marginals: Option<&[f64]>,
    weight: f64,
) -> Result<HybridTable> {
    let k = model.num_states();
    let n = obs.len();
    let marginal_weight = 1.0 - weight;
    debug_assert!(marginal_weight == 0.0 || log_marginals.is_some());

    let local = |t: usize, j: usize| -> f64 {
        let mut s = 0.0;
        if weight != 0.0 {
            s += weight * log_emission(t, j);
        }
        if marginal_weight != 0.0 {
            s += marginal_weight * log_marginals.expect("marginals required")[t * k + j];
        }
        s
    };

    let mut delta = vec![0.0; n * k];
    let mut offsets = vec![0.0; n];
    let mut psi = vec![0usize; n.saturating_sub(1) * k];
    for j in 0..k {
        let mut s = local(0, j);
        if weight != 0.0 {
            s += weight * model.log_pi(j);
        }
        delta[j] = s;
    }

    for t in 1..n {
        let (prev_rows, cur_rows) = delta.split_at_mut(t * k);
        let prev = &prev_rows[(t - 1) * k..];
        let cur = &mut cur_rows[..k];
        let (_, shift) = argmax(prev.iter().copied());
        if shift == f64::NEG_INFINITY {
            return Err(Error::ImpossibleSequence);
        }
        offsets[t] = shift;
        for j in 0..k {
            let (best_i, best) = if weight != 0.0 {
                argmax((0..k).map(|i| prev[i] + weight * model.log_gamma(i, j)))
            } else {
                argmax(prev.iter().copied())
            };
            psi[(t - 1) * k + j] = best_i;
            cur[j] = (best - shift) + local(t, j);
        }
    }

    let (last, best) = argmax(delta[(n - 1) * k..].iter().copied());
    if best == f64::NEG_INFINITY {
        return Err(Error::ImpossibleSequence);
    }
    Ok(HybridTable {
        num_states: k,
        delta,
        offsets,
        psi,
        last,
    })
}

/// Most probable path `argmax_u P(u | x)`, computed in log space.
pub fn viterbi(model: &HmmModel, obs: &ObsSeq) -> Result<StateSeq> {
    let table = fill_table(
        model,
        obs,
        |t, j| model.log_emission(j, obs.counts()[t]),
        None,
        1.0,
    )?;
    Ok(table.backtrack())
}

/// Hybrid path and its scores.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub path: StateSeq,
    pub alpha: f64,
    /// `h(path)`.
    pub objective: f64,
    /// `log P(path, x)`.
    pub log_joint: f64,
    /// `sum_t log P(y_t = path_t | x)`.
    pub pointwise_log_sum: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Everything a decoder needs that does not depend on `alpha`: computed once
/// and shared by sweeps over many weights.
#[derive(Debug, Clone)]
pub struct DecodingContext<'a> {
    pub model: &'a HmmModel,
    pub obs: &'a ObsSeq,
    pub tables: &'a FBTables,
    pub marginals: Marginals,
    log_marginals: Vec<f64>,
}

impl<'a> DecodingContext<'a> {
    pub fn new(model: &'a HmmModel, obs: &'a ObsSeq, tables: &'a FBTables) -> Result<Self> {
        if tables.len() != obs.len() {
            return Err(Error::LengthMismatch {
                left: tables.len(),
                right: obs.len(),
            });
        }
        let marginals = tables.posterior_marginals();
        let log_marginals = marginals.rows().flatten().map(|p| p.ln()).collect();
        Ok(Self {
            model,
            obs,
            tables,
            marginals,
            log_marginals,
        })
    }

    pub fn loglik(&self) -> f64 {
        self.tables.loglik()
    }

    pub fn posterior_path(&self) -> StateSeq {
        posterior_decode(&self.marginals)
    }

    pub fn hybrid_table(&self, alpha: f64) -> Result<HybridTable> {
        check_alpha(alpha)?;
        fill_table(
            self.model,
            self.obs,
            |t, j| self.tables.log_emission(t, j),
            Some(&self.log_marginals),
            alpha,
        )
    }

    pub fn hybrid_decode(&self, alpha: f64) -> Result<DecodeResult> {
        let path = self.hybrid_table(alpha)?.backtrack();
        self.evaluate(path, alpha)
    }

    /// Scores an arbitrary path at weight `alpha`.
    pub fn evaluate(&self, path: StateSeq, alpha: f64) -> Result<DecodeResult> {
        check_alpha(alpha)?;
        let log_joint = log_joint(self.model, &path, self.obs)?;
        let pointwise_log_sum = self.pointwise_log_sum(&path);
        let objective = combine(alpha, pointwise_log_sum, log_joint - self.loglik());
        Ok(DecodeResult {
            path,
            alpha,
            objective,
            log_joint,
            pointwise_log_sum,
        })
    }

    pub fn pointwise_log_sum(&self, path: &StateSeq) -> f64 {
        path.states()
            .iter()
            .enumerate()
            .map(|(t, &s)| self.log_marginals[t * self.model.num_states() + s])
            .sum()
    }

    /// `log P(path | x)`.
    pub fn log_conditional(&self, path: &StateSeq) -> Result<f64> {
        Ok(log_joint(self.model, path, self.obs)? - self.loglik())
    }

    /// `R1(u|x) = -(1/n) sum_t log P(y_t = u_t | x)`; `+inf` for a zero marginal.
    pub fn risk_l1_log(&self, path: &StateSeq) -> Result<f64> {
        path.check_against(self.model, self.obs.len())?;
        Ok(-self.pointwise_log_sum(path) / path.len() as f64)
    }

    /// `Rinf(u|x) = -(1/n) log P(y = u | x)`; `+inf` for an inadmissible path.
    pub fn risk_linf_log(&self, path: &StateSeq) -> Result<f64> {
        Ok(-self.log_conditional(path)? / path.len() as f64)
    }

    /// `(1 - alpha) R1 + alpha Rinf`, equal to `-h(u) / n`.
    pub fn hybrid_risk(&self, path: &StateSeq, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(-combine(
            alpha,
            -self.risk_l1_log(path)?,
            -self.risk_linf_log(path)?,
        ))
    }

    /// Logarithms of the geometric mean `G`, the path probability `V` and
    /// their weighted geometric mean `H_alpha = (G^w1 V^w2)^(1/(w1+w2))` with
    /// `w1 = n(1 - alpha)`, `w2 = alpha`, so that `w1 log G + w2 log V = h(u)`
    /// and `H_alpha` is maximized by the hybrid path.
    pub fn geometric_means(&self, path: &StateSeq, alpha: f64) -> Result<GeometricMeans> {
        check_alpha(alpha)?;
        path.check_against(self.model, self.obs.len())?;
        let n = path.len() as f64;
        let log_g = self.pointwise_log_sum(path) / n;
        let log_v = self.log_conditional(path)?;
        // w1 log G + w2 log V must equal h(u), which fixes w2 = alpha (not n alpha)
        let w1 = n * (1.0 - alpha);
        let w2 = alpha;
        let log_h = combine_weighted(w1, log_g, w2, log_v) / (w1 + w2);
        Ok(GeometricMeans {
            log_g,
            log_v,
            log_h,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricMeans {
    /// `log G(u) = (1/n) sum_t log P(y_t = u_t | x)`.
    pub log_g: f64,
    /// `log V(u) = log P(u | x)`.
    pub log_v: f64,
    /// `log H_alpha(u)`.
    pub log_h: f64,
}

fn combine_weighted(w1: f64, a: f64, w2: f64, b: f64) -> f64 {
    let mut s = 0.0;
    if w1 != 0.0 {
        s += w1 * a;
    }
    if w2 != 0.0 {
        s += w2 * b;
    }
    s
}

/// `(1 - alpha) * pointwise + alpha * conditional`, dropping zero-weight terms.
fn combine(alpha: f64, pointwise: f64, conditional: f64) -> f64 {
    combine_weighted(1.0 - alpha, pointwise, alpha, conditional)
}

/// Weights at which the hybrid path changes.
///
/// Decodes on `coarse` evenly spaced intervals of `[0, 1]`, then bisects every
/// interval whose endpoints give different paths until it is narrower than
/// `tolerance`. Returns interval midpoints in increasing order. Changes that
/// revert within one coarse interval are not seen.
pub fn path_change_points(
    ctx: &DecodingContext,
    coarse: usize,
    tolerance: f64,
) -> Result<Vec<f64>> {
    if coarse == 0 || !(tolerance > 0.0) {
        return Err(Error::InvalidArgument(
            "coarse grid and tolerance must be positive".into(),
        ));
    }
    let decode = |a: f64| ctx.hybrid_table(a).map(|t| t.backtrack());
    let mut points = Vec::new();
    let mut lo = 0.0;
    let mut lo_path = decode(lo)?;
    for step in 1..=coarse {
        let hi = step as f64 / coarse as f64;
        let hi_path = decode(hi)?;
        if hi_path != lo_path {
            bisect(&decode, lo, &lo_path, hi, &hi_path, tolerance, &mut points)?;
        }
        lo = hi;
        lo_path = hi_path;
    }
    Ok(points)
}

fn bisect(
    decode: &impl Fn(f64) -> Result<StateSeq>,
    lo: f64,
    lo_path: &StateSeq,
    hi: f64,
    hi_path: &StateSeq,
    tolerance: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    if hi - lo <= tolerance {
        out.push(0.5 * (lo + hi));
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    let mid_path = decode(mid)?;
    // a path can change more than once inside the interval
    if mid_path != *lo_path {
        bisect(decode, lo, lo_path, mid, &mid_path, tolerance, out)?;
    }
    if mid_path != *hi_path {
        bisect(decode, mid, &mid_path, hi, hi_path, tolerance, out)?;
    }
    Ok(())
}

/// One-shot hybrid decoding. Prefer [`DecodingContext`] when decoding the
/// same sequence at several weights.
pub fn hybrid_decode(
    model: &HmmModel,
    tables: &FBTables,
    obs: &ObsSeq,
    alpha: f64,
) -> Result<DecodeResult> {
    DecodingContext::new(model, obs, tables)?.hybrid_decode(alpha)
}

/// `h(path)` at weight `alpha`; `-inf` when a term with nonzero weight is `-inf`.
pub fn hybrid_objective(
    model: &HmmModel,
    tables: &FBTables,
    obs: &ObsSeq,
    path: &StateSeq,
    alpha: f64,
) -> Result<f64> {
    Ok(DecodingContext::new(model, obs, tables)?
        .evaluate(path.clone(), alpha)?
        .objective)
}
