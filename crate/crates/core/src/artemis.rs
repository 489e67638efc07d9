//! Choosing the hybrid weight by simulation.
//!
//! A sweep decodes one simulated sequence at every weight on a grid and
//! records the accuracy against the true states and the log-joint probability
//! of each hybrid path. After min-max scaling of both axes the chosen weight is
//! the grid point where the curve is closest to the diagonal.

use rayon::prelude::*;

use crate::decoding::{viterbi, DecodingContext};
use crate::error::{Error, Result};
use crate::forward_backward::forward_backward;
use crate::model::{log_joint, HmmModel, ObsSeq, StateSeq};
use crate::seeding::substream_seed;

/// Grid resolution used when none is given: `k / 256` for `k = 0..=256`.
pub const DEFAULT_GRID_STEPS: usize = 256;

pub fn uniform_grid(steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "alpha grid needs at least one step".into(),
        ));
    }
    Ok((0..=steps).map(|k| k as f64 / steps as f64).collect())
}

pub fn default_grid() -> Vec<f64> {
    uniform_grid(DEFAULT_GRID_STEPS).expect("non-empty grid")
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("alpha grid is empty".into()));
    }
    if grid.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidArgument(
            "alpha grid values must lie in [0, 1]".into(),
        ));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "alpha grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Fraction of positions where `decoded` equals `truth`.
pub fn pointwise_accuracy(decoded: &StateSeq, truth: &StateSeq) -> Result<f64> {
    blockwise_accuracy(decoded, truth, 1)
}

/// Fraction of the `n - b + 1` windows of length `b` decoded without error.
pub fn blockwise_accuracy(decoded: &StateSeq, truth: &StateSeq, block: usize) -> Result<f64> {
    if decoded.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: decoded.len(),
            right: truth.len(),
        });
    }
    let n = decoded.len();
    if block == 0 || block > n {
        return Err(Error::InvalidArgument(format!(
            "block size {block} outside 1..={n}"
        )));
    }
    // every maximal run of r matches holds max(0, r - b + 1) windows
    let mut windows = 0usize;
    let mut run = 0usize;
    for (s, y) in decoded.states().iter().zip(truth.states()) {
        if s == y {
            run += 1;
            if run >= block {
                windows += 1;
            }
        } else {
            run = 0;
        }
    }
    Ok(windows as f64 / (n - block + 1) as f64)
}

/// Accuracy against log-joint probability of hybrid paths along a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtemisCurve {
    pub alphas: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub log_joint: Vec<f64>,
    pub scaled_accuracy: Vec<f64>,
    pub scaled_log_joint: Vec<f64>,
    /// `None` when either axis is constant over the sweep.
    pub optimal_alpha: Option<f64>,
}

impl ArtemisCurve {
    /// Builds the scaled axes and the 45-degree choice from raw points.
    pub fn from_points(alphas: Vec<f64>, accuracy: Vec<f64>, log_joint: Vec<f64>) -> Result<Self> {
        if alphas.len() != accuracy.len() || alphas.len() != log_joint.len() {
            return Err(Error::LengthMismatch {
                left: alphas.len(),
                right: accuracy.len().min(log_joint.len()),
            });
        }
        let scaled_accuracy = min_max_scale(&accuracy);
        let scaled_log_joint = min_max_scale(&log_joint);
        let mut curve = Self {
            alphas,
            accuracy,
            log_joint,
            scaled_accuracy: scaled_accuracy.clone().unwrap_or_default(),
            scaled_log_joint: scaled_log_joint.clone().unwrap_or_default(),
            optimal_alpha: None,
        };
        match (scaled_accuracy, scaled_log_joint) {
            (Some(_), Some(_)) => curve.optimal_alpha = Some(curve.closest_to_diagonal()),
            (a, j) => {
                let n = curve.alphas.len();
                curve.scaled_accuracy = a.unwrap_or_else(|| vec![0.0; n]);
                curve.scaled_log_joint = j.unwrap_or_else(|| vec![0.0; n]);
            }
        }
        Ok(curve)
    }

    pub fn is_degenerate(&self) -> bool {
        self.optimal_alpha.is_none()
    }

    fn closest_to_diagonal(&self) -> f64 {
        let mut best = (self.alphas[0], f64::INFINITY);
        for ((&a, sa), sj) in self
            .alphas
            .iter()
            .zip(&self.scaled_accuracy)
            .zip(&self.scaled_log_joint)
        {
            let gap = (sa - sj).abs();
            if gap < best.1 {
                best = (a, gap);
            }
        }
        best.0
    }
}

/// `(v - min) / (max - min)`; `None` when the vector is constant or not finite.
fn min_max_scale(values: &[f64]) -> Option<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return None;
    }
    Some(values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

/// Chosen weight of a curve; fails when scaling is degenerate.
pub fn optimal_alpha(curve: &ArtemisCurve) -> Result<f64> {
    curve
        .optimal_alpha
        .ok_or(Error::DegenerateScaling("accuracy or log-joint"))
}

/// One sweep of `grid` for a simulated pair `(truth, obs)`.
pub fn sweep(
    model: &HmmModel,
    obs: &ObsSeq,
    truth: &StateSeq,
    grid: &[f64],
) -> Result<ArtemisCurve> {
    check_grid(grid)?;
    if truth.len() != obs.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: obs.len(),
        });
    }
    let tables = forward_backward(model, obs)?;
    let ctx = DecodingContext::new(model, obs, &tables)?;
    let points: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&alpha| {
            let path = ctx.hybrid_table(alpha)?.backtrack();
            Ok((
                pointwise_accuracy(&path, truth)?,
                log_joint(model, &path, obs)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (accuracy, log_joint) = points.into_iter().unzip();
    ArtemisCurve::from_points(grid.to_vec(), accuracy, log_joint)
}

/// Replicate results of a simulation study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub label: String,
    pub curves: Vec<ArtemisCurve>,
    /// Per replicate; `None` marks a degenerate sweep.
    pub optimal_alphas: Vec<Option<f64>>,
    /// Mean over the non-degenerate replicates; `NaN` if there are none.
    pub average: f64,
    /// Sample standard deviation (divisor `m - 1`); zero for a single value.
    pub std_dev: f64,
}

impl StudyReport {
    pub fn degenerate_replicates(&self) -> Vec<usize> {
        self.optimal_alphas
            .iter()
            .enumerate()
            .filter(|(_, a)| a.is_none())
            .map(|(r, _)| r)
            .collect()
    }
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (m - 1) as f64).sqrt())
}

fn check_study(n: usize, replicates: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sequence length must be positive".into(),
        ));
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    Ok(())
}

/// Simulates `replicates` sequences of length `n`, sweeps each, and averages
/// the chosen weights. Replicate `r` draws from substream `r` of `seed`.
pub fn artemis_study(
    model: &HmmModel,
    n: usize,
    replicates: usize,
    grid: &[f64],
    seed: u64,
    label: &str,
) -> Result<StudyReport> {
    check_study(n, replicates)?;
    check_grid(grid)?;
    let curves: Vec<ArtemisCurve> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let (truth, obs) = model.simulate(n, substream_seed(seed, r as u64))?;
            sweep(model, &obs, &truth, grid)
        })
        .collect::<Result<_>>()?;
    let optimal_alphas: Vec<Option<f64>> = curves.iter().map(|c| c.optimal_alpha).collect();
    let defined: Vec<f64> = optimal_alphas.iter().flatten().copied().collect();
    let (average, std_dev) = mean_and_std(&defined);
    Ok(StudyReport {
        label: label.to_string(),
        curves,
        optimal_alphas,
        average,
        std_dev,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Posterior,
    Viterbi,
    Hybrid(f64),
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Posterior => write!(f, "posterior"),
            Method::Viterbi => write!(f, "viterbi"),
            Method::Hybrid(a) => write!(f, "hybrid:{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockwiseRow {
    pub block_size: usize,
    pub method: Method,
    pub mean_accuracy: f64,
    pub mean_accuracy_minus_posterior: f64,
}

/// Average block-wise accuracy of Posterior, Viterbi and hybrid decoding
/// (one hybrid method per entry of `alphas`) over simulated replicates.
/// Rows are ordered by block size, then method.
pub fn blockwise_study(
    model: &HmmModel,
    n: usize,
    replicates: usize,
    alphas: &[f64],
    block_sizes: &[usize],
    seed: u64,
) -> Result<Vec<BlockwiseRow>> {
    check_study(n, replicates)?;
    if let Some(&b) = block_sizes.iter().find(|&&b| b == 0 || b > n) {
        return Err(Error::InvalidArgument(format!(
            "block size {b} outside 1..={n}"
        )));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {a} outside [0, 1]"
        )));
    }
    let mut methods = vec![Method::Posterior, Method::Viterbi];
    methods.extend(alphas.iter().map(|&a| Method::Hybrid(a)));

    // per replicate: [method][block] accuracies
    let per_replicate: Vec<Vec<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let (truth, obs) = model.simulate(n, substream_seed(seed, r as u64))?;
            let tables = forward_backward(model, &obs)?;
            let ctx = DecodingContext::new(model, &obs, &tables)?;
            methods
                .iter()
                .map(|m| {
                    let path = match *m {
                        Method::Posterior => ctx.posterior_path(),
                        Method::Viterbi => viterbi(model, &obs)?,
                        Method::Hybrid(a) => ctx.hybrid_table(a)?.backtrack(),
                    };
                    block_sizes
                        .iter()
                        .map(|&b| blockwise_accuracy(&path, &truth, b))
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(block_sizes.len() * methods.len());
    for (bi, &block_size) in block_sizes.iter().enumerate() {
        let mean_of = |mi: usize| {
            per_replicate.iter().map(|rep| rep[mi][bi]).sum::<f64>() / replicates as f64
        };
        let posterior = mean_of(0);
        for (mi, &method) in methods.iter().enumerate() {
            let mean = mean_of(mi);
            rows.push(BlockwiseRow {
                block_size,
                method,
                mean_accuracy: mean,
                mean_accuracy_minus_posterior: mean - posterior,
            });
        }
    }
    Ok(rows)
}

/// Three-state model with `pi = (0.8, 0.1, 0.1)`, staying probability `q`,
/// leaving uniformly otherwise, and rates `(20 - a, 20, 20 + a)`.
pub fn three_state_model(q: f64, a: f64) -> Result<HmmModel> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "staying probability q = {q} outside (0, 1]"
        )));
    }
    if !(0.0..20.0).contains(&a) {
        return Err(Error::InvalidArgument(format!(
            "rate offset a = {a} outside [0, 20)"
        )));
    }
    let off = (1.0 - q) / 2.0;
    let gamma = (0..3)
        .map(|i| (0..3).map(|j| if i == j { q } else { off }).collect())
        .collect();
    HmmModel::new(vec![0.8, 0.1, 0.1], gamma, vec![20.0 - a, 20.0, 20.0 + a])
}

/// All combinations of `q_values` and `a_values`, `q` varying slowest.
pub fn model_grid(q_values: &[f64], a_values: &[f64]) -> Result<Vec<((f64, f64), HmmModel)>> {
    let mut out = Vec::with_capacity(q_values.len() * a_values.len());
    for &q in q_values {
        for &a in a_values {
            out.push(((q, a), three_state_model(q, a)?));
        }
    }
    Ok(out)
}

/// The easy, medium and hard cases (`q = 0.8`, `a = 10, 5, 2`).
pub fn difficulty_cases() -> [(&'static str, f64); 3] {
    [("easy", 10.0), ("medium", 5.0), ("hard", 2.0)]
}
