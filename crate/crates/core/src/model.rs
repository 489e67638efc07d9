//! Poisson hidden Markov model and the sequences it generates.
//!
//! States are stored 0-based. Everything that leaves the library (CSV files,
//! CLI output, error messages) labels them 1-based.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::seeding;

/// Default row-sum tolerance for `pi` and the rows of `gamma`.
pub const STRICT_TOLERANCE: f64 = 1e-9;

/// Tolerance used together with renormalization for published, rounded parameter sets.
pub const RELAXED_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub tolerance: f64,
    /// Rescale `pi` and every `gamma` row to sum to exactly one when the
    /// deviation is within `tolerance`.
    pub renormalize: bool,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            tolerance: STRICT_TOLERANCE,
            renormalize: false,
        }
    }
}

impl ValidationOptions {
    pub fn relaxed() -> Self {
        Self {
            tolerance: RELAXED_TOLERANCE,
            renormalize: true,
        }
    }
}

/// Which probability vector was rescaled during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityVector {
    Initial,
    /// 0-based row of the transition matrix.
    TransitionRow(usize),
}

impl fmt::Display for ProbabilityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbabilityVector::Initial => write!(f, "pi"),
            ProbabilityVector::TransitionRow(i) => write!(f, "gamma row {}", i + 1),
        }
    }
}

/// A vector whose sum deviated from one and was rescaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Renormalization {
    pub vector: ProbabilityVector,
    pub original_sum: f64,
}

impl fmt::Display for Renormalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} summed to {} and was renormalized",
            self.vector, self.original_sum
        )
    }
}

/// Hidden Markov model `(pi, gamma, Poisson(lambda))`.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    pi: Vec<f64>,
    /// Row-major `K x K`.
    gamma: Vec<f64>,
    lambda: Vec<f64>,
    log_pi: Vec<f64>,
    log_gamma: Vec<f64>,
}

impl HmmModel {
    /// Builds a model, requiring every probability vector to sum to one within 1e-9.
    pub fn new(pi: Vec<f64>, gamma: Vec<Vec<f64>>, lambda: Vec<f64>) -> Result<Self> {
        Self::validated(pi, gamma, lambda, ValidationOptions::default()).map(|(m, _)| m)
    }

    /// Builds a model under `options`, returning the vectors that had to be
    /// rescaled (empty unless `options.renormalize` is set).
    pub fn validated(
        mut pi: Vec<f64>,
        gamma: Vec<Vec<f64>>,
        lambda: Vec<f64>,
        options: ValidationOptions,
    ) -> Result<(Self, Vec<Renormalization>)> {
        let k = pi.len();
        if k == 0 {
            return Err(Error::InvalidModel("model needs at least one state".into()));
        }
        if gamma.len() != k {
            return Err(Error::InvalidModel(format!(
                "gamma has {} rows, expected {k}",
                gamma.len()
            )));
        }
        if lambda.len() != k {
            return Err(Error::InvalidModel(format!(
                "lambda has {} entries, expected {k}",
                lambda.len()
            )));
        }
        for (j, &l) in lambda.iter().enumerate() {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "lambda[{}] = {l} must be positive and finite",
                    j + 1
                )));
            }
        }

        let mut adjustments = Vec::new();
        check_probability_vector(
            &mut pi,
            ProbabilityVector::Initial,
            options,
            &mut adjustments,
        )?;
        let mut flat = Vec::with_capacity(k * k);
        for (i, mut row) in gamma.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidModel(format!(
                    "gamma row {} has {} entries, expected {k}",
                    i + 1,
                    row.len()
                )));
            }
            check_probability_vector(
                &mut row,
                ProbabilityVector::TransitionRow(i),
                options,
                &mut adjustments,
            )?;
            flat.extend(row);
        }

        let log_pi = pi.iter().map(|p| p.ln()).collect();
        let log_gamma = flat.iter().map(|p| p.ln()).collect();
        Ok((
            Self {
                pi,
                gamma: flat,
                lambda,
                log_pi,
                log_gamma,
            },
            adjustments,
        ))
    }

    pub fn num_states(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Transition probability from `from` to `to` (0-based).
    pub fn gamma(&self, from: usize, to: usize) -> f64 {
        self.gamma[from * self.num_states() + to]
    }

    pub fn gamma_row(&self, from: usize) -> &[f64] {
        let k = self.num_states();
        &self.gamma[from * k..(from + 1) * k]
    }

    pub fn gamma_rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_states())
            .map(|i| self.gamma_row(i).to_vec())
            .collect()
    }

    pub fn log_pi(&self, state: usize) -> f64 {
        self.log_pi[state]
    }

    pub fn log_gamma(&self, from: usize, to: usize) -> f64 {
        self.log_gamma[from * self.num_states() + to]
    }

    /// `log P(x = count | y = state)`; the only place the emission family enters.
    pub fn log_emission(&self, state: usize, count: u64) -> f64 {
        let lambda = self.lambda[state];
        let x = count as f64;
        x * lambda.ln() - lambda - ln_gamma(x + 1.0)
    }

    /// Same model with the labels of a two-state model exchanged.
    pub fn swap_two_states(&self) -> Result<Self> {
        if self.num_states() != 2 {
            return Err(Error::NotTwoState(self.num_states()));
        }
        let pi = vec![self.pi[1], self.pi[0]];
        let gamma = vec![
            vec![self.gamma(1, 1), self.gamma(1, 0)],
            vec![self.gamma(0, 1), self.gamma(0, 0)],
        ];
        let lambda = vec![self.lambda[1], self.lambda[0]];
        Self::validated(pi, gamma, lambda, ValidationOptions::relaxed()).map(|(m, _)| m)
    }

    /// Draws `(y, x)` of length `n`. Equal `(model, n, seed)` give identical output.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<(StateSeq, ObsSeq)> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "simulation length must be at least 1".into(),
            ));
        }
        let mut rng = seeding::rng(seed);
        let emitters = self
            .lambda
            .iter()
            .map(|&l| Poisson::new(l).map_err(|e| Error::InvalidModel(e.to_string())))
            .collect::<Result<Vec<_>>>()?;

        let mut states = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        let mut state = sample_categorical(&self.pi, rng.random());
        for t in 0..n {
            if t > 0 {
                state = sample_categorical(self.gamma_row(state), rng.random());
            }
            states.push(state);
            counts.push(emitters[state].sample(&mut rng) as u64);
        }
        Ok((StateSeq(states), ObsSeq(counts)))
    }
}

fn check_probability_vector(
    values: &mut [f64],
    which: ProbabilityVector,
    options: ValidationOptions,
    adjustments: &mut Vec<Renormalization>,
) -> Result<()> {
    if let Some(j) = values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidModel(format!(
            "{which} entry {} = {} is not a probability",
            j + 1,
            values[j]
        )));
    }
    let sum: f64 = values.iter().sum();
    let deviation = (sum - 1.0).abs();
    // a row printed to two decimals can sit exactly on the tolerance
    if deviation > options.tolerance * (1.0 + 1e-9) {
        return Err(Error::InvalidModel(format!(
            "{which} sums to {sum}, deviating from 1 by more than {:e}{}",
            options.tolerance,
            if options.renormalize {
                ""
            } else {
                " (renormalization accepts sums within 1e-2)"
            }
        )));
    }
    if options.renormalize && deviation > 0.0 {
        values.iter_mut().for_each(|v| *v /= sum);
        if deviation > STRICT_TOLERANCE {
            adjustments.push(Renormalization {
                vector: which,
                original_sum: sum,
            });
        }
    }
    Ok(())
}

/// Inverse-CDF draw from `probs` given `u` in `[0, 1)`. Falls back to the
/// last state with positive mass when round-off leaves `u` past the total.
pub(crate) fn sample_categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Observed counts `x_1..x_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObsSeq(Vec<u64>);

impl ObsSeq {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument(
                "observation sequence is empty".into(),
            ));
        }
        Ok(Self(counts))
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Hidden state path with 0-based states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSeq(Vec<usize>);

impl StateSeq {
    pub fn new(states: Vec<usize>) -> Self {
        Self(states)
    }

    /// Builds a path from 1-based labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        labels
            .iter()
            .map(|&l| {
                l.checked_sub(1)
                    .ok_or_else(|| Error::InvalidArgument("state labels start at 1".into()))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|s| s + 1)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn check_against(&self, model: &HmmModel, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: n,
            });
        }
        if let Some(&s) = self.0.iter().find(|&&s| s >= model.num_states()) {
            return Err(Error::InvalidArgument(format!(
                "state {} out of range for a {}-state model",
                s + 1,
                model.num_states()
            )));
        }
        Ok(())
    }
}

/// `log P(s, x)`; `-inf` when any factor is zero.
pub fn log_joint(model: &HmmModel, path: &StateSeq, obs: &ObsSeq) -> Result<f64> {
    path.check_against(model, obs.len())?;
    let s = path.states();
    let x = obs.counts();
    let mut total = model.log_pi(s[0]) + model.log_emission(s[0], x[0]);
    for t in 1..s.len() {
        total += model.log_gamma(s[t - 1], s[t]) + model.log_emission(s[t], x[t]);
    }
    // ln(0) + finite is already -inf; this only guards NaN from -inf + inf, which cannot occur
    Ok(if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    })
}
