//! The hidden chain conditioned on the observations.
//!
//! Given `x`, the hidden sequence is an inhomogeneous first-order Markov chain
//! with initial law `P(y_1 = i | x) = beta_1(i) pi_i Phi(x_1|i) / P(x)` and
//! transitions
//!
//! ```text
//! P(y_t = j | y_{t-1} = i, x) = beta_t(j) Gamma_ij Phi(x_t|j) / beta_{t-1}(i)
//! ```
//!
//! In scaled form the second ratio is
//! `bwd[t][j] * Gamma_ij * Phi(x_t|j) / (bwd[t-1][i] * c_t)`; each row is
//! renormalized afterwards to absorb round-off.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward_backward::{FBTables, Marginals};
use crate::model::{sample_categorical, HmmModel, StateSeq};
use crate::seeding;
use rand::Rng;

/// Default cap on materialized transition entries: `1e6 * K^2`, i.e.
/// sequences up to a million positions are stored densely.
pub const DEFAULT_DENSE_POSITIONS: usize = 1_000_000;

/// Rows whose pre-normalization sum is further than this from one are
/// reported by [`PosteriorChain::max_row_deviation`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
enum Storage {
    /// Row-major `(n-1) x K x K`; entry for position `t` starts at `(t-1) K^2`.
    Dense(Vec<f64>),
    OnDemand {
        model: Box<HmmModel>,
        tables: Box<FBTables>,
    },
}

#[derive(Debug, Clone)]
pub struct PosteriorChain {
    num_states: usize,
    len: usize,
    init: Vec<f64>,
    storage: Storage,
    /// `(t, i)`: row `i` of the transition into 0-based position `t` had
    /// `beta_{t-1}(i) = 0` and was replaced by a uniform row.
    unreachable: Vec<(usize, usize)>,
    max_row_deviation: f64,
}

/// `P(y_1 = i | x)`.
pub fn conditional_initial(model: &HmmModel, tables: &FBTables) -> Vec<f64> {
    let k = model.num_states();
    let mut eta = vec![0.0; k];
    tables.marginal_into(0, &mut eta);
    eta
}

/// Writes row `from` of the transition into 0-based position `t` (so `t >= 1`).
/// Returns the pre-normalization row sum, or `None` for an unreachable row,
/// which is filled uniformly.
fn transition_row(
    model: &HmmModel,
    tables: &FBTables,
    t: usize,
    from: usize,
    out: &mut [f64],
) -> Option<f64> {
    let k = model.num_states();
    let denom = tables.bwd_scaled(t - 1)[from];
    if !(denom > 0.0) {
        out.iter_mut().for_each(|v| *v = 1.0 / k as f64);
        return None;
    }
    let bwd = tables.bwd_scaled(t);
    let gamma = model.gamma_row(from);
    let mut sum = 0.0;
    for j in 0..k {
        out[j] = bwd[j] * gamma[j] * tables.scaled_emission(t, j) / denom;
        sum += out[j];
    }
    if !(sum > 0.0) {
        out.iter_mut().for_each(|v| *v = 1.0 / k as f64);
        return None;
    }
    out.iter_mut().for_each(|v| *v /= sum);
    Some(sum)
}

/// `K x K` matrix (row-major) of `P(y_t = j | y_{t-1} = i, x)` for 0-based
/// position `t >= 1`. Unreachable rows are uniform.
pub fn conditional_transition(model: &HmmModel, tables: &FBTables, t: usize) -> Result<Vec<f64>> {
    if t == 0 || t >= tables.len() {
        return Err(Error::InvalidArgument(format!(
            "transition position {} outside 2..={}",
            t + 1,
            tables.len()
        )));
    }
    let k = model.num_states();
    let mut out = vec![0.0; k * k];
    for (i, row) in out.chunks_exact_mut(k).enumerate() {
        transition_row(model, tables, t, i, row);
    }
    Ok(out)
}

impl PosteriorChain {
    pub fn build(model: &HmmModel, tables: &FBTables) -> Self {
        Self::build_with_limit(model, tables, DEFAULT_DENSE_POSITIONS)
    }

    /// Materializes all transition matrices when the sequence has at most
    /// `max_dense_positions` positions; otherwise rows are computed from the
    /// tables when requested.
    pub fn build_with_limit(
        model: &HmmModel,
        tables: &FBTables,
        max_dense_positions: usize,
    ) -> Self {
        let k = model.num_states();
        let n = tables.len();
        let init = conditional_initial(model, tables);
        let mut unreachable = Vec::new();
        let mut max_row_deviation: f64 = 0.0;
        let mut row = vec![0.0; k];

        let storage = if n <= max_dense_positions {
            let mut dense = vec![0.0; n.saturating_sub(1) * k * k];
            for t in 1..n {
                let block = &mut dense[(t - 1) * k * k..t * k * k];
                for (i, out) in block.chunks_exact_mut(k).enumerate() {
                    match transition_row(model, tables, t, i, out) {
                        Some(sum) => max_row_deviation = max_row_deviation.max((sum - 1.0).abs()),
                        None => unreachable.push((t, i)),
                    }
                }
            }
            Storage::Dense(dense)
        } else {
            for t in 1..n {
                for i in 0..k {
                    match transition_row(model, tables, t, i, &mut row) {
                        Some(sum) => max_row_deviation = max_row_deviation.max((sum - 1.0).abs()),
                        None => unreachable.push((t, i)),
                    }
                }
            }
            Storage::OnDemand {
                model: Box::new(model.clone()),
                tables: Box::new(tables.clone()),
            }
        };

        Self {
            num_states: k,
            len: n,
            init,
            storage,
            unreachable,
            max_row_deviation,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Sequence length `n`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// `eta_i = P(y_1 = i | x)`.
    pub fn init(&self) -> &[f64] {
        &self.init
    }

    /// Rows replaced by uniform rows because the conditioning state has zero
    /// posterior mass, as `(0-based position, 0-based from-state)`.
    pub fn unreachable_rows(&self) -> &[(usize, usize)] {
        &self.unreachable
    }

    /// Largest `|row sum - 1|` seen before renormalization.
    pub fn max_row_deviation(&self) -> f64 {
        self.max_row_deviation
    }

    /// Row `from` of the transition into 0-based position `t` (`1 <= t < n`).
    pub fn transition_row_into(&self, t: usize, from: usize, out: &mut [f64]) {
        let k = self.num_states;
        match &self.storage {
            Storage::Dense(dense) => {
                let start = (t - 1) * k * k + from * k;
                out.copy_from_slice(&dense[start..start + k]);
            }
            Storage::OnDemand { model, tables } => {
                transition_row(model, tables, t, from, out);
            }
        }
    }

    /// Row-major `K x K` transition into 0-based position `t` (`1 <= t < n`).
    pub fn transition(&self, t: usize) -> Vec<f64> {
        let k = self.num_states;
        let mut out = vec![0.0; k * k];
        for (i, row) in out.chunks_exact_mut(k).enumerate() {
            self.transition_row_into(t, i, row);
        }
        out
    }

    /// Pushes `init` through every transition, giving `P(y_t = j | x)` again.
    pub fn propagated_marginals(&self) -> Marginals {
        let k = self.num_states;
        let mut rows = Vec::with_capacity(self.len);
        let mut current = self.init.clone();
        let mut row = vec![0.0; k];
        rows.push(current.clone());
        for t in 1..self.len {
            let mut next = vec![0.0; k];
            for (i, &p) in current.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                self.transition_row_into(t, i, &mut row);
                for j in 0..k {
                    next[j] += p * row[j];
                }
            }
            rows.push(next.clone());
            current = next;
        }
        Marginals::from_rows(&rows).expect("non-empty chain")
    }

    /// Draws one path using `rng`.
    pub fn sample_path<R: Rng>(&self, rng: &mut R) -> StateSeq {
        let k = self.num_states;
        let mut row = vec![0.0; k];
        let mut states = Vec::with_capacity(self.len);
        let mut state = sample_categorical(&self.init, rng.random());
        states.push(state);
        for t in 1..self.len {
            self.transition_row_into(t, state, &mut row);
            state = sample_categorical(&row, rng.random());
            states.push(state);
        }
        StateSeq::new(states)
    }
}

/// Stay probabilities of a two-state posterior chain, for positions `2..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StayProbs {
    /// `a_t = P(y_t = 1 | y_{t-1} = 1, x)`.
    pub a: Vec<f64>,
    /// `b_t = P(y_t = 2 | y_{t-1} = 2, x)`.
    pub b: Vec<f64>,
}

pub fn stay_probabilities(chain: &PosteriorChain) -> Result<StayProbs> {
    if chain.num_states() != 2 {
        return Err(Error::NotTwoState(chain.num_states()));
    }
    let steps = chain.len().saturating_sub(1);
    let mut a = Vec::with_capacity(steps);
    let mut b = Vec::with_capacity(steps);
    let mut row = [0.0; 2];
    for t in 1..chain.len() {
        chain.transition_row_into(t, 0, &mut row);
        a.push(row[0]);
        chain.transition_row_into(t, 1, &mut row);
        b.push(row[1]);
    }
    Ok(StayProbs { a, b })
}

/// Draws `count` posterior paths. Path `r` uses the stream
/// [`seeding::substream`]`(seed, r)`, so the set does not depend on thread count.
pub fn sample_posterior_paths(
    chain: &PosteriorChain,
    count: usize,
    seed: u64,
) -> Result<Vec<StateSeq>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    Ok((0..count as u64)
        .into_par_iter()
        .map(|r| chain.sample_path(&mut seeding::substream(seed, r)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward_backward::forward_backward;
    use crate::model::ObsSeq;

    fn identity_start() -> HmmModel {
        HmmModel::new(
            vec![1.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![2.0, 6.0],
        )
        .unwrap()
    }

    fn symmetric(q: f64) -> HmmModel {
        HmmModel::new(
            vec![0.5, 0.5],
            vec![vec![q, 1.0 - q], vec![1.0 - q, q]],
            vec![4.0, 4.0],
        )
        .unwrap()
    }

    #[test]
    fn single_state_chain_is_trivial() {
        let m = HmmModel::new(vec![1.0], vec![vec![1.0]], vec![3.0]).unwrap();
        let x = ObsSeq::new(vec![1, 2, 3]).unwrap();
        let t = forward_backward(&m, &x).unwrap();
        let c = PosteriorChain::build(&m, &t);
        assert_eq!(c.init(), &[1.0]);
        for s in 1..3 {
            assert_eq!(c.transition(s), vec![1.0]);
        }
    }

    #[test]
    fn identity_chain_conditions_to_identity() {
        let m = identity_start();
        let x = ObsSeq::new(vec![0, 7, 3, 9]).unwrap();
        let t = forward_backward(&m, &x).unwrap();
        let c = PosteriorChain::build(&m, &t);
        assert_eq!(c.init(), &[1.0, 0.0]);
        for s in 1..4 {
            let tr = c.transition(s);
            assert!((tr[0] - 1.0).abs() < 1e-15 && tr[1] == 0.0);
            assert!(tr[2] == 0.0 && (tr[3] - 1.0).abs() < 1e-15);
        }
        assert!(c.unreachable_rows().is_empty());
        let stay = stay_probabilities(&c).unwrap();
        assert!(stay.a.iter().all(|&a| (a - 1.0).abs() < 1e-15));
    }

    #[test]
    fn zero_backward_mass_gives_marked_uniform_row() {
        // state 1 cannot emit 400 at any representable probability, so beta_1(1) = 0
        let m = HmmModel::new(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1e-300, 400.0],
        )
        .unwrap();
        let x = ObsSeq::new(vec![400, 400]).unwrap();
        let t = forward_backward(&m, &x).unwrap();
        let c = PosteriorChain::build(&m, &t);
        assert_eq!(c.unreachable_rows(), &[(1, 0)]);
        assert_eq!(&c.transition(1)[..2], &[0.5, 0.5]);
        assert_eq!(c.init()[0], 0.0);
        let marg = c.propagated_marginals();
        assert!((marg.get(1, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uninformative_posterior_equals_prior_chain() {
        let m = symmetric(0.8);
        let x = ObsSeq::new(vec![3, 1, 8, 4, 0]).unwrap();
        let t = forward_backward(&m, &x).unwrap();
        let c = PosteriorChain::build(&m, &t);
        assert!((c.init()[0] - 0.5).abs() < 1e-14);
        for s in 1..5 {
            let tr = c.transition(s);
            assert!((tr[0] - 0.8).abs() < 1e-14 && (tr[3] - 0.8).abs() < 1e-14);
        }
        let stay = stay_probabilities(&c).unwrap();
        assert!(stay.b.iter().all(|&b| (b - 0.8).abs() < 1e-14));
    }

    #[test]
    fn on_demand_storage_matches_dense() {
        let m = HmmModel::new(
            vec![1.0, 0.0],
            vec![vec![0.928, 0.072], vec![0.119, 0.881]],
            vec![15.4, 26.0],
        )
        .unwrap();
        let (_, x) = m.simulate(300, 5).unwrap();
        let t = forward_backward(&m, &x).unwrap();
        let dense = PosteriorChain::build(&m, &t);
        let lazy = PosteriorChain::build_with_limit(&m, &t, 10);
        assert!(dense.is_materialized() && !lazy.is_materialized());
        for s in 1..300 {
            assert_eq!(dense.transition(s), lazy.transition(s));
        }
        assert_eq!(
            sample_posterior_paths(&dense, 20, 9).unwrap(),
            sample_posterior_paths(&lazy, 20, 9).unwrap()
        );
    }

    #[test]
    fn stay_probabilities_reject_three_states() {
        let m = HmmModel::new(
            vec![1.0, 0.0, 0.0],
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let x = ObsSeq::new(vec![1, 2]).unwrap();
        let c = PosteriorChain::build(&m, &forward_backward(&m, &x).unwrap());
        assert!(matches!(stay_probabilities(&c), Err(Error::NotTwoState(3))));
    }

    #[test]
    fn sampling_is_deterministic_and_respects_identity() {
        let m = identity_start();
        let x = ObsSeq::new(vec![4; 30]).unwrap();
        let c = PosteriorChain::build(&m, &forward_backward(&m, &x).unwrap());
        let a = sample_posterior_paths(&c, 50, 1).unwrap();
        assert!(a.iter().all(|p| p.states().iter().all(|&s| s == 0)));
        assert_eq!(a, sample_posterior_paths(&c, 50, 1).unwrap());
        assert!(sample_posterior_paths(&c, 0, 1).is_err());
    }

    #[test]
    fn conditional_transition_rejects_first_position() {
        let m = symmetric(0.6);
        let x = ObsSeq::new(vec![1, 2]).unwrap();
        let t = forward_backward(&m, &x).unwrap();
        assert!(conditional_transition(&m, &t, 0).is_err());
        assert!(conditional_transition(&m, &t, 2).is_err());
        assert_eq!(conditional_transition(&m, &t, 1).unwrap().len(), 4);
    }
}
