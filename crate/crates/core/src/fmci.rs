//! Finite Markov chain imbedding of run and occupancy statistics.
//!
//! The posterior chain of a two-state model is summarized by its stay
//! probabilities `a_t` (state 1 to state 1) and `b_t` (state 2 to state 2).
//! Each statistic augments the hidden state with a counter; the augmented
//! chain moves by a sparse matrix `Lambda(a_t, b_t)` whose rows hold at most
//! two nonzero entries, and the law of the statistic is read off
//! `eta * prod_t Lambda(a_t, b_t)`. Mass beyond the truncation level `l` is
//! collected in a final absorbing state and reported as "at least l + 1".
//!
//! State 2 (0-based index 1) is the target state throughout. Relabel the model
//! with [`HmmModel::swap_two_states`](crate::HmmModel::swap_two_states) to
//! target state 1.
//!
//! Layouts (0-based indices, `c` a count, `m` a block):
//!
//! | statistic    | size                     | states                                                                 |
//! |--------------|--------------------------|------------------------------------------------------------------------|
//! | jumps, runs  | `2l + 3`                 | `2c` = (c, in 2), `2c + 1` = (c, in 1)                                  |
//! | positions    | `2l + 2`                 | `0` = (0, in 1), `2c - 1` = (c, in 2), `2c` = (c, in 1)                  |
//! | exact run k  | `(l + 1)(k + 2) + 1`     | block `m` of `k + 2`: overshoot, in 1, open run of length `1..=k`       |
//! | longest run  | `1 + l(l + 3)/2 + 1`     | `0` = (0, in 1); block `m` of `m + 1`: run of length m, in 1, run `1..m` |

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::StateSeq;
use crate::posterior_chain::PosteriorChain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    /// Number of 1 -> 2 transitions.
    Jumps,
    /// Number of maximal runs in state 2 (a run may start at position 1).
    Runs,
    /// Number of positions in state 2.
    Positions,
    /// Number of maximal state-2 runs of length exactly `k`. A run still
    /// open at position `n` counts if its length is `k`.
    ExactRun(usize),
    /// Length of the longest state-2 run.
    LongestRun,
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Jumps => f.write_str("jumps"),
            Statistic::Runs => f.write_str("runs"),
            Statistic::Positions => f.write_str("positions"),
            Statistic::ExactRun(k) => write!(f, "exact-run-{k}"),
            Statistic::LongestRun => f.write_str("longest-run"),
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    /// Accepts `jumps`, `runs`, `positions`, `longest-run` and
    /// `exact-run:K` (also `exact-run=K`, `exact-run-K` and `exact-run K`).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jumps" => Ok(Statistic::Jumps),
            "runs" => Ok(Statistic::Runs),
            "positions" => Ok(Statistic::Positions),
            "longest-run" => Ok(Statistic::LongestRun),
            _ => {
                let k = s
                    .strip_prefix("exact-run")
                    .and_then(|rest| rest.strip_prefix([':', '=', '-', ' ']))
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown statistic '{s}'")))?;
                let k: usize = k
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad run length in '{s}'")))?;
                if k == 0 {
                    return Err(Error::InvalidArgument(
                        "exact run length must be at least 1".into(),
                    ));
                }
                Ok(Statistic::ExactRun(k))
            }
        }
    }
}

/// Value of the statistic on a single path (target state index 1).
pub fn path_statistic(statistic: Statistic, path: &StateSeq) -> usize {
    let s = path.states();
    let in_target = |t: usize| s[t] == 1;
    match statistic {
        Statistic::Jumps => s.windows(2).filter(|w| w[0] == 0 && w[1] == 1).count(),
        Statistic::Positions => s.iter().filter(|&&v| v == 1).count(),
        Statistic::Runs => (0..s.len())
            .filter(|&t| in_target(t) && (t == 0 || !in_target(t - 1)))
            .count(),
        Statistic::ExactRun(k) => run_lengths(s).filter(|&len| len == k).count(),
        Statistic::LongestRun => run_lengths(s).max().unwrap_or(0),
    }
}

fn run_lengths(states: &[usize]) -> impl Iterator<Item = usize> + '_ {
    states
        .split(|&v| v != 1)
        .map(<[usize]>::len)
        .filter(|&len| len > 0)
}

/// Where an imbedded state's mass is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bucket {
    Value(usize),
    /// "at least l + 1".
    Overflow,
}

/// One row of `Lambda(a, b)`: two `(column, probability)` pairs. Rows with a
/// single destination carry probability 0 in the second slot.
pub type SparseRow = [(usize, f64); 2];

/// An imbedded state space for one statistic at truncation level `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImbeddingSpec {
    statistic: Statistic,
    truncation: usize,
    size: usize,
}

impl ImbeddingSpec {
    pub fn new(statistic: Statistic, truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::InvalidArgument(
                "truncation must be at least 1".into(),
            ));
        }
        let l = truncation;
        let size = match statistic {
            Statistic::Jumps | Statistic::Runs => 2 * l + 3,
            Statistic::Positions => 2 * l + 2,
            Statistic::ExactRun(0) => {
                return Err(Error::InvalidArgument(
                    "exact run length must be at least 1".into(),
                ))
            }
            Statistic::ExactRun(k) => (l + 1) * (k + 2) + 1,
            Statistic::LongestRun => longest_block_start(l + 1) + 1,
        };
        Ok(Self {
            statistic,
            truncation,
            size,
        })
    }

    /// Jump chain; `count_runs` switches the initial vector so that starting
    /// in state 2 already counts as one run.
    pub fn jump_chain(truncation: usize, count_runs: bool) -> Result<Self> {
        let stat = if count_runs {
            Statistic::Runs
        } else {
            Statistic::Jumps
        };
        Self::new(stat, truncation)
    }

    pub fn positions_chain(truncation: usize) -> Result<Self> {
        Self::new(Statistic::Positions, truncation)
    }

    pub fn exact_run_chain(run_length: usize, max_runs: usize) -> Result<Self> {
        Self::new(Statistic::ExactRun(run_length), max_runs)
    }

    pub fn longest_run_chain(truncation: usize) -> Result<Self> {
        Self::new(Statistic::LongestRun, truncation)
    }

    pub fn statistic(&self) -> Statistic {
        self.statistic
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Number of imbedded states `M`.
    pub fn size(&self) -> usize {
        self.size
    }

    fn overflow(&self) -> usize {
        self.size - 1
    }

    /// Initial vector built from `eta = (P(y_1 = 1 | x), P(y_1 = 2 | x))`.
    pub fn initial(&self, eta1: f64, eta2: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.size];
        match self.statistic {
            Statistic::Jumps => {
                v[0] = eta2;
                v[1] = eta1;
            }
            Statistic::Runs | Statistic::ExactRun(_) => {
                v[1] = eta1;
                v[2] = eta2;
            }
            Statistic::Positions | Statistic::LongestRun => {
                v[0] = eta1;
                v[1] = eta2;
            }
        }
        v
    }

    /// Row `index` of `Lambda(a, b)`.
    pub fn row(&self, index: usize, a: f64, b: f64) -> SparseRow {
        let over = self.overflow();
        if index == over {
            return [(over, 1.0), (over, 0.0)];
        }
        let l = self.truncation;
        match self.statistic {
            Statistic::Jumps | Statistic::Runs => {
                if index % 2 == 0 {
                    [(index, b), (index + 1, 1.0 - b)]
                } else {
                    [(index, a), (index + 1, 1.0 - a)]
                }
            }
            Statistic::Positions => {
                if index == 0 {
                    [(0, a), (1, 1.0 - a)]
                } else if index % 2 == 1 {
                    [(index + 1, 1.0 - b), (index + 2, b)]
                } else {
                    [(index, a), (index + 1, 1.0 - a)]
                }
            }
            Statistic::ExactRun(k) => {
                let width = k + 2;
                let block = index / width;
                let base = block * width;
                match index - base {
                    0 => [(base, b), (base + 1, 1.0 - b)],
                    1 => [(base + 1, a), (base + 2, 1.0 - a)],
                    o if o == k + 1 => {
                        let completed = if block == l { over } else { base + width + 1 };
                        [(base, b), (completed, 1.0 - b)]
                    }
                    _ => [(index + 1, b), (base + 1, 1.0 - b)],
                }
            }
            Statistic::LongestRun => {
                if index == 0 {
                    return [(0, a), (1, 1.0 - a)];
                }
                let (m, offset) = longest_block_of(index);
                self.longest_row(m, offset, a, b)
            }
        }
    }

    /// Row at `offset` within longest-run block `m`.
    fn longest_row(&self, m: usize, offset: usize, a: f64, b: f64) -> SparseRow {
        let start = longest_block_start(m);
        // o = 0: run of length m, o = 1: in state 1, o = 1 + r: run of length r < m
        let run_slot = |r: usize| if r == m { start } else { start + 1 + r };
        match offset {
            0 => {
                let next = if m == self.truncation {
                    self.overflow()
                } else {
                    longest_block_start(m + 1)
                };
                [(next, b), (start + 1, 1.0 - b)]
            }
            1 => [(start + 1, a), (run_slot(1), 1.0 - a)],
            o => [(run_slot(o), b), (start + 1, 1.0 - b)],
        }
    }

    /// Dense rows of `Lambda(a, b)`, for inspection.
    pub fn step_matrix(&self, a: f64, b: f64) -> Vec<SparseRow> {
        (0..self.size).map(|i| self.row(i, a, b)).collect()
    }

    pub fn bucket(&self, index: usize) -> Bucket {
        if index >= self.overflow() {
            return Bucket::Overflow;
        }
        let l = self.truncation;
        let value = match self.statistic {
            Statistic::Jumps | Statistic::Runs => index / 2,
            Statistic::Positions => index.div_ceil(2),
            Statistic::ExactRun(k) => {
                let width = k + 2;
                let block = index / width;
                // a run of exactly k still open at the end is complete
                if index % width == k + 1 {
                    block + 1
                } else {
                    block
                }
            }
            Statistic::LongestRun => {
                if index == 0 {
                    0
                } else {
                    longest_block_of(index).0
                }
            }
        };
        if value > l {
            Bucket::Overflow
        } else {
            Bucket::Value(value)
        }
    }

    /// `out = v * Lambda(a, b)`.
    pub fn apply(&self, v: &[f64], a: f64, b: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        self.apply_range(v, 0..v.len(), a, b, out);
    }

    /// Adds `v[range] * Lambda(a, b)` into `out`, returning the range of
    /// columns that received mass.
    fn apply_range(
        &self,
        v: &[f64],
        range: Range<usize>,
        a: f64,
        b: f64,
        out: &mut [f64],
    ) -> Range<usize> {
        let (mut lo, mut hi) = (usize::MAX, 0);
        let mut add = |p: f64, row: SparseRow| {
            for (col, q) in row {
                out[col] += p * q;
                lo = lo.min(col);
                hi = hi.max(col + 1);
            }
        };
        if self.statistic == Statistic::LongestRun {
            // walk blocks in order instead of locating each index
            let over = self.overflow();
            let mut block = (0, 0);
            for i in range {
                if i == 1 {
                    block = (1, 0);
                } else if i > 1 && block.0 == 0 {
                    block = longest_block_of(i);
                }
                let p = v[i];
                if p != 0.0 {
                    add(
                        p,
                        if i == 0 || i == over {
                            self.row(i, a, b)
                        } else {
                            self.longest_row(block.0, block.1, a, b)
                        },
                    );
                }
                if block.0 > 0 {
                    block.1 += 1;
                    if block.1 > block.0 {
                        block = (block.0 + 1, 0);
                    }
                }
            }
        } else {
            for i in range {
                if v[i] != 0.0 {
                    add(v[i], self.row(i, a, b));
                }
            }
        }
        if lo > hi {
            0..0
        } else {
            lo..hi
        }
    }
}

/// First index of longest-run block `m >= 1`.
fn longest_block_start(m: usize) -> usize {
    1 + (m - 1) * (m + 2) / 2
}

/// `(block, offset)` of a longest-run index `>= 1`.
fn longest_block_of(index: usize) -> (usize, usize) {
    // start(m) ~ m^2 / 2; correct the float estimate by at most a step
    let mut m = ((2.0 * index as f64).sqrt() as usize).max(1);
    while m > 1 && longest_block_start(m) > index {
        m -= 1;
    }
    while longest_block_start(m + 1) <= index {
        m += 1;
    }
    (m, index - longest_block_start(m))
}

/// `eta * prod_{t=2}^n Lambda(a_t, b_t)` for a two-state posterior chain.
pub fn propagate(spec: &ImbeddingSpec, chain: &PosteriorChain) -> Result<Vec<f64>> {
    if chain.num_states() != 2 {
        return Err(Error::NotTwoState(chain.num_states()));
    }
    let eta = chain.init();
    let mut v = spec.initial(eta[0], eta[1]);
    let mut next = vec![0.0; spec.size()];
    // only the columns between the first and last nonzero entry are visited
    let mut live = 0..v.len().min(3);
    let mut stale = 0..0;
    let mut row = [0.0; 2];
    for t in 1..chain.len() {
        chain.transition_row_into(t, 0, &mut row);
        let a = row[0];
        chain.transition_row_into(t, 1, &mut row);
        let b = row[1];
        next[stale].iter_mut().for_each(|x| *x = 0.0);
        let written = spec.apply_range(&v, live.clone(), a, b, &mut next);
        stale = live;
        live = written;
        std::mem::swap(&mut v, &mut next);
    }
    Ok(v)
}

/// Law of a statistic on `0..=l` plus the mass of "at least l + 1".
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub statistic: Statistic,
    /// `probs[v] = P(statistic = v)` for `v = 0..=l`.
    pub probs: Vec<f64>,
    pub overflow: f64,
}

impl Distribution {
    pub fn truncation(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn prob(&self, value: usize) -> f64 {
        self.probs.get(value).copied().unwrap_or(0.0)
    }

    /// `P(statistic > value)` including the overflow mass.
    pub fn tail_above(&self, value: usize) -> f64 {
        self.probs.iter().skip(value + 1).sum::<f64>() + self.overflow
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.overflow
    }

    /// Mean over the tracked values; a lower bound when overflow mass is present.
    pub fn truncated_mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(v, p)| v as f64 * p)
            .sum()
    }
}

pub fn aggregate(spec: &ImbeddingSpec, final_vector: &[f64]) -> Result<Distribution> {
    if final_vector.len() != spec.size() {
        return Err(Error::LengthMismatch {
            left: final_vector.len(),
            right: spec.size(),
        });
    }
    let mut probs = vec![0.0; spec.truncation() + 1];
    let mut overflow = 0.0;
    for (i, &p) in final_vector.iter().enumerate() {
        match spec.bucket(i) {
            Bucket::Value(v) => probs[v] += p,
            Bucket::Overflow => overflow += p,
        }
    }
    Ok(Distribution {
        statistic: spec.statistic(),
        probs,
        overflow,
    })
}

/// Propagates and aggregates in one call.
pub fn distribution(
    statistic: Statistic,
    truncation: usize,
    chain: &PosteriorChain,
) -> Result<Distribution> {
    let spec = ImbeddingSpec::new(statistic, truncation)?;
    aggregate(&spec, &propagate(&spec, chain)?)
}

/// Overflow mass above which expected counts are flagged as lower bounds.
pub const OVERFLOW_FLAG_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedRunCount {
    pub run_length: usize,
    pub expected: f64,
    /// Overflow mass exceeded [`OVERFLOW_FLAG_THRESHOLD`], so `expected` only bounds the mean from below.
    pub lower_bound: bool,
}

/// Expected number of state-2 runs of each exact length `1..=k_max`.
pub fn expected_exact_run_counts(
    chain: &PosteriorChain,
    k_max: usize,
    truncation: usize,
) -> Result<Vec<ExpectedRunCount>> {
    (1..=k_max)
        .map(|k| {
            let d = distribution(Statistic::ExactRun(k), truncation, chain)?;
            Ok(ExpectedRunCount {
                run_length: k,
                expected: d.truncated_mean(),
                lower_bound: d.overflow > OVERFLOW_FLAG_THRESHOLD,
            })
        })
        .collect()
}

/// Minimum number of sampled paths for [`auto_truncation`].
pub const MIN_TRUNCATION_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub ell: usize,
    /// Largest value seen in the samples, when samples were consulted.
    pub observed_max: Option<usize>,
}

/// Truncation level from sampled posterior paths: the largest observed value
/// plus a margin of `max(5, largest observed value)`. An explicit `user_override`
/// wins without looking at the samples.
pub fn auto_truncation(
    samples: &[StateSeq],
    statistic: Statistic,
    user_override: Option<usize>,
) -> Result<Truncation> {
    if let Some(ell) = user_override {
        if ell == 0 {
            return Err(Error::InvalidArgument(
                "truncation must be at least 1".into(),
            ));
        }
        return Ok(Truncation {
            ell,
            observed_max: None,
        });
    }
    if samples.len() < MIN_TRUNCATION_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "automatic truncation needs at least {MIN_TRUNCATION_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let max = samples
        .iter()
        .map(|p| path_statistic(statistic, p))
        .max()
        .unwrap_or(0);
    Ok(Truncation {
        ell: max + max.max(5),
        observed_max: Some(max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longest_block_lookup_matches_scan() {
        let mut m = 1;
        for index in 1..200_000 {
            while longest_block_start(m + 1) <= index {
                m += 1;
            }
            assert_eq!(longest_block_of(index), (m, index - longest_block_start(m)));
        }
    }

    fn all_specs(l: usize) -> Vec<ImbeddingSpec> {
        let mut specs = vec![
            ImbeddingSpec::jump_chain(l, false).unwrap(),
            ImbeddingSpec::jump_chain(l, true).unwrap(),
            ImbeddingSpec::positions_chain(l).unwrap(),
            ImbeddingSpec::longest_run_chain(l).unwrap(),
        ];
        for k in 1..=4 {
            specs.push(ImbeddingSpec::exact_run_chain(k, l).unwrap());
        }
        specs
    }

    #[test]
    fn sizes_follow_the_layouts() {
        assert_eq!(ImbeddingSpec::jump_chain(7, false).unwrap().size(), 17);
        assert_eq!(ImbeddingSpec::positions_chain(7).unwrap().size(), 16);
        assert_eq!(ImbeddingSpec::exact_run_chain(3, 4).unwrap().size(), 26);
        // blocks of size 2, 3, 4 after the single start state, then overflow
        assert_eq!(
            ImbeddingSpec::longest_run_chain(3).unwrap().size(),
            1 + 2 + 3 + 4 + 1
        );
        assert!(ImbeddingSpec::jump_chain(0, false).is_err());
        assert!(ImbeddingSpec::exact_run_chain(0, 3).is_err());
    }

    #[test]
    fn every_step_matrix_is_row_stochastic_on_a_grid() {
        for spec in all_specs(6) {
            for ia in 0..10 {
                for ib in 0..10 {
                    let (a, b) = (ia as f64 / 9.0, ib as f64 / 9.0);
                    for (i, row) in spec.step_matrix(a, b).iter().enumerate() {
                        let s = row[0].1 + row[1].1;
                        assert!((s - 1.0).abs() < 1e-12, "{:?} row {i}", spec.statistic());
                        assert!(row.iter().all(|&(c, p)| c < spec.size() && p >= 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn initial_vectors_sum_to_one() {
        for spec in all_specs(3) {
            let s: f64 = spec.initial(0.3, 0.7).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_aggregation_pairs_entries() {
        let spec = ImbeddingSpec::jump_chain(2, false).unwrap();
        let v = [0.1, 0.2, 0.05, 0.15, 0.3, 0.1, 0.1];
        let d = aggregate(&spec, &v).unwrap();
        assert!((d.probs[0] - 0.3).abs() < 1e-15);
        assert!((d.probs[1] - 0.2).abs() < 1e-15);
        assert!((d.probs[2] - 0.4).abs() < 1e-15);
        assert_eq!(d.overflow, 0.1);
    }

    #[test]
    fn positions_aggregation_reads_first_entry_then_pairs() {
        let spec = ImbeddingSpec::positions_chain(2).unwrap();
        let v = [0.4, 0.1, 0.2, 0.1, 0.1, 0.1];
        let d = aggregate(&spec, &v).unwrap();
        assert_eq!(d.probs[0], 0.4);
        assert!((d.probs[1] - 0.3).abs() < 1e-15);
        assert!((d.probs[2] - 0.2).abs() < 1e-15);
        assert_eq!(d.overflow, 0.1);
    }

    #[test]
    fn point_mass_at_first_state_is_value_zero() {
        for spec in all_specs(3) {
            let mut v = vec![0.0; spec.size()];
            v[0] = 1.0;
            let d = aggregate(&spec, &v).unwrap();
            assert_eq!(d.probs[0], 1.0, "{:?}", spec.statistic());
        }
    }

    #[test]
    fn apply_moves_mass_along_rows() {
        let spec = ImbeddingSpec::positions_chain(3).unwrap();
        let mut out = vec![0.0; spec.size()];
        spec.apply(&spec.initial(0.25, 0.75), 0.9, 0.6, &mut out);
        // (0,1): stays w.p. 0.9 or enters state 2 with count 1
        assert!((out[0] - 0.225).abs() < 1e-15);
        assert!((out[1] - 0.025).abs() < 1e-15);
        // (1,2): leaves to (1,1) or continues to (2,2)
        assert!((out[2] - 0.3).abs() < 1e-15);
        assert!((out[3] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn statistic_names_round_trip() {
        for s in ["jumps", "runs", "positions", "longest-run", "exact-run:3"] {
            let st: Statistic = s.parse().unwrap();
            let again: Statistic = st.to_string().parse().unwrap();
            assert_eq!(st, again);
        }
        assert!("exact-run:0".parse::<Statistic>().is_err());
        assert!("rungs".parse::<Statistic>().is_err());
    }

    #[test]
    fn path_statistics_by_hand() {
        // labels 1 2 2 1 2 1 1 2 2 2
        let p = StateSeq::from_labels(&[1, 2, 2, 1, 2, 1, 1, 2, 2, 2]).unwrap();
        assert_eq!(path_statistic(Statistic::Jumps, &p), 3);
        assert_eq!(path_statistic(Statistic::Runs, &p), 3);
        assert_eq!(path_statistic(Statistic::Positions, &p), 6);
        assert_eq!(path_statistic(Statistic::ExactRun(1), &p), 1);
        assert_eq!(path_statistic(Statistic::ExactRun(2), &p), 1);
        assert_eq!(path_statistic(Statistic::ExactRun(3), &p), 1);
        assert_eq!(path_statistic(Statistic::LongestRun, &p), 3);
        let q = StateSeq::from_labels(&[2, 2, 1]).unwrap();
        assert_eq!(path_statistic(Statistic::Jumps, &q), 0);
        assert_eq!(path_statistic(Statistic::Runs, &q), 1);
    }

    #[test]
    fn truncation_margin_and_override() {
        let zeros = vec![StateSeq::new(vec![0; 10]); 100];
        let t = auto_truncation(&zeros, Statistic::Jumps, None).unwrap();
        assert_eq!(t.ell, 5);
        assert_eq!(t.observed_max, Some(0));
        let t = auto_truncation(&zeros, Statistic::Jumps, Some(3)).unwrap();
        assert_eq!(
            t,
            Truncation {
                ell: 3,
                observed_max: None
            }
        );
        assert!(auto_truncation(&zeros[..10], Statistic::Jumps, None).is_err());

        let mut busy = zeros.clone();
        busy[3] = StateSeq::from_labels(&[1, 2, 1, 2, 1, 2, 1, 2, 1, 2]).unwrap();
        assert_eq!(
            auto_truncation(&busy, Statistic::Jumps, None).unwrap().ell,
            10
        );
    }
}
