//! Brute-force reference computations over all `K^n` state paths.
//!
//! Nothing here calls the library's inference code; models are read through
//! their plain parameter accessors only.

#![allow(dead_code)]

use posterior_hmm::{HmmModel, ObsSeq};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ln_poisson(lambda: f64, x: u64) -> f64 {
    let ln_fact: f64 = (2..=x).map(|i| (i as f64).ln()).sum();
    x as f64 * lambda.ln() - lambda - ln_fact
}

/// Every path of length `n` over `k` states, in lexicographic order.
pub fn all_paths(k: usize, n: usize) -> Vec<Vec<usize>> {
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut p = vec![0; n];
            for slot in p.iter_mut().rev() {
                *slot = code % k;
                code /= k;
            }
            p
        })
        .collect()
}

/// Direct product of the model factors; `-inf` for impossible paths.
pub fn ln_joint(model: &HmmModel, path: &[usize], x: &[u64]) -> f64 {
    let mut p = model.pi()[path[0]].ln() + ln_poisson(model.lambda()[path[0]], x[0]);
    for t in 1..path.len() {
        p += model.gamma(path[t - 1], path[t]).ln() + ln_poisson(model.lambda()[path[t]], x[t]);
    }
    p
}

pub struct Enumeration {
    pub k: usize,
    pub paths: Vec<Vec<usize>>,
    /// `P(path | x)`.
    pub posterior: Vec<f64>,
    pub ln_joint: Vec<f64>,
    pub loglik: f64,
}

impl Enumeration {
    pub fn new(model: &HmmModel, x: &[u64]) -> Self {
        let k = model.num_states();
        let paths = all_paths(k, x.len());
        let ln_joint: Vec<f64> = paths.iter().map(|p| ln_joint(model, p, x)).collect();
        let top = ln_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = ln_joint.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        Self {
            k,
            posterior: weights.iter().map(|w| w / total).collect(),
            loglik: top + total.ln(),
            ln_joint,
            paths,
        }
    }

    pub fn n(&self) -> usize {
        self.paths[0].len()
    }

    /// `P(y_t = j | x)`.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.k]; self.n()];
        for (p, w) in self.paths.iter().zip(&self.posterior) {
            for (t, &s) in p.iter().enumerate() {
                m[t][s] += w;
            }
        }
        m
    }

    /// `P(y_t = j | y_{t-1} = i, x)` for destination `t >= 1`; `None` when
    /// `P(y_{t-1} = i | x) = 0`.
    pub fn conditional(&self, t: usize, i: usize, j: usize) -> Option<f64> {
        let mut from = 0.0;
        let mut both = 0.0;
        for (p, w) in self.paths.iter().zip(&self.posterior) {
            if p[t - 1] == i {
                from += w;
                if p[t] == j {
                    both += w;
                }
            }
        }
        (from > 0.0).then(|| both / from)
    }

    /// Law of `stat(path)` under the posterior.
    pub fn law(&self, stat: impl Fn(&[usize]) -> usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n() + 1];
        for (p, w) in self.paths.iter().zip(&self.posterior) {
            out[stat(p)] += w;
        }
        out
    }

    /// `h(u)` at weight `alpha`, zero-weight terms dropped.
    pub fn hybrid_score(&self, index: usize, alpha: f64, marginals: &[Vec<f64>]) -> f64 {
        let mut s = 0.0;
        if alpha != 1.0 {
            let pointwise: f64 = self.paths[index]
                .iter()
                .enumerate()
                .map(|(t, &u)| marginals[t][u].ln())
                .sum();
            s += (1.0 - alpha) * pointwise;
        }
        if alpha != 0.0 {
            s += alpha * (self.ln_joint[index] - self.loglik);
        }
        s
    }

    pub fn max_hybrid_score(&self, alpha: f64) -> f64 {
        let m = self.marginals();
        (0..self.paths.len())
            .map(|i| self.hybrid_score(i, alpha, &m))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

// Statistics of the target state (index 1), written out longhand.

pub fn count_jumps(p: &[usize]) -> usize {
    let mut c = 0;
    for t in 1..p.len() {
        if p[t - 1] == 0 && p[t] == 1 {
            c += 1;
        }
    }
    c
}

pub fn count_positions(p: &[usize]) -> usize {
    p.iter().filter(|&&s| s == 1).count()
}

fn runs(p: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut len = 0;
    for &s in p {
        if s == 1 {
            len += 1;
        } else if len > 0 {
            out.push(len);
            len = 0;
        }
    }
    if len > 0 {
        out.push(len);
    }
    out
}

pub fn count_runs(p: &[usize]) -> usize {
    runs(p).len()
}

pub fn count_exact_runs(p: &[usize], k: usize) -> usize {
    runs(p).into_iter().filter(|&l| l == k).count()
}

pub fn longest_run(p: &[usize]) -> usize {
    runs(p).into_iter().max().unwrap_or(0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_simplex(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| floor + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

/// Random model with strictly positive parameters and well separated rates.
pub fn random_model(rng: &mut ChaCha8Rng, k: usize) -> HmmModel {
    let pi = random_simplex(rng, k, 0.05);
    let gamma = (0..k).map(|_| random_simplex(rng, k, 0.05)).collect();
    let lambda = (0..k)
        .map(|j| 1.0 + 4.0 * j as f64 + 3.0 * rng.random::<f64>())
        .collect();
    HmmModel::new(pi, gamma, lambda).expect("valid random model")
}

/// Random observations spread over the range of the model's rates.
pub fn random_obs(rng: &mut ChaCha8Rng, n: usize, max: u64) -> ObsSeq {
    ObsSeq::new((0..n).map(|_| rng.random_range(0..=max)).collect()).unwrap()
}

/// Random instance: model, observations simulated from it.
pub fn random_instance(seed: u64, k: usize, n: usize) -> (HmmModel, ObsSeq) {
    let mut r = rng(seed);
    let model = random_model(&mut r, k);
    let (_, x) = model.simulate(n, seed ^ 0x5eed).unwrap();
    (model, x)
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (get(a, i) - get(b, i)).abs()).sum::<f64>()
}

pub fn earthquake_model() -> HmmModel {
    HmmModel::new(
        vec![1.0, 0.0],
        vec![vec![0.928, 0.072], vec![0.119, 0.881]],
        vec![15.4, 26.0],
    )
    .unwrap()
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}
