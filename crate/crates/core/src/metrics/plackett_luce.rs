//! Plackett-Luce worths from partial rankings, fitted by minorization-maximization.
//!
//! Each ranking of `m` items is read as `m - 1` successive choices: the item in
//! position `s` is chosen from the items in positions `s..m`. The smoothing term
//! adds, for every ordered pair `(i, j)`, a pseudo-ranking `[i, j]` of weight
//! `smoothing`, which keeps items that always win (or always lose) at a finite,
//! positive worth. The smoothed likelihood is scale invariant, so worths are
//! renormalized to sum 1 after every update.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("no rankings given")]
    EmptyData,
    #[error("item `{0}` never appears in any ranking")]
    ItemNeverRanked(String),
    #[error("ranking {0} has fewer than 2 items")]
    ShortRanking(usize),
    #[error("ranking {0} lists item `{1}` twice")]
    DuplicateItem(usize, String),
    #[error("ranking {0} names unknown item `{1}`")]
    UnknownItem(usize, String),
    #[error("smoothing must be finite and non-negative, got {0}")]
    BadSmoothing(f64),
}

/// Partial rankings over a set of items, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingData {
    items: Vec<String>,
    rankings: Vec<Vec<usize>>,
}

impl RankingData {
    pub fn new(items: Vec<String>, rankings: &[Vec<String>]) -> Result<Self, RankingError> {
        if rankings.is_empty() {
            return Err(RankingError::EmptyData);
        }
        let index: HashMap<&str, usize> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut seen = vec![false; items.len()];
        let mut out = Vec::with_capacity(rankings.len());
        for (r, ranking) in rankings.iter().enumerate() {
            if ranking.len() < 2 {
                return Err(RankingError::ShortRanking(r));
            }
            let mut in_ranking = BTreeSet::new();
            let mut ids = Vec::with_capacity(ranking.len());
            for name in ranking {
                let &i = index.get(name.as_str()).ok_or_else(|| RankingError::UnknownItem(r, name.clone()))?;
                if !in_ranking.insert(i) {
                    return Err(RankingError::DuplicateItem(r, name.clone()));
                }
                seen[i] = true;
                ids.push(i);
            }
            out.push(ids);
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(RankingError::ItemNeverRanked(items[i].clone()));
        }
        Ok(Self { items, rankings: out })
    }

    /// Item set is every id that appears, in ascending order.
    pub fn from_rankings(rankings: &[Vec<String>]) -> Result<Self, RankingError> {
        let items: BTreeSet<&String> = rankings.iter().flatten().collect();
        Self::new(items.into_iter().cloned().collect(), rankings)
    }

    /// One ranking per line, comma-separated ids, best first. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, RankingError> {
        let rankings: Vec<Vec<String>> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
            .collect();
        Self::from_rankings(&rankings)
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// Rankings as item indices.
    pub fn rankings(&self) -> &[Vec<usize>] {
        &self.rankings
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorthVector {
    items: Vec<String>,
    worths: Vec<f64>,
}

impl WorthVector {
    /// Normalizes `worths` to sum 1.
    pub fn new(items: Vec<String>, worths: Vec<f64>) -> Self {
        assert_eq!(items.len(), worths.len());
        let total: f64 = worths.iter().sum();
        Self { items, worths: worths.iter().map(|w| w / total).collect() }
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn worths(&self) -> &[f64] {
        &self.worths
    }

    pub fn get(&self, item: &str) -> Option<f64> {
        self.items.iter().position(|i| i == item).map(|p| self.worths[p])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlOptions {
    pub max_iter: usize,
    /// Stop once the largest relative worth change falls below this.
    pub tol: f64,
    pub smoothing: f64,
}

impl Default for PlOptions {
    fn default() -> Self {
        Self { max_iter: 10_000, tol: 1e-10, smoothing: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlFit {
    pub worths: WorthVector,
    pub iterations: usize,
    pub converged: bool,
    /// Smoothed log-likelihood at the start and after every iteration.
    pub log_likelihood: Vec<f64>,
}

/// Smoothed log-likelihood of `worths` (indexed like `data.items()`).
pub fn log_likelihood(data: &RankingData, worths: &[f64], smoothing: f64) -> f64 {
    let mut ll = 0.0;
    for ranking in &data.rankings {
        let mut rest: f64 = ranking.iter().map(|&i| worths[i]).sum();
        for &i in &ranking[..ranking.len() - 1] {
            ll += worths[i].ln() - rest.ln();
            rest -= worths[i];
        }
    }
    if smoothing > 0.0 {
        let n = worths.len();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    ll += smoothing * (worths[i].ln() - (worths[i] + worths[j]).ln());
                }
            }
        }
    }
    ll
}

pub fn plackett_luce_fit(data: &RankingData, opts: &PlOptions) -> Result<PlFit, RankingError> {
    if !(opts.smoothing >= 0.0 && opts.smoothing.is_finite()) {
        return Err(RankingError::BadSmoothing(opts.smoothing));
    }
    let n = data.items.len();
    let eps = opts.smoothing;

    // wins are fixed by the data
    let mut wins = vec![eps * (n as f64 - 1.0); n];
    for ranking in &data.rankings {
        for &i in &ranking[..ranking.len() - 1] {
            wins[i] += 1.0;
        }
    }

    let mut gamma = vec![1.0 / n as f64; n];
    let mut trace = vec![log_likelihood(data, &gamma, eps)];
    let mut converged = false;
    let mut iterations = 0;
    let mut denom = vec![0.0; n];
    while iterations < opts.max_iter {
        iterations += 1;
        denom.iter_mut().for_each(|d| *d = 0.0);
        for ranking in &data.rankings {
            // suffix sums: choice set of stage s is ranking[s..]
            let mut rest: f64 = ranking.iter().map(|&i| gamma[i]).sum();
            let mut acc = 0.0;
            for (s, &i) in ranking.iter().enumerate() {
                if s + 1 < ranking.len() {
                    acc += 1.0 / rest;
                }
                denom[i] += acc;
                rest -= gamma[i];
            }
        }
        if eps > 0.0 {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        denom[i] += 2.0 * eps / (gamma[i] + gamma[j]);
                    }
                }
            }
        }
        let mut next: Vec<f64> = (0..n).map(|i| wins[i] / denom[i]).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|g| *g /= total);
        let change = gamma.iter().zip(&next).map(|(old, new)| ((new - old) / old).abs()).fold(0.0, f64::max);
        gamma = next;
        trace.push(log_likelihood(data, &gamma, eps));
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(PlFit { worths: WorthVector::new(data.items.clone(), gamma), iterations, converged, log_likelihood: trace })
}

/// Items from highest to lowest worth; equal worths fall back to ascending id.
pub fn global_rank(w: &WorthVector) -> Vec<String> {
    let mut order: Vec<usize> = (0..w.items.len()).collect();
    order.sort_by(|&a, &b| w.worths[b].total_cmp(&w.worths[a]).then_with(|| w.items[a].cmp(&w.items[b])));
    order.into_iter().map(|i| w.items[i].clone()).collect()
}
