//! Relative densities and embedding probabilities, exact and sampled.

use std::collections::HashMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    validate_complex, ColorId, ComplexEdge, Hypergraph, IndexSet, SimplicialComplex, TotalColor,
};
use crate::ratio::{self, Q};
use crate::rng;

/// Default cap on the number of maps enumerated by exact routines.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

const MC_BATCH: u64 = 8192;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DensityError {
    #[error("exact enumeration needs {needed} evaluations, budget is {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("complex does not validate against the host: {0}")]
    InvalidComplex(String),
    #[error("bad estimator configuration: {0}")]
    BadConfig(String),
}

/// A probability, or 1 flagged as undefined when the conditioning event is
/// empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityValue {
    #[serde(with = "ratio::serde_q")]
    pub value: Q,
    pub defined: bool,
}

impl DensityValue {
    pub fn ratio(num: u128, den: u128) -> Self {
        if den == 0 {
            DensityValue {
                value: Q::one(),
                defined: false,
            }
        } else {
            DensityValue {
                value: ratio::from_count(num, den),
                defined: true,
            }
        }
    }
}

/// Histogram of total colors per index set; answers density queries in
/// constant time.
#[derive(Clone, Debug)]
pub struct DensityTable {
    /// Per slot: frame -> (frame count, top color -> count).
    frames: Vec<HashMap<Vec<ColorId>, (u64, HashMap<ColorId, u64>)>>,
    index_sets: Vec<IndexSet>,
    /// Per slot: total color -> count.
    totals: Vec<HashMap<Vec<ColorId>, u64>>,
    edge_counts: Vec<u64>,
}

impl DensityTable {
    pub fn new(g: &Hypergraph) -> Self {
        let per_slot: Vec<_> = g
            .index_sets()
            .par_iter()
            .map(|&idx| {
                let mut frames: HashMap<Vec<ColorId>, (u64, HashMap<ColorId, u64>)> = HashMap::new();
                let mut totals: HashMap<Vec<ColorId>, u64> = HashMap::new();
                for e in g.edges(idx) {
                    let tc = g.total_color(&e);
                    let entry = frames.entry(tc.frame().to_vec()).or_default();
                    entry.0 += 1;
                    *entry.1.entry(tc.top()).or_default() += 1;
                    *totals.entry(tc.entries).or_default() += 1;
                }
                (frames, totals, g.edge_count(idx) as u64)
            })
            .collect();
        let mut frames = Vec::new();
        let mut totals = Vec::new();
        let mut edge_counts = Vec::new();
        for (f, t, n) in per_slot {
            frames.push(f);
            totals.push(t);
            edge_counts.push(n);
        }
        DensityTable {
            frames,
            index_sets: g.index_sets().to_vec(),
            totals,
            edge_counts,
        }
    }

    fn slot(&self, idx: IndexSet) -> usize {
        self.index_sets
            .binary_search(&idx)
            .expect("index set colored in host")
    }

    /// `d_G(c)`.
    pub fn density(&self, c: &TotalColor) -> DensityValue {
        let slot = self.slot(c.index);
        match self.frames[slot].get(c.frame()) {
            None => DensityValue::ratio(0, 0),
            Some((n, tops)) => {
                DensityValue::ratio(tops.get(&c.top()).copied().unwrap_or(0) as u128, *n as u128)
            }
        }
    }

    /// `P_e[G<e> = c]`.
    pub fn total_color_probability(&self, c: &TotalColor) -> Q {
        let slot = self.slot(c.index);
        let n = self.totals[slot].get(&c.entries).copied().unwrap_or(0);
        ratio::from_count(n as u128, self.edge_counts[slot] as u128)
    }

    /// Realized total colors of `I` with their edge counts, sorted.
    pub fn total_colors(&self, idx: IndexSet) -> Vec<(TotalColor, u64)> {
        let slot = self.slot(idx);
        let mut v: Vec<_> = self.totals[slot]
            .iter()
            .map(|(e, &n)| {
                (
                    TotalColor {
                        index: idx,
                        entries: e.clone(),
                    },
                    n,
                )
            })
            .collect();
        v.sort();
        v
    }

    /// Realized frames of `I` with their edge counts, sorted.
    pub fn frames(&self, idx: IndexSet) -> Vec<(Vec<ColorId>, u64)> {
        let slot = self.slot(idx);
        let mut v: Vec<_> = self.frames[slot]
            .iter()
            .map(|(f, (n, _))| (f.clone(), *n))
            .collect();
        v.sort();
        v
    }

    pub fn edge_count(&self, idx: IndexSet) -> u64 {
        self.edge_counts[self.slot(idx)]
    }
}

/// `d_G(c) = P[G(e) = c_I | G(de) = frame of c]` by enumeration of `Omega_I`.
pub fn relative_density(g: &Hypergraph, c: &TotalColor) -> DensityValue {
    let mut frame_hits = 0u128;
    let mut hits = 0u128;
    for e in g.edges(c.index) {
        let tc = g.total_color(&e);
        if tc.frame() == c.frame() {
            frame_hits += 1;
            if tc.top() == c.top() {
                hits += 1;
            }
        }
    }
    DensityValue::ratio(hits, frame_hits)
}

fn check_complex(g: &Hypergraph, s: &SimplicialComplex) -> Result<(), DensityError> {
    let rep = validate_complex(s, g);
    if rep.is_valid() {
        Ok(())
    } else {
        Err(DensityError::InvalidComplex(format!(
            "{} closure, {} injectivity, {} range violations{}",
            rep.closure_violations.len(),
            rep.injectivity_violations.len(),
            rep.range_violations.len(),
            rep.shape.first().map(|s| format!("; {s}")).unwrap_or_default()
        )))
    }
}

fn check_budget(space: u128, budget: u128) -> Result<(), DensityError> {
    if space > budget {
        Err(DensityError::Budget {
            needed: space,
            budget,
        })
    } else {
        Ok(())
    }
}

/// `P_{phi in Phi(h)}[G(phi(e)) = S(e) for all visible e]`, exactly.
pub fn embed_probability_exact(
    g: &Hypergraph,
    s: &SimplicialComplex,
    budget: u128,
) -> Result<Q, DensityError> {
    check_complex(g, s)?;
    let p = s.pattern(g);
    check_budget(p.space(), budget)?;
    Ok(ratio::from_count(p.count(g), p.space()))
}

/// `P[all of V(S) | the edges in condition]`. The condition must be a
/// subset of `V(S)`.
pub fn conditional_embed_probability(
    g: &Hypergraph,
    s: &SimplicialComplex,
    condition: &[ComplexEdge],
    budget: u128,
) -> Result<DensityValue, DensityError> {
    check_complex(g, s)?;
    let all = s.pattern(g);
    check_budget(all.space(), budget)?;
    let cond = s.pattern_for(g, condition);
    Ok(DensityValue::ratio(all.count(g), cond.count(g)))
}

/// `prod_{e in edges} d_G(S<e>)`.
pub fn density_product(table: &DensityTable, s: &SimplicialComplex, edges: &[ComplexEdge]) -> Q {
    edges.iter().fold(Q::one(), |acc, e| {
        acc * table
            .density(&s.total_color(e).expect("visible edge of a valid complex"))
            .value
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub samples: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            samples: 100_000,
            seed: 0,
            confidence: 0.99,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), DensityError> {
        if self.samples == 0 {
            return Err(DensityError::BadConfig("sample count must be positive".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(DensityError::BadConfig(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// Two-sided Hoeffding half-width for `n` samples.
pub fn hoeffding_half_width(n: u64, confidence: f64) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub hits: u64,
    pub samples: u64,
    pub half_width: f64,
    pub confidence: f64,
    pub seed: u64,
}

impl McEstimate {
    pub fn lower(&self) -> f64 {
        (self.estimate - self.half_width).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        (self.estimate + self.half_width).min(1.0)
    }

    pub fn covers(&self, x: f64) -> bool {
        (self.estimate - x).abs() <= self.half_width
    }
}

/// Monte Carlo estimate of the embedding probability. Batch `b` draws from
/// its own substream, so the result is independent of thread scheduling.
pub fn embed_probability_mc(
    g: &Hypergraph,
    s: &SimplicialComplex,
    cfg: &EstimatorConfig,
) -> Result<McEstimate, DensityError> {
    cfg.validate()?;
    check_complex(g, s)?;
    let p = s.pattern(g);
    let batches = cfg.samples.div_ceil(MC_BATCH);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|b| {
            let n = MC_BATCH.min(cfg.samples - b * MC_BATCH);
            let mut rng = rng::substream(cfg.seed, "embed_mc", b);
            p.sample_hits(g, n, &mut rng)
        })
        .sum();
    Ok(McEstimate {
        estimate: hits as f64 / cfg.samples as f64,
        hits,
        samples: cfg.samples,
        half_width: hoeffding_half_width(cfg.samples, cfg.confidence),
        confidence: cfg.confidence,
        seed: cfg.seed,
    })
}

/// Whether `d` lies in `[max(0, d0 - delta), min(1, d0 + delta)]`.
pub fn within_dot_pm(x: &Q, d: &Q, delta: &Q) -> bool {
    let lo = ratio::max(d - delta, Q::zero());
    let hi = ratio::min(d + delta, Q::one());
    &lo <= x && x <= &hi
}
