use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    build_error_function, exhaustive_family, family_digest, sampled_family, BuildMode, ErrorFunction, RegularityError,
};
use crate::density::{embed_probability_exact, DensityError, DensityTable, DEFAULT_BUDGET};
use crate::model::{Hypergraph, SimplicialComplex};
use crate::ratio::{self, Q};

/// How one complex sits inside its product interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SMargin {
    pub index: usize,
    #[serde(with = "ratio::serde_q")]
    pub embed: Q,
    #[serde(with = "ratio::serde_q")]
    pub lower: Q,
    #[serde(with = "ratio::serde_q")]
    pub upper: Q,
    /// `min(embed - lower, upper - embed)`; negative on failure.
    #[serde(with = "ratio::serde_q")]
    pub margin: Q,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityCertificate {
    pub mode: String,
    pub k: usize,
    pub h: usize,
    pub family_size: usize,
    pub family_exhaustive: bool,
    pub family_digest: String,
    pub seeds: Vec<u64>,
    pub margins: Vec<SMargin>,
    /// Indices into the family of failing complexes.
    pub violations: Vec<usize>,
    pub passes: bool,
    /// `(index set, |C_I| E[delta])` for every index set.
    pub per_index: Vec<(String, String)>,
    /// `max_I |C_I| E[delta(G<e>)]`.
    #[serde(with = "ratio::serde_q")]
    pub bound: Q,
    pub bound_f64: f64,
    pub delta: ErrorFunction,
}

/// Checks `delta` exactly on every member of `family` and records the
/// regularity bound it implies.
pub fn verify_error_function(
    g: &Hypergraph,
    delta: &ErrorFunction,
    h: usize,
    family: &[SimplicialComplex],
    budget: u128,
) -> Result<RegularityCertificate, RegularityError> {
    if let Some(s) = family.iter().find(|s| s.h() != h || s.r() != g.r()) {
        return Err(DensityError::InvalidComplex(format!(
            "family member has r = {}, h = {}; expected r = {}, h = {h}",
            s.r(),
            s.h(),
            g.r()
        ))
        .into());
    }
    let table = DensityTable::new(g);
    let margins: Vec<SMargin> = family
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let embed = embed_probability_exact(g, s, budget)?;
            let (lower, upper) = delta.product_interval(&table, s);
            let margin = ratio::min(&embed - &lower, &upper - &embed);
            Ok(SMargin {
                index,
                passes: margin >= Q::zero(),
                embed,
                lower,
                upper,
                margin,
            })
        })
        .collect::<Result<_, DensityError>>()?;
    let violations: Vec<usize> = margins.iter().filter(|m| !m.passes).map(|m| m.index).collect();
    let mut bound = Q::zero();
    let mut per_index = Vec::new();
    for idx in g.index_sets() {
        let v = delta.expectation(&table, *idx) * ratio::int(g.palette(*idx) as i64);
        per_index.push((idx.to_string(), ratio::fmt(&v)));
        bound = ratio::max(bound, v);
    }
    Ok(RegularityCertificate {
        mode: "verify".into(),
        k: g.k(),
        h,
        family_size: family.len(),
        family_exhaustive: false,
        family_digest: family_digest(family),
        seeds: Vec::new(),
        passes: violations.is_empty(),
        violations,
        margins,
        per_index,
        bound_f64: ratio::to_f64(&bound),
        bound,
        delta: delta.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegBoundConfig {
    /// Largest raw family size enumerated exhaustively.
    pub family_limit: u128,
    /// Family size when sampling.
    pub samples: usize,
    pub seed: u64,
    pub budget: u128,
}

impl Default for RegBoundConfig {
    fn default() -> Self {
        RegBoundConfig {
            family_limit: 1 << 16,
            samples: 256,
            seed: 0,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// An upper bound on the `(k, h)`-regularity of `g`: build the empirical
/// slack function on a family of complexes, verify it on the same family
/// and report `max_I |C_I| E[delta]`. The family is exhaustive when `h = 1`
/// and it fits in `family_limit`; otherwise it is sampled.
pub fn reg_upper_bound(g: &Hypergraph, h: usize, cfg: &RegBoundConfig) -> Result<RegularityCertificate, RegularityError> {
    let k = g.k();
    let exhaustive = if h == 1 || k == 1 {
        exhaustive_family(g, k, h, cfg.family_limit)
    } else {
        None
    };
    let family_exhaustive = exhaustive.is_some();
    let family = exhaustive.unwrap_or_else(|| sampled_family(g, k, h, cfg.samples, cfg.seed));
    let delta = build_error_function(
        g,
        &BuildMode::Empirical {
            family: &family,
            budget: cfg.budget,
        },
    )?;
    let mut cert = verify_error_function(g, &delta, h, &family, cfg.budget)?;
    cert.mode = "empirical".into();
    cert.family_exhaustive = family_exhaustive;
    if !family_exhaustive {
        cert.seeds.push(cfg.seed);
    }
    Ok(cert)
}
