//! Exact checks of the three inequalities behind the regularity proof, on
//! instances small enough to enumerate.

mod corpus;

pub use corpus::{
    planted_complex, random_functional, run_corpus, write_report_csv, CorpusInstance, LemmaCorpus, LemmaRow,
};

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{DensityError, DensityTable};
use crate::model::{for_each_map, ColorId, ComplexEdge, Edge, Hypergraph, IndexSet, PartitionwiseMap, SimplicialComplex};
use crate::ratio::{self, Q};
use crate::regularity::{exhaustive_family, verify_error_function, ErrorFunction, RegularityError};
use crate::regularize::{refines, s_regularize, RegularizeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LemmaError {
    #[error("fine relation does not refine the coarse one")]
    NotARefinement,
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("precondition refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Regularity(#[from] RegularityError),
    #[error(transparent)]
    Regularize(#[from] RegularizeError),
}

/// Two equivalence relations on `0..n` given by class labels, and a random
/// variable on the same ground set (uniform measure).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedEquivalence {
    pub fine: Vec<u32>,
    pub coarse: Vec<u32>,
    #[serde(with = "ratio::serde_vec_q")]
    pub x: Vec<Q>,
}

fn conditional_square_mean(labels: &[u32], x: &[Q]) -> Q {
    let mut classes: HashMap<u32, (u64, Q)> = HashMap::new();
    for (l, v) in labels.iter().zip(x) {
        let e = classes.entry(*l).or_insert((0, Q::zero()));
        e.0 += 1;
        e.1 += v;
    }
    // E[(E[X | class])^2] = sum_c (n_c / N) (s_c / n_c)^2 = sum_c s_c^2 / (n_c N)
    let n = ratio::int(labels.len() as u64);
    classes
        .into_values()
        .fold(Q::zero(), |acc, (c, s)| acc + &s * &s / (ratio::int(c) * &n))
}

/// `E[(E[X | fine])^2] - E[(E[X | coarse])^2]`, exactly.
pub fn check_nested_cauchy_schwarz(inst: &NestedEquivalence) -> Result<Q, LemmaError> {
    let n = inst.x.len();
    if n == 0 || inst.fine.len() != n || inst.coarse.len() != n {
        return Err(LemmaError::Invalid("relations and variable need one entry per point".into()));
    }
    if !refines(&inst.fine, &inst.coarse) {
        return Err(LemmaError::NotARefinement);
    }
    Ok(conditional_square_mean(&inst.fine, &inst.x) - conditional_square_mean(&inst.coarse, &inst.x))
}

/// Per full-size visible edge `e` of a complex, a function on `C_I` with
/// values in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TestFunctional {
    values: BTreeMap<ComplexEdge, Vec<Q>>,
}

impl TestFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, e: ComplexEdge, values: Vec<Q>) -> Result<(), LemmaError> {
        if values.iter().any(|v| v.abs() > Q::one()) {
            return Err(LemmaError::Invalid("test functional values must lie in [-1, 1]".into()));
        }
        self.values.insert(e, values);
        Ok(())
    }

    /// `F_e(c)`; zero where unset.
    pub fn eval(&self, e: &ComplexEdge, c: ColorId) -> Q {
        self.values
            .get(e)
            .and_then(|v| v.get(c as usize))
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn zero_on(s: &SimplicialComplex, g: &Hypergraph) -> Self {
        let mut f = TestFunctional::new();
        for e in s.visible_of_size(g.k()) {
            let n = g.palette(e.index);
            f.values.insert(e, vec![Q::zero(); n]);
        }
        f
    }
}

/// The host edge `phi(e)` for an assignment in the `i * h + p` layout.
fn image(e: &ComplexEdge, h: usize, assignment: &[usize]) -> Edge {
    Edge {
        index: e.index,
        vertices: e.vars(h).into_iter().map(|v| assignment[v]).collect(),
    }
}

fn split_visible(s: &SimplicialComplex, k: usize) -> (Vec<ComplexEdge>, Vec<ComplexEdge>) {
    s.all_visible().into_iter().partition(|e| e.index.len() == k)
}

/// Both sides of the counting-error inequality for one complex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountingReport {
    #[serde(with = "ratio::serde_q")]
    pub lhs: Q,
    #[serde(with = "ratio::serde_q")]
    pub rhs: Q,
    pub holds: bool,
    /// Set when the lower-level event is empty; both sides are then 0.
    pub skipped: bool,
    pub top_edges: usize,
}

/// Largest number of full-size visible edges accepted (the right side
/// ranges over all their nonempty subsets).
const MAX_TOP_EDGES: usize = 16;

pub fn check_counting_error_bound(g: &Hypergraph, s: &SimplicialComplex, budget: u128) -> Result<CountingReport, LemmaError> {
    let k = g.k();
    let (top, lower) = split_visible(s, k);
    if top.len() > MAX_TOP_EDGES {
        return Err(LemmaError::Refused(format!("{} full-size edges exceed the limit {MAX_TOP_EDGES}", top.len())));
    }
    let pattern = s.pattern_for(g, &lower);
    if pattern.space() > budget {
        return Err(DensityError::Budget {
            needed: pattern.space(),
            budget,
        }
        .into());
    }
    let table = DensityTable::new(g);
    let d: Vec<Q> = top
        .iter()
        .map(|e| table.density(&s.total_color(e).unwrap()).value)
        .collect();
    let colors: Vec<ColorId> = top.iter().map(|e| s.host_color(e).unwrap()).collect();
    // Histogram of which top edges land on their color.
    let mut hist: HashMap<u32, u128> = HashMap::new();
    let mut total = 0u128;
    pattern.visit(g, |a| {
        let mut mask = 0u32;
        for (i, e) in top.iter().enumerate() {
            if g.color(&image(e, s.h(), a)) == colors[i] {
                mask |= 1 << i;
            }
        }
        *hist.entry(mask).or_default() += 1;
        total += 1;
    });
    let zero = CountingReport {
        lhs: Q::zero(),
        rhs: Q::zero(),
        holds: true,
        skipped: total == 0,
        top_edges: top.len(),
    };
    if total == 0 || top.is_empty() {
        return Ok(zero);
    }
    let full = (1u32 << top.len()) - 1;
    let total_q = ratio::from_count(total, 1);
    let cond = ratio::from_count(hist.get(&full).copied().unwrap_or(0), total);
    let prod = d.iter().fold(Q::one(), |acc, x| acc * x);
    let lhs = (cond - prod).abs();
    let mut worst = Q::zero();
    for dmask in 1..=full {
        let mut sum = Q::zero();
        for (&mask, &count) in &hist {
            let mut term = ratio::from_count(count, 1);
            for (i, di) in d.iter().enumerate() {
                if dmask & (1 << i) != 0 {
                    let ind = if mask & (1 << i) != 0 { Q::one() } else { Q::zero() };
                    term *= ind - di;
                }
            }
            sum += term;
        }
        worst = ratio::max(worst, (sum / &total_q).abs());
    }
    let rhs = ratio::int(top.len() as u64) * worst;
    Ok(CountingReport {
        holds: lhs <= rhs,
        lhs,
        rhs,
        skipped: false,
        top_edges: top.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanSquareReport {
    #[serde(with = "ratio::serde_q")]
    pub lhs: Q,
    #[serde(with = "ratio::serde_q")]
    pub rhs: Q,
    pub holds: bool,
    /// Whether the smallness guard of the conditional form holds.
    pub guard: bool,
    #[serde(with = "ratio::serde_opt_q")]
    pub lhs_conditional: Option<Q>,
    #[serde(with = "ratio::serde_opt_q")]
    pub rhs_conditional: Option<Q>,
    pub holds_conditional: Option<bool>,
    /// Set when a conditioning event of the conditional form is empty.
    pub conditional_skipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanSquareConfig {
    pub budget: u128,
    /// Raw size limit of the exhaustive family used to verify `delta`.
    pub family_limit: u128,
}

impl Default for MeanSquareConfig {
    fn default() -> Self {
        MeanSquareConfig {
            budget: 1 << 24,
            family_limit: 1 << 16,
        }
    }
}

/// Per refined class of index-`idx` edges: `(original frame, count, sum of x)`.
fn refined_classes(
    g: &Hypergraph,
    idx: IndexSet,
    phi: &PartitionwiseMap,
    x: &impl Fn(&Edge) -> Q,
) -> Result<Vec<(Vec<ColorId>, u64, Q)>, LemmaError> {
    let refined = if g.k() >= 2 {
        Some(s_regularize(g, g.k() - 1, phi)?)
    } else {
        None
    };
    let mut classes: HashMap<Vec<ColorId>, (Vec<ColorId>, u64, Q)> = HashMap::new();
    for e in g.edges(idx) {
        let key = match &refined {
            Some(r) => r.total_color(&e).frame().to_vec(),
            None => Vec::new(),
        };
        let entry = classes
            .entry(key)
            .or_insert_with(|| (g.total_color(&e).frame().to_vec(), 0, Q::zero()));
        entry.1 += 1;
        entry.2 += x(&e);
    }
    Ok(classes.into_values().collect())
}

/// The mean-square-bounds-correlation inequality and, when its guard
/// holds, its conditional form. `delta` must pass exact verification as a
/// `(k-1, 2h)` error function; otherwise the check refuses.
pub fn check_mean_square_bound(
    g: &Hypergraph,
    s: &SimplicialComplex,
    f: &TestFunctional,
    m: usize,
    delta: &ErrorFunction,
    e0: &ComplexEdge,
    cfg: &MeanSquareConfig,
) -> Result<MeanSquareReport, LemmaError> {
    let k = g.k();
    let h = s.h();
    if m == 0 {
        return Err(LemmaError::Invalid("m must be positive".into()));
    }
    if e0.index.len() != k || s.host_color(e0).is_none() {
        return Err(LemmaError::Invalid("e0 must be a visible full-size edge".into()));
    }
    let family = exhaustive_family(g, k - 1, 2 * h, cfg.family_limit)
        .ok_or_else(|| LemmaError::Refused("exhaustive (k-1, 2h) family too large to verify delta".into()))?;
    let cert = verify_error_function(g, delta, 2 * h, &family, cfg.budget)?;
    if !cert.passes {
        return Err(LemmaError::Refused(format!(
            "delta is not a (k-1, 2h) error function: {} complexes fail",
            cert.violations.len()
        )));
    }

    let (top, lower) = split_visible(s, k);
    let table = DensityTable::new(g);
    let lower_pattern = s.pattern_for(g, &lower);
    if lower_pattern.space() > cfg.budget {
        return Err(DensityError::Budget {
            needed: lower_pattern.space(),
            budget: cfg.budget,
        }
        .into());
    }

    // Left sides: sum over phi in Phi(h) of prod F_e(phi(e)) on the event.
    let mut sum_f = Q::zero();
    let mut hits = 0u128;
    lower_pattern.visit(g, |a| {
        let mut p = Q::one();
        for e in &top {
            p *= f.eval(e, g.color(&image(e, h, a)));
            if p.is_zero() {
                break;
            }
        }
        sum_f += p;
        hits += 1;
    });
    let space = ratio::from_count(lower_pattern.space(), 1);
    let lhs = {
        let v = &sum_f / &space;
        &v * &v
    };

    // Density factors at the upper end of d +- delta, clipped to 1.
    let within_e0 = |e: &ComplexEdge| e.index.is_subset_of(e0.index) && *e == e0.restrict(e.index);
    let mut all = Q::one();
    let mut outside = Q::one();
    let mut outside_minus = Q::one();
    let mut guard = true;
    for e in &lower {
        let c = s.total_color(e).unwrap();
        let d = table.density(&c).value;
        let dl = delta.get(&c);
        let up = ratio::min(Q::one(), &d + dl);
        if &d / ratio::int(2) - dl <= Q::zero() {
            guard = false;
        }
        all *= &up;
        if !within_e0(e) {
            outside *= &up;
            outside_minus *= &d - dl;
        }
    }
    let inv_m = ratio::q(1, m as i64);
    if inv_m > outside_minus {
        guard = false;
    }

    // Right sides: average over varphi in Phi(m h) of the refined second moments.
    let target = s.total_color(e0).unwrap();
    let target_frame = target.frame().to_vec();
    let f0 = |e: &Edge| f.eval(e0, g.color(e));
    let with_frame = |e: &Edge| {
        if g.total_color(e).frame() == target_frame.as_slice() {
            f0(e)
        } else {
            Q::zero()
        }
    };
    let n_edges = ratio::int(g.edge_count(e0.index) as u64);
    let mut moment = Q::zero();
    let mut moment_cond = Q::zero();
    let mut cond_null = false;
    let mut maps = 0u128;
    let mut err = None;
    for_each_map(g.parts(), m * h, |phi| {
        if err.is_some() {
            return;
        }
        maps += 1;
        match refined_classes(g, e0.index, phi, &with_frame) {
            Ok(classes) => {
                for (_, n, sum) in classes {
                    moment += &sum * &sum / (ratio::int(n) * &n_edges);
                }
            }
            Err(e) => err = Some(e),
        }
        if !guard {
            return;
        }
        match refined_classes(g, e0.index, phi, &f0) {
            Ok(classes) => {
                let mut num = Q::zero();
                let mut den = 0u64;
                for (frame, n, sum) in classes {
                    if frame == target_frame {
                        num += &sum * &sum / ratio::int(n);
                        den += n;
                    }
                }
                if den == 0 {
                    cond_null = true;
                } else {
                    moment_cond += num / ratio::int(den);
                }
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let maps_q = ratio::from_count(maps, 1);
    let rhs = &moment / &maps_q * &all * (&outside + &inv_m);

    let (lhs_c, rhs_c, holds_c, skipped) = if !guard {
        (None, None, None, false)
    } else if hits == 0 || cond_null {
        (None, None, None, true)
    } else {
        let v = &sum_f / ratio::from_count(hits, 1);
        let l = &v * &v;
        let factor = ratio::int(2) * ratio::int(3u64.pow(2 * lower.len() as u32));
        let r = factor * &moment_cond / &maps_q;
        let ok = l <= r;
        (Some(l), Some(r), Some(ok), false)
    };
    Ok(MeanSquareReport {
        holds: lhs <= rhs,
        lhs,
        rhs,
        guard,
        lhs_conditional: lhs_c,
        rhs_conditional: rhs_c,
        holds_conditional: holds_c,
        conditional_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random_hypergraph;
    use crate::ratio::q;

    fn nested(fine: &[u32], coarse: &[u32], x: &[i64]) -> NestedEquivalence {
        NestedEquivalence {
            fine: fine.to_vec(),
            coarse: coarse.to_vec(),
            x: x.iter().map(|&v| ratio::int(v)).collect(),
        }
    }

    #[test]
    fn cauchy_schwarz_hand_cases() {
        let pairs = [0, 0, 1, 1];
        let one = [0, 0, 0, 0];
        assert_eq!(check_nested_cauchy_schwarz(&nested(&pairs, &one, &[0, 1, 0, 1])).unwrap(), Q::zero());
        assert_eq!(check_nested_cauchy_schwarz(&nested(&pairs, &one, &[0, 0, 1, 1])).unwrap(), q(1, 4));
        assert_eq!(check_nested_cauchy_schwarz(&nested(&pairs, &pairs, &[3, 1, 4, 1])).unwrap(), Q::zero());
        assert_eq!(check_nested_cauchy_schwarz(&nested(&pairs, &one, &[5, 5, 5, 5])).unwrap(), Q::zero());
    }

    #[test]
    fn cauchy_schwarz_rejects_non_refinement() {
        let r = check_nested_cauchy_schwarz(&nested(&[0, 0, 1, 1], &[0, 1, 1, 1], &[1, 2, 3, 4]));
        assert_eq!(r, Err(LemmaError::NotARefinement));
    }

    #[test]
    fn counting_trivial_cases() {
        let g = random_hypergraph(2, 2, &[2, 2], &[2, 2], 1).unwrap();
        let empty = SimplicialComplex::invisible(2, 2, 1);
        let rep = check_counting_error_bound(&g, &empty, 1 << 20).unwrap();
        assert!(rep.lhs.is_zero() && rep.rhs.is_zero());
        // One top edge: conditional probability is the density itself.
        let s = planted_complex(&g, 1, 0.0, 3);
        let rep = check_counting_error_bound(&g, &s, 1 << 20).unwrap();
        assert_eq!(rep.top_edges, 1);
        assert!(rep.lhs.is_zero() && rep.holds);
    }

    #[test]
    fn counting_holds_on_random_instances() {
        for seed in 0..20 {
            let g = random_hypergraph(2, 2, &[2, 2], &[2, 2], seed).unwrap();
            let s = planted_complex(&g, 2, 0.25, seed);
            let rep = check_counting_error_bound(&g, &s, 1 << 20).unwrap();
            assert!(rep.holds, "seed {seed}: {rep:?}");
        }
    }

    #[test]
    fn mean_square_zero_functional() {
        let g = random_hypergraph(2, 2, &[2, 2], &[2, 2], 4).unwrap();
        let s = planted_complex(&g, 1, 0.0, 4);
        let e0 = s.visible_of_size(2)[0].clone();
        let f = TestFunctional::zero_on(&s, &g);
        let rep = check_mean_square_bound(&g, &s, &f, 1, &ErrorFunction::zero(), &e0, &Default::default()).unwrap();
        assert!(rep.lhs.is_zero() && rep.holds);
    }

    #[test]
    fn mean_square_monochrome_reduces_to_m_term() {
        // All densities 1: RHS = E[F(e)^2] (1 + 1/m) and LHS = (prod F)^2.
        let g = Hypergraph::constant(2, 2, vec![2, 2], &[1, 1]).unwrap();
        let s = planted_complex(&g, 1, 0.0, 0);
        let e0 = s.visible_of_size(2)[0].clone();
        let mut f = TestFunctional::new();
        f.set(e0.clone(), vec![q(-2, 3)]).unwrap();
        let rep = check_mean_square_bound(&g, &s, &f, 2, &ErrorFunction::zero(), &e0, &Default::default()).unwrap();
        assert_eq!(rep.lhs, q(4, 9));
        assert_eq!(rep.rhs, q(4, 9) * q(3, 2));
        assert!(rep.holds && rep.guard);
        assert_eq!(rep.holds_conditional, Some(true));
    }

    #[test]
    fn mean_square_refuses_unverifiable_delta() {
        let g = random_hypergraph(2, 2, &[2, 2], &[2, 2], 8).unwrap();
        let s = planted_complex(&g, 1, 0.0, 8);
        let e0 = s.visible_of_size(2)[0].clone();
        let f = TestFunctional::zero_on(&s, &g);
        let cfg = MeanSquareConfig {
            budget: 1 << 24,
            family_limit: 4,
        };
        let r = check_mean_square_bound(&g, &s, &f, 1, &ErrorFunction::zero(), &e0, &cfg);
        assert!(matches!(r, Err(LemmaError::Refused(_))), "{r:?}");
    }
}
