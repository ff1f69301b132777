//! The removal procedure: recolor edges with bad total colors to a spare
//! color and decide between "few changes kill every copy of F" and "many
//! copies exist".

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{DensityError, DensityTable, DEFAULT_BUDGET};
use crate::model::{ColorId, ComplexEdge, Edge, Hypergraph, IndexSet, ModelError, Pattern, SimplicialComplex, TotalColor};
use crate::ratio::{self, Q};
use crate::regularity::{
    bad_colors, build_error_function, verify_error_function, BadRule, BuildMode, RegularityError,
};
use crate::regularize::{regularize, sample_map_vector, RegularizeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RemovalError {
    #[error("no spare color on index set {0}: the pattern uses every host color")]
    NoSpare(IndexSet),
    #[error("pattern does not fit the host: {0}")]
    Shape(String),
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Regularity(#[from] RegularityError),
    #[error(transparent)]
    Regularize(#[from] RegularizeError),
}

/// An `h`-vertex `k`-uniform pattern: only full-size edges carry visible
/// colors, given as host color ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformPattern {
    r: usize,
    k: usize,
    h: usize,
    edges: BTreeMap<ComplexEdge, ColorId>,
    palettes: BTreeMap<IndexSet, BTreeSet<ColorId>>,
}

impl UniformPattern {
    pub fn new(r: usize, k: usize, h: usize) -> Result<Self, RemovalError> {
        if k == 0 || k > r || h == 0 {
            return Err(RemovalError::Shape(format!("r = {r}, k = {k}, h = {h}")));
        }
        Ok(UniformPattern {
            r,
            k,
            h,
            edges: BTreeMap::new(),
            palettes: BTreeMap::new(),
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn add_edge(&mut self, e: ComplexEdge, color: ColorId) -> Result<(), RemovalError> {
        if e.index.len() != self.k
            || e.positions.len() != self.k
            || e.positions.iter().any(|&p| p >= self.h)
            || e.index.members().any(|i| i >= self.r)
        {
            return Err(RemovalError::Shape(format!("edge {e:?} is not a full-size edge of the pattern")));
        }
        self.edges.insert(e, color);
        Ok(())
    }

    /// Declares `C_I(F)`; without a declaration it is the set of colors
    /// used on `I`.
    pub fn declare_palette(&mut self, index: IndexSet, colors: impl IntoIterator<Item = ColorId>) {
        self.palettes.insert(index, colors.into_iter().collect());
    }

    pub fn visible(&self) -> impl Iterator<Item = (&ComplexEdge, &ColorId)> {
        self.edges.iter()
    }

    pub fn palette(&self, index: IndexSet) -> BTreeSet<ColorId> {
        let mut p = self.palettes.get(&index).cloned().unwrap_or_default();
        p.extend(self.edges.iter().filter(|(e, _)| e.index == index).map(|(_, &c)| c));
        p
    }

    fn check_host(&self, g: &Hypergraph) -> Result<(), RemovalError> {
        if g.r() != self.r || g.k() != self.k {
            return Err(RemovalError::Shape(format!(
                "pattern has r = {}, k = {}; host has r = {}, k = {}",
                self.r,
                self.k,
                g.r(),
                g.k()
            )));
        }
        for (e, &c) in &self.edges {
            if c as usize >= g.palette(e.index) {
                return Err(RemovalError::Shape(format!("color {c} on {} outside the host palette", e.index)));
            }
        }
        Ok(())
    }

    /// Constraints `G(phi(e)) = F(e)` for the visible edges.
    pub fn pattern(&self, g: &Hypergraph) -> Pattern {
        let mut p = Pattern::per_part(g, self.h);
        for (e, &c) in &self.edges {
            p.require(g, e.index, &e.vars(self.h), c);
        }
        p
    }

    /// `P_{phi in Phi(h)}[G(phi(e)) = F(e) for all visible e]`, exactly.
    pub fn copy_probability(&self, g: &Hypergraph, budget: u128) -> Result<Q, RemovalError> {
        self.check_host(g)?;
        let p = self.pattern(g);
        if p.space() > budget {
            return Err(DensityError::Budget {
                needed: p.space(),
                budget,
            }
            .into());
        }
        Ok(ratio::from_count(p.count(g), p.space()))
    }

    /// Lowest host color of each full-size index set outside `C_I(F)`.
    pub fn spare_colors(&self, g: &Hypergraph) -> Result<BTreeMap<IndexSet, ColorId>, RemovalError> {
        g.index_sets()
            .iter()
            .filter(|i| i.len() == self.k)
            .map(|&i| {
                let used = self.palette(i);
                (0..g.palette(i) as ColorId)
                    .find(|c| !used.contains(c))
                    .map(|c| (i, c))
                    .ok_or(RemovalError::NoSpare(i))
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct PatternEdge {
    index: IndexSet,
    positions: Vec<usize>,
    color: ColorId,
}

#[derive(Serialize, Deserialize)]
struct PatternPalette {
    index: IndexSet,
    colors: Vec<ColorId>,
}

#[derive(Serialize, Deserialize)]
struct PatternRepr {
    r: usize,
    k: usize,
    h: usize,
    edges: Vec<PatternEdge>,
    #[serde(default)]
    palettes: Vec<PatternPalette>,
}

impl Serialize for UniformPattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PatternRepr {
            r: self.r,
            k: self.k,
            h: self.h,
            edges: self
                .edges
                .iter()
                .map(|(e, &color)| PatternEdge {
                    index: e.index,
                    positions: e.positions.clone(),
                    color,
                })
                .collect(),
            palettes: self
                .palettes
                .iter()
                .map(|(&index, c)| PatternPalette {
                    index,
                    colors: c.iter().copied().collect(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for UniformPattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = PatternRepr::deserialize(d)?;
        let mut p = UniformPattern::new(r.r, r.k, r.h).map_err(D::Error::custom)?;
        for e in r.edges {
            p.add_edge(
                ComplexEdge {
                    index: e.index,
                    positions: e.positions,
                },
                e.color,
            )
            .map_err(D::Error::custom)?;
        }
        for pal in r.palettes {
            p.declare_palette(pal.index, pal.colors);
        }
        Ok(p)
    }
}

/// Recolors every full-size edge of `base` whose total color in
/// `classifier` is bad. Both graphs share parts and full-size tables.
fn recolor_by(
    base: &Hypergraph,
    classifier: &Hypergraph,
    bad: &BTreeSet<TotalColor>,
    spare: &BTreeMap<IndexSet, ColorId>,
) -> Result<(Hypergraph, Vec<(IndexSet, u64)>), RemovalError> {
    let mut out = base.clone();
    let mut changed = Vec::new();
    for (slot, &idx) in base.index_sets().iter().enumerate() {
        if idx.len() != base.k() {
            continue;
        }
        let has_bad = bad.iter().any(|c| c.index == idx);
        let target = match spare.get(&idx) {
            Some(&c) => c,
            None if has_bad => return Err(RemovalError::NoSpare(idx)),
            None => continue,
        };
        if (target as usize) >= base.palette_at(slot) {
            return Err(RemovalError::Shape(format!("spare color {target} outside palette of {idx}")));
        }
        let mut colors = base.colors_at(slot).to_vec();
        let mut n = 0u64;
        for (off, e) in classifier.edges(idx).enumerate() {
            if bad.contains(&classifier.total_color(&e)) && colors[off] != target {
                colors[off] = target;
                n += 1;
            }
        }
        out.set_slot_colors(slot, colors);
        changed.push((idx, n));
    }
    Ok((out, changed))
}

/// Replaces the color of every full-size edge whose total color is in `bad`
/// by `spare[I]`. Smaller index sets are untouched.
pub fn recolor_bad_edges(
    g: &Hypergraph,
    bad: &BTreeSet<TotalColor>,
    spare: &BTreeMap<IndexSet, ColorId>,
) -> Result<Hypergraph, RemovalError> {
    Ok(recolor_by(g, g, bad, spare)?.0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemovalCase {
    /// Few changes remove every copy.
    #[serde(rename = "i")]
    FewChanges,
    /// Copies have positive density.
    #[serde(rename = "ii")]
    ManyCopies,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemovalOutcome {
    pub case: RemovalCase,
    /// The recolored graph in case (i).
    #[serde(skip)]
    pub modified: Option<Hypergraph>,
    /// `(I, P_e[G'(e) != G(e)])` for each full-size `I`.
    pub change_fractions: Vec<(IndexSet, String)>,
    /// Lower bound on the copy probability in case (ii).
    #[serde(with = "ratio::serde_opt_q")]
    pub bound: Option<Q>,
    /// `product` when the bound comes from densities and slack, `exact`
    /// when it is the counted copy probability.
    pub bound_source: Option<String>,
    #[serde(with = "ratio::serde_q")]
    pub copy_probability: Q,
    /// Copy probability in the modified graph.
    #[serde(with = "ratio::serde_opt_q")]
    pub copies_after: Option<Q>,
    #[serde(with = "ratio::serde_q")]
    pub epsilon: Q,
    #[serde(with = "ratio::serde_q")]
    pub sqrt_epsilon_bar: Q,
    pub bad_colors: usize,
    pub family_size: usize,
    pub survivors: usize,
    pub map_sizes: Vec<usize>,
    pub seed: u64,
}

impl RemovalOutcome {
    pub fn max_change_fraction(&self) -> Q {
        self.change_fractions
            .iter()
            .map(|(_, s)| ratio::parse(s).expect("own output"))
            .fold(Q::zero(), ratio::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemovalConfig {
    /// Sizes of the `k - 1` regularizing maps; `None` uses 1 for each.
    pub map_sizes: Option<Vec<usize>>,
    pub seed: u64,
    pub budget: u128,
}

impl Default for RemovalConfig {
    fn default() -> Self {
        RemovalConfig {
            map_sizes: None,
            seed: 0,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Complex of `G*` seen along one copy `phi` of `F`: every edge below size
/// `k` visible in its `G*` color, full-size edges exactly those of `F`.
fn copy_complex(g_star: &Hypergraph, f: &UniformPattern, assignment: &[usize]) -> Vec<Vec<Option<ColorId>>> {
    let h = f.h;
    IndexSet::all_up_to(f.r, f.k)
        .into_iter()
        .map(|idx| {
            (0..h.pow(idx.len() as u32))
                .map(|off| {
                    let mut positions = vec![0; idx.len()];
                    let mut o = off;
                    for p in positions.iter_mut().rev() {
                        *p = o % h;
                        o /= h;
                    }
                    let e = ComplexEdge { index: idx, positions };
                    if idx.len() == f.k {
                        return f.edges.get(&e).copied();
                    }
                    let host = Edge {
                        index: idx,
                        vertices: e.vars(h).into_iter().map(|v| assignment[v]).collect(),
                    };
                    Some(g_star.color(&host))
                })
                .collect()
        })
        .collect()
}

/// Decides which alternative of the removal statement holds for `(G, F)`.
///
/// Thresholds use `sqrt(eps_bar) = eps / (3 2^k)`. The slack function is the
/// empirical one built on the complexes realized by copies of `F`.
pub fn removal_decision(
    g: &Hypergraph,
    f: &UniformPattern,
    eps: &Q,
    cfg: &RemovalConfig,
) -> Result<RemovalOutcome, RemovalError> {
    if eps <= &Q::zero() || eps >= &Q::one() {
        return Err(RemovalError::Epsilon(ratio::fmt(eps)));
    }
    f.check_host(g)?;
    let spare = f.spare_colors(g)?;
    let k = g.k();
    let sqrt_eps_bar = eps / ratio::int(3u64 << k);
    let map_sizes = cfg.map_sizes.clone().unwrap_or_else(|| vec![1; k - 1]);
    let full: Vec<IndexSet> = g.index_sets().iter().copied().filter(|i| i.len() == k).collect();
    let zero_fractions = || full.iter().map(|&i| (i, "0".to_string())).collect();

    let copy_probability = f.copy_probability(g, cfg.budget)?;
    let mut outcome = RemovalOutcome {
        case: RemovalCase::FewChanges,
        modified: Some(g.clone()),
        change_fractions: zero_fractions(),
        bound: None,
        bound_source: None,
        copies_after: Some(Q::zero()),
        copy_probability: copy_probability.clone(),
        epsilon: eps.clone(),
        sqrt_epsilon_bar: sqrt_eps_bar.clone(),
        bad_colors: 0,
        family_size: 0,
        survivors: 0,
        map_sizes: map_sizes.clone(),
        seed: cfg.seed,
    };
    if copy_probability.is_zero() {
        return Ok(outcome);
    }

    let maps = sample_map_vector(g, &map_sizes, cfg.seed);
    let g_star = regularize(g, &maps)?;

    // One complex per distinct copy footprint.
    let mut tables = BTreeSet::new();
    f.pattern(g).visit(g, |a| {
        tables.insert(copy_complex(&g_star, f, a));
    });
    let family: Vec<SimplicialComplex> = tables
        .into_iter()
        .map(|c| SimplicialComplex::from_host_colors(&g_star, k, f.h, c))
        .collect::<Result<_, _>>()?;

    let delta = build_error_function(
        &g_star,
        &BuildMode::Empirical {
            family: &family,
            budget: cfg.budget,
        },
    )?;
    let table = DensityTable::new(&g_star);
    let bad = bad_colors(&g_star, &table, &delta, &sqrt_eps_bar, BadRule::Removal);
    let (modified, changed) = recolor_by(g, &g_star, &bad, &spare)?;
    let change_fractions: Vec<(IndexSet, Q)> = changed
        .iter()
        .map(|&(i, n)| (i, ratio::from_count(n as u128, g.edge_count(i) as u128)))
        .collect();
    let fractions_ok = change_fractions.iter().all(|(_, x)| x <= eps);

    let survivors: Vec<&SimplicialComplex> = family
        .iter()
        .filter(|s| {
            s.visible_of_size(k)
                .iter()
                .all(|e| !bad.contains(&s.total_color(e).unwrap()))
        })
        .collect();
    outcome.change_fractions = change_fractions.iter().map(|(i, x)| (*i, ratio::fmt(x))).collect();
    outcome.bad_colors = bad.len();
    outcome.family_size = family.len();
    outcome.survivors = survivors.len();

    if survivors.is_empty() && fractions_ok {
        let after = f.copy_probability(&modified, cfg.budget)?;
        debug_assert!(after.is_zero());
        outcome.copies_after = Some(after);
        outcome.modified = Some(modified);
        return Ok(outcome);
    }

    // Case (ii): sum over survivors of prod max(0, d - delta), checked
    // against the exact count.
    let cert = verify_error_function(&g_star, &delta, f.h, &family, cfg.budget)?;
    let product: Q = if cert.passes {
        survivors
            .par_iter()
            .map(|s| delta.product_interval(&table, s).0)
            .reduce(Q::zero, |a, b| a + b)
    } else {
        Q::zero()
    };
    outcome.case = RemovalCase::ManyCopies;
    outcome.modified = None;
    outcome.copies_after = None;
    if product > Q::zero() && product <= copy_probability {
        outcome.bound = Some(product);
        outcome.bound_source = Some("product".into());
    } else {
        outcome.bound = Some(copy_probability);
        outcome.bound_source = Some("exact".into());
    }
    Ok(outcome)
}
