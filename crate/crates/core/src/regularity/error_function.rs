use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{bad_colors, constants, eta, BadRule, EtaConfig, RegularityError};
use crate::density::{embed_probability_exact, DensityTable};
use crate::model::{Hypergraph, IndexSet, SimplicialComplex, TotalColor};
use crate::ratio::{self, Q};

/// A slack function on total colors. Colors without an entry take the
/// default.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorFunction {
    values: BTreeMap<TotalColor, Q>,
    default: Q,
}

impl Default for ErrorFunction {
    fn default() -> Self {
        Self::zero()
    }
}

impl ErrorFunction {
    pub fn zero() -> Self {
        Self::constant(Q::zero())
    }

    pub fn constant(default: Q) -> Self {
        assert!(default >= Q::zero(), "error functions are non-negative");
        ErrorFunction {
            values: BTreeMap::new(),
            default,
        }
    }

    pub fn get(&self, c: &TotalColor) -> &Q {
        self.values.get(c).unwrap_or(&self.default)
    }

    pub fn default_value(&self) -> &Q {
        &self.default
    }

    pub fn set(&mut self, c: TotalColor, v: Q) {
        assert!(v >= Q::zero(), "error functions are non-negative");
        self.values.insert(c, v);
    }

    /// `delta(c) = max(delta(c), v)`.
    pub fn raise(&mut self, c: &TotalColor, v: &Q) {
        if v > self.get(c) {
            self.set(c.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TotalColor, &Q)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The entries on index sets of size below `k`, same default.
    pub fn below(&self, k: usize) -> Self {
        ErrorFunction {
            values: self
                .values
                .iter()
                .filter(|(c, _)| c.index.len() < k)
                .map(|(c, v)| (c.clone(), v.clone()))
                .collect(),
            default: self.default.clone(),
        }
    }

    /// `E_e[delta(G<e>)]` over the index-`idx` edges of the host.
    pub fn expectation(&self, table: &DensityTable, idx: IndexSet) -> Q {
        let n = table.edge_count(idx);
        if n == 0 {
            return Q::zero();
        }
        let sum = table
            .total_colors(idx)
            .into_iter()
            .fold(Q::zero(), |acc, (c, count)| acc + self.get(&c) * ratio::int(count));
        sum / ratio::int(n)
    }

    /// Lower and upper ends of the product interval
    /// `prod max(0, d - delta)` and `prod min(1, d + delta)` over `V(S)`.
    pub fn product_interval(&self, table: &DensityTable, s: &SimplicialComplex) -> (Q, Q) {
        let mut lo = Q::one();
        let mut hi = Q::one();
        for e in s.all_visible() {
            let c = s.total_color(&e).expect("visible edge of a valid complex");
            let d = table.density(&c).value;
            let delta = self.get(&c);
            lo *= ratio::max(Q::zero(), &d - delta);
            hi *= ratio::min(Q::one(), &d + delta);
        }
        (lo, hi)
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    #[serde(flatten)]
    color: TotalColor,
    #[serde(with = "ratio::serde_q")]
    value: Q,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    #[serde(with = "ratio::serde_q")]
    default: Q,
    entries: Vec<Entry>,
}

impl Serialize for ErrorFunction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            default: self.default.clone(),
            entries: self
                .values
                .iter()
                .map(|(c, v)| Entry {
                    color: c.clone(),
                    value: v.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ErrorFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.default < Q::zero() || r.entries.iter().any(|e| e.value < Q::zero()) {
            return Err(serde::de::Error::custom("error function values must be non-negative"));
        }
        Ok(ErrorFunction {
            default: r.default,
            values: r.entries.into_iter().map(|e| (e.color, e.value)).collect(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct FaithfulParams {
    /// Slack on index sets below `k`; required when `k >= 2`.
    pub lower: Option<ErrorFunction>,
    pub epsilon: Q,
    /// Samples per vertex of the complex, so maps come from `Phi(m h)`.
    pub m: usize,
    pub eta: EtaConfig,
    /// Precision of the dyadic square-root upper bound.
    pub sqrt_bits: u32,
}

#[derive(Clone, Debug)]
pub enum BuildMode<'a> {
    /// Bad colors get 1, the rest `C sqrt(eta)` (rounded up).
    Faithful(FaithfulParams),
    /// The smallest slack that makes every member of `family` pass.
    Empirical {
        family: &'a [SimplicialComplex],
        budget: u128,
    },
}

pub fn build_error_function(g: &Hypergraph, mode: &BuildMode<'_>) -> Result<ErrorFunction, RegularityError> {
    let table = DensityTable::new(g);
    match mode {
        BuildMode::Faithful(p) => faithful(g, &table, p),
        BuildMode::Empirical { family, budget } => empirical(g, &table, family, *budget),
    }
}

fn faithful(g: &Hypergraph, table: &DensityTable, p: &FaithfulParams) -> Result<ErrorFunction, RegularityError> {
    let k = g.k();
    let mut delta = match (&p.lower, k) {
        (Some(l), _) => l.below(k),
        (None, 1) => ErrorFunction::zero(),
        (None, _) => return Err(RegularityError::MissingLowerDelta),
    };
    let full: Vec<IndexSet> = g.index_sets().iter().copied().filter(|i| i.len() == k).collect();
    let b_k = full.iter().map(|i| g.palette(*i)).max().unwrap_or(1);
    let consts = constants(k, p.eta.h, g.r(), &BigInt::from(b_k), &p.epsilon)?;
    let bad = bad_colors(g, table, &delta, &consts.sqrt_epsilon1, BadRule::Regularity);
    let colors: Vec<TotalColor> = full
        .iter()
        .flat_map(|i| table.total_colors(*i))
        .map(|(c, _)| c)
        .collect();
    let values: Vec<Result<Q, RegularityError>> = colors
        .par_iter()
        .map(|c| {
            if bad.contains(c) {
                return Ok(Q::one());
            }
            let st = eta(g, c, p.m, &p.eta)?;
            let eta_upper = match (&st.exact, st.half_width) {
                (Some(x), _) => x.clone(),
                (None, hw) => ratio::from_f64(st.value + hw.unwrap_or(0.0)),
            };
            let two_eta = ratio::int(2) * eta_upper;
            Ok(&consts.c_over_sqrt2 * ratio::sqrt_upper(&two_eta, p.sqrt_bits))
        })
        .collect();
    for (c, v) in colors.into_iter().zip(values) {
        delta.set(c, v?);
    }
    Ok(delta)
}

fn passes(delta: &ErrorFunction, table: &DensityTable, s: &SimplicialComplex, embed: &Q) -> bool {
    let (lo, hi) = delta.product_interval(table, s);
    &lo <= embed && embed <= &hi
}

fn empirical(
    g: &Hypergraph,
    table: &DensityTable,
    family: &[SimplicialComplex],
    budget: u128,
) -> Result<ErrorFunction, RegularityError> {
    let embeds: Vec<Q> = family
        .par_iter()
        .map(|s| embed_probability_exact(g, s, budget))
        .collect::<Result<_, _>>()?;
    let mut delta = ErrorFunction::zero();
    // Uniform split of each deviation over the visible edges of S.
    for (s, p) in family.iter().zip(&embeds) {
        let vis = s.all_visible();
        if vis.is_empty() {
            continue;
        }
        let prod = crate::density::density_product(table, s, &vis);
        let share = (p - prod).abs() / ratio::int(vis.len() as i64);
        for e in &vis {
            delta.raise(&s.total_color(e).unwrap(), &share);
        }
    }
    // Fix-up: raising only widens intervals, so one pass suffices.
    for (s, p) in family.iter().zip(&embeds) {
        if passes(&delta, table, s, p) {
            continue;
        }
        let colors: Vec<TotalColor> = s.all_visible().iter().map(|e| s.total_color(e).unwrap()).collect();
        let with = |t: &Q| {
            let mut d = delta.clone();
            for c in &colors {
                d.raise(c, t);
            }
            d
        };
        let (mut lo, mut hi) = (Q::zero(), Q::one());
        for _ in 0..48 {
            let mid = (&lo + &hi) / ratio::int(2);
            if passes(&with(&mid), table, s, p) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        delta = with(&hi);
    }
    Ok(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::random_hypergraph;
    use crate::ratio::q;
    use crate::regularity::{exhaustive_family, sampled_family, verify_error_function};

    #[test]
    fn empirical_passes_its_family() {
        let g = random_hypergraph(2, 2, &[2, 2], &[3, 4], 11).unwrap();
        let fam = sampled_family(&g, 2, 2, 40, 1);
        let d = build_error_function(&g, &BuildMode::Empirical { family: &fam, budget: 1 << 20 }).unwrap();
        let cert = verify_error_function(&g, &d, 2, &fam, 1 << 20).unwrap();
        assert!(cert.passes, "{:?}", cert.violations);
    }

    #[test]
    fn vertices_are_independent() {
        // With only vertex constraints the product rule is exact.
        let g = random_hypergraph(3, 2, &[2, 2], &[3, 2, 4], 2).unwrap();
        let fam = exhaustive_family(&g, 1, 2, 1 << 20).unwrap();
        let d = build_error_function(&g, &BuildMode::Empirical { family: &fam, budget: 1 << 20 }).unwrap();
        assert!(d.iter().all(|(_, v)| v.is_zero()));
    }

    #[test]
    fn faithful_marks_bad_colors_with_one() {
        let g = Hypergraph::from_tables(
            2,
            2,
            vec![2, 2],
            vec![1, 1, 2],
            vec![vec![0, 0], vec![0, 0], vec![1, 0, 0, 0]],
        )
        .unwrap();
        let black = TotalColor::new(IndexSet::new(&[0, 1]).unwrap(), vec![0, 0, 1]).unwrap();
        let params = FaithfulParams {
            lower: Some(ErrorFunction::zero()),
            epsilon: q(1, 2),
            m: 1,
            eta: EtaConfig::default(),
            sqrt_bits: 32,
        };
        let d = build_error_function(&g, &BuildMode::Faithful(params.clone())).unwrap();
        // Density 1/4 clears 2 sqrt(eps_1) / 2 = 1/192; the rows differ, so eta > 0.
        assert!(d.get(&black) > &Q::zero() && d.get(&black) != &Q::one());

        let mut lower = ErrorFunction::zero();
        lower.set(TotalColor::new(IndexSet::singleton(0), vec![0]).unwrap(), q(1, 100));
        let poisoned = FaithfulParams { lower: Some(lower), ..params.clone() };
        let d = build_error_function(&g, &BuildMode::Faithful(poisoned)).unwrap();
        assert_eq!(d.get(&black), &Q::one());

        let no_lower = FaithfulParams { lower: None, ..params };
        assert!(matches!(
            build_error_function(&g, &BuildMode::Faithful(no_lower)),
            Err(RegularityError::MissingLowerDelta)
        ));
    }

    #[test]
    fn serde_round_trip() {
        let mut d = ErrorFunction::constant(q(1, 3));
        d.set(TotalColor::new(IndexSet::singleton(1), vec![2]).unwrap(), q(5, 7));
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<ErrorFunction>(&s).unwrap(), d);
    }
}
