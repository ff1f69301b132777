use std::collections::BTreeSet;

use super::ErrorFunction;
use crate::density::DensityTable;
use crate::model::{Hypergraph, TotalColor};
use crate::ratio::{self, Q};

/// Which threshold pattern defines a bad color.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BadRule {
    /// Slack tested on proper sub-indices, density on all sub-indices
    /// (including `I`), against `sqrt(eps)/|C|` and `2 sqrt(eps)/|C|`.
    Regularity,
    /// Both tests on every sub-index including `I` itself.
    Removal,
}

/// Whether `c` is bad for the given slack function and `sqrt_eps`.
pub fn is_bad(
    g: &Hypergraph,
    table: &DensityTable,
    delta: &ErrorFunction,
    sqrt_eps: &Q,
    c: &TotalColor,
    rule: BadRule,
) -> bool {
    let two = ratio::int(2);
    for sub in c.index.nonempty_subsets() {
        let restricted = c.restrict(sub).expect("subset");
        let palette = ratio::int(g.palette(sub) as i64);
        let delta_applies = match rule {
            BadRule::Regularity => sub != c.index,
            BadRule::Removal => true,
        };
        if delta_applies && delta.get(&restricted) >= &(sqrt_eps / &palette) {
            return true;
        }
        if table.density(&restricted).value <= &two * sqrt_eps / &palette {
            return true;
        }
    }
    false
}

/// Bad total colors among the realized total colors of every index set.
pub fn bad_colors(
    g: &Hypergraph,
    table: &DensityTable,
    delta: &ErrorFunction,
    sqrt_eps: &Q,
    rule: BadRule,
) -> BTreeSet<TotalColor> {
    g.index_sets()
        .iter()
        .flat_map(|idx| table.total_colors(*idx))
        .map(|(c, _)| c)
        .filter(|c| is_bad(g, table, delta, sqrt_eps, c, rule))
        .collect()
}
