use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{box_points, ApplicationError, Point, SimplexSet};
use crate::model::{ComplexEdge, Hypergraph, IndexSet};
use crate::ratio::{self, Q};
use crate::removal::{removal_decision, RemovalCase, RemovalConfig, RemovalError, RemovalOutcome, UniformPattern};

pub const RED: u32 = 1;

/// `a` together with `c = N - 1 - sum a`; the corner is `a + c E_{k+1}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CornerSolution {
    pub a: Point,
    pub c: i64,
}

impl CornerSolution {
    pub fn points(&self) -> Vec<Point> {
        (0..self.a.len())
            .map(|i| {
                let mut p = self.a.clone();
                p[i] += self.c;
                p
            })
            .collect()
    }

    /// The three defining clauses: `c != 0`, `a` off the simplex, every
    /// corner point in `S`.
    pub fn verify(&self, s: &SimplexSet) -> bool {
        self.c != 0
            && self.a.len() == s.k + 1
            && self.a.iter().sum::<i64>() + self.c == s.n as i64 - 1
            && !s.in_simplex(&self.a)
            && self.points().iter().all(|p| s.contains(p))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerEngine {
    /// Scan all of `[N]_0^{k+1}`.
    #[default]
    BruteForce,
    /// Only candidates `a = v - c e_0` with `v` in `S`.
    Pruned,
}

/// The `(k + 1)`-partite, `k`-bounded graph with `b = (1, ..., 1, 2)` whose
/// size-`k` edge is red iff it is the projection of a member of `S`.
pub fn corner_hypergraph(s: &SimplexSet) -> Hypergraph {
    let r = s.k + 1;
    let mut b = vec![1; s.k];
    b[s.k - 1] = 2;
    let mut g = Hypergraph::constant(r, s.k, vec![s.n; r], &b).expect("valid shape");
    for slot in 0..g.index_sets().len() {
        let idx = g.index_sets()[slot];
        if idx.len() != s.k {
            continue;
        }
        let mut colors = vec![0; g.edge_count(idx)];
        for v in &s.members {
            let proj: Vec<usize> = idx.members().map(|i| v[i] as usize).collect();
            colors[g.offset(idx, &proj)] = RED;
        }
        g.set_slot_colors(slot, colors);
    }
    g
}

/// The one-vertex pattern whose `k + 1` full-size edges are all red.
pub fn corner_pattern(k: usize) -> UniformPattern {
    let mut f = UniformPattern::new(k + 1, k, 1).expect("valid shape");
    for idx in IndexSet::all_up_to(k + 1, k).into_iter().filter(|i| i.len() == k) {
        f.add_edge(
            ComplexEdge {
                index: idx,
                positions: vec![0; k],
            },
            RED,
        )
        .expect("full-size edge");
    }
    f
}

fn is_red(s: &SimplexSet, a: &[i64], c: i64) -> bool {
    let mut p = a.to_vec();
    (0..a.len()).all(|i| {
        p[i] += c;
        let hit = s.contains(&p);
        p[i] -= c;
        hit
    })
}

fn check_budget(needed: u128, budget: u128) -> Result<(), ApplicationError> {
    if needed > budget {
        return Err(ApplicationError::Budget { needed, budget });
    }
    Ok(())
}

fn first_in_stripe(s: &SimplexSet, a0: i64) -> Option<CornerSolution> {
    let mut found = None;
    let target = s.n as i64 - 1;
    let mut a = vec![a0; s.k + 1];
    box_points(s.n, s.k, |rest| {
        if found.is_some() {
            return;
        }
        a[1..].copy_from_slice(rest);
        let c = target - a.iter().sum::<i64>();
        if c != 0 && is_red(s, &a, c) {
            found = Some(CornerSolution { a: a.clone(), c });
        }
    });
    found
}

/// The lexicographically first `a` in `[N]_0^{k+1}` spanning a
/// non-degenerate corner in `S`, or `None`.
pub fn find_simplex_corner(
    s: &SimplexSet,
    engine: CornerEngine,
    budget: u128,
) -> Result<Option<CornerSolution>, ApplicationError> {
    let n = s.n as i64;
    let found = match engine {
        CornerEngine::BruteForce => {
            check_budget((s.n as u128).pow(s.k as u32 + 1), budget)?;
            (0..n).into_par_iter().find_map_first(|a0| first_in_stripe(s, a0))
        }
        CornerEngine::Pruned => all_simplex_corners(s, budget)?.into_iter().next(),
    };
    debug_assert!(found.as_ref().is_none_or(|f| f.verify(s)));
    Ok(found)
}

/// Every non-degenerate corner, sorted by `(a, c)`, found from the
/// members of `S` as in the pruned engine.
pub fn all_simplex_corners(s: &SimplexSet, budget: u128) -> Result<Vec<CornerSolution>, ApplicationError> {
    check_budget(s.len() as u128 * s.n as u128, budget)?;
    let n = s.n as i64;
    let mut out: Vec<CornerSolution> = s
        .members
        .par_iter()
        .flat_map_iter(|v| {
            ((v[0] - (n - 1))..=v[0])
                .filter(move |&c| c != 0 && v[0] - c < n)
                .map(move |c| {
                    let mut a = v.clone();
                    a[0] -= c;
                    CornerSolution { a, c }
                })
                .filter(|sol| is_red(s, &sol.a, sol.c))
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Counts over all of `Phi(1) = [N]_0^{k+1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CornerCensus {
    pub candidates: u128,
    pub red: u64,
    pub degenerate: u64,
    pub nondegenerate: u64,
}

pub fn corner_census(s: &SimplexSet, budget: u128) -> Result<CornerCensus, ApplicationError> {
    let candidates = (s.n as u128).pow(s.k as u32 + 1);
    check_budget(candidates, budget)?;
    let target = s.n as i64 - 1;
    let (red, degenerate) = (0..s.n as i64)
        .into_par_iter()
        .map(|a0| {
            let mut a = vec![a0; s.k + 1];
            let (mut red, mut deg) = (0u64, 0u64);
            box_points(s.n, s.k, |rest| {
                a[1..].copy_from_slice(rest);
                let c = target - a.iter().sum::<i64>();
                if is_red(s, &a, c) {
                    red += 1;
                    if s.contains(&a) {
                        deg += 1;
                    }
                }
            });
            (red, deg)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    Ok(CornerCensus {
        candidates,
        red,
        degenerate,
        nondegenerate: red - degenerate,
    })
}

/// Removal decision on the corner graph, checked against the census.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CornerRemovalCheck {
    pub outcome: RemovalOutcome,
    pub census: CornerCensus,
    /// Copy probability matches the red count; a case (ii) bound stays
    /// below it; in case (i) at least one edge was changed per degenerate
    /// tuple.
    pub consistent: bool,
}

pub fn corner_removal_check(
    s: &SimplexSet,
    eps: &Q,
    cfg: &RemovalConfig,
) -> Result<CornerRemovalCheck, RemovalError> {
    let census = corner_census(s, cfg.budget).map_err(|e| RemovalError::Shape(e.to_string()))?;
    let g = corner_hypergraph(s);
    let outcome = removal_decision(&g, &corner_pattern(s.k), eps, cfg)?;
    let candidates = ratio::from_count(census.candidates, 1);
    let mut consistent = outcome.copy_probability.clone() * &candidates == ratio::from_count(census.red as u128, 1);
    match outcome.case {
        RemovalCase::ManyCopies => {
            consistent &= outcome.bound.as_ref().is_some_and(|b| b > &Q::zero() && b <= &outcome.copy_probability);
        }
        RemovalCase::FewChanges => {
            let edges = ratio::from_count((s.n as u128).pow(s.k as u32), 1);
            let changed: Q = outcome
                .change_fractions
                .iter()
                .map(|(_, x)| ratio::parse(x).expect("own output") * &edges)
                .sum();
            consistent &= changed >= ratio::from_count(census.degenerate as u128, 1);
        }
    }
    Ok(CornerRemovalCheck {
        outcome,
        census,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::q;
    use crate::rng;
    use rand::Rng;

    fn random_simplex_set(n: usize, k: usize, density: f64, seed: u64) -> SimplexSet {
        let mut rng = rng::stream(seed, "test_simplex");
        let full = SimplexSet::full(n, k);
        SimplexSet::new(n, k, full.members.into_iter().filter(|_| rng.gen_bool(density))).unwrap()
    }

    #[test]
    fn empty_set_has_no_red_edges() {
        let g = corner_hypergraph(&SimplexSet::new(4, 2, []).unwrap());
        for idx in g.index_sets() {
            assert!(g.colors_of(*idx).iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn single_point_gives_one_red_edge_per_projection() {
        let s = SimplexSet::new(5, 2, [vec![1, 3, 0]]).unwrap();
        let g = corner_hypergraph(&s);
        let red: usize = g
            .index_sets()
            .iter()
            .map(|i| g.colors_of(*i).iter().filter(|&&c| c == RED).count())
            .sum();
        assert_eq!(red, 3);
        assert_eq!(find_simplex_corner(&s, CornerEngine::BruteForce, 1 << 20).unwrap(), None);
    }

    #[test]
    fn red_edges_are_projections() {
        let s = random_simplex_set(6, 2, 0.5, 3);
        let g = corner_hypergraph(&s);
        for idx in g.index_sets().iter().filter(|i| i.len() == 2) {
            let proj: std::collections::BTreeSet<Vec<usize>> = s
                .members
                .iter()
                .map(|v| idx.members().map(|i| v[i] as usize).collect())
                .collect();
            let red: std::collections::BTreeSet<Vec<usize>> = g
                .edges(*idx)
                .filter(|e| g.color(e) == RED)
                .map(|e| e.vertices)
                .collect();
            assert_eq!(proj, red);
        }
    }

    #[test]
    fn full_diagonal_gives_first_lexicographic_corner() {
        // k = 1, S = T(N, 1): a = (0, 0) has c = N - 1 and both partners in S.
        let s = SimplexSet::full(5, 1);
        let sol = find_simplex_corner(&s, CornerEngine::BruteForce, 1 << 20).unwrap().unwrap();
        assert_eq!(sol, CornerSolution { a: vec![0, 0], c: 4 });
        assert!(sol.verify(&s));
    }

    #[test]
    fn engines_agree_with_census() {
        for seed in 0..30 {
            let (n, k) = (4 + seed as usize % 5, 1 + seed as usize % 3);
            let s = random_simplex_set(n, k, 0.6, seed);
            let brute = find_simplex_corner(&s, CornerEngine::BruteForce, 1 << 24).unwrap();
            let pruned = find_simplex_corner(&s, CornerEngine::Pruned, 1 << 24).unwrap();
            assert_eq!(brute, pruned, "seed {seed}");
            let census = corner_census(&s, 1 << 24).unwrap();
            assert_eq!(census.degenerate as usize, s.len());
            assert_eq!(brute.is_some(), census.nondegenerate > 0);
            if let Some(sol) = brute {
                assert!(sol.verify(&s));
            }
        }
    }

    #[test]
    fn n9_random_pipeline_matches_scan() {
        let s = random_simplex_set(9, 1, 0.8, 11);
        let census = corner_census(&s, 1 << 20).unwrap();
        let found = find_simplex_corner(&s, CornerEngine::Pruned, 1 << 20).unwrap();
        assert_eq!(found.is_some(), census.nondegenerate > 0);
    }

    #[test]
    fn removal_cross_check_is_consistent() {
        for seed in 0..4 {
            let s = random_simplex_set(5, 2, 0.5, seed);
            let check = corner_removal_check(&s, &q(1, 2), &RemovalConfig::default()).unwrap();
            assert!(check.consistent, "seed {seed}: {check:?}");
        }
        let single = SimplexSet::new(5, 1, [vec![2, 2]]).unwrap();
        let check = corner_removal_check(&single, &q(1, 2), &RemovalConfig::default()).unwrap();
        assert!(check.consistent);
        assert_eq!(check.census.nondegenerate, 0);
    }
}
