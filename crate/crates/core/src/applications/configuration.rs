use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corners::all_simplex_corners;
use super::{box_points, ApplicationError, Point, PointSet, SimplexSet};
use crate::rng;

/// `F = base + {0} + Lambda(E_{r'})`: the columns of `Lambda` are the other
/// points of `F` minus `base`, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternReduction {
    pub r: usize,
    pub r_prime: usize,
    /// Lexicographically least point of `F`; `F - base` contains 0.
    pub base: Point,
    pub columns: Vec<Point>,
}

impl PatternReduction {
    /// `Lambda` as an `r x r'` matrix.
    pub fn matrix(&self) -> Vec<Vec<i64>> {
        (0..self.r).map(|i| self.columns.iter().map(|c| c[i]).collect()).collect()
    }

    pub fn apply(&self, z: &[i64]) -> Point {
        let mut out = vec![0; self.r];
        for (zj, col) in z.iter().zip(&self.columns) {
            for (o, x) in out.iter_mut().zip(col) {
                *o += zj * x;
            }
        }
        out
    }

    /// The pattern back: `base + Lambda(B_{r'})`.
    pub fn pattern(&self) -> BTreeSet<Point> {
        let mut out = BTreeSet::from([self.base.clone()]);
        for col in &self.columns {
            out.insert(self.base.iter().zip(col).map(|(b, c)| b + c).collect());
        }
        out
    }
}

fn normalize_pattern(f: &[Point]) -> Result<BTreeSet<Point>, ApplicationError> {
    let set: BTreeSet<Point> = f.iter().cloned().collect();
    if set.len() < 2 {
        return Err(ApplicationError::PatternTooSmall(set.len()));
    }
    let r = f[0].len();
    if f.iter().any(|p| p.len() != r) {
        return Err(ApplicationError::MixedDimensions);
    }
    Ok(set)
}

pub fn pattern_reduction(f: &[Point]) -> Result<PatternReduction, ApplicationError> {
    let set = normalize_pattern(f)?;
    let mut it = set.iter();
    let base = it.next().expect("nonempty").clone();
    let columns: Vec<Point> = it.map(|p| p.iter().zip(&base).map(|(x, b)| x - b).collect()).collect();
    Ok(PatternReduction {
        r: base.len(),
        r_prime: columns.len(),
        base,
        columns,
    })
}

/// `a + cF` with `c >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationResult {
    pub a: Point,
    pub c: i64,
    pub witnesses: Vec<Point>,
    /// Which search produced it: `shortcut`, `reduction`, `reduction_symmetric`
    /// or `brute_force`.
    pub engine: String,
}

impl ConfigurationResult {
    fn new(a: Point, c: i64, f: &BTreeSet<Point>, engine: &str) -> Self {
        let witnesses = f.iter().map(|p| translate(&a, c, p)).collect();
        ConfigurationResult {
            a,
            c,
            witnesses,
            engine: engine.into(),
        }
    }

    /// Direct membership re-check of `a + cF` in `S`, with `1 <= c <= N`.
    pub fn verify(&self, s: &PointSet, f: &[Point]) -> bool {
        self.c >= 1
            && self.c as usize <= s.n
            && f.iter().all(|p| s.contains(&translate(&self.a, self.c, p)))
    }
}

fn translate(a: &[i64], c: i64, p: &[i64]) -> Point {
    a.iter().zip(p).map(|(x, y)| x + c * y).collect()
}

/// A symmetric part `T = {t in S : 2x - t in S}`; `center2` is `2x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Symmetrization {
    pub center2: Point,
    pub t: PointSet,
    /// `0.98 / 2^r * delta^2 * N^r`.
    pub target: f64,
    pub meets_target: bool,
}

pub fn symmetric_part(s: &PointSet, center2: &[i64]) -> PointSet {
    let points = s
        .points
        .iter()
        .filter(|t| {
            let mirror: Point = center2.iter().zip(t.iter()).map(|(c, x)| c - x).collect();
            s.contains(&mirror)
        })
        .cloned()
        .collect();
    PointSet {
        n: s.n,
        r: s.r,
        points,
    }
}

/// Best symmetric part over `trials` centers drawn from `(1/2 [2N]_0)^r`.
/// When `trials` covers all `(2N)^r` centers they are scanned in order.
pub fn symmetrize_set(s: &PointSet, trials: usize, seed: u64) -> Symmetrization {
    let domain = (2 * s.n as u128).checked_pow(s.r as u32).unwrap_or(u128::MAX);
    let centers: Vec<Point> = if trials as u128 >= domain {
        let mut all = Vec::new();
        box_points(2 * s.n, s.r, |p| all.push(p.to_vec()));
        all
    } else {
        let mut rng = rng::stream(seed, "symmetrize");
        (0..trials)
            .map(|_| (0..s.r).map(|_| rng.gen_range(0..2 * s.n as i64)).collect())
            .collect()
    };
    let (center2, t) = centers
        .into_par_iter()
        .map(|c| {
            let t = symmetric_part(s, &c);
            (c, t)
        })
        .reduce_with(|x, y| if y.1.len() > x.1.len() { y } else { x })
        .unwrap_or_else(|| (vec![0; s.r], PointSet { n: s.n, r: s.r, points: BTreeSet::new() }));
    let target = 0.98 / 2f64.powi(s.r as i32) * s.density().powi(2) * (s.n as f64).powi(s.r as i32);
    Symmetrization {
        meets_target: t.len() as f64 >= target,
        center2,
        t,
        target,
    }
}

/// Every `(a, c)` with `1 <= c <= N` and `a + cF` inside `S`, sorted.
pub fn brute_force_oracle(s: &PointSet, f: &[Point], budget: u128) -> Result<Vec<(Point, i64)>, ApplicationError> {
    let f = normalize_pattern(f)?;
    let needed = s.len() as u128 * s.n as u128 * f.len() as u128;
    if needed > budget {
        return Err(ApplicationError::Budget { needed, budget });
    }
    let first = f.iter().next().expect("nonempty");
    let f = &f;
    // Every solution has a + c * first in S.
    let mut out: Vec<(Point, i64)> = s
        .points
        .par_iter()
        .flat_map_iter(|p| {
            (1..=s.n as i64).filter_map(move |c| {
                let a: Point = p.iter().zip(first).map(|(x, y)| x - c * y).collect();
                f.iter().all(|q| s.contains(&translate(&a, c, q))).then_some((a, c))
            })
        })
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigEngine {
    /// Lexicographically first `(a, c)` from the oracle.
    #[default]
    BruteForce,
    /// Reduce to a corner search; brute force decides when it finds nothing.
    Reduction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigConfig {
    pub engine: ConfigEngine,
    /// Centers tried by the symmetrization step.
    pub trials: usize,
    pub seed: u64,
    pub budget: u128,
}

impl Default for ConfigConfig {
    fn default() -> Self {
        ConfigConfig {
            engine: ConfigEngine::default(),
            trials: 64,
            seed: 0,
            budget: 1 << 26,
        }
    }
}

/// Corners of the lift of `S` under `Lambda`, as `(Lambda z0, c)` pairs with
/// `z0 + c B_{r'}` inside the lift. `None` when the lift exceeds `budget`.
fn reduced_corners(s: &PointSet, red: &PatternReduction, budget: u128) -> Option<Vec<(Point, i64)>> {
    let rp = red.r_prime;
    let size = (s.n as u128).checked_pow(rp as u32)?;
    if size > budget {
        return None;
    }
    // z in [N]_0^{r'} sits in T(N', r') as (N' - 1 - sum z, z).
    let n_prime = rp * (s.n - 1) + 1;
    let mut lift = Vec::new();
    box_points(s.n, rp, |z| {
        let image: Point = red.apply(z).iter().zip(&red.base).map(|(x, b)| x + b).collect();
        if s.contains(&image) {
            let mut v = vec![n_prime as i64 - 1 - z.iter().sum::<i64>()];
            v.extend_from_slice(z);
            lift.push(v);
        }
    });
    let simplex = SimplexSet::new(n_prime, rp, lift).expect("lift lies in the simplex");
    let corners = all_simplex_corners(&simplex, budget).ok()?;
    Some(
        corners
            .into_iter()
            .map(|sol| {
                let z0 = &sol.a[1..];
                let a: Point = red.apply(z0).iter().zip(&red.base).map(|(x, b)| x + b - sol.c * b).collect();
                (a, sol.c)
            })
            .collect(),
    )
}

/// Finds `a` and `c in [N]` with `a + cF` inside `S`. Results are always
/// re-verified by membership before being returned.
pub fn find_configuration(
    s: &PointSet,
    f: &[Point],
    cfg: &ConfigConfig,
) -> Result<Option<ConfigurationResult>, ApplicationError> {
    let fset = normalize_pattern(f)?;
    if fset.iter().next().expect("nonempty").len() != s.r {
        return Err(ApplicationError::MixedDimensions);
    }
    let shortcut = ConfigurationResult::new(vec![0; s.r], 1, &fset, "shortcut");
    if shortcut.verify(s, f) {
        return Ok(Some(shortcut));
    }
    if cfg.engine == ConfigEngine::Reduction {
        let red = pattern_reduction(f)?;
        // Positive c straight from S.
        if let Some(corners) = reduced_corners(s, &red, cfg.budget) {
            if let Some((a, c)) = corners.into_iter().find(|(_, c)| *c > 0) {
                let res = ConfigurationResult::new(a, c, &fset, "reduction");
                if res.verify(s, f) {
                    return Ok(Some(res));
                }
            }
        }
        // Either sign on a symmetric part, reflecting through its center.
        let sym = symmetrize_set(s, cfg.trials, cfg.seed);
        if let Some(corners) = reduced_corners(&sym.t, &red, cfg.budget) {
            if let Some((a, c)) = corners.into_iter().next() {
                let (a, c) = if c > 0 {
                    (a, c)
                } else {
                    (sym.center2.iter().zip(&a).map(|(x, y)| x - y).collect(), -c)
                };
                let res = ConfigurationResult::new(a, c, &fset, "reduction_symmetric");
                if res.verify(s, f) {
                    return Ok(Some(res));
                }
            }
        }
    }
    let first = brute_force_oracle(s, f, cfg.budget)?.into_iter().next();
    Ok(first.map(|(a, c)| ConfigurationResult::new(a, c, &fset, "brute_force")))
}

/// An arithmetic progression `a, a + c, ..., a + (m - 1)c` inside `S`.
pub fn find_ap(s: &PointSet, m: usize, cfg: &ConfigConfig) -> Result<Option<ConfigurationResult>, ApplicationError> {
    if s.r != 1 {
        return Err(ApplicationError::Invalid(format!("progressions live in dimension 1, got {}", s.r)));
    }
    match m {
        0 => Err(ApplicationError::Invalid("progression length must be at least 1".into())),
        1 => Ok(s.points.iter().next().map(|p| ConfigurationResult {
            a: p.clone(),
            c: 1,
            witnesses: vec![p.clone()],
            engine: "shortcut".into(),
        })),
        _ => {
            let f: Vec<Point> = (0..m as i64).map(|i| vec![i]).collect();
            find_configuration(s, &f, cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[&[i64]]) -> Vec<Point> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    fn line(n: usize, members: impl IntoIterator<Item = i64>) -> PointSet {
        PointSet::new(n, 1, members.into_iter().map(|x| vec![x])).unwrap()
    }

    fn random_set(n: usize, r: usize, density: f64, seed: u64) -> PointSet {
        let mut rng = rng::stream(seed, "test_points");
        let mut s = PointSet::new(n, r, []).unwrap();
        box_points(n, r, |p| {
            if rng.gen_bool(density) {
                s.insert(p.to_vec()).unwrap();
            }
        });
        s
    }

    #[test]
    fn three_term_pattern_reduces_to_one_by_two() {
        let red = pattern_reduction(&pts(&[&[0], &[1], &[2]])).unwrap();
        assert_eq!(red.r_prime, 2);
        assert_eq!(red.matrix(), vec![vec![1, 2]]);
        assert_eq!(red.pattern(), pts(&[&[0], &[1], &[2]]).into_iter().collect());
    }

    #[test]
    fn basis_pattern_has_permutation_matrix() {
        let red = pattern_reduction(&pts(&[&[0, 0], &[1, 0], &[0, 1]])).unwrap();
        assert_eq!(red.r_prime, 2);
        assert_eq!(red.matrix(), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn small_patterns_are_rejected() {
        assert_eq!(pattern_reduction(&pts(&[&[1]])), Err(ApplicationError::PatternTooSmall(1)));
        assert_eq!(pattern_reduction(&pts(&[&[1], &[1]])), Err(ApplicationError::PatternTooSmall(1)));
        assert_eq!(pattern_reduction(&pts(&[&[1], &[1, 2]])), Err(ApplicationError::MixedDimensions));
    }

    #[test]
    fn symmetrization_examples() {
        let full = PointSet::full(4, 2);
        assert_eq!(symmetric_part(&full, &[3, 3]), full);
        let single = PointSet::new(5, 2, [vec![1, 3]]).unwrap();
        assert_eq!(symmetric_part(&single, &[2, 6]), single);
        // Evens in [20]: the best center is 2x = 18 (pairs 0+18, ..., 18+0).
        let evens = line(20, (0..20).step_by(2));
        let best = symmetrize_set(&evens, 40, 0);
        assert_eq!(best.t.len(), 10);
        assert_eq!(best.center2, vec![18]);
        assert!(best.meets_target);
    }

    #[test]
    fn oracle_trivial_cases() {
        let f = pts(&[&[0], &[1], &[2]]);
        assert!(brute_force_oracle(&line(5, []), &f, 1 << 20).unwrap().is_empty());
        let all = brute_force_oracle(&line(5, 0..5), &f, 1 << 20).unwrap();
        // c = 1: a in 0..=2, c = 2: a = 0.
        assert_eq!(all, vec![(vec![0], 1), (vec![0], 2), (vec![1], 1), (vec![2], 1)]);
    }

    #[test]
    fn counterexample_has_no_configuration() {
        let s = line(4, [0, 1, 3]);
        let f = pts(&[&[0], &[1], &[2]]);
        assert!(brute_force_oracle(&s, &f, 1 << 20).unwrap().is_empty());
        let cfg = ConfigConfig {
            engine: ConfigEngine::Reduction,
            ..Default::default()
        };
        assert_eq!(find_configuration(&s, &f, &cfg).unwrap(), None);
        assert_eq!(find_ap(&line(5, [0, 1, 3, 4]), 3, &cfg).unwrap(), None);
    }

    #[test]
    fn full_box_uses_shortcut() {
        let s = PointSet::full(5, 2);
        let f = pts(&[&[0, 0], &[1, 2], &[3, 1]]);
        let res = find_configuration(&s, &f, &Default::default()).unwrap().unwrap();
        assert_eq!((res.a.clone(), res.c, res.engine.as_str()), (vec![0, 0], 1, "shortcut"));
        assert_eq!(find_ap(&line(7, 0..7), 4, &Default::default()).unwrap().unwrap().witnesses, pts(&[&[0], &[1], &[2], &[3]]));
    }

    #[test]
    fn odds_have_a_progression() {
        let s = line(20, (1..20).step_by(2));
        for engine in [ConfigEngine::BruteForce, ConfigEngine::Reduction] {
            let cfg = ConfigConfig { engine, ..Default::default() };
            let res = find_ap(&s, 3, &cfg).unwrap().unwrap();
            assert!(res.verify(&s, &pts(&[&[0], &[1], &[2]])));
            assert!(res.c % 2 == 0);
        }
    }

    #[test]
    fn reduction_agrees_with_oracle() {
        let patterns = [
            pts(&[&[0], &[1], &[2]]),
            pts(&[&[0], &[2], &[3]]),
            pts(&[&[0, 0], &[1, 0], &[0, 1]]),
            pts(&[&[0, 1], &[1, 0]]),
        ];
        let cfg = ConfigConfig {
            engine: ConfigEngine::Reduction,
            ..Default::default()
        };
        let mut via_reduction = 0;
        for seed in 0..40 {
            let f = &patterns[seed as usize % patterns.len()];
            let r = f[0].len();
            let n = if r == 1 { 12 } else { 6 };
            let s = random_set(n, r, 0.35, seed);
            let oracle = brute_force_oracle(&s, f, 1 << 24).unwrap();
            let found = find_configuration(&s, f, &cfg).unwrap();
            assert_eq!(found.is_some(), !oracle.is_empty(), "seed {seed}");
            if let Some(res) = found {
                assert!(res.verify(&s, f));
                via_reduction += res.engine.starts_with("reduction") as usize;
            }
        }
        assert!(via_reduction > 0);
    }
}
