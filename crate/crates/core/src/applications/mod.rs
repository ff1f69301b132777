//! Corners in the discrete simplex and homothetic copies of finite patterns
//! in dense subsets of a box, with brute-force oracles.

mod configuration;
mod corners;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use configuration::{
    brute_force_oracle, find_ap, find_configuration, pattern_reduction, symmetric_part, symmetrize_set, ConfigConfig,
    ConfigEngine, ConfigurationResult, PatternReduction, Symmetrization,
};
pub use corners::{
    all_simplex_corners, corner_census, corner_hypergraph, corner_pattern, corner_removal_check, find_simplex_corner, CornerCensus,
    CornerEngine, CornerRemovalCheck, CornerSolution, RED,
};

pub type Point = Vec<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApplicationError {
    #[error("point {point:?} is not in {domain}")]
    OutOfDomain { point: Point, domain: String },
    #[error("pattern needs at least two points, got {0}")]
    PatternTooSmall(usize),
    #[error("pattern points have mixed dimensions")]
    MixedDimensions,
    #[error("search needs {needed} steps, budget is {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

/// A subset of the box `[N]_0^r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSet {
    pub n: usize,
    pub r: usize,
    pub points: BTreeSet<Point>,
}

impl PointSet {
    pub fn new(n: usize, r: usize, points: impl IntoIterator<Item = Point>) -> Result<Self, ApplicationError> {
        let mut s = PointSet {
            n,
            r,
            points: BTreeSet::new(),
        };
        for p in points {
            s.insert(p)?;
        }
        Ok(s)
    }

    /// The whole box.
    pub fn full(n: usize, r: usize) -> Self {
        let mut points = BTreeSet::new();
        box_points(n, r, |p| {
            points.insert(p.to_vec());
        });
        PointSet { n, r, points }
    }

    pub fn in_box(&self, p: &[i64]) -> bool {
        p.len() == self.r && p.iter().all(|&x| x >= 0 && (x as usize) < self.n)
    }

    pub fn insert(&mut self, p: Point) -> Result<(), ApplicationError> {
        if !self.in_box(&p) {
            return Err(ApplicationError::OutOfDomain {
                point: p,
                domain: format!("[{}]_0^{}", self.n, self.r),
            });
        }
        self.points.insert(p);
        Ok(())
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        self.points.contains(p)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `|S| / N^r`.
    pub fn density(&self) -> f64 {
        self.len() as f64 / (self.n as f64).powi(self.r as i32)
    }
}

/// A subset of `T(N, k)`: points of `[N]_0^{k+1}` with coordinate sum `N - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplexSet {
    pub n: usize,
    pub k: usize,
    pub members: BTreeSet<Point>,
}

impl SimplexSet {
    pub fn new(n: usize, k: usize, members: impl IntoIterator<Item = Point>) -> Result<Self, ApplicationError> {
        if n == 0 || k == 0 {
            return Err(ApplicationError::Invalid(format!("N = {n}, k = {k}")));
        }
        let mut s = SimplexSet {
            n,
            k,
            members: BTreeSet::new(),
        };
        for p in members {
            if !s.in_simplex(&p) {
                return Err(ApplicationError::OutOfDomain {
                    point: p,
                    domain: format!("T({n}, {k})"),
                });
            }
            s.members.insert(p);
        }
        Ok(s)
    }

    /// All of `T(N, k)`.
    pub fn full(n: usize, k: usize) -> Self {
        let mut members = BTreeSet::new();
        box_points(n, k, |p| {
            let rest = n as i64 - 1 - p.iter().sum::<i64>();
            if rest >= 0 {
                let mut v = p.to_vec();
                v.push(rest);
                members.insert(v);
            }
        });
        SimplexSet { n, k, members }
    }

    pub fn in_simplex(&self, p: &[i64]) -> bool {
        p.len() == self.k + 1
            && p.iter().all(|&x| x >= 0 && (x as usize) < self.n)
            && p.iter().sum::<i64>() == self.n as i64 - 1
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        self.members.contains(p)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Calls `f` on every point of `[n]_0^r` in lexicographic order.
pub(crate) fn box_points(n: usize, r: usize, mut f: impl FnMut(&[i64])) {
    if n == 0 {
        return;
    }
    let mut p = vec![0i64; r];
    loop {
        f(&p);
        let mut i = r;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            p[i] += 1;
            if (p[i] as usize) < n {
                break;
            }
            p[i] = 0;
        }
    }
}
