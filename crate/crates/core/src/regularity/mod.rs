//! Error functions, regularity certificates, the eta statistic, bad colors
//! and the sample-size schedule.

mod bad;
mod certificate;
mod error_function;
mod eta;
mod family;
mod schedule;

pub use bad::{bad_colors, is_bad, BadRule};
pub use certificate::{reg_upper_bound, verify_error_function, RegBoundConfig, RegularityCertificate, SMargin};
pub use error_function::{build_error_function, BuildMode, ErrorFunction, FaithfulParams};
pub use eta::{eta, refined_second_moment, EtaConfig, EtaStatistic};
pub use family::{exhaustive_family, exhaustive_family_size, family_digest, sampled_family};
pub use schedule::{faithful_schedule, SampleSchedule, ScheduleRefusal, TraceEntry, DEFAULT_MAX_BITS};

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::density::DensityError;
use crate::ratio::{self, binomial, Q};
use crate::regularize::RegularizeError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegularityError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonRange(String),
    #[error("faithful mode needs the lower-level error function for sizes below k")]
    MissingLowerDelta,
    #[error("total color of index {0} is not full-size")]
    NotFullSize(String),
    #[error("value too large to evaluate: {0}")]
    TooLarge(String),
    #[error("error function is not a valid ({s},{h})-error function: {violations} complexes fail")]
    InvalidErrorFunction { s: usize, h: usize, violations: usize },
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Regularize(#[from] RegularizeError),
    #[error(transparent)]
    Schedule(#[from] ScheduleRefusal),
}

/// The constants of the inductive step: `epsilon_1` exactly, its square
/// root exactly, and `C / sqrt(2)` exactly (C itself carries a factor
/// `sqrt(2)`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Constants {
    #[serde(with = "ratio::serde_q")]
    pub epsilon1: Q,
    #[serde(with = "ratio::serde_q")]
    pub sqrt_epsilon1: Q,
    #[serde(with = "ratio::serde_q")]
    pub c_over_sqrt2: Q,
}

impl Constants {
    /// `C^2 = 2 (C/sqrt 2)^2`, exact.
    pub fn c_squared(&self) -> Q {
        &self.c_over_sqrt2 * &self.c_over_sqrt2 * ratio::int(2)
    }

    /// A rational upper bound of `C`.
    pub fn c_upper(&self, bits: u32) -> Q {
        ratio::sqrt_upper(&ratio::int(2), bits) * &self.c_over_sqrt2
    }
}

pub fn check_epsilon(eps: &Q) -> Result<(), RegularityError> {
    if eps <= &Q::zero() || eps >= &Q::one() {
        return Err(RegularityError::EpsilonRange(ratio::fmt(eps)));
    }
    Ok(())
}

/// `sqrt(epsilon_1) = epsilon / (12 * 2^k * b_k * C(r,k))`.
pub fn sqrt_epsilon1(k: usize, r: usize, b_k: &BigInt, eps: &Q) -> Q {
    let den = BigInt::from(12u32) * (BigInt::one() << k) * b_k * BigInt::from(binomial(r, k));
    eps / Q::from_integer(den)
}

/// Largest exponent accepted by [`constants`] before refusing.
const MAX_EXPONENT: u64 = 1 << 20;

/// `epsilon_1 = (eps / (12 2^k b_k C(r,k)))^2` and
/// `C = sqrt(2) C(r,k) h^k (b_k / (2 sqrt(epsilon_1)))^{C(r,k) h^k - 1}
///      3^{sum_{j in [k-1]} C(r,j) h^j}`.
pub fn constants(k: usize, h: usize, r: usize, b_k: &BigInt, eps: &Q) -> Result<Constants, RegularityError> {
    check_epsilon(eps)?;
    let se = sqrt_epsilon1(k, r, b_k, eps);
    let crk = binomial(r, k);
    let hk = (h as u64).checked_pow(k as u32);
    let top_exp = hk
        .and_then(|hk| hk.checked_mul(crk))
        .filter(|&e| e <= MAX_EXPONENT)
        .ok_or_else(|| RegularityError::TooLarge(format!("C(r,k) h^k for r={r}, k={k}, h={h}")))?;
    let mut three_exp = 0u64;
    for j in 1..k {
        three_exp += binomial(r, j) * (h as u64).pow(j as u32);
    }
    if three_exp > MAX_EXPONENT {
        return Err(RegularityError::TooLarge("3-power exponent".into()));
    }
    let base = Q::from_integer(b_k.clone()) / (ratio::int(2) * &se);
    let c = ratio::int(crk as i64)
        * ratio::int((h as i64).pow(k as u32))
        * Pow::pow(&base, (top_exp - 1) as u32)
        * Q::from_integer(Pow::pow(BigInt::from(3u32), three_exp as u32));
    Ok(Constants {
        epsilon1: &se * &se,
        sqrt_epsilon1: se,
        c_over_sqrt2: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::q;

    #[test]
    fn epsilon1_worked_example() {
        let c = constants(2, 1, 2, &BigInt::from(2), &q(1, 2)).unwrap();
        assert_eq!(c.epsilon1, q(1, 36864));
        assert_eq!(c.sqrt_epsilon1, q(1, 192));
        assert_eq!(c.c_over_sqrt2, q(9, 1));
        assert_eq!(c.c_squared(), q(162, 1));
    }

    #[test]
    fn smaller_epsilon_gives_smaller_epsilon1() {
        let a = constants(2, 1, 3, &BigInt::from(2), &q(1, 2)).unwrap();
        let b = constants(2, 1, 3, &BigInt::from(2), &q(1, 3)).unwrap();
        assert!(b.epsilon1 < a.epsilon1);
    }

    #[test]
    fn c_is_at_least_sqrt2() {
        for (k, h, r, bk) in [(2, 1, 2, 2), (2, 2, 3, 3), (3, 1, 3, 2), (1, 2, 2, 2)] {
            let c = constants(k, h, r, &BigInt::from(bk), &q(1, 4)).unwrap();
            assert!(c.c_over_sqrt2 >= Q::one());
        }
    }

    #[test]
    fn epsilon_out_of_range() {
        assert!(constants(2, 1, 2, &BigInt::from(2), &q(1, 1)).is_err());
        assert!(constants(2, 1, 2, &BigInt::from(2), &q(0, 1)).is_err());
    }
}
