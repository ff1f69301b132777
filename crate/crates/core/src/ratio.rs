//! Exact rational helpers.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: impl Into<BigInt>) -> Q {
    Q::from_integer(n.into())
}

pub fn from_count(num: u128, den: u128) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Huge numerators or denominators: scale through the bit lengths.
        let n = x.numer().bits() as i64;
        let d = x.denom().bits() as i64;
        let shift = (n.max(d) - 1000).max(0) as usize;
        let nf = (x.numer() >> shift).to_f64().unwrap_or(f64::INFINITY);
        let df = (x.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
        nf / df
    })
}

/// `x` as a rational, exact for every finite `f64`.
pub fn from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite")
}

/// Exact square root when `x` is the square of a rational.
pub fn sqrt_exact(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().to_biguint()?;
    let d = x.denom().to_biguint()?;
    let rn = n.sqrt();
    let rd = d.sqrt();
    if &rn * &rn == n && &rd * &rd == d {
        Some(Q::new(rn.into(), rd.into()))
    } else {
        None
    }
}

/// A rational `y >= sqrt(x)` with `y - sqrt(x) <= 2^-bits` (for `x <= 1`;
/// relative otherwise). Exact when `x` is a perfect square.
pub fn sqrt_upper(x: &Q, bits: u32) -> Q {
    assert!(!x.is_negative(), "square root of a negative number");
    if let Some(r) = sqrt_exact(x) {
        return r;
    }
    // ceil(sqrt(x * 4^bits)) / 2^bits, computed on integers.
    let scale = BigUint::one() << (2 * bits as usize);
    let n = x.numer().to_biguint().unwrap() * scale;
    let d = x.denom().to_biguint().unwrap();
    let t = ceil_div(&n, &d);
    let mut s = t.sqrt();
    if &s * &s < t {
        s += 1u32;
    }
    Q::new(s.into(), (BigUint::one() << bits as usize).into())
}

fn ceil_div(a: &BigUint, b: &BigUint) -> BigUint {
    (a + b - BigUint::one()) / b
}

/// `C(n, k)`; panics on overflow.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| {
        acc.checked_mul((n - i) as u64).expect("binomial overflow") / (i + 1) as u64
    })
}

/// Smallest integer `>= x`.
pub fn ceil(x: &Q) -> BigInt {
    x.ceil().to_integer()
}

pub fn min(a: Q, b: Q) -> Q {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max(a: Q, b: Q) -> Q {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn clamp01(x: Q) -> Q {
    min(max(x, Q::zero()), Q::one())
}

/// `"p/q"`, or `"p"` for integers.
pub fn fmt(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Q::new(n, d))
            }
        }
        None => {
            if let Ok(n) = s.parse::<BigInt>() {
                return Some(int(n));
            }
            let f: f64 = s.parse().ok()?;
            f.is_finite().then(|| from_f64(f))
        }
    }
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| serde::de::Error::custom(format!("not a rational: {s:?}")))
    }
}

/// Same as [`serde_q`] for optional values.
pub mod serde_opt_q {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&fmt(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Q>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| parse(&s).ok_or_else(|| serde::de::Error::custom(format!("not a rational: {s:?}"))))
            .transpose()
    }
}

/// Same as [`serde_q`] for vectors.
pub mod serde_vec_q {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &[Q], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(x.len()))?;
        for v in x {
            seq.serialize_element(&fmt(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        Vec::<String>::deserialize(d)?
            .into_iter()
            .map(|s| parse(&s).ok_or_else(|| serde::de::Error::custom(format!("not a rational: {s:?}"))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_squares_are_exact() {
        assert_eq!(sqrt_exact(&q(1, 36864)), Some(q(1, 192)));
        assert_eq!(sqrt_exact(&q(2, 1)), None);
        assert_eq!(sqrt_upper(&q(9, 4), 10), q(3, 2));
    }

    #[test]
    fn sqrt_upper_bounds_from_above() {
        for (n, d) in [(2, 1), (1, 3), (5, 7), (1, 1000)] {
            let x = q(n, d);
            let y = sqrt_upper(&x, 40);
            assert!(&y * &y >= x);
            let below = &y - q(1, 1 << 39);
            assert!(&below * &below < x);
        }
    }

    #[test]
    fn format_round_trips() {
        for x in [q(3, 4), q(-5, 2), q(7, 1), q(0, 1)] {
            assert_eq!(parse(&fmt(&x)), Some(x));
        }
        assert_eq!(fmt(&q(6, 8)), "3/4");
    }
}
