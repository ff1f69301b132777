use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use super::{constants, Constants, RegularityError};
use crate::ratio::{self, binomial, Q};
use crate::regularize::color_bound_big;

/// One evaluated value, kept for reporting and for refusals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    /// e.g. `m^(1)[k=2,h=1,b=(1,2),eps=1/2](3)`.
    pub name: String,
    pub bits: u64,
    /// Decimal value when it has at most 64 digits.
    pub value: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
#[error("schedule evaluation refused: {reason} ({} values evaluated before refusal)", trace.len())]
pub struct ScheduleRefusal {
    pub reason: String,
    pub trace: Vec<TraceEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Inst {
    k: usize,
    h: u64,
    b: Vec<BigUint>,
    eps: Q,
}

impl Inst {
    fn label(&self) -> String {
        let b: Vec<String> = self.b.iter().map(short).collect();
        format!("k={},h={},b=({}),eps={}", self.k, self.h, b.join(","), short_q(&self.eps))
    }

    fn lower(&self) -> Inst {
        Inst {
            k: self.k - 1,
            h: self.h,
            b: self.b[..self.k - 1].to_vec(),
            eps: self.eps.clone(),
        }
    }
}

fn short(x: &BigUint) -> String {
    if x.bits() <= 64 {
        x.to_string()
    } else {
        format!("<{} bits>", x.bits())
    }
}

fn short_q(x: &Q) -> String {
    if x.numer().bits() + x.denom().bits() <= 128 {
        ratio::fmt(x)
    } else {
        format!("<{} bit ratio>", x.numer().bits() + x.denom().bits())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Key {
    MTop(Inst, BigUint),
    NTop(Inst),
}

/// Exact evaluators for the sample-size functions `m^(i)` and `n~^(i)`.
///
/// Values are tower-type, so every evaluation is guarded by a bit ceiling
/// and a step ceiling; exceeding either yields a [`ScheduleRefusal`]
/// carrying everything evaluated so far.
#[derive(Debug)]
pub struct SampleSchedule {
    r: usize,
    top: Inst,
    max_bits: u64,
    max_steps: u64,
    memo: Mutex<HashMap<Key, BigUint>>,
    trace: Mutex<Vec<TraceEntry>>,
}

/// Default bit ceiling for schedule values.
pub const DEFAULT_MAX_BITS: u64 = 1 << 20;

/// Builds the schedule for `(k, h, b, eps)` on `r` parts.
pub fn faithful_schedule(
    r: usize,
    k: usize,
    h: usize,
    b: &[BigUint],
    eps: &Q,
    max_bits: u64,
) -> Result<SampleSchedule, RegularityError> {
    super::check_epsilon(eps)?;
    if k == 0 || k > r || b.len() != k || h == 0 || b.iter().any(|x| x.is_zero()) {
        return Err(RegularityError::TooLarge(format!(
            "invalid schedule instance: r={r}, k={k}, h={h}, |b|={}",
            b.len()
        )));
    }
    Ok(SampleSchedule {
        r,
        top: Inst {
            k,
            h: h as u64,
            b: b.to_vec(),
            eps: eps.clone(),
        },
        max_bits,
        max_steps: 1 << 16,
        memo: Mutex::new(HashMap::new()),
        trace: Mutex::new(Vec::new()),
    })
}

impl SampleSchedule {
    pub fn k(&self) -> usize {
        self.top.k
    }

    /// Caps the number of recursion steps of any single `m^(k-1)` chain.
    pub fn with_max_steps(mut self, steps: u64) -> Self {
        self.max_steps = steps;
        self
    }

    /// `m^(i)(n_i, ..., n_{k-1})` for `i in [k-1]`.
    pub fn m(&self, i: usize, args: &[BigUint]) -> Result<BigUint, ScheduleRefusal> {
        self.check_arity(i, args.len(), self.top.k - i)?;
        self.m_at(&self.top, i, args)
    }

    /// `n~^(i)(n_{i+1}, ..., n_{k-1})` for `i in [k-1]`; `n~^(k-1)` takes
    /// no arguments.
    pub fn n_tilde(&self, i: usize, args: &[BigUint]) -> Result<BigUint, ScheduleRefusal> {
        self.check_arity(i, args.len(), self.top.k - 1 - i)?;
        self.n_at(&self.top, i, args)
    }

    /// The constants of the top instance.
    pub fn constants(&self) -> Result<Constants, ScheduleRefusal> {
        self.constants_of(&self.top)
    }

    pub fn trace(&self) -> Vec<TraceEntry> {
        self.trace.lock().unwrap().clone()
    }

    fn check_arity(&self, i: usize, got: usize, want: usize) -> Result<(), ScheduleRefusal> {
        if i == 0 || i >= self.top.k || got != want {
            return Err(self.refuse(format!(
                "index {i} with {got} arguments is outside the schedule of k = {}",
                self.top.k
            )));
        }
        Ok(())
    }

    fn refuse(&self, reason: String) -> ScheduleRefusal {
        ScheduleRefusal {
            reason,
            trace: self.trace(),
        }
    }

    fn record(&self, name: String, v: &BigUint) {
        let value = (v.bits() <= 212).then(|| v.to_string());
        self.trace.lock().unwrap().push(TraceEntry {
            name,
            bits: v.bits(),
            value,
        });
    }

    fn memo_get(&self, key: &Key) -> Option<BigUint> {
        self.memo.lock().unwrap().get(key).cloned()
    }

    fn memo_put(&self, key: Key, v: BigUint) {
        self.memo.lock().unwrap().insert(key, v);
    }

    fn constants_of(&self, inst: &Inst) -> Result<Constants, ScheduleRefusal> {
        let b_k = &inst.b[inst.k - 1];
        // Size of C before computing it.
        let crk = binomial(self.r, inst.k) as f64;
        let hk = (inst.h as f64).powi(inst.k as i32);
        let se_bits = (12.0 * crk).log2() + inst.k as f64 + b_k.bits() as f64 + inst.eps.denom().bits() as f64;
        let est = (crk * hk - 1.0) * (b_k.bits() as f64 + se_bits);
        if !(est <= self.max_bits as f64) {
            return Err(self.refuse(format!("constant C for [{}] needs about {est:.0} bits", inst.label())));
        }
        let h = usize::try_from(inst.h).map_err(|_| self.refuse("h too large".into()))?;
        constants(inst.k, h, self.r, &BigInt::from(b_k.clone()), &inst.eps).map_err(|e| self.refuse(e.to_string()))
    }

    fn m_at(&self, inst: &Inst, i: usize, args: &[BigUint]) -> Result<BigUint, ScheduleRefusal> {
        let (last, rest) = args.split_last().expect("non-empty");
        if i == inst.k - 1 {
            return self.m_top(inst, last);
        }
        if last.is_zero() {
            self.m_at(&inst.lower(), i, rest)
        } else {
            let sub = self.starred(inst, last)?;
            self.m_at(&sub, i, rest)
        }
    }

    fn n_at(&self, inst: &Inst, j: usize, args: &[BigUint]) -> Result<BigUint, ScheduleRefusal> {
        if j == inst.k - 1 {
            return self.n_top(inst);
        }
        let (last, rest) = args.split_last().expect("non-empty");
        if last.is_zero() {
            self.n_at(&inst.lower(), j, rest)
        } else {
            let sub = self.starred(inst, last)?;
            self.n_at(&sub, j, rest)
        }
    }

    /// `(k-1, 2h, b*, eps_1)` with `b*_i = B_i(b, m^(k-1)(n))`, `n >= 1`.
    fn starred(&self, inst: &Inst, n: &BigUint) -> Result<Inst, ScheduleRefusal> {
        let m = self.m_top(inst, n)?;
        let consts = self.constants_of(inst)?;
        let b = (1..inst.k)
            .map(|i| {
                color_bound_big(self.r, &inst.b, &m, i, self.max_bits)
                    .ok_or_else(|| self.refuse(format!("B_{i} at m = <{} bits> for [{}]", m.bits(), inst.label())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Inst {
            k: inst.k - 1,
            h: inst.h * 2,
            b,
            eps: consts.epsilon1,
        })
    }

    /// `n~^(k-1)`: least `n` with `C b_k sqrt(b_k / n) <= eps / (4 C(r,k))`,
    /// i.e. `ceil(C^2 b_k^3 (4 C(r,k) / eps)^2)`.
    fn n_top(&self, inst: &Inst) -> Result<BigUint, ScheduleRefusal> {
        let key = Key::NTop(inst.clone());
        if let Some(v) = self.memo_get(&key) {
            return Ok(v);
        }
        let c = self.constants_of(inst)?;
        let b_k = Q::from_integer(BigInt::from(inst.b[inst.k - 1].clone()));
        let t = ratio::int(4 * binomial(self.r, inst.k) as i64) / &inst.eps;
        let v = ratio::ceil(&(c.c_squared() * Pow::pow(&b_k, 3u32) * &t * &t));
        let v = v.to_biguint().expect("positive");
        self.record(format!("n~^({})[{}]", inst.k - 1, inst.label()), &v);
        self.memo_put(key, v.clone());
        Ok(v)
    }

    /// `m^(k-1)(n)` by iterating the recursion from `m^(k-1)(0) = 0`.
    fn m_top(&self, inst: &Inst, n: &BigUint) -> Result<BigUint, ScheduleRefusal> {
        let key = Key::MTop(inst.clone(), n.clone());
        if let Some(v) = self.memo_get(&key) {
            return Ok(v);
        }
        let steps = n
            .to_u64()
            .filter(|&s| s <= self.max_steps)
            .ok_or_else(|| self.refuse(format!("m^({}) at n = {} exceeds the step ceiling", inst.k - 1, short(n))))?;
        // Resume from the largest memoized prefix.
        let mut t = steps;
        let mut a = loop {
            if t == 0 {
                break BigUint::zero();
            }
            if let Some(v) = self.memo_get(&Key::MTop(inst.clone(), BigUint::from(t))) {
                break v;
            }
            t -= 1;
        };
        while t < steps {
            let tb = BigUint::from(t);
            let sum = self.inner_sum(inst, &tb, &a)?;
            let mbar = self.m_bar(inst, &sum)?;
            a = sum + mbar * BigUint::from(inst.h);
            if a.bits() > self.max_bits {
                return Err(self.refuse(format!(
                    "m^({})[{}]({}) exceeds {} bits",
                    inst.k - 1,
                    inst.label(),
                    t + 1,
                    self.max_bits
                )));
            }
            t += 1;
            self.record(format!("m^({})[{}]({t})", inst.k - 1, inst.label()), &a);
            self.memo_put(Key::MTop(inst.clone(), BigUint::from(t)), a.clone());
        }
        Ok(a)
    }

    /// `sum_{j in [k-1]} m^(j)(nbar^(j), ..., nbar^(k-2), n)`, where the
    /// `j = k-1` term is `a = m^(k-1)(n)`.
    fn inner_sum(&self, inst: &Inst, n: &BigUint, a: &BigUint) -> Result<BigUint, ScheduleRefusal> {
        let k = inst.k;
        // nbar[j] for j in 1..=k-2, built from the top down.
        let mut nbar: Vec<BigUint> = vec![BigUint::zero(); k.saturating_sub(1)];
        for j in (1..k.saturating_sub(1)).rev() {
            let mut args: Vec<BigUint> = nbar[j + 1..k - 1].to_vec();
            args.push(n.clone());
            nbar[j] = self.n_at(inst, j, &args)?;
        }
        let mut sum = a.clone();
        for j in 1..k - 1 {
            let mut args: Vec<BigUint> = nbar[j..k - 1].to_vec();
            args.push(n.clone());
            sum += self.m_at(inst, j, &args)?;
        }
        Ok(sum)
    }

    /// `ceil prod_{i in [k-1]} (B_i(b, s) / sqrt(eps_1))^{C(r,i) h^i}`.
    fn m_bar(&self, inst: &Inst, s: &BigUint) -> Result<BigUint, ScheduleRefusal> {
        let se = self.constants_of(inst)?.sqrt_epsilon1;
        let inv_bits = se.denom().bits() as f64 - se.numer().bits() as f64 + 1.0;
        let mut prod = Q::one();
        let mut bits = 0f64;
        for i in 1..inst.k {
            let bi = color_bound_big(self.r, &inst.b, s, i, self.max_bits)
                .ok_or_else(|| self.refuse(format!("B_{i} at <{} bits> for [{}]", s.bits(), inst.label())))?;
            let exp = binomial(self.r, i) as f64 * (inst.h as f64).powi(i as i32);
            bits += exp * (bi.bits() as f64 + inv_bits);
            if !(bits <= self.max_bits as f64) {
                return Err(self.refuse(format!("m-bar for [{}] needs about {bits:.0} bits", inst.label())));
            }
            let base = Q::from_integer(BigInt::from(bi)) / &se;
            prod *= Pow::pow(&base, exp as u64);
        }
        Ok(ratio::ceil(&prod).to_biguint().expect("positive"))
    }
}
