use std::collections::HashMap;

use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use super::RegularityError;
use crate::density::{hoeffding_half_width, relative_density, DensityError};
use crate::model::{for_each_map, map_space_size, ColorId, Hypergraph, PartitionwiseMap, TotalColor};
use crate::ratio::{self, Q};
use crate::regularize::s_regularize;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtaConfig {
    /// Vertices per part of the complexes the statistic serves; maps are
    /// drawn from `Phi(m h)`.
    pub h: usize,
    /// Exact enumeration is used when `|Phi(m h)|` is at most this.
    pub budget: u128,
    /// Number of sampled maps otherwise (or always, with `force_mc`).
    pub mc_samples: u64,
    pub seed: u64,
    pub confidence: f64,
    pub force_mc: bool,
}

impl Default for EtaConfig {
    fn default() -> Self {
        EtaConfig {
            h: 1,
            budget: 100_000,
            mc_samples: 2_000,
            seed: 0,
            confidence: 0.99,
            force_mc: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtaStatistic {
    pub total_color: TotalColor,
    pub m: usize,
    pub value: f64,
    #[serde(with = "ratio::serde_opt_q")]
    pub exact: Option<Q>,
    /// Hoeffding half-width in sampled mode.
    pub half_width: Option<f64>,
    pub mode: String,
    /// False when the frame of the total color is not realized.
    pub defined: bool,
    pub maps: u128,
}

/// Sizes `(n, t)` of the classes of `e ~ e*` under the frame of `G / phi`,
/// restricted to edges with the frame of `c`; `t` counts edges whose top
/// color is `c_I`. `None` when that frame is not realized.
fn class_stats(g: &Hypergraph, c: &TotalColor, phi: &PartitionwiseMap) -> Result<Option<Vec<(u64, u64)>>, RegularityError> {
    let k = g.k();
    let refined = if k >= 2 {
        Some(s_regularize(g, k - 1, phi)?)
    } else {
        None
    };
    let mut classes: HashMap<Vec<ColorId>, (u64, u64)> = HashMap::new();
    for e in g.edges(c.index) {
        let tc = g.total_color(&e);
        if tc.frame() != c.frame() {
            continue;
        }
        let key = match &refined {
            Some(r) => r.total_color(&e).frame().to_vec(),
            None => Vec::new(),
        };
        let entry = classes.entry(key).or_default();
        entry.0 += 1;
        if tc.top() == c.top() {
            entry.1 += 1;
        }
    }
    if classes.is_empty() {
        return Ok(None);
    }
    let mut v: Vec<(u64, u64)> = classes.into_values().collect();
    v.sort_unstable();
    Ok(Some(v))
}

/// `E_{e*}[(P[G(e) = c_I | e ~ e*] - d)^2 | frame]` for one map.
fn eta_for_map(g: &Hypergraph, c: &TotalColor, d: &Q, phi: &PartitionwiseMap) -> Result<Option<Q>, RegularityError> {
    Ok(class_stats(g, c, phi)?.map(|classes| {
        let total: u64 = classes.iter().map(|x| x.0).sum();
        let mut acc = Q::zero();
        for (n, t) in classes {
            let p = ratio::from_count(t as u128, n as u128);
            let dev = p - d;
            acc += ratio::from_count(n as u128, total as u128) * &dev * &dev;
        }
        acc
    }))
}

/// `E_{e*}[P[G(e) = c_I | e ~_{dG/phi} e*]^2 | frame]` for one map.
pub fn refined_second_moment(
    g: &Hypergraph,
    c: &TotalColor,
    phi: &PartitionwiseMap,
) -> Result<Option<Q>, RegularityError> {
    Ok(class_stats(g, c, phi)?.map(|classes| {
        let total: u64 = classes.iter().map(|x| x.0).sum();
        let mut acc = Q::zero();
        for (n, t) in classes {
            // (n / N) (t / n)^2 = t^2 / (n N)
            acc += ratio::from_count((t as u128) * (t as u128), (n as u128) * (total as u128));
        }
        acc
    }))
}

/// The eta statistic of a full-size total color: the mean squared
/// deviation of refined conditional densities from `d(c)`, averaged over
/// random maps in `Phi(m h)`.
pub fn eta(g: &Hypergraph, c: &TotalColor, m: usize, cfg: &EtaConfig) -> Result<EtaStatistic, RegularityError> {
    if c.index.len() != g.k() {
        return Err(RegularityError::NotFullSize(c.index.to_string()));
    }
    let d = relative_density(g, c);
    let mh = m * cfg.h;
    let space = map_space_size(g.parts(), mh);
    let undefined = |mode: &str| EtaStatistic {
        total_color: c.clone(),
        m,
        value: 0.0,
        exact: Some(Q::zero()),
        half_width: None,
        mode: mode.into(),
        defined: false,
        maps: 0,
    };
    if !d.defined {
        return Ok(undefined("exact"));
    }
    if !cfg.force_mc && space <= cfg.budget {
        let mut sum = Q::zero();
        let mut err = None;
        for_each_map(g.parts(), mh, |phi| {
            if err.is_some() {
                return;
            }
            match eta_for_map(g, c, &d.value, phi) {
                Ok(Some(v)) => sum += v,
                Ok(None) => {}
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let value = sum / ratio::from_count(space, 1);
        return Ok(EtaStatistic {
            total_color: c.clone(),
            m,
            value: ratio::to_f64(&value),
            exact: Some(value),
            half_width: None,
            mode: "exact".into(),
            defined: true,
            maps: space,
        });
    }
    if cfg.mc_samples == 0 {
        return Err(DensityError::BadConfig("eta needs at least one sampled map".into()).into());
    }
    let mut rng = rng::stream(cfg.seed, "eta");
    let mut sum = 0.0;
    for _ in 0..cfg.mc_samples {
        let images = g
            .parts()
            .iter()
            .map(|&n| (0..mh).map(|_| rng.gen_range(0..n)).collect())
            .collect();
        let phi = PartitionwiseMap::new(images, g.parts()).expect("in range");
        if let Some(v) = eta_for_map(g, c, &d.value, &phi)? {
            sum += ratio::to_f64(&v);
        }
    }
    Ok(EtaStatistic {
        total_color: c.clone(),
        m,
        value: sum / cfg.mc_samples as f64,
        exact: None,
        half_width: Some(hoeffding_half_width(cfg.mc_samples, cfg.confidence)),
        mode: "mc".into(),
        defined: true,
        maps: cfg.mc_samples as u128,
    })
}
