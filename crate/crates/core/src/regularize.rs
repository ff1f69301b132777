//! Recoloring small edges by their color traces against sampled vertices.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ColorId, Hypergraph, IndexSet, ModelError, PartitionwiseMap};
use crate::ratio::binomial;
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegularizeError {
    #[error("s must lie in [1, k-1] (s = {s}, k = {k})")]
    SOutOfRange { s: usize, k: usize },
    #[error("map vector needs k-1 = {expected} maps, got {got}")]
    MapLength { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `m` independent uniform vertices per part.
pub fn sample_map(g: &Hypergraph, m: usize, seed: u64) -> PartitionwiseMap {
    let mut rng = rng::stream(seed, "sample_map");
    let images = g
        .parts()
        .iter()
        .map(|&n| (0..m).map(|_| rng.gen_range(0..n)).collect())
        .collect();
    PartitionwiseMap::new(images, g.parts()).expect("in range by construction")
}

/// Maps `(phi_1, ..., phi_{k-1})` with `phi_i` of size `sizes[i-1]`, each on
/// its own labeled stream.
pub fn sample_map_vector(g: &Hypergraph, sizes: &[usize], seed: u64) -> Vec<PartitionwiseMap> {
    sizes
        .iter()
        .enumerate()
        .map(|(i, &m)| sample_map(g, m, rng::derive_seed(seed, &format!("phi_{}", i + 1))))
        .collect()
}

/// Concatenation of the per-part samples, `phi` first.
pub fn union_maps(phi: &PartitionwiseMap, other: &PartitionwiseMap) -> PartitionwiseMap {
    phi.union(other)
}

/// One coordinate of the trace vector: the color of `e` extended by fixed
/// sampled vertices.
struct Component {
    slot: usize,
    base: usize,
    /// Stride of each vertex of `e` (in member order of `I`).
    strides: Vec<usize>,
}

fn components(g: &Hypergraph, index: IndexSet, s: usize, phi: &PartitionwiseMap) -> Vec<Component> {
    let outside = IndexSet::full(g.r()).mask() & !index.mask();
    let max_j = s + 1 - index.len();
    let mut out = Vec::new();
    for jmask in IndexSet::subsets_of_mask(outside, 0, max_j) {
        let union = IndexSet::from_mask(index.mask() | jmask);
        let slot = g.slot(union).expect("|I| + |J| <= s + 1 <= k");
        let members = union.to_vec();
        // Row-major strides of the union edge.
        let mut stride = vec![0; members.len()];
        let mut acc = 1;
        for p in (0..members.len()).rev() {
            stride[p] = acc;
            acc *= g.parts()[members[p]];
        }
        let strides: Vec<usize> = index
            .members()
            .map(|i| stride[union.position_of(i).unwrap()])
            .collect();
        let jparts: Vec<usize> = members.iter().copied().filter(|i| jmask & (1 << i) != 0).collect();
        let sizes: Vec<usize> = jparts.iter().map(|&j| phi.images(j).len()).collect();
        if sizes.contains(&0) {
            continue;
        }
        // f ranges over sample-position tuples, lexicographic.
        let total: usize = sizes.iter().product();
        let mut pos = vec![0usize; jparts.len()];
        for mut t in 0..total {
            for p in (0..pos.len()).rev() {
                pos[p] = t % sizes[p];
                t /= sizes[p];
            }
            let base = jparts
                .iter()
                .zip(&pos)
                .map(|(&j, &p)| phi.images(j)[p] * stride[union.position_of(j).unwrap()])
                .sum();
            out.push(Component {
                slot,
                base,
                strides: strides.clone(),
            });
        }
    }
    out
}

/// `G /^s phi`: every edge with `|I| <= s` gets the interned color of its
/// trace vector; larger edges keep their colors. New colors are numbered
/// in order of first occurrence along the lexicographic edge order.
pub fn s_regularize(
    g: &Hypergraph,
    s: usize,
    phi: &PartitionwiseMap,
) -> Result<Hypergraph, RegularizeError> {
    let k = g.k();
    if s == 0 || s >= k {
        return Err(RegularizeError::SOutOfRange { s, k });
    }
    let phi = PartitionwiseMap::new(phi.all_images().to_vec(), g.parts())?;
    let tables: Vec<(usize, Vec<ColorId>)> = g
        .index_sets()
        .par_iter()
        .enumerate()
        .map(|(slot, &index)| {
            if index.len() > s {
                return (g.palette_at(slot), g.colors_at(slot).to_vec());
            }
            let comps = components(g, index, s, &phi);
            let mut intern: HashMap<Vec<ColorId>, ColorId> = HashMap::new();
            let mut colors = Vec::with_capacity(g.edge_count(index));
            let mut trace = Vec::with_capacity(comps.len());
            for e in g.edges(index) {
                trace.clear();
                for c in &comps {
                    let off = c.base
                        + c.strides
                            .iter()
                            .zip(&e.vertices)
                            .map(|(s, v)| s * v)
                            .sum::<usize>();
                    trace.push(g.colors_at(c.slot)[off]);
                }
                let next = intern.len() as ColorId;
                let id = *intern.entry(trace.clone()).or_insert(next);
                colors.push(id);
            }
            (intern.len(), colors)
        })
        .collect();
    let (palettes, colors) = tables.into_iter().unzip();
    Ok(Hypergraph::from_tables(
        g.r(),
        k,
        g.parts().to_vec(),
        palettes,
        colors,
    )?)
}

/// `G / (phi_1, ..., phi_{k-1})`: apply `/^{k-1} phi_{k-1}` first and
/// `/^1 phi_1` last. For `k = 1` the graph is returned unchanged.
pub fn regularize(g: &Hypergraph, maps: &[PartitionwiseMap]) -> Result<Hypergraph, RegularizeError> {
    let k = g.k();
    if maps.len() != k - 1 {
        return Err(RegularizeError::MapLength {
            expected: k - 1,
            got: maps.len(),
        });
    }
    let mut cur = g.clone();
    for s in (1..k).rev() {
        cur = s_regularize(&cur, s, &maps[s - 1])?;
    }
    Ok(cur)
}

/// `B_i(b, m) = prod_{j in [0, k-i]} b_{i+j}^{C(r-i, j) m^j}`.
pub fn color_bound(r: usize, b: &[usize], m: u64, i: usize) -> BigUint {
    color_bound_checked(r, b, &BigUint::from(m), i, u64::MAX)
        .expect("color bound too large to represent")
}

/// [`color_bound`] for arbitrary `m`, refusing (returning `None`) when the
/// result would need more than `max_bits` bits.
pub fn color_bound_checked(
    r: usize,
    b: &[usize],
    m: &BigUint,
    i: usize,
    max_bits: u64,
) -> Option<BigUint> {
    let b: Vec<BigUint> = b.iter().map(|&x| BigUint::from(x)).collect();
    color_bound_big(r, &b, m, i, max_bits)
}

fn log2_big(x: &BigUint) -> f64 {
    match x.to_f64() {
        Some(f) if f.is_finite() => f.log2(),
        _ => x.bits() as f64,
    }
}

/// [`color_bound_checked`] with big-integer palette sizes.
pub fn color_bound_big(r: usize, b: &[BigUint], m: &BigUint, i: usize, max_bits: u64) -> Option<BigUint> {
    let k = b.len();
    assert!((1..=k).contains(&i), "i must lie in [1, k]");
    assert!(k <= r);
    let mut exps = Vec::new();
    let mut bits = 0f64;
    for j in 0..=k - i {
        let base = &b[i + j - 1];
        let exp = BigUint::from(binomial(r - i, j)) * Pow::pow(m, j as u32);
        if !base.is_one() && !exp.is_zero() {
            bits += exp.to_f64().unwrap_or(f64::INFINITY) * log2_big(base);
            if bits > max_bits as f64 + 1.0 {
                return None;
            }
        }
        exps.push((base, exp));
    }
    let mut out = BigUint::one();
    for (base, exp) in exps {
        if base.is_one() || exp.is_zero() {
            continue;
        }
        out *= Pow::pow(base, exp.to_u64()?);
    }
    (out.bits() <= max_bits).then_some(out)
}

/// True when equal entries of `fine` always carry equal entries of
/// `coarse`, i.e. the partition by `fine` refines the one by `coarse`.
pub fn refines(fine: &[ColorId], coarse: &[ColorId]) -> bool {
    assert_eq!(fine.len(), coarse.len());
    let mut map: HashMap<ColorId, ColorId> = HashMap::new();
    fine.iter()
        .zip(coarse)
        .all(|(f, c)| *map.entry(*f).or_insert(*c) == *c)
}

/// Both partitions refine each other.
pub fn same_partition(a: &[ColorId], b: &[ColorId]) -> bool {
    refines(a, b) && refines(b, a)
}

/// Number of distinct colors actually used in each slot.
pub fn realized_counts(g: &Hypergraph) -> Vec<usize> {
    (0..g.index_sets().len())
        .map(|s| {
            let mut v = g.colors_at(s).to_vec();
            v.sort_unstable();
            v.dedup();
            v.len()
        })
        .collect()
}
