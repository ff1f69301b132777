use rand::Rng;
use sha2::{Digest, Sha256};

use crate::model::{ColorId, Hypergraph, IndexSet, SimplicialComplex};
use crate::rng;

struct Slots {
    index_sets: Vec<IndexSet>,
    palettes: Vec<usize>,
    h: usize,
}

impl Slots {
    fn new(g: &Hypergraph, s: usize, h: usize) -> Self {
        let index_sets = if s == 0 { Vec::new() } else { IndexSet::all_up_to(g.r(), s) };
        let palettes = index_sets.iter().map(|i| g.palette(*i)).collect();
        Slots { index_sets, palettes, h }
    }

    /// Flat `(slot, offset)` list in canonical order: smaller index sets
    /// first, so every proper face precedes the edges above it.
    fn cells(&self) -> Vec<(usize, usize)> {
        self.index_sets
            .iter()
            .enumerate()
            .flat_map(|(slot, i)| (0..self.h.pow(i.len() as u32)).map(move |off| (slot, off)))
            .collect()
    }

    /// Offsets (within their slots) of the proper faces of an edge.
    fn faces(&self, slot: usize, off: usize) -> Vec<(usize, usize)> {
        let idx = self.index_sets[slot];
        let mut positions = vec![0; idx.len()];
        let mut o = off;
        for p in positions.iter_mut().rev() {
            *p = o % self.h;
            o /= self.h;
        }
        idx.proper_subsets()
            .into_iter()
            .map(|j| {
                let sub_slot = self.index_sets.binary_search(&j).unwrap();
                let sub_off = j
                    .members()
                    .map(|m| positions[idx.position_of(m).unwrap()])
                    .fold(0, |acc, p| acc * self.h + p);
                (sub_slot, sub_off)
            })
            .collect()
    }

    fn empty(&self) -> Vec<Vec<Option<ColorId>>> {
        self.index_sets
            .iter()
            .map(|i| vec![None; self.h.pow(i.len() as u32)])
            .collect()
    }
}

/// Number of raw colorings (before the closure filter) of `s`-bounded
/// complexes with `h` vertices per part over the host tables, saturating.
pub fn exhaustive_family_size(g: &Hypergraph, s: usize, h: usize) -> u128 {
    let slots = Slots::new(g, s, h);
    slots.cells().iter().fold(1u128, |acc, &(slot, _)| {
        acc.saturating_mul(slots.palettes[slot] as u128 + 1)
    })
}

/// Every valid `s`-bounded complex with `h` vertices per part whose visible
/// colors are host colors, or `None` when the raw count exceeds `limit`.
pub fn exhaustive_family(g: &Hypergraph, s: usize, h: usize, limit: u128) -> Option<Vec<SimplicialComplex>> {
    if exhaustive_family_size(g, s, h) > limit {
        return None;
    }
    let slots = Slots::new(g, s, h);
    let cells = slots.cells();
    let faces: Vec<Vec<(usize, usize)>> = cells.iter().map(|&(sl, off)| slots.faces(sl, off)).collect();
    let mut out = Vec::new();
    let mut cur = slots.empty();
    fn rec(
        pos: usize,
        cells: &[(usize, usize)],
        faces: &[Vec<(usize, usize)>],
        slots: &Slots,
        cur: &mut Vec<Vec<Option<ColorId>>>,
        g: &Hypergraph,
        s: usize,
        out: &mut Vec<SimplicialComplex>,
    ) {
        if pos == cells.len() {
            out.push(SimplicialComplex::from_host_colors(g, s, slots.h, cur.clone()).expect("well-formed"));
            return;
        }
        let (slot, off) = cells[pos];
        cur[slot][off] = None;
        rec(pos + 1, cells, faces, slots, cur, g, s, out);
        if faces[pos].iter().all(|&(a, b)| cur[a][b].is_some()) {
            for c in 0..slots.palettes[slot] as ColorId {
                cur[slot][off] = Some(c);
                rec(pos + 1, cells, faces, slots, cur, g, s, out);
            }
            cur[slot][off] = None;
        }
    }
    rec(0, &cells, &faces, &slots, &mut cur, g, s, &mut out);
    Some(out)
}

/// `count` random valid complexes: each edge whose faces are all visible is
/// visible with probability 3/4, in a uniform host color.
pub fn sampled_family(g: &Hypergraph, s: usize, h: usize, count: usize, seed: u64) -> Vec<SimplicialComplex> {
    let slots = Slots::new(g, s, h);
    let cells = slots.cells();
    let faces: Vec<Vec<(usize, usize)>> = cells.iter().map(|&(sl, off)| slots.faces(sl, off)).collect();
    let mut rng = rng::stream(seed, "sampled_family");
    (0..count)
        .map(|_| {
            let mut cur = slots.empty();
            for (pos, &(slot, off)) in cells.iter().enumerate() {
                if faces[pos].iter().all(|&(a, b)| cur[a][b].is_some()) && rng.gen_bool(0.75) {
                    cur[slot][off] = Some(rng.gen_range(0..slots.palettes[slot]) as ColorId);
                }
            }
            SimplicialComplex::from_host_colors(g, s, h, cur).expect("well-formed")
        })
        .collect()
}

/// Hex sha256 of the JSON serialization of the family.
pub fn family_digest(family: &[SimplicialComplex]) -> String {
    let bytes = serde_json::to_vec(family).expect("serializable");
    hex::encode(Sha256::digest(&bytes))
}
