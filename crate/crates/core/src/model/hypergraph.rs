use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{IndexSet, ModelError, MAX_PARTS};
use crate::rng;

/// Index into an index-set-local color table.
pub type ColorId = u32;

/// An index-`I` edge: one vertex per member of `I`, listed in increasing
/// member order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub index: IndexSet,
    pub vertices: Vec<usize>,
}

impl Edge {
    pub fn new(index: IndexSet, vertices: Vec<usize>) -> Result<Self, ModelError> {
        if vertices.len() != index.len() {
            return Err(ModelError::EdgeArity {
                index,
                got: vertices.len(),
            });
        }
        Ok(Edge { index, vertices })
    }

    /// Vertex chosen in part `i`, if `i` is in the index set.
    pub fn vertex_in(&self, i: usize) -> Option<usize> {
        self.index.position_of(i).map(|p| self.vertices[p])
    }

    /// The edge `e|_J`, keeping exactly the vertices whose parts lie in `J`.
    pub fn restrict(&self, j: IndexSet) -> Result<Edge, ModelError> {
        if !j.is_subset_of(self.index) {
            return Err(ModelError::NotASubset {
                sub: j,
                sup: self.index,
            });
        }
        let vertices = j
            .members()
            .map(|i| self.vertex_in(i).expect("member of subset"))
            .collect();
        Ok(Edge { index: j, vertices })
    }
}

/// `e|_J`. Free-function form of [`Edge::restrict`].
pub fn restrict_edge(e: &Edge, j: IndexSet) -> Result<Edge, ModelError> {
    e.restrict(j)
}

/// Colors of all restrictions `e|_J`, `J` ranging over the nonempty subsets
/// of the index set in canonical order. The last entry is the color of the
/// edge itself; everything before it is the frame color.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TotalColor {
    pub index: IndexSet,
    pub entries: Vec<ColorId>,
}

impl TotalColor {
    pub fn new(index: IndexSet, entries: Vec<ColorId>) -> Result<Self, ModelError> {
        let expected = (1usize << index.len()) - 1;
        if entries.len() != expected {
            return Err(ModelError::TotalColorLength {
                index,
                expected,
                got: entries.len(),
            });
        }
        Ok(TotalColor { index, entries })
    }

    pub fn frame(&self) -> &[ColorId] {
        &self.entries[..self.entries.len() - 1]
    }

    pub fn top(&self) -> ColorId {
        *self.entries.last().expect("total colors are nonempty")
    }

    /// Sub-sequence over the subsets of `j`.
    pub fn restrict(&self, j: IndexSet) -> Result<TotalColor, ModelError> {
        if !j.is_subset_of(self.index) {
            return Err(ModelError::NotASubset {
                sub: j,
                sup: self.index,
            });
        }
        let entries = self
            .index
            .nonempty_subsets()
            .into_iter()
            .zip(&self.entries)
            .filter(|(s, _)| s.is_subset_of(j))
            .map(|(_, &c)| c)
            .collect();
        Ok(TotalColor { index: j, entries })
    }

    /// Same frame, different top color.
    pub fn with_top(&self, top: ColorId) -> TotalColor {
        let mut entries = self.entries.clone();
        *entries.last_mut().unwrap() = top;
        TotalColor {
            index: self.index,
            entries,
        }
    }
}

/// A `k`-bounded colored `r`-partite hypergraph with dense coloring tables.
///
/// Every index set `I` with `1 <= |I| <= k` owns a slot holding its palette
/// size and a flat array of colors in row-major lexicographic tuple order
/// (the lowest part index is the most significant coordinate).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    r: usize,
    k: usize,
    parts: Vec<usize>,
    index_sets: Vec<IndexSet>,
    slot_of: Vec<u32>,
    palettes: Vec<usize>,
    colors: Vec<Vec<ColorId>>,
}

const NO_SLOT: u32 = u32::MAX;

impl Hypergraph {
    /// Builds a hypergraph from dense per-slot tables, in the canonical slot
    /// order of [`IndexSet::all_up_to`]. Palettes may differ between index
    /// sets of equal size (regularized graphs intern their own tables).
    pub fn from_tables(
        r: usize,
        k: usize,
        parts: Vec<usize>,
        palettes: Vec<usize>,
        colors: Vec<Vec<ColorId>>,
    ) -> Result<Self, ModelError> {
        check_shape(r, k, &parts)?;
        let index_sets = IndexSet::all_up_to(r, k);
        if palettes.len() != index_sets.len() || colors.len() != index_sets.len() {
            return Err(ModelError::SlotCount {
                expected: index_sets.len(),
                got: palettes.len().min(colors.len()),
            });
        }
        let mut slot_of = vec![NO_SLOT; 1 << r];
        for (s, idx) in index_sets.iter().enumerate() {
            slot_of[idx.mask() as usize] = s as u32;
        }
        for (s, idx) in index_sets.iter().enumerate() {
            if palettes[s] == 0 {
                return Err(ModelError::EmptyPalette(*idx));
            }
            let expected: usize = idx.members().map(|i| parts[i]).product();
            if colors[s].len() != expected {
                return Err(ModelError::IncompleteColoring {
                    index: *idx,
                    expected,
                    got: colors[s].len(),
                });
            }
            if let Some(&bad) = colors[s].iter().find(|&&c| c as usize >= palettes[s]) {
                return Err(ModelError::ColorOutOfRange {
                    index: *idx,
                    color: bad,
                    palette: palettes[s],
                });
            }
        }
        Ok(Hypergraph {
            r,
            k,
            parts,
            index_sets,
            slot_of,
            palettes,
            colors,
        })
    }

    /// Every index-`I` edge colored with color 0, palettes from `b`.
    pub fn constant(r: usize, k: usize, parts: Vec<usize>, b: &[usize]) -> Result<Self, ModelError> {
        check_shape(r, k, &parts)?;
        check_b(k, b)?;
        let index_sets = IndexSet::all_up_to(r, k);
        let palettes = index_sets.iter().map(|i| b[i.len() - 1]).collect();
        let colors = index_sets
            .iter()
            .map(|i| vec![0; i.members().map(|p| parts[p]).product()])
            .collect();
        Hypergraph::from_tables(r, k, parts, palettes, colors)
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// All colored index sets in canonical order (slot order).
    pub fn index_sets(&self) -> &[IndexSet] {
        &self.index_sets
    }

    pub fn slot(&self, index: IndexSet) -> Option<usize> {
        let m = index.mask() as usize;
        match self.slot_of.get(m) {
            Some(&s) if s != NO_SLOT => Some(s as usize),
            _ => None,
        }
    }

    fn expect_slot(&self, index: IndexSet) -> usize {
        self.slot(index)
            .unwrap_or_else(|| panic!("index set {index:?} is not colored in this hypergraph"))
    }

    /// `|C_I|`.
    pub fn palette(&self, index: IndexSet) -> usize {
        self.palettes[self.expect_slot(index)]
    }

    pub fn palette_at(&self, slot: usize) -> usize {
        self.palettes[slot]
    }

    /// The `b` vector when all index sets of equal size share a palette size.
    pub fn b_vector(&self) -> Option<Vec<usize>> {
        let mut b = vec![None; self.k];
        for (s, idx) in self.index_sets.iter().enumerate() {
            let slot = &mut b[idx.len() - 1];
            match *slot {
                None => *slot = Some(self.palettes[s]),
                Some(p) if p != self.palettes[s] => return None,
                _ => {}
            }
        }
        b.into_iter().collect()
    }

    /// Number of index-`I` edges, `prod_{i in I} |Omega_i|`.
    pub fn edge_count(&self, index: IndexSet) -> usize {
        index.members().map(|i| self.parts[i]).product()
    }

    /// Flat colors of slot `slot`, lexicographic tuple order.
    pub fn colors_at(&self, slot: usize) -> &[ColorId] {
        &self.colors[slot]
    }

    pub fn colors_of(&self, index: IndexSet) -> &[ColorId] {
        &self.colors[self.expect_slot(index)]
    }

    /// Row-major offset of an edge inside its slot.
    pub fn offset(&self, index: IndexSet, vertices: &[usize]) -> usize {
        index
            .members()
            .zip(vertices)
            .fold(0, |acc, (i, &v)| acc * self.parts[i] + v)
    }

    /// Inverse of [`Hypergraph::offset`].
    pub fn edge_at(&self, index: IndexSet, mut offset: usize) -> Edge {
        let members = index.to_vec();
        let mut vertices = vec![0; members.len()];
        for (pos, &i) in members.iter().enumerate().rev() {
            vertices[pos] = offset % self.parts[i];
            offset /= self.parts[i];
        }
        Edge { index, vertices }
    }

    pub fn validate_edge(&self, e: &Edge) -> Result<(), ModelError> {
        if self.slot(e.index).is_none() {
            return Err(ModelError::IndexTooLarge {
                index: e.index,
                k: self.k,
            });
        }
        if e.vertices.len() != e.index.len() {
            return Err(ModelError::EdgeArity {
                index: e.index,
                got: e.vertices.len(),
            });
        }
        for (i, &v) in e.index.members().zip(&e.vertices) {
            if v >= self.parts[i] {
                return Err(ModelError::VertexOutOfRange {
                    part: i,
                    vertex: v,
                    size: self.parts[i],
                });
            }
        }
        Ok(())
    }

    /// `G(e)`. Panics on an edge not valid in this graph.
    pub fn color(&self, e: &Edge) -> ColorId {
        let slot = self.expect_slot(e.index);
        self.colors[slot][self.offset(e.index, &e.vertices)]
    }

    /// `G<e>`: colors of every restriction of `e`, canonical order.
    pub fn total_color(&self, e: &Edge) -> TotalColor {
        let entries = e
            .index
            .nonempty_subsets()
            .into_iter()
            .map(|j| self.color(&e.restrict(j).expect("subset")))
            .collect();
        TotalColor {
            index: e.index,
            entries,
        }
    }

    /// All index-`I` edges in lexicographic order.
    pub fn edges(&self, index: IndexSet) -> EdgeIter<'_> {
        EdgeIter {
            graph: self,
            index,
            next: 0,
            total: self.edge_count(index),
        }
    }

    /// Distinct total colors realized on index set `I`, sorted.
    pub fn realized_total_colors(&self, index: IndexSet) -> Vec<TotalColor> {
        let mut seen: Vec<TotalColor> = self
            .edges(index)
            .map(|e| self.total_color(&e))
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        seen.sort();
        seen
    }

    /// Replaces the colors of one slot. Used by recoloring procedures.
    pub(crate) fn set_slot_colors(&mut self, slot: usize, colors: Vec<ColorId>) {
        assert_eq!(colors.len(), self.colors[slot].len());
        assert!(colors.iter().all(|&c| (c as usize) < self.palettes[slot]));
        self.colors[slot] = colors;
    }
}

/// `enumerate_edges`: the stream of index-`I` edges in lexicographic order.
pub fn enumerate_edges(g: &Hypergraph, index: IndexSet) -> Result<EdgeIter<'_>, ModelError> {
    if g.slot(index).is_none() {
        return Err(ModelError::IndexTooLarge { index, k: g.k() });
    }
    Ok(g.edges(index))
}

pub struct EdgeIter<'a> {
    graph: &'a Hypergraph,
    index: IndexSet,
    next: usize,
    total: usize,
}

impl Iterator for EdgeIter<'_> {
    type Item = Edge;

    fn next(&mut self) -> Option<Edge> {
        if self.next >= self.total {
            return None;
        }
        let e = self.graph.edge_at(self.index, self.next);
        self.next += 1;
        Some(e)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.total - self.next;
        (left, Some(left))
    }
}

impl ExactSizeIterator for EdgeIter<'_> {}

fn check_shape(r: usize, k: usize, parts: &[usize]) -> Result<(), ModelError> {
    if r == 0 || r > MAX_PARTS {
        return Err(ModelError::TooManyParts(r));
    }
    if k == 0 {
        return Err(ModelError::ZeroBound);
    }
    if k > r {
        return Err(ModelError::KExceedsR { k, r });
    }
    if parts.len() != r {
        return Err(ModelError::PartCount {
            expected: r,
            got: parts.len(),
        });
    }
    if let Some(i) = parts.iter().position(|&n| n == 0) {
        return Err(ModelError::EmptyPart(i));
    }
    Ok(())
}

fn check_b(k: usize, b: &[usize]) -> Result<(), ModelError> {
    if b.len() != k {
        return Err(ModelError::BVectorLength {
            expected: k,
            got: b.len(),
        });
    }
    if b.contains(&0) {
        return Err(ModelError::ZeroPalette);
    }
    Ok(())
}

/// Input of [`build_hypergraph`]: palettes per index set plus a list of
/// explicit color assignments, one per edge.
#[derive(Clone, Debug, Default)]
pub struct HypergraphSpec {
    pub r: usize,
    pub k: usize,
    pub parts: Vec<usize>,
    pub palettes: BTreeMap<IndexSet, usize>,
    pub assignments: Vec<(Edge, ColorId)>,
}

/// Validates a [`HypergraphSpec`] into a [`Hypergraph`].
///
/// Rejects `k > r`, palettes that differ between index sets of the same
/// size, duplicate assignments and uncolored tuples.
pub fn build_hypergraph(spec: &HypergraphSpec) -> Result<Hypergraph, ModelError> {
    check_shape(spec.r, spec.k, &spec.parts)?;
    let index_sets = IndexSet::all_up_to(spec.r, spec.k);
    let mut palettes = Vec::with_capacity(index_sets.len());
    let mut by_size: Vec<Option<usize>> = vec![None; spec.k];
    for idx in &index_sets {
        let p = *spec
            .palettes
            .get(idx)
            .ok_or(ModelError::MissingPalette(*idx))?;
        match by_size[idx.len() - 1] {
            None => by_size[idx.len() - 1] = Some(p),
            Some(q) if q != p => {
                return Err(ModelError::InconsistentB {
                    size: idx.len(),
                    first: q,
                    other: p,
                    index: *idx,
                })
            }
            _ => {}
        }
        palettes.push(p);
    }
    if let Some(extra) = spec.palettes.keys().find(|i| !index_sets.contains(i)) {
        return Err(ModelError::IndexTooLarge {
            index: *extra,
            k: spec.k,
        });
    }

    let shell = Hypergraph::constant(
        spec.r,
        spec.k,
        spec.parts.clone(),
        &by_size.iter().map(|p| p.unwrap_or(1)).collect::<Vec<_>>(),
    )?;
    let mut colors: Vec<Vec<Option<ColorId>>> = index_sets
        .iter()
        .map(|i| vec![None; shell.edge_count(*i)])
        .collect();
    for (e, c) in &spec.assignments {
        shell.validate_edge(e)?;
        let slot = shell.slot(e.index).expect("validated");
        if *c as usize >= palettes[slot] {
            return Err(ModelError::ColorOutOfRange {
                index: e.index,
                color: *c,
                palette: palettes[slot],
            });
        }
        let cell = &mut colors[slot][shell.offset(e.index, &e.vertices)];
        if cell.is_some() {
            return Err(ModelError::DuplicateAssignment(e.clone()));
        }
        *cell = Some(*c);
    }
    let mut dense = Vec::with_capacity(colors.len());
    for (slot, table) in colors.into_iter().enumerate() {
        let idx = index_sets[slot];
        let mut out = Vec::with_capacity(table.len());
        for (off, c) in table.into_iter().enumerate() {
            match c {
                Some(c) => out.push(c),
                None => {
                    return Err(ModelError::MissingColor(shell.edge_at(idx, off)));
                }
            }
        }
        dense.push(out);
    }
    Hypergraph::from_tables(spec.r, spec.k, spec.parts.clone(), palettes, dense)
}

/// Every edge colored independently and uniformly from its palette `b_{|I|}`.
/// Bit-reproducible for a fixed seed.
pub fn random_hypergraph(
    r: usize,
    k: usize,
    b: &[usize],
    parts: &[usize],
    seed: u64,
) -> Result<Hypergraph, ModelError> {
    check_shape(r, k, parts)?;
    check_b(k, b)?;
    let mut rng = rng::stream(seed, "random_hypergraph");
    let index_sets = IndexSet::all_up_to(r, k);
    let palettes: Vec<usize> = index_sets.iter().map(|i| b[i.len() - 1]).collect();
    let colors = index_sets
        .iter()
        .zip(&palettes)
        .map(|(i, &p)| {
            let n: usize = i.members().map(|m| parts[m]).product();
            (0..n).map(|_| rng.gen_range(0..p) as ColorId).collect()
        })
        .collect();
    Hypergraph::from_tables(r, k, parts.to_vec(), palettes, colors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(m: &[usize]) -> IndexSet {
        IndexSet::new(m).unwrap()
    }

    fn black_graph_spec() -> HypergraphSpec {
        let mut spec = HypergraphSpec {
            r: 2,
            k: 2,
            parts: vec![2, 2],
            ..Default::default()
        };
        spec.palettes.insert(set(&[0]), 1);
        spec.palettes.insert(set(&[1]), 1);
        spec.palettes.insert(set(&[0, 1]), 2);
        for i in 0..2 {
            for p in 0..2 {
                spec.assignments
                    .push((Edge::new(set(&[p]), vec![i]).unwrap(), 0));
            }
            for j in 0..2 {
                spec.assignments
                    .push((Edge::new(set(&[0, 1]), vec![i, j]).unwrap(), 0));
            }
        }
        spec
    }

    #[test]
    fn builds_constant_black_graph() {
        let g = build_hypergraph(&black_graph_spec()).unwrap();
        assert_eq!(g.b_vector(), Some(vec![1, 2]));
        assert!(g.colors_of(set(&[0, 1])).iter().all(|&c| c == 0));
    }

    #[test]
    fn incomplete_coloring_is_rejected() {
        let mut spec = black_graph_spec();
        spec.assignments.pop();
        let err = build_hypergraph(&spec).unwrap_err();
        assert!(matches!(err, ModelError::MissingColor(_)), "{err}");
        assert!(err.to_string().contains("incomplete coloring"));
    }

    #[test]
    fn duplicate_assignment_is_rejected() {
        let mut spec = black_graph_spec();
        let dup = spec.assignments[0].clone();
        spec.assignments.push(dup);
        assert!(matches!(
            build_hypergraph(&spec),
            Err(ModelError::DuplicateAssignment(_))
        ));
    }

    #[test]
    fn inconsistent_b_is_rejected() {
        let mut spec = black_graph_spec();
        spec.palettes.insert(set(&[1]), 2);
        assert!(matches!(
            build_hypergraph(&spec),
            Err(ModelError::InconsistentB { .. })
        ));
    }

    #[test]
    fn k_exceeding_r_is_rejected() {
        let spec = HypergraphSpec {
            r: 1,
            k: 2,
            parts: vec![3],
            ..Default::default()
        };
        let err = build_hypergraph(&spec).unwrap_err();
        assert!(err.to_string().contains("k exceeds r"));
    }

    #[test]
    fn restriction_keeps_selected_parts() {
        let e = Edge::new(set(&[1, 3, 5]), vec![10, 30, 50]).unwrap();
        let r = e.restrict(set(&[1, 5])).unwrap();
        assert_eq!(r.vertices, vec![10, 50]);
        assert_eq!(e.restrict(e.index).unwrap(), e);
        let e13 = Edge::new(set(&[1, 3]), vec![0, 0]).unwrap();
        assert!(e13.restrict(set(&[2])).is_err());
    }

    #[test]
    fn total_color_lengths() {
        let g = random_hypergraph(3, 3, &[2, 2, 2], &[2, 2, 2], 7).unwrap();
        let v = g.edges(set(&[1])).next().unwrap();
        assert_eq!(g.total_color(&v).entries.len(), 1);
        let p = g.edges(set(&[0, 2])).next().unwrap();
        assert_eq!(g.total_color(&p).entries.len(), 3);
        let t = g.edges(set(&[0, 1, 2])).next().unwrap();
        assert_eq!(g.total_color(&t).entries.len(), 7);
    }

    #[test]
    fn constant_graph_has_one_total_color() {
        let g = Hypergraph::constant(3, 2, vec![3, 2, 4], &[1, 2]).unwrap();
        for idx in g.index_sets() {
            assert_eq!(g.realized_total_colors(*idx).len(), 1);
        }
    }

    #[test]
    fn edge_enumeration_counts_and_order() {
        let g = Hypergraph::constant(2, 2, vec![2, 3], &[1, 1]).unwrap();
        let edges: Vec<Edge> = g.edges(set(&[0, 1])).collect();
        assert_eq!(edges.len(), 6);
        assert_eq!(edges[0].vertices, vec![0, 0]);
        assert_eq!(edges[1].vertices, vec![0, 1]);
        assert_eq!(edges[5].vertices, vec![1, 2]);
        let again: Vec<Edge> = g.edges(set(&[0, 1])).collect();
        assert_eq!(edges, again);

        let g5 = Hypergraph::constant(1, 1, vec![5], &[1]).unwrap();
        assert_eq!(g5.edges(set(&[0])).count(), 5);
    }

    #[test]
    fn random_graph_is_reproducible() {
        let a = random_hypergraph(3, 2, &[2, 3], &[3, 4, 2], 99).unwrap();
        let b = random_hypergraph(3, 2, &[2, 3], &[3, 4, 2], 99).unwrap();
        assert_eq!(a, b);
        let c = random_hypergraph(3, 2, &[2, 3], &[3, 4, 2], 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_color_palette_ignores_seed() {
        let a = random_hypergraph(2, 2, &[1, 1], &[4, 4], 1).unwrap();
        let b = random_hypergraph(2, 2, &[1, 1], &[4, 4], 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_colors_are_near_uniform() {
        // 64*64 pair edges, b_2 = 2: black count ~ Bin(4096, 1/2), sd = 32.
        let g = random_hypergraph(2, 2, &[1, 2], &[64, 64], 2024).unwrap();
        let ones = g.colors_of(set(&[0, 1])).iter().filter(|&&c| c == 1).count() as f64;
        assert!((ones - 2048.0).abs() <= 4.0 * 32.0, "ones = {ones}");
    }

    #[test]
    fn total_color_restriction_matches_restricted_edge() {
        let g = random_hypergraph(4, 3, &[2, 2, 3], &[2, 3, 2, 2], 5).unwrap();
        for e in g.edges(set(&[0, 2, 3])) {
            let tc = g.total_color(&e);
            for j in e.index.nonempty_subsets() {
                assert_eq!(
                    tc.restrict(j).unwrap(),
                    g.total_color(&e.restrict(j).unwrap())
                );
            }
        }
    }
}
