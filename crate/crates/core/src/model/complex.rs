use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ColorId, Hypergraph, IndexSet, ModelError, Pattern, TotalColor};

/// An edge of a complex: one position in `0..h` per member of the index set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComplexEdge {
    pub index: IndexSet,
    pub positions: Vec<usize>,
}

impl ComplexEdge {
    pub fn restrict(&self, j: IndexSet) -> ComplexEdge {
        assert!(j.is_subset_of(self.index));
        ComplexEdge {
            index: j,
            positions: j
                .members()
                .map(|i| self.positions[self.index.position_of(i).unwrap()])
                .collect(),
        }
    }

    /// Pattern variables of this edge under the `i * h + p` layout.
    pub fn vars(&self, h: usize) -> Vec<usize> {
        self.index
            .members()
            .zip(&self.positions)
            .map(|(i, &p)| i * h + p)
            .collect()
    }
}

/// A small `s`-bounded colored pattern with `h` vertices per part.
///
/// Edge colors are local ids (`None` is the invisible color). The binding
/// maps each local id of index set `I` to a color of the host's `C_I`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplicialComplex {
    r: usize,
    s: usize,
    h: usize,
    index_sets: Vec<IndexSet>,
    colors: Vec<Vec<Option<u32>>>,
    binding: Vec<Vec<ColorId>>,
}

impl SimplicialComplex {
    /// `colors[slot]` has `h^{|I|}` entries in row-major position order;
    /// slots follow [`IndexSet::all_up_to`]`(r, s)`.
    pub fn new(
        r: usize,
        s: usize,
        h: usize,
        colors: Vec<Vec<Option<u32>>>,
        binding: Vec<Vec<ColorId>>,
    ) -> Result<Self, ModelError> {
        if s > r || h == 0 {
            return Err(ModelError::ComplexShape(format!(
                "need s <= r and h >= 1 (r = {r}, s = {s}, h = {h})"
            )));
        }
        let index_sets = if s == 0 {
            Vec::new()
        } else {
            IndexSet::all_up_to(r, s)
        };
        if colors.len() != index_sets.len() || binding.len() != index_sets.len() {
            return Err(ModelError::ComplexShape(format!(
                "expected {} slots",
                index_sets.len()
            )));
        }
        for (slot, idx) in index_sets.iter().enumerate() {
            if colors[slot].len() != h.pow(idx.len() as u32) {
                return Err(ModelError::ComplexShape(format!(
                    "index set {idx:?} needs {} entries",
                    h.pow(idx.len() as u32)
                )));
            }
            if let Some(c) = colors[slot]
                .iter()
                .flatten()
                .find(|&&c| c as usize >= binding[slot].len())
            {
                return Err(ModelError::ComplexShape(format!(
                    "local color {c} of {idx:?} has no binding"
                )));
            }
        }
        Ok(SimplicialComplex {
            r,
            s,
            h,
            index_sets,
            colors,
            binding,
        })
    }

    /// Visible colors given directly as host colors (the binding is the
    /// identity on the host table of each index set).
    pub fn from_host_colors(
        g: &Hypergraph,
        s: usize,
        h: usize,
        colors: Vec<Vec<Option<ColorId>>>,
    ) -> Result<Self, ModelError> {
        let index_sets = if s == 0 {
            Vec::new()
        } else {
            IndexSet::all_up_to(g.r(), s)
        };
        let binding = index_sets
            .iter()
            .map(|i| match g.slot(*i) {
                Some(slot) => (0..g.palette_at(slot) as ColorId).collect(),
                None => Vec::new(),
            })
            .collect();
        SimplicialComplex::new(g.r(), s, h, colors, binding)
    }

    /// Every edge invisible.
    pub fn invisible(r: usize, s: usize, h: usize) -> Self {
        let index_sets = if s == 0 {
            Vec::new()
        } else {
            IndexSet::all_up_to(r, s)
        };
        let colors = index_sets
            .iter()
            .map(|i| vec![None; h.pow(i.len() as u32)])
            .collect();
        let binding = vec![Vec::new(); index_sets.len()];
        SimplicialComplex::new(r, s, h, colors, binding).expect("well-formed")
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn index_sets(&self) -> &[IndexSet] {
        &self.index_sets
    }

    fn slot(&self, index: IndexSet) -> Option<usize> {
        self.index_sets.binary_search(&index).ok()
    }

    fn offset(&self, e: &ComplexEdge) -> usize {
        e.positions.iter().fold(0, |acc, &p| acc * self.h + p)
    }

    fn edge_at(&self, index: IndexSet, mut off: usize) -> ComplexEdge {
        let mut positions = vec![0; index.len()];
        for p in positions.iter_mut().rev() {
            *p = off % self.h;
            off /= self.h;
        }
        ComplexEdge { index, positions }
    }

    /// Local color, `None` when invisible.
    pub fn local_color(&self, e: &ComplexEdge) -> Option<u32> {
        let slot = self.slot(e.index)?;
        self.colors[slot][self.offset(e)]
    }

    /// Host color of a visible edge.
    pub fn host_color(&self, e: &ComplexEdge) -> Option<ColorId> {
        let slot = self.slot(e.index)?;
        self.colors[slot][self.offset(e)].map(|c| self.binding[slot][c as usize])
    }

    pub fn set_local_color(&mut self, e: &ComplexEdge, c: Option<u32>) {
        let slot = self.slot(e.index).expect("index set within bound");
        let off = self.offset(e);
        self.colors[slot][off] = c;
    }

    /// All edges of index `I`, lexicographic position order.
    pub fn edges(&self, index: IndexSet) -> Vec<ComplexEdge> {
        (0..self.h.pow(index.len() as u32))
            .map(|off| self.edge_at(index, off))
            .collect()
    }

    /// `V_I(S)`.
    pub fn visible_edges(&self, index: IndexSet) -> Vec<ComplexEdge> {
        match self.slot(index) {
            None => Vec::new(),
            Some(slot) => self.colors[slot]
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_some())
                .map(|(off, _)| self.edge_at(index, off))
                .collect(),
        }
    }

    /// `V(S)` in canonical index order.
    pub fn all_visible(&self) -> Vec<ComplexEdge> {
        self.index_sets
            .iter()
            .flat_map(|i| self.visible_edges(*i))
            .collect()
    }

    /// `V_i(S)` for edges of size `size`.
    pub fn visible_of_size(&self, size: usize) -> Vec<ComplexEdge> {
        self.index_sets
            .iter()
            .filter(|i| i.len() == size)
            .flat_map(|i| self.visible_edges(*i))
            .collect()
    }

    /// `S<e>` in host colors. Requires every restriction of `e` to be
    /// visible, which holds in a valid complex whenever `e` is visible.
    pub fn total_color(&self, e: &ComplexEdge) -> Option<TotalColor> {
        let entries = e
            .index
            .nonempty_subsets()
            .into_iter()
            .map(|j| self.host_color(&e.restrict(j)))
            .collect::<Option<Vec<_>>>()?;
        Some(TotalColor {
            index: e.index,
            entries,
        })
    }

    /// The constraint set `G(phi(e)) = S(e)` for the given visible edges.
    pub fn pattern_for(&self, g: &Hypergraph, edges: &[ComplexEdge]) -> Pattern {
        let mut p = Pattern::per_part(g, self.h);
        for e in edges {
            let c = self.host_color(e).expect("visible edge");
            p.require(g, e.index, &e.vars(self.h), c);
        }
        p
    }

    /// Constraints for all of `V(S)`.
    pub fn pattern(&self, g: &Hypergraph) -> Pattern {
        self.pattern_for(g, &self.all_visible())
    }

    /// Number of vertices of `S` (`r * h`).
    pub fn vertex_count(&self) -> usize {
        self.r * self.h
    }
}

/// Outcome of [`validate_complex`]. Violations are listed, never raised.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    /// Shape problems that prevent any further checking.
    pub shape: Vec<String>,
    /// `(invisible e, visible e*)` with `e` contained in `e*`.
    pub closure_violations: Vec<(ComplexEdge, ComplexEdge)>,
    /// `(I, local color a, local color b, host color)` with `a != b` bound
    /// to the same host color.
    pub injectivity_violations: Vec<(IndexSet, u32, u32, ColorId)>,
    /// `(I, local color, host color)` with the host color outside `C_I(G)`.
    pub range_violations: Vec<(IndexSet, u32, ColorId)>,
    /// `V_I(S)` per index set.
    pub visible: BTreeMap<IndexSet, Vec<ComplexEdge>>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.shape.is_empty()
            && self.closure_violations.is_empty()
            && self.injectivity_violations.is_empty()
            && self.range_violations.is_empty()
    }

    pub fn visible_count(&self) -> usize {
        self.visible.values().map(Vec::len).sum()
    }
}

/// Checks that invisibility is upward-closed and that visible colors bind
/// injectively into the host tables.
pub fn validate_complex(s: &SimplicialComplex, g: &Hypergraph) -> ValidityReport {
    let mut report = ValidityReport::default();
    if s.r() != g.r() {
        report
            .shape
            .push(format!("complex has {} parts, host has {}", s.r(), g.r()));
        return report;
    }
    if s.s() > g.k() {
        report
            .shape
            .push(format!("complex bound {} exceeds host bound {}", s.s(), g.k()));
        return report;
    }
    for (slot, idx) in s.index_sets.iter().enumerate() {
        let visible = s.visible_edges(*idx);
        for e in &visible {
            for j in idx.proper_subsets() {
                let sub = e.restrict(j);
                if s.local_color(&sub).is_none() {
                    report.closure_violations.push((sub, e.clone()));
                }
            }
        }
        if !visible.is_empty() {
            report.visible.insert(*idx, visible);
        }

        let palette = g.palette(*idx);
        let used: std::collections::BTreeSet<u32> = s.colors[slot].iter().flatten().copied().collect();
        let mut seen: BTreeMap<ColorId, u32> = BTreeMap::new();
        for a in used {
            let host = s.binding[slot][a as usize];
            if host as usize >= palette {
                report.range_violations.push((*idx, a, host));
            }
            if let Some(&b) = seen.get(&host) {
                report.injectivity_violations.push((*idx, b, a, host));
            } else {
                seen.insert(host, a);
            }
        }
    }
    report.closure_violations.sort();
    report.closure_violations.dedup();
    report
}
