use rand::Rng;

use super::{ColorId, Hypergraph, IndexSet};

/// One color requirement `G(edge) = color`, where the edge is assembled from
/// assignment variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub index: IndexSet,
    slot: usize,
    /// `(variable, stride)` pairs; the row-major offset of the edge is the
    /// stride-weighted sum of the assigned vertices.
    terms: Vec<(usize, usize)>,
    pub color: ColorId,
}

impl Constraint {
    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().map(|&(v, _)| v)
    }

    #[inline]
    pub fn holds(&self, g: &Hypergraph, assignment: &[usize]) -> bool {
        let off: usize = self.terms.iter().map(|&(v, s)| assignment[v] * s).sum();
        g.colors_at(self.slot)[off] == self.color
    }
}

/// A conjunction of color constraints over variables ranging over host
/// parts. Counting and sampling run over the full product space.
#[derive(Clone, Debug)]
pub struct Pattern {
    var_parts: Vec<usize>,
    radices: Vec<usize>,
    constraints: Vec<Constraint>,
}

impl Pattern {
    /// Variables `0..var_parts.len()`; variable `v` ranges over the vertices
    /// of part `var_parts[v]`.
    pub fn new(g: &Hypergraph, var_parts: Vec<usize>) -> Self {
        let radices = var_parts.iter().map(|&p| g.parts()[p]).collect();
        Pattern {
            var_parts,
            radices,
            constraints: Vec::new(),
        }
    }

    /// `h` variables per part, variable `i * h + p` for position `p` of part `i`.
    pub fn per_part(g: &Hypergraph, h: usize) -> Self {
        let var_parts = (0..g.r()).flat_map(|i| std::iter::repeat_n(i, h)).collect();
        Pattern::new(g, var_parts)
    }

    pub fn var_count(&self) -> usize {
        self.radices.len()
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Requires `G(e) = color` where `e` takes vertex `vars[j]` in the j-th
    /// member of `index`.
    pub fn require(&mut self, g: &Hypergraph, index: IndexSet, vars: &[usize], color: ColorId) {
        assert_eq!(vars.len(), index.len());
        let slot = g.slot(index).expect("index set colored in host");
        let members = index.to_vec();
        let mut terms = vec![(0, 0); vars.len()];
        let mut stride = 1;
        for pos in (0..vars.len()).rev() {
            assert_eq!(self.var_parts[vars[pos]], members[pos], "variable in wrong part");
            terms[pos] = (vars[pos], stride);
            stride *= g.parts()[members[pos]];
        }
        self.constraints.push(Constraint {
            index,
            slot,
            terms,
            color,
        });
    }

    /// Conjunction with another pattern over the same variables.
    pub fn and(&self, other: &Pattern) -> Pattern {
        assert_eq!(self.var_parts, other.var_parts);
        let mut out = self.clone();
        out.constraints.extend(other.constraints.iter().cloned());
        out
    }

    /// Size of the assignment space, saturating.
    pub fn space(&self) -> u128 {
        self.radices
            .iter()
            .fold(1u128, |a, &n| a.saturating_mul(n as u128))
    }

    pub fn holds(&self, g: &Hypergraph, assignment: &[usize]) -> bool {
        self.constraints.iter().all(|c| c.holds(g, assignment))
    }

    fn levels(&self) -> Vec<Vec<usize>> {
        let mut levels = vec![Vec::new(); self.radices.len()];
        for (ci, c) in self.constraints.iter().enumerate() {
            let last = c.vars().max().expect("constraints are nonempty");
            levels[last].push(ci);
        }
        levels
    }

    /// Exact number of satisfying assignments (backtracking with pruning).
    pub fn count(&self, g: &Hypergraph) -> u128 {
        let n = self.radices.len();
        if n == 0 {
            return if self.constraints.is_empty() { 1 } else { 0 };
        }
        let levels = self.levels();
        // free[l] = product of radices from l onwards, used once no
        // constraint remains at or beyond level l.
        let mut free = vec![1u128; n + 1];
        for l in (0..n).rev() {
            free[l] = free[l + 1] * self.radices[l] as u128;
        }
        let mut last_constrained = 0;
        for (l, cs) in levels.iter().enumerate() {
            if !cs.is_empty() {
                last_constrained = l + 1;
            }
        }
        let mut assignment = vec![0usize; n];
        self.count_rec(g, &levels, &free, last_constrained, 0, &mut assignment)
    }

    fn count_rec(
        &self,
        g: &Hypergraph,
        levels: &[Vec<usize>],
        free: &[u128],
        last_constrained: usize,
        level: usize,
        assignment: &mut [usize],
    ) -> u128 {
        if level >= last_constrained {
            return free[level];
        }
        let mut total = 0;
        for v in 0..self.radices[level] {
            assignment[level] = v;
            if levels[level]
                .iter()
                .all(|&ci| self.constraints[ci].holds(g, assignment))
            {
                total += self.count_rec(g, levels, free, last_constrained, level + 1, assignment);
            }
        }
        total
    }

    /// Calls `f` on every satisfying assignment, in lexicographic order.
    pub fn visit(&self, g: &Hypergraph, mut f: impl FnMut(&[usize])) {
        let levels = self.levels();
        let mut assignment = vec![0usize; self.radices.len()];
        self.visit_rec(g, &levels, 0, &mut assignment, &mut f);
    }

    fn visit_rec(
        &self,
        g: &Hypergraph,
        levels: &[Vec<usize>],
        level: usize,
        assignment: &mut [usize],
        f: &mut impl FnMut(&[usize]),
    ) {
        if level == self.radices.len() {
            f(assignment);
            return;
        }
        for v in 0..self.radices[level] {
            assignment[level] = v;
            if levels[level]
                .iter()
                .all(|&ci| self.constraints[ci].holds(g, assignment))
            {
                self.visit_rec(g, levels, level + 1, assignment, f);
            }
        }
    }

    /// Draws `n` uniform assignments and counts those satisfying the pattern.
    pub fn sample_hits<R: Rng>(&self, g: &Hypergraph, n: u64, rng: &mut R) -> u64 {
        let mut assignment = vec![0usize; self.radices.len()];
        let mut hits = 0;
        for _ in 0..n {
            for (a, &r) in assignment.iter_mut().zip(&self.radices) {
                *a = rng.gen_range(0..r);
            }
            if self.holds(g, &assignment) {
                hits += 1;
            }
        }
        hits
    }
}
