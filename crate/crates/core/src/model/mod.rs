//! Colored partite hypergraphs, simplicial complexes and partitionwise maps.

mod complex;
mod hypergraph;
mod index_set;
mod map;
mod pattern;

pub use complex::{validate_complex, ComplexEdge, SimplicialComplex, ValidityReport};
pub use hypergraph::{
    build_hypergraph, enumerate_edges, random_hypergraph, restrict_edge, ColorId, Edge, EdgeIter,
    Hypergraph, HypergraphSpec, TotalColor,
};
pub use index_set::{IndexSet, Members, MAX_PARTS};
pub use map::{for_each_map, map_space_size, MapOdometer, PartitionwiseMap};
pub use pattern::{Constraint, Pattern};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("index sets must be nonempty")]
    EmptyIndexSet,
    #[error("at most {MAX_PARTS} parts are supported (got {0})")]
    TooManyParts(usize),
    #[error("index set members must be strictly increasing: {0:?}")]
    UnsortedIndexSet(Vec<usize>),
    #[error("cannot parse index set key {0:?}")]
    BadIndexKey(String),
    #[error("edge of index {index:?} needs {} vertices, got {got}", index.len())]
    EdgeArity { index: IndexSet, got: usize },
    #[error("{sub:?} is not a subset of {sup:?}")]
    NotASubset { sub: IndexSet, sup: IndexSet },
    #[error("total color of index {index:?} needs {expected} entries, got {got}")]
    TotalColorLength {
        index: IndexSet,
        expected: usize,
        got: usize,
    },
    #[error("expected {expected} index-set slots, got {got}")]
    SlotCount { expected: usize, got: usize },
    #[error("empty color table for index set {0:?}")]
    EmptyPalette(IndexSet),
    #[error("incomplete coloring: index set {index:?} has {got} of {expected} colors")]
    IncompleteColoring {
        index: IndexSet,
        expected: usize,
        got: usize,
    },
    #[error("incomplete coloring: no color for index set {:?} tuple {:?}", .0.index, .0.vertices)]
    MissingColor(Edge),
    #[error("duplicate color assignment for index set {:?} tuple {:?}", .0.index, .0.vertices)]
    DuplicateAssignment(Edge),
    #[error("color {color} out of range for index set {index:?} (table size {palette})")]
    ColorOutOfRange {
        index: IndexSet,
        color: ColorId,
        palette: usize,
    },
    #[error("index set {index:?} exceeds the bound k = {k}")]
    IndexTooLarge { index: IndexSet, k: usize },
    #[error("vertex {vertex} out of range for part {part} of size {size}")]
    VertexOutOfRange {
        part: usize,
        vertex: usize,
        size: usize,
    },
    #[error("the bound k must be at least 1")]
    ZeroBound,
    #[error("k exceeds r (k = {k}, r = {r})")]
    KExceedsR { k: usize, r: usize },
    #[error("expected {expected} parts, got {got}")]
    PartCount { expected: usize, got: usize },
    #[error("part {0} is empty")]
    EmptyPart(usize),
    #[error("b vector needs {expected} entries, got {got}")]
    BVectorLength { expected: usize, got: usize },
    #[error("color tables must be nonempty")]
    ZeroPalette,
    #[error("no color table for index set {0:?}")]
    MissingPalette(IndexSet),
    #[error(
        "b vector inconsistency: size-{size} tables have {first} colors but {index:?} has {other}"
    )]
    InconsistentB {
        size: usize,
        first: usize,
        other: usize,
        index: IndexSet,
    },
    #[error("malformed complex: {0}")]
    ComplexShape(String),
}
