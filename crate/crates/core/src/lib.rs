//! Sampling-based regularization of colored `r`-partite hypergraphs.
//!
//! Small edges are recolored by the colors they see against randomly
//! sampled vertices. On top of that the crate computes relative densities
//! and embedding probabilities exactly, certifies regularity through error
//! functions, checks the proof inequalities on enumerable instances, runs
//! the removal procedure and searches for corners and homothetic copies of
//! finite patterns.

pub mod applications;
pub mod density;
pub mod io;
pub mod lemma_lab;
pub mod model;
pub mod ratio;
pub mod regularity;
pub mod regularize;
pub mod removal;
pub mod rng;

pub use model::*;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/intro.md")]
    struct Intro;
    #[doc = include_str!("../../../book/src/model.md")]
    struct Model;
    #[doc = include_str!("../../../book/src/regularize.md")]
    struct Regularize;
    #[doc = include_str!("../../../book/src/density.md")]
    struct Density;
    #[doc = include_str!("../../../book/src/regularity.md")]
    struct Regularity;
    #[doc = include_str!("../../../book/src/lemmas.md")]
    struct Lemmas;
    #[doc = include_str!("../../../book/src/removal.md")]
    struct Removal;
    #[doc = include_str!("../../../book/src/applications.md")]
    struct Applications;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
