//! Extraction of a graph model from `.pss` sources, single-pushout
//! transformations on that model, and injection of the changes back into the
//! sources so the two stay in sync.

pub mod cli;
pub mod dialect;
pub mod evaluation;
pub mod extraction;
pub mod graph;
pub mod injection;
pub mod transformation;
pub mod ui;
