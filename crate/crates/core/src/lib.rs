//! Computational laboratory for Lie-group-valued quasimorphisms on the
//! genus-2 surface group.
//!
//! The crate builds a concrete cocompact Fuchsian group (the regular-octagon
//! genus-2 group acting on the Poincaré disk), connections on the trivial
//! principal G-bundle over the quotient surface as sums of compactly
//! supported 1-form atoms, and the holonomy-based quasimorphism engines with
//! abelian, SU(2) and Heisenberg targets, together with the defect / scaling
//! experiments and their report formats.

pub mod config;
pub mod connection;
pub mod free_qm;
pub mod group;
pub mod hyp2;
pub mod lie;
pub mod numerics;
pub mod qm;
pub mod report;
