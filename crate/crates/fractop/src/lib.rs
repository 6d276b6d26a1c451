//! Computational tools for post-critically finite self-similar sets.
//!
//! The crate covers symbolic codings of IFS attractors, topology automata and
//! equivalence classification, distance estimates, weighted refined graphs and
//! conformal-dimension upper bounds for dendrites and fractal gaskets.

pub mod automaton;
pub mod cli;
pub mod dendrite;
pub mod error;
pub mod gasket;
pub mod geom;
pub mod graph;
pub mod ifs;
pub mod metric;
pub mod report;
pub mod samples;
pub mod sampling;
pub mod svg;
pub mod word;

pub use error::{Error, Result};
pub use geom::{PlanarSimilitude, Pt};
pub use ifs::{compute_post_critical, Identification, Ifs, IfsSpec, PostCriticalData};
pub use word::{EvPeriodicWord, Symbol, Word};
