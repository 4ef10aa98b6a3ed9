//! Exact tests of K-stability for polarized spherical varieties through
//! their moment-polytope combinatorics: restricted root data, chamber
//! polytopes, rational polynomial integration, curvature functionals,
//! verdicts with witnesses, convex envelopes of boundary data, and a
//! floating-point soliton solver on top of the exact core.

pub mod envelope;
pub mod error;
pub mod futaki;
pub mod integrate;
pub mod lp;
pub mod pl;
pub mod poly;
pub mod polytope;
pub mod problem;
pub mod rat;
pub mod report;
pub mod root_datum;
pub mod stability;
pub mod svg;

pub use error::{Error, Result};
