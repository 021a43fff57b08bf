//! Numerical laboratory for a layered lattice cocycle over an i.i.d. base:
//! exact lattice laws, trajectory evaluation at large horizons, regime
//! decompositions, range statistics at polynomial times, and exact
//! intersection probabilities for the derived two-transformation system.

pub mod cocycle;
pub mod error;
pub mod lattice;
pub mod layers;
pub mod lcltlab;
pub mod mixer;
pub mod polyrange;
pub mod report;
pub mod schedule;
pub mod stats;
pub mod twosys;

pub use error::{Error, Result};
