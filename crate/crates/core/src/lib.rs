//! Combinatorial auction settlement with Vickrey package pricing and
//! fair-value based payment adjustment.

pub mod fairness;
pub mod fixtures;
pub mod gva;
pub mod incentives;
pub mod io;
pub mod model;
pub mod money;
pub mod settlement;
pub mod wdp;
