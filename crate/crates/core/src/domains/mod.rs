//! Shipped agency-MDP domains.

pub mod credit;
pub mod moves;
pub mod recidivism;
pub mod table;

pub use moves::MoveMdp;
pub use table::TableMdp;
