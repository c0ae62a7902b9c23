//! Exact verification toolkit for the switch chain on d-regular digraphs.

pub mod audit;
pub mod chain;
pub mod digraph;
pub mod encodings;
pub mod enumeration;
pub mod exec;
pub mod flow;
pub mod paths;
pub mod worked;
pub mod zoo;

pub use digraph::{Arc, ColouredDiff, Digraph, DigraphError, Switch};
pub use exec::Exec;
