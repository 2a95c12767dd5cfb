//! Workbench for coarse-geometric constructions on finite graphs: hyperbolicity
//! estimates and certificates, combinatorial horoballs, coarse fundamental groups
//! and their covers, shells and tube complements, cusped spaces, and the
//! unwrap-and-glue construction together with the constant cascade behind it.

pub mod boundary;
pub mod drill;
pub mod error;
pub mod graph;
pub mod half;
pub mod horoball;
pub mod hyperbolicity;
pub mod interval;
pub mod pipeline;
pub mod report;
pub mod shells;
pub mod spaces;
pub mod topology;

pub use error::{Error, Result};
pub use graph::{DistanceField, DistanceMatrix, Graph, PointedBall};
pub use half::Half;
pub use report::{Report, Verdict};
