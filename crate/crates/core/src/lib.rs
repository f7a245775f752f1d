//! Abstract separation systems and their tangles.

pub mod canonical;
pub mod cli;
pub mod duality;
pub mod dot;
pub mod error;
pub mod gen;
pub mod graphsep;
pub mod io;
pub mod order;
pub mod orient;
pub mod refine;
pub mod scalar;
pub mod system;
pub mod trees;
pub mod universe;

pub use error::{Error, Result, Verdict};
pub use orient::{Limits, Orientation, StarFamily};
pub use scalar::{OrderFunction, OrderScalar};
pub use system::{Frame, Sep, SeparationSystem};
pub use universe::{BipartitionUniverse, TablePoset, TableSpec, UId, Universe};

/// Exact order values for hand-built universes.
pub type Order = num_rational::Rational64;
pub type RationalTable = TablePoset<Order>;
/// Order of a graph separation, `|A ∩ B|`.
pub type GraphOrder = u32;
