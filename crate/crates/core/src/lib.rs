pub mod cascade;
pub mod error;
pub mod estimates;
pub mod field;
pub mod grid;
pub mod norms;
pub mod scalar;
pub mod sparse;
pub mod time_oracle;
pub mod helmholtz;
pub mod inverse;
pub mod medium;

pub use medium::{BoundarySource, Medium};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Grid = grid::Grid<f64>;
pub type ComplexField = field::ComplexField<f64>;
pub type BoundaryField = field::BoundaryField<f64>;
