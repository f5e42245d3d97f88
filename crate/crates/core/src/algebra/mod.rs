//! Operator algebra: projector basis, dual superoperators and rate matrices.

pub mod assemble;
pub mod basis;
pub mod ops;
pub mod rates;
pub mod superop;
pub mod table;

pub use assemble::{assemble_model, AssembledModel, RateGroup};
pub use basis::ProjectorBasis;
pub use ops::Term;
pub use rates::{rates_from_superop, LocalRateMatrix};
pub use superop::{superop_dissipator, superop_unitary, SuperoperatorMatrix};
pub use table::{table_rates, verify_table_conventions};
