//! Equi-join engine that compares join keys through short Galois-field
//! signatures instead of byte-by-byte, plus the analytic cost model for
//! the hash-join variants it implements.

pub mod cost;
pub mod datagen;
pub mod gf;
pub mod join;
pub mod relation;
pub mod signature;

pub use cost::{disk_ios, memory_needed, CostBreakdown, CostError, CostParams, UnitCosts};
pub use datagen::{generate_pair, DatagenError, GenSpec, GeneratedPair};
pub use gf::{gf_add, GfContext, GfElem, GfError, ALPHA};
pub use join::{
    build, execute_join, grace_join, grace_partition, nested_loop_join, probe, BuildTable,
    JoinAlgorithm, JoinError, JoinResult, JoinSpec, JoinStats, MatchMode, SigConfig,
};
pub use relation::{ColumnType, Relation, RelationError, Schema, Tuple, Value};
pub use signature::{
    signatures_equal, AlgebraicSignature, SigError, SignatureBase, DEFAULT_FIELD_WIDTH,
    DEFAULT_N_SIG,
};
