//! Averages along k² + ⌊ρ(k)⌋: block structure, arc audits, the transform
//! bound, and residue densities for slowly growing ρ.

pub mod audit;
pub mod blocks;
pub mod residues;

pub use audit::{
    cesaro_expos, cesaro_expos_direct, last_block_length, major_arc_audit, transform_at,
    transform_bound_audit, AuditRow, BetaGrid, Branch, CesaroValue, MajorArcReport,
    TransformAudit, TrendPoint,
};
pub use blocks::{
    abel_summation, block_structure, block_sum, block_sum_upto, blockwise_transform, l_range,
    l_range_upto, partition_count, phi_of, vj_sum, BlockStructure,
};
pub use residues::{residue_density, ResidueProfile, ResidueRow};
