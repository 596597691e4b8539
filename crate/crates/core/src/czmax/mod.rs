//! Calderón–Zygmund decomposition, maximal functions over measure lists,
//! the σ comparison averages and the E₁/E₂ pathway diagnostics.

pub mod decompose;
pub mod diagnostics;
pub mod maximal;
pub mod sigma;

pub use decompose::{cz_decompose, BadPiece, CZDecomposition, CZInvariants, CZReport, DyadicInterval, SparseSignal};
pub use diagnostics::{e1_e2_diagnostics, E1E2Report, PathwayRow};
pub use maximal::{default_lambda_grid, maximal_function, weak11_ratio, weak11_rows, MaximalFunction, WeakRow};
pub use sigma::{sigma_deficit_sup, sigma_hat, sigma_n, DeficitPoly, DeficitReport};
