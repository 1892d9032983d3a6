//! Svetlichny-operator bounds for three-qubit states, before and after
//! local filtering.
//!
//! The maximal quantum value of the Svetlichny operator on a state ρ is at
//! most 4λ₁, with λ₁ the largest singular value of the 3×9 Pauli
//! correlation matrix M. After local filtering the same holds with the
//! correlation matrix of the filtered state, computed here through the
//! matrix X/N. A bound is reported as attained only when explicit
//! measurement settings reaching it are constructed.

pub mod error;
pub mod filtering;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod random;
pub mod scan;
pub mod state;
pub mod svetlichny;
pub mod tightness;

/// Seed used by every randomized routine unless one is given.
pub const DEFAULT_SEED: u64 = 42;

pub use error::{Error, Result};
pub use filtering::{apply_filter, filtered_bound, x_matrix, FilterParams, FilterTriple, FilteredAnalysis};
pub use linalg::{svd_3x9, ComplexMatrix, Mat3x9, SvdResult, Vec3, Vec9, C64};
pub use oracle::{seesaw_max, OracleConfig, OracleResult};
pub use scan::{
    figure_data, optimize_filter, threshold_bisect, ActivationReport, Figure, FilterSearch, Mode, ScanSpec,
    ThresholdOutcome,
};
pub use state::{build_chi_state, build_ghz_noise_state, load_state, DensityMatrix, Family, FamilyParams};
pub use svetlichny::{
    certify_bound, correlation_matrix, svetlichny_value, unfiltered_bound, AnalysisConfig, BoundReport,
    CorrelationMatrix, MeasurementSettings,
};
pub use tightness::{assemble_settings, check_tightness, DecompositionResult, TightnessConfig};
