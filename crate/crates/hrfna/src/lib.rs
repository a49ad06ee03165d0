//! Hybrid residue-floating arithmetic.
//!
//! Values are pairs of a residue vector over pairwise coprime moduli and a
//! global power-of-two exponent, with semantics `CRT(residues) * 2^exponent`.
//! Multiplication and addition stay carry-free and exact in the residue
//! channels; dynamic range is managed by threshold-driven normalization,
//! whose rounding is the only error source and is charged event by event to
//! an explicit error budget.
//!
//! Module map:
//! - [`rns`]: modulus sets, channelwise arithmetic, centered CRT.
//! - [`hybrid`]: the hybrid number, normalization, exponent sync, magnitude
//!   intervals, and argmax selection.
//! - [`kernels`]: dot product, matrix multiply, and a fixed-step RK4 solver.
//! - [`oracle`]: exact and high-precision references, binary32/64 paths, and
//!   a block floating point baseline.
//! - [`telemetry`]: value-style counters and amortization ratios.
//! - [`workload`]: seeded input distributions and the ODE catalog.
//! - [`selftest`]: reduced-scale invariant suites for the CLI.

pub mod dyadic;
pub mod hybrid;
pub mod kernels;
pub mod matrix;
pub mod oracle;
pub mod rns;
pub mod selftest;
pub mod telemetry;
pub mod workload;

pub use dyadic::Dyadic;
pub use hybrid::{
    magnitude_interval, BudgetEvent, ErrorBudget, EventKind, HybridError, HybridNumber,
    HybridOps, HybridRecord, MagnitudeInterval, NormalizationPolicy, ShiftRule, Tape,
};
pub use kernels::{KernelError, MatrixOutput, OdeOutput, ScalarOutput, TrajectoryPoint};
pub use matrix::Matrix;
pub use oracle::{BfpConfig, ErrorMetrics, OracleError, ScaledMetrics};
pub use rns::{ModulusSet, ResidueVector, RnsError, RoundingMode, DEFAULT_FRAC_PRECISION, DEFAULT_MODULI};
pub use telemetry::{amortization_report, AmortizationReport, CounterKind, Counters};
pub use workload::{Distribution, OdeProblem, RhsKind, WorkloadError, WorkloadRng};

// Re-exported so downstream crates can parse and print big integers without
// naming the backing crate.
pub use num_bigint::{BigInt, BigUint};
