//! Seeded workload generation and the ODE catalog.
//!
//! All generated inputs are exact dyadics with a fixed mantissa width, so the
//! hybrid conversion path and every baseline consume the identical values.
//! The generator is ChaCha12 (`rand_chacha`), seeded with `seed_from_u64`;
//! value derivation from the raw 64-bit stream is spelled out below and must
//! not change across releases, otherwise seeded reports stop reproducing.

use num_bigint::BigInt;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::dyadic::Dyadic;
use crate::matrix::Matrix;

/// The fixed generator for all seeded workloads.
pub type WorkloadRng = ChaCha12Rng;

// Trait re-exports so downstream crates can drive the generator without
// depending on the rand crates directly.
pub use rand_chacha::rand_core::RngCore as WorkloadRngCore;

pub fn rng_from_seed(seed: u64) -> WorkloadRng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Input distributions used by the accuracy experiments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distribution {
    /// Uniform dyadic-quantized values in (-1, 1): a `mantissa_bits`-bit
    /// integer numerator over 2^mantissa_bits, sign from bit 63.
    UniformUnit { mantissa_bits: u32 },
    /// Log-uniform magnitudes: a normalized `mantissa_bits`-bit mantissa with
    /// a uniform binary magnitude exponent in `[min_mag_exp, max_mag_exp]`
    /// and random sign.
    LogUniform { mantissa_bits: u32, min_mag_exp: i64, max_mag_exp: i64 },
}

impl Distribution {
    /// The moderate-range default: 24-bit dyadics in (-1, 1).
    pub fn moderate() -> Self {
        Distribution::UniformUnit { mantissa_bits: 24 }
    }

    /// The high-dynamic-range default: magnitudes spanning [2^-20, 2^21).
    pub fn high_dynamic_range() -> Self {
        Distribution::LogUniform { mantissa_bits: 24, min_mag_exp: -20, max_mag_exp: 20 }
    }

    pub fn mantissa_bits(&self) -> u32 {
        match *self {
            Distribution::UniformUnit { mantissa_bits } => mantissa_bits,
            Distribution::LogUniform { mantissa_bits, .. } => mantissa_bits,
        }
    }

    /// Draws one value. Derivation: one u64 word supplies the magnitude bits
    /// (low) and the sign (bit 63); log-uniform draws a second word for the
    /// octave, reduced modulo the octave span.
    pub fn sample(&self, rng: &mut WorkloadRng) -> Dyadic {
        match *self {
            Distribution::UniformUnit { mantissa_bits } => {
                let word = rng.next_u64();
                let mag = word & ((1u64 << mantissa_bits) - 1);
                let sign = if word >> 63 == 1 { -1i64 } else { 1 };
                Dyadic::new(BigInt::from(sign) * BigInt::from(mag), -(mantissa_bits as i64))
            }
            Distribution::LogUniform { mantissa_bits, min_mag_exp, max_mag_exp } => {
                let word = rng.next_u64();
                let mant = (word & ((1u64 << (mantissa_bits - 1)) - 1)) | (1u64 << (mantissa_bits - 1));
                let sign = if word >> 63 == 1 { -1i64 } else { 1 };
                let span = (max_mag_exp - min_mag_exp + 1) as u64;
                let octave = min_mag_exp + (rng.next_u64() % span) as i64;
                Dyadic::new(
                    BigInt::from(sign) * BigInt::from(mant),
                    octave - (mantissa_bits as i64 - 1),
                )
            }
        }
    }
}

pub fn generate_vector(dist: &Distribution, len: usize, rng: &mut WorkloadRng) -> Vec<Dyadic> {
    (0..len).map(|_| dist.sample(rng)).collect()
}

pub fn generate_matrix(dist: &Distribution, rows: usize, cols: usize, rng: &mut WorkloadRng) -> Matrix<Dyadic> {
    Matrix::from_fn(rows, cols, |_, _| dist.sample(rng))
}

/// Errors from workload construction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("step size must be positive")]
    NonPositiveStep,
    #[error("step count must be at least 1")]
    NoSteps,
    #[error("coefficient width must be at least 2 bits")]
    CoefficientTooNarrow,
}

/// Right-hand sides for the fixed-step integrator. Every member is expressible
/// with additions and multiplications only.
#[derive(Clone, Debug, PartialEq)]
pub enum RhsKind {
    /// y' = -lambda * y
    LinearDecay { lambda: Dyadic },
    /// y' = y * (1 - y)
    Logistic,
    /// y' = y - y^3
    CubicDamping,
}

/// A fixed-step scalar initial-value problem. The step is dyadic by
/// construction, so `h` and `h/2` fold into exact constants.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeProblem {
    pub rhs: RhsKind,
    pub y0: Dyadic,
    pub h: Dyadic,
    pub steps: u64,
    /// Trajectory sampling stride; the final step is always recorded.
    pub checkpoint_every: u64,
    /// Mantissa width used to round the non-dyadic 1/6 update coefficient.
    pub coeff_bits: u32,
}

impl OdeProblem {
    pub fn new(rhs: RhsKind, y0: Dyadic, h: Dyadic, steps: u64) -> Result<Self, WorkloadError> {
        if h.is_zero() || h.is_negative() {
            return Err(WorkloadError::NonPositiveStep);
        }
        if steps == 0 {
            return Err(WorkloadError::NoSteps);
        }
        Ok(OdeProblem { rhs, y0, h, steps, checkpoint_every: 1024, coeff_bits: 24 })
    }

    pub fn with_checkpoint_every(mut self, every: u64) -> Self {
        self.checkpoint_every = every.max(1);
        self
    }

    pub fn with_coeff_bits(mut self, bits: u32) -> Result<Self, WorkloadError> {
        if bits < 2 {
            return Err(WorkloadError::CoefficientTooNarrow);
        }
        self.coeff_bits = bits;
        Ok(self)
    }

    /// The shared update coefficient: 1/6 taken through binary64 and rounded
    /// to `coeff_bits` significant bits. Both the hybrid integrator and the
    /// reference solvers use this one constant, so the recurrence they
    /// compute is identical.
    pub fn sixth_coefficient(&self) -> Dyadic {
        Dyadic::from_f64(1.0 / 6.0)
            .expect("finite constant")
            .round_to_bits(self.coeff_bits)
    }
}
