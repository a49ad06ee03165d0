//! Independent reference implementations and baselines: exact dyadic
//! evaluation, a high-precision reference integrator, software binary32 and
//! binary64 paths, and a block-floating-point baseline.
//!
//! Nothing in this module touches residue or hybrid arithmetic; the only
//! shared vocabulary is the plain value types (`Dyadic`, `Matrix`) and the
//! workload descriptions. A source-level audit test at the bottom keeps it
//! that way.

use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::matrix::Matrix;
use crate::workload::{OdeProblem, RhsKind};

/// Shape errors from reference evaluation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("inner dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("inputs must be non-empty")]
    EmptyInput,
    #[error("invalid block floating point config: {0}")]
    InvalidConfig(String),
}

/// Exact dot product over dyadic inputs.
pub fn exact_dot(xs: &[Dyadic], ys: &[Dyadic]) -> Result<Dyadic, OracleError> {
    if xs.len() != ys.len() {
        return Err(OracleError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.is_empty() {
        return Err(OracleError::EmptyInput);
    }
    let mut acc = Dyadic::zero();
    for (x, y) in xs.iter().zip(ys) {
        acc = &acc + &(x * y);
    }
    Ok(acc)
}

/// Exact matrix product over dyadic inputs.
pub fn exact_matmul(a: &Matrix<Dyadic>, b: &Matrix<Dyadic>) -> Result<Matrix<Dyadic>, OracleError> {
    if a.cols() != b.rows() {
        return Err(OracleError::DimensionMismatch { left: a.cols(), right: b.rows() });
    }
    if a.rows() == 0 || a.cols() == 0 || b.cols() == 0 {
        return Err(OracleError::EmptyInput);
    }
    let bt = b.transposed();
    Ok(Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        exact_dot(a.row(i), bt.row(j)).expect("validated shapes")
    }))
}

/// One sampled point of a reference trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferencePoint {
    pub step: u64,
    pub value: Dyadic,
}

/// Reference trajectory: sampled checkpoints plus the final state.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceTrajectory {
    pub checkpoints: Vec<ReferencePoint>,
    pub final_value: Dyadic,
}

fn rhs_rounded(rhs: &RhsKind, y: &Dyadic, round: &impl Fn(Dyadic) -> Dyadic) -> Dyadic {
    match rhs {
        RhsKind::LinearDecay { lambda } => round(&(-lambda) * y),
        RhsKind::Logistic => {
            let u = round(&Dyadic::one() - y);
            round(y * &u)
        }
        RhsKind::CubicDamping => {
            let t = round(y * y);
            let t3 = round(&t * y);
            round(y - &t3)
        }
    }
}

/// Classical fixed-step fourth-order integration of the problem's recurrence
/// carried out in software big-floats of `precision_bits` significant bits
/// (round to nearest even after every addition and multiplication).
///
/// The update coefficient is the problem's shared `sixth_coefficient`, so
/// every arithmetic path integrates the identical recurrence and differs only
/// in rounding.
pub fn highprec_rk4(prob: &OdeProblem, precision_bits: u32) -> ReferenceTrajectory {
    let round = |d: Dyadic| d.round_to_bits(precision_bits);
    let h = prob.h.clone();
    let h2 = prob.h.mul_pow2(-1);
    let hc6 = &prob.h * &prob.sixth_coefficient();
    let two = Dyadic::from_int(2);

    let mut y = prob.y0.clone();
    let mut checkpoints = Vec::new();
    for step in 0..prob.steps {
        let k1 = rhs_rounded(&prob.rhs, &y, &round);
        let y2 = round(&y + &round(&h2 * &k1));
        let k2 = rhs_rounded(&prob.rhs, &y2, &round);
        let y3 = round(&y + &round(&h2 * &k2));
        let k3 = rhs_rounded(&prob.rhs, &y3, &round);
        let y4 = round(&y + &round(&h * &k3));
        let k4 = rhs_rounded(&prob.rhs, &y4, &round);
        let left = round(&k1 + &round(&two * &k2));
        let right = round(&round(&two * &k3) + &k4);
        let ksum = round(&left + &right);
        y = round(&y + &round(&hc6 * &ksum));
        let done = step + 1;
        if done % prob.checkpoint_every == 0 || done == prob.steps {
            checkpoints.push(ReferencePoint { step: done, value: y.clone() });
        }
    }
    ReferenceTrajectory { final_value: y.clone(), checkpoints }
}

/// Sequential binary64 dot product in the same accumulation order as the
/// hybrid kernel.
pub fn binary64_dot(xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter().zip(ys).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub fn binary32_dot(xs: &[f32], ys: &[f32]) -> f32 {
    xs.iter().zip(ys).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub fn binary64_matmul(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
    let bt = b.transposed();
    Matrix::from_fn(a.rows(), b.cols(), |i, j| binary64_dot(a.row(i), bt.row(j)))
}

pub fn binary32_matmul(a: &Matrix<f32>, b: &Matrix<f32>) -> Matrix<f32> {
    let bt = b.transposed();
    Matrix::from_fn(a.rows(), b.cols(), |i, j| binary32_dot(a.row(i), bt.row(j)))
}

macro_rules! float_rk4 {
    ($name:ident, $ty:ty) => {
        /// Fixed-step integration of the problem recurrence in native floats,
        /// same operation order as the reference solver.
        pub fn $name(prob: &OdeProblem) -> Vec<(u64, $ty)> {
            let h = prob.h.to_f64() as $ty;
            let h2 = prob.h.mul_pow2(-1).to_f64() as $ty;
            let hc6 = (&prob.h * &prob.sixth_coefficient()).to_f64() as $ty;
            let rhs = |y: $ty| -> $ty {
                match &prob.rhs {
                    RhsKind::LinearDecay { lambda } => (-lambda.to_f64() as $ty) * y,
                    RhsKind::Logistic => y * (1.0 - y),
                    RhsKind::CubicDamping => y - y * y * y,
                }
            };
            let mut y = prob.y0.to_f64() as $ty;
            let mut out = Vec::new();
            for step in 0..prob.steps {
                let k1 = rhs(y);
                let k2 = rhs(y + h2 * k1);
                let k3 = rhs(y + h2 * k2);
                let k4 = rhs(y + h * k3);
                y += hc6 * ((k1 + 2.0 * k2) + (2.0 * k3 + k4));
                let done = step + 1;
                if done % prob.checkpoint_every == 0 || done == prob.steps {
                    out.push((done, y));
                }
            }
            out
        }
    };
}
float_rk4!(binary64_rk4, f64);
float_rk4!(binary32_rk4, f32);

/// Block floating point configuration: block length, per-element mantissa
/// width, and the (fixed) shared-exponent rule of taking the block maximum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BfpConfig {
    pub block_size: usize,
    pub mantissa_bits: u32,
}

impl Default for BfpConfig {
    fn default() -> Self {
        BfpConfig { block_size: 16, mantissa_bits: 24 }
    }
}

impl BfpConfig {
    pub fn new(block_size: usize, mantissa_bits: u32) -> Result<Self, OracleError> {
        if block_size < 1 {
            return Err(OracleError::InvalidConfig("block_size must be at least 1".into()));
        }
        if mantissa_bits < 2 {
            return Err(OracleError::InvalidConfig("mantissa_bits must be at least 2".into()));
        }
        Ok(BfpConfig { block_size, mantissa_bits })
    }
}

/// Quantizes a vector blockwise: within each block every element shares the
/// exponent of the largest magnitude and keeps `mantissa_bits` of fixed-point
/// precision against it. Elements far below the block maximum lose bits or
/// flush to zero.
pub fn bfp_quantize(xs: &[Dyadic], cfg: &BfpConfig) -> Vec<Dyadic> {
    let mut out = Vec::with_capacity(xs.len());
    for block in xs.chunks(cfg.block_size) {
        let max_exp = block.iter().filter_map(|v| v.ilog2()).max();
        match max_exp {
            None => out.extend(block.iter().map(|_| Dyadic::zero())),
            Some(e) => {
                let scale = e - (cfg.mantissa_bits as i64 - 1);
                for v in block {
                    let q = v.mul_pow2(-scale).round_to_int();
                    out.push(Dyadic::new(q, scale));
                }
            }
        }
    }
    out
}

/// Block floating point dot product: both vectors are quantized blockwise,
/// then the quantized fixed-point values accumulate exactly. All error comes
/// from the shared-exponent quantization.
pub fn bfp_dot(xs: &[Dyadic], ys: &[Dyadic], cfg: &BfpConfig) -> Result<Dyadic, OracleError> {
    if xs.len() != ys.len() {
        return Err(OracleError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    let qx = bfp_quantize(xs, cfg);
    let qy = bfp_quantize(ys, cfg);
    exact_dot(&qx, &qy)
}

/// Block floating point matrix product; rows of `a` and columns of `b` are
/// quantized along their dot-product axes.
pub fn bfp_matmul(
    a: &Matrix<Dyadic>,
    b: &Matrix<Dyadic>,
    cfg: &BfpConfig,
) -> Result<Matrix<Dyadic>, OracleError> {
    if a.cols() != b.rows() {
        return Err(OracleError::DimensionMismatch { left: a.cols(), right: b.rows() });
    }
    let bt = b.transposed();
    let qa: Vec<Vec<Dyadic>> = (0..a.rows()).map(|i| bfp_quantize(a.row(i), cfg)).collect();
    let qb: Vec<Vec<Dyadic>> = (0..bt.rows()).map(|j| bfp_quantize(bt.row(j), cfg)).collect();
    Ok(Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        exact_dot(&qa[i], &qb[j]).expect("validated shapes")
    }))
}

/// Aggregate error metrics over a sample of results.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub rms: f64,
    pub max_abs: f64,
    pub max_rel: f64,
    pub n: usize,
}

/// RMS and max metrics with exact differencing: every difference and square
/// is computed as an exact dyadic before the final rounding to binary64.
pub fn rms_error(approx: &[Dyadic], exact: &[Dyadic]) -> Result<ErrorMetrics, OracleError> {
    if approx.len() != exact.len() {
        return Err(OracleError::LengthMismatch { left: approx.len(), right: exact.len() });
    }
    if approx.is_empty() {
        return Err(OracleError::EmptyInput);
    }
    let mut sum_sq = Dyadic::zero();
    let mut max_abs = Dyadic::zero();
    let mut max_rel = 0.0f64;
    for (a, e) in approx.iter().zip(exact) {
        let d = (a - e).abs();
        sum_sq = &sum_sq + &(&d * &d);
        if d > max_abs {
            max_abs = d.clone();
        }
        if !e.is_zero() {
            let rel = d.to_f64() / e.abs().to_f64();
            max_rel = max_rel.max(rel);
        }
    }
    let rms = (sum_sq.to_f64() / approx.len() as f64).sqrt();
    Ok(ErrorMetrics { rms, max_abs: max_abs.to_f64(), max_rel, n: approx.len() })
}

/// Metrics together with the reference scale `max(1, max |exact|)` and the
/// scale-normalized RMS used for headline accuracy comparisons across
/// workloads of different magnitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledMetrics {
    pub metrics: ErrorMetrics,
    pub scale: f64,
    pub rms_scaled: f64,
}

pub fn scaled_rms_error(approx: &[Dyadic], exact: &[Dyadic]) -> Result<ScaledMetrics, OracleError> {
    let metrics = rms_error(approx, exact)?;
    let max_exact = exact
        .iter()
        .map(|e| e.abs())
        .max()
        .unwrap_or_else(Dyadic::zero)
        .to_f64();
    let scale = max_exact.max(1.0);
    Ok(ScaledMetrics { metrics, scale, rms_scaled: metrics.rms / scale })
}

pub fn to_f64_vec(xs: &[Dyadic]) -> Vec<f64> {
    xs.iter().map(|x| x.to_f64()).collect()
}

pub fn to_f32_vec(xs: &[Dyadic]) -> Vec<f32> {
    xs.iter().map(|x| x.to_f64() as f32).collect()
}

pub fn f64_to_dyadic_vec(xs: &[f64]) -> Vec<Dyadic> {
    xs.iter().map(|&x| Dyadic::from_f64(x).expect("finite value")).collect()
}

pub fn f32_to_dyadic_vec(xs: &[f32]) -> Vec<Dyadic> {
    xs.iter().map(|&x| Dyadic::from_f64(x as f64).expect("finite value")).collect()
}
