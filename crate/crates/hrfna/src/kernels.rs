//! Composite workloads built from hybrid primitives: exponent-coherent dot
//! product, dense matrix multiplication, and a fixed-step fourth-order ODE
//! integrator.
//!
//! Accumulation order inside one output is strictly sequential; parallelism
//! only fans out across independent outputs, and per-output tapes merge in
//! row-major order, so results are identical for any worker count.

use rayon::prelude::*;

use crate::dyadic::Dyadic;
use crate::hybrid::{magnitude_interval, HybridError, HybridNumber, HybridOps, Tape};
use crate::matrix::Matrix;
use crate::telemetry::CounterKind;
use crate::workload::{OdeProblem, RhsKind};

/// Errors from kernel evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("inner dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("inputs must be non-empty")]
    EmptyInput,
    #[error("worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
}

/// Result of a scalar-valued kernel: the hybrid accumulator, its single final
/// reconstruction, and the tape of counters and budget events.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarOutput {
    pub result: HybridNumber,
    pub value: Dyadic,
    pub tape: Tape,
}

/// Result of a matrix kernel; `values` holds the per-element reconstructions.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixOutput {
    pub result: Matrix<HybridNumber>,
    pub values: Matrix<Dyadic>,
    pub tape: Tape,
}

/// One sampled point of a hybrid trajectory, with the budget total at that
/// moment.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub step: u64,
    pub value: Dyadic,
    pub budget_total: Dyadic,
}

/// Result of the ODE integrator.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeOutput {
    pub final_state: HybridNumber,
    pub final_value: Dyadic,
    pub checkpoints: Vec<TrajectoryPoint>,
    pub tape: Tape,
}

/// Interval audit: tightens the accumulator's tracker toward the true
/// magnitude, falling back to exact reconstruction when the estimate is
/// ambiguous.
fn audit(ops: &HybridOps<'_>, acc: &mut HybridNumber, tape: &mut Tape) {
    tape.counters.record(CounterKind::IntervalEval);
    match magnitude_interval(ops.modulus_set(), acc) {
        Ok(interval) => acc.tighten_bound(interval.hi.ceil_to_biguint()),
        Err(_) => {
            tape.counters.record(CounterKind::Reconstruction);
            let n = ops
                .modulus_set()
                .reconstruct(acc.residues())
                .expect("accumulator bound to this set");
            acc.tighten_bound(n.magnitude().clone());
        }
    }
}

/// Exponent-coherent dot product: a zero accumulator seeded with the first
/// product's exponent, a strict left-to-right multiply-accumulate chain,
/// tracker audits every `check_every` steps and before returning, and exactly
/// one final reconstruction for the reported value.
pub fn dot_product(
    ops: &HybridOps<'_>,
    xs: &[HybridNumber],
    ys: &[HybridNumber],
) -> Result<ScalarOutput, KernelError> {
    if xs.len() != ys.len() {
        return Err(KernelError::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.is_empty() {
        return Err(KernelError::EmptyInput);
    }
    let ms = ops.modulus_set();
    let check_every = ops.policy().check_every() as usize;
    let mut tape = Tape::new();
    let first_exponent = xs[0].exponent() + ys[0].exponent();
    let mut acc = HybridNumber::zero_at(ms, first_exponent);
    for (j, (x, y)) in xs.iter().zip(ys).enumerate() {
        acc = ops.mac(&acc, x, y, &mut tape)?;
        if (j + 1) % check_every == 0 {
            audit(ops, &mut acc, &mut tape);
        }
    }
    audit(ops, &mut acc, &mut tape);
    tape.counters.record(CounterKind::Reconstruction);
    let value = acc.phi(ms);
    Ok(ScalarOutput { result: acc, value, tape })
}

/// Dense matrix product; each output element is one dot product over a row
/// and a column. `threads == 1` runs sequentially; any other value builds a
/// worker pool of that size (0 picks the default), and results are identical
/// either way.
pub fn matmul(
    ops: &HybridOps<'_>,
    a: &Matrix<HybridNumber>,
    b: &Matrix<HybridNumber>,
    threads: usize,
) -> Result<MatrixOutput, KernelError> {
    if a.cols() != b.rows() {
        return Err(KernelError::DimensionMismatch { left: a.cols(), right: b.rows() });
    }
    if a.rows() == 0 || a.cols() == 0 || b.cols() == 0 {
        return Err(KernelError::EmptyInput);
    }
    let bt = b.transposed();
    let rows = a.rows();
    let cols = b.cols();
    let cell = |idx: usize| -> Result<ScalarOutput, KernelError> {
        let (i, j) = (idx / cols, idx % cols);
        dot_product(ops, a.row(i), bt.row(j))
    };
    let outputs: Vec<Result<ScalarOutput, KernelError>> = if threads == 1 {
        (0..rows * cols).map(cell).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| KernelError::ThreadPool(e.to_string()))?;
        pool.install(|| (0..rows * cols).into_par_iter().map(cell).collect())
    };
    let mut tape = Tape::new();
    let mut hybrids = Vec::with_capacity(rows * cols);
    let mut values = Vec::with_capacity(rows * cols);
    for out in outputs {
        let out = out?;
        tape.merge_in(&out.tape);
        hybrids.push(out.result);
        values.push(out.value);
    }
    Ok(MatrixOutput {
        result: Matrix::from_vec(rows, cols, hybrids),
        values: Matrix::from_vec(rows, cols, values),
        tape,
    })
}

/// Multiplies after restoring enough headroom: operands are normalized
/// (larger tracker first) until the bound product clears M/2, and the result
/// is normalized when it crosses the threshold.
fn mul_headroom(
    ops: &HybridOps<'_>,
    x: &HybridNumber,
    y: &HybridNumber,
    tape: &mut Tape,
) -> Result<HybridNumber, KernelError> {
    let ms = ops.modulus_set();
    let mut a = x.clone();
    let mut b = y.clone();
    for _ in 0..4 {
        if ms.fits(&(a.bound() * b.bound())) {
            let z = ops.mul(&a, &b, tape)?;
            return Ok(if ops.needs_normalization(&z) { ops.normalize(&z, tape) } else { z });
        }
        let target_a = a.bound() >= b.bound();
        let target = if target_a { &mut a } else { &mut b };
        let before = target.bound().clone();
        *target = ops.normalize(target, tape);
        if target.bound() == &before {
            let other = if target_a { &mut b } else { &mut a };
            let other_before = other.bound().clone();
            *other = ops.normalize(other, tape);
            if other.bound() == &other_before {
                return Err(HybridError::WouldWrap.into());
            }
        }
    }
    Err(HybridError::WouldWrap.into())
}

/// Adds after restoring enough headroom: when the post-sync bound sum would
/// wrap, both operands are normalized and re-synchronized.
fn add_headroom(
    ops: &HybridOps<'_>,
    x: &HybridNumber,
    y: &HybridNumber,
    tape: &mut Tape,
) -> Result<HybridNumber, KernelError> {
    let ms = ops.modulus_set();
    let (mut a, mut b) = ops.sync_with_reserve(x, y, tape)?;
    for _ in 0..4 {
        if ms.fits(&(a.bound() + b.bound())) {
            let z = ops.add(&a, &b, tape)?;
            return Ok(if ops.needs_normalization(&z) { ops.normalize(&z, tape) } else { z });
        }
        let before = (a.bound().clone(), b.bound().clone());
        a = ops.normalize(&a, tape);
        b = ops.normalize(&b, tape);
        if (a.bound(), b.bound()) == (&before.0, &before.1) {
            return Err(HybridError::WouldWrap.into());
        }
        (a, b) = ops.sync_with_reserve(&a, &b, tape)?;
    }
    Err(HybridError::WouldWrap.into())
}

struct OdeConstants {
    one: HybridNumber,
    minus_one: HybridNumber,
    two: HybridNumber,
    h: HybridNumber,
    h_half: HybridNumber,
    /// `h * c6` folded into one exact constant, where c6 is the problem's
    /// shared rounding of 1/6.
    h_sixth: HybridNumber,
    neg_lambda: Option<HybridNumber>,
}

impl OdeConstants {
    fn build(ops: &HybridOps<'_>, prob: &OdeProblem) -> Result<Self, KernelError> {
        let ms = ops.modulus_set();
        let exact = |v: &Dyadic| HybridNumber::from_dyadic_exact(v, ms).map_err(KernelError::from);
        Ok(OdeConstants {
            one: exact(&Dyadic::one())?,
            minus_one: exact(&-Dyadic::one())?,
            two: exact(&Dyadic::from_int(2))?,
            h: exact(&prob.h)?,
            h_half: exact(&prob.h.mul_pow2(-1))?,
            h_sixth: exact(&(&prob.h * &prob.sixth_coefficient()))?,
            neg_lambda: match &prob.rhs {
                RhsKind::LinearDecay { lambda } => Some(exact(&-lambda.clone())?),
                _ => None,
            },
        })
    }

    fn rhs(
        &self,
        ops: &HybridOps<'_>,
        kind: &RhsKind,
        y: &HybridNumber,
        tape: &mut Tape,
    ) -> Result<HybridNumber, KernelError> {
        match kind {
            RhsKind::LinearDecay { .. } => {
                mul_headroom(ops, self.neg_lambda.as_ref().unwrap(), y, tape)
            }
            RhsKind::Logistic => {
                let neg_y = mul_headroom(ops, &self.minus_one, y, tape)?;
                let u = add_headroom(ops, &self.one, &neg_y, tape)?;
                mul_headroom(ops, y, &u, tape)
            }
            RhsKind::CubicDamping => {
                let t = mul_headroom(ops, y, y, tape)?;
                let t3 = mul_headroom(ops, &t, y, tape)?;
                let neg_t3 = mul_headroom(ops, &self.minus_one, &t3, tape)?;
                add_headroom(ops, y, &neg_t3, tape)
            }
        }
    }
}

/// Classical fixed-step fourth-order integration carried out in hybrid
/// arithmetic. The step constants `h` and `h/2` are exact dyadics; the 1/6
/// update coefficient is the problem's shared `coeff_bits` rounding, folded
/// with `h` into one exact constant. Checkpoints record the reconstructed
/// state and the budget total at the sampling stride and at the final step.
///
/// The state's tracker is audited after every step. Without that reset the
/// multiplicative slack of the nonlinear right-hand side compounds across
/// steps, and normalization shifts sized from the inflated bound would
/// destroy true mantissa bits.
pub fn rk4_integrate(ops: &HybridOps<'_>, prob: &OdeProblem) -> Result<OdeOutput, KernelError> {
    let ms = ops.modulus_set();
    let consts = OdeConstants::build(ops, prob)?;
    let mut tape = Tape::new();
    let mut y = HybridNumber::from_dyadic_exact(&prob.y0, ms).map_err(KernelError::from)?;
    let mut checkpoints = Vec::new();
    for step in 0..prob.steps {
        let k1 = consts.rhs(ops, &prob.rhs, &y, &mut tape)?;
        let y2 = {
            let t = mul_headroom(ops, &consts.h_half, &k1, &mut tape)?;
            add_headroom(ops, &y, &t, &mut tape)?
        };
        let k2 = consts.rhs(ops, &prob.rhs, &y2, &mut tape)?;
        let y3 = {
            let t = mul_headroom(ops, &consts.h_half, &k2, &mut tape)?;
            add_headroom(ops, &y, &t, &mut tape)?
        };
        let k3 = consts.rhs(ops, &prob.rhs, &y3, &mut tape)?;
        let y4 = {
            let t = mul_headroom(ops, &consts.h, &k3, &mut tape)?;
            add_headroom(ops, &y, &t, &mut tape)?
        };
        let k4 = consts.rhs(ops, &prob.rhs, &y4, &mut tape)?;
        let left = {
            let t = mul_headroom(ops, &consts.two, &k2, &mut tape)?;
            add_headroom(ops, &k1, &t, &mut tape)?
        };
        let right = {
            let t = mul_headroom(ops, &consts.two, &k3, &mut tape)?;
            add_headroom(ops, &t, &k4, &mut tape)?
        };
        let ksum = add_headroom(ops, &left, &right, &mut tape)?;
        let update = mul_headroom(ops, &consts.h_sixth, &ksum, &mut tape)?;
        y = add_headroom(ops, &y, &update, &mut tape)?;
        audit(ops, &mut y, &mut tape);
        let done = step + 1;
        if done % prob.checkpoint_every == 0 || done == prob.steps {
            tape.counters.record(CounterKind::Reconstruction);
            checkpoints.push(TrajectoryPoint {
                step: done,
                value: y.phi(ms),
                budget_total: tape.budget.total().clone(),
            });
        }
    }
    let final_value = checkpoints.last().expect("at least one step").value.clone();
    Ok(OdeOutput { final_state: y, final_value, checkpoints, tape })
}
