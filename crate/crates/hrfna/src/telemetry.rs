//! Operation and normalization-event accounting.
//!
//! Counters are plain values carried inside results and merged componentwise,
//! so parallel workers can aggregate without shared state.

use serde::{Deserialize, Serialize};

/// Event kinds recorded by [`Counters::record`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CounterKind {
    Mul,
    Add,
    Mac,
    SyncExact,
    SyncLossy,
    Normalization,
    /// A normalization whose reconstructed magnitude really was at or above
    /// the threshold (as opposed to one forced by tracker slack).
    NormalizationTrue,
    Reconstruction,
    IntervalEval,
}

/// Monotone per-run counters. `merge` is a commutative monoid with
/// [`Counters::default`] as identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub muls: u64,
    pub adds: u64,
    pub macs: u64,
    pub syncs_exact: u64,
    pub syncs_lossy: u64,
    pub normalizations: u64,
    pub normalizations_true: u64,
    pub reconstructions: u64,
    pub interval_evals: u64,
}

impl Counters {
    pub fn record(&mut self, kind: CounterKind) {
        match kind {
            CounterKind::Mul => self.muls += 1,
            CounterKind::Add => self.adds += 1,
            CounterKind::Mac => self.macs += 1,
            CounterKind::SyncExact => self.syncs_exact += 1,
            CounterKind::SyncLossy => self.syncs_lossy += 1,
            CounterKind::Normalization => self.normalizations += 1,
            CounterKind::NormalizationTrue => self.normalizations_true += 1,
            CounterKind::Reconstruction => self.reconstructions += 1,
            CounterKind::IntervalEval => self.interval_evals += 1,
        }
    }

    /// Total arithmetic operations: muls + adds + macs. A mac counts once;
    /// its internal multiply and accumulate are not double counted.
    pub fn arithmetic_ops(&self) -> u64 {
        self.muls + self.adds + self.macs
    }

    pub fn merge(&self, other: &Counters) -> Counters {
        Counters {
            muls: self.muls + other.muls,
            adds: self.adds + other.adds,
            macs: self.macs + other.macs,
            syncs_exact: self.syncs_exact + other.syncs_exact,
            syncs_lossy: self.syncs_lossy + other.syncs_lossy,
            normalizations: self.normalizations + other.normalizations,
            normalizations_true: self.normalizations_true + other.normalizations_true,
            reconstructions: self.reconstructions + other.reconstructions,
            interval_evals: self.interval_evals + other.interval_evals,
        }
    }

    pub fn merge_in(&mut self, other: &Counters) {
        *self = self.merge(other);
    }
}

/// Amortization ratios derived from a counter snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmortizationReport {
    pub total_ops: u64,
    pub normalizations: u64,
    pub normalizations_true: u64,
    /// Arithmetic ops per tracker-triggered normalization event.
    pub ops_per_normalization: f64,
    /// Arithmetic ops per event whose audited magnitude really crossed the
    /// threshold.
    pub ops_per_true_normalization: f64,
    pub reconstructions_per_op: f64,
    /// Set when no normalization fired; the ratios then degenerate to the
    /// raw op count.
    pub no_events: bool,
}

/// Division-shielded ratio report.
pub fn amortization_report(c: &Counters) -> AmortizationReport {
    let ops = c.arithmetic_ops();
    AmortizationReport {
        total_ops: ops,
        normalizations: c.normalizations,
        normalizations_true: c.normalizations_true,
        ops_per_normalization: ops as f64 / c.normalizations.max(1) as f64,
        ops_per_true_normalization: ops as f64 / c.normalizations_true.max(1) as f64,
        reconstructions_per_op: c.reconstructions as f64 / ops.max(1) as f64,
        no_events: c.normalizations == 0,
    }
}
