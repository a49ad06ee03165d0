//! The hybrid number type and its primitive operations.
//!
//! A value is `(residues, exponent, bound)` with semantics
//! `CRT(residues) * 2^exponent`. The bound is a conservative tracker for the
//! reconstructed magnitude: it is maintained algebraically (products under
//! multiplication, sums under addition, shifts under exact exponent
//! synchronization) so that `|CRT(residues)| <= bound < M/2` holds at all
//! times. Multiplication and addition are exact; rounding enters only through
//! threshold-driven normalization and through the lossy direction of exponent
//! synchronization, and every such event is charged to an [`ErrorBudget`].

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::rns::{round_div_pow2, ModulusSet, ResidueVector, RnsError, RoundingMode};
use crate::telemetry::{CounterKind, Counters};

/// Errors from hybrid operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HybridError {
    #[error("result magnitude bound would reach M/2; normalize first")]
    WouldWrap,
    #[error("input list is empty")]
    EmptyInput,
    #[error("magnitude estimate lies too close to the sign fold")]
    AmbiguousSign,
    #[error("invalid normalization policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid hybrid record: {0}")]
    InvalidRecord(String),
    #[error(transparent)]
    Rns(#[from] RnsError),
}

/// How the per-event shift `s` is chosen when normalization fires.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShiftRule {
    /// `s = max(0, bitlen(bound) - target_bits)`, restoring a fixed
    /// post-event magnitude budget.
    ByTargetBits,
    /// A fixed shift applied on every event.
    Fixed(u32),
}

/// Threshold, shift rule, and rounding mode governing normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationPolicy {
    tau: BigUint,
    target_bits: u32,
    mode: RoundingMode,
    check_every: u32,
    shift: ShiftRule,
}

impl NormalizationPolicy {
    /// Validates `0 < 2^target_bits + 1 < tau < M/2` so that a triggered
    /// normalization always restores headroom below the threshold.
    pub fn new(
        ms: &ModulusSet,
        tau: BigUint,
        target_bits: u32,
        mode: RoundingMode,
        check_every: u32,
        shift: ShiftRule,
    ) -> Result<Self, HybridError> {
        if tau.is_zero() {
            return Err(HybridError::InvalidPolicy("tau must be positive".into()));
        }
        if !ms.fits(&tau) {
            return Err(HybridError::InvalidPolicy(format!(
                "tau = {tau} must be below M/2"
            )));
        }
        let budget = (BigUint::one() << target_bits) + BigUint::one();
        if budget >= tau {
            return Err(HybridError::InvalidPolicy(format!(
                "2^target_bits + 1 = {budget} must be below tau = {tau}"
            )));
        }
        if check_every == 0 {
            return Err(HybridError::InvalidPolicy("check_every must be at least 1".into()));
        }
        if let ShiftRule::Fixed(s) = shift {
            if s == 0 {
                return Err(HybridError::InvalidPolicy("fixed shift must be at least 1".into()));
            }
        }
        Ok(NormalizationPolicy { tau, target_bits, mode, check_every, shift })
    }

    /// Default policy: `tau = M/4`, a post-event budget of about half the
    /// composite bit width (minus two guard bits so a product of two freshly
    /// normalized values stays below `M/2`), nearest-even rounding, and
    /// audits every 1024 operations.
    pub fn default_for(ms: &ModulusSet) -> Result<Self, HybridError> {
        let bits = ms.composite().bits() as u32;
        let target_bits = (bits / 2).saturating_sub(2).max(2);
        let floor = (BigUint::one() << target_bits) + BigUint::from(2u8);
        let tau = (ms.composite() >> 2u8).max(floor);
        NormalizationPolicy::new(ms, tau, target_bits, RoundingMode::NearestEven, 1024, ShiftRule::ByTargetBits)
    }

    pub fn tau(&self) -> &BigUint {
        &self.tau
    }

    pub fn target_bits(&self) -> u32 {
        self.target_bits
    }

    pub fn mode(&self) -> RoundingMode {
        self.mode
    }

    pub fn check_every(&self) -> u32 {
        self.check_every
    }

    pub fn shift_rule(&self) -> ShiftRule {
        self.shift
    }

    fn shift_for(&self, bound: &BigUint) -> u64 {
        match self.shift {
            ShiftRule::ByTargetBits => bound.bits().saturating_sub(self.target_bits as u64),
            ShiftRule::Fixed(s) => s as u64,
        }
    }
}

/// Which kind of event contributed rounding error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Normalization,
    LossySync,
}

/// One error-contributing event: the worst-case charge and the measured error.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetEvent {
    /// Arithmetic-op count at the time of the event.
    pub op_index: u64,
    pub kind: EventKind,
    /// Power-of-two shift applied to the reconstructed integer.
    pub shift: u64,
    /// Exponent of the affected operand before the event.
    pub exponent_before: i64,
    /// Worst-case value-space error charged to the budget.
    pub bound: Dyadic,
    /// Exact signed value-space error this event introduced.
    pub true_error: Dyadic,
}

/// Running sum of per-event worst-case bounds plus the event log. Merging is
/// associative and commutative in the total.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBudget {
    total: Dyadic,
    events: Vec<BudgetEvent>,
}

impl Default for ErrorBudget {
    fn default() -> Self {
        ErrorBudget::new()
    }
}

impl ErrorBudget {
    pub fn new() -> Self {
        ErrorBudget { total: Dyadic::zero(), events: Vec::new() }
    }

    pub fn push(&mut self, event: BudgetEvent) {
        self.total = &self.total + &event.bound;
        self.events.push(event);
    }

    pub fn total(&self) -> &Dyadic {
        &self.total
    }

    pub fn events(&self) -> &[BudgetEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn merge_in(&mut self, other: &ErrorBudget) {
        self.total = &self.total + &other.total;
        self.events.extend(other.events.iter().cloned());
    }
}

/// Counters plus error budget carried through a computation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tape {
    pub counters: Counters,
    pub budget: ErrorBudget,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn merge_in(&mut self, other: &Tape) {
        self.counters.merge_in(&other.counters);
        self.budget.merge_in(&other.budget);
    }
}

/// Sound bounds on `|CRT(residues)|` derived from the fractional estimator,
/// tagged with the index of the source element for selection.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeInterval {
    pub lo: Dyadic,
    pub hi: Dyadic,
    pub idx: usize,
}

/// Serialization record for a hybrid number; residues and bound travel as
/// decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridRecord {
    pub residues: Vec<String>,
    pub exponent: i64,
    pub bound: String,
}

/// A hybrid value `(r, f)` with semantics `CRT(r) * 2^f` and a conservative
/// magnitude tracker.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HybridNumber {
    residues: ResidueVector,
    exponent: i64,
    bound: BigUint,
}

impl HybridNumber {
    /// Canonical zero: zero residues, exponent 0, bound 0.
    pub fn zero(ms: &ModulusSet) -> Self {
        HybridNumber {
            residues: ms.encode(&BigInt::zero()).expect("zero always encodes"),
            exponent: 0,
            bound: BigUint::zero(),
        }
    }

    /// A zero tagged with an explicit exponent, used to seed accumulators so
    /// the first accumulation needs no alignment. Semantically equal to zero.
    pub fn zero_at(ms: &ModulusSet, exponent: i64) -> Self {
        let mut z = HybridNumber::zero(ms);
        z.exponent = exponent;
        z
    }

    /// Converts a finite value into the normalized mantissa window
    /// `2^(mantissa_bits-1) <= |N| < 2^mantissa_bits`, rounding to nearest
    /// even when the value carries more significant bits. Exact otherwise;
    /// the relative representation error is at most `2^(1-mantissa_bits)`.
    pub fn from_real(v: &Dyadic, ms: &ModulusSet, mantissa_bits: u32) -> Self {
        assert!(mantissa_bits >= 2, "mantissa window needs at least 2 bits");
        assert!(
            ms.fits(&(BigUint::one() << mantissa_bits)),
            "mantissa window must fit below M/2"
        );
        if v.is_zero() {
            return HybridNumber::zero(ms);
        }
        let r = v.round_to_bits(mantissa_bits);
        let pad = mantissa_bits as u64 - r.mantissa_bits();
        let mantissa = r.mantissa() << pad;
        let exponent = r.exponent() - pad as i64;
        let bound = mantissa.magnitude().clone();
        let residues = ms.encode(&mantissa).expect("windowed mantissa fits");
        HybridNumber { residues, exponent, bound }
    }

    /// Encodes a dyadic value exactly with its canonical (odd) mantissa.
    /// Unlike [`HybridNumber::from_real`] this never widens the mantissa, so
    /// small constants keep small bounds.
    pub fn from_dyadic_exact(v: &Dyadic, ms: &ModulusSet) -> Result<Self, HybridError> {
        if v.is_zero() {
            return Ok(HybridNumber::zero(ms));
        }
        let residues = ms.encode(v.mantissa())?;
        Ok(HybridNumber {
            residues,
            exponent: v.exponent(),
            bound: v.mantissa().magnitude().clone(),
        })
    }

    /// The exact semantic value `CRT(residues) * 2^exponent`.
    pub fn phi(&self, ms: &ModulusSet) -> Dyadic {
        let n = ms.reconstruct(&self.residues).expect("value bound to this modulus set");
        Dyadic::new(n, self.exponent)
    }

    pub fn residues(&self) -> &ResidueVector {
        &self.residues
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn bound(&self) -> &BigUint {
        &self.bound
    }

    pub fn is_zero_value(&self) -> bool {
        self.residues.is_all_zero()
    }

    /// Replaces the tracker with a smaller sound bound, as produced by an
    /// interval audit or an exact reconstruction.
    pub(crate) fn tighten_bound(&mut self, bound: BigUint) {
        if bound < self.bound {
            self.bound = bound;
        }
    }

    pub fn to_record(&self) -> HybridRecord {
        HybridRecord {
            residues: self.residues.residues().iter().map(|r| r.to_string()).collect(),
            exponent: self.exponent,
            bound: self.bound.to_string(),
        }
    }

    /// Parses and fully validates a record: channel count, residue ranges,
    /// the wrap-freedom invariant, and tracker soundness.
    pub fn from_record(record: &HybridRecord, ms: &ModulusSet) -> Result<Self, HybridError> {
        if record.residues.len() != ms.k() {
            return Err(RnsError::ChannelCountMismatch {
                expected: ms.k(),
                got: record.residues.len(),
            }
            .into());
        }
        let mut residues = Vec::with_capacity(record.residues.len());
        for (i, (text, &m)) in record.residues.iter().zip(ms.moduli()).enumerate() {
            let r: u64 = text
                .parse()
                .map_err(|_| HybridError::InvalidRecord(format!("residue {i} is not an integer: {text:?}")))?;
            if r >= m {
                return Err(HybridError::InvalidRecord(format!(
                    "residue {i} = {r} is not below its modulus {m}"
                )));
            }
            residues.push(r);
        }
        let bound: BigUint = record
            .bound
            .parse()
            .map_err(|_| HybridError::InvalidRecord(format!("bound is not an integer: {:?}", record.bound)))?;
        if !ms.fits(&bound) {
            return Err(HybridError::InvalidRecord("bound is not below M/2".into()));
        }
        let rv = ResidueVector::from_raw(residues);
        let n = ms.reconstruct(&rv)?;
        if n.magnitude() > &bound {
            return Err(HybridError::InvalidRecord(format!(
                "tracker bound {bound} is below the reconstructed magnitude {}",
                n.magnitude()
            )));
        }
        Ok(HybridNumber { residues: rv, exponent: record.exponent, bound })
    }
}

/// Hybrid arithmetic bound to one modulus set and one normalization policy.
///
/// Operations are pure given their inputs; counters and budget events are
/// appended to the caller's [`Tape`].
#[derive(Clone, Copy, Debug)]
pub struct HybridOps<'a> {
    ms: &'a ModulusSet,
    policy: &'a NormalizationPolicy,
}

impl<'a> HybridOps<'a> {
    pub fn new(ms: &'a ModulusSet, policy: &'a NormalizationPolicy) -> Self {
        HybridOps { ms, policy }
    }

    pub fn modulus_set(&self) -> &ModulusSet {
        self.ms
    }

    pub fn policy(&self) -> &NormalizationPolicy {
        self.policy
    }

    /// True when the tracker bound has reached the threshold. Conservative:
    /// may fire while the true magnitude is still below tau, never misses a
    /// true crossing.
    pub fn needs_normalization(&self, x: &HybridNumber) -> bool {
        x.bound >= *self.policy.tau()
    }

    fn mul_impl(&self, x: &HybridNumber, y: &HybridNumber) -> Result<HybridNumber, HybridError> {
        let bound = &x.bound * &y.bound;
        if !self.ms.fits(&bound) {
            return Err(HybridError::WouldWrap);
        }
        let residues = self.ms.mod_mul(&x.residues, &y.residues)?;
        if residues.is_all_zero() {
            return Ok(HybridNumber::zero(self.ms));
        }
        let exponent = x
            .exponent
            .checked_add(y.exponent)
            .expect("exponent overflow in multiplication");
        Ok(HybridNumber { residues, exponent, bound })
    }

    /// Exact product: channelwise residue multiplication plus exponent
    /// addition. Errors with `WouldWrap` when the bound product reaches M/2.
    pub fn mul(
        &self,
        x: &HybridNumber,
        y: &HybridNumber,
        tape: &mut Tape,
    ) -> Result<HybridNumber, HybridError> {
        let z = self.mul_impl(x, y)?;
        tape.counters.record(CounterKind::Mul);
        Ok(z)
    }

    /// Brings both operands to one exponent. The exact direction rewrites the
    /// larger-exponent operand downward by scaling its residues up, which
    /// preserves the value; only when that would break the wrap bound is the
    /// smaller-exponent operand divided down, charging the budget.
    pub fn sync(
        &self,
        x: &HybridNumber,
        y: &HybridNumber,
        tape: &mut Tape,
    ) -> Result<(HybridNumber, HybridNumber), HybridError> {
        self.sync_impl(x, y, tape, false)
    }

    /// Sync for operands about to be added: the exact upshift must leave room
    /// for the partner's bound in the sum, otherwise the upshifted bound can
    /// land just under M/2 and strand the addition without recourse.
    pub(crate) fn sync_with_reserve(
        &self,
        x: &HybridNumber,
        y: &HybridNumber,
        tape: &mut Tape,
    ) -> Result<(HybridNumber, HybridNumber), HybridError> {
        self.sync_impl(x, y, tape, true)
    }

    fn sync_impl(
        &self,
        x: &HybridNumber,
        y: &HybridNumber,
        tape: &mut Tape,
        reserve_for_add: bool,
    ) -> Result<(HybridNumber, HybridNumber), HybridError> {
        if x.exponent == y.exponent {
            return Ok((x.clone(), y.clone()));
        }
        let (hi, lo, hi_is_x) = if x.exponent > y.exponent {
            (x, y, true)
        } else {
            (y, x, false)
        };
        let delta = hi.exponent.abs_diff(lo.exponent);

        let order = |hi_side: HybridNumber, lo_side: HybridNumber| {
            if hi_is_x {
                (hi_side, lo_side)
            } else {
                (lo_side, hi_side)
            }
        };

        // Zeros rescale exactly at either exponent.
        if hi.bound.is_zero() {
            let mut z = hi.clone();
            z.exponent = lo.exponent;
            tape.counters.record(CounterKind::SyncExact);
            return Ok(order(z, lo.clone()));
        }
        if lo.bound.is_zero() {
            let mut z = lo.clone();
            z.exponent = hi.exponent;
            tape.counters.record(CounterKind::SyncExact);
            return Ok(order(hi.clone(), z));
        }

        // Exact upshift of the larger-exponent operand, when representable.
        if hi.bound.bits() + delta <= self.ms.composite().bits() + 1 {
            let shifted = &hi.bound << delta;
            let combined = if reserve_for_add { &shifted + &lo.bound } else { shifted.clone() };
            if self.ms.fits(&combined) {
                let residues = self.ms.scale_up(&hi.residues, delta)?;
                let out = HybridNumber { residues, exponent: lo.exponent, bound: shifted };
                tape.counters.record(CounterKind::SyncExact);
                return Ok(order(out, lo.clone()));
            }
        }

        // Lossy fallback: divide the smaller-exponent operand up to the
        // larger exponent.
        let mode = self.policy.mode();
        let n = self.ms.reconstruct(&lo.residues)?;
        let (q, err) = round_div_pow2(&n, delta, mode);
        let residues = self.ms.encode(&q)?;
        let out = HybridNumber {
            residues,
            exponent: hi.exponent,
            bound: q.magnitude().clone(),
        };
        tape.counters.record(CounterKind::SyncLossy);
        tape.budget.push(BudgetEvent {
            op_index: tape.counters.arithmetic_ops(),
            kind: EventKind::LossySync,
            shift: delta,
            exponent_before: lo.exponent,
            bound: lossy_charge(mode, lo.exponent, delta),
            true_error: Dyadic::new(err, lo.exponent),
        });
        Ok(order(hi.clone(), out))
    }

    fn add_synced(&self, a: &HybridNumber, b: &HybridNumber) -> Result<HybridNumber, HybridError> {
        debug_assert_eq!(a.exponent, b.exponent, "operands must share an exponent");
        let bound = &a.bound + &b.bound;
        if !self.ms.fits(&bound) {
            return Err(HybridError::WouldWrap);
        }
        let residues = self.ms.mod_add(&a.residues, &b.residues)?;
        if residues.is_all_zero() {
            return Ok(HybridNumber::zero(self.ms));
        }
        Ok(HybridNumber { residues, exponent: a.exponent, bound })
    }

    /// Synchronizes exponents, then adds residues channelwise. Exact apart
    /// from any sync rounding already charged to the budget.
    pub fn add(
        &self,
        x: &HybridNumber,
        y: &HybridNumber,
        tape: &mut Tape,
    ) -> Result<HybridNumber, HybridError> {
        let (a, b) = self.sync(x, y, tape)?;
        let z = self.add_synced(&a, &b)?;
        tape.counters.record(CounterKind::Add);
        Ok(z)
    }

    /// `acc + x * y` with one synchronization. Normalization is deferred to
    /// the threshold: the accumulator is normalized before returning only
    /// when the post-add tracker reaches tau, and operands are normalized up
    /// front only to restore headroom. `WouldWrap` escapes solely when the
    /// policy cannot restore headroom at all.
    pub fn mac(
        &self,
        acc: &HybridNumber,
        x: &HybridNumber,
        y: &HybridNumber,
        tape: &mut Tape,
    ) -> Result<HybridNumber, HybridError> {
        let mut p = self.mul_impl(x, y)?;
        let mut a = acc.clone();
        if self.needs_normalization(&a) {
            a = self.normalize(&a, tape);
        }
        if self.needs_normalization(&p) {
            p = self.normalize(&p, tape);
        }
        (a, p) = self.sync_with_reserve(&a, &p, tape)?;
        if !self.ms.fits(&(&a.bound + &p.bound)) {
            a = self.normalize(&a, tape);
            p = self.normalize(&p, tape);
            (a, p) = self.sync_with_reserve(&a, &p, tape)?;
            if !self.ms.fits(&(&a.bound + &p.bound)) {
                return Err(HybridError::WouldWrap);
            }
        }
        let mut out = self.add_synced(&a, &p)?;
        if self.needs_normalization(&out) {
            out = self.normalize(&out, tape);
        }
        tape.counters.record(CounterKind::Mac);
        Ok(out)
    }

    /// Reconstructs, scales by `2^s`, re-encodes, and bumps the exponent.
    /// The shift follows the policy rule; with `ByTargetBits` and a bound
    /// already inside the budget this is the identity and charges nothing.
    pub fn normalize(&self, x: &HybridNumber, tape: &mut Tape) -> HybridNumber {
        if x.residues.is_all_zero() {
            return HybridNumber::zero(self.ms);
        }
        let s = self.policy.shift_for(&x.bound);
        if s == 0 {
            return x.clone();
        }
        let mode = self.policy.mode();
        let n = self.ms.reconstruct(&x.residues).expect("value bound to this modulus set");
        let true_trigger = n.magnitude() >= self.policy.tau();
        let (q, err) = round_div_pow2(&n, s, mode);
        tape.counters.record(CounterKind::Normalization);
        if true_trigger {
            tape.counters.record(CounterKind::NormalizationTrue);
        }
        tape.budget.push(BudgetEvent {
            op_index: tape.counters.arithmetic_ops(),
            kind: EventKind::Normalization,
            shift: s,
            exponent_before: x.exponent,
            bound: lossy_charge(mode, x.exponent, s),
            true_error: Dyadic::new(err, x.exponent),
        });
        if q.is_zero() {
            return HybridNumber::zero(self.ms);
        }
        let residues = self.ms.encode(&q).expect("scaled value shrinks");
        // ceil(bound / 2^s) + 1 covers magnitude growth from rounding up.
        let bound = ((&x.bound - BigUint::one()) >> s) + BigUint::from(2u8);
        let exponent = x.exponent + s as i64;
        HybridNumber { residues, exponent, bound }
    }

    /// Tournament argmax of `|Phi|` driven by interval evaluations; exact
    /// reconstruction is spent only on candidates whose intervals overlap.
    pub fn select_max_magnitude(
        &self,
        xs: &[HybridNumber],
        tape: &mut Tape,
    ) -> Result<(usize, MagnitudeInterval), HybridError> {
        if xs.is_empty() {
            return Err(HybridError::EmptyInput);
        }
        struct Candidate {
            idx: usize,
            interval: MagnitudeInterval,
            lo_value: Dyadic,
            hi_value: Dyadic,
            exact: Option<Dyadic>,
        }

        let reconstruct_abs = |x: &HybridNumber, tape: &mut Tape| -> Dyadic {
            tape.counters.record(CounterKind::Reconstruction);
            let n = self.ms.reconstruct(x.residues()).expect("bound to this set");
            Dyadic::from_bigint(n.abs())
        };

        let mut round: Vec<Candidate> = Vec::with_capacity(xs.len());
        for (idx, x) in xs.iter().enumerate() {
            tape.counters.record(CounterKind::IntervalEval);
            let cand = match magnitude_interval(self.ms, x) {
                Ok(mut interval) => {
                    interval.idx = idx;
                    let lo_value = interval.lo.mul_pow2(x.exponent());
                    let hi_value = interval.hi.mul_pow2(x.exponent());
                    Candidate { idx, interval, lo_value, hi_value, exact: None }
                }
                Err(HybridError::AmbiguousSign) => {
                    let mag = reconstruct_abs(x, tape);
                    let interval = MagnitudeInterval { lo: mag.clone(), hi: mag.clone(), idx };
                    let value = mag.mul_pow2(x.exponent());
                    Candidate {
                        idx,
                        interval,
                        lo_value: value.clone(),
                        hi_value: value.clone(),
                        exact: Some(value),
                    }
                }
                Err(e) => return Err(e),
            };
            round.push(cand);
        }

        let ensure_exact = |c: &mut Candidate, tape: &mut Tape| {
            if c.exact.is_none() {
                let mag = reconstruct_abs(&xs[c.idx], tape);
                c.interval = MagnitudeInterval { lo: mag.clone(), hi: mag.clone(), idx: c.idx };
                let value = mag.mul_pow2(xs[c.idx].exponent());
                c.lo_value = value.clone();
                c.hi_value = value.clone();
                c.exact = Some(value);
            }
        };

        while round.len() > 1 {
            let mut next = Vec::with_capacity(round.len().div_ceil(2));
            let mut iter = round.into_iter();
            while let Some(mut a) = iter.next() {
                let Some(mut b) = iter.next() else {
                    next.push(a);
                    break;
                };
                let winner = if a.lo_value > b.hi_value {
                    a
                } else if b.lo_value > a.hi_value {
                    b
                } else {
                    ensure_exact(&mut a, tape);
                    ensure_exact(&mut b, tape);
                    match a.exact.as_ref().unwrap().cmp_value(b.exact.as_ref().unwrap()) {
                        std::cmp::Ordering::Greater => a,
                        std::cmp::Ordering::Less => b,
                        std::cmp::Ordering::Equal => {
                            if a.idx <= b.idx {
                                a
                            } else {
                                b
                            }
                        }
                    }
                };
                next.push(winner);
            }
            round = next;
        }
        let winner = round.pop().expect("non-empty tournament");
        Ok((winner.idx, winner.interval))
    }
}

/// Worst-case value-space error of dividing at exponent `f` by `2^s`:
/// `2^(f+s-1)` under nearest-even, `2^(f+s)` (strict) under floor.
fn lossy_charge(mode: RoundingMode, exponent_before: i64, shift: u64) -> Dyadic {
    let e = exponent_before + shift as i64;
    match mode {
        RoundingMode::NearestEven => Dyadic::pow2(e - 1),
        RoundingMode::FloorDiv => Dyadic::pow2(e),
    }
}

/// Estimates `|CRT(residues)|` from the fractional CRT sum without full
/// reconstruction. The fixed-point estimate carries a one-sided slack of
/// `k * 2^-p`; the returned interval is sound whenever the slack band stays
/// clear of the sign fold at 1/2 and of the wrap at 1, otherwise
/// `AmbiguousSign` tells the caller to reconstruct exactly.
pub fn magnitude_interval(
    ms: &ModulusSet,
    x: &HybridNumber,
) -> Result<MagnitudeInterval, HybridError> {
    let residues = x.residues();
    if residues.len() != ms.k() {
        return Err(RnsError::ChannelCountMismatch { expected: ms.k(), got: residues.len() }.into());
    }
    let q = ms.frac_shift();
    let mut total = BigUint::zero();
    for (&r, w) in residues.residues().iter().zip(ms.frac_weights()) {
        total += w * BigUint::from(r);
    }
    let mask = (BigUint::one() << q) - BigUint::one();
    let fraction = total & mask;
    let estimate = Dyadic::new(BigInt::from(fraction), -(q as i64));
    let slack = Dyadic::new(BigInt::from(ms.k()), -(ms.frac_precision() as i64));
    let upper = &estimate + &slack;
    let one = Dyadic::one();
    let half = Dyadic::pow2(-1);
    let m_value = Dyadic::from_biguint(ms.composite());
    let cap = Dyadic::from_biguint(ms.half_floor());

    if upper > one {
        return Err(HybridError::AmbiguousSign);
    }
    let (lo_frac, hi_frac) = if upper <= half {
        // Entire band on the nonnegative side of the fold.
        (estimate, upper)
    } else if estimate >= half {
        // Entire band on the negative side: |N|/M = 1 - fraction.
        (&one - &upper, &one - &estimate)
    } else {
        return Err(HybridError::AmbiguousSign);
    };
    let lo = &lo_frac * &m_value;
    let hi = (&hi_frac * &m_value).min(cap);
    Ok(MagnitudeInterval { lo, hi, idx: 0 })
}
