//! Reduced-scale invariant suites, runnable from the command line against an
//! arbitrary configuration.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::Signed;
use rand_chacha::rand_core::RngCore;

use crate::dyadic::Dyadic;
use crate::hybrid::{
    magnitude_interval, HybridNumber, HybridOps, NormalizationPolicy, ShiftRule,
};
use crate::kernels;
use crate::oracle;
use crate::rns::{ModulusSet, RoundingMode};
use crate::workload::{generate_vector, rng_from_seed, Distribution, OdeProblem, RhsKind, WorkloadRng};

/// Outcome of one suite.
#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn pass(name: &'static str, detail: String) -> Self {
        SuiteResult { name, passed: true, detail }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        SuiteResult { name, passed: false, detail }
    }
}

fn random_magnitude_below(limit: &BigUint, rng: &mut WorkloadRng) -> BigUint {
    let mut bytes = vec![0u8; (limit.bits() as usize).div_ceil(8) + 8];
    rng.fill_bytes(&mut bytes);
    BigUint::from_bytes_le(&bytes) % limit
}

fn random_centered(ms: &ModulusSet, rng: &mut WorkloadRng) -> BigInt {
    let mag = random_magnitude_below(ms.half_floor(), rng);
    let sign = if rng.next_u64() & 1 == 1 { Sign::Minus } else { Sign::Plus };
    if mag.bits() == 0 {
        BigInt::from(0)
    } else {
        BigInt::from_biguint(sign, mag)
    }
}

/// Random odd mantissa with exactly `bits` significant bits.
fn random_odd_mantissa(bits: u64, rng: &mut WorkloadRng) -> BigUint {
    let mut bytes = vec![0u8; (bits as usize).div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    let mut m = BigUint::from_bytes_le(&bytes);
    m |= BigUint::from(1u8) << (bits - 1);
    m |= BigUint::from(1u8);
    m & ((BigUint::from(1u8) << bits) - BigUint::from(1u8))
}

fn crt_round_trip(ms: &ModulusSet, seed: u64, trials: usize) -> SuiteResult {
    const NAME: &str = "crt_round_trip";
    let mut rng = rng_from_seed(seed);
    for i in 0..trials {
        let v = random_centered(ms, &mut rng);
        let rv = match ms.encode(&v) {
            Ok(rv) => rv,
            Err(e) => return SuiteResult::fail(NAME, format!("encode failed at trial {i}: {e}")),
        };
        match ms.reconstruct(&rv) {
            Ok(back) if back == v => {}
            Ok(back) => {
                return SuiteResult::fail(NAME, format!("trial {i}: {v} reconstructed as {back}"))
            }
            Err(e) => return SuiteResult::fail(NAME, format!("reconstruct failed: {e}")),
        }
    }
    SuiteResult::pass(NAME, format!("{trials} random round trips"))
}

fn residue_homomorphism(ms: &ModulusSet, seed: u64, trials: usize) -> SuiteResult {
    const NAME: &str = "residue_homomorphism";
    let mut rng = rng_from_seed(seed ^ 0x9e37_79b9);
    let half = ms.half_floor();
    for i in 0..trials {
        let a = random_centered(ms, &mut rng);
        let b = random_centered(ms, &mut rng);
        let ra = ms.encode(&a).unwrap();
        let rb = ms.encode(&b).unwrap();
        let sum = &a + &b;
        if ms.fits(sum.magnitude()) {
            let got = ms.reconstruct(&ms.mod_add(&ra, &rb).unwrap()).unwrap();
            if got != sum {
                return SuiteResult::fail(NAME, format!("trial {i}: add {a} + {b} gave {got}"));
            }
        }
        let product = &a * &b;
        if ms.fits(product.magnitude()) {
            let got = ms.reconstruct(&ms.mod_mul(&ra, &rb).unwrap()).unwrap();
            if got != product {
                return SuiteResult::fail(NAME, format!("trial {i}: mul {a} * {b} gave {got}"));
            }
        }
        let _ = half;
    }
    SuiteResult::pass(NAME, format!("{trials} random add/mul homomorphism checks"))
}

fn scale_reencode_bounds(ms: &ModulusSet, seed: u64, trials: usize) -> SuiteResult {
    const NAME: &str = "scale_reencode_bounds";
    let mut rng = rng_from_seed(seed ^ 0x5151_5151);
    for i in 0..trials {
        let v = random_centered(ms, &mut rng);
        let rv = ms.encode(&v).unwrap();
        let s = (rng.next_u64() % 48) as u32;
        for mode in [RoundingMode::FloorDiv, RoundingMode::NearestEven] {
            let (scaled, err) = ms.scale_and_reencode(&rv, s, mode).unwrap();
            let n = ms.reconstruct(&scaled).unwrap();
            let recomposed = (&n << s) + &err;
            if recomposed != v {
                return SuiteResult::fail(NAME, format!("trial {i}: decomposition broke for s={s}"));
            }
            let limit = BigInt::from(1) << s;
            let ok = match mode {
                RoundingMode::FloorDiv => err.magnitude() < limit.magnitude() && err.sign() != Sign::Minus,
                RoundingMode::NearestEven => (err.magnitude() << 1u8) <= *limit.magnitude(),
            };
            if s > 0 && !ok {
                return SuiteResult::fail(NAME, format!("trial {i}: error {err} out of bound for s={s} {mode:?}"));
            }
        }
    }
    SuiteResult::pass(NAME, format!("{trials} scaling error decompositions"))
}

fn multiplication_exactness(ms: &ModulusSet, policy: &NormalizationPolicy, seed: u64, trials: usize) -> SuiteResult {
    const NAME: &str = "multiplication_exactness";
    let ops = HybridOps::new(ms, policy);
    let mut rng = rng_from_seed(seed ^ 0x7177_abcd);
    let mut tape = crate::hybrid::Tape::new();
    let max_bits = (ms.composite().bits() - 2) / 2;
    for i in 0..trials {
        let bits_x = 1 + rng.next_u64() % max_bits;
        let bits_y = 1 + rng.next_u64() % max_bits;
        let fx = (rng.next_u64() % 200) as i64 - 100;
        let fy = (rng.next_u64() % 200) as i64 - 100;
        let vx = Dyadic::new(BigInt::from(random_odd_mantissa(bits_x, &mut rng)), fx);
        let vy = Dyadic::new(-BigInt::from(random_odd_mantissa(bits_y, &mut rng)), fy);
        let x = HybridNumber::from_dyadic_exact(&vx, ms).unwrap();
        let y = HybridNumber::from_dyadic_exact(&vy, ms).unwrap();
        match ops.mul(&x, &y, &mut tape) {
            Ok(z) => {
                if z.phi(ms) != &vx * &vy {
                    return SuiteResult::fail(NAME, format!("trial {i}: product mismatch"));
                }
            }
            Err(e) => return SuiteResult::fail(NAME, format!("trial {i}: unexpected {e}")),
        }
    }
    SuiteResult::pass(NAME, format!("{trials} exact products"))
}

fn event_error_bounds(ms: &ModulusSet, policy: &NormalizationPolicy, seed: u64, trials: usize) -> SuiteResult {
    const NAME: &str = "event_error_bounds";
    let mode = policy.mode();
    // Force events with a tight post-event budget, keeping the configured
    // rounding mode so the mode-dependent bound variant is exercised.
    let forcing = match NormalizationPolicy::new(
        ms,
        policy.tau().clone(),
        8.min(policy.target_bits()),
        mode,
        policy.check_every(),
        ShiftRule::ByTargetBits,
    ) {
        Ok(p) => p,
        Err(e) => return SuiteResult::fail(NAME, format!("cannot build forcing policy: {e}")),
    };
    let ops = HybridOps::new(ms, &forcing);
    let mut rng = rng_from_seed(seed ^ 0x1e41);
    let mut tape = crate::hybrid::Tape::new();
    let mut events = 0usize;
    let max_bits = ms.composite().bits() - 2;
    for _ in 0..trials {
        let bits = 10 + rng.next_u64() % (max_bits - 10);
        let f = (rng.next_u64() % 120) as i64 - 60;
        let v = Dyadic::new(BigInt::from(random_odd_mantissa(bits, &mut rng)), f);
        let x = HybridNumber::from_dyadic_exact(&v, ms).unwrap();
        let before = tape.budget.events().len();
        let _ = ops.normalize(&x, &mut tape);
        events += tape.budget.events().len() - before;
    }
    for event in tape.budget.events() {
        let err = event.true_error.abs();
        let ok = match mode {
            RoundingMode::NearestEven => err <= Dyadic::pow2(event.exponent_before + event.shift as i64 - 1),
            RoundingMode::FloorDiv => err < Dyadic::pow2(event.exponent_before + event.shift as i64),
        };
        if !ok {
            return SuiteResult::fail(
                NAME,
                format!("event error {err} violates the {mode:?} bound (s={})", event.shift),
            );
        }
    }
    SuiteResult::pass(NAME, format!("{events} events within the {mode:?} bound"))
}

fn relative_error_bounds(ms: &ModulusSet, seed: u64, trials: usize) -> SuiteResult {
    const NAME: &str = "relative_error_bounds";
    // Fixed-shift regime with tau >= 2^(2s-1) under nearest-even rounding.
    let s = 16u32;
    let tau = BigUint::from(1u8) << (2 * s - 1);
    if !ms.fits(&tau) {
        return SuiteResult::pass(NAME, "modulus set too small for the regime; skipped".into());
    }
    let policy = match NormalizationPolicy::new(ms, tau.clone(), 8, RoundingMode::NearestEven, 1024, ShiftRule::Fixed(s)) {
        Ok(p) => p,
        Err(e) => return SuiteResult::fail(NAME, format!("cannot build fixed-shift policy: {e}")),
    };
    let ops = HybridOps::new(ms, &policy);
    let mut rng = rng_from_seed(seed ^ 0x1e42);
    let mut tape = crate::hybrid::Tape::new();
    let rel_bound = Dyadic::pow2(-(s as i64));
    let max_bits = ms.composite().bits() - 2;
    let mut checked = 0usize;
    for _ in 0..trials {
        // True magnitude at or above tau so the relative bound applies.
        let bits = (2 * s as u64) + rng.next_u64() % (max_bits - 2 * s as u64);
        let f = (rng.next_u64() % 64) as i64 - 32;
        let v = Dyadic::new(BigInt::from(random_odd_mantissa(bits, &mut rng)), f);
        if v.mantissa().magnitude() < &tau {
            continue;
        }
        let x = HybridNumber::from_dyadic_exact(&v, ms).unwrap();
        let phi_before = x.phi(ms);
        let out = ops.normalize(&x, &mut tape);
        let err = (&out.phi(ms) - &phi_before).abs();
        // |err| / |phi| <= 2^-s, checked as |err| <= |phi| * 2^-s.
        let allowance = &phi_before.abs() * &rel_bound;
        if err > allowance {
            return SuiteResult::fail(NAME, format!("relative error {err} above {allowance}"));
        }
        checked += 1;
    }
    SuiteResult::pass(NAME, format!("{checked} fixed-shift events within 2^-{s}"))
}

fn interval_containment(ms: &ModulusSet, seed: u64, trials: usize) -> SuiteResult {
    const NAME: &str = "interval_containment";
    let mut rng = rng_from_seed(seed ^ 0xa11ce);
    let max_bits = ms.composite().bits() - 1;
    let mut resolved = 0usize;
    let mut ambiguous = 0usize;
    for i in 0..trials {
        let bits = 1 + rng.next_u64() % max_bits;
        let mag = random_odd_mantissa(bits, &mut rng) % ms.half_floor();
        let sign = if rng.next_u64() & 1 == 1 { Sign::Minus } else { Sign::Plus };
        let n = if mag.bits() == 0 { BigInt::from(0) } else { BigInt::from_biguint(sign, mag) };
        let x = match HybridNumber::from_dyadic_exact(&Dyadic::from_bigint(n.clone()), ms) {
            Ok(x) => x,
            Err(_) => continue,
        };
        match magnitude_interval(ms, &x) {
            Ok(interval) => {
                let mag = Dyadic::from_bigint(ms.reconstruct(x.residues()).unwrap().abs());
                if !(interval.lo <= mag && mag <= interval.hi) {
                    return SuiteResult::fail(
                        NAME,
                        format!("trial {i}: |N| = {mag} escapes [{}, {}]", interval.lo, interval.hi),
                    );
                }
                resolved += 1;
            }
            Err(_) => ambiguous += 1,
        }
    }
    SuiteResult::pass(NAME, format!("{resolved} contained, {ambiguous} ambiguous fallbacks"))
}

fn argmax_selection(ms: &ModulusSet, policy: &NormalizationPolicy, seed: u64, lists: usize) -> SuiteResult {
    const NAME: &str = "argmax_selection";
    let ops = HybridOps::new(ms, policy);
    let mut rng = rng_from_seed(seed ^ 0x5e1ec7);
    let dist = Distribution::LogUniform { mantissa_bits: 24, min_mag_exp: -80, max_mag_exp: 80 };
    let mut tape = crate::hybrid::Tape::new();
    for i in 0..lists {
        let len = 1 + (rng.next_u64() % 32) as usize;
        let values = generate_vector(&dist, len, &mut rng);
        let xs: Vec<HybridNumber> = values.iter().map(|v| HybridNumber::from_real(v, ms, 24)).collect();
        let (idx, _) = match ops.select_max_magnitude(&xs, &mut tape) {
            Ok(r) => r,
            Err(e) => return SuiteResult::fail(NAME, format!("list {i}: {e}")),
        };
        let best = xs.iter().map(|x| x.phi(ms).abs()).max().unwrap();
        if xs[idx].phi(ms).abs() != best {
            return SuiteResult::fail(NAME, format!("list {i}: index {idx} is not an argmax"));
        }
    }
    SuiteResult::pass(NAME, format!("{lists} tournament selections match brute force"))
}

fn budget_dominance(ms: &ModulusSet, policy: &NormalizationPolicy, beta_in: u32, seed: u64) -> SuiteResult {
    const NAME: &str = "budget_dominance";
    let ops = HybridOps::new(ms, policy);
    let mut rng = rng_from_seed(seed ^ 0xd0b);
    for dist in [Distribution::moderate(), Distribution::high_dynamic_range()] {
        let xs = generate_vector(&dist, 256, &mut rng);
        let ys = generate_vector(&dist, 256, &mut rng);
        let hx: Vec<HybridNumber> = xs.iter().map(|v| HybridNumber::from_real(v, ms, beta_in)).collect();
        let hy: Vec<HybridNumber> = ys.iter().map(|v| HybridNumber::from_real(v, ms, beta_in)).collect();
        let out = match kernels::dot_product(&ops, &hx, &hy) {
            Ok(out) => out,
            Err(e) => return SuiteResult::fail(NAME, format!("dot failed: {e}")),
        };
        let exact = oracle::exact_dot(&xs, &ys).unwrap();
        let drift = (&out.value - &exact).abs();
        if drift > *out.tape.budget.total() {
            return SuiteResult::fail(NAME, format!("dot drift {drift} above {}", out.tape.budget.total()));
        }
    }
    let dist = Distribution::high_dynamic_range();
    let a = crate::workload::generate_matrix(&dist, 6, 6, &mut rng).map(|v| HybridNumber::from_real(v, ms, beta_in));
    let b = crate::workload::generate_matrix(&dist, 6, 6, &mut rng).map(|v| HybridNumber::from_real(v, ms, beta_in));
    let got = match kernels::matmul(&ops, &a, &b, 1) {
        Ok(out) => out,
        Err(e) => return SuiteResult::fail(NAME, format!("matmul failed: {e}")),
    };
    let exact = oracle::exact_matmul(&a.map(|x| x.phi(ms)), &b.map(|x| x.phi(ms))).unwrap();
    let mut worst = Dyadic::zero();
    for (gv, ev) in got.values.data().iter().zip(exact.data()) {
        let d = (gv - ev).abs();
        if d > worst {
            worst = d;
        }
    }
    if worst > *got.tape.budget.total() {
        return SuiteResult::fail(NAME, format!("matmul drift {worst} above {}", got.tape.budget.total()));
    }
    let prob = match OdeProblem::new(RhsKind::Logistic, Dyadic::pow2(-1), Dyadic::pow2(-7), 128) {
        Ok(p) => p.with_checkpoint_every(32),
        Err(e) => return SuiteResult::fail(NAME, format!("bad problem: {e}")),
    };
    match kernels::rk4_integrate(&ops, &prob) {
        Ok(out) => {
            let reference = oracle::highprec_rk4(&prob, 256);
            let drift = (&out.final_value - &reference.final_value).abs();
            let allowance = out.tape.budget.total().clone() + Dyadic::pow2(-192);
            if drift > allowance {
                return SuiteResult::fail(NAME, format!("rk4 drift {drift} above {allowance}"));
            }
        }
        Err(e) => return SuiteResult::fail(NAME, format!("rk4 failed: {e}")),
    }
    SuiteResult::pass(NAME, "dot, matmul, and rk4 stayed inside their budgets".into())
}

fn determinism(ms: &ModulusSet, policy: &NormalizationPolicy, beta_in: u32, seed: u64) -> SuiteResult {
    const NAME: &str = "determinism";
    let ops = HybridOps::new(ms, policy);
    let run = || {
        let dist = Distribution::high_dynamic_range();
        let mut rng = rng_from_seed(seed ^ 0xdede);
        let xs = generate_vector(&dist, 200, &mut rng);
        let ys = generate_vector(&dist, 200, &mut rng);
        let hx: Vec<HybridNumber> = xs.iter().map(|v| HybridNumber::from_real(v, ms, beta_in)).collect();
        let hy: Vec<HybridNumber> = ys.iter().map(|v| HybridNumber::from_real(v, ms, beta_in)).collect();
        kernels::dot_product(&ops, &hx, &hy)
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) if a == b => SuiteResult::pass(NAME, "repeated runs are bit-identical".into()),
        (Ok(_), Ok(_)) => SuiteResult::fail(NAME, "repeated runs diverged".into()),
        (Err(e), _) | (_, Err(e)) => SuiteResult::fail(NAME, format!("run failed: {e}")),
    }
}

fn matmul_parallel_equivalence(ms: &ModulusSet, policy: &NormalizationPolicy, beta_in: u32, seed: u64) -> SuiteResult {
    const NAME: &str = "parallel_equivalence";
    let ops = HybridOps::new(ms, policy);
    let dist = Distribution::high_dynamic_range();
    let mut rng = rng_from_seed(seed ^ 0xbeef);
    let a = crate::workload::generate_matrix(&dist, 8, 5, &mut rng).map(|v| HybridNumber::from_real(v, ms, beta_in));
    let b = crate::workload::generate_matrix(&dist, 5, 7, &mut rng).map(|v| HybridNumber::from_real(v, ms, beta_in));
    match (kernels::matmul(&ops, &a, &b, 1), kernels::matmul(&ops, &a, &b, 4)) {
        (Ok(seq), Ok(par)) if seq == par => {
            SuiteResult::pass(NAME, "sequential and 4-worker matmul agree bit for bit".into())
        }
        (Ok(_), Ok(_)) => SuiteResult::fail(NAME, "worker count changed the result".into()),
        (Err(e), _) | (_, Err(e)) => SuiteResult::fail(NAME, format!("matmul failed: {e}")),
    }
}

/// Runs every suite at reduced scale and returns one result per suite.
pub fn run_all(
    ms: &ModulusSet,
    policy: &NormalizationPolicy,
    beta_in: u32,
    seed: u64,
) -> Vec<SuiteResult> {
    vec![
        crt_round_trip(ms, seed, 2000),
        residue_homomorphism(ms, seed, 1000),
        scale_reencode_bounds(ms, seed, 400),
        multiplication_exactness(ms, policy, seed, 1000),
        event_error_bounds(ms, policy, seed, 300),
        relative_error_bounds(ms, seed, 300),
        interval_containment(ms, seed, 1000),
        argmax_selection(ms, policy, seed, 100),
        budget_dominance(ms, policy, beta_in, seed),
        determinism(ms, policy, beta_in, seed),
        matmul_parallel_equivalence(ms, policy, beta_in, seed),
    ]
}
