//! Shared input builders for the microbenchmarks.

use hrfna::workload::{generate_vector, rng_from_seed, Distribution};
use hrfna::{Dyadic, HybridNumber, ModulusSet, NormalizationPolicy};

pub const BENCH_SEED: u64 = 0xbe;

pub fn setup() -> (ModulusSet, NormalizationPolicy) {
    let ms = ModulusSet::default_set();
    let policy = NormalizationPolicy::default_for(&ms).expect("default policy");
    (ms, policy)
}

pub fn dyadic_inputs(dist: &Distribution, len: usize) -> (Vec<Dyadic>, Vec<Dyadic>) {
    let mut rng = rng_from_seed(BENCH_SEED);
    let xs = generate_vector(dist, len, &mut rng);
    let ys = generate_vector(dist, len, &mut rng);
    (xs, ys)
}

pub fn hybrid_inputs(
    ms: &ModulusSet,
    dist: &Distribution,
    len: usize,
) -> (Vec<HybridNumber>, Vec<HybridNumber>) {
    let (xs, ys) = dyadic_inputs(dist, len);
    let conv = |v: &[Dyadic]| v.iter().map(|x| HybridNumber::from_real(x, ms, 24)).collect();
    (conv(&xs), conv(&ys))
}
