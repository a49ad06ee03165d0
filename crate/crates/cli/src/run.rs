//! Workload execution: drives the hybrid kernels next to their oracles and
//! baselines and turns the outcomes into report rows.

use anyhow::{anyhow, Result};

use hrfna::kernels;
use hrfna::oracle;
use hrfna::workload::{generate_matrix, generate_vector, rng_from_seed};
use hrfna::{Distribution, Dyadic, HybridNumber, HybridOps, Matrix, Tape};

use crate::config::{RunConfig, Runtime};
use crate::report::{metric_row, MetricRow};

pub struct WorkloadRows {
    pub rows: Vec<MetricRow>,
    pub tape: Tape,
}

/// Per-run seed: the base seed folded with an FNV-1a hash of the run label,
/// so adding or removing workloads never shifts other runs' inputs.
fn run_seed(base: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in label.as_bytes() {
        h ^= *byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    base ^ h
}

fn to_hybrid(ms: &hrfna::ModulusSet, values: &[Dyadic], bits: u32) -> Vec<HybridNumber> {
    values.iter().map(|v| HybridNumber::from_real(v, ms, bits)).collect()
}

struct DotSample {
    hrfna: Dyadic,
    exact: Dyadic,
    fp64: Dyadic,
    fp32: Dyadic,
    bfp: Option<Dyadic>,
}

fn run_one_dot(
    rt: &Runtime,
    xs: &[Dyadic],
    ys: &[Dyadic],
    tape: &mut Tape,
) -> Result<(DotSample, u64, u64, u64)> {
    let ops = HybridOps::new(&rt.ms, &rt.policy);
    let hx = to_hybrid(&rt.ms, xs, rt.input_bits);
    let hy = to_hybrid(&rt.ms, ys, rt.input_bits);
    let out = kernels::dot_product(&ops, &hx, &hy).map_err(|e| anyhow!("dot product: {e}"))?;
    let exact = oracle::exact_dot(xs, ys)?;
    let fp64 = oracle::binary64_dot(&oracle::to_f64_vec(xs), &oracle::to_f64_vec(ys));
    let fp32 = oracle::binary32_dot(&oracle::to_f32_vec(xs), &oracle::to_f32_vec(ys));
    let bfp = if rt.run_bfp {
        Some(oracle::bfp_dot(xs, ys, &rt.bfp)?)
    } else {
        None
    };
    let ops_count = out.tape.counters.arithmetic_ops();
    let norms = out.tape.counters.normalizations;
    let norms_true = out.tape.counters.normalizations_true;
    tape.merge_in(&out.tape);
    Ok((
        DotSample {
            hrfna: out.value,
            exact,
            fp64: Dyadic::from_f64(fp64).ok_or_else(|| anyhow!("binary64 path overflowed"))?,
            fp32: Dyadic::from_f64(fp32 as f64).ok_or_else(|| anyhow!("binary32 path overflowed"))?,
            bfp,
        },
        ops_count,
        norms,
        norms_true,
    ))
}

fn dot_rows(
    label: &str,
    samples: &[DotSample],
    rt: &Runtime,
    ops: u64,
    norms: u64,
    norms_true: u64,
    rows: &mut Vec<MetricRow>,
) -> Result<()> {
    let hrfna_vals: Vec<Dyadic> = samples.iter().map(|s| s.hrfna.clone()).collect();
    let exact_vals: Vec<Dyadic> = samples.iter().map(|s| s.exact.clone()).collect();
    let fp64_vals: Vec<Dyadic> = samples.iter().map(|s| s.fp64.clone()).collect();
    let fp32_vals: Vec<Dyadic> = samples.iter().map(|s| s.fp32.clone()).collect();

    let vs_fp64 = oracle::scaled_rms_error(&hrfna_vals, &fp64_vals)?;
    rows.push(metric_row(label, "hrfna", "binary64", &vs_fp64, ops, norms, norms_true));
    let vs_exact = oracle::scaled_rms_error(&hrfna_vals, &exact_vals)?;
    rows.push(metric_row(label, "hrfna", "exact", &vs_exact, ops, norms, norms_true));
    if rt.run_fp64 {
        let m = oracle::scaled_rms_error(&fp64_vals, &exact_vals)?;
        rows.push(metric_row(label, "binary64", "exact", &m, 0, 0, 0));
    }
    if rt.run_fp32 {
        let m = oracle::scaled_rms_error(&fp32_vals, &exact_vals)?;
        rows.push(metric_row(label, "binary32", "exact", &m, 0, 0, 0));
    }
    if rt.run_bfp {
        let bfp_vals: Vec<Dyadic> = samples.iter().map(|s| s.bfp.clone().unwrap()).collect();
        let m = oracle::scaled_rms_error(&bfp_vals, &exact_vals)?;
        rows.push(metric_row(label, "bfp", "exact", &m, 0, 0, 0));
    }
    Ok(())
}

/// Seeded dot-product experiment over every configured length and
/// distribution, `repeats` runs each; RMS statistics are taken across the
/// repeated runs.
pub fn run_dotprod(config: &RunConfig, rt: &Runtime) -> Result<WorkloadRows> {
    let seed = config.seed()?;
    let mut rows = Vec::new();
    let mut tape = Tape::new();
    for (dist_name, dist) in &rt.distributions {
        for &len in &config.workload.lengths {
            let label = format!("dotprod[len={len},dist={dist_name}]");
            let mut samples = Vec::new();
            let (mut ops, mut norms, mut norms_true) = (0u64, 0u64, 0u64);
            for repeat in 0..config.workload.repeats {
                let mut rng = rng_from_seed(run_seed(seed, &format!("{label}#{repeat}")));
                let xs = generate_vector(dist, len, &mut rng);
                let ys = generate_vector(dist, len, &mut rng);
                let (sample, o, n, t) = run_one_dot(rt, &xs, &ys, &mut tape)?;
                samples.push(sample);
                ops += o;
                norms += n;
                norms_true += t;
            }
            dot_rows(&label, &samples, rt, ops, norms, norms_true, &mut rows)?;
        }
    }
    Ok(WorkloadRows { rows, tape })
}

/// Dot product over explicit vectors loaded from files.
pub fn run_dotprod_explicit(rt: &Runtime, xs: &[Dyadic], ys: &[Dyadic]) -> Result<WorkloadRows> {
    let mut rows = Vec::new();
    let mut tape = Tape::new();
    let (sample, ops, norms, norms_true) = run_one_dot(rt, xs, ys, &mut tape)?;
    dot_rows(
        &format!("dotprod[len={},input=file]", xs.len()),
        &[sample],
        rt,
        ops,
        norms,
        norms_true,
        &mut rows,
    )?;
    Ok(WorkloadRows { rows, tape })
}

fn matmul_rows(
    label: &str,
    rt: &Runtime,
    a: &Matrix<Dyadic>,
    b: &Matrix<Dyadic>,
    threads: usize,
    rows: &mut Vec<MetricRow>,
    tape: &mut Tape,
) -> Result<()> {
    let ops = HybridOps::new(&rt.ms, &rt.policy);
    let ha = a.map(|v| HybridNumber::from_real(v, &rt.ms, rt.input_bits));
    let hb = b.map(|v| HybridNumber::from_real(v, &rt.ms, rt.input_bits));
    let out = kernels::matmul(&ops, &ha, &hb, threads).map_err(|e| anyhow!("matmul: {e}"))?;
    let exact = oracle::exact_matmul(a, b)?;
    let af64 = a.map(|v| v.to_f64());
    let bf64 = b.map(|v| v.to_f64());
    let fp64 = oracle::binary64_matmul(&af64, &bf64);
    let af32 = a.map(|v| v.to_f64() as f32);
    let bf32 = b.map(|v| v.to_f64() as f32);
    let fp32 = oracle::binary32_matmul(&af32, &bf32);

    let hrfna_vals = out.values.data().to_vec();
    let exact_vals = exact.data().to_vec();
    let fp64_vals = oracle::f64_to_dyadic_vec(fp64.data());
    let fp32_vals = oracle::f32_to_dyadic_vec(fp32.data());

    let ops_count = out.tape.counters.arithmetic_ops();
    let norms = out.tape.counters.normalizations;
    let norms_true = out.tape.counters.normalizations_true;
    tape.merge_in(&out.tape);

    let vs_fp64 = oracle::scaled_rms_error(&hrfna_vals, &fp64_vals)?;
    rows.push(metric_row(label, "hrfna", "binary64", &vs_fp64, ops_count, norms, norms_true));
    let vs_exact = oracle::scaled_rms_error(&hrfna_vals, &exact_vals)?;
    rows.push(metric_row(label, "hrfna", "exact", &vs_exact, ops_count, norms, norms_true));
    if rt.run_fp64 {
        let m = oracle::scaled_rms_error(&fp64_vals, &exact_vals)?;
        rows.push(metric_row(label, "binary64", "exact", &m, 0, 0, 0));
    }
    if rt.run_fp32 {
        let m = oracle::scaled_rms_error(&fp32_vals, &exact_vals)?;
        rows.push(metric_row(label, "binary32", "exact", &m, 0, 0, 0));
    }
    if rt.run_bfp {
        let bfp = oracle::bfp_matmul(a, b, &rt.bfp)?;
        let m = oracle::scaled_rms_error(bfp.data(), &exact_vals)?;
        rows.push(metric_row(label, "bfp", "exact", &m, 0, 0, 0));
    }
    Ok(())
}

/// Seeded square matrix products at every configured size. Entries follow the
/// moderate unit-interval distribution.
pub fn run_matmul(config: &RunConfig, rt: &Runtime, threads: usize) -> Result<WorkloadRows> {
    let seed = config.seed()?;
    let dist = Distribution::UniformUnit { mantissa_bits: rt.input_bits };
    let mut rows = Vec::new();
    let mut tape = Tape::new();
    for &size in &config.workload.sizes {
        let label = format!("matmul[n={size},dist=moderate]");
        let mut rng = rng_from_seed(run_seed(seed, &label));
        let a = generate_matrix(&dist, size, size, &mut rng);
        let b = generate_matrix(&dist, size, size, &mut rng);
        matmul_rows(&label, rt, &a, &b, threads, &mut rows, &mut tape)?;
    }
    Ok(WorkloadRows { rows, tape })
}

/// Matrix product over explicit matrices loaded from files.
pub fn run_matmul_explicit(
    rt: &Runtime,
    a: &Matrix<Dyadic>,
    b: &Matrix<Dyadic>,
    threads: usize,
) -> Result<WorkloadRows> {
    let mut rows = Vec::new();
    let mut tape = Tape::new();
    let label = format!("matmul[{}x{}x{},input=file]", a.rows(), a.cols(), b.cols());
    matmul_rows(&label, rt, a, b, threads, &mut rows, &mut tape)?;
    Ok(WorkloadRows { rows, tape })
}

/// Fixed-step integration compared at every checkpoint against the 256-bit
/// reference trajectory.
pub fn run_rk4(config: &RunConfig, rt: &Runtime) -> Result<WorkloadRows> {
    let prob = config.build_ode_problem()?;
    let ops = HybridOps::new(&rt.ms, &rt.policy);
    let out = kernels::rk4_integrate(&ops, &prob).map_err(|e| anyhow!("rk4: {e}"))?;
    let reference = oracle::highprec_rk4(&prob, 256);
    let label = format!(
        "rk4[ode={},steps={},h={}]",
        config.workload.ode, prob.steps, prob.h
    );

    let hybrid_vals: Vec<Dyadic> = out.checkpoints.iter().map(|p| p.value.clone()).collect();
    let ref_vals: Vec<Dyadic> = reference.checkpoints.iter().map(|p| p.value.clone()).collect();
    let ops_count = out.tape.counters.arithmetic_ops();
    let norms = out.tape.counters.normalizations;
    let norms_true = out.tape.counters.normalizations_true;

    let mut rows = Vec::new();
    let m = oracle::scaled_rms_error(&hybrid_vals, &ref_vals)?;
    rows.push(metric_row(&label, "hrfna", "highprec256", &m, ops_count, norms, norms_true));
    if rt.run_fp64 {
        let vals: Vec<Dyadic> = oracle::binary64_rk4(&prob)
            .iter()
            .map(|(_, v)| Dyadic::from_f64(*v).expect("finite trajectory"))
            .collect();
        let m = oracle::scaled_rms_error(&vals, &ref_vals)?;
        rows.push(metric_row(&label, "binary64", "highprec256", &m, 0, 0, 0));
    }
    if rt.run_fp32 {
        let vals: Vec<Dyadic> = oracle::binary32_rk4(&prob)
            .iter()
            .map(|(_, v)| Dyadic::from_f64(*v as f64).expect("finite trajectory"))
            .collect();
        let m = oracle::scaled_rms_error(&vals, &ref_vals)?;
        rows.push(metric_row(&label, "binary32", "highprec256", &m, 0, 0, 0));
    }
    let mut tape = Tape::new();
    tape.merge_in(&out.tape);
    Ok(WorkloadRows { rows, tape })
}
