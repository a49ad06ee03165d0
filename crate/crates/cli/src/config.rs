//! Run configuration: flat key = value sections in TOML, with decimal strings
//! for big integers so values transport exactly.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use hrfna::{
    BigUint, Distribution, Dyadic, ModulusSet, NormalizationPolicy, OdeProblem, RhsKind,
    RoundingMode, ShiftRule,
};

use crate::jsonl::parse_value;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArithmeticConfig {
    /// Pairwise coprime channel moduli, as decimal strings.
    pub moduli: Vec<String>,
    /// Fixed-point precision of the fractional magnitude estimator.
    pub frac_precision: u32,
    /// Normalization threshold: a decimal string, `2^k`, or `M/<divisor>`.
    pub tau: String,
    /// Post-normalization magnitude budget in bits.
    pub target_bits: u32,
    /// `nearest-even` or `floor`.
    pub rounding: String,
    /// Operations between mandatory tracker audits.
    pub check_every: u32,
    /// Mantissa window for converting real inputs.
    pub input_mantissa_bits: u32,
    /// Optional fixed normalization shift; 0 selects the derived rule.
    pub fixed_shift: u32,
}

impl Default for ArithmeticConfig {
    fn default() -> Self {
        ArithmeticConfig {
            moduli: hrfna::DEFAULT_MODULI.iter().map(|m| m.to_string()).collect(),
            frac_precision: hrfna::DEFAULT_FRAC_PRECISION,
            tau: "M/4".into(),
            target_bits: 62,
            rounding: "nearest-even".into(),
            check_every: 1024,
            input_mantissa_bits: 24,
            fixed_shift: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    /// Dot product lengths.
    pub lengths: Vec<usize>,
    /// Seeded repetitions per dot-product configuration.
    pub repeats: usize,
    /// Matrix sizes (square).
    pub sizes: Vec<usize>,
    /// `moderate`, `high-range`, or `both`.
    pub distribution: String,
    /// `linear-decay`, `logistic`, or `cubic-damping`.
    pub ode: String,
    /// Decay rate for `linear-decay` (dyadic literal).
    pub lambda: String,
    pub y0: String,
    /// Step size; must be a dyadic literal (`m*2^e` or an integer).
    pub h: String,
    pub steps: u64,
    pub checkpoint_every: u64,
    /// Seed for generated inputs; required unless explicit input files are
    /// given.
    pub seed: Option<u64>,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            lengths: vec![1024, 4096, 16384],
            repeats: 4,
            sizes: vec![64, 128],
            distribution: "both".into(),
            ode: "logistic".into(),
            lambda: "1*2^-4".into(),
            y0: "1*2^-1".into(),
            h: "1*2^-7".into(),
            steps: 100_000,
            checkpoint_every: 1024,
            seed: Some(42),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Systems to run next to hrfna: any of `fp32`, `fp64`, `bfp`.
    pub systems: Vec<String>,
    pub bfp_block: usize,
    pub bfp_mantissa: u32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            systems: vec!["fp32".into(), "fp64".into(), "bfp".into()],
            bfp_block: 16,
            bfp_mantissa: 24,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Report path; empty writes no file (summary still prints).
    pub out: String,
    /// Optional CSV path for the metric table.
    pub csv: String,
}

/// The full run configuration, echoed verbatim into every report.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub arithmetic: ArithmeticConfig,
    pub workload: WorkloadConfig,
    pub baselines: BaselineConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_path(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {path}"))?;
        let config: RunConfig = toml::from_str(&text).context("parsing config")?;
        Ok(config)
    }

    pub fn apply_long_mode(&mut self) {
        if !self.workload.lengths.contains(&65536) {
            self.workload.lengths.push(65536);
        }
        self.workload.steps = self.workload.steps.max(1_000_000);
    }
}

/// Validated, constructed runtime objects derived from a [`RunConfig`].
pub struct Runtime {
    pub ms: ModulusSet,
    pub policy: NormalizationPolicy,
    pub input_bits: u32,
    pub distributions: Vec<(String, Distribution)>,
    pub bfp: hrfna::BfpConfig,
    pub run_fp32: bool,
    pub run_fp64: bool,
    pub run_bfp: bool,
}

fn parse_tau(text: &str, ms: &ModulusSet) -> Result<BigUint> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix("M/") {
        let divisor: u32 = rest.trim().parse().context("divisor in tau = \"M/<n>\"")?;
        if divisor == 0 {
            bail!("tau divisor must be positive");
        }
        return Ok(ms.composite() / BigUint::from(divisor));
    }
    if let Some(rest) = text.strip_prefix("2^") {
        let bits: u32 = rest.trim().parse().context("exponent in tau = \"2^<k>\"")?;
        return Ok(BigUint::from(1u8) << bits);
    }
    text.parse::<BigUint>()
        .map_err(|_| anyhow!("tau must be a decimal string, \"2^<k>\", or \"M/<n>\": got {text:?}"))
}

pub fn parse_dyadic_literal(text: &str, what: &str) -> Result<Dyadic> {
    text.trim()
        .parse::<Dyadic>()
        .map_err(|_| anyhow!("{what} must be a dyadic literal (`<int>` or `<int>*2^<int>`): got {text:?}"))
}

impl RunConfig {
    pub fn build_runtime(&self) -> Result<Runtime> {
        let a = &self.arithmetic;
        let moduli: Vec<u64> = a
            .moduli
            .iter()
            .map(|s| s.parse::<u64>().with_context(|| format!("modulus {s:?}")))
            .collect::<Result<_>>()?;
        let ms = ModulusSet::new(&moduli, a.frac_precision)?;
        let tau = parse_tau(&a.tau, &ms)?;
        let mode = match a.rounding.as_str() {
            "nearest-even" => RoundingMode::NearestEven,
            "floor" => RoundingMode::FloorDiv,
            other => bail!("rounding must be \"nearest-even\" or \"floor\": got {other:?}"),
        };
        let shift = if a.fixed_shift == 0 {
            ShiftRule::ByTargetBits
        } else {
            ShiftRule::Fixed(a.fixed_shift)
        };
        let policy = NormalizationPolicy::new(&ms, tau, a.target_bits, mode, a.check_every, shift)?;
        if a.input_mantissa_bits < 2
            || !ms.fits(&(BigUint::from(1u8) << a.input_mantissa_bits))
        {
            bail!(
                "input_mantissa_bits = {} does not fit below M/2",
                a.input_mantissa_bits
            );
        }
        let bits = a.input_mantissa_bits;
        let distributions = match self.workload.distribution.as_str() {
            "moderate" => vec![("moderate".to_string(), Distribution::UniformUnit { mantissa_bits: bits })],
            "high-range" => vec![(
                "high-range".to_string(),
                Distribution::LogUniform { mantissa_bits: bits, min_mag_exp: -20, max_mag_exp: 20 },
            )],
            "both" => vec![
                ("moderate".to_string(), Distribution::UniformUnit { mantissa_bits: bits }),
                (
                    "high-range".to_string(),
                    Distribution::LogUniform { mantissa_bits: bits, min_mag_exp: -20, max_mag_exp: 20 },
                ),
            ],
            other => bail!("distribution must be \"moderate\", \"high-range\", or \"both\": got {other:?}"),
        };
        let b = &self.baselines;
        for s in &b.systems {
            if !matches!(s.as_str(), "fp32" | "fp64" | "bfp") {
                bail!("unknown baseline {s:?}; expected fp32, fp64, or bfp");
            }
        }
        Ok(Runtime {
            ms,
            policy,
            input_bits: bits,
            distributions,
            bfp: hrfna::BfpConfig::new(b.bfp_block, b.bfp_mantissa)?,
            run_fp32: b.systems.iter().any(|s| s == "fp32"),
            run_fp64: b.systems.iter().any(|s| s == "fp64"),
            run_bfp: b.systems.iter().any(|s| s == "bfp"),
        })
    }

    pub fn build_ode_problem(&self) -> Result<OdeProblem> {
        let w = &self.workload;
        let rhs = match w.ode.as_str() {
            "linear-decay" => RhsKind::LinearDecay { lambda: parse_dyadic_literal(&w.lambda, "lambda")? },
            "logistic" => RhsKind::Logistic,
            "cubic-damping" => RhsKind::CubicDamping,
            other => bail!("ode must be \"linear-decay\", \"logistic\", or \"cubic-damping\": got {other:?}"),
        };
        let y0 = parse_value(&w.y0).map_err(|e| anyhow!("y0: {e}"))?;
        let h = parse_dyadic_literal(&w.h, "step size h")?;
        let prob = OdeProblem::new(rhs, y0, h, w.steps)?
            .with_checkpoint_every(w.checkpoint_every)
            .with_coeff_bits(self.arithmetic.input_mantissa_bits)?;
        Ok(prob)
    }

    pub fn seed(&self) -> Result<u64> {
        self.workload
            .seed
            .ok_or_else(|| anyhow!("a seed is required for generated inputs"))
    }
}

/// Worker cap from the environment; 0 means the default pool size.
pub fn threads_from_env() -> usize {
    match std::env::var("HRFNA_THREADS") {
        Ok(v) => v.trim().parse().unwrap_or(0),
        Err(_) => 0,
    }
}
