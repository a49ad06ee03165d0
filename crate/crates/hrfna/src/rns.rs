//! Residue substrate: modulus sets, channelwise modular arithmetic, and exact
//! centered CRT reconstruction.
//!
//! Integers live in the centered range `[-ceil(M/2)+1, floor(M/2)]` where `M`
//! is the product of the moduli. Addition and multiplication act per channel
//! with no carries between channels; reconstruction is a direct weighted CRT
//! sum over arbitrary-precision integers.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Rounding rule applied when a reconstructed integer is divided by `2^s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum RoundingMode {
    /// Floor division on the signed centered value.
    FloorDiv,
    /// Round to nearest, ties to the even quotient.
    NearestEven,
}

/// Errors from modulus-set construction and residue operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RnsError {
    #[error("modulus set must not be empty")]
    EmptyModuli,
    #[error("modulus m[{index}] = {value} must be at least 2")]
    InvalidModulus { index: usize, value: u64 },
    #[error("moduli m[{i}] and m[{j}] share the factor {gcd}")]
    NotCoprime { i: usize, j: usize, gcd: u64 },
    #[error("value magnitude is not below M/2")]
    OutOfRange,
    #[error("residue vector has {got} channels, modulus set has {expected}")]
    ChannelCountMismatch { expected: usize, got: usize },
}

/// One residue per channel; each component is strictly below its modulus.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResidueVector {
    residues: Vec<u64>,
}

impl ResidueVector {
    /// Builds a vector from raw channel values; callers are responsible for
    /// range validation against their modulus set.
    pub(crate) fn from_raw(residues: Vec<u64>) -> Self {
        ResidueVector { residues }
    }

    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    /// True when every channel is zero, which identifies the integer zero for
    /// any vector bound to a modulus set.
    pub fn is_all_zero(&self) -> bool {
        self.residues.iter().all(|&r| r == 0)
    }
}

/// Per-channel CRT data: the cofactor `M_i = M / m_i` and its inverse
/// `w_i = M_i^{-1} mod m_i`.
#[derive(Clone, Debug)]
struct CrtChannel {
    cofactor: BigUint,
    inverse: u64,
}

/// A set of pairwise coprime moduli together with precomputed CRT constants
/// and fixed-point fractional weights for the magnitude estimator.
#[derive(Clone, Debug)]
pub struct ModulusSet {
    moduli: Vec<u64>,
    composite: BigUint,
    half_floor: BigUint,
    channels: Vec<CrtChannel>,
    frac_precision: u32,
    frac_shift: u32,
    frac_weights: Vec<BigUint>,
}

/// The eight largest primes below 2^16; their product has 128 bits.
pub const DEFAULT_MODULI: [u64; 8] =
    [65521, 65519, 65497, 65479, 65449, 65447, 65437, 65423];

/// Default fixed-point precision for the fractional magnitude estimator.
pub const DEFAULT_FRAC_PRECISION: u32 = 96;

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Modular inverse of `a` modulo `m` for coprime inputs.
fn mod_inverse(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "inputs must be coprime");
    (old_s.rem_euclid(m as i128)) as u64
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Divides `n` by `2^s` under the given rounding rule, returning the quotient
/// and the exact remainder `n - q * 2^s`.
pub(crate) fn round_div_pow2(n: &BigInt, s: u64, mode: RoundingMode) -> (BigInt, BigInt) {
    if s == 0 {
        return (n.clone(), BigInt::zero());
    }
    let unit = BigInt::one() << s;
    let q = match mode {
        RoundingMode::FloorDiv => n.div_floor(&unit),
        RoundingMode::NearestEven => {
            let q = n.div_floor(&unit);
            let r = n - &q * &unit;
            debug_assert!(!r.is_negative() && r < unit);
            let twice = &r << 1u8;
            if twice > unit || (twice == unit && q.is_odd()) {
                q + 1
            } else {
                q
            }
        }
    };
    let error = n - &q * &unit;
    (q, error)
}

/// `2^e mod m` by square-and-multiply.
fn pow2_mod(e: u64, m: u64) -> u64 {
    let mut result = 1u64 % m;
    let mut base = 2u64 % m;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = mul_mod(result, base, m);
        }
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    result
}

impl ModulusSet {
    /// Builds a modulus set, validating pairwise coprimality, and precomputes
    /// the CRT constants and `frac_precision`-bit fractional weights.
    pub fn new(moduli: &[u64], frac_precision: u32) -> Result<Self, RnsError> {
        if moduli.is_empty() {
            return Err(RnsError::EmptyModuli);
        }
        for (index, &m) in moduli.iter().enumerate() {
            if m < 2 {
                return Err(RnsError::InvalidModulus { index, value: m });
            }
        }
        for i in 0..moduli.len() {
            for j in (i + 1)..moduli.len() {
                let g = gcd_u64(moduli[i], moduli[j]);
                if g != 1 {
                    return Err(RnsError::NotCoprime { i, j, gcd: g });
                }
            }
        }
        let composite = moduli
            .iter()
            .fold(BigUint::one(), |acc, &m| acc * BigUint::from(m));
        let half_floor = &composite >> 1;
        let channels: Vec<CrtChannel> = moduli
            .iter()
            .map(|&m| {
                let cofactor = &composite / BigUint::from(m);
                let cof_mod = (&cofactor % BigUint::from(m)).to_u64().unwrap();
                let inverse = mod_inverse(cof_mod, m);
                debug_assert_eq!(mul_mod(cof_mod, inverse, m), 1 % m);
                CrtChannel { cofactor, inverse }
            })
            .collect();
        // Extra guard bits absorb the channel residue factor r_i < m_i, so the
        // estimator's total slack stays below k * 2^-frac_precision.
        let guard = 64 - moduli.iter().max().unwrap().leading_zeros();
        let frac_shift = frac_precision + guard;
        let frac_weights = moduli
            .iter()
            .zip(&channels)
            .map(|(&m, ch)| (BigUint::from(ch.inverse) << frac_shift) / BigUint::from(m))
            .collect();
        Ok(ModulusSet {
            moduli: moduli.to_vec(),
            composite,
            half_floor,
            channels,
            frac_precision,
            frac_shift,
            frac_weights,
        })
    }

    /// The default eight-channel set with 96-bit fractional weights.
    pub fn default_set() -> Self {
        ModulusSet::new(&DEFAULT_MODULI, DEFAULT_FRAC_PRECISION)
            .expect("default moduli are pairwise coprime")
    }

    pub fn k(&self) -> usize {
        self.moduli.len()
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// The composite modulus `M`.
    pub fn composite(&self) -> &BigUint {
        &self.composite
    }

    /// `floor(M/2)`, the largest representable centered magnitude.
    pub fn half_floor(&self) -> &BigUint {
        &self.half_floor
    }

    pub fn frac_precision(&self) -> u32 {
        self.frac_precision
    }

    pub(crate) fn frac_shift(&self) -> u32 {
        self.frac_shift
    }

    pub(crate) fn frac_weights(&self) -> &[BigUint] {
        &self.frac_weights
    }

    /// Per-channel `(M_i, w_i)` pairs.
    pub fn crt_weights(&self) -> impl Iterator<Item = (&BigUint, u64)> {
        self.channels.iter().map(|c| (&c.cofactor, c.inverse))
    }

    /// True when `magnitude < M/2`, the wrap-freedom condition.
    pub fn fits(&self, magnitude: &BigUint) -> bool {
        (magnitude << 1u8) < self.composite
    }

    fn check_binding(&self, rv: &ResidueVector) -> Result<(), RnsError> {
        if rv.len() != self.k() {
            return Err(RnsError::ChannelCountMismatch { expected: self.k(), got: rv.len() });
        }
        Ok(())
    }

    /// Encodes a signed integer with `|value| < M/2` into residues.
    pub fn encode(&self, value: &BigInt) -> Result<ResidueVector, RnsError> {
        if !self.fits(value.magnitude()) {
            return Err(RnsError::OutOfRange);
        }
        let mag = value.magnitude();
        let negative = value.sign() == Sign::Minus;
        let residues = self
            .moduli
            .iter()
            .map(|&m| {
                let r = (mag % BigUint::from(m)).to_u64().unwrap();
                if negative && r != 0 {
                    m - r
                } else {
                    r
                }
            })
            .collect();
        Ok(ResidueVector { residues })
    }

    /// Reconstructs the unique centered integer matching the residues.
    pub fn reconstruct(&self, rv: &ResidueVector) -> Result<BigInt, RnsError> {
        self.check_binding(rv)?;
        let mut acc = BigUint::zero();
        for ((&r, &m), ch) in rv.residues.iter().zip(&self.moduli).zip(&self.channels) {
            let coeff = mul_mod(r, ch.inverse, m);
            acc += &ch.cofactor * BigUint::from(coeff);
        }
        let unsigned = acc % &self.composite;
        if unsigned > self.half_floor {
            Ok(BigInt::from_biguint(Sign::Plus, unsigned) - BigInt::from_biguint(Sign::Plus, self.composite.clone()))
        } else {
            Ok(BigInt::from_biguint(Sign::Plus, unsigned))
        }
    }

    /// Channelwise sum; no carry crosses channels.
    pub fn mod_add(&self, a: &ResidueVector, b: &ResidueVector) -> Result<ResidueVector, RnsError> {
        self.check_binding(a)?;
        self.check_binding(b)?;
        let residues = a
            .residues
            .iter()
            .zip(&b.residues)
            .zip(&self.moduli)
            .map(|((&x, &y), &m)| ((x as u128 + y as u128) % m as u128) as u64)
            .collect();
        Ok(ResidueVector { residues })
    }

    /// Channelwise product.
    pub fn mod_mul(&self, a: &ResidueVector, b: &ResidueVector) -> Result<ResidueVector, RnsError> {
        self.check_binding(a)?;
        self.check_binding(b)?;
        let residues = a
            .residues
            .iter()
            .zip(&b.residues)
            .zip(&self.moduli)
            .map(|((&x, &y), &m)| mul_mod(x, y, m))
            .collect();
        Ok(ResidueVector { residues })
    }

    /// Channelwise multiplication by `2^shift`; exact in value terms whenever
    /// the caller knows the scaled magnitude stays below `M/2`.
    pub(crate) fn scale_up(&self, rv: &ResidueVector, shift: u64) -> Result<ResidueVector, RnsError> {
        self.check_binding(rv)?;
        let residues = rv
            .residues
            .iter()
            .zip(&self.moduli)
            .map(|(&r, &m)| mul_mod(r, pow2_mod(shift, m), m))
            .collect();
        Ok(ResidueVector { residues })
    }

    /// Reconstructs, divides by `2^s` under the given rounding mode, and
    /// re-encodes. Returns the new vector and the exact integer error
    /// `N - round(N / 2^s) * 2^s`.
    pub fn scale_and_reencode(
        &self,
        rv: &ResidueVector,
        s: u32,
        mode: RoundingMode,
    ) -> Result<(ResidueVector, BigInt), RnsError> {
        self.check_binding(rv)?;
        let n = self.reconstruct(rv)?;
        if s == 0 {
            return Ok((rv.clone(), BigInt::zero()));
        }
        let (scaled, error) = round_div_pow2(&n, s as u64, mode);
        let reencoded = self.encode(&scaled)?;
        Ok((reencoded, error))
    }
}
