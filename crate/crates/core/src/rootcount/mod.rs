//! Roots of integer polynomials modulo primes, prime powers and general
//! moduli.
//!
//! `rho(P, m)` is the number of residues `r mod m` with `P(r) = 0 mod m`.
//! It is multiplicative in `m`; prime powers are reached by lifting roots
//! modulo `p` one level at a time.

pub(crate) mod modp;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::polyarith::IntPoly;
use crate::primes::{factor_small, inv_mod, is_prime, mul_mod, primes_up_to};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootConfig {
    /// Primes up to this value are handled by evaluating at every residue.
    pub brute_force_threshold: u64,
    /// Largest modulus (or prime power) the counting routines accept.
    pub magnitude_bound: u64,
    /// Seed for the randomized equal-degree splitting. Results never depend
    /// on it.
    pub seed: u64,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            brute_force_threshold: 256,
            magnitude_bound: 1_000_000_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootError {
    NotPrime(u64),
    ZeroModulus,
    ExceedsBound {
        modulus: u128,
        bound: u64,
    },
    /// The polynomial vanishes identically modulo a prime too large to list
    /// every residue.
    Degenerate {
        p: u64,
    },
}

impl fmt::Display for RootError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootError::NotPrime(p) => write!(f, "{p} is not prime"),
            RootError::ZeroModulus => f.write_str("modulus must be positive"),
            RootError::ExceedsBound { modulus, bound } => {
                write!(f, "modulus {modulus} exceeds the configured bound {bound}")
            }
            RootError::Degenerate { p } => {
                write!(f, "polynomial vanishes identically modulo the large prime {p}")
            }
        }
    }
}

impl core::error::Error for RootError {}

/// Sorted, duplicate-free residues `r` in `[0, modulus)` with `P(r) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootSet {
    pub modulus: u64,
    pub residues: Vec<u64>,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

#[inline]
fn eval_mod(coeffs: &[u64], r: u64, m: u64) -> u64 {
    coeffs.iter().rev().fold(0u64, |acc, &c| (mul_mod(acc, r, m) + c) % m)
}

/// Every root modulo `m` by evaluating at all residues. Reference
/// implementation; linear in `m`.
pub fn roots_by_enumeration(poly: &IntPoly, m: u64) -> Vec<u64> {
    let coeffs = poly.residues_mod(m);
    (0..m).filter(|&r| eval_mod(&coeffs, r, m) == 0).collect()
}

pub fn roots_mod_p(poly: &IntPoly, p: u64) -> Result<RootSet, RootError> {
    roots_mod_p_with(poly, p, &RootConfig::default())
}

/// Roots modulo the prime `p`.
///
/// Below the brute-force threshold every residue is evaluated. Above it the
/// reduction `f` is replaced by `gcd(X^p - X, f)`, which splits into distinct
/// linear factors, and those are separated by random equal-degree splitting.
pub fn roots_mod_p_with(poly: &IntPoly, p: u64, cfg: &RootConfig) -> Result<RootSet, RootError> {
    if !is_prime(p) {
        return Err(RootError::NotPrime(p));
    }
    let f = modp::trim(poly.residues_mod(p));
    let residues = match f.len() {
        0 => {
            if p > cfg.magnitude_bound {
                return Err(RootError::Degenerate { p });
            }
            (0..p).collect()
        }
        1 => Vec::new(),
        2 => {
            let inv = inv_mod(f[1], p).expect("prime modulus");
            vec![mul_mod(p - f[0], inv, p) % p]
        }
        _ if p <= cfg.brute_force_threshold.max(2) => (0..p).filter(|&r| eval_mod(&f, r, p) == 0).collect(),
        _ => {
            let g = split_part(&f, p);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ p.rotate_left(17));
            let mut out = Vec::with_capacity(g.len().saturating_sub(1));
            modp::split_linear(&g, p, &mut rng, &mut out);
            out.sort_unstable();
            out
        }
    };
    Ok(RootSet { modulus: p, residues })
}

/// `gcd(X^p - X, f)` for non-constant `f` over `F_p`, monic.
fn split_part(f: &[u64], p: u64) -> modp::Fp {
    let fm = modp::monic(f, p);
    let xp = modp::powmod(&[0, 1], p, &fm, p);
    modp::gcd(&modp::sub(&xp, &[0, 1], p), &fm, p)
}

/// Number of roots modulo the prime `p`, without listing them.
pub fn count_roots_mod_p(poly: &IntPoly, p: u64, cfg: &RootConfig) -> Result<u64, RootError> {
    if !is_prime(p) {
        return Err(RootError::NotPrime(p));
    }
    let f = modp::trim(poly.residues_mod(p));
    Ok(match f.len() {
        0 => p,
        1 => 0,
        2 => 1,
        _ if p <= cfg.brute_force_threshold.max(2) => (0..p).filter(|&r| eval_mod(&f, r, p) == 0).count() as u64,
        _ => (split_part(&f, p).len() - 1) as u64,
    })
}

fn checked_prime_power(p: u64, nu: u32, bound: u64) -> Result<u64, RootError> {
    match p.checked_pow(nu) {
        Some(q) if q <= bound => Ok(q),
        _ => Err(RootError::ExceedsBound {
            modulus: (p as u128).saturating_pow(nu),
            bound,
        }),
    }
}

/// Root counts modulo `p, p^2, ..., p^nu_max`.
///
/// Simple roots (`P'(r) != 0 mod p`) lift uniquely by Hensel's formula;
/// the others are lifted by trying all `p` candidates `r + t p^k`.
pub fn rho_prime_power_tower(poly: &IntPoly, p: u64, nu_max: u32, cfg: &RootConfig) -> Result<Vec<u64>, RootError> {
    if nu_max == 0 {
        return Ok(Vec::new());
    }
    checked_prime_power(p, nu_max, cfg.magnitude_bound)?;
    if nu_max == 1 {
        return Ok(vec![count_roots_mod_p(poly, p, cfg)?]);
    }
    let mut roots = roots_mod_p_with(poly, p, cfg)?.residues;
    let mut counts = vec![roots.len() as u64];
    let deriv = poly.derivative().map(|d| d.residues_mod(p)).unwrap_or_default();
    let mut pk = p;
    for _ in 1..nu_max {
        let pk1 = pk * p;
        let coeffs = poly.residues_mod(pk1);
        let mut next = Vec::with_capacity(roots.len());
        for &r in &roots {
            let dr = eval_mod(&deriv, r % p, p);
            if dr != 0 {
                let fr = eval_mod(&coeffs, r, pk1) / pk;
                let t = mul_mod((p - fr % p) % p, inv_mod(dr, p).expect("unit"), p);
                next.push(r + t * pk);
            } else {
                next.extend((0..p).map(|t| r + t * pk).filter(|&c| eval_mod(&coeffs, c, pk1) == 0));
            }
        }
        roots = next;
        counts.push(roots.len() as u64);
        pk = pk1;
    }
    Ok(counts)
}

pub fn rho_prime_power(poly: &IntPoly, p: u64, nu: u32) -> Result<u64, RootError> {
    rho_prime_power_with(poly, p, nu, &RootConfig::default())
}

pub fn rho_prime_power_with(poly: &IntPoly, p: u64, nu: u32, cfg: &RootConfig) -> Result<u64, RootError> {
    if !is_prime(p) {
        return Err(RootError::NotPrime(p));
    }
    if nu == 0 {
        return Ok(1);
    }
    Ok(*rho_prime_power_tower(poly, p, nu, cfg)?.last().expect("nu >= 1"))
}

pub fn rho(poly: &IntPoly, m: u64) -> Result<u64, RootError> {
    rho_with(poly, m, &RootConfig::default())
}

/// `rho(P, m) = prod rho(P, p^nu)` over `p^nu || m`; `rho(P, 1) = 1`.
pub fn rho_with(poly: &IntPoly, m: u64, cfg: &RootConfig) -> Result<u64, RootError> {
    if m == 0 {
        return Err(RootError::ZeroModulus);
    }
    if m > cfg.magnitude_bound {
        return Err(RootError::ExceedsBound {
            modulus: m as u128,
            bound: cfg.magnitude_bound,
        });
    }
    let mut acc = 1u64;
    for (p, e) in factor_small(m) {
        acc *= rho_prime_power_with(poly, p, e, cfg)?;
        if acc == 0 {
            break;
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StewartViolation {
    pub p: u64,
    pub nu: u32,
    pub count: u64,
}

/// Checks `rho(p^nu) <= g p^{nu (1 - 1/g)}` for every prime power
/// `p^nu <= limit`, exactly, in the form `rho^g <= g^g p^{nu (g - 1)}`.
/// Returns the violations; for a correct implementation the list is empty.
pub fn stewart_audit(poly: &IntPoly, limit: u64) -> Vec<StewartViolation> {
    let cfg = RootConfig {
        magnitude_bound: limit.max(RootConfig::default().magnitude_bound),
        ..RootConfig::default()
    };
    stewart_audit_primes(poly, &primes_up_to(limit), limit, &cfg)
}

/// [`stewart_audit`] restricted to the given primes, so callers can split
/// the prime range across workers.
pub fn stewart_audit_primes(poly: &IntPoly, primes: &[u64], limit: u64, cfg: &RootConfig) -> Vec<StewartViolation> {
    let g = poly.degree() as u32;
    if g == 0 {
        return Vec::new();
    }
    let gg = BigUint::from(g).pow(g);
    let mut out = Vec::new();
    for &p in primes {
        let mut nu_max = 0u32;
        let mut q = 1u64;
        while let Some(next) = q.checked_mul(p).filter(|&n| n <= limit) {
            q = next;
            nu_max += 1;
        }
        if nu_max == 0 {
            continue;
        }
        let counts = rho_prime_power_tower(poly, p, nu_max, cfg).expect("p^nu within bound");
        for (i, &count) in counts.iter().enumerate() {
            let nu = i as u32 + 1;
            let lhs = BigUint::from(count).pow(g);
            let rhs = &gg * BigUint::from(p).pow(nu * (g - 1));
            if lhs > rhs {
                out.push(StewartViolation { p, nu, count });
            }
        }
    }
    out
}

/// Outcome of checking `rho(p) <= deg P` prime by prime.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrimeCountAudit {
    /// Primes not dividing the leading coefficient with `rho(p) > deg P`.
    pub violations: Vec<(u64, u64)>,
    /// Primes dividing the leading coefficient with `rho(p) > deg P`
    /// (only possible when `P` vanishes identically mod `p`).
    pub flagged: Vec<(u64, u64)>,
    pub primes_checked: usize,
}

pub fn prime_count_audit(poly: &IntPoly, limit: u64) -> PrimeCountAudit {
    let cfg = RootConfig::default();
    let g = poly.degree() as u64;
    let mut audit = PrimeCountAudit::default();
    for p in primes_up_to(limit) {
        let count = count_roots_mod_p(poly, p, &cfg).expect("prime");
        audit.primes_checked += 1;
        if count > g {
            let divides_lead = (poly.lead() % num_bigint::BigInt::from(p)).is_zero();
            if divides_lead {
                audit.flagged.push((p, count));
            } else {
                audit.violations.push((p, count));
            }
        }
    }
    audit
}

/// `rho(P, p)` for each of the given primes.
pub fn prime_root_counts(poly: &IntPoly, primes: &[u64], cfg: &RootConfig) -> Vec<u64> {
    primes
        .iter()
        .map(|&p| count_roots_mod_p(poly, p, cfg).expect("prime"))
        .collect()
}
