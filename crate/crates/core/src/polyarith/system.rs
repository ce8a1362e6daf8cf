use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use super::{discriminant, irreducibility, resultant, IntPoly, Irreducibility, IrreducibilityMethod, PolyError};
use crate::primes::{mul_mod, primes_up_to};

/// What was checked when a system was accepted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub irreducibility: Vec<IrreducibilityMethod>,
    /// `(i, j, Res(Q_i, Q_j))` for `i < j`.
    pub pairwise_resultants: Vec<(usize, usize, BigInt)>,
    /// Every prime up to this bound was checked for being a fixed divisor
    /// of each member.
    pub fixed_divisor_scan_limit: u64,
    /// Primes `p` with `rho_0(p) = p`: they divide `Q(n)` for every `n` even
    /// though no single member has a fixed divisor (2 for `X(X + 1)`).
    pub product_fixed_primes: Vec<u64>,
}

/// A validated family `Q_1, ..., Q_r` of primitive, irreducible, pairwise
/// coprime integer polynomials, none of which has a fixed prime divisor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolySystem {
    members: Vec<IntPoly>,
    product: IntPoly,
    disc: BigInt,
    beta_d: BigInt,
    certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemError {
    Empty,
    ConstantMember { index: usize },
    NonUnitContent { index: usize, content: BigInt },
    Reducible { index: usize, factor: IntPoly },
    ZeroResultant { i: usize, j: usize },
    FixedPrimeDivisor { index: usize, p: u64 },
    Undecided { index: usize, reason: String },
}

impl fmt::Display for SystemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemError::Empty => f.write_str("empty polynomial system"),
            SystemError::ConstantMember { index } => write!(f, "member {index} is constant"),
            SystemError::NonUnitContent { index, content } => {
                write!(f, "member {index} has content {content}")
            }
            SystemError::Reducible { index, factor } => {
                write!(f, "member {index} is reducible (factor {factor})")
            }
            SystemError::ZeroResultant { i, j } => {
                write!(f, "members {i} and {j} share a common factor")
            }
            SystemError::FixedPrimeDivisor { index, p } => {
                write!(f, "member {index} has fixed prime divisor {p}")
            }
            SystemError::Undecided { index, reason } => {
                write!(f, "irreducibility of member {index} undecided: {reason}")
            }
        }
    }
}

impl core::error::Error for SystemError {}

/// Parses `"0,1;1,0,1"`: semicolon-separated coefficient lists.
pub fn parse_system(s: &str) -> Result<Vec<IntPoly>, PolyError> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(IntPoly::parse)
        .collect()
}

/// Checks, in order: unit content, irreducibility over `Q`, non-zero pairwise
/// resultants, and `rho_j(p) < p` for every member and every prime
/// `p <= max(g_j, scan_limit)`.
///
/// A fixed prime divisor of a primitive polynomial of degree `g_j` makes it
/// vanish identically mod `p`, which forces `p <= g_j`, so `scan_limit = 0`
/// is already exhaustive. The product itself may have fixed primes (every
/// `n(n + 1)` is even); those are listed in the certificate.
pub fn validate_system(polys: Vec<IntPoly>, scan_limit: u64) -> Result<PolySystem, SystemError> {
    if polys.is_empty() {
        return Err(SystemError::Empty);
    }
    let mut methods = Vec::with_capacity(polys.len());
    for (index, q) in polys.iter().enumerate() {
        if q.is_constant() {
            return Err(SystemError::ConstantMember { index });
        }
        let content = q.content();
        if !content.is_one() {
            return Err(SystemError::NonUnitContent { index, content });
        }
        match irreducibility(q) {
            Ok(Irreducibility::Irreducible(m)) => methods.push(m),
            Ok(Irreducibility::Reducible { factor }) => return Err(SystemError::Reducible { index, factor }),
            Err(e) => {
                return Err(SystemError::Undecided {
                    index,
                    reason: alloc::format!("{e}"),
                })
            }
        }
    }
    let mut pairwise = Vec::new();
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            let res = resultant(&polys[i], &polys[j]);
            if res.is_zero() {
                return Err(SystemError::ZeroResultant { i, j });
            }
            pairwise.push((i, j, res));
        }
    }
    let product = polys[1..].iter().fold(polys[0].clone(), |acc, q| acc.mul(q));
    let g = product.degree() as u64;
    let limit = scan_limit.max(g);
    let vanishes_everywhere = |residues: &[Vec<u64>], p: u64| {
        (0..p).all(|r| {
            residues
                .iter()
                .any(|c| c.iter().rev().fold(0u64, |acc, &a| (mul_mod(acc, r, p) + a) % p) == 0)
        })
    };
    for (index, q) in polys.iter().enumerate() {
        for p in primes_up_to(scan_limit.max(q.degree() as u64)) {
            if vanishes_everywhere(&[q.residues_mod(p)], p) {
                return Err(SystemError::FixedPrimeDivisor { index, p });
            }
        }
    }
    let product_fixed_primes = primes_up_to(g)
        .into_iter()
        .filter(|&p| {
            let residues: Vec<Vec<u64>> = polys.iter().map(|q| q.residues_mod(p)).collect();
            vanishes_everywhere(&residues, p)
        })
        .collect();
    let disc = discriminant(&product).expect("degree >= 1");
    let beta_d = product.lead() * &disc;
    Ok(PolySystem {
        members: polys,
        product,
        disc,
        beta_d,
        certificate: Certificate {
            irreducibility: methods,
            pairwise_resultants: pairwise,
            fixed_divisor_scan_limit: limit,
            product_fixed_primes,
        },
    })
}

impl PolySystem {
    pub fn members(&self) -> &[IntPoly] {
        &self.members
    }

    /// `Q = prod Q_j`.
    pub fn product(&self) -> &IntPoly {
        &self.product
    }

    pub fn r(&self) -> usize {
        self.members.len()
    }

    /// Total degree `g = sum deg Q_j`.
    pub fn g(&self) -> usize {
        self.product.degree()
    }

    /// Leading coefficient `beta` of `Q`.
    pub fn beta(&self) -> &BigInt {
        self.product.lead()
    }

    /// Discriminant `D` of `Q`.
    pub fn disc(&self) -> &BigInt {
        &self.disc
    }

    /// `beta * D`.
    pub fn beta_d(&self) -> &BigInt {
        &self.beta_d
    }

    pub fn beta_d_abs(&self) -> BigUint {
        self.beta_d.abs().to_biguint().expect("absolute value")
    }

    /// Whether the prime `p` divides `beta * D`.
    pub fn divides_beta_d(&self, p: u64) -> bool {
        (&self.beta_d % BigInt::from(p)).is_zero()
    }

    /// `||Q||`, the largest non-constant coefficient of `Q` in absolute value.
    pub fn norm(&self) -> BigInt {
        self.product.norm()
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    /// True when the window start `x` is below `multiplier * ||Q||`, the
    /// regime where the uniform bound is not claimed.
    pub fn window_start_warning(&self, x: u64, multiplier: u64) -> bool {
        BigInt::from(x) < self.norm() * BigInt::from(multiplier)
    }

    /// The ascending coefficient format, semicolon-separated.
    pub fn spec_string(&self) -> String {
        let parts: Vec<String> = self.members.iter().map(|q| alloc::format!("{q}")).collect();
        parts.join(";")
    }
}
