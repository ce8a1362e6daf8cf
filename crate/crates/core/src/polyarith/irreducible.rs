//! Desk-scale irreducibility over the rationals.
//!
//! Degree one is irreducible. Degrees two and three are reducible exactly when
//! they have a rational root. From degree four on, factor-degree patterns
//! modulo several good primes usually prove irreducibility outright; if they
//! do not, Kronecker's interpolation search looks for an integer factor whose
//! coefficients respect the Mignotte bound.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{IntPoly, PolyError};
use crate::primes::{factor_u128, primes_up_to};
use crate::rootcount::modp;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IrreducibilityMethod {
    Linear,
    RationalRootTest,
    /// Factor-degree patterns modulo these primes leave no proper factor
    /// degree.
    ModularDegreePattern {
        primes: Vec<u64>,
    },
    KroneckerSearch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Irreducibility {
    Irreducible(IrreducibilityMethod),
    Reducible { factor: IntPoly },
}

const MAX_DIVISOR_INPUT: u128 = 1_000_000_000_000_000_000;
const MAX_KRONECKER_CANDIDATES: u64 = 20_000_000;
const PATTERN_PRIMES: usize = 12;

pub fn irreducibility(p: &IntPoly) -> Result<Irreducibility, PolyError> {
    match p.degree() {
        0 => Err(PolyError::Constant),
        1 => Ok(Irreducibility::Irreducible(IrreducibilityMethod::Linear)),
        2 | 3 => match rational_root_factor(p)? {
            Some(factor) => Ok(Irreducibility::Reducible { factor }),
            None => Ok(Irreducibility::Irreducible(IrreducibilityMethod::RationalRootTest)),
        },
        _ => {
            if let Some(factor) = rational_root_factor(p)? {
                return Ok(Irreducibility::Reducible { factor });
            }
            let (allowed, primes) = modular_degree_pattern(p);
            let g = p.degree();
            let candidates: Vec<usize> = (2..=g / 2).filter(|&d| allowed[d]).collect();
            if candidates.is_empty() {
                return Ok(Irreducibility::Irreducible(
                    IrreducibilityMethod::ModularDegreePattern { primes },
                ));
            }
            for d in candidates {
                if let Some(factor) = kronecker_factor(p, d)? {
                    return Ok(Irreducibility::Reducible { factor });
                }
            }
            Ok(Irreducibility::Irreducible(IrreducibilityMethod::KroneckerSearch))
        }
    }
}

fn small_abs(v: &BigInt, what: &str) -> Result<u128, PolyError> {
    v.abs()
        .to_u128()
        .filter(|&x| x <= MAX_DIVISOR_INPUT)
        .ok_or_else(|| PolyError::TooLarge(alloc::format!("{what} {v} exceeds 10^18")))
}

fn divisors(n: u128) -> Result<Vec<u128>, PolyError> {
    let fac = factor_u128(n).map_err(|e| PolyError::TooLarge(alloc::format!("{e}")))?;
    let mut out = vec![1u128];
    for (p, e) in fac {
        let len = out.len();
        let mut pk = 1u128;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// A linear factor `b X - a` from a rational root `a / b`, if any.
fn rational_root_factor(p: &IntPoly) -> Result<Option<IntPoly>, PolyError> {
    if p.coeffs()[0].is_zero() {
        return Ok(Some(IntPoly::linear(0)));
    }
    let num_divs = divisors(small_abs(&p.coeffs()[0], "constant term")?)?;
    let den_divs = divisors(small_abs(p.lead(), "leading coefficient")?)?;
    let g = p.degree();
    for &b in &den_divs {
        for &a in &num_divs {
            if a.gcd(&b) != 1 {
                continue;
            }
            for a in [BigInt::from(a), -BigInt::from(a)] {
                // b^g P(a / b) = sum c_i a^i b^(g - i)
                let b = BigInt::from(b);
                let mut acc = BigInt::zero();
                let mut apow = BigInt::one();
                for (i, c) in p.coeffs().iter().enumerate() {
                    acc += c * &apow * num_traits::pow(b.clone(), g - i);
                    apow *= &a;
                }
                if acc.is_zero() {
                    return Ok(Some(IntPoly::new(vec![-a, b]).expect("b != 0")));
                }
            }
        }
    }
    Ok(None)
}

/// Degrees `d` that a rational factor could have, intersected over up to
/// `PATTERN_PRIMES` primes where the reduction keeps its degree and stays
/// squarefree.
fn modular_degree_pattern(p: &IntPoly) -> (Vec<bool>, Vec<u64>) {
    let g = p.degree();
    let mut allowed = vec![true; g + 1];
    let mut used = Vec::new();
    for q in primes_up_to(2000) {
        if used.len() == PATTERN_PRIMES {
            break;
        }
        let f = modp::trim(p.residues_mod(q));
        if f.len() != g + 1 {
            continue;
        }
        let fm = modp::monic(&f, q);
        if modp::degree(&modp::gcd(&fm, &modp::derivative(&fm, q), q)) != Some(0) {
            continue;
        }
        let mut sums = vec![false; g + 1];
        sums[0] = true;
        for (deg, count) in modp::distinct_degree_counts(&fm, q) {
            for _ in 0..count {
                for s in (deg..=g).rev() {
                    if sums[s - deg] {
                        sums[s] = true;
                    }
                }
            }
        }
        for (a, s) in allowed.iter_mut().zip(&sums) {
            *a &= *s;
        }
        used.push(q);
        if (1..g).all(|d| !allowed[d]) {
            break;
        }
    }
    (allowed, used)
}

/// Integer divided differences at integer nodes; `None` when a division is
/// inexact, which rules out an integer-coefficient interpolant.
fn newton_coefficients(nodes: &[BigInt], values: &[BigInt]) -> Option<Vec<BigInt>> {
    let mut table = values.to_vec();
    let n = nodes.len();
    for k in 1..n {
        for i in (k..n).rev() {
            let num = &table[i] - &table[i - 1];
            let den = &nodes[i] - &nodes[i - k];
            let (q, r) = num.div_rem(&den);
            if !r.is_zero() {
                return None;
            }
            table[i] = q;
        }
    }
    Some(table)
}

fn newton_to_monomial(nodes: &[BigInt], newton: &[BigInt]) -> Vec<BigInt> {
    // Horner on the Newton basis: acc = acc * (X - x_k) + c_k.
    let mut acc: Vec<BigInt> = vec![BigInt::zero()];
    for k in (0..newton.len()).rev() {
        let mut next = vec![BigInt::zero(); acc.len() + 1];
        for (i, v) in acc.iter().enumerate() {
            next[i + 1] += v;
            next[i] -= v * &nodes[k];
        }
        next[0] += &newton[k];
        acc = next;
    }
    acc
}

/// Square of the Mignotte-type coefficient cap `2^d ||P||_2` used to prune
/// candidate factors of degree `d`.
fn mignotte_bound_sq(p: &IntPoly, d: usize) -> BigInt {
    let l2sq: BigInt = p.coeffs().iter().map(|c| c * c).sum();
    l2sq * (BigInt::one() << (2 * d))
}

fn kronecker_factor(p: &IntPoly, d: usize) -> Result<Option<IntPoly>, PolyError> {
    let bound_sq = mignotte_bound_sq(p, d);
    // Prefer evaluation points whose values have few divisors.
    let mut pool: Vec<(usize, BigInt, BigInt, Vec<u128>)> = Vec::new();
    let mut t = 0i64;
    while pool.len() < 3 * (d + 1) + 2 {
        let node = BigInt::from(t);
        let v = p.eval(&node);
        if v.is_zero() {
            return Ok(Some(IntPoly::new(vec![-node, BigInt::one()]).expect("monic")));
        }
        let divs = divisors(small_abs(&v, "polynomial value")?)?;
        pool.push((divs.len(), node, v, divs));
        t = if t <= 0 { 1 - t } else { -t };
    }
    pool.sort_by_key(|a| a.0);
    pool.truncate(d + 1);
    let total: u64 = pool
        .iter()
        .map(|(n, ..)| 2 * *n as u64)
        .try_fold(1u64, |acc, n| acc.checked_mul(n))
        .unwrap_or(u64::MAX)
        / 2;
    if total > MAX_KRONECKER_CANDIDATES {
        return Err(PolyError::TooLarge(alloc::format!(
            "Kronecker search for degree-{d} factors of {p} needs {total} candidates"
        )));
    }
    let nodes: Vec<BigInt> = pool.iter().map(|(_, n, ..)| n.clone()).collect();
    let choices: Vec<Vec<BigInt>> = pool
        .iter()
        .enumerate()
        .map(|(i, (_, _, _, divs))| {
            let mut c: Vec<BigInt> = divs.iter().map(|&x| BigInt::from(x)).collect();
            if i > 0 {
                c.extend(divs.iter().map(|&x| -BigInt::from(x)));
            }
            c
        })
        .collect();
    let mut idx = vec![0usize; d + 1];
    loop {
        let values: Vec<BigInt> = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
        if let Some(newton) = newton_coefficients(&nodes, &values) {
            if !newton[d].is_zero() {
                let coeffs = newton_to_monomial(&nodes, &newton);
                let fits = coeffs.iter().all(|c| c * c <= bound_sq);
                if fits {
                    let cand = IntPoly::new(coeffs).expect("degree d");
                    if (p.lead() % cand.lead()).is_zero()
                        && (&p.coeffs()[0] % &cand.coeffs()[0]).is_zero()
                        && p.div_exact(&cand).is_some()
                    {
                        return Ok(Some(cand));
                    }
                }
            }
        }
        // odometer
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(None);
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c).unwrap()
    }

    fn assert_reducible(poly: IntPoly) {
        match irreducibility(&poly).unwrap() {
            Irreducibility::Reducible { factor } => {
                assert!(factor.degree() >= 1 && factor.degree() < poly.degree());
                assert!(poly.div_exact(&factor).is_some(), "{factor} does not divide {poly}");
            }
            other => panic!("{poly} reported {other:?}"),
        }
    }

    #[test]
    fn low_degree() {
        assert!(matches!(
            irreducibility(&p(&[1, 0, 1])).unwrap(),
            Irreducibility::Irreducible(_)
        ));
        assert!(matches!(
            irreducibility(&p(&[1, -1, 0, 1])).unwrap(),
            Irreducibility::Irreducible(_)
        ));
        assert_reducible(p(&[0, 0, 1]));
        assert_reducible(p(&[-1, 0, 4])); // (2X - 1)(2X + 1)
        assert_reducible(p(&[3, -7, 2])); // (2X - 1)(X - 3)
        assert_reducible(p(&[-1, 2, -1, 2])); // (2X - 1)(X^2 + 1)
        assert!(matches!(
            irreducibility(&p(&[-2, 3, 0, 2])).unwrap(),
            Irreducibility::Irreducible(_)
        ));
    }

    #[test]
    fn higher_degree() {
        // X^4 + 1 is irreducible over Q but reducible modulo every prime.
        assert!(matches!(
            irreducibility(&p(&[1, 0, 0, 0, 1])).unwrap(),
            Irreducibility::Irreducible(IrreducibilityMethod::KroneckerSearch)
        ));
        assert!(matches!(
            irreducibility(&p(&[-2, 0, 0, 0, 1])).unwrap(),
            Irreducibility::Irreducible(_)
        ));
        // (X^2 + 1)(X^2 + X + 2), no rational roots.
        assert_reducible(p(&[1, 0, 1]).mul(&p(&[2, 1, 1])));
        // (2X^2 + 3)(3X^3 - X + 5)
        assert_reducible(p(&[3, 0, 2]).mul(&p(&[5, -1, 0, 3])));
        assert_reducible(p(&[1, 1, 1]).mul(&p(&[1, 1, 1])));
    }

    #[test]
    fn cyclotomic_and_random_products() {
        // Phi_5 and Phi_7 are irreducible.
        assert!(matches!(
            irreducibility(&p(&[1, 1, 1, 1, 1])).unwrap(),
            Irreducibility::Irreducible(_)
        ));
        assert!(matches!(
            irreducibility(&p(&[1, 1, 1, 1, 1, 1, 1])).unwrap(),
            Irreducibility::Irreducible(_)
        ));
        assert_reducible(p(&[1, 1, 1, 1, 1]).mul(&p(&[1, -1, 1])));
    }
}
