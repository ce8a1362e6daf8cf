//! Machine-integer number theory: prime sieves, modular arithmetic,
//! certified primality and complete factorization of `u128` values.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Miller-Rabin with the first thirteen primes as bases is deterministic
/// below this value.
pub const MR_CERTIFIED_LIMIT: u128 = 3_317_044_064_679_887_385_961_981;

const MR_BASES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorError {
    /// Trial division would need more than the allowed number of divisions.
    BudgetExceeded { n: u128, budget: u64 },
    /// A cofactor is too large for certified primality testing.
    Uncertified { cofactor: u128 },
}

impl fmt::Display for FactorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorError::BudgetExceeded { n, budget } => {
                write!(f, "trial division of {n} exceeds budget of {budget} divisions")
            }
            FactorError::Uncertified { cofactor } => {
                write!(f, "cofactor {cofactor} exceeds the certified primality range")
            }
        }
    }
}

impl core::error::Error for FactorError {}

pub fn isqrt_u64(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = libm::sqrt(n as f64) as u64;
    while r.checked_mul(r).is_none_or(|s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

pub fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut r = libm::sqrt(n as f64) as u128;
    while r.checked_mul(r).is_none_or(|s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

/// All primes `p <= limit`, ascending (sieve of Eratosthenes over odd numbers).
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let half = ((limit - 1) / 2) as usize; // index i stands for 2i + 1
    let mut composite = vec![false; half + 1];
    let mut i = 1usize;
    while (2 * i + 1) * (2 * i + 1) <= limit as usize {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = (p * p - 1) / 2;
            while j <= half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = Vec::with_capacity(approx_prime_count(limit));
    out.push(2);
    out.extend(
        composite
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &c)| !c)
            .map(|(i, _)| 2 * i as u64 + 1),
    );
    out
}

fn approx_prime_count(limit: u64) -> usize {
    let x = limit as f64;
    if x < 10.0 {
        4
    } else {
        (1.2 * x / libm::log(x)) as usize + 8
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    if m <= u32::MAX as u64 {
        (a % m) * (b % m) % m
    } else {
        ((a as u128 * b as u128) % m as u128) as u64
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[inline]
fn add_mod_u128(a: u128, b: u128, m: u128) -> u128 {
    if a >= m - b {
        a - (m - b)
    } else {
        a + b
    }
}

pub fn mul_mod_u128(a: u128, b: u128, m: u128) -> u128 {
    if m <= u64::MAX as u128 {
        return (a % m) * (b % m) % m;
    }
    let (mut a, mut b) = (a % m, b % m);
    let mut acc = 0u128;
    while b > 0 {
        if b & 1 == 1 {
            acc = add_mod_u128(acc, a, m);
        }
        a = add_mod_u128(a, a, m);
        b >>= 1;
    }
    acc
}

fn pow_mod_u128(mut base: u128, mut exp: u128, m: u128) -> u128 {
    let mut acc = 1u128 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u128(acc, base, m);
        }
        base = mul_mod_u128(base, base, m);
        exp >>= 1;
    }
    acc
}

fn strong_probable_prime(n: u128, a: u128) -> bool {
    let mut d = n - 1;
    let s = d.trailing_zeros();
    d >>= s;
    let mut x = pow_mod_u128(a % n, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod_u128(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Certified primality for `n < MR_CERTIFIED_LIMIT`. Above it, a witnessed
/// composite is still `Some(false)`; a probable prime is `None`.
pub fn is_prime_u128(n: u128) -> Option<bool> {
    if n < 2 {
        return Some(false);
    }
    for &p in &MR_BASES {
        if n == p as u128 {
            return Some(true);
        }
        if n.is_multiple_of(p as u128) {
            return Some(false);
        }
    }
    let probable = MR_BASES.iter().all(|&a| strong_probable_prime(n, a as u128));
    match (probable, n < MR_CERTIFIED_LIMIT) {
        (false, _) => Some(false),
        (true, true) => Some(true),
        (true, false) => None,
    }
}

pub fn is_prime(n: u64) -> bool {
    is_prime_u128(n as u128).unwrap_or(false)
}

/// Brent's variant of Pollard rho; returns a non-trivial divisor of the
/// odd composite `n`.
fn pollard_brent(n: u128) -> u128 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut c = 1u128;
    loop {
        let f = |v: u128| add_mod_u128(mul_mod_u128(v, v, n), c, n);
        let (mut y, mut r, mut q) = (2u128, 1u64, 1u128);
        let mut g = 1u128;
        let mut x = y;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0u64;
            while k < r && g == 1 {
                ys = y;
                let steps = core::cmp::min(128, r - k);
                for _ in 0..steps {
                    y = f(y);
                    q = mul_mod_u128(q, x.abs_diff(y), n);
                }
                g = gcd_u128(q, n);
                k += steps;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd_u128(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn push_factor(out: &mut Vec<(u128, u32)>, p: u128, e: u32) {
    match out.iter_mut().find(|(q, _)| *q == p) {
        Some(slot) => slot.1 += e,
        None => out.push((p, e)),
    }
}

fn split_certified(n: u128, out: &mut Vec<(u128, u32)>) -> Result<(), FactorError> {
    if n == 1 {
        return Ok(());
    }
    match is_prime_u128(n) {
        Some(true) => {
            push_factor(out, n, 1);
            Ok(())
        }
        Some(false) => {
            let d = pollard_brent(n);
            split_certified(d, out)?;
            split_certified(n / d, out)
        }
        None => Err(FactorError::Uncertified { cofactor: n }),
    }
}

/// Complete factorization of `n >= 1` (ascending primes). Small primes are
/// removed by trial division, the rest by certified Miller-Rabin and Pollard
/// rho.
pub fn factor_u128(mut n: u128) -> Result<Vec<(u128, u32)>, FactorError> {
    let mut out = Vec::new();
    for p in 2u128..1000 {
        if p * p > n {
            break;
        }
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    split_certified(n, &mut out)?;
    out.sort_unstable();
    Ok(out)
}

/// Reference factorization by plain trial division up to `sqrt(n)`.
///
/// Kept deliberately independent of the sieve and of [`factor_u128`]; fails
/// when more than `budget` candidate divisors would be tried.
pub fn trial_factor(n: u128, budget: u64) -> Result<Vec<(u128, u32)>, FactorError> {
    let original = n;
    let mut out = Vec::new();
    let mut tried = 0u64;
    let mut n = n;
    let mut d = 2u128;
    // Candidates 2, 3, then 6k - 1 and 6k + 1.
    let mut step = 2u128;
    while n > u64::MAX as u128 && d * d <= n {
        tried += 1;
        if tried > budget {
            return Err(FactorError::BudgetExceeded { n: original, budget });
        }
        divide_out(&mut n, d, &mut out);
        (d, step) = next_candidate(d, step);
    }
    let mut m = n as u64;
    let (mut d, mut step) = (d as u64, step as u64);
    while d.checked_mul(d).is_some_and(|dd| dd <= m) {
        tried += 1;
        if tried > budget {
            return Err(FactorError::BudgetExceeded { n: original, budget });
        }
        if m.is_multiple_of(d) {
            let mut e = 0;
            while m.is_multiple_of(d) {
                m /= d;
                e += 1;
            }
            out.push((d as u128, e));
        }
        (d, step) = match d {
            2 => (3, 2),
            3 => (5, 2),
            _ => (d + step, 6 - step),
        };
    }
    if m > 1 {
        out.push((m as u128, 1));
    }
    Ok(out)
}

fn next_candidate(d: u128, step: u128) -> (u128, u128) {
    match d {
        2 => (3, 2),
        3 => (5, 2),
        _ => (d + step, 6 - step),
    }
}

fn divide_out(n: &mut u128, d: u128, out: &mut Vec<(u128, u32)>) {
    if (*n).is_multiple_of(d) {
        let mut e = 0;
        while (*n).is_multiple_of(d) {
            *n /= d;
            e += 1;
        }
        out.push((d, e));
    }
}

/// Trial division by the given ascending list of all primes up to some
/// bound; fails when the list ends before `sqrt` of the remaining cofactor.
pub fn trial_factor_by_primes(n: u128, primes: &[u64]) -> Result<Vec<(u128, u32)>, FactorError> {
    let mut out = Vec::new();
    let mut n = n;
    for &p in primes {
        let pp = p as u128;
        if pp * pp > n {
            if n > 1 {
                out.push((n, 1));
            }
            return Ok(out);
        }
        if n <= u64::MAX as u128 {
            let mut m = n as u64;
            if m.is_multiple_of(p) {
                let mut e = 0;
                while m.is_multiple_of(p) {
                    m /= p;
                    e += 1;
                }
                out.push((pp, e));
            }
            n = m as u128;
        } else {
            divide_out(&mut n, pp, &mut out);
        }
    }
    if n == 1 {
        return Ok(out);
    }
    match primes.last() {
        Some(&l) if (l as u128 + 1) * (l as u128 + 1) > n => {
            out.push((n, 1));
            Ok(out)
        }
        _ => Err(FactorError::BudgetExceeded {
            n,
            budget: primes.len() as u64,
        }),
    }
}

/// Factorization of a `u64` by trial division, no budget.
pub fn factor_small(n: u64) -> Vec<(u64, u32)> {
    trial_factor(n as u128, u64::MAX)
        .expect("unbounded budget")
        .into_iter()
        .map(|(p, e)| (p as u64, e))
        .collect()
}

pub fn is_squarefree(n: u64) -> bool {
    n != 0 && factor_small(n).iter().all(|&(_, e)| e == 1)
}
