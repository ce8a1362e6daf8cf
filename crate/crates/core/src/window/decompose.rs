use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{WindowError, WindowSieve, WindowSpec, RECORD_WINDOW_LIMIT};
use crate::polyarith::PolySystem;
use crate::primes::{factor_u128, is_prime_u128};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NClass {
    /// `prod a <= x^(g eps)` and `P^-(b) > x^(eps / 3)`.
    N1,
    /// `prod a <= x^(g eps)` and `P^-(b) <= x^(eps / 3)`.
    N2,
    /// `prod a > x^(g eps)`.
    N3,
}

impl fmt::Display for NClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NClass::N1 => "N1",
            NClass::N2 => "N2",
            NClass::N3 => "N3",
        })
    }
}

/// The canonical decomposition `Q(n) = prod_j a_jn * b_n` of one `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizationRecord {
    pub n: u64,
    /// Ascending factorization of each `|Q_j(n)|`.
    pub factorizations: Vec<Vec<(u128, u32)>>,
    /// `xi_n`; `None` when every prime power of `Q(n)` fits under the cap.
    pub xi: Option<u128>,
    /// `a_jn`: the part of `|Q_j(n)|` supported on primes `<= xi_n`.
    pub a: Vec<u128>,
    pub b: BigUint,
    /// `p_n = P^-(b_n)`; `None` when `b_n = 1`.
    pub p_min_b: Option<u128>,
    /// `p_n^v_n || b_n`.
    pub v: u32,
    /// Part of `a_jn` supported on primes dividing `beta D`.
    pub t: Vec<u128>,
    pub d: Vec<u128>,
    pub t_star: Vec<u128>,
    pub d_star: Vec<u128>,
    pub class: NClass,
    /// `q_n = P^+(prod_j a_jn)`, class N3 only.
    pub q: Option<u128>,
    pub omega_b: u32,
}

impl FactorizationRecord {
    pub fn a_product(&self) -> u128 {
        self.a.iter().product()
    }

    /// `omega(|Q_j(n)|)`.
    pub fn omega(&self, j: usize) -> u32 {
        self.factorizations[j].len() as u32
    }

    /// `ln |Q(n)|` from the stored factorizations.
    pub fn ln_q(&self) -> f64 {
        self.factorizations
            .iter()
            .flatten()
            .map(|&(p, e)| e as f64 * libm::log(p as f64))
            .sum()
    }

    /// Prime factorization of `Q(n)` with exponents summed over members.
    pub fn merged(&self) -> BTreeMap<u128, u32> {
        merge(&self.factorizations)
    }
}

fn merge(factorizations: &[Vec<(u128, u32)>]) -> BTreeMap<u128, u32> {
    let mut out = BTreeMap::new();
    for &(p, e) in factorizations.iter().flatten() {
        *out.entry(p).or_insert(0) += e;
    }
    out
}

fn ln_u128(v: u128) -> f64 {
    libm::log(v as f64)
}

fn kernel(v: u128) -> u128 {
    factor_u128(v)
        .expect("a-parts are small")
        .iter()
        .map(|&(p, _)| p)
        .product()
}

/// Builds the decomposition of `n` from the factorizations of `|Q_j(n)|`.
pub fn decompose(
    system: &PolySystem,
    n: u64,
    factorizations: Vec<Vec<(u128, u32)>>,
    spec: &WindowSpec,
) -> FactorizationRecord {
    let log_x = spec.log_x();
    let cap = spec.xi_cap_exponent * log_x;
    let merged = merge(&factorizations);
    let mut acc = 0.0f64;
    let mut xi = None;
    for (&p, &e) in &merged {
        let next = acc + e as f64 * ln_u128(p);
        if next > cap {
            xi = Some(p - 1);
            break;
        }
        acc = next;
    }
    let small = |p: u128| xi.is_none_or(|xi| p <= xi);
    let r = factorizations.len();
    let mut a = Vec::with_capacity(r);
    let mut t = Vec::with_capacity(r);
    let mut d = Vec::with_capacity(r);
    let mut t_star = Vec::with_capacity(r);
    let mut d_star = Vec::with_capacity(r);
    let mut b = BigUint::one();
    for fac in &factorizations {
        let (mut aj, mut tj, mut dj, mut ts, mut ds) = (1u128, 1u128, 1u128, 1u128, 1u128);
        for &(p, e) in fac {
            let pe = p.pow(e);
            if small(p) {
                aj *= pe;
                if p <= u64::MAX as u128 && system.divides_beta_d(p as u64) {
                    tj *= pe;
                    ts *= p;
                } else {
                    dj *= pe;
                    ds *= p;
                }
            } else {
                b *= BigUint::from(p).pow(e);
            }
        }
        a.push(aj);
        t.push(tj);
        d.push(dj);
        t_star.push(ts);
        d_star.push(ds);
    }
    let (p_min_b, v) = match xi {
        Some(xi) => {
            let p = xi + 1;
            (Some(p), merged[&p])
        }
        None => (None, 0),
    };
    let omega_b = merged.keys().filter(|&&p| !small(p)).count() as u32;
    let a_ln: f64 = a.iter().map(|&v| ln_u128(v)).sum();
    let class = if a_ln > spec.class_exponent * log_x {
        NClass::N3
    } else if p_min_b.is_none_or(|p| p as f64 > spec.small_prime_cutoff()) {
        NClass::N1
    } else {
        NClass::N2
    };
    let q = (class == NClass::N3).then(|| merged.keys().copied().filter(|&p| small(p)).max().unwrap_or(1));
    FactorizationRecord {
        n,
        factorizations,
        xi,
        a,
        b,
        p_min_b,
        v,
        t,
        d,
        t_star,
        d_star,
        class,
        q,
        omega_b,
    }
}

/// Decompositions of every `n` in the window, and the excluded `n`.
pub fn window_records(
    system: &PolySystem,
    spec: &WindowSpec,
) -> Result<(Vec<FactorizationRecord>, Vec<u64>), WindowError> {
    if spec.y > RECORD_WINDOW_LIMIT {
        return Err(WindowError::TooManyRecords { y: spec.y });
    }
    let sieve = WindowSieve::new(system, spec)?;
    let r = system.r();
    let mut records = Vec::new();
    let mut excluded = Vec::new();
    for (start, len) in WindowSieve::segments(spec) {
        let block = sieve.block(start, len, true)?;
        let mut factors = block.factors.clone().expect("requested");
        for i in 0..len {
            if block.is_excluded(i) {
                continue;
            }
            let fac: Vec<_> = (0..r).map(|j| core::mem::take(&mut factors[i * r + j])).collect();
            records.push(decompose(system, start + i as u64, fac, spec));
        }
        excluded.extend(block.excluded);
    }
    Ok((records, excluded))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// A stored factorization does not multiply back to `|Q_j(n)|` or lists
    /// a non-prime.
    Factorization,
    /// `prod a * b != |Q(n)|`.
    ProductIdentity,
    /// `a_jn` has a prime above `xi_n`.
    SmoothPart,
    /// `b_n` has a prime at most `xi_n`, or `p_n`, `v_n` are wrong.
    RoughPart,
    /// `prod a` exceeds the cap, or `xi_n` is not the largest admissible.
    XiMaximality,
    /// `t * d != a`, a prime of `t` not dividing `beta D`, or
    /// `gcd(d, beta D) > 1`.
    Split,
    DPairwiseCoprime,
    Kernel,
    Class,
    OmegaB,
}

/// A failed invariant; `witness` is a prime exhibiting it when one exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub n: u64,
    pub kind: ViolationKind,
    pub member: Option<usize>,
    pub witness: Option<u128>,
}

fn smallest_prime(v: u128) -> Option<u128> {
    factor_u128(v).ok().and_then(|f| f.first().map(|&(p, _)| p))
}

fn big_to_u128(v: &BigInt) -> Option<u128> {
    v.abs().to_u128()
}

/// Re-derives every invariant of `record` from first principles.
pub fn check_record(record: &FactorizationRecord, system: &PolySystem, spec: &WindowSpec) -> Vec<Violation> {
    let n = record.n;
    let mut out = Vec::new();
    let mut flag = |kind, member, witness| {
        out.push(Violation {
            n,
            kind,
            member,
            witness,
        })
    };
    let r = system.r();
    let nb = BigInt::from(n);
    let mut full = BigUint::one();
    for (j, q) in system.members().iter().enumerate() {
        let value = q.eval(&nb).abs().to_biguint().expect("absolute value");
        let listed = record.factorizations[j]
            .iter()
            .fold(BigUint::one(), |acc, &(p, e)| acc * BigUint::from(p).pow(e));
        let bad_prime = record.factorizations[j]
            .iter()
            .find(|&&(p, _)| is_prime_u128(p) == Some(false))
            .map(|&(p, _)| p);
        if listed != value || bad_prime.is_some() {
            flag(ViolationKind::Factorization, Some(j), bad_prime);
        }
        full *= value;
    }
    let a_big = record.a.iter().fold(BigUint::one(), |acc, &v| acc * BigUint::from(v));
    if &a_big * &record.b != full {
        flag(ViolationKind::ProductIdentity, None, None);
    }
    let xi_ok = |p: u128| record.xi.is_none_or(|xi| p <= xi);
    for (j, &aj) in record.a.iter().enumerate() {
        if let Some(&(p, _)) = factor_u128(aj).unwrap_or_default().iter().find(|&&(p, _)| !xi_ok(p)) {
            flag(ViolationKind::SmoothPart, Some(j), Some(p));
        }
    }
    let merged = record.merged();
    for &p in merged.keys() {
        if xi_ok(p) && (&record.b % BigUint::from(p)).is_zero() {
            flag(ViolationKind::RoughPart, None, Some(p));
        }
    }
    match record.p_min_b {
        None => {
            if !record.b.is_one() || record.xi.is_some() {
                flag(ViolationKind::RoughPart, None, None);
            }
        }
        Some(p) => {
            let pv = BigUint::from(p).pow(record.v);
            let exact =
                record.v >= 1 && (&record.b % &pv).is_zero() && !(&record.b % (&pv * BigUint::from(p))).is_zero();
            let least = merged.keys().filter(|&&q| !xi_ok(q)).min() == Some(&p);
            if !exact || !least || xi_ok(p) {
                flag(ViolationKind::RoughPart, None, Some(p));
            }
        }
    }
    let log_x = spec.log_x();
    let cap = spec.xi_cap_exponent * log_x;
    let a_ln: f64 = record.a.iter().map(|&v| ln_u128(v)).sum();
    if a_ln > cap {
        flag(ViolationKind::XiMaximality, None, None);
    }
    if let (Some(p), Some(xi)) = (record.p_min_b, record.xi) {
        // xi_n is maximal: admitting p_n would overflow the cap, and no prime
        // of Q(n) lies strictly between xi_n and p_n.
        if a_ln + record.v as f64 * ln_u128(p) <= cap || xi + 1 != p {
            flag(ViolationKind::XiMaximality, None, Some(p));
        }
    }
    let beta_d = system.beta_d();
    for j in 0..r {
        if record.t[j].checked_mul(record.d[j]) != Some(record.a[j]) {
            flag(ViolationKind::Split, Some(j), None);
        }
        for (p, _) in factor_u128(record.t[j]).unwrap_or_default() {
            if !(beta_d % BigInt::from(p)).is_zero() {
                flag(ViolationKind::Split, Some(j), Some(p));
            }
        }
        let g = big_to_u128(&(beta_d % BigInt::from(record.d[j])))
            .map(|rem| crate::primes::gcd_u128(rem, record.d[j]))
            .unwrap_or(1);
        if g > 1 {
            flag(ViolationKind::Split, Some(j), smallest_prime(g));
        }
        for i in 0..j {
            let g = crate::primes::gcd_u128(record.d[i], record.d[j]);
            if g > 1 {
                flag(ViolationKind::DPairwiseCoprime, Some(j), smallest_prime(g));
            }
        }
        for (part, star) in [(record.t[j], record.t_star[j]), (record.d[j], record.d_star[j])] {
            if part % star.max(1) != 0 || kernel(part) != star {
                flag(ViolationKind::Kernel, Some(j), None);
            }
        }
    }
    let class = if a_ln > spec.class_exponent * log_x {
        NClass::N3
    } else if record.p_min_b.is_none_or(|p| p as f64 > spec.small_prime_cutoff()) {
        NClass::N1
    } else {
        NClass::N2
    };
    let q = (class == NClass::N3).then(|| {
        record
            .a
            .iter()
            .filter_map(|&v| factor_u128(v).ok().and_then(|f| f.last().map(|&(p, _)| p)))
            .max()
            .unwrap_or(1)
    });
    if class != record.class || q != record.q {
        flag(ViolationKind::Class, None, None);
    }
    let omega_b = merged.keys().filter(|&&p| !xi_ok(p)).count() as u32;
    if omega_b != record.omega_b {
        flag(ViolationKind::OmegaB, None, None);
    }
    out
}
