//! Segmented computation of `omega(Q_j(n))` over `x < n <= x + y`, joint
//! histograms, the canonical decomposition of `Q(n)` and its audits.

mod audit;
mod decompose;

pub use audit::{audit_classes, AuditConfig, ClassAudit, N2Audit, RankinDiagnostic};
pub use decompose::{check_record, decompose, window_records, FactorizationRecord, NClass, Violation, ViolationKind};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::ToPrimitive;

use crate::polyarith::PolySystem;
use crate::primes::{factor_u128, isqrt_u128, primes_up_to, trial_factor, FactorError};
use crate::rootcount::{roots_mod_p_with, RootConfig};

/// Values per segment.
pub const SEGMENT_LEN: u64 = 1 << 16;
/// Largest default sieving bound.
pub const Z_MAX_CAP: u64 = 1 << 20;
/// Windows longer than this never keep full factorizations.
pub const RECORD_WINDOW_LIMIT: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub enum WindowError {
    Parameter(String),
    /// Some `|Q_j(n)|` in the window might not fit the 128-bit sieve.
    ValuesTooLarge,
    /// A cofactor left after sieving could not be certified.
    ZMaxTooSmall {
        n: u64,
        member: usize,
        cofactor: u128,
    },
    TooManyRecords {
        y: u64,
    },
    Arity {
        expected: usize,
        got: usize,
    },
}

impl fmt::Display for WindowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowError::Parameter(s) => f.write_str(s),
            WindowError::ValuesTooLarge => f.write_str("polynomial values exceed the 128-bit sieve range"),
            WindowError::ZMaxTooSmall { n, member, cofactor } => write!(
                f,
                "cofactor {cofactor} of Q_{}({n}) could not be certified; raise z_max",
                member + 1
            ),
            WindowError::TooManyRecords { y } => {
                write!(
                    f,
                    "window of {y} values is too long to keep factorizations (limit {RECORD_WINDOW_LIMIT})"
                )
            }
            WindowError::Arity { expected, got } => write!(f, "expected arity {expected}, got {got}"),
        }
    }
}

impl core::error::Error for WindowError {}

/// The window `x < n <= x + y` together with the decomposition parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSpec {
    pub x: u64,
    pub y: u64,
    pub alpha: f64,
    /// `epsilon` in `(alpha / 4g, alpha / 3g)`.
    pub epsilon: f64,
    /// Largest sieving prime bound.
    pub z_max: u64,
    /// `xi_n` accumulates prime powers of `Q(n)` up to `x^xi_cap_exponent`
    /// (`2 g epsilon`).
    pub xi_cap_exponent: f64,
    /// Class boundary `x^class_exponent` (`g epsilon`) on `prod_j a_jn`.
    pub class_exponent: f64,
    /// `g` of the system this window was built for.
    pub g: usize,
}

/// Midpoint of `(alpha / 4g, alpha / 3g)`.
pub fn default_epsilon(alpha: f64, g: usize) -> f64 {
    let g = g as f64;
    0.5 * (alpha / (4.0 * g) + alpha / (3.0 * g))
}

/// Upper bound for `max |Q_j(n)|` over `n <= top`, as `sum |beta_i| top^i`.
fn value_bound(system: &PolySystem, top: u64) -> f64 {
    system
        .members()
        .iter()
        .map(|q| {
            q.coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| libm::fabs(c.to_f64().unwrap_or(f64::INFINITY)) * libm::pow(top as f64, i as f64))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

impl WindowSpec {
    pub fn new(system: &PolySystem, x: u64, y: u64, alpha: f64, epsilon: Option<f64>) -> Result<Self, WindowError> {
        if x < 2 {
            return Err(WindowError::Parameter(alloc::format!("x = {x} must be at least 2")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(WindowError::Parameter(alloc::format!("alpha = {alpha} not in (0, 1)")));
        }
        let top = x
            .checked_add(y)
            .ok_or_else(|| WindowError::Parameter(String::from("x + y overflows")))?;
        let g = system.g();
        let gf = g as f64;
        let epsilon = epsilon.unwrap_or_else(|| default_epsilon(alpha, g));
        let (lo, hi) = (alpha / (4.0 * gf), alpha / (3.0 * gf));
        if !(epsilon > lo && epsilon < hi) {
            return Err(WindowError::Parameter(alloc::format!(
                "epsilon = {epsilon} not in ({lo}, {hi})"
            )));
        }
        let bound = value_bound(system, top);
        if !(bound < 1.0e36) {
            return Err(WindowError::ValuesTooLarge);
        }
        let z_max = (isqrt_u128(bound as u128) as u64 + 1).clamp(2, Z_MAX_CAP);
        Ok(WindowSpec {
            x,
            y,
            alpha,
            epsilon,
            z_max,
            xi_cap_exponent: 2.0 * gf * epsilon,
            class_exponent: gf * epsilon,
            g,
        })
    }

    pub fn with_z_max(mut self, z_max: u64) -> Self {
        self.z_max = z_max.max(2);
        self
    }

    /// First and last `n` of the window; `None` when `y = 0`.
    pub fn range(&self) -> Option<(u64, u64)> {
        (self.y > 0).then(|| (self.x + 1, self.x + self.y))
    }

    /// `ln x`.
    pub fn log_x(&self) -> f64 {
        libm::log(self.x as f64)
    }

    /// `E = 3 (g + 1) / epsilon`.
    pub fn e_bound(&self) -> f64 {
        3.0 * (self.g as f64 + 1.0) / self.epsilon
    }

    /// `x^(epsilon / 3)`, the small-prime cutoff.
    pub fn small_prime_cutoff(&self) -> f64 {
        libm::pow(self.x as f64, self.epsilon / 3.0)
    }
}

/// Complete factorization of `n` by trial division (reference oracle).
pub fn oracle_factor(n: u128, budget: u64) -> Result<Vec<(u128, u32)>, FactorError> {
    trial_factor(n, budget)
}

/// Evaluates `Q(n)` with `i128` coefficients, Horner form.
pub(crate) fn eval_i128(coeffs: &[i128], n: i128) -> i128 {
    coeffs.iter().rev().fold(0i128, |acc, &c| acc * n + c)
}

/// One sieved segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub start: u64,
    pub len: usize,
    pub r: usize,
    /// `omega(|Q_j(start + i)|)` at index `i * r + j`; zero for excluded `n`.
    pub omegas: Vec<u32>,
    pub excluded: Vec<u64>,
    /// Factorizations at index `i * r + j`, when requested.
    pub factors: Option<Vec<Vec<(u128, u32)>>>,
}

impl Block {
    pub fn is_excluded(&self, i: usize) -> bool {
        self.excluded.binary_search(&(self.start + i as u64)).is_ok()
    }

    pub fn omega_row(&self, i: usize) -> &[u32] {
        &self.omegas[i * self.r..(i + 1) * self.r]
    }

    pub fn histogram(&self) -> BTreeMap<Vec<u32>, u64> {
        // Packed keys are cheaper to count than vectors.
        let packable = self.r <= 8 && self.omegas.iter().all(|&w| w < 256);
        let mut out = BTreeMap::new();
        if packable {
            let mut packed: BTreeMap<u64, u64> = BTreeMap::new();
            for i in 0..self.len {
                if self.is_excluded(i) {
                    continue;
                }
                let key = self.omega_row(i).iter().fold(0u64, |acc, &w| (acc << 8) | w as u64);
                *packed.entry(key).or_insert(0) += 1;
            }
            for (key, count) in packed {
                let k = (0..self.r).rev().map(|j| ((key >> (8 * j)) & 0xff) as u32).collect();
                out.insert(k, count);
            }
        } else {
            for i in 0..self.len {
                if !self.is_excluded(i) {
                    *out.entry(self.omega_row(i).to_vec()).or_insert(0) += 1;
                }
            }
        }
        out
    }
}

/// Sieving data shared by every segment of a window.
#[derive(Clone, Debug)]
pub struct WindowSieve {
    coeffs: Vec<Vec<i128>>,
    z_max: u64,
    primes: Vec<u64>,
    /// `roots[k][j]`: roots of `Q_j` modulo `primes[k]`.
    roots: Vec<Vec<Vec<u64>>>,
}

impl WindowSieve {
    pub fn new(system: &PolySystem, spec: &WindowSpec) -> Result<Self, WindowError> {
        let coeffs = system
            .members()
            .iter()
            .map(|q| q.coeffs_i128().ok_or(WindowError::ValuesTooLarge))
            .collect::<Result<Vec<_>, _>>()?;
        let primes = primes_up_to(spec.z_max);
        let cfg = RootConfig::default();
        let roots = primes
            .iter()
            .map(|&p| {
                system
                    .members()
                    .iter()
                    .map(|q| roots_mod_p_with(q, p, &cfg).map(|s| s.residues))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| WindowError::Parameter(alloc::format!("{e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(WindowSieve {
            coeffs,
            z_max: spec.z_max,
            primes,
            roots,
        })
    }

    pub fn r(&self) -> usize {
        self.coeffs.len()
    }

    /// Sieves `start <= n < start + len`.
    pub fn block(&self, start: u64, len: usize, with_factors: bool) -> Result<Block, WindowError> {
        let r = self.r();
        let mut cof = vec![0u128; len * r];
        let mut omegas = vec![0u32; len * r];
        let mut factors = with_factors.then(|| vec![Vec::new(); len * r]);
        let mut excluded = Vec::new();
        for i in 0..len {
            let n = (start + i as u64) as i128;
            let mut skip = false;
            for j in 0..r {
                let v = eval_i128(&self.coeffs[j], n).unsigned_abs();
                skip |= v <= 1;
                cof[i * r + j] = v;
            }
            if skip {
                excluded.push(start + i as u64);
                for j in 0..r {
                    cof[i * r + j] = 1;
                }
            }
        }
        for (k, &p) in self.primes.iter().enumerate() {
            let s = start % p;
            for j in 0..r {
                for &root in &self.roots[k][j] {
                    let mut i = ((root + p - s) % p) as usize;
                    while i < len {
                        let idx = i * r + j;
                        let c = cof[idx];
                        if c > 1 {
                            let (rest, e) = strip(c, p);
                            cof[idx] = rest;
                            omegas[idx] += 1;
                            if let Some(f) = factors.as_mut() {
                                f[idx].push((p as u128, e));
                            }
                        }
                        i += p as usize;
                    }
                }
            }
        }
        let z2 = self.z_max as u128 * self.z_max as u128;
        for idx in 0..len * r {
            let c = cof[idx];
            if c <= 1 {
                continue;
            }
            if c <= z2 {
                omegas[idx] += 1;
                if let Some(f) = factors.as_mut() {
                    f[idx].push((c, 1));
                }
                continue;
            }
            let fac = factor_u128(c).map_err(|_| WindowError::ZMaxTooSmall {
                n: start + (idx / r) as u64,
                member: idx % r,
                cofactor: c,
            })?;
            omegas[idx] += fac.len() as u32;
            if let Some(f) = factors.as_mut() {
                f[idx].extend(fac);
            }
        }
        if let Some(f) = factors.as_mut() {
            for list in f.iter_mut() {
                list.sort_unstable();
            }
        }
        Ok(Block {
            start,
            len,
            r,
            omegas,
            excluded,
            factors,
        })
    }

    /// Segment boundaries `(start, len)` covering the window.
    pub fn segments(spec: &WindowSpec) -> Vec<(u64, usize)> {
        let Some((first, last)) = spec.range() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut s = first;
        while s <= last {
            let len = (last - s + 1).min(SEGMENT_LEN);
            out.push((s, len as usize));
            s += len;
        }
        out
    }
}

/// Removes every factor `p` from `c`, returning the rest and the exponent.
fn strip(mut c: u128, p: u64) -> (u128, u32) {
    let mut e = 0;
    if c <= u64::MAX as u128 {
        let mut c64 = c as u64;
        while c64.is_multiple_of(p) {
            c64 /= p;
            e += 1;
        }
        return (c64 as u128, e);
    }
    let pp = p as u128;
    while c.is_multiple_of(pp) {
        c /= pp;
        e += 1;
    }
    (c, e)
}

/// Per-`n` result of [`omega_window`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaRow {
    pub n: u64,
    pub omegas: Vec<u32>,
}

/// `omega(|Q_j(n)|)` for every `n` in the window, plus the excluded `n`
/// (those with some `Q_j(n)` in `{-1, 0, 1}`).
pub fn omega_window(system: &PolySystem, spec: &WindowSpec) -> Result<(Vec<OmegaRow>, Vec<u64>), WindowError> {
    let sieve = WindowSieve::new(system, spec)?;
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for (start, len) in WindowSieve::segments(spec) {
        let block = sieve.block(start, len, false)?;
        for i in 0..len {
            if !block.is_excluded(i) {
                rows.push(OmegaRow {
                    n: start + i as u64,
                    omegas: block.omega_row(i).to_vec(),
                });
            }
        }
        excluded.extend(block.excluded);
    }
    Ok((rows, excluded))
}

/// Counts of `omega` vectors over a window.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JointHistogram {
    pub r: usize,
    /// Ordered lexicographically by `k`.
    pub counts: BTreeMap<Vec<u32>, u64>,
    pub total: u64,
    pub x: u64,
    pub y: u64,
}

impl JointHistogram {
    pub fn empty(r: usize, x: u64, y: u64) -> Self {
        JointHistogram {
            r,
            counts: BTreeMap::new(),
            total: 0,
            x,
            y,
        }
    }

    pub fn add_counts(&mut self, counts: &BTreeMap<Vec<u32>, u64>) -> Result<(), WindowError> {
        for (k, &c) in counts {
            if k.len() != self.r {
                return Err(WindowError::Arity {
                    expected: self.r,
                    got: k.len(),
                });
            }
            *self.counts.entry(k.clone()).or_insert(0) += c;
            self.total += c;
        }
        Ok(())
    }

    /// Histogram of the disjoint union of the two windows.
    pub fn merge(&self, other: &JointHistogram) -> Result<JointHistogram, WindowError> {
        if self.r != other.r {
            return Err(WindowError::Arity {
                expected: self.r,
                got: other.r,
            });
        }
        let mut out = self.clone();
        out.add_counts(&other.counts)?;
        out.x = self.x.min(other.x);
        out.y = self.y + other.y;
        Ok(out)
    }

    pub fn count(&self, k: &[u32]) -> u64 {
        self.counts.get(k).copied().unwrap_or(0)
    }
}

/// Histogram of the given `omega` vectors, all of arity `r`.
pub fn joint_histogram(r: usize, vectors: &[Vec<u32>]) -> Result<JointHistogram, WindowError> {
    let mut h = JointHistogram::empty(r, 0, vectors.len() as u64);
    for v in vectors {
        if v.len() != r {
            return Err(WindowError::Arity {
                expected: r,
                got: v.len(),
            });
        }
        *h.counts.entry(v.clone()).or_insert(0) += 1;
        h.total += 1;
    }
    Ok(h)
}

/// Sequential histogram of a whole window.
pub fn window_histogram(system: &PolySystem, spec: &WindowSpec) -> Result<JointHistogram, WindowError> {
    let sieve = WindowSieve::new(system, spec)?;
    let mut h = JointHistogram::empty(system.r(), spec.x, spec.y);
    for (start, len) in WindowSieve::segments(spec) {
        h.add_counts(&sieve.block(start, len, false)?.histogram())?;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyarith::{parse_system, validate_system};
    use proptest::prelude::*;

    fn sys(s: &str) -> PolySystem {
        validate_system(parse_system(s).unwrap(), 0).unwrap()
    }

    fn omega_oracle(v: i128) -> u32 {
        oracle_factor(v.unsigned_abs(), 1 << 40).unwrap().len() as u32
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_factor(12, 100).unwrap(), vec![(2, 2), (3, 1)]);
        assert!(oracle_factor(1, 100).unwrap().is_empty());
        assert_eq!(oracle_factor(9991, 1000).unwrap(), vec![(97, 1), (103, 1)]);
    }

    #[test]
    fn identity_window() {
        let s = sys("0,1");
        let spec = WindowSpec::new(&s, 10, 10, 0.5, None).unwrap();
        let (rows, excluded) = omega_window(&s, &spec).unwrap();
        let got: Vec<u32> = rows.iter().map(|r| r.omegas[0]).collect();
        assert_eq!(got, vec![1, 2, 1, 2, 2, 1, 1, 2, 1, 2]);
        assert!(excluded.is_empty());
    }

    #[test]
    fn consecutive_pair_window() {
        let s = sys("0,1;1,1");
        let spec = WindowSpec::new(&s, 10, 10, 0.5, None).unwrap();
        let (rows, _) = omega_window(&s, &spec).unwrap();
        assert_eq!(rows[3].n, 14);
        assert_eq!(rows[3].omegas, vec![2, 2]);
        let h = window_histogram(&s, &spec).unwrap();
        assert_eq!(h.count(&[2, 2]), 2);
        assert_eq!(h.total, 10);
        let a = window_histogram(&s, &WindowSpec::new(&s, 10, 5, 0.5, None).unwrap()).unwrap();
        let b = window_histogram(&s, &WindowSpec::new(&s, 15, 5, 0.5, None).unwrap()).unwrap();
        assert_eq!(a.merge(&b).unwrap(), h);
        assert_eq!(b.merge(&a).unwrap(), h);
    }

    #[test]
    fn empty_window() {
        let s = sys("0,1");
        let spec = WindowSpec::new(&s, 10, 0, 0.5, None).unwrap();
        let (rows, excluded) = omega_window(&s, &spec).unwrap();
        assert!(rows.is_empty() && excluded.is_empty());
        assert_eq!(window_histogram(&s, &spec).unwrap().total, 0);
    }

    #[test]
    fn small_values_are_excluded() {
        // X - 5 vanishes at 5; X - 4 is 1 there.
        let s = sys("-5,1;-4,1");
        let spec = WindowSpec::new(&s, 2, 8, 0.5, None).unwrap();
        let (rows, excluded) = omega_window(&s, &spec).unwrap();
        assert_eq!(excluded, vec![3, 4, 5, 6]);
        assert_eq!(rows.len(), 4);
        assert_eq!(window_histogram(&s, &spec).unwrap().total, 4);
    }

    #[test]
    fn spec_validation() {
        let s = sys("0,1;1,1");
        assert!(WindowSpec::new(&s, 1, 10, 0.5, None).is_err());
        assert!(WindowSpec::new(&s, 10, 10, 1.0, None).is_err());
        assert!(WindowSpec::new(&s, 10, 10, 0.5, Some(0.5 / 8.0)).is_err());
        assert!(WindowSpec::new(&s, 10, 10, 0.5, Some(0.07)).is_ok());
    }

    #[test]
    fn forced_large_cofactors() {
        // A tiny sieving bound leaves composite cofactors for Pollard rho.
        let s = sys("1,1,1");
        let spec = WindowSpec::new(&s, 100_000, 2000, 0.5, None).unwrap().with_z_max(5);
        let (rows, _) = omega_window(&s, &spec).unwrap();
        for row in rows {
            let n = row.n as i128;
            assert_eq!(row.omegas[0], omega_oracle(n * n + n + 1), "n = {n}");
        }
    }

    #[test]
    fn factors_multiply_back() {
        let s = sys("1,0,1;3,0,0,1");
        let spec = WindowSpec::new(&s, 5000, 700, 0.5, None).unwrap();
        let sieve = WindowSieve::new(&s, &spec).unwrap();
        let block = sieve.block(5001, 700, true).unwrap();
        let f = block.factors.as_ref().unwrap();
        for i in 0..700 {
            let n = 5001 + i as i128;
            for (j, v) in [n * n + 1, n * n * n + 3].into_iter().enumerate() {
                let prod: u128 = f[i * 2 + j].iter().map(|&(p, e)| p.pow(e)).product();
                assert_eq!(prod, v as u128);
                assert_eq!(f[i * 2 + j], oracle_factor(v as u128, 1 << 30).unwrap());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sieve_matches_oracle(x in 2u64..2_000_000, y in 0u64..300, which in 0usize..4) {
            // Caps keep the trial-division oracle below sqrt(|Q_j(n)|) ~ 10^6.
            let systems = [("0,1;1,1", 2_000_000), ("1,0,1", 500_000), ("1,1,1;0,1", 500_000), ("-2,0,0,1", 10_000)];
            let (text, cap) = systems[which];
            let s = sys(text);
            let x = x % cap + 2;
            let spec = WindowSpec::new(&s, x, y, 0.5, None).unwrap();
            let (rows, excluded) = omega_window(&s, &spec).unwrap();
            prop_assert_eq!(rows.len() + excluded.len(), y as usize);
            let coeffs: Vec<Vec<i128>> = s.members().iter().map(|q| q.coeffs_i128().unwrap()).collect();
            for row in rows {
                for (j, c) in coeffs.iter().enumerate() {
                    prop_assert_eq!(row.omegas[j], omega_oracle(eval_i128(c, row.n as i128)));
                }
            }
        }

        #[test]
        fn merge_is_commutative_and_additive(a in proptest::collection::vec(proptest::collection::vec(0u32..5, 2), 0..40),
                                             b in proptest::collection::vec(proptest::collection::vec(0u32..5, 2), 0..40)) {
            let ha = joint_histogram(2, &a).unwrap();
            let hb = joint_histogram(2, &b).unwrap();
            let ab = ha.merge(&hb).unwrap();
            prop_assert_eq!(&ab, &hb.merge(&ha).unwrap());
            prop_assert_eq!(ab.total, (a.len() + b.len()) as u64);
            let mut all = a.clone();
            all.extend(b.iter().cloned());
            prop_assert_eq!(ab.counts, joint_histogram(2, &all).unwrap().counts);
        }
    }

    #[test]
    fn arity_mismatch() {
        assert!(joint_histogram(2, &[vec![1, 2, 3]]).is_err());
        let a = JointHistogram::empty(2, 0, 0);
        let b = JointHistogram::empty(3, 0, 0);
        assert!(a.merge(&b).is_err());
    }
}
