//! Mertens-type profiles `S_j(x) = sum_{p <= x} rho_j(p) / p`, the constants
//! `M_j`, the functions `phi_j`, and the pairwise-independence bound
//!
//! ```text
//! (beta D / phi_0(beta D))^K * e^M * y / (log x)^r * prod_j (log2 x + M_j)^(k_j - 1) / (k_j - 1)!
//! ```
//!
//! Here `log2 x` is the iterated logarithm `ln ln x`, not a base-2 logarithm.

mod verify;

pub use verify::{
    assemble_report, profile_extent, verify_theorem, window_length, RatioRow, VerifyEntry, VerifyError, VerifyReport,
    YRule,
};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::polyarith::{IntPoly, PolySystem};
use crate::primes::{factor_u128, primes_up_to};
use crate::rootcount::{count_roots_mod_p, prime_root_counts, RootConfig};

/// Ratio between consecutive points of the profile grid.
pub const GRID_RATIO: f64 = 1.1;
/// Left end of the profile grid.
pub const GRID_FLOOR: f64 = 3.0;

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if libm::fabs(self.sum) >= libm::fabs(v) {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn loglog(x: f64) -> f64 {
    libm::log(libm::log(x))
}

/// `sum_{p <= x} rho(P, p) / p`, ascending in `p`; zero for `x < 2`.
pub fn mertens_sum(poly: &IntPoly, x: f64) -> f64 {
    if x < 2.0 {
        return 0.0;
    }
    let primes = primes_up_to(x as u64);
    let counts = prime_root_counts(poly, &primes, &RootConfig::default());
    let mut acc = Accumulator::default();
    for (&p, &c) in primes.iter().zip(&counts) {
        acc.add(c as f64 / p as f64);
    }
    acc.value()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberProfile {
    /// `S_j` at each grid point.
    pub sums: Vec<f64>,
    /// `sum_{p <= x} rho_j(p) / (p - rho_j(p))` at each grid point.
    pub shifted_sums: Vec<f64>,
    /// `M_j = sup |S_j(x) - log log x|` over `[GRID_FLOOR, x_max]`.
    pub m: f64,
    /// Where the supremum is attained (a prime, or the left limit at a prime,
    /// or an end point).
    pub argsup: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MertensProfile {
    pub x_max: f64,
    /// `3, 3 * 1.1, 3 * 1.1^2, ...` up to `x_max`, with `x_max` appended.
    pub grid: Vec<f64>,
    pub members: Vec<MemberProfile>,
}

impl MertensProfile {
    pub fn m_j(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.m).collect()
    }

    /// `M = sum_j M_j`.
    pub fn m_total(&self) -> f64 {
        let mut acc = Accumulator::default();
        for m in &self.members {
            acc.add(m.m);
        }
        acc.value()
    }
}

pub fn profile_grid(x_max: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut x = GRID_FLOOR;
    let mut i = 0i32;
    while x <= x_max {
        grid.push(x);
        i += 1;
        x = GRID_FLOOR * libm::pow(GRID_RATIO, i as f64);
    }
    if grid.last().is_none_or(|&l| l < x_max) {
        grid.push(x_max.max(GRID_FLOOR));
    }
    grid
}

pub fn estimate_profile(system: &PolySystem, x_max: f64) -> MertensProfile {
    estimate_profile_for(system.members(), x_max)
}

/// Profiles of arbitrary polynomials over `[3, x_max]`.
///
/// The supremum defining `M_j` is exact over the continuum, not only over
/// the grid: between consecutive primes `S_j - log log x` decreases, so the
/// supremum of its absolute value is attained at a prime or at the left
/// limit at a prime, and every such point is examined.
pub fn estimate_profile_for(polys: &[IntPoly], x_max: f64) -> MertensProfile {
    let x_max = x_max.max(GRID_FLOOR);
    let grid = profile_grid(x_max);
    let primes = primes_up_to(x_max as u64);
    let cfg = RootConfig::default();
    let members = polys
        .iter()
        .map(|poly| {
            let counts = prime_root_counts(poly, &primes, &cfg);
            let mut sums = Vec::with_capacity(grid.len());
            let mut shifted_sums = Vec::with_capacity(grid.len());
            let mut s = Accumulator::default();
            let mut s_shift = Accumulator::default();
            let mut best = (-1.0f64, GRID_FLOOR);
            let consider = |value: f64, at: f64, best: &mut (f64, f64)| {
                if libm::fabs(value) > best.0 {
                    *best = (libm::fabs(value), at);
                }
            };
            let mut gi = 0;
            for (&p, &c) in primes.iter().zip(&counts) {
                let pf = p as f64;
                while gi < grid.len() && grid[gi] < pf {
                    sums.push(s.value());
                    shifted_sums.push(s_shift.value());
                    gi += 1;
                }
                if pf > GRID_FLOOR {
                    consider(s.value() - loglog(pf), pf, &mut best);
                }
                s.add(c as f64 / pf);
                if c < p {
                    s_shift.add(c as f64 / (pf - c as f64));
                }
                if pf >= GRID_FLOOR {
                    consider(s.value() - loglog(pf), pf, &mut best);
                }
            }
            while gi < grid.len() {
                sums.push(s.value());
                shifted_sums.push(s_shift.value());
                gi += 1;
            }
            consider(s.value() - loglog(x_max), x_max, &mut best);
            MemberProfile {
                sums,
                shifted_sums,
                m: best.0,
                argsup: best.1,
            }
        })
        .collect();
    MertensProfile { x_max, grid, members }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhiError {
    ZeroArgument,
    /// The argument could not be factored at desk scale.
    Unfactorable(String),
}

impl fmt::Display for PhiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiError::ZeroArgument => f.write_str("phi_rho needs n >= 1"),
            PhiError::Unfactorable(s) => write!(f, "cannot factor argument: {s}"),
        }
    }
}

impl core::error::Error for PhiError {}

/// `phi_P(n) = n prod_{p | n} (1 - rho(P, p) / p)`, exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiRho {
    pub value: BigUint,
    /// A prime `p | n` with `rho(P, p) = p`, which makes the value zero.
    pub vanishing_prime: Option<u64>,
}

impl PhiRho {
    pub fn as_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::INFINITY)
    }
}

fn prime_support(n: &BigUint) -> Result<Vec<(u64, u32)>, PhiError> {
    let small = n
        .to_u128()
        .ok_or_else(|| PhiError::Unfactorable(alloc::format!("{n} exceeds 128 bits")))?;
    let fac = factor_u128(small).map_err(|e| PhiError::Unfactorable(alloc::format!("{e}")))?;
    fac.into_iter()
        .map(|(p, e)| {
            p.to_u64()
                .map(|p| (p, e))
                .ok_or_else(|| PhiError::Unfactorable(alloc::format!("prime factor {p} exceeds 64 bits")))
        })
        .collect()
}

pub fn phi_rho(poly: &IntPoly, n: &BigUint) -> Result<PhiRho, PhiError> {
    if n.is_zero() {
        return Err(PhiError::ZeroArgument);
    }
    let cfg = RootConfig::default();
    let mut value = BigUint::one();
    let mut vanishing_prime = None;
    for (p, e) in prime_support(n)? {
        let rho = count_roots_mod_p(poly, p, &cfg).expect("prime");
        if rho >= p {
            vanishing_prime.get_or_insert(p);
        }
        value *= BigUint::from(p).pow(e - 1) * BigUint::from(p.saturating_sub(rho));
    }
    Ok(PhiRho { value, vanishing_prime })
}

/// `|beta D| / phi_0(|beta D|) = prod_{p | beta D} p / (p - rho_0(p))`.
pub fn beta_d_ratio(system: &PolySystem) -> Result<f64, PhiError> {
    let cfg = RootConfig::default();
    let mut ratio = 1.0f64;
    for (p, _) in prime_support(&system.beta_d_abs())? {
        let rho = count_roots_mod_p(system.product(), p, &cfg).expect("prime");
        if rho >= p {
            return Ok(f64::INFINITY);
        }
        ratio *= p as f64 / (p - rho) as f64;
    }
    Ok(ratio)
}

/// How the implied constant is treated when reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConstantMode {
    /// Report `count / bound` ratios; the supremum is the empirical constant.
    ReportRatio,
    /// Compare counts against `constant * bound`.
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoremParams {
    /// Exponent `K` on `beta D / phi_0(beta D)`.
    pub k_exponent: f64,
    /// Range multiplier `R`: each `k_j` lies in `[1, R log log x]`.
    pub r_multiplier: f64,
    /// Window exponent `alpha` in `(0, 1)`.
    pub alpha: f64,
    pub mode: ConstantMode,
}

impl TheoremParams {
    /// `K = r`, `R = 2`, `alpha = 1/2`, ratio reporting.
    pub fn defaults_for(system: &PolySystem) -> Self {
        TheoremParams {
            k_exponent: system.r() as f64,
            r_multiplier: 2.0,
            alpha: 0.5,
            mode: ConstantMode::ReportRatio,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DomainError::Parameter(alloc::format!(
                "alpha = {} not in (0, 1)",
                self.alpha
            )));
        }
        if !(self.r_multiplier > 0.0) {
            return Err(DomainError::Parameter(alloc::format!(
                "R = {} must be positive",
                self.r_multiplier
            )));
        }
        if !(self.k_exponent >= 0.0) {
            return Err(DomainError::Parameter(alloc::format!(
                "K = {} must be non-negative",
                self.k_exponent
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainError {
    Parameter(String),
    XTooSmall(f64),
    Arity { expected: usize, got: usize },
    KOutOfRange { index: usize, k: u32, k_max: f64 },
    YOutOfRange { y: f64, lo: f64, hi: f64 },
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainError::Parameter(s) => f.write_str(s),
            DomainError::XTooSmall(x) => write!(f, "x = {x} must be at least 3"),
            DomainError::Arity { expected, got } => write!(f, "expected {expected} k values, got {got}"),
            DomainError::KOutOfRange { index, k, k_max } => {
                write!(f, "k_{} = {k} outside [1, {k_max}]", index + 1)
            }
            DomainError::YOutOfRange { y, lo, hi } => write!(f, "y = {y} outside [{lo}, {hi}]"),
        }
    }
}

impl core::error::Error for DomainError {}

/// Relative tolerance for domain end points and ratio comparisons.
pub const REL_TOL: f64 = 1e-9;

/// The system-dependent constants of the bound, computed once.
#[derive(Clone, Debug, PartialEq)]
pub struct RhsContext {
    pub m_j: Vec<f64>,
    pub m_total: f64,
    /// `|beta D| / phi_0(|beta D|)`.
    pub bd_ratio: f64,
}

impl RhsContext {
    pub fn new(system: &PolySystem, profile: &MertensProfile) -> Result<Self, PhiError> {
        Ok(RhsContext {
            m_j: profile.m_j(),
            m_total: profile.m_total(),
            bd_ratio: beta_d_ratio(system)?,
        })
    }

    pub fn r(&self) -> usize {
        self.m_j.len()
    }
}

/// Largest admissible `k_j`: `R log log x`.
pub fn k_max(params: &TheoremParams, x: f64) -> f64 {
    params.r_multiplier * loglog(x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhsBound {
    pub value: f64,
    pub ln_value: f64,
    /// The weaker form with `e^{(R+1)M}` and `(log log x)^{k_j - 1}`.
    pub relaxed: f64,
}

pub fn check_domain(ctx: &RhsContext, params: &TheoremParams, ks: &[u32], x: f64, y: f64) -> Result<(), DomainError> {
    params.validate()?;
    if !(x >= 3.0) {
        return Err(DomainError::XTooSmall(x));
    }
    if ks.len() != ctx.r() {
        return Err(DomainError::Arity {
            expected: ctx.r(),
            got: ks.len(),
        });
    }
    let kmax = k_max(params, x);
    for (index, &k) in ks.iter().enumerate() {
        if k < 1 || k as f64 > kmax * (1.0 + REL_TOL) {
            return Err(DomainError::KOutOfRange { index, k, k_max: kmax });
        }
    }
    let lo = libm::pow(x, params.alpha);
    if y < lo * (1.0 - REL_TOL) || y > x * (1.0 + REL_TOL) {
        return Err(DomainError::YOutOfRange { y, lo, hi: x });
    }
    Ok(())
}

/// Evaluates the pairwise-independence bound in log space (factorials via
/// `lgamma`).
pub fn rhs_bound(
    ctx: &RhsContext,
    params: &TheoremParams,
    ks: &[u32],
    x: f64,
    y: f64,
) -> Result<RhsBound, DomainError> {
    check_domain(ctx, params, ks, x, y)?;
    let ll = loglog(x);
    let common = params.k_exponent * libm::log(ctx.bd_ratio) + libm::log(y) - ctx.r() as f64 * ll;
    let mut strict = Accumulator::default();
    strict.add(common);
    strict.add(ctx.m_total);
    let mut relaxed = Accumulator::default();
    relaxed.add(common);
    relaxed.add((params.r_multiplier + 1.0) * ctx.m_total);
    for (&k, &m) in ks.iter().zip(&ctx.m_j) {
        let km1 = (k - 1) as f64;
        let lg = libm::lgamma(k as f64);
        if k > 1 {
            strict.add(km1 * libm::log(ll + m));
            relaxed.add(km1 * libm::log(ll));
        }
        strict.add(-lg);
        relaxed.add(-lg);
    }
    let ln_value = strict.value();
    Ok(RhsBound {
        value: libm::exp(ln_value),
        ln_value,
        relaxed: libm::exp(relaxed.value()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyarith::{parse_system, validate_system};

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c).unwrap()
    }

    fn sys(s: &str) -> PolySystem {
        validate_system(parse_system(s).unwrap(), 0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol * b.abs().max(1.0)
    }

    #[test]
    fn mertens_sum_examples() {
        let want = 0.5 + 1.0 / 3.0 + 0.2 + 1.0 / 7.0;
        assert!(close(mertens_sum(&p(&[0, 1]), 10.0), want, 1e-15));
        assert!(close(mertens_sum(&p(&[0, 1]), 10.0), 1.176190476190476, 1e-12));
        assert_eq!(mertens_sum(&p(&[1, 0, 1]), 1.9), 0.0);
        assert!(close(mertens_sum(&p(&[1, 0, 1]), 10.0), 0.9, 1e-15));
    }

    #[test]
    fn single_point_profile() {
        let prof = estimate_profile_for(&[p(&[0, 1])], 3.0);
        assert_eq!(prof.grid, alloc::vec![3.0]);
        let want = libm::fabs(0.5 + 1.0 / 3.0 - loglog(3.0));
        assert!(close(prof.members[0].m, want, 1e-15));
    }

    #[test]
    fn translated_linear_members_share_m() {
        let prof = estimate_profile(&sys("0,1;1,1"), 1e5);
        assert_eq!(prof.members[0].m, prof.members[1].m);
        assert_eq!(prof.m_total(), 2.0 * prof.members[0].m);
    }

    #[test]
    fn profile_sums_monotone_and_m_grows() {
        let polys = [p(&[1, 0, 1]), p(&[1, 1, 1])];
        let mut last = alloc::vec![0.0; 2];
        for x_max in [100.0, 1e3, 1e4, 1e5] {
            let prof = estimate_profile_for(&polys, x_max);
            for (j, m) in prof.members.iter().enumerate() {
                assert!(m.sums.windows(2).all(|w| w[0] <= w[1]));
                assert!(m.m >= last[j]);
                last[j] = m.m;
            }
        }
    }

    #[test]
    fn phi_examples() {
        assert_eq!(
            phi_rho(&p(&[0, 1]), &BigUint::from(12u32)).unwrap().value,
            BigUint::from(4u32)
        );
        assert_eq!(
            phi_rho(&p(&[3, 1, 7]), &BigUint::from(1u32)).unwrap().value,
            BigUint::one()
        );
        assert_eq!(
            phi_rho(&p(&[1, 0, 1]), &BigUint::from(5u32)).unwrap().value,
            BigUint::from(3u32)
        );
        let z = phi_rho(&p(&[0, 1, 1]), &BigUint::from(6u32)).unwrap();
        assert_eq!((z.value.clone(), z.vanishing_prime), (BigUint::zero(), Some(2)));
        assert_eq!(phi_rho(&p(&[0, 1]), &BigUint::zero()), Err(PhiError::ZeroArgument));
    }

    #[test]
    fn beta_d_ratio_examples() {
        assert_eq!(beta_d_ratio(&sys("0,1;1,1")).unwrap(), 1.0);
        // |beta D| = 4, rho_0(2) = 1: 4 / 2.
        assert_eq!(beta_d_ratio(&sys("1,0,1")).unwrap(), 2.0);
    }

    fn ctx_xx1() -> (RhsContext, TheoremParams) {
        let s = sys("0,1;1,1");
        let prof = estimate_profile(&s, 1e6);
        (RhsContext::new(&s, &prof).unwrap(), TheoremParams::defaults_for(&s))
    }

    #[test]
    fn rhs_all_ones_and_linearity() {
        let (ctx, params) = ctx_xx1();
        let x = 1e6;
        let b = rhs_bound(&ctx, &params, &[1, 1], x, x).unwrap();
        let want = libm::exp(ctx.m_total) * x / libm::pow(libm::log(x), 2.0);
        assert!(close(b.value, want, 1e-12));
        let half = rhs_bound(&ctx, &params, &[2, 3], x, x / 2.0).unwrap();
        let full = rhs_bound(&ctx, &params, &[2, 3], x, x).unwrap();
        assert!(close(full.value, 2.0 * half.value, 1e-12));
    }

    #[test]
    fn rhs_independent_recalculation() {
        let (ctx, params) = ctx_xx1();
        let x: f64 = 1e6;
        let m1 = ctx.m_j[0];
        let l = x.ln().ln();
        let term = (l + m1).powi(2) / 2.0;
        let want = (2.0 * m1).exp() * x / x.ln().powi(2) * term * term;
        let got = rhs_bound(&ctx, &params, &[3, 3], x, x).unwrap().value;
        assert!(close(got, want, 1e-9), "{got} vs {want}");
    }

    #[test]
    fn rhs_consecutive_ratio() {
        let (ctx, params) = ctx_xx1();
        let x = 1e7;
        for k in 1..5u32 {
            let a = rhs_bound(&ctx, &params, &[k, 2], x, x).unwrap().value;
            let b = rhs_bound(&ctx, &params, &[k + 1, 2], x, x).unwrap().value;
            let want = (loglog(x) + ctx.m_j[0]) / k as f64;
            assert!(close(b / a, want, REL_TOL));
        }
    }

    #[test]
    fn rhs_relaxed_dominates() {
        let (ctx, params) = ctx_xx1();
        for k in 1..=5u32 {
            let b = rhs_bound(&ctx, &params, &[k, 1], 1e7, 1e7).unwrap();
            assert!(b.relaxed >= b.value);
        }
    }

    #[test]
    fn rhs_domain_errors() {
        let (ctx, params) = ctx_xx1();
        let x = 1e5;
        assert!(matches!(
            rhs_bound(&ctx, &params, &[0, 1], x, x),
            Err(DomainError::KOutOfRange { index: 0, .. })
        ));
        assert!(matches!(
            rhs_bound(&ctx, &params, &[1, 5], x, x),
            Err(DomainError::KOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            rhs_bound(&ctx, &params, &[1, 1], x, 100.0),
            Err(DomainError::YOutOfRange { .. })
        ));
        assert!(matches!(
            rhs_bound(&ctx, &params, &[1, 1], x, 2.0 * x),
            Err(DomainError::YOutOfRange { .. })
        ));
        assert!(matches!(
            rhs_bound(&ctx, &params, &[1], x, x),
            Err(DomainError::Arity { .. })
        ));
    }
}
