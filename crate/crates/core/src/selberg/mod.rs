//! Selberg Lambda-squared upper bound for
//! `#{x < n <= x + y : T | Q(n), d_j | Q_j(n), p | Q(n) => p | T d or p > z}`,
//! with a certified remainder and an exact enumeration oracle.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::polyarith::PolySystem;
use crate::primes::{factor_small, gcd_u64, is_squarefree, primes_up_to};
use crate::rootcount::{count_roots_mod_p, rho_with, RootConfig, RootError};

/// Largest sieve level accepted; the weights cost `O(level^2)`.
pub const LEVEL_LIMIT: u64 = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub enum SieveError {
    Instance(String),
    /// A sifting prime with density `rho_0(p) / p >= 1`.
    DensityOne {
        p: u64,
    },
    Root(RootError),
}

impl fmt::Display for SieveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SieveError::Instance(s) => f.write_str(s),
            SieveError::DensityOne { p } => write!(f, "sifting density at {p} is 1"),
            SieveError::Root(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SieveError {}

impl From<RootError> for SieveError {
    fn from(e: RootError) -> Self {
        SieveError::Root(e)
    }
}

/// Sifting primes with their root counts `rho(p)`; the density is `rho / p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiftingDensity {
    pub primes: Vec<(u64, u64)>,
}

impl SiftingDensity {
    pub fn g(&self, p: u64) -> f64 {
        self.primes
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0.0, |&(p, rho)| rho as f64 / p as f64)
    }

    pub fn rho(&self, p: u64) -> u64 {
        self.primes.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, rho)| rho)
    }
}

/// Weights `lambda_d`, zero outside the stored support.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LambdaTable {
    pub weights: BTreeMap<u64, f64>,
}

impl LambdaTable {
    pub fn get(&self, d: u64) -> f64 {
        self.weights.get(&d).copied().unwrap_or(0.0)
    }
}

/// Squarefree `d <= level` built from the primes of `density` whose density
/// is positive, with their prime lists.
fn support(density: &SiftingDensity, level: u64) -> Vec<(u64, Vec<u64>)> {
    let mut out = vec![(1u64, Vec::new())];
    for &(p, rho) in &density.primes {
        if rho == 0 {
            continue;
        }
        let len = out.len();
        for i in 0..len {
            let (d, ref ps) = out[i];
            if let Some(dp) = d.checked_mul(p).filter(|&v| v <= level) {
                let mut ps = ps.clone();
                ps.push(p);
                out.push((dp, ps));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Optimal Lambda-squared weights for `density` (primes up to `z`) on
/// squarefree `d <= level`:
/// `lambda_d = mu(d) prod_{p | d} (1 - g(p))^-1 G_d(level / d) / G(level)`
/// with `G_d(u) = sum_{e <= u, (e, d) = 1} mu^2(e) h(e)`, `h = g / (1 - g)`.
pub fn selberg_weights(density: &SiftingDensity, z: u64, level: u64) -> Result<LambdaTable, SieveError> {
    if level == 0 || level > LEVEL_LIMIT {
        return Err(SieveError::Instance(alloc::format!(
            "level {level} not in [1, {LEVEL_LIMIT}]"
        )));
    }
    let sifting = SiftingDensity {
        primes: density.primes.iter().copied().filter(|&(p, _)| p <= z).collect(),
    };
    if let Some(&(p, _)) = sifting.primes.iter().find(|&&(p, rho)| rho >= p) {
        return Err(SieveError::DensityOne { p });
    }
    let sup = support(&sifting, level);
    let h: Vec<f64> = sup
        .iter()
        .map(|(_, ps)| {
            ps.iter()
                .map(|&p| {
                    let g = sifting.g(p);
                    g / (1.0 - g)
                })
                .product()
        })
        .collect();
    let big_g: f64 = h.iter().sum();
    let mut weights = BTreeMap::new();
    for (i, (d, ps)) in sup.iter().enumerate() {
        let limit = level / d;
        let gd: f64 = sup
            .iter()
            .zip(&h)
            .take_while(|((e, _), _)| *e <= limit)
            .filter(|((e, _), _)| gcd_u64(*e, *d) == 1)
            .map(|(_, &he)| he)
            .sum();
        let inv: f64 = ps.iter().map(|&p| 1.0 / (1.0 - sifting.g(p))).product();
        let mu = if ps.len() % 2 == 0 { 1.0 } else { -1.0 };
        let w = if i == 0 { 1.0 } else { mu * inv * gd / big_g };
        weights.insert(*d, w);
    }
    Ok(LambdaTable { weights })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SieveInstance {
    pub x: u64,
    pub y: u64,
    /// `T`, a divisor of `(beta D)^r` that must divide `Q(n)`.
    pub t: u64,
    /// `d_j`, squarefree, pairwise coprime, coprime to `beta D`; `d_j | Q_j(n)`.
    pub d: Vec<u64>,
    /// Sifting limit.
    pub z: u64,
    /// Support bound of the weights.
    pub level: u64,
}

impl SieveInstance {
    /// Unconstrained instance with `level = z`.
    pub fn plain(r: usize, x: u64, y: u64, z: u64) -> Self {
        SieveInstance {
            x,
            y,
            t: 1,
            d: vec![1; r],
            z,
            level: z.max(1),
        }
    }

    pub fn validate(&self, system: &PolySystem) -> Result<(), SieveError> {
        let bad = |s: String| Err(SieveError::Instance(s));
        if self.d.len() != system.r() {
            return bad(alloc::format!("expected {} d values, got {}", system.r(), self.d.len()));
        }
        if self.t == 0 || self.d.contains(&0) {
            return bad(String::from("constraints must be positive"));
        }
        let beta_d = system.beta_d();
        let r = system.r() as u32;
        for (p, e) in factor_small(self.t) {
            let mut v = 0u32;
            let mut rest = beta_d.clone();
            let bp = BigInt::from(p);
            while (&rest % &bp).is_zero() {
                rest /= &bp;
                v += 1;
            }
            if e > r * v {
                return bad(alloc::format!("T = {} does not divide (beta D)^r", self.t));
            }
        }
        for (j, &dj) in self.d.iter().enumerate() {
            if !is_squarefree(dj) {
                return bad(alloc::format!("d_{} = {dj} is not squarefree", j + 1));
            }
            let g = (beta_d % BigInt::from(dj))
                .to_i128()
                .map_or(1, |m| gcd_u64(m.unsigned_abs() as u64, dj));
            if g != 1 {
                return bad(alloc::format!("d_{} = {dj} shares a factor with beta D", j + 1));
            }
            for &di in &self.d[..j] {
                if gcd_u64(di, dj) != 1 {
                    return bad(alloc::format!("d values {di} and {dj} are not coprime"));
                }
            }
        }
        Ok(())
    }

    /// `T prod d_j`.
    pub fn constraint_modulus(&self) -> u64 {
        self.d.iter().fold(self.t, |acc, &d| acc * d)
    }

    fn constrained(&self, p: u64) -> bool {
        self.constraint_modulus().is_multiple_of(p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SieveResult {
    pub upper_bound: f64,
    /// `X * sum lambda_d1 lambda_d2 g([d1, d2])`.
    pub main_term: f64,
    pub remainder_budget: f64,
    /// `X = y rho_0(T) / T prod rho_j(d_j) / d_j`.
    pub x_estimate: f64,
    /// `R = rho_0(T) prod rho_j(d_j)`.
    pub r_cap: u64,
    pub quadratic_form: f64,
    pub exact_count: Option<u64>,
    pub lambda_table: LambdaTable,
    /// A sifting prime `p` with `rho_0(p) = p`: nothing survives.
    pub vanishing_prime: Option<u64>,
}

/// Sifting primes `p <= z`, `p` not dividing `T prod d_j`, with `rho_0(p)`.
pub fn sifting_density(system: &PolySystem, instance: &SieveInstance) -> Result<SiftingDensity, SieveError> {
    let cfg = RootConfig::default();
    let primes = primes_up_to(instance.z)
        .into_iter()
        .filter(|&p| !instance.constrained(p))
        .map(|p| Ok((p, count_roots_mod_p(system.product(), p, &cfg)?)))
        .collect::<Result<Vec<_>, SieveError>>()?;
    Ok(SiftingDensity { primes })
}

/// Exact count by enumeration.
pub fn exact_count(system: &PolySystem, instance: &SieveInstance, density: &SiftingDensity) -> u64 {
    let first = instance.x + 1;
    let last = instance.x + instance.y;
    let mut count = 0;
    for n in first..=last {
        let nb = BigInt::from(n);
        let values: Vec<BigInt> = system.members().iter().map(|q| q.eval(&nb)).collect();
        let q: BigInt = values.iter().product();
        if !(&q % BigInt::from(instance.t)).is_zero() {
            continue;
        }
        if values
            .iter()
            .zip(&instance.d)
            .any(|(v, &d)| !(v % BigInt::from(d)).is_zero())
        {
            continue;
        }
        if density.primes.iter().any(|&(p, _)| (&q % BigInt::from(p)).is_zero()) {
            continue;
        }
        count += 1;
    }
    count
}

/// Certified upper bound `X * form + sum |lambda lambda| R rho_0([d1, d2])`,
/// counting a remainder term as zero when its modulus divides `y`.
pub fn sieve_upper_bound(
    system: &PolySystem,
    instance: &SieveInstance,
    run_oracle: bool,
) -> Result<SieveResult, SieveError> {
    instance.validate(system)?;
    let cfg = RootConfig::default();
    let density = sifting_density(system, instance)?;
    let rho_t = rho_with(system.product(), instance.t, &cfg)?;
    let mut r_cap = rho_t;
    let mut x_est = instance.y as f64 * rho_t as f64 / instance.t as f64;
    for (q, &d) in system.members().iter().zip(&instance.d) {
        let rho = rho_with(q, d, &cfg)?;
        r_cap *= rho;
        x_est *= rho as f64 / d as f64;
    }
    let oracle = |density: &SiftingDensity| run_oracle.then(|| exact_count(system, instance, density));
    let vanishing_prime = density.primes.iter().find(|&&(p, rho)| rho >= p).map(|&(p, _)| p);
    if r_cap == 0 || instance.y == 0 || vanishing_prime.is_some() {
        return Ok(SieveResult {
            upper_bound: 0.0,
            main_term: 0.0,
            remainder_budget: 0.0,
            x_estimate: x_est,
            r_cap,
            quadratic_form: 0.0,
            exact_count: oracle(&density),
            lambda_table: LambdaTable::default(),
            vanishing_prime,
        });
    }
    let lambda = selberg_weights(&density, instance.z, instance.level)?;
    let base_modulus = instance.constraint_modulus() as u128;
    let entries: Vec<(u64, f64, f64, u64)> = lambda
        .weights
        .iter()
        .map(|(&d, &w)| {
            let (g, rho) = factor_small(d).iter().fold((1.0, 1u64), |(g, rho), &(p, _)| {
                let rp = density.rho(p);
                (g * rp as f64 / p as f64, rho * rp)
            });
            (d, w, g, rho)
        })
        .collect();
    let mut form = 0.0f64;
    let mut remainder = 0.0f64;
    for &(d1, w1, g1, rho1) in &entries {
        for &(d2, w2, g2, rho2) in &entries {
            let common = gcd_u64(d1, d2);
            let (gc, rhoc) = if common == 1 {
                (1.0, 1)
            } else {
                entries
                    .iter()
                    .find(|e| e.0 == common)
                    .map(|e| (e.2, e.3))
                    .unwrap_or_else(|| {
                        factor_small(common).iter().fold((1.0, 1u64), |(g, rho), &(p, _)| {
                            let rp = density.rho(p);
                            (g * rp as f64 / p as f64, rho * rp)
                        })
                    })
            };
            let ww = w1 * w2;
            form += ww * g1 * g2 / gc;
            let lcm = (d1 / common) as u128 * d2 as u128;
            let modulus = base_modulus * lcm;
            if !(instance.y as u128).is_multiple_of(modulus) {
                remainder += libm::fabs(ww) * (r_cap * (rho1 * rho2 / rhoc)) as f64;
            }
        }
    }
    let main = x_est * form;
    let raw = main + remainder;
    let upper_bound = raw + 1e-9 * (libm::fabs(main) + remainder + 1.0);
    Ok(SieveResult {
        upper_bound,
        main_term: main,
        remainder_budget: remainder,
        x_estimate: x_est,
        r_cap,
        quadratic_form: form,
        exact_count: oracle(&density),
        lambda_table: lambda,
        vanishing_prime: None,
    })
}

/// Seeded random instances over the window `(x, x + y]`.
pub fn random_instances(system: &PolySystem, count: usize, seed: u64, x: u64, y: u64) -> Vec<SieveInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = system.r();
    let beta_d_primes: Vec<(u64, u32)> = system
        .beta_d_abs()
        .to_u64()
        .map(factor_small)
        .unwrap_or_default()
        .into_iter()
        .filter(|&(p, _)| p < 50)
        .collect();
    let free_primes: Vec<u64> = primes_up_to(50)
        .into_iter()
        .filter(|&p| !system.divides_beta_d(p))
        .collect();
    (0..count)
        .map(|_| {
            let mut t = 1u64;
            for &(p, e) in &beta_d_primes {
                let k = rng.gen_range(0..=(e * r as u32).min(3));
                t *= p.pow(k);
            }
            let mut d = vec![1u64; r];
            for &p in &free_primes {
                if rng.gen_bool(0.15) {
                    let j = rng.gen_range(0..r);
                    if d[j] * p <= 1000 {
                        d[j] *= p;
                    }
                }
            }
            let z = rng.gen_range(1..=80);
            SieveInstance {
                x,
                y,
                t,
                d,
                z,
                level: z.max(1),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub instance: SieveInstance,
    pub bound: f64,
    pub exact: u64,
    /// `bound / exact`; infinite when `exact = 0` and the bound is positive.
    pub ratio: f64,
    /// `bound < exact`: impossible for a correct sieve.
    pub violation: bool,
}

/// Bound against exact count for every instance.
pub fn sieve_ratio_study(system: &PolySystem, instances: &[SieveInstance]) -> Result<Vec<StudyRow>, SieveError> {
    instances
        .iter()
        .map(|inst| {
            let res = sieve_upper_bound(system, inst, true)?;
            let exact = res.exact_count.expect("oracle requested");
            let ratio = match exact {
                0 if res.upper_bound == 0.0 => 1.0,
                0 => f64::INFINITY,
                e => res.upper_bound / e as f64,
            };
            Ok(StudyRow {
                instance: inst.clone(),
                bound: res.upper_bound,
                exact,
                ratio,
                violation: res.upper_bound < exact as f64,
            })
        })
        .collect()
}

/// `(p, rho_0(p), sum_j rho_j(p), p | beta D)` for each `p <= limit` where
/// the two counts differ.
pub fn density_identity_audit(system: &PolySystem, limit: u64) -> Result<Vec<(u64, u64, u64, bool)>, SieveError> {
    let cfg = RootConfig::default();
    let mut out = Vec::new();
    for p in primes_up_to(limit) {
        let rho0 = count_roots_mod_p(system.product(), p, &cfg)?;
        let sum = system
            .members()
            .iter()
            .map(|q| count_roots_mod_p(q, p, &cfg))
            .sum::<Result<u64, _>>()?;
        if rho0 != sum {
            out.push((p, rho0, sum, system.divides_beta_d(p)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyarith::{parse_system, validate_system};
    use proptest::prelude::*;

    fn sys(s: &str) -> PolySystem {
        validate_system(parse_system(s).unwrap(), 0).unwrap()
    }

    #[test]
    fn one_prime_closed_form() {
        let density = SiftingDensity { primes: vec![(2, 1)] };
        let lambda = selberg_weights(&density, 2, 2).unwrap();
        // G = 1 + h(2) = 2, lambda_2 = -(1 - 1/2)^-1 / 2 = -1.
        assert_eq!(lambda.weights, BTreeMap::from([(1, 1.0), (2, -1.0)]));
        let s = sys("0,1");
        let res = sieve_upper_bound(&s, &SieveInstance::plain(1, 0, 100, 2), true).unwrap();
        assert_eq!(res.exact_count, Some(50));
        assert!(res.upper_bound >= 50.0);
        assert!((res.quadratic_form - 0.5).abs() < 1e-12);
    }

    #[test]
    fn level_one_is_trivial() {
        let s = sys("0,1");
        let inst = SieveInstance {
            level: 1,
            ..SieveInstance::plain(1, 1000, 300, 50)
        };
        let res = sieve_upper_bound(&s, &inst, false).unwrap();
        assert_eq!(res.lambda_table.weights, BTreeMap::from([(1, 1.0)]));
        assert!((res.upper_bound - 300.0).abs() < 1e-6);
    }

    /// `lambda_d` for `g(p) = 1/p` by the classical formula, independently:
    /// `mu(d) d / phi(d) * G_d(L / d) / G(L)` with `G_d(u) = sum mu^2(e) / phi(e)`.
    fn classical_lambda(d: u64, z: u64, level: u64) -> f64 {
        let sifted = |e: u64| factor_small(e).iter().all(|&(p, k)| k == 1 && p <= z);
        let phi = |e: u64| factor_small(e).iter().map(|&(p, _)| p - 1).product::<u64>() as f64;
        let g_of = |u: u64, coprime_to: u64| -> f64 {
            (1..=u)
                .filter(|&e| sifted(e) && gcd_u64(e, coprime_to) == 1)
                .map(|e| 1.0 / phi(e))
                .sum()
        };
        let mu = if factor_small(d).len().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        mu * d as f64 / phi(d) * g_of(level / d, d) / g_of(level, 1)
    }

    #[test]
    fn classical_weights_match_closed_form() {
        let density = SiftingDensity {
            primes: primes_up_to(30).into_iter().map(|p| (p, 1)).collect(),
        };
        let lambda = selberg_weights(&density, 30, 30).unwrap();
        for d in 1..=30u64 {
            if !is_squarefree(d) {
                assert_eq!(lambda.get(d), 0.0);
                continue;
            }
            let want = classical_lambda(d, 30, 30);
            let got = lambda.get(d);
            assert!((got - want).abs() < 1e-12, "d = {d}: {got} vs {want}");
            let omega = factor_small(d).len();
            assert_eq!(got > 0.0, omega.is_multiple_of(2), "sign at d = {d}");
        }
    }

    #[test]
    fn empty_congruence_class() {
        // rho_0(2) = 0 for X^2 + 1 modulo 4.
        let s = sys("1,0,1");
        let inst = SieveInstance {
            t: 4,
            ..SieveInstance::plain(1, 1000, 500, 10)
        };
        let res = sieve_upper_bound(&s, &inst, true).unwrap();
        assert_eq!((res.upper_bound, res.exact_count), (0.0, Some(0)));
    }

    #[test]
    fn constrained_pair() {
        let s = sys("0,1;1,1");
        let inst = SieveInstance {
            d: vec![3, 1],
            ..SieveInstance::plain(2, 10_000, 10_000, 10)
        };
        let res = sieve_upper_bound(&s, &inst, true).unwrap();
        // 2 always divides n(n + 1), so nothing survives sifting at 2.
        assert_eq!(res.vanishing_prime, Some(2));
        assert_eq!(res.exact_count, Some(0));
        let inst = SieveInstance { d: vec![6, 1], ..inst };
        let res = sieve_upper_bound(&s, &inst, true).unwrap();
        assert!(res.upper_bound >= res.exact_count.unwrap() as f64);
        assert!(res.exact_count.unwrap() > 0);
    }

    #[test]
    fn instance_validation() {
        let s = sys("1,0,1");
        let ok = SieveInstance::plain(1, 0, 10, 5);
        assert!(ok.validate(&s).is_ok());
        assert!(SieveInstance { t: 32, ..ok.clone() }.validate(&s).is_err());
        assert!(SieveInstance { t: 4, ..ok.clone() }.validate(&s).is_ok());
        assert!(SieveInstance {
            d: vec![2],
            ..ok.clone()
        }
        .validate(&s)
        .is_err());
        assert!(SieveInstance {
            d: vec![25],
            ..ok.clone()
        }
        .validate(&s)
        .is_err());
        assert!(SieveInstance { d: vec![1, 1], ..ok }.validate(&s).is_err());
    }

    #[test]
    fn density_identity() {
        // rho_0(p) = rho_1(p) + rho_2(p) unless p divides Res(X^2 + 1, X + 2) = 5.
        let s = sys("1,0,1;2,1");
        let diffs = density_identity_audit(&s, 1000).unwrap();
        assert_eq!(diffs, vec![(5, 2, 3, true)]);
    }

    #[test]
    fn main_term_linear_in_y() {
        let s = sys("1,1,1");
        let a = sieve_upper_bound(&s, &SieveInstance::plain(1, 0, 1000, 20), false).unwrap();
        let b = sieve_upper_bound(&s, &SieveInstance::plain(1, 0, 2000, 20), false).unwrap();
        assert!((b.main_term - 2.0 * a.main_term).abs() < 1e-9 * b.main_term);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn bound_dominates_exact(seed in 0u64..1_000_000, which in 0usize..3) {
            let systems = ["1,0,1", "0,1;1,1", "1,1,1;2,1"];
            let s = sys(systems[which]);
            for inst in random_instances(&s, 2, seed, 5000, 1500) {
                let res = sieve_upper_bound(&s, &inst, true).unwrap();
                prop_assert!(res.upper_bound >= res.exact_count.unwrap() as f64, "{:?} {:?}", inst, res);
            }
        }
    }
}
