use alloc::vec::Vec;

use super::{check_record, FactorizationRecord, NClass, Violation, WindowSpec};
use crate::polyarith::PolySystem;
use crate::primes::primes_up_to;
use crate::rootcount::{rho_prime_power_with, RootConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditConfig {
    /// Rankin exponent constant: the weight is `(prod a / x^(g eps))^(C / ln q)`.
    pub rankin_c: f64,
    /// Largest acceptable ratio of the N2 count to its bound proxy.
    pub n2_ratio_threshold: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            rankin_c: 1.0,
            n2_ratio_threshold: 1.0,
        }
    }
}

/// Bound bookkeeping for class N2.
#[derive(Clone, Debug, PartialEq)]
pub struct N2Audit {
    pub count: u64,
    /// `n` with `p^nu(p) | Q(n)` for some `p <= x^(eps / 3)`; contains N2.
    pub direct_count: u64,
    /// `2 sum_p y rho_0(p^nu(p)) / p^nu(p)`.
    pub proxy: f64,
    /// Same with `rho_0(p^nu)` replaced by `g p^(nu (1 - 1/g))`.
    pub stewart_proxy: f64,
    /// `sum_p rho_0(p^nu(p)) ceil(y / p^nu(p))`, a true upper bound for
    /// `direct_count`.
    pub exact_cap: u64,
    /// `(p, nu(p))` whose prime power exceeded the root-count bound.
    pub skipped: Vec<(u64, u32)>,
    /// `count / proxy`, zero when both vanish.
    pub ratio: f64,
    pub ratio_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankinDiagnostic {
    pub c: f64,
    pub n3_count: u64,
    /// `sum over N3 of (prod a / x^(g eps))^(C / ln q_n)`; every term is at
    /// least 1.
    pub weighted_sum: f64,
    pub dominates: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassAudit {
    pub records: usize,
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
    /// Record invariant failures.
    pub violations: Vec<Violation>,
    /// `E = 3 (g + 1) / eps`.
    pub e_bound: f64,
    /// Records with `|Q(n)| <= x^(g + 1)`, where the E and eta bounds apply.
    pub in_regime: usize,
    /// `(n, omega(b_n))` for N1 records in the regime with `omega(b_n) > E`.
    pub e_violations: Vec<(u64, u32)>,
    /// Same for records outside the regime; reported, not a failure.
    pub e_exceed_out_of_regime: Vec<(u64, u32)>,
    /// N2 records with `p_n^v_n <= x^(g eps)`.
    pub n2_power_violations: Vec<u64>,
    /// `(n, omega(b_n), eta(q_n))` for N3 records in the regime exceeding eta.
    pub eta_violations: Vec<(u64, u32, f64)>,
    pub eta_exceed_out_of_regime: Vec<(u64, u32, f64)>,
    /// `(n, j)` for N1 records in the regime with
    /// `omega(t_jn d_jn) < omega(Q_j(n)) - E`.
    pub omega_drop_violations: Vec<(u64, usize)>,
    pub n2_audit: N2Audit,
    pub rankin: RankinDiagnostic,
}

impl ClassAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
            && self.e_violations.is_empty()
            && self.n2_power_violations.is_empty()
            && self.eta_violations.is_empty()
            && self.omega_drop_violations.is_empty()
            && self.n2_audit.count <= self.n2_audit.direct_count
            && self.n2_audit.direct_count <= self.n2_audit.exact_cap
            && self.rankin.dominates
    }
}

/// Smallest `nu` with `p^nu > x^(g eps)`.
fn nu_of(p: u64, class_ln: f64) -> u32 {
    let lp = libm::log(p as f64);
    let mut nu = 1u32;
    while nu as f64 * lp <= class_ln {
        nu += 1;
    }
    nu
}

/// Checks every record and the class-level bounds over a full window.
pub fn audit_classes(
    records: &[FactorizationRecord],
    system: &PolySystem,
    spec: &WindowSpec,
    cfg: &AuditConfig,
) -> ClassAudit {
    let log_x = spec.log_x();
    let class_ln = spec.class_exponent * log_x;
    let regime_ln = (spec.g as f64 + 1.0) * log_x;
    let e_bound = spec.e_bound();
    let mut audit = ClassAudit {
        records: records.len(),
        n1: 0,
        n2: 0,
        n3: 0,
        violations: Vec::new(),
        e_bound,
        in_regime: 0,
        e_violations: Vec::new(),
        e_exceed_out_of_regime: Vec::new(),
        n2_power_violations: Vec::new(),
        eta_violations: Vec::new(),
        eta_exceed_out_of_regime: Vec::new(),
        omega_drop_violations: Vec::new(),
        n2_audit: N2Audit {
            count: 0,
            direct_count: 0,
            proxy: 0.0,
            stewart_proxy: 0.0,
            exact_cap: 0,
            skipped: Vec::new(),
            ratio: 0.0,
            ratio_ok: true,
        },
        rankin: RankinDiagnostic {
            c: cfg.rankin_c,
            n3_count: 0,
            weighted_sum: 0.0,
            dominates: true,
        },
    };
    let cutoff = spec.small_prime_cutoff();
    let small_primes: Vec<(u64, u32)> = primes_up_to(cutoff as u64)
        .into_iter()
        .filter(|&p| p as f64 <= cutoff)
        .map(|p| (p, nu_of(p, class_ln)))
        .collect();
    for rec in records {
        audit.violations.extend(check_record(rec, system, spec));
        let in_regime = rec.ln_q() <= regime_ln;
        audit.in_regime += in_regime as usize;
        match rec.class {
            NClass::N1 => {
                audit.n1 += 1;
                if rec.omega_b as f64 > e_bound {
                    let entry = (rec.n, rec.omega_b);
                    if in_regime {
                        audit.e_violations.push(entry);
                    } else {
                        audit.e_exceed_out_of_regime.push(entry);
                    }
                }
                if in_regime {
                    for (j, (&t, &d)) in rec.t_star.iter().zip(&rec.d_star).enumerate() {
                        let kept = (count_primes(t) + count_primes(d)) as f64;
                        if kept < rec.omega(j) as f64 - e_bound {
                            audit.omega_drop_violations.push((rec.n, j));
                        }
                    }
                }
            }
            NClass::N2 => {
                audit.n2 += 1;
                let ok = rec
                    .p_min_b
                    .is_some_and(|p| rec.v as f64 * libm::log(p as f64) > class_ln);
                if !ok {
                    audit.n2_power_violations.push(rec.n);
                }
            }
            NClass::N3 => {
                audit.n3 += 1;
                let q = rec.q.unwrap_or(1);
                let eta = if q > 1 {
                    (spec.g as f64 + 1.0) * log_x / libm::log(q as f64)
                } else {
                    f64::INFINITY
                };
                if rec.omega_b as f64 > eta {
                    let entry = (rec.n, rec.omega_b, eta);
                    if in_regime {
                        audit.eta_violations.push(entry);
                    } else {
                        audit.eta_exceed_out_of_regime.push(entry);
                    }
                }
                if q > 1 {
                    let a_ln: f64 = rec.a.iter().map(|&v| libm::log(v as f64)).sum();
                    let v = cfg.rankin_c / libm::log(q as f64);
                    audit.rankin.weighted_sum += libm::exp(v * (a_ln - class_ln));
                } else {
                    audit.rankin.weighted_sum += 1.0;
                }
            }
        }
        let merged = rec.merged();
        if small_primes
            .iter()
            .any(|&(p, nu)| merged.get(&(p as u128)).is_some_and(|&e| e >= nu))
        {
            audit.n2_audit.direct_count += 1;
        }
    }
    audit.rankin.n3_count = audit.n3;
    audit.rankin.dominates = audit.rankin.weighted_sum + 1e-9 >= audit.n3 as f64;
    let n2 = &mut audit.n2_audit;
    n2.count = audit.n2;
    let g = spec.g as f64;
    let y = spec.y as f64;
    let root_cfg = RootConfig::default();
    for &(p, nu) in &small_primes {
        let pnu = libm::pow(p as f64, nu as f64);
        n2.stewart_proxy += 2.0 * y * g * libm::pow(p as f64, -(nu as f64) / g);
        match rho_prime_power_with(system.product(), p, nu, &root_cfg) {
            Ok(rho) => {
                n2.proxy += 2.0 * y * rho as f64 / pnu;
                let pnu_int = (p as u128).pow(nu);
                n2.exact_cap += rho * spec.y.div_ceil(pnu_int as u64);
            }
            Err(_) => n2.skipped.push((p, nu)),
        }
    }
    if !n2.skipped.is_empty() {
        n2.exact_cap = u64::MAX;
    }
    n2.ratio = if n2.count == 0 { 0.0 } else { n2.count as f64 / n2.proxy };
    n2.ratio_ok = n2.ratio <= cfg.n2_ratio_threshold;
    audit
}

fn count_primes(kernel: u128) -> u32 {
    crate::primes::factor_u128(kernel).map(|f| f.len() as u32).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyarith::{parse_system, validate_system};
    use crate::window::window_records;

    fn sys(s: &str) -> PolySystem {
        validate_system(parse_system(s).unwrap(), 0).unwrap()
    }

    #[test]
    fn full_window_audit_is_clean() {
        let s = sys("0,1;1,1");
        let x = 100_000u64;
        let spec = WindowSpec::new(&s, x, 317, 0.5, None).unwrap();
        let (records, _) = window_records(&s, &spec).unwrap();
        let audit = audit_classes(&records, &s, &spec, &AuditConfig::default());
        assert!(audit.passed(), "{audit:?}");
        assert_eq!(audit.n1 + audit.n2 + audit.n3, records.len() as u64);
        assert_eq!(audit.records, 317);
    }

    #[test]
    fn n2_bookkeeping_with_small_primes() {
        // Here x^(eps / 3) > 2, nu(2) = 7 and the cap x^(2 g eps) lies in
        // (2^12, 2^13): N2 is exactly the n with 2^13 | n(n + 1).
        let s = sys("0,1;1,1");
        let (x, y) = (999_000u64, 5000u64);
        let spec = WindowSpec::new(&s, x, y, 0.99, Some(0.16)).unwrap();
        let (records, _) = window_records(&s, &spec).unwrap();
        let audit = audit_classes(&records, &s, &spec, &AuditConfig::default());
        let v2 = |n: u64| (n * (n + 1)).trailing_zeros();
        let window = x + 1..=x + y;
        assert!(audit.violations.is_empty());
        assert!(audit.n2_power_violations.is_empty());
        assert_eq!(
            audit.n2_audit.count,
            window.clone().filter(|&n| v2(n) >= 13).count() as u64
        );
        assert_eq!(audit.n2_audit.count, 2);
        assert_eq!(
            audit.n2_audit.direct_count,
            window.filter(|&n| v2(n) >= 7).count() as u64
        );
        assert_eq!(audit.n2_audit.exact_cap, 2 * 40);
        assert!(audit.passed());
    }

    #[test]
    fn nu_is_minimal() {
        let class_ln = libm::log(100.5);
        assert_eq!(nu_of(2, class_ln), 7);
        assert_eq!(nu_of(10, class_ln), 3);
        assert_eq!(nu_of(101, class_ln), 1);
    }
}
