use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{
    estimate_profile, k_max, rhs_bound, ConstantMode, DomainError, MertensProfile, PhiError, RhsContext, TheoremParams,
};
use crate::polyarith::PolySystem;
use crate::window::{window_histogram, JointHistogram, WindowError, WindowSpec};

/// How the window length follows from its start.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YRule {
    /// `y = x`.
    Full,
    /// `y = ceil(x^alpha)`.
    Power,
}

impl fmt::Display for YRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            YRule::Full => "full",
            YRule::Power => "power",
        })
    }
}

pub fn window_length(rule: YRule, x: u64, alpha: f64) -> u64 {
    match rule {
        YRule::Full => x,
        YRule::Power => libm::ceil(libm::pow(x as f64, alpha)) as u64,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VerifyError {
    Window(WindowError),
    Domain(DomainError),
    Phi(PhiError),
    Unsorted,
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerifyError::Window(e) => write!(f, "{e}"),
            VerifyError::Domain(e) => write!(f, "{e}"),
            VerifyError::Phi(e) => write!(f, "{e}"),
            VerifyError::Unsorted => f.write_str("window starts must be strictly ascending"),
        }
    }
}

impl core::error::Error for VerifyError {}

impl From<WindowError> for VerifyError {
    fn from(e: WindowError) -> Self {
        VerifyError::Window(e)
    }
}

impl From<DomainError> for VerifyError {
    fn from(e: DomainError) -> Self {
        VerifyError::Domain(e)
    }
}

impl From<PhiError> for VerifyError {
    fn from(e: PhiError) -> Self {
        VerifyError::Phi(e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub k: Vec<u32>,
    pub count: u64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyEntry {
    pub x: u64,
    pub y: u64,
    /// `R log log x`.
    pub k_max: f64,
    /// Whether some admissible `k` has a positive count.
    pub admissible: bool,
    /// Zero when nothing is admissible.
    pub sup_ratio: f64,
    pub argsup: Option<Vec<u32>>,
    /// Admissible `k` with positive count, ascending lexicographically.
    pub table: Vec<RatioRow>,
    pub total: u64,
    /// `n` left out because some `Q_j(n)` is in `{-1, 0, 1}`.
    pub excluded: u64,
    /// Rows with `count > C * rhs` under a fixed constant `C`.
    pub fixed_constant_exceedances: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub system: String,
    pub params: TheoremParams,
    pub y_rule: YRule,
    pub profile_x_max: f64,
    pub m_j: Vec<f64>,
    pub m_total: f64,
    /// `|beta D| / phi_0(|beta D|)`; the bound carries its `K`-th power.
    pub bd_ratio: f64,
    pub entries: Vec<VerifyEntry>,
}

impl VerifyReport {
    /// The sup ratios in ascending `x`: the empirical implied constant.
    pub fn headline(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.sup_ratio).collect()
    }
}

/// Profile range needed for windows starting at the given `x`.
pub fn profile_extent(xs: &[u64], y_rule: YRule, alpha: f64) -> f64 {
    xs.iter()
        .map(|&x| (x + window_length(y_rule, x, alpha)) as f64)
        .fold(100.0, f64::max)
}

fn entry(ctx: &RhsContext, params: &TheoremParams, h: &JointHistogram) -> Result<VerifyEntry, VerifyError> {
    let x = h.x as f64;
    let kmax = k_max(params, x);
    let mut table = Vec::new();
    let mut sup: Option<(f64, Vec<u32>)> = None;
    let mut exceed = 0;
    for (k, &count) in &h.counts {
        if count == 0 || k.iter().any(|&kj| kj < 1 || kj as f64 > kmax) {
            continue;
        }
        let rhs = rhs_bound(ctx, params, k, x, h.y as f64)?.value;
        let ratio = count as f64 / rhs;
        if let ConstantMode::Fixed(c) = params.mode {
            exceed += (count as f64 > c * rhs) as usize;
        }
        if sup.as_ref().is_none_or(|(s, _)| ratio > *s) {
            sup = Some((ratio, k.clone()));
        }
        table.push(RatioRow {
            k: k.clone(),
            count,
            rhs,
            ratio,
        });
    }
    Ok(VerifyEntry {
        x: h.x,
        y: h.y,
        k_max: kmax,
        admissible: sup.is_some(),
        sup_ratio: sup.as_ref().map_or(0.0, |s| s.0),
        argsup: sup.map(|s| s.1),
        table,
        total: h.total,
        excluded: h.y - h.total,
        fixed_constant_exceedances: exceed,
    })
}

/// Builds the report from histograms computed elsewhere (possibly in
/// parallel), folding in ascending `x`.
pub fn assemble_report(
    system: &PolySystem,
    params: &TheoremParams,
    y_rule: YRule,
    profile: &MertensProfile,
    histograms: &[JointHistogram],
) -> Result<VerifyReport, VerifyError> {
    params.validate()?;
    if histograms.windows(2).any(|w| w[0].x >= w[1].x) {
        return Err(VerifyError::Unsorted);
    }
    let ctx = RhsContext::new(system, profile)?;
    let entries = histograms
        .iter()
        .map(|h| entry(&ctx, params, h))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VerifyReport {
        system: system.spec_string(),
        params: *params,
        y_rule,
        profile_x_max: profile.x_max,
        m_j: ctx.m_j,
        m_total: ctx.m_total,
        bd_ratio: ctx.bd_ratio,
        entries,
    })
}

/// Sequential theorem audit over the window starts `xs`.
pub fn verify_theorem(
    system: &PolySystem,
    xs: &[u64],
    y_rule: YRule,
    params: &TheoremParams,
) -> Result<VerifyReport, VerifyError> {
    params.validate()?;
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(VerifyError::Unsorted);
    }
    let profile = estimate_profile(system, profile_extent(xs, y_rule, params.alpha));
    let histograms = xs
        .iter()
        .map(|&x| {
            let spec = WindowSpec::new(system, x, window_length(y_rule, x, params.alpha), params.alpha, None)?;
            Ok(window_histogram(system, &spec)?)
        })
        .collect::<Result<Vec<_>, VerifyError>>()?;
    assemble_report(system, params, y_rule, &profile, &histograms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyarith::{parse_system, validate_system};

    fn sys(s: &str) -> PolySystem {
        validate_system(parse_system(s).unwrap(), 0).unwrap()
    }

    #[test]
    fn finite_and_deterministic() {
        let s = sys("0,1;1,1");
        let params = TheoremParams::defaults_for(&s);
        let a = verify_theorem(&s, &[100_000], YRule::Full, &params).unwrap();
        let b = verify_theorem(&s, &[100_000], YRule::Full, &params).unwrap();
        assert_eq!(a, b);
        let e = &a.entries[0];
        assert!(e.admissible && e.sup_ratio.is_finite() && e.sup_ratio > 0.0);
        assert_eq!(e.total, 100_000);
        let best = e.table.iter().map(|r| r.ratio).fold(0.0, f64::max);
        assert_eq!(best, e.sup_ratio);
        assert!(e
            .table
            .iter()
            .all(|r| r.k.iter().all(|&k| k >= 1 && k as f64 <= e.k_max)));
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let s = sys("0,1;1,1");
        let params = TheoremParams::defaults_for(&s);
        let report = verify_theorem(&s, &[20_000], YRule::Power, &params).unwrap();
        let profile = estimate_profile(&s, profile_extent(&[20_000], YRule::Power, 0.5));
        let ctx = RhsContext::new(&s, &profile).unwrap();
        let e = &report.entries[0];
        assert_eq!(e.y, 142);
        for row in &e.table {
            let rhs = rhs_bound(&ctx, &params, &row.k, 20_000.0, 142.0).unwrap().value;
            assert_eq!(row.rhs, rhs);
            assert_eq!(row.ratio, row.count as f64 / rhs);
        }
    }

    #[test]
    fn no_admissible_k() {
        // With x = 3 every k admissible would need k <= 2 log log 3 < 1.
        let s = sys("0,1");
        let params = TheoremParams::defaults_for(&s);
        let report = verify_theorem(&s, &[3], YRule::Full, &params).unwrap();
        let e = &report.entries[0];
        assert!(!e.admissible);
        assert_eq!((e.sup_ratio, e.argsup.clone()), (0.0, None));
    }

    #[test]
    fn rejects_unsorted_starts() {
        let s = sys("0,1");
        let params = TheoremParams::defaults_for(&s);
        assert_eq!(
            verify_theorem(&s, &[1000, 100], YRule::Full, &params),
            Err(VerifyError::Unsorted)
        );
    }
}
