//! Subcommand implementations. Each writes its files under `out_dir` and
//! returns a short human-readable summary.

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::{json, Value};

use polyomega_core::asymptotics::{estimate_profile, loglog, ConstantMode, VerifyReport};
use polyomega_core::polyarith::{check_product_identity, IntPoly};
use polyomega_core::rootcount::{prime_count_audit, rho, stewart_audit};
use polyomega_core::selberg::{
    density_identity_audit, random_instances, sieve_ratio_study, sieve_upper_bound, SieveInstance, StudyRow,
};
use polyomega_core::window::{audit_classes, window_records, AuditConfig, ClassAudit, WindowSpec};
use polyomega_core::PolySystem;

use crate::config::ExperimentConfig;
use crate::parallel;
use crate::report::{failure_marker, fmt_f64, json_f64, write_atomic, write_json, Provenance, Table};
use crate::Error;

/// Windows up to this length get an exact count next to a single sieve bound.
pub const SIEVE_ORACLE_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// With `strict`, primes dividing `Q(n)` for every `n` are an error
    /// rather than a warning.
    Validate {
        strict: bool,
    },
    Rho,
    Mertens,
    Window {
        records: bool,
    },
    Verify,
    Sieve {
        study: bool,
    },
    Audit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Rho => "rho",
            Command::Mertens => "mertens",
            Command::Window { .. } => "window",
            Command::Verify => "verify",
            Command::Sieve { study: false } => "sieve",
            Command::Sieve { study: true } => "sieve-study",
            Command::Audit => "audit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), Error> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<(), Error> {
        let path = self.dir.join(name);
        write_json(&path, value)?;
        self.written.push(path);
        Ok(())
    }
}

/// What a command found: its summary, and a failed check if any.
struct Report {
    summary: String,
    finding: Option<String>,
}

impl From<String> for Report {
    fn from(summary: String) -> Self {
        Report { summary, finding: None }
    }
}

/// Runs `cmd`. On failure after some files were written, a
/// `<command>.FAILED` marker listing them is left in `out_dir`.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let mut out = Output {
        dir: cfg.out_dir(),
        written: Vec::new(),
    };
    let marker = failure_marker(&out.dir, cmd.name());
    let result = parallel::pool(cfg.threads).and_then(|pool| pool.install(|| dispatch(cmd, cfg, &mut out)));
    let result = result.and_then(|r| match r.finding {
        Some(f) => Err(Error::Finding(f)),
        None => Ok(r.summary),
    });
    match result {
        Ok(summary) => {
            if marker.exists() {
                fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
            }
            Ok(Outcome {
                files: out.written,
                summary,
            })
        }
        Err(e) => {
            if !out.written.is_empty() {
                let mut text = e.one_line();
                text.push('\n');
                for p in &out.written {
                    text.push_str(&format!("{}\n", p.display()));
                }
                write_atomic(&marker, text.as_bytes())?;
            }
            Err(e)
        }
    }
}

fn dispatch(cmd: Command, cfg: &ExperimentConfig, out: &mut Output) -> Result<Report, Error> {
    let system = cfg.load_system()?;
    let prov = Provenance::new(cmd.name(), &cfg.resolved(&system));
    match cmd {
        Command::Validate { strict } => validate(cfg, &system, strict).map(Report::from),
        Command::Rho => rho_table(cfg, &system, &prov, out).map(Report::from),
        Command::Mertens => mertens(cfg, &system, &prov, out).map(Report::from),
        Command::Window { records } => window(cfg, &system, &prov, out, records || cfg.records).map(Report::from),
        Command::Verify => verify(cfg, &system, &prov, out).map(Report::from),
        Command::Sieve { study: false } => sieve(cfg, &system, &prov, out),
        Command::Sieve { study: true } => sieve_study(cfg, &system, &prov, out),
        Command::Audit => audit(cfg, &system, &prov, out),
    }
}

fn window_spec(cfg: &ExperimentConfig, system: &PolySystem) -> Result<WindowSpec, Error> {
    WindowSpec::new(system, cfg.x, cfg.window_y(cfg.x), cfg.alpha, cfg.epsilon).map_err(Error::compute)
}

fn validate(cfg: &ExperimentConfig, system: &PolySystem, strict: bool) -> Result<String, Error> {
    let cert = system.certificate();
    if strict {
        if let Some(p) = cert.product_fixed_primes.first() {
            return Err(Error::System(format!("Q has fixed prime divisor {p}")));
        }
    }
    let mut s = format!(
        "valid system {}\nr = {}\ng = {}\nbeta = {}\nD = {}\nbetaD = {}\nnorm = {}\n",
        system.spec_string(),
        system.r(),
        system.g(),
        system.beta(),
        system.disc(),
        system.beta_d(),
        system.norm()
    );
    for (j, m) in cert.irreducibility.iter().enumerate() {
        s.push_str(&format!("irreducible Q_{}: {m:?}\n", j + 1));
    }
    for (i, j, res) in &cert.pairwise_resultants {
        s.push_str(&format!("Res(Q_{}, Q_{}) = {res}\n", i + 1, j + 1));
    }
    s.push_str(&format!("fixed divisor scan up to {}\n", cert.fixed_divisor_scan_limit));
    if !cert.product_fixed_primes.is_empty() {
        let ps: Vec<String> = cert.product_fixed_primes.iter().map(u64::to_string).collect();
        s.push_str(&format!(
            "warning: Q(n) is divisible by {} for every n\n",
            ps.join(", ")
        ));
    }
    if system.window_start_warning(cfg.x, cfg.c0) {
        s.push_str(&format!("warning: x = {} is below c0 * norm(Q)\n", cfg.x));
    }
    Ok(s)
}

fn rho_table(
    cfg: &ExperimentConfig,
    system: &PolySystem,
    prov: &Provenance,
    out: &mut Output,
) -> Result<String, Error> {
    let poly = match &cfg.poly {
        Some(text) => IntPoly::parse(text).map_err(|e| Error::Config(format!("poly: {e}")))?,
        None => system.product().clone(),
    };
    if cfg.m_max == 0 {
        return Err(Error::Config("m_max must be positive".into()));
    }
    let counts = (1..=cfg.m_max)
        .into_par_iter()
        .map(|m| rho(&poly, m).map(|c| (m, c)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Error::compute)?;
    let mut table = Table::new(["modulus", "count"]);
    for (m, c) in counts {
        table.push(vec![m.to_string(), c.to_string()]);
    }
    out.write(
        "rho.csv",
        &table.render(&prov.csv_header(&[("poly", poly.to_string())])),
    )?;
    Ok(format!("rho of {poly} for moduli 1..={}\n", cfg.m_max))
}

fn mertens(cfg: &ExperimentConfig, system: &PolySystem, prov: &Provenance, out: &mut Output) -> Result<String, Error> {
    if !(cfg.x_max >= 3.0) {
        return Err(Error::Config("x_max must be at least 3".into()));
    }
    let profile = estimate_profile(system, cfg.x_max);
    let r = system.r();
    let mut cols = vec!["x".to_string()];
    for j in 1..=r {
        cols.push(format!("S_{j}"));
        cols.push(format!("S_{j}_minus_loglog"));
        cols.push(format!("shifted_{j}"));
    }
    let mut table = Table::new(cols);
    for (i, &x) in profile.grid.iter().enumerate() {
        let mut row = vec![fmt_f64(x)];
        for m in &profile.members {
            row.push(fmt_f64(m.sums[i]));
            row.push(fmt_f64(m.sums[i] - loglog(x)));
            row.push(fmt_f64(m.shifted_sums[i]));
        }
        table.push(row);
    }
    let m_j: Vec<String> = profile.m_j().into_iter().map(fmt_f64).collect();
    let argsup: Vec<String> = profile.members.iter().map(|m| fmt_f64(m.argsup)).collect();
    let header = prov.csv_header(&[
        ("M_j", m_j.join(",")),
        ("M", fmt_f64(profile.m_total())),
        ("argsup", argsup.join(",")),
    ]);
    out.write("mertens.csv", &table.render(&header))?;
    Ok(format!(
        "M_j = {}\nM = {}\n",
        m_j.join(", "),
        fmt_f64(profile.m_total())
    ))
}

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn window(
    cfg: &ExperimentConfig,
    system: &PolySystem,
    prov: &Provenance,
    out: &mut Output,
    records: bool,
) -> Result<String, Error> {
    let spec = window_spec(cfg, system)?;
    let (hist, excluded) = parallel::window_histogram(system, &spec)?;
    let r = system.r();
    let mut cols: Vec<String> = (1..=r).map(|j| format!("k_{j}")).collect();
    cols.push("count".into());
    let mut table = Table::new(cols);
    for (k, c) in &hist.counts {
        let mut row: Vec<String> = k.iter().map(u32::to_string).collect();
        row.push(c.to_string());
        table.push(row);
    }
    let extra = [
        ("window", format!("({}, {}]", spec.x, spec.x + spec.y)),
        ("y", spec.y.to_string()),
        ("epsilon", fmt_f64(spec.epsilon)),
        ("z_max", spec.z_max.to_string()),
        ("total", hist.total.to_string()),
        (
            "excluded",
            if excluded.is_empty() {
                "none".into()
            } else {
                join(&excluded, " ")
            },
        ),
    ];
    out.write("histogram.csv", &table.render(&prov.csv_header(&extra)))?;
    if records {
        let (recs, _) = window_records(system, &spec).map_err(Error::compute)?;
        let mut t = Table::new(["n", "class", "xi", "a", "b", "p_n", "v_n", "t", "d", "q", "omega_b"]);
        let opt = |v: Option<u128>| v.map_or_else(|| "-".into(), |v| v.to_string());
        for rec in &recs {
            t.push(vec![
                rec.n.to_string(),
                rec.class.to_string(),
                opt(rec.xi),
                join(&rec.a, ";"),
                rec.b.to_string(),
                opt(rec.p_min_b),
                rec.v.to_string(),
                join(&rec.t, ";"),
                join(&rec.d, ";"),
                opt(rec.q),
                rec.omega_b.to_string(),
            ]);
        }
        out.write("records.csv", &t.render(&prov.csv_header(&extra)))?;
    }
    Ok(format!(
        "window ({}, {}]: {} values, {} excluded, {} distinct k-vectors\n",
        spec.x,
        spec.x + spec.y,
        hist.total,
        excluded.len(),
        hist.counts.len()
    ))
}

pub const VERIFY_TABLE: &str = "verify_table.csv";

/// The `verify.json` document; its layout is fixed by `schema/verify.schema.json`.
pub fn verify_json(report: &VerifyReport, prov: &Provenance) -> Value {
    let bd_factor = report.bd_ratio.powf(report.params.k_exponent);
    let mode = match report.params.mode {
        ConstantMode::ReportRatio => json!("report-ratio"),
        ConstantMode::Fixed(c) => json!({ "fixed": json_f64(c) }),
    };
    let entries: Vec<Value> = report
        .entries
        .iter()
        .map(|e| {
            json!({
                "x": e.x,
                "y": e.y,
                "k_max": json_f64(e.k_max),
                "admissible": e.admissible,
                "sup_ratio": json_f64(e.sup_ratio),
                "argsup": e.argsup,
                "total": e.total,
                "excluded": e.excluded,
                "rows": e.table.len(),
            })
        })
        .collect();
    json!({
        "provenance": prov.json(),
        "system": report.system,
        "y_rule": report.y_rule.to_string(),
        "params": {
            "K": json_f64(report.params.k_exponent),
            "R": json_f64(report.params.r_multiplier),
            "alpha": json_f64(report.params.alpha),
            "mode": mode,
        },
        "profile_x_max": json_f64(report.profile_x_max),
        "M_j": report.m_j.iter().map(|&m| json_f64(m)).collect::<Vec<_>>(),
        "M": json_f64(report.m_total),
        "beta_d_ratio": json_f64(report.bd_ratio),
        "beta_d_factor": json_f64(bd_factor),
        "headline": report.headline().into_iter().map(json_f64).collect::<Vec<_>>(),
        "table_path": VERIFY_TABLE,
        "entries": entries,
    })
}

pub fn verify_table(report: &VerifyReport, r: usize) -> Table {
    let mut cols = vec!["x".to_string()];
    cols.extend((1..=r).map(|j| format!("k_{j}")));
    cols.extend(["count", "rhs", "ratio"].map(String::from));
    let mut table = Table::new(cols);
    for e in &report.entries {
        for row in &e.table {
            let mut v = vec![e.x.to_string()];
            v.extend(row.k.iter().map(u32::to_string));
            v.extend([row.count.to_string(), fmt_f64(row.rhs), fmt_f64(row.ratio)]);
            table.push(v);
        }
    }
    table
}

fn verify(cfg: &ExperimentConfig, system: &PolySystem, prov: &Provenance, out: &mut Output) -> Result<String, Error> {
    let params = cfg.theorem_params(system);
    let report = parallel::verify(system, &cfg.xs(), cfg.y_rule()?, &params, cfg.epsilon)?;
    out.write(
        VERIFY_TABLE,
        &verify_table(&report, system.r()).render(&prov.csv_header(&[])),
    )?;
    out.json("verify.json", &verify_json(&report, prov))?;
    let mut s = String::new();
    for e in &report.entries {
        let arg = e
            .argsup
            .as_ref()
            .map_or_else(|| "no admissible k".into(), |k| format!("{k:?}"));
        s.push_str(&format!("x = {}: sup ratio {} at {arg}\n", e.x, fmt_f64(e.sup_ratio)));
    }
    Ok(s)
}

fn ratio(bound: f64, exact: u64) -> f64 {
    match exact {
        0 if bound == 0.0 => 1.0,
        0 => f64::INFINITY,
        e => bound / e as f64,
    }
}

fn sieve(cfg: &ExperimentConfig, system: &PolySystem, prov: &Provenance, out: &mut Output) -> Result<Report, Error> {
    let inst = SieveInstance {
        x: cfg.x,
        y: cfg.window_y(cfg.x),
        t: cfg.t,
        d: cfg.d.clone().unwrap_or_else(|| vec![1; system.r()]),
        z: cfg.z,
        level: cfg.level.unwrap_or(cfg.z.max(1)),
    };
    let res = sieve_upper_bound(system, &inst, inst.y <= SIEVE_ORACLE_LIMIT).map_err(Error::compute)?;
    let mut table = Table::new([
        "z",
        "level",
        "T",
        "d",
        "X",
        "R",
        "main_term",
        "remainder_budget",
        "upper_bound",
        "exact",
        "ratio",
    ]);
    let exact = res.exact_count.map_or_else(|| "-".into(), |e| e.to_string());
    let ratio_s = res
        .exact_count
        .map_or_else(|| "-".into(), |e| fmt_f64(ratio(res.upper_bound, e)));
    table.push(vec![
        inst.z.to_string(),
        inst.level.to_string(),
        inst.t.to_string(),
        join(&inst.d, ";"),
        fmt_f64(res.x_estimate),
        res.r_cap.to_string(),
        fmt_f64(res.main_term),
        fmt_f64(res.remainder_budget),
        fmt_f64(res.upper_bound),
        exact.clone(),
        ratio_s,
    ]);
    let vanishing = res.vanishing_prime.map_or_else(|| "none".into(), |p| p.to_string());
    let header = prov.csv_header(&[("vanishing_prime", vanishing)]);
    out.write("sieve.csv", &table.render(&header))?;
    let mut lambda = Table::new(["d", "lambda"]);
    for (d, w) in &res.lambda_table.weights {
        lambda.push(vec![d.to_string(), fmt_f64(*w)]);
    }
    out.write("lambda.csv", &lambda.render(&header))?;
    let finding = res
        .exact_count
        .filter(|&e| res.upper_bound < e as f64)
        .map(|e| format!("sieve bound {} below exact count {e}", fmt_f64(res.upper_bound)));
    Ok(Report {
        summary: format!("bound {} (exact {exact})\n", fmt_f64(res.upper_bound)),
        finding,
    })
}

pub fn study_table(rows: &[StudyRow]) -> Table {
    let mut table = Table::new(["z", "level", "T", "d", "bound", "exact", "ratio", "violation"]);
    for row in rows {
        table.push(vec![
            row.instance.z.to_string(),
            row.instance.level.to_string(),
            row.instance.t.to_string(),
            join(&row.instance.d, ";"),
            fmt_f64(row.bound),
            row.exact.to_string(),
            fmt_f64(row.ratio),
            row.violation.to_string(),
        ]);
    }
    table
}

/// Seeded random instances over `(x, x + y]` with their exact counts, in
/// instance order.
pub fn study(system: &PolySystem, count: usize, seed: u64, x: u64, y: u64) -> Result<Vec<StudyRow>, Error> {
    let instances = random_instances(system, count, seed, x, y);
    let rows = instances
        .par_iter()
        .map(|inst| sieve_ratio_study(system, std::slice::from_ref(inst)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Error::compute)?;
    Ok(rows.into_iter().flatten().collect())
}

fn sieve_study(
    cfg: &ExperimentConfig,
    system: &PolySystem,
    prov: &Provenance,
    out: &mut Output,
) -> Result<Report, Error> {
    let y = cfg.window_y(cfg.x);
    if y > SIEVE_ORACLE_LIMIT {
        return Err(Error::Config(format!("study windows need y <= {SIEVE_ORACLE_LIMIT}")));
    }
    let rows = study(system, cfg.instances, cfg.seed, cfg.x, y)?;
    out.write("sieve_study.csv", &study_table(&rows).render(&prov.csv_header(&[])))?;
    let bad = rows.iter().filter(|r| r.violation).count();
    let worst = rows
        .iter()
        .map(|r| r.ratio)
        .filter(|r| r.is_finite())
        .fold(0.0, f64::max);
    Ok(Report {
        summary: format!(
            "{} instances, {bad} violations, largest finite ratio {}\n",
            rows.len(),
            fmt_f64(worst)
        ),
        finding: (bad > 0).then(|| format!("{bad} instances with bound below exact count")),
    })
}

fn class_audit_json(a: &ClassAudit) -> Value {
    let violations: Vec<Value> = a
        .violations
        .iter()
        .take(50)
        .map(|v| {
            json!({
                "n": v.n,
                "kind": format!("{:?}", v.kind),
                "member": v.member,
                "witness": v.witness.map(|w| w.to_string()),
            })
        })
        .collect();
    let n2 = &a.n2_audit;
    json!({
        "passed": a.passed(),
        "records": a.records,
        "n1": a.n1,
        "n2": a.n2,
        "n3": a.n3,
        "violation_count": a.violations.len(),
        "violations": violations,
        "e_bound": json_f64(a.e_bound),
        "in_regime": a.in_regime,
        "e_violations": a.e_violations,
        "e_exceed_out_of_regime": a.e_exceed_out_of_regime.len(),
        "n2_power_violations": a.n2_power_violations,
        "eta_violations": a.eta_violations.iter().map(|&(n, w, eta)| json!([n, w, json_f64(eta)])).collect::<Vec<_>>(),
        "eta_exceed_out_of_regime": a.eta_exceed_out_of_regime.len(),
        "omega_drop_violations": a.omega_drop_violations,
        "n2_audit": {
            "count": n2.count,
            "direct_count": n2.direct_count,
            "exact_cap": n2.exact_cap,
            "proxy": json_f64(n2.proxy),
            "stewart_proxy": json_f64(n2.stewart_proxy),
            "ratio": json_f64(n2.ratio),
            "ratio_ok": n2.ratio_ok,
            "skipped": n2.skipped,
        },
        "rankin": {
            "C": json_f64(a.rankin.c),
            "n3_count": a.rankin.n3_count,
            "weighted_sum": json_f64(a.rankin.weighted_sum),
            "dominates": a.rankin.dominates,
        },
    })
}

fn audit(cfg: &ExperimentConfig, system: &PolySystem, prov: &Provenance, out: &mut Output) -> Result<Report, Error> {
    let mut failures = Vec::new();
    let members = system.members();
    let mut identities = Vec::new();
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            let id = check_product_identity(&members[i], &members[j]).map_err(Error::compute)?;
            if !id.holds {
                failures.push(format!("product identity fails for members {i}, {j}"));
            }
            identities.push(json!({
                "i": i, "j": j,
                "lhs": id.lhs.to_string(), "rhs": id.rhs.to_string(),
                "holds": id.holds, "lead_weighted_holds": id.lead_weighted_holds,
            }));
        }
    }
    let mut polys: Vec<(String, &IntPoly)> = members
        .iter()
        .enumerate()
        .map(|(j, q)| (format!("Q_{}", j + 1), q))
        .collect();
    polys.push(("Q".into(), system.product()));
    let roots: Vec<Value> = polys
        .par_iter()
        .map(|(name, q)| {
            let pc = prime_count_audit(q, cfg.limit);
            let st = stewart_audit(q, cfg.limit);
            json!({
                "poly": name,
                "coeffs": q.to_string(),
                "primes_checked": pc.primes_checked,
                "prime_count_violations": pc.violations,
                "prime_count_flagged": pc.flagged,
                "stewart_violations": st.iter().map(|v| json!([v.p, v.nu, v.count])).collect::<Vec<_>>(),
            })
        })
        .collect();
    for r in &roots {
        for key in ["prime_count_violations", "stewart_violations"] {
            if r[key].as_array().is_some_and(|a| !a.is_empty()) {
                failures.push(format!("{key} for {}", r["poly"].as_str().unwrap_or("?")));
            }
        }
    }
    let density = density_identity_audit(system, cfg.limit).map_err(Error::compute)?;
    if density.iter().any(|&(_, _, _, at_beta_d)| !at_beta_d) {
        failures.push("root count additivity fails at a prime not dividing beta D".into());
    }
    let spec = window_spec(cfg, system)?;
    let (records, excluded) = window_records(system, &spec).map_err(Error::compute)?;
    let audit_cfg = AuditConfig {
        rankin_c: cfg.rankin_c,
        n2_ratio_threshold: cfg.n2_threshold,
    };
    let classes = audit_classes(&records, system, &spec, &audit_cfg);
    if !classes.passed() {
        failures.push("class audit failed".into());
    }
    let doc = json!({
        "provenance": prov.json(),
        "system": system.spec_string(),
        "passed": failures.is_empty(),
        "failures": failures,
        "x_below_c0_norm": system.window_start_warning(cfg.x, cfg.c0),
        "product_fixed_primes": system.certificate().product_fixed_primes,
        "product_identity": identities,
        "root_counts": roots,
        "density_differences": density.iter().map(|&(p, r0, s, at)| json!({
            "p": p, "rho_0": r0, "sum_rho_j": s, "divides_beta_d": at,
        })).collect::<Vec<_>>(),
        "window": {
            "x": spec.x,
            "y": spec.y,
            "alpha": json_f64(spec.alpha),
            "epsilon": json_f64(spec.epsilon),
            "excluded": excluded,
            "classes": class_audit_json(&classes),
        },
    });
    out.json("audit.json", &doc)?;
    let summary = format!(
        "audit {}: N1 {}, N2 {}, N3 {}, {} record violations\n",
        if failures.is_empty() { "passed" } else { "FAILED" },
        classes.n1,
        classes.n2,
        classes.n3,
        classes.violations.len()
    );
    Ok(Report {
        summary,
        finding: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}
