//! Flat `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys:
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `system` | semicolon-separated ascending coefficient lists | `0,1;1,1` |
//! | `x` | window start | `100000` |
//! | `y` | window length: an integer, `full` (`y = x`) or `auto` (`ceil(x^alpha)`) | `auto` |
//! | `xs` | comma-separated window starts for `verify`, or `auto` (`[x]`) | `auto` |
//! | `alpha` | window exponent in `(0, 1)` | `0.5` |
//! | `epsilon` | decomposition exponent, or `auto` (interval midpoint) | `auto` |
//! | `R` | range multiplier: `k_j <= R log log x` | `2` |
//! | `K` | exponent on `beta D / phi_0(beta D)`, or `auto` (`r`) | `auto` |
//! | `z` | sifting limit | `10` |
//! | `level` | sieve weight support, or `auto` (`z`) | `auto` |
//! | `t` | sieve constraint `T` | `1` |
//! | `d` | comma-separated sieve constraints `d_j`, or `auto` (all 1) | `auto` |
//! | `seed` | seed for random sieve instances | `0` |
//! | `out_dir` | output directory, or `auto` (`$POLYOMEGA_OUT_DIR`, else `polyomega-out`) | `auto` |
//! | `threads` | worker threads, `0` for all cores | `0` |
//! | `instances` | random instances for `sieve --study` | `100` |
//! | `x_max` | Mertens profile range | `1000000` |
//! | `m_max` | largest modulus for `rho` | `100` |
//! | `poly` | polynomial for `rho`, or `auto` (the product `Q`) | `auto` |
//! | `scan_limit` | fixed-divisor scan bound, `0` for `g` | `0` |
//! | `c0` | warn when `x < c0 * norm(Q)` | `1` |
//! | `rankin_c` | Rankin weight constant `C` | `1` |
//! | `n2_threshold` | largest acceptable N2 count over its proxy | `1` |
//! | `records` | also write the per-`n` records file | `false` |
//! | `limit` | prime-power range of the root-count audits | `10000` |

use std::fmt::Write as _;
use std::path::PathBuf;

use polyomega_core::asymptotics::{ConstantMode, TheoremParams, YRule};
use polyomega_core::polyarith::{parse_system, validate_system};
use polyomega_core::PolySystem;

use crate::Error;

pub const OUT_DIR_ENV: &str = "POLYOMEGA_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum YSetting {
    Power,
    Full,
    Fixed(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub system: String,
    pub x: u64,
    pub y: YSetting,
    pub xs: Option<Vec<u64>>,
    pub alpha: f64,
    pub epsilon: Option<f64>,
    pub r_multiplier: f64,
    pub k_exponent: Option<f64>,
    pub z: u64,
    pub level: Option<u64>,
    pub t: u64,
    pub d: Option<Vec<u64>>,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub threads: usize,
    pub instances: usize,
    pub x_max: f64,
    pub m_max: u64,
    pub poly: Option<String>,
    pub scan_limit: u64,
    pub c0: u64,
    pub rankin_c: f64,
    pub n2_threshold: f64,
    pub records: bool,
    pub limit: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: "0,1;1,1".into(),
            x: 100_000,
            y: YSetting::Power,
            xs: None,
            alpha: 0.5,
            epsilon: None,
            r_multiplier: 2.0,
            k_exponent: None,
            z: 10,
            level: None,
            t: 1,
            d: None,
            seed: 0,
            out_dir: None,
            threads: 0,
            instances: 100,
            x_max: 1e6,
            m_max: 100,
            poly: None,
            scan_limit: 0,
            c0: 1,
            rankin_c: 1.0,
            n2_threshold: 1.0,
            records: false,
            limit: 10_000,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("invalid value {value:?} for key {key}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value.parse().map_err(|_| bad(key, value))
}

fn list(key: &str, value: &str) -> Result<Vec<u64>, Error> {
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn auto<T>(value: &str, f: impl FnOnce(&str) -> Result<T, Error>) -> Result<Option<T>, Error> {
    if value == "auto" {
        Ok(None)
    } else {
        f(value).map(Some)
    }
}

fn join(values: &[u64]) -> String {
    values.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn or_auto<T>(v: &Option<T>, f: impl Fn(&T) -> String) -> String {
    v.as_ref().map_or_else(|| "auto".into(), f)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), Error> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        match key {
            "system" => self.system = value.into(),
            "x" => self.x = num(key, value)?,
            "y" => {
                self.y = match value {
                    "auto" => YSetting::Power,
                    "full" => YSetting::Full,
                    v => YSetting::Fixed(num(key, v)?),
                }
            }
            "xs" => self.xs = auto(value, |v| list(key, v))?,
            "alpha" => self.alpha = num(key, value)?,
            "epsilon" => self.epsilon = auto(value, |v| num(key, v))?,
            "R" => self.r_multiplier = num(key, value)?,
            "K" => self.k_exponent = auto(value, |v| num(key, v))?,
            "z" => self.z = num(key, value)?,
            "level" => self.level = auto(value, |v| num(key, v))?,
            "t" => self.t = num(key, value)?,
            "d" => self.d = auto(value, |v| list(key, v))?,
            "seed" => self.seed = num(key, value)?,
            "out_dir" => self.out_dir = auto(value, |v| Ok(PathBuf::from(v)))?,
            "threads" => self.threads = num(key, value)?,
            "instances" => self.instances = num(key, value)?,
            "x_max" => self.x_max = num(key, value)?,
            "m_max" => self.m_max = num(key, value)?,
            "poly" => self.poly = auto(value, |v| Ok(v.to_string()))?,
            "scan_limit" => self.scan_limit = num(key, value)?,
            "c0" => self.c0 = num(key, value)?,
            "rankin_c" => self.rankin_c = num(key, value)?,
            "n2_threshold" => self.n2_threshold = num(key, value)?,
            "records" => self.records = num(key, value)?,
            "limit" => self.limit = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    /// Every key in a fixed order; `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let y = match self.y {
            YSetting::Power => "auto".into(),
            YSetting::Full => "full".into(),
            YSetting::Fixed(v) => v.to_string(),
        };
        let pairs: [(&str, String); 25] = [
            ("system", self.system.clone()),
            ("x", self.x.to_string()),
            ("y", y),
            ("xs", or_auto(&self.xs, |v| join(v))),
            ("alpha", self.alpha.to_string()),
            ("epsilon", or_auto(&self.epsilon, f64::to_string)),
            ("R", self.r_multiplier.to_string()),
            ("K", or_auto(&self.k_exponent, f64::to_string)),
            ("z", self.z.to_string()),
            ("level", or_auto(&self.level, u64::to_string)),
            ("t", self.t.to_string()),
            ("d", or_auto(&self.d, |v| join(v))),
            ("seed", self.seed.to_string()),
            ("out_dir", or_auto(&self.out_dir, |p| p.display().to_string())),
            ("threads", self.threads.to_string()),
            ("instances", self.instances.to_string()),
            ("x_max", self.x_max.to_string()),
            ("m_max", self.m_max.to_string()),
            ("poly", or_auto(&self.poly, String::clone)),
            ("scan_limit", self.scan_limit.to_string()),
            ("c0", self.c0.to_string()),
            ("rankin_c", self.rankin_c.to_string()),
            ("n2_threshold", self.n2_threshold.to_string()),
            ("records", self.records.to_string()),
            ("limit", self.limit.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// The validated polynomial system.
    pub fn load_system(&self) -> Result<PolySystem, Error> {
        let polys = parse_system(&self.system).map_err(|e| Error::Config(format!("system: {e}")))?;
        validate_system(polys, self.scan_limit).map_err(|e| Error::System(e.to_string()))
    }

    pub fn window_y(&self, x: u64) -> u64 {
        match self.y {
            YSetting::Power => polyomega_core::asymptotics::window_length(YRule::Power, x, self.alpha),
            YSetting::Full => x,
            YSetting::Fixed(v) => v,
        }
    }

    pub fn y_rule(&self) -> Result<YRule, Error> {
        match self.y {
            YSetting::Power => Ok(YRule::Power),
            YSetting::Full => Ok(YRule::Full),
            YSetting::Fixed(_) => Err(Error::Config("verify needs y = auto or y = full".into())),
        }
    }

    pub fn xs(&self) -> Vec<u64> {
        self.xs.clone().unwrap_or_else(|| vec![self.x])
    }

    pub fn theorem_params(&self, system: &PolySystem) -> TheoremParams {
        TheoremParams {
            k_exponent: self.k_exponent.unwrap_or(system.r() as f64),
            r_multiplier: self.r_multiplier,
            alpha: self.alpha,
            mode: ConstantMode::ReportRatio,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| {
            std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("polyomega-out"), PathBuf::from)
        })
    }

    /// Copy with every `auto` replaced by its value for `system`, as echoed
    /// in output headers.
    pub fn resolved(&self, system: &PolySystem) -> ExperimentConfig {
        let g = system.g();
        ExperimentConfig {
            system: system.spec_string(),
            xs: Some(self.xs()),
            epsilon: Some(
                self.epsilon
                    .unwrap_or_else(|| polyomega_core::window::default_epsilon(self.alpha, g)),
            ),
            k_exponent: Some(self.k_exponent.unwrap_or(system.r() as f64)),
            level: Some(self.level.unwrap_or(self.z.max(1))),
            d: Some(self.d.clone().unwrap_or_else(|| vec![1; system.r()])),
            out_dir: Some(self.out_dir()),
            poly: Some(self.poly.clone().unwrap_or_else(|| {
                system
                    .product()
                    .coeffs()
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })),
            scan_limit: if self.scan_limit == 0 {
                g as u64
            } else {
                self.scan_limit
            },
            ..self.clone()
        }
    }
}
