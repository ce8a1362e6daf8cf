use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polyomega::{run, Command, Error, ExperimentConfig};

/// Joint local laws of omega over polynomial values: experiments and audits.
///
/// Settings come from `--config`, then `--set key=value`, then the explicit
/// flags; later sources win.
#[derive(Parser, Debug)]
#[command(name = "polyomega", version)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Any config key, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Polynomial system, e.g. "0,1;1,1" for X, X + 1.
    #[arg(long, global = true)]
    system: Option<String>,
    /// Window start.
    #[arg(long, global = true)]
    x: Option<String>,
    /// Window length, `full` or `auto`.
    #[arg(long, global = true)]
    y: Option<String>,
    /// Comma-separated window starts for `verify`.
    #[arg(long, global = true)]
    xs: Option<String>,
    /// Window exponent in (0, 1).
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Decomposition exponent; defaults to the midpoint of its interval.
    #[arg(long, global = true)]
    epsilon: Option<String>,
    /// Range multiplier: k_j <= R log log x.
    #[arg(long = "R", global = true)]
    r_multiplier: Option<String>,
    /// Exponent on betaD / phi_0(betaD); defaults to r.
    #[arg(long = "K", global = true)]
    k_exponent: Option<String>,
    /// Sifting limit.
    #[arg(long, global = true)]
    z: Option<String>,
    /// Sieve weight support; defaults to z.
    #[arg(long, global = true)]
    level: Option<String>,
    /// Sieve constraint T.
    #[arg(long, global = true)]
    t: Option<String>,
    /// Comma-separated `d_j`.
    #[arg(long, global = true)]
    d: Option<String>,
    /// Seed for random sieve instances.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Output directory; defaults to $POLYOMEGA_OUT_DIR, then polyomega-out.
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true)]
    threads: Option<String>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Check the system hypotheses and print its invariants.
    Validate {
        /// Reject primes dividing Q(n) for every n.
        #[arg(long)]
        strict: bool,
    },
    /// Root counts modulo 1..=m_max (CSV: modulus, count).
    Rho,
    /// Mertens-type sums and the constants M_j (CSV).
    Mertens,
    /// Joint omega histogram over (x, x + y] (CSV).
    Window {
        /// Also write one decomposition record per n.
        #[arg(long)]
        records: bool,
    },
    /// Counts against the pairwise-independence bound (JSON + CSV).
    Verify,
    /// Selberg upper bound for one instance, or a random study (CSV).
    Sieve {
        /// Run `instances` seeded random instances against exact counts.
        #[arg(long)]
        study: bool,
    },
    /// Root-count, identity and decomposition audits (JSON).
    Audit,
    /// Print the resolved configuration.
    Config,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_text(&text)?;
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    let flags = [
        ("system", &cli.system),
        ("x", &cli.x),
        ("y", &cli.y),
        ("xs", &cli.xs),
        ("alpha", &cli.alpha),
        ("epsilon", &cli.epsilon),
        ("R", &cli.r_multiplier),
        ("K", &cli.k_exponent),
        ("z", &cli.z),
        ("level", &cli.level),
        ("t", &cli.t),
        ("d", &cli.d),
        ("seed", &cli.seed),
        ("out_dir", &cli.out_dir),
        ("threads", &cli.threads),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = build_config(&cli).and_then(|cfg| {
        let cmd = match cli.command {
            Sub::Validate { strict } => Command::Validate { strict },
            Sub::Rho => Command::Rho,
            Sub::Mertens => Command::Mertens,
            Sub::Window { records } => Command::Window { records },
            Sub::Verify => Command::Verify,
            Sub::Sieve { study } => Command::Sieve { study },
            Sub::Audit => Command::Audit,
            Sub::Config => {
                let system = cfg.load_system()?;
                print!("{}", cfg.resolved(&system).emit());
                return Ok(());
            }
        };
        let outcome = run(cmd, &cfg)?;
        print!("{}", outcome.summary);
        for f in outcome.files {
            println!("wrote {}", f.display());
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.one_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
