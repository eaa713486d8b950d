//! `finimod [solve|gen|oracle]`.

use std::io::{Read, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::generator::gen_coloring;
use super::oracle::{oracle_formulas, OracleVerdict};
use super::{load, Loaded};
use crate::fcc_solver::CliqueExplain;
use crate::fmf_driver::{solve, SolveError, SolverConfig};
use crate::mbqi::InstMode;
use crate::sat_core::Verdict;

#[derive(Parser, Debug)]
#[command(name = "finimod", version, about = "Finite model finder for quantified EUF")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve a script read from a file or stdin.
    Solve(SolveArgs),
    /// Print a random graph colouring script.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Answer a script by brute-force enumeration of small models.
    Oracle {
        #[arg(long, default_value_t = 4)]
        max_card: u32,
        /// Search nodes allowed per cardinality vector.
        #[arg(long, default_value_t = 1e7)]
        limit: f64,
        file: Option<String>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mbqi {
    None,
    Full,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Explain {
    Lemma,
    Conflict,
}

#[derive(Args, Debug, Default)]
struct SolveArgs {
    #[arg(long, value_enum)]
    mbqi: Option<Mbqi>,
    #[arg(long, value_enum)]
    ematch: Option<Switch>,
    #[arg(long)]
    inst_cap: Option<usize>,
    #[arg(long, value_enum)]
    regions: Option<Switch>,
    #[arg(long, value_enum)]
    clique_explain: Option<Explain>,
    #[arg(long)]
    max_card: Option<u32>,
    /// Fixed-domain baseline encoding (ground, single sort).
    #[arg(long)]
    mace: bool,
    /// Validate sat answers by exhaustive evaluation.
    #[arg(long)]
    certify: bool,
    #[arg(long)]
    stats: bool,
    /// Seconds before giving up with "unknown".
    #[arg(long)]
    timeout: Option<f64>,
    file: Option<String>,
}

fn read_input(file: &Option<String>) -> std::io::Result<String> {
    match file {
        Some(f) if f != "-" => std::fs::read_to_string(f),
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

/// Script options first, command-line flags on top.
fn config(args: &SolveArgs, options: &[(String, String)]) -> Result<SolverConfig, String> {
    let (mut mbqi, mut ematch) = (Mbqi::Full, Switch::Off);
    let mut cfg = SolverConfig::default();
    for (k, v) in options {
        let bad = || format!("bad value {v} for option {k}");
        match k.as_str() {
            "mbqi" => mbqi = Mbqi::from_str(v, true).map_err(|_| bad())?,
            "ematch" => ematch = Switch::from_str(v, true).map_err(|_| bad())?,
            "regions" => cfg.regions = Switch::from_str(v, true).map_err(|_| bad())? == Switch::On,
            "clique-explain" => {
                cfg.clique_explain = match Explain::from_str(v, true).map_err(|_| bad())? {
                    Explain::Lemma => CliqueExplain::Lemma,
                    Explain::Conflict => CliqueExplain::Conflict,
                }
            }
            "max-card" => cfg.max_card = v.parse().map_err(|_| bad())?,
            "inst-cap" => cfg.inst_cap = v.parse().map_err(|_| bad())?,
            "mace" => cfg.mace = v.parse().map_err(|_| bad())?,
            "certify" => cfg.certify = v.parse().map_err(|_| bad())?,
            // Options meant for other tools are ignored.
            _ => {}
        }
    }
    mbqi = args.mbqi.unwrap_or(mbqi);
    ematch = args.ematch.unwrap_or(ematch);
    cfg.mode = match (mbqi, ematch) {
        (Mbqi::Full, Switch::Off) => InstMode::Mbqi,
        (Mbqi::Full, Switch::On) => InstMode::MbqiEmatch,
        (Mbqi::None, Switch::Off) => InstMode::Exhaustive,
        (Mbqi::None, Switch::On) => InstMode::ExhaustiveEmatch,
    };
    if let Some(r) = args.regions {
        cfg.regions = r == Switch::On;
    }
    if let Some(e) = args.clique_explain {
        cfg.clique_explain = match e {
            Explain::Lemma => CliqueExplain::Lemma,
            Explain::Conflict => CliqueExplain::Conflict,
        };
    }
    cfg.max_card = args.max_card.unwrap_or(cfg.max_card);
    cfg.inst_cap = args.inst_cap.unwrap_or(cfg.inst_cap);
    cfg.mace |= args.mace;
    cfg.certify |= args.certify;
    if let Some(t) = args.timeout {
        cfg.timeout = Some(Duration::from_secs_f64(t));
    }
    Ok(cfg)
}

fn run_solve(args: SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match read_input(&args.file) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let Loaded { mut store, mut problem, options, get_model, .. } = match load(&text) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let cfg = match config(&args, &options) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let res = catch_unwind(AssertUnwindSafe(|| solve(&mut store, &mut problem, &cfg)));
    let res = match res {
        Ok(Ok(r)) => r,
        Ok(Err(e @ SolveError::MaceUnsupported)) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
        Ok(Err(e)) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
        Err(_) => {
            let _ = writeln!(err, "error: solver panicked");
            return 2;
        }
    };
    let verdict = match res.verdict {
        Verdict::Sat => "sat",
        Verdict::Unsat => "unsat",
        Verdict::Unknown => "unknown",
    };
    let _ = writeln!(out, "{verdict}");
    if let (true, Some(m)) = (get_model, &res.model) {
        let _ = write!(out, "{}", m.render(&store));
    }
    if args.stats {
        for l in res.stats.lines() {
            let _ = writeln!(out, "{l}");
        }
    }
    0
}

fn run_oracle(max_card: u32, limit: f64, file: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let loaded = read_input(&file).map_err(|e| e.to_string()).and_then(|t| load(&t).map_err(|e| e.to_string()));
    let l = match loaded {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    match oracle_formulas(&l.store, &l.assertions, max_card, limit) {
        Ok(OracleVerdict::Sat(cards)) => {
            let _ = writeln!(out, "sat");
            for (s, k) in cards {
                let _ = writeln!(out, "{}={k}", l.store.sort_name(s));
            }
            0
        }
        Ok(OracleVerdict::UnsatUpTo(k)) => {
            let _ = writeln!(out, "unsat up to {k}");
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Runs the command line and returns the process exit status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match cli.cmd {
        Cmd::Solve(a) => run_solve(a, out, err),
        Cmd::Gen { n, m, seed } => match gen_coloring(n, m, seed) {
            Ok(s) => {
                let _ = write!(out, "{s}");
                0
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Cmd::Oracle { max_card, limit, file } => run_oracle(max_card, limit, file, out, err),
    }
}
