//! Command-line front end: `gen`, `assign`, `verify`, `oracle`, `cover`.
//!
//! Exit codes: 0 on success, 1 when a certification check fails, 2 on
//! usage, input or configuration errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::analysis::{convergence_report, oracle_min_residual, DEFAULT_ORACLE_CAP};
use crate::assignment::{certify, run_assignment, AssignConfig, DEFAULT_MAX_K};
use crate::blocking::{compute_thresholds, partition_blocks};
use crate::error::{Error, Result};
use crate::generators::{generate, Family, SequenceSpec};
use crate::geometry::{build_cone_cover, fmt_real, verify_cover, ConeCover, Vector};
use crate::io;
use crate::reduction::PairingPolicy;

pub const SEED_ENV: &str = "SIGN_BALANCE_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "sign-balance",
    version,
    about = "Choose ± signs for a vector series with decaying terms so that its block-boundary partial sums converge"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded test sequence as vector CSV.
    Gen(GenArgs),
    /// Compute a certified sign assignment for a vector CSV.
    Assign(AssignArgs),
    /// Check the Cauchy bounds of a given assignment.
    Verify(VerifyArgs),
    /// Brute-force minimum residual over all sign patterns.
    Oracle(OracleArgs),
    /// Build and verify a cone cover of R^n.
    Cover(CoverArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// harmonic_spiral | power_decay | constant_rotation | collinear | uniform_random_ball
    #[arg(long)]
    family: String,
    #[arg(long)]
    length: usize,
    /// Decay exponent p (terms scale as i^-p).
    #[arg(long, default_value_t = 1.0)]
    decay: f64,
    /// Rotation step in radians.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Norm of every constant_rotation term.
    #[arg(long, default_value_t = 1.0)]
    norm_floor: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Seed; falls back to $SIGN_BALANCE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EngineArgs {
    /// ordered | random
    #[arg(long)]
    policy: Option<String>,
    /// Seed; falls back to the config file, then $SIGN_BALANCE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Highest threshold level computed.
    #[arg(long)]
    max_k: Option<usize>,
    /// Input dimension; anything but 2 needs --cover.
    #[arg(long)]
    dim: Option<usize>,
    /// Verified cone cover file, as written by `cover`.
    #[arg(long)]
    cover: Option<PathBuf>,
    /// TOML file with keys policy, seed, dim, cover, max_k. Flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AssignArgs {
    #[arg(long)]
    input: PathBuf,
    /// Sign list output, one `+1`/`-1` per line.
    #[arg(long)]
    signs: PathBuf,
    /// Per-level block summary CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Per-term diagnostics CSV.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Reduction trace, one line per difference node.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    signs: PathBuf,
    /// Per-term diagnostics CSV.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Per-level Cauchy modulus CSV.
    #[arg(long)]
    cauchy: Option<PathBuf>,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    /// Refuse inputs longer than this.
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    cap: usize,
    /// Optional output for the minimising signs.
    #[arg(long)]
    signs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CoverArgs {
    #[arg(long)]
    dim: usize,
    /// Target covering radius in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6)]
    half_angle: f64,
    /// Sphere samples used by the greedy construction.
    #[arg(long, default_value_t = 200_000)]
    budget: usize,
    /// Seed; falls back to $SIGN_BALANCE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Independent samples used to certify the radius.
    #[arg(long, default_value_t = 1_000_000)]
    verify_samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    policy: Option<String>,
    seed: Option<u64>,
    dim: Option<usize>,
    cover: Option<PathBuf>,
    max_k: Option<usize>,
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not a u64 seed"))),
        Err(_) => Ok(None),
    }
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    match flag.or(file) {
        Some(s) => Ok(s),
        None => Ok(env_seed()?.unwrap_or(0)),
    }
}

fn ensure_distinct(paths: &[Option<&Path>]) -> Result<()> {
    let present: Vec<&Path> = paths.iter().flatten().copied().collect();
    for (i, a) in present.iter().enumerate() {
        if present[i + 1..].contains(a) {
            return Err(Error::Config(format!(
                "path {} is used for more than one file",
                a.display()
            )));
        }
    }
    Ok(())
}

impl EngineArgs {
    fn resolve(&self, input_dim: usize) -> Result<AssignConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let policy = match self.policy.as_deref().or(file.policy.as_deref()) {
            Some(p) => p.parse()?,
            None => PairingPolicy::default(),
        };
        let seed = resolve_seed(self.seed, file.seed)?;
        let max_k = self.max_k.or(file.max_k).unwrap_or(DEFAULT_MAX_K);
        let dim = self.dim.or(file.dim).unwrap_or(input_dim);
        let cover = match self.cover.as_ref().or(file.cover.as_ref()) {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Some(ConeCover::from_text(&text)?)
            }
            None => None,
        };
        match &cover {
            None if dim != 2 => {
                return Err(Error::Config(format!("--dim {dim} requires --cover")))
            }
            Some(c) if c.dim() != dim => {
                return Err(Error::Config(format!(
                    "cover is for dim {}, --dim is {dim}",
                    c.dim()
                )))
            }
            _ => {}
        }
        if dim != input_dim {
            return Err(Error::Config(format!(
                "--dim {dim} but the input vectors have dim {input_dim}"
            )));
        }
        let mut config = AssignConfig::new(policy, seed).with_max_k(max_k);
        config.cover = cover;
        Ok(config)
    }
}

fn input_dim(seq: &[Vector]) -> usize {
    seq.first().map_or(2, Vector::dim)
}

fn cmd_gen(args: GenArgs) -> Result<i32> {
    let spec = SequenceSpec {
        family: args.family.parse::<Family>()?,
        length: args.length,
        dim: args.dim,
        decay: args.decay,
        theta: args.theta,
        norm_floor: args.norm_floor,
        seed: resolve_seed(args.seed, None)?,
    };
    let seq = generate(&spec)?;
    io::write_vectors(&args.out, &seq)?;
    println!("wrote {} {} vectors to {}", seq.len(), spec.family, args.out.display());
    Ok(0)
}

fn cmd_assign(args: AssignArgs) -> Result<i32> {
    ensure_distinct(&[
        Some(&args.input),
        Some(&args.signs),
        args.summary.as_deref(),
        args.diagnostics.as_deref(),
        args.trace.as_deref(),
        args.engine.config.as_deref(),
        args.engine.cover.as_deref(),
    ])?;
    let seq = io::read_vectors(&args.input)?;
    let config = args.engine.resolve(input_dim(&seq))?;
    let run = run_assignment(&seq, &config)?;
    let signs = run.assignment.signs();

    io::write_signs(&args.signs, signs)?;
    if let Some(path) = &args.summary {
        io::write_atomic(path, &io::render_block_summary(&run.report))?;
    }
    if let Some(path) = &args.diagnostics {
        io::write_atomic(path, &io::render_diagnostics(&seq, signs, &run.report.plan)?)?;
    }
    if let Some(path) = &args.trace {
        let mut text = String::new();
        for (block, reduction) in run.report.plan.blocks.iter().zip(&run.reductions) {
            text.push_str(&format!(
                "# level={} terms={}..{}\n",
                block.level,
                block.range.start + 1,
                block.range.end
            ));
            text.push_str(&reduction.trace_lines());
        }
        io::write_atomic(path, &text)?;
    }

    let certified = certify(&run.report);
    println!(
        "terms={} prefix={} levels={} regions={} tail_bound={} certified={}",
        seq.len(),
        run.report.prefix.count,
        run.report.blocks.len(),
        run.report.region_count,
        fmt_real(run.report.tail_bound),
        certified
    );
    Ok(if certified { 0 } else { 1 })
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    ensure_distinct(&[
        Some(&args.input),
        Some(&args.signs),
        args.diagnostics.as_deref(),
        args.cauchy.as_deref(),
        args.engine.config.as_deref(),
        args.engine.cover.as_deref(),
    ])?;
    let seq = io::read_vectors(&args.input)?;
    let signs = io::read_signs(&args.signs)?;
    if signs.len() != seq.len() {
        return Err(Error::domain(format!(
            "{} vectors but {} signs",
            seq.len(),
            signs.len()
        )));
    }
    let config = args.engine.resolve(input_dim(&seq))?;
    let region_count = config.cover.as_ref().map_or(6, ConeCover::len);
    let norms: Vec<f64> = seq.iter().map(Vector::norm).collect();
    let plan = partition_blocks(seq.len(), &compute_thresholds(&norms, config.max_k)?)?;
    let report = convergence_report(&seq, &signs, &plan, region_count)?;

    if let Some(path) = &args.diagnostics {
        io::write_atomic(path, &io::render_diagnostics(&seq, &signs, &plan)?)?;
    }
    if let Some(path) = &args.cauchy {
        io::write_atomic(path, &io::render_cauchy(&report))?;
    }
    let ok = report.all_cauchy_ok();
    println!(
        "terms={} levels={} final_norm={} one_norm={} max_norm={} cauchy_ok={}",
        seq.len(),
        report.cauchy.len(),
        fmt_real(report.final_two_norm),
        fmt_real(report.final_one_norm),
        fmt_real(report.final_max_norm),
        ok
    );
    Ok(if ok { 0 } else { 1 })
}

fn cmd_oracle(args: OracleArgs) -> Result<i32> {
    if let Some(out) = &args.signs {
        ensure_distinct(&[Some(&args.input), Some(out)])?;
    }
    let seq = io::read_vectors(&args.input)?;
    let result = oracle_min_residual(&seq, args.cap)?;
    if let Some(path) = &args.signs {
        io::write_signs(path, &result.argmin_signs)?;
    }
    println!(
        "terms={} patterns={} min_residual={}",
        seq.len(),
        result.enumerated_count,
        fmt_real(result.min_residual_norm)
    );
    Ok(0)
}

fn cmd_cover(args: CoverArgs) -> Result<i32> {
    let seed = resolve_seed(args.seed, None)?;
    let mut cover = build_cone_cover(args.dim, args.half_angle, args.budget, seed)?;
    // certify on a stream the construction never saw
    let radius = verify_cover(&mut cover, args.verify_samples, seed.wrapping_add(1) ^ 0xc0ffee);
    io::write_atomic(&args.out, &cover.to_text())?;
    let ok = cover.verified_radius().is_some();
    println!(
        "dim={} centers={} half_angle={} verified_radius={} ok={}",
        cover.dim(),
        cover.len(),
        fmt_real(cover.half_angle()),
        fmt_real(radius),
        ok
    );
    Ok(if ok { 0 } else { 1 })
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Assign(a) => cmd_assign(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Cover(a) => cmd_cover(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
