//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ura_bounds::mc::suites::{collision_suite, dominance_suite, lemma2_suite, pupe_suite};
use ura_bounds::optimize::{bound_at_ebno, SearchState};
use ura_bounds::{
    ebno_sweep, find_min_ebno, pe_bound_at_power, CodebookKind, PowerParams, SystemParams, ARTIFACT_VERSION,
};

use crate::cache::{cache_key, Cache, Lookup};
use crate::config::{PowerMode, RunConfig, Suite};
use crate::error::{io_error, CliError};
use crate::output::{render_checks, render_single, render_sweep, write_file, Rendered};

/// Finite-blocklength achievability bounds for unsourced random access over
/// the Gaussian MAC.
#[derive(Debug, Parser)]
#[command(name = "ura-bounds", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound on the per-user error probability at a fixed Eb/N0.
    Bound {
        #[command(flatten)]
        common: CommonArgs,
        /// Energy per bit in dB.
        #[arg(long, value_name = "DB", allow_hyphen_values = true)]
        ebno_db: Option<String>,
        /// Fixed P'/P for Gaussian codebooks (optimized when absent).
        #[arg(long, value_name = "RATIO")]
        ratio: Option<String>,
    },
    /// Smallest Eb/N0 whose bound meets the target error probability.
    FindEbno {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Minimal Eb/N0 over a range of active-user counts.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte-Carlo validation suites.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// lemma2, dominance, pupe or collision.
        #[arg(long, value_name = "SUITE")]
        suite: Option<String>,
        /// Trials per check (0 = suite default).
        #[arg(long, value_name = "N")]
        trials: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// gaussian or binary.
    #[arg(long, value_name = "KIND")]
    pub codebook: Option<String>,
    /// Frame length (channel uses).
    #[arg(long, value_name = "N")]
    pub n: Option<String>,
    /// Payload bits per user.
    #[arg(long, value_name = "K")]
    pub k: Option<String>,
    /// Active users: a number or start:stop:step.
    #[arg(long, value_name = "KA")]
    pub ka: Option<String>,
    /// Target per-user error probability.
    #[arg(long = "pe", visible_alias = "epsilon", value_name = "EPS")]
    pub epsilon: Option<String>,
    #[arg(long, value_name = "N")]
    pub outer_max_evals: Option<String>,
    #[arg(long, value_name = "N")]
    pub inner_max_evals: Option<String>,
    #[arg(long, value_name = "TOL")]
    pub rel_tol: Option<String>,
    #[arg(long, value_name = "N")]
    pub multistarts: Option<String>,
    /// Master seed.
    #[arg(long, value_name = "SEED")]
    pub seed: Option<String>,
    #[arg(long, value_name = "DB")]
    pub bisect_tol_db: Option<String>,
    /// Worker threads (0 = all cores); never changes results.
    #[arg(long, value_name = "N")]
    pub threads: Option<String>,
    #[arg(long, value_name = "NATS")]
    pub negligible_nats: Option<String>,
    #[arg(long, value_name = "TOL")]
    pub ratio_tol: Option<String>,
    #[arg(long, value_name = "BOOL")]
    pub warm_start: Option<String>,
    /// CSV output path.
    #[arg(long, short = 'o', value_name = "PATH")]
    pub output: Option<String>,
    /// Also write the per-t breakdown here.
    #[arg(long = "per-t", value_name = "PATH")]
    pub per_t_output: Option<String>,
    /// Cache directory (default: $URA_BOUNDS_CACHE_DIR, else ~/.cache/ura-bounds).
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<String>,
    /// Neither read nor write the cache.
    #[arg(long)]
    pub no_cache: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let pairs: [(&'static str, &Option<String>); 18] = [
            ("codebook", &self.codebook),
            ("n", &self.n),
            ("k", &self.k),
            ("ka", &self.ka),
            ("epsilon", &self.epsilon),
            ("outer_max_evals", &self.outer_max_evals),
            ("inner_max_evals", &self.inner_max_evals),
            ("rel_tol", &self.rel_tol),
            ("multistarts", &self.multistarts),
            ("seed", &self.seed),
            ("bisect_tol_db", &self.bisect_tol_db),
            ("threads", &self.threads),
            ("negligible_nats", &self.negligible_nats),
            ("ratio_tol", &self.ratio_tol),
            ("warm_start", &self.warm_start),
            ("output", &self.output),
            ("per_t_output", &self.per_t_output),
            ("cache_dir", &self.cache_dir),
        ];
        let mut out: Vec<(&'static str, String)> =
            pairs.iter().filter_map(|(k, v)| v.as_ref().map(|v| (*k, v.clone()))).collect();
        if self.no_cache {
            out.push(("cache", "false".into()));
        }
        out
    }
}

/// Effective configuration: defaults, then the config file, then flags.
pub fn resolve_config(common: &CommonArgs, extra: &[(&'static str, Option<&String>)], mode: Option<PowerMode>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).map_err(|e| io_error("cannot read config", path, e))?;
        cfg.apply_text(&text)?;
    }
    for (k, v) in common.overrides() {
        cfg.set(k, &v)?;
    }
    for (k, v) in extra {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    if let Some(m) = mode {
        cfg.mode = m;
    }
    Ok(cfg)
}

/// Parse `argv` (including the program name), run, and return the exit
/// status. Errors are reported on stderr as one machine-readable line.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            let err = CliError::Usage(e.kind().to_string());
            eprintln!("{}", err.machine_line());
            return err.exit_code();
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Bound { common, ebno_db, ratio } => {
            let cfg = resolve_config(common, &[("ebno_db", ebno_db.as_ref()), ("ratio", ratio.as_ref())], Some(PowerMode::Fixed))?;
            run_bound_like("bound", &cfg)
        }
        Command::FindEbno { common } => {
            let cfg = resolve_config(common, &[], Some(PowerMode::FindMin))?;
            run_bound_like("find-ebno", &cfg)
        }
        Command::Sweep { common } => {
            let cfg = resolve_config(common, &[], Some(PowerMode::FindMin))?;
            run_bound_like("sweep", &cfg)
        }
        Command::Validate { common, suite, trials } => {
            let cfg = resolve_config(common, &[("suite", suite.as_ref()), ("trials", trials.as_ref())], None)?;
            run_validate(&cfg)
        }
    }
}

fn system_params(cfg: &RunConfig, ka: u32) -> Result<SystemParams, CliError> {
    Ok(SystemParams::new(cfg.n, cfg.k, ka, cfg.epsilon)?)
}

fn compute(command: &str, cfg: &RunConfig) -> Result<Rendered, CliError> {
    let kind = cfg.codebook;
    let settings = &cfg.settings;
    match command {
        "bound" => {
            let params = system_params(cfg, cfg.ka.start)?;
            let ebno = cfg.ebno_db.ok_or_else(|| CliError::Usage("bound needs an Eb/N0".into()))?;
            let r = match (kind, cfg.ratio) {
                (CodebookKind::Gaussian, Some(ratio)) => {
                    pe_bound_at_power(&params, &PowerParams::gaussian(&params, ebno, ratio)?, kind, settings)?
                }
                (CodebookKind::Binary, Some(_)) => {
                    return Err(CliError::Config("ratio applies to Gaussian codebooks only".into()));
                }
                (_, None) => bound_at_ebno(&params, kind, ebno, settings, &mut SearchState::default(), None)?,
            };
            render_single(command, &params, &r)
        }
        "find-ebno" => {
            let params = system_params(cfg, cfg.ka.start)?;
            let (_, r) = find_min_ebno(&params, kind, settings)?;
            render_single(command, &params, &r)
        }
        _ => {
            let template = system_params(cfg, cfg.ka.start)?;
            let points = ebno_sweep(&template, &cfg.ka.values(), kind, settings)?;
            render_sweep(&template, kind, &points)
        }
    }
}

fn run_bound_like(command: &str, cfg: &RunConfig) -> Result<(), CliError> {
    if command != "sweep" && !cfg.ka.is_single() {
        return Err(CliError::Usage(format!("{command} takes a single ka; use sweep for ranges")));
    }
    if command == "bound" && cfg.ebno_db.is_none() {
        return Err(CliError::Usage("bound needs --ebno-db (or ebno_db in the config)".into()));
    }
    if command != "bound" && (cfg.ebno_db.is_some() || cfg.ratio.is_some()) {
        return Err(CliError::Usage(format!("{command} searches Eb/N0 and P'/P itself; remove ebno_db and ratio")));
    }
    cfg.settings.validate()?;
    // reject invalid parameters before touching the cache
    for ka in [cfg.ka.start, cfg.ka.stop] {
        system_params(cfg, ka)?;
    }

    let key = cache_key(ARTIFACT_VERSION, command, &cfg.result_text());
    let cache = cfg.resolved_cache_dir().map(|d| Cache::new(d, ARTIFACT_VERSION));
    let mut rendered = None;
    if let Some(c) = &cache {
        match c.load(&key) {
            (Lookup::Hit, payload) => {
                eprintln!("info: cache hit {}", c.dir().join(format!("{key}.json")).display());
                rendered = payload;
            }
            (Lookup::Corrupt, _) => eprintln!("warning: ignoring unreadable cache record {key}"),
            (Lookup::Miss, _) => {}
        }
    }
    let rendered = match rendered {
        Some(r) => r,
        None => {
            let r = compute(command, cfg)?;
            if let Some(c) = &cache {
                if let Err(e) = c.store(&key, &r) {
                    eprintln!("warning: cache directory {} not writable ({e}); result not cached", c.dir().display());
                }
            }
            r
        }
    };
    emit(command, cfg, &rendered)?;
    if let Some(first) = rendered.failures.first() {
        return Err(CliError::Bracket(format!("{} sweep point(s) failed; first: {first}", rendered.failures.len())));
    }
    Ok(())
}

fn emit(command: &str, cfg: &RunConfig, r: &Rendered) -> Result<(), CliError> {
    write_file(&cfg.output, &r.csv)?;
    if let Some(p) = &cfg.per_t_output {
        if command == "validate" {
            eprintln!("warning: validate has no per-t output; ignoring {}", p.display());
        } else {
            write_file(p, &r.per_t_csv)?;
        }
    }
    let mut echoed = cfg.clone();
    echoed.cache_dir = cfg.resolved_cache_dir();
    let meta = format!(
        "# effective configuration of `{command}`\n# artifact_version: {ARTIFACT_VERSION}\n{}",
        echoed.to_text()
    );
    write_file(&cfg.metadata_path(), &meta)?;
    println!("{} output={}", r.summary, cfg.output.display());
    Ok(())
}

/// Desk-scale parameters for the exhaustive-decoding suite.
pub const PUPE_PARAMS: (u64, u32, u32, f64) = (100, 4, 2, 0.05);
/// `(K_a, k)` pairs of the collision suite.
pub const COLLISION_CASES: [(u32, u32); 4] = [(2, 4), (5, 8), (10, 10), (30, 12)];

fn run_validate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.settings.validate()?;
    let trials = if cfg.trials == 0 { cfg.suite.default_trials() } else { cfg.trials };
    let seed = cfg.settings.seed;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.settings.threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| -> Result<_, CliError> {
        Ok(match cfg.suite {
            Suite::Lemma2 => lemma2_suite(20, trials, seed)?,
            Suite::Dominance => dominance_suite(cfg.codebook, 50, 50, trials, seed, &cfg.settings)?,
            Suite::Pupe => {
                let (n, k, ka, eps) = PUPE_PARAMS;
                pupe_suite(cfg.codebook, &SystemParams::new(n, k, ka, eps)?, trials, seed, &cfg.settings)?
            }
            Suite::Collision => collision_suite(&COLLISION_CASES, trials, seed)?,
        })
    })?;
    let rendered = render_checks(&cfg.suite.to_string(), &rows)?;
    emit("validate", cfg, &rendered)?;
    if !rendered.failures.is_empty() {
        return Err(CliError::ValidationFailed(format!(
            "{} of {} checks outside the 3-stderr band; first: {}",
            rendered.failures.len(),
            rows.len(),
            rendered.failures[0]
        )));
    }
    Ok(())
}
