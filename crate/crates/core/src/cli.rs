//! `pcman` command-line interface.
//!
//! Exit codes: 0 on success, 1 when an operation ran but did not reach its
//! goal, 2 on usage or input errors. Alternatives are numbered from 1.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::consistency::{consistency_index, RandomIndexTable, ACCEPTABLE};
use crate::detect::{detect_row_manipulation, DEFAULT_TOL};
use crate::error::Error;
use crate::io::{self, MatrixFormat, OutputFormat};
use crate::manip::{find_m, Algorithm, ManipulationRequest, ScaleMode, Selection};
use crate::matrix::{PcMatrix, RECIPROCITY_TOL};
use crate::montecarlo::{self, GenerationConfig};
use crate::priority::{derive, Method};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GOAL_NOT_MET: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "PCMAN_SEED";

#[derive(Debug, Parser)]
#[command(name = "pcman", version, about = "Pairwise-comparison ranking and rank-manipulation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Evm,
    Gmm,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Evm => Method::Evm,
            MethodArg::Gmm => Method::Gmm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlgoArg {
    Row,
    Matrix,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Row => Algorithm::Row,
            AlgoArg::Matrix => Algorithm::Matrix,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SelectionArg {
    Feasible,
    Fewest,
}

impl From<SelectionArg> for Selection {
    fn from(s: SelectionArg) -> Self {
        match s {
            SelectionArg::Feasible => Selection::Feasible,
            SelectionArg::Fewest => Selection::Fewest,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArg {
    /// Matrix file (`.json` for JSON, CSV otherwise; `-` reads CSV from stdin).
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print priorities and ranking positions.
    Rank {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_enum, default_value = "evm")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Print CI, CR and the reciprocity verdict.
    Check {
        #[command(flatten)]
        input: InputArg,
    },
    /// Promote alternative p over q with the row or matrix heuristic.
    Manipulate {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_enum, default_value = "matrix")]
        algo: AlgoArg,
        /// Alternative to promote (1-based)
        #[arg(long)]
        p: usize,
        /// Alternative to demote (1-based)
        #[arg(long)]
        q: usize,
        #[arg(long, value_enum, default_value = "evm")]
        method: MethodArg,
        /// First change factor of the sweep
        #[arg(long, default_value_t = 9.0)]
        alpha_start: f64,
        /// Decrement between sweep points
        #[arg(long, default_value_t = 0.1)]
        alpha_step: f64,
        /// Largest acceptable CI of the result
        #[arg(long, default_value_t = ACCEPTABLE)]
        ci_threshold: f64,
        /// Print the matrix after every step.
        #[arg(long)]
        trace: bool,
        /// Saturate new entries at the [1/9, 9] scale bounds.
        #[arg(long)]
        clamp: bool,
        /// Skip alpha values not exceeding c_pq.
        #[arg(long)]
        strict: bool,
        /// How the sweep picks among alpha values.
        #[arg(long, value_enum, default_value = "feasible")]
        selection: SelectionArg,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Look for traces of the row heuristic.
    Detect {
        #[command(flatten)]
        input: InputArg,
        /// Relative tolerance for equal ratios
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Write randomly disturbed matrices as CSV files.
    Gen {
        /// Number of alternatives
        #[arg(long)]
        n: usize,
        /// Disturbance bound; entries are scaled by a factor in [1/d, d]
        #[arg(long)]
        d: f64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, env = SEED_ENV, default_value_t = 0)]
        seed: u64,
        /// CR acceptance threshold; 0 disables the gate.
        #[arg(long, default_value_t = ACCEPTABLE)]
        cr_max: f64,
        /// Directory receiving matrix_NNN.csv files
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run a Monte Carlo experiment from a TOML config.
    Experiment {
        /// TOML experiment description
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn read_input(path: &Path) -> Result<PcMatrix, Error> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        return io::parse_matrix(&text, MatrixFormat::Csv);
    }
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    io::read_matrix(file, MatrixFormat::from_path(path))
}

fn read_text(path: &Path) -> Result<String, Error> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        return Ok(text);
    }
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Error> {
    match command {
        Command::Rank { input, method, format } => {
            let c = read_input(&input.input)?;
            let pv = derive(&c, method.into())?;
            out.write_all(io::write_priorities(&pv, format.into()).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Check { input } => cmd_check(&input.input, out),
        Command::Manipulate {
            input,
            algo,
            p,
            q,
            method,
            alpha_start,
            alpha_step,
            ci_threshold,
            trace,
            clamp,
            strict,
            selection,
            format,
        } => {
            let c = read_input(&input.input)?;
            let n = c.n();
            if p == 0 || q == 0 || p > n || q > n || p == q {
                return Err(Error::InvalidIndices { p, q, n });
            }
            let request = ManipulationRequest {
                p: p - 1,
                q: q - 1,
                algorithm: algo.into(),
                method: method.into(),
                alpha_start,
                alpha_step,
                ci_threshold,
                scale: if clamp { ScaleMode::Clamp } else { ScaleMode::Free },
                strict_alpha: strict,
                selection: selection.into(),
            };
            let result = find_m(&c, &request)?;
            let doc = io::write_result(&result, &c, p - 1, q - 1, format.into(), trace);
            out.write_all(doc.as_bytes())?;
            if !result.swapped {
                let _ = writeln!(err, "no alpha in the sweep achieved the rank swap");
            } else if !result.success {
                let _ = writeln!(err, "rank swap achieved but CI exceeds {ci_threshold}");
            }
            Ok(if result.success { EXIT_OK } else { EXIT_GOAL_NOT_MET })
        }
        Command::Detect { input, tol, format } => {
            if !(tol > 0.0) {
                return Err(Error::InvalidRequest(format!("tol must be positive, got {tol}")));
            }
            let c = read_input(&input.input)?;
            let report = detect_row_manipulation(&c, tol)?;
            out.write_all(io::write_detection(&report, format.into()).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Gen {
            n,
            d,
            count,
            seed,
            cr_max,
            out_dir,
        } => {
            let cfg = GenerationConfig {
                n,
                d,
                seed,
                acceptance: (cr_max > 0.0).then_some(cr_max),
                ..GenerationConfig::default()
            };
            cfg.validate()?;
            if cfg.acceptance.is_some() && RandomIndexTable::saaty().get(n).is_none() {
                return Err(Error::RandomIndexUnavailable(n));
            }
            fs::create_dir_all(&out_dir)?;
            let width = count.to_string().len().max(4);
            for k in 0..count {
                let mut rng = montecarlo::stream(seed, 0, k as u64);
                let c = montecarlo::generate_disturbed(&cfg, &mut rng)?;
                let path = out_dir.join(format!("matrix_{:0width$}.csv", k + 1));
                fs::write(&path, io::matrix_to_csv(&c))?;
                let _ = writeln!(out, "{} ci={:.4}", path.display(), consistency_index(&c)?);
            }
            Ok(EXIT_OK)
        }
        Command::Experiment { config, out: out_path } => {
            let text = read_text(&config)?;
            let env_seed = std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok());
            let (cfg, gen) = io::read_experiment_config(&text, env_seed)?;
            let report = montecarlo::run_experiment(&cfg, &gen)?;
            for (k, e) in &report.bucket_errors {
                let (lo, hi) = cfg.bucket_bounds(*k);
                let _ = writeln!(err, "warning: bucket [{lo:.3}, {hi:.3}): {e}");
            }
            let csv = io::experiment_csv(&report.stats);
            match out_path {
                Some(path) => fs::write(path, csv)?,
                None => out.write_all(csv.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn cmd_check(path: &Path, out: &mut dyn Write) -> Result<i32, Error> {
    let c = match read_input(path) {
        Ok(c) => c,
        Err(Error::NotReciprocal { i, j, product }) => {
            writeln!(
                out,
                "reciprocal: no (c[{},{}] * c[{},{}] = {})",
                i + 1,
                j + 1,
                j + 1,
                i + 1,
                io::format_sig(product)
            )?;
            return Ok(EXIT_USAGE);
        }
        Err(e) => return Err(e),
    };
    let n = c.n();
    let ci = consistency_index(&c)?;
    writeln!(out, "n: {n}")?;
    writeln!(out, "reciprocal: yes (max |c_ij*c_ji - 1| = {:.3e}, tol {RECIPROCITY_TOL:e})", c.reciprocity_error())?;
    writeln!(out, "CI: {}", io::format_sig(ci))?;
    match RandomIndexTable::saaty().get(n) {
        Some(ri) => {
            let cr = ci / ri;
            writeln!(out, "RI: {ri}")?;
            writeln!(out, "CR: {}", io::format_sig(cr))?;
            if cr > ACCEPTABLE {
                writeln!(out, "warning: CR exceeds {ACCEPTABLE}; matrix is too inconsistent")?;
            }
        }
        None => {
            writeln!(out, "RI: unavailable for n = {n}")?;
            writeln!(out, "CR: unavailable")?;
        }
    }
    Ok(EXIT_OK)
}
