//! Command-line front end: `synth`, `unmix`, `eval` and `diag`.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gibbs::{mmse_estimate, run};
use crate::io::{self, RunConfig};
use crate::metrics::{diagnose, evaluate, pca_project};
use crate::model::{EndmemberMatrix, SpectralImage};
use crate::par::{self, Exec};
use crate::synth::generate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ppnmm", version, about = "Bayesian nonlinear unmixing of hyperspectral images")]
struct Cli {
    /// Worker threads for the parallel blocks (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Overrides the seed from the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scene and its ground truth.
    Synth(SynthArgs),
    /// Estimate endmembers, abundances and nonlinearity coefficients.
    Unmix(UnmixArgs),
    /// Score an unmixing result against ground truth.
    Eval(EvalArgs),
    /// Convergence diagnostics over one or more chains.
    Diag(DiagArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct UnmixArgs {
    /// `L x N` observation matrix.
    #[arg(long)]
    image: PathBuf,
    /// Number of endmembers.
    #[arg(long)]
    endmembers: usize,
    /// `L x R` endmember prior means; estimated from the image when absent.
    #[arg(long)]
    prior_means: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    truth_dir: PathBuf,
    #[arg(long)]
    result_dir: PathBuf,
    /// Defaults to the result directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Report spectral angles in degrees.
    #[arg(long)]
    degrees: bool,
}

#[derive(Debug, Args)]
struct DiagArgs {
    /// Trace files or unmix output directories.
    #[arg(long, num_args = 1.., required = true)]
    chains: Vec<PathBuf>,
    /// Report file; printed to standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    Ok(cfg)
}

fn cmd_synth(args: &SynthArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref(), seed)?;
    cfg.resolve_endmembers()?;
    let (y, truth) = generate(&cfg.synth, Exec::Parallel)?;
    io::ensure_dir(&args.out_dir)?;
    io::write_truth(&args.out_dir, y.data(), &truth, &cfg.synth)?;
    io::echo_config(&args.out_dir, &cfg, seed)
}

fn cmd_unmix(args: &UnmixArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref(), seed)?;
    let y = SpectralImage::new(io::read_matrix(&args.image)?)?;
    if let Some(p) = &args.prior_means {
        cfg.sampler.priors.mbar = Some(EndmemberMatrix::new(io::read_matrix(p)?)?);
    }
    cfg.sampler.exec = Exec::Parallel;
    let chain = run(&y, args.endmembers, &cfg.sampler)?;
    let result = mmse_estimate(&chain)?;

    let dir = &args.out_dir;
    io::ensure_dir(dir)?;
    io::write_unmix_result(dir, &result)?;
    let n = y.n_pixels();
    let (rows, cols) = if cfg.synth.n_pixels() == n {
        (cfg.synth.n_rows, cfg.synth.n_cols)
    } else {
        (1, n)
    };
    io::write_maps(dir, &result, rows, cols)?;
    io::write_chain(dir, &chain)?;
    io::echo_config(dir, &cfg, seed)
}

fn table(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn write_text(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let truth = io::read_truth(&args.truth_dir)?;
    let result = io::read_unmix_result(&args.result_dir)?;
    let y = SpectralImage::new(truth.image)?;
    let report = evaluate(&y, &truth.m_true, &truth.a_true, &result)?;
    let dir = args.out_dir.as_deref().unwrap_or(&args.result_dir);
    io::ensure_dir(dir)?;
    write_text(dir.join("eval.txt"), &report.to_key_value(args.degrees))?;

    let h = &report.b_histogram;
    write_text(
        dir.join("b_histogram.csv"),
        &table(
            &["lower", "upper", "count"],
            h.counts
                .iter()
                .enumerate()
                .map(|(i, c)| vec![h.edges[i], h.edges[i + 1], *c as f64]),
        ),
    )?;
    if let Some(b_true) = &truth.b_true {
        write_text(
            dir.join("b_scatter.csv"),
            &table(
                &["b_true", "b_hat", "p_nonzero"],
                (0..b_true.len()).map(|n| {
                    vec![b_true[n], result.b_hat.as_slice()[n], result.b_nonzero_prob[n]]
                }),
            ),
        )?;
    }

    let k = 2.min(y.n_bands()).min(y.n_pixels());
    let pca = pca_project(&y, k)?;
    let to_rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect()
    };
    let names: Vec<String> = (0..k).map(|i| format!("pc{}", i + 1)).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    write_text(
        dir.join("pca_pixels.csv"),
        &table(&header, to_rows(&pca.scores).into_iter()),
    )?;
    let aligned_hat = result.m_hat.data().select_columns(&report.permutation);
    let mut ends_header = vec!["source"];
    ends_header.extend(header.iter());
    let mut ends = to_rows(&pca.project(truth.m_true.data()))
        .into_iter()
        .map(|mut r| {
            r.insert(0, 0.0);
            r
        })
        .collect::<Vec<_>>();
    ends.extend(to_rows(&pca.project(&aligned_hat)).into_iter().map(|mut r| {
        r.insert(0, 1.0);
        r
    }));
    write_text(
        dir.join("pca_endmembers.csv"),
        &table(&ends_header, ends.into_iter()),
    )?;
    if args.out_dir.is_some() {
        let echo = args.result_dir.join(io::CONFIG_ECHO);
        if echo.exists() && dir != args.result_dir {
            fs::copy(&echo, dir.join(io::CONFIG_ECHO)).map_err(|e| Error::io(echo, e))?;
        }
    }
    Ok(())
}

fn cmd_diag(args: &DiagArgs) -> Result<()> {
    let traces = args
        .chains
        .iter()
        .map(|p| io::read_trace(p))
        .collect::<Result<Vec<_>>>()?;
    let report = diagnose(&traces)?;
    let mut text = report.to_key_value();
    for p in &report.params {
        if let Some(r) = p.psrf {
            if r > 1.2 {
                let _ = writeln!(text, "# warning: {} has psrf {r:.3}", p.name);
            }
        }
    }
    match &args.out {
        Some(p) => write_text(p.clone(), &text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Exit code for a failure.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_DATA
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Messages go to standard error.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    par::init_threads(cli.threads);
    let outcome = match &cli.command {
        Command::Synth(a) => cmd_synth(a, cli.seed),
        Command::Unmix(a) => cmd_unmix(a, cli.seed),
        Command::Eval(a) => cmd_eval(a),
        Command::Diag(a) => cmd_diag(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            exit_code(&e)
        }
    }
}
