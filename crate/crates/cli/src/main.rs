use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::warn;

use gatedist::experiments::{
    analyze, ensemble, scan2q, ubb_demo, write_ensemble_csv, write_scan_csv, write_ubb_csv,
    Experiment, ExperimentConfig,
};
use gatedist::io::{read_gate, MatrixFile};
use gatedist::{Error, GateFamilySpec, Result};

const EXIT_INPUT: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;

/// Distance of bipartite gates from local product unitaries, and
/// maximally entangled pairs connected by a gate.
#[derive(Debug, Parser)]
#[command(name = "gatedist", version)]
struct Cli {
    /// Defaults to the `experiment` field of `--config`.
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    args: Args,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// JSON report for one gate, read from a matrix file or built from --spec.
    Analyze {
        /// Matrix file `{"d", "re", "im"}`.
        matrix: Option<PathBuf>,
    },
    /// Write the matrix file of the gate described by --spec.
    Gen,
    /// Two-qubit Weyl chamber sweep (CSV).
    Scan2q,
    /// Diagonal, CUE and near-dual ensembles (CSV).
    Ensemble,
    /// Bell-to-Bell map on CUE gates (CSV).
    UbbDemo,
}

#[derive(Debug, clap::Args)]
struct Args {
    /// JSON experiment config; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Gate description, inline JSON or a path to a JSON file, e.g.
    /// '{"family": "frac_swap", "params": {"alpha": 0.5}, "d": 3}'.
    #[arg(long, global = true)]
    spec: Option<String>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid points per Weyl chamber axis.
    #[arg(long, global = true)]
    res: Option<usize>,
    /// Largest near-dual perturbation strength.
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Seeds per K_D solve.
    #[arg(long, global = true)]
    n_seeds: Option<usize>,
    /// Extra UBB seeds before a sample is flagged.
    #[arg(long, global = true)]
    reseeds: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit the timestamp comment from CSV output.
    #[arg(long, global = true)]
    reproducible: bool,
}

impl Args {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = self.d {
            cfg.d = d;
        }
        if let Some(n) = self.samples {
            cfg.samples = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.res {
            cfg.res = r;
        }
        if let Some(e) = self.eps {
            cfg.eps = e;
        }
        if self.tol.is_some() {
            cfg.tol = self.tol;
        }
        if self.max_iter.is_some() {
            cfg.max_iter = self.max_iter;
        }
        if self.n_seeds.is_some() {
            cfg.n_seeds = self.n_seeds;
        }
        if let Some(r) = self.reseeds {
            cfg.reseeds = r;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.reproducible |= self.reproducible;
        cfg.validate()?;
        Ok(cfg)
    }

    fn spec(&self) -> Result<Option<GateFamilySpec>> {
        let Some(raw) = &self.spec else {
            return Ok(None);
        };
        let text = if raw.trim_start().starts_with('{') {
            raw.clone()
        } else {
            fs::read_to_string(raw)?
        };
        Ok(Some(serde_json::from_str(&text)?))
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = cli.args.config()?;
    let command = match cli.command {
        Some(c) => c,
        None if cli.args.config.is_some() => match cfg.experiment {
            Experiment::Analyze => Command::Analyze { matrix: None },
            Experiment::Gen => Command::Gen,
            Experiment::Scan2q => Command::Scan2q,
            Experiment::Ensemble => Command::Ensemble,
            Experiment::UbbDemo => Command::UbbDemo,
        },
        None => return Err(Error::Domain("no command given; see --help".into())),
    };
    let out = cfg.out.as_deref();

    match command {
        Command::Analyze { matrix } => {
            let spec = cli.args.spec()?;
            let gate = match (&matrix, &spec) {
                (Some(path), None) => read_gate(path)?,
                (None, Some(s)) => s.build()?,
                _ => {
                    return Err(Error::Domain(
                        "analyze needs exactly one of a matrix file or --spec".into(),
                    ))
                }
            };
            let mut kd_opts = cfg.kd_options();
            kd_opts.seed = cfg.seed;
            let report = analyze(
                &gate,
                spec.as_ref(),
                &kd_opts,
                &cfg.ubb_options(),
                cfg.reseeds,
            )?;
            let mut w = output(out)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
            if let Some(e) = &report.ubb_error {
                warn!("{e}");
                return Ok(EXIT_CONVERGENCE);
            }
        }
        Command::Gen => {
            let spec = cli
                .args
                .spec()?
                .ok_or_else(|| Error::Domain("gen needs --spec".into()))?;
            let gate = spec.build()?;
            let mut w = output(out)?;
            serde_json::to_writer(&mut w, &MatrixFile::from_gate(&gate))?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Scan2q => {
            if cli.args.d.is_some_and(|d| d != 2) {
                return Err(Error::Domain("scan2q is defined for d = 2 only".into()));
            }
            let rows = scan2q(cfg.res)?;
            let mut w = output(out)?;
            write_scan_csv(&mut w, &rows, cfg.reproducible)?;
            w.flush()?;
        }
        Command::Ensemble => {
            let rows = ensemble(&cfg)?;
            let mut w = output(out)?;
            write_ensemble_csv(&mut w, &rows, cfg.reproducible)?;
            w.flush()?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                warn!(
                    "{failed} of {} samples failed; see the error column",
                    rows.len()
                );
            }
            let over = rows.iter().filter(|r| r.exceeds_dual_max).count();
            if over > 0 {
                warn!("{over} samples exceed the dual-unitary distance");
            }
        }
        Command::UbbDemo => {
            let runs = ubb_demo(&cfg)?;
            let mut w = output(out)?;
            write_ubb_csv(&mut w, &runs, cfg.reproducible)?;
            w.flush()?;
            let failed = runs.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                warn!(
                    "{failed} of {} runs did not converge within the reseed budget",
                    runs.len()
                );
                return Ok(EXIT_CONVERGENCE);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_convergence() {
                EXIT_CONVERGENCE
            } else {
                EXIT_INPUT
            })
        }
    }
}
