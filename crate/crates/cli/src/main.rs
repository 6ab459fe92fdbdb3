//! `apnorm`: sweeps, certificates, verification and plot data for `‖e^{iλφ}‖_{A_p(T^m)}`.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use apnorm::acceptance;
use apnorm::growth::{fit_all, plot_data, theta_scale, SweepRow, Sweeper};
use apnorm::lower_cert::{certify, prepare, CertifyOptions, ModulusModel};
use apnorm::phases::{catalog, Phase};
use apnorm::Error;

use config::{Format, RunConfig, Settings, CACHE_ENV};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_UNRESOLVABLE: u8 = 3;
const EXIT_CERTIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "apnorm", version, about = "A_p(T^m) norms of e^{i lambda phi}: sweeps, growth fits and certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List built-in phase families and their parameters.
    Phases {
        #[arg(long)]
        json: bool,
    },
    /// Norms over a λ plan, with bounds, theory exponents and fitted growth exponents.
    Sweep(RunArgs),
    /// Lower-bound certificates from the gradient-range measure.
    Certify(RunArgs),
    /// Run the acceptance criteria.
    Verify {
        /// Also list passing checks that would fail with tolerances divided by this factor.
        #[arg(long)]
        tighten: Option<f64>,
        /// Comma-separated criterion ids; all by default.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
    },
    /// Write two-column plot data (ln λ, ln norm) and Θ reference curves.
    Export(RunArgs),
}

/// Flags mirror the config-file keys and override them.
#[derive(Args, Default)]
struct RunArgs {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    phase: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// Comma-separated exponents in [1, 2].
    #[arg(long)]
    p: Option<String>,
    /// Comma-separated values or dyadic:LO:HI.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    value: Option<String>,
    /// Integer slopes of a linear phase, comma-separated.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    /// Profile of tensor_sum: cosine or weierstrass.
    #[arg(long)]
    base: Option<String>,
    /// Fixed starting grid size per axis.
    #[arg(long)]
    grid_n: Option<String>,
    #[arg(long)]
    min_n: Option<String>,
    #[arg(long)]
    oversample: Option<String>,
    #[arg(long)]
    max_doublings: Option<String>,
    #[arg(long)]
    max_points: Option<String>,
    #[arg(long)]
    annulus_tolerance: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    cache_dir: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    plot_dir: Option<String>,
    /// Smallest λ values dropped before fitting.
    #[arg(long)]
    discard: Option<String>,
    /// Fill the certificate column of sweeps (true/false).
    #[arg(long)]
    certify: Option<String>,
    /// Concentration samples per certificate.
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings, String> {
        let mut settings = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        if let Ok(dir) = std::env::var(CACHE_ENV) {
            if !dir.is_empty() {
                settings.set("cache_dir", dir);
            }
        }
        let flags = [
            ("phase", &self.phase),
            ("m", &self.m),
            ("p", &self.p),
            ("lambda", &self.lambda),
            ("value", &self.value),
            ("k", &self.k),
            ("alpha", &self.alpha),
            ("depth", &self.depth),
            ("base", &self.base),
            ("grid_n", &self.grid_n),
            ("min_n", &self.min_n),
            ("oversample", &self.oversample),
            ("max_doublings", &self.max_doublings),
            ("max_points", &self.max_points),
            ("annulus_tolerance", &self.annulus_tolerance),
            ("workers", &self.workers),
            ("cache_dir", &self.cache_dir),
            ("out", &self.out),
            ("format", &self.format),
            ("plot_dir", &self.plot_dir),
            ("discard", &self.discard),
            ("certify", &self.certify),
            ("samples", &self.samples),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                settings.set(key, v.clone());
            }
        }
        Ok(settings)
    }

    fn resolve(&self, default_lambdas: &str) -> Result<RunConfig, Failure> {
        self.settings().and_then(|s| s.resolve(default_lambdas)).map_err(Failure::Config)
    }
}

enum Failure {
    Config(String),
    Unresolvable(String),
    Certify(String),
    Verify(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (code, kind, message) = match self {
            Failure::Config(m) => (EXIT_CONFIG, "configuration error", m),
            Failure::Unresolvable(m) => (EXIT_UNRESOLVABLE, "unresolvable grid", m),
            Failure::Certify(m) => (EXIT_CERTIFY, "certification failed", m),
            Failure::Verify(m) => (EXIT_VERIFY, "verification failed", m),
        };
        eprintln!("apnorm: {kind}: {message}");
        ExitCode::from(code)
    }
}

fn from_core(e: Error) -> Failure {
    match e {
        Error::Unresolvable { .. } => Failure::Unresolvable(e.to_string()),
        other => Failure::Config(other.to_string()),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
            }
            fs::write(p, text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_phases(json: bool) -> Result<(), Failure> {
    let families = catalog();
    if json {
        println!("{}", serde_json::to_string_pretty(&families).expect("serialisable catalog"));
        return Ok(());
    }
    for f in families {
        println!("{:<12} m={:<8} {:<10} {}", f.name, f.dimensions, f.smoothness, f.formula);
        for p in f.params {
            println!("    {:<8} {:<10} default {}", p.key, p.kind, p.default);
        }
    }
    Ok(())
}

/// `Power{a}` with `a` the gradient Hölder exponent the phase records, if it has one.
fn reference_model(phase: &Phase) -> Option<ModulusModel> {
    phase.smoothness().theory_budget(phase.m()).gradient_exponent().map(|alpha| ModulusModel::Power { alpha })
}

struct SweepOutcome {
    config: RunConfig,
    phase: Phase,
    rows: Vec<SweepRow>,
    summary: Vec<String>,
}

fn run_sweep(args: &RunArgs) -> Result<SweepOutcome, Failure> {
    let config = args.resolve("dyadic:8:256")?;
    let phase = config.plan.validate().map_err(from_core)?;
    let mut sweeper = Sweeper::new();
    if let Some(dir) = &config.cache_dir {
        sweeper = sweeper.with_cache_dir(dir);
    }
    let rows = sweeper.run(&config.plan).map_err(from_core)?;
    let model = reference_model(&phase);
    let reports: Vec<Result<_, String>> = fit_all(&rows, config.discard)
        .into_iter()
        .map(|r| {
            let mut report = r.map_err(|e| e.to_string())?;
            if let Some(model) = &model {
                // Θ is only defined past its domain edge; a failure just leaves the ratio out
                let _ = report.attach_theta(model, &rows);
            }
            Ok(report)
        })
        .collect();
    let summary = output::summary_lines(&reports, &rows);
    Ok(SweepOutcome { config, phase, rows, summary })
}

fn write_plots(outcome: &SweepOutcome, dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    let stem = format!("{}_m{}", output::slug(&outcome.phase.key()), outcome.phase.m());
    let model = reference_model(&outcome.phase);
    let mut written = Vec::new();
    for &p in &outcome.config.plan.ps {
        let path = dir.join(format!("{stem}_p{p:?}.dat"));
        emit(Some(&path), &plot_data(&outcome.rows, p))?;
        written.push(path);
        if let Some(model) = &model {
            let mut text = String::from("# ln_lambda ln_theta\n");
            for &lambda in &outcome.config.plan.lambdas {
                if let Ok(theta) = theta_scale(model, p, lambda) {
                    let value = theta.powi(outcome.phase.m() as i32);
                    text.push_str(&format!("{:?} {:?}\n", lambda.ln(), value.ln()));
                }
            }
            let path = dir.join(format!("{stem}_p{p:?}_theta.dat"));
            emit(Some(&path), &text)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn cmd_sweep(args: &RunArgs) -> Result<(), Failure> {
    let outcome = run_sweep(args)?;
    let metadata = outcome.config.metadata();
    let text = match outcome.config.format {
        Format::Csv => output::sweep_csv(&metadata, &outcome.rows, &outcome.summary),
        Format::Json => output::json("sweep", &metadata, &outcome.rows, &outcome.summary),
    };
    emit(outcome.config.out.as_deref(), &text)?;
    if let Some(dir) = &outcome.config.plot_dir {
        write_plots(&outcome, dir)?;
    }
    if outcome.config.out.is_some() {
        for line in &outcome.summary {
            eprintln!("{line}");
        }
    }
    let failed: Vec<&String> = outcome.rows.iter().filter_map(|r| r.error.as_ref()).collect();
    match failed.first() {
        Some(first) => Err(Failure::Unresolvable(format!("{} row(s) failed; first: {first}", failed.len()))),
        None => Ok(()),
    }
}

fn cmd_export(args: &RunArgs) -> Result<(), Failure> {
    let outcome = run_sweep(args)?;
    let dir = outcome.config.plot_dir.clone().unwrap_or_else(|| PathBuf::from("plots"));
    for path in write_plots(&outcome, &dir)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_certify(args: &RunArgs) -> Result<(), Failure> {
    let config = args.resolve("dyadic:16:128")?;
    let phase = config.plan.validate().map_err(from_core)?;
    let options = CertifyOptions {
        samples: config.samples,
        seed: config.seed,
        policy: config.plan.policy,
        ..CertifyOptions::default()
    };
    let setup = match prepare(&phase, &options) {
        Ok(s) => s,
        Err(Error::DegenerateGradient) => {
            return Err(Failure::Certify(format!(
                "refused for {}: the gradient range has measure 0, so the nondegenerate-gradient hypothesis fails",
                phase.key()
            )))
        }
        Err(e) => return Err(from_core(e)),
    };
    let mut certs = Vec::new();
    for &p in &config.plan.ps {
        for &lambda in &config.plan.lambdas {
            certs.push(certify(&phase, lambda, p, &setup, &options).map_err(from_core)?);
        }
    }
    let mut summary = vec![format!(
        "modulus c_fit={:?} measure={:?} cell_size={:?} alpha_fit={}",
        setup.c_fit,
        setup.range.measure,
        setup.range.cell_size,
        setup.modulus.alpha_fit.map(|a| format!("{a:?}")).unwrap_or_default()
    )];
    for &p in &config.plan.ps {
        let exponent = certs.iter().find(|c| c.p == p).and_then(|c| c.exponent);
        summary.push(format!("p={p:?} exponent={}", exponent.map(|e| format!("{e:?}")).unwrap_or_default()));
    }
    let unsound: Vec<String> =
        certs.iter().filter(|c| !c.sound).map(|c| format!("p={:?} lambda={:?}", c.p, c.lambda)).collect();
    summary.push(format!("sound={}/{}", certs.len() - unsound.len(), certs.len()));
    let metadata = config.metadata();
    let text = match config.format {
        Format::Csv => output::certificates_csv(&metadata, &certs, &summary),
        Format::Json => output::json("certify", &metadata, &certs, &summary),
    };
    emit(config.out.as_deref(), &text)?;
    if unsound.is_empty() {
        Ok(())
    } else {
        Err(Failure::Certify(format!("bound exceeds the computed norm at {}", unsound.join(", "))))
    }
}

fn cmd_verify(tighten: Option<f64>, criteria: &[u32]) -> Result<(), Failure> {
    let ids: Vec<u32> =
        if criteria.is_empty() { acceptance::CRITERIA.iter().map(|c| c.0).collect() } else { criteria.to_vec() };
    let mut failed = Vec::new();
    for id in ids {
        let report = acceptance::run(id).map_err(|e| Failure::Config(e.to_string()))?;
        println!("{}", report.detail());
        if let Some(t) = tighten {
            for c in report.marginal(t) {
                println!("    marginal: {} (ratio {:.3})", c.label, c.ratio);
            }
        }
        if !report.passed() {
            failed.push(format!("[{}] {}", report.id, report.title));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(failed.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Phases { json } => cmd_phases(*json),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Verify { tighten, criteria } => cmd_verify(*tighten, criteria),
        Command::Export(args) => cmd_export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
