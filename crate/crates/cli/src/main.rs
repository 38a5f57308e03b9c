//! `rarematch` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
//! 3 estimator undefined for the data, 4 model fit failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rarematch::estimate::woe_naive;
use rarematch::good_turing::{woe_gg, woe_kappa};
use rarematch::mixture::{search_models, woe_dl, CRange, EmConfig, FitError};
use rarematch::simulator::{
    boxplot_csv, records_csv, run_experiment, summary_json, summary_table, synth_population, ExperimentFile,
    MixtureSpec, SimulationError, STANDARD_POPULATION_SIZE,
};
use rarematch::{frequency_spectrum, parse_database, Database, EstimatorError, Haplotype, Method};

#[derive(Parser)]
#[command(name = "rarematch", version, about = "Weight-of-evidence estimation for rare haplotype matches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the frequency spectrum `m,N_m` of a database.
    Spectrum {
        db: PathBuf,
    },
    /// Estimate the weight of evidence for a matching profile.
    Estimate {
        #[arg(long)]
        db: PathBuf,
        /// Comma-separated alleles, e.g. `14,30,12`.
        #[arg(long)]
        profile: String,
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Fit discrete Laplace mixtures and report BIC per component count.
    FitDisclap {
        #[arg(long)]
        db: PathBuf,
        /// Write the selected model as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Accepted but unused: initialisation is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Run a Monte Carlo error experiment described by a TOML file.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Directory for records.csv, summary.json and boxplot.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a synthetic population and write it as a haplotype database.
    SynthPop {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = STANDARD_POPULATION_SIZE)]
        size: usize,
        /// TOML file with `tau`, `p` and `y`; defaults to the standard mixture.
        #[arg(long)]
        mixture: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EmArgs {
    /// Component counts to try, e.g. `1..5` or `2`.
    #[arg(long)]
    c_range: Option<CRange>,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// Fit the mixture without appending the profile to the database.
    #[arg(long)]
    no_add_profile: bool,
}

impl EmArgs {
    fn config(&self) -> EmConfig {
        EmConfig {
            max_iterations: self.max_iterations,
            rel_tol: self.rel_tol,
            c_range: self.c_range,
            add_profile_to_db: !self.no_add_profile,
        }
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        }
    }

    fn undefined(e: EstimatorError) -> Self {
        Failure {
            code: if e.is_undefined() { 3 } else { 1 },
            message: e.to_string(),
        }
    }

    fn fit(e: FitError) -> Self {
        match e {
            FitError::Config(_) | FitError::Data(_) => Failure::usage(e.to_string()),
            e => Failure {
                code: 4,
                message: e.to_string(),
            },
        }
    }

    fn simulation(e: SimulationError) -> Self {
        match e {
            SimulationError::Io { .. } => Failure { code: 2, message: e.to_string() },
            e => Failure::usage(e.to_string()),
        }
    }
}

type CmdResult = Result<String, Failure>;

fn read_database(path: &Path) -> Result<Database, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    parse_database(&text).map_err(|e| Failure::io(path, e))
}

fn cmd_spectrum(db: &Path) -> CmdResult {
    let db = read_database(db)?;
    let spec = frequency_spectrum(&db).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(spec.to_csv())
}

fn cmd_estimate(db: &Path, profile: &str, method: Method, em: &EmArgs) -> CmdResult {
    let db = read_database(db)?;
    let x: Haplotype = profile
        .parse()
        .map_err(|e| Failure::usage(format!("invalid profile: {e}")))?;
    db.check_dimension(&x).map_err(|e| Failure::usage(e.to_string()))?;
    if matches!(method, Method::Gg | Method::Kappa) && db.contains(&x) {
        return Err(Failure::usage(format!(
            "method {method} applies only to profiles absent from the database"
        )));
    }
    let estimate = match method {
        Method::Dl => {
            let cfg = em.config();
            cfg.validate().map_err(Failure::fit)?;
            woe_dl(&db, &x, &cfg).map_err(Failure::fit)?
        }
        Method::Gg | Method::Kappa => {
            let spec = frequency_spectrum(&db).map_err(|e| Failure::usage(e.to_string()))?;
            if method == Method::Gg { woe_gg(&spec) } else { woe_kappa(&spec) }.map_err(Failure::undefined)?
        }
        Method::Naive => woe_naive(&db, &x).map_err(Failure::undefined)?,
    };
    let report = serde_json::json!({
        "method": estimate.method,
        "status": "ok",
        "woe": estimate.woe,
        "lr": estimate.lr,
        "diagnostics": estimate.diagnostics,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&report).expect("report is serializable")))
}

fn cmd_fit_disclap(db: &Path, out: Option<&Path>, em: &EmArgs) -> CmdResult {
    let db = read_database(db)?;
    let cfg = em.config();
    cfg.validate().map_err(Failure::fit)?;
    let search = search_models(&db, &cfg);
    let mut text = String::new();
    writeln!(text, "{:>3} {:>14} {:>14} {:>9} {:>10}", "c", "BIC", "loglik", "converged", "iterations").unwrap();
    for (c, fit) in &search.candidates {
        match fit {
            Ok(f) => writeln!(
                text,
                "{c:>3} {:>14.4} {:>14.4} {:>9} {:>10}",
                f.bic, f.loglik, f.converged, f.iterations
            ),
            Err(e) => writeln!(text, "{c:>3} failed: {e}"),
        }
        .unwrap();
    }
    let Some(best) = search.selected() else {
        let failing: Vec<String> = search.candidates.iter().map(|(c, _)| c.to_string()).collect();
        return Err(Failure {
            code: 4,
            message: format!("{text}fit failed for c = {}", failing.join(", ")),
        });
    };
    writeln!(text, "\nselected c = {} (BIC {:.4})", best.c(), best.bic).unwrap();
    writeln!(
        text,
        "tau: {}",
        best.tau.iter().map(|t| format!("{t:.6}")).collect::<Vec<_>>().join(" ")
    )
    .unwrap();
    write!(text, "{:>5}", "locus").unwrap();
    for j in 1..=best.c() {
        write!(text, " {:>12} {:>5}", format!("p{j}"), format!("y{j}")).unwrap();
    }
    text.push('\n');
    for k in 0..best.locus_count() {
        write!(text, "{:>5}", k + 1).unwrap();
        for comp in &best.components {
            write!(text, " {:>12.6e} {:>5}", comp[k].p(), comp[k].y()).unwrap();
        }
        text.push('\n');
    }
    if let Some(path) = out {
        let doc = serde_json::to_string_pretty(best).expect("fit is serializable") + "\n";
        fs::write(path, doc).map_err(|e| Failure::io(path, e))?;
    }
    Ok(text)
}

fn cmd_simulate(config: &Path, seed: u64, out: &Path) -> CmdResult {
    let text = fs::read_to_string(config).map_err(|e| Failure::io(config, e))?;
    let base = config.parent().unwrap_or_else(|| Path::new("."));
    let cfg = ExperimentFile::parse(&text)
        .and_then(|f| f.into_config(base, Some(seed)))
        .map_err(Failure::simulation)?;
    let result = run_experiment(&cfg).map_err(Failure::simulation)?;
    let artifacts = [
        ("records.csv", records_csv(&result)),
        ("summary.json", summary_json(&result)),
        ("boxplot.csv", boxplot_csv(&result)),
    ];
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    for (name, body) in &artifacts {
        let path = out.join(name);
        fs::write(&path, body).map_err(|e| Failure::io(&path, e))?;
    }
    Ok(summary_table(&result))
}

fn cmd_synth_pop(seed: u64, size: usize, mixture: Option<&Path>, out: Option<&Path>) -> CmdResult {
    let spec = match mixture {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            toml::from_str::<MixtureSpec>(&text).map_err(|e| Failure::usage(e.to_string()))?
        }
        None => MixtureSpec::standard(),
    };
    let pop = synth_population(&spec, size, seed).map_err(Failure::simulation)?;
    let mut body = String::new();
    for (h, p) in pop.types() {
        let copies = (p * size as f64).round() as usize;
        for _ in 0..copies {
            writeln!(body, "{h}").unwrap();
        }
    }
    match out {
        Some(path) => {
            fs::write(path, &body).map_err(|e| Failure::io(path, e))?;
            Ok(String::new())
        }
        None => Ok(body),
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Spectrum { db } => cmd_spectrum(&db),
        Command::Estimate { db, profile, method, em } => cmd_estimate(&db, &profile, method, &em),
        Command::FitDisclap { db, out, em, .. } => cmd_fit_disclap(&db, out.as_deref(), &em),
        Command::Simulate { config, seed, out } => cmd_simulate(&config, seed, &out),
        Command::SynthPop { seed, size, mixture, out } => cmd_synth_pop(seed, size, mixture.as_deref(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
