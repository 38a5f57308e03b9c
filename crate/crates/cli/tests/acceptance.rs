//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rarematch::disclap::{mean_abs_deviation, mle_dispersion, DiscreteLaplace};
use rarematch::good_turing::{brenner_kappa, theta1_hat, theta2_hat, theta_exact, theta_m_hat, woe_gg, Population};
use rarematch::mixture::{em_fit, select_model, CRange, EmConfig, FittedMixture};
use rarematch::simulator::{run_experiment, ExperimentConfig, PopulationSource, STANDARD_POPULATION_SIZE};
use rarematch::{frequency_spectrum, Database, FrequencySpectrum, Haplotype, Method};

const ENUM_TOL: f64 = 1e-12;
const ENUM_BUDGET: Duration = Duration::from_secs(10);
const NORM_TOL: f64 = 1e-9;
const ROUND_TRIP_TOL: f64 = 1e-10;
const RECOVERY_TOL: f64 = 0.01;
const RECOVERY_SAMPLES: usize = 100_000;
const MONOTONE_SLACK: f64 = 1e-9;
const TV_TOL: f64 = 0.05;
const ARITH_TOL: f64 = 1e-9;
const MEAN_GG_BOUND: f64 = 0.2;
const EXPERIMENT_BUDGET: Duration = Duration::from_secs(300);
const EXPERIMENT_SEED: u64 = 2024;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn haplotype(i: usize) -> Haplotype {
    Haplotype::new(vec![i as i32]).unwrap()
}

fn population(probs: &[f64]) -> Population {
    Population::new(probs.iter().enumerate().map(|(i, &p)| (haplotype(i), p)).collect()).unwrap()
}

/// `E[stat]` over every ordered database of size `n`.
fn expectation(probs: &[f64], n: usize, stat: &dyn Fn(&FrequencySpectrum) -> f64) -> f64 {
    let s = probs.len();
    let total = s.pow(n as u32);
    (0..total)
        .map(|code| {
            let mut c = code;
            let mut weight = 1.0;
            let records = (0..n)
                .map(|_| {
                    let i = c % s;
                    c /= s;
                    weight *= probs[i];
                    haplotype(i)
                })
                .collect();
            let spec = frequency_spectrum(&Database::from_records(records).unwrap()).unwrap();
            weight * stat(&spec)
        })
        .sum()
}

fn enumeration_populations() -> Vec<Vec<f64>> {
    vec![
        vec![0.5, 0.5],
        vec![0.8, 0.2],
        vec![1.0 / 3.0; 3],
        vec![0.6, 0.3, 0.1],
        vec![0.25; 4],
        vec![0.4, 0.3, 0.2, 0.1],
    ]
}

fn unbiasedness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut cases = 0;
    for probs in enumeration_populations() {
        let pop = population(&probs);
        for n in 2..=6 {
            let e1 = expectation(&probs, n, &theta1_hat);
            let e2 = expectation(&probs, n, &|s| theta2_hat(s).unwrap());
            worst = worst
                .max((e1 - theta_exact(&pop, n, 1)).abs())
                .max((e2 - theta_exact(&pop, n, 2)).abs());
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    let msg = format!("{cases} (population, N) cases, max deviation {worst:.2e}, {elapsed:.2?}");
    if worst <= ENUM_TOL && elapsed < ENUM_BUDGET {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn theta_m_generalisation() -> Outcome {
    let mut worst = 0.0f64;
    for probs in enumeration_populations() {
        let pop = population(&probs);
        for n in 3..=6 {
            let e = expectation(&probs, n, &|s| theta_m_hat(s, 3).unwrap());
            worst = worst.max((e - theta_exact(&pop, n, 3)).abs());
        }
    }
    let msg = format!("m = 3, N = 3..6, max deviation {worst:.2e}");
    if worst <= ENUM_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn normalisation() -> Outcome {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let d = DiscreteLaplace::new(i as f64 / 10.0, 0).unwrap();
        let total: f64 = (-200..=200).map(|x| d.pmf(x)).sum();
        worst = worst.max((total - 1.0).abs());
    }
    let msg = format!("max |mass - 1| = {worst:.2e} over p = 0.1..0.9");
    if worst <= NORM_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn dispersion_round_trip() -> Outcome {
    let mut worst_rt = 0.0f64;
    let mut worst_fit = 0.0f64;
    for i in 1..=9 {
        let p = i as f64 / 10.0;
        worst_rt = worst_rt.max((mle_dispersion(mean_abs_deviation(p).unwrap()).unwrap() - p).abs());
        let d = DiscreteLaplace::new(p, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(40 + i);
        let mad = (0..RECOVERY_SAMPLES)
            .map(|_| (d.sample(&mut rng) - 12).abs() as f64)
            .sum::<f64>()
            / RECOVERY_SAMPLES as f64;
        worst_fit = worst_fit.max((mle_dispersion(mad).unwrap() - p).abs());
    }
    let msg = format!("round trip max error {worst_rt:.2e}, recovery max error {worst_fit:.4}");
    if worst_rt <= ROUND_TRIP_TOL && worst_fit <= RECOVERY_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

struct Truth {
    tau: Vec<f64>,
    comps: Vec<Vec<DiscreteLaplace>>,
}

impl Truth {
    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Database {
        let records = (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let j = self
                    .tau
                    .iter()
                    .position(|t| {
                        acc += t;
                        u < acc
                    })
                    .unwrap_or(self.tau.len() - 1);
                Haplotype::new(self.comps[j].iter().map(|d| d.sample(rng) as i32).collect()).unwrap()
            })
            .collect();
        Database::from_records(records).unwrap()
    }
}

fn em_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let (mut fits, mut failures, mut violations, mut steps) = (0, 0, 0, 0);
    while fits < 100 {
        let r = rng.gen_range(1..=4);
        let c_true = rng.gen_range(1..=3);
        let truth = Truth {
            tau: vec![1.0 / c_true as f64; c_true],
            comps: (0..c_true)
                .map(|_| {
                    (0..r)
                        .map(|_| DiscreteLaplace::new(rng.gen_range(0.05..0.8), rng.gen_range(8..32)).unwrap())
                        .collect()
                })
                .collect(),
        };
        let n = rng.gen_range(30..200);
        let db = truth.sample(n, &mut rng);
        let c = rng.gen_range(1..=4);
        match em_fit(&db, c, &EmConfig::default()) {
            Ok(fit) => {
                fits += 1;
                steps += fit.loglik_trace.len().saturating_sub(1);
                violations += fit
                    .loglik_trace
                    .windows(2)
                    .filter(|w| w[1] < w[0] - MONOTONE_SLACK)
                    .count();
            }
            Err(_) => failures += 1,
        }
    }
    let msg = format!("{fits} fits, {steps} EM steps, {violations} violations ({failures} failed fits skipped)");
    if violations == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn marginal_tv(truth: &Truth, fit: &FittedMixture, k: usize) -> f64 {
    let f = |tau: &[f64], comps: &[Vec<DiscreteLaplace>], x: i64| -> f64 {
        tau.iter().zip(comps).map(|(t, c)| t * c[k].pmf(x)).sum()
    };
    0.5 * (-300..=400)
        .map(|x| (f(&truth.tau, &truth.comps, x) - f(&fit.tau, &fit.components, x)).abs())
        .sum::<f64>()
}

fn em_bic_recovery() -> Outcome {
    let dl = |p, y| DiscreteLaplace::new(p, y).unwrap();
    let truth = Truth {
        tau: vec![0.6, 0.4],
        comps: vec![vec![dl(0.3, 10), dl(0.4, 20)], vec![dl(0.35, 16), dl(0.25, 27)]],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let db = truth.sample(2000, &mut rng);
    let cfg = EmConfig {
        c_range: Some(CRange::new(1, 5).unwrap()),
        ..EmConfig::default()
    };
    let fit = select_model(&db, &cfg).map_err(|e| e.to_string())?;
    let tv: Vec<f64> = (0..2).map(|k| marginal_tv(&truth, &fit, k)).collect();
    let msg = format!("selected c = {}, marginal TV = {:.4}, {:.4}", fit.c(), tv[0], tv[1]);
    if fit.c() == 2 && tv.iter().all(|&t| t <= TV_TOL) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gg_arithmetic() -> Outcome {
    let mut records = Vec::new();
    for i in 0..74 {
        records.push(haplotype(i));
    }
    for i in 100..106 {
        records.push(haplotype(i));
        records.push(haplotype(i));
    }
    for _ in 0..14 {
        records.push(haplotype(500));
    }
    let spec = frequency_spectrum(&Database::from_records(records).unwrap()).unwrap();
    let woe = woe_gg(&spec).map_err(|e| e.to_string())?.woe;
    let kappa = brenner_kappa(&spec).map_err(|e| e.to_string())?;
    let expected = (99.0f64 * 74.0 / 12.0).log10();
    let msg = format!(
        "woe = {woe:.7} (log10(99*74/12) = {expected:.7}; the quoted 2.78603 is not log10(610.5)), kappa = {kappa:.6}"
    );
    if (spec.n(), spec.singletons(), spec.doubletons()) == (100, 74, 6)
        && (woe - expected).abs() <= ARITH_TOL
        && (kappa - 10000.0 / 26.0).abs() <= ARITH_TOL
    {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gg_beats_dl() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::new(
        PopulationSource::Standard {
            size: STANDARD_POPULATION_SIZE,
            seed: EXPERIMENT_SEED,
        },
        EXPERIMENT_SEED,
    );
    cfg.db_size = 100;
    cfg.replicates = 500;
    cfg.methods = vec![Method::Dl, Method::Gg];
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let err = |m| res.summary(m).and_then(|s| s.error.clone());
    let (Some(dl), Some(gg)) = (err(Method::Dl), err(Method::Gg)) else {
        return Err("missing error summaries".into());
    };
    let (sd_dl, sd_gg) = (dl.sd.unwrap_or(f64::NAN), gg.sd.unwrap_or(f64::NAN));
    let msg = format!(
        "sd(e_DL) = {sd_dl:.3}, sd(e_GG) = {sd_gg:.3}, mean(e_GG) = {:.3}, n_eff DL/GG = {}/{}, {elapsed:.1?}",
        gg.mean, dl.n_effective, gg.n_effective
    );
    if sd_gg < sd_dl && gg.mean.abs() < MEAN_GG_BOUND && elapsed < EXPERIMENT_BUDGET {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn exclusion_accounting() -> Outcome {
    let mut types = vec![];
    for i in 0..4 {
        types.push((haplotype(i), 0.05));
    }
    for i in 4..804 {
        types.push((haplotype(i), 0.8 / 800.0));
    }
    let pop = Population::new(types).map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::new(PopulationSource::Explicit(pop), 31);
    cfg.db_size = 10;
    cfg.replicates = 400;
    cfg.methods = vec![Method::Gg, Method::Kappa, Method::Naive];
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let gg = res.summary(Method::Gg).ok_or("no gg summary")?;
    let balanced = res
        .summaries
        .iter()
        .all(|s| s.n_effective + s.n_excluded == cfg.replicates);
    let msg = format!(
        "M = {}, gg n_effective = {}, n_excluded = {} {:?}",
        cfg.replicates, gg.n_effective, gg.n_excluded, gg.exclusions
    );
    if balanced && gg.n_excluded > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("experiment.toml");
    fs::write(
        &cfg,
        "[population]\nsource = \"standard\"\nsize = 5000\n\n[sampling]\ndb_size = 100\nreplicates = 40\n\n[methods]\nrun = [\"dl\", \"gg\", \"kappa\", \"naive\"]\n",
    )
    .map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<std::path::PathBuf, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_rarematch"))
            .args(["simulate", cfg.to_str().unwrap(), "--seed", "77", "--out", out.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        Ok(out)
    };
    let (a, b) = (run("first")?, run("second")?);
    let mut identical = 0;
    for name in ["records.csv", "summary.json", "boxplot.csv"] {
        let (x, y) = (fs::read(a.join(name)), fs::read(b.join(name)));
        match (x, y) {
            (Ok(x), Ok(y)) if x == y => identical += 1,
            _ => return Err(format!("{name} differs between runs")),
        }
    }
    Ok(format!("{identical} of 3 output files byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("unbiasedness of theta_1 and theta_2 estimators by enumeration", unbiasedness),
        ("theta_m estimator unbiased by enumeration", theta_m_generalisation),
        ("discrete Laplace normalisation", normalisation),
        ("dispersion MLE round trip and recovery", dispersion_round_trip),
        ("EM log-likelihood monotonicity", em_monotonicity),
        ("EM/BIC recovery of a two-component mixture", em_bic_recovery),
        ("generalized Good and kappa arithmetic", gg_arithmetic),
        ("sd(e_GG) < sd(e_DL) on the standard synthetic population", gg_beats_dl),
        ("exclusion accounting", exclusion_accounting),
        ("end-to-end determinism of simulate", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
