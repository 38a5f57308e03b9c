//! Text artifacts for experiment results: per-replicate CSV, a JSON summary,
//! boxplot CSV and a console table.
//!
//! Floats are written with Rust's shortest round-trip formatting so identical
//! results always serialize to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::Serialize;

use super::stats::{boxplot_data, SummaryStats};
use super::{ExperimentResult, MethodSummary, PopulationInfo};

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `replicate,method,estimate,truth,error,N1,N2,status`, one row per replicate and method.
pub fn records_csv(res: &ExperimentResult) -> String {
    let mut out = String::from("replicate,method,estimate,truth,error,N1,N2,status\n");
    for rec in &res.records {
        for o in &rec.outcomes {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                rec.replicate,
                o.method,
                opt(o.estimate),
                opt(o.truth),
                opt(o.error),
                opt(rec.singletons),
                opt(rec.doubletons),
                o.status.code()
            )
            .expect("writing to a String");
        }
    }
    out
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    db_size: usize,
    replicates: usize,
    seed: u64,
    population: &'a PopulationInfo,
    methods: BTreeMap<String, MethodDoc<'a>>,
}

#[derive(Serialize)]
struct MethodDoc<'a> {
    n_effective: usize,
    n_excluded: usize,
    exclusions: BTreeMap<&'a str, usize>,
    estimate: &'a Option<SummaryStats>,
    truth: &'a Option<SummaryStats>,
    error: &'a Option<SummaryStats>,
}

/// Summary document keyed by method, then by series (estimate/truth/error).
pub fn summary_json(res: &ExperimentResult) -> String {
    let methods = res
        .summaries
        .iter()
        .map(|s| {
            (
                s.method.to_string(),
                MethodDoc {
                    n_effective: s.n_effective,
                    n_excluded: s.n_excluded,
                    exclusions: s.exclusions.iter().map(|(k, v)| (k.as_str(), *v)).collect(),
                    estimate: &s.estimate,
                    truth: &s.truth,
                    error: &s.error,
                },
            )
        })
        .collect();
    let doc = SummaryDoc {
        db_size: res.db_size,
        replicates: res.replicates,
        seed: res.seed,
        population: &res.population,
        methods,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("summary is serializable");
    s.push('\n');
    s
}

fn series(s: &MethodSummary, res: &ExperimentResult) -> [(&'static str, Vec<f64>); 3] {
    let mut est = Vec::new();
    let mut truth = Vec::new();
    let mut err = Vec::new();
    for rec in &res.records {
        if let Some(o) = rec.outcome(s.method) {
            if let (Some(e), Some(t), Some(d)) = (o.estimate, o.truth, o.error) {
                est.push(e);
                truth.push(t);
                err.push(d);
            }
        }
    }
    [("estimate", est), ("truth", truth), ("error", err)]
}

/// `method,series,low_whisker,q1,median,q3,high_whisker,outliers...`; outliers
/// occupy trailing columns.
pub fn boxplot_csv(res: &ExperimentResult) -> String {
    let mut out = String::from("method,series,low_whisker,q1,median,q3,high_whisker,outliers\n");
    for s in &res.summaries {
        for (name, values) in series(s, res) {
            let Ok(b) = boxplot_data(&values) else { continue };
            write!(
                out,
                "{},{},{},{},{},{},{}",
                s.method, name, b.low_whisker, b.q1, b.median, b.q3, b.high_whisker
            )
            .expect("writing to a String");
            for o in &b.outliers {
                write!(out, ",{o}").expect("writing to a String");
            }
            out.push('\n');
        }
    }
    out
}

/// Console table with the columns Min, 1st Qu., Median, Mean, 3rd Qu., Max, s.d.
pub fn summary_table(res: &ExperimentResult) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<16} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6}",
        "", "Min", "1st Qu.", "Median", "Mean", "3rd Qu.", "Max", "s.d.", "n", "excl."
    )
    .expect("writing to a String");
    for s in &res.summaries {
        for (name, stats) in [("truth", &s.truth), ("estimate", &s.estimate), ("error", &s.error)] {
            let label = format!("{} {}", s.method, name);
            match stats {
                Some(st) => writeln!(
                    out,
                    "{:<16} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8} {:>6} {:>6}",
                    label,
                    st.min,
                    st.q1,
                    st.median,
                    st.mean,
                    st.q3,
                    st.max,
                    st.sd.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}")),
                    st.n_effective,
                    st.n_excluded
                ),
                None => writeln!(out, "{label:<16} {:>8} {:>60}", "NA", s.n_excluded),
            }
            .expect("writing to a String");
        }
    }
    out
}
