use crate::disclap::{mle_dispersion, DiscreteLaplace};
use crate::haplotype::{Database, Haplotype};

use super::{bic_value, ln_component, log_sum_exp, pam_init, parameter_count, EmConfig, FitError, FittedMixture};

/// Total responsibility below which a component counts as empty.
const EMPTY_WEIGHT: f64 = 1e-12;

struct Params {
    tau: Vec<f64>,
    components: Vec<Vec<DiscreteLaplace>>,
}

/// Fits a `c`-component mixture by EM, starting from PAM medoids.
///
/// The E-step works in log space with per-record max subtraction. The M-step
/// is exact: `tau_j` is the mean responsibility, each `y_jk` a weighted lower
/// median and each `p_jk` the dispersion MLE for the weighted mean absolute
/// deviation around it.
pub fn em_fit(db: &Database, c: usize, cfg: &EmConfig) -> Result<FittedMixture, FitError> {
    cfg.validate()?;
    let n = db.len();
    if c == 0 || c > n {
        return Err(FitError::TooFewRecords { c, n });
    }
    let r = db.locus_count();
    let data: Vec<&[i32]> = db.records().iter().map(Haplotype::alleles).collect();
    let order: Vec<Vec<usize>> = (0..r)
        .map(|k| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by_key(|&i| data[i][k]);
            idx
        })
        .collect();

    let medoids = pam_init(db, c)?;
    let mut resp = vec![0.0; n * c];
    for (i, rec) in db.records().iter().enumerate() {
        let slot = (0..c)
            .min_by_key(|&j| rec.manhattan(&medoids[j]))
            .expect("c >= 1");
        resp[i * c + slot] = 1.0;
    }
    let mut params = m_step(&data, &order, &resp, c);

    let mut trace: Vec<f64> = Vec::new();
    let mut ln_density = vec![0.0; n];
    let mut reseeded = false;
    let mut converged = false;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let ll = e_step(&params, &data, &mut resp, &mut ln_density);

        let weights = component_weights(&resp, c);
        if let Some(j) = weights.iter().position(|&w| w < EMPTY_WEIGHT) {
            if reseeded {
                return Err(FitError::EmptyComponent { component: j });
            }
            reseeded = true;
            reseed(&mut params, j, &data, &ln_density);
            // The re-seeded start is a new EM run; the trace restarts with it.
            trace.clear();
            if iterations >= cfg.max_iterations {
                let ll = e_step(&params, &data, &mut resp, &mut ln_density);
                trace.push(ll);
                break;
            }
            continue;
        }

        trace.push(ll);
        if let [.., prev, last] = trace[..] {
            if (last - prev).abs() <= cfg.rel_tol * prev.abs() {
                converged = true;
                break;
            }
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        params = m_step(&data, &order, &resp, c);
    }

    let loglik = *trace.last().expect("at least one E-step");
    Ok(FittedMixture {
        tau: params.tau,
        components: params.components,
        loglik,
        bic: bic_value(loglik, parameter_count(c, r), n),
        loglik_trace: trace,
        n,
        converged,
        iterations,
        reseeded,
    })
}

/// Fills `resp` (row-major `n x c`) and per-record log densities; returns the
/// total log-likelihood.
fn e_step(params: &Params, data: &[&[i32]], resp: &mut [f64], ln_density: &mut [f64]) -> f64 {
    let c = params.tau.len();
    let ln_tau: Vec<f64> = params.tau.iter().map(|t| t.ln()).collect();
    let mut terms = vec![0.0; c];
    let mut total = 0.0;
    for (i, x) in data.iter().enumerate() {
        for (j, term) in terms.iter_mut().enumerate() {
            *term = ln_tau[j] + ln_component(&params.components[j], x);
        }
        let lse = log_sum_exp(&terms);
        let row = &mut resp[i * c..(i + 1) * c];
        for (w, t) in row.iter_mut().zip(&terms) {
            *w = (t - lse).exp();
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|w| *w /= s);
        ln_density[i] = lse;
        total += lse;
    }
    total
}

fn component_weights(resp: &[f64], c: usize) -> Vec<f64> {
    let mut w = vec![0.0; c];
    for row in resp.chunks_exact(c) {
        for (acc, v) in w.iter_mut().zip(row) {
            *acc += v;
        }
    }
    w
}

fn m_step(data: &[&[i32]], order: &[Vec<usize>], resp: &[f64], c: usize) -> Params {
    let n = data.len();
    let weights = component_weights(resp, c);
    let tau = weights.iter().map(|w| w / n as f64).collect();
    let components = (0..c)
        .map(|j| {
            order
                .iter()
                .enumerate()
                .map(|(k, idx)| {
                    let total = weights[j];
                    let y = weighted_lower_median(idx.iter().map(|&i| (data[i][k], resp[i * c + j])), total);
                    let mad = data
                        .iter()
                        .enumerate()
                        .map(|(i, x)| resp[i * c + j] * (i64::from(x[k]) - y).abs() as f64)
                        .sum::<f64>()
                        / total;
                    let p = mle_dispersion(mad).expect("finite non-negative deviation");
                    DiscreteLaplace::new(p, y).expect("clamped dispersion")
                })
                .collect()
        })
        .collect();
    Params { tau, components }
}

/// Smallest value whose cumulative weight reaches half the total. `sorted`
/// must be ordered by value.
fn weighted_lower_median(sorted: impl Iterator<Item = (i32, f64)>, total: f64) -> i64 {
    let half = 0.5 * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (v, w) in sorted {
        cum += w;
        last = v;
        if cum >= half && w > 0.0 {
            return i64::from(v);
        }
    }
    i64::from(last)
}

/// Moves component `j` onto the record the current model explains worst.
fn reseed(params: &mut Params, j: usize, data: &[&[i32]], ln_density: &[f64]) {
    let worst = ln_density
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty data");
    let c = params.tau.len();
    let r = data[worst].len();
    let new_comp: Vec<DiscreteLaplace> = (0..r)
        .map(|k| {
            let others: Vec<f64> = (0..c)
                .filter(|&o| o != j)
                .map(|o| params.components[o][k].p())
                .collect();
            let p = if others.is_empty() {
                0.5
            } else {
                others.iter().sum::<f64>() / others.len() as f64
            };
            DiscreteLaplace::new(p, i64::from(data[worst][k])).expect("valid dispersion")
        })
        .collect();
    params.components[j] = new_comp;
    params.tau[j] = 1.0 / data.len() as f64;
    let s: f64 = params.tau.iter().sum();
    params.tau.iter_mut().for_each(|t| *t /= s);
}
