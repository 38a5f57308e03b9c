//! Partitioning around medoids (BUILD + SWAP) on Manhattan distance.
//!
//! Operates on the distinct haplotypes of a database weighted by their
//! multiplicities, so the chosen medoids are always distinct. All costs are
//! integers and ties resolve to the lowest index in first-occurrence order,
//! which makes the result a deterministic function of the database order.

use crate::haplotype::{Database, Haplotype};

use super::FitError;

pub fn pam_init(db: &Database, c: usize) -> Result<Vec<Haplotype>, FitError> {
    let types = db.distinct_with_counts();
    if c == 0 || c > types.len() {
        return Err(FitError::TooManyComponents {
            c,
            available: types.len(),
        });
    }
    let n = types.len();
    let weights: Vec<u64> = types.iter().map(|&(_, w)| w as u64).collect();
    let dist: Vec<u64> = (0..n * n)
        .map(|ij| types[ij / n].0.manhattan(types[ij % n].0))
        .collect();
    let d = |i: usize, j: usize| dist[i * n + j];

    // BUILD
    let mut medoids: Vec<usize> = Vec::with_capacity(c);
    let first = (0..n)
        .min_by_key(|&j| (0..n).map(|i| weights[i] * d(i, j)).sum::<u64>())
        .expect("non-empty");
    medoids.push(first);
    let mut nearest: Vec<u64> = (0..n).map(|i| d(i, first)).collect();
    while medoids.len() < c {
        let mut best: Option<(u64, usize)> = None;
        for cand in (0..n).filter(|j| !medoids.contains(j)) {
            let gain: u64 = (0..n)
                .map(|i| weights[i] * nearest[i].saturating_sub(d(i, cand)))
                .sum();
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, cand));
            }
        }
        let (_, chosen) = best.expect("c <= distinct types");
        medoids.push(chosen);
        for (i, near) in nearest.iter_mut().enumerate() {
            *near = (*near).min(d(i, chosen));
        }
    }

    // SWAP: apply the best improving (medoid, non-medoid) exchange until none remains.
    loop {
        let (near, second) = nearest_two(&medoids, n, &d);
        let mut best: Option<(i64, usize, usize)> = None;
        for (slot, &m) in medoids.iter().enumerate() {
            for h in (0..n).filter(|h| !medoids.contains(h)) {
                let delta: i64 = (0..n)
                    .map(|i| {
                        let current = d(i, medoids[near[i]]);
                        let others = if medoids[near[i]] == m {
                            second[i]
                        } else {
                            current
                        };
                        let updated = others.min(d(i, h));
                        weights[i] as i64 * (updated as i64 - current as i64)
                    })
                    .sum();
                if delta < 0 && best.is_none_or(|(b, _, _)| delta < b) {
                    best = Some((delta, slot, h));
                }
            }
        }
        match best {
            Some((_, slot, h)) => medoids[slot] = h,
            None => break,
        }
    }

    Ok(medoids.into_iter().map(|i| types[i].0.clone()).collect())
}

/// For each point, the slot of its nearest medoid and the distance to the
/// second-nearest (`u64::MAX` when there is a single medoid).
fn nearest_two(
    medoids: &[usize],
    n: usize,
    d: &impl Fn(usize, usize) -> u64,
) -> (Vec<usize>, Vec<u64>) {
    let mut near = vec![0usize; n];
    let mut second = vec![u64::MAX; n];
    for i in 0..n {
        let mut best = u64::MAX;
        for (slot, &m) in medoids.iter().enumerate() {
            let dist = d(i, m);
            if dist < best {
                second[i] = best;
                best = dist;
                near[i] = slot;
            } else if dist < second[i] {
                second[i] = dist;
            }
        }
    }
    (near, second)
}

/// Total weighted distance of every record to its nearest medoid.
pub fn medoid_cost(db: &Database, medoids: &[Haplotype]) -> u64 {
    db.records()
        .iter()
        .map(|r| medoids.iter().map(|m| r.manhattan(m)).min().unwrap_or(0))
        .sum()
}
