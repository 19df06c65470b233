//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use splitgauntlet::features::TokenDistribution;

/// Exact transport cost between two distributions on the integers, solved as
/// a min-cost flow by successive shortest paths (Bellman-Ford on the residual
/// bipartite graph). Knows nothing about CDFs.
pub fn transport_w1(u: &TokenDistribution, v: &TokenDistribution) -> f64 {
    let (xs, a) = (u.support(), u.weights());
    let (ys, b) = (v.support(), v.weights());
    let (m, n) = (xs.len(), ys.len());
    let cost = |i: usize, j: usize| (xs[i] as f64 - ys[j] as f64).abs();
    let mut flow = vec![vec![0.0f64; n]; m];
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let eps = 1e-15;
    let mut total = 0.0;
    // Nodes: 0..m sources, m..m+n sinks. Forward arcs are uncapacitated,
    // backward arcs carry existing flow.
    loop {
        let nodes = m + n;
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev: Vec<Option<usize>> = vec![None; nodes];
        for i in 0..m {
            if supply[i] > eps {
                dist[i] = 0.0;
            }
        }
        for _ in 0..nodes {
            let mut changed = false;
            for i in 0..m {
                for j in 0..n {
                    if dist[i] + cost(i, j) < dist[m + j] - 1e-12 {
                        dist[m + j] = dist[i] + cost(i, j);
                        prev[m + j] = Some(i);
                        changed = true;
                    }
                    if flow[i][j] > eps && dist[m + j] - cost(i, j) < dist[i] - 1e-12 {
                        dist[i] = dist[m + j] - cost(i, j);
                        prev[i] = Some(m + j);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let Some(sink) = (0..n)
            .filter(|&j| demand[j] > eps && dist[m + j].is_finite())
            .min_by(|&p, &q| dist[m + p].total_cmp(&dist[m + q]))
        else {
            break;
        };
        // Walk back to find the path and its bottleneck.
        let mut path = vec![m + sink];
        let mut node = m + sink;
        while let Some(p) = prev[node] {
            path.push(p);
            node = p;
        }
        path.reverse();
        let source = path[0];
        let mut amount = supply[source].min(demand[sink]);
        for w in path.windows(2) {
            if w[0] >= m {
                amount = amount.min(flow[w[1]][w[0] - m]);
            }
        }
        for w in path.windows(2) {
            if w[0] < m {
                flow[w[0]][w[1] - m] += amount;
                total += amount * cost(w[0], w[1] - m);
            } else {
                flow[w[1]][w[0] - m] -= amount;
                total -= amount * cost(w[1], w[0] - m);
            }
        }
        supply[source] -= amount;
        demand[sink] -= amount;
        if amount <= eps {
            break;
        }
    }
    total
}

/// W1 by integrating |F − G| over unit cells between consecutive integers.
pub fn grid_w1(u: &TokenDistribution, v: &TokenDistribution) -> f64 {
    let hi = u.support().iter().chain(v.support()).copied().max().unwrap_or(0);
    let dense = |d: &TokenDistribution| {
        let mut out = vec![0.0; hi + 1];
        for (s, w) in d.support().iter().zip(d.weights()) {
            out[*s] += w;
        }
        out
    };
    let (pu, pv) = (dense(u), dense(v));
    let (mut fu, mut fv, mut total) = (0.0, 0.0, 0.0);
    for k in 0..hi {
        fu += pu[k];
        fv += pv[k];
        total += (fu - fv).abs();
    }
    total
}

pub fn random_distribution<R: Rng>(rng: &mut R, max_support: usize, max_rank: usize) -> TokenDistribution {
    let size = rng.random_range(1..=max_support);
    let masses: Vec<(usize, f64)> = (0..size)
        .map(|_| (rng.random_range(0..=max_rank), rng.random_range(0.05..1.0)))
        .collect();
    let total: f64 = masses.iter().map(|(_, w)| w).sum();
    TokenDistribution::from_masses(masses.into_iter().map(|(r, w)| (r, w / total))).unwrap()
}

/// Indices of the k nearest points under `dist`, by a full sort on
/// (distance, index).
pub fn exhaustive_knn(
    points: &[TokenDistribution],
    query: &TokenDistribution,
    k: usize,
    exclude: Option<usize>,
    dist: impl Fn(&TokenDistribution, &TokenDistribution) -> f64,
) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, p)| (dist(query, p), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Plug-in mutual information (nats) between two discrete variables.
pub fn mutual_information<A: std::hash::Hash + Eq + Clone, B: std::hash::Hash + Eq + Clone>(pairs: &[(A, B)]) -> f64 {
    let n = pairs.len() as f64;
    let mut joint: HashMap<(A, B), f64> = HashMap::new();
    let mut left: HashMap<A, f64> = HashMap::new();
    let mut right: HashMap<B, f64> = HashMap::new();
    for (a, b) in pairs {
        *joint.entry((a.clone(), b.clone())).or_default() += 1.0;
        *left.entry(a.clone()).or_default() += 1.0;
        *right.entry(b.clone()).or_default() += 1.0;
    }
    joint
        .iter()
        .map(|((a, b), c)| {
            let p = c / n;
            p * (p / ((left[a] / n) * (right[b] / n))).ln()
        })
        .sum()
}

/// Pearson chi-square statistic of a contingency table and its degrees of
/// freedom.
pub fn chi_square_independence(table: &[Vec<f64>]) -> (f64, usize) {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let n: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, o) in r.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            if e > 0.0 {
                stat += (o - e).powi(2) / e;
            }
        }
    }
    (stat, (table.len() - 1) * (table[0].len() - 1))
}

/// `P[Bin(n, 1/2) ≤ k]` by exact integer summation.
pub fn binomial_half_cdf(n: u32, k: u32) -> f64 {
    let mut c: u128 = 1;
    let mut acc: u128 = 0;
    for i in 0..=k.min(n) {
        if i > 0 {
            c = c * u128::from(n - i + 1) / u128::from(i);
        }
        acc += c;
    }
    acc as f64 / 2f64.powi(n as i32)
}

/// Central finite-difference gradient.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Pearson r from first principles (two-pass).
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
