//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the library's distance code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use intnet::distances::PathMetric;
use rand::Rng;

pub type RawPath = Vec<usize>;
pub type RawObs = Vec<RawPath>;

/// Longest common contiguous run, by checking every pair of start points.
pub fn lsp_brute(a: &[usize], b: &[usize]) -> usize {
    let mut best = 0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            best = best.max(k);
        }
    }
    best
}

fn is_subsequence(sub: &[usize], of: &[usize]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|x| it.any(|y| y == x))
}

/// Longest common subsequence, by trying every subsequence of `a`.
pub fn lcs_brute(a: &[usize], b: &[usize]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<usize> = (0..a.len())
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| a[i])
            .collect();
        if sub.len() > best && is_subsequence(&sub, b) {
            best = sub.len();
        }
    }
    best
}

pub fn path_dist_brute(a: &[usize], b: &[usize], kind: PathMetric) -> usize {
    let c = match kind {
        PathMetric::Lsp => lsp_brute(a, b),
        PathMetric::Lcs => lcs_brute(a, b),
    };
    a.len() + b.len() - 2 * c
}

fn bits(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Minimum over every order-preserving partial matching.
pub fn seq_dist_brute(s: &[RawPath], t: &[RawPath], kind: PathMetric) -> usize {
    let mut best = usize::MAX;
    for ms in 0u32..(1 << s.len()) {
        let is = bits(ms, s.len());
        for mt in 0u32..(1 << t.len()) {
            let it = bits(mt, t.len());
            if is.len() != it.len() {
                continue;
            }
            let mut cost = 0;
            for (&i, &j) in is.iter().zip(&it) {
                cost += path_dist_brute(&s[i], &t[j], kind);
            }
            cost += (0..s.len())
                .filter(|i| !is.contains(i))
                .map(|i| s[i].len())
                .sum::<usize>();
            cost += (0..t.len())
                .filter(|j| !it.contains(j))
                .map(|j| t[j].len())
                .sum::<usize>();
            best = best.min(cost);
        }
    }
    best
}

fn all_matchings(
    e: &[RawPath],
    f: &[RawPath],
    i: usize,
    used: &mut Vec<bool>,
    kind: PathMetric,
) -> usize {
    if i == e.len() {
        return (0..f.len()).filter(|&j| !used[j]).map(|j| f[j].len()).sum();
    }
    let mut best = e[i].len() + all_matchings(e, f, i + 1, used, kind);
    for j in 0..f.len() {
        if !used[j] {
            used[j] = true;
            let c = path_dist_brute(&e[i], &f[j], kind) + all_matchings(e, f, i + 1, used, kind);
            used[j] = false;
            best = best.min(c);
        }
    }
    best
}

/// Minimum over every partial matching, order ignored.
pub fn multiset_dist_brute(e: &[RawPath], f: &[RawPath], kind: PathMetric) -> usize {
    all_matchings(e, f, 0, &mut vec![false; f.len()], kind)
}

pub fn random_path<R: Rng>(rng: &mut R, v: usize, max_len: usize) -> RawPath {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| rng.random_range(0..v)).collect()
}

pub fn random_obs<R: Rng>(rng: &mut R, v: usize, k: usize, l: usize) -> RawObs {
    let n = rng.random_range(1..=l);
    (0..n).map(|_| random_path(rng, v, k)).collect()
}

/// Every non-empty path of length at most `k`.
pub fn all_paths(v: usize, k: usize) -> Vec<RawPath> {
    let mut out: Vec<RawPath> = Vec::new();
    let mut layer: Vec<RawPath> = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for p in &layer {
            for x in 0..v {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Every sequence of 1..=l paths.
pub fn all_sequences(v: usize, k: usize, l: usize) -> Vec<RawObs> {
    let paths = all_paths(v, k);
    let mut out = Vec::new();
    let mut layer: Vec<RawObs> = vec![vec![]];
    for _ in 0..l {
        let mut next = Vec::new();
        for s in &layer {
            for p in &paths {
                let mut t = s.clone();
                t.push(p.clone());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn sort_key(p: &RawPath) -> (usize, RawPath) {
    (p.len(), p.clone())
}

/// Paths sorted by length then entries.
pub fn canonical(obs: &RawObs) -> RawObs {
    let mut o = obs.clone();
    o.sort_by_key(sort_key);
    o
}

/// Every multiset of 1..=l paths, in canonical form.
pub fn all_multisets(v: usize, k: usize, l: usize) -> Vec<RawObs> {
    let set: BTreeSet<Vec<(usize, RawPath)>> = all_sequences(v, k, l)
        .iter()
        .map(|s| canonical(s).iter().map(sort_key).collect())
        .collect();
    set.into_iter()
        .map(|s| s.into_iter().map(|(_, p)| p).collect())
        .collect()
}

/// Normalised `exp(-gamma * d)` weights.
pub fn softmin_pmf(dists: &[usize], gamma: f64) -> Vec<f64> {
    let w: Vec<f64> = dists.iter().map(|&d| (-gamma * d as f64).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn empirical(indices: impl Iterator<Item = usize>, size: usize) -> Vec<f64> {
    let mut c = vec![0usize; size];
    let mut n = 0usize;
    for i in indices {
        c[i] += 1;
        n += 1;
    }
    c.into_iter().map(|x| x as f64 / n as f64).collect()
}
