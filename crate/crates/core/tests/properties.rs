mod common;

use common::*;
use intnet::assignment;
use intnet::distances::{
    common_subpath_len, common_subseq_len, multiset_distance, path_distance, seq_distance,
    steinhaus, PathMetric,
};
use intnet::graphs::{aggregate, majority_vote, rounded_mean, AggregateKind, DirectedMultigraph};
use intnet::ingest::{neighbourhood_indices, steinhaus_matrix};
use intnet::models::ModelParams;
use intnet::posterior::{
    posterior_predictive, true_predictive, PosteriorChain, PosteriorDiagnostics, PosteriorSample,
};
use intnet::{a_count, InteractionMultiset, InteractionSeq, Observation, Path, SpaceBounds};
use proptest::prelude::*;

fn path(max_v: usize, max_len: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..max_v, 1..=max_len)
}

fn obs(max_v: usize, max_len: usize, max_paths: usize) -> impl Strategy<Value = RawObs> {
    prop::collection::vec(path(max_v, max_len), 1..=max_paths)
}

fn to_paths(o: &RawObs) -> Vec<Path> {
    o.iter().map(|p| Path::new(p.clone())).collect()
}

fn metric() -> impl Strategy<Value = PathMetric> {
    prop_oneof![Just(PathMetric::Lsp), Just(PathMetric::Lcs)]
}

#[test]
fn path_distance_worked_example() {
    let a = [1, 2, 3, 4, 5, 6, 7];
    let b = [1, 2, 3, 8, 5, 0];
    assert_eq!(common_subpath_len(&a, &b), 3);
    assert_eq!(common_subseq_len(&a, &b), 4);
    assert_eq!(path_distance(&a, &b, PathMetric::Lsp), 13 - 6);
    assert_eq!(path_distance(&a, &b, PathMetric::Lcs), 13 - 8);
}

#[test]
fn sim_acceptance_ordering_factor() {
    // collapsing two distinct paths into a duplicate pair halves the number
    // of orderings
    let before = InteractionMultiset::from_vecs(vec![vec![0], vec![1]]);
    let after = InteractionMultiset::from_vecs(vec![vec![0], vec![0]]);
    assert_eq!(a_count(&before).unwrap(), 2);
    assert_eq!(a_count(&after).unwrap(), 1);
    let log_ratio = before.log_orderings() - after.log_orderings();
    assert!((log_ratio - 2f64.ln()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn inner_distances_match_brute_force(a in path(3, 6), b in path(3, 6)) {
        prop_assert_eq!(common_subpath_len(&a, &b), lsp_brute(&a, &b));
        prop_assert_eq!(common_subseq_len(&a, &b), lcs_brute(&a, &b));
    }

    #[test]
    fn collection_distances_match_brute_force(a in obs(3, 4, 4), b in obs(3, 4, 4), m in metric()) {
        prop_assert_eq!(seq_distance(&to_paths(&a), &to_paths(&b), m), seq_dist_brute(&a, &b, m));
        prop_assert_eq!(multiset_distance(&to_paths(&a), &to_paths(&b), m), multiset_dist_brute(&a, &b, m));
    }

    #[test]
    fn multiset_distance_ignores_order(a in obs(3, 4, 5), b in obs(3, 4, 5), m in metric()) {
        let mut r = a.clone();
        r.reverse();
        let d = multiset_distance(&to_paths(&a), &to_paths(&b), m);
        prop_assert_eq!(d, multiset_distance(&to_paths(&r), &to_paths(&b), m));
        prop_assert!(d <= seq_distance(&to_paths(&a), &to_paths(&b), m));
    }

    #[test]
    fn steinhaus_is_normalised(a in obs(3, 4, 4), b in obs(3, 4, 4), m in metric()) {
        let s = steinhaus(&to_paths(&a), &to_paths(&b), m).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 0.0, canonical(&a) == canonical(&b));
    }

    #[test]
    fn assignment_matches_permutations(costs in prop::collection::vec(prop::collection::vec(0i64..20, 5), 1..=5)) {
        let n = costs.len();
        let square: Vec<Vec<i64>> = costs.iter().map(|r| r[..n].to_vec()).collect();
        let (best, cols) = assignment::solve(&square);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut brute = i64::MAX;
        permute(&mut perm, 0, &mut |p| {
            brute = brute.min(p.iter().enumerate().map(|(i, &j)| square[i][j]).sum());
        });
        prop_assert_eq!(best, brute);
        prop_assert_eq!(cols.iter().enumerate().map(|(i, &j)| square[i][j]).sum::<i64>(), best);
    }

    #[test]
    fn aggregation_ignores_path_order(a in obs(4, 5, 5)) {
        let mut r = a.clone();
        r.rotate_left(1);
        let s1 = InteractionSeq::from_vecs(a.clone());
        let s2 = InteractionSeq::from_vecs(r);
        let g1 = aggregate(&s1, 4, AggregateKind::Multigraph).unwrap();
        prop_assert_eq!(&g1, &aggregate(&s2, 4, AggregateKind::Multigraph).unwrap());
        let m = InteractionMultiset::from_vecs(a.clone());
        prop_assert_eq!(&g1, &aggregate(&m, 4, AggregateKind::Multigraph).unwrap());
        let edges: usize = a.iter().map(|p| p.len() - 1).sum();
        prop_assert_eq!(g1.total() as usize, edges);
    }

    #[test]
    fn baselines_idempotent(counts in prop::collection::vec(0u64..4, 9), copies in 1usize..5) {
        let g = DirectedMultigraph::from_counts(3, counts).unwrap();
        let same = vec![g.clone(); copies];
        prop_assert_eq!(rounded_mean(&same).unwrap(), g.clone());
        let b = g.to_binary();
        prop_assert_eq!(majority_vote(&vec![b.clone(); copies]).unwrap(), b);
    }

    #[test]
    fn posterior_predictive_is_a_convex_combination(
        modes in prop::collection::vec(obs(3, 3, 3), 1..4),
        gammas in prop::collection::vec(0.1f64..4.0, 3),
        target in obs(3, 3, 3),
    ) {
        let b = SpaceBounds::new(3, 3, 3).unwrap();
        let samples: Vec<PosteriorSample<InteractionSeq>> = modes
            .iter()
            .zip(gammas.iter().cycle())
            .map(|(m, &g)| PosteriorSample { mode: InteractionSeq::from_vecs(m.clone()), gamma: g })
            .collect();
        let chain = PosteriorChain { format_version: 1, samples, diagnostics: PosteriorDiagnostics::default() };
        let t = InteractionSeq::from_vecs(target.clone());
        let pos = (0, target[0].len() - 1);
        let p = posterior_predictive(&chain, &t, pos, PathMetric::Lsp, 3).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let each: Vec<Vec<f64>> = chain.samples.iter().map(|s| {
            let params = ModelParams::new(s.mode.clone(), s.gamma, PathMetric::Lsp, b).unwrap();
            true_predictive(&params, &t, pos).unwrap()
        }).collect();
        for x in 0..3 {
            let lo = each.iter().map(|q| q[x]).fold(f64::INFINITY, f64::min);
            let hi = each.iter().map(|q| q[x]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(p[x] >= lo - 1e-12 && p[x] <= hi + 1e-12);
        }
    }

    #[test]
    fn subset_is_a_subset_of_size_m(data in prop::collection::vec(obs(3, 3, 3), 2..8), m in 1usize..8, include_self in any::<bool>()) {
        let paths: Vec<Vec<Path>> = data.iter().map(to_paths).collect();
        let dist = steinhaus_matrix(&paths, PathMetric::Lsp).unwrap();
        let n = data.len();
        match neighbourhood_indices(&dist, m, include_self) {
            Ok(idx) if m == n => prop_assert_eq!(idx, (0..n).collect::<Vec<_>>()),
            Ok(idx) => {
                prop_assert_eq!(idx.len(), m);
                prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(idx.iter().all(|&i| i < n));
                // exhaustive scoring of every centre picks the same total
                let others = if include_self { m - 1 } else { m };
                let score = |i: usize| {
                    let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist[i][j]).collect();
                    d.sort_by(|a, b| a.total_cmp(b));
                    d[..others].iter().sum::<f64>()
                };
                let best = (0..n).map(score).fold(f64::INFINITY, f64::min);
                let chosen: f64 = if include_self {
                    (0..n).filter(|c| idx.contains(c)).map(|c| {
                        idx.iter().filter(|&&j| j != c).map(|&j| dist[c][j]).sum::<f64>()
                    }).fold(f64::INFINITY, f64::min)
                } else {
                    (0..n).filter(|c| !idx.contains(c)).map(|c| {
                        idx.iter().map(|&j| dist[c][j]).sum::<f64>()
                    }).fold(f64::INFINITY, f64::min)
                };
                prop_assert!((chosen - best).abs() < 1e-9);
            }
            Err(_) => prop_assert!(m > n),
        }
    }
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}
