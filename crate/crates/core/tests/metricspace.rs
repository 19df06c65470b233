mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use splitgauntlet::exec::Execution;
use splitgauntlet::features::TokenDistribution;
use splitgauntlet::metricspace::{brute_force_knn, wasserstein_1d, BallTree, DistanceMatrix};

fn dist_strategy(max_support: usize, max_rank: usize) -> impl Strategy<Value = TokenDistribution> {
    prop::collection::vec((0..=max_rank, 0.01f64..1.0), 1..=max_support)
        .prop_map(|m| TokenDistribution::from_masses(m).unwrap())
}

#[test]
fn spec_example_matches_transport() {
    let u = TokenDistribution::from_masses([(0, 0.5), (4, 0.5)]).unwrap();
    let v = TokenDistribution::from_masses([(1, 0.25), (2, 0.25), (3, 0.5)]).unwrap();
    let oracle = common::transport_w1(&u, &v);
    assert_abs_diff_eq!(wasserstein_1d(&u, &v), oracle, epsilon = 1e-12);
    assert_abs_diff_eq!(oracle, 1.25, epsilon = 1e-12);
}

#[test]
fn point_masses_are_rank_distance() {
    for (a, b) in [(0, 0), (3, 10), (10, 3), (0, 999)] {
        let d = wasserstein_1d(&TokenDistribution::point_mass(a), &TokenDistribution::point_mass(b));
        assert_eq!(d, (a as f64 - b as f64).abs());
    }
}

proptest! {
    #[test]
    fn merged_cdf_equals_transport_optimum(u in dist_strategy(5, 20), v in dist_strategy(5, 20)) {
        let oracle = common::transport_w1(&u, &v);
        prop_assert!((wasserstein_1d(&u, &v) - oracle).abs() < 1e-9);
    }

    #[test]
    fn merged_cdf_equals_grid_integral(u in dist_strategy(12, 300), v in dist_strategy(12, 300)) {
        prop_assert!((wasserstein_1d(&u, &v) - common::grid_w1(&u, &v)).abs() < 1e-9);
    }

    #[test]
    fn metric_axioms(u in dist_strategy(8, 100), v in dist_strategy(8, 100), w in dist_strategy(8, 100)) {
        prop_assert_eq!(wasserstein_1d(&u, &v), wasserstein_1d(&v, &u));
        prop_assert_eq!(wasserstein_1d(&u, &u), 0.0);
        let (uv, vw, uw) = (wasserstein_1d(&u, &v), wasserstein_1d(&v, &w), wasserstein_1d(&u, &w));
        prop_assert!(uw <= uv + vw + 1e-9);
    }

    #[test]
    fn knn_matches_exhaustive_scan(
        points in prop::collection::vec(dist_strategy(4, 50), 1..120),
        leaf_size in 1usize..20,
        qi in 0usize..1000,
        k in 1usize..30,
    ) {
        let tree = BallTree::build(points.clone(), leaf_size).unwrap();
        let query = &points[qi % points.len()];
        let k = k.min(points.len());
        let got: Vec<usize> = tree.knn(query, k).unwrap().iter().map(|n| n.index).collect();
        prop_assert_eq!(got, common::exhaustive_knn(&points, query, k, None, wasserstein_1d));
        let excl = qi % points.len();
        if points.len() > 1 {
            let k = k.min(points.len() - 1);
            let got: Vec<usize> = tree.knn_excluding(query, k, Some(excl)).unwrap().iter().map(|n| n.index).collect();
            prop_assert_eq!(got, common::exhaustive_knn(&points, query, k, Some(excl), wasserstein_1d));
        }
    }

    #[test]
    fn tree_structure_invariants(points in prop::collection::vec(dist_strategy(4, 50), 1..200), leaf_size in 1usize..20) {
        let tree = BallTree::build(points.clone(), leaf_size).unwrap();
        let mut seen: Vec<usize> = tree.leaves().into_iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..points.len()).collect::<Vec<_>>());
        prop_assert_eq!(tree.radius_violations(), 0);
        let again = BallTree::build(points, leaf_size).unwrap();
        prop_assert_eq!(tree.leaves(), again.leaves());
    }
}

#[test]
fn five_hundred_points_every_point_in_one_leaf() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let points: Vec<_> = (0..500).map(|_| common::random_distribution(&mut rng, 6, 400)).collect();
    let tree = BallTree::build(points, 16).unwrap();
    let mut seen: Vec<usize> = tree.leaves().into_iter().flatten().copied().collect();
    seen.sort_unstable();
    assert_eq!(seen, (0..500).collect::<Vec<_>>());
    assert!(tree.leaves().iter().all(|l| l.len() <= 16));
}

#[test]
fn single_point_tree() {
    let tree = BallTree::build(vec![TokenDistribution::point_mass(3)], 16).unwrap();
    assert_eq!(tree.leaves(), vec![&[0usize][..]]);
    assert!(tree.knn(&TokenDistribution::point_mass(0), 2).is_err());
}

#[test]
fn duplicate_points_tie_break_by_index() {
    let p = TokenDistribution::from_masses([(1, 0.5), (5, 0.5)]).unwrap();
    let points = vec![p.clone(); 40];
    let tree = BallTree::build(points.clone(), 4).unwrap();
    let got: Vec<usize> = tree.knn(&p, 7).unwrap().iter().map(|n| n.index).collect();
    assert_eq!(got, (0..7).collect::<Vec<_>>());
    assert_eq!(brute_force_knn(&points, &p, 7, None).len(), 7);
}

#[test]
fn batch_is_schedule_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let points: Vec<_> = (0..300).map(|_| common::random_distribution(&mut rng, 5, 200)).collect();
    let tree = BallTree::build(points.clone(), 8).unwrap();
    let seq = tree.knn_batch(&points[..40], 5, Execution::Sequential).unwrap();
    let par = tree.knn_batch(&points[..40], 5, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    let m = DistanceMatrix::new(&points[..50], Execution::Parallel).unwrap();
    for i in 0..50 {
        for j in 0..50 {
            assert_eq!(m.get(i, j), wasserstein_1d(&points[i], &points[j]));
        }
    }
}
