use proptest::prelude::*;
use splitgauntlet::corpus::{generate_synthetic, Corpus, SyntheticConfig};
use splitgauntlet::diagnostics::{a_distance_proxy, separability_probe, split_divergence};
use splitgauntlet::features::{build_vocabulary, FeatureConfig};
use splitgauntlet::splitters::{length_threshold_split, random_cv_splits, SplitManifest, SplitterConfig};

fn corpus(n: usize, seed: u64) -> Corpus {
    generate_synthetic(&SyntheticConfig {
        n_records: n,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn swapped(m: &SplitManifest) -> SplitManifest {
    let json = serde_json::json!({
        "strategy": "standard", "params": {}, "seed": null, "run_index": 0,
        "train": m.test, "dev": [], "test": m.non_test_ids(), "stats": {"test_fraction": 0.0}
    });
    SplitManifest::from_json(json.to_string().as_bytes()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn divergence_is_symmetric_in_sides(n in 30usize..200, seed in 0u64..1000) {
        let c = corpus(n, seed);
        let v = build_vocabulary(&c, &FeatureConfig::default()).unwrap();
        let m = &random_cv_splits(&c, 3, &SplitterConfig { seed, ..Default::default() }).unwrap()[0];
        let a = split_divergence(&c, m, &v).unwrap().wasserstein_train_test;
        let b = split_divergence(&c, &swapped(m), &v).unwrap().wasserstein_train_test;
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn proxy_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        prop_assume!(a < b);
        prop_assert!(a_distance_proxy(a) < a_distance_proxy(b));
    }
}

#[test]
fn probe_is_deterministic_given_seed() {
    let c = corpus(600, 1);
    let m = &random_cv_splits(&c, 5, &SplitterConfig::default()).unwrap()[0];
    let a = separability_probe(&c, m, 1000, 5, 9).unwrap();
    assert_eq!(a, separability_probe(&c, m, 1000, 5, 9).unwrap());
    assert_eq!(a.per_fold.len(), 5);
    assert!(a.n_features <= 1000);
}

#[test]
fn length_split_is_more_separable_than_random() {
    let c = corpus(2000, 4);
    let random = &random_cv_splits(&c, 10, &SplitterConfig::default()).unwrap()[0];
    let length = length_threshold_split(&c, &SplitterConfig::default()).unwrap();
    let r = separability_probe(&c, random, 1000, 5, 0).unwrap().accuracy;
    let l = separability_probe(&c, &length, 1000, 5, 0).unwrap().accuracy;
    assert!(l > r, "length {l} vs random {r}");
}
