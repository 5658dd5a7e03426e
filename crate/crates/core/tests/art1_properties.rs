mod common;

use common::{is_subset, ReferenceArt1};
use proptest::prelude::*;
use vodart::art1::{report_clusters, Art1Config, Art1Network};

fn patterns(max_n: usize, max_count: usize) -> impl Strategy<Value = (usize, Vec<Vec<u8>>)> {
    (1..=max_n).prop_flat_map(move |n| {
        let row = proptest::collection::vec(0u8..=1, n).prop_filter("nonzero", |x| x.contains(&1));
        (Just(n), proptest::collection::vec(row, 1..=max_count))
    })
}

fn fresh(n: usize, rho: f64, m: usize) -> Art1Network {
    Art1Network::new(Art1Config::new(n, rho, m)).unwrap()
}

proptest! {
    #[test]
    fn matches_reference((n, pats) in patterns(8, 6), rho_idx in 0usize..5) {
        let rho = [0.0, 0.25, 0.5, 0.75, 1.0][rho_idx];
        let mut net = fresh(n, rho, pats.len());
        let got = net.train(&pats).unwrap();

        let mut reference = ReferenceArt1::new(n, pats.len(), rho);
        let want = reference.train(&pats, 10).unwrap();

        prop_assert_eq!(&got.clusters, &want);
        prop_assert_eq!(net.prototypes(), reference.t.as_slice());
        for (row, ref_row) in net.bottom_up_rows().iter().zip(&reference.b) {
            for (a, b) in row.iter().zip(ref_row) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn commit_invariants((n, pats) in patterns(12, 20), rho in 0.0f64..=1.0) {
        let mut net = fresh(n, rho, pats.len());
        for x in &pats {
            let before: Vec<Vec<u8>> = net.prototypes().to_vec();
            let p = net.present(x).unwrap();
            let j = p.cluster;
            let t = net.prototype(j).unwrap();
            prop_assert!(t.iter().all(|&b| b <= 1));
            if j < before.len() {
                // only AND updates: the new prototype is bitwise below the old one
                prop_assert!(is_subset(t, &before[j]));
            }
            let k = t.iter().filter(|&&b| b == 1).count() as f64;
            for (&bi, &ti) in net.bottom_up(j).unwrap().iter().zip(t) {
                prop_assert_eq!(bi, f64::from(ti) / (0.5 + k));
            }
            for (other, old) in before.iter().enumerate().filter(|(o, _)| *o != j) {
                prop_assert_eq!(net.prototype(other).unwrap(), old.as_slice());
            }
        }
    }

    #[test]
    fn zero_vigilance_single_cluster((n, pats) in patterns(10, 15)) {
        let mut net = fresh(n, 0.0, pats.len());
        let a = net.train(&pats).unwrap();
        prop_assert_eq!(net.active_clusters(), 1);
        prop_assert!(a.clusters.iter().all(|&c| c == 0));
    }

    #[test]
    fn full_vigilance_joins_only_supersets((n, pats) in patterns(10, 15)) {
        let mut net = fresh(n, 1.0, pats.len());
        for x in &pats {
            let before = net.prototypes().to_vec();
            let p = net.present(x).unwrap();
            if p.cluster < before.len() {
                prop_assert!(is_subset(x, &before[p.cluster]));
            }
        }
    }

    #[test]
    fn deterministic((n, pats) in patterns(10, 12), rho in 0.0f64..=1.0) {
        let mut a = fresh(n, rho, pats.len());
        let mut b = fresh(n, rho, pats.len());
        prop_assert_eq!(a.train(&pats).unwrap(), b.train(&pats).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reports_partition_patterns((n, pats) in patterns(10, 30), rho in 0.0f64..=1.0) {
        let mut net = fresh(n, rho, pats.len());
        let a = net.train(&pats).unwrap();
        let ids: Vec<String> = (0..pats.len()).map(|i| format!("c{i}")).collect();
        let reports = report_clusters(&net, &a, &ids);
        let total: usize = reports.iter().map(|r| r.member_count).sum();
        prop_assert_eq!(total, pats.len());
        prop_assert!(reports.iter().all(|r| r.member_count >= 1));
    }
}

#[test]
fn match_values_against_elementwise_sum() {
    let mut rng = common::rng(42);
    for _ in 0..200 {
        let n = 7;
        let mut net = fresh(n, 1.0, 4);
        while net.active_clusters() < 4 {
            let x = common::nonzero_pattern(&mut rng, n, 0.5);
            let _ = net.present(&x);
        }
        let x: Vec<u8> = (0..n)
            .map(|_| u8::from(rand::Rng::random_bool(&mut rng, 0.5)))
            .collect();
        let got = net.match_values(&x).unwrap();
        for (j, v) in got.iter().enumerate() {
            let row = net.bottom_up(j).unwrap();
            let mut expect = 0.0;
            for i in 0..n {
                if x[i] == 1 {
                    expect += row[i];
                }
            }
            assert!((v - expect).abs() < 1e-15);
            assert!(*v >= 0.0);
        }
    }
}
