//! Library routines against slow, obviously-correct reimplementations.

use std::collections::BTreeSet;

use notobot_core::audience::{group_users, kmeans_1d, select_k, silhouette};
use notobot_core::models::{temporal_conv, ConvLayer};
use proptest::prelude::*;

/// `h_o(y) = sum_i sum_{x=1}^{k} f_oi(x) g_i(y d - x + c)` with
/// `f(x) = kernel[k - x]` and `c = k`.
fn conv_oracle(g: &[Vec<f64>], layer: &ConvLayer) -> Vec<Vec<f64>> {
    let (k, d) = (layer.width, layer.stride);
    let len = g[0].len();
    let out_len = (len - k) / d + 1;
    let mut h = vec![vec![0.0; out_len]; layer.out_channels];
    for (o, row) in h.iter_mut().enumerate() {
        for (y, cell) in row.iter_mut().enumerate() {
            let mut s = layer.bias[o];
            for (i, gi) in g.iter().enumerate() {
                for x in 1..=k {
                    let f = layer.kernel(o, i, k - x);
                    s += f * gi[y * d + k - x];
                }
            }
            *cell = s;
        }
    }
    h
}

fn silhouette_oracle(values: &[f64], labels: &[usize]) -> f64 {
    let clusters: BTreeSet<usize> = labels.iter().copied().collect();
    let n = values.len();
    let mut total = 0.0;
    for i in 0..n {
        let mean_to = |c: usize, skip_self: bool| -> (f64, usize) {
            let mut s = 0.0;
            let mut m = 0;
            for j in 0..n {
                if labels[j] == c && !(skip_self && j == i) {
                    s += (values[i] - values[j]).abs();
                    m += 1;
                }
            }
            (s, m)
        };
        let (sa, ma) = mean_to(labels[i], true);
        if ma == 0 {
            continue;
        }
        let a = sa / ma as f64;
        let b = clusters
            .iter()
            .filter(|&&c| c != labels[i])
            .map(|&c| {
                let (s, m) = mean_to(c, false);
                s / m as f64
            })
            .fold(f64::INFINITY, f64::min);
        if a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}

fn conv_case() -> impl Strategy<Value = (Vec<Vec<f64>>, ConvLayer)> {
    (1usize..4, 1usize..4, 1usize..5, 1usize..3, 0usize..10).prop_flat_map(
        |(cin, cout, k, d, extra)| {
            let len = k + extra;
            (
                prop::collection::vec(prop::collection::vec(-3.0f64..3.0, len), cin),
                prop::collection::vec(-2.0f64..2.0, cout * cin * k),
                prop::collection::vec(-1.0f64..1.0, cout),
            )
                .prop_map(move |(g, w, b)| {
                    let mut layer = ConvLayer::zeros(cin, cout, k, d);
                    layer.weights = w;
                    layer.bias = b;
                    (g, layer)
                })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn temporal_conv_matches_triple_loop((g, layer) in conv_case()) {
        let got = temporal_conv(&g, &layer).unwrap();
        let want = conv_oracle(&g, &layer);
        prop_assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().flatten().zip(want.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn silhouette_matches_pairwise(
        pts in prop::collection::vec((-100.0f64..100.0, 0usize..5), 2..200)
    ) {
        let values: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let labels: Vec<usize> = pts.iter().map(|p| p.1).collect();
        prop_assume!(labels.iter().collect::<BTreeSet<_>>().len() >= 2);
        let got = silhouette(&values, &labels).unwrap();
        prop_assert!((got - silhouette_oracle(&values, &labels)).abs() <= 1e-9);
    }

    #[test]
    fn group_users_matches_pairwise(
        tuples in prop::collection::vec(prop::collection::vec(0usize..3, 9), 1..200)
    ) {
        let g = group_users(&tuples, 9).unwrap();
        for i in 0..tuples.len() {
            for j in 0..tuples.len() {
                prop_assert_eq!(g[i] == g[j], tuples[i] == tuples[j]);
            }
        }
        // First-seen numbering.
        let mut next = 0;
        for &id in &g {
            prop_assert!(id <= next);
            if id == next {
                next += 1;
            }
        }
    }

    #[test]
    fn chosen_k_maximizes_oracle_silhouette(
        centers in prop::collection::btree_set(0i32..20, 2..5),
        spread in prop::collection::vec(-0.05f64..0.05, 24),
        seed in any::<u64>(),
    ) {
        let centers: Vec<f64> = centers.into_iter().map(|c| f64::from(c) * 10.0).collect();
        let values: Vec<f64> = spread
            .iter()
            .enumerate()
            .map(|(i, s)| centers[i % centers.len()] + s)
            .collect();
        let sel = select_k(&values, 2..=8, 5, seed).unwrap();
        prop_assert_eq!(sel.k, centers.len());
        prop_assert!((sel.silhouette - silhouette_oracle(&values, &sel.fit.assignments)).abs() < 1e-9);
        let direct = kmeans_1d(&values, sel.k, 5, seed.wrapping_add(sel.k as u64)).unwrap();
        prop_assert_eq!(direct, sel.fit);
    }
}
