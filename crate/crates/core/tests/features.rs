use memeflow::features::{histogram, Column};
use memeflow::noise::{standard_normals, uniforms};
use memeflow::{column_entropy, triage, Dataset, FeatureLabel, TriageThresholds};
use proptest::prelude::*;

/// Naive oracle: sort, then count membership bin by bin.
fn entropy_oracle(values: &[f64], bins: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    if lo == hi {
        return 0.0;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in v {
        let mut k = ((x - lo) / width) as usize;
        if k >= bins {
            k = bins - 1;
        }
        counts[k] += 1;
    }
    let n = values.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

fn column() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, 1..300)
}

proptest! {
    #[test]
    fn entropy_is_bounded(col in column(), bins in 2usize..64) {
        let h = column_entropy(&col, bins).unwrap();
        prop_assert!(h >= 0.0 && h <= (bins as f64).log2() + 1e-12);
    }

    #[test]
    fn entropy_matches_the_oracle(seed in 0u64..10_000, n in 2usize..2000, bins in 2usize..40) {
        let col = standard_normals(seed, n);
        let h = column_entropy(&col, bins).unwrap();
        prop_assert!((h - entropy_oracle(&col, bins)).abs() < 1e-9);
    }

    #[test]
    fn entropy_ignores_affine_maps(
        seed in 0u64..10_000, a in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0], b in -100.0f64..100.0,
    ) {
        // Dyadic grid so the map introduces no rounding at bin edges.
        let col: Vec<f64> = uniforms(seed, 500).iter().map(|u| (u * 64.0).floor() / 4.0 + 0.125).collect();
        let moved: Vec<f64> = col.iter().map(|x| a * x + b).collect();
        let (h0, h1) = (column_entropy(&col, 8).unwrap(), column_entropy(&moved, 8).unwrap());
        prop_assert!((h0 - h1).abs() < 1e-9, "{h0} vs {h1}");
    }

    #[test]
    fn histogram_counts_every_sample(col in column(), bins in 2usize..64) {
        prop_assert_eq!(histogram(&col, bins).unwrap().iter().sum::<usize>(), col.len());
    }

    #[test]
    fn scores_are_per_column(seed in 0u64..10_000) {
        let a = standard_normals(seed, 200);
        let b = uniforms(seed, 200);
        let alone = triage(&Dataset::new(vec![Column::new("a", a.clone())]).unwrap(), 16, TriageThresholds::default()).unwrap();
        let with = triage(
            &Dataset::new(vec![Column::new("a", a.clone()), Column::new("b", b), Column::new("a2", a)]).unwrap(),
            16,
            TriageThresholds::default(),
        )
        .unwrap();
        prop_assert_eq!(&alone[0], &with[0]);
        prop_assert_eq!(with[0].entropy_bits, with[2].entropy_bits);
    }
}

#[test]
fn sine_wave_oracle() {
    let col: Vec<f64> = (0..1000).map(|i| (2.0 * std::f64::consts::PI * i as f64 / 1000.0).sin()).collect();
    let h = column_entropy(&col, 16).unwrap();
    assert!((h - 3.790807498460735).abs() < 1e-9, "{h}");
    let t = TriageThresholds::new(0.1, 0.97).unwrap();
    assert_eq!(t.label(h / 4.0), FeatureLabel::Meaningful);
}

#[test]
fn uniform_column_is_near_maximal() {
    let h = column_entropy(&uniforms(1, 10_000), 16).unwrap();
    assert!((h - 4.0).abs() < 0.05, "{h}");
}

#[test]
fn small_hand_cases() {
    assert_eq!(column_entropy(&[0.0, 0.0, 1.0, 1.0], 2).unwrap(), 1.0);
    assert_eq!(column_entropy(&[7.0; 10], 16).unwrap(), 0.0);
}
