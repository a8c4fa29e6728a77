mod common;

use lcvs::eval::{corpus_report, default_thresholds, match_boundaries, prf, Prf};
use lcvs::rng::SplitMix64;
use lcvs::training::{bce_loss, soft_labels, SoftLabelConfig};
use lcvs::BoundaryAnnotation;
use proptest::prelude::*;

use common::brute_force_matching;

#[test]
fn matching_equals_brute_force_on_1000_instances() {
    let mut rng = SplitMix64::new(8);
    for i in 0..1000 {
        let len_s = 1.0 + rng.next_f64() * 9.0;
        let np = rng.range_inclusive(0, 6) as usize;
        let ng = rng.range_inclusive(0, 6) as usize;
        let preds: Vec<f64> = (0..np).map(|_| rng.next_f64() * len_s).collect();
        let gts: Vec<f64> = (0..ng).map(|_| rng.next_f64() * len_s).collect();
        let thr = [0.05, 0.1, 0.25, 0.5][i % 4];
        assert_eq!(
            match_boundaries(&preds, &gts, len_s, thr).unwrap(),
            brute_force_matching(&preds, &gts, len_s, thr),
            "instance {i}: {preds:?} {gts:?}"
        );
    }
}

#[test]
fn greedy_would_undercount_here() {
    // p0 can reach both; p1 only g0. A maximum matching pairs p0–g1, p1–g0.
    assert_eq!(match_boundaries(&[1.0, 0.8], &[1.1, 0.7], 10.0, 0.03).unwrap(), 2);
}

#[test]
fn prf_by_hand() {
    let r = prf(&[1.0, 2.0, 9.0], &[1.05, 2.1], 10.0, 0.05).unwrap();
    assert_eq!(r, Prf { precision: 2.0 / 3.0, recall: 1.0, f1: 0.8 });
    assert_eq!(default_thresholds().len(), 10);
    assert!((default_thresholds()[4] - 0.25).abs() < 1e-12);
}

#[test]
fn best_rater_is_taken_per_video() {
    let ann = BoundaryAnnotation {
        video_id: "v".into(),
        fps: 10.0,
        num_frames: 100,
        duration_s: 10.0,
        raters: vec![vec![5.0], vec![2.0, 7.0]],
    };
    let rep = corpus_report(&[(vec![2.0, 7.1], ann)], &[0.05]).unwrap();
    assert_eq!(rep.f1, vec![1.0]);
}

#[test]
fn soft_label_values() {
    let cfg = SoftLabelConfig::default();
    let y = soft_labels(&[10], 21, &cfg).unwrap();
    assert_eq!(y[10], 1.0);
    for d in [1usize, 2] {
        let want = (-(d as f64).powi(2) / 2.0).exp();
        assert!((y[10 - d] - want).abs() <= 1e-6 && (y[10 + d] - want).abs() <= 1e-6);
    }
    assert!((y[9] - 0.606531).abs() <= 1e-6);
    assert!((y[8] - 0.135335).abs() <= 1e-6);
    let adj = soft_labels(&[4, 5], 10, &cfg).unwrap();
    assert!(adj.iter().all(|&v| v <= 1.0));
    assert_eq!((adj[4], adj[5]), (1.0, 1.0));
    assert!(soft_labels(&[10], 10, &cfg).is_err());
}

proptest! {
    #[test]
    fn bce_is_minimized_at_the_labels(labels in prop::collection::vec(0.0f64..=1.0, 1..20), eps in 0.01f64..0.3) {
        let at = bce_loss(&labels, &labels).unwrap();
        let off: Vec<f64> = labels.iter().map(|y| if *y > 0.5 { y - eps } else { y + eps }).collect();
        prop_assert!(bce_loss(&off, &labels).unwrap() > at);
    }
}
