mod common;

use lcvs::rng::SplitMix64;
use lcvs::temporal::{bag_indices, group_similarity, lstm_forward, lstm_forward_batch, pick_peaks, LstmParams};

use common::{literal_lstm, randomize_lstm};

fn random_seq(rng: &mut SplitMix64, len: usize, c: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..len).map(|_| (0..c).map(|_| rng.symmetric(scale)).collect()).collect()
}

#[test]
fn batched_lstm_matches_gate_equations() {
    let mut rng = SplitMix64::new(77);
    for case in 0..60 {
        let c = [4, 8, 12][case % 3];
        let mut p = LstmParams::zeros(c);
        randomize_lstm(&mut p, &mut rng, [0.3, 1.0, 2.5][case % 3]);
        let bags: Vec<_> = (0..5).map(|_| random_seq(&mut rng, 17, c, 2.0)).collect();
        let batched = lstm_forward_batch(&p, &bags);
        for (bag, got) in bags.iter().zip(&batched) {
            let want = literal_lstm(&p, bag);
            let literal = lstm_forward(&p, bag);
            for ((g, w), l) in got.iter().zip(&want).zip(&literal) {
                for ((a, b), d) in g.iter().zip(w).zip(l) {
                    assert!((a - b).abs() <= 1e-9, "case {case}: {a} vs {b}");
                    assert!((d - b).abs() <= 1e-9, "case {case}: {d} vs {b}");
                }
            }
        }
    }
}

#[test]
fn zero_parameters_give_zero_hidden_states() {
    // every gate pre-activation is 0: i = f = o = 0.5, g = 0, so c = h = 0
    let p = LstmParams::zeros(8);
    let mut rng = SplitMix64::new(1);
    let seq = random_seq(&mut rng, 9, 8, 5.0);
    for h in lstm_forward_batch(&p, &[seq.clone()]).remove(0).iter().chain(&lstm_forward(&p, &seq)) {
        assert!(h.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn similarity_properties_on_1000_bags() {
    let mut rng = SplitMix64::new(5);
    for i in 0..1000 {
        let groups = [1, 2, 4][i % 3];
        let width = rng.range_inclusive(1, 6) as usize;
        let n = 2 * rng.range_inclusive(0, 8) as usize + 1;
        let hidden = random_seq(&mut rng, n, groups * width, 1.0);
        let m = group_similarity(&hidden, groups).unwrap();
        assert_eq!((m.groups(), m.size()), (groups, n));
        for g in 0..groups {
            for a in 0..n {
                assert_eq!(m.at(g, a, a), 1.0);
                for b in 0..n {
                    let s = m.at(g, a, b);
                    assert!((-1.0..=1.0).contains(&s), "{s}");
                    assert_eq!(s, m.at(g, b, a));
                }
            }
        }
    }
}

#[test]
fn default_maps_are_4_by_17_by_17() {
    let mut rng = SplitMix64::new(9);
    let hidden = random_seq(&mut rng, 2 * 8 + 1, 32, 1.0);
    let m = group_similarity(&hidden, 4).unwrap();
    assert_eq!((m.0.channels, m.0.height, m.0.width), (4, 17, 17));
}

#[test]
fn similarity_of_scaled_and_flipped_slices() {
    let a = vec![1.0, 2.0, -1.0, 0.5];
    let b: Vec<f64> = a.iter().map(|v| 3.0 * v).collect();
    let c: Vec<f64> = a.iter().map(|v| -v).collect();
    let m = group_similarity(&[a, b, c], 1).unwrap();
    assert!((m.at(0, 0, 1) - 1.0).abs() < 1e-12);
    assert!((m.at(0, 0, 2) + 1.0).abs() < 1e-12);
    assert!(group_similarity(&[vec![1.0; 6]], 4).is_err());
}

#[test]
fn bags_replicate_edges() {
    assert_eq!(bag_indices(5, 0, 2).unwrap(), vec![0, 0, 0, 1, 2]);
    assert_eq!(bag_indices(5, 4, 2).unwrap(), vec![2, 3, 4, 4, 4]);
    assert_eq!(bag_indices(1, 0, 1).unwrap(), vec![0, 0, 0]);
    assert!(bag_indices(5, 5, 2).is_err());
}

#[test]
fn peaks_respect_threshold_and_suppression() {
    let s = [0.1, 0.6, 0.55, 0.9, 0.2, 0.2, 0.2, 0.7, 0.4];
    assert_eq!(pick_peaks(&s, 0.5, 2), vec![3, 7]);
    assert_eq!(pick_peaks(&s, 0.95, 2), Vec::<usize>::new());
}
