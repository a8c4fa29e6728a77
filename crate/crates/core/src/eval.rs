//! Rel.Dis. matching and precision / recall / F1 across thresholds and raters.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::BoundaryAnnotation;
use crate::error::{Error, Result};

/// 0.05, 0.10, …, 0.50.
pub fn default_thresholds() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 20.0).collect()
}

/// Relative distance |pred − gt| / len.
pub fn rel_dis(pred_s: f64, gt_s: f64, len_s: f64) -> Result<f64> {
    if !(len_s > 0.0) {
        return Err(Error::config(format!("instance length must be positive, got {len_s}")));
    }
    Ok((pred_s - gt_s).abs() / len_s)
}

/// Size of a maximum one-to-one matching between `preds` and `gts` where a
/// pair may match when its Rel.Dis. is at most `thr` (augmenting paths).
pub fn match_boundaries(preds: &[f64], gts: &[f64], len_s: f64, thr: f64) -> Result<usize> {
    let mut adj = vec![Vec::new(); preds.len()];
    for (i, &p) in preds.iter().enumerate() {
        for (j, &g) in gts.iter().enumerate() {
            if rel_dis(p, g, len_s)? <= thr {
                adj[i].push(j);
            }
        }
    }
    let mut owner: Vec<Option<usize>> = vec![None; gts.len()];
    let mut count = 0;
    for i in 0..preds.len() {
        let mut seen = vec![false; gts.len()];
        if augment(i, &adj, &mut owner, &mut seen) {
            count += 1;
        }
    }
    Ok(count)
}

fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if owner[j].is_none_or(|k| augment(k, adj, owner, seen)) {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    /// Scores from a match count; an empty side counts as perfectly
    /// precise (or complete), so empty vs empty is 1 and empty vs nonempty 0.
    pub fn from_counts(matches: usize, n_pred: usize, n_gt: usize) -> Self {
        let precision = if n_pred == 0 { 1.0 } else { matches as f64 / n_pred as f64 };
        let recall = if n_gt == 0 { 1.0 } else { matches as f64 / n_gt as f64 };
        let f1 = if n_pred == 0 && n_gt == 0 {
            1.0
        } else if n_pred == 0 || n_gt == 0 || matches == 0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1 }
    }

    fn key(&self) -> (f64, f64, f64) {
        (self.f1, self.precision, self.recall)
    }
}

pub fn prf(preds: &[f64], gts: &[f64], len_s: f64, thr: f64) -> Result<Prf> {
    let m = match_boundaries(preds, gts, len_s, thr)?;
    Ok(Prf::from_counts(m, preds.len(), gts.len()))
}

/// Scores of one video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoEval {
    pub video_id: String,
    /// Best rater per threshold (highest F1, then precision, then recall).
    pub per_threshold: Vec<Prf>,
    /// Index of that rater; `None` when the video has no raters.
    pub best_rater: Vec<Option<usize>>,
}

/// Score predictions against every rater; per threshold the best rater wins.
/// A video without raters is scored against an empty list.
pub fn evaluate_video(preds: &[f64], ann: &BoundaryAnnotation, thresholds: &[f64]) -> Result<VideoEval> {
    let mut per_threshold = Vec::with_capacity(thresholds.len());
    let mut best_rater = Vec::with_capacity(thresholds.len());
    for &thr in thresholds {
        if ann.raters.is_empty() {
            per_threshold.push(prf(preds, &[], ann.duration_s, thr)?);
            best_rater.push(None);
            continue;
        }
        let mut best: Option<(usize, Prf)> = None;
        for (r, gts) in ann.raters.iter().enumerate() {
            let s = prf(preds, gts, ann.duration_s, thr)?;
            // Exact ties leave identical scores whichever rater is kept.
            if best.is_none_or(|(_, b)| s.key() > b.key()) {
                best = Some((r, s));
            }
        }
        let (r, s) = best.expect("at least one rater");
        per_threshold.push(s);
        best_rater.push(Some(r));
    }
    Ok(VideoEval {
        video_id: ann.video_id.clone(),
        per_threshold,
        best_rater,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    /// Mean F1 over the thresholds.
    pub avg_f1: f64,
    pub videos: Vec<VideoEval>,
}

impl EvalReport {
    /// F1 at the threshold closest to `thr`.
    pub fn f1_at(&self, thr: f64) -> f64 {
        let i = self
            .thresholds
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - thr).abs().total_cmp(&(b.1 - thr).abs()))
            .map_or(0, |(i, _)| i);
        self.f1[i]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric");
        for t in &self.thresholds {
            let _ = write!(s, ",{t:.2}");
        }
        s.push_str(",avg\n");
        for (name, row) in [("precision", &self.precision), ("recall", &self.recall), ("f1", &self.f1)] {
            s.push_str(name);
            for v in row.iter() {
                let _ = write!(s, ",{v:.6}");
            }
            let avg = row.iter().sum::<f64>() / row.len().max(1) as f64;
            let _ = writeln!(s, ",{avg:.6}");
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:<10}", "Rel.Dis.");
        for t in &self.thresholds {
            let _ = write!(s, "{t:>7.2}");
        }
        let _ = writeln!(s, "{:>7}", "avg");
        for (name, row) in [("P", &self.precision), ("R", &self.recall), ("F1", &self.f1)] {
            let _ = write!(s, "{name:<10}");
            for v in row.iter() {
                let _ = write!(s, "{v:>7.3}");
            }
            let avg = row.iter().sum::<f64>() / row.len().max(1) as f64;
            let _ = writeln!(s, "{avg:>7.3}");
        }
        s
    }
}

/// Corpus report: videos are scored independently and metrics are averaged
/// over videos (in video-id order).
pub fn corpus_report(items: &[(Vec<f64>, BoundaryAnnotation)], thresholds: &[f64]) -> Result<EvalReport> {
    let mut videos = items
        .par_iter()
        .map(|(preds, ann)| evaluate_video(preds, ann, thresholds))
        .collect::<Result<Vec<_>>>()?;
    videos.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    let n = videos.len().max(1) as f64;
    let mean = |f: fn(&Prf) -> f64| -> Vec<f64> {
        (0..thresholds.len())
            .map(|t| videos.iter().map(|v| f(&v.per_threshold[t])).sum::<f64>() / n)
            .collect()
    };
    let precision = mean(|p| p.precision);
    let recall = mean(|p| p.recall);
    let f1 = mean(|p| p.f1);
    let avg_f1 = f1.iter().sum::<f64>() / thresholds.len().max(1) as f64;
    Ok(EvalReport {
        thresholds: thresholds.to_vec(),
        precision,
        recall,
        f1,
        avg_f1,
        videos,
    })
}

/// Report for a single video.
pub fn f1_report(preds: &[f64], ann: &BoundaryAnnotation, thresholds: &[f64]) -> Result<EvalReport> {
    corpus_report(&[(preds.to_vec(), ann.clone())], thresholds)
}

/// Predictions file entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub video_id: String,
    pub boundaries_s: Vec<f64>,
}

/// Pair predictions with annotations by video id; videos without predictions
/// are scored as empty predictions.
pub fn pair_predictions(
    preds: &[Prediction],
    anns: &[BoundaryAnnotation],
) -> Result<Vec<(Vec<f64>, BoundaryAnnotation)>> {
    for p in preds {
        if !anns.iter().any(|a| a.video_id == p.video_id) {
            return Err(Error::config(format!("prediction for unknown video {}", p.video_id)));
        }
    }
    Ok(anns
        .iter()
        .map(|a| {
            let b = preds
                .iter()
                .find(|p| p.video_id == a.video_id)
                .map(|p| p.boundaries_s.clone())
                .unwrap_or_default();
            (b, a.clone())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(raters: Vec<Vec<f64>>) -> BoundaryAnnotation {
        BoundaryAnnotation {
            video_id: "v".into(),
            fps: 10.0,
            num_frames: 100,
            duration_s: 10.0,
            raters,
        }
    }

    #[test]
    fn thresholds_are_round() {
        let t = default_thresholds();
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], 0.05);
        assert_eq!(t[2], 0.15);
        assert_eq!(t[9], 0.5);
    }

    #[test]
    fn rel_dis_examples() {
        let d = rel_dis(10.0, 10.4, 10.0).unwrap();
        assert!((d - 0.04).abs() < 1e-12 && d <= 0.05);
        assert_eq!(rel_dis(3.0, 3.0, 5.0).unwrap(), 0.0);
        assert_eq!(rel_dis(0.0, 7.0, 7.0).unwrap(), 1.0);
        assert!(matches!(rel_dis(0.0, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn matching_examples() {
        assert_eq!(match_boundaries(&[1.0], &[1.0, 1.05], 1.0, 0.05).unwrap(), 1);
        assert_eq!(match_boundaries(&[1.0, 1.1], &[1.1, 1.0], 1.0, 0.5).unwrap(), 2);
        assert_eq!(match_boundaries(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 5.0, 0.0).unwrap(), 3);
    }

    #[test]
    fn greedy_would_fail_here() {
        // p0 can reach both, p1 only g0: greedy nearest on p0 takes g0.
        assert_eq!(match_boundaries(&[1.0, 0.6], &[0.95, 1.4], 1.0, 0.45).unwrap(), 2);
    }

    #[test]
    fn empty_conventions() {
        assert_eq!(Prf::from_counts(0, 0, 0).f1, 1.0);
        assert_eq!(Prf::from_counts(0, 0, 3).f1, 0.0);
        assert_eq!(Prf::from_counts(0, 3, 0).f1, 0.0);
    }

    #[test]
    fn perfect_predictions() {
        let r = f1_report(&[2.0, 5.0], &ann(vec![vec![2.0, 5.0]]), &default_thresholds()).unwrap();
        assert!(r.f1.iter().all(|&f| f == 1.0));
        assert_eq!(r.avg_f1, 1.0);
    }

    #[test]
    fn no_predictions_scores_zero() {
        let r = f1_report(&[], &ann(vec![vec![2.0]]), &default_thresholds()).unwrap();
        assert!(r.f1.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn best_rater_wins() {
        let a = ann(vec![vec![8.0], vec![2.0, 5.0]]);
        let r = f1_report(&[2.0, 5.0], &a, &[0.05]).unwrap();
        assert_eq!(r.f1, vec![1.0]);
        assert_eq!(r.videos[0].best_rater, vec![Some(1)]);
    }

    #[test]
    fn rater_order_is_irrelevant() {
        let a = ann(vec![vec![1.0, 4.0], vec![2.0, 5.0, 9.0], vec![5.1]]);
        let mut b = a.clone();
        b.raters.reverse();
        let preds = [1.9, 5.0, 8.0];
        let ra = f1_report(&preds, &a, &default_thresholds()).unwrap();
        let rb = f1_report(&preds, &b, &default_thresholds()).unwrap();
        assert_eq!(ra.f1, rb.f1);
        assert_eq!(ra.precision, rb.precision);
        assert_eq!(ra.recall, rb.recall);
    }

    #[test]
    fn csv_has_threshold_columns() {
        let r = f1_report(&[2.0], &ann(vec![vec![2.0]]), &default_thresholds()).unwrap();
        let csv = r.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "metric,0.05,0.10,0.15,0.20,0.25,0.30,0.35,0.40,0.45,0.50,avg");
        assert_eq!(csv.lines().count(), 4);
        assert!(r.to_table().contains("F1"));
    }
}
