use super::FrameTimeline;
use crate::error::{Error, Result};

/// The 2k+1 descriptors around a candidate frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFramesBag {
    pub center: usize,
    pub radius: usize,
    pub frames: Vec<Vec<f64>>,
}

/// Timeline indices covered by the bag around `l`, clamped to the timeline
/// (edge replication).
pub fn bag_indices(len: usize, l: usize, k: usize) -> Result<Vec<usize>> {
    if l >= len {
        return Err(Error::Index { index: l, len });
    }
    Ok((0..=2 * k)
        .map(|i| (l + i).saturating_sub(k).min(len - 1))
        .collect())
}

pub fn build_bag(timeline: &FrameTimeline, l: usize, k: usize) -> Result<LocalFramesBag> {
    let idx = bag_indices(timeline.len(), l, k)?;
    Ok(LocalFramesBag {
        center: l,
        radius: k,
        frames: idx.into_iter().map(|i| timeline.vectors[i].clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_bag() {
        assert_eq!(bag_indices(5, 2, 2).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn edges_replicate() {
        assert_eq!(bag_indices(5, 0, 2).unwrap(), vec![0, 0, 0, 1, 2]);
        assert_eq!(bag_indices(5, 4, 2).unwrap(), vec![2, 3, 4, 4, 4]);
        assert_eq!(bag_indices(1, 0, 3).unwrap(), vec![0; 7]);
    }

    #[test]
    fn radius_zero_is_the_frame_itself() {
        assert_eq!(bag_indices(5, 3, 0).unwrap(), vec![3]);
    }

    #[test]
    fn out_of_range_center() {
        assert!(matches!(bag_indices(5, 5, 1), Err(Error::Index { index: 5, len: 5 })));
    }

    #[test]
    fn build_bag_centers_candidate() {
        let tl = FrameTimeline {
            vectors: (0..6).map(|i| vec![i as f64, 0.0]).collect(),
            source_frames: (0..6).collect(),
            fps: 30.0,
        };
        for l in 0..6 {
            let bag = build_bag(&tl, l, 2).unwrap();
            assert_eq!(bag.frames.len(), 5);
            assert_eq!(bag.frames[2], tl.vectors[l]);
        }
    }
}
