//! Multi-rater boundary annotations and their JSON file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary timestamps of one video as marked by each rater.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAnnotation {
    pub video_id: String,
    pub fps: f64,
    pub num_frames: usize,
    pub duration_s: f64,
    /// One sorted list of timestamps (seconds) per rater.
    pub raters: Vec<Vec<f64>>,
}

impl BoundaryAnnotation {
    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return Err(Error::config(format!("{}: fps must be positive", self.video_id)));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::config(format!("{}: duration_s must be positive", self.video_id)));
        }
        for (r, list) in self.raters.iter().enumerate() {
            if list.iter().any(|t| !(0.0..=self.duration_s).contains(t)) {
                return Err(Error::config(format!(
                    "{}: rater {r} has a timestamp outside [0, {}]",
                    self.video_id, self.duration_s
                )));
            }
            if list.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::config(format!("{}: rater {r} is not sorted", self.video_id)));
            }
        }
        Ok(())
    }
}

pub fn annotations_from_json(s: &str) -> Result<Vec<BoundaryAnnotation>> {
    let anns: Vec<BoundaryAnnotation> = serde_json::from_str(s)?;
    anns.iter().try_for_each(BoundaryAnnotation::validate)?;
    Ok(anns)
}

pub fn annotations_to_json(anns: &[BoundaryAnnotation]) -> Result<String> {
    Ok(serde_json::to_string_pretty(anns)?)
}

pub fn read_annotations(path: &Path) -> Result<Vec<BoundaryAnnotation>> {
    annotations_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_annotations(path: &Path, anns: &[BoundaryAnnotation]) -> Result<()> {
    std::fs::write(path, annotations_to_json(anns)?)?;
    Ok(())
}
