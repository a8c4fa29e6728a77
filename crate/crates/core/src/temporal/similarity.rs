use crate::error::{Error, Result};
use crate::tensor::{dot, Tensor3};

/// G × n × n cosine similarities, n = 2k+1. Stored as a rank-3 tensor so it
/// feeds the FCN directly.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSimilarityMap(pub Tensor3);

impl GroupSimilarityMap {
    pub fn groups(&self) -> usize {
        self.0.channels
    }

    pub fn size(&self) -> usize {
        self.0.height
    }

    pub fn at(&self, g: usize, i: usize, j: usize) -> f64 {
        self.0.at(g, i, j)
    }
}

/// Cosine similarity; 0 whenever either vector is all zeros.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a);
    let nb = dot(b, b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb).sqrt()).clamp(-1.0, 1.0)
}

/// Split every hidden state into `groups` contiguous channel slices and take
/// pairwise cosines within each slice.
pub fn group_similarity(hidden: &[Vec<f64>], groups: usize) -> Result<GroupSimilarityMap> {
    let n = hidden.len();
    let channels = hidden.first().map_or(0, Vec::len);
    if groups == 0 || channels % groups != 0 {
        return Err(Error::config(format!(
            "{channels} channels cannot be split into {groups} groups"
        )));
    }
    if hidden.iter().any(|h| h.len() != channels) {
        return Err(Error::shape("hidden states differ in length"));
    }
    let width = channels / groups;
    let mut map = Tensor3::zeros(groups, n, n);
    for g in 0..groups {
        let slice = |i: usize| &hidden[i][g * width..(g + 1) * width];
        for i in 0..n {
            let norm_i = dot(slice(i), slice(i));
            *map.at_mut(g, i, i) = if norm_i == 0.0 { 0.0 } else { 1.0 };
            for j in i + 1..n {
                let s = cosine(slice(i), slice(j));
                *map.at_mut(g, i, j) = s;
                *map.at_mut(g, j, i) = s;
            }
        }
    }
    Ok(GroupSimilarityMap(map))
}
