//! Temporal head: local frames bags, LSTM, grouped similarity, FCN pooling,
//! the 1-D classifier and score post-processing.

mod bag;
mod head;
mod lstm;
mod similarity;
mod timeline;

pub use bag::{bag_indices, build_bag, LocalFramesBag};
pub use head::{classify, head_forward, ClassifierParams, FcnParams, HeadParams};
pub use lstm::{lstm_forward, lstm_forward_batch, LstmLayer, LstmParams};
pub use similarity::{group_similarity, GroupSimilarityMap};
pub use timeline::{pick_peaks, scores_to_boundaries, timeline_from_gops, FrameTimeline, GopDescriptors};
