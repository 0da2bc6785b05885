//! Duration alignment: how long translated speech will take, and where the
//! synthesized clips land on the fixed video timeline.

mod placement;
mod syllables;

use thiserror::Error;

use crate::model::SegmentId;

pub use placement::{
    plan_placement, stretch_factor, stretched_duration, Placement, PlacementFlag, PlacementPlan,
    StretchPolicy,
};
pub use syllables::{
    estimate_speech_duration, estimate_syllables, select_length_variant, SpeechRateModel,
    DEFAULT_SYLLABLES_PER_SECOND,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlignmentError {
    #[error("no synthesized duration for segment {0}")]
    MissingDuration(SegmentId),
    #[error("synthesized clip for segment {0} is empty")]
    EmptyClip(SegmentId),
    #[error("segment {id} ends at {end_ms} ms, past the video end ({video_duration} ms)")]
    OutOfBounds {
        id: SegmentId,
        end_ms: u64,
        video_duration: u64,
    },
    #[error("stretch policy needs 0 < f_min <= 1 <= f_max, got f_min={f_min}, f_max={f_max}")]
    InvalidPolicy { f_min: f64, f_max: f64 },
    #[error("speech rate for {language} must lie in (1, 12) syllables/s, got {rate}")]
    InvalidRate { language: String, rate: f64 },
}
