//! Stretch factors and timeline placement of synthesized clips.
//!
//! Every clip starts exactly where its source segment starts. A clip that
//! does not fit its slot after clamped stretching borrows silence from the gap
//! before the same speaker's next segment, and is squeezed beyond the clamp
//! only when that is still not enough. Nothing is ever truncated.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::AlignmentError;
use crate::model::{SegmentId, SpeakerId, TimeInterval, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StretchPolicy {
    pub f_min: f64,
    pub f_max: f64,
    pub max_borrow_ms: u64,
    pub min_inter_gap_ms: u64,
}

impl Default for StretchPolicy {
    fn default() -> Self {
        Self {
            f_min: 0.80,
            f_max: 1.25,
            max_borrow_ms: 500,
            min_inter_gap_ms: 50,
        }
    }
}

impl StretchPolicy {
    /// Stretching disabled: clips play at their natural speed.
    pub fn fixed() -> Self {
        Self {
            f_min: 1.0,
            f_max: 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AlignmentError> {
        if self.f_min > 0.0 && self.f_min <= 1.0 && self.f_max >= 1.0 && self.f_max.is_finite() {
            Ok(())
        } else {
            Err(AlignmentError::InvalidPolicy {
                f_min: self.f_min,
                f_max: self.f_max,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementFlag {
    /// The natural factor fell outside `[f_min, f_max]`.
    Clamped,
    /// The clip extends into the following silence.
    Borrowed,
    /// The clip was sped up beyond `f_max` to fit the available room.
    Overstretched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub segment_id: SegmentId,
    pub speaker: SpeakerId,
    pub source_interval: TimeInterval,
    pub target_interval: TimeInterval,
    pub synth_duration_ms: u64,
    /// Playback speed-up: stretched duration = synth duration / factor.
    pub stretch_factor: f64,
    pub flags: BTreeSet<PlacementFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementPlan {
    pub video_duration_ms: u64,
    /// In transcript order.
    pub placements: Vec<Placement>,
}

impl PlacementPlan {
    pub fn get(&self, id: &SegmentId) -> Option<&Placement> {
        self.placements.iter().find(|p| &p.segment_id == id)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &Placement> {
        self.placements.iter().filter(|p| !p.flags.is_empty())
    }
}

/// Clamped speed-up needed to fit `synth_ms` of audio into `slot_ms`.
///
/// Both durations must be positive.
pub fn stretch_factor(
    synth_ms: u64,
    slot_ms: u64,
    policy: &StretchPolicy,
) -> (f64, BTreeSet<PlacementFlag>) {
    debug_assert!(synth_ms > 0 && slot_ms > 0);
    let raw = synth_ms as f64 / slot_ms.max(1) as f64;
    let factor = raw.clamp(policy.f_min, policy.f_max);
    let mut flags = BTreeSet::new();
    if raw < policy.f_min || raw > policy.f_max {
        flags.insert(PlacementFlag::Clamped);
    }
    (factor, flags)
}

/// Duration in ms of `synth_ms` played back `factor` times faster.
pub fn stretched_duration(synth_ms: u64, factor: f64) -> u64 {
    (synth_ms as f64 / factor).round() as u64
}

pub fn plan_placement(
    transcript: &Transcript,
    synth_durations: &BTreeMap<SegmentId, u64>,
    video_duration: u64,
    policy: &StretchPolicy,
) -> Result<PlacementPlan, AlignmentError> {
    policy.validate()?;

    // Start of each segment's next same-speaker segment.
    let mut next_start: HashMap<&SegmentId, u64> = HashMap::new();
    let mut last_of_speaker: HashMap<&SpeakerId, &SegmentId> = HashMap::new();
    for seg in &transcript.segments {
        if let Some(prev) = last_of_speaker.insert(&seg.speaker, &seg.id) {
            next_start.insert(prev, seg.interval.start());
        }
    }

    let mut placements = Vec::with_capacity(transcript.segments.len());
    for seg in &transcript.segments {
        let synth = *synth_durations
            .get(&seg.id)
            .ok_or_else(|| AlignmentError::MissingDuration(seg.id.clone()))?;
        if synth == 0 {
            return Err(AlignmentError::EmptyClip(seg.id.clone()));
        }
        if seg.interval.end() > video_duration {
            return Err(AlignmentError::OutOfBounds {
                id: seg.id.clone(),
                end_ms: seg.interval.end(),
                video_duration,
            });
        }
        let slot = seg.interval.len();
        let (mut factor, mut flags) = stretch_factor(synth, slot, policy);
        let mut length = stretched_duration(synth, factor);

        if length > slot {
            let borrowable = match next_start.get(&seg.id) {
                Some(&next) => next
                    .saturating_sub(seg.interval.end())
                    .saturating_sub(policy.min_inter_gap_ms),
                None => video_duration - seg.interval.end(),
            }
            .min(policy.max_borrow_ms);
            let available = slot + borrowable;
            if borrowable > 0 {
                flags.insert(PlacementFlag::Borrowed);
            }
            if length > available {
                factor = synth as f64 / available as f64;
                length = available;
                flags.insert(PlacementFlag::Overstretched);
            }
        }

        let target = TimeInterval::new(seg.interval.start(), seg.interval.start() + length)
            .expect("stretched clips are never empty");
        placements.push(Placement {
            segment_id: seg.id.clone(),
            speaker: seg.speaker.clone(),
            source_interval: seg.interval,
            target_interval: target,
            synth_duration_ms: synth,
            stretch_factor: factor,
            flags,
        });
    }

    Ok(PlacementPlan {
        video_duration_ms: video_duration,
        placements,
    })
}
