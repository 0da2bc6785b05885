//! The staged orchestrator: Analysis → Translation → Conversion → Lipsync →
//! Export over an [`EngineSet`](crate::engines::EngineSet), with artifact
//! registry, progress reporting and re-run invalidation.

mod export;
mod stages;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{AlignmentError, SpeechRateModel, StretchPolicy};
use crate::engines::{EngineError, EngineInfo, PcmError, DEFAULT_SAMPLE_RATE};
use crate::intervals::IntervalError;
use crate::model::{ModelError, Stage, StageState, TrackKind, ValidationReport};
use crate::store::StoreError;
use crate::subtitle::SubtitleError;
use crate::translation::{TranslationError, DEFAULT_SEPARATOR};

pub use export::{ExportedFile, ARCHIVE_CONTENT_TYPE};
pub use stages::{Pipeline, ProgressSink};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslationSettings {
    pub batch_size: usize,
    pub max_attempts: u32,
    pub separator: String,
    pub syllable_hint: bool,
    pub cot: bool,
    pub fallback: bool,
    /// Same-speaker neighbours closer than this are translated as one
    /// segment; 0 disables merging.
    pub merge_max_gap_ms: u64,
    pub merge_max_chars: usize,
}

impl Default for TranslationSettings {
    fn default() -> Self {
        Self {
            batch_size: 12,
            max_attempts: 3,
            separator: DEFAULT_SEPARATOR.to_string(),
            syllable_hint: true,
            cot: true,
            fallback: true,
            merge_max_gap_ms: 0,
            merge_max_chars: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sample_rate: u32,
    pub stretch: StretchPolicy,
    pub rates: SpeechRateModel,
    pub translation: TranslationSettings,
    pub background_gain: f64,
    pub lipsync_min_duration_ms: u64,
    pub lipsync_pad_ms: u64,
    pub reference_min_ms: u64,
    pub export_tolerance_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            stretch: StretchPolicy::default(),
            rates: SpeechRateModel::default(),
            translation: TranslationSettings::default(),
            background_gain: 1.0,
            lipsync_min_duration_ms: 500,
            lipsync_pad_ms: 120,
            reference_min_ms: 3000,
            export_tolerance_ms: 50,
        }
    }
}

/// One execution of a stage, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRun {
    pub stage: Stage,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub adapters: Vec<EngineInfo>,
    pub produced: Vec<TrackKind>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Stage-specific details, e.g. translation call statistics.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgressStatus {
    Running,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressEvent {
    pub project_id: String,
    pub stage: Stage,
    /// In `[0, 1]`, non-decreasing within one run.
    pub fraction: f64,
    pub message: String,
    pub status: ProgressStatus,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot run {requested} while the project is {current:?}")]
    OutOfOrder {
        requested: Stage,
        current: StageState,
    },
    #[error("track {0} does not exist")]
    MissingTrack(TrackKind),
    #[error("source and target language are both {0}")]
    SameLanguage(String),
    #[error("transcript is invalid:\n{0}")]
    InvalidTranscript(ValidationReport),
    #[error("export lasts {got_ms} ms, video lasts {expected_ms} ms")]
    ExportDuration { got_ms: u64, expected_ms: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Translation(#[from] TranslationError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Pcm(#[from] PcmError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Subtitle(#[from] SubtitleError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Whether `requested` may run from `current`.
pub fn transition_allowed(current: &StageState, requested: Stage) -> bool {
    match (current.rank(), requested.requires().rank()) {
        (Some(have), Some(need)) => have >= need,
        _ => false,
    }
}
