//! Capability contracts for every external backend.
//!
//! Adapters must be callable from several jobs at once. Each one names itself
//! through [`EngineInfo`] so produced artifacts can be traced to a backend.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::audio::AudioBuffer;
use super::EngineError;
use crate::model::{RawInterval, SpeakerId, TimeInterval, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EngineInfo {
    pub name: String,
    pub version: String,
}

impl EngineInfo {
    pub fn new(name: impl Into<String>, version: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            version: version.into(),
        }
    }
}

impl fmt::Display for EngineInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name, self.version)
    }
}

/// Speaker assignment for a transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct Diarization {
    /// One label per transcript segment, in segment order.
    pub labels: Vec<SpeakerId>,
    /// Voice sample per speaker, in first-appearance order.
    pub references: Vec<(SpeakerId, AudioBuffer)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaInfo {
    /// Container duration: the longest stream.
    pub duration_ms: u64,
    pub video_duration_ms: u64,
    pub audio_duration_ms: Option<u64>,
}

pub trait SourceSeparator: Send + Sync {
    fn info(&self) -> EngineInfo;
    /// Splits mixed audio into (vocals, background).
    fn separate(&self, audio: &AudioBuffer) -> Result<(AudioBuffer, AudioBuffer), EngineError>;
    fn max_parallel_calls(&self) -> Option<usize> {
        None
    }
}

pub trait Transcriber: Send + Sync {
    fn info(&self) -> EngineInfo;
    /// Transcript with word timings. `language` is a hint; the transcript
    /// carries the detected language.
    fn transcribe(
        &self,
        vocals: &AudioBuffer,
        language: Option<&str>,
    ) -> Result<Transcript, EngineError>;
    fn max_parallel_calls(&self) -> Option<usize> {
        None
    }
}

pub trait Diarizer: Send + Sync {
    fn info(&self) -> EngineInfo;
    fn diarize(
        &self,
        vocals: &AudioBuffer,
        transcript: &Transcript,
    ) -> Result<Diarization, EngineError>;
    fn max_parallel_calls(&self) -> Option<usize> {
        None
    }
}

pub trait Translator: Send + Sync {
    fn info(&self) -> EngineInfo;
    fn translate(&self, prompt: &str) -> Result<String, EngineError>;
    fn max_parallel_calls(&self) -> Option<usize> {
        None
    }
}

pub trait VoiceSynthesizer: Send + Sync {
    fn info(&self) -> EngineInfo;
    /// Speaks `text` in the voice of `reference`, at `sample_rate`.
    fn synthesize(
        &self,
        text: &str,
        language: &str,
        speaker: &SpeakerId,
        reference: Option<&AudioBuffer>,
        sample_rate: u32,
    ) -> Result<AudioBuffer, EngineError>;
    fn max_parallel_calls(&self) -> Option<usize> {
        None
    }
}

pub trait FaceDetector: Send + Sync {
    fn info(&self) -> EngineInfo;
    /// Raw intervals where a speaking face is visible, in any order.
    fn detect(&self, video: &[u8]) -> Result<Vec<RawInterval>, EngineError>;
    fn max_parallel_calls(&self) -> Option<usize> {
        None
    }
}

pub trait LipSyncer: Send + Sync {
    fn info(&self) -> EngineInfo;
    /// Re-renders `interval` of `video` to match `audio`; returns a clip of
    /// exactly `interval.len()` ms in the toolkit's container format.
    fn lipsync(
        &self,
        video: &[u8],
        interval: TimeInterval,
        audio: &AudioBuffer,
    ) -> Result<Vec<u8>, EngineError>;
    fn max_parallel_calls(&self) -> Option<usize> {
        None
    }
}

pub trait MediaToolkit: Send + Sync {
    fn info(&self) -> EngineInfo;
    fn probe(&self, media: &[u8]) -> Result<MediaInfo, EngineError>;
    /// First audio stream as mono PCM at `sample_rate`.
    fn demux_audio(&self, media: &[u8], sample_rate: u32) -> Result<AudioBuffer, EngineError>;
    fn strip_audio(&self, media: &[u8]) -> Result<Vec<u8>, EngineError>;
    fn extract_range(&self, video: &[u8], range: TimeInterval) -> Result<Vec<u8>, EngineError>;
    /// `video` with `range` replaced by `clip`; everything else untouched.
    fn replace_range(
        &self,
        video: &[u8],
        range: TimeInterval,
        clip: &[u8],
    ) -> Result<Vec<u8>, EngineError>;
    fn mux(&self, video: &[u8], audio: &AudioBuffer) -> Result<Vec<u8>, EngineError>;
    /// File extension of produced containers.
    fn extension(&self) -> &'static str;
}

/// One implementation per capability.
#[derive(Clone)]
pub struct EngineSet {
    pub separator: Arc<dyn SourceSeparator>,
    pub transcriber: Arc<dyn Transcriber>,
    pub diarizer: Arc<dyn Diarizer>,
    pub translator: Arc<dyn Translator>,
    pub synthesizer: Arc<dyn VoiceSynthesizer>,
    pub face_detector: Arc<dyn FaceDetector>,
    pub lipsyncer: Arc<dyn LipSyncer>,
    pub media: Arc<dyn MediaToolkit>,
}

impl fmt::Debug for EngineSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.infos()).finish()
    }
}

impl EngineSet {
    pub fn infos(&self) -> Vec<EngineInfo> {
        vec![
            self.separator.info(),
            self.transcriber.info(),
            self.diarizer.info(),
            self.translator.info(),
            self.synthesizer.info(),
            self.face_detector.info(),
            self.lipsyncer.info(),
            self.media.info(),
        ]
    }
}
