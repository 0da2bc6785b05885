//! Backend adapter contracts, deterministic mocks, HTTP and subprocess
//! clients, and the PCM operations every backend combination relies on.

mod adapters;
mod audio;
pub mod ffmpeg;
pub mod fixture;
pub mod http;
pub mod mock;
mod pcm;
pub mod stub;

use thiserror::Error;

use crate::model::{TimeInterval, TranscriptSegment};

pub use adapters::{
    Diarization, Diarizer, EngineInfo, EngineSet, FaceDetector, LipSyncer, MediaInfo, MediaToolkit,
    SourceSeparator, Transcriber, Translator, VoiceSynthesizer,
};
pub use audio::{ms_to_samples, samples_to_ms, AudioBuffer, DEFAULT_SAMPLE_RATE};
pub use pcm::{
    mix_tracks, render_dub_track, stretched_len, time_stretch, PcmError, MAX_STRETCH_FACTOR,
    MIN_STRETCH_FACTOR,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("{engine} is unavailable: {reason}")]
    Unavailable { engine: String, reason: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{engine} returned an invalid response: {reason}")]
    InvalidOutput { engine: String, reason: String },
    #[error("unsupported media: {0}")]
    UnsupportedMedia(String),
    #[error(transparent)]
    Pcm(#[from] PcmError),
}

/// Voice sample for cloning: the longest of `segments` (earliest on ties),
/// widened to at least `min_ms` where the recording allows.
pub fn reference_clip<'a>(
    vocals: &AudioBuffer,
    segments: impl IntoIterator<Item = &'a TranscriptSegment>,
    min_ms: u64,
) -> Option<AudioBuffer> {
    let longest = segments
        .into_iter()
        .fold(None::<&TranscriptSegment>, |best, s| match best {
            Some(b) if b.interval.len() >= s.interval.len() => Some(b),
            _ => Some(s),
        })?;
    let total = vocals.duration_ms();
    let want = longest.interval.len().max(min_ms);
    let mut start = longest.interval.start();
    let mut end = start + want;
    if end > total {
        end = total;
        start = end.saturating_sub(want);
    }
    let range = TimeInterval::new(start, end).ok()?;
    Some(vocals.slice_ms(range))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SpeakerId, TimeInterval, TranscriptSegment};

    fn seg(a: u64, b: u64) -> TranscriptSegment {
        TranscriptSegment::new(
            "x",
            SpeakerId::default_speaker(),
            TimeInterval::new(a, b).unwrap(),
            "x",
        )
    }

    #[test]
    fn reference_clip_selection() {
        let vocals = AudioBuffer::new(1000, (0..10_000).map(|i| (i % 1000) as i16).collect());
        let segs = [seg(0, 500), seg(1000, 2000), seg(5000, 6000)];
        let clip = reference_clip(&vocals, &segs, 3000).unwrap();
        assert_eq!(clip.len(), 3000);
        assert_eq!(clip.samples[0], 0); // starts at 1000 ms, the earliest longest
        let late = [seg(9500, 9900)];
        let clip = reference_clip(&vocals, &late, 3000).unwrap();
        assert_eq!(clip.len(), 3000); // shifted left to fit the recording
        let long = [seg(1000, 5000)];
        assert_eq!(reference_clip(&vocals, &long, 3000).unwrap().len(), 4000);
        assert!(reference_clip(&vocals, &[], 3000).is_none());
    }
}
