//! Synthetic lecture recordings for tests, demos and the `fixture` command.

use super::audio::{ms_to_samples, AudioBuffer};
use super::mock::synthetic_transcript;
use super::stub::StubVideo;
use crate::model::Transcript;

/// Voice partials, all below the mock separator's cut-off.
const VOICE_PARTIALS: [(f64, f64); 2] = [(180.0, 5000.0), (360.0, 2000.0)];
/// Room tone, well above the cut-off.
const BACKGROUND: (f64, f64) = (3000.0, 600.0);
const FADE_MS: u64 = 10;

pub struct LectureFixture {
    /// Stub container with the mixed soundtrack attached.
    pub video: Vec<u8>,
    pub audio: AudioBuffer,
    /// What the mock transcriber with the same seed will report.
    pub transcript: Transcript,
}

/// A stub lecture of `duration_ms`: voiced bursts exactly where the
/// synthetic transcript for `seed` places speech, over quiet room tone.
pub fn lecture_fixture(
    seed: u64,
    duration_ms: u64,
    sample_rate: u32,
    language: &str,
) -> LectureFixture {
    let transcript = synthetic_transcript(seed, duration_ms, language);
    let len = ms_to_samples(duration_ms, sample_rate);
    let background = AudioBuffer::tone(sample_rate, len, BACKGROUND.0, BACKGROUND.1, 0.0);
    let mut acc: Vec<f64> = background.samples.iter().map(|&s| s as f64).collect();

    let fade = ms_to_samples(FADE_MS, sample_rate).max(1) as f64;
    let step = std::f64::consts::TAU / sample_rate as f64;
    for seg in &transcript.segments {
        let a = ms_to_samples(seg.interval.start(), sample_rate).min(len);
        let b = ms_to_samples(seg.interval.end(), sample_rate).min(len);
        for (k, sample) in acc[a..b].iter_mut().enumerate() {
            let edge = (k as f64 / fade).min((b - a - k) as f64 / fade).min(1.0);
            let t = k as f64;
            let voice: f64 = VOICE_PARTIALS
                .iter()
                .map(|&(f, amp)| amp * (step * f * t).sin())
                .sum();
            *sample += edge * voice;
        }
    }
    let audio = AudioBuffer::new(
        sample_rate,
        acc.into_iter()
            .map(|v| v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16)
            .collect(),
    );
    let video = StubVideo::new(format!("lecture-{seed}"), duration_ms, Some(&audio)).encode();
    LectureFixture {
        video,
        audio,
        transcript,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::mock::MockSourceSeparator;
    use crate::engines::SourceSeparator;
    use crate::model::TimeInterval;

    #[test]
    fn deterministic_and_sized() {
        let a = lecture_fixture(1, 8000, 16_000, "en");
        let b = lecture_fixture(1, 8000, 16_000, "en");
        assert_eq!(a.video, b.video);
        assert_eq!(a.audio.len(), 128_000);
        assert!(!a.transcript.is_empty());
        assert_ne!(a.video, lecture_fixture(2, 8000, 16_000, "en").video);
    }

    #[test]
    fn speech_lands_in_the_vocal_band() {
        let f = lecture_fixture(4, 10_000, 24_000, "en");
        let (vocals, _) = MockSourceSeparator.separate(&f.audio).unwrap();
        let seg = &f.transcript.segments[0];
        let inside = vocals.slice_ms(
            TimeInterval::new(seg.interval.start() + 50, seg.interval.end() - 50).unwrap(),
        );
        let before = vocals.slice_ms(
            TimeInterval::new(0, seg.interval.start().saturating_sub(50).max(1)).unwrap(),
        );
        assert!(inside.rms() > 2000.0);
        assert!(before.rms() < 200.0, "{}", before.rms());
    }
}
