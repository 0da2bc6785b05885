//! Deterministic stand-ins for every backend. Outputs are pure functions of
//! the configured seed and the inputs.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adapters::{
    Diarization, Diarizer, EngineInfo, EngineSet, FaceDetector, LipSyncer, MediaInfo, MediaToolkit,
    SourceSeparator, Transcriber, Translator, VoiceSynthesizer,
};
use super::audio::{ms_to_samples, AudioBuffer};
use super::reference_clip;
use super::stub::StubVideo;
use super::EngineError;
use crate::alignment::{estimate_speech_duration, estimate_syllables, SpeechRateModel};
use crate::model::{
    RawInterval, SegmentId, SpeakerId, TimeInterval, Transcript, TranscriptSegment, WordTiming,
};
use crate::store::ArtifactId;
use crate::translation::{ANSWER_MARKER, DEFAULT_SEPARATOR, PAYLOAD_HEADER};

const MOCK_VERSION: &str = "1";
/// Cut-off between the "vocals" and "background" bands.
pub const SEPARATION_CUTOFF_HZ: f64 = 1000.0;
/// Tone frequency per speaker number (`S1` → 220 Hz, ...), cycling.
pub const SPEAKER_TONES_HZ: [f64; 8] = [220.0, 277.0, 330.0, 392.0, 440.0, 494.0, 523.0, 587.0];
pub const SYNTH_AMPLITUDE: f64 = 8000.0;
pub const SYNTH_PHASE: f64 = std::f64::consts::PI / 7.0;
pub const REFERENCE_MIN_MS: u64 = 3000;
pub const TRANSLATION_TAG: &str = "[tgt]";

const VOCABULARY: &[&str] = &[
    "today",
    "we",
    "study",
    "the",
    "energy",
    "of",
    "a",
    "system",
    "and",
    "its",
    "motion",
    "under",
    "gravity",
    "students",
    "should",
    "notice",
    "how",
    "this",
    "equation",
    "changes",
    "when",
    "mass",
    "increases",
    "velocity",
    "force",
    "simple",
    "example",
    "consider",
    "second",
    "law",
    "momentum",
    "is",
    "conserved",
    "in",
    "every",
    "collision",
    "remember",
    "units",
    "matter",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockEngineConfig {
    pub seed: u64,
    /// Language the mock transcriber "detects" when given no hint.
    pub language: String,
    pub rates: SpeechRateModel,
    /// Transcripts keyed by [`AudioBuffer::content_key`] of the vocals.
    pub transcripts: BTreeMap<String, Transcript>,
    /// Face intervals keyed by the artifact id of the video bytes.
    pub face_fixtures: BTreeMap<String, Vec<RawInterval>>,
    /// Face intervals for videos without a fixture; seeded when absent.
    pub face_default: Option<Vec<RawInterval>>,
}

impl Default for MockEngineConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            language: "en".into(),
            rates: SpeechRateModel::default(),
            transcripts: BTreeMap::new(),
            face_fixtures: BTreeMap::new(),
            face_default: None,
        }
    }
}

pub fn mock_engines(config: MockEngineConfig) -> EngineSet {
    let config = Arc::new(config);
    EngineSet {
        separator: Arc::new(MockSourceSeparator),
        transcriber: Arc::new(MockTranscriber(config.clone())),
        diarizer: Arc::new(MockDiarizer),
        translator: Arc::new(MockTranslator),
        synthesizer: Arc::new(MockVoiceSynthesizer(config.clone())),
        face_detector: Arc::new(MockFaceDetector(config)),
        lipsyncer: Arc::new(MockLipSyncer),
        media: Arc::new(MockMediaToolkit),
    }
}

fn info(name: &str) -> EngineInfo {
    EngineInfo::new(format!("mock-{name}"), MOCK_VERSION)
}

/// Zero-phase low-pass: an RBJ biquad (Q = 1/√2) run forward, then backward,
/// so the pass band comes out without phase shift.
pub fn low_pass(audio: &AudioBuffer, cutoff_hz: f64) -> Vec<f64> {
    let w0 = std::f64::consts::TAU * cutoff_hz / audio.sample_rate as f64;
    let alpha = w0.sin() / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
    let cos = w0.cos();
    let a0 = 1.0 + alpha;
    let b0 = (1.0 - cos) / 2.0 / a0;
    let b1 = (1.0 - cos) / a0;
    let b2 = b0;
    let a1 = -2.0 * cos / a0;
    let a2 = (1.0 - alpha) / a0;
    let pass = |xs: &mut Vec<f64>| {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for v in xs.iter_mut() {
            let x = *v;
            let y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
            (x2, x1, y2, y1) = (x1, x, y1, y);
            *v = y;
        }
    };
    let mut ys: Vec<f64> = audio.samples.iter().map(|&s| s as f64).collect();
    pass(&mut ys);
    ys.reverse();
    pass(&mut ys);
    ys.reverse();
    ys
}

/// Splits by frequency band: vocals are the low-passed signal, background is
/// the remainder, so the two always sum back to the input.
pub struct MockSourceSeparator;

impl SourceSeparator for MockSourceSeparator {
    fn info(&self) -> EngineInfo {
        info("separator")
    }

    fn separate(&self, audio: &AudioBuffer) -> Result<(AudioBuffer, AudioBuffer), EngineError> {
        let low = low_pass(audio, SEPARATION_CUTOFF_HZ);
        let vocals: Vec<i16> = low
            .iter()
            .map(|&v| v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16)
            .collect();
        let background = audio
            .samples
            .iter()
            .zip(&vocals)
            .map(|(&x, &v)| (x as i32 - v as i32).clamp(i16::MIN as i32, i16::MAX as i32) as i16)
            .collect();
        Ok((
            AudioBuffer::new(audio.sample_rate, vocals),
            AudioBuffer::new(audio.sample_rate, background),
        ))
    }
}

/// Lecture-like transcript determined by `(seed, duration_ms)`: segments of
/// 6 to 14 words, each lasting `round(1000 × syllables / 4)` ms, separated by
/// 300 to 900 ms pauses, with word timings split by syllable share.
pub fn synthetic_transcript(seed: u64, duration_ms: u64, language: &str) -> Transcript {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = Vec::new();
    let mut cursor: u64 = rng.gen_range(300..=900);
    loop {
        let count = rng.gen_range(6..=14);
        let words: Vec<&str> = (0..count)
            .map(|_| VOCABULARY[rng.gen_range(0..VOCABULARY.len())])
            .collect();
        let syllables: Vec<u64> = words
            .iter()
            .map(|w| estimate_syllables(w, language) as u64)
            .collect();
        let total: u64 = syllables.iter().sum();
        let len = (1000.0 * total as f64 / 4.0).round() as u64;
        if cursor + len + 200 > duration_ms {
            break;
        }
        let mut timings = Vec::with_capacity(words.len());
        let mut done = 0;
        for (w, s) in words.iter().zip(&syllables) {
            let a = cursor + len * done / total;
            done += s;
            let b = cursor + len * done / total;
            timings.push(WordTiming {
                word: w.to_string(),
                interval: TimeInterval::new(a, b).expect("every word has a syllable"),
            });
        }
        let mut seg = TranscriptSegment::new(
            SegmentId::numbered(segments.len()),
            SpeakerId::default_speaker(),
            TimeInterval::new(cursor, cursor + len).expect("non-empty segment"),
            format!("{}.", words.join(" ")),
        );
        seg.words = timings;
        segments.push(seg);
        cursor += len + rng.gen_range(300..=900);
    }
    Transcript::new(language, segments)
}

/// Returns the registered fixture for the input audio, else the synthetic
/// transcript for `(seed, duration)`.
pub struct MockTranscriber(Arc<MockEngineConfig>);

impl Transcriber for MockTranscriber {
    fn info(&self) -> EngineInfo {
        info("transcriber")
    }

    fn transcribe(
        &self,
        vocals: &AudioBuffer,
        language: Option<&str>,
    ) -> Result<Transcript, EngineError> {
        if let Some(t) = self.0.transcripts.get(&vocals.content_key()) {
            return Ok(t.clone());
        }
        let language = language.unwrap_or(&self.0.language);
        Ok(synthetic_transcript(
            self.0.seed,
            vocals.duration_ms(),
            language,
        ))
    }
}

/// Alternates S1 / S2 over segments.
pub struct MockDiarizer;

impl Diarizer for MockDiarizer {
    fn info(&self) -> EngineInfo {
        info("diarizer")
    }

    fn diarize(
        &self,
        vocals: &AudioBuffer,
        transcript: &Transcript,
    ) -> Result<Diarization, EngineError> {
        let labels: Vec<SpeakerId> = (0..transcript.len())
            .map(|i| SpeakerId::numbered(i % 2 + 1))
            .collect();
        let mut references = Vec::new();
        for speaker in [SpeakerId::numbered(1), SpeakerId::numbered(2)] {
            let own = transcript
                .segments
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == speaker)
                .map(|(s, _)| s);
            if let Some(clip) = reference_clip(vocals, own, REFERENCE_MIN_MS) {
                references.push((speaker, clip));
            }
        }
        Ok(Diarization { labels, references })
    }
}

/// Reverses word order and prepends `[tgt]`, keeping the batch structure.
pub struct MockTranslator;

impl MockTranslator {
    pub fn translate_text(text: &str) -> String {
        let mut words: Vec<&str> = text.split_whitespace().collect();
        words.reverse();
        if words.is_empty() {
            TRANSLATION_TAG.to_string()
        } else {
            format!("{TRANSLATION_TAG} {}", words.join(" "))
        }
    }
}

impl Translator for MockTranslator {
    fn info(&self) -> EngineInfo {
        info("translator")
    }

    fn translate(&self, prompt: &str) -> Result<String, EngineError> {
        let (head, payload) = prompt
            .split_once(PAYLOAD_HEADER)
            .ok_or_else(|| EngineError::InvalidInput("prompt has no payload section".into()))?;
        let out: Vec<String> = payload
            .trim_end_matches('\n')
            .split(DEFAULT_SEPARATOR)
            .map(Self::translate_text)
            .collect();
        let body = out.join(DEFAULT_SEPARATOR);
        if head.contains(ANSWER_MARKER) {
            Ok(format!(
                "The register and rhythm are kept; words are reordered.\n{ANSWER_MARKER}\n{body}"
            ))
        } else {
            Ok(body)
        }
    }
}

/// Frequency of the tone the mock synthesizer uses for `speaker`.
pub fn speaker_tone_hz(speaker: &SpeakerId) -> f64 {
    let index = match speaker
        .as_str()
        .strip_prefix('S')
        .and_then(|n| n.parse::<usize>().ok())
    {
        Some(n) if n >= 1 => n - 1,
        _ => ArtifactId::of(speaker.as_str().as_bytes())
            .as_str()
            .as_bytes()[0] as usize,
    };
    SPEAKER_TONES_HZ[index % SPEAKER_TONES_HZ.len()]
}

/// A pure tone per speaker lasting exactly the estimated speech duration of
/// the text.
pub struct MockVoiceSynthesizer(Arc<MockEngineConfig>);

impl VoiceSynthesizer for MockVoiceSynthesizer {
    fn info(&self) -> EngineInfo {
        info("synthesizer")
    }

    fn synthesize(
        &self,
        text: &str,
        language: &str,
        speaker: &SpeakerId,
        _reference: Option<&AudioBuffer>,
        sample_rate: u32,
    ) -> Result<AudioBuffer, EngineError> {
        let ms = estimate_speech_duration(text, language, &self.0.rates);
        Ok(AudioBuffer::tone(
            sample_rate,
            ms_to_samples(ms, sample_rate),
            speaker_tone_hz(speaker),
            SYNTH_AMPLITUDE,
            SYNTH_PHASE,
        ))
    }
}

pub struct MockFaceDetector(Arc<MockEngineConfig>);

impl FaceDetector for MockFaceDetector {
    fn info(&self) -> EngineInfo {
        info("face-detector")
    }

    fn detect(&self, video: &[u8]) -> Result<Vec<RawInterval>, EngineError> {
        if let Some(xs) = self.0.face_fixtures.get(ArtifactId::of(video).as_str()) {
            return Ok(xs.clone());
        }
        if let Some(xs) = &self.0.face_default {
            return Ok(xs.clone());
        }
        let duration = StubVideo::decode(video)?.duration_ms;
        if duration == 0 {
            return Ok(Vec::new());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.0.seed ^ duration.rotate_left(17));
        let count = rng.gen_range(1..=3);
        Ok((0..count)
            .filter_map(|_| {
                let start = rng.gen_range(0..duration);
                let end = (start + rng.gen_range(200..=4000)).min(duration);
                (start < end).then(|| RawInterval::new(start, end))
            })
            .collect())
    }
}

/// Returns the requested range unchanged.
pub struct MockLipSyncer;

impl LipSyncer for MockLipSyncer {
    fn info(&self) -> EngineInfo {
        info("lipsync")
    }

    fn lipsync(
        &self,
        video: &[u8],
        interval: TimeInterval,
        audio: &AudioBuffer,
    ) -> Result<Vec<u8>, EngineError> {
        if audio.duration_ms().abs_diff(interval.len()) > 1 {
            return Err(EngineError::InvalidInput(format!(
                "audio lasts {} ms, interval {interval} needs {} ms",
                audio.duration_ms(),
                interval.len()
            )));
        }
        Ok(StubVideo::decode(video)?.extract_range(interval)?.encode())
    }
}

/// Media operations on the stub container.
pub struct MockMediaToolkit;

impl MediaToolkit for MockMediaToolkit {
    fn info(&self) -> EngineInfo {
        info("media")
    }

    fn probe(&self, media: &[u8]) -> Result<MediaInfo, EngineError> {
        let v = StubVideo::decode(media)?;
        let audio_duration_ms = v.audio_buffer()?.map(|a| a.duration_ms());
        Ok(MediaInfo {
            duration_ms: v.duration_ms.max(audio_duration_ms.unwrap_or(0)),
            video_duration_ms: v.duration_ms,
            audio_duration_ms,
        })
    }

    fn demux_audio(&self, media: &[u8], sample_rate: u32) -> Result<AudioBuffer, EngineError> {
        StubVideo::decode(media)?
            .audio_buffer()?
            .map(|a| a.resample(sample_rate))
            .ok_or_else(|| EngineError::InvalidInput("media has no audio stream".into()))
    }

    fn strip_audio(&self, media: &[u8]) -> Result<Vec<u8>, EngineError> {
        let mut v = StubVideo::decode(media)?;
        v.audio = None;
        Ok(v.encode())
    }

    fn extract_range(&self, video: &[u8], range: TimeInterval) -> Result<Vec<u8>, EngineError> {
        Ok(StubVideo::decode(video)?.extract_range(range)?.encode())
    }

    fn replace_range(
        &self,
        video: &[u8],
        range: TimeInterval,
        clip: &[u8],
    ) -> Result<Vec<u8>, EngineError> {
        let clip = StubVideo::decode(clip)?;
        Ok(StubVideo::decode(video)?
            .replace_range(range, &clip)?
            .encode())
    }

    fn mux(&self, video: &[u8], audio: &AudioBuffer) -> Result<Vec<u8>, EngineError> {
        let mut v = StubVideo::decode(video)?;
        v.audio = Some(audio.to_wav());
        Ok(v.encode())
    }

    fn extension(&self) -> &'static str {
        "gzv"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_transcript;
    use crate::translation::{build_prompt, parse_llm_response, BatchItem, PromptSpec, ROLE_LINE};

    #[test]
    fn separator_splits_bands_and_sums_back() {
        let low = AudioBuffer::tone(24_000, 24_000, 150.0, 6000.0, 0.0);
        let high = AudioBuffer::tone(24_000, 24_000, 4000.0, 3000.0, 0.0);
        let mixed = AudioBuffer::new(
            24_000,
            low.samples
                .iter()
                .zip(&high.samples)
                .map(|(a, b)| a + b)
                .collect(),
        );
        let (vocals, background) = MockSourceSeparator.separate(&mixed).unwrap();
        for i in 0..mixed.len() {
            assert_eq!(
                vocals.samples[i] as i32 + background.samples[i] as i32,
                mixed.samples[i] as i32
            );
        }
        // Away from the filter transients at both ends, each band dominates its output.
        let steady = TimeInterval::new(100, 900).unwrap();
        let residual = |a: &AudioBuffer, b: &AudioBuffer| {
            let a = a.slice_ms(steady);
            let b = b.slice_ms(steady);
            AudioBuffer::new(
                a.sample_rate,
                a.samples
                    .iter()
                    .zip(&b.samples)
                    .map(|(x, y)| x - y)
                    .collect(),
            )
            .rms()
        };
        assert!(
            residual(&vocals, &low) < 0.02 * low.rms(),
            "{}",
            residual(&vocals, &low)
        );
        assert!(
            residual(&background, &high) < 0.02 * high.rms(),
            "{}",
            residual(&background, &high)
        );
    }

    #[test]
    fn synthetic_transcripts_are_valid_and_seeded() {
        for seed in 0..20 {
            let t = synthetic_transcript(seed, 60_000, "en");
            assert!(
                validate_transcript(&t).is_empty(),
                "seed {seed}: {}",
                validate_transcript(&t)
            );
            assert!(!t.is_empty());
            assert!(t.segments.last().unwrap().interval.end() <= 59_800);
            for s in &t.segments {
                let syl = estimate_syllables(&s.text, "en") as u64;
                assert_eq!(s.interval.len(), 250 * syl);
            }
            assert_eq!(t, synthetic_transcript(seed, 60_000, "en"));
        }
        assert_ne!(
            synthetic_transcript(1, 60_000, "en"),
            synthetic_transcript(2, 60_000, "en")
        );
        assert!(synthetic_transcript(1, 500, "en").is_empty());
    }

    #[test]
    fn diarizer_alternates_and_extracts_references() {
        let t = synthetic_transcript(3, 30_000, "en");
        let vocals = AudioBuffer::silence_ms(24_000, 30_000);
        let d = MockDiarizer.diarize(&vocals, &t).unwrap();
        assert_eq!(d.labels.len(), t.len());
        assert!(d.labels.iter().step_by(2).all(|l| l.as_str() == "S1"));
        assert!(d
            .labels
            .iter()
            .skip(1)
            .step_by(2)
            .all(|l| l.as_str() == "S2"));
        assert_eq!(d.references.len(), 2);
        assert!(d
            .references
            .iter()
            .all(|(_, clip)| clip.duration_ms() >= REFERENCE_MIN_MS));
    }

    #[test]
    fn translator_preserves_structure() {
        let spec = PromptSpec {
            separator: DEFAULT_SEPARATOR.into(),
            role_line: ROLE_LINE.into(),
            tone: crate::model::ToneMode::Friendly,
            source_language: "en".into(),
            target_language: "es".into(),
            syllable_hint: true,
            cot: true,
            batch: ["hello big world", "second one"]
                .iter()
                .enumerate()
                .map(|(i, t)| BatchItem {
                    id: SegmentId::numbered(i),
                    text: t.to_string(),
                    slot_ms: 100,
                    syllables: 3,
                })
                .collect(),
        };
        let reply = MockTranslator
            .translate(&build_prompt(&spec).unwrap())
            .unwrap();
        let parts = parse_llm_response(&reply, 2, DEFAULT_SEPARATOR, true).unwrap();
        assert_eq!(parts, vec!["[tgt] world big hello", "[tgt] one second"]);
    }

    #[test]
    fn synthesizer_obeys_duration_law() {
        let cfg = Arc::new(MockEngineConfig::default());
        let synth = MockVoiceSynthesizer(cfg);
        let s1 = SpeakerId::numbered(1);
        let a = synth
            .synthesize("banana banana hello", "en", &s1, None, 24_000)
            .unwrap();
        assert_eq!(a.duration_ms(), 2000);
        assert_eq!(a.len(), 48_000);
        assert_eq!(
            synth.synthesize("", "en", &s1, None, 24_000).unwrap().len(),
            0
        );
        assert_eq!(speaker_tone_hz(&s1), 220.0);
        assert_eq!(speaker_tone_hz(&SpeakerId::numbered(2)), 277.0);
        assert_eq!(speaker_tone_hz(&SpeakerId::numbered(9)), 220.0);
    }

    #[test]
    fn face_detector_sources() {
        let video = StubVideo::new("v", 20_000, None).encode();
        let mut cfg = MockEngineConfig::default();
        let seeded = MockFaceDetector(Arc::new(cfg.clone()))
            .detect(&video)
            .unwrap();
        assert!(!seeded.is_empty());
        assert!(seeded
            .iter()
            .all(|r| r.start_ms < r.end_ms && r.end_ms <= 20_000));
        cfg.face_default = Some(vec![]);
        assert!(MockFaceDetector(Arc::new(cfg.clone()))
            .detect(&video)
            .unwrap()
            .is_empty());
        cfg.face_fixtures.insert(
            ArtifactId::of(&video).to_string(),
            vec![RawInterval::new(5, 10)],
        );
        assert_eq!(
            MockFaceDetector(Arc::new(cfg)).detect(&video).unwrap(),
            vec![RawInterval::new(5, 10)]
        );
    }

    #[test]
    fn toolkit_round_trips() {
        let audio = AudioBuffer::tone(24_000, 24_000 * 3, 300.0, 5000.0, 0.0);
        let src = StubVideo::new("src", 3000, Some(&audio)).encode();
        let tk = MockMediaToolkit;
        let info = tk.probe(&src).unwrap();
        assert_eq!(
            (info.duration_ms, info.audio_duration_ms),
            (3000, Some(3000))
        );
        assert_eq!(tk.demux_audio(&src, 24_000).unwrap(), audio);
        assert_eq!(tk.demux_audio(&src, 12_000).unwrap().len(), 36_000);
        let silent = tk.strip_audio(&src).unwrap();
        assert!(tk.demux_audio(&silent, 24_000).is_err());
        let range = TimeInterval::new(1000, 2000).unwrap();
        let clip = MockLipSyncer
            .lipsync(&silent, range, &audio.slice_ms(range))
            .unwrap();
        assert_eq!(tk.replace_range(&silent, range, &clip).unwrap(), silent);
        let muxed = tk.mux(&silent, &audio).unwrap();
        assert_eq!(muxed, src);
        assert!(MockLipSyncer.lipsync(&silent, range, &audio).is_err());
    }
}
