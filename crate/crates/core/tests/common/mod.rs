//! Generators and independent reference implementations shared by the
//! property tests and the acceptance run.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use globalize_core::alignment::{PlacementFlag, PlacementPlan, StretchPolicy};
use globalize_core::engines::{EngineError, EngineInfo, Translator};
use globalize_core::model::{
    RawInterval, SegmentId, SpeakerId, Stage, StageState, TimeInterval, TrackKind, Transcript,
    TranscriptSegment,
};
use globalize_core::translation::{ANSWER_MARKER, DEFAULT_SEPARATOR, PAYLOAD_HEADER};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Intervals: 1 ms membership bitmaps
// ---------------------------------------------------------------------------

pub const SPAN_MS: u64 = 10_000;

/// Up to `max_n` valid intervals inside `[0, SPAN_MS)`, biased towards short
/// ones and touching neighbours.
pub fn random_intervals(rng: &mut impl Rng, max_n: usize) -> Vec<RawInterval> {
    let n = rng.gen_range(0..=max_n);
    (0..n)
        .map(|_| {
            let start = if rng.gen_bool(0.2) {
                rng.gen_range(0..SPAN_MS / 100) * 100
            } else {
                rng.gen_range(0..SPAN_MS - 1)
            };
            let len = match rng.gen_range(0..3) {
                0 => rng.gen_range(1..50),
                1 => rng.gen_range(1..600),
                _ => rng.gen_range(1..3000),
            };
            RawInterval::new(start, (start + len).min(SPAN_MS))
        })
        .collect()
}

pub fn bitmap(xs: &[RawInterval], span: u64) -> Vec<bool> {
    let mut bits = vec![false; span as usize];
    for x in xs {
        for b in &mut bits[x.start_ms as usize..x.end_ms as usize] {
            *b = true;
        }
    }
    bits
}

/// Maximal runs of set bits as half-open intervals.
pub fn runs(bits: &[bool]) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &b) in bits.iter().chain(std::iter::once(&false)).enumerate() {
        match (b, start) {
            (true, None) => start = Some(i as u64),
            (false, Some(s)) => {
                out.push((s, i as u64));
                start = None;
            }
            _ => {}
        }
    }
    out
}

pub fn pairs(xs: &[TimeInterval]) -> Vec<(u64, u64)> {
    xs.iter().map(|x| (x.start(), x.end())).collect()
}

/// Pointwise filter → pad → clamp over the bitmap of the input.
pub fn filter_pad_oracle(
    xs: &[RawInterval],
    min_duration: u64,
    pad: u64,
    bounds: (u64, u64),
) -> Vec<(u64, u64)> {
    let span = SPAN_MS + pad + 1;
    let bits = bitmap(xs, span);
    let mut out = vec![false; span as usize];
    for (s, e) in runs(&bits) {
        if e - s < min_duration {
            continue;
        }
        for p in s.saturating_sub(pad)..(e + pad).min(span) {
            if p >= bounds.0 && p < bounds.1 {
                out[p as usize] = true;
            }
        }
    }
    runs(&out)
}

// ---------------------------------------------------------------------------
// Transcripts
// ---------------------------------------------------------------------------

const WORDS: &[&str] = &[
    "the",
    "lecture",
    "covers",
    "graphs",
    "and",
    "their",
    "spectra",
    "today",
    "we",
    "prove",
    "a",
    "lemma",
    "about",
    "eigen",
    "values",
    "café",
    "naïve",
    "déjà",
    "vu",
    "x²",
    "O(n)",
    "it's",
    "\"quoted\"",
    "50%",
    "rock&roll",
    "<tag>",
    "a|b",
    "[aside]",
    "Zoë",
    "ß",
    "—",
    "…",
];

pub fn random_text(rng: &mut impl Rng) -> String {
    let lines = if rng.gen_bool(0.2) { 2 } else { 1 };
    (0..lines)
        .map(|_| {
            let n = rng.gen_range(1..9);
            (0..n)
                .map(|_| *WORDS.choose(rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// A valid transcript: time-ordered starts, no same-speaker overlap,
/// crosstalk between speakers allowed.
pub fn random_transcript(rng: &mut impl Rng, max_segments: usize, speakers: &[&str]) -> Transcript {
    let n = rng.gen_range(0..=max_segments);
    let mut free_at: HashMap<&str, u64> = HashMap::new();
    let mut cursor = rng.gen_range(0..2000u64);
    let mut segments = Vec::with_capacity(n);
    for i in 0..n {
        let speaker = *speakers.choose(rng).unwrap();
        let start = cursor.max(*free_at.get(speaker).unwrap_or(&0));
        let len = rng.gen_range(200..6000);
        let end = start + len;
        free_at.insert(speaker, end + rng.gen_range(0..400));
        segments.push(TranscriptSegment::new(
            SegmentId::numbered(i),
            SpeakerId::new(speaker).unwrap(),
            TimeInterval::new(start, end).unwrap(),
            random_text(rng),
        ));
        cursor = start + rng.gen_range(0..len + 800);
    }
    Transcript::new("en", segments)
}

// ---------------------------------------------------------------------------
// Placement: straight-line reference and invariant checker
// ---------------------------------------------------------------------------

/// Expected (target end, flags) for one segment, derived directly from the
/// rules without sharing code with the planner.
pub fn reference_placement(
    slot_start: u64,
    slot_end: u64,
    synth: u64,
    next_same_speaker_start: Option<u64>,
    video_duration: u64,
    p: &StretchPolicy,
) -> (u64, BTreeSet<PlacementFlag>) {
    let slot = slot_end - slot_start;
    let raw = synth as f64 / slot as f64;
    let mut flags = BTreeSet::new();
    let factor = if raw > p.f_max {
        flags.insert(PlacementFlag::Clamped);
        p.f_max
    } else if raw < p.f_min {
        flags.insert(PlacementFlag::Clamped);
        p.f_min
    } else {
        raw
    };
    let stretched = (synth as f64 / factor).round() as u64;
    if stretched <= slot {
        return (slot_start + stretched, flags);
    }
    let gap = match next_same_speaker_start {
        Some(n) => n
            .saturating_sub(slot_end)
            .saturating_sub(p.min_inter_gap_ms),
        None => video_duration - slot_end,
    };
    let borrow = gap.min(p.max_borrow_ms);
    if borrow > 0 {
        flags.insert(PlacementFlag::Borrowed);
    }
    if stretched > slot + borrow {
        flags.insert(PlacementFlag::Overstretched);
        return (slot_end + borrow, flags);
    }
    (slot_start + stretched, flags)
}

/// Checks a plan against the transcript it was made for. Returns the first
/// violated property.
pub fn check_plan(
    t: &Transcript,
    synth: &BTreeMap<SegmentId, u64>,
    video_duration: u64,
    policy: &StretchPolicy,
    plan: &PlacementPlan,
) -> Result<(), String> {
    if plan.placements.len() != t.segments.len() {
        return Err(format!(
            "{} placements for {} segments",
            plan.placements.len(),
            t.segments.len()
        ));
    }
    let mut next_start: HashMap<&SegmentId, u64> = HashMap::new();
    let mut last: HashMap<&SpeakerId, &SegmentId> = HashMap::new();
    for s in &t.segments {
        if let Some(prev) = last.insert(&s.speaker, &s.id) {
            next_start.insert(prev, s.interval.start());
        }
    }
    let mut prev_target: HashMap<&SpeakerId, (&TranscriptSegment, TimeInterval, bool)> =
        HashMap::new();
    for (seg, pl) in t.segments.iter().zip(&plan.placements) {
        let d = synth[&seg.id];
        if pl.segment_id != seg.id
            || pl.speaker != seg.speaker
            || pl.source_interval != seg.interval
        {
            return Err(format!("{}: placement does not mirror its segment", seg.id));
        }
        if pl.target_interval.start() != seg.interval.start() {
            return Err(format!(
                "{}: target does not start at the source start",
                seg.id
            ));
        }
        if pl.target_interval.end() > video_duration {
            return Err(format!(
                "{}: target {} past video end {video_duration}",
                seg.id, pl.target_interval
            ));
        }
        let (end, flags) = reference_placement(
            seg.interval.start(),
            seg.interval.end(),
            d,
            next_start.get(&seg.id).copied(),
            video_duration,
            policy,
        );
        if pl.target_interval.end() != end || pl.flags != flags {
            return Err(format!(
                "{}: got {} {:?}, reference [{}, {end}) {flags:?}",
                seg.id,
                pl.target_interval,
                pl.flags,
                seg.interval.start()
            ));
        }
        // Nothing is dropped: the stretched clip carries the whole synthesis.
        let carried = pl.target_interval.len() as f64 * pl.stretch_factor;
        if (carried - d as f64).abs() > pl.stretch_factor * 0.5 + 1e-6 {
            return Err(format!("{}: {carried} ms carried of {d} ms", seg.id));
        }
        let over = pl.flags.contains(&PlacementFlag::Overstretched);
        if !over
            && (pl.stretch_factor < policy.f_min - 1e-12
                || pl.stretch_factor > policy.f_max + 1e-12)
        {
            return Err(format!(
                "{}: factor {} outside the clamp",
                seg.id, pl.stretch_factor
            ));
        }
        if let Some((prev_seg, prev, prev_over)) = prev_target.get(&seg.speaker) {
            if prev.end() > pl.target_interval.start() {
                return Err(format!(
                    "{}: overlaps the previous same-speaker target {prev}",
                    seg.id
                ));
            }
            let source_gap = seg.interval.start() - prev_seg.interval.end();
            let gap = pl.target_interval.start() - prev.end();
            if !prev_over && gap < source_gap.min(policy.min_inter_gap_ms) {
                return Err(format!("{}: gap {gap} ms below the reserve", seg.id));
            }
        }
        prev_target.insert(&seg.speaker, (seg, pl.target_interval, over));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Translation: adversarial adapters
// ---------------------------------------------------------------------------

pub fn payload_texts(prompt: &str) -> Vec<String> {
    let body = prompt.split_once(PAYLOAD_HEADER).expect("payload header").1;
    body.strip_suffix('\n')
        .unwrap_or(body)
        .split(DEFAULT_SEPARATOR)
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Misbehaviour {
    Correct,
    DropLast,
    MergeSeparators,
    EmptyEntry,
    Transient,
    ExtraEntry,
    NoMarker,
    Rambling,
}

pub const MISBEHAVIOURS: [Misbehaviour; 8] = [
    Misbehaviour::Correct,
    Misbehaviour::DropLast,
    Misbehaviour::MergeSeparators,
    Misbehaviour::EmptyEntry,
    Misbehaviour::Transient,
    Misbehaviour::ExtraEntry,
    Misbehaviour::NoMarker,
    Misbehaviour::Rambling,
];

/// Picks a misbehaviour per call from a seeded stream, or always misbehaves
/// on batches larger than `honest_below`.
pub struct AdversarialTranslator {
    rng: Mutex<ChaCha8Rng>,
    pub calls: AtomicUsize,
    pub misbehave_probability: f64,
    pub honest_singletons: bool,
}

impl AdversarialTranslator {
    pub fn new(seed: u64, misbehave_probability: f64, honest_singletons: bool) -> Self {
        Self {
            rng: Mutex::new(rng(seed)),
            calls: AtomicUsize::new(0),
            misbehave_probability,
            honest_singletons,
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

fn answer(parts: &[String]) -> String {
    format!(
        "The register is neutral.\n{ANSWER_MARKER}\n{}",
        parts.join(DEFAULT_SEPARATOR)
    )
}

impl Translator for AdversarialTranslator {
    fn info(&self) -> EngineInfo {
        EngineInfo::new("adversarial", "0")
    }

    fn translate(&self, prompt: &str) -> Result<String, EngineError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let texts = payload_texts(prompt);
        let mut translated: Vec<String> = texts.iter().map(|t| format!("<{}>", t.trim())).collect();
        let mode = {
            let mut rng = self.rng.lock().unwrap();
            if (self.honest_singletons && texts.len() == 1)
                || !rng.gen_bool(self.misbehave_probability)
            {
                Misbehaviour::Correct
            } else {
                *MISBEHAVIOURS[1..].choose(&mut *rng).unwrap()
            }
        };
        match mode {
            Misbehaviour::Correct => Ok(answer(&translated)),
            Misbehaviour::DropLast => {
                translated.pop();
                Ok(answer(&translated))
            }
            Misbehaviour::MergeSeparators => {
                Ok(format!("{ANSWER_MARKER}\n{}", translated.join(" ")))
            }
            Misbehaviour::EmptyEntry => {
                translated[0] = "  ".into();
                Ok(answer(&translated))
            }
            Misbehaviour::Transient => Err(EngineError::Transport("connection reset".into())),
            Misbehaviour::ExtraEntry => {
                translated.push("bonus".into());
                Ok(answer(&translated))
            }
            Misbehaviour::NoMarker => Ok(translated.join(DEFAULT_SEPARATOR)),
            Misbehaviour::Rambling => Ok(format!(
                "{ANSWER_MARKER} maybe {}\n{}",
                DEFAULT_SEPARATOR,
                answer(&translated).replace(ANSWER_MARKER, "ANSWER :")
            )),
        }
    }

    fn max_parallel_calls(&self) -> Option<usize> {
        Some(1)
    }
}

// ---------------------------------------------------------------------------
// Stage state machine: hand-written transition table
// ---------------------------------------------------------------------------

/// Next state for a stage request, or `None` when out of order.
pub fn expected_transition(state: &StageState, stage: Stage) -> Option<StageState> {
    use Stage::*;
    use StageState as S;
    match (state, stage) {
        (S::New, Analysis) => Some(S::Analyzed),
        (S::New, _) => None,

        (S::Analyzed, Analysis) => Some(S::Analyzed),
        (S::Analyzed, Translation) => Some(S::Translated),
        (S::Analyzed, _) => None,

        (S::Translated, Analysis) => Some(S::Analyzed),
        (S::Translated, Translation) => Some(S::Translated),
        (S::Translated, Conversion) => Some(S::Converted),
        (S::Translated, _) => None,

        (S::Converted | S::Lipsynced | S::Exported, Analysis) => Some(S::Analyzed),
        (S::Converted | S::Lipsynced | S::Exported, Translation) => Some(S::Translated),
        (S::Converted | S::Lipsynced | S::Exported, Conversion) => Some(S::Converted),
        (S::Converted | S::Lipsynced | S::Exported, Lipsync) => Some(S::Lipsynced),
        (S::Converted | S::Lipsynced | S::Exported, Export) => Some(S::Exported),

        (S::Failed { .. }, _) => unreachable!("the oracle never fails"),
    }
}

/// Tracks present after a run of `stage`: everything produced by earlier
/// stages survives, everything from `stage` on is replaced.
pub fn expected_tracks(before: &BTreeSet<TrackKind>, stage: Stage) -> BTreeSet<TrackKind> {
    use TrackKind::*;
    let kept: BTreeSet<TrackKind> = before
        .iter()
        .copied()
        .filter(|k| match stage {
            Stage::Analysis => false,
            Stage::Translation => matches!(k, Video | Vocals | Background | Transcript),
            Stage::Conversion => matches!(
                k,
                Video | Vocals | Background | Transcript | TranslatedTranscript
            ),
            Stage::Lipsync => !matches!(k, LipsyncedVideo),
            Stage::Export => true,
        })
        .collect();
    let produced: &[TrackKind] = match stage {
        Stage::Analysis => &[Video, Vocals, Background, Transcript],
        Stage::Translation => &[TranslatedTranscript],
        Stage::Conversion => &[DubbedAudio],
        Stage::Lipsync => &[LipsyncedVideo],
        Stage::Export => &[],
    };
    kept.into_iter().chain(produced.iter().copied()).collect()
}

/// Depth-first over every stage-trigger sequence up to `depth`, comparing the
/// pipeline against [`expected_transition`] and [`expected_tracks`] at every
/// node. Returns the number of sequences checked.
pub fn explore_state_machine(
    pipeline: &globalize_core::pipeline::Pipeline,
    root: &globalize_core::model::Project,
    reference: &BTreeMap<TrackKind, globalize_core::store::ArtifactId>,
    depth: usize,
) -> Result<usize, String> {
    fn walk(
        pipeline: &globalize_core::pipeline::Pipeline,
        project: &globalize_core::model::Project,
        tracks: &BTreeSet<TrackKind>,
        reference: &BTreeMap<TrackKind, globalize_core::store::ArtifactId>,
        path: &mut Vec<Stage>,
        depth: usize,
    ) -> Result<usize, String> {
        let mut count = 1;
        if path.len() == depth {
            return Ok(count);
        }
        for stage in Stage::ALL {
            path.push(stage);
            let mut next = project.clone();
            let outcome = pipeline.advance(&mut next, stage);
            let expected = expected_transition(&project.stage, stage);
            let next_tracks = match (&outcome, &expected) {
                (Err(globalize_core::pipeline::PipelineError::OutOfOrder { .. }), None) => {
                    if &next != project {
                        return Err(format!("{path:?}: rejected request changed the project"));
                    }
                    tracks.clone()
                }
                (Ok(_), Some(state)) => {
                    if &next.stage != state {
                        return Err(format!("{path:?}: reached {:?}, want {state:?}", next.stage));
                    }
                    let want = expected_tracks(tracks, stage);
                    let got: BTreeSet<TrackKind> = next.tracks.keys().copied().collect();
                    if got != want {
                        return Err(format!("{path:?}: tracks {got:?}, want {want:?}"));
                    }
                    for (kind, track) in &next.tracks {
                        if reference.get(kind) != Some(&track.artifact) {
                            return Err(format!("{path:?}: {kind} differs from the straight run"));
                        }
                        let logged = next
                            .runs
                            .iter()
                            .any(|r| r.stage == kind.producing_stage() && r.error.is_none());
                        if !logged {
                            return Err(format!("{path:?}: {kind} without a logged run"));
                        }
                    }
                    let converted = matches!(
                        state,
                        StageState::Converted | StageState::Lipsynced | StageState::Exported
                    );
                    if next.placement_plan.is_some() != converted {
                        return Err(format!("{path:?}: placement plan presence"));
                    }
                    if next.export.is_some() != (state == &StageState::Exported) {
                        return Err(format!("{path:?}: export presence"));
                    }
                    want
                }
                (got, want) => {
                    return Err(format!(
                        "{path:?}: from {:?} got {:?}, want {want:?}",
                        project.stage,
                        got.as_ref().map(|_| ()).map_err(|e| e.to_string())
                    ))
                }
            };
            count += walk(pipeline, &next, &next_tracks, reference, path, depth)?;
            path.pop();
        }
        Ok(count)
    }
    walk(pipeline, root, &BTreeSet::new(), reference, &mut Vec::new(), depth)
}

/// Artifacts of a straight run through every stage, keyed by kind.
pub fn straight_run(
    pipeline: &globalize_core::pipeline::Pipeline,
    root: &globalize_core::model::Project,
) -> BTreeMap<TrackKind, globalize_core::store::ArtifactId> {
    let mut p = root.clone();
    for s in Stage::ALL {
        pipeline.advance(&mut p, s).unwrap();
    }
    p.tracks.iter().map(|(k, t)| (*k, t.artifact.clone())).collect()
}

/// Re-synthesizes every clip of a multi-speaker run per speaker, renders one
/// bed per speaker and checks the pipeline's dub track sample by sample
/// against them: each bed is silent outside its own targets, carries its
/// speaker's tone, and the beds sum to dubbed minus background exactly.
/// Returns the number of samples compared.
pub fn check_speaker_isolation(seed: u64, duration_ms: u64) -> Result<usize, String> {
    use globalize_core::engines::fixture::lecture_fixture;
    use globalize_core::engines::mock::{mock_engines, speaker_tone_hz, MockEngineConfig};
    use globalize_core::engines::{ms_to_samples, render_dub_track, AudioBuffer};
    use globalize_core::pipeline::{Pipeline, PipelineConfig};
    use globalize_core::store::ArtifactStore;
    use globalize_core::subtitle::SubtitleFormat;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = MockEngineConfig {
        seed,
        ..MockEngineConfig::default()
    };
    let pipeline = Pipeline::new(
        std::sync::Arc::new(ArtifactStore::open(dir.path()).map_err(|e| e.to_string())?),
        mock_engines(config.clone()),
        PipelineConfig::default(),
    );
    let f = lecture_fixture(seed, duration_ms, pipeline.config().sample_rate, "en");
    let mut p = pipeline
        .create_project("iso", &f.video, None, "es", globalize_core::model::ToneMode::Formal, true)
        .map_err(|e| e.to_string())?;
    for s in [Stage::Analysis, Stage::Translation, Stage::Conversion] {
        pipeline.advance(&mut p, s).map_err(|e| format!("{s}: {e}"))?;
    }
    let plan = pipeline.placement_plan(&p).map_err(|e| e.to_string())?;
    let translated = pipeline
        .track_transcript(&p, TrackKind::TranslatedTranscript)
        .map_err(|e| e.to_string())?;
    let rate = pipeline.config().sample_rate;
    let wav = |k| -> Result<AudioBuffer, String> {
        let file = pipeline
            .track_file(&p, k, SubtitleFormat::Srt)
            .map_err(|e| e.to_string())?;
        AudioBuffer::from_wav(&file.bytes).map_err(|e| e.to_string())
    };
    let (dubbed, background) = (wav(TrackKind::DubbedAudio)?, wav(TrackKind::Background)?);
    let bed: Vec<i32> = dubbed
        .samples
        .iter()
        .zip(&background.samples)
        .map(|(&d, &b)| d as i32 - b as i32)
        .collect();

    let synth = mock_engines(config).synthesizer;
    let mut total = vec![0i32; bed.len()];
    let speakers: BTreeSet<_> = plan.placements.iter().map(|p| p.speaker.clone()).collect();
    if speakers.len() < 2 {
        return Err(format!("{} speaker(s) placed, want at least 2", speakers.len()));
    }
    for speaker in &speakers {
        let own = PlacementPlan {
            video_duration_ms: plan.video_duration_ms,
            placements: plan
                .placements
                .iter()
                .filter(|p| &p.speaker == speaker)
                .cloned()
                .collect(),
        };
        let mut clips = BTreeMap::new();
        for pl in &own.placements {
            let seg = translated
                .segment(&pl.segment_id)
                .ok_or_else(|| format!("no translated segment {}", pl.segment_id))?;
            let clip = synth
                .synthesize(&seg.text, "es", speaker, None, rate)
                .map_err(|e| e.to_string())?;
            clips.insert(pl.segment_id.clone(), clip);
        }
        let bed_one = render_dub_track(&own, &clips, plan.video_duration_ms, rate)
            .map_err(|e| e.to_string())?;
        let mut inside = vec![false; bed.len()];
        for pl in &own.placements {
            let a = ms_to_samples(pl.target_interval.start(), rate).min(bed.len());
            let b = ms_to_samples(pl.target_interval.end(), rate).min(bed.len());
            inside[a..b].iter_mut().for_each(|x| *x = true);
        }
        if bed_one.len() != bed.len() {
            return Err(format!("{speaker}: bed has {} samples, want {}", bed_one.len(), bed.len()));
        }
        for (i, &s) in bed_one.samples.iter().enumerate() {
            if s != 0 && !inside[i] {
                return Err(format!("{speaker} leaks at sample {i}"));
            }
            total[i] += s as i32;
        }
        // The speaker's own frequency, kept by pitch-preserving stretching.
        let slice = bed_one.slice_ms(own.placements[0].target_interval);
        let crossings = slice
            .samples
            .windows(2)
            .filter(|w| (w[0] < 0) != (w[1] < 0))
            .count() as f64;
        let hz = crossings / 2.0 / (slice.len() as f64 / rate as f64);
        let want = speaker_tone_hz(speaker);
        if (hz - want).abs() >= want * 0.05 {
            return Err(format!("{speaker}: {hz:.1} Hz, want {want}"));
        }
    }
    if let Some(i) = (0..bed.len()).find(|&i| bed[i] != total[i]) {
        return Err(format!(
            "sample {i}: dubbed - background = {}, speaker beds sum to {}",
            bed[i], total[i]
        ));
    }
    Ok(bed.len())
}
