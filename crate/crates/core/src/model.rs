//! Domain types shared by every stage of the dubbing pipeline.
//!
//! All timestamps are integer milliseconds. Intervals are half-open
//! (`start` inclusive, `end` exclusive) so touching intervals do not overlap.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::ArtifactId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid interval [{start}, {end}): start must be before end")]
    InvalidInterval { start: u64, end: u64 },
    #[error("unknown tone {0:?} (expected formal, informal or friendly)")]
    UnknownTone(String),
    #[error("unknown stage {0:?}")]
    UnknownStage(String),
    #[error("unknown track kind {0:?}")]
    UnknownTrackKind(String),
    #[error("invalid speaker id {0:?}")]
    InvalidSpeaker(String),
    #[error("source and target language are both {0:?}")]
    SameLanguage(String),
    #[error("transcript failed validation with {} violation(s)", .0.violations.len())]
    InvalidTranscript(ValidationReport),
}

/// A non-empty half-open span of time in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct TimeInterval {
    start: u64,
    end: u64,
}

impl TimeInterval {
    pub fn new(start: u64, end: u64) -> Result<Self, ModelError> {
        if start < end {
            Ok(Self { start, end })
        } else {
            Err(ModelError::InvalidInterval { start, end })
        }
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn end(&self) -> u64 {
        self.end
    }

    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    /// Always false; kept so clippy's `len_without_is_empty` stays quiet.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, other: &TimeInterval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_point(&self, ms: u64) -> bool {
        self.start <= ms && ms < self.end
    }

    pub fn overlaps(&self, other: &TimeInterval) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn intersect(&self, other: &TimeInterval) -> Option<TimeInterval> {
        TimeInterval::new(self.start.max(other.start), self.end.min(other.end)).ok()
    }

    /// Smallest interval covering both.
    pub fn hull(&self, other: &TimeInterval) -> TimeInterval {
        TimeInterval {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Unvalidated interval as produced by detectors or read off the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInterval {
    pub start_ms: u64,
    pub end_ms: u64,
}

impl RawInterval {
    pub fn new(start_ms: u64, end_ms: u64) -> Self {
        Self { start_ms, end_ms }
    }
}

impl TryFrom<RawInterval> for TimeInterval {
    type Error = ModelError;

    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        TimeInterval::new(raw.start_ms, raw.end_ms)
    }
}

impl From<TimeInterval> for RawInterval {
    fn from(iv: TimeInterval) -> Self {
        RawInterval {
            start_ms: iv.start,
            end_ms: iv.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentId(pub String);

impl SegmentId {
    /// Ids handed out by parsers and mock transcribers: `seg-0001`, `seg-0002`, ...
    pub fn numbered(index: usize) -> Self {
        SegmentId(format!("seg-{:04}", index + 1))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SegmentId {
    fn from(s: &str) -> Self {
        SegmentId(s.to_string())
    }
}

/// Speaker identifier such as `S1` or `Kim`.
///
/// Must be non-empty, carry no surrounding whitespace and avoid `[]<>` and
/// control characters so it can be embedded in SRT tags and VTT voice spans.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpeakerId(pub String);

impl SpeakerId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if Self::is_valid(&id) {
            Ok(SpeakerId(id))
        } else {
            Err(ModelError::InvalidSpeaker(id))
        }
    }

    pub fn default_speaker() -> Self {
        SpeakerId("S1".to_string())
    }

    pub fn numbered(n: usize) -> Self {
        SpeakerId(format!("S{n}"))
    }

    pub fn is_valid(id: &str) -> bool {
        !id.is_empty()
            && id.trim() == id
            && !id
                .chars()
                .any(|c| c.is_control() || matches!(c, '[' | ']' | '<' | '>'))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpeakerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordTiming {
    pub word: String,
    #[serde(flatten)]
    pub interval: TimeInterval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub id: SegmentId,
    pub speaker: SpeakerId,
    #[serde(flatten)]
    pub interval: TimeInterval,
    pub text: String,
    #[serde(default)]
    pub words: Vec<WordTiming>,
}

impl TranscriptSegment {
    pub fn new(
        id: impl Into<SegmentId>,
        speaker: SpeakerId,
        interval: TimeInterval,
        text: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            speaker,
            interval,
            text: text.into(),
            words: Vec::new(),
        }
    }
}

impl From<String> for SegmentId {
    fn from(s: String) -> Self {
        SegmentId(s)
    }
}

/// Serializes exactly as the canonical transcript JSON
/// (`{language, segments: [{id, speaker, start_ms, end_ms, text, words}]}`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub language: String,
    pub segments: Vec<TranscriptSegment>,
}

impl Transcript {
    pub fn new(language: impl Into<String>, segments: Vec<TranscriptSegment>) -> Self {
        Self {
            language: language.into(),
            segments,
        }
    }

    pub fn empty(language: impl Into<String>) -> Self {
        Self::new(language, Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn segment(&self, id: &SegmentId) -> Option<&TranscriptSegment> {
        self.segments.iter().find(|s| &s.id == id)
    }

    /// Distinct speakers in order of first appearance.
    pub fn speakers(&self) -> Vec<SpeakerId> {
        let mut seen = Vec::new();
        for seg in &self.segments {
            if !seen.contains(&seg.speaker) {
                seen.push(seg.speaker.clone());
            }
        }
        seen
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerLabel {
    pub id: SpeakerId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_clip: Option<ArtifactId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackKind {
    Video,
    Vocals,
    Background,
    Transcript,
    TranslatedTranscript,
    DubbedAudio,
    LipsyncedVideo,
}

impl TrackKind {
    pub const ALL: [TrackKind; 7] = [
        TrackKind::Video,
        TrackKind::Vocals,
        TrackKind::Background,
        TrackKind::Transcript,
        TrackKind::TranslatedTranscript,
        TrackKind::DubbedAudio,
        TrackKind::LipsyncedVideo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TrackKind::Video => "video",
            TrackKind::Vocals => "vocals",
            TrackKind::Background => "background",
            TrackKind::Transcript => "transcript",
            TrackKind::TranslatedTranscript => "translated_transcript",
            TrackKind::DubbedAudio => "dubbed_audio",
            TrackKind::LipsyncedVideo => "lipsynced_video",
        }
    }

    pub fn is_transcript(&self) -> bool {
        matches!(
            self,
            TrackKind::Transcript | TrackKind::TranslatedTranscript
        )
    }

    pub fn is_audio(&self) -> bool {
        matches!(
            self,
            TrackKind::Vocals | TrackKind::Background | TrackKind::DubbedAudio
        )
    }

    pub fn is_video(&self) -> bool {
        matches!(self, TrackKind::Video | TrackKind::LipsyncedVideo)
    }

    /// The stage whose run registers this track.
    pub fn producing_stage(&self) -> Stage {
        match self {
            TrackKind::Video
            | TrackKind::Vocals
            | TrackKind::Background
            | TrackKind::Transcript => Stage::Analysis,
            TrackKind::TranslatedTranscript => Stage::Translation,
            TrackKind::DubbedAudio => Stage::Conversion,
            TrackKind::LipsyncedVideo => Stage::Lipsync,
        }
    }
}

impl fmt::Display for TrackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrackKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TrackKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ModelError::UnknownTrackKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Track {
    pub kind: TrackKind,
    pub artifact: ArtifactId,
    pub enabled: bool,
    pub produced_by: Stage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToneMode {
    Formal,
    Informal,
    Friendly,
}

impl ToneMode {
    pub const ALL: [ToneMode; 3] = [ToneMode::Formal, ToneMode::Informal, ToneMode::Friendly];

    pub fn as_str(&self) -> &'static str {
        match self {
            ToneMode::Formal => "formal",
            ToneMode::Informal => "informal",
            ToneMode::Friendly => "friendly",
        }
    }
}

impl FromStr for ToneMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "formal" => Ok(ToneMode::Formal),
            "informal" => Ok(ToneMode::Informal),
            "friendly" => Ok(ToneMode::Friendly),
            _ => Err(ModelError::UnknownTone(s.to_string())),
        }
    }
}

impl fmt::Display for ToneMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A step the user can trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Analysis,
    Translation,
    Conversion,
    Lipsync,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Analysis,
        Stage::Translation,
        Stage::Conversion,
        Stage::Lipsync,
        Stage::Export,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Analysis => "analysis",
            Stage::Translation => "translation",
            Stage::Conversion => "conversion",
            Stage::Lipsync => "lipsync",
            Stage::Export => "export",
        }
    }

    /// Minimum state a project must have reached before this stage may run.
    pub fn requires(&self) -> StageState {
        match self {
            Stage::Analysis => StageState::New,
            Stage::Translation => StageState::Analyzed,
            Stage::Conversion => StageState::Translated,
            Stage::Lipsync | Stage::Export => StageState::Converted,
        }
    }

    /// State reached when this stage completes.
    pub fn completes_to(&self) -> StageState {
        match self {
            Stage::Analysis => StageState::Analyzed,
            Stage::Translation => StageState::Translated,
            Stage::Conversion => StageState::Converted,
            Stage::Lipsync => StageState::Lipsynced,
            Stage::Export => StageState::Exported,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| ModelError::UnknownStage(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum StageState {
    New,
    Analyzed,
    Translated,
    Converted,
    Lipsynced,
    Exported,
    Failed { stage: Stage, reason: String },
}

impl StageState {
    /// Position in the linear order; `None` for `Failed`.
    pub fn rank(&self) -> Option<u8> {
        Some(match self {
            StageState::New => 0,
            StageState::Analyzed => 1,
            StageState::Translated => 2,
            StageState::Converted => 3,
            StageState::Lipsynced => 4,
            StageState::Exported => 5,
            StageState::Failed { .. } => return None,
        })
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, StageState::Failed { .. })
    }
}

/// One dubbing job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub source_asset: ArtifactId,
    /// Filled from the transcriber when not supplied up front.
    pub source_language: Option<String>,
    pub target_language: String,
    pub tone: ToneMode,
    pub multi_speaker: bool,
    pub stage: StageState,
    pub tracks: BTreeMap<TrackKind, Track>,
    pub speakers: Vec<SpeakerLabel>,
    pub video_duration: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement_plan: Option<ArtifactId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export: Option<ArtifactId>,
    #[serde(default)]
    pub runs: Vec<crate::pipeline::StageRun>,
}

impl Project {
    pub fn new(
        id: impl Into<String>,
        source_asset: ArtifactId,
        source_language: Option<String>,
        target_language: impl Into<String>,
        tone: ToneMode,
        multi_speaker: bool,
    ) -> Result<Self, ModelError> {
        let target_language = target_language.into();
        if let Some(src) = &source_language {
            if same_language(src, &target_language) {
                return Err(ModelError::SameLanguage(target_language));
            }
        }
        Ok(Self {
            id: id.into(),
            source_asset,
            source_language,
            target_language,
            tone,
            multi_speaker,
            stage: StageState::New,
            tracks: BTreeMap::new(),
            speakers: Vec::new(),
            video_duration: 0,
            placement_plan: None,
            export: None,
            runs: Vec::new(),
        })
    }

    pub fn track(&self, kind: TrackKind) -> Option<&Track> {
        self.tracks.get(&kind)
    }

    /// The last successfully reached state. For a failed project this is the
    /// state the failed stage started from.
    pub fn effective_stage(&self) -> StageState {
        match &self.stage {
            StageState::Failed { stage, .. } => match stage {
                Stage::Analysis => StageState::New,
                Stage::Translation => StageState::Analyzed,
                Stage::Conversion => StageState::Translated,
                Stage::Lipsync => StageState::Converted,
                Stage::Export => {
                    if self.tracks.contains_key(&TrackKind::LipsyncedVideo) {
                        StageState::Lipsynced
                    } else {
                        StageState::Converted
                    }
                }
            },
            other => other.clone(),
        }
    }

    /// Warnings from the most recent run of every stage, in stage order.
    pub fn warnings(&self) -> Vec<String> {
        let mut latest: BTreeMap<Stage, &crate::pipeline::StageRun> = BTreeMap::new();
        for run in &self.runs {
            latest.insert(run.stage, run);
        }
        latest
            .values()
            .flat_map(|run| run.warnings.iter().cloned())
            .collect()
    }

    pub fn speaker(&self, id: &SpeakerId) -> Option<&SpeakerLabel> {
        self.speakers.iter().find(|s| &s.id == id)
    }
}

/// Compares BCP-47 codes case-insensitively.
pub fn same_language(a: &str, b: &str) -> bool {
    a.eq_ignore_ascii_case(b)
}

/// Primary language subtag, lowercased (`pt-BR` → `pt`).
pub fn primary_language(code: &str) -> String {
    code.split(['-', '_'])
        .next()
        .unwrap_or("")
        .to_ascii_lowercase()
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicateId,
    EmptyId,
    InvalidSpeaker,
    SegmentOrder,
    SameSpeakerOverlap,
    EmptyWord,
    WordOrder,
    WordOutsideSegment,
    WordTextMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub segment_index: usize,
    pub segment_id: SegmentId,
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_id: Option<SegmentId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "segment {} (#{}): {}",
            self.segment_id, self.segment_index, self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Punctuation-free, whitespace-collapsed form used to compare word timings
/// against segment text.
fn comparable_text(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Checks every transcript invariant and reports violations in segment order.
pub fn validate_transcript(t: &Transcript) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen_ids: HashMap<&SegmentId, usize> = HashMap::new();
    // Per speaker: the earlier segment reaching furthest right.
    let mut reach: HashMap<&SpeakerId, &TranscriptSegment> = HashMap::new();
    let mut prev_start: Option<u64> = None;

    for (index, seg) in t.segments.iter().enumerate() {
        let mut push = |rule: Rule, other_id: Option<SegmentId>, detail: String| {
            violations.push(Violation {
                segment_index: index,
                segment_id: seg.id.clone(),
                rule,
                other_id,
                detail,
            })
        };

        if seg.id.0.trim().is_empty() {
            push(Rule::EmptyId, None, "segment id is empty".into());
        } else if let Some(first) = seen_ids.get(&seg.id) {
            push(
                Rule::DuplicateId,
                Some(seg.id.clone()),
                format!("id already used by segment #{first}"),
            );
        } else {
            seen_ids.insert(&seg.id, index);
        }

        if !SpeakerId::is_valid(seg.speaker.as_str()) {
            push(
                Rule::InvalidSpeaker,
                None,
                format!("speaker id {:?} is not allowed", seg.speaker.as_str()),
            );
        }

        if let Some(p) = prev_start {
            if seg.interval.start() < p {
                push(
                    Rule::SegmentOrder,
                    None,
                    format!(
                        "starts at {} ms, before the previous segment ({p} ms)",
                        seg.interval.start()
                    ),
                );
            }
        }
        prev_start = Some(prev_start.map_or(seg.interval.start(), |p| p.max(seg.interval.start())));

        match reach.get(&seg.speaker) {
            Some(earlier) if earlier.interval.overlaps(&seg.interval) => {
                push(
                    Rule::SameSpeakerOverlap,
                    Some(earlier.id.clone()),
                    format!(
                        "{} overlaps {} {} of the same speaker {}",
                        seg.interval, earlier.id, earlier.interval, seg.speaker
                    ),
                );
                if seg.interval.end() > earlier.interval.end() {
                    reach.insert(&seg.speaker, seg);
                }
            }
            Some(earlier) if earlier.interval.end() >= seg.interval.end() => {}
            _ => {
                reach.insert(&seg.speaker, seg);
            }
        }

        if !seg.words.is_empty() {
            let mut prev_word_end: Option<u64> = None;
            for (wi, w) in seg.words.iter().enumerate() {
                if w.word.trim().is_empty() {
                    push(Rule::EmptyWord, None, format!("word #{wi} is empty"));
                }
                if !seg.interval.contains(&w.interval) {
                    push(
                        Rule::WordOutsideSegment,
                        None,
                        format!("word #{wi} {} lies outside {}", w.interval, seg.interval),
                    );
                }
                if let Some(pe) = prev_word_end {
                    if w.interval.start() < pe {
                        push(
                            Rule::WordOrder,
                            None,
                            format!("word #{wi} starts at {} ms before the previous word ends ({pe} ms)", w.interval.start()),
                        );
                    }
                }
                prev_word_end =
                    Some(prev_word_end.map_or(w.interval.end(), |pe| pe.max(w.interval.end())));
            }
            let joined = seg
                .words
                .iter()
                .map(|w| w.word.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            if comparable_text(&joined) != comparable_text(&seg.text) {
                push(
                    Rule::WordTextMismatch,
                    None,
                    format!("words {joined:?} do not match text {:?}", seg.text),
                );
            }
        }
    }

    ValidationReport { violations }
}

/// Joins same-speaker neighbours separated by at most `max_gap` ms whose
/// combined text stays within `max_chars` characters.
///
/// The merged segment keeps the first id. Word timings are concatenated when
/// every non-empty part has them; otherwise the merged segment carries none.
pub fn merge_adjacent_segments(
    t: &Transcript,
    max_gap: u64,
    max_chars: usize,
) -> Result<Transcript, ModelError> {
    let report = validate_transcript(t);
    if !report.is_empty() {
        return Err(ModelError::InvalidTranscript(report));
    }

    let mut out: Vec<TranscriptSegment> = Vec::with_capacity(t.segments.len());
    for seg in &t.segments {
        if let Some(last) = out.last_mut() {
            if last.speaker == seg.speaker && seg.interval.start() >= last.interval.end() {
                let gap = seg.interval.start() - last.interval.end();
                let text = join_texts(&last.text, &seg.text);
                if gap <= max_gap && text.chars().count() <= max_chars {
                    let words_ok =
                        |s: &TranscriptSegment| s.text.trim().is_empty() || !s.words.is_empty();
                    let words = if words_ok(last) && words_ok(seg) {
                        last.words.iter().chain(&seg.words).cloned().collect()
                    } else {
                        Vec::new()
                    };
                    last.interval = last.interval.hull(&seg.interval);
                    last.text = text;
                    last.words = words;
                    continue;
                }
            }
        }
        out.push(seg.clone());
    }

    Ok(Transcript::new(t.language.clone(), out))
}

fn join_texts(a: &str, b: &str) -> String {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => b.to_string(),
        (_, true) => a.to_string(),
        _ => format!("{a} {b}"),
    }
}
