//! Parsers and emitters for SRT, WebVTT and the canonical transcript JSON.
//!
//! Emitters are byte-deterministic: LF line endings, two-digit hours and
//! three-digit milliseconds. SRT has no speaker channel, so speakers travel
//! as `[ID] ` text prefixes; a parse strips them only when every cue carries
//! one. WebVTT uses `<v ID>` voice spans. Word timings survive only in JSON.

mod json;
mod srt;
mod vtt;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{SegmentId, SpeakerId, Transcript, TranscriptSegment};

pub use json::{parse_transcript_json, to_canonical_json};

/// Largest timestamp both text formats can carry: 99:59:59.999.
pub const MAX_TIMESTAMP_MS: u64 = 99 * 3_600_000 + 59 * 60_000 + 59 * 1000 + 999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubtitleFormat {
    Srt,
    Vtt,
    #[serde(rename = "json")]
    CanonicalJson,
}

impl SubtitleFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            SubtitleFormat::Srt => "srt",
            SubtitleFormat::Vtt => "vtt",
            SubtitleFormat::CanonicalJson => "transcript.json",
        }
    }

    pub fn content_type(&self) -> &'static str {
        match self {
            SubtitleFormat::Srt => "application/x-subrip; charset=utf-8",
            SubtitleFormat::Vtt => "text/vtt; charset=utf-8",
            SubtitleFormat::CanonicalJson => "application/json",
        }
    }
}

impl FromStr for SubtitleFormat {
    type Err = SubtitleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "srt" => Ok(SubtitleFormat::Srt),
            "vtt" | "webvtt" => Ok(SubtitleFormat::Vtt),
            "json" | "transcript.json" => Ok(SubtitleFormat::CanonicalJson),
            _ => Err(SubtitleError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for SubtitleFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubtitleFormat::Srt => "srt",
            SubtitleFormat::Vtt => "vtt",
            SubtitleFormat::CanonicalJson => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubtitleError {
    #[error("line {line}: malformed cue: {reason}")]
    MalformedCue { line: usize, reason: String },
    #[error("no cues found")]
    EmptyFile,
    #[error("segment {segment} ends at {end_ms} ms, past 99:59:59.999")]
    TimestampOverflow { segment: SegmentId, end_ms: u64 },
    #[error("unknown field {0}")]
    UnknownField(String),
    #[error("invalid transcript JSON: {0}")]
    Json(String),
    #[error("unknown subtitle format {0:?}")]
    UnknownFormat(String),
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Skip malformed cues (recording warnings) instead of failing.
    pub lenient: bool,
    /// Language stamped on SRT/VTT transcripts; a VTT `Language:` header wins.
    pub language: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            lenient: false,
            language: "und".to_string(),
        }
    }
}

impl ParseOptions {
    pub fn strict(language: impl Into<String>) -> Self {
        Self {
            lenient: false,
            language: language.into(),
        }
    }

    pub fn lenient(language: impl Into<String>) -> Self {
        Self {
            lenient: true,
            language: language.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub transcript: Transcript,
    pub warnings: Vec<ParseWarning>,
}

pub fn parse_subtitles(
    input: &str,
    format: SubtitleFormat,
    opts: &ParseOptions,
) -> Result<Parsed, SubtitleError> {
    let input = input.strip_prefix('\u{feff}').unwrap_or(input);
    match format {
        SubtitleFormat::Srt => srt::parse(input, opts),
        SubtitleFormat::Vtt => vtt::parse(input, opts),
        SubtitleFormat::CanonicalJson => parse_transcript_json(input, opts.lenient),
    }
}

pub fn emit_subtitles(t: &Transcript, format: SubtitleFormat) -> Result<String, SubtitleError> {
    if format == SubtitleFormat::CanonicalJson {
        return Ok(to_canonical_json(t));
    }
    if let Some(seg) = t
        .segments
        .iter()
        .find(|s| s.interval.end() > MAX_TIMESTAMP_MS)
    {
        return Err(SubtitleError::TimestampOverflow {
            segment: seg.id.clone(),
            end_ms: seg.interval.end(),
        });
    }
    Ok(match format {
        SubtitleFormat::Srt => srt::emit(t),
        SubtitleFormat::Vtt => vtt::emit(t),
        SubtitleFormat::CanonicalJson => unreachable!(),
    })
}

// ---------------------------------------------------------------------------
// Helpers shared by the text formats
// ---------------------------------------------------------------------------

pub(crate) fn format_timestamp(ms: u64, frac_sep: char) -> String {
    let h = ms / 3_600_000;
    let m = ms / 60_000 % 60;
    let s = ms / 1000 % 60;
    let f = ms % 1000;
    format!("{h:02}:{m:02}:{s:02}{frac_sep}{f:03}")
}

/// Parses `[H+:]MM:SS<sep>mmm`. Hours are mandatory unless `hours_optional`.
pub(crate) fn parse_timestamp(s: &str, seps: &[char], hours_optional: bool) -> Option<u64> {
    let (clock, frac) = s.rsplit_once(|c| seps.contains(&c))?;
    if frac.len() != 3 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let parts: Vec<&str> = clock.split(':').collect();
    let (h, m, sec) = match parts.as_slice() {
        [h, m, s] => (*h, *m, *s),
        [m, s] if hours_optional => ("0", *m, *s),
        _ => return None,
    };
    let digits = |x: &str, exact: Option<usize>| {
        !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit()) && exact.is_none_or(|n| x.len() == n)
    };
    if !digits(h, None) || !digits(m, Some(2)) || !digits(sec, Some(2)) {
        return None;
    }
    let (h, m, sec, frac): (u64, u64, u64, u64) = (
        h.parse().ok()?,
        m.parse().ok()?,
        sec.parse().ok()?,
        frac.parse().ok()?,
    );
    if m >= 60 || sec >= 60 {
        return None;
    }
    Some(h * 3_600_000 + m * 60_000 + sec * 1000 + frac)
}

/// Splits normalized text into blocks of consecutive non-blank lines, each
/// tagged with the 1-based line number of its first line.
pub(crate) fn blocks(text: &str) -> Vec<(usize, Vec<&str>)> {
    let mut out = Vec::new();
    let mut current: Option<(usize, Vec<&str>)> = None;
    for (i, line) in text.split('\n').enumerate() {
        if line.trim().is_empty() {
            if let Some(b) = current.take() {
                out.push(b);
            }
        } else {
            current
                .get_or_insert_with(|| (i + 1, Vec::new()))
                .1
                .push(line);
        }
    }
    out.extend(current);
    out
}

pub(crate) fn normalize_newlines(s: &str) -> String {
    s.replace("\r\n", "\n").replace('\r', "\n")
}

/// Cue body lines as emitted: newlines normalized, blank lines dropped.
pub(crate) fn cue_lines(text: &str) -> Vec<String> {
    normalize_newlines(text)
        .split('\n')
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect()
}

/// Whether speakers must be written out for the transcript to round-trip.
pub(crate) fn needs_speaker_marks(t: &Transcript) -> bool {
    let speakers = t.speakers();
    speakers.len() > 1
        || speakers
            .first()
            .is_some_and(|s| *s != SpeakerId::default_speaker())
}

pub(crate) fn build_transcript(
    language: String,
    cues: Vec<(SpeakerId, crate::model::TimeInterval, String)>,
) -> Transcript {
    let segments = cues
        .into_iter()
        .enumerate()
        .map(|(i, (speaker, interval, text))| {
            TranscriptSegment::new(SegmentId::numbered(i), speaker, interval, text)
        })
        .collect();
    Transcript::new(language, segments)
}
