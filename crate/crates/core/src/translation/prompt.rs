//! Prompt construction and response parsing for segment-structured
//! translation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::TranslationError;
use crate::model::{SegmentId, ToneMode};

/// Bumped whenever the prompt wording changes.
pub const PROMPT_TEMPLATE_VERSION: &str = "dub-translate/v1";
pub const DEFAULT_SEPARATOR: &str = "|||";
pub const ROLE_LINE: &str = "You are a professional dubbing translator";
pub const ANSWER_MARKER: &str = "ANSWER:";
/// Heading that opens the payload section; everything after it is segment text.
pub const PAYLOAD_HEADER: &str = "Segments:\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub id: SegmentId,
    pub text: String,
    pub slot_ms: u64,
    pub syllables: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub separator: String,
    pub role_line: String,
    pub tone: ToneMode,
    pub source_language: String,
    pub target_language: String,
    pub syllable_hint: bool,
    pub cot: bool,
    pub batch: Vec<BatchItem>,
}

pub fn tone_profile(tone: ToneMode) -> &'static str {
    match tone {
        ToneMode::Formal => {
            "Use a formal academic register: complete sentences, full word forms without contractions, \
             and honorifics wherever the target language has them."
        }
        ToneMode::Informal => {
            "Use an informal, conversational register, the way a lecturer talks casually to a small group; \
             contractions and everyday phrasing are welcome."
        }
        ToneMode::Friendly => {
            "Use a warm, friendly and inclusive classroom voice that speaks directly to the students \
             and keeps them encouraged."
        }
    }
}

/// Rewrites occurrences of `separator` so the text can travel inside a
/// separator-joined payload: `|||` becomes `| | |`.
pub fn escape_separator(text: &str, separator: &str) -> String {
    if separator.is_empty() || !text.contains(separator) {
        return text.to_string();
    }
    let spaced: String = separator
        .chars()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    text.replace(separator, &spaced)
}

pub fn build_prompt(spec: &PromptSpec) -> Result<String, TranslationError> {
    if spec.batch.is_empty() {
        return Err(TranslationError::EmptyBatch);
    }
    let texts: Vec<String> = spec
        .batch
        .iter()
        .map(|item| {
            let escaped = escape_separator(&item.text, &spec.separator);
            if spec.separator.is_empty() || escaped.contains(&spec.separator) {
                Err(TranslationError::SeparatorCollision(item.id.clone()))
            } else {
                Ok(escaped)
            }
        })
        .collect::<Result<_, _>>()?;

    let n = spec.batch.len();
    let sep = &spec.separator;
    let mut p = String::new();
    let _ = writeln!(p, "{}.", spec.role_line);
    let _ = writeln!(
        p,
        "Translate lecture speech from {} to {} for a dubbed video.",
        spec.source_language, spec.target_language
    );
    p.push('\n');
    let _ = writeln!(
        p,
        "The input is a series of {n} short transcript segments separated by the marker \"{sep}\". \
         Each segment is spoken at a fixed moment of the video. Your output must follow exactly the same \
         structure: {n} translated segments, in the same order, separated by \"{sep}\". Never merge, split, \
         drop or add segments, and never use \"{sep}\" inside a segment."
    );
    p.push('\n');
    let _ = writeln!(p, "Tone: {}", tone_profile(spec.tone));

    if spec.syllable_hint {
        p.push('\n');
        p.push_str(
            "Timing: aim for a similar syllable count to each source segment so the dubbed speech fits \
             the original timing.\n",
        );
        for (i, item) in spec.batch.iter().enumerate() {
            let _ = writeln!(
                p,
                "- segment {}: {} syllables, {} ms",
                i + 1,
                item.syllables,
                item.slot_ms
            );
        }
    }

    p.push('\n');
    if spec.cot {
        let _ = writeln!(
            p,
            "Before translating, first analyze the text's tone, rhythm, and natural spoken equivalents in \
             the target language. Then write a line containing only \"{ANSWER_MARKER}\" followed by the final \
             translations and nothing else."
        );
    } else {
        p.push_str("Reply with the translated segments only.\n");
    }

    p.push('\n');
    p.push_str(PAYLOAD_HEADER);
    p.push_str(&texts.join(sep));
    p.push('\n');
    Ok(p)
}

/// Splits a model reply into exactly `expected` trimmed, non-empty texts.
pub fn parse_llm_response(
    raw: &str,
    expected: usize,
    separator: &str,
    cot: bool,
) -> Result<Vec<String>, TranslationError> {
    let body = if cot {
        let at = raw
            .rfind(ANSWER_MARKER)
            .ok_or(TranslationError::MissingAnswerMarker)?;
        &raw[at + ANSWER_MARKER.len()..]
    } else {
        raw
    };
    let parts: Vec<String> = body
        .split(separator)
        .map(|s| s.trim().to_string())
        .collect();
    if parts.len() != expected {
        return Err(TranslationError::CountMismatch {
            got: parts.len(),
            expected,
        });
    }
    if let Some(index) = parts.iter().position(|p| p.is_empty()) {
        return Err(TranslationError::EmptySegment(index));
    }
    Ok(parts)
}
