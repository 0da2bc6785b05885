//! Structure-preserving, tone-controlled translation of transcript segments
//! through a text-in/text-out language model adapter.

mod orchestrate;
mod prompt;

use thiserror::Error;

use crate::engines::EngineError;
use crate::model::{SegmentId, ValidationReport};

pub use orchestrate::{
    translate_segments, SegmentStatus, TranslatedSegment, TranslationMetadata, TranslationOptions,
    TranslationResult,
};
pub use prompt::{
    build_prompt, escape_separator, parse_llm_response, tone_profile, BatchItem, PromptSpec,
    ANSWER_MARKER, DEFAULT_SEPARATOR, PAYLOAD_HEADER, PROMPT_TEMPLATE_VERSION, ROLE_LINE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranslationError {
    #[error("response has {got} segments, expected {expected}")]
    CountMismatch { got: usize, expected: usize },
    #[error("response segment {0} is empty")]
    EmptySegment(usize),
    #[error("response has no answer marker")]
    MissingAnswerMarker,
    #[error("text of segment {0} still contains the separator after escaping")]
    SeparatorCollision(SegmentId),
    #[error("prompt batch is empty")]
    EmptyBatch,
    #[error("transcript is invalid:\n{0}")]
    InvalidTranscript(ValidationReport),
    #[error("invalid translation options: {0}")]
    InvalidOptions(String),
    #[error("segment {id} could not be translated: {reason}")]
    Untranslatable { id: SegmentId, reason: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}
