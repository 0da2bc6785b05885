//! Batching, retry and bisection around a [`Translator`] adapter.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::prompt::{build_prompt, escape_separator, parse_llm_response, BatchItem, PromptSpec};
use super::{TranslationError, DEFAULT_SEPARATOR, PROMPT_TEMPLATE_VERSION, ROLE_LINE};
use crate::alignment::estimate_syllables;
use crate::engines::{EngineInfo, Translator};
use crate::model::{validate_transcript, SegmentId, ToneMode, Transcript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationOptions {
    pub tone: ToneMode,
    pub source_language: String,
    pub target_language: String,
    pub batch_size: usize,
    pub max_attempts: u32,
    pub separator: String,
    pub role_line: String,
    pub syllable_hint: bool,
    pub cot: bool,
    /// Keep the source text for segments that never translate instead of
    /// failing the whole call.
    pub fallback: bool,
}

impl TranslationOptions {
    pub fn new(
        source_language: impl Into<String>,
        target_language: impl Into<String>,
        tone: ToneMode,
    ) -> Self {
        Self {
            tone,
            source_language: source_language.into(),
            target_language: target_language.into(),
            batch_size: 12,
            max_attempts: 3,
            separator: DEFAULT_SEPARATOR.to_string(),
            role_line: ROLE_LINE.to_string(),
            syllable_hint: true,
            cot: true,
            fallback: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SegmentStatus {
    Translated,
    Untranslated { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslatedSegment {
    pub id: SegmentId,
    pub text: String,
    #[serde(flatten)]
    pub status: SegmentStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationMetadata {
    pub template_version: String,
    pub engine: EngineInfo,
    /// Adapter calls made, failed ones included.
    pub calls: usize,
    /// Size of the batch sent on every call, top-level batches in time order,
    /// each followed depth-first by its bisection.
    pub batch_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationResult {
    /// One entry per input segment, in input order.
    pub segments: Vec<TranslatedSegment>,
    pub metadata: TranslationMetadata,
}

impl TranslationResult {
    pub fn get(&self, id: &SegmentId) -> Option<&TranslatedSegment> {
        self.segments.iter().find(|s| &s.id == id)
    }

    pub fn untranslated(&self) -> Vec<SegmentId> {
        self.segments
            .iter()
            .filter(|s| matches!(s.status, SegmentStatus::Untranslated { .. }))
            .map(|s| s.id.clone())
            .collect()
    }

    /// `source` with every text replaced by its translation. Ids, speakers
    /// and intervals are kept; word timings no longer apply and are dropped.
    pub fn apply(&self, source: &Transcript, target_language: &str) -> Transcript {
        let mut out = source.clone();
        out.language = target_language.to_string();
        for (seg, tr) in out.segments.iter_mut().zip(&self.segments) {
            debug_assert_eq!(seg.id, tr.id);
            seg.text = tr.text.clone();
            seg.words.clear();
        }
        out
    }
}

/// Outcome of one top-level batch: sizes of every call and the segment texts.
type BatchOutcome = Result<(Vec<usize>, Vec<TranslatedSegment>), TranslationError>;

struct Runner<'a> {
    opts: &'a TranslationOptions,
    llm: &'a dyn Translator,
}

impl Runner<'_> {
    fn spec(&self, items: &[BatchItem]) -> PromptSpec {
        PromptSpec {
            separator: self.opts.separator.clone(),
            role_line: self.opts.role_line.clone(),
            tone: self.opts.tone,
            source_language: self.opts.source_language.clone(),
            target_language: self.opts.target_language.clone(),
            syllable_hint: self.opts.syllable_hint,
            cot: self.opts.cot,
            batch: items.to_vec(),
        }
    }

    fn run(
        &self,
        items: &[BatchItem],
        sizes: &mut Vec<usize>,
        out: &mut Vec<TranslatedSegment>,
    ) -> Result<(), TranslationError> {
        let prompt = build_prompt(&self.spec(items))?;
        let mut last_failure = String::new();
        for attempt in 1..=self.opts.max_attempts {
            sizes.push(items.len());
            let reply = match self.llm.translate(&prompt) {
                Ok(reply) => reply,
                Err(e) => {
                    debug!(batch = items.len(), attempt, error = %e, "translator call failed");
                    last_failure = e.to_string();
                    continue;
                }
            };
            match parse_llm_response(&reply, items.len(), &self.opts.separator, self.opts.cot) {
                Ok(texts) => {
                    out.extend(
                        items
                            .iter()
                            .zip(texts)
                            .map(|(item, text)| TranslatedSegment {
                                id: item.id.clone(),
                                text,
                                status: SegmentStatus::Translated,
                            }),
                    );
                    return Ok(());
                }
                Err(e) => {
                    debug!(batch = items.len(), attempt, error = %e, "malformed translator reply");
                    last_failure = e.to_string();
                }
            }
        }

        if let [item] = items {
            if !self.opts.fallback {
                return Err(TranslationError::Untranslatable {
                    id: item.id.clone(),
                    reason: last_failure,
                });
            }
            warn!(segment = %item.id, reason = %last_failure, "keeping source text");
            out.push(TranslatedSegment {
                id: item.id.clone(),
                text: escape_separator(&item.text, &self.opts.separator),
                status: SegmentStatus::Untranslated {
                    reason: last_failure,
                },
            });
            return Ok(());
        }

        let (left, right) = items.split_at(items.len() / 2);
        self.run(left, sizes, out)?;
        self.run(right, sizes, out)
    }

    fn run_top(&self, items: &[BatchItem]) -> BatchOutcome {
        let mut sizes = Vec::new();
        let mut out = Vec::with_capacity(items.len());
        self.run(items, &mut sizes, &mut out)?;
        Ok((sizes, out))
    }
}

/// Translates every segment of `t`, batching in time order and repairing
/// malformed replies by retrying and then bisecting the batch.
///
/// At most `max_attempts × (2n − 1)` adapter calls are made for `n`
/// segments. Top-level batches run concurrently up to the adapter's
/// declared limit; the result does not depend on scheduling.
pub fn translate_segments(
    t: &Transcript,
    opts: &TranslationOptions,
    llm: &dyn Translator,
) -> Result<TranslationResult, TranslationError> {
    if opts.batch_size == 0 {
        return Err(TranslationError::InvalidOptions(
            "batch_size must be at least 1".into(),
        ));
    }
    if opts.max_attempts == 0 {
        return Err(TranslationError::InvalidOptions(
            "max_attempts must be at least 1".into(),
        ));
    }
    let report = validate_transcript(t);
    if !report.is_empty() {
        return Err(TranslationError::InvalidTranscript(report));
    }

    let items: Vec<BatchItem> = t
        .segments
        .iter()
        .map(|s| BatchItem {
            id: s.id.clone(),
            text: s.text.clone(),
            slot_ms: s.interval.len(),
            syllables: estimate_syllables(&s.text, &opts.source_language),
        })
        .collect();
    let batches: Vec<&[BatchItem]> = items.chunks(opts.batch_size).collect();

    let runner = Runner { opts, llm };
    let workers = llm
        .max_parallel_calls()
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, batches.len().max(1));

    let outcomes: Vec<BatchOutcome> = if workers == 1 {
        batches.iter().map(|b| runner.run_top(b)).collect()
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<BatchOutcome>>> = Mutex::new(vec![None; batches.len()]);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(batch) = batches.get(i) else { break };
                    let outcome = runner.run_top(batch);
                    slots.lock().expect("result slots")[i] = Some(outcome);
                });
            }
        });
        slots
            .into_inner()
            .expect("result slots")
            .into_iter()
            .map(|o| o.expect("every batch ran"))
            .collect()
    };

    let mut segments = Vec::with_capacity(items.len());
    let mut batch_sizes = Vec::new();
    for outcome in outcomes {
        let (sizes, outs) = outcome?;
        batch_sizes.extend(sizes);
        segments.extend(outs);
    }
    Ok(TranslationResult {
        segments,
        metadata: TranslationMetadata {
            template_version: PROMPT_TEMPLATE_VERSION.to_string(),
            engine: llm.info(),
            calls: batch_sizes.len(),
            batch_sizes,
        },
    })
}
