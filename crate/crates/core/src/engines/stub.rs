//! Frame-less stub video container used by the mock media toolkit.
//!
//! A stub "video" is a list of spans tiling `[0, duration)`. Each span shows
//! footage from a labelled source starting at `source_offset`, so editing
//! operations can be checked without any codec. An optional WAV payload
//! stands in for the audio stream.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "GZVSTUB1"  u64 duration_ms  u32 span_count
//! span*:      u64 start_ms  u64 end_ms  u64 source_offset_ms  u32 label_len  label
//! u64 audio_len  audio (WAV, absent when audio_len = 0)
//! ```

use super::audio::AudioBuffer;
use super::EngineError;
use crate::model::TimeInterval;

pub const MAGIC: &[u8; 8] = b"GZVSTUB1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub start_ms: u64,
    pub end_ms: u64,
    pub source_offset_ms: u64,
    pub label: String,
}

impl Span {
    fn len(&self) -> u64 {
        self.end_ms - self.start_ms
    }

    /// True when `next` continues this span's footage without a cut.
    fn continues_into(&self, next: &Span) -> bool {
        self.label == next.label
            && self.end_ms == next.start_ms
            && self.source_offset_ms + self.len() == next.source_offset_ms
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubVideo {
    pub duration_ms: u64,
    pub spans: Vec<Span>,
    pub audio: Option<Vec<u8>>,
}

fn corrupt(reason: &str) -> EngineError {
    EngineError::UnsupportedMedia(format!("stub container: {reason}"))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EngineError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| corrupt("truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64, EngineError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32, EngineError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
}

impl StubVideo {
    /// Uncut footage from one source.
    pub fn new(label: impl Into<String>, duration_ms: u64, audio: Option<&AudioBuffer>) -> Self {
        let spans = if duration_ms == 0 {
            Vec::new()
        } else {
            vec![Span {
                start_ms: 0,
                end_ms: duration_ms,
                source_offset_ms: 0,
                label: label.into(),
            }]
        };
        Self {
            duration_ms,
            spans,
            audio: audio.map(AudioBuffer::to_wav),
        }
    }

    pub fn is_stub(bytes: &[u8]) -> bool {
        bytes.starts_with(MAGIC)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.duration_ms.to_le_bytes());
        out.extend_from_slice(&(self.spans.len() as u32).to_le_bytes());
        for s in &self.spans {
            out.extend_from_slice(&s.start_ms.to_le_bytes());
            out.extend_from_slice(&s.end_ms.to_le_bytes());
            out.extend_from_slice(&s.source_offset_ms.to_le_bytes());
            out.extend_from_slice(&(s.label.len() as u32).to_le_bytes());
            out.extend_from_slice(s.label.as_bytes());
        }
        let audio = self.audio.as_deref().unwrap_or(&[]);
        out.extend_from_slice(&(audio.len() as u64).to_le_bytes());
        out.extend_from_slice(audio);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<StubVideo, EngineError> {
        if !Self::is_stub(bytes) {
            return Err(corrupt("bad magic"));
        }
        let mut r = Reader {
            bytes,
            pos: MAGIC.len(),
        };
        let duration_ms = r.u64()?;
        let count = r.u32()? as usize;
        let mut spans = Vec::with_capacity(count.min(1024));
        let mut cursor = 0;
        for _ in 0..count {
            let start_ms = r.u64()?;
            let end_ms = r.u64()?;
            let source_offset_ms = r.u64()?;
            let len = r.u32()? as usize;
            let label = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| corrupt("label is not UTF-8"))?;
            if start_ms != cursor || end_ms <= start_ms {
                return Err(corrupt("spans do not tile the timeline"));
            }
            cursor = end_ms;
            spans.push(Span {
                start_ms,
                end_ms,
                source_offset_ms,
                label,
            });
        }
        if cursor != duration_ms {
            return Err(corrupt("spans do not cover the duration"));
        }
        let audio_len = r.u64()? as usize;
        let audio = if audio_len == 0 {
            None
        } else {
            Some(r.take(audio_len)?.to_vec())
        };
        if r.pos != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(StubVideo {
            duration_ms,
            spans,
            audio,
        })
    }

    pub fn audio_buffer(&self) -> Result<Option<AudioBuffer>, EngineError> {
        self.audio.as_deref().map(AudioBuffer::from_wav).transpose()
    }

    /// Footage of `range` as a video-only clip starting at 0.
    pub fn extract_range(&self, range: TimeInterval) -> Result<StubVideo, EngineError> {
        if range.end() > self.duration_ms {
            return Err(EngineError::InvalidInput(format!(
                "range {range} exceeds video duration {} ms",
                self.duration_ms
            )));
        }
        let spans = self
            .spans
            .iter()
            .filter_map(|s| {
                let a = s.start_ms.max(range.start());
                let b = s.end_ms.min(range.end());
                (a < b).then(|| Span {
                    start_ms: a - range.start(),
                    end_ms: b - range.start(),
                    source_offset_ms: s.source_offset_ms + (a - s.start_ms),
                    label: s.label.clone(),
                })
            })
            .collect();
        Ok(StubVideo {
            duration_ms: range.len(),
            spans,
            audio: None,
        })
    }

    /// Splices `clip` over `range`. The clip must last exactly `range.len()`.
    /// Audio is left as is.
    pub fn replace_range(
        &self,
        range: TimeInterval,
        clip: &StubVideo,
    ) -> Result<StubVideo, EngineError> {
        if range.end() > self.duration_ms {
            return Err(EngineError::InvalidInput(format!(
                "range {range} exceeds video duration {} ms",
                self.duration_ms
            )));
        }
        if clip.duration_ms != range.len() {
            return Err(EngineError::InvalidInput(format!(
                "clip lasts {} ms, range {range} needs {} ms",
                clip.duration_ms,
                range.len()
            )));
        }
        let mut spans = Vec::new();
        if range.start() > 0 {
            spans.extend(
                self.extract_range(TimeInterval::new(0, range.start()).expect("non-empty"))?
                    .spans,
            );
        }
        spans.extend(clip.spans.iter().map(|s| Span {
            start_ms: s.start_ms + range.start(),
            end_ms: s.end_ms + range.start(),
            ..s.clone()
        }));
        if range.end() < self.duration_ms {
            let tail = self.extract_range(
                TimeInterval::new(range.end(), self.duration_ms).expect("non-empty"),
            )?;
            spans.extend(tail.spans.into_iter().map(|s| Span {
                start_ms: s.start_ms + range.end(),
                end_ms: s.end_ms + range.end(),
                ..s
            }));
        }
        Ok(StubVideo {
            duration_ms: self.duration_ms,
            spans: coalesce(spans),
            audio: self.audio.clone(),
        })
    }
}

fn coalesce(spans: Vec<Span>) -> Vec<Span> {
    let mut out: Vec<Span> = Vec::with_capacity(spans.len());
    for s in spans {
        match out.last_mut() {
            Some(last) if last.continues_into(&s) => last.end_ms = s.end_ms,
            _ => out.push(s),
        }
    }
    out
}
