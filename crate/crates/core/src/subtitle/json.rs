use serde_json::{Map, Value};

use super::{ParseWarning, Parsed, SubtitleError};
use crate::model::Transcript;

const TOP_FIELDS: &[&str] = &["language", "segments"];
const SEGMENT_FIELDS: &[&str] = &["id", "speaker", "start_ms", "end_ms", "text", "words"];
const WORD_FIELDS: &[&str] = &["word", "start_ms", "end_ms"];

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_canonical_json(t: &Transcript) -> String {
    let mut s = serde_json::to_string_pretty(t).expect("transcript serializes");
    s.push('\n');
    s
}

/// Parses canonical transcript JSON. Strict mode rejects unknown fields;
/// lenient mode drops them and reports each as a warning.
pub fn parse_transcript_json(input: &str, lenient: bool) -> Result<Parsed, SubtitleError> {
    let mut value: Value =
        serde_json::from_str(input).map_err(|e| SubtitleError::Json(e.to_string()))?;
    let mut warnings = Vec::new();

    let mut check =
        |obj: &mut Map<String, Value>, allowed: &[&str], path: &str| -> Result<(), SubtitleError> {
            let unknown: Vec<String> = obj
                .keys()
                .filter(|k| !allowed.contains(&k.as_str()))
                .cloned()
                .collect();
            for key in unknown {
                let field = format!("{path}.{key}");
                if !lenient {
                    return Err(SubtitleError::UnknownField(field));
                }
                obj.remove(&key);
                warnings.push(ParseWarning {
                    line: 0,
                    reason: format!("ignored unknown field {field}"),
                });
            }
            Ok(())
        };

    if let Value::Object(top) = &mut value {
        check(top, TOP_FIELDS, "$")?;
        if let Some(Value::Array(segments)) = top.get_mut("segments") {
            for (i, seg) in segments.iter_mut().enumerate() {
                let Value::Object(seg) = seg else { continue };
                check(seg, SEGMENT_FIELDS, &format!("$.segments[{i}]"))?;
                if let Some(Value::Array(words)) = seg.get_mut("words") {
                    for (j, word) in words.iter_mut().enumerate() {
                        if let Value::Object(word) = word {
                            check(word, WORD_FIELDS, &format!("$.segments[{i}].words[{j}]"))?;
                        }
                    }
                }
            }
        }
    }

    let transcript: Transcript =
        serde_json::from_value(value).map_err(|e| SubtitleError::Json(e.to_string()))?;
    Ok(Parsed {
        transcript,
        warnings,
    })
}
