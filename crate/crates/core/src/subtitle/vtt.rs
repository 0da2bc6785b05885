use super::{
    blocks, build_transcript, cue_lines, format_timestamp, needs_speaker_marks, normalize_newlines,
    parse_timestamp, ParseOptions, ParseWarning, Parsed, SubtitleError,
};
use crate::model::{SpeakerId, TimeInterval, Transcript};

pub(super) fn emit(t: &Transcript) -> String {
    let voiced = needs_speaker_marks(t);
    let mut out = String::from("WEBVTT\n");
    for seg in &t.segments {
        out.push('\n');
        out.push_str(&format!(
            "{} --> {}\n",
            format_timestamp(seg.interval.start(), '.'),
            format_timestamp(seg.interval.end(), '.')
        ));
        let body = cue_lines(&seg.text)
            .iter()
            .map(|l| escape(l))
            .collect::<Vec<_>>()
            .join("\n");
        if voiced {
            out.push_str(&format!("<v {}>{}</v>\n", seg.speaker, body));
        } else if !body.is_empty() {
            out.push_str(&body);
            out.push('\n');
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn unescape(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&nbsp;", "\u{a0}")
        .replace("&lrm;", "\u{200e}")
        .replace("&rlm;", "\u{200f}")
        .replace("&amp;", "&")
}

fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

/// `<v[.class] Name>rest` → `(Name, rest)`.
fn split_voice(text: &str) -> Option<(&str, &str)> {
    let rest = text.strip_prefix("<v")?;
    if !rest.starts_with([' ', '.', '\t']) {
        return None;
    }
    let close = rest.find('>')?;
    let annotation = &rest[..close];
    let name = annotation
        .split_once([' ', '\t'])
        .map(|(_, n)| n.trim())
        .unwrap_or("");
    Some((name, &rest[close + 1..]))
}

fn is_header_line(line: &str) -> bool {
    line == "WEBVTT" || line.starts_with("WEBVTT ") || line.starts_with("WEBVTT\t")
}

pub(super) fn parse(input: &str, opts: &ParseOptions) -> Result<Parsed, SubtitleError> {
    let text = normalize_newlines(input);
    let mut warnings = Vec::new();
    let mut language = opts.language.clone();
    let mut blocks = blocks(&text).into_iter().peekable();

    let has_header = text.split('\n').next().is_some_and(is_header_line);
    if has_header {
        if let Some((_, header)) = blocks.next() {
            for line in &header[1..] {
                if let Some(lang) = line.strip_prefix("Language:") {
                    language = lang.trim().to_string();
                }
            }
        }
    } else if opts.lenient {
        warnings.push(ParseWarning {
            line: 1,
            reason: "missing WEBVTT header".into(),
        });
    } else {
        return Err(SubtitleError::MalformedCue {
            line: 1,
            reason: "missing WEBVTT header".into(),
        });
    }

    let mut cues = Vec::new();
    for (line_no, lines) in blocks {
        let first = lines[0].trim_start();
        if ["NOTE", "STYLE", "REGION"].iter().any(|kw| {
            first == *kw
                || first.starts_with(&format!("{kw} "))
                || first.starts_with(&format!("{kw}\t"))
        }) {
            continue;
        }
        match parse_cue(line_no, &lines, opts.lenient) {
            Ok((cue, warning)) => {
                cues.push(cue);
                warnings.extend(warning);
            }
            Err(SubtitleError::MalformedCue { line, reason }) if opts.lenient => {
                warnings.push(ParseWarning { line, reason });
            }
            Err(e) => return Err(e),
        }
    }

    if cues.is_empty() {
        if !opts.lenient {
            return Err(SubtitleError::EmptyFile);
        }
        warnings.push(ParseWarning {
            line: 1,
            reason: "no cues found".into(),
        });
    }

    Ok(Parsed {
        transcript: build_transcript(language, cues),
        warnings,
    })
}

type Cue = (SpeakerId, TimeInterval, String);

fn parse_cue(
    line_no: usize,
    lines: &[&str],
    lenient: bool,
) -> Result<(Cue, Option<ParseWarning>), SubtitleError> {
    let malformed = |offset: usize, reason: &str| SubtitleError::MalformedCue {
        line: line_no + offset,
        reason: reason.to_string(),
    };

    // An optional identifier line precedes the timing line.
    let timing_at = if lines[0].contains("-->") { 0 } else { 1 };
    let timing = lines
        .get(timing_at)
        .ok_or_else(|| malformed(0, "cue identifier without timing line"))?;
    let (start, rest) = timing
        .split_once("-->")
        .ok_or_else(|| malformed(timing_at, "expected `start --> end`"))?;
    let start = parse_timestamp(start.trim(), &['.'], true)
        .ok_or_else(|| malformed(timing_at, "bad start timestamp"))?;
    // Cue settings may follow the end timestamp.
    let end = rest.split_whitespace().next().unwrap_or("");
    let end = parse_timestamp(end, &['.'], true)
        .ok_or_else(|| malformed(timing_at, "bad end timestamp"))?;
    let interval = TimeInterval::new(start, end)
        .map_err(|_| malformed(timing_at, "cue ends before it starts"))?;

    let raw = lines[timing_at + 1..].join("\n");
    let mut warning = None;
    let (speaker, body) = match split_voice(&raw) {
        Some((name, body)) => match SpeakerId::new(name) {
            Ok(id) => (id, body.to_string()),
            Err(_) if lenient => {
                warning = Some(ParseWarning {
                    line: line_no + timing_at + 1,
                    reason: format!("unusable voice name {name:?}"),
                });
                (SpeakerId::default_speaker(), body.to_string())
            }
            Err(_) => return Err(malformed(timing_at + 1, "unusable voice name")),
        },
        None => (SpeakerId::default_speaker(), raw),
    };
    Ok(((speaker, interval, unescape(&strip_tags(&body))), warning))
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::model::{SpeakerId, TimeInterval, Transcript, TranscriptSegment};

    #[test]
    fn voice_span_maps_to_speaker() {
        let p = parse_subtitles(
            "WEBVTT\n\n00:00.000 --> 00:01.000\n<v Kim>Hi</v>",
            SubtitleFormat::Vtt,
            &ParseOptions::strict("en"),
        )
        .unwrap();
        let s = &p.transcript.segments[0];
        assert_eq!(s.interval, TimeInterval::new(0, 1000).unwrap());
        assert_eq!(s.text, "Hi");
        assert_eq!(s.speaker.as_str(), "Kim");
    }

    #[test]
    fn empty_emits_header_only() {
        assert_eq!(
            emit_subtitles(&Transcript::empty("en"), SubtitleFormat::Vtt).unwrap(),
            "WEBVTT\n"
        );
    }

    #[test]
    fn escapes_roundtrip() {
        let t = Transcript::new(
            "en",
            vec![TranscriptSegment::new(
                "a",
                SpeakerId::default_speaker(),
                TimeInterval::new(0, 1000).unwrap(),
                "a <b> & c --> d",
            )],
        );
        let vtt = emit_subtitles(&t, SubtitleFormat::Vtt).unwrap();
        assert_eq!(
            vtt,
            "WEBVTT\n\n00:00:00.000 --> 00:00:01.000\na &lt;b&gt; &amp; c --&gt; d\n"
        );
        let back = parse_subtitles(&vtt, SubtitleFormat::Vtt, &ParseOptions::strict("en")).unwrap();
        assert_eq!(back.transcript.segments[0].text, "a <b> & c --> d");
    }

    #[test]
    fn notes_ids_settings_and_language_header() {
        let input = "WEBVTT - lecture\nLanguage: de\n\nNOTE written by hand\n\nintro\n00:01.000 --> 00:02.500 align:start\n<i>Guten</i> Tag\n";
        let p = parse_subtitles(input, SubtitleFormat::Vtt, &ParseOptions::strict("en")).unwrap();
        assert_eq!(p.transcript.language, "de");
        assert_eq!(p.transcript.segments.len(), 1);
        assert_eq!(p.transcript.segments[0].text, "Guten Tag");
        assert_eq!(
            p.transcript.segments[0].interval,
            TimeInterval::new(1000, 2500).unwrap()
        );
    }

    #[test]
    fn header_required_in_strict_mode() {
        let input = "00:01.000 --> 00:02.000\nhi\n";
        assert!(parse_subtitles(input, SubtitleFormat::Vtt, &ParseOptions::strict("en")).is_err());
        let p = parse_subtitles(input, SubtitleFormat::Vtt, &ParseOptions::lenient("en")).unwrap();
        assert_eq!(p.transcript.segments.len(), 1);
        assert_eq!(p.warnings.len(), 1);
    }
}
