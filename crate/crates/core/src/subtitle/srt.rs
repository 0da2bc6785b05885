use super::{
    blocks, build_transcript, cue_lines, format_timestamp, needs_speaker_marks, normalize_newlines,
    parse_timestamp, ParseOptions, ParseWarning, Parsed, SubtitleError,
};
use crate::model::{SpeakerId, TimeInterval, Transcript};

pub(super) fn emit(t: &Transcript) -> String {
    let tagged = needs_speaker_marks(t)
        || t.segments
            .iter()
            .any(|s| split_tag(&cue_lines(&s.text).join("\n")).is_some());
    let mut out = String::new();
    for (i, seg) in t.segments.iter().enumerate() {
        out.push_str(&format!("{}\n", i + 1));
        out.push_str(&format!(
            "{} --> {}\n",
            format_timestamp(seg.interval.start(), ','),
            format_timestamp(seg.interval.end(), ',')
        ));
        let mut lines = cue_lines(&seg.text);
        if tagged {
            let tag = format!("[{}] ", seg.speaker);
            match lines.first_mut() {
                Some(first) => first.insert_str(0, &tag),
                None => lines.push(tag),
            }
        }
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// `[ID] rest` → `(ID, rest)`.
fn split_tag(text: &str) -> Option<(SpeakerId, &str)> {
    let rest = text.strip_prefix('[')?;
    let close = rest.find(']')?;
    let id = SpeakerId::new(&rest[..close]).ok()?;
    let after = rest[close + 1..].strip_prefix(' ')?;
    Some((id, after))
}

pub(super) fn parse(input: &str, opts: &ParseOptions) -> Result<Parsed, SubtitleError> {
    let text = normalize_newlines(input);
    let mut warnings = Vec::new();
    let mut cues: Vec<(TimeInterval, String)> = Vec::new();

    for (line_no, lines) in blocks(&text) {
        match parse_cue(line_no, &lines, opts.lenient) {
            Ok(cue) => cues.push(cue),
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

    let all_tagged = !cues.is_empty() && cues.iter().all(|(_, t)| split_tag(t).is_some());
    let cues = cues
        .into_iter()
        .map(|(iv, t)| match split_tag(&t).filter(|_| all_tagged) {
            Some((speaker, rest)) => (speaker, iv, rest.to_string()),
            None => (SpeakerId::default_speaker(), iv, t),
        })
        .collect();

    Ok(Parsed {
        transcript: build_transcript(opts.language.clone(), cues),
        warnings,
    })
}

fn parse_cue(
    line_no: usize,
    lines: &[&str],
    lenient: bool,
) -> Result<(TimeInterval, String), SubtitleError> {
    let malformed = |offset: usize, reason: &str| SubtitleError::MalformedCue {
        line: line_no + offset,
        reason: reason.to_string(),
    };

    let timing_at = if lines[0].contains("-->") {
        if !lenient {
            return Err(malformed(0, "missing cue index"));
        }
        0
    } else {
        if !lines[0].trim().bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed(0, "expected a numeric cue index"));
        }
        1
    };
    let timing = lines
        .get(timing_at)
        .ok_or_else(|| malformed(0, "missing timing line"))?;
    let (start, end) = timing
        .split_once("-->")
        .ok_or_else(|| malformed(timing_at, "expected `start --> end`"))?;
    let seps: &[char] = if lenient { &[',', '.'] } else { &[','] };
    let start = parse_timestamp(start.trim(), seps, false)
        .ok_or_else(|| malformed(timing_at, "bad start timestamp"))?;
    // Anything after the end timestamp (legacy position hints) is ignored.
    let end = end.split_whitespace().next().unwrap_or("");
    let end = parse_timestamp(end, seps, false)
        .ok_or_else(|| malformed(timing_at, "bad end timestamp"))?;
    let interval = TimeInterval::new(start, end)
        .map_err(|_| malformed(timing_at, "cue ends before it starts"))?;

    Ok((interval, lines[timing_at + 1..].join("\n")))
}
