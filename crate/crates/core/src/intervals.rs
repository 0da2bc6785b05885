//! Interval algebra for detector output: canonicalization, then filtering and
//! padding into lip-sync work regions.

use thiserror::Error;

use crate::model::{RawInterval, TimeInterval};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("interval #{index} [{start}, {end}) is empty or reversed")]
    InvalidInterval { index: usize, start: u64, end: u64 },
}

/// Sorts, validates and coalesces overlapping or touching intervals.
pub fn normalize_intervals(xs: &[RawInterval]) -> Result<Vec<TimeInterval>, IntervalError> {
    let mut valid = xs
        .iter()
        .enumerate()
        .map(|(index, raw)| {
            TimeInterval::new(raw.start_ms, raw.end_ms).map_err(|_| {
                IntervalError::InvalidInterval {
                    index,
                    start: raw.start_ms,
                    end: raw.end_ms,
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    valid.sort();
    Ok(coalesce_sorted(valid))
}

/// [`normalize_intervals`] for already-validated intervals.
pub fn normalize(xs: &[TimeInterval]) -> Vec<TimeInterval> {
    let mut v = xs.to_vec();
    v.sort();
    coalesce_sorted(v)
}

fn coalesce_sorted(sorted: Vec<TimeInterval>) -> Vec<TimeInterval> {
    let mut out: Vec<TimeInterval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match out.last_mut() {
            Some(last) if iv.start() <= last.end() => *last = last.hull(&iv),
            _ => out.push(iv),
        }
    }
    out
}

/// Drops intervals shorter than `min_duration`, widens survivors by `pad` on
/// both sides, clamps them to `bounds` and re-normalizes.
pub fn filter_pad_intervals(
    xs: &[TimeInterval],
    min_duration: u64,
    pad: u64,
    bounds: TimeInterval,
) -> Vec<TimeInterval> {
    let padded: Vec<TimeInterval> = xs
        .iter()
        .filter(|iv| iv.len() >= min_duration)
        .filter_map(|iv| {
            let start = iv.start().saturating_sub(pad).max(bounds.start());
            let end = iv.end().saturating_add(pad).min(bounds.end());
            TimeInterval::new(start, end).ok()
        })
        .collect();
    normalize(&padded)
}
