//! Pure PCM operations: time-scale modification, mixing and dub rendering.

use std::collections::BTreeMap;

use thiserror::Error;

use super::audio::{ms_to_samples, AudioBuffer};
use crate::alignment::PlacementPlan;
use crate::model::SegmentId;

pub const MIN_STRETCH_FACTOR: f64 = 0.25;
pub const MAX_STRETCH_FACTOR: f64 = 4.0;
const WINDOW_MS: f64 = 25.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcmError {
    #[error("stretch factor {0} outside (0.25, 4.0)")]
    FactorOutOfRange(f64),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("no synthesized clip for segment {0}")]
    MissingClip(SegmentId),
}

/// Length in samples of a buffer stretched by `factor`: `round(len / factor)`.
pub fn stretched_len(len: usize, factor: f64) -> usize {
    (len as f64 / factor).round() as usize
}

/// Changes duration by `1 / factor` without resampling, using waveform
/// similarity overlap-add (WSOLA): 25 ms Hann windows at 50 % overlap, each
/// analysis frame shifted by up to 1/8 window to stay in phase with the
/// previous one.
///
/// The output has exactly `round(len / factor)` samples. Factor 1.0 is the
/// identity.
pub fn time_stretch(audio: &AudioBuffer, factor: f64) -> Result<AudioBuffer, PcmError> {
    if !(factor > MIN_STRETCH_FACTOR && factor < MAX_STRETCH_FACTOR) {
        return Err(PcmError::FactorOutOfRange(factor));
    }
    if factor == 1.0 {
        return Ok(audio.clone());
    }
    let input = &audio.samples;
    let n = input.len();
    let out_len = stretched_len(n, factor);
    if n == 0 || out_len == 0 {
        return Ok(AudioBuffer::new(audio.sample_rate, vec![0; out_len]));
    }

    let win = ((WINDOW_MS * audio.sample_rate as f64 / 1000.0).round() as usize).max(4) & !1;
    let hop_s = win / 2;
    let hop_a = hop_s as f64 * factor;
    let tolerance = (win / 8) as isize;
    let window: Vec<f64> = (0..win)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / win as f64).cos())
        .collect();
    let max_pos = n.saturating_sub(win) as isize;
    let sample = |i: isize| -> f64 {
        if i >= 0 && (i as usize) < n {
            input[i as usize] as f64
        } else {
            0.0
        }
    };

    let mut acc = vec![0.0f64; out_len + win];
    let mut norm = vec![0.0f64; out_len + win];
    let mut prev: Option<isize> = None;
    let mut k = 0usize;
    while k * hop_s < out_len {
        let nominal = ((k as f64 * hop_a).round() as isize).min(max_pos);
        let pos = match prev {
            None => nominal,
            Some(p) => {
                // Match the natural continuation of the previous frame.
                let target = p + hop_s as isize;
                let lo = (nominal - tolerance).max(0);
                let hi = (nominal + tolerance).min(max_pos);
                let mut best = nominal.clamp(lo.min(hi), hi.max(lo));
                let mut best_score = f64::NEG_INFINITY;
                for cand in lo..=hi {
                    let score: f64 = (0..win as isize)
                        .step_by(2)
                        .map(|i| sample(cand + i) * sample(target + i))
                        .sum();
                    if score > best_score {
                        best_score = score;
                        best = cand;
                    }
                }
                best
            }
        };
        let base = k * hop_s;
        for (i, w) in window.iter().enumerate() {
            acc[base + i] += w * sample(pos + i as isize);
            norm[base + i] += w;
        }
        prev = Some(pos);
        k += 1;
    }

    let samples = acc[..out_len]
        .iter()
        .zip(&norm[..out_len])
        .map(|(&a, &w)| {
            let v = if w > 1e-9 { a / w } else { 0.0 };
            v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
        })
        .collect();
    Ok(AudioBuffer::new(audio.sample_rate, samples))
}

fn saturate(v: f64) -> i16 {
    v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// `gain_a·a + gain_b·b` per sample, the shorter input zero-padded, clamped
/// to the 16-bit range.
pub fn mix_tracks(
    a: &AudioBuffer,
    b: &AudioBuffer,
    gain_a: f64,
    gain_b: f64,
) -> Result<AudioBuffer, PcmError> {
    if a.sample_rate != b.sample_rate {
        return Err(PcmError::RateMismatch(a.sample_rate, b.sample_rate));
    }
    let len = a.len().max(b.len());
    let at = |x: &AudioBuffer, i: usize| x.samples.get(i).copied().unwrap_or(0) as f64;
    let samples = (0..len)
        .map(|i| saturate(at(a, i) * gain_a + at(b, i) * gain_b))
        .collect();
    Ok(AudioBuffer::new(a.sample_rate, samples))
}

/// Renders the dubbed vocal bed: every clip stretched by its plan factor,
/// fitted to its target interval and summed in place. Everything outside
/// the targets is digital silence; the result spans exactly
/// `video_duration_ms`.
pub fn render_dub_track(
    plan: &PlacementPlan,
    clips: &BTreeMap<SegmentId, AudioBuffer>,
    video_duration_ms: u64,
    rate: u32,
) -> Result<AudioBuffer, PcmError> {
    let total = ms_to_samples(video_duration_ms, rate);
    let mut acc = vec![0i32; total];
    for p in &plan.placements {
        let clip = clips
            .get(&p.segment_id)
            .ok_or_else(|| PcmError::MissingClip(p.segment_id.clone()))?;
        if clip.sample_rate != rate {
            return Err(PcmError::RateMismatch(clip.sample_rate, rate));
        }
        let stretched = time_stretch(clip, p.stretch_factor)?;
        let start = ms_to_samples(p.target_interval.start(), rate).min(total);
        let end = ms_to_samples(p.target_interval.end(), rate).min(total);
        for (dst, &s) in acc[start..end].iter_mut().zip(&stretched.samples) {
            *dst += s as i32;
        }
    }
    let samples = acc
        .into_iter()
        .map(|v| v.clamp(i16::MIN as i32, i16::MAX as i32) as i16)
        .collect();
    Ok(AudioBuffer::new(rate, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_range() {
        let a = AudioBuffer::tone(24_000, 10_000, 440.0, 8000.0, 0.0);
        assert_eq!(time_stretch(&a, 1.0).unwrap(), a);
        for bad in [0.25, 4.0, 0.0, -1.0, f64::NAN] {
            assert!(time_stretch(&a, bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn duration_arithmetic() {
        let a = AudioBuffer::tone(24_000, 48_000, 440.0, 8000.0, 0.0);
        let b = time_stretch(&a, 1.25).unwrap();
        assert_eq!(b.len(), 38_400);
        assert_eq!(b.duration_ms(), 1600);
        assert_eq!(time_stretch(&a, 0.8).unwrap().duration_ms(), 2500);
    }

    #[test]
    fn short_and_empty_inputs() {
        let empty = AudioBuffer::silence(24_000, 0);
        assert!(time_stretch(&empty, 2.0).unwrap().is_empty());
        let tiny = AudioBuffer::new(24_000, vec![100; 7]);
        assert_eq!(time_stretch(&tiny, 0.5).unwrap().len(), 14);
    }

    #[test]
    fn constant_signal_is_preserved_in_the_interior() {
        // A Hann-windowed overlap-add of a constant is that constant.
        let a = AudioBuffer::new(8000, vec![1000; 8000]);
        let b = time_stretch(&a, 0.9).unwrap();
        assert!(b.samples[1..b.len() - 1].iter().all(|&s| s == 1000));
    }

    #[test]
    fn mixing() {
        let x = AudioBuffer::new(10, vec![1, 2, 3]);
        let silence = AudioBuffer::silence(10, 5);
        assert_eq!(
            mix_tracks(&x, &silence, 1.0, 1.0).unwrap().samples,
            vec![1, 2, 3, 0, 0]
        );
        let loud = AudioBuffer::new(10, vec![32_000, -32_000]);
        assert_eq!(
            mix_tracks(&loud, &loud, 1.0, 1.0).unwrap().samples,
            vec![32_767, -32_768]
        );
        assert_eq!(
            mix_tracks(&x, &AudioBuffer::silence(11, 1), 1.0, 1.0),
            Err(PcmError::RateMismatch(10, 11))
        );
    }
}
