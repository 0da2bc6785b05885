use std::io::Cursor;

use sha2::{Digest, Sha256};

use super::EngineError;
use crate::model::TimeInterval;

pub const DEFAULT_SAMPLE_RATE: u32 = 24_000;

/// Mono 16-bit PCM.
#[derive(Clone, PartialEq, Eq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub samples: Vec<i16>,
}

impl std::fmt::Debug for AudioBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AudioBuffer")
            .field("sample_rate", &self.sample_rate)
            .field("len", &self.samples.len())
            .field("duration_ms", &self.duration_ms())
            .finish()
    }
}

/// `round(ms × rate / 1000)`.
pub fn ms_to_samples(ms: u64, rate: u32) -> usize {
    ((ms as u128 * rate as u128 + 500) / 1000) as usize
}

/// `round(1000 × len / rate)`.
pub fn samples_to_ms(len: usize, rate: u32) -> u64 {
    ((len as u128 * 1000 + rate as u128 / 2) / rate as u128) as u64
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, samples: Vec<i16>) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self {
            sample_rate,
            samples,
        }
    }

    pub fn silence(sample_rate: u32, len: usize) -> Self {
        Self::new(sample_rate, vec![0; len])
    }

    pub fn silence_ms(sample_rate: u32, ms: u64) -> Self {
        Self::silence(sample_rate, ms_to_samples(ms, sample_rate))
    }

    /// `amplitude × sin(2π·freq·t + phase)` for `len` samples.
    pub fn tone(sample_rate: u32, len: usize, freq: f64, amplitude: f64, phase: f64) -> Self {
        let step = std::f64::consts::TAU * freq / sample_rate as f64;
        let samples = (0..len)
            .map(|i| (amplitude * (step * i as f64 + phase).sin()).round() as i16)
            .collect();
        Self::new(sample_rate, samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_ms(&self) -> u64 {
        samples_to_ms(self.samples.len(), self.sample_rate)
    }

    /// Samples covering `interval`, clipped to the buffer.
    pub fn slice_ms(&self, interval: TimeInterval) -> AudioBuffer {
        let len = self.samples.len();
        let a = ms_to_samples(interval.start(), self.sample_rate).min(len);
        let b = ms_to_samples(interval.end(), self.sample_rate).min(len);
        AudioBuffer::new(self.sample_rate, self.samples[a..b].to_vec())
    }

    /// Truncates or zero-pads to exactly `len` samples.
    pub fn fit_to(&self, len: usize) -> AudioBuffer {
        let mut samples = self.samples.clone();
        samples.resize(len, 0);
        AudioBuffer::new(self.sample_rate, samples)
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
        (sum / self.samples.len() as f64).sqrt()
    }

    /// Linear-interpolation resample; identity when the rate already matches.
    pub fn resample(&self, rate: u32) -> AudioBuffer {
        if rate == self.sample_rate || self.samples.is_empty() {
            return AudioBuffer::new(rate, self.samples.clone());
        }
        let out_len = ((self.samples.len() as u128 * rate as u128 + self.sample_rate as u128 / 2)
            / self.sample_rate as u128) as usize;
        let ratio = self.sample_rate as f64 / rate as f64;
        let last = self.samples.len() - 1;
        let samples = (0..out_len)
            .map(|i| {
                let x = i as f64 * ratio;
                let j = (x.floor() as usize).min(last);
                let frac = x - j as f64;
                let a = self.samples[j] as f64;
                let b = self.samples[(j + 1).min(last)] as f64;
                (a + (b - a) * frac).round() as i16
            })
            .collect();
        AudioBuffer::new(rate, samples)
    }

    /// SHA-256 over the rate and little-endian samples; identifies content
    /// independently of the WAV encoding.
    pub fn content_key(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.sample_rate.to_le_bytes());
        for s in &self.samples {
            h.update(s.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn to_wav(&self) -> Vec<u8> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::with_capacity(44 + 2 * self.samples.len()));
        {
            let mut w = hound::WavWriter::new(&mut cursor, spec).expect("in-memory WAV header");
            let mut w16 = w.get_i16_writer(self.samples.len() as u32);
            for &s in &self.samples {
                w16.write_sample(s);
            }
            w16.flush().expect("in-memory WAV write");
            w.finalize().expect("in-memory WAV finalize");
        }
        cursor.into_inner()
    }

    /// Decodes 16-bit PCM WAV; multi-channel input is averaged down to mono.
    pub fn from_wav(bytes: &[u8]) -> Result<AudioBuffer, EngineError> {
        let reader = hound::WavReader::new(Cursor::new(bytes))
            .map_err(|e| EngineError::UnsupportedMedia(format!("not a WAV file: {e}")))?;
        let spec = reader.spec();
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(EngineError::UnsupportedMedia(format!(
                "expected 16-bit PCM WAV, got {} bit {:?}",
                spec.bits_per_sample, spec.sample_format
            )));
        }
        let raw: Vec<i16> = reader
            .into_samples::<i16>()
            .collect::<Result<_, _>>()
            .map_err(|e| EngineError::UnsupportedMedia(format!("truncated WAV data: {e}")))?;
        let channels = spec.channels.max(1) as usize;
        let samples = if channels == 1 {
            raw
        } else {
            raw.chunks(channels)
                .map(|frame| {
                    let sum: i32 = frame.iter().map(|&s| s as i32).sum();
                    (sum as f64 / channels as f64).round() as i16
                })
                .collect()
        };
        Ok(AudioBuffer::new(spec.sample_rate, samples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_rounding() {
        assert_eq!(AudioBuffer::silence(24_000, 24_000).duration_ms(), 1000);
        assert_eq!(AudioBuffer::silence(24_000, 12).duration_ms(), 1); // 0.5 ms rounds up
        assert_eq!(AudioBuffer::silence(24_000, 11).duration_ms(), 0);
        assert_eq!(ms_to_samples(1000, 44_100), 44_100);
        assert_eq!(ms_to_samples(1, 44_100), 44);
        assert_eq!(AudioBuffer::silence_ms(16_000, 250).len(), 4000);
    }

    #[test]
    fn wav_round_trip() {
        let a = AudioBuffer::tone(8000, 1234, 440.0, 10_000.0, 0.3);
        let wav = a.to_wav();
        assert_eq!(&wav[..4], b"RIFF");
        assert_eq!(AudioBuffer::from_wav(&wav).unwrap(), a);
        assert_eq!(a.to_wav(), wav);
        assert!(AudioBuffer::from_wav(b"nope").is_err());
    }

    #[test]
    fn stereo_is_downmixed() {
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut cursor = Cursor::new(Vec::new());
        {
            let mut w = hound::WavWriter::new(&mut cursor, spec).unwrap();
            for s in [100i16, 300, -10, -20] {
                w.write_sample(s).unwrap();
            }
            w.finalize().unwrap();
        }
        let a = AudioBuffer::from_wav(&cursor.into_inner()).unwrap();
        assert_eq!(a.samples, vec![200, -15]);
    }

    #[test]
    fn slicing_and_fitting() {
        let a = AudioBuffer::new(1000, (0..100).collect());
        let s = a.slice_ms(TimeInterval::new(10, 20).unwrap());
        assert_eq!(s.samples, (10..20).collect::<Vec<i16>>());
        assert_eq!(a.slice_ms(TimeInterval::new(90, 200).unwrap()).len(), 10);
        assert_eq!(s.fit_to(12).samples[10..], [0, 0]);
        assert_eq!(s.fit_to(3).samples, vec![10, 11, 12]);
    }

    #[test]
    fn resample_lengths() {
        let a = AudioBuffer::tone(48_000, 48_000, 100.0, 1000.0, 0.0);
        let b = a.resample(24_000);
        assert_eq!(b.len(), 24_000);
        assert_eq!(b.duration_ms(), 1000);
        assert_eq!(a.resample(48_000), a);
    }

    #[test]
    fn content_key_ignores_encoding() {
        let a = AudioBuffer::tone(8000, 100, 440.0, 1000.0, 0.0);
        assert_eq!(
            a.content_key(),
            AudioBuffer::from_wav(&a.to_wav()).unwrap().content_key()
        );
        assert_ne!(
            a.content_key(),
            AudioBuffer::new(16_000, a.samples.clone()).content_key()
        );
    }
}
