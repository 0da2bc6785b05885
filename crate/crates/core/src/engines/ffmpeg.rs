//! Media toolkit backed by the `ffmpeg` and `ffprobe` executables, for real
//! MP4 input. Every call works on temporary files.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::Deserialize;
use tempfile::TempDir;

use super::adapters::{EngineInfo, MediaInfo, MediaToolkit};
use super::audio::AudioBuffer;
use super::EngineError;
use crate::model::TimeInterval;

#[derive(Debug, Clone)]
pub struct FfmpegToolkit {
    pub ffmpeg: PathBuf,
    pub ffprobe: PathBuf,
}

impl Default for FfmpegToolkit {
    fn default() -> Self {
        Self {
            ffmpeg: "ffmpeg".into(),
            ffprobe: "ffprobe".into(),
        }
    }
}

#[derive(Deserialize)]
struct ProbeOutput {
    #[serde(default)]
    streams: Vec<ProbeStream>,
    format: ProbeFormat,
}

#[derive(Deserialize)]
struct ProbeStream {
    codec_type: String,
    #[serde(default)]
    duration: Option<String>,
}

#[derive(Deserialize)]
struct ProbeFormat {
    duration: String,
}

fn seconds_to_ms(s: &str) -> Result<u64, EngineError> {
    s.trim()
        .parse::<f64>()
        .map(|v| (v * 1000.0).round() as u64)
        .map_err(|_| EngineError::UnsupportedMedia(format!("unreadable duration {s:?}")))
}

fn secs(ms: u64) -> String {
    format!("{}.{:03}", ms / 1000, ms % 1000)
}

impl FfmpegToolkit {
    fn workdir() -> Result<TempDir, EngineError> {
        tempfile::tempdir().map_err(|e| EngineError::Transport(format!("temporary directory: {e}")))
    }

    fn write(dir: &TempDir, name: &str, bytes: &[u8]) -> Result<PathBuf, EngineError> {
        let path = dir.path().join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| EngineError::Transport(format!("write {name}: {e}")))?;
        Ok(path)
    }

    fn read(path: &Path) -> Result<Vec<u8>, EngineError> {
        std::fs::read(path)
            .map_err(|e| EngineError::Transport(format!("read {}: {e}", path.display())))
    }

    fn run(&self, program: &Path, args: &[&str]) -> Result<Vec<u8>, EngineError> {
        let out =
            Command::new(program)
                .args(args)
                .output()
                .map_err(|e| EngineError::Unavailable {
                    engine: program.display().to_string(),
                    reason: e.to_string(),
                })?;
        if !out.status.success() {
            return Err(EngineError::InvalidInput(format!(
                "{} failed: {}",
                program.display(),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(out.stdout)
    }

    fn ffmpeg(&self, args: &[&str]) -> Result<(), EngineError> {
        let mut full = vec!["-hide_banner", "-loglevel", "error", "-y"];
        full.extend_from_slice(args);
        self.run(&self.ffmpeg, &full).map(drop)
    }

    fn probe_path(&self, path: &Path) -> Result<MediaInfo, EngineError> {
        let p = path.to_string_lossy();
        let out = self.run(
            &self.ffprobe,
            &[
                "-v",
                "error",
                "-show_entries",
                "format=duration:stream=codec_type,duration",
                "-of",
                "json",
                &p,
            ],
        )?;
        let parsed: ProbeOutput = serde_json::from_slice(&out)
            .map_err(|e| EngineError::UnsupportedMedia(format!("ffprobe output: {e}")))?;
        let stream_ms = |kind: &str| -> Result<Option<u64>, EngineError> {
            parsed
                .streams
                .iter()
                .find(|s| s.codec_type == kind)
                .and_then(|s| s.duration.as_deref())
                .map(seconds_to_ms)
                .transpose()
        };
        let duration_ms = seconds_to_ms(&parsed.format.duration)?;
        Ok(MediaInfo {
            duration_ms,
            video_duration_ms: stream_ms("video")?.unwrap_or(duration_ms),
            audio_duration_ms: stream_ms("audio")?,
        })
    }

    /// Re-encodes `range` of the input so cuts are frame-accurate.
    fn cut(&self, input: &Path, range: TimeInterval, output: &Path) -> Result<(), EngineError> {
        let i = input.to_string_lossy();
        let o = output.to_string_lossy();
        let (ss, t) = (secs(range.start()), secs(range.len()));
        self.ffmpeg(&[
            "-ss", &ss, "-i", &i, "-t", &t, "-an", "-c:v", "libx264", "-preset", "veryfast", &o,
        ])
    }
}

impl MediaToolkit for FfmpegToolkit {
    fn info(&self) -> EngineInfo {
        EngineInfo::new("ffmpeg", "system")
    }

    fn probe(&self, media: &[u8]) -> Result<MediaInfo, EngineError> {
        let dir = Self::workdir()?;
        let input = Self::write(&dir, "in.mp4", media)?;
        self.probe_path(&input)
    }

    fn demux_audio(&self, media: &[u8], sample_rate: u32) -> Result<AudioBuffer, EngineError> {
        let dir = Self::workdir()?;
        let input = Self::write(&dir, "in.mp4", media)?;
        let output = dir.path().join("audio.wav");
        let rate = sample_rate.to_string();
        self.ffmpeg(&[
            "-i",
            &input.to_string_lossy(),
            "-vn",
            "-ac",
            "1",
            "-ar",
            &rate,
            "-c:a",
            "pcm_s16le",
            &output.to_string_lossy(),
        ])?;
        AudioBuffer::from_wav(&Self::read(&output)?)
    }

    fn strip_audio(&self, media: &[u8]) -> Result<Vec<u8>, EngineError> {
        let dir = Self::workdir()?;
        let input = Self::write(&dir, "in.mp4", media)?;
        let output = dir.path().join("video.mp4");
        self.ffmpeg(&[
            "-i",
            &input.to_string_lossy(),
            "-an",
            "-c:v",
            "copy",
            &output.to_string_lossy(),
        ])?;
        Self::read(&output)
    }

    fn extract_range(&self, video: &[u8], range: TimeInterval) -> Result<Vec<u8>, EngineError> {
        let dir = Self::workdir()?;
        let input = Self::write(&dir, "in.mp4", video)?;
        let output = dir.path().join("clip.mp4");
        self.cut(&input, range, &output)?;
        Self::read(&output)
    }

    fn replace_range(
        &self,
        video: &[u8],
        range: TimeInterval,
        clip: &[u8],
    ) -> Result<Vec<u8>, EngineError> {
        let dir = Self::workdir()?;
        let input = Self::write(&dir, "in.mp4", video)?;
        let info = self.probe_path(&input)?;
        let mut parts = Vec::new();
        if range.start() > 0 {
            let head = dir.path().join("head.mp4");
            self.cut(
                &input,
                TimeInterval::new(0, range.start()).expect("non-empty"),
                &head,
            )?;
            parts.push(head);
        }
        let clip_in = Self::write(&dir, "clip_in.mp4", clip)?;
        let clip_out = dir.path().join("clip.mp4");
        self.cut(
            &clip_in,
            TimeInterval::new(0, range.len()).expect("non-empty"),
            &clip_out,
        )?;
        parts.push(clip_out);
        if range.end() < info.video_duration_ms {
            let tail = dir.path().join("tail.mp4");
            self.cut(
                &input,
                TimeInterval::new(range.end(), info.video_duration_ms).expect("non-empty"),
                &tail,
            )?;
            parts.push(tail);
        }
        let list: String = parts
            .iter()
            .map(|p| format!("file '{}'\n", p.to_string_lossy().replace('\'', "'\\''")))
            .collect();
        let list_path = Self::write(&dir, "parts.txt", list.as_bytes())?;
        let output = dir.path().join("out.mp4");
        // Original audio, if any, is copied through unchanged.
        self.ffmpeg(&[
            "-f",
            "concat",
            "-safe",
            "0",
            "-i",
            &list_path.to_string_lossy(),
            "-i",
            &input.to_string_lossy(),
            "-map",
            "0:v:0",
            "-map",
            "1:a?",
            "-c",
            "copy",
            &output.to_string_lossy(),
        ])?;
        Self::read(&output)
    }

    fn mux(&self, video: &[u8], audio: &AudioBuffer) -> Result<Vec<u8>, EngineError> {
        let dir = Self::workdir()?;
        let v = Self::write(&dir, "video.mp4", video)?;
        let a = Self::write(&dir, "audio.wav", &audio.to_wav())?;
        let output = dir.path().join("out.mp4");
        self.ffmpeg(&[
            "-i",
            &v.to_string_lossy(),
            "-i",
            &a.to_string_lossy(),
            "-map",
            "0:v:0",
            "-map",
            "1:a:0",
            "-c:v",
            "copy",
            "-c:a",
            "aac",
            &output.to_string_lossy(),
        ])?;
        Self::read(&output)
    }

    fn extension(&self) -> &'static str {
        "mp4"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_binary_is_unavailable() {
        let tk = FfmpegToolkit {
            ffmpeg: "/nonexistent/ffmpeg".into(),
            ffprobe: "/nonexistent/ffprobe".into(),
        };
        assert!(matches!(
            tk.probe(b"x"),
            Err(EngineError::Unavailable { .. })
        ));
    }

    #[test]
    fn time_formatting() {
        assert_eq!(secs(1234), "1.234");
        assert_eq!(secs(5), "0.005");
        assert_eq!(seconds_to_ms("2.0005").unwrap(), 2001);
    }

    /// Needs `ffmpeg` and `ffprobe` on PATH: `cargo test -- --ignored`.
    #[test]
    #[ignore]
    fn round_trip_with_system_ffmpeg() {
        let tk = FfmpegToolkit::default();
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("src.mp4");
        tk.ffmpeg(&[
            "-f",
            "lavfi",
            "-i",
            "testsrc=duration=3:size=160x120:rate=25",
            "-f",
            "lavfi",
            "-i",
            "sine=frequency=440:duration=3",
            "-c:v",
            "libx264",
            "-c:a",
            "aac",
            "-shortest",
            &src.to_string_lossy(),
        ])
        .unwrap();
        let bytes = std::fs::read(&src).unwrap();
        let info = tk.probe(&bytes).unwrap();
        assert!(info.duration_ms.abs_diff(3000) <= 50);
        let audio = tk.demux_audio(&bytes, 24_000).unwrap();
        assert!(audio.duration_ms().abs_diff(3000) <= 50);
        let video = tk.strip_audio(&bytes).unwrap();
        assert_eq!(tk.probe(&video).unwrap().audio_duration_ms, None);
        let range = TimeInterval::new(1000, 2000).unwrap();
        let clip = tk.extract_range(&video, range).unwrap();
        let spliced = tk.replace_range(&video, range, &clip).unwrap();
        assert!(tk.probe(&spliced).unwrap().duration_ms.abs_diff(3000) <= 80);
        let muxed = tk.mux(&spliced, &audio).unwrap();
        assert!(tk.probe(&muxed).unwrap().duration_ms.abs_diff(3000) <= 80);
    }
}
