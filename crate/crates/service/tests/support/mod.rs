#![allow(dead_code)]

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use futures::StreamExt;
use globalize_core::engines::fixture::lecture_fixture;
use globalize_core::engines::mock::mock_engines;
use globalize_core::engines::{
    AudioBuffer, EngineError, EngineInfo, EngineSet, MediaInfo, MediaToolkit, SourceSeparator,
};
use globalize_core::model::TimeInterval;
use globalize_core::pipeline::{ProgressEvent, ProgressStatus};
use globalize_service::{AppState, ServiceConfig};
use serde_json::Value;

pub const SEED: u64 = 7;
pub const DURATION_MS: u64 = 8000;
pub const RATE: u32 = 16_000;

pub fn config(root: &std::path::Path) -> ServiceConfig {
    let mut c = ServiceConfig {
        artifact_root: root.to_path_buf(),
        ..ServiceConfig::default()
    };
    c.mock.seed = SEED;
    c.pipeline.sample_rate = RATE;
    c
}

pub fn fixture_video() -> Vec<u8> {
    lecture_fixture(SEED, DURATION_MS, RATE, "en").video
}

pub struct TestServer {
    pub base: String,
    pub state: Arc<AppState>,
    pub client: reqwest::Client,
    pub dir: tempfile::TempDir,
}

impl TestServer {
    pub async fn start() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = config(dir.path());
        let engines = mock_engines(config.mock.clone());
        Self::start_with(dir, &config, engines).await
    }

    pub async fn start_with(dir: tempfile::TempDir, config: &ServiceConfig, engines: EngineSet) -> Self {
        let state = Arc::new(AppState::new(config, engines).unwrap());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        tokio::spawn(globalize_service::serve(
            listener,
            state.clone(),
            futures::future::pending(),
        ));
        Self {
            base,
            state,
            client: reqwest::Client::new(),
            dir,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn create(&self, form: reqwest::multipart::Form) -> reqwest::Response {
        self.client
            .post(self.url("/projects"))
            .multipart(form)
            .send()
            .await
            .unwrap()
    }

    /// Creates a project on the fixture and returns its id.
    pub async fn create_fixture(&self, multi_speaker: bool) -> String {
        let resp = self
            .create(form(fixture_video(), "es", "friendly", multi_speaker))
            .await;
        assert_eq!(resp.status(), 201);
        let body: Value = resp.json().await.unwrap();
        body["id"].as_str().unwrap().to_string()
    }

    pub async fn get_json(&self, path: &str) -> (u16, Value) {
        let resp = self.client.get(self.url(path)).send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    pub async fn trigger(&self, id: &str, stage: &str) -> (u16, Value) {
        let resp = self
            .client
            .post(self.url(&format!("/projects/{id}/stages/{stage}")))
            .send()
            .await
            .unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap_or(Value::Null))
    }

    pub async fn events(&self, id: &str) -> SseReader {
        let resp = self
            .client
            .get(self.url(&format!("/projects/{id}/events")))
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status(), 200);
        assert!(resp.headers()["content-type"]
            .to_str()
            .unwrap()
            .starts_with("text/event-stream"));
        SseReader {
            stream: Box::pin(resp.bytes_stream()),
            buf: String::new(),
        }
    }

    /// Triggers `stage` and waits for its terminal event.
    pub async fn run_stage(&self, id: &str, stage: &str) -> Vec<ProgressEvent> {
        let mut events = self.events(id).await;
        // Skip the replayed event of an earlier run, if any.
        let (status, body) = self.trigger(id, stage).await;
        assert_eq!(status, 202, "{stage}: {body}");
        events.until_terminal_of(stage).await
    }
}

pub fn form(
    media: Vec<u8>,
    target: &str,
    tone: &str,
    multi_speaker: bool,
) -> reqwest::multipart::Form {
    reqwest::multipart::Form::new()
        .part(
            "media",
            reqwest::multipart::Part::bytes(media).file_name("lecture.bin"),
        )
        .text("target_language", target.to_string())
        .text("tone", tone.to_string())
        .text("multi_speaker", multi_speaker.to_string())
}

type ByteStream =
    std::pin::Pin<Box<dyn futures::Stream<Item = reqwest::Result<axum::body::Bytes>> + Send>>;

/// Minimal server-sent-events reader.
pub struct SseReader {
    stream: ByteStream,
    buf: String,
}

#[derive(Debug, Clone)]
pub struct SseEvent {
    pub name: String,
    pub data: ProgressEvent,
}

impl SseReader {
    pub async fn next(&mut self) -> Option<SseEvent> {
        loop {
            if let Some(end) = self.buf.find("\n\n") {
                let block: String = self.buf.drain(..end + 2).collect();
                let mut name = String::from("message");
                let mut data = String::new();
                for line in block.lines() {
                    if let Some(v) = line.strip_prefix("event:") {
                        name = v.trim().to_string();
                    } else if let Some(v) = line.strip_prefix("data:") {
                        data.push_str(v.trim_start());
                    }
                }
                if data.is_empty() {
                    continue;
                }
                return Some(SseEvent {
                    name,
                    data: serde_json::from_str(&data).unwrap(),
                });
            }
            let chunk = tokio::time::timeout(Duration::from_secs(60), self.stream.next())
                .await
                .expect("no event within 60 s")?
                .ok()?;
            self.buf.push_str(&String::from_utf8_lossy(&chunk));
        }
    }

    /// Events of the run of `stage` up to and including its terminal event.
    /// Terminal events replayed from an earlier run are skipped.
    pub async fn until_terminal_of(&mut self, stage: &str) -> Vec<ProgressEvent> {
        let mut out = Vec::new();
        let mut started = false;
        loop {
            let e = self.next().await.expect("stream ended early").data;
            if e.stage.to_string() != stage {
                continue;
            }
            if e.status == ProgressStatus::Running && e.fraction == 0.0 {
                started = true;
                out.clear();
            }
            if !started {
                continue;
            }
            let terminal = e.status != ProgressStatus::Running;
            out.push(e);
            if terminal {
                return out;
            }
        }
    }
}

/// Passes through to `inner` once the gate opens.
pub struct GatedSeparator {
    pub inner: Arc<dyn SourceSeparator>,
    pub gate: Arc<(Mutex<bool>, Condvar)>,
}

impl GatedSeparator {
    pub fn open(gate: &(Mutex<bool>, Condvar)) {
        *gate.0.lock().unwrap() = true;
        gate.1.notify_all();
    }
}

impl SourceSeparator for GatedSeparator {
    fn info(&self) -> EngineInfo {
        self.inner.info()
    }

    fn separate(&self, audio: &AudioBuffer) -> Result<(AudioBuffer, AudioBuffer), EngineError> {
        let (lock, cvar) = &*self.gate;
        let mut open = lock.lock().unwrap();
        while !*open {
            open = cvar.wait(open).unwrap();
        }
        drop(open);
        self.inner.separate(audio)
    }
}

/// A media toolkit whose backend is down.
pub struct DownMedia(pub Arc<dyn MediaToolkit>);

impl DownMedia {
    fn down() -> EngineError {
        EngineError::Unavailable {
            engine: "media".into(),
            reason: "transcoder not reachable".into(),
        }
    }
}

impl MediaToolkit for DownMedia {
    fn info(&self) -> EngineInfo {
        self.0.info()
    }

    fn extension(&self) -> &'static str {
        self.0.extension()
    }

    fn probe(&self, _: &[u8]) -> Result<MediaInfo, EngineError> {
        Err(Self::down())
    }

    fn demux_audio(&self, _: &[u8], _: u32) -> Result<AudioBuffer, EngineError> {
        Err(Self::down())
    }

    fn strip_audio(&self, _: &[u8]) -> Result<Vec<u8>, EngineError> {
        Err(Self::down())
    }

    fn extract_range(&self, _: &[u8], _: TimeInterval) -> Result<Vec<u8>, EngineError> {
        Err(Self::down())
    }

    fn replace_range(&self, _: &[u8], _: TimeInterval, _: &[u8]) -> Result<Vec<u8>, EngineError> {
        Err(Self::down())
    }

    fn mux(&self, _: &[u8], _: &AudioBuffer) -> Result<Vec<u8>, EngineError> {
        Err(Self::down())
    }
}
