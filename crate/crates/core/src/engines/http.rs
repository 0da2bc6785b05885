//! Thin blocking HTTP clients for remote model servers.
//!
//! Every capability is one `POST` of a JSON body to its endpoint. Media never
//! travels inline: clients upload inputs to the artifact store
//! (`POST {artifact_url}/artifacts`, raw body, answers `{"id": ...}`) and
//! pass ids; servers answer with ids the client downloads from
//! `GET {artifact_url}/artifacts/{id}`. Audio artifacts are 16-bit mono WAV.
//!
//! The clients own a blocking runtime, so build them outside any async
//! context.

use std::sync::Arc;
use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder, Response};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tracing::debug;

use super::adapters::{
    Diarization, Diarizer, EngineInfo, EngineSet, FaceDetector, LipSyncer, MediaToolkit,
    SourceSeparator, Transcriber, Translator, VoiceSynthesizer,
};
use super::audio::AudioBuffer;
use super::EngineError;
use crate::model::{RawInterval, SpeakerId, TimeInterval, Transcript};
use crate::store::ArtifactId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpEndpoint {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// Extra attempts after a transport failure or 5xx answer.
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_parallel_calls: Option<usize>,
    #[serde(default = "default_version")]
    pub version: String,
}

fn default_timeout_ms() -> u64 {
    120_000
}

fn default_retries() -> u32 {
    2
}

fn default_version() -> String {
    "remote".into()
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            token: None,
            timeout_ms: default_timeout_ms(),
            retries: default_retries(),
            max_parallel_calls: None,
            version: default_version(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpEngineConfig {
    /// Base URL of the artifact store, usually this service.
    pub artifact_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact_token: Option<String>,
    pub separator: HttpEndpoint,
    pub transcriber: HttpEndpoint,
    pub diarizer: HttpEndpoint,
    pub translator: HttpEndpoint,
    pub synthesizer: HttpEndpoint,
    pub face_detector: HttpEndpoint,
    pub lipsyncer: HttpEndpoint,
}

// Wire types, shared with server implementations.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub id: ArtifactId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparateRequest {
    pub audio: ArtifactId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparateResponse {
    pub vocals: ArtifactId,
    pub background: ArtifactId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscribeRequest {
    pub audio: ArtifactId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiarizeRequest {
    pub audio: ArtifactId,
    pub transcript: Transcript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceClip {
    pub speaker: SpeakerId,
    pub audio: ArtifactId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiarizeResponse {
    pub labels: Vec<SpeakerId>,
    pub references: Vec<ReferenceClip>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslateResponse {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesizeRequest {
    pub text: String,
    pub language: String,
    pub speaker: SpeakerId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ArtifactId>,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioResponse {
    pub audio: ArtifactId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectFacesRequest {
    pub video: ArtifactId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectFacesResponse {
    pub intervals: Vec<RawInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipsyncRequest {
    pub video: ArtifactId,
    pub interval: RawInterval,
    pub audio: ArtifactId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoResponse {
    pub video: ArtifactId,
}

fn with_token(req: RequestBuilder, token: Option<&str>) -> RequestBuilder {
    match token {
        Some(t) => req.bearer_auth(t),
        None => req,
    }
}

fn send_error(engine: &str, e: reqwest::Error) -> EngineError {
    if e.is_connect() {
        EngineError::Unavailable {
            engine: engine.to_string(),
            reason: e.to_string(),
        }
    } else {
        EngineError::Transport(format!("{engine}: {e}"))
    }
}

/// Sends with retries; 5xx answers and transport failures are retried,
/// 4xx answers are final.
fn send_with_retry(
    engine: &str,
    retries: u32,
    build: impl Fn() -> RequestBuilder,
) -> Result<Response, EngineError> {
    let mut last = None;
    for attempt in 0..=retries {
        match build().send() {
            Ok(resp) if resp.status().is_success() => return Ok(resp),
            Ok(resp) => {
                let status = resp.status();
                let body = resp.text().unwrap_or_default();
                let err = if status == StatusCode::SERVICE_UNAVAILABLE {
                    EngineError::Unavailable {
                        engine: engine.to_string(),
                        reason: format!("{status}: {body}"),
                    }
                } else if status.is_server_error() {
                    EngineError::Transport(format!("{engine}: {status}: {body}"))
                } else {
                    return Err(EngineError::InvalidOutput {
                        engine: engine.to_string(),
                        reason: format!("{status}: {body}"),
                    });
                };
                debug!(engine, attempt, error = %err, "request failed");
                last = Some(err);
            }
            Err(e) => {
                let err = send_error(engine, e);
                debug!(engine, attempt, error = %err, "request failed");
                last = Some(err);
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

fn build_client(timeout_ms: u64) -> Result<Client, EngineError> {
    Client::builder()
        .timeout(Duration::from_millis(timeout_ms))
        .build()
        .map_err(|e| EngineError::Transport(format!("cannot build HTTP client: {e}")))
}

/// Uploads and downloads artifacts by content id.
#[derive(Clone)]
pub struct ArtifactClient {
    base: String,
    token: Option<String>,
    client: Client,
}

impl ArtifactClient {
    pub fn new(base: impl Into<String>, token: Option<String>) -> Result<Self, EngineError> {
        Ok(Self {
            base: base.into().trim_end_matches('/').to_string(),
            token,
            client: build_client(default_timeout_ms())?,
        })
    }

    pub fn put(&self, bytes: &[u8]) -> Result<ArtifactId, EngineError> {
        let url = format!("{}/artifacts", self.base);
        let resp = send_with_retry("artifact-store", default_retries(), || {
            with_token(self.client.post(&url), self.token.as_deref())
                .header(reqwest::header::CONTENT_TYPE, "application/octet-stream")
                .body(bytes.to_vec())
        })?;
        let r: ArtifactRef = resp.json().map_err(|e| EngineError::InvalidOutput {
            engine: "artifact-store".into(),
            reason: e.to_string(),
        })?;
        if r.id != ArtifactId::of(bytes) {
            return Err(EngineError::InvalidOutput {
                engine: "artifact-store".into(),
                reason: format!("stored id {} does not match the content", r.id),
            });
        }
        Ok(r.id)
    }

    pub fn get(&self, id: &ArtifactId) -> Result<Vec<u8>, EngineError> {
        let url = format!("{}/artifacts/{id}", self.base);
        let resp = send_with_retry("artifact-store", default_retries(), || {
            with_token(self.client.get(&url), self.token.as_deref())
        })?;
        let bytes = resp
            .bytes()
            .map_err(|e| EngineError::Transport(e.to_string()))?
            .to_vec();
        if &ArtifactId::of(&bytes) != id {
            return Err(EngineError::InvalidOutput {
                engine: "artifact-store".into(),
                reason: format!("artifact {id} failed its digest check"),
            });
        }
        Ok(bytes)
    }

    pub fn put_audio(&self, audio: &AudioBuffer) -> Result<ArtifactId, EngineError> {
        self.put(&audio.to_wav())
    }

    pub fn get_audio(&self, id: &ArtifactId) -> Result<AudioBuffer, EngineError> {
        AudioBuffer::from_wav(&self.get(id)?)
    }
}

/// JSON-over-HTTP call to one capability endpoint.
#[derive(Clone)]
struct JsonClient {
    capability: &'static str,
    endpoint: HttpEndpoint,
    client: Client,
}

impl JsonClient {
    fn new(capability: &'static str, endpoint: HttpEndpoint) -> Result<Self, EngineError> {
        Ok(Self {
            capability,
            client: build_client(endpoint.timeout_ms)?,
            endpoint,
        })
    }

    fn info(&self) -> EngineInfo {
        EngineInfo::new(
            format!("http-{}", self.capability),
            self.endpoint.version.clone(),
        )
    }

    fn call<Q: Serialize, R: DeserializeOwned>(&self, body: &Q) -> Result<R, EngineError> {
        let resp = send_with_retry(self.capability, self.endpoint.retries, || {
            with_token(
                self.client.post(&self.endpoint.url),
                self.endpoint.token.as_deref(),
            )
            .json(body)
        })?;
        resp.json().map_err(|e| EngineError::InvalidOutput {
            engine: self.capability.to_string(),
            reason: e.to_string(),
        })
    }
}

pub struct HttpSeparator {
    api: JsonClient,
    artifacts: ArtifactClient,
}

impl SourceSeparator for HttpSeparator {
    fn info(&self) -> EngineInfo {
        self.api.info()
    }

    fn separate(&self, audio: &AudioBuffer) -> Result<(AudioBuffer, AudioBuffer), EngineError> {
        let req = SeparateRequest {
            audio: self.artifacts.put_audio(audio)?,
        };
        let resp: SeparateResponse = self.api.call(&req)?;
        Ok((
            self.artifacts.get_audio(&resp.vocals)?,
            self.artifacts.get_audio(&resp.background)?,
        ))
    }

    fn max_parallel_calls(&self) -> Option<usize> {
        self.api.endpoint.max_parallel_calls
    }
}

pub struct HttpTranscriber {
    api: JsonClient,
    artifacts: ArtifactClient,
}

impl Transcriber for HttpTranscriber {
    fn info(&self) -> EngineInfo {
        self.api.info()
    }

    fn transcribe(
        &self,
        vocals: &AudioBuffer,
        language: Option<&str>,
    ) -> Result<Transcript, EngineError> {
        let req = TranscribeRequest {
            audio: self.artifacts.put_audio(vocals)?,
            language: language.map(str::to_string),
        };
        self.api.call(&req)
    }

    fn max_parallel_calls(&self) -> Option<usize> {
        self.api.endpoint.max_parallel_calls
    }
}

pub struct HttpDiarizer {
    api: JsonClient,
    artifacts: ArtifactClient,
}

impl Diarizer for HttpDiarizer {
    fn info(&self) -> EngineInfo {
        self.api.info()
    }

    fn diarize(
        &self,
        vocals: &AudioBuffer,
        transcript: &Transcript,
    ) -> Result<Diarization, EngineError> {
        let req = DiarizeRequest {
            audio: self.artifacts.put_audio(vocals)?,
            transcript: transcript.clone(),
        };
        let resp: DiarizeResponse = self.api.call(&req)?;
        if resp.labels.len() != transcript.len() {
            return Err(EngineError::InvalidOutput {
                engine: "diarizer".into(),
                reason: format!(
                    "{} labels for {} segments",
                    resp.labels.len(),
                    transcript.len()
                ),
            });
        }
        let references = resp
            .references
            .into_iter()
            .map(|r| Ok((r.speaker, self.artifacts.get_audio(&r.audio)?)))
            .collect::<Result<_, EngineError>>()?;
        Ok(Diarization {
            labels: resp.labels,
            references,
        })
    }

    fn max_parallel_calls(&self) -> Option<usize> {
        self.api.endpoint.max_parallel_calls
    }
}

pub struct HttpTranslator {
    api: JsonClient,
}

impl HttpTranslator {
    pub fn new(endpoint: HttpEndpoint) -> Result<Self, EngineError> {
        Ok(Self {
            api: JsonClient::new("translator", endpoint)?,
        })
    }
}

impl Translator for HttpTranslator {
    fn info(&self) -> EngineInfo {
        self.api.info()
    }

    fn translate(&self, prompt: &str) -> Result<String, EngineError> {
        let resp: TranslateResponse = self.api.call(&TranslateRequest {
            prompt: prompt.to_string(),
        })?;
        Ok(resp.text)
    }

    fn max_parallel_calls(&self) -> Option<usize> {
        self.api.endpoint.max_parallel_calls
    }
}

pub struct HttpSynthesizer {
    api: JsonClient,
    artifacts: ArtifactClient,
}

impl VoiceSynthesizer for HttpSynthesizer {
    fn info(&self) -> EngineInfo {
        self.api.info()
    }

    fn synthesize(
        &self,
        text: &str,
        language: &str,
        speaker: &SpeakerId,
        reference: Option<&AudioBuffer>,
        sample_rate: u32,
    ) -> Result<AudioBuffer, EngineError> {
        let req = SynthesizeRequest {
            text: text.to_string(),
            language: language.to_string(),
            speaker: speaker.clone(),
            reference: reference.map(|r| self.artifacts.put_audio(r)).transpose()?,
            sample_rate,
        };
        let resp: AudioResponse = self.api.call(&req)?;
        let audio = self.artifacts.get_audio(&resp.audio)?;
        if audio.sample_rate != sample_rate {
            return Err(EngineError::InvalidOutput {
                engine: "synthesizer".into(),
                reason: format!("asked for {sample_rate} Hz, got {} Hz", audio.sample_rate),
            });
        }
        Ok(audio)
    }

    fn max_parallel_calls(&self) -> Option<usize> {
        self.api.endpoint.max_parallel_calls
    }
}

pub struct HttpFaceDetector {
    api: JsonClient,
    artifacts: ArtifactClient,
}

impl FaceDetector for HttpFaceDetector {
    fn info(&self) -> EngineInfo {
        self.api.info()
    }

    fn detect(&self, video: &[u8]) -> Result<Vec<RawInterval>, EngineError> {
        let req = DetectFacesRequest {
            video: self.artifacts.put(video)?,
        };
        let resp: DetectFacesResponse = self.api.call(&req)?;
        Ok(resp.intervals)
    }

    fn max_parallel_calls(&self) -> Option<usize> {
        self.api.endpoint.max_parallel_calls
    }
}

pub struct HttpLipSyncer {
    api: JsonClient,
    artifacts: ArtifactClient,
}

impl LipSyncer for HttpLipSyncer {
    fn info(&self) -> EngineInfo {
        self.api.info()
    }

    fn lipsync(
        &self,
        video: &[u8],
        interval: TimeInterval,
        audio: &AudioBuffer,
    ) -> Result<Vec<u8>, EngineError> {
        let req = LipsyncRequest {
            video: self.artifacts.put(video)?,
            interval: interval.into(),
            audio: self.artifacts.put_audio(audio)?,
        };
        let resp: VideoResponse = self.api.call(&req)?;
        self.artifacts.get(&resp.video)
    }

    fn max_parallel_calls(&self) -> Option<usize> {
        self.api.endpoint.max_parallel_calls
    }
}

/// Remote adapters for every model capability; `media` handles containers.
pub fn http_engines(
    config: &HttpEngineConfig,
    media: Arc<dyn MediaToolkit>,
) -> Result<EngineSet, EngineError> {
    let artifacts =
        ArtifactClient::new(config.artifact_url.clone(), config.artifact_token.clone())?;
    Ok(EngineSet {
        separator: Arc::new(HttpSeparator {
            api: JsonClient::new("separator", config.separator.clone())?,
            artifacts: artifacts.clone(),
        }),
        transcriber: Arc::new(HttpTranscriber {
            api: JsonClient::new("transcriber", config.transcriber.clone())?,
            artifacts: artifacts.clone(),
        }),
        diarizer: Arc::new(HttpDiarizer {
            api: JsonClient::new("diarizer", config.diarizer.clone())?,
            artifacts: artifacts.clone(),
        }),
        translator: Arc::new(HttpTranslator::new(config.translator.clone())?),
        synthesizer: Arc::new(HttpSynthesizer {
            api: JsonClient::new("synthesizer", config.synthesizer.clone())?,
            artifacts: artifacts.clone(),
        }),
        face_detector: Arc::new(HttpFaceDetector {
            api: JsonClient::new("face-detector", config.face_detector.clone())?,
            artifacts: artifacts.clone(),
        }),
        lipsyncer: Arc::new(HttpLipSyncer {
            api: JsonClient::new("lipsync", config.lipsyncer.clone())?,
            artifacts,
        }),
        media,
    })
}
