use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::Utc;
use tracing::{info, warn};

use super::{
    transition_allowed, PipelineConfig, PipelineError, ProgressEvent, ProgressStatus, StageRun,
};
use crate::alignment::{plan_placement, PlacementPlan};
use crate::engines::{
    mix_tracks, reference_clip, render_dub_track, AudioBuffer, EngineInfo, EngineSet,
};
use crate::intervals::{filter_pad_intervals, normalize_intervals};
use crate::model::{
    merge_adjacent_segments, same_language, validate_transcript, Project, SegmentId, SpeakerId,
    SpeakerLabel, Stage, StageState, TimeInterval, ToneMode, Track, TrackKind, Transcript,
};
use crate::store::{ArtifactId, ArtifactStore};
use crate::subtitle::parse_transcript_json;
use crate::subtitle::to_canonical_json;
use crate::translation::{translate_segments, TranslationOptions};

pub type ProgressSink = Arc<dyn Fn(&ProgressEvent) + Send + Sync>;

/// Name of the per-project JSON-lines log of stage runs.
pub const RUN_LOG: &str = "runs.jsonl";

/// What a stage body hands back to [`Pipeline::advance`].
#[derive(Default)]
struct StageOutput {
    adapters: Vec<EngineInfo>,
    produced: Vec<TrackKind>,
    warnings: Vec<String>,
    details: serde_json::Value,
}

/// Monotone progress reporting for one stage run.
struct Progress<'a> {
    sink: Option<&'a ProgressSink>,
    project_id: &'a str,
    stage: Stage,
    last: f64,
}

impl Progress<'_> {
    fn emit(&mut self, fraction: f64, message: impl Into<String>, status: ProgressStatus) {
        self.last = fraction.clamp(self.last, 1.0);
        if let Some(sink) = self.sink {
            sink(&ProgressEvent {
                project_id: self.project_id.to_string(),
                stage: self.stage,
                fraction: self.last,
                message: message.into(),
                status,
            });
        }
    }

    fn report(&mut self, fraction: f64, message: impl Into<String>) {
        self.emit(fraction, message, ProgressStatus::Running);
    }
}

/// Runs stages against one artifact store and adapter set. Callers must not
/// advance the same project from two threads at once.
#[derive(Clone)]
pub struct Pipeline {
    store: Arc<ArtifactStore>,
    engines: EngineSet,
    config: PipelineConfig,
    progress: Option<ProgressSink>,
}

impl Pipeline {
    pub fn new(store: Arc<ArtifactStore>, engines: EngineSet, config: PipelineConfig) -> Self {
        Self {
            store,
            engines,
            config,
            progress: None,
        }
    }

    pub fn with_progress(mut self, sink: ProgressSink) -> Self {
        self.progress = Some(sink);
        self
    }

    pub fn store(&self) -> &ArtifactStore {
        &self.store
    }

    pub fn engines(&self) -> &EngineSet {
        &self.engines
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Stores the uploaded media and opens a project on it.
    pub fn create_project(
        &self,
        id: impl Into<String>,
        media: &[u8],
        source_language: Option<String>,
        target_language: impl Into<String>,
        tone: ToneMode,
        multi_speaker: bool,
    ) -> Result<Project, PipelineError> {
        let info = self.engines.media.probe(media)?;
        let asset = self.store.put(media)?;
        let mut project = Project::new(
            id,
            asset,
            source_language,
            target_language,
            tone,
            multi_speaker,
        )?;
        project.video_duration = info.video_duration_ms;
        Ok(project)
    }

    pub fn check_transition(project: &Project, requested: Stage) -> Result<(), PipelineError> {
        let current = project.effective_stage();
        if transition_allowed(&current, requested) {
            Ok(())
        } else {
            Err(PipelineError::OutOfOrder {
                requested,
                current: project.stage.clone(),
            })
        }
    }

    /// Runs `requested` on `project`.
    ///
    /// Out-of-order requests leave the project untouched. Otherwise every
    /// track, plan and export produced by `requested` or a later stage is
    /// dropped first; on success the stage's outputs are registered and the
    /// project moves to the stage's completion state, on failure it becomes
    /// `Failed` and can be re-run. Both outcomes are logged.
    pub fn advance(
        &self,
        project: &mut Project,
        requested: Stage,
    ) -> Result<StageRun, PipelineError> {
        Self::check_transition(project, requested)?;
        let started_at = Utc::now();
        let project_id = project.id.clone();
        let mut progress = Progress {
            sink: self.progress.as_ref(),
            project_id: &project_id,
            stage: requested,
            last: 0.0,
        };
        progress.report(0.0, format!("{requested} started"));
        invalidate_from(project, requested);

        let outcome = match requested {
            Stage::Analysis => self.run_analysis(project, &mut progress),
            Stage::Translation => self.run_translation(project, &mut progress),
            Stage::Conversion => self.run_conversion(project, &mut progress),
            Stage::Lipsync => self.run_lipsync(project, &mut progress),
            Stage::Export => self.run_export(project, &mut progress),
        };

        let finished_at = Utc::now();
        let (run, result) = match outcome {
            Ok(out) => {
                project.stage = requested.completes_to();
                let run = StageRun {
                    stage: requested,
                    started_at,
                    finished_at,
                    adapters: out.adapters,
                    produced: out.produced,
                    warnings: out.warnings,
                    error: None,
                    details: out.details,
                };
                progress.emit(
                    1.0,
                    format!("{requested} completed"),
                    ProgressStatus::Completed,
                );
                info!(project = %project.id, stage = %requested, warnings = run.warnings.len(), "stage completed");
                (run.clone(), Ok(run))
            }
            Err(e) => {
                // Partial outputs of the failed run must not survive.
                invalidate_from(project, requested);
                project.stage = StageState::Failed {
                    stage: requested,
                    reason: e.to_string(),
                };
                let run = StageRun {
                    stage: requested,
                    started_at,
                    finished_at,
                    adapters: Vec::new(),
                    produced: Vec::new(),
                    warnings: Vec::new(),
                    error: Some(e.to_string()),
                    details: serde_json::Value::Null,
                };
                let fraction = progress.last;
                progress.emit(fraction, e.to_string(), ProgressStatus::Failed);
                warn!(project = %project.id, stage = %requested, error = %e, "stage failed");
                (run, Err(e))
            }
        };
        project.runs.push(run.clone());
        self.store.append_log(&project.id, RUN_LOG, &run)?;
        result
    }

    fn register(
        &self,
        project: &mut Project,
        kind: TrackKind,
        bytes: &[u8],
    ) -> Result<ArtifactId, PipelineError> {
        let artifact = self.store.put(bytes)?;
        project.tracks.insert(
            kind,
            Track {
                kind,
                artifact: artifact.clone(),
                enabled: true,
                produced_by: kind.producing_stage(),
            },
        );
        Ok(artifact)
    }

    pub(crate) fn track_bytes(
        &self,
        project: &Project,
        kind: TrackKind,
    ) -> Result<Vec<u8>, PipelineError> {
        let track = project
            .track(kind)
            .ok_or(PipelineError::MissingTrack(kind))?;
        Ok(self.store.get(&track.artifact)?)
    }

    pub(crate) fn track_audio(
        &self,
        project: &Project,
        kind: TrackKind,
    ) -> Result<AudioBuffer, PipelineError> {
        let audio = AudioBuffer::from_wav(&self.track_bytes(project, kind)?)?;
        Ok(audio.resample(self.config.sample_rate))
    }

    pub fn track_transcript(
        &self,
        project: &Project,
        kind: TrackKind,
    ) -> Result<Transcript, PipelineError> {
        let bytes = self.track_bytes(project, kind)?;
        let text = String::from_utf8_lossy(&bytes);
        Ok(parse_transcript_json(&text, false)?.transcript)
    }

    fn run_analysis(
        &self,
        project: &mut Project,
        progress: &mut Progress,
    ) -> Result<StageOutput, PipelineError> {
        let e = &self.engines;
        let rate = self.config.sample_rate;
        let source = self.store.get(&project.source_asset)?;
        let media = e.media.probe(&source)?;
        project.video_duration = media.video_duration_ms;
        let mixed = e.media.demux_audio(&source, rate)?;
        progress.report(0.1, "audio extracted");

        let (vocals, background) = e.separator.separate(&mixed)?;
        progress.report(0.35, "vocals separated");

        let mut transcript = e
            .transcriber
            .transcribe(&vocals, project.source_language.as_deref())?;
        let report = validate_transcript(&transcript);
        if !report.is_empty() {
            return Err(PipelineError::InvalidTranscript(report));
        }
        let source_language = project
            .source_language
            .clone()
            .unwrap_or_else(|| transcript.language.clone());
        if same_language(&source_language, &project.target_language) {
            return Err(PipelineError::SameLanguage(source_language));
        }
        transcript.language = source_language.clone();
        progress.report(0.6, format!("transcribed {} segments", transcript.len()));

        let mut adapters = vec![e.media.info(), e.separator.info(), e.transcriber.info()];
        let min_ref = self.config.reference_min_ms;
        let mut references: Vec<(SpeakerId, Option<AudioBuffer>)> = Vec::new();
        if project.multi_speaker && !transcript.is_empty() {
            let d = e.diarizer.diarize(&vocals, &transcript)?;
            adapters.push(e.diarizer.info());
            if d.labels.len() != transcript.len() {
                return Err(crate::engines::EngineError::InvalidOutput {
                    engine: e.diarizer.info().to_string(),
                    reason: format!(
                        "{} labels for {} segments",
                        d.labels.len(),
                        transcript.len()
                    ),
                }
                .into());
            }
            for (seg, label) in transcript.segments.iter_mut().zip(d.labels) {
                seg.speaker = label;
            }
            let report = validate_transcript(&transcript);
            if !report.is_empty() {
                return Err(PipelineError::InvalidTranscript(report));
            }
            for speaker in transcript.speakers() {
                let clip = d
                    .references
                    .iter()
                    .find(|(id, _)| *id == speaker)
                    .map(|(_, clip)| clip.clone())
                    .or_else(|| {
                        let own = transcript.segments.iter().filter(|s| s.speaker == speaker);
                        reference_clip(&vocals, own, min_ref)
                    });
                references.push((speaker, clip));
            }
        } else {
            for seg in &mut transcript.segments {
                seg.speaker = SpeakerId::default_speaker();
            }
            references.push((
                SpeakerId::default_speaker(),
                reference_clip(&vocals, &transcript.segments, min_ref),
            ));
        }
        progress.report(0.8, format!("{} speaker(s)", references.len()));

        project.speakers = references
            .into_iter()
            .map(|(id, clip)| {
                let reference_clip = clip
                    .filter(|c| !c.is_empty())
                    .map(|c| self.store.put(&c.to_wav()))
                    .transpose()?;
                Ok(SpeakerLabel { id, reference_clip })
            })
            .collect::<Result<_, PipelineError>>()?;
        project.source_language = Some(source_language);

        let video = e.media.strip_audio(&source)?;
        self.register(project, TrackKind::Video, &video)?;
        self.register(project, TrackKind::Vocals, &vocals.to_wav())?;
        self.register(project, TrackKind::Background, &background.to_wav())?;
        self.register(
            project,
            TrackKind::Transcript,
            to_canonical_json(&transcript).as_bytes(),
        )?;

        Ok(StageOutput {
            adapters,
            produced: vec![
                TrackKind::Video,
                TrackKind::Vocals,
                TrackKind::Background,
                TrackKind::Transcript,
            ],
            warnings: Vec::new(),
            details: serde_json::json!({
                "segments": transcript.len(),
                "source_language": transcript.language,
            }),
        })
    }

    fn run_translation(
        &self,
        project: &mut Project,
        progress: &mut Progress,
    ) -> Result<StageOutput, PipelineError> {
        let settings = &self.config.translation;
        let source = self.track_transcript(project, TrackKind::Transcript)?;
        let merged =
            merge_adjacent_segments(&source, settings.merge_max_gap_ms, settings.merge_max_chars)?;
        progress.report(0.1, format!("translating {} segments", merged.len()));

        let opts = TranslationOptions {
            tone: project.tone,
            source_language: source.language.clone(),
            target_language: project.target_language.clone(),
            batch_size: settings.batch_size,
            max_attempts: settings.max_attempts,
            separator: settings.separator.clone(),
            role_line: crate::translation::ROLE_LINE.to_string(),
            syllable_hint: settings.syllable_hint,
            cot: settings.cot,
            fallback: settings.fallback,
        };
        let result = translate_segments(&merged, &opts, self.engines.translator.as_ref())?;
        progress.report(0.9, "translation received");

        let translated = result.apply(&merged, &project.target_language);
        self.register(
            project,
            TrackKind::TranslatedTranscript,
            to_canonical_json(&translated).as_bytes(),
        )?;

        let warnings = result
            .untranslated()
            .iter()
            .map(|id| format!("untranslated: {id}"))
            .collect();
        Ok(StageOutput {
            adapters: vec![self.engines.translator.info()],
            produced: vec![TrackKind::TranslatedTranscript],
            warnings,
            details: serde_json::to_value(&result.metadata).unwrap_or_default(),
        })
    }

    fn run_conversion(
        &self,
        project: &mut Project,
        progress: &mut Progress,
    ) -> Result<StageOutput, PipelineError> {
        let e = &self.engines;
        let rate = self.config.sample_rate;
        let translated = self.track_transcript(project, TrackKind::TranslatedTranscript)?;
        let background = self.track_audio(project, TrackKind::Background)?;

        let mut references: BTreeMap<SpeakerId, Option<AudioBuffer>> = BTreeMap::new();
        for label in &project.speakers {
            let clip = match &label.reference_clip {
                Some(id) => Some(AudioBuffer::from_wav(&self.store.get(id)?)?),
                None => None,
            };
            references.insert(label.id.clone(), clip);
        }

        let mut warnings = Vec::new();
        let mut clips: BTreeMap<SegmentId, AudioBuffer> = BTreeMap::new();
        let mut kept = Transcript::empty(translated.language.clone());
        let total = translated.len().max(1) as f64;
        for (i, seg) in translated.segments.iter().enumerate() {
            let reference = references.get(&seg.speaker).and_then(Option::as_ref);
            let clip = e
                .synthesizer
                .synthesize(
                    &seg.text,
                    &project.target_language,
                    &seg.speaker,
                    reference,
                    rate,
                )?
                .resample(rate);
            if clip.duration_ms() == 0 {
                warnings.push(format!("empty synthesis: {}", seg.id));
            } else {
                clips.insert(seg.id.clone(), clip);
                kept.segments.push(seg.clone());
            }
            progress.report(
                0.05 + 0.75 * (i + 1) as f64 / total,
                format!("synthesized {}", seg.id),
            );
        }

        let durations = clips
            .iter()
            .map(|(id, c)| (id.clone(), c.duration_ms()))
            .collect();
        let plan = plan_placement(
            &kept,
            &durations,
            project.video_duration,
            &self.config.stretch,
        )?;
        for p in plan.flagged() {
            for flag in &p.flags {
                let name = serde_json::to_value(flag)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string));
                warnings.push(format!("{}: {}", name.unwrap_or_default(), p.segment_id));
            }
        }
        let bed = render_dub_track(&plan, &clips, project.video_duration, rate)?;
        progress.report(0.9, "dub track rendered");
        let mixed = mix_tracks(&bed, &background, 1.0, self.config.background_gain)?;

        let plan_json = serde_json::to_vec_pretty(&plan).expect("plan serializes");
        project.placement_plan = Some(self.store.put(&plan_json)?);
        self.register(project, TrackKind::DubbedAudio, &mixed.to_wav())?;

        Ok(StageOutput {
            adapters: vec![e.synthesizer.info()],
            produced: vec![TrackKind::DubbedAudio],
            warnings,
            details: serde_json::json!({ "placements": plan.placements.len() }),
        })
    }

    fn run_lipsync(
        &self,
        project: &mut Project,
        progress: &mut Progress,
    ) -> Result<StageOutput, PipelineError> {
        let e = &self.engines;
        let video = self.track_bytes(project, TrackKind::Video)?;
        let dubbed = self.track_audio(project, TrackKind::DubbedAudio)?;
        let raw = e.face_detector.detect(&video)?;
        let intervals = match TimeInterval::new(0, project.video_duration) {
            Ok(bounds) => filter_pad_intervals(
                &normalize_intervals(&raw)?,
                self.config.lipsync_min_duration_ms,
                self.config.lipsync_pad_ms,
                bounds,
            ),
            Err(_) => Vec::new(),
        };
        progress.report(0.2, format!("{} face interval(s)", intervals.len()));

        let mut warnings = Vec::new();
        let mut out = video.clone();
        if intervals.is_empty() {
            warnings.push("no face intervals".to_string());
        }
        let total = intervals.len().max(1) as f64;
        for (i, iv) in intervals.iter().enumerate() {
            let audio = dubbed
                .slice_ms(*iv)
                .fit_to(crate::engines::ms_to_samples(iv.len(), dubbed.sample_rate));
            let clip = e.lipsyncer.lipsync(&video, *iv, &audio)?;
            out = e.media.replace_range(&out, *iv, &clip)?;
            progress.report(
                0.2 + 0.75 * (i + 1) as f64 / total,
                format!("lip-synced {iv}"),
            );
        }
        self.register(project, TrackKind::LipsyncedVideo, &out)?;

        let ranges: Vec<_> = intervals
            .iter()
            .map(|iv| crate::model::RawInterval::from(*iv))
            .collect();
        Ok(StageOutput {
            adapters: vec![e.face_detector.info(), e.lipsyncer.info(), e.media.info()],
            produced: vec![TrackKind::LipsyncedVideo],
            warnings,
            details: serde_json::json!({ "intervals": ranges }),
        })
    }

    fn run_export(
        &self,
        project: &mut Project,
        progress: &mut Progress,
    ) -> Result<StageOutput, PipelineError> {
        let muxed = self.default_export(project)?;
        progress.report(0.9, "muxed");
        let id = self.store.put(&muxed)?;
        project.export = Some(id.clone());
        Ok(StageOutput {
            adapters: vec![self.engines.media.info()],
            produced: Vec::new(),
            warnings: Vec::new(),
            details: serde_json::json!({ "export": id }),
        })
    }

    /// The placement plan of the last conversion.
    pub fn placement_plan(&self, project: &Project) -> Result<PlacementPlan, PipelineError> {
        let id = project
            .placement_plan
            .as_ref()
            .ok_or(PipelineError::MissingTrack(TrackKind::DubbedAudio))?;
        let bytes = self.store.get(id)?;
        serde_json::from_slice(&bytes).map_err(|e| {
            PipelineError::Engine(crate::engines::EngineError::InvalidOutput {
                engine: "placement-plan".into(),
                reason: e.to_string(),
            })
        })
    }
}

/// Drops every output of `stage` and the stages after it.
fn invalidate_from(project: &mut Project, stage: Stage) {
    project
        .tracks
        .retain(|kind, _| kind.producing_stage() < stage);
    if stage <= Stage::Conversion {
        project.placement_plan = None;
    }
    if stage <= Stage::Analysis {
        project.speakers.clear();
    }
    project.export = None;
}
