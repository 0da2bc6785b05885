//! Shared service state: the pipeline, the persisted project registry and
//! per-project progress channels.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use globalize_core::engines::EngineSet;
use globalize_core::model::{Project, Stage, StageState};
use globalize_core::pipeline::{
    transition_allowed, Pipeline, PipelineError, ProgressEvent, ProgressStatus,
};
use globalize_core::store::{ArtifactId, ArtifactStore, StoreError};
use serde::Serialize;
use tokio::sync::broadcast;
use tracing::{error, warn};

use crate::config::ServiceConfig;

/// File holding a project's persisted state inside its project directory.
pub const PROJECT_FILE: &str = "project.json";

const CHANNEL_CAPACITY: usize = 256;

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

#[derive(Default)]
struct Channel {
    tx: Option<broadcast::Sender<ProgressEvent>>,
    last: Option<ProgressEvent>,
    /// Terminal event held back until the project state is persisted, so a
    /// client reacting to it reads the new state.
    pending: Option<ProgressEvent>,
}

impl Channel {
    fn sender(&mut self) -> &broadcast::Sender<ProgressEvent> {
        self.tx
            .get_or_insert_with(|| broadcast::channel(CHANNEL_CAPACITY).0)
    }

    fn send(&mut self, event: ProgressEvent) {
        self.last = Some(event.clone());
        // No subscribers is fine.
        let _ = self.sender().send(event);
    }
}

/// Fan-out of progress events, one channel per project.
#[derive(Default)]
pub struct EventHub {
    channels: Mutex<HashMap<String, Channel>>,
}

impl EventHub {
    pub fn publish(&self, event: &ProgressEvent) {
        let mut channels = lock(&self.channels);
        let channel = channels.entry(event.project_id.clone()).or_default();
        if event.status == ProgressStatus::Running {
            channel.send(event.clone());
        } else {
            channel.pending = Some(event.clone());
        }
    }

    /// Releases the held-back terminal event, synthesizing one if the run
    /// ended without emitting it.
    pub fn finish(&self, project: &str, stage: Stage, outcome: Result<(), String>) {
        let mut channels = lock(&self.channels);
        let channel = channels.entry(project.to_string()).or_default();
        let event = channel.pending.take().unwrap_or_else(|| {
            let fraction = channel
                .last
                .as_ref()
                .filter(|e| e.stage == stage)
                .map_or(0.0, |e| e.fraction);
            match &outcome {
                Ok(()) => ProgressEvent {
                    project_id: project.to_string(),
                    stage,
                    fraction: 1.0,
                    message: format!("{stage} completed"),
                    status: ProgressStatus::Completed,
                },
                Err(message) => ProgressEvent {
                    project_id: project.to_string(),
                    stage,
                    fraction,
                    message: message.clone(),
                    status: ProgressStatus::Failed,
                },
            }
        });
        channel.send(event);
    }

    /// The most recent event (for replay) and a receiver for the rest.
    pub fn subscribe(
        &self,
        project: &str,
    ) -> (Option<ProgressEvent>, broadcast::Receiver<ProgressEvent>) {
        let mut channels = lock(&self.channels);
        let channel = channels.entry(project.to_string()).or_default();
        let rx = channel.sender().subscribe();
        (channel.last.clone(), rx)
    }

    pub fn forget(&self, project: &str) {
        lock(&self.channels).remove(project);
    }
}

pub struct ProjectSlot {
    project: Mutex<Project>,
    busy: AtomicBool,
}

impl ProjectSlot {
    pub fn snapshot(&self) -> Project {
        lock(&self.project).clone()
    }

    pub fn is_busy(&self) -> bool {
        self.busy.load(Ordering::SeqCst)
    }

    /// Claims the exclusive right to run a stage.
    pub fn try_claim(&self) -> bool {
        self.busy
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .is_ok()
    }

    pub fn release(&self) {
        self.busy.store(false, Ordering::SeqCst);
    }
}

/// What `GET /projects/{id}` returns: the project plus derived facts.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectView {
    #[serde(flatten)]
    pub project: Project,
    pub effective_stage: StageState,
    pub warnings: Vec<String>,
    pub running: bool,
    /// Stages that may be triggered now, re-runs included.
    pub available_stages: Vec<Stage>,
}

impl ProjectView {
    pub fn new(project: Project, running: bool) -> Self {
        let effective_stage = project.effective_stage();
        let available_stages = if running {
            Vec::new()
        } else {
            Stage::ALL
                .into_iter()
                .filter(|&s| transition_allowed(&effective_stage, s))
                .collect()
        };
        Self {
            warnings: project.warnings(),
            effective_stage,
            running,
            available_stages,
            project,
        }
    }
}

pub struct AppState {
    pipeline: Pipeline,
    store: Arc<ArtifactStore>,
    hub: Arc<EventHub>,
    projects: RwLock<HashMap<String, Arc<ProjectSlot>>>,
    pub upload_limit_bytes: u64,
}

impl AppState {
    /// Opens the artifact root and reloads every persisted project.
    pub fn new(config: &ServiceConfig, engines: EngineSet) -> Result<Self, StoreError> {
        let store = Arc::new(ArtifactStore::open(&config.artifact_root)?);
        let hub = Arc::new(EventHub::default());
        let sink = hub.clone();
        let pipeline = Pipeline::new(store.clone(), engines, config.pipeline.clone())
            .with_progress(Arc::new(move |e: &ProgressEvent| sink.publish(e)));
        let state = Self {
            pipeline,
            store,
            hub,
            projects: RwLock::new(HashMap::new()),
            upload_limit_bytes: config.upload_limit_bytes,
        };
        state.reload()?;
        Ok(state)
    }

    fn reload(&self) -> Result<(), StoreError> {
        let dir = self.store.root().join("projects");
        let entries = match fs::read_dir(&dir) {
            Ok(entries) => entries,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
            Err(e) => return Err(e.into()),
        };
        let mut projects = self.projects.write().unwrap_or_else(|e| e.into_inner());
        for entry in entries {
            let path = entry?.path().join(PROJECT_FILE);
            let Ok(bytes) = fs::read(&path) else { continue };
            match serde_json::from_slice::<Project>(&bytes) {
                Ok(p) => {
                    projects.insert(
                        p.id.clone(),
                        Arc::new(ProjectSlot {
                            project: Mutex::new(p),
                            busy: AtomicBool::new(false),
                        }),
                    );
                }
                Err(e) => warn!(path = %path.display(), error = %e, "skipping unreadable project"),
            }
        }
        Ok(())
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn store(&self) -> &ArtifactStore {
        &self.store
    }

    pub fn hub(&self) -> &EventHub {
        &self.hub
    }

    pub fn project(&self, id: &str) -> Option<Arc<ProjectSlot>> {
        self.projects
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
    }

    pub fn project_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .projects
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    pub fn view(&self, slot: &ProjectSlot) -> ProjectView {
        ProjectView::new(slot.snapshot(), slot.is_busy())
    }

    fn project_file(&self, id: &str) -> PathBuf {
        self.store.project_dir(id).join(PROJECT_FILE)
    }

    fn persist(&self, project: &Project) -> Result<(), StoreError> {
        let path = self.project_file(&project.id);
        fs::create_dir_all(path.parent().expect("project file has a parent"))?;
        let tmp = path.with_extension("json.tmp");
        let bytes = serde_json::to_vec_pretty(project).map_err(io::Error::other)?;
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Probes and stores the media, then registers the new project.
    pub fn create_project(
        &self,
        media: &[u8],
        source_language: Option<String>,
        target_language: String,
        tone: globalize_core::model::ToneMode,
        multi_speaker: bool,
    ) -> Result<Project, PipelineError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let project = self.pipeline.create_project(
            id,
            media,
            source_language,
            target_language,
            tone,
            multi_speaker,
        )?;
        self.persist(&project)?;
        self.projects
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(
                project.id.clone(),
                Arc::new(ProjectSlot {
                    project: Mutex::new(project.clone()),
                    busy: AtomicBool::new(false),
                }),
            );
        Ok(project)
    }

    /// Runs `stage` to completion on a claimed slot, persists the outcome
    /// and releases the slot. Blocking.
    pub fn run_stage(&self, slot: &ProjectSlot, stage: Stage) {
        let mut project = slot.snapshot();
        let outcome = self.pipeline.advance(&mut project, stage);
        let id = project.id.clone();
        if let Err(e) = self.persist(&project) {
            error!(project = %id, error = %e, "cannot persist project state");
        }
        *lock(&slot.project) = project;
        slot.release();
        self.hub
            .finish(&id, stage, outcome.map(|_| ()).map_err(|e| e.to_string()));
    }

    /// Forgets the project and removes its directory and every artifact no
    /// other project references.
    pub fn delete_project(&self, id: &str) -> Result<bool, StoreError> {
        let Some(slot) = self
            .projects
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .remove(id)
        else {
            return Ok(false);
        };
        let project = slot.snapshot();
        let others: BTreeSet<ArtifactId> = self
            .projects
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .flat_map(|s| referenced(&s.snapshot()))
            .collect();
        for artifact in referenced(&project) {
            if !others.contains(&artifact) {
                self.store.remove(&artifact)?;
            }
        }
        match fs::remove_dir_all(self.store.project_dir(id)) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e.into()),
        }
        self.hub.forget(id);
        Ok(true)
    }
}

/// Every artifact id a project points at.
pub fn referenced(project: &Project) -> BTreeSet<ArtifactId> {
    let mut ids = BTreeSet::from([project.source_asset.clone()]);
    ids.extend(project.tracks.values().map(|t| t.artifact.clone()));
    ids.extend(
        project
            .speakers
            .iter()
            .filter_map(|s| s.reference_clip.clone()),
    );
    ids.extend(project.placement_plan.clone());
    ids.extend(project.export.clone());
    ids
}
