use super::{Pipeline, PipelineError};
use crate::model::{Project, TrackKind};
use crate::subtitle::{emit_subtitles, SubtitleFormat};

pub const ARCHIVE_CONTENT_TYPE: &str = "application/x-tar";

/// A downloadable file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedFile {
    pub file_name: String,
    pub content_type: String,
    pub bytes: Vec<u8>,
}

impl Pipeline {
    /// (LipsyncedVideo, else Video) muxed with DubbedAudio, checked to last
    /// as long as the source video within the configured tolerance.
    pub(crate) fn default_export(&self, project: &Project) -> Result<Vec<u8>, PipelineError> {
        let media = &self.engines().media;
        let video = match project.track(TrackKind::LipsyncedVideo) {
            Some(_) => self.track_bytes(project, TrackKind::LipsyncedVideo)?,
            None => self.track_bytes(project, TrackKind::Video)?,
        };
        let audio = self.track_audio(project, TrackKind::DubbedAudio)?;
        let muxed = media.mux(&video, &audio)?;
        let got_ms = media.probe(&muxed)?.duration_ms;
        if got_ms.abs_diff(project.video_duration) > self.config().export_tolerance_ms {
            return Err(PipelineError::ExportDuration {
                got_ms,
                expected_ms: project.video_duration,
            });
        }
        Ok(muxed)
    }

    /// One track as a file. Transcript kinds are rendered in `format`.
    pub fn track_file(
        &self,
        project: &Project,
        kind: TrackKind,
        format: SubtitleFormat,
    ) -> Result<ExportedFile, PipelineError> {
        if kind.is_transcript() {
            let transcript = self.track_transcript(project, kind)?;
            return Ok(ExportedFile {
                file_name: format!("{kind}.{}", format.extension()),
                content_type: format.content_type().to_string(),
                bytes: emit_subtitles(&transcript, format)?.into_bytes(),
            });
        }
        let bytes = self.track_bytes(project, kind)?;
        let (ext, content_type) = if kind.is_audio() {
            ("wav", "audio/wav".to_string())
        } else {
            let ext = self.engines().media.extension();
            (ext, video_content_type(ext))
        };
        Ok(ExportedFile {
            file_name: format!("{kind}.{ext}"),
            content_type,
            bytes,
        })
    }

    /// The final dubbed video when it was exported, else the default export
    /// computed on the fly.
    pub fn export_file(&self, project: &Project) -> Result<ExportedFile, PipelineError> {
        let bytes = match &project.export {
            Some(id) => self.store().get(id)?,
            None => self.default_export(project)?,
        };
        let ext = self.engines().media.extension();
        Ok(ExportedFile {
            file_name: format!("{}-dubbed.{ext}", project.id),
            content_type: video_content_type(ext),
            bytes,
        })
    }

    /// Empty selection: the dubbed video. One kind: that track. Several: a tar
    /// archive of the tracks in lane order.
    pub fn export_selection(
        &self,
        project: &Project,
        selection: &[TrackKind],
        format: SubtitleFormat,
    ) -> Result<ExportedFile, PipelineError> {
        let mut kinds: Vec<TrackKind> = selection.to_vec();
        kinds.sort();
        kinds.dedup();
        match kinds.as_slice() {
            [] => self.export_file(project),
            [kind] => self.track_file(project, *kind, format),
            _ => {
                let files = kinds
                    .iter()
                    .map(|k| self.track_file(project, *k, format))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ExportedFile {
                    file_name: format!("{}-tracks.tar", project.id),
                    content_type: ARCHIVE_CONTENT_TYPE.to_string(),
                    bytes: tar_archive(&files),
                })
            }
        }
    }
}

fn video_content_type(ext: &str) -> String {
    match ext {
        "mp4" => "video/mp4".into(),
        _ => "application/octet-stream".into(),
    }
}

/// Byte-deterministic archive: fixed mode, owner and timestamps.
fn tar_archive(files: &[ExportedFile]) -> Vec<u8> {
    let mut builder = tar::Builder::new(Vec::new());
    for f in files {
        let mut header = tar::Header::new_ustar();
        header.set_size(f.bytes.len() as u64);
        header.set_mode(0o644);
        header.set_mtime(0);
        header.set_uid(0);
        header.set_gid(0);
        header.set_entry_type(tar::EntryType::Regular);
        builder
            .append_data(&mut header, &f.file_name, f.bytes.as_slice())
            .expect("in-memory tar write");
    }
    builder.into_inner().expect("in-memory tar finish")
}
