//! Dubbing pipeline engine for lecture videos.
//!
//! Media is split into vocals and background, transcribed, translated in a
//! structure-preserving way, re-voiced per speaker, aligned to the original
//! timeline, optionally lip-synced, and remuxed. Every neural capability sits
//! behind an adapter trait in [`engines`]; deterministic mocks make the whole
//! pipeline reproducible without models.

pub mod alignment;
pub mod engines;
pub mod intervals;
pub mod model;
pub mod pipeline;
pub mod store;
pub mod subtitle;
pub mod translation;
