use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::levels::{AcousticParams, LevelMapping};
use super::render::{quantize, render_loop, RenderConfig};
use super::sample::BaseSample;
use super::wav::encode_wav;
use crate::error::{Error, Result};
use crate::fsio::{write_atomic, write_json_atomic};
use crate::grid::{ActionId, ParameterGrid};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundEntry {
    pub action: ActionId,
    pub levels: Vec<usize>,
    pub params: AcousticParams,
    pub file: String,
    /// Hex SHA-256 of the WAV bytes.
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LibraryManifest {
    pub id: String,
    pub grid: ParameterGrid,
    pub levels: LevelMapping,
    pub render: RenderConfig,
    /// One entry per action, in flat-index order.
    pub sounds: Vec<SoundEntry>,
}

impl LibraryManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let manifest: LibraryManifest = serde_json::from_str(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.levels.matches(&self.grid) {
            return Err(Error::InvalidConfig(format!("library `{}`: grid does not match level mapping", self.id)));
        }
        if self.sounds.len() != self.grid.action_count()
            || self.sounds.iter().enumerate().any(|(i, s)| s.action.index() != i)
        {
            return Err(Error::InvalidConfig(format!(
                "library `{}`: manifest must list every action once in order",
                self.id
            )));
        }
        Ok(())
    }

    pub fn entry(&self, action: ActionId) -> &SoundEntry {
        &self.sounds[action.index()]
    }

    pub fn by_hash(&self, sha256: &str) -> Option<&SoundEntry> {
        self.sounds.iter().find(|s| s.sha256 == sha256)
    }

    pub fn by_file(&self, file: &str) -> Option<&SoundEntry> {
        self.sounds.iter().find(|s| s.file == file)
    }
}

/// Canonical `bpm{i}_bpl{j}_pitch{k}.wav` name for level indices.
pub fn sound_file_name(levels: &[usize]) -> String {
    format!("bpm{}_bpl{}_pitch{}.wav", levels[0], levels[1], levels[2])
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Renders one WAV for an action.
pub fn render_wav(base: &BaseSample, params: &AcousticParams, config: &RenderConfig) -> Result<Vec<u8>> {
    let samples = render_loop(base, params, config)?;
    encode_wav(&quantize(&samples), config.sample_rate)
}

/// Renders every action of the `[bpm, bpl, pitch]` grid into `out_dir` and
/// writes the manifest once all files are in place.
pub fn generate_library(
    id: &str,
    base: &BaseSample,
    levels: &LevelMapping,
    config: &RenderConfig,
    out_dir: &Path,
) -> Result<LibraryManifest> {
    config.validate()?;
    let grid = levels.grid()?;
    let shortest_beat = 60.0 / levels.max_bpm();
    if base.duration_secs() > shortest_beat {
        return Err(Error::BaseTooLong {
            bpm: levels.max_bpm(),
            bpl: levels.bpl[0],
            base_len: base.pcm.len(),
            beat_len: super::render::beat_offset(1, levels.max_bpm(), config.sample_rate),
        });
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;

    let rendered: Vec<(SoundEntry, Vec<u8>)> = grid
        .actions()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|action| {
            let lv = grid.levels(action);
            let file = sound_file_name(&lv);
            let params = levels.params(&grid, action);
            let wrap = |e: Error| Error::Render {
                action: action.index(),
                file: file.clone(),
                source: Box::new(e),
            };
            let bytes = render_wav(base, &params, config).map_err(wrap)?;
            write_atomic(&out_dir.join(&file), &bytes).map_err(wrap)?;
            Ok((
                SoundEntry {
                    action,
                    levels: lv,
                    params,
                    sha256: sha256_hex(&bytes),
                    file,
                },
                bytes,
            ))
        })
        .collect::<Result<_>>()?;

    let manifest = LibraryManifest {
        id: id.to_string(),
        grid,
        levels: levels.clone(),
        render: *config,
        sounds: rendered.into_iter().map(|(e, _)| e).collect(),
    };
    write_json_atomic(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
