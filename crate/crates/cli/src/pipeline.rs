use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use pixtile_core::config::PipelineConfig;
use pixtile_core::connectivity::infer_connectivity;
use pixtile_core::segmentation::{classify_all, grow_segments, segmentation_report};
use pixtile_core::semantics::{
    load_records, FileEmbeddings, SemanticIndex, EMBEDDINGS_FILE, RECORDS_FILE,
};
use pixtile_core::similarity::{adjacency_pairs, SsimParams};
use pixtile_core::{split_tileset, TileImage};

use crate::io::{sha256_hex, to_json};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub created_at: u64,
    pub config_sha256: String,
    pub config: PipelineConfig,
    pub input: String,
    pub input_sha256: String,
    pub artifacts: Vec<ArtifactEntry>,
}

fn stage<T>(name: &str, r: impl FnOnce() -> Result<T>) -> Result<T> {
    r().with_context(|| format!("pipeline stage `{name}` failed"))
}

/// Runs split, segmentation, classification and connectivity (plus an index
/// build when records and embeddings are given), then writes every artifact
/// and a manifest into `out`. Nothing is written unless all stages succeed;
/// a failed write removes the files already written.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    image: &Path,
    out: &Path,
    index_inputs: Option<(PathBuf, PathBuf)>,
) -> Result<Manifest> {
    stage("config", || Ok(cfg.validate()?))?;
    let bytes = stage("load", || {
        std::fs::read(image).with_context(|| format!("reading {}", image.display()))
    })?;
    let img = stage("load", || Ok(TileImage::load_png(image)?))?;
    let tileset = stage("split", || Ok(split_tileset(img, cfg.tile_size)?))?;
    let adjacency = stage("adjacency", || {
        Ok(adjacency_pairs(&tileset, cfg.strip_width, &SsimParams::default(), cfg.ssim_threshold)?)
    })?;
    let mut segments = stage("segment", || Ok(grow_segments(&tileset, &cfg.segment_params())?))?;
    classify_all(&mut segments, &tileset, &HashMap::new());
    let report = segmentation_report(&segments);
    let connectivity = stage("connectivity", || {
        Ok(infer_connectivity(&tileset, Some(&segments), &cfg.connectivity_params())?)
    })?;

    let mut files: Vec<(String, String)> = vec![
        ("tileset.json".into(), to_json(&tileset.meta(image))?),
        ("adjacency.json".into(), to_json(&adjacency)?),
        ("segments.json".into(), to_json(&segments)?),
        ("report.json".into(), to_json(&report)?),
        ("connectivity.json".into(), to_json(&connectivity)?),
    ];
    if let Some((records, embeddings)) = index_inputs {
        let index = stage("index", || {
            let provider = FileEmbeddings::load(&embeddings)?;
            Ok(SemanticIndex::build(load_records(&records)?, &provider)?)
        })?;
        let (records_text, embeddings_text) = index.to_files()?;
        files.push((RECORDS_FILE.into(), records_text));
        files.push((EMBEDDINGS_FILE.into(), embeddings_text));
    }

    let config_json = cfg.to_json();
    let manifest = Manifest {
        tool: "pixtile".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        created_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        config_sha256: sha256_hex(config_json.as_bytes()),
        config: cfg.clone(),
        input: image.display().to_string(),
        input_sha256: sha256_hex(&bytes),
        artifacts: files
            .iter()
            .map(|(name, text)| ArtifactEntry {
                file: name.clone(),
                sha256: sha256_hex(text.as_bytes()),
                bytes: text.len(),
            })
            .collect(),
    };
    files.push((MANIFEST_FILE.into(), to_json(&manifest)?));

    stage("write", || {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let mut written = Vec::new();
        for (name, text) in &files {
            let path = out.join(name);
            if let Err(e) = std::fs::write(&path, text) {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            written.push(path);
        }
        Ok(())
    })?;
    Ok(manifest)
}
