//! Schema and cross-reference checks over artifact files.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pixtile_core::affordance::{AffordanceModel, ModelFile};
use pixtile_core::connectivity::ConnectivitySet;
use pixtile_core::segmentation::{segmentation_report, SegmentRecord, SegmentationReport};
use pixtile_core::semantics::{EmbeddingLine, SemanticRecord};
use pixtile_core::similarity::AdjacencyRecord;
use pixtile_core::tile::{TilesetMeta, DEFAULT_TILE_SIZE};
use pixtile_core::TileImage;

use crate::io::sha256_hex;
use crate::pipeline::Manifest;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item: Option<String>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checked: Vec<String>,
    pub violations: Vec<Violation>,
}

const KNOWN: &[&str] = &[
    "tileset.json",
    "adjacency.json",
    "segments.json",
    "report.json",
    "connectivity.json",
    "records.json",
    "embeddings.jsonl",
    "model.json",
    "manifest.json",
];

struct Ctx {
    dir: PathBuf,
    meta: Option<TilesetMeta>,
    report: ValidationReport,
}

impl Ctx {
    fn flag(&mut self, file: &str, item: Option<String>, message: impl Into<String>) {
        self.report.violations.push(Violation {
            file: file.to_string(),
            item,
            message: message.into(),
        });
    }

    fn parse<T: DeserializeOwned>(&mut self, file: &str) -> Option<T> {
        let path = self.dir.join(file);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                self.flag(file, None, format!("unreadable: {e}"));
                return None;
            }
        };
        match serde_json::from_str(&text) {
            Ok(v) => Some(v),
            Err(e) => {
                self.flag(file, None, format!("schema: {e}"));
                None
            }
        }
    }

    fn in_grid(&self, pos: (usize, usize)) -> bool {
        self.meta.as_ref().is_none_or(|m| pos.0 < m.rows && pos.1 < m.cols)
    }
}

/// Validates one artifact file, or every known artifact in a directory.
pub fn validate_path(path: &Path) -> anyhow::Result<ValidationReport> {
    let (dir, names): (PathBuf, Vec<String>) = if path.is_dir() {
        let names = KNOWN
            .iter()
            .filter(|n| path.join(n).is_file())
            .map(|n| n.to_string())
            .collect();
        (path.to_path_buf(), names)
    } else if path.is_file() {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let dir = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        (dir, vec![name])
    } else {
        anyhow::bail!("{}: no such file or directory", path.display());
    };
    let mut ctx = Ctx { dir, meta: None, report: ValidationReport::default() };
    if names.is_empty() {
        ctx.flag(&path.display().to_string(), None, "no known artifact files found");
    }
    if ctx.dir.join("tileset.json").is_file() {
        ctx.meta = ctx.parse("tileset.json");
    }
    for name in &names {
        ctx.report.checked.push(name.clone());
        match name.as_str() {
            "tileset.json" => check_tileset(&mut ctx),
            "segments.json" => check_segments(&mut ctx),
            "report.json" => check_report(&mut ctx),
            "connectivity.json" => check_connectivity(&mut ctx),
            "adjacency.json" => check_adjacency(&mut ctx),
            "records.json" => check_records(&mut ctx),
            "embeddings.jsonl" => check_embeddings(&mut ctx),
            "model.json" => check_model(&mut ctx),
            "manifest.json" => check_manifest(&mut ctx),
            other if other.ends_with(".jsonl") => check_embeddings_file(&mut ctx, other),
            other => ctx.flag(other, None, "unrecognized artifact name"),
        }
    }
    Ok(ctx.report)
}

fn check_tileset(ctx: &mut Ctx) {
    if let Some(m) = &ctx.meta {
        if m.tile_size == 0 {
            ctx.flag("tileset.json", None, "tile_size must be positive");
        }
    }
}

fn check_segments(ctx: &mut Ctx) {
    let Some(segs) = ctx.parse::<Vec<SegmentRecord>>("segments.json") else { return };
    let mut owner = HashSet::new();
    for (i, s) in segs.iter().enumerate() {
        let item = Some(format!("segment {i} (parent {:?})", s.parent));
        if s.members.is_empty() {
            ctx.flag("segments.json", item, "segment has no members");
            continue;
        }
        if !s.members.windows(2).all(|w| w[0] < w[1]) {
            ctx.flag("segments.json", item.clone(), "members are not sorted and unique");
        }
        if s.members[0] != s.parent {
            ctx.flag("segments.json", item.clone(), "parent is not the first member");
        }
        for &m in &s.members {
            if !ctx.in_grid(m) {
                ctx.flag("segments.json", item.clone(), format!("member {m:?} outside the grid"));
            }
            if !owner.insert(m) {
                ctx.flag("segments.json", item.clone(), format!("tile {m:?} is in two segments"));
            }
        }
        let b = s.bbox;
        let rows = s.members.iter().map(|m| m.0);
        let cols = s.members.iter().map(|m| m.1);
        let expect = (rows.clone().min(), cols.clone().min(), rows.max(), cols.max());
        if expect != (Some(b.min_row), Some(b.min_col), Some(b.max_row), Some(b.max_col)) {
            ctx.flag("segments.json", item, "bounding box does not match members");
        }
    }
}

fn check_report(ctx: &mut Ctx) {
    let Some(report) = ctx.parse::<SegmentationReport>("report.json") else { return };
    if !ctx.dir.join("segments.json").is_file() {
        return;
    }
    let Some(segs) = ctx.parse::<Vec<SegmentRecord>>("segments.json") else { return };
    let expect = segmentation_report(&segs);
    if expect.total_segments != report.total_segments
        || expect.counts != report.counts
        || expect.unclassified != report.unclassified
    {
        ctx.flag("report.json", None, "counts disagree with segments.json");
    }
}

fn check_connectivity(ctx: &mut Ctx) {
    let Some(sets) = ctx.parse::<Vec<ConnectivitySet>>("connectivity.json") else { return };
    let mut seen = HashSet::new();
    for s in &sets {
        let item = Some(format!("tile {:?}", s.tile));
        if !ctx.in_grid(s.tile) {
            ctx.flag("connectivity.json", item.clone(), "tile outside the grid");
        }
        if !seen.insert(s.tile) {
            ctx.flag("connectivity.json", item.clone(), "duplicate tile entry");
        }
        if !s.no_neighbor.is_subset(&s.connected) {
            ctx.flag("connectivity.json", item, "no_neighbor lists a direction that is not connected");
        }
    }
}

fn check_adjacency(ctx: &mut Ctx) {
    let Some(pairs) = ctx.parse::<Vec<AdjacencyRecord>>("adjacency.json") else { return };
    for p in &pairs {
        let item = Some(format!("pair {:?}-{:?}", p.a, p.b));
        if !ctx.in_grid(p.a) || !ctx.in_grid(p.b) {
            ctx.flag("adjacency.json", item.clone(), "tile outside the grid");
        }
        if !(p.score.abs() <= 1.0 + 1e-9) {
            ctx.flag("adjacency.json", item, format!("score {} outside [-1, 1]", p.score));
        }
    }
}

/// Candidate locations for a referenced file: next to the records, or next
/// to the tileset source named in tileset.json.
fn locate(ctx: &Ctx, file: &str) -> Option<PathBuf> {
    let mut candidates = vec![ctx.dir.join(file)];
    if let Some(m) = &ctx.meta {
        if m.source_path.file_name().is_some_and(|n| n.to_string_lossy() == file) {
            candidates.push(m.source_path.clone());
        }
        if let Some(parent) = m.source_path.parent() {
            candidates.push(parent.join(file));
        }
    }
    candidates.into_iter().find(|p| p.is_file())
}

fn check_records(ctx: &mut Ctx) {
    let Some(records) = ctx.parse::<Vec<SemanticRecord>>("records.json") else { return };
    let tile_size = ctx.meta.as_ref().map_or(DEFAULT_TILE_SIZE, |m| m.tile_size);
    let mut refs = HashSet::new();
    for r in &records {
        let item = Some(r.tile_ref.clone());
        if let Err(e) = r.validate() {
            ctx.flag("records.json", item.clone(), e.to_string());
        }
        if !refs.insert(&r.tile_ref) {
            ctx.flag("records.json", item.clone(), "duplicate tile_ref");
        }
        let (file, pos) = match r.tile_ref.rsplit_once('#') {
            Some((f, p)) => (f, Some(p)),
            None => (r.tile_ref.as_str(), None),
        };
        let Some(path) = locate(ctx, file) else {
            ctx.flag("records.json", item, format!("referenced file `{file}` not found"));
            continue;
        };
        if let Some(pos) = pos {
            let parsed = pos
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)));
            let Some((row, col)) = parsed else {
                ctx.flag("records.json", item, format!("bad tile position `{pos}`"));
                continue;
            };
            match TileImage::load_png(&path) {
                Ok(img) if tile_size > 0 => {
                    let (rows, cols) = ((img.height() / tile_size) as usize, (img.width() / tile_size) as usize);
                    if row >= rows || col >= cols {
                        ctx.flag("records.json", item, format!("tile ({row},{col}) outside the {rows}x{cols} grid"));
                    }
                }
                Ok(_) => {}
                Err(e) => ctx.flag("records.json", item, e.to_string()),
            }
        }
    }
}

fn check_embeddings(ctx: &mut Ctx) {
    check_embeddings_file(ctx, "embeddings.jsonl");
}

fn check_embeddings_file(ctx: &mut Ctx, file: &str) {
    let path = ctx.dir.join(file);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return ctx.flag(file, None, format!("unreadable: {e}")),
    };
    let mut dim = None;
    let mut keys = BTreeSet::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let item = Some(format!("line {}", i + 1));
        let parsed: EmbeddingLine = match serde_json::from_str(line) {
            Ok(p) => p,
            Err(e) => {
                ctx.flag(file, item, format!("schema: {e}"));
                continue;
            }
        };
        let d = *dim.get_or_insert(parsed.vector.len());
        if parsed.vector.len() != d {
            ctx.flag(file, item.clone(), format!("dimension {} differs from {d}", parsed.vector.len()));
        }
        if !parsed.vector.iter().all(|v| v.is_finite()) {
            ctx.flag(file, item.clone(), "non-finite value");
        }
        if !keys.insert(parsed.key.clone()) {
            ctx.flag(file, item, format!("duplicate key `{}`", parsed.key));
        }
    }
}

fn check_model(ctx: &mut Ctx) {
    let Some(model) = ctx.parse::<ModelFile>("model.json") else { return };
    if let Err(e) = AffordanceModel::try_from(model) {
        ctx.flag("model.json", None, e.to_string());
    }
}

fn check_manifest(ctx: &mut Ctx) {
    let Some(m) = ctx.parse::<Manifest>("manifest.json") else { return };
    for a in &m.artifacts {
        match std::fs::read(ctx.dir.join(&a.file)) {
            Ok(bytes) if sha256_hex(&bytes) == a.sha256 => {}
            Ok(_) => ctx.flag("manifest.json", Some(a.file.clone()), "checksum mismatch"),
            Err(_) => ctx.flag("manifest.json", Some(a.file.clone()), "listed artifact is missing"),
        }
    }
}
