use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use pixtile_core::config::PipelineConfig;
use pixtile_core::connectivity::{evaluate_connectivity, infer_connectivity, ConnectivitySet};
use pixtile_core::segmentation::{
    classify_all, grow_segments, segmentation_report, GridPos, SegmentClass, SegmentRecord,
};
use pixtile_core::similarity::{adjacency_pairs, SsimParams};
use pixtile_core::tile::{pad_tile, upscale_bicubic};
use pixtile_core::{split_tileset, TileImage, Tileset};

use crate::io::{emit_json, parse_rgba, read_json, write_json};
use crate::GridArgs;

pub(crate) fn apply_grid(mut cfg: PipelineConfig, grid: &GridArgs) -> Result<PipelineConfig> {
    if let Some(t) = grid.tile_size {
        cfg.tile_size = t;
    }
    if let Some(t) = grid.threshold {
        cfg.ssim_threshold = t;
    }
    if let Some(w) = grid.strip_width {
        cfg.strip_width = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn load_tileset(path: &Path, tile_size: u32) -> Result<Tileset> {
    let image = TileImage::load_png(path)?;
    Ok(split_tileset(image, tile_size)?)
}

fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from("."))
}

pub(crate) fn split(
    cfg: &PipelineConfig,
    out: Option<PathBuf>,
    image: PathBuf,
    tile_size: Option<u32>,
    pad: Option<u32>,
    pad_color: &str,
    upscale: Option<u32>,
) -> Result<()> {
    let tile_size = tile_size.unwrap_or(cfg.tile_size);
    let color = parse_rgba(pad_color)?;
    let tileset = load_tileset(&image, tile_size)?;
    let dir = out_dir(out);
    std::fs::create_dir_all(dir.join("tiles")).context("creating tiles directory")?;
    for ((r, c), tile) in tileset.iter() {
        let mut t = tile.clone();
        if let Some(f) = upscale {
            t = upscale_bicubic(&t, f)?;
        }
        if let Some(p) = pad {
            t = pad_tile(&t, p, color);
        }
        t.save_png(dir.join("tiles").join(format!("r{r}_c{c}.png")))?;
    }
    let meta = tileset.meta(&image);
    if meta.dropped_pixels > 0 {
        eprintln!("warning: {} margin pixels dropped", meta.dropped_pixels);
    }
    write_json(&dir.join("tileset.json"), &meta)
}

pub(crate) fn adjacency(cfg: PipelineConfig, out: Option<PathBuf>, grid: GridArgs) -> Result<()> {
    let cfg = apply_grid(cfg, &grid)?;
    let tileset = load_tileset(&grid.image, cfg.tile_size)?;
    let pairs = adjacency_pairs(&tileset, cfg.strip_width, &SsimParams::default(), cfg.ssim_threshold)?;
    emit_json(out.as_deref(), &pairs)
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct Override {
    pub parent: GridPos,
    pub class: SegmentClass,
}

pub(crate) fn segments_for(
    cfg: &PipelineConfig,
    tileset: &Tileset,
    overrides: &HashMap<GridPos, SegmentClass>,
) -> Result<Vec<SegmentRecord>> {
    let mut segs = grow_segments(tileset, &cfg.segment_params())?;
    classify_all(&mut segs, tileset, overrides);
    Ok(segs)
}

pub(crate) fn segment(
    cfg: PipelineConfig,
    out: Option<PathBuf>,
    grid: GridArgs,
    overrides: Option<PathBuf>,
) -> Result<()> {
    let cfg = apply_grid(cfg, &grid)?;
    let tileset = load_tileset(&grid.image, cfg.tile_size)?;
    let overrides: HashMap<GridPos, SegmentClass> = match overrides {
        Some(p) => read_json::<Vec<Override>>(&p)?
            .into_iter()
            .map(|o| (o.parent, o.class))
            .collect(),
        None => HashMap::new(),
    };
    let segs = segments_for(&cfg, &tileset, &overrides)?;
    let dir = out_dir(out);
    write_json(&dir.join("segments.json"), &segs)?;
    write_json(&dir.join("report.json"), &segmentation_report(&segs))
}

pub(crate) fn connectivity(
    cfg: PipelineConfig,
    out: Option<PathBuf>,
    grid: GridArgs,
    segments: Option<PathBuf>,
) -> Result<()> {
    let cfg = apply_grid(cfg, &grid)?;
    let tileset = load_tileset(&grid.image, cfg.tile_size)?;
    let segs: Option<Vec<SegmentRecord>> = segments.map(|p| read_json(&p)).transpose()?;
    let sets = infer_connectivity(&tileset, segs.as_deref(), &cfg.connectivity_params())?;
    emit_json(out.as_deref(), &sets)
}

pub(crate) fn eval_connectivity(out: Option<PathBuf>, pred: PathBuf, truth: PathBuf) -> Result<()> {
    let p: Vec<ConnectivitySet> = read_json(&pred)?;
    let t: Vec<ConnectivitySet> = read_json(&truth)?;
    emit_json(out.as_deref(), &evaluate_connectivity(&p, &t)?)
}
