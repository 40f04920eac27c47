use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use pixtile_core::config::PipelineConfig;
use pixtile_core::scenegen::{
    build_scene_graph, generate_terrain, group_by_frame, merge_graphs, parse_predicates,
    parse_predicates_json, place_objects, render_scene, AffordanceHints, RelationLexicon,
    SceneMatrix, TerrainMap, TileAssets, BLOCKED_ID, PLACEHOLDER_PREFIX, WALKABLE_ID,
};
use pixtile_core::semantics::SemanticIndex;
use pixtile_core::tile::Rgba;
use pixtile_core::{split_tileset, TileImage, Tileset};

use crate::io::{embedder, write_json, write_text};
use crate::EmbedArgs;

const WALKABLE_COLOR: Rgba = [124, 176, 76, 255];
const BLOCKED_COLOR: Rgba = [84, 78, 72, 255];

fn terrain_csv(map: &TerrainMap) -> String {
    map.ids()
        .iter()
        .map(|row| row.iter().map(u32::to_string).collect::<Vec<_>>().join(",") + "\n")
        .collect()
}

pub(crate) fn terrain(cfg: &PipelineConfig, out: Option<PathBuf>, rows: usize, cols: usize) -> Result<()> {
    cfg.validate()?;
    let map = generate_terrain(rows, cols, cfg.seed, &cfg.terrain)?;
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    write_json(&dir.join("terrain.json"), &map)?;
    write_text(&dir.join("terrain.csv"), &terrain_csv(&map))
}

pub(crate) struct SceneInputs {
    pub predicates: PathBuf,
    pub index: PathBuf,
    pub rows: usize,
    pub cols: usize,
    pub relations: Option<PathBuf>,
    pub hints: Option<PathBuf>,
    pub embed: EmbedArgs,
}

/// Diamond in a hash-derived color, for entities without a matched tile.
fn placeholder_sprite(name: &str, size: u32) -> TileImage {
    let h = name
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    let color = [(h >> 16) as u8 | 0x40, (h >> 8) as u8 | 0x40, h as u8 | 0x40, 255];
    let half = size as i64 / 2;
    TileImage::from_fn(size, size, |x, y| {
        let d = (x as i64 - half).abs() + (y as i64 - half).abs();
        if d < half { color } else { [0, 0, 0, 0] }
    })
}

struct SpriteResolver<'a> {
    root: &'a Path,
    tile_size: u32,
    sheets: HashMap<PathBuf, Option<Tileset>>,
}

impl SpriteResolver<'_> {
    /// `file.png` or `sheet.png#row,col`, relative to the index directory.
    fn resolve(&mut self, tile_ref: &str) -> Option<TileImage> {
        match tile_ref.rsplit_once('#') {
            Some((file, pos)) => {
                let (r, c) = pos.split_once(',')?;
                let (r, c): (usize, usize) = (r.trim().parse().ok()?, c.trim().parse().ok()?);
                let path = self.root.join(file);
                let ts = self.tile_size;
                let sheet = self.sheets.entry(path.clone()).or_insert_with(|| {
                    TileImage::load_png(&path).ok().and_then(|img| split_tileset(img, ts).ok())
                });
                let sheet = sheet.as_ref()?;
                (r < sheet.rows() && c < sheet.cols()).then(|| sheet.tile(r, c).clone())
            }
            None => TileImage::load_png(self.root.join(tile_ref)).ok(),
        }
    }
}

fn assets_for(matrix: &SceneMatrix, resolver: &mut SpriteResolver) -> TileAssets {
    let ts = resolver.tile_size;
    let mut assets = TileAssets {
        tile_size: ts,
        terrain: HashMap::from([
            (WALKABLE_ID, TileImage::filled(ts, ts, WALKABLE_COLOR)),
            (BLOCKED_ID, TileImage::filled(ts, ts, BLOCKED_COLOR)),
        ]),
        sprites: HashMap::new(),
    };
    for o in &matrix.objects {
        let sprite = match o.tile_id.strip_prefix(PLACEHOLDER_PREFIX) {
            Some(name) => Some(placeholder_sprite(name, ts)),
            None => resolver.resolve(&o.tile_id),
        };
        if let Some(s) = sprite {
            assets.sprites.insert(o.tile_id.clone(), s);
        }
    }
    assets
}

pub(crate) fn scene(cfg: &PipelineConfig, out: Option<PathBuf>, inp: SceneInputs) -> Result<()> {
    cfg.validate()?;
    let lexicon = match &inp.relations {
        Some(p) => RelationLexicon::with_file(p)?,
        None => RelationLexicon::default(),
    };
    let hints = match &inp.hints {
        Some(p) => AffordanceHints::load(p)?,
        None => AffordanceHints::default(),
    };
    let text = std::fs::read_to_string(&inp.predicates)
        .with_context(|| format!("reading {}", inp.predicates.display()))?;
    let predicates = if text.trim_start().starts_with('[') {
        parse_predicates_json(&text, &lexicon)?
    } else {
        parse_predicates(&text, &lexicon)?
    };
    let index = SemanticIndex::load(&inp.index)?;
    let provider = embedder(&inp.embed)?;
    let dir = out.unwrap_or_else(|| PathBuf::from("scene"));
    let mut resolver = SpriteResolver {
        root: &inp.index,
        tile_size: cfg.tile_size,
        sheets: HashMap::new(),
    };

    let mut graphs = Vec::new();
    for (frame, preds) in group_by_frame(&predicates) {
        let graph = build_scene_graph(frame, &preds, &index, provider.as_ref(), &lexicon, &hints)?;
        let terrain = generate_terrain(inp.rows, inp.cols, cfg.seed, &cfg.terrain)?;
        let matrix = place_objects(&graph, &terrain)?;
        for w in &matrix.warnings {
            eprintln!("frame {frame}: {w}");
        }
        let image = render_scene(&matrix, &assets_for(&matrix, &mut resolver))?;
        let fdir = dir.join(format!("frame_{frame}"));
        write_json(&fdir.join("scene.json"), &matrix)?;
        write_text(&fdir.join("terrain.csv"), &matrix.terrain_csv())?;
        image.save_png(fdir.join("scene.png"))?;
        graphs.push(graph);
    }
    write_json(&dir.join("graph.json"), &merge_graphs(graphs))
}
