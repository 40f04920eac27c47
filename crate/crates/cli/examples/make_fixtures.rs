//! Regenerates the files under `fixtures/`. Run from the crate directory:
//! `cargo run -p pixtile-cli --example make_fixtures`.

use std::collections::BTreeSet;
use std::path::Path;

use pixtile_core::semantics::{
    Affordance, EmbeddingLine, HashingEmbedder, Provenance, SemanticIndex, SemanticRecord,
};
use pixtile_core::TileImage;

const TS: u32 = 32;

fn disc(cx: f64, cy: f64, r: f64, x: u32, y: u32) -> Option<f64> {
    let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt();
    (d <= r).then_some(d / r)
}

fn tileset() -> TileImage {
    TileImage::from_fn(4 * TS, 4 * TS, |x, y| {
        // Tree spanning tiles (0,0)-(1,1).
        if x < 64 && y < 64 {
            if (28..36).contains(&x) && (50..60).contains(&y) {
                return [110, 72, 40, 255];
            }
            if let Some(t) = disc(32.0, 28.0, 24.0, x, y) {
                let g = (190.0 - 70.0 * t) as u8;
                return [40, g, 50, 255];
            }
            return [0, 0, 0, 0];
        }
        let (r, c) = (y / TS, x / TS);
        let (lx, ly) = (x % TS, y % TS);
        match (r, c) {
            (0, 3) => match disc(16.0, 16.0, 11.0, lx, ly) {
                Some(_) if ly % 8 < 2 => [70, 50, 30, 255],
                Some(_) => [150, 100, 55, 255],
                None => [0, 0, 0, 0],
            },
            (1, 3) => match disc(16.0, 20.0, 8.0, lx, ly) {
                Some(t) => {
                    let v = (160.0 - 50.0 * t) as u8;
                    [v, v, v, 255]
                }
                None => [0, 0, 0, 0],
            },
            // Grass stripes vary with y only, so horizontal seams match.
            (2, 0..=2) => {
                let g = 150.0 + 25.0 * (ly as f64 * 0.5).sin();
                [60, g as u8, 45, 255]
            }
            (3, 1) => {
                if disc(16.0, 12.0, 4.0, lx, ly).is_some() {
                    [240, 220, 60, 255]
                } else if disc(16.0, 12.0, 9.0, lx, ly).is_some() {
                    [220, 80, 140, 255]
                } else if lx == 16 && (20..30).contains(&ly) {
                    [50, 140, 50, 255]
                } else {
                    [0, 0, 0, 0]
                }
            }
            // House cropped by the image edge.
            (3, 3) => {
                if lx >= 6 && ly >= 14 {
                    [190, 170, 130, 255]
                } else if lx >= 6 && ly + lx >= 22 {
                    [160, 40, 40, 255]
                } else {
                    [0, 0, 0, 0]
                }
            }
            _ => [0, 0, 0, 0],
        }
    })
}

fn record(tile_ref: &str, group: &str, sup: &str, aff: &[Affordance]) -> SemanticRecord {
    SemanticRecord {
        tile_ref: tile_ref.into(),
        detailed_name: group.into(),
        group_label: group.into(),
        supercategory: sup.into(),
        affordances: aff.iter().copied().collect::<BTreeSet<_>>(),
        provenance: Provenance::Author,
    }
}

fn write(path: &Path, text: String) {
    std::fs::write(path, text).unwrap();
}

fn main() {
    use Affordance::*;
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(root.join("scene")).unwrap();

    tileset().save_png(root.join("tileset.png")).unwrap();
    let records = vec![
        record("tileset.png#0,0", "tree", "plant", &[EnvironmentalObject]),
        record("tileset.png#0,3", "barrel", "container", &[InteractiveObject]),
        record("tileset.png#1,3", "rock", "mineral", &[EnvironmentalObject]),
        record("tileset.png#2,0", "grass", "ground", &[Terrain]),
        record("tileset.png#3,1", "flower", "plant", &[EnvironmentalObject, ItemsAndCollectibles]),
        record("tileset.png#3,3", "house", "building", &[EnvironmentalObject]),
    ];
    write(&root.join("records.json"), serde_json::to_string_pretty(&records).unwrap() + "\n");
    let mut lines = String::new();
    for (i, r) in records.iter().enumerate() {
        let mut v = vec![0.1; 8];
        v[i] = 1.0;
        v[7] = 0.05 * i as f64;
        let line = EmbeddingLine { key: r.tile_ref.clone(), vector: v };
        lines.push_str(&(serde_json::to_string(&line).unwrap() + "\n"));
    }
    write(&root.join("embeddings.jsonl"), lines);

    let captions = [
        ("tileset.png#0,0", "a leafy green tree"),
        ("tileset.png#0,3", "a wooden cask with iron bands"),
        ("tileset.png#1,3", "a grey stone"),
        ("tileset.png#2,0", "striped grass ground"),
        ("tileset.png#3,1", "a pink flower"),
        ("tileset.png#3,3", "a small cottage"),
    ];
    let mut text = String::new();
    for (r, c) in captions {
        text.push_str(&format!("{}\n", serde_json::json!({"tile_ref": r, "caption": c})));
    }
    write(&root.join("captions.jsonl"), text);
    write(
        &root.join("synonyms.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "barrel": ["cask", "keg"],
            "house": ["cottage", "hut"],
            "rock": ["stone", "boulder"],
        }))
        .unwrap()
            + "\n",
    );

    // Separable toy dataset: the first coordinate decides Terrain vs
    // Characters, the second adds Interactive Object.
    let mut text = String::new();
    for i in 0..40 {
        let a = (i as f64 * 0.7).sin();
        let b = (i as f64 * 1.3).cos();
        let x = [a, b, (i as f64 * 0.3).sin() * 0.2, 0.5];
        let mut labels = vec![if a > 0.0 { "Terrain" } else { "Characters" }];
        if b > 0.0 {
            labels.push("Interactive Object");
        }
        text.push_str(&format!(
            "{}\n",
            serde_json::json!({"key": format!("t{i}"), "vector": x, "labels": labels})
        ));
    }
    write(&root.join("affordance.jsonl"), text);

    // Scene assets: one sprite per entity of the narrative fixtures.
    let entities: [(&str, Affordance); 19] = [
        ("house", EnvironmentalObject),
        ("tree", EnvironmentalObject),
        ("barrel", InteractiveObject),
        ("flower", EnvironmentalObject),
        ("tree stump", EnvironmentalObject),
        ("hollow oak", EnvironmentalObject),
        ("ancient map", ItemsAndCollectibles),
        ("elara", Characters),
        ("sunlight", EnvironmentalObject),
        ("forest canopy", EnvironmentalObject),
        ("rocky path", Terrain),
        ("wild creature", Characters),
        ("dense bush", EnvironmentalObject),
        ("treacherous path", Terrain),
        ("crystal cavern", Terrain),
        ("crystal cavern entrance", Terrain),
        ("shimmering light", EnvironmentalObject),
        ("guardian dragon", Characters),
        ("crystal throne", InteractiveObject),
    ];
    let sheet = TileImage::from_fn(5 * TS, 4 * TS, |x, y| {
        let i = (y / TS * 5 + x / TS) as usize;
        if i >= entities.len() {
            return [0, 0, 0, 0];
        }
        let hue = i as f64 / entities.len() as f64 * std::f64::consts::TAU;
        let color = [
            (128.0 + 110.0 * hue.cos()) as u8,
            (128.0 + 110.0 * (hue + 2.1).cos()) as u8,
            (128.0 + 110.0 * (hue + 4.2).cos()) as u8,
            255,
        ];
        match disc(16.0, 16.0, 11.0, x % TS, y % TS) {
            Some(t) if t > 0.8 => [20, 20, 20, 255],
            Some(_) => color,
            None => [0, 0, 0, 0],
        }
    });
    sheet.save_png(root.join("scene/sprites.png")).unwrap();
    let scene_records: Vec<SemanticRecord> = entities
        .iter()
        .enumerate()
        .map(|(i, (name, aff))| {
            record(&format!("sprites.png#{},{}", i / 5, i % 5), name, "entity", &[*aff])
        })
        .collect();
    SemanticIndex::build(scene_records, &HashingEmbedder::new(64))
        .unwrap()
        .save(root.join("scene"))
        .unwrap();
    write(
        &root.join("scene/teaser.txt"),
        "# frame 0\nHouse below Tree\nTree to the right of barrel\nFlower above Tree\nTree stump to the left of Tree\n".into(),
    );
    write(
        &root.join("scene/time_frames.txt"),
        "# frame 1\nHollow oak contains ancient map\nElara stands near hollow oak\nSunlight filters through forest canopy\n\n\
         # frame 2\nElara walks along rocky path\nWild creatures hide behind dense bushes\nTreacherous paths lead to Crystal Cavern\n\n\
         # frame 3\nCrystal Cavern entrance glows with shimmering light\nGuardian dragon sits atop crystal throne\nElara stands before Guardian dragon\n"
            .into(),
    );
}
