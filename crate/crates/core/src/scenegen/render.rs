use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::tile::{Rgba, TileImage};

use super::placement::SceneMatrix;

/// Images for terrain ids and object tile ids.
#[derive(Clone, Debug, Default)]
pub struct TileAssets {
    pub tile_size: u32,
    pub terrain: HashMap<u32, TileImage>,
    pub sprites: HashMap<String, TileImage>,
}

/// Straight-alpha "over" of `src` onto `dst`, rounded to the nearest integer.
pub fn alpha_over(src: Rgba, dst: Rgba) -> Rgba {
    let sa = src[3] as f64 / 255.0;
    let da = dst[3] as f64 / 255.0;
    let oa = sa + da * (1.0 - sa);
    if oa == 0.0 {
        return [0, 0, 0, 0];
    }
    let mut out = [0u8; 4];
    for i in 0..3 {
        let v = (src[i] as f64 * sa + dst[i] as f64 * da * (1.0 - sa)) / oa;
        out[i] = v.round().clamp(0.0, 255.0) as u8;
    }
    out[3] = (oa * 255.0).round() as u8;
    out
}

/// Nearest-neighbour integer upscale.
pub fn upscale_nearest(img: &TileImage, factor: u32) -> TileImage {
    if factor <= 1 {
        return img.clone();
    }
    TileImage::from_fn(img.width() * factor, img.height() * factor, |x, y| {
        img.get(x / factor, y / factor)
    })
}

/// Draws the terrain layer, then each object sprite centred on its anchor
/// cell. Sprites smaller than a cell are enlarged by the largest integer
/// factor that still fits; larger sprites are drawn as-is and clipped at the
/// canvas edge.
pub fn render_scene(matrix: &SceneMatrix, assets: &TileAssets) -> Result<TileImage> {
    let ts = assets.tile_size;
    if ts == 0 {
        return Err(Error::Argument("tile size must be positive".into()));
    }
    let mut missing = BTreeSet::new();
    for row in &matrix.terrain {
        for id in row {
            if !assets.terrain.contains_key(id) {
                missing.insert(id.to_string());
            }
        }
    }
    for o in &matrix.objects {
        if !assets.sprites.contains_key(&o.tile_id) {
            missing.insert(o.tile_id.clone());
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingAssets(missing.into_iter().collect()));
    }

    let mut canvas = TileImage::transparent(matrix.cols as u32 * ts, matrix.rows as u32 * ts);
    for (r, row) in matrix.terrain.iter().enumerate() {
        for (c, id) in row.iter().enumerate() {
            canvas.paste(&assets.terrain[id], c as u32 * ts, r as u32 * ts);
        }
    }
    for o in &matrix.objects {
        let sprite = &assets.sprites[&o.tile_id];
        let cell_w = ts * o.footprint.1 as u32;
        let cell_h = ts * o.footprint.0 as u32;
        let factor = (cell_w / sprite.width().max(1)).min(cell_h / sprite.height().max(1)).max(1);
        let sprite = upscale_nearest(sprite, factor);
        let cx = o.anchor.1 as i64 * ts as i64 + cell_w as i64 / 2;
        let cy = o.anchor.0 as i64 * ts as i64 + cell_h as i64 / 2;
        let x0 = cx - sprite.width() as i64 / 2;
        let y0 = cy - sprite.height() as i64 / 2;
        for sy in 0..sprite.height() {
            for sx in 0..sprite.width() {
                let (x, y) = (x0 + sx as i64, y0 + sy as i64);
                if x < 0 || y < 0 || x >= canvas.width() as i64 || y >= canvas.height() as i64 {
                    continue;
                }
                let (x, y) = (x as u32, y as u32);
                let blended = alpha_over(sprite.get(sx, sy), canvas.get(x, y));
                canvas.set(x, y, blended);
            }
        }
    }
    Ok(canvas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegen::placement::PlacedObject;

    fn matrix(terrain: Vec<Vec<u32>>, objects: Vec<PlacedObject>) -> SceneMatrix {
        SceneMatrix {
            frame: 0,
            rows: terrain.len(),
            cols: terrain[0].len(),
            terrain,
            objects,
            relations: vec![],
            dropped: vec![],
            warnings: vec![],
        }
    }

    fn assets(ts: u32) -> TileAssets {
        TileAssets {
            tile_size: ts,
            terrain: HashMap::from([
                (0, TileImage::filled(ts, ts, [0, 200, 0, 255])),
                (1, TileImage::filled(ts, ts, [90, 90, 90, 255])),
            ]),
            sprites: HashMap::new(),
        }
    }

    #[test]
    fn empty_layer_is_tiled_terrain() {
        let m = matrix(vec![vec![0, 1], vec![1, 0]], vec![]);
        let img = render_scene(&m, &assets(4)).unwrap();
        assert_eq!((img.width(), img.height()), (8, 8));
        for y in 0..8 {
            for x in 0..8 {
                let id = m.terrain[(y / 4) as usize][(x / 4) as usize];
                let want = if id == 0 { [0, 200, 0, 255] } else { [90, 90, 90, 255] };
                assert_eq!(img.get(x, y), want);
            }
        }
    }

    #[test]
    fn full_size_sprite_lands_on_cell() {
        let mut a = assets(32);
        let sprite = TileImage::from_fn(32, 32, |x, y| [x as u8, y as u8, 7, 255]);
        a.sprites.insert("s".into(), sprite.clone());
        let obj = PlacedObject { entity: "e".into(), tile_id: "s".into(), anchor: (1, 0), footprint: (1, 1) };
        let img = render_scene(&matrix(vec![vec![0, 0], vec![0, 0]], vec![obj]), &a).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                assert_eq!(img.get(x, y + 32), sprite.get(x, y));
            }
        }
        assert_eq!(img.get(40, 40), [0, 200, 0, 255]);
    }

    #[test]
    fn transparent_margin_shows_terrain() {
        // 2x2 terrain tile with a pattern; 2x2 sprite: one opaque red pixel,
        // one half-transparent blue, two clear.
        let pattern = TileImage::new(
            2,
            2,
            vec![[10, 20, 30, 255], [40, 50, 60, 255], [70, 80, 90, 255], [100, 110, 120, 255]],
        )
        .unwrap();
        let sprite = TileImage::new(
            2,
            2,
            vec![[255, 0, 0, 255], [0, 0, 0, 0], [0, 0, 255, 128], [0, 0, 0, 0]],
        )
        .unwrap();
        let a = TileAssets {
            tile_size: 2,
            terrain: HashMap::from([(0, pattern)]),
            sprites: HashMap::from([("s".to_string(), sprite)]),
        };
        let obj = PlacedObject { entity: "e".into(), tile_id: "s".into(), anchor: (0, 0), footprint: (1, 1) };
        let img = render_scene(&matrix(vec![vec![0]], vec![obj]), &a).unwrap();
        assert_eq!(img.get(0, 0), [255, 0, 0, 255]);
        assert_eq!(img.get(1, 0), [40, 50, 60, 255]);
        assert_eq!(img.get(1, 1), [100, 110, 120, 255]);
        // sa = 128/255: r = 70*(127/255) = 34.86 -> 35, g = 80*(127/255) =
        // 39.84 -> 40, b = 255*(128/255) + 90*(127/255) = 128 + 44.82 -> 173.
        assert_eq!(img.get(0, 1), [35, 40, 173, 255]);
    }

    #[test]
    fn small_sprites_scale_by_integer_factor() {
        let mut a = assets(8);
        a.sprites.insert("s".into(), TileImage::filled(3, 3, [1, 2, 3, 255]));
        let obj = PlacedObject { entity: "e".into(), tile_id: "s".into(), anchor: (0, 0), footprint: (1, 1) };
        let img = render_scene(&matrix(vec![vec![0]], vec![obj]), &a).unwrap();
        // factor 2 -> 6x6 centred at (4,4): covers 1..7.
        assert_eq!(img.get(0, 0), [0, 200, 0, 255]);
        assert_eq!(img.get(1, 1), [1, 2, 3, 255]);
        assert_eq!(img.get(6, 6), [1, 2, 3, 255]);
        assert_eq!(img.get(7, 7), [0, 200, 0, 255]);
    }

    #[test]
    fn missing_assets_are_listed() {
        let obj = PlacedObject { entity: "e".into(), tile_id: "nope".into(), anchor: (0, 0), footprint: (1, 1) };
        match render_scene(&matrix(vec![vec![0, 5]], vec![obj]), &assets(4)) {
            Err(Error::MissingAssets(ids)) => assert_eq!(ids, vec!["5".to_string(), "nope".to_string()]),
            other => panic!("{other:?}"),
        }
    }
}
