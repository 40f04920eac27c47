//! RGBA tile images, tileset splitting and per-pixel utilities.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rgba = [u8; 4];

pub const TRANSPARENT: Rgba = [0, 0, 0, 0];

/// Tiles whose opaque fraction falls below this are "primarily transparent".
pub const DEFAULT_TRANSPARENCY_THRESHOLD: f64 = 0.10;

pub const DEFAULT_TILE_SIZE: u32 = 32;

/// A row-major RGBA image with 8 bits per channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileImage {
    width: u32,
    height: u32,
    pixels: Vec<Rgba>,
}

impl TileImage {
    pub fn new(width: u32, height: u32, pixels: Vec<Rgba>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::Dimension(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Image filled with a single color.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: u32, height: u32, color: Rgba) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        Self {
            width,
            height,
            pixels: vec![color; width as usize * height as usize],
        }
    }

    pub fn transparent(width: u32, height: u32) -> Self {
        Self::filled(width, height, TRANSPARENT)
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgba) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be non-zero");
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[Rgba] {
        &self.pixels
    }

    #[inline]
    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgba {
        self.pixels[self.index(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, color: Rgba) {
        let i = self.index(x, y);
        self.pixels[i] = color;
    }

    /// Copies the `width`x`height` region starting at (`x`, `y`).
    pub fn crop(&self, x: u32, y: u32, width: u32, height: u32) -> Result<TileImage> {
        if width == 0 || height == 0 || x + width > self.width || y + height > self.height {
            return Err(Error::Dimension(format!(
                "crop {width}x{height}+{x}+{y} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for row in y..y + height {
            let start = self.index(x, row);
            pixels.extend_from_slice(&self.pixels[start..start + width as usize]);
        }
        Ok(TileImage {
            width,
            height,
            pixels,
        })
    }

    /// Overwrites pixels starting at (`x`, `y`) with `src`, clipping at the edges.
    pub fn paste(&mut self, src: &TileImage, x: u32, y: u32) {
        for sy in 0..src.height {
            let ty = y + sy;
            if ty >= self.height {
                break;
            }
            for sx in 0..src.width {
                let tx = x + sx;
                if tx >= self.width {
                    break;
                }
                self.set(tx, ty, src.get(sx, sy));
            }
        }
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<TileImage> {
        let path = path.as_ref();
        let img = image::open(path)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?
            .to_rgba8();
        let (w, h) = img.dimensions();
        let pixels = img.pixels().map(|p| p.0).collect();
        TileImage::new(w, h, pixels)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let buf = image::RgbaImage::from_raw(self.width, self.height, raw)
            .expect("pixel buffer length matches dimensions");
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })
    }
}

/// A source image partitioned into square tiles on a fixed grid.
#[derive(Clone, Debug)]
pub struct Tileset {
    source: TileImage,
    tile_size: u32,
    rows: usize,
    cols: usize,
    tiles: Vec<TileImage>,
    dropped_pixels: u64,
}

/// Serialized description of a split tileset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilesetMeta {
    pub source_path: PathBuf,
    pub tile_size: u32,
    pub rows: usize,
    pub cols: usize,
    pub dropped_pixels: u64,
}

impl Tileset {
    pub fn source(&self) -> &TileImage {
        &self.source
    }

    pub fn tile_size(&self) -> u32 {
        self.tile_size
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Pixels right of / below the last full tile, which splitting discards.
    pub fn dropped_pixels(&self) -> u64 {
        self.dropped_pixels
    }

    pub fn tile(&self, row: usize, col: usize) -> &TileImage {
        assert!(row < self.rows && col < self.cols, "tile ({row},{col}) out of grid");
        &self.tiles[row * self.cols + col]
    }

    pub fn get(&self, row: isize, col: isize) -> Option<&TileImage> {
        if row < 0 || col < 0 || row as usize >= self.rows || col as usize >= self.cols {
            return None;
        }
        Some(self.tile(row as usize, col as usize))
    }

    /// Tiles with their (row, col) in raster order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &TileImage)> {
        let cols = self.cols;
        self.tiles
            .iter()
            .enumerate()
            .map(move |(i, t)| ((i / cols, i % cols), t))
    }

    /// Stitches the grid back together. The result equals the source cropped
    /// to `cols * tile_size` by `rows * tile_size`.
    pub fn reassemble(&self) -> TileImage {
        let ts = self.tile_size;
        let mut out = TileImage::transparent(self.cols as u32 * ts, self.rows as u32 * ts);
        for ((r, c), tile) in self.iter() {
            out.paste(tile, c as u32 * ts, r as u32 * ts);
        }
        out
    }

    pub fn meta(&self, source_path: impl Into<PathBuf>) -> TilesetMeta {
        TilesetMeta {
            source_path: source_path.into(),
            tile_size: self.tile_size,
            rows: self.rows,
            cols: self.cols,
            dropped_pixels: self.dropped_pixels,
        }
    }
}

/// Cuts `image` into `tile_size` squares in raster order. Partial tiles at the
/// right and bottom margins are dropped, not padded.
pub fn split_tileset(image: TileImage, tile_size: u32) -> Result<Tileset> {
    if tile_size == 0 {
        return Err(Error::Argument("tile_size must be positive".into()));
    }
    if image.width < tile_size || image.height < tile_size {
        return Err(Error::Dimension(format!(
            "{}x{} image is smaller than one {tile_size}px tile",
            image.width, image.height
        )));
    }
    let cols = (image.width / tile_size) as usize;
    let rows = (image.height / tile_size) as usize;
    let mut tiles = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            tiles.push(image.crop(c as u32 * tile_size, r as u32 * tile_size, tile_size, tile_size)?);
        }
    }
    let kept = (rows * cols) as u64 * (tile_size as u64).pow(2);
    let dropped_pixels = image.width as u64 * image.height as u64 - kept;
    Ok(Tileset {
        source: image,
        tile_size,
        rows,
        cols,
        tiles,
        dropped_pixels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpacityStats {
    /// Fraction of pixels with alpha > 0.
    pub opaque_fraction: f64,
    /// Any pixel on the 1-pixel outer border has alpha > 0.
    pub border_opaque: bool,
}

impl OpacityStats {
    pub fn is_primarily_transparent(&self, threshold: f64) -> bool {
        self.opaque_fraction < threshold
    }
}

pub fn opacity_stats(tile: &TileImage) -> OpacityStats {
    let (w, h) = (tile.width, tile.height);
    let mut opaque = 0usize;
    let mut border_opaque = false;
    for y in 0..h {
        for x in 0..w {
            if tile.get(x, y)[3] > 0 {
                opaque += 1;
                if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                    border_opaque = true;
                }
            }
        }
    }
    OpacityStats {
        opaque_fraction: opaque as f64 / tile.pixels.len() as f64,
        border_opaque,
    }
}

/// Single-channel 8-bit image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub values: Vec<u8>,
}

impl GrayImage {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Rec. 601 luma of one pixel, rounded. Alpha is ignored.
#[inline]
pub fn luminance(p: Rgba) -> u8 {
    let l = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
    l.round().clamp(0.0, 255.0) as u8
}

pub fn to_grayscale(tile: &TileImage) -> GrayImage {
    GrayImage {
        width: tile.width,
        height: tile.height,
        values: tile.pixels.iter().map(|&p| luminance(p)).collect(),
    }
}

const BICUBIC_A: f64 = -0.5;

fn cubic_weight(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        (BICUBIC_A + 2.0) * t * t * t - (BICUBIC_A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        BICUBIC_A * t * t * t - 5.0 * BICUBIC_A * t * t + 8.0 * BICUBIC_A * t - 4.0 * BICUBIC_A
    } else {
        0.0
    }
}

/// Taps and weights along one axis for every output coordinate.
fn axis_taps(src_len: u32, factor: u32) -> Vec<([u32; 4], [f64; 4])> {
    (0..src_len * factor)
        .map(|o| {
            let s = (o as f64 + 0.5) / factor as f64 - 0.5;
            let base = s.floor();
            let frac = s - base;
            let mut idx = [0u32; 4];
            let mut w = [0.0; 4];
            for k in 0..4 {
                let pos = base as i64 + k as i64 - 1;
                idx[k] = pos.clamp(0, src_len as i64 - 1) as u32;
                w[k] = cubic_weight(frac - (k as f64 - 1.0));
            }
            (idx, w)
        })
        .collect()
}

/// Bicubic (a = -0.5) upscaling by an integer factor, per channel, with edge
/// pixels replicated outward.
pub fn upscale_bicubic(tile: &TileImage, factor: u32) -> Result<TileImage> {
    if factor == 0 {
        return Err(Error::Argument("upscale factor must be at least 1".into()));
    }
    if factor == 1 {
        return Ok(tile.clone());
    }
    let xs = axis_taps(tile.width, factor);
    let ys = axis_taps(tile.height, factor);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for (yi, yw) in &ys {
        for (xi, xw) in &xs {
            let mut acc = [0.0f64; 4];
            for (j, &sy) in yi.iter().enumerate() {
                for (i, &sx) in xi.iter().enumerate() {
                    let w = yw[j] * xw[i];
                    let p = tile.get(sx, sy);
                    for ch in 0..4 {
                        acc[ch] += w * p[ch] as f64;
                    }
                }
            }
            out.push(acc.map(|v| v.round().clamp(0.0, 255.0) as u8));
        }
    }
    TileImage::new(tile.width * factor, tile.height * factor, out)
}

/// Surrounds `tile` with `pad` pixels of `color` on every side.
pub fn pad_tile(tile: &TileImage, pad: u32, color: Rgba) -> TileImage {
    let mut out = TileImage::filled(tile.width + 2 * pad, tile.height + 2 * pad, color);
    out.paste(tile, pad, pad);
    out
}
