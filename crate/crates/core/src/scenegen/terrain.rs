use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_TERRAIN_SIDE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerrainParams {
    pub fill_prob: f64,
    pub iterations: u32,
    pub birth: u8,
    pub survive: u8,
    pub min_walkable_fraction: f64,
    pub max_attempts: u32,
}

impl Default for TerrainParams {
    fn default() -> Self {
        Self {
            fill_prob: 0.45,
            iterations: 4,
            birth: 5,
            survive: 4,
            min_walkable_fraction: 0.25,
            max_attempts: 16,
        }
    }
}

impl TerrainParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fill_prob) {
            return Err(Error::Argument(format!("fill_prob {} outside [0, 1]", self.fill_prob)));
        }
        if self.birth > 8 || self.survive > 8 {
            return Err(Error::Argument("birth/survive counts must be at most 8".into()));
        }
        if !(0.0..=1.0).contains(&self.min_walkable_fraction) {
            return Err(Error::Argument("min_walkable_fraction outside [0, 1]".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::Argument("max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerrainMap {
    pub rows: usize,
    pub cols: usize,
    /// Row-major; true = walkable.
    pub walkable: Vec<bool>,
    /// Seed of the attempt that produced this map.
    pub seed: u64,
    pub attempts: u32,
}

impl TerrainMap {
    pub fn is_walkable(&self, row: usize, col: usize) -> bool {
        self.walkable[row * self.cols + col]
    }

    pub fn walkable_count(&self) -> usize {
        self.walkable.iter().filter(|&&w| w).count()
    }

    pub fn walkable_fraction(&self) -> f64 {
        self.walkable_count() as f64 / self.walkable.len() as f64
    }

    /// Terrain layer as integer ids: 0 walkable, 1 blocked.
    pub fn ids(&self) -> Vec<Vec<u32>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| u32::from(!self.is_walkable(r, c))).collect())
            .collect()
    }
}

pub const WALKABLE_ID: u32 = 0;
pub const BLOCKED_ID: u32 = 1;

/// Labels 4-connected components of `cells` (true = member). Returns the
/// label grid (usize::MAX for non-members) and component sizes.
pub fn components(rows: usize, cols: usize, cells: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let mut label = vec![usize::MAX; cells.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..cells.len() {
        if !cells[start] || label[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        label[start] = id;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (r, c) = (i / cols, i % cols);
            let mut visit = |j: usize| {
                if cells[j] && label[j] == usize::MAX {
                    label[j] = id;
                    queue.push_back(j);
                }
            };
            if r > 0 {
                visit(i - cols);
            }
            if r + 1 < rows {
                visit(i + cols);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < cols {
                visit(i + 1);
            }
        }
        sizes.push(size);
    }
    (label, sizes)
}

fn blocked_neighbors(rows: usize, cols: usize, blocked: &[bool], r: usize, c: usize) -> u8 {
    let mut n = 0;
    for dr in -1isize..=1 {
        for dc in -1isize..=1 {
            if dr == 0 && dc == 0 {
                continue;
            }
            let (rr, cc) = (r as isize + dr, c as isize + dc);
            let outside = rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize;
            if outside || blocked[rr as usize * cols + cc as usize] {
                n += 1;
            }
        }
    }
    n
}

/// Random fill followed by `params.iterations` automaton steps, without the
/// connectivity repair. Returns the blocked mask.
pub fn run_automaton(rows: usize, cols: usize, seed: u64, params: &TerrainParams) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocked: Vec<bool> = (0..rows * cols)
        .map(|_| rng.random::<f64>() < params.fill_prob)
        .collect();
    for _ in 0..params.iterations {
        let next = (0..rows * cols)
            .map(|i| {
                let n = blocked_neighbors(rows, cols, &blocked, i / cols, i % cols);
                if blocked[i] {
                    n >= params.survive
                } else {
                    n >= params.birth
                }
            })
            .collect();
        blocked = next;
    }
    blocked
}

/// Cellular-automaton terrain whose walkable cells form one 4-connected
/// region. Attempts use seeds `seed, seed+1, ...` until the walkable fraction
/// reaches the minimum.
pub fn generate_terrain(rows: usize, cols: usize, seed: u64, params: &TerrainParams) -> Result<TerrainMap> {
    params.validate()?;
    if rows < MIN_TERRAIN_SIDE || cols < MIN_TERRAIN_SIDE {
        return Err(Error::Argument(format!(
            "terrain must be at least {MIN_TERRAIN_SIDE}x{MIN_TERRAIN_SIDE}, got {rows}x{cols}"
        )));
    }
    let mut last = 0.0;
    for attempt in 0..params.max_attempts {
        let s = seed.wrapping_add(attempt as u64);
        let blocked = run_automaton(rows, cols, s, params);
        let open: Vec<bool> = blocked.iter().map(|b| !b).collect();
        let (label, sizes) = components(rows, cols, &open);
        // Largest component; the first in raster order on ties.
        let keep = sizes
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, usize)>, (id, &n)| match best {
                Some((_, bn)) if bn >= n => best,
                _ => Some((id, n)),
            });
        let walkable: Vec<bool> = match keep {
            Some((id, _)) => label.iter().map(|&l| l == id).collect(),
            None => vec![false; rows * cols],
        };
        let map = TerrainMap { rows, cols, walkable, seed: s, attempts: attempt + 1 };
        last = map.walkable_fraction();
        if last >= params.min_walkable_fraction && map.walkable_count() > 0 {
            return Ok(map);
        }
    }
    Err(Error::Generation {
        attempts: params.max_attempts,
        last_walkable_fraction: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flood_components(map: &TerrainMap) -> usize {
        // Independent recursive-stack flood fill.
        let mut seen = vec![false; map.rows * map.cols];
        let mut count = 0;
        for r in 0..map.rows {
            for c in 0..map.cols {
                if !map.is_walkable(r, c) || seen[r * map.cols + c] {
                    continue;
                }
                count += 1;
                let mut stack = vec![(r, c)];
                while let Some((r, c)) = stack.pop() {
                    if seen[r * map.cols + c] || !map.is_walkable(r, c) {
                        continue;
                    }
                    seen[r * map.cols + c] = true;
                    if r > 0 { stack.push((r - 1, c)); }
                    if c > 0 { stack.push((r, c - 1)); }
                    if r + 1 < map.rows { stack.push((r + 1, c)); }
                    if c + 1 < map.cols { stack.push((r, c + 1)); }
                }
            }
        }
        count
    }

    #[test]
    fn zero_fill_zero_iterations_is_open() {
        let p = TerrainParams { fill_prob: 0.0, iterations: 0, ..Default::default() };
        let m = generate_terrain(10, 12, 1, &p).unwrap();
        assert_eq!(m.walkable_count(), 120);
    }

    #[test]
    fn zero_fill_one_iteration_blocks_corners() {
        let p = TerrainParams { fill_prob: 0.0, iterations: 1, ..Default::default() };
        let m = generate_terrain(9, 11, 1, &p).unwrap();
        let blocked: Vec<(usize, usize)> = (0..9)
            .flat_map(|r| (0..11).map(move |c| (r, c)))
            .filter(|&(r, c)| !m.is_walkable(r, c))
            .collect();
        assert_eq!(blocked, vec![(0, 0), (0, 10), (8, 0), (8, 10)]);
        // Further iterations are stable.
        let p4 = TerrainParams { iterations: 4, ..p };
        assert_eq!(generate_terrain(9, 11, 1, &p4).unwrap().walkable, m.walkable);
    }

    #[test]
    fn full_fill_fails() {
        let p = TerrainParams { fill_prob: 1.0, ..Default::default() };
        match generate_terrain(16, 16, 3, &p) {
            Err(Error::Generation { attempts, last_walkable_fraction }) => {
                assert_eq!(attempts, 16);
                assert_eq!(last_walkable_fraction, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_42_is_single_component() {
        let m = generate_terrain(32, 32, 42, &TerrainParams::default()).unwrap();
        assert_eq!(flood_components(&m), 1);
        assert!(m.walkable_fraction() >= 0.25);
        assert_eq!(m, generate_terrain(32, 32, 42, &TerrainParams::default()).unwrap());
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(matches!(
            generate_terrain(7, 20, 0, &TerrainParams::default()),
            Err(Error::Argument(_))
        ));
    }
}
