use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::WorldError;

/// Grid coordinate; `y` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn manhattan(self, other: Cell) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }

    pub fn neighbors4(self) -> [Cell; 4] {
        [self.offset(0, -1), self.offset(1, 0), self.offset(0, 1), self.offset(-1, 0)]
    }
}

impl From<[i32; 2]> for Cell {
    fn from([x, y]: [i32; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

/// Static semantics in layer order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantic {
    WalkingStreet,
    TrafficStreet,
    Crossing,
    House,
    Office,
    Garage,
    Store,
    GasStation,
}

impl Semantic {
    pub const ALL: [Semantic; 8] = [
        Semantic::WalkingStreet,
        Semantic::TrafficStreet,
        Semantic::Crossing,
        Semantic::House,
        Semantic::Office,
        Semantic::Garage,
        Semantic::Store,
        Semantic::GasStation,
    ];
    pub const BUILDINGS: [Semantic; 5] =
        [Semantic::House, Semantic::Office, Semantic::Garage, Semantic::Store, Semantic::GasStation];

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn name(self) -> &'static str {
        match self {
            Semantic::WalkingStreet => "walking_street",
            Semantic::TrafficStreet => "traffic_street",
            Semantic::Crossing => "crossing",
            Semantic::House => "house",
            Semantic::Office => "office",
            Semantic::Garage => "garage",
            Semantic::Store => "store",
            Semantic::GasStation => "gas_station",
        }
    }

    pub fn from_name(name: &str) -> Option<Semantic> {
        Semantic::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn is_building(self) -> bool {
        Semantic::BUILDINGS.contains(&self)
    }
}

/// Axis-aligned inclusive rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Rect {
    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x <= self.x1 && c.y >= self.y0 && c.y <= self.y1
    }

    pub fn width(&self) -> i32 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> i32 {
        self.y1 - self.y0 + 1
    }
}

/// `W x H x 8` boolean map stored as one bitmask per cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticMap {
    width: usize,
    height: usize,
    cells: Vec<u8>,
}

/// Map file: per-layer run-length lists of `[y, x_start, length]` runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MapFile {
    width: usize,
    height: usize,
    layers: BTreeMap<String, Vec<[usize; 3]>>,
}

impl StaticMap {
    pub fn new(width: usize, height: usize) -> Self {
        StaticMap { width, height, cells: vec![0; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    pub fn idx(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    pub fn cell_at(&self, idx: usize) -> Cell {
        Cell::new((idx % self.width) as i32, (idx / self.width) as i32)
    }

    pub fn mask(&self, c: Cell) -> u8 {
        if self.in_bounds(c) {
            self.cells[self.idx(c)]
        } else {
            0
        }
    }

    pub fn has(&self, c: Cell, s: Semantic) -> bool {
        self.mask(c) & s.bit() != 0
    }

    pub fn set(&mut self, c: Cell, s: Semantic, on: bool) {
        let i = self.idx(c);
        if on {
            self.cells[i] |= s.bit();
        } else {
            self.cells[i] &= !s.bit();
        }
    }

    /// Pedestrian movable region: walking streets and crossings.
    pub fn walkable(&self, c: Cell) -> bool {
        self.mask(c) & (Semantic::WalkingStreet.bit() | Semantic::Crossing.bit()) != 0
    }

    pub fn drivable(&self, c: Cell) -> bool {
        self.has(c, Semantic::TrafficStreet)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cells.len()).map(|i| self.cell_at(i))
    }

    /// One boolean grid per semantic, row-major.
    pub fn layer(&self, s: Semantic) -> Vec<bool> {
        self.cells.iter().map(|m| m & s.bit() != 0).collect()
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let file: MapFile = serde_json::from_str(text).map_err(|e| WorldError::MalformedMap(e.to_string()))?;
        if file.width == 0 || file.height == 0 || file.width > 4096 || file.height > 4096 {
            return Err(WorldError::MalformedMap(format!("bad dimensions {}x{}", file.width, file.height)));
        }
        let mut map = StaticMap::new(file.width, file.height);
        for (name, runs) in &file.layers {
            let s = Semantic::from_name(name)
                .ok_or_else(|| WorldError::MalformedMap(format!("unknown layer `{name}`")))?;
            for &[y, x0, len] in runs {
                if y >= map.height || x0 >= map.width || len == 0 || len > map.width - x0 {
                    return Err(WorldError::MalformedMap(format!("run [{y}, {x0}, {len}] out of bounds in `{name}`")));
                }
                for x in x0..x0 + len {
                    map.set(Cell::new(x as i32, y as i32), s, true);
                }
            }
        }
        Ok(map)
    }

    pub fn to_json(&self) -> String {
        let mut layers = BTreeMap::new();
        for s in Semantic::ALL {
            let mut runs = Vec::new();
            for y in 0..self.height {
                let mut x = 0;
                while x < self.width {
                    if self.has(Cell::new(x as i32, y as i32), s) {
                        let start = x;
                        while x < self.width && self.has(Cell::new(x as i32, y as i32), s) {
                            x += 1;
                        }
                        runs.push([y, start, x - start]);
                    } else {
                        x += 1;
                    }
                }
            }
            layers.insert(s.name().to_string(), runs);
        }
        let file = MapFile { width: self.width, height: self.height, layers };
        serde_json::to_string(&file).expect("map serializes")
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.width as u64).to_le_bytes());
        h.update((self.height as u64).to_le_bytes());
        h.update(&self.cells);
        hex::encode(h.finalize())
    }

    /// Intersection regions: bounding boxes of 8-connected crossing components.
    pub fn intersection_regions(&self) -> Vec<Rect> {
        let mut seen = vec![false; self.cells.len()];
        let mut regions = Vec::new();
        for start in self.cells() {
            if !self.has(start, Semantic::Crossing) || seen[self.idx(start)] {
                continue;
            }
            let mut rect = Rect { x0: start.x, y0: start.y, x1: start.x, y1: start.y };
            let mut stack = vec![start];
            seen[self.idx(start)] = true;
            while let Some(c) = stack.pop() {
                rect.x0 = rect.x0.min(c.x);
                rect.y0 = rect.y0.min(c.y);
                rect.x1 = rect.x1.max(c.x);
                rect.y1 = rect.y1.max(c.y);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let n = c.offset(dx, dy);
                        if self.in_bounds(n) && self.has(n, Semantic::Crossing) && !seen[self.idx(n)] {
                            seen[self.idx(n)] = true;
                            stack.push(n);
                        }
                    }
                }
            }
            regions.push(rect);
        }
        regions
    }
}
