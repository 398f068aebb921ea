use super::map::{Cell, Semantic, StaticMap};

/// Procedural grid city: square blocks of buildings separated by two-lane
/// roads, each road flanked by one-cell sidewalks. Where a sidewalk crosses
/// a road the cell becomes a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCity {
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub block_size: usize,
    pub margin: usize,
}

const STRIP: usize = 4;

// Quadrant building types, cycled over all quadrants in row-major order.
const PATTERN: [Semantic; 9] = [
    Semantic::House,
    Semantic::Office,
    Semantic::Garage,
    Semantic::Store,
    Semantic::House,
    Semantic::GasStation,
    Semantic::Office,
    Semantic::House,
    Semantic::Store,
];

impl GridCity {
    /// The shipped 60x60 layout.
    pub const DEMO: GridCity = GridCity { blocks_x: 3, blocks_y: 3, block_size: 14, margin: 1 };
    /// A 22x22 layout for fast tests.
    pub const SMALL: GridCity = GridCity { blocks_x: 2, blocks_y: 2, block_size: 4, margin: 1 };

    pub fn width(&self) -> usize {
        2 * self.margin + (self.blocks_x + 1) * STRIP + self.blocks_x * self.block_size
    }

    pub fn height(&self) -> usize {
        2 * self.margin + (self.blocks_y + 1) * STRIP + self.blocks_y * self.block_size
    }

    /// First coordinate of strip `i` (its outer sidewalk).
    fn strip_start(&self, i: usize) -> usize {
        self.margin + i * (STRIP + self.block_size)
    }

    pub fn build(&self) -> StaticMap {
        assert!(self.block_size >= 2 && self.blocks_x >= 1 && self.blocks_y >= 1);
        let (w, h) = (self.width(), self.height());
        let mut map = StaticMap::new(w, h);
        let lo = self.margin;
        let (hi_x, hi_y) = (w - self.margin - 1, h - self.margin - 1);

        let mut sidewalk = vec![false; w * h];
        let mut road = vec![false; w * h];
        let mark = |grid: &mut Vec<bool>, x: usize, y: usize| grid[y * w + x] = true;

        // Horizontal strips.
        for i in 0..=self.blocks_y {
            let s = self.strip_start(i);
            for x in lo..=hi_x {
                mark(&mut sidewalk, x, s);
                mark(&mut sidewalk, x, s + 3);
            }
            for x in lo + 1..hi_x {
                mark(&mut road, x, s + 1);
                mark(&mut road, x, s + 2);
            }
        }
        // Vertical strips.
        for i in 0..=self.blocks_x {
            let s = self.strip_start(i);
            for y in lo..=hi_y {
                mark(&mut sidewalk, s, y);
                mark(&mut sidewalk, s + 3, y);
            }
            for y in lo + 1..hi_y {
                mark(&mut road, s + 1, y);
                mark(&mut road, s + 2, y);
            }
        }
        for y in 0..h {
            for x in 0..w {
                let c = Cell::new(x as i32, y as i32);
                let (sw, rd) = (sidewalk[y * w + x], road[y * w + x]);
                if rd {
                    map.set(c, Semantic::TrafficStreet, true);
                    if sw {
                        map.set(c, Semantic::Crossing, true);
                    }
                } else if sw {
                    map.set(c, Semantic::WalkingStreet, true);
                }
            }
        }

        let half = self.block_size / 2;
        let mut q = 0;
        for by in 0..self.blocks_y {
            for bx in 0..self.blocks_x {
                let x0 = self.strip_start(bx) + STRIP;
                let y0 = self.strip_start(by) + STRIP;
                for (qy, qx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let sem = PATTERN[q % PATTERN.len()];
                    q += 1;
                    let xs = if qx == 0 { x0..x0 + half } else { x0 + half..x0 + self.block_size };
                    let ys = if qy == 0 { y0..y0 + half } else { y0 + half..y0 + self.block_size };
                    for y in ys {
                        for x in xs.clone() {
                            map.set(Cell::new(x as i32, y as i32), sem, true);
                        }
                    }
                }
            }
        }
        map
    }
}
