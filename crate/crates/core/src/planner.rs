//! Global path planning: A* over the pedestrian movable region and Dijkstra
//! over a directed one-way lane graph for cars.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use thiserror::Error;

use crate::world::{AgentKind, Cell, StaticMap, World};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no path from {start:?} to {goal:?}")]
    Unreachable { start: Cell, goal: Cell },
    #[error("no legal goal cell for {0:?}")]
    NoGoal(AgentKind),
}

/// Directed lane graph over traffic cells. Each two-cell-wide road carries
/// two antiparallel lanes with right-hand traffic.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    width: usize,
    height: usize,
    succ: Vec<Vec<u32>>,
    node: Vec<bool>,
}

const MIN_RUN: usize = 3;

impl RoadGraph {
    pub fn from_map(map: &StaticMap) -> Self {
        let (w, h) = (map.width(), map.height());
        let traffic = |x: i32, y: i32| map.drivable(Cell::new(x, y));
        // Length of the contiguous traffic run through each cell, per axis.
        let mut row_run = vec![0usize; w * h];
        let mut col_run = vec![0usize; w * h];
        for y in 0..h {
            let mut x = 0;
            while x < w {
                if !traffic(x as i32, y as i32) {
                    x += 1;
                    continue;
                }
                let s = x;
                while x < w && traffic(x as i32, y as i32) {
                    x += 1;
                }
                for i in s..x {
                    row_run[y * w + i] = x - s;
                }
            }
        }
        for x in 0..w {
            let mut y = 0;
            while y < h {
                if !traffic(x as i32, y as i32) {
                    y += 1;
                    continue;
                }
                let s = y;
                while y < h && traffic(x as i32, y as i32) {
                    y += 1;
                }
                for j in s..y {
                    col_run[j * w + x] = y - s;
                }
            }
        }
        let horizontal = |c: Cell| map.in_bounds(c) && row_run[map.idx(c)] >= MIN_RUN;
        let vertical = |c: Cell| map.in_bounds(c) && col_run[map.idx(c)] >= MIN_RUN;

        let mut succ = vec![Vec::new(); w * h];
        let mut node = vec![false; w * h];
        for c in map.cells() {
            if !map.drivable(c) {
                continue;
            }
            node[map.idx(c)] = true;
            let mut out = Vec::new();
            if horizontal(c) {
                // Upper row of a pair runs west, lower row east.
                let lower = horizontal(c.offset(0, -1));
                out.push(if lower { c.offset(1, 0) } else { c.offset(-1, 0) });
            }
            if vertical(c) {
                // Left column runs south, right column north.
                let right = vertical(c.offset(-1, 0));
                out.push(if right { c.offset(0, -1) } else { c.offset(0, 1) });
            }
            succ[map.idx(c)] =
                out.into_iter().filter(|n| map.drivable(*n)).map(|n| map.idx(n) as u32).collect();
        }
        RoadGraph { width: w, height: h, succ, node }
    }

    fn idx(&self, c: Cell) -> Option<usize> {
        (c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height)
            .then(|| c.y as usize * self.width + c.x as usize)
    }

    fn cell(&self, i: usize) -> Cell {
        Cell::new((i % self.width) as i32, (i / self.width) as i32)
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.idx(c).is_some_and(|i| self.node[i])
    }

    pub fn successors(&self, c: Cell) -> Vec<Cell> {
        self.idx(c).map(|i| self.succ[i].iter().map(|&j| self.cell(j as usize)).collect()).unwrap_or_default()
    }

    pub fn has_edge(&self, u: Cell, v: Cell) -> bool {
        match (self.idx(u), self.idx(v)) {
            (Some(i), Some(j)) => self.succ[i].contains(&(j as u32)),
            _ => false,
        }
    }

    pub fn nodes(&self) -> Vec<Cell> {
        (0..self.node.len()).filter(|&i| self.node[i]).map(|i| self.cell(i)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// True when every node reaches every other node.
    pub fn is_strongly_connected(&self) -> bool {
        let nodes: Vec<usize> = (0..self.node.len()).filter(|&i| self.node[i]).collect();
        let Some(&root) = nodes.first() else { return true };
        let mut pred = vec![Vec::new(); self.succ.len()];
        for (i, out) in self.succ.iter().enumerate() {
            for &j in out {
                pred[j as usize].push(i as u32);
            }
        }
        let reach = |adj: &Vec<Vec<u32>>| {
            let mut seen = vec![false; adj.len()];
            let mut stack = vec![root];
            seen[root] = true;
            while let Some(n) = stack.pop() {
                for &m in &adj[n] {
                    if !seen[m as usize] {
                        seen[m as usize] = true;
                        stack.push(m as usize);
                    }
                }
            }
            nodes.iter().all(|&n| seen[n])
        };
        reach(&self.succ) && reach(&pred)
    }
}

fn rebuild(prev: &[u32], width: usize, goal: usize) -> Vec<Cell> {
    let mut out = vec![goal];
    let mut cur = goal;
    while prev[cur] != u32::MAX {
        cur = prev[cur] as usize;
        out.push(cur);
    }
    out.reverse();
    out.into_iter().map(|i| Cell::new((i % width) as i32, (i / width) as i32)).collect()
}

/// A* over walking streets and crossings, 4-connected, Manhattan heuristic.
/// Ties break on lower `f`, then lower `h`, then lower cell index, so
/// results are reproducible.
pub fn plan_pedestrian(map: &StaticMap, start: Cell, goal: Cell) -> Result<Vec<Cell>, PlanError> {
    for (name, c) in [("start", start), ("goal", goal)] {
        if !map.walkable(c) {
            return Err(PlanError::Precondition(format!("{name} {c:?} is not on the movable region")));
        }
    }
    let n = map.width() * map.height();
    let mut g = vec![u32::MAX; n];
    let mut prev = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let (s, t) = (map.idx(start), map.idx(goal));
    g[s] = 0;
    let h0 = start.manhattan(goal) as u32;
    open.push(Reverse((h0, h0, s)));
    while let Some(Reverse((_, _, i))) = open.pop() {
        if closed[i] {
            continue;
        }
        if i == t {
            return Ok(rebuild(&prev, map.width(), t));
        }
        closed[i] = true;
        let c = map.cell_at(i);
        for nb in c.neighbors4() {
            if !map.walkable(nb) {
                continue;
            }
            let j = map.idx(nb);
            let ng = g[i] + 1;
            if ng < g[j] {
                g[j] = ng;
                prev[j] = i as u32;
                let h = nb.manhattan(goal) as u32;
                open.push(Reverse((ng + h, h, j)));
            }
        }
    }
    Err(PlanError::Unreachable { start, goal })
}

/// Dijkstra over the directed lane graph with unit edge weights.
pub fn plan_car(graph: &RoadGraph, start: Cell, goal: Cell) -> Result<Vec<Cell>, PlanError> {
    for (name, c) in [("start", start), ("goal", goal)] {
        if !graph.contains(c) {
            return Err(PlanError::Precondition(format!("{name} {c:?} is not attached to the road graph")));
        }
    }
    let n = graph.succ.len();
    let mut dist = vec![u32::MAX; n];
    let mut prev = vec![u32::MAX; n];
    let (s, t) = (graph.idx(start).unwrap(), graph.idx(goal).unwrap());
    dist[s] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u32, s)));
    while let Some(Reverse((d, i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        if i == t {
            return Ok(rebuild(&prev, graph.width, t));
        }
        for &j in &graph.succ[i] {
            let j = j as usize;
            if d + 1 < dist[j] {
                dist[j] = d + 1;
                prev[j] = i as u32;
                heap.push(Reverse((d + 1, j)));
            }
        }
    }
    Err(PlanError::Unreachable { start, goal })
}

/// Plans for an agent of `kind` on `world`.
pub fn plan(world: &World, kind: AgentKind, start: Cell, goal: Cell) -> Result<Vec<Cell>, PlanError> {
    match kind {
        AgentKind::Pedestrian => plan_pedestrian(&world.map, start, goal),
        AgentKind::Car => plan_car(&world.roads, start, goal),
    }
}

/// Draws a new goal uniformly from the kind's frontage cells, excluding
/// `current`.
pub fn resample_goal<R: Rng>(world: &World, kind: AgentKind, current: Cell, rng: &mut R) -> Result<Cell, PlanError> {
    let cands = world.frontage(kind);
    let n = cands.iter().filter(|c| **c != current).count();
    if n == 0 {
        return Err(PlanError::NoGoal(kind));
    }
    let k = rng.gen_range(0..n);
    Ok(*cands.iter().filter(|c| **c != current).nth(k).unwrap())
}
