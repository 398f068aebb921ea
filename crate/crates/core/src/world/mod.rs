//! Static map, agents, and the dynamic city state.

mod agent;
mod builder;
mod fov;
mod map;
mod moves;
mod state;

use std::path::PathBuf;

use thiserror::Error;

pub use agent::{Agent, AgentKind, Heading, Roster, RosterEntry};
pub use builder::GridCity;
pub use fov::{crop_fov, Fov};
pub use map::{Cell, Rect, Semantic, StaticMap};
pub use moves::{may_share, resolve_moves};
pub use state::{load_config, CityState, KindSpeeds, SpeedTable};

use crate::planner::{PlanError, RoadGraph};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("malformed map: {0}")]
    MalformedMap(String),
    #[error("malformed roster: {0}")]
    MalformedRoster(String),
    #[error("agent {agent} uses unknown concept `{concept}`")]
    UnknownConcept { agent: usize, concept: String },
    #[error("no start cell available for {0:?} agents")]
    NoFreeStart(AgentKind),
    #[error("could not place agent {agent} after {retries} attempts")]
    Placement { agent: usize, retries: usize },
    #[error("unknown agent {0}")]
    UnknownAgent(usize),
    #[error("agent {agent} move leaves its planned path")]
    OffPath { agent: usize },
    #[error("agent {agent} moves {cells} cells, more than its bound {max}")]
    TooFast { agent: usize, cells: usize, max: usize },
    #[error("agents {a} and {b} both end on {cell:?}")]
    Collision { a: usize, b: usize, cell: Cell },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Static map plus everything derived from it once at load time.
#[derive(Debug, Clone)]
pub struct World {
    pub map: StaticMap,
    pub regions: Vec<Rect>,
    region_of: Vec<Option<u16>>,
    pub roads: RoadGraph,
    ped_frontage: Vec<Cell>,
    car_frontage: Vec<Cell>,
    digest: String,
}

/// Car start and goal cells may sit this far from a building; the near
/// lane lies two cells out, past the sidewalk.
pub const CAR_FRONTAGE_RADIUS: i32 = 2;

const PED_ORIGINS: [Semantic; 3] = [Semantic::House, Semantic::Office, Semantic::Store];
const CAR_ORIGINS: [Semantic; 3] = [Semantic::Garage, Semantic::GasStation, Semantic::Store];

impl World {
    pub fn new(map: StaticMap) -> Self {
        let regions = map.intersection_regions();
        let mut region_of = vec![None; map.width() * map.height()];
        for (k, r) in regions.iter().enumerate() {
            for y in r.y0..=r.y1 {
                for x in r.x0..=r.x1 {
                    let i = map.idx(Cell::new(x, y));
                    region_of[i].get_or_insert(k as u16);
                }
            }
        }
        let roads = RoadGraph::from_map(&map);
        let near = |c: Cell, radius: i32, kinds: &[Semantic]| {
            (-radius..=radius).any(|dy| {
                (-radius..=radius).any(|dx| kinds.iter().any(|s| map.has(c.offset(dx, dy), *s)))
            })
        };
        let outside = |c: Cell| region_of[map.idx(c)].is_none();
        let ped_frontage = map
            .cells()
            .filter(|&c| map.walkable(c) && outside(c) && near(c, 1, &PED_ORIGINS))
            .collect();
        let car_frontage = map
            .cells()
            .filter(|&c| roads.contains(c) && outside(c) && near(c, CAR_FRONTAGE_RADIUS, &CAR_ORIGINS))
            .collect();
        let digest = map.digest();
        World { map, regions, region_of, roads, ped_frontage, car_frontage, digest }
    }

    pub fn region_at(&self, c: Cell) -> Option<usize> {
        if self.map.in_bounds(c) {
            self.region_of[self.map.idx(c)].map(usize::from)
        } else {
            None
        }
    }

    /// Legal start and goal cells for `kind`.
    pub fn frontage(&self, kind: AgentKind) -> &[Cell] {
        match kind {
            AgentKind::Pedestrian => &self.ped_frontage,
            AgentKind::Car => &self.car_frontage,
        }
    }

    pub fn legal(&self, kind: AgentKind, c: Cell) -> bool {
        match kind {
            AgentKind::Pedestrian => self.map.walkable(c),
            AgentKind::Car => self.map.drivable(c),
        }
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }
}
