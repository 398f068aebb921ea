use serde::{Deserialize, Serialize};

use crate::world::{Agent, CityState};

/// Per-agent input vector: box center and size in pixels, one-hot heading
/// (N, E, S, W) and priority.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentFeature {
    pub x: f32,
    pub y: f32,
    pub w: f32,
    pub h: f32,
    pub d: [f32; 4],
    pub p: f32,
}

impl AgentFeature {
    pub const LEN: usize = 9;

    pub fn of(agent: &Agent, tile: u32) -> Self {
        let t = tile as f32;
        let (w, h) = (agent.size.0 as f32 * t, agent.size.1 as f32 * t);
        let mut d = [0.0; 4];
        d[agent.heading.index()] = 1.0;
        AgentFeature {
            x: agent.pos.x as f32 * t + w / 2.0,
            y: agent.pos.y as f32 * t + h / 2.0,
            w,
            h,
            d,
            p: agent.priority.clamp(0.0, 1.0) as f32,
        }
    }

    pub fn to_vec(&self) -> [f32; 9] {
        [self.x, self.y, self.w, self.h, self.d[0], self.d[1], self.d[2], self.d[3], self.p]
    }

    /// Pixel box `(x0, y0, x1, y1)`, exclusive on the far side.
    pub fn bbox(&self) -> (f32, f32, f32, f32) {
        (self.x - self.w / 2.0, self.y - self.h / 2.0, self.x + self.w / 2.0, self.y + self.h / 2.0)
    }
}

pub fn features(state: &CityState, tile: u32) -> Vec<AgentFeature> {
    state.agents.iter().map(|a| AgentFeature::of(a, tile)).collect()
}
