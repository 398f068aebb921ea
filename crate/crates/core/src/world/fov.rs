use serde::{Deserialize, Serialize};

use super::map::Rect;
use super::state::CityState;
use super::WorldError;

/// An agent's observation window and its ordered entity slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fov {
    pub owner: usize,
    pub radius: i32,
    pub window: Rect,
    /// Owner first, then others by (distance, id).
    pub visible: Vec<usize>,
    /// Slot count after padding; slots past `visible.len()` are empty.
    pub slots: usize,
}

impl Fov {
    pub fn slot(&self, i: usize) -> Option<usize> {
        self.visible.get(i).copied()
    }

    pub fn pad_slots(&self) -> usize {
        self.slots - self.visible.len()
    }

    /// Every agent in id order, no window limit.
    pub fn global(state: &CityState) -> Fov {
        let (w, h) = (state.width() as i32, state.height() as i32);
        Fov {
            owner: 0,
            radius: w.max(h),
            window: Rect { x0: 0, y0: 0, x1: w - 1, y1: h - 1 },
            visible: (0..state.agents.len()).collect(),
            slots: state.agents.len(),
        }
    }
}

pub fn crop_fov(state: &CityState, agent: usize, radius: i32, max_agents: usize) -> Result<Fov, WorldError> {
    let me = state.agent(agent)?;
    assert!(radius >= 1 && max_agents >= 1);
    let window = Rect {
        x0: (me.pos.x - radius).max(0),
        y0: (me.pos.y - radius).max(0),
        x1: (me.pos.x + radius).min(state.width() as i32 - 1),
        y1: (me.pos.y + radius).min(state.height() as i32 - 1),
    };
    let mut others: Vec<(i32, usize)> = state
        .agents
        .iter()
        .filter(|a| a.id != agent && window.contains(a.pos))
        .map(|a| (me.pos.chebyshev(a.pos), a.id))
        .collect();
    others.sort_unstable();
    let mut visible = vec![agent];
    visible.extend(others.into_iter().map(|(_, id)| id).take(max_agents - 1));
    Ok(Fov { owner: agent, radius, window, visible, slots: max_agents })
}
