use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::world::{AgentKind, Roster, RosterEntry};

/// Where each city's agents come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RosterSource {
    /// The mode's shipped roster in every city.
    Fixed,
    /// A fresh roster per city from [`random_roster`].
    Random,
}

impl FromStr for RosterSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(RosterSource::Fixed),
            "random" => Ok(RosterSource::Random),
            _ => Err(format!("unknown roster source `{s}` (fixed|random)")),
        }
    }
}

impl fmt::Display for RosterSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RosterSource::Fixed => "fixed",
            RosterSource::Random => "random",
        })
    }
}

fn weighted<'a, R: Rng>(rng: &mut R, table: &[(&'a str, f64)]) -> &'a str {
    let total: f64 = table.iter().map(|(_, w)| w).sum();
    let mut x = rng.gen::<f64>() * total;
    for (name, w) in table {
        if x < *w {
            return name;
        }
        x -= w;
    }
    table[table.len() - 1].0
}

/// 6 to 10 cars and 4 to 7 pedestrians. Buses and reckless drivers are
/// kept scarce so that Fast stays the least common label.
pub fn random_roster<R: Rng>(rng: &mut R) -> Roster {
    let cars = rng.gen_range(6..=10);
    let peds = rng.gen_range(4..=7);
    let mut agents = Vec::with_capacity(cars + peds);
    for _ in 0..cars {
        let role = weighted(rng, &[("", 0.67), ("IsAmbulance", 0.1), ("IsPolice", 0.2), ("IsBus", 0.03)]);
        let mut concepts = Vec::new();
        let priority = match role {
            "IsAmbulance" => rng.gen_range(0.9..1.0),
            "IsPolice" => rng.gen_range(0.75..0.9),
            _ => rng.gen_range(0.05..0.7),
        };
        if !role.is_empty() {
            concepts.push(role.to_string());
        }
        if role != "IsAmbulance" {
            let style = weighted(rng, &[("", 0.5), ("IsTiro", 0.46), ("IsReckless", 0.04)]);
            if !style.is_empty() {
                concepts.push(style.to_string());
            }
        }
        agents.push(RosterEntry { kind: AgentKind::Car, concepts, priority });
    }
    for _ in 0..peds {
        let age = weighted(rng, &[("", 0.4), ("IsOld", 0.3), ("IsYoung", 0.3)]);
        let concepts = if age.is_empty() { vec![] } else { vec![age.to_string()] };
        agents.push(RosterEntry { kind: AgentKind::Pedestrian, concepts, priority: rng.gen_range(0.3..0.7) });
    }
    Roster { agents }
}
