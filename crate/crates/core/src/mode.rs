use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Task mode. Each selects a predicate subset and a rule file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "spf-easy")]
    SpfEasy,
    #[serde(rename = "spf-medium")]
    SpfMedium,
    #[serde(rename = "spf-hard")]
    SpfHard,
    #[serde(rename = "spf-expert")]
    SpfExpert,
    #[serde(rename = "vap-easy")]
    VapEasy,
    #[serde(rename = "vap-hard")]
    VapHard,
}

impl Mode {
    pub const ALL: [Mode; 6] =
        [Mode::SpfEasy, Mode::SpfMedium, Mode::SpfHard, Mode::SpfExpert, Mode::VapEasy, Mode::VapHard];
    pub const SPF: [Mode; 4] = [Mode::SpfEasy, Mode::SpfMedium, Mode::SpfHard, Mode::SpfExpert];
    pub const VAP: [Mode; 2] = [Mode::VapEasy, Mode::VapHard];

    pub fn name(self) -> &'static str {
        match self {
            Mode::SpfEasy => "spf-easy",
            Mode::SpfMedium => "spf-medium",
            Mode::SpfHard => "spf-hard",
            Mode::SpfExpert => "spf-expert",
            Mode::VapEasy => "vap-easy",
            Mode::VapHard => "vap-hard",
        }
    }

    pub fn is_spf(self) -> bool {
        Mode::SPF.contains(&self)
    }

    /// File stem used for shipped rule and roster files.
    pub fn stem(self) -> &'static str {
        match self {
            Mode::SpfEasy => "spf_easy",
            Mode::SpfMedium => "spf_medium",
            Mode::SpfHard => "spf_hard",
            Mode::SpfExpert => "spf_expert",
            Mode::VapEasy => "vap_easy",
            Mode::VapHard => "vap_hard",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown mode `{0}`")]
pub struct UnknownMode(pub String);

impl FromStr for Mode {
    type Err = UnknownMode;

    /// Accepts the full name (`spf-hard`) or, for the driving task, the bare
    /// difficulty (`hard`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s || (m.is_spf() && m.name()[4..] == s))
            .ok_or(UnknownMode(s))
    }
}
