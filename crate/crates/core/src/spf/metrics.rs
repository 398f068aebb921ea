use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub seed: u64,
    pub succ: bool,
    pub dec: bool,
    #[serde(rename = "return")]
    pub ret: f64,
    pub steps: u64,
    pub oracle_steps: u64,
    pub constrained_steps: u64,
    pub violations: u64,
    pub reached_goal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub episodes: usize,
    pub tsr: f64,
    pub dsr: f64,
    pub mean_return: f64,
    pub random_return: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("metrics need at least one episode")]
pub struct EmptyOutcomes;

pub fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn compute_metrics(outcomes: &[EpisodeOutcome], random_baseline_return: f64) -> Result<Metrics, EmptyOutcomes> {
    if outcomes.is_empty() {
        return Err(EmptyOutcomes);
    }
    let b = |v: bool| if v { 1.0 } else { 0.0 };
    let mean_return = mean(outcomes.iter().map(|o| o.ret));
    Ok(Metrics {
        episodes: outcomes.len(),
        tsr: mean(outcomes.iter().map(|o| b(o.succ))),
        dsr: mean(outcomes.iter().map(|o| b(o.dec))),
        mean_return,
        random_return: random_baseline_return,
        score: mean_return - random_baseline_return,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(succ: bool, dec: bool, ret: f64) -> EpisodeOutcome {
        EpisodeOutcome {
            seed: 0,
            succ,
            dec,
            ret,
            steps: 1,
            oracle_steps: 1,
            constrained_steps: 1,
            violations: 0,
            reached_goal: succ,
        }
    }

    #[test]
    fn rates_and_score() {
        let o: Vec<_> = [true, false, true, true].iter().map(|&s| outcome(s, !s, 8.51)).collect();
        let m = compute_metrics(&o, 0.0).unwrap();
        assert_eq!(m.tsr, 0.75);
        assert_eq!(m.dsr, 0.25);
        assert!((m.score - 8.51).abs() < 1e-12);
        assert!(compute_metrics(&[], 0.0).is_err());
    }
}
