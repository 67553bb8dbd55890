use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sample_rng;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaStrategy {
    /// Random legal extension by one to three fresh labels.
    Random,
    /// Always appends the smallest allowed label.
    GreedyLabel,
    /// Packs the smallest allowed labels, more each round, and never raises `p`.
    Adversarial,
}

impl BetaStrategy {
    pub const ALL: [BetaStrategy; 3] = [BetaStrategy::Random, BetaStrategy::GreedyLabel, BetaStrategy::Adversarial];

    pub fn parse(s: &str) -> Result<BetaStrategy> {
        match s {
            "random" => Ok(BetaStrategy::Random),
            "greedy-label" | "greedy" => Ok(BetaStrategy::GreedyLabel),
            "adversarial" => Ok(BetaStrategy::Adversarial),
            other => Err(Error::Parse(format!("unknown beta strategy {other:?}"))),
        }
    }
}

/// One round: β plays `[t,∞)_p`, α answers `[t,∞)_q` having chosen `r`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRound {
    pub n: usize,
    /// Injection `{0,…,d-1} → ω` listed by its values.
    pub t: Vec<u32>,
    pub p: u32,
    pub r: u32,
    pub q: u32,
}

/// Play of the λ-topology Choquet game on finite injections, where
/// `[t,∞)_n = {u ⪰ t : n ∩ rg u = n ∩ rg t}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub rounds: Vec<GameRound>,
}

/// The `n`-th (from 0) element of `ω ∖ range`.
fn nth_missing(range: &BTreeSet<u32>, n: usize) -> u32 {
    (0u32..).filter(|v| !range.contains(v)).nth(n).expect("ω minus a finite set is infinite")
}

impl GameState {
    pub fn round(&self) -> usize {
        self.rounds.len()
    }

    pub fn current(&self) -> Option<&GameRound> {
        self.rounds.last()
    }

    pub fn r_list(&self) -> Vec<u32> {
        self.rounds.iter().map(|r| r.r).collect()
    }

    /// Accepts β's move `[t,∞)_p` if it lies inside α's last answer, then
    /// plays α's reply `r = ` the `n`-th element of `ω ∖ rg t`,
    /// `q = max(p, r+1)`.
    pub fn beta_move(&mut self, t: Vec<u32>, p: u32) -> Result<&GameRound> {
        let n = self.round();
        let illegal = |reason: String| Error::IllegalMove { round: n, reason };
        let range: BTreeSet<u32> = t.iter().copied().collect();
        if range.len() != t.len() {
            return Err(illegal("t is not injective".into()));
        }
        if let Some(prev) = self.current() {
            if t.len() < prev.t.len() || t[..prev.t.len()] != prev.t[..] {
                return Err(illegal("t does not extend the previous position".into()));
            }
            if let Some(&v) = t[prev.t.len()..].iter().find(|&&v| v < prev.q) {
                return Err(illegal(format!("label {v} lies below α's bound {}", prev.q)));
            }
            if p < prev.q {
                return Err(illegal(format!("p = {p} is below α's bound {}", prev.q)));
            }
        }
        let r = nth_missing(&range, n);
        let q = p.max(r + 1);
        self.rounds.push(GameRound { n, t, p, r, q });
        Ok(self.rounds.last().expect("just pushed"))
    }

    /// The r-list is injective and no `r_i` lies in any played range.
    pub fn invariant_holds(&self) -> bool {
        let rs = self.r_list();
        let distinct: BTreeSet<u32> = rs.iter().copied().collect();
        distinct.len() == rs.len() && self.rounds.iter().all(|m| rs.iter().all(|r| !m.t.contains(r)))
    }
}

fn beta_choice<R: Rng>(rng: &mut R, strategy: BetaStrategy, state: &GameState) -> (Vec<u32>, u32) {
    let n = state.round();
    let (mut t, floor) = match state.current() {
        Some(prev) => (prev.t.clone(), prev.q),
        None => (Vec::new(), 0),
    };
    let fresh = |t: &Vec<u32>, from: u32| (from..).find(|v| !t.contains(v)).expect("unbounded");
    match strategy {
        BetaStrategy::Random => {
            for _ in 0..rng.gen_range(1..=3) {
                let v = fresh(&t, floor + rng.gen_range(0..20));
                t.push(v);
            }
            (t, floor + rng.gen_range(0..4))
        }
        BetaStrategy::GreedyLabel => {
            let v = fresh(&t, floor);
            t.push(v);
            (t, floor)
        }
        BetaStrategy::Adversarial => {
            for _ in 0..=n.min(8) {
                let v = fresh(&t, floor);
                t.push(v);
            }
            (t, floor)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameReport {
    pub strategy: BetaStrategy,
    pub seed: u64,
    pub state: GameState,
    /// First round after which the invariant failed.
    pub failed_round: Option<usize>,
    pub verdict: String,
}

/// Plays `rounds` rounds of α's strategy against the chosen β, checking the
/// invariant after every round.
pub fn choquet_game(rounds: usize, strategy: BetaStrategy, seed: u64) -> Result<GameReport> {
    let mut rng = sample_rng(seed, 0);
    let mut state = GameState::default();
    let mut failed_round = None;
    // ranges only grow along a legal play, so checking every r against the
    // latest range covers all earlier ones
    let mut rs = BTreeSet::new();
    for n in 0..rounds {
        let (t, p) = beta_choice(&mut rng, strategy, &state);
        let round = state.beta_move(t, p)?;
        let range: BTreeSet<u32> = round.t.iter().copied().collect();
        let fresh = rs.insert(round.r);
        if failed_round.is_none() && (!fresh || rs.iter().any(|r| range.contains(r))) {
            failed_round = Some(n);
        }
    }
    let verdict = match (rounds, failed_round) {
        (0, _) => "VACUOUS",
        (_, None) => "PASS",
        _ => "FAIL",
    };
    Ok(GameReport {
        strategy,
        seed,
        state,
        failed_round,
        verdict: verdict.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adversarial_opening_is_avoided() {
        let mut g = GameState::default();
        let r = g.beta_move(vec![0, 1, 2, 3], 0).unwrap();
        assert_eq!((r.r, r.q), (4, 5));
        assert!(g.beta_move(vec![0, 1, 2, 3, 4], 5).is_err());
        assert!(g.beta_move(vec![0, 1, 2, 3, 5], 4).is_err());
        let r = g.beta_move(vec![0, 1, 2, 3, 5], 5).unwrap();
        // second missing label of ω ∖ {0,1,2,3,5}
        assert_eq!(r.r, 6);
        assert!(g.invariant_holds());
    }

    #[test]
    fn zero_rounds_is_vacuous() {
        let rep = choquet_game(0, BetaStrategy::Random, 1).unwrap();
        assert_eq!(rep.verdict, "VACUOUS");
    }
}
