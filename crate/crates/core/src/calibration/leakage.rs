use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Leakage rate L1 induced by an e–f rotation by θ placed before the LRU.
pub fn induced_leakage_rate(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    0.5 * s * s
}

/// Rotation angle θ ∈ [0, π] producing leakage rate `l1` ∈ [0, 1/2].
pub fn rotation_for_leakage_rate(l1: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&l1) {
        return Err(Error::param(format!("leakage rate {l1} outside [0, 1/2]")));
    }
    Ok(2.0 * (2.0 * l1).sqrt().asin())
}

/// Two-state Markov model of leakage per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakageRoundModel {
    /// L1, probability per round of leaking.
    pub leakage_rate: f64,
    /// s, natural probability per round of returning.
    pub seepage_rate: f64,
    /// Removal fraction R of one LRU application per round.
    #[serde(default)]
    pub lru_removal: f64,
}

impl LeakageRoundModel {
    pub fn new(leakage_rate: f64, seepage_rate: f64) -> Result<Self> {
        let m = LeakageRoundModel {
            leakage_rate,
            seepage_rate,
            lru_removal: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_lru(self, removal: f64) -> Result<Self> {
        let m = LeakageRoundModel {
            lru_removal: removal,
            ..self
        };
        m.validate()?;
        Ok(m)
    }

    /// Model of an affine chain `P ← a + b·P`.
    pub fn from_affine(a: f64, b: f64) -> Result<Self> {
        LeakageRoundModel::new(a, 1.0 - a - b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("leakage_rate", self.leakage_rate),
            ("seepage_rate", self.seepage_rate),
            ("lru_removal", self.lru_removal),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// s_eff = 1 − (1 − s)(1 − R) when the LRU is applied.
    pub fn effective_seepage(&self, lru_on: bool) -> f64 {
        if lru_on {
            1.0 - (1.0 - self.seepage_rate) * (1.0 - self.lru_removal)
        } else {
            self.seepage_rate
        }
    }

    pub fn step(&self, p: f64, lru_on: bool) -> f64 {
        (1.0 - self.effective_seepage(lru_on)) * p + self.leakage_rate * (1.0 - p)
    }
}

/// Leaked population after each of `n_rounds` rounds, starting unleaked.
pub fn repeated_lru_rounds(model: &LeakageRoundModel, n_rounds: usize, lru_on: bool) -> Vec<f64> {
    repeated_lru_rounds_from(model, 0.0, n_rounds, lru_on)
}

pub fn repeated_lru_rounds_from(model: &LeakageRoundModel, p0: f64, n_rounds: usize, lru_on: bool) -> Vec<f64> {
    let mut p = p0;
    (0..n_rounds)
        .map(|_| {
            p = model.step(p, lru_on);
            p
        })
        .collect()
}

/// Fixed point L1/(L1 + s_eff) of the recursion.
pub fn steady_state_leakage(model: &LeakageRoundModel, lru_on: bool) -> Result<f64> {
    let s = model.effective_seepage(lru_on);
    let total = model.leakage_rate + s;
    if total <= 0.0 {
        return Err(Error::Undefined("no steady state when L1 = s_eff = 0".into()));
    }
    Ok(model.leakage_rate / total)
}

/// Seepage s = L1·(1/P∞ − 1) reproducing an observed steady state.
pub fn fit_seepage(leakage_rate: f64, steady_state: f64) -> Result<f64> {
    if !(steady_state > 0.0 && steady_state <= 1.0) {
        return Err(Error::param(format!("steady state {steady_state} outside (0, 1]")));
    }
    Ok(leakage_rate * (1.0 / steady_state - 1.0))
}

/// Per-round return probability from |f⟩ → |e⟩ decay alone (rate 2/T1).
pub fn decay_seepage(round_duration: f64, t1: f64) -> f64 {
    1.0 - (-2.0 * round_duration / t1).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn leakage_rate_examples() {
        assert_eq!(induced_leakage_rate(0.0), 0.0);
        assert_abs_diff_eq!(induced_leakage_rate(PI), 0.5, epsilon = 1e-15);
        let theta = rotation_for_leakage_rate(0.02).unwrap();
        assert_abs_diff_eq!(theta, 0.4027, epsilon = 1e-4);
        assert_abs_diff_eq!(induced_leakage_rate(theta), 0.02, epsilon = 1e-15);
    }

    #[test]
    fn no_leakage_stays_clean() {
        let m = LeakageRoundModel::new(0.0, 0.3).unwrap();
        assert!(repeated_lru_rounds(&m, 20, false).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn steady_state_examples() {
        let m = LeakageRoundModel::new(0.0, 0.2).unwrap();
        assert_eq!(steady_state_leakage(&m, false).unwrap(), 0.0);
        let m = LeakageRoundModel::new(0.1, 0.0).unwrap();
        assert_eq!(steady_state_leakage(&m, false).unwrap(), 1.0);
        let m = LeakageRoundModel::new(0.02, 0.105).unwrap();
        assert_abs_diff_eq!(steady_state_leakage(&m, false).unwrap(), 0.16, epsilon = 1e-12);
        let m = LeakageRoundModel::new(0.0, 0.0).unwrap();
        assert!(steady_state_leakage(&m, false).is_err());
    }

    #[test]
    fn seepage_fit() {
        assert_abs_diff_eq!(fit_seepage(0.02, 0.16).unwrap(), 0.105, epsilon = 1e-12);
    }

    #[test]
    fn affine_mapping_round_trips() {
        let m = LeakageRoundModel::new(0.03, 0.2).unwrap();
        let (a, b) = (m.step(0.0, false), m.step(1.0, false) - m.step(0.0, false));
        let back = LeakageRoundModel::from_affine(a, b).unwrap();
        assert_abs_diff_eq!(back.leakage_rate, 0.03, epsilon = 1e-15);
        assert_abs_diff_eq!(back.seepage_rate, 0.2, epsilon = 1e-15);
    }
}
