//! Single- and double-check benchmarks of the parity check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::paritycheck::circuit::{CompiledRound, LruMode};
use crate::paritycheck::noise::{NoiseConfig, D1, D2, REGISTER_DIMS};
use crate::paritycheck::register::QuditRegister;
use crate::paritycheck::simulate::{level, raw_bit, x_state};

/// Unnormalized register states for every raw-outcome history.
fn histories(noise: &NoiseConfig, init: &QuditRegister, n_checks: usize) -> Result<Vec<(Vec<u8>, CMat)>> {
    let round = CompiledRound::new(noise, LruMode::None, false)?;
    let mut branches = vec![(Vec::new(), init.rho.clone())];
    for _ in 0..n_checks {
        let mut next: Vec<(Vec<u8>, CMat)> = Vec::new();
        for (hist, rho) in branches {
            let rho = round.before.iter().fold(rho, |r, ch| ch.apply_rho(&r));
            for m in 0..round.instrument.outcomes() {
                let b = round.instrument.branch(&rho, m);
                let mut h = hist.clone();
                h.push(raw_bit(m));
                let b = round.after.iter().fold(b, |r, ch| ch.apply_rho(&r));
                match next.iter_mut().find(|(k, _)| *k == h) {
                    Some((_, acc)) => *acc += b,
                    None => next.push((h, b)),
                }
            }
        }
        branches = next;
    }
    Ok(branches)
}

fn trace(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Stabilizer value of check `k` (0-based) from the raw history.
fn stabilizer(hist: &[u8], k: usize) -> i8 {
    let prev = if k == 0 { 0 } else { hist[k - 1] };
    if hist[k] ^ prev == 0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityInput {
    /// Data levels at the CZ gates, e.g. "01".
    pub input: String,
    pub expected: i8,
    pub mean_outcome: f64,
    /// Probability of the expected outcome.
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityAssignment {
    pub inputs: Vec<ParityInput>,
    pub mean_fidelity: f64,
}

/// One check for each computational input of the data register. The data
/// are prepared so that the pre-rotations bring them to `|ab⟩`.
pub fn parity_assignment_experiment(noise: &NoiseConfig) -> Result<ParityAssignment> {
    let mut inputs = Vec::new();
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        // Ry(−π/2)|0⟩ = |−⟩ and Ry(−π/2)|1⟩ = |+⟩.
        let prep = |bit: usize| x_state(3, if bit == 0 { -1.0 } else { 1.0 });
        let reg = QuditRegister::from_product(&REGISTER_DIMS, &[prep(a), level(4, 0), prep(b)])?;
        let expected: i8 = if a == b { 1 } else { -1 };
        let mut mean = 0.0;
        let mut hit = 0.0;
        for (hist, rho) in histories(noise, &reg, 1)? {
            let p = trace(&rho);
            let m = stabilizer(&hist, 0);
            mean += p * m as f64;
            if m == expected {
                hit += p;
            }
        }
        inputs.push(ParityInput {
            input: format!("{a}{b}"),
            expected,
            mean_outcome: mean,
            fidelity: hit,
        });
    }
    let mean_fidelity = inputs.iter().map(|i| i.fidelity).sum::<f64>() / inputs.len() as f64;
    Ok(ParityAssignment { inputs, mean_fidelity })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellBranch {
    /// First stabilizer outcome.
    pub m1: i8,
    pub probability: f64,
    /// Fidelity of the data state to the noiseless conditional state.
    pub fidelity: f64,
    /// Normalized D1 ⊗ D2 state over 3 × 3 levels.
    #[serde(skip)]
    pub data_state: CMat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellResult {
    pub n_checks: usize,
    pub branches: Vec<BellBranch>,
    pub mean_fidelity: f64,
    /// For two checks, probability that the second raw ancilla outcome is +1,
    /// i.e. that both checks report the same parity.
    pub p_m2_plus: Option<f64>,
}

/// Data state conditioned on the first outcome, summed over later outcomes.
fn conditioned(hists: &[(Vec<u8>, CMat)], m1: i8) -> Result<(f64, CMat)> {
    let reg_dims = REGISTER_DIMS.to_vec();
    let mut acc: Option<CMat> = None;
    for (_, rho) in hists.iter().filter(|(h, _)| stabilizer(h, 0) == m1) {
        let data = QuditRegister {
            dims: reg_dims.clone(),
            rho: rho.clone(),
        }
        .partial_state(&[D1, D2])?;
        acc = Some(match acc {
            Some(a) => a + data,
            None => data,
        });
    }
    let rho = acc.unwrap_or_else(|| CMat::zeros(9, 9));
    let p = trace(&rho);
    Ok((p, if p > 0.0 { rho / c(p, 0.0) } else { rho }))
}

/// Bell-state generation by one or two checks on data prepared so that the
/// pre-rotations bring them to |++⟩.
pub fn bell_state_experiment(noise: &NoiseConfig, n_checks: usize) -> Result<BellResult> {
    if !(1..=2).contains(&n_checks) {
        return Err(Error::param(format!("n_checks = {n_checks}; expected 1 or 2")));
    }
    let reg = QuditRegister::from_product(&REGISTER_DIMS, &[level(3, 0), level(4, 0), level(3, 0)])?;
    let noisy = histories(noise, &reg, n_checks)?;
    let ideal = histories(&NoiseConfig::noiseless(), &reg, n_checks)?;
    let mut branches = Vec::new();
    for m1 in [1i8, -1] {
        let (p, rho) = conditioned(&noisy, m1)?;
        let (_, target) = conditioned(&ideal, m1)?;
        let fidelity = (target.adjoint() * &rho).trace().re;
        branches.push(BellBranch {
            m1,
            probability: p,
            fidelity,
            data_state: rho,
        });
    }
    let mean_fidelity = branches.iter().map(|b| b.fidelity).sum::<f64>() / branches.len() as f64;
    let p_m2_plus = (n_checks == 2).then(|| {
        noisy
            .iter()
            .filter(|(h, _)| h[1] == 0)
            .map(|(_, rho)| trace(rho))
            .sum()
    });
    Ok(BellResult {
        n_checks,
        branches,
        mean_fidelity,
        p_m2_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_assignment_is_perfect() {
        let r = parity_assignment_experiment(&NoiseConfig::noiseless()).unwrap();
        for i in &r.inputs {
            assert!((i.mean_outcome - i.expected as f64).abs() < 1e-12, "{i:?}");
        }
        assert_eq!(r.inputs[0].expected, 1);
        assert_eq!(r.inputs[1].expected, -1);
        assert!((r.mean_fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_bell_states() {
        for n in [1, 2] {
            let r = bell_state_experiment(&NoiseConfig::noiseless(), n).unwrap();
            for b in &r.branches {
                assert!((b.probability - 0.5).abs() < 1e-12);
                assert!((b.fidelity - 1.0).abs() < 1e-12);
                // Maximally entangled: reduced D1 state is I/2 on {g, e}.
                let purity = (&b.data_state * &b.data_state).trace().re;
                assert!((purity - 1.0).abs() < 1e-12);
            }
            if n == 2 {
                assert!((r.p_m2_plus.unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!(bell_state_experiment(&NoiseConfig::noiseless(), 3).is_err());
    }
}
