use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec, C64};
use crate::paritycheck::channel::Channel;
use crate::paritycheck::circuit::{CompiledRound, LruMode};
use crate::paritycheck::instrument::Instrument;
use crate::paritycheck::noise::{NoiseConfig, ANCILLA, D1, D2, REGISTER_DIMS};
use crate::paritycheck::register::{product_state, site_populations, QuditRegister};

/// Initial X-basis state of the two data qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DataState {
    #[default]
    #[serde(rename = "++")]
    PlusPlus,
    #[serde(rename = "+-")]
    PlusMinus,
    #[serde(rename = "-+")]
    MinusPlus,
    #[serde(rename = "--")]
    MinusMinus,
}

impl DataState {
    fn signs(self) -> (f64, f64) {
        match self {
            DataState::PlusPlus => (1.0, 1.0),
            DataState::PlusMinus => (1.0, -1.0),
            DataState::MinusPlus => (-1.0, 1.0),
            DataState::MinusMinus => (-1.0, -1.0),
        }
    }

    /// Expected stabilizer value of the prepared state.
    pub fn parity(self) -> i8 {
        let (a, b) = self.signs();
        (a * b) as i8
    }

    /// Register with the data in this state and the ancilla in |g⟩.
    pub fn register(self) -> Result<QuditRegister> {
        let (a, b) = self.signs();
        QuditRegister::from_product(&REGISTER_DIMS, &[x_state(3, a), level(4, 0), x_state(3, b)])
    }
}

pub(crate) fn level(d: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[k] = c(1.0, 0.0);
    v
}

pub(crate) fn x_state(d: usize, sign: f64) -> CVec {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVec::zeros(d);
    v[0] = c(s, 0.0);
    v[1] = c(sign * s, 0.0);
    v
}

/// Raw ancilla bit: 0 when |g⟩ is declared, 1 otherwise.
pub fn raw_bit(declared: usize) -> u8 {
    u8::from(declared != 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LeakagePopulations {
    pub d1_f: f64,
    pub d2_f: f64,
    pub a_f: f64,
    pub a_h: f64,
}

impl LeakagePopulations {
    /// `P_f + P_h` of the ancilla.
    pub fn a_total(&self) -> f64 {
        self.a_f + self.a_h
    }

    fn from_diagonal(diag: &[f64]) -> Self {
        let d1 = site_populations(&REGISTER_DIMS, D1, diag.iter().copied());
        let a = site_populations(&REGISTER_DIMS, ANCILLA, diag.iter().copied());
        let d2 = site_populations(&REGISTER_DIMS, D2, diag.iter().copied());
        LeakagePopulations {
            d1_f: d1[2],
            d2_f: d2[2],
            a_f: a[2],
            a_h: a[3],
        }
    }

    fn add(&mut self, o: &LeakagePopulations, w: f64) {
        self.d1_f += w * o.d1_f;
        self.d2_f += w * o.d2_f;
        self.a_f += w * o.a_f;
        self.a_h += w * o.a_h;
    }
}

/// Per-round statistics of a repeated parity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundSeries {
    pub lru_mode: LruMode,
    /// Zero for the exact density-matrix run.
    pub n_trajectories: usize,
    pub round_duration: f64,
    pub defect_prob: Vec<f64>,
    /// Leakage at the end of each round.
    pub leakage: Vec<LeakagePopulations>,
    /// Stabilizer values ±1, `outcomes[trajectory][round]`; empty for exact runs.
    #[serde(skip)]
    pub outcomes: Vec<Vec<i8>>,
}

impl RoundSeries {
    pub fn rounds(&self) -> usize {
        self.defect_prob.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundsOptions {
    pub n_rounds: usize,
    pub lru_mode: LruMode,
    /// Zero selects the exact density-matrix run.
    pub n_trajectories: usize,
    pub seed: u64,
    #[serde(default)]
    pub data_state: DataState,
    /// Rounds (1-based) in which an X error hits the ancilla before measurement.
    #[serde(default)]
    pub forced_ancilla_flips: Vec<usize>,
}

impl RoundsOptions {
    pub fn new(n_rounds: usize, lru_mode: LruMode, n_trajectories: usize, seed: u64) -> Self {
        RoundsOptions {
            n_rounds,
            lru_mode,
            n_trajectories,
            seed,
            data_state: DataState::PlusPlus,
            forced_ancilla_flips: Vec::new(),
        }
    }
}

/// `d_t = P(m_t ≠ m_{t−1})`, with `m_0` the prepared parity.
pub fn defect_probability(outcomes: &[Vec<i8>], initial_parity: i8) -> Result<Vec<f64>> {
    let Some(first) = outcomes.first() else {
        return Err(Error::InsufficientData("no outcome sequences".into()));
    };
    let n = first.len();
    if n == 0 {
        return Err(Error::InsufficientData("outcome sequences are empty".into()));
    }
    let mut counts = vec![0usize; n];
    for seq in outcomes {
        if seq.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: seq.len() });
        }
        let mut prev = initial_parity;
        for (t, &m) in seq.iter().enumerate() {
            if m != 1 && m != -1 {
                return Err(Error::param(format!("outcome {m} is not ±1")));
            }
            if m != prev {
                counts[t] += 1;
            }
            prev = m;
        }
    }
    Ok(counts.into_iter().map(|k| k as f64 / outcomes.len() as f64).collect())
}

struct Rounds {
    normal: CompiledRound,
    flipped: Option<CompiledRound>,
}

impl Rounds {
    fn new(noise: &NoiseConfig, opts: &RoundsOptions) -> Result<Self> {
        if opts.n_rounds == 0 {
            return Err(Error::param("need at least one round"));
        }
        Ok(Rounds {
            normal: CompiledRound::new(noise, opts.lru_mode, false)?,
            flipped: if opts.forced_ancilla_flips.is_empty() {
                None
            } else {
                Some(CompiledRound::new(noise, opts.lru_mode, true)?)
            },
        })
    }

    fn get(&self, opts: &RoundsOptions, round: usize) -> &CompiledRound {
        match &self.flipped {
            Some(f) if opts.forced_ancilla_flips.contains(&round) => f,
            _ => &self.normal,
        }
    }
}

pub fn run_parity_rounds(
    noise: &NoiseConfig,
    n_rounds: usize,
    lru_mode: LruMode,
    n_trajectories: usize,
    seed: u64,
) -> Result<RoundSeries> {
    run_parity_rounds_with(noise, &RoundsOptions::new(n_rounds, lru_mode, n_trajectories, seed))
}

pub fn run_parity_rounds_with(noise: &NoiseConfig, opts: &RoundsOptions) -> Result<RoundSeries> {
    if opts.n_trajectories == 0 {
        run_exact(noise, opts)
    } else {
        run_trajectories(noise, opts)
    }
}

fn apply_all(channels: &[Channel], rho: CMat) -> CMat {
    channels.iter().fold(rho, |r, ch| ch.apply_rho(&r))
}

fn diag(rho: &CMat) -> Vec<f64> {
    rho.diagonal().iter().map(|z| z.re).collect()
}

/// Density-matrix run tracking the classical memory (previous raw bit,
/// previous stabilizer) needed for the defect statistics.
fn run_exact(noise: &NoiseConfig, opts: &RoundsOptions) -> Result<RoundSeries> {
    let rounds = Rounds::new(noise, opts)?;
    let s0 = u8::from(opts.data_state.parity() < 0);
    // Branch key: 2·raw + stabilizer bit.
    let mut branches: [Option<CMat>; 4] = Default::default();
    branches[s0 as usize] = Some(opts.data_state.register()?.rho);
    let mut defect_prob = Vec::with_capacity(opts.n_rounds);
    let mut leakage = Vec::with_capacity(opts.n_rounds);
    for t in 1..=opts.n_rounds {
        let round = rounds.get(opts, t);
        let mut next: [Option<CMat>; 4] = Default::default();
        let mut defect = 0.0;
        for (key, rho) in branches.iter().enumerate() {
            let Some(rho) = rho else { continue };
            let (raw_prev, s_prev) = ((key >> 1) as u8, (key & 1) as u8);
            let rho = apply_all(&round.before, rho.clone());
            for m in 0..round.instrument.outcomes() {
                let branch = round.instrument.branch(&rho, m);
                let p: f64 = branch.diagonal().iter().map(|z| z.re).sum();
                if p <= 0.0 {
                    continue;
                }
                let raw = raw_bit(m);
                let s = raw ^ raw_prev;
                if s != s_prev {
                    defect += p;
                }
                let k = (2 * raw + s) as usize;
                next[k] = Some(match next[k].take() {
                    Some(acc) => acc + branch,
                    None => branch,
                });
            }
        }
        let mut leak = LeakagePopulations::default();
        for slot in next.iter_mut() {
            if let Some(rho) = slot.take() {
                let rho = apply_all(&round.after, rho);
                leak.add(&LeakagePopulations::from_diagonal(&diag(&rho)), 1.0);
                *slot = Some(rho);
            }
        }
        branches = next;
        defect_prob.push(defect);
        leakage.push(leak);
    }
    Ok(RoundSeries {
        lru_mode: opts.lru_mode,
        n_trajectories: 0,
        round_duration: rounds.normal.duration,
        defect_prob,
        leakage,
        outcomes: Vec::new(),
    })
}

/// Applies one sampled Kraus branch of each set in `channel`.
fn sample_channel(channel: &Channel, psi: &mut Vec<C64>, scratch: &mut Vec<C64>, rng: &mut ChaCha8Rng) {
    for op in &channel.ops {
        if op.kraus.len() == 1 {
            op.layout.apply_vec(&op.kraus[0], psi, scratch);
            std::mem::swap(psi, scratch);
            continue;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen: Option<f64> = None;
        let mut fallback: Option<(usize, f64)> = None;
        for (k, kraus) in op.kraus.iter().enumerate() {
            op.layout.apply_vec(kraus, psi, scratch);
            let w: f64 = scratch.iter().map(|z| z.norm_sqr()).sum();
            acc += w;
            if w > 0.0 {
                fallback = Some((k, w));
            }
            if u < acc && w > 0.0 {
                chosen = Some(w);
                break;
            }
        }
        let w = match chosen {
            Some(w) => w,
            None => {
                // Rounding left `u` past the total; take the last non-empty branch.
                let (k, w) = fallback.expect("a CPTP set has a non-empty branch");
                op.layout.apply_vec(&op.kraus[k], psi, scratch);
                w
            }
        };
        let norm = 1.0 / w.sqrt();
        for z in scratch.iter_mut() {
            *z *= norm;
        }
        std::mem::swap(psi, scratch);
    }
}

/// Samples the instrument; returns the declared outcome.
fn sample_instrument(inst: &Instrument, psi: &mut [C64], rng: &mut ChaCha8Rng) -> usize {
    let d = inst.layout.local_dim;
    let mut pops = vec![0.0; d];
    for g in &inst.layout.groups {
        for (i, &idx) in g.iter().enumerate() {
            pops[i] += psi[idx].norm_sqr();
        }
    }
    let total: f64 = pops.iter().sum();
    let i = pick(&pops, total, rng);
    let block = inst.eps.input_block(i);
    let mj = pick(block, block.iter().sum(), rng);
    let (m, j) = (mj / d, mj % d);
    let scale = 1.0 / pops[i].sqrt();
    for g in &inst.layout.groups {
        let amp = psi[g[i]] * scale;
        for &idx in g {
            psi[idx] = C64::new(0.0, 0.0);
        }
        psi[g[j]] = amp;
    }
    m
}

fn pick(weights: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

struct Trajectory {
    stabilizers: Vec<i8>,
    leakage: Vec<LeakagePopulations>,
}

fn run_one(rounds: &Rounds, opts: &RoundsOptions, psi0: &[C64], index: usize) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let mut psi = psi0.to_vec();
    let mut scratch = vec![C64::new(0.0, 0.0); psi.len()];
    let mut raw_prev = 0u8;
    let mut stabilizers = Vec::with_capacity(opts.n_rounds);
    let mut leakage = Vec::with_capacity(opts.n_rounds);
    for t in 1..=opts.n_rounds {
        let round = rounds.get(opts, t);
        for ch in &round.before {
            sample_channel(ch, &mut psi, &mut scratch, &mut rng);
        }
        let raw = raw_bit(sample_instrument(&round.instrument, &mut psi, &mut rng));
        stabilizers.push(if raw ^ raw_prev == 0 { 1 } else { -1 });
        raw_prev = raw;
        for ch in &round.after {
            sample_channel(ch, &mut psi, &mut scratch, &mut rng);
        }
        let d: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        leakage.push(LeakagePopulations::from_diagonal(&d));
    }
    Trajectory { stabilizers, leakage }
}

fn run_trajectories(noise: &NoiseConfig, opts: &RoundsOptions) -> Result<RoundSeries> {
    let rounds = Rounds::new(noise, opts)?;
    let (a, b) = opts.data_state.signs();
    let psi0 = product_state(&REGISTER_DIMS, &[x_state(3, a), level(4, 0), x_state(3, b)])?;
    let psi0: Vec<C64> = psi0.iter().copied().collect();
    let runs: Vec<Trajectory> = (0..opts.n_trajectories)
        .into_par_iter()
        .map(|k| run_one(&rounds, opts, &psi0, k))
        .collect();
    let n = runs.len() as f64;
    let mut leakage = vec![LeakagePopulations::default(); opts.n_rounds];
    for r in &runs {
        for (acc, l) in leakage.iter_mut().zip(&r.leakage) {
            acc.add(l, 1.0 / n);
        }
    }
    let outcomes: Vec<Vec<i8>> = runs.into_iter().map(|r| r.stabilizers).collect();
    Ok(RoundSeries {
        lru_mode: opts.lru_mode,
        n_trajectories: opts.n_trajectories,
        round_duration: rounds.normal.duration,
        defect_prob: defect_probability(&outcomes, opts.data_state.parity())?,
        leakage,
        outcomes,
    })
}

/// Long table of several series: one row per (mode, round).
pub fn write_round_series_csv<W: std::io::Write>(series: &[RoundSeries], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "lru_mode", "round", "defect_prob", "pf_d1", "pf_d2", "pf_a", "ph_a", "ptotal_a",
    ])?;
    for s in series {
        for (t, (d, l)) in s.defect_prob.iter().zip(&s.leakage).enumerate() {
            wr.write_record([
                s.lru_mode.name().to_string(),
                (t + 1).to_string(),
                crate::fmt_f64(*d),
                crate::fmt_f64(l.d1_f),
                crate::fmt_f64(l.d2_f),
                crate::fmt_f64(l.a_f),
                crate::fmt_f64(l.a_h),
                crate::fmt_f64(l.a_total()),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defect_examples() {
        assert_eq!(defect_probability(&[vec![1, 1, 1, 1]], 1).unwrap(), vec![0.0; 4]);
        assert_eq!(
            defect_probability(&[vec![1, 1, -1, 1, 1]], 1).unwrap(),
            vec![0.0, 0.0, 1.0, 1.0, 0.0]
        );
        assert_eq!(defect_probability(&[vec![-1, -1]], 1).unwrap(), vec![1.0, 0.0]);
        assert!(defect_probability(&[], 1).is_err());
        assert!(defect_probability(&[vec![1, 0]], 1).is_err());
        assert!(defect_probability(&[vec![1, 1], vec![1]], 1).is_err());
    }

    #[test]
    fn noiseless_rounds_have_no_defects() {
        for state in [DataState::PlusPlus, DataState::PlusMinus] {
            for traj in [0, 50] {
                let mut opts = RoundsOptions::new(6, LruMode::Both, traj, 1);
                opts.data_state = state;
                let s = run_parity_rounds_with(&NoiseConfig::noiseless(), &opts).unwrap();
                assert!(s.defect_prob.iter().all(|&d| d.abs() < 1e-12), "{state:?} {:?}", s.defect_prob);
                if traj > 0 {
                    let want = state.parity();
                    assert!(s.outcomes.iter().flatten().all(|&m| m == want));
                }
            }
        }
    }

    #[test]
    fn forced_ancilla_flip_gives_two_defects() {
        let mut opts = RoundsOptions::new(8, LruMode::None, 0, 0);
        opts.forced_ancilla_flips = vec![4];
        let s = run_parity_rounds_with(&NoiseConfig::noiseless(), &opts).unwrap();
        let expect = [0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        for (d, e) in s.defect_prob.iter().zip(expect) {
            assert!((d - e).abs() < 1e-12, "{:?}", s.defect_prob);
        }
        opts.n_trajectories = 5;
        let s = run_parity_rounds_with(&NoiseConfig::noiseless(), &opts).unwrap();
        assert_eq!(s.defect_prob, expect.to_vec());
    }

    #[test]
    fn trajectories_are_seeded() {
        let noise = NoiseConfig::device();
        let a = run_parity_rounds(&noise, 5, LruMode::Both, 40, 9).unwrap();
        let b = run_parity_rounds(&noise, 5, LruMode::Both, 40, 9).unwrap();
        assert_eq!(a, b);
        let c = run_parity_rounds(&noise, 5, LruMode::Both, 40, 10).unwrap();
        assert_ne!(a.outcomes, c.outcomes);
    }

    #[test]
    fn exact_run_preserves_probability() {
        let noise = NoiseConfig::device();
        let s = run_parity_rounds(&noise, 4, LruMode::Both, 0, 0).unwrap();
        for (d, l) in s.defect_prob.iter().zip(&s.leakage) {
            assert!((0.0..=1.0).contains(d));
            assert!((l.a_total() - l.a_f - l.a_h).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_layout() {
        let s = run_parity_rounds(&NoiseConfig::noiseless(), 3, LruMode::None, 0, 0).unwrap();
        let mut buf = Vec::new();
        write_round_series_csv(&[s.clone(), s], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("lru_mode,round,defect_prob"));
    }
}
