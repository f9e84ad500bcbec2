use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, destroy, number, CMat, C64};
use crate::paritycheck::register::{Layout, QuditRegister};

/// Tolerance on `Σ K†K = I` for compiled channels.
pub const CPTP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

/// Circuit element on one or two transmons of a register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// Rotation on {g, e} followed by depolarizing noise of average infidelity `error`.
    SingleQubitRotation {
        target: usize,
        axis: RotationAxis,
        angle: f64,
        #[serde(default)]
        error: f64,
    },
    /// CZ between `high` (the partner that leaks to |f⟩) and `low`.
    Cz {
        high: usize,
        low: usize,
        /// Probability of |ee⟩ → |fg⟩.
        #[serde(default)]
        leakage: f64,
        /// Average infidelity, applied as two-qubit depolarizing noise.
        #[serde(default)]
        error: f64,
        /// Probability of exchanging an |f⟩ with a computational partner.
        #[serde(default)]
        mobility: f64,
        /// Conditional phase when one partner is leaked and the other excited.
        #[serde(default)]
        leaked_phase: f64,
    },
    Idle {
        target: usize,
        duration: f64,
        t1: f64,
        t2: f64,
    },
    /// Incoherent |f⟩ → |g⟩ and |h⟩ → |e⟩ transfer, Stark phase, then idling.
    Lru {
        target: usize,
        r_f: f64,
        #[serde(default)]
        r_h: f64,
        #[serde(default)]
        stark_phase: f64,
        #[serde(default = "default_true")]
        corrected: bool,
        duration: f64,
        t1: f64,
        t2: f64,
        /// Leakage {g, e} → f injected concurrently with the removal.
        #[serde(default)]
        injected_leakage: f64,
    },
    /// X(π) on {g, e}.
    Echo {
        target: usize,
        #[serde(default)]
        error: f64,
    },
    /// Incoherent {g, e} → f transfer.
    LeakageInjection { target: usize, probability: f64 },
}

fn default_true() -> bool {
    true
}

/// Kraus set acting on a subset of sites.
#[derive(Debug, Clone)]
pub(crate) struct KrausOp {
    pub layout: Layout,
    pub kraus: Vec<CMat>,
}

/// Sequence of Kraus sets.
#[derive(Debug, Clone)]
pub struct Channel {
    pub(crate) ops: Vec<KrausOp>,
}

impl Channel {
    pub fn apply(&self, reg: &QuditRegister) -> QuditRegister {
        QuditRegister {
            dims: reg.dims.clone(),
            rho: self.apply_rho(&reg.rho),
        }
    }

    pub(crate) fn apply_rho(&self, rho: &CMat) -> CMat {
        let mut rho = rho.clone();
        for op in &self.ops {
            let mut next = CMat::zeros(rho.nrows(), rho.ncols());
            for k in &op.kraus {
                next += op.layout.conjugate(k, &rho);
            }
            rho = next;
        }
        rho
    }

    /// Largest `‖Σ K†K − I‖` over the Kraus sets.
    pub fn cptp_defect(&self) -> f64 {
        self.ops.iter().map(|op| completeness_defect(&op.kraus)).fold(0.0, f64::max)
    }

    pub fn kraus_count(&self) -> usize {
        self.ops.iter().map(|op| op.kraus.len()).sum()
    }
}

fn completeness_defect(kraus: &[CMat]) -> f64 {
    let d = kraus[0].nrows();
    let mut sum = CMat::zeros(d, d);
    for k in kraus {
        sum += k.adjoint() * k;
    }
    (sum - CMat::identity(d, d)).norm()
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("{name} = {p} outside [0, 1]")));
    }
    Ok(())
}

fn single(dims: &[usize], target: usize, kraus: Vec<CMat>) -> Result<KrausOp> {
    Ok(KrausOp {
        layout: Layout::new(dims, &[target])?,
        kraus,
    })
}

/// Embeds a 2×2 operator on {g, e} into `d` levels, identity elsewhere.
pub(crate) fn embed_qubit(u: &[[C64; 2]; 2], d: usize) -> CMat {
    let mut m = CMat::identity(d, d);
    for a in 0..2 {
        for b in 0..2 {
            m[(a, b)] = u[a][b];
        }
    }
    m
}

pub(crate) fn rotation(axis: RotationAxis, angle: f64) -> [[C64; 2]; 2] {
    let (cs, sn) = ((0.5 * angle).cos(), (0.5 * angle).sin());
    match axis {
        RotationAxis::X => [[c(cs, 0.0), c(0.0, -sn)], [c(0.0, -sn), c(cs, 0.0)]],
        RotationAxis::Y => [[c(cs, 0.0), c(-sn, 0.0)], [c(sn, 0.0), c(cs, 0.0)]],
        RotationAxis::Z => [[c(cs, -sn), c(0.0, 0.0)], [c(0.0, 0.0), c(cs, sn)]],
    }
}

fn paulis() -> [[[C64; 2]; 2]; 4] {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    [[[l, o], [o, l]], [[o, l], [l, o]], [[o, -i], [i, o]], [[l, o], [o, -l]]]
}

/// Depolarizing noise on {g, e} with average gate infidelity `r`.
fn depolarizing_1q(d: usize, r: f64) -> Result<Vec<CMat>> {
    let each = r / 2.0;
    if !(0.0..=2.0 / 3.0).contains(&r) {
        return Err(Error::param(format!("single-qubit error {r} outside [0, 2/3]")));
    }
    let p = paulis();
    let mut out = vec![embed_qubit(&p[0], d) * c((1.0 - 3.0 * each).sqrt(), 0.0)];
    if each > 0.0 {
        for pk in &p[1..] {
            out.push(embed_qubit(pk, d) * c(each.sqrt(), 0.0));
        }
    }
    Ok(out)
}

/// Two-qubit depolarizing noise on the computational subspaces with average infidelity `r`.
fn depolarizing_2q(d1: usize, d2: usize, r: f64) -> Result<Vec<CMat>> {
    if !(0.0..=0.75).contains(&r) {
        return Err(Error::param(format!("two-qubit error {r} outside [0, 3/4]")));
    }
    let each = r / 12.0;
    let p = paulis();
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            let w = if a == 0 && b == 0 { 1.0 - 15.0 * each } else { each };
            if w > 0.0 {
                out.push(embed_qubit(&p[a], d1).kronecker(&embed_qubit(&p[b], d2)) * c(w.sqrt(), 0.0));
            }
        }
    }
    Ok(out)
}

/// Kraus operators of multi-level amplitude damping and dephasing for `duration`.
///
/// Decay `k → k−1` runs at `k/T1`; level coherences `(j, k)` dephase at `(j−k)²·γ_φ`.
pub fn idle_kraus(d: usize, duration: f64, t1: f64, t2: f64) -> Result<Vec<CMat>> {
    if !(duration >= 0.0) {
        return Err(Error::param(format!("idle duration {duration} must be ≥ 0")));
    }
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::param("t1 and t2 must be positive"));
    }
    let gamma1 = if t1.is_finite() { 1.0 / t1 } else { 0.0 };
    let inv_t2 = if t2.is_finite() { 1.0 / t2 } else { 0.0 };
    let gamma_phi = inv_t2 - 0.5 * gamma1;
    if gamma_phi < -1e-15 {
        return Err(Error::param(format!("t2 = {t2} exceeds 2·t1 = {}", 2.0 * t1)));
    }
    if duration == 0.0 || (gamma1 == 0.0 && gamma_phi <= 0.0) {
        return Ok(vec![CMat::identity(d, d)]);
    }
    let mut collapse = vec![destroy(d) * c(gamma1.sqrt(), 0.0)];
    if gamma_phi > 0.0 {
        collapse.push(number(d) * c((2.0 * gamma_phi).sqrt(), 0.0));
    }
    // Column-stacking: vec(AρB) = (Bᵀ ⊗ A) vec(ρ).
    let id = CMat::identity(d, d);
    let mut liouv = CMat::zeros(d * d, d * d);
    for l in &collapse {
        let ldl = l.adjoint() * l;
        liouv += l.conjugate().kronecker(l);
        liouv -= id.kronecker(&ldl) * c(0.5, 0.0);
        liouv -= ldl.transpose().kronecker(&id) * c(0.5, 0.0);
    }
    let prop = (liouv * c(duration, 0.0)).exp();
    // Choi matrix C[(i,a),(j,b)] = ⟨a|E(|i⟩⟨j|)|b⟩.
    let mut choi = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let col = prop.column(j * d + i);
            for a in 0..d {
                for b in 0..d {
                    choi[(i * d + a, j * d + b)] = col[b * d + a];
                }
            }
        }
    }
    let (vals, vecs) = crate::linalg::eigh(&choi);
    let scale = vals.iter().cloned().fold(0.0, f64::max);
    let mut kraus = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        if v > 1e-14 * scale {
            let vec = vecs.column(k);
            kraus.push(CMat::from_fn(d, d, |a, i| vec[i * d + a] * c(v.sqrt(), 0.0)));
        }
    }
    Ok(kraus)
}

fn lru_transfer(d: usize, r_f: f64, r_h: f64, leak: f64) -> Vec<CMat> {
    let mut k0 = CMat::identity(d, d);
    k0[(0, 0)] = c((1.0 - leak).sqrt(), 0.0);
    k0[(1, 1)] = c((1.0 - leak).sqrt(), 0.0);
    k0[(2, 2)] = c((1.0 - r_f).sqrt(), 0.0);
    if d > 3 {
        k0[(3, 3)] = c((1.0 - r_h).sqrt(), 0.0);
    }
    let mut out = vec![k0];
    let mut jump = |from: usize, to: usize, p: f64| {
        if p > 0.0 {
            let mut k = CMat::zeros(d, d);
            k[(to, from)] = c(p.sqrt(), 0.0);
            out.push(k);
        }
    };
    jump(2, 0, r_f);
    if d > 3 {
        jump(3, 1, r_h);
    }
    jump(0, 2, leak);
    jump(1, 2, leak);
    out
}

fn cz_ops(dims: &[usize], high: usize, low: usize, leakage: f64, error: f64, mobility: f64, leaked_phase: f64) -> Result<Vec<KrausOp>> {
    check_probability("cz leakage", leakage)?;
    check_probability("leakage mobility", mobility)?;
    let (dh, dl) = (dims[high], dims[low]);
    let layout = Layout::new(dims, &[high, low])?;
    let n = dh * dl;
    let idx = |a: usize, b: usize| a * dl + b;
    let mut ops = Vec::new();

    if leakage > 0.0 {
        if dh < 3 {
            return Err(Error::param("CZ leakage needs an |f⟩ level on the high partner"));
        }
        let mut k0 = CMat::identity(n, n);
        k0[(idx(1, 1), idx(1, 1))] = c((1.0 - leakage).sqrt(), 0.0);
        let mut k1 = CMat::zeros(n, n);
        k1[(idx(2, 0), idx(1, 1))] = c(leakage.sqrt(), 0.0);
        ops.push(KrausOp {
            layout: layout.clone(),
            kraus: vec![k0, k1],
        });
    }

    let mut phase = CMat::identity(n, n);
    for a in 0..dh {
        for b in 0..dl {
            let phi = match (a, b) {
                (1, 1) => PI,
                (a, b) if a.min(b) >= 1 => leaked_phase,
                _ => 0.0,
            };
            phase[(idx(a, b), idx(a, b))] = C64::from_polar(1.0, phi);
        }
    }
    ops.push(KrausOp {
        layout: layout.clone(),
        kraus: vec![phase],
    });

    if error > 0.0 {
        ops.push(KrausOp {
            layout: layout.clone(),
            kraus: depolarizing_2q(dh, dl, error)?,
        });
    }

    if mobility > 0.0 {
        if dh < 3 || dl < 3 {
            return Err(Error::param("leakage mobility needs |f⟩ on both partners"));
        }
        let mut k0 = CMat::identity(n, n);
        let mut swap = CMat::zeros(n, n);
        for x in 0..2 {
            k0[(idx(2, x), idx(2, x))] = c((1.0 - mobility).sqrt(), 0.0);
            k0[(idx(x, 2), idx(x, 2))] = c((1.0 - mobility).sqrt(), 0.0);
            swap[(idx(x, 2), idx(2, x))] = c(mobility.sqrt(), 0.0);
            swap[(idx(2, x), idx(x, 2))] = c(mobility.sqrt(), 0.0);
        }
        ops.push(KrausOp {
            layout,
            kraus: vec![k0, swap],
        });
    }
    Ok(ops)
}

impl ChannelSpec {
    pub fn compile(&self, dims: &[usize]) -> Result<Channel> {
        let site_dim = |t: usize| -> Result<usize> {
            dims.get(t)
                .copied()
                .ok_or_else(|| Error::param(format!("target {t} outside a {}-site register", dims.len())))
        };
        let ops = match *self {
            ChannelSpec::SingleQubitRotation { target, axis, angle, error } => {
                let d = site_dim(target)?;
                let mut ops = vec![single(dims, target, vec![embed_qubit(&rotation(axis, angle), d)])?];
                if error > 0.0 {
                    ops.push(single(dims, target, depolarizing_1q(d, error)?)?);
                }
                ops
            }
            ChannelSpec::Echo { target, error } => {
                return ChannelSpec::SingleQubitRotation {
                    target,
                    axis: RotationAxis::X,
                    angle: PI,
                    error,
                }
                .compile(dims)
            }
            ChannelSpec::Cz {
                high,
                low,
                leakage,
                error,
                mobility,
                leaked_phase,
            } => {
                site_dim(high)?;
                site_dim(low)?;
                cz_ops(dims, high, low, leakage, error, mobility, leaked_phase)?
            }
            ChannelSpec::Idle { target, duration, t1, t2 } => {
                vec![single(dims, target, idle_kraus(site_dim(target)?, duration, t1, t2)?)?]
            }
            ChannelSpec::Lru {
                target,
                r_f,
                r_h,
                stark_phase,
                corrected,
                duration,
                t1,
                t2,
                injected_leakage,
            } => {
                let d = site_dim(target)?;
                check_probability("r_f", r_f)?;
                check_probability("r_h", r_h)?;
                check_probability("injected leakage", injected_leakage)?;
                if d < 3 {
                    return Err(Error::param("an LRU needs an |f⟩ level"));
                }
                if r_h > 0.0 && d < 4 {
                    return Err(Error::param(format!("r_h = {r_h} on a {d}-level transmon")));
                }
                let mut ops = vec![single(dims, target, lru_transfer(d, r_f, r_h, injected_leakage))?];
                if !corrected && stark_phase != 0.0 {
                    ops.push(single(dims, target, vec![embed_qubit(&rotation(RotationAxis::Z, stark_phase), d)])?);
                }
                ops.push(single(dims, target, idle_kraus(d, duration, t1, t2)?)?);
                ops
            }
            ChannelSpec::LeakageInjection { target, probability } => {
                let d = site_dim(target)?;
                check_probability("injected leakage", probability)?;
                if d < 3 {
                    return Err(Error::param("leakage injection needs an |f⟩ level"));
                }
                vec![single(dims, target, lru_transfer(d, 0.0, 0.0, probability))?]
            }
        };
        let ops: Vec<KrausOp> = ops
            .into_iter()
            .map(|mut op| {
                op.kraus.retain(|k| k.norm() > 1e-14);
                // Likely branches first, for trajectory sampling.
                op.kraus.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
                op
            })
            .filter(|op| {
                let d = op.layout.local_dim;
                !(op.kraus.len() == 1 && (&op.kraus[0] - CMat::identity(d, d)).norm() < 1e-15)
            })
            .collect();
        let channel = Channel { ops };
        let defect = channel.cptp_defect();
        if defect > CPTP_TOLERANCE {
            return Err(Error::NotCptp(defect));
        }
        Ok(channel)
    }
}

/// Applies one circuit element to a register.
pub fn apply_channel(reg: &QuditRegister, spec: &ChannelSpec) -> Result<QuditRegister> {
    Ok(spec.compile(&reg.dims)?.apply(reg))
}

/// LRU on one transmon of a register, with no decoherence during the pulse.
pub fn lru_channel(
    reg: &QuditRegister,
    target: usize,
    r_f: f64,
    r_h: f64,
    stark_phase: f64,
    corrected: bool,
) -> Result<QuditRegister> {
    apply_channel(
        reg,
        &ChannelSpec::Lru {
            target,
            r_f,
            r_h,
            stark_phase,
            corrected,
            duration: 0.0,
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            injected_leakage: 0.0,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIMS: [usize; 3] = [3, 4, 3];

    fn pops(reg: &QuditRegister, site: usize) -> Vec<f64> {
        reg.populations(site)
    }

    #[test]
    fn x_pi_flips_and_leaves_leakage() {
        let reg = QuditRegister::basis(&DIMS, &[0, 2, 0]).unwrap();
        let out = apply_channel(&reg, &ChannelSpec::Echo { target: 0, error: 0.0 }).unwrap();
        assert!((pops(&out, 0)[1] - 1.0).abs() < 1e-15);
        let out = apply_channel(&out, &ChannelSpec::Echo { target: 1, error: 0.0 }).unwrap();
        assert!((pops(&out, 1)[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn idle_for_t1_leaves_one_over_e() {
        let reg = QuditRegister::basis(&DIMS, &[1, 0, 0]).unwrap();
        let spec = ChannelSpec::Idle {
            target: 0,
            duration: 20e3,
            t1: 20e3,
            t2: 15e3,
        };
        let out = apply_channel(&reg, &spec).unwrap();
        assert!((pops(&out, 0)[1] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn idle_matches_closed_form_rates() {
        let (t1, t2, t) = (17e3, 19e3, 500.0);
        let k = idle_kraus(4, t, t1, t2).unwrap();
        let apply = |rho: &CMat| k.iter().fold(CMat::zeros(4, 4), |acc, m| acc + m * rho * m.adjoint());
        // f decays to e at 2/T1.
        let mut rho = CMat::zeros(4, 4);
        rho[(2, 2)] = c(1.0, 0.0);
        assert!((apply(&rho)[(2, 2)].re - (-2.0 * t / t1).exp()).abs() < 1e-12);
        // g–e coherence decays at 1/T2.
        let mut rho = CMat::zeros(4, 4);
        rho[(0, 0)] = c(0.5, 0.0);
        rho[(1, 1)] = c(0.5, 0.0);
        rho[(0, 1)] = c(0.5, 0.0);
        rho[(1, 0)] = c(0.5, 0.0);
        assert!((apply(&rho)[(0, 1)].re - 0.5 * (-t / t2).exp()).abs() < 1e-12);
        assert!(completeness_defect(&k) < 1e-12);
    }

    #[test]
    fn cz_leakage_on_ee() {
        let reg = QuditRegister::basis(&DIMS, &[1, 1, 0]).unwrap();
        let spec = ChannelSpec::Cz {
            high: 0,
            low: 1,
            leakage: 0.0037,
            error: 0.0,
            mobility: 0.0,
            leaked_phase: 0.0,
        };
        let out = apply_channel(&reg, &spec).unwrap();
        let fg = out.rho[(2 * 12, 2 * 12)].re;
        assert!((fg - 0.0037).abs() < 1e-15);
        assert!((out.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cz_phase_on_superposition() {
        let s = 1.0 / 2f64.sqrt();
        let plus4 = crate::linalg::CVec::from_vec(vec![c(s, 0.0), c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e3 = crate::linalg::CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let g3 = crate::linalg::CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let reg = QuditRegister::from_product(&DIMS, &[e3, plus4, g3.clone()]).unwrap();
        let spec = ChannelSpec::Cz {
            high: 0,
            low: 1,
            leakage: 0.0,
            error: 0.0,
            mobility: 0.0,
            leaked_phase: 0.0,
        };
        let out = apply_channel(&reg, &spec).unwrap();
        let anc = out.partial_state(&[1]).unwrap();
        assert!((anc[(0, 1)].re + 0.5).abs() < 1e-15);
    }

    #[test]
    fn mobility_exchanges_leakage() {
        let reg = QuditRegister::basis(&DIMS, &[2, 1, 0]).unwrap();
        let spec = ChannelSpec::Cz {
            high: 0,
            low: 1,
            leakage: 0.0,
            error: 0.0,
            mobility: 0.25,
            leaked_phase: 0.0,
        };
        let out = apply_channel(&reg, &spec).unwrap();
        assert!((pops(&out, 1)[2] - 0.25).abs() < 1e-15);
        assert!((pops(&out, 0)[2] - 0.75).abs() < 1e-15);
        assert!((pops(&out, 0)[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lru_examples() {
        let reg = QuditRegister::basis(&DIMS, &[2, 0, 0]).unwrap();
        let out = lru_channel(&reg, 0, 1.0, 0.0, 0.0, true).unwrap();
        assert!((pops(&out, 0)[0] - 1.0).abs() < 1e-15);

        let idle = lru_channel(&reg, 0, 0.0, 0.0, 0.3, true).unwrap();
        assert!((idle.rho.clone() - reg.rho.clone()).norm() < 1e-15);

        assert!(lru_channel(&reg, 0, 0.9, 0.5, 0.0, true).is_err());

        // Mixed f/h population on the ancilla.
        let mut rho = CMat::zeros(36, 36);
        let f = 2 * 3;
        let h = 3 * 3;
        rho[(f, f)] = c(0.6, 0.0);
        rho[(h, h)] = c(0.4, 0.0);
        let reg = QuditRegister {
            dims: DIMS.to_vec(),
            rho,
        };
        let out = lru_channel(&reg, 1, 0.992, 0.961, 0.0, true).unwrap();
        let p = pops(&out, 1);
        assert!((p[2] - 0.6 * 0.008).abs() < 1e-15);
        assert!((p[3] - 0.4 * 0.039).abs() < 1e-15);
        assert!((p[0] - 0.6 * 0.992).abs() < 1e-15);
        assert!((p[1] - 0.4 * 0.961).abs() < 1e-15);
    }

    #[test]
    fn uncorrected_stark_phase_rotates_qubit() {
        let s = 1.0 / 2f64.sqrt();
        let plus = crate::linalg::CVec::from_vec(vec![c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]);
        let g4 = crate::linalg::CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let g3 = crate::linalg::CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let reg = QuditRegister::from_product(&DIMS, &[plus, g4, g3]).unwrap();
        let out = lru_channel(&reg, 0, 0.5, 0.0, 0.4, false).unwrap();
        let q = out.partial_state(&[0]).unwrap();
        assert!((q[(0, 1)].arg() + 0.4).abs() < 1e-12);
    }

    #[test]
    fn every_kind_is_cptp() {
        let specs = vec![
            ChannelSpec::SingleQubitRotation {
                target: 1,
                axis: RotationAxis::Y,
                angle: 0.7,
                error: 0.001,
            },
            ChannelSpec::Cz {
                high: 1,
                low: 2,
                leakage: 0.01,
                error: 0.02,
                mobility: 0.25,
                leaked_phase: 1.0,
            },
            ChannelSpec::Idle {
                target: 1,
                duration: 340.0,
                t1: 26e3,
                t2: 22e3,
            },
            ChannelSpec::Lru {
                target: 1,
                r_f: 0.99,
                r_h: 0.96,
                stark_phase: 0.2,
                corrected: false,
                duration: 220.0,
                t1: 26e3,
                t2: 22e3,
                injected_leakage: 0.02,
            },
            ChannelSpec::LeakageInjection {
                target: 2,
                probability: 0.1,
            },
        ];
        for s in specs {
            let ch = s.compile(&DIMS).unwrap();
            assert!(ch.cptp_defect() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = ChannelSpec::Cz {
            high: 0,
            low: 1,
            leakage: 1.5,
            error: 0.0,
            mobility: 0.0,
            leaked_phase: 0.0,
        };
        assert!(bad.compile(&DIMS).is_err());
        let bad = ChannelSpec::Idle {
            target: 5,
            duration: 1.0,
            t1: 1.0,
            t2: 1.0,
        };
        assert!(bad.compile(&DIMS).is_err());
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let s = ChannelSpec::Echo { target: 2, error: 0.0 };
        let text = toml::to_string(&s).unwrap();
        assert_eq!(toml::from_str::<ChannelSpec>(&text).unwrap(), s);
    }
}
