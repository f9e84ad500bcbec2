//! Fixed-step RK4 integration of the Lindblad master equation.
//!
//! The state is propagated in a frame rotating at a single frequency on
//! every mode, `H → H₀ − ω_frame·N`, with the transmon drive kept in the
//! rotating-wave approximation. `N` commutes with H₀, so the frame only
//! rotates coherences between excitation-number manifolds.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::dynamics::pulse::PulseParams;
use crate::dynamics::state::DensityState;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, C64, I, ZERO};
use crate::model::{self, DressedBasis, HilbertSpace, Operator, SystemParams};

/// Collapse operators √κ·c, √(1/T1)·b and √(2γ_φ)·b†b (zero rates omitted).
pub fn collapse_operators(params: &SystemParams) -> Result<Vec<Operator>> {
    params.check_truncation()?;
    let space = params.space();
    let ops = model::mode_operators(&space);
    let mut out = Vec::new();
    let kappa = params.kappa();
    if kappa > 0.0 {
        out.push(Operator::new(&ops.c * c(kappa.sqrt(), 0.0), space.clone())?);
    }
    let gamma1 = params.relaxation_rate();
    if gamma1 > 0.0 {
        out.push(Operator::new(&ops.b * c(gamma1.sqrt(), 0.0), space.clone())?);
    }
    let gphi = params.pure_dephasing_rate().max(0.0);
    if gphi > 0.0 {
        let n = ops.b.adjoint() * &ops.b;
        out.push(Operator::new(n * c((2.0 * gphi).sqrt(), 0.0), space.clone())?);
    }
    Ok(out)
}

/// Static Hamiltonian, collapse operators and (optionally) the dressed basis
/// used for reporting populations.
#[derive(Debug, Clone)]
pub struct OpenSystem {
    pub h0: Operator,
    pub collapse: Vec<Operator>,
    basis: Option<DressedBasis>,
    excitations: Vec<f64>,
    transmon_lowering: CMat,
}

impl OpenSystem {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let h0 = model::build_static_hamiltonian(params)?;
        let collapse = collapse_operators(params)?;
        let mut sys = OpenSystem::from_parts(h0, collapse)?;
        sys.basis = Some(DressedBasis::new(params)?);
        Ok(sys)
    }

    /// System from explicit operators. The first subsystem is the driven
    /// transmon; populations are reported in the bare basis.
    pub fn from_parts(h0: Operator, collapse: Vec<Operator>) -> Result<Self> {
        for op in &collapse {
            if op.space != h0.space {
                return Err(Error::DimensionMismatch {
                    expected: h0.dim(),
                    got: op.dim(),
                });
            }
        }
        let space = h0.space.clone();
        let excitations: Vec<f64> = (0..space.dim())
            .map(|k| space.levels(k).iter().sum::<usize>() as f64)
            .collect();
        let scale = linalg::frobenius(&h0.matrix).max(1.0);
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                if excitations[i] != excitations[j] && h0.matrix[(i, j)].norm() > 1e-12 * scale {
                    return Err(Error::param(
                        "static Hamiltonian must conserve the total excitation number",
                    ));
                }
            }
        }
        let transmon_lowering = linalg::lift(&linalg::destroy(space.dims()[0]), 0, space.dims());
        Ok(OpenSystem {
            h0,
            collapse,
            basis: None,
            excitations,
            transmon_lowering,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.h0.space
    }

    pub fn basis(&self) -> Option<&DressedBasis> {
        self.basis.as_ref()
    }

    pub fn excitation_number(&self, index: usize) -> f64 {
        self.excitations[index]
    }

    /// Labels of the populations reported in an [`EvolutionResult`].
    pub fn population_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = match &self.basis {
            Some(b) => b.labels.iter().map(|l| l.to_string()).collect(),
            None => self.space().labels(),
        };
        for t in 0..self.space().dims()[0] {
            labels.push(model::level_name(t));
        }
        labels
    }

    /// State populations (dressed when available) followed by transmon marginals.
    pub fn populations(&self, rho: &CMat) -> Vec<f64> {
        let n = self.space().dim();
        let nt = self.space().dims()[0];
        let mut out = vec![0.0; n + nt];
        match &self.basis {
            Some(b) => {
                let rv = rho * &b.vectors;
                for k in 0..n {
                    let p = b.vectors.column(k).dotc(&rv.column(k)).re;
                    out[k] = p;
                    out[n + b.labels[k].transmon] += p;
                }
            }
            None => {
                for k in 0..n {
                    let p = rho[(k, k)].re;
                    out[k] = p;
                    out[n + self.space().levels(k)[0]] += p;
                }
            }
        }
        out
    }

    /// Largest single-quantum detuning (GHz) in a frame rotating at `frame`.
    pub fn max_detuning(&self, frame: f64, drives: &[PulseParams]) -> f64 {
        let w = TAU * frame;
        let e0 = self.h0.matrix[(0, 0)].re;
        let mut max: f64 = 0.0;
        for k in 1..self.space().dim() {
            let n = self.excitations[k].max(1.0);
            let d = (self.h0.matrix[(k, k)].re - e0 - w * self.excitations[k]) / n;
            max = max.max(d.abs() / TAU);
        }
        for d in drives {
            max = max.max((d.frequency - frame).abs());
        }
        max
    }

    /// Default fixed step: 1/(30·max detuning) ns.
    pub fn default_step(&self, frame: f64, drives: &[PulseParams]) -> f64 {
        let det = self.max_detuning(frame, drives);
        if det > 0.0 {
            (1.0 / (30.0 * det)).min(1.0)
        } else {
            1.0
        }
    }
}

/// Frame frequency used for a drive set: the first drive, else the qubit.
pub fn frame_frequency(system: &OpenSystem, drives: &[PulseParams]) -> f64 {
    match drives.first() {
        Some(d) => d.frequency,
        None => {
            let dims = system.space().dims();
            let e = system.space().index(&{
                let mut l = vec![0; dims.len()];
                l[0] = 1;
                l
            });
            let e = e.expect("transmon has an excited level");
            (system.h0.matrix[(e, e)].re - system.h0.matrix[(0, 0)].re) / TAU
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    /// Fixed step (ns); `None` uses [`OpenSystem::default_step`].
    pub step: Option<f64>,
    /// Snapshot spacing (ns); `None` records only the initial and final state.
    pub sample_interval: Option<f64>,
    /// Re-run with half the step and compare final populations.
    pub check_convergence: bool,
    pub convergence_tolerance: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            step: None,
            sample_interval: None,
            check_convergence: false,
            convergence_tolerance: 1e-4,
        }
    }
}

impl EvolveOptions {
    pub fn sampled(interval: f64) -> Self {
        EvolveOptions {
            sample_interval: Some(interval),
            ..Default::default()
        }
    }

    pub fn checked() -> Self {
        EvolveOptions {
            check_convergence: true,
            ..Default::default()
        }
    }
}

/// Population time series and final state of one evolution.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// One row per time, columns follow `labels`.
    pub populations: Vec<Vec<f64>>,
    /// Final state in the rotating frame.
    pub final_state: DensityState,
    /// Rotating-frame frequency (GHz).
    pub frame_frequency: f64,
    pub step: f64,
    /// Largest final-population change under step halving, when checked.
    pub halving_error: Option<f64>,
}

impl EvolutionResult {
    pub fn column(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn series(&self, label: &str) -> Option<Vec<f64>> {
        let k = self.column(label)?;
        Some(self.populations.iter().map(|row| row[k]).collect())
    }

    pub fn final_population(&self, label: &str) -> Option<f64> {
        let k = self.column(label)?;
        self.populations.last().map(|row| row[k])
    }

    pub fn final_populations(&self) -> &[f64] {
        self.populations.last().expect("at least one snapshot")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("at least one snapshot")
    }

    /// CSV with a `time_ns` column followed by one column per label.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["time_ns".to_string()];
        header.extend(self.labels.iter().cloned());
        wr.write_record(&header)?;
        for (t, row) in self.times.iter().zip(&self.populations) {
            let mut rec = vec![crate::fmt_f64(*t)];
            rec.extend(row.iter().map(|&p| crate::fmt_f64(p)));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Row-compressed sparse matrix.
#[derive(Debug, Clone)]
struct SparseRows {
    ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseRows {
    fn from_dense(m: &CMat, cutoff: f64) -> Self {
        let mut ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].norm() > cutoff {
                    cols.push(j);
                    vals.push(m[(i, j)]);
                }
            }
            ptr.push(cols.len());
        }
        SparseRows { ptr, cols, vals }
    }
}

/// Right-hand side of the master equation in the rotating frame, split
/// into the diagonal of H_eff (integrated exactly) and the remainder.
struct Generator {
    n: usize,
    diag: Vec<C64>,
    ptr: Vec<usize>,
    cols: Vec<usize>,
    base: Vec<C64>,
    raise: Vec<f64>,
    lower: Vec<f64>,
    /// Collapse operators with at most one entry per row: (column, value).
    monomial_jumps: Vec<Vec<Option<(usize, C64)>>>,
    jumps: Vec<SparseRows>,
    drives: Vec<(PulseParams, f64)>,
}

struct Scratch {
    vals: Vec<C64>,
    x: Vec<C64>,
    y: Vec<C64>,
}

impl Generator {
    fn new(system: &OpenSystem, drives: &[PulseParams], frame: f64) -> Self {
        let n = system.space().dim();
        let w = TAU * frame;
        let mut heff = system.h0.matrix.clone();
        for k in 0..n {
            heff[(k, k)] -= c(w * system.excitations[k], 0.0);
        }
        for op in &system.collapse {
            let cdc = op.matrix.adjoint() * &op.matrix;
            heff -= cdc * c(0.0, 0.5);
        }
        let b = &system.transmon_lowering;
        let scale = linalg::frobenius(&heff).max(1.0) * 1e-15;

        let diag = (0..n).map(|k| heff[(k, k)]).collect();
        let mut rows: Vec<BTreeMap<usize, (C64, f64, f64)>> = vec![BTreeMap::new(); n];
        for i in 0..n {
            for j in 0..n {
                let h = if i == j { ZERO } else { heff[(i, j)] };
                let up = b[(j, i)].re;
                let down = b[(i, j)].re;
                if h.norm() > scale || up != 0.0 || down != 0.0 {
                    rows[i].insert(j, (h, up, down));
                }
            }
        }
        let mut ptr = vec![0];
        let (mut cols, mut base, mut raise, mut lower) = (vec![], vec![], vec![], vec![]);
        for row in rows {
            for (j, (h, up, down)) in row {
                cols.push(j);
                base.push(h);
                raise.push(up);
                lower.push(down);
            }
            ptr.push(cols.len());
        }
        let mut monomial_jumps = Vec::new();
        let mut jumps = Vec::new();
        for op in &system.collapse {
            let sp = SparseRows::from_dense(&op.matrix, 0.0);
            if (0..n).all(|i| sp.ptr[i + 1] - sp.ptr[i] <= 1) {
                monomial_jumps.push(
                    (0..n)
                        .map(|i| (sp.ptr[i] < sp.ptr[i + 1]).then(|| (sp.cols[sp.ptr[i]], sp.vals[sp.ptr[i]])))
                        .collect(),
                );
            } else {
                jumps.push(sp);
            }
        }
        let drives = drives
            .iter()
            .map(|d| (*d, TAU * (d.frequency - frame)))
            .collect();
        Generator {
            n,
            diag,
            ptr,
            cols,
            base,
            raise,
            lower,
            monomial_jumps,
            jumps,
            drives,
        }
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            vals: vec![ZERO; self.base.len()],
            x: vec![ZERO; self.n * self.n],
            y: vec![ZERO; self.n * self.n],
        }
    }

    /// Drive coefficient multiplying b† at time t.
    fn drive_coefficient(&self, t: f64) -> C64 {
        let mut acc = ZERO;
        for (p, det) in &self.drives {
            let env = p.envelope_unchecked(t);
            if env != 0.0 {
                acc += C64::from_polar(0.5 * env, -(det * t + p.phase));
            }
        }
        acc
    }

    fn rhs(&self, t: f64, rho: &[C64], out: &mut [C64], s: &mut Scratch) {
        let n = self.n;
        let cf = self.drive_coefficient(t);
        let cfc = cf.conj();
        for k in 0..self.base.len() {
            s.vals[k] = self.base[k] + cf * self.raise[k] + cfc * self.lower[k];
        }
        // X = H_eff ρ
        for i in 0..n {
            let xi = &mut s.x[i * n..(i + 1) * n];
            xi.fill(ZERO);
            for p in self.ptr[i]..self.ptr[i + 1] {
                let h = s.vals[p];
                let rk = &rho[self.cols[p] * n..(self.cols[p] + 1) * n];
                for (x, r) in xi.iter_mut().zip(rk) {
                    *x += h * r;
                }
            }
        }
        // −i(V ρ − ρ V†) for the off-diagonal part V
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = -I * s.x[i * n + j] + I * s.x[j * n + i].conj();
            }
        }
        // Σ C ρ C†
        for jump in &self.monomial_jumps {
            for i in 0..n {
                let Some((ki, ci)) = jump[i] else { continue };
                let row = &rho[ki * n..(ki + 1) * n];
                let oi = &mut out[i * n..(i + 1) * n];
                for j in 0..n {
                    if let Some((kj, cj)) = jump[j] {
                        oi[j] += row[kj] * (ci * cj.conj());
                    }
                }
            }
        }
        for jump in &self.jumps {
            for i in 0..n {
                let yi = &mut s.y[i * n..(i + 1) * n];
                yi.fill(ZERO);
                for p in jump.ptr[i]..jump.ptr[i + 1] {
                    let cv = jump.vals[p];
                    let rk = &rho[jump.cols[p] * n..(jump.cols[p] + 1) * n];
                    for (y, r) in yi.iter_mut().zip(rk) {
                        *y += cv * r;
                    }
                }
            }
            for j in 0..n {
                for p in jump.ptr[j]..jump.ptr[j + 1] {
                    let cv = jump.vals[p].conj();
                    let l = jump.cols[p];
                    for i in 0..n {
                        out[i * n + j] += s.y[i * n + l] * cv;
                    }
                }
            }
        }
    }

    /// Bound on the spectral radius of the non-diagonal part, for the
    /// RK4 stability check.
    fn spectral_radius(&self) -> f64 {
        let mut off: f64 = 0.0;
        let amp: f64 = self.drives.iter().map(|(p, _)| 0.5 * p.amplitude).sum();
        for i in 0..self.n {
            let row: f64 = (self.ptr[i]..self.ptr[i + 1])
                .map(|p| self.base[p].norm() + amp * (self.raise[p].abs() + self.lower[p].abs()))
                .sum();
            off = off.max(row);
        }
        2.0 * off
    }

    /// Elementwise propagator exp(τ·L) of the diagonal part,
    /// L_ij = −i·D_i + i·D_j*.
    fn diagonal_propagator(&self, tau: f64, out: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = ((-I * self.diag[i] + I * self.diag[j].conj()) * tau).exp();
            }
        }
    }
}

/// Integrating-factor (Lawson) RK4: the diagonal of H_eff is propagated
/// exactly and classical RK4 handles the couplings, drive and jumps.
struct Integrator<'a> {
    gen: &'a Generator,
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
    half: Vec<C64>,
    full: Vec<C64>,
    h: f64,
    scratch: Scratch,
}

impl<'a> Integrator<'a> {
    fn new(gen: &'a Generator) -> Self {
        let len = gen.n * gen.n;
        Integrator {
            gen,
            k: [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]],
            tmp: vec![ZERO; len],
            half: vec![ZERO; len],
            full: vec![ZERO; len],
            h: f64::NAN,
            scratch: gen.scratch(),
        }
    }

    fn step(&mut self, t: f64, h: f64, rho: &mut [C64]) {
        if h != self.h {
            self.gen.diagonal_propagator(0.5 * h, &mut self.half);
            self.gen.diagonal_propagator(h, &mut self.full);
            self.h = h;
        }
        let (p, p2) = (&self.half, &self.full);
        let [k1, k2, k3, k4] = &mut self.k;
        self.gen.rhs(t, rho, k1, &mut self.scratch);
        for i in 0..rho.len() {
            self.tmp[i] = p[i] * (rho[i] + k1[i] * (0.5 * h));
        }
        self.gen.rhs(t + 0.5 * h, &self.tmp, k2, &mut self.scratch);
        for i in 0..rho.len() {
            self.tmp[i] = p[i] * rho[i] + k2[i] * (0.5 * h);
        }
        self.gen.rhs(t + 0.5 * h, &self.tmp, k3, &mut self.scratch);
        for i in 0..rho.len() {
            self.tmp[i] = p2[i] * rho[i] + p[i] * k3[i] * h;
        }
        self.gen.rhs(t + h, &self.tmp, k4, &mut self.scratch);
        let w = h / 6.0;
        for i in 0..rho.len() {
            rho[i] = p2[i] * (rho[i] + k1[i] * w) + (p[i] * (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
    }

    /// Integrates from `t0` to `t1`, splitting at envelope breakpoints.
    /// `on_step` is called after every step with the current time.
    fn run(
        &mut self,
        rho: &mut [C64],
        t0: f64,
        t1: f64,
        h_max: f64,
        on_step: &mut dyn FnMut(f64, &[C64]),
    ) {
        let mut cuts = vec![t0, t1];
        for (p, _) in &self.gen.drives {
            for b in [0.0, p.rise_time, p.duration - p.rise_time, p.duration] {
                if b > t0 && b < t1 {
                    cuts.push(b);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let len = b - a;
            if len <= 0.0 {
                continue;
            }
            let m = (len / h_max - 1e-9).ceil().max(1.0) as usize;
            let h = len / m as f64;
            for s in 0..m {
                let t = a + s as f64 * h;
                self.step(t, h, rho);
                on_step(if s + 1 == m { b } else { t + h }, rho);
            }
        }
    }
}

fn to_flat(m: &CMat) -> Vec<C64> {
    let n = m.nrows();
    let mut out = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = m[(i, j)];
        }
    }
    out
}

fn from_flat(v: &[C64], n: usize) -> CMat {
    let mut m = CMat::from_row_slice(n, n, v);
    // Remove the O(h⁵) anti-Hermitian drift.
    m = (&m + m.adjoint()) * c(0.5, 0.0);
    m
}

struct Prepared {
    gen: Generator,
    frame: f64,
    step: f64,
}

fn prepare(
    system: &OpenSystem,
    drives: &[PulseParams],
    rho0: &DensityState,
    step: Option<f64>,
) -> Result<Prepared> {
    if rho0.space != *system.space() {
        return Err(Error::DimensionMismatch {
            expected: system.space().dim(),
            got: rho0.dim(),
        });
    }
    for d in drives {
        d.validate()?;
    }
    let frame = frame_frequency(system, drives);
    let step = match step {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::param(format!("step must be positive, got {h}"))),
        None => system.default_step(frame, drives),
    };
    let gen = Generator::new(system, drives, frame);
    let radius = gen.spectral_radius();
    if step * radius > 2.5 {
        return Err(Error::NonConvergent(format!(
            "step {step} ns exceeds the RK4 stability limit ({:.3e} ns)",
            2.5 / radius
        )));
    }
    Ok(Prepared { gen, frame, step })
}

/// Integrates the master equation from `rho0` over `[0, t_end]`.
pub fn evolve(
    system: &OpenSystem,
    drives: &[PulseParams],
    rho0: &DensityState,
    t_end: f64,
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::param(format!("t_end must be ≥ 0, got {t_end}")));
    }
    let prep = prepare(system, drives, rho0, opts.step)?;
    let n = system.space().dim();
    let mut rho = to_flat(&rho0.rho);
    let mut times = vec![0.0];
    let mut pops = vec![system.populations(&rho0.rho)];
    let mut next = opts.sample_interval.filter(|s| *s > 0.0);
    let interval = next;
    {
        let mut integ = Integrator::new(&prep.gen);
        let mut on_step = |t: f64, r: &[C64]| {
            if let (Some(due), Some(dt)) = (next, interval) {
                if t >= due - 1e-9 && t < t_end - 1e-9 {
                    times.push(t);
                    pops.push(system.populations(&from_flat(r, n)));
                    let mut due = due;
                    while due <= t + 1e-9 {
                        due += dt;
                    }
                    next = Some(due);
                }
            }
        };
        integ.run(&mut rho, 0.0, t_end, prep.step, &mut on_step);
    }
    let final_rho = from_flat(&rho, n);
    if t_end > 0.0 {
        times.push(t_end);
        pops.push(system.populations(&final_rho));
    }
    check_finite(&final_rho)?;

    let halving_error = if opts.check_convergence {
        let fine = evolve(
            system,
            drives,
            rho0,
            t_end,
            &EvolveOptions {
                step: Some(0.5 * prep.step),
                sample_interval: None,
                check_convergence: false,
                convergence_tolerance: opts.convergence_tolerance,
            },
        )?;
        let err = max_difference(pops.last().unwrap(), fine.final_populations());
        if err >= opts.convergence_tolerance {
            return Err(Error::NonConvergent(format!(
                "halving the step changes populations by {err:.3e}"
            )));
        }
        Some(err)
    } else {
        None
    };

    Ok(EvolutionResult {
        times,
        labels: system.population_labels(),
        populations: pops,
        final_state: DensityState::unchecked(final_rho, system.space().clone())?,
        frame_frequency: prep.frame,
        step: prep.step,
        halving_error,
    })
}

/// Final states for a family of pulses differing only in duration.
///
/// All pulses in `drives` are stretched to each duration. The common flat
/// top is integrated once; each duration branches off for its ramp-down.
pub fn evolve_durations(
    system: &OpenSystem,
    drives: &[PulseParams],
    durations: &[f64],
    rho0: &DensityState,
    opts: &EvolveOptions,
) -> Result<Vec<EvolutionResult>> {
    if drives.is_empty() {
        return Err(Error::param("duration sweep needs at least one drive"));
    }
    let max_rise = drives.iter().map(|d| d.rise_time).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..durations.len()).collect();
    order.sort_by(|&a, &b| durations[a].total_cmp(&durations[b]));
    let longest = durations.iter().cloned().fold(0.0, f64::max);
    let trunk_drives: Vec<PulseParams> = drives
        .iter()
        .map(|d| PulseParams {
            duration: f64::MAX,
            ..*d
        })
        .collect();
    for &t in durations {
        for d in drives {
            d.with_duration(t).validate()?;
        }
    }
    let pulse_set = |t: f64| -> Vec<PulseParams> { drives.iter().map(|d| d.with_duration(t)).collect() };
    let prep = prepare(system, &pulse_set(longest), rho0, opts.step)?;
    let trunk_gen = Generator::new(system, &trunk_drives, prep.frame);
    let n = system.space().dim();

    let mut rho = to_flat(&rho0.rho);
    let mut t_now = 0.0;
    let mut out: Vec<Option<EvolutionResult>> = vec![None; durations.len()];
    let initial = system.populations(&rho0.rho);
    for &idx in &order {
        let tp = durations[idx];
        let branch_at = tp - max_rise;
        if branch_at > t_now {
            let mut integ = Integrator::new(&trunk_gen);
            integ.run(&mut rho, t_now, branch_at, prep.step, &mut |_, _| {});
            t_now = branch_at;
        }
        let pulses = pulse_set(tp);
        let gen = Generator::new(system, &pulses, prep.frame);
        let mut branch = rho.clone();
        let mut integ = Integrator::new(&gen);
        integ.run(&mut branch, t_now, tp, prep.step, &mut |_, _| {});
        let final_rho = from_flat(&branch, n);
        check_finite(&final_rho)?;
        let pops = system.populations(&final_rho);
        out[idx] = Some(EvolutionResult {
            times: vec![0.0, tp],
            labels: system.population_labels(),
            populations: vec![initial.clone(), pops],
            final_state: DensityState::unchecked(final_rho, system.space().clone())?,
            frame_frequency: prep.frame,
            step: prep.step,
            halving_error: None,
        });
    }
    let mut results: Vec<EvolutionResult> = out.into_iter().map(|r| r.expect("every duration evaluated")).collect();

    if opts.check_convergence {
        let k = order[order.len() - 1];
        let plain = EvolveOptions {
            step: Some(prep.step),
            ..Default::default()
        };
        let direct = evolve(system, &pulse_set(durations[k]), rho0, durations[k], &EvolveOptions { check_convergence: true, ..plain })?;
        let err = direct
            .halving_error
            .unwrap_or(0.0)
            .max(max_difference(direct.final_populations(), results[k].final_populations()));
        if err >= opts.convergence_tolerance {
            return Err(Error::NonConvergent(format!(
                "duration sweep differs from direct integration by {err:.3e}"
            )));
        }
        results[k].halving_error = Some(err);
    }
    Ok(results)
}

fn max_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_finite(m: &CMat) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonConvergent("state diverged".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Preset;

    fn fast_params() -> SystemParams {
        SystemParams {
            t1: 200.0,
            t2: 300.0,
            ..Preset::A.params()
        }
    }

    #[test]
    fn ground_state_is_dark() {
        let sys = OpenSystem::new(&Preset::A.params()).unwrap();
        let b = sys.basis().unwrap();
        let rho0 = DensityState::pure(&b.vector(b.vacuum_state(0).unwrap()), sys.space().clone()).unwrap();
        let r = evolve(&sys, &[], &rho0, 50.0, &EvolveOptions::default()).unwrap();
        assert!((r.final_population("g").unwrap() - 1.0).abs() < 1e-9);
        assert!((r.final_state.rho.clone() - rho0.rho).iter().all(|z| z.norm() < 1e-8));
    }

    #[test]
    fn excited_state_decays_at_t1() {
        let p = SystemParams {
            tr_coupling: 0.0,
            ..fast_params()
        };
        let sys = OpenSystem::new(&p).unwrap();
        let b = sys.basis().unwrap();
        let rho0 = DensityState::pure(&b.vector(b.vacuum_state(1).unwrap()), sys.space().clone()).unwrap();
        let r = evolve(&sys, &[], &rho0, p.t1, &EvolveOptions::default()).unwrap();
        let pe = r.final_population("e").unwrap();
        assert!((pe - (-1.0f64).exp()).abs() < 1e-3, "{pe}");
    }

    #[test]
    fn purcell_photon_decays_at_kappa() {
        let p = SystemParams {
            rp_coupling: 0.0,
            ..fast_params()
        };
        let sys = OpenSystem::from_parts(
            model::build_static_hamiltonian(&p).unwrap(),
            collapse_operators(&p).unwrap(),
        )
        .unwrap();
        let k = sys.space().index_of("g01").unwrap();
        let rho0 = DensityState::basis(sys.space().clone(), k).unwrap();
        let t = 20.0;
        let r = evolve(&sys, &[], &rho0, t, &EvolveOptions::default()).unwrap();
        let got = r.final_population("g01").unwrap();
        assert!((got - (-p.kappa() * t).exp()).abs() < 1e-3, "{got}");
    }

    #[test]
    fn closed_system_conserves_purity() {
        let p = SystemParams {
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            ..Preset::A.params()
        };
        let h0 = model::build_static_hamiltonian(&p).unwrap();
        let sys = OpenSystem::from_parts(h0, vec![]).unwrap();
        let k = sys.space().index_of("f00").unwrap();
        let rho0 = DensityState::basis(sys.space().clone(), k).unwrap();
        let h = sys.default_step(frame_frequency(&sys, &[]), &[]);
        let defect = |step: f64| {
            let opts = EvolveOptions {
                step: Some(step),
                ..Default::default()
            };
            let r = evolve(&sys, &[], &rho0, 80.0, &opts).unwrap();
            (1.0 - r.final_state.purity()).abs().max((1.0 - r.final_state.trace()).abs())
        };
        let (coarse, fine) = (defect(h), defect(0.5 * h));
        assert!(coarse < 1e-3, "{coarse}");
        // Fourth-order integrator: halving the step cuts the defect ~16×.
        assert!(fine < coarse / 10.0, "{coarse} {fine}");
        let finest = defect(h / 16.0);
        assert!(finest < 1e-8, "{finest}");
    }

    #[test]
    fn branching_matches_direct_integration() {
        let p = fast_params();
        let sys = OpenSystem::new(&p).unwrap();
        let b = sys.basis().unwrap();
        let rho0 = DensityState::pure(&b.vector(b.vacuum_state(2).unwrap()), sys.space().clone()).unwrap();
        let drive = PulseParams::new(2.0, 4.13).with_duration(80.0);
        let durs = [100.0, 70.0];
        let swept = evolve_durations(&sys, &[drive], &durs, &rho0, &EvolveOptions::default()).unwrap();
        for (k, &t) in durs.iter().enumerate() {
            let direct = evolve(&sys, &[drive.with_duration(t)], &rho0, t, &EvolveOptions::default()).unwrap();
            let d = max_difference(direct.final_populations(), swept[k].final_populations());
            assert!(d < 1e-9, "{d}");
        }
    }

    #[test]
    fn unstable_step_is_rejected() {
        let sys = OpenSystem::new(&Preset::A.params()).unwrap();
        let rho0 = DensityState::basis(sys.space().clone(), 0).unwrap();
        let opts = EvolveOptions {
            step: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            evolve(&sys, &[PulseParams::new(1.0, 4.1)], &rho0, 10.0, &opts),
            Err(Error::NonConvergent(_))
        ));
    }
}
