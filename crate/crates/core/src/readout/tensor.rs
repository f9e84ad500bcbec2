//! Rank-3 measurement model `ε[i][m][j]`: input state i, declared outcome m,
//! output state j.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Gamma;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout::assignment::AssignmentMatrix;

const TENSOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct MeasurementTensor {
    n: usize,
    eps: Vec<f64>,
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for MeasurementTensor {
    type Error = Error;

    fn try_from(v: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = v.len();
        let mut eps = Vec::with_capacity(n * n * n);
        for (i, block) in v.iter().enumerate() {
            if block.len() != n || block.iter().any(|row| row.len() != n) {
                return Err(Error::param(format!("measurement tensor slice {i} is not {n}×{n}")));
            }
            for row in block {
                eps.extend_from_slice(row);
            }
        }
        MeasurementTensor::new(n, eps)
    }
}

impl From<MeasurementTensor> for Vec<Vec<Vec<f64>>> {
    fn from(t: MeasurementTensor) -> Self {
        (0..t.n)
            .map(|i| (0..t.n).map(|m| (0..t.n).map(|j| t.get(i, m, j)).collect()).collect())
            .collect()
    }
}

/// Assignment and QNDness matrices with their summary metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedMatrices {
    pub assignment: AssignmentMatrix,
    /// Row-stochastic `Q[i][j]`: input i, output j.
    #[serde(serialize_with = "crate::readout::serialize_rows")]
    pub qnd: DMatrix<f64>,
    pub mean_qndness: f64,
    /// `(Q[g][f] + Q[e][f])/2`; zero with fewer than 3 levels.
    pub leakage_rate: f64,
}

impl MeasurementTensor {
    pub fn new(n: usize, eps: Vec<f64>) -> Result<Self> {
        if n == 0 || eps.len() != n * n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n * n,
                got: eps.len(),
            });
        }
        let t = MeasurementTensor { n, eps };
        t.validate(TENSOR_TOLERANCE)?;
        Ok(t)
    }

    /// Perfect QND measurement: `ε[i][m][j] = δ_im δ_ij`.
    pub fn ideal(n: usize) -> Self {
        let mut eps = vec![0.0; n * n * n];
        for i in 0..n {
            eps[(i * n + i) * n + i] = 1.0;
        }
        MeasurementTensor { n, eps }
    }

    /// `ε[i][m][j] = M[i][m]·Q[i][j]`: outcome and output drawn independently.
    pub fn from_assignment_and_qnd(m: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        crate::readout::check_stochastic(m, n, TENSOR_TOLERANCE)?;
        crate::readout::check_stochastic(q, n, TENSOR_TOLERANCE)?;
        let mut eps = vec![0.0; n * n * n];
        for i in 0..n {
            for a in 0..n {
                for j in 0..n {
                    eps[(i * n + a) * n + j] = m[(i, a)] * q[(i, j)];
                }
            }
        }
        MeasurementTensor::new(n, eps)
    }

    /// Random valid tensor. Each input's entries are Gamma(1) weights, with
    /// the faithful entry `(i, i)` drawn from Gamma(`qnd_bias` + 1).
    pub fn random<R: Rng + ?Sized>(n: usize, qnd_bias: f64, rng: &mut R) -> Self {
        let flat = Gamma::new(1.0, 1.0).expect("valid shape");
        let peaked = Gamma::new(1.0 + qnd_bias.max(0.0), 1.0).expect("valid shape");
        let mut eps = vec![0.0; n * n * n];
        for i in 0..n {
            let block = &mut eps[i * n * n..(i + 1) * n * n];
            for (k, v) in block.iter_mut().enumerate() {
                *v = if k == i * n + i { peaked.sample(rng) } else { flat.sample(rng) };
            }
            let s: f64 = block.iter().sum();
            block.iter_mut().for_each(|v| *v /= s);
        }
        MeasurementTensor { n, eps }
    }

    pub fn levels(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, m: usize, j: usize) -> f64 {
        self.eps[(i * self.n + m) * self.n + j]
    }

    /// The `n×n` block of input `i`, indexed `(m, j)`.
    pub fn input_block(&self, i: usize) -> &[f64] {
        let nn = self.n * self.n;
        &self.eps[i * nn..(i + 1) * nn]
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        for i in 0..self.n {
            let block = self.input_block(i);
            if let Some(v) = block.iter().find(|v| !(**v >= -tol)) {
                return Err(Error::param(format!("negative tensor entry {v} for input {i}")));
            }
            let s: f64 = block.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::param(format!("tensor input {i} sums to {s}")));
            }
        }
        Ok(())
    }

    pub fn assignment(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, m| (0..self.n).map(|j| self.get(i, m, j)).sum())
    }

    pub fn qnd(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| (0..self.n).map(|m| self.get(i, m, j)).sum())
    }

    pub fn derived_matrices(&self, labels: &[String]) -> Result<DerivedMatrices> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: labels.len(),
            });
        }
        let q = self.qnd();
        let leakage_rate = if self.n >= 3 { 0.5 * (q[(0, 2)] + q[(1, 2)]) } else { 0.0 };
        Ok(DerivedMatrices {
            assignment: AssignmentMatrix {
                labels: labels.to_vec(),
                m: self.assignment(),
            },
            mean_qndness: q.diagonal().sum() / self.n as f64,
            qnd: q,
            leakage_rate,
        })
    }

    /// Exact `P_i(m₀, m₁) = Σ_s ε[i][m₀][s]·M[s][m₁]`.
    pub fn joint_probabilities(&self, input: usize) -> DMatrix<f64> {
        let m = self.assignment();
        DMatrix::from_fn(self.n, self.n, |k, l| (0..self.n).map(|s| self.get(input, k, s) * m[(s, l)]).sum())
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["i", "m", "j", "value"])?;
        for i in 0..self.n {
            for m in 0..self.n {
                for j in 0..self.n {
                    wr.write_record([i.to_string(), m.to_string(), j.to_string(), crate::fmt_f64(self.get(i, m, j))])?;
                }
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse_idx = |k: usize| -> Result<usize> {
                rec.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::param(format!("bad tensor index in row {rec:?}")))
            };
            let value: f64 = rec
                .get(3)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::param(format!("bad tensor value in row {rec:?}")))?;
            rows.push((parse_idx(0)?, parse_idx(1)?, parse_idx(2)?, value));
        }
        let n = (rows.len() as f64).cbrt().round() as usize;
        if n * n * n != rows.len() {
            return Err(Error::param(format!("{} tensor rows is not a cube", rows.len())));
        }
        let mut eps = vec![f64::NAN; rows.len()];
        for (i, m, j, v) in rows {
            if i >= n || m >= n || j >= n {
                return Err(Error::param(format!("tensor index ({i}, {m}, {j}) out of range")));
            }
            eps[(i * n + m) * n + j] = v;
        }
        if eps.iter().any(|v| v.is_nan()) {
            return Err(Error::param("tensor CSV has duplicate entries"));
        }
        MeasurementTensor::new(n, eps)
    }
}

/// Sampled joint outcome frequencies of two back-to-back measurements.
pub fn simulate_double_measurement(
    eps: &MeasurementTensor,
    input: usize,
    n_shots: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let n = eps.levels();
    if input >= n {
        return Err(Error::param(format!("input state {input} outside {n} levels")));
    }
    if n_shots == 0 {
        return Err(Error::param("need at least one shot"));
    }
    let samplers: Vec<WeightedIndex<f64>> = (0..n)
        .map(|i| {
            let w: Vec<f64> = eps.input_block(i).iter().map(|v| v.max(0.0)).collect();
            WeightedIndex::new(&w).map_err(|e| Error::param(e.to_string()))
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = DMatrix::<f64>::zeros(n, n);
    for _ in 0..n_shots {
        let first = samplers[input].sample(&mut rng);
        let (m0, s) = (first / n, first % n);
        let m1 = samplers[s].sample(&mut rng) / n;
        counts[(m0, m1)] += 1.0;
    }
    Ok(counts / n_shots as f64)
}

/// Outcome of [`fit_measurement_tensor`].
#[derive(Debug, Clone, Serialize)]
pub struct TensorFit {
    pub tensor: MeasurementTensor,
    /// Sum of squared residuals over all inputs and outcome pairs.
    pub residual: f64,
    /// Largest element-wise spread among starts that reached the best residual.
    pub spread: f64,
    pub starts: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub random_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            random_starts: 8,
            seed: 0,
            max_iter: 200_000,
        }
    }
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

struct Objective<'a> {
    n: usize,
    data: &'a [DMatrix<f64>],
}

impl Objective<'_> {
    fn assignment(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for s in 0..n {
            for l in 0..n {
                m[s * n + l] = (0..n).map(|j| x[(s * n + l) * n + j]).sum();
            }
        }
        m
    }

    fn residuals(&self, x: &[f64], m: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut r = vec![0.0; n * n * n];
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let model: f64 = (0..n).map(|s| x[(i * n + k) * n + s] * m[s * n + l]).sum();
                    r[(i * n + k) * n + l] = model - self.data[i][(k, l)];
                }
            }
        }
        r
    }

    fn value(&self, x: &[f64]) -> f64 {
        let m = self.assignment(x);
        self.residuals(x, &m).iter().map(|v| v * v).sum()
    }

    fn gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n;
        let m = self.assignment(x);
        let r = self.residuals(x, &m);
        let mut g = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    // x[a][b][c] as the first-measurement factor.
                    let first: f64 = (0..n).map(|l| r[(a * n + b) * n + l] * m[c * n + l]).sum();
                    // x[a][b][c] inside M[a][b].
                    let second: f64 = (0..n)
                        .flat_map(|i| (0..n).map(move |k| (i, k)))
                        .map(|(i, k)| r[(i * n + k) * n + b] * x[(i * n + k) * n + a])
                        .sum();
                    g[(a * n + b) * n + c] = 2.0 * (first + second);
                }
            }
        }
        (r.iter().map(|v| v * v).sum(), g)
    }
}

/// Projected gradient descent with backtracking. Returns (x, residual, converged).
fn descend(obj: &Objective, mut x: Vec<f64>, max_iter: usize) -> (Vec<f64>, f64, bool) {
    let n = obj.n;
    let nn = n * n;
    let project = |v: &mut Vec<f64>| {
        for i in 0..n {
            project_simplex(&mut v[i * nn..(i + 1) * nn]);
        }
    };
    project(&mut x);
    let mut f = obj.value(&x);
    let mut eta = 0.1;
    let mut window_start = f;
    for it in 0..max_iter {
        if f < 1e-30 {
            return (x, f, true);
        }
        let (_, g) = obj.gradient(&x);
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - eta * b).collect();
            project(&mut trial);
            let decrease: f64 = x.iter().zip(&trial).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / eta;
            let ft = obj.value(&trial);
            if ft <= f - 0.5 * decrease {
                x = trial;
                f = ft;
                eta *= 1.5;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            return (x, f, true);
        }
        if (it + 1) % 100 == 0 {
            if window_start - f < 1e-12 * window_start.max(1e-300).min(1.0) || window_start - f < 1e-30 {
                return (x, f, true);
            }
            window_start = f;
        }
    }
    (x, f, false)
}

/// `ε[i][m][s] = (P_i·M⁻¹)[m][s]` with `M` read off the first-outcome marginals.
fn closed_form_start(data: &[DMatrix<f64>]) -> Option<Vec<f64>> {
    let n = data.len();
    let m = DMatrix::from_fn(n, n, |i, k| data[i].row(k).sum());
    let inv = m.try_inverse()?;
    let mut x = vec![0.0; n * n * n];
    for (i, p) in data.iter().enumerate() {
        let e = p * &inv;
        for k in 0..n {
            for s in 0..n {
                x[(i * n + k) * n + s] = e[(k, s)];
            }
        }
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Fits a measurement tensor to per-input joint frequencies of two
/// consecutive measurements.
pub fn fit_measurement_tensor(joint_freqs: &[DMatrix<f64>], opts: &FitOptions) -> Result<TensorFit> {
    let n = joint_freqs.len();
    if n < 2 {
        return Err(Error::InsufficientData("need joint frequencies for at least 2 inputs".into()));
    }
    if joint_freqs.iter().any(|p| p.nrows() != n || p.ncols() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: joint_freqs.iter().map(|p| p.nrows()).find(|&r| r != n).unwrap_or(0),
        });
    }
    let obj = Objective { n, data: joint_freqs };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(x) = closed_form_start(joint_freqs) {
        starts.push(x);
    }
    starts.push(MeasurementTensor::ideal(n).eps);
    for k in 0..opts.random_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
        starts.push(MeasurementTensor::random(n, 0.0, &mut rng).eps);
    }
    let results: Vec<(Vec<f64>, f64, bool)> = starts.into_par_iter().map(|x| descend(&obj, x, opts.max_iter)).collect();

    let (best_idx, best) = results
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(a.0.cmp(&b.0)))
        .expect("at least one start");
    if !results.iter().any(|r| r.2) {
        return Err(Error::NonConvergent(format!(
            "no start converged; best residual {:.3e}",
            best.1
        )));
    }
    let best_res = best.1;
    let close = |r: f64| r <= 10.0 * best_res + 1e-12;
    let mut spread: f64 = 0.0;
    for r in results.iter().filter(|r| close(r.1)) {
        for (a, b) in r.0.iter().zip(&results[best_idx].0) {
            spread = spread.max((a - b).abs());
        }
    }
    let warning = (spread > 1e-3).then(|| format!("recovered tensors differ by up to {spread:.3e} between starts"));
    let mut eps = results[best_idx].0.clone();
    for i in 0..n {
        let block = &mut eps[i * n * n..(i + 1) * n * n];
        let s: f64 = block.iter().sum();
        block.iter_mut().for_each(|v| *v /= s);
    }
    Ok(TensorFit {
        tensor: MeasurementTensor::new(n, eps)?,
        residual: best_res,
        spread,
        starts: results.len(),
        warning,
    })
}
