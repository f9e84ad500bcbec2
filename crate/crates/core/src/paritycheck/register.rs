use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec, C64};

const MAX_LOCAL_DIM: usize = 16;

/// Index tables for acting on a subset of sites of a product space.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub targets: Vec<usize>,
    pub local_dim: usize,
    /// `groups[r][k]`: full index with rest-configuration `r` and target configuration `k`.
    pub groups: Vec<Vec<usize>>,
}

impl Layout {
    pub fn new(dims: &[usize], targets: &[usize]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::param("a channel needs at least one target"));
        }
        for (k, &t) in targets.iter().enumerate() {
            if t >= dims.len() {
                return Err(Error::param(format!("target {t} outside a {}-site register", dims.len())));
            }
            if targets[..k].contains(&t) {
                return Err(Error::param(format!("target {t} repeated")));
            }
        }
        let total: usize = dims.iter().product();
        let local_dim: usize = targets.iter().map(|&t| dims[t]).product();
        if local_dim > MAX_LOCAL_DIM {
            return Err(Error::param(format!("local dimension {local_dim} exceeds {MAX_LOCAL_DIM}")));
        }
        let rest: Vec<usize> = (0..dims.len()).filter(|s| !targets.contains(s)).collect();
        let mut groups = vec![vec![0; local_dim]; total / local_dim];
        for full in 0..total {
            let digits = digits(dims, full);
            let k = targets.iter().fold(0, |acc, &t| acc * dims[t] + digits[t]);
            let r = rest.iter().fold(0, |acc, &s| acc * dims[s] + digits[s]);
            groups[r][k] = full;
        }
        Ok(Layout {
            targets: targets.to_vec(),
            local_dim,
            groups,
        })
    }

    /// `out = K·ψ` with `K` acting on the targets.
    pub fn apply_vec(&self, k: &CMat, psi: &[C64], out: &mut [C64]) {
        let d = self.local_dim;
        let mut buf = [C64::new(0.0, 0.0); MAX_LOCAL_DIM];
        for g in &self.groups {
            for (b, &idx) in buf.iter_mut().zip(g) {
                *b = psi[idx];
            }
            for (row, &idx) in g.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for col in 0..d {
                    acc += k[(row, col)] * buf[col];
                }
                out[idx] = acc;
            }
        }
    }

    /// `K·M` for a square matrix `M` on the full space.
    pub fn apply_left(&self, k: &CMat, m: &CMat) -> CMat {
        let n = m.nrows();
        let mut out = CMat::zeros(n, n);
        let mut col_in = vec![C64::new(0.0, 0.0); n];
        let mut col_out = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            col_in.copy_from_slice(m.column(j).as_slice());
            self.apply_vec(k, &col_in, &mut col_out);
            out.column_mut(j).copy_from_slice(&col_out);
        }
        out
    }

    /// `K·ρ·K†`.
    pub fn conjugate(&self, k: &CMat, rho: &CMat) -> CMat {
        let left = self.apply_left(k, rho);
        self.apply_left(k, &left.adjoint()).adjoint()
    }
}

pub(crate) fn digits(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = index % d;
        index /= d;
    }
    out
}

/// Density matrix over a product of transmons.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditRegister {
    pub dims: Vec<usize>,
    pub rho: CMat,
}

impl QuditRegister {
    pub fn from_product(dims: &[usize], states: &[CVec]) -> Result<Self> {
        let psi = product_state(dims, states)?;
        Ok(QuditRegister {
            dims: dims.to_vec(),
            rho: &psi * psi.adjoint(),
        })
    }

    /// Product of computational basis states.
    pub fn basis(dims: &[usize], levels: &[usize]) -> Result<Self> {
        if levels.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                got: levels.len(),
            });
        }
        let states: Vec<CVec> = dims
            .iter()
            .zip(levels)
            .map(|(&d, &l)| {
                if l >= d {
                    return Err(Error::param(format!("level {l} outside {d} levels")));
                }
                let mut v = CVec::zeros(d);
                v[l] = c(1.0, 0.0);
                Ok(v)
            })
            .collect::<Result<_>>()?;
        QuditRegister::from_product(dims, &states)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self, site: usize) -> Vec<f64> {
        site_populations(&self.dims, site, self.rho.diagonal().iter().map(|z| z.re))
    }

    /// Checks trace 1, Hermiticity and positivity within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if (self.trace() - 1.0).abs() > tol {
            return Err(Error::param(format!("register trace {}", self.trace())));
        }
        if crate::linalg::hermiticity_defect(&self.rho) > tol {
            return Err(Error::param("register density matrix is not Hermitian"));
        }
        let (vals, _) = crate::linalg::eigh(&self.rho);
        if vals[0] < -tol {
            return Err(Error::param(format!("register has negative eigenvalue {}", vals[0])));
        }
        Ok(())
    }

    /// Reduced state of the given sites, in the order listed.
    pub fn partial_state(&self, keep: &[usize]) -> Result<CMat> {
        let layout = Layout::new(&self.dims, keep)?;
        let d = layout.local_dim;
        let mut out = CMat::zeros(d, d);
        for g in &layout.groups {
            for a in 0..d {
                for b in 0..d {
                    out[(a, b)] += self.rho[(g[a], g[b])];
                }
            }
        }
        Ok(out)
    }
}

pub(crate) fn site_populations(dims: &[usize], site: usize, diag: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; dims[site]];
    let stride: usize = dims[site + 1..].iter().product();
    for (idx, p) in diag.enumerate() {
        out[(idx / stride) % dims[site]] += p;
    }
    out
}

pub(crate) fn product_state(dims: &[usize], states: &[CVec]) -> Result<CVec> {
    if states.len() != dims.len() {
        return Err(Error::DimensionMismatch {
            expected: dims.len(),
            got: states.len(),
        });
    }
    let mut psi = CVec::from_element(1, c(1.0, 0.0));
    for (v, &d) in states.iter().zip(dims) {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
        psi = psi.kronecker(v);
    }
    Ok(psi)
}
