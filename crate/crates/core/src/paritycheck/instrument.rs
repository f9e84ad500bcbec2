use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::paritycheck::register::{Layout, QuditRegister};
use crate::readout::MeasurementTensor;

/// Measurement of one transmon described by a measurement tensor. Coherences
/// between levels of the measured transmon are lost.
#[derive(Debug, Clone)]
pub struct Instrument {
    pub(crate) layout: Layout,
    pub(crate) eps: MeasurementTensor,
}

impl Instrument {
    pub fn new(dims: &[usize], target: usize, eps: &MeasurementTensor) -> Result<Self> {
        let layout = Layout::new(dims, &[target])?;
        if eps.levels() != layout.local_dim {
            return Err(Error::DimensionMismatch {
                expected: layout.local_dim,
                got: eps.levels(),
            });
        }
        Ok(Instrument {
            layout,
            eps: eps.clone(),
        })
    }

    pub fn outcomes(&self) -> usize {
        self.eps.levels()
    }

    /// Unnormalized post-measurement state for declared outcome `m`.
    pub(crate) fn branch(&self, rho: &CMat, m: usize) -> CMat {
        let d = self.layout.local_dim;
        let n = rho.nrows();
        let mut out = CMat::zeros(n, n);
        for ga in &self.layout.groups {
            for gb in &self.layout.groups {
                for i in 0..d {
                    let v = rho[(ga[i], gb[i])];
                    if v == crate::linalg::ZERO {
                        continue;
                    }
                    for j in 0..d {
                        let w = self.eps.get(i, m, j);
                        if w != 0.0 {
                            out[(ga[j], gb[j])] += v * w;
                        }
                    }
                }
            }
        }
        out
    }
}

/// Outcome distribution and normalized post-measurement states.
#[derive(Debug, Clone)]
pub struct InstrumentOutcome {
    pub probabilities: Vec<f64>,
    /// `None` for outcomes of zero probability.
    pub post_states: Vec<Option<QuditRegister>>,
}

pub fn measurement_instrument(reg: &QuditRegister, eps: &MeasurementTensor, target: usize) -> Result<InstrumentOutcome> {
    let inst = Instrument::new(&reg.dims, target, eps)?;
    let mut probabilities = Vec::new();
    let mut post_states = Vec::new();
    for m in 0..inst.outcomes() {
        let rho = inst.branch(&reg.rho, m);
        let p: f64 = rho.diagonal().iter().map(|z| z.re).sum();
        probabilities.push(p);
        post_states.push((p > 0.0).then(|| QuditRegister {
            dims: reg.dims.clone(),
            rho: rho / crate::linalg::c(p, 0.0),
        }));
    }
    Ok(InstrumentOutcome {
        probabilities,
        post_states,
    })
}
