use nalgebra::Matrix2;
use serde::Serialize;

use crate::linalg::{c, C64};

pub type Mat2 = Matrix2<C64>;

pub(crate) fn pauli(k: usize) -> Mat2 {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match k {
        0 => Mat2::new(o, z, z, o),
        1 => Mat2::new(z, o, o, z),
        2 => Mat2::new(z, -i, i, z),
        3 => Mat2::new(o, z, z, -o),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// Density matrix of a qubit in the {|0⟩, |1⟩} = {|g⟩, |e⟩} basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitDensityMatrix {
    #[serde(serialize_with = "serialize_mat2")]
    pub rho: Mat2,
}

fn serialize_mat2<S: serde::Serializer>(m: &Mat2, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(8))?;
    for r in 0..2 {
        for col in 0..2 {
            seq.serialize_element(&m[(r, col)].re)?;
            seq.serialize_element(&m[(r, col)].im)?;
        }
    }
    seq.end()
}

impl QubitDensityMatrix {
    /// `(I + x·X + y·Y + z·Z)/2`, without any physicality check.
    pub fn from_bloch(r: [f64; 3]) -> Self {
        let mut rho = pauli(0);
        for (k, &v) in r.iter().enumerate() {
            rho += pauli(k + 1) * c(v, 0.0);
        }
        QubitDensityMatrix { rho: rho * c(0.5, 0.0) }
    }

    /// Pure state `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn pure(theta: f64, phi: f64) -> Self {
        let r = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        QubitDensityMatrix::from_bloch(r)
    }

    pub fn trace(&self) -> f64 {
        (self.rho[(0, 0)] + self.rho[(1, 1)]).re
    }

    /// Pauli expectations (⟨X⟩, ⟨Y⟩, ⟨Z⟩).
    pub fn bloch(&self) -> [f64; 3] {
        let t = |k: usize| (pauli(k) * self.rho).trace().re;
        [t(1), t(2), t(3)]
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let [x, y, z] = self.bloch();
        let r = (x * x + y * y + z * z).sqrt();
        let t = self.trace();
        [0.5 * (t - r), 0.5 * (t + r)]
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol
            && (self.rho - self.rho.adjoint()).norm() <= tol
            && self.eigenvalues()[0] >= -tol
    }

    pub fn fidelity_to_pure(&self, psi: [C64; 2]) -> f64 {
        let mut f = C64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                f += psi[a].conj() * self.rho[(a, b)] * psi[b];
            }
        }
        f.re
    }
}

/// Nearest physical state to a set of (possibly inconsistent) Pauli
/// expectations.
///
/// The linear-inversion estimate is diagonalised, negative eigenvalues are set
/// to zero and the rest renormalised to unit trace.
pub fn reconstruct_state_mle(expectations: [f64; 3]) -> QubitDensityMatrix {
    let linear = QubitDensityMatrix::from_bloch(expectations);
    let [x, y, z] = expectations;
    let r = (x * x + y * y + z * z).sqrt();
    let [lo, hi] = [0.5 * (1.0 - r), 0.5 * (1.0 + r)];
    if lo >= 0.0 {
        return linear;
    }
    // Only the upper eigenvector survives: the pure state along r̂.
    debug_assert!(hi > 0.0);
    QubitDensityMatrix::from_bloch([x / r, y / r, z / r])
}
