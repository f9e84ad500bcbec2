use nalgebra::{Matrix4, SMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::c;
use crate::tomography::state::{pauli, Mat2, QubitDensityMatrix};

/// Real 4×4 Pauli transfer matrix in the basis {I, X, Y, Z}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PauliTransferMatrix {
    #[serde(serialize_with = "serialize_mat4")]
    pub r: Matrix4<f64>,
}

fn serialize_mat4<S: serde::Serializer>(m: &Matrix4<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(4))?;
    for i in 0..4 {
        seq.serialize_element(&[m[(i, 0)], m[(i, 1)], m[(i, 2)], m[(i, 3)]])?;
    }
    seq.end()
}

/// The six cardinal input states and their labels.
pub const CARDINAL_STATES: [(&str, [f64; 3]); 6] = [
    ("0", [0.0, 0.0, 1.0]),
    ("+", [1.0, 0.0, 0.0]),
    ("+i", [0.0, 1.0, 0.0]),
    ("1", [0.0, 0.0, -1.0]),
    ("-", [-1.0, 0.0, 0.0]),
    ("-i", [0.0, -1.0, 0.0]),
];

/// Angle estimates read off the XY block of a PTM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZRotationFit {
    /// Best single angle (rad).
    pub angle: f64,
    /// Largest disagreement between the column-wise angle estimates (rad).
    pub angle_spread: f64,
    /// Largest |entry| coupling Z to X/Y.
    pub off_block: f64,
}

fn wrap(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    a - t * ((a + std::f64::consts::PI) / t).floor()
}

impl PauliTransferMatrix {
    pub fn identity() -> Self {
        PauliTransferMatrix { r: Matrix4::identity() }
    }

    pub fn z_rotation(phi: f64) -> Self {
        let (s, co) = phi.sin_cos();
        #[rustfmt::skip]
        let r = Matrix4::new(
            1.0, 0.0, 0.0, 0.0,
            0.0, co,  -s,  0.0,
            0.0, s,   co,  0.0,
            0.0, 0.0, 0.0, 1.0,
        );
        PauliTransferMatrix { r }
    }

    /// PTM of `ρ ↦ U ρ U†`.
    pub fn from_unitary(u: &Mat2) -> Self {
        PauliTransferMatrix::from_channel(|rho| u * rho * u.adjoint())
    }

    /// PTM of a linear map on 2×2 matrices: `R_ij = Tr(P_i Λ(P_j))/2`.
    pub fn from_channel(map: impl Fn(&Mat2) -> Mat2) -> Self {
        let mut r = Matrix4::zeros();
        for j in 0..4 {
            let out = map(&pauli(j));
            for i in 0..4 {
                r[(i, j)] = 0.5 * (pauli(i) * out).trace().re;
            }
        }
        PauliTransferMatrix { r }
    }

    /// Output state for a given input.
    pub fn apply(&self, state: &QubitDensityMatrix) -> QubitDensityMatrix {
        let b = state.bloch();
        let v = self.r * nalgebra::Vector4::new(state.trace(), b[0], b[1], b[2]);
        let mut rho = Mat2::zeros();
        for k in 0..4 {
            rho += pauli(k) * c(0.5 * v[k], 0.0);
        }
        QubitDensityMatrix { rho }
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        (self.r[(0, 0)] - 1.0).abs() <= tol && (1..4).all(|j| self.r[(0, j)].abs() <= tol)
    }

    pub fn singular_values(&self) -> nalgebra::Vector4<f64> {
        let mut s = self.r.singular_values();
        s.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Z-rotation angle from the XY block.
    pub fn z_angle(&self) -> f64 {
        (self.r[(2, 1)] - self.r[(1, 2)]).atan2(self.r[(1, 1)] + self.r[(2, 2)])
    }

    pub fn z_rotation_fit(&self) -> ZRotationFit {
        let a1 = self.r[(2, 1)].atan2(self.r[(1, 1)]);
        let a2 = (-self.r[(1, 2)]).atan2(self.r[(2, 2)]);
        let angle = self.z_angle();
        let spread = wrap(a1 - angle).abs().max(wrap(a2 - angle).abs());
        let off_block = [(1, 3), (2, 3), (3, 1), (3, 2)]
            .iter()
            .map(|&(i, j)| self.r[(i, j)].abs())
            .fold(0.0, f64::max);
        ZRotationFit {
            angle,
            angle_spread: spread,
            off_block,
        }
    }

    /// Real PTM rows as CSV.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["row", "I", "X", "Y", "Z"])?;
        for (i, name) in ["I", "X", "Y", "Z"].iter().enumerate() {
            let mut rec = vec![name.to_string()];
            rec.extend((0..4).map(|j| crate::fmt_f64(self.r[(i, j)])));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Least-squares PTM from Pauli expectations of inputs and outputs.
///
/// Each row is `(x, y, z)`; the identity component is taken as 1 for inputs
/// and the first PTM row is fixed to `(1, 0, 0, 0)`.
pub fn ptm_from_pauli_data(inputs: &[[f64; 3]], outputs: &[[f64; 3]]) -> Result<PauliTransferMatrix> {
    if inputs.len() != outputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: outputs.len(),
        });
    }
    if inputs.len() < 4 {
        return Err(Error::InsufficientData("process tomography needs at least 4 inputs".into()));
    }
    let mut aat = Matrix4::<f64>::zeros();
    let mut bat = SMatrix::<f64, 3, 4>::zeros();
    for (x, y) in inputs.iter().zip(outputs) {
        let a = nalgebra::Vector4::new(1.0, x[0], x[1], x[2]);
        let b = nalgebra::Vector3::new(y[0], y[1], y[2]);
        aat += a * a.transpose();
        bat += b * a.transpose();
    }
    let inv = aat
        .try_inverse()
        .ok_or_else(|| Error::Singular("input states do not span the Bloch space".into()))?;
    let lower = bat * inv;
    let mut r = Matrix4::zeros();
    r[(0, 0)] = 1.0;
    for i in 0..3 {
        for j in 0..4 {
            r[(i + 1, j)] = lower[(i, j)];
        }
    }
    Ok(PauliTransferMatrix { r })
}

/// PTM of a qubit channel probed with the six cardinal states.
pub fn process_tomography(
    channel: impl Fn(&QubitDensityMatrix) -> Result<QubitDensityMatrix>,
) -> Result<PauliTransferMatrix> {
    let mut inputs = Vec::with_capacity(6);
    let mut outputs = Vec::with_capacity(6);
    for (_, b) in CARDINAL_STATES {
        let out = channel(&QubitDensityMatrix::from_bloch(b))?;
        inputs.push(b);
        outputs.push(out.bloch());
    }
    ptm_from_pauli_data(&inputs, &outputs)
}

/// Frame correction `R_Z(−φ)·R`.
pub fn apply_virtual_z(ptm: &PauliTransferMatrix, phi: f64) -> PauliTransferMatrix {
    PauliTransferMatrix {
        r: PauliTransferMatrix::z_rotation(-phi).r * ptm.r,
    }
}

/// Average gate fidelity of a qubit channel to a unitary target.
pub fn average_gate_fidelity(measured: &PauliTransferMatrix, ideal: &PauliTransferMatrix) -> f64 {
    let tr = (ideal.r.transpose() * measured.r).trace();
    (tr / 2.0 + 1.0) / 3.0
}

/// Random SU(2) element from a uniform unit quaternion.
pub fn random_unitary<R: rand::Rng + ?Sized>(rng: &mut R) -> Mat2 {
    use rand_distr::{Distribution, StandardNormal};
    let q: Vec<f64> = (0..4).map(|_| StandardNormal.sample(rng)).collect();
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (a, b, cc, d) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Mat2::new(c(a, b), c(cc, d), c(-cc, d), c(a, -b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::linalg::C64;

    fn unitary_z(phi: f64) -> Mat2 {
        let h = 0.5 * phi;
        Mat2::new(C64::from_polar(1.0, -h), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, h))
    }

    #[test]
    fn identity_channel() {
        let ptm = process_tomography(|s| Ok(*s)).unwrap();
        assert!((ptm.r - Matrix4::identity()).norm() < 1e-14);
    }

    #[test]
    fn z_rotation_matches_closed_form() {
        for phi in [0.3, -1.2, 2.9] {
            let u = unitary_z(phi);
            let ptm = process_tomography(|s| {
                Ok(QubitDensityMatrix {
                    rho: u * s.rho * u.adjoint(),
                })
            })
            .unwrap();
            assert!((ptm.r - PauliTransferMatrix::z_rotation(phi).r).norm() < 1e-12);
            assert_abs_diff_eq!(ptm.z_angle(), phi, epsilon = 1e-9);
            let corrected = apply_virtual_z(&ptm, phi);
            assert!((corrected.r - Matrix4::identity()).norm() < 1e-12);
        }
    }

    #[test]
    fn virtual_z_zero_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ptm = PauliTransferMatrix::from_unitary(&random_unitary(&mut rng));
        assert_eq!(apply_virtual_z(&ptm, 0.0).r, ptm.r);
    }

    #[test]
    fn fidelity_examples() {
        let id = PauliTransferMatrix::identity();
        assert_abs_diff_eq!(average_gate_fidelity(&id, &id), 1.0, epsilon = 1e-15);
        let x = PauliTransferMatrix::from_unitary(&pauli(1));
        assert_abs_diff_eq!(average_gate_fidelity(&x, &id), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_against_state_average() {
        // Independent route: average ⟨ψ|U†Λ(|ψ⟩⟨ψ|)U|ψ⟩ over the octahedron
        // (a qubit 2-design) for a depolarised rotation.
        let u = unitary_z(0.4);
        let p = 0.1;
        let channel = |rho: &Mat2| (u * rho * u.adjoint()) * c(1.0 - p, 0.0) + pauli(0) * rho.trace() * c(0.5 * p, 0.0);
        let ptm = PauliTransferMatrix::from_channel(channel);
        let ideal = PauliTransferMatrix::from_unitary(&u);
        let mut avg = 0.0;
        for (_, b) in CARDINAL_STATES {
            let s = QubitDensityMatrix::from_bloch(b);
            let out = QubitDensityMatrix { rho: channel(&s.rho) };
            let target = QubitDensityMatrix {
                rho: u * s.rho * u.adjoint(),
            };
            avg += (out.rho * target.rho).trace().re / 6.0;
        }
        assert_abs_diff_eq!(average_gate_fidelity(&ptm, &ideal), avg, epsilon = 1e-12);
    }

    #[test]
    fn rejects_mismatched_data() {
        assert!(ptm_from_pauli_data(&[[0.0; 3]; 6], &[[0.0; 3]; 5]).is_err());
        assert!(ptm_from_pauli_data(&[[0.0, 0.0, 1.0]; 6], &[[0.0; 3]; 6]).is_err());
    }

    #[test]
    fn csv_has_four_rows() {
        let mut buf = Vec::new();
        PauliTransferMatrix::identity().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
