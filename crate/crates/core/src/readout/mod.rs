//! Dispersive readout: IQ shots, linear classification, assignment
//! correction and the measurement backaction tensor.

mod assignment;
mod iq;
mod tensor;

pub use assignment::{assignment_matrix_from_shots, correct_populations, AssignmentMatrix, CorrectedPopulations};
pub use iq::{
    fit_classifier, simulate_calibration_shots, simulate_iq_shots, write_shots_csv, IqShot, LinearClassifier,
    ReadoutModel,
};
pub use tensor::{
    fit_measurement_tensor, simulate_double_measurement, DerivedMatrices, FitOptions, MeasurementTensor, TensorFit,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub(crate) fn check_stochastic(m: &DMatrix<f64>, n: usize, tol: f64) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
    }
    for i in 0..n {
        let row = m.row(i);
        if row.iter().any(|v| !(*v >= -tol && *v <= 1.0 + tol)) {
            return Err(Error::param(format!("row {i} has entries outside [0, 1]")));
        }
        let s: f64 = row.sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::param(format!("row {i} sums to {s}")));
        }
    }
    Ok(())
}

pub(crate) fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}
