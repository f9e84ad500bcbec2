use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::readout::iq::{IqShot, LinearClassifier};

/// Row-stochastic confusion matrix: rows prepared, columns declared.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentMatrix {
    pub labels: Vec<String>,
    #[serde(serialize_with = "crate::readout::serialize_rows")]
    pub m: DMatrix<f64>,
}

impl AssignmentMatrix {
    pub fn new(labels: Vec<String>, m: DMatrix<f64>) -> Result<Self> {
        let a = AssignmentMatrix { labels, m };
        a.validate(1e-9)?;
        Ok(a)
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let n = labels.len();
        AssignmentMatrix {
            labels,
            m: DMatrix::identity(n, n),
        }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        crate::readout::check_stochastic(&self.m, self.labels.len(), tol)
    }

    /// `1 − mean(diag)`.
    pub fn mean_error(&self) -> f64 {
        let n = self.m.nrows();
        1.0 - self.m.diagonal().sum() / n as f64
    }

    /// Outcome distribution for a distribution of prepared states.
    pub fn apply(&self, p_true: &[f64]) -> Vec<f64> {
        let p = DVector::from_column_slice(p_true);
        (self.m.transpose() * p).iter().copied().collect()
    }
}

/// Empirical confusion matrix of a classifier on labelled shots.
pub fn assignment_matrix_from_shots(classifier: &LinearClassifier, shots: &[IqShot]) -> Result<AssignmentMatrix> {
    let n = classifier.labels.len();
    let mut counts = DMatrix::<f64>::zeros(n, n);
    for s in shots {
        if s.true_label >= n {
            return Err(Error::MissingLabel(format!("shot label index {}", s.true_label)));
        }
        counts[(s.true_label, classifier.classify(s.i, s.q))] += 1.0;
    }
    for i in 0..n {
        let total: f64 = counts.row(i).sum();
        if total == 0.0 {
            return Err(Error::MissingLabel(format!("no shots prepared in '{}'", classifier.labels[i])));
        }
        for j in 0..n {
            counts[(i, j)] /= total;
        }
    }
    Ok(AssignmentMatrix {
        labels: classifier.labels.clone(),
        m: counts,
    })
}

/// Readout-corrected distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectedPopulations {
    pub values: Vec<f64>,
    /// Total negative weight removed before renormalising.
    pub clipped: f64,
}

/// Solves `p_true·M = p_measured`, clips negative entries and renormalises.
pub fn correct_populations(measured: &[f64], m: &AssignmentMatrix) -> Result<CorrectedPopulations> {
    let n = m.m.nrows();
    if measured.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: measured.len(),
        });
    }
    let rhs = DVector::from_column_slice(measured);
    let mt = m.m.transpose();
    let lu = mt.clone().lu();
    let det = lu.determinant();
    if !(det.abs() > 1e-12) {
        return Err(Error::Singular("assignment matrix is not invertible".into()));
    }
    let p = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("assignment matrix is not invertible".into()))?;
    let clipped: f64 = p.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
    let kept: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = kept.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Undefined("corrected distribution vanishes".into()));
    }
    let norm: f64 = measured.iter().sum();
    Ok(CorrectedPopulations {
        values: if clipped > 0.0 {
            kept.iter().map(|v| v * norm / total).collect()
        } else {
            kept
        },
        clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        ["g", "e", "f", "h"][..n].iter().map(|s| s.to_string()).collect()
    }

    fn symmetric_confusion(eps: f64) -> AssignmentMatrix {
        let mut m = DMatrix::from_element(3, 3, eps / 2.0);
        for i in 0..3 {
            m[(i, i)] = 1.0 - eps;
        }
        AssignmentMatrix::new(labels(3), m).unwrap()
    }

    #[test]
    fn identity_leaves_distribution() {
        let c = correct_populations(&[0.2, 0.5, 0.3], &AssignmentMatrix::identity(labels(3))).unwrap();
        assert_eq!(c.values, vec![0.2, 0.5, 0.3]);
        assert_eq!(c.clipped, 0.0);
    }

    #[test]
    fn planted_recovery() {
        let m = AssignmentMatrix::new(
            labels(3),
            DMatrix::from_row_slice(3, 3, &[0.97, 0.02, 0.01, 0.04, 0.93, 0.03, 0.01, 0.06, 0.93]),
        )
        .unwrap();
        let truth = [0.6, 0.3, 0.1];
        let measured = m.apply(&truth);
        let c = correct_populations(&measured, &m).unwrap();
        for (a, b) in c.values.iter().zip(truth) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn clipping() {
        let m = symmetric_confusion(0.01);
        let c = correct_populations(&[1.0, 0.0, 0.0], &m).unwrap();
        assert!(c.clipped > 0.0);
        assert!((c.values[0] - 1.0).abs() < 1e-15);
        assert_eq!(&c.values[1..], &[0.0, 0.0]);
    }

    #[test]
    fn singular_matrix() {
        let m = AssignmentMatrix::new(labels(2), DMatrix::from_element(2, 2, 0.5)).unwrap();
        assert!(matches!(correct_populations(&[0.5, 0.5], &m), Err(Error::Singular(_))));
    }

    #[test]
    fn rejects_non_stochastic() {
        assert!(AssignmentMatrix::new(labels(2), DMatrix::from_element(2, 2, 0.6)).is_err());
    }
}
