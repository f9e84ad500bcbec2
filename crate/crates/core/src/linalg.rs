//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Truncated annihilation operator on `d` levels.
pub fn destroy(d: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    m
}

pub fn number(d: usize) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d, (0..d).map(|n| c(n as f64, 0.0))))
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Embeds a single-site operator into a tensor-product space.
pub fn lift(op: &CMat, site: usize, dims: &[usize]) -> CMat {
    let mut out = CMat::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == site { op.clone() } else { identity(d) };
        out = kron(&out, &factor);
    }
    out
}

/// Frobenius norm.
pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// `true` when `‖m − m†‖ ≤ rel_tol · ‖m‖` (absolute for the zero matrix).
pub fn is_hermitian(m: &CMat, rel_tol: f64) -> bool {
    let scale = frobenius(m).max(1.0);
    hermiticity_defect(m) <= rel_tol * scale
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Projector `|v⟩⟨v|`.
pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn basis_vector(n: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[k] = ONE;
    v
}

/// Tr(AB) without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn destroy_lowers_number() {
        let a = destroy(4);
        let n = a.adjoint() * &a;
        assert!((n - number(4)).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn lift_places_operator_on_site() {
        let dims = [2, 3];
        let a = lift(&destroy(3), 1, &dims);
        assert_eq!(a.nrows(), 6);
        // |0,1> -> |0,0>
        assert!((a[(0, 1)] - ONE).norm() < 1e-14);
        assert!((a[(3, 4)] - ONE).norm() < 1e-14);
    }

    #[test]
    fn eigh_sorts_ascending() {
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = c(3.0, 0.0);
        m[(1, 1)] = c(-1.0, 0.0);
        m[(2, 2)] = c(2.0, 0.0);
        let (vals, vecs) = eigh(&m);
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-12);
    }
}
