//! Dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real_diagonal(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| c(x, 0.0))))
}

/// Row-major construction from complex entries.
pub fn from_rows(n: usize, entries: &[C64]) -> CMat {
    assert_eq!(entries.len(), n * n);
    CMat::from_row_slice(n, n, entries)
}

pub fn sigma_x() -> CMat {
    from_rows(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn sigma_y() -> CMat {
    from_rows(2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn sigma_z() -> CMat {
    from_real_diagonal(&[1.0, -1.0])
}

/// `[I, σx, σy, σz]`
pub fn pauli_basis() -> [CMat; 4] {
    [identity(2), sigma_x(), sigma_y(), sigma_z()]
}

pub fn check_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_residual(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// `Tr(AB)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn projector(psi: &CVec) -> CMat {
    psi * psi.adjoint()
}

/// `φ*ψ`
pub fn inner(phi: &CVec, psi: &CVec) -> C64 {
    phi.dotc(psi)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are orthonormal eigenvectors matching `values`.
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Result<Self> {
        let n = check_square(m)?;
        if !is_finite(m) {
            return Err(Error::Eigen("matrix has non-finite entries".into()));
        }
        let herm = hermitian_part(m);
        let eig = herm
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| Error::Eigen("iteration did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V diag(f(λ)) V*`
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> CMat {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn map_real<F: Fn(f64) -> f64>(&self, f: F) -> CMat {
        self.map(|x| c(f(x), 0.0))
    }
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn unitary_propagator(h: &CMat, t: f64) -> Result<CMat> {
    let eig = HermitianEigen::new(h)?;
    Ok(eig.map(|lambda| (-I * lambda * t).exp()))
}

/// Trace norm `Σ |λ_i|` of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMat) -> Result<f64> {
    Ok(HermitianEigen::new(m)?.values.iter().map(|x| x.abs()).sum())
}

/// `½‖a − b‖₁` for Hermitian `a`, `b`.
pub fn trace_distance(a: &CMat, b: &CMat) -> Result<f64> {
    Ok(0.5 * trace_norm_hermitian(&(a - b))?)
}

/// Pairwise (cascade) summation; result is independent of how the input was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2..=8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn pairwise_sum_mat(ms: &[CMat]) -> Option<CMat> {
    match ms.len() {
        0 => None,
        1 => Some(ms[0].clone()),
        n => {
            let (a, b) = ms.split_at(n / 2);
            Some(pairwise_sum_mat(a)? + pairwise_sum_mat(b)?)
        }
    }
}

pub fn normalize(psi: &CVec) -> CVec {
    psi / c(psi.norm(), 0.0)
}

/// Unit vector in dimension `n` with a one at `k`.
pub fn basis_vector(n: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[k] = c(1.0, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = from_rows(2, &[c(2., 0.), c(0., 1.), c(0., -1.), c(-1., 0.)]);
        let eig = HermitianEigen::new(&m).unwrap();
        assert!(eig.values[0] < eig.values[1]);
        let back = eig.map_real(|x| x);
        assert!(max_abs(&(back - &m)) < 1e-12);
    }

    #[test]
    fn propagator_of_sigma_z() {
        let u = unitary_propagator(&sigma_z(), std::f64::consts::FRAC_PI_2).unwrap();
        assert!((u[(0, 0)] - c(0., -1.)).norm() < 1e-12);
        assert!((u[(1, 1)] - c(0., 1.)).norm() < 1e-12);
    }

    #[test]
    fn pairwise_matches_naive_sum() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
    }

    #[test]
    fn trace_distance_orthogonal_pure_states() {
        let a = projector(&basis_vector(2, 0));
        let b = projector(&basis_vector(2, 1));
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }
}
