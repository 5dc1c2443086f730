//! Hilbert-space value types, q-expectations, Gibbs states and the spectrum-proximity
//! theorem, all for finite dimension `N`.

mod expectation;
mod gibbs;
pub mod random;

pub use expectation::{nearest_spectral_value, q_expectation, q_uncertainty, SpectralProximity};
pub use gibbs::{euler_residual, gibbs_from_generator, grand_canonical, GibbsState, GrandCanonical};

use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMat, CVec, HermitianEigen};
use crate::{Error, Result};

/// Numerical tolerances used when validating values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Hermiticity residual.
    pub hermitian: f64,
    /// `|Tr ρ − 1|`.
    pub trace: f64,
    /// Allowed negative eigenvalue.
    pub psd: f64,
    /// Slack in the spectrum-proximity bound.
    pub theorem: f64,
    /// Matrix-exponential round trip.
    pub exp: f64,
    /// Eigenvalues closer than this are one eigenspace.
    pub degenerate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            trace: 1e-10,
            psd: 1e-9,
            theorem: 1e-10,
            exp: 1e-10,
            degenerate: 1e-8,
        }
    }
}

/// A Hermitian `N×N` matrix standing for a measurable quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianQuantity {
    matrix: CMat,
}

impl HermitianQuantity {
    pub fn new(matrix: CMat) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: CMat, tol: &Tolerances) -> Result<Self> {
        linalg::check_square(&matrix)?;
        if !linalg::is_finite(&matrix) {
            return Err(Error::NonFinite("Hermitian quantity entries".into()));
        }
        let residual = linalg::hermitian_residual(&matrix);
        if residual > tol.hermitian * linalg::max_abs(&matrix).max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self { matrix: linalg::hermitian_part(&matrix) })
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        Self { matrix: linalg::from_real_diagonal(d) }
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: linalg::identity(n) }
    }

    pub fn zero(n: usize) -> Self {
        Self { matrix: CMat::zeros(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn eigen(&self) -> Result<HermitianEigen> {
        HermitianEigen::new(&self.matrix)
    }

    /// `f(A)` through the spectral decomposition.
    pub fn apply_fn<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Ok(Self { matrix: self.eigen()?.map_real(f) })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: &self.matrix * c(s, 0.0) }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self { matrix: &self.matrix + &other.matrix })
    }

    /// `U A U*`
    pub fn conjugate_by(&self, u: &CMat) -> Self {
        Self { matrix: linalg::hermitian_part(&(u * &self.matrix * u.adjoint())) }
    }
}

/// A trace-one positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMat,
}

impl DensityOperator {
    pub fn new(matrix: CMat) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: CMat, tol: &Tolerances) -> Result<Self> {
        let herm = HermitianQuantity::with_tolerances(matrix, tol)?;
        let trace = linalg::trace(herm.matrix()).re;
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::TraceNotOne { trace });
        }
        let min_eigenvalue = herm.eigen()?.min();
        if min_eigenvalue < -tol.psd {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { matrix: herm.into_matrix() })
    }

    /// `ψψ*` for a unit vector `ψ`.
    pub fn pure(psi: &CVec) -> Result<Self> {
        check_unit(psi, Tolerances::default().hermitian)?;
        Ok(Self { matrix: linalg::projector(psi) })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self { matrix: linalg::identity(n) * c(1.0 / n as f64, 0.0) }
    }

    pub fn basis_state(n: usize, k: usize) -> Self {
        Self { matrix: linalg::projector(&linalg::basis_vector(n, k)) }
    }

    /// Nearest valid state by eigenvalue clipping: negative eigenvalues are set to
    /// zero and the trace is renormalized to one.
    pub fn from_clipped(matrix: &CMat) -> Result<Self> {
        linalg::check_square(matrix)?;
        let eig = HermitianEigen::new(matrix)?;
        let total: f64 = eig.values.iter().map(|&x| x.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("no positive spectrum to renormalize".into()));
        }
        let clipped = eig.map_real(|x| x.max(0.0) / total);
        Ok(Self { matrix: linalg::hermitian_part(&clipped) })
    }

    /// Trusted constructor for results of trace- and positivity-preserving maps.
    pub(crate) fn from_trusted(matrix: CMat) -> Self {
        Self { matrix: linalg::hermitian_part(&matrix) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn eigen(&self) -> Result<HermitianEigen> {
        HermitianEigen::new(&self.matrix)
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        Ok(self.eigen()?.values.iter().filter(|&&w| w > tol).count())
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.matrix, &self.matrix).re
    }

    /// Dominant eigenvector; equals `ψ` up to phase when `ρ = ψψ*`.
    pub fn principal_vector(&self) -> Result<CVec> {
        let eig = self.eigen()?;
        Ok(eig.vectors.column(eig.dim() - 1).into_owned())
    }

    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        linalg::trace_distance(&self.matrix, &other.matrix)
    }

    /// Validity residuals `(|Tr ρ − 1|, −min eig, Hermiticity)`.
    pub fn residuals(&self) -> Result<(f64, f64, f64)> {
        Ok((
            (linalg::trace(&self.matrix).re - 1.0).abs(),
            -self.eigen()?.min(),
            linalg::hermitian_residual(&self.matrix),
        ))
    }

    pub fn as_quantity(&self) -> HermitianQuantity {
        HermitianQuantity { matrix: self.matrix.clone() }
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_unit(psi: &CVec, tol: f64) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > tol {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}
