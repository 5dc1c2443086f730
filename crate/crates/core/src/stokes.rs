//! Polarization optics as the classical face of a qubit: Stokes vectors, coherence
//! matrices, Jones and Mueller transforms, Malus' law, and the sliced-medium limit
//! that turns a stack of thin Jones elements into Schrödinger evolution.
//!
//! Convention: `ρ = ½(S0 I + S1 σx + S2 σy + S3 σz)`, so `S_a = Tr(σ_a ρ)`.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMat, CVec, HermitianEigen, I};
use crate::qcore::{check_dims, check_unit, Tolerances};
use crate::{Error, Result};

/// Slack for the cone condition `S0 ≥ |S⃗|`.
pub const STOKES_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Result<Self> {
        let s = Self { s0, s1, s2, s3 };
        if ![s0, s1, s2, s3].iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("Stokes parameters".into()));
        }
        if s0 < s.polarized_intensity() - STOKES_EPS * s0.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "Stokes vector outside the cone: S0 = {s0} < |S| = {}",
                s.polarized_intensity()
            )));
        }
        Ok(s)
    }

    pub fn unpolarized(intensity: f64) -> Self {
        Self { s0: intensity, s1: 0.0, s2: 0.0, s3: 0.0 }
    }

    /// `|S⃗|`
    pub fn polarized_intensity(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.s0, self.s1, self.s2, self.s3)
    }

    fn from_vector(v: &Vector4<f64>) -> Self {
        Self { s0: v[0], s1: v[1], s2: v[2], s3: v[3] }
    }
}

/// Positive semidefinite 2×2 Hermitian matrix with trace equal to the intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMatrix {
    matrix: CMat,
}

impl CoherenceMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != 2 || matrix.ncols() != 2 {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        let tol = Tolerances::default();
        let residual = linalg::hermitian_residual(&matrix);
        if residual > tol.hermitian * linalg::max_abs(&matrix).max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        let herm = linalg::hermitian_part(&matrix);
        let min_eigenvalue = HermitianEigen::new(&herm)?.min();
        if min_eigenvalue < -tol.psd * linalg::max_abs(&herm).max(1.0) {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { matrix: herm })
    }

    /// `ψψ*`, a fully polarized beam of intensity `|ψ|²`.
    pub fn pure(psi: &CVec) -> Result<Self> {
        check_dims(2, psi.len())?;
        Ok(Self { matrix: linalg::projector(psi) })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn intensity(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JonesMatrix {
    matrix: CMat,
}

impl JonesMatrix {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != 2 || matrix.ncols() != 2 {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::NonFinite("Jones matrix".into()));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self { matrix: linalg::identity(2) }
    }

    /// Rotation of the polarization plane by `theta`.
    pub fn rotator(theta: f64) -> Self {
        let (s, co) = theta.sin_cos();
        Self { matrix: linalg::from_rows(2, &[c(co, 0.), c(-s, 0.), c(s, 0.), c(co, 0.)]) }
    }

    /// Retarder with phase difference `delta` between the two basis polarizations.
    pub fn retarder(delta: f64) -> Self {
        Self { matrix: linalg::from_rows(2, &[c(1., 0.), c(0., 0.), c(0., 0.), (I * delta).exp()]) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Unitary within `εH`, i.e. the element transmits all intensity.
    pub fn is_lossless(&self) -> bool {
        let dev = &self.matrix.adjoint() * &self.matrix - linalg::identity(2);
        linalg::max_abs(&dev) <= Tolerances::default().hermitian
    }

    pub fn compose(&self, after: &JonesMatrix) -> JonesMatrix {
        JonesMatrix { matrix: &after.matrix * &self.matrix }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuellerMatrix {
    pub matrix: Matrix4<f64>,
}

impl MuellerMatrix {
    pub fn apply(&self, s: &StokesVector) -> StokesVector {
        StokesVector::from_vector(&(self.matrix * s.to_vector()))
    }

    pub fn compose(&self, after: &MuellerMatrix) -> MuellerMatrix {
        MuellerMatrix { matrix: after.matrix * self.matrix }
    }
}

pub fn stokes_to_coherence(s: &StokesVector) -> Result<CoherenceMatrix> {
    let s = StokesVector::new(s.s0, s.s1, s.s2, s.s3)?;
    let m = linalg::from_rows(
        2,
        &[
            c(0.5 * (s.s0 + s.s3), 0.0),
            c(0.5 * s.s1, -0.5 * s.s2),
            c(0.5 * s.s1, 0.5 * s.s2),
            c(0.5 * (s.s0 - s.s3), 0.0),
        ],
    );
    Ok(CoherenceMatrix { matrix: m })
}

pub fn coherence_to_stokes(rho: &CoherenceMatrix) -> StokesVector {
    let m = &rho.matrix;
    StokesVector {
        s0: (m[(0, 0)] + m[(1, 1)]).re,
        s1: (m[(0, 1)] + m[(1, 0)]).re,
        s2: (m[(1, 0)] - m[(0, 1)]).im,
        s3: (m[(0, 0)] - m[(1, 1)]).re,
    }
}

/// `|S⃗| / S0`
pub fn degree_of_polarization(s: &StokesVector) -> Result<f64> {
    if !(s.s0 > 0.0) {
        return Err(Error::InvalidArgument(format!("intensity must be positive, got {}", s.s0)));
    }
    Ok((s.polarized_intensity() / s.s0).min(1.0))
}

/// `ρ' = T ρ T*`
pub fn apply_jones(rho: &CoherenceMatrix, t: &JonesMatrix) -> CoherenceMatrix {
    CoherenceMatrix { matrix: linalg::hermitian_part(&(&t.matrix * &rho.matrix * t.matrix.adjoint())) }
}

/// Polarizer `T = φφ*` for a unit vector `φ`.
pub fn polarizer(phi: &CVec) -> Result<JonesMatrix> {
    check_dims(2, phi.len())?;
    check_unit(phi, Tolerances::default().hermitian)?;
    JonesMatrix::new(linalg::projector(phi))
}

/// Linear polarization direction at angle `theta` from the first axis.
pub fn linear_polarization(theta: f64) -> CVec {
    CVec::from_vec(vec![c(theta.cos(), 0.0), c(theta.sin(), 0.0)])
}

/// `M_ab = ½ Tr(σ_a T σ_b T*)`, the Stokes-space action of `ρ ↦ TρT*`.
pub fn jones_to_mueller(t: &JonesMatrix) -> MuellerMatrix {
    let sigma = linalg::pauli_basis();
    let t_adj = t.matrix.adjoint();
    let mut m = Matrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            let tb = &t.matrix * &sigma[b] * &t_adj;
            m[(a, b)] = 0.5 * linalg::trace_product(&sigma[a], &tb).re;
        }
    }
    MuellerMatrix { matrix: m }
}

/// Completely positive mixture `ρ ↦ Σ w_i T_i ρ T_i*` of Jones elements.
#[derive(Debug, Clone, PartialEq)]
pub struct DepolarizingMap {
    branches: Vec<(f64, JonesMatrix)>,
    mueller: MuellerMatrix,
}

impl DepolarizingMap {
    pub fn mueller(&self) -> &MuellerMatrix {
        &self.mueller
    }

    pub fn branches(&self) -> &[(f64, JonesMatrix)] {
        &self.branches
    }

    pub fn apply(&self, rho: &CoherenceMatrix) -> CoherenceMatrix {
        let mut out = CMat::zeros(2, 2);
        for (w, t) in &self.branches {
            out += apply_jones(rho, t).matrix * c(*w, 0.0);
        }
        CoherenceMatrix { matrix: out }
    }
}

pub fn depolarizing_map(branches: Vec<(f64, JonesMatrix)>) -> Result<DepolarizingMap> {
    if branches.is_empty() {
        return Err(Error::InvalidArgument("a depolarizing map needs at least one branch".into()));
    }
    if let Some((w, _)) = branches.iter().find(|(w, _)| !(*w >= 0.0)) {
        return Err(Error::InvalidArgument(format!("branch weight {w} is negative")));
    }
    let matrix = branches
        .iter()
        .fold(Matrix4::zeros(), |acc, (w, t)| acc + jones_to_mueller(t).matrix * *w);
    Ok(DepolarizingMap { branches, mueller: MuellerMatrix { matrix } })
}

/// One row of a Malus sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MalusPoint {
    pub angle: f64,
    /// Transmitted intensity `Tr(TρT*)` through the polarizer.
    pub intensity: f64,
    /// `|φ*ψ|²` evaluated as a test-state probability.
    pub test_probability: f64,
}

/// Unit-intensity beam `ψ` through linear polarizers at each angle.
pub fn malus_sweep(psi: &CVec, angles: &[f64]) -> Result<Vec<MalusPoint>> {
    let beam = CoherenceMatrix::pure(psi)?;
    angles
        .iter()
        .map(|&angle| {
            let phi = linear_polarization(angle);
            let out = apply_jones(&beam, &polarizer(&phi)?);
            Ok(MalusPoint {
                angle,
                intensity: out.intensity(),
                test_probability: crate::measure::test_state(&phi, psi)?,
            })
        })
        .collect()
}

/// Outcome of pushing a state through `n` thin slices `T = 1 − iΔt H(t)/ħ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedRun {
    pub n_slices: usize,
    pub sliced: CVec,
    pub reference: CVec,
    /// `‖ψ_sliced − ψ_ref‖`
    pub error: f64,
}

/// Product of first-order slices against a reference built from exact midpoint
/// exponentials on a grid ten times finer. The slices are not renormalized.
pub fn sliced_medium_evolution<F>(h: F, psi0: &CVec, t_end: f64, n_slices: usize, hbar: f64) -> Result<SlicedRun>
where
    F: Fn(f64) -> CMat,
{
    if n_slices == 0 {
        return Err(Error::InvalidArgument("need at least one slice".into()));
    }
    check_unit(psi0, Tolerances::default().hermitian)?;
    let n = psi0.len();
    let dt = t_end / n_slices as f64;
    let mut sliced = psi0.clone();
    for m in 0..n_slices {
        let hm = h(m as f64 * dt);
        check_dims(n, hm.nrows())?;
        let t = linalg::identity(n) - hm * (I * (dt / hbar));
        sliced = t * sliced;
    }
    let fine = 10 * n_slices;
    let dt_ref = t_end / fine as f64;
    let mut reference = psi0.clone();
    for m in 0..fine {
        let u = linalg::unitary_propagator(&h((m as f64 + 0.5) * dt_ref), dt_ref / hbar)?;
        reference = u * reference;
    }
    let error = (&sliced - &reference).norm();
    Ok(SlicedRun { n_slices, sliced, reference, error })
}

/// `(n_slices, error, error / previous error)` for each slice count.
pub fn sliced_convergence<F>(h: F, psi0: &CVec, t_end: f64, slices: &[usize], hbar: f64) -> Result<Vec<(usize, f64, Option<f64>)>>
where
    F: Fn(f64) -> CMat,
{
    let mut rows: Vec<(usize, f64, Option<f64>)> = Vec::with_capacity(slices.len());
    for &n in slices {
        let run = sliced_medium_evolution(&h, psi0, t_end, n, hbar)?;
        let ratio = rows.last().map(|(_, prev, _)| run.error / prev);
        rows.push((n, run.error, ratio));
    }
    Ok(rows)
}
