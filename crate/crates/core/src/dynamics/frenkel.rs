//! Dirac–Frenkel reduction of the Schrödinger equation to a parameterized family
//! of pure states `φ_z`.
//!
//! Stationarity of `∫ φ*(iħ∂_t − H)φ dt` over the tangent space gives, for real
//! parameters `z`, the linear system
//!
//! ```text
//! Re⟨t_a, t_b⟩ ż_b = Re⟨t_a, −(i/ħ) H φ⟩,     t_a = ∂_a φ − φ ⟨φ, ∂_a φ⟩
//! ```
//!
//! Tangents are taken orthogonal to `φ` so that the (unparameterized) global phase
//! drops out. The Gram matrix is Tikhonov-regularized with a relative factor, and
//! its condition number is monitored along the trajectory.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::linalg::{self, c, CMat, CVec, I};
use crate::qcore::{check_dims, HermitianQuantity};
use crate::{Error, Result};

pub trait CoherentFamily {
    fn param_dim(&self) -> usize;
    fn state_dim(&self) -> usize;
    /// Normalized state `φ_z`.
    fn state(&self, z: &[f64]) -> CVec;
    /// `∂φ_z/∂z_a` for every parameter.
    fn tangents(&self, z: &[f64]) -> Vec<CVec>;
}

/// Derivative of `u/‖u‖` given `du`.
fn normalized_derivative(u: &CVec, du: &CVec) -> CVec {
    let norm = u.norm();
    let dnorm = u.dotc(du).re / norm;
    du * c(1.0 / norm, 0.0) - u * c(dnorm / (norm * norm), 0.0)
}

/// Every unit vector of `C^N`, coordinatized by the real and imaginary parts of an
/// unnormalized vector. Redundant by two directions (scale and phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullStateFamily {
    pub n: usize,
}

impl FullStateFamily {
    pub fn coordinates(psi: &CVec) -> Vec<f64> {
        psi.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    fn raw(&self, z: &[f64]) -> CVec {
        CVec::from_fn(self.n, |k, _| c(z[2 * k], z[2 * k + 1]))
    }
}

impl CoherentFamily for FullStateFamily {
    fn param_dim(&self) -> usize {
        2 * self.n
    }

    fn state_dim(&self) -> usize {
        self.n
    }

    fn state(&self, z: &[f64]) -> CVec {
        linalg::normalize(&self.raw(z))
    }

    fn tangents(&self, z: &[f64]) -> Vec<CVec> {
        let u = self.raw(z);
        (0..2 * self.n)
            .map(|a| {
                let mut du = CVec::zeros(self.n);
                du[a / 2] = if a % 2 == 0 { c(1.0, 0.0) } else { I };
                normalized_derivative(&u, &du)
            })
            .collect()
    }
}

/// Oscillator coherent states `|α⟩`, `α = (x̄ + i p̄)/√2`, in the number basis
/// truncated to `levels` states and renormalized. `z = (x̄, p̄)`; the width is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicCoherentFamily {
    pub levels: usize,
}

impl HarmonicCoherentFamily {
    fn raw(&self, z: &[f64]) -> (CVec, CVec) {
        let alpha = c(z[0], z[1]) * std::f64::consts::FRAC_1_SQRT_2;
        let mut u = CVec::zeros(self.levels);
        // d u_n / d α = sqrt(n) u_{n-1}
        let mut du = CVec::zeros(self.levels);
        u[0] = c(1.0, 0.0);
        for n in 1..self.levels {
            let s = (n as f64).sqrt();
            u[n] = u[n - 1] * alpha / s;
            du[n] = u[n - 1] * s;
        }
        (u, du)
    }
}

impl CoherentFamily for HarmonicCoherentFamily {
    fn param_dim(&self) -> usize {
        2
    }

    fn state_dim(&self) -> usize {
        self.levels
    }

    fn state(&self, z: &[f64]) -> CVec {
        linalg::normalize(&self.raw(z).0)
    }

    fn tangents(&self, z: &[f64]) -> Vec<CVec> {
        let (u, du_dalpha) = self.raw(z);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dx = &du_dalpha * c(s, 0.0);
        let dp = &du_dalpha * c(0.0, s);
        vec![normalized_derivative(&u, &dx), normalized_derivative(&u, &dp)]
    }
}

/// `x̂ = (a + a†)/√2` on `levels` number states.
pub fn oscillator_position(levels: usize) -> HermitianQuantity {
    let mut m = CMat::zeros(levels, levels);
    for n in 1..levels {
        let v = c((n as f64 / 2.0).sqrt(), 0.0);
        m[(n - 1, n)] = v;
        m[(n, n - 1)] = v;
    }
    HermitianQuantity::new(m).expect("symmetric by construction")
}

/// `p̂ = i(a† − a)/√2` on `levels` number states.
pub fn oscillator_momentum(levels: usize) -> HermitianQuantity {
    let mut m = CMat::zeros(levels, levels);
    for n in 1..levels {
        let v = (n as f64 / 2.0).sqrt();
        m[(n, n - 1)] = c(0.0, v);
        m[(n - 1, n)] = c(0.0, -v);
    }
    HermitianQuantity::new(m).expect("Hermitian by construction")
}

/// `ħω(n + ½)` with `ħ = ω = 1`.
pub fn oscillator_hamiltonian(levels: usize) -> HermitianQuantity {
    let d: Vec<f64> = (0..levels).map(|n| n as f64 + 0.5).collect();
    HermitianQuantity::from_real_diagonal(&d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracFrenkelOptions {
    pub hbar: f64,
    /// Relative Tikhonov factor added to the Gram matrix diagonal.
    pub tikhonov: f64,
    /// Abort when the Gram condition number exceeds this (if set).
    pub max_condition: Option<f64>,
}

impl Default for DiracFrenkelOptions {
    fn default() -> Self {
        Self { hbar: 1.0, tikhonov: 1e-12, max_condition: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterTrajectory {
    pub times: Vec<f64>,
    pub params: Vec<Vec<f64>>,
    /// Largest `|‖φ_z‖ − 1|` seen.
    pub max_norm_deviation: f64,
    /// Largest Gram condition number seen.
    pub max_condition: f64,
}

impl ParameterTrajectory {
    pub fn final_params(&self) -> &[f64] {
        self.params.last().expect("trajectory has the initial point")
    }
}

fn velocity<F: CoherentFamily + ?Sized>(
    family: &F,
    h: &CMat,
    z: &[f64],
    opts: &DiracFrenkelOptions,
) -> Result<(Vec<f64>, f64)> {
    let phi = family.state(z);
    let tangents: Vec<CVec> = family
        .tangents(z)
        .into_iter()
        .map(|t| {
            let along = phi.dotc(&t);
            t - &phi * along
        })
        .collect();
    let m = tangents.len();
    let target = h * &phi * (-I / opts.hbar);
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for a in 0..m {
        for b in a..m {
            let g = tangents[a].dotc(&tangents[b]).re;
            gram[(a, b)] = g;
            gram[(b, a)] = g;
        }
        rhs[a] = tangents[a].dotc(&target).re;
    }
    let eig = SymmetricEigen::new(gram.clone());
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(hi > 0.0) {
        return Err(Error::SingularGram { condition: f64::INFINITY });
    }
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if let Some(limit) = opts.max_condition {
        if condition > limit {
            return Err(Error::SingularGram { condition });
        }
    }
    let lambda = opts.tikhonov * gram.trace() / m as f64;
    for a in 0..m {
        gram[(a, a)] += lambda;
    }
    let chol = gram.cholesky().ok_or(Error::SingularGram { condition })?;
    let zdot = chol.solve(&rhs);
    if zdot.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("parameter velocity".into()));
    }
    Ok((zdot.iter().copied().collect(), condition))
}

/// Integrates the reduced equations with classical RK4 from `z0` to `t_end`.
pub fn dirac_frenkel_reduce<F: CoherentFamily + ?Sized>(
    family: &F,
    h: &HermitianQuantity,
    z0: &[f64],
    t_end: f64,
    dt: f64,
    opts: &DiracFrenkelOptions,
) -> Result<ParameterTrajectory> {
    check_dims(family.state_dim(), h.dim())?;
    check_dims(family.param_dim(), z0.len())?;
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and t_end >= 0".into()));
    }
    let hm = h.matrix();
    let steps = (t_end / dt).round() as usize;
    let mut z = z0.to_vec();
    let mut out = ParameterTrajectory {
        times: vec![0.0],
        params: vec![z.clone()],
        max_norm_deviation: (family.state(&z).norm() - 1.0).abs(),
        max_condition: 0.0,
    };
    let shift = |z: &[f64], k: &[f64], s: f64| -> Vec<f64> { z.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for step in 1..=steps {
        let (k1, c1) = velocity(family, hm, &z, opts)?;
        let (k2, c2) = velocity(family, hm, &shift(&z, &k1, 0.5 * dt), opts)?;
        let (k3, c3) = velocity(family, hm, &shift(&z, &k2, 0.5 * dt), opts)?;
        let (k4, c4) = velocity(family, hm, &shift(&z, &k3, dt), opts)?;
        for i in 0..z.len() {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.max_condition = out.max_condition.max(c1.max(c2).max(c3).max(c4));
        out.max_norm_deviation = out.max_norm_deviation.max((family.state(&z).norm() - 1.0).abs());
        out.times.push(step as f64 * dt);
        out.params.push(z.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{q_expectation, random, DensityOperator};
    use crate::rng::seeded;
    use std::f64::consts::PI;

    #[test]
    fn tangents_match_finite_differences() {
        let fam = HarmonicCoherentFamily { levels: 30 };
        let z = [0.8, -0.3];
        let t = fam.tangents(&z);
        let h = 1e-6;
        for a in 0..2 {
            let (mut zp, mut zm) = (z, z);
            zp[a] += h;
            zm[a] -= h;
            let fd = (fam.state(&zp) - fam.state(&zm)) * c(0.5 / h, 0.0);
            assert!((fd - &t[a]).norm() < 1e-8);
        }
        let full = FullStateFamily { n: 3 };
        let z = [0.3, 0.1, -0.5, 0.2, 0.9, -0.4];
        let t = full.tangents(&z);
        for a in 0..6 {
            let (mut zp, mut zm) = (z, z);
            zp[a] += h;
            zm[a] -= h;
            let fd = (full.state(&zp) - full.state(&zm)) * c(0.5 / h, 0.0);
            assert!((fd - &t[a]).norm() < 1e-8);
        }
    }

    #[test]
    fn coherent_state_means() {
        let levels = 64;
        let fam = HarmonicCoherentFamily { levels };
        let rho = DensityOperator::pure(&fam.state(&[1.2, -0.7])).unwrap();
        assert!((q_expectation(&rho, &oscillator_position(levels)).unwrap() - 1.2).abs() < 1e-12);
        assert!((q_expectation(&rho, &oscillator_momentum(levels)).unwrap() + 0.7).abs() < 1e-12);
    }

    #[test]
    fn full_family_reproduces_schrodinger() {
        let mut rng = seeded(12);
        let n = 3;
        let h = random::hermitian(n, &mut rng);
        let psi0 = random::unit_vector(n, &mut rng);
        let fam = FullStateFamily { n };
        let t_end = 2.0;
        let mut errs = Vec::new();
        for dt in [0.02, 0.01] {
            let traj = dirac_frenkel_reduce(&fam, &h, &FullStateFamily::coordinates(&psi0), t_end, dt, &Default::default())
                .unwrap();
            let psi = fam.state(traj.final_params());
            let exact = linalg::unitary_propagator(h.matrix(), t_end).unwrap() * &psi0;
            let err = linalg::max_abs(&(linalg::projector(&psi) - linalg::projector(&exact)));
            assert!(err < 10.0 * dt * dt, "dt {dt}: {err}");
            assert!(traj.max_norm_deviation < 1e-8);
            errs.push(err);
        }
        assert!(errs[1] < errs[0]);
    }

    #[test]
    fn coherent_family_traces_classical_circle() {
        let levels = 64;
        let fam = HarmonicCoherentFamily { levels };
        let h = oscillator_hamiltonian(levels);
        let (x0, p0) = (1.0, 0.5);
        let traj = dirac_frenkel_reduce(&fam, &h, &[x0, p0], 2.0 * PI, 0.01, &Default::default()).unwrap();
        let mut worst = 0.0f64;
        for (t, z) in traj.times.iter().zip(&traj.params) {
            let xc = x0 * t.cos() + p0 * t.sin();
            let pc = -x0 * t.sin() + p0 * t.cos();
            worst = worst.max((z[0] - xc).hypot(z[1] - pc));
        }
        assert!(worst < 1e-3, "{worst}");
        assert!(traj.max_norm_deviation < 1e-8);
    }

    #[test]
    fn redundant_chart_can_be_rejected() {
        let fam = FullStateFamily { n: 2 };
        let h = HermitianQuantity::new(linalg::sigma_x()).unwrap();
        let opts = DiracFrenkelOptions { max_condition: Some(1e8), ..Default::default() };
        let r = dirac_frenkel_reduce(&fam, &h, &[1.0, 0.0, 0.0, 0.0], 1.0, 0.1, &opts);
        assert!(matches!(r, Err(Error::SingularGram { .. })));
    }

    #[test]
    fn mismatched_dimensions() {
        let fam = HarmonicCoherentFamily { levels: 8 };
        let h = oscillator_hamiltonian(9);
        assert!(dirac_frenkel_reduce(&fam, &h, &[0.0, 0.0], 1.0, 0.1, &Default::default()).is_err());
    }
}
