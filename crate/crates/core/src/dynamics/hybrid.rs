//! Mixed quantum-classical motion: a density operator `ρ` evolving under the
//! Liouville equation `iħρ̇ = [H(p,q), ρ]` while `(q, p)` follow Hamilton's
//! equations with q-expectation forces `q̇ = ⟨∂H/∂p⟩`, `ṗ = −⟨∂H/∂q⟩`.
//!
//! One step is a Strang splitting: half a classical step with `ρ` frozen, a full
//! unitary step `ρ ← UρU*` with `U = exp(−i dt H(p,q)/ħ)`, and another classical
//! half step. Both sub-flows conserve `⟨H(p,q)⟩` exactly, the unitary part keeps
//! trace and rank, and the composition is second order.

use crate::linalg::{self, c, CMat, CVec};
use crate::qcore::{check_dims, DensityOperator};
use crate::{Error, Result};

/// A Hermitian operator depending on a classical phase-space point.
pub trait PhaseSpaceOperator {
    /// Quantum dimension.
    fn dim(&self) -> usize;
    /// Number of classical degrees of freedom.
    fn dof(&self) -> usize;
    fn operator(&self, p: &[f64], q: &[f64]) -> CMat;
    /// `∂/∂p_i`, one matrix per degree of freedom.
    fn grad_p(&self, p: &[f64], q: &[f64]) -> Vec<CMat>;
    /// `∂/∂q_i`, one matrix per degree of freedom.
    fn grad_q(&self, p: &[f64], q: &[f64]) -> Vec<CMat>;
}

pub trait HybridModel: PhaseSpaceOperator {
    fn hbar(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub rho: DensityOperator,
    pub t: f64,
}

impl HybridState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, rho: DensityOperator) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch { expected: q.len(), found: p.len() });
        }
        Ok(Self { q, p, rho, t: 0.0 })
    }

    /// `⟨H(p,q)⟩`
    pub fn energy<M: HybridModel + ?Sized>(&self, model: &M) -> f64 {
        expect(self.rho.matrix(), &model.operator(&self.p, &self.q))
    }
}

/// Pure-state counterpart of [`HybridState`], for the hybrid Schrödinger equation
/// `iħψ̇ = H(p,q)ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureHybridState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub psi: CVec,
    pub t: f64,
}

fn expect(rho: &CMat, a: &CMat) -> f64 {
    linalg::trace_product(rho, a).re
}

fn expect_pure(psi: &CVec, a: &CMat) -> f64 {
    psi.dotc(&(a * psi)).re
}

/// Generalized Störmer–Verlet over `tau` for the classical Hamiltonian
/// `h(p,q) = ⟨H(p,q)⟩` with the quantum state frozen. Implicit stages are solved
/// by fixed-point iteration (one pass suffices when `H` is separable).
fn classical_flow<M, E>(model: &M, q: &mut [f64], p: &mut [f64], tau: f64, expect_op: E) -> Result<()>
where
    M: HybridModel + ?Sized,
    E: Fn(&CMat) -> f64,
{
    let dof = q.len();
    let force_q = |p: &[f64], q: &[f64]| -> Vec<f64> {
        model.grad_q(p, q).iter().map(&expect_op).collect()
    };
    let velocity = |p: &[f64], q: &[f64]| -> Vec<f64> {
        model.grad_p(p, q).iter().map(&expect_op).collect()
    };
    let half = 0.5 * tau;
    const MAX_ITER: usize = 100;
    const TOL: f64 = 1e-14;

    // p_half = p − τ/2 ∂_q h(p_half, q)
    let mut p_half = p.to_vec();
    for _ in 0..MAX_ITER {
        let f = force_q(&p_half, q);
        let next: Vec<f64> = (0..dof).map(|i| p[i] - half * f[i]).collect();
        let delta = next.iter().zip(&p_half).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p_half = next;
        if delta <= TOL * (1.0 + p_half.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    // q' = q + τ/2 (∂_p h(p_half, q) + ∂_p h(p_half, q'))
    let v0 = velocity(&p_half, q);
    let mut q_new: Vec<f64> = (0..dof).map(|i| q[i] + tau * v0[i]).collect();
    for _ in 0..MAX_ITER {
        let v1 = velocity(&p_half, &q_new);
        let next: Vec<f64> = (0..dof).map(|i| q[i] + half * (v0[i] + v1[i])).collect();
        let delta = next.iter().zip(&q_new).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        q_new = next;
        if delta <= TOL * (1.0 + q_new.iter().map(|x| x.abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    // p' = p_half − τ/2 ∂_q h(p_half, q')
    let f = force_q(&p_half, &q_new);
    for i in 0..dof {
        p[i] = p_half[i] - half * f[i];
        q[i] = q_new[i];
    }
    if q.iter().chain(p.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("classical phase-space point".into()));
    }
    Ok(())
}

fn check_model<M: HybridModel + ?Sized>(model: &M, dof: usize, dim: usize, dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    check_dims(model.dof(), dof)?;
    check_dims(model.dim(), dim)
}

pub fn hybrid_step<M: HybridModel + ?Sized>(state: &HybridState, model: &M, dt: f64) -> Result<HybridState> {
    check_model(model, state.q.len(), state.rho.dim(), dt)?;
    let rho = state.rho.matrix().clone();
    let (mut q, mut p) = (state.q.clone(), state.p.clone());
    classical_flow(model, &mut q, &mut p, 0.5 * dt, |a| expect(&rho, a))?;
    let u = linalg::unitary_propagator(&model.operator(&p, &q), dt / model.hbar())?;
    let rho = &u * rho * u.adjoint();
    if !linalg::is_finite(&rho) {
        return Err(Error::NonFinite("density operator".into()));
    }
    classical_flow(model, &mut q, &mut p, 0.5 * dt, |a| expect(&rho, a))?;
    Ok(HybridState { q, p, rho: DensityOperator::from_trusted(rho), t: state.t + dt })
}

/// Same splitting applied to a state vector.
pub fn hybrid_step_pure<M: HybridModel + ?Sized>(
    state: &PureHybridState,
    model: &M,
    dt: f64,
) -> Result<PureHybridState> {
    check_model(model, state.q.len(), state.psi.len(), dt)?;
    let psi = state.psi.clone();
    let (mut q, mut p) = (state.q.clone(), state.p.clone());
    classical_flow(model, &mut q, &mut p, 0.5 * dt, |a| expect_pure(&psi, a))?;
    let u = linalg::unitary_propagator(&model.operator(&p, &q), dt / model.hbar())?;
    let psi = u * psi;
    classical_flow(model, &mut q, &mut p, 0.5 * dt, |a| expect_pure(&psi, a))?;
    Ok(PureHybridState { q, p, psi, t: state.t + dt })
}

/// `n_steps` steps, keeping every `record_every`-th state (and the initial one).
pub fn integrate<M: HybridModel + ?Sized>(
    state: &HybridState,
    model: &M,
    dt: f64,
    n_steps: usize,
    record_every: usize,
) -> Result<Vec<HybridState>> {
    let every = record_every.max(1);
    let mut out = vec![state.clone()];
    let mut current = state.clone();
    for step in 1..=n_steps {
        current = hybrid_step(&current, model, dt)?;
        if step % every == 0 {
            out.push(current.clone());
        }
    }
    Ok(out)
}

/// `d⟨A⟩/dt = Σ_i (⟨∂A/∂q_i⟩⟨∂H/∂p_i⟩ − ⟨∂A/∂p_i⟩⟨∂H/∂q_i⟩) + ⟨(i/ħ)[H, A]⟩`.
pub fn ehrenfest_rhs<M, A>(state: &HybridState, model: &M, a: &A) -> Result<f64>
where
    M: HybridModel + ?Sized,
    A: PhaseSpaceOperator + ?Sized,
{
    check_dims(model.dim(), a.dim())?;
    check_dims(model.dof(), a.dof())?;
    check_dims(model.dim(), state.rho.dim())?;
    let rho = state.rho.matrix();
    let (p, q) = (&state.p, &state.q);
    let (hp, hq) = (model.grad_p(p, q), model.grad_q(p, q));
    let (ap, aq) = (a.grad_p(p, q), a.grad_q(p, q));
    let mut rate = 0.0;
    for i in 0..model.dof() {
        rate += expect(rho, &aq[i]) * expect(rho, &hp[i]) - expect(rho, &ap[i]) * expect(rho, &hq[i]);
    }
    let comm = linalg::commutator(&model.operator(p, q), &a.operator(p, q));
    rate += (linalg::trace_product(rho, &comm) * c(0.0, 1.0 / model.hbar())).re;
    Ok(rate)
}

/// Largest relative deviation between model gradients and central differences.
pub fn check_gradients<M: PhaseSpaceOperator + ?Sized>(model: &M, p: &[f64], q: &[f64], step: f64) -> f64 {
    let (gp, gq) = (model.grad_p(p, q), model.grad_q(p, q));
    let mut worst = 0.0f64;
    for i in 0..model.dof() {
        for (is_p, analytic) in [(true, &gp[i]), (false, &gq[i])] {
            let (mut plus_p, mut plus_q) = (p.to_vec(), q.to_vec());
            let (mut minus_p, mut minus_q) = (p.to_vec(), q.to_vec());
            if is_p {
                plus_p[i] += step;
                minus_p[i] -= step;
            } else {
                plus_q[i] += step;
                minus_q[i] -= step;
            }
            let fd = (model.operator(&plus_p, &plus_q) - model.operator(&minus_p, &minus_q)) * c(0.5 / step, 0.0);
            let scale = linalg::max_abs(analytic).max(1.0);
            worst = worst.max(linalg::max_abs(&(fd - analytic)) / scale);
        }
    }
    worst
}

/// `H(p,q) = (p²/2m + mω²q²/2) I + (Δ/2) σx + (g q + ε/2) σz`: one classical mode
/// coupled to a two-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinBoson {
    pub mass: f64,
    pub omega: f64,
    pub tunneling: f64,
    pub coupling: f64,
    pub bias: f64,
}

impl Default for SpinBoson {
    fn default() -> Self {
        Self { mass: 1.0, omega: 1.0, tunneling: 1.0, coupling: 0.5, bias: 0.0 }
    }
}

impl PhaseSpaceOperator for SpinBoson {
    fn dim(&self) -> usize {
        2
    }

    fn dof(&self) -> usize {
        1
    }

    fn operator(&self, p: &[f64], q: &[f64]) -> CMat {
        let bath = p[0] * p[0] / (2.0 * self.mass) + 0.5 * self.mass * self.omega.powi(2) * q[0] * q[0];
        linalg::identity(2) * c(bath, 0.0)
            + linalg::sigma_x() * c(0.5 * self.tunneling, 0.0)
            + linalg::sigma_z() * c(self.coupling * q[0] + 0.5 * self.bias, 0.0)
    }

    fn grad_p(&self, p: &[f64], _q: &[f64]) -> Vec<CMat> {
        vec![linalg::identity(2) * c(p[0] / self.mass, 0.0)]
    }

    fn grad_q(&self, _p: &[f64], q: &[f64]) -> Vec<CMat> {
        vec![
            linalg::identity(2) * c(self.mass * self.omega.powi(2) * q[0], 0.0)
                + linalg::sigma_z() * c(self.coupling, 0.0),
        ]
    }
}

impl HybridModel for SpinBoson {}

/// `H(p,q) = (p² + q²)/2` on a one-dimensional quantum sector.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassicalOscillator;

impl PhaseSpaceOperator for ClassicalOscillator {
    fn dim(&self) -> usize {
        1
    }

    fn dof(&self) -> usize {
        1
    }

    fn operator(&self, p: &[f64], q: &[f64]) -> CMat {
        CMat::from_element(1, 1, c(0.5 * (p[0] * p[0] + q[0] * q[0]), 0.0))
    }

    fn grad_p(&self, p: &[f64], _q: &[f64]) -> Vec<CMat> {
        vec![CMat::from_element(1, 1, c(p[0], 0.0))]
    }

    fn grad_q(&self, _p: &[f64], q: &[f64]) -> Vec<CMat> {
        vec![CMat::from_element(1, 1, c(q[0], 0.0))]
    }
}

impl HybridModel for ClassicalOscillator {}

/// Phase-space independent Hamiltonian; the classical sector does not move.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticModel {
    pub h: CMat,
    pub dof: usize,
}

impl PhaseSpaceOperator for StaticModel {
    fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn dof(&self) -> usize {
        self.dof
    }

    fn operator(&self, _p: &[f64], _q: &[f64]) -> CMat {
        self.h.clone()
    }

    fn grad_p(&self, _p: &[f64], _q: &[f64]) -> Vec<CMat> {
        vec![CMat::zeros(self.dim(), self.dim()); self.dof]
    }

    fn grad_q(&self, _p: &[f64], _q: &[f64]) -> Vec<CMat> {
        vec![CMat::zeros(self.dim(), self.dim()); self.dof]
    }
}

impl HybridModel for StaticModel {}
