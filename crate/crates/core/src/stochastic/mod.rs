//! Lindblad-type open-system dynamics and its jump unraveling.
//!
//! The master equation
//!
//! ```text
//! ρ̇ = −(i/ħ)[H, ρ] + Σ_k (L_k ρ L_k* − ½{L_k*L_k, ρ})
//! ```
//!
//! is written as `ρ̇ = Gρ + ρG* + Σ L_k ρ L_k*` with `G = −(i/ħ)H − ½ Σ L_k*L_k`.
//! Its piecewise deterministic unraveling drifts an unnormalized vector under
//! `ψ̇ = Gψ` and fires a jump when `‖ψ‖²` falls below a uniform threshold drawn
//! after the previous jump. Averaging `ψψ*/‖ψ‖²` over trajectories recovers `ρ`.

mod bistable;
mod detection;

pub use bistable::{bistable_selection, BistableModel, BistableRun, Branch};
pub use detection::{
    born_emergence, detection_statistics, ks_exponential, BornEmergence, DetectionOptions, DetectionStats,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMat, CVec, HermitianEigen, I};
use crate::qcore::{check_dims, check_unit, DensityOperator, HermitianQuantity};
use crate::rng::{self, SimRng};
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    h: HermitianQuantity,
    jumps: Vec<CMat>,
    hbar: f64,
}

impl LindbladModel {
    pub fn new(h: HermitianQuantity, jumps: Vec<CMat>) -> Result<Self> {
        let n = h.dim();
        for l in &jumps {
            let m = linalg::check_square(l)?;
            check_dims(n, m)?;
            if !linalg::is_finite(l) {
                return Err(Error::NonFinite("jump operator".into()));
            }
        }
        Ok(Self { h, jumps, hbar: 1.0 })
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("hbar must be positive, got {hbar}")));
        }
        self.hbar = hbar;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn hamiltonian(&self) -> &HermitianQuantity {
        &self.h
    }

    pub fn jumps(&self) -> &[CMat] {
        &self.jumps
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `Σ L_k*L_k`
    pub fn decay_operator(&self) -> CMat {
        let n = self.dim();
        self.jumps.iter().fold(CMat::zeros(n, n), |acc, l| acc + l.adjoint() * l)
    }

    /// `G = −(i/ħ)H_eff` with `H_eff = H − (iħ/2) Σ L_k*L_k`.
    pub fn drift_generator(&self) -> CMat {
        self.h.matrix() * (-I / self.hbar) - self.decay_operator() * c(0.5, 0.0)
    }

    /// Largest decay rate plus the spectral width of `H/ħ`; `dt` should keep
    /// `dt · rate` at or below 0.1.
    pub fn fastest_rate(&self) -> Result<f64> {
        let decay = HermitianEigen::new(&self.decay_operator())?.max();
        let spec = self.h.eigen()?;
        Ok(decay.max(0.0) + (spec.max() - spec.min()) / self.hbar)
    }

    pub fn rhs(&self, rho: &CMat) -> CMat {
        let g = self.drift_generator();
        self.rhs_with(&g, rho)
    }

    fn rhs_with(&self, g: &CMat, rho: &CMat) -> CMat {
        let mut out = g * rho;
        out += rho * g.adjoint();
        for l in &self.jumps {
            out += l * rho * l.adjoint();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterPath {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<DensityOperator>,
    /// Largest `|Tr ρ − 1|` before per-step renormalization.
    pub max_trace_drift: f64,
    pub warnings: Vec<String>,
}

/// Fixed-step RK4 integration of the master equation, one state per step.
pub fn master_integrate(model: &LindbladModel, rho0: &DensityOperator, t_end: f64, dt: f64) -> Result<MasterPath> {
    check_dims(model.dim(), rho0.dim())?;
    let steps = step_count(t_end, dt)?;
    let mut warnings = Vec::new();
    let rate = model.fastest_rate()?;
    if dt * rate > 0.1 {
        warnings.push(format!("dt * fastest rate = {:.3} exceeds 0.1; results may be inaccurate", dt * rate));
    }
    let g = model.drift_generator();
    let mut rho = rho0.matrix().clone();
    let mut path = MasterPath {
        dt,
        times: vec![0.0],
        states: vec![rho0.clone()],
        max_trace_drift: 0.0,
        warnings,
    };
    let half = c(0.5 * dt, 0.0);
    let full = c(dt, 0.0);
    for step in 1..=steps {
        let k1 = model.rhs_with(&g, &rho);
        let k2 = model.rhs_with(&g, &(&rho + &k1 * half));
        let k3 = model.rhs_with(&g, &(&rho + &k2 * half));
        let k4 = model.rhs_with(&g, &(&rho + &k3 * full));
        rho += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
        if !linalg::is_finite(&rho) {
            return Err(Error::NonFinite(format!("master equation state at t = {}", step as f64 * dt)));
        }
        let trace = linalg::trace(&rho).re;
        path.max_trace_drift = path.max_trace_drift.max((trace - 1.0).abs());
        rho = linalg::hermitian_part(&rho) / c(trace, 0.0);
        path.times.push(step as f64 * dt);
        path.states.push(DensityOperator::new(rho.clone())?);
    }
    Ok(path)
}

fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_end >= 0, got dt = {dt}, t_end = {t_end}")));
    }
    Ok((t_end / dt).round() as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: usize,
}

/// Normalized state at a grid time, stored as `(re, im)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub time: f64,
    pub state: Vec<[f64; 2]>,
}

impl PathSample {
    pub fn vector(&self) -> CVec {
        CVec::from_iterator(self.state.len(), self.state.iter().map(|&[re, im]| c(re, im)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpTrajectory {
    pub events: Vec<JumpEvent>,
    pub state_path: Vec<PathSample>,
    pub seed: u64,
    pub stream: u64,
    /// Steps on which the drift increased the norm; zero for a dissipative drift.
    pub norm_violations: usize,
}

impl JumpTrajectory {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpOptions {
    pub dt: f64,
    /// Record the state every this many steps (the initial state is always kept).
    pub record_every: usize,
    /// Stop integrating once this many jumps have fired.
    pub stop_after_events: Option<usize>,
}

impl Default for PdpOptions {
    fn default() -> Self {
        Self { dt: 0.01, record_every: 1, stop_after_events: None }
    }
}

/// `Σ_{k≤4} (Gs)^k / k!`: one RK4 step of length `s` for the linear drift.
fn rk4_propagator(g: &CMat, s: f64) -> CMat {
    let gs = g * c(s, 0.0);
    let n = g.nrows();
    let mut out = linalg::identity(n);
    let mut term = linalg::identity(n);
    for k in 1..=4 {
        term = &term * &gs / c(k as f64, 0.0);
        out += &term;
    }
    out
}

struct Drift<'a> {
    model: &'a LindbladModel,
    g: CMat,
    step: CMat,
    dt: f64,
}

impl<'a> Drift<'a> {
    fn new(model: &'a LindbladModel, dt: f64) -> Self {
        let g = model.drift_generator();
        let step = rk4_propagator(&g, dt);
        Self { model, g, step, dt }
    }

    /// Advances by `fraction · dt`.
    fn advance(&self, psi: &CVec, fraction: f64) -> CVec {
        if fraction == 1.0 {
            &self.step * psi
        } else {
            rk4_propagator(&self.g, fraction * self.dt) * psi
        }
    }
}

/// One jump trajectory with default options (`dt = 0.01`).
pub fn pdp_trajectory(model: &LindbladModel, psi0: &CVec, t_end: f64, seed: u64) -> Result<JumpTrajectory> {
    pdp_trajectory_with(model, psi0, t_end, seed, &PdpOptions::default())
}

pub fn pdp_trajectory_with(
    model: &LindbladModel,
    psi0: &CVec,
    t_end: f64,
    seed: u64,
    opts: &PdpOptions,
) -> Result<JumpTrajectory> {
    check_pdp_inputs(model, psi0, opts)?;
    let steps = step_count(t_end, opts.dt)?;
    let drift = Drift::new(model, opts.dt);
    run_pdp(&drift, psi0, steps, seed, 0, opts)
}

fn check_pdp_inputs(model: &LindbladModel, psi0: &CVec, opts: &PdpOptions) -> Result<()> {
    check_dims(model.dim(), psi0.len())?;
    check_unit(psi0, 1e-8)?;
    if opts.record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be at least 1".into()));
    }
    Ok(())
}

fn sample(time: f64, psi: &CVec) -> PathSample {
    let unit = linalg::normalize(psi);
    PathSample { time, state: unit.iter().map(|z| [z.re, z.im]).collect() }
}

fn run_pdp(drift: &Drift, psi0: &CVec, steps: usize, seed: u64, stream: u64, opts: &PdpOptions) -> Result<JumpTrajectory> {
    let mut rng: SimRng = rng::split(seed, stream);
    let dt = drift.dt;
    let mut psi = psi0.clone();
    let mut threshold: f64 = rng.random();
    let mut traj = JumpTrajectory {
        events: Vec::new(),
        state_path: vec![sample(0.0, &psi)],
        seed,
        stream,
        norm_violations: 0,
    };
    let stop = opts.stop_after_events.unwrap_or(usize::MAX);
    'steps: for step in 0..steps {
        let t0 = step as f64 * dt;
        let mut done = 0.0;
        loop {
            let remaining = 1.0 - done;
            let next = drift.advance(&psi, remaining);
            let before = psi.norm_squared();
            let after = next.norm_squared();
            if !after.is_finite() {
                return Err(Error::NonFinite(format!("jump trajectory at t = {t0}")));
            }
            if after > before * (1.0 + 1e-12) {
                traj.norm_violations += 1;
            }
            if after > threshold {
                psi = next;
                break;
            }
            // Threshold crossed inside the step: bisect on the fraction.
            let (mut lo, mut hi) = (0.0, remaining);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if drift.advance(&psi, mid).norm_squared() > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let at = drift.advance(&psi, hi);
            let time = t0 + (done + hi) * dt;
            let weights: Vec<f64> = drift.model.jumps.iter().map(|l| (l * &at).norm_squared()).collect();
            let total: f64 = weights.iter().sum();
            if !(total > 1e-300) || !total.is_finite() {
                return Err(Error::NoJumpChannel { time });
            }
            let mut pick = rng.random::<f64>() * total;
            let mut channel = weights.len() - 1;
            for (k, w) in weights.iter().enumerate() {
                if pick < *w {
                    channel = k;
                    break;
                }
                pick -= w;
            }
            let jumped = &drift.model.jumps[channel] * &at;
            psi = linalg::normalize(&jumped);
            threshold = rng.random();
            traj.events.push(JumpEvent { time, channel });
            done += hi;
            if traj.events.len() >= stop {
                traj.state_path.push(sample(time, &psi));
                break 'steps;
            }
            if done >= 1.0 {
                break;
            }
        }
        if (step + 1) % opts.record_every == 0 {
            traj.state_path.push(sample((step + 1) as f64 * dt, &psi));
        }
    }
    Ok(traj)
}

/// Runs `n_traj` trajectories; trajectory `i` draws from stream `i` of `base_seed`.
pub fn pdp_ensemble(
    model: &LindbladModel,
    psi0: &CVec,
    t_end: f64,
    n_traj: usize,
    base_seed: u64,
    opts: &PdpOptions,
) -> Result<Vec<JumpTrajectory>> {
    check_pdp_inputs(model, psi0, opts)?;
    let steps = step_count(t_end, opts.dt)?;
    let drift = Drift::new(model, opts.dt);
    par::map(n_traj, |i| run_pdp(&drift, psi0, steps, base_seed, i as u64, opts)).into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePath {
    pub times: Vec<f64>,
    pub mean: Vec<CMat>,
    /// Standard error of each entry; real and imaginary parts are estimated separately.
    pub std_error: Vec<CMat>,
    pub n_traj: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasterComparison {
    pub time: f64,
    /// `max |mean − ρ|` over entries (real and imaginary parts).
    pub deviation: f64,
    /// Largest per-entry standard error at this time.
    pub std_error: f64,
}

impl MasterComparison {
    /// `deviation ≤ k · SE` up to a `1e−10` floor for times where both vanish.
    pub fn within(&self, k: f64) -> bool {
        self.deviation <= k * self.std_error + 1e-10
    }
}

impl EnsemblePath {
    /// Compares against a master-equation path recorded on a grid containing `times`.
    pub fn compare(&self, master: &MasterPath) -> Result<Vec<MasterComparison>> {
        self.times
            .iter()
            .zip(self.mean.iter().zip(&self.std_error))
            .map(|(&t, (mean, se))| {
                let k = (t / master.dt).round() as usize;
                let rho = master
                    .states
                    .get(k)
                    .ok_or_else(|| Error::InvalidArgument(format!("master path does not reach t = {t}")))?;
                let diff = mean - rho.matrix();
                let deviation = diff.iter().fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
                let std_error = se.iter().fold(0.0f64, |m, z| m.max(z.re).max(z.im));
                Ok(MasterComparison { time: t, deviation, std_error })
            })
            .collect()
    }
}

/// Trajectory mean of `ψψ*` at each recorded time, with per-entry standard errors.
/// A single trajectory is allowed and reports zero standard error.
pub fn ensemble_average(
    model: &LindbladModel,
    psi0: &CVec,
    t_end: f64,
    n_traj: usize,
    base_seed: u64,
    opts: &PdpOptions,
) -> Result<EnsemblePath> {
    if n_traj == 0 {
        return Err(Error::InvalidArgument("ensemble needs at least one trajectory".into()));
    }
    if opts.stop_after_events.is_some() {
        return Err(Error::InvalidArgument("ensemble averages need full trajectories".into()));
    }
    let trajs = pdp_ensemble(model, psi0, t_end, n_traj, base_seed, opts)?;
    let times: Vec<f64> = trajs[0].state_path.iter().map(|s| s.time).collect();
    let n = n_traj as f64;
    let mut mean = Vec::with_capacity(times.len());
    let mut std_error = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let projectors: Vec<CMat> = trajs.iter().map(|tr| linalg::projector(&tr.state_path[k].vector())).collect();
        let m = linalg::pairwise_sum_mat(&projectors).expect("nonempty") / c(n, 0.0);
        let mut se = CMat::zeros(m.nrows(), m.ncols());
        if n_traj > 1 {
            for (idx, z) in m.iter().enumerate() {
                let re: Vec<f64> = projectors.iter().map(|p| (p[idx].re - z.re).powi(2)).collect();
                let im: Vec<f64> = projectors.iter().map(|p| (p[idx].im - z.im).powi(2)).collect();
                let var_re = linalg::pairwise_sum(&re) / (n - 1.0);
                let var_im = linalg::pairwise_sum(&im) / (n - 1.0);
                se[idx] = c((var_re / n).sqrt(), (var_im / n).sqrt());
            }
        }
        mean.push(m);
        std_error.push(se);
    }
    Ok(EnsemblePath { times, mean, std_error, n_traj })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, sigma_x, sigma_z};

    fn decay(gamma: f64) -> LindbladModel {
        let l = linalg::from_rows(2, &[c(0.0, 0.0), c(gamma.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        LindbladModel::new(HermitianQuantity::zero(2), vec![l]).unwrap()
    }

    fn driven_damped() -> LindbladModel {
        let l = linalg::from_rows(2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        LindbladModel::new(HermitianQuantity::new(sigma_x()).unwrap(), vec![l]).unwrap()
    }

    fn plus() -> CVec {
        linalg::normalize(&CVec::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]))
    }

    #[test]
    fn larmor_precession() {
        let model = LindbladModel::new(HermitianQuantity::new(sigma_z()).unwrap(), vec![]).unwrap();
        let path = master_integrate(&model, &DensityOperator::pure(&plus()).unwrap(), 3.0, 0.005).unwrap();
        for (t, rho) in path.times.iter().zip(&path.states) {
            let sx = linalg::trace_product(rho.matrix(), &sigma_x()).re;
            assert!((sx - (2.0 * t).cos()).abs() < 1e-8, "t = {t}");
        }
        assert!(path.warnings.is_empty());
    }

    #[test]
    fn exponential_decay() {
        let gamma = 0.7;
        let path = master_integrate(&decay(gamma), &DensityOperator::basis_state(2, 1), 5.0, 0.01).unwrap();
        for (t, rho) in path.times.iter().zip(&path.states) {
            assert!((rho.matrix()[(1, 1)].re - (-gamma * t).exp()).abs() < 1e-9);
        }
        assert!(path.max_trace_drift <= 1e-8);
    }

    #[test]
    fn coarse_step_warns() {
        let path = master_integrate(&decay(50.0), &DensityOperator::basis_state(2, 1), 0.1, 0.01).unwrap();
        assert_eq!(path.warnings.len(), 1);
    }

    #[test]
    fn no_jumps_is_unitary() {
        let h = crate::qcore::random::hermitian(3, &mut rng::seeded(4));
        let model = LindbladModel::new(h.clone(), vec![]).unwrap();
        let psi0 = basis_vector(3, 0);
        let opts = PdpOptions { dt: 0.01, record_every: 10, stop_after_events: None };
        let traj = pdp_trajectory_with(&model, &psi0, 2.0, 1, &opts).unwrap();
        assert!(traj.events.is_empty());
        for s in &traj.state_path {
            let exact = linalg::unitary_propagator(h.matrix(), s.time).unwrap() * &psi0;
            assert!((s.vector() - exact).norm() < 1e-8);
        }
    }

    #[test]
    fn decay_fires_exactly_once() {
        let model = decay(1.0);
        let opts = PdpOptions { dt: 0.01, record_every: 100, stop_after_events: None };
        let trajs = pdp_ensemble(&model, &basis_vector(2, 1), 40.0, 200, 9, &opts).unwrap();
        for tr in &trajs {
            assert_eq!(tr.events.len(), 1);
            assert_eq!(tr.norm_violations, 0);
            let last = tr.state_path.last().unwrap().vector();
            assert!((last[0].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn waiting_times_are_exponential() {
        let gamma = 1.3;
        let opts = PdpOptions { dt: 0.01, record_every: usize::MAX, stop_after_events: Some(1) };
        let trajs = pdp_ensemble(&decay(gamma), &basis_vector(2, 1), 40.0, 4000, 17, &opts).unwrap();
        let times: Vec<f64> = trajs.iter().map(|t| t.events[0].time).collect();
        assert!(ks_exponential(&times, gamma) <= 0.03);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let model = driven_damped();
        let a = pdp_trajectory(&model, &basis_vector(2, 0), 5.0, 77).unwrap();
        let b = pdp_trajectory(&model, &basis_vector(2, 0), 5.0, 77).unwrap();
        let other = pdp_trajectory(&model, &basis_vector(2, 0), 5.0, 78).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a.to_json(), other.to_json());
        let mut last = -1.0;
        for e in &a.events {
            assert!(e.time > last && e.time <= 5.0);
            last = e.time;
        }
        for s in &a.state_path {
            assert!((s.vector().norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn ensemble_tracks_master_equation() {
        let model = driven_damped();
        let psi0 = basis_vector(2, 0);
        let opts = PdpOptions { dt: 0.01, record_every: 25, stop_after_events: None };
        let ens = ensemble_average(&model, &psi0, 5.0, 1000, 3, &opts).unwrap();
        let master = master_integrate(&model, &DensityOperator::pure(&psi0).unwrap(), 5.0, 0.01).unwrap();
        for cmp in ens.compare(&master).unwrap() {
            assert!(cmp.within(3.0), "{cmp:?}");
        }
    }

    #[test]
    fn single_trajectory_ensemble() {
        let model = driven_damped();
        let psi0 = basis_vector(2, 0);
        let opts = PdpOptions { dt: 0.01, record_every: 10, stop_after_events: None };
        let ens = ensemble_average(&model, &psi0, 2.0, 1, 5, &opts).unwrap();
        let traj = pdp_trajectory_with(&model, &psi0, 2.0, 5, &opts).unwrap();
        for (k, s) in traj.state_path.iter().enumerate() {
            assert!(linalg::max_abs(&(&ens.mean[k] - linalg::projector(&s.vector()))) < 1e-15);
            assert_eq!(linalg::max_abs(&ens.std_error[k]), 0.0);
        }
    }

    #[test]
    fn standard_error_scales_with_ensemble_size() {
        let model = driven_damped();
        let psi0 = basis_vector(2, 0);
        let opts = PdpOptions { dt: 0.01, record_every: 100, stop_after_events: None };
        let big = ensemble_average(&model, &psi0, 3.0, 2000, 1, &opts).unwrap();
        let small = ensemble_average(&model, &psi0, 3.0, 1000, 1, &opts).unwrap();
        let k = big.times.len() - 1;
        let ratio = small.std_error[k][(1, 1)].re / big.std_error[k][(1, 1)].re;
        assert!((ratio - 2f64.sqrt()).abs() < 0.15, "{ratio}");
    }

    #[test]
    fn invalid_inputs() {
        let model = decay(1.0);
        assert!(pdp_trajectory(&model, &basis_vector(3, 0), 1.0, 0).is_err());
        assert!(pdp_trajectory(&model, &(basis_vector(2, 0) * c(2.0, 0.0)), 1.0, 0).is_err());
        assert!(master_integrate(&model, &DensityOperator::basis_state(2, 0), 1.0, 0.0).is_err());
        assert!(ensemble_average(&model, &basis_vector(2, 0), 1.0, 0, 0, &PdpOptions::default()).is_err());
    }
}
