//! Koopman embedding of classical mechanics: phase-space densities evolve linearly
//! under the Hermitian generator `Ĥ = ∂H/∂q i∂/∂p − ∂H/∂p i∂/∂q`.
//!
//! On a uniform periodic cell-centred grid the generator is discretized as
//!
//! ```text
//! Ĥ = (i/2)(D_p A_q + A_q D_p − D_q A_p − A_p D_q)
//! ```
//!
//! with central-difference `D` and diagonal `A_q = ∂H/∂q`, `A_p = ∂H/∂p`. Each
//! symmetrized product is a real antisymmetric matrix, so `Ĥ` is Hermitian and the
//! density obeys the real equation `ρ̇ = −iĤρ = Kρ`. It is advanced with classical
//! RK4, which keeps the discrete mass `Σρ ΔqΔp` (a linear invariant) exact.

use crate::linalg::{c, CMat};
use crate::{Error, Result};

pub trait ClassicalHamiltonian {
    fn value(&self, p: f64, q: f64) -> f64;

    /// `(∂H/∂p, ∂H/∂q)`; central differences unless overridden.
    fn gradient(&self, p: f64, q: f64) -> (f64, f64) {
        let h = 1e-5;
        (
            (self.value(p + h, q) - self.value(p - h, q)) / (2.0 * h),
            (self.value(p, q + h) - self.value(p, q - h)) / (2.0 * h),
        )
    }
}

impl<F: Fn(f64, f64) -> f64> ClassicalHamiltonian for F {
    fn value(&self, p: f64, q: f64) -> f64 {
        self(p, q)
    }
}

/// `H = p²/2m + mω²q²/2`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub mass: f64,
    pub omega: f64,
}

impl Default for Harmonic {
    fn default() -> Self {
        Self { mass: 1.0, omega: 1.0 }
    }
}

impl ClassicalHamiltonian for Harmonic {
    fn value(&self, p: f64, q: f64) -> f64 {
        p * p / (2.0 * self.mass) + 0.5 * self.mass * self.omega * self.omega * q * q
    }

    fn gradient(&self, p: f64, q: f64) -> (f64, f64) {
        (p / self.mass, self.mass * self.omega * self.omega * q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KoopmanModel {
    n: usize,
    half_width: f64,
    spacing: f64,
    /// `∂H/∂q` at grid points, index `i_q * n + i_p`.
    a_q: Vec<f64>,
    /// `∂H/∂p` at grid points.
    a_p: Vec<f64>,
}

/// Samples the Hamiltonian's gradient on an `n × n` grid over `[−L, L)²`.
pub fn koopman_build<H: ClassicalHamiltonian + ?Sized>(h: &H, half_width: f64, n: usize) -> Result<KoopmanModel> {
    if n < 16 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("grid size must be even and >= 16, got {n}")));
    }
    if !(half_width > 0.0) {
        return Err(Error::InvalidArgument(format!("box half-width must be positive, got {half_width}")));
    }
    let spacing = 2.0 * half_width / n as f64;
    let coord = |i: usize| -half_width + (i as f64 + 0.5) * spacing;
    let mut a_q = Vec::with_capacity(n * n);
    let mut a_p = Vec::with_capacity(n * n);
    for iq in 0..n {
        for ip in 0..n {
            let (dp, dq) = h.gradient(coord(ip), coord(iq));
            a_q.push(dq);
            a_p.push(dp);
        }
    }
    if a_q.iter().chain(&a_p).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Hamiltonian gradient on the grid".into()));
    }
    Ok(KoopmanModel { n, half_width, spacing, a_q, a_p })
}

impl KoopmanModel {
    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Cell-centre coordinate along either axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing
    }

    fn idx(&self, iq: usize, ip: usize) -> usize {
        iq * self.n + ip
    }

    /// `out = K ρ` with `K = −iĤ` (real).
    pub fn apply_generator(&self, rho: &[f64], out: &mut [f64]) {
        let n = self.n;
        let inv = 0.25 / self.spacing;
        for iq in 0..n {
            let qu = (iq + 1) % n;
            let qd = (iq + n - 1) % n;
            for ip in 0..n {
                let pu = (ip + 1) % n;
                let pd = (ip + n - 1) % n;
                let k = self.idx(iq, ip);
                let (kpu, kpd) = (self.idx(iq, pu), self.idx(iq, pd));
                let (kqu, kqd) = (self.idx(qu, ip), self.idx(qd, ip));
                let along_p = self.a_q[kpu] * rho[kpu] - self.a_q[kpd] * rho[kpd] + self.a_q[k] * (rho[kpu] - rho[kpd]);
                let along_q = self.a_p[kqu] * rho[kqu] - self.a_p[kqd] * rho[kqd] + self.a_p[k] * (rho[kqu] - rho[kqd]);
                out[k] = inv * (along_p - along_q);
            }
        }
    }

    /// Dense `Ĥ = iK`; for small grids only.
    pub fn hhat_dense(&self) -> CMat {
        let m = self.n * self.n;
        let mut h = CMat::zeros(m, m);
        let mut e = vec![0.0; m];
        let mut col = vec![0.0; m];
        for j in 0..m {
            e[j] = 1.0;
            self.apply_generator(&e, &mut col);
            for i in 0..m {
                h[(i, j)] = c(0.0, col[i]);
            }
            e[j] = 0.0;
        }
        h
    }

    /// Bound on the generator norm, used to pick stable RK4 sub-steps.
    fn generator_bound(&self) -> f64 {
        let aq = self.a_q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let ap = self.a_p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        (aq + ap) / self.spacing
    }

    pub fn mass(&self, rho: &[f64]) -> f64 {
        crate::linalg::pairwise_sum(rho) * self.cell_area()
    }

    /// `(⟨q⟩, ⟨p⟩)`
    pub fn means(&self, rho: &[f64]) -> (f64, f64) {
        let n = self.n;
        let (mut mq, mut mp) = (0.0, 0.0);
        for iq in 0..n {
            for ip in 0..n {
                let w = rho[self.idx(iq, ip)];
                mq += w * self.coordinate(iq);
                mp += w * self.coordinate(ip);
            }
        }
        let area = self.cell_area();
        (mq * area, mp * area)
    }

    /// `Σ|ρ| ΔqΔp` over cells within `width` cells of the box edge.
    pub fn boundary_mass(&self, rho: &[f64], width: usize) -> f64 {
        let n = self.n;
        let near = |i: usize| i < width || i >= n - width;
        let mut total = 0.0;
        for iq in 0..n {
            for ip in 0..n {
                if near(iq) || near(ip) {
                    total += rho[self.idx(iq, ip)].abs();
                }
            }
        }
        total * self.cell_area()
    }

    fn boundary_width(&self) -> usize {
        (self.n / 16).max(2)
    }
}

/// Normalized Gaussian centred at `(q0, p0)` sampled on the grid.
pub fn gaussian_density(model: &KoopmanModel, q0: f64, p0: f64, sigma: f64) -> Vec<f64> {
    let n = model.n;
    let mut rho = Vec::with_capacity(n * n);
    for iq in 0..n {
        for ip in 0..n {
            let dq = model.coordinate(iq) - q0;
            let dp = model.coordinate(ip) - p0;
            rho.push((-(dq * dq + dp * dp) / (2.0 * sigma * sigma)).exp());
        }
    }
    let mass = model.mass(&rho);
    rho.iter_mut().for_each(|x| *x /= mass);
    rho
}

#[derive(Debug, Clone, PartialEq)]
pub struct KoopmanRun {
    pub times: Vec<f64>,
    pub mean_q: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub mass: Vec<f64>,
    /// Largest `|mass − 1|` seen.
    pub max_mass_drift: f64,
    /// Largest boundary-band mass seen.
    pub boundary_mass: f64,
    /// Total negative mass in the final density (dispersion artefact).
    pub negative_mass: f64,
    pub density: Vec<f64>,
}

/// Evolves `density0` to `t_end`, recording means every `dt`. Fails when more than
/// `1e−6` of the mass reaches the boundary band.
pub fn koopman_evolve(model: &KoopmanModel, density0: &[f64], t_end: f64, dt: f64) -> Result<KoopmanRun> {
    koopman_evolve_with(model, density0, t_end, dt, Some(1e-6))
}

pub fn koopman_evolve_with(
    model: &KoopmanModel,
    density0: &[f64],
    t_end: f64,
    dt: f64,
    boundary_limit: Option<f64>,
) -> Result<KoopmanRun> {
    let m = model.n * model.n;
    if density0.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: density0.len() });
    }
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and t_end >= 0".into()));
    }
    let mass0 = model.mass(density0);
    if (mass0 - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!("initial density has mass {mass0}, expected 1")));
    }
    if density0.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidArgument("initial density must be nonnegative".into()));
    }
    let steps = (t_end / dt).round() as usize;
    let substeps = ((dt * model.generator_bound()).ceil() as usize).max(1);
    let h = dt / substeps as f64;

    let mut rho = density0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    let width = model.boundary_width();
    let (q, p) = model.means(&rho);
    let mut run = KoopmanRun {
        times: vec![0.0],
        mean_q: vec![q],
        mean_p: vec![p],
        mass: vec![mass0],
        max_mass_drift: (mass0 - 1.0).abs(),
        boundary_mass: model.boundary_mass(&rho, width),
        negative_mass: 0.0,
        density: Vec::new(),
    };
    for step in 1..=steps {
        for _ in 0..substeps {
            model.apply_generator(&rho, &mut k1);
            axpy(&rho, &k1, 0.5 * h, &mut tmp);
            model.apply_generator(&tmp, &mut k2);
            axpy(&rho, &k2, 0.5 * h, &mut tmp);
            model.apply_generator(&tmp, &mut k3);
            axpy(&rho, &k3, h, &mut tmp);
            model.apply_generator(&tmp, &mut k4);
            for i in 0..m {
                rho[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        if rho.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Koopman density".into()));
        }
        let mass = model.mass(&rho);
        let (q, p) = model.means(&rho);
        run.times.push(step as f64 * dt);
        run.mean_q.push(q);
        run.mean_p.push(p);
        run.mass.push(mass);
        run.max_mass_drift = run.max_mass_drift.max((mass - 1.0).abs());
        let edge = model.boundary_mass(&rho, width);
        run.boundary_mass = run.boundary_mass.max(edge);
        if let Some(limit) = boundary_limit {
            if edge > limit {
                return Err(Error::BoundaryLeak { mass: edge });
            }
        }
    }
    run.negative_mass = rho.iter().filter(|&&x| x < 0.0).map(|x| -x).sum::<f64>() * model.cell_area();
    run.density = rho;
    Ok(run)
}

fn axpy(x: &[f64], y: &[f64], a: f64, out: &mut [f64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}

/// Exact Liouville transport `ρ(x, t) = ρ0(Φ_{−t}(x))` on the grid, with the
/// characteristics integrated backwards by RK4 in `steps` steps.
pub fn transported_density<H, D>(h: &H, density0: D, model: &KoopmanModel, t: f64, steps: usize) -> Vec<f64>
where
    H: ClassicalHamiltonian + ?Sized,
    D: Fn(f64, f64) -> f64,
{
    let n = model.n;
    let dt = -t / steps.max(1) as f64;
    let flow = |q: f64, p: f64| {
        let (dp, dq) = h.gradient(p, q);
        (dp, -dq)
    };
    let mut out = Vec::with_capacity(n * n);
    for iq in 0..n {
        for ip in 0..n {
            let (mut q, mut p) = (model.coordinate(iq), model.coordinate(ip));
            for _ in 0..steps.max(1) {
                let k1 = flow(q, p);
                let k2 = flow(q + 0.5 * dt * k1.0, p + 0.5 * dt * k1.1);
                let k3 = flow(q + 0.5 * dt * k2.0, p + 0.5 * dt * k2.1);
                let k4 = flow(q + dt * k3.0, p + dt * k3.1);
                q += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                p += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            }
            out.push(density0(q, p));
        }
    }
    out
}

impl KoopmanModel {
    /// `Σ|ρ − σ| ΔqΔp`
    pub fn l1_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * self.cell_area()
    }
}
