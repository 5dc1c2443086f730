//! Browser bindings: a Malus sweep for partially polarized light, a Koopman
//! phase-space density you can step frame by frame, and a noisy double-well
//! branch histogram.

use std::f64::consts::PI;

use thermiq::dynamics::{gaussian_density, koopman_build, koopman_evolve_with, KoopmanModel};
use thermiq::stochastic::{bistable_selection, BistableModel};
use thermiq::stokes::{apply_jones, linear_polarization, polarizer, stokes_to_coherence, StokesVector};
use wasm_bindgen::prelude::*;

fn js(e: thermiq::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Transmitted intensity at `n` polarizer angles over `[0, π)` for a unit beam
/// polarized at `beam_angle` with degree of polarization `dop`.
pub fn malus_intensities(beam_angle: f64, dop: f64, n: usize) -> thermiq::Result<Vec<f64>> {
    let s = StokesVector::new(1.0, dop * (2.0 * beam_angle).sin(), 0.0, dop * (2.0 * beam_angle).cos())?;
    let beam = stokes_to_coherence(&s)?;
    (0..n)
        .map(|i| {
            let phi = linear_polarization(PI * i as f64 / n as f64);
            Ok(apply_jones(&beam, &polarizer(&phi)?).intensity())
        })
        .collect()
}

#[wasm_bindgen]
pub fn malus_curve(beam_angle: f64, dop: f64, n: usize) -> Result<Vec<f64>, JsError> {
    malus_intensities(beam_angle, dop, n).map_err(js)
}

/// `H = p²/2 + λ q⁴ − (1 − λ) q²/2`: harmonic at `λ = 0`, a double well for larger `λ`.
fn blend(lambda: f64) -> impl Fn(f64, f64) -> f64 {
    move |p: f64, q: f64| 0.5 * p * p + lambda * q.powi(4) + 0.5 * (1.0 - 2.0 * lambda) * q * q
}

#[wasm_bindgen]
pub struct KoopmanDemo {
    model: KoopmanModel,
    density: Vec<f64>,
    t: f64,
}

impl KoopmanDemo {
    pub fn create(n: usize, lambda: f64, q0: f64, p0: f64, sigma: f64) -> thermiq::Result<Self> {
        let model = koopman_build(&blend(lambda), 4.0, n)?;
        let density = gaussian_density(&model, q0, p0, sigma);
        Ok(Self { model, density, t: 0.0 })
    }

    pub fn advance(&mut self, dt: f64) -> thermiq::Result<()> {
        let run = koopman_evolve_with(&self.model, &self.density, dt, dt, None)?;
        // discretization ripples go slightly negative; clip them for display
        let mut rho: Vec<f64> = run.density.into_iter().map(|x| x.max(0.0)).collect();
        let mass = self.model.mass(&rho);
        rho.iter_mut().for_each(|x| *x /= mass);
        self.density = rho;
        self.t += dt;
        Ok(())
    }
}

#[wasm_bindgen]
impl KoopmanDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, lambda: f64, q0: f64, p0: f64, sigma: f64) -> Result<KoopmanDemo, JsError> {
        Self::create(n, lambda, q0, p0, sigma).map_err(js)
    }

    pub fn step(&mut self, dt: f64) -> Result<(), JsError> {
        self.advance(dt).map_err(js)
    }

    /// Row-major density, rows indexed by `q`.
    pub fn density(&self) -> Vec<f64> {
        self.density.clone()
    }

    pub fn grid(&self) -> usize {
        self.model.grid_size()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// `[⟨q⟩, ⟨p⟩, mass]`
    pub fn moments(&self) -> Vec<f64> {
        let (q, p) = self.model.means(&self.density);
        vec![q, p, self.model.mass(&self.density)]
    }
}

/// Histogram of final positions over `[−2, 2]` followed by the left, right and
/// undecided counts.
pub fn bistable_counts(noise: f64, tilt: f64, runs: usize, seed: u64, bins: usize) -> thermiq::Result<Vec<u32>> {
    let model = BistableModel { tilt, ..BistableModel::symmetric(1.0, 1.0, 1.0, noise) };
    let run = bistable_selection(&model, 15.0, runs, seed, 0.01)?;
    let mut out = vec![0u32; bins + 3];
    for &x in &run.final_positions {
        let k = ((x + 2.0) / 4.0 * bins as f64).floor().clamp(0.0, bins as f64 - 1.0) as usize;
        out[k] += 1;
    }
    out[bins] = run.left as u32;
    out[bins + 1] = run.right as u32;
    out[bins + 2] = run.undecided as u32;
    Ok(out)
}

#[wasm_bindgen]
pub fn bistable_histogram(noise: f64, tilt: f64, runs: usize, seed: u64, bins: usize) -> Result<Vec<u32>, JsError> {
    bistable_counts(noise, tilt, runs, seed, bins).map_err(js)
}
