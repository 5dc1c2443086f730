//! Noisy damped motion in a double well, started at the barrier top.
//!
//! `m ẍ = −U'(x) − γẋ + ε ξ(t)` with `U(x) = a(x² − x₀²)² + c x` and Gaussian white
//! noise `ξ`, stepped by semi-implicit Euler–Maruyama.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::pairwise_sum;
use crate::{par, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BistableModel {
    pub a: f64,
    pub x0: f64,
    pub damping: f64,
    pub noise: f64,
    pub mass: f64,
    /// Linear tilt `c`; positive values lower the left well.
    pub tilt: f64,
}

impl BistableModel {
    pub fn symmetric(a: f64, x0: f64, damping: f64, noise: f64) -> Self {
        Self { a, x0, damping, noise, mass: 1.0, tilt: 0.0 }
    }

    pub fn potential(&self, x: f64) -> f64 {
        self.a * (x * x - self.x0 * self.x0).powi(2) + self.tilt * x
    }

    /// `−U'(x)`
    pub fn force(&self, x: f64) -> f64 {
        -4.0 * self.a * x * (x * x - self.x0 * self.x0) - self.tilt
    }

    fn validate(&self) -> Result<()> {
        let ok = self.a > 0.0 && self.x0 > 0.0 && self.mass > 0.0 && self.damping >= 0.0 && self.noise >= 0.0;
        let finite = [self.a, self.x0, self.damping, self.noise, self.mass, self.tilt].iter().all(|v| v.is_finite());
        if !(ok && finite) {
            return Err(Error::InvalidArgument(format!(
                "bistable model needs a, x0, mass > 0 and damping, noise >= 0: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Left,
    Right,
    /// Still within `x₀/2` of the barrier at the end of the run.
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BistableRun {
    pub left: u64,
    pub right: u64,
    pub undecided: u64,
    /// Step actually used, after clamping to `γ·dt ≤ 0.01`.
    pub dt: f64,
    pub final_positions: Vec<f64>,
    pub branches: Vec<Branch>,
    /// Relaxation record: times and the ensemble mean of `|x|`.
    pub times: Vec<f64>,
    pub mean_abs_x: Vec<f64>,
}

impl BistableRun {
    /// Left share of the decided runs.
    pub fn left_fraction(&self) -> f64 {
        let decided = self.left + self.right;
        if decided == 0 {
            0.5
        } else {
            self.left as f64 / decided as f64
        }
    }

    pub fn undecided_fraction(&self) -> f64 {
        self.undecided as f64 / self.branches.len().max(1) as f64
    }
}

/// Runs `n_runs` trajectories from rest at `x = 0`; run `i` uses stream `i` of
/// `base_seed`.
pub fn bistable_selection(
    model: &BistableModel,
    t_end: f64,
    n_runs: usize,
    base_seed: u64,
    dt: f64,
) -> Result<BistableRun> {
    model.validate()?;
    if !(dt > 0.0) || !(t_end > 0.0) || n_runs == 0 {
        return Err(Error::InvalidArgument("need dt > 0, t_end > 0 and at least one run".into()));
    }
    let dt = if model.damping > 0.0 { dt.min(0.01 / model.damping) } else { dt };
    let steps = (t_end / dt).ceil() as usize;
    let dt = t_end / steps as f64;
    let stride = (steps / 100).max(1);
    let kick = model.noise * dt.sqrt() / model.mass;

    let paths: Vec<Vec<f64>> = par::map(n_runs, |i| {
        let mut r = rng::split(base_seed, i as u64);
        let (mut x, mut v) = (0.0f64, 0.0f64);
        let mut record = Vec::with_capacity(steps / stride + 2);
        record.push(x);
        for step in 1..=steps {
            let xi: f64 = StandardNormal.sample(&mut r);
            v += (model.force(x) - model.damping * v) / model.mass * dt + kick * xi;
            x += v * dt;
            if step % stride == 0 || step == steps {
                record.push(x);
            }
        }
        record
    });

    let mut out = BistableRun {
        left: 0,
        right: 0,
        undecided: 0,
        dt,
        final_positions: Vec::with_capacity(n_runs),
        branches: Vec::with_capacity(n_runs),
        times: Vec::new(),
        mean_abs_x: Vec::new(),
    };
    for path in &paths {
        let x = *path.last().expect("nonempty");
        if !x.is_finite() {
            return Err(Error::NonFinite("bistable trajectory".into()));
        }
        let branch = if x.abs() <= 0.5 * model.x0 {
            out.undecided += 1;
            Branch::Undecided
        } else if x < 0.0 {
            out.left += 1;
            Branch::Left
        } else {
            out.right += 1;
            Branch::Right
        };
        out.final_positions.push(x);
        out.branches.push(branch);
    }
    let n_records = paths[0].len();
    for k in 0..n_records {
        let step = if k == n_records - 1 { steps } else { k * stride };
        out.times.push(step as f64 * dt);
        let abs: Vec<f64> = paths.iter().map(|p| p[k].abs()).collect();
        out.mean_abs_x.push(pairwise_sum(&abs) / n_runs as f64);
    }
    Ok(out)
}
