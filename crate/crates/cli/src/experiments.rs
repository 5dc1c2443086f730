//! One runner per experiment kind. Each returns the files to emit; nothing here
//! touches the filesystem.

use std::f64::consts::PI;

use serde::Serialize;
use thermiq::dynamics::{
    gaussian_density, integrate, koopman_build, koopman_evolve, transported_density, Harmonic, HybridState, SpinBoson,
};
use thermiq::io::{frequencies_to_csv, ComplexArray};
use thermiq::linalg::{self, basis_vector, c, from_rows, sigma_x, sigma_z, CVec};
use thermiq::qcore::{euler_residual, grand_canonical, nearest_spectral_value, q_expectation, random};
use thermiq::stochastic::{
    bistable_selection, ensemble_average, ks_exponential, master_integrate, pdp_ensemble, BistableModel, Branch,
    LindbladModel, PdpOptions,
};
use thermiq::stokes::{linear_polarization, malus_sweep, sliced_convergence};
use thermiq::tomography::{measure_suite, reconstruct_state, standard_test_suite, Sampling};
use thermiq::{rng, DensityOperator, HermitianQuantity};

use crate::config::*;
use crate::output::{json_artifact, Artifact, Cell, Table};

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Number of independent random streams drawn from the seed, if any.
    pub streams: Option<u64>,
}

type Run = thermiq::Result<Outcome>;

pub fn execute(cfg: &ExperimentConfig) -> Run {
    let seed = cfg.seed;
    let name = prefix_name(&cfg.output);
    match &cfg.params {
        Params::Tomography(p) => tomography(p, seed, &name),
        Params::Malus(p) => malus(p, &name),
        Params::SlicedMedium(p) => sliced(p, &name),
        Params::Hybrid(p) => hybrid(p, &name),
        Params::Koopman(p) => koopman(p, &name),
        Params::Pdp(p) => pdp(p, seed, &name),
        Params::Ensemble(p) => ensemble(p, seed, &name),
        Params::Bistable(p) => bistable(p, seed, &name),
        Params::SpectrumSweep(p) => spectrum(p, seed, &name),
        Params::Gibbs(p) => gibbs(p, &name),
    }
}

fn prefix_name(output: &str) -> String {
    std::path::Path::new(output).file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn outcome(artifacts: Vec<Artifact>, streams: Option<u64>) -> Run {
    Ok(Outcome { artifacts, streams })
}

#[derive(Serialize)]
struct TomographyReport {
    dim: usize,
    entries: Vec<[f64; 2]>,
    truth: ComplexArray,
    trace_distance: f64,
    projection_residual: f64,
    samples: Option<u64>,
}

fn tomography(p: &TomographyParams, seed: u64, name: &str) -> Run {
    let n = p.dim as usize;
    let truth = random::density(n, &mut rng::seeded(seed));
    let suite = standard_test_suite(n)?;
    let sampling = if p.exact { Sampling::Exact } else { Sampling::Sampled { n: p.samples as u64, seed } };
    let table = measure_suite(&truth, &suite, sampling)?;
    let rec = reconstruct_state(&table, n)?;
    let estimate = ComplexArray::from_matrix(rec.state.matrix());
    let report = TomographyReport {
        dim: n,
        entries: estimate.entries,
        truth: ComplexArray::from_matrix(truth.matrix()),
        trace_distance: rec.state.trace_distance(&truth)?,
        projection_residual: rec.projection_residual,
        samples: (!p.exact).then_some(p.samples as u64),
    };
    let freq_schema = Table::new(
        "frequencies",
        &[
            ("test", "int", "index into the standard test suite"),
            ("frequency", "float", "pass frequency of the binary test"),
            ("sample_size", "int|exact", "runs per test, or exact for probabilities"),
        ],
    );
    let [_, schema] = freq_schema.finish(name);
    let freqs = Artifact { suffix: "frequencies.csv".into(), bytes: frequencies_to_csv(&table).into_bytes() };
    outcome(vec![freqs, schema, json_artifact("state", &report)], Some(suite.len() as u64))
}

fn malus(p: &MalusParams, name: &str) -> Run {
    let psi = linear_polarization(p.polarization);
    let angles: Vec<f64> = (0..p.angles).map(|i| 2.0 * PI * i as f64 / p.angles as f64).collect();
    let mut t = Table::new(
        "sweep",
        &[
            ("angle", "float", "polarizer angle in radians"),
            ("intensity", "float", "transmitted intensity Tr(T rho T*)"),
            ("test_probability", "float", "|phi* psi|^2"),
            ("cos2", "float", "cos^2(angle - polarization)"),
            ("residual", "float", "|intensity - test_probability|"),
        ],
    );
    for pt in malus_sweep(&psi, &angles)? {
        t.row(&[
            Cell::F(pt.angle),
            Cell::F(pt.intensity),
            Cell::F(pt.test_probability),
            Cell::F((pt.angle - p.polarization).cos().powi(2)),
            Cell::F((pt.intensity - pt.test_probability).abs()),
        ]);
    }
    outcome(t.finish(name).into(), None)
}

fn sliced(p: &SlicedParams, name: &str) -> Run {
    let slices: Vec<usize> = p.slices.iter().map(|&n| n as usize).collect();
    let rows = sliced_convergence(|t| sigma_x() * c(t.sin(), 0.0), &basis_vector(2, 0), p.t_end, &slices, 1.0)?;
    let mut t = Table::new(
        "convergence",
        &[
            ("n_slices", "int", "number of thin slices"),
            ("error", "float", "2-norm distance to the reference state"),
            ("ratio", "float", "error divided by the previous row's error"),
        ],
    );
    for (n, err, ratio) in rows {
        t.row(&[Cell::U(n as u64), Cell::F(err), ratio.map_or(Cell::Empty, Cell::F)]);
    }
    outcome(t.finish(name).into(), None)
}

/// Initial spin state of the hybrid runs, `∝ (1, 0.3 + 0.2i)`.
pub fn hybrid_spin_state() -> CVec {
    linalg::normalize(&CVec::from_vec(vec![c(1.0, 0.0), c(0.3, 0.2)]))
}

fn hybrid(p: &HybridParams, name: &str) -> Run {
    let model = SpinBoson { mass: p.mass, omega: p.omega, tunneling: p.tunneling, coupling: p.coupling, bias: p.bias };
    let s0 = HybridState::new(vec![p.q0], vec![p.p0], DensityOperator::pure(&hybrid_spin_state())?)?;
    let e0 = s0.energy(&model);
    let mut traj = Table::new(
        "trajectory",
        &[
            ("t", "float", "time"),
            ("q", "float", "classical position"),
            ("p", "float", "classical momentum"),
            ("sigma_x", "float", "<sigma_x>"),
            ("sigma_z", "float", "<sigma_z>"),
            ("energy", "float", "<H(p,q)>"),
            ("trace", "float", "Tr rho"),
        ],
    );
    let mut conv = Table::new(
        "convergence",
        &[
            ("dt", "float", "time step"),
            ("max_drift", "float", "max |<H>(t) - <H>(0)| over the run"),
            ("ratio", "float", "previous row's drift divided by this row's"),
        ],
    );
    let mut prev: Option<f64> = None;
    for (k, &dt) in p.dt.iter().enumerate() {
        let steps = (p.t_end / dt).round() as usize;
        let path = integrate(&s0, &model, dt, steps, 1)?;
        let drift = path.iter().map(|s| (s.energy(&model) - e0).abs()).fold(0.0, f64::max);
        conv.row(&[Cell::F(dt), Cell::F(drift), prev.map_or(Cell::Empty, |d| Cell::F(d / drift))]);
        prev = Some(drift);
        if k == 0 {
            for s in path.iter().step_by(p.record_every as usize) {
                let rho = s.rho.matrix();
                traj.row(&[
                    Cell::F(s.t),
                    Cell::F(s.q[0]),
                    Cell::F(s.p[0]),
                    Cell::F(linalg::trace_product(rho, &sigma_x()).re),
                    Cell::F(linalg::trace_product(rho, &sigma_z()).re),
                    Cell::F(s.energy(&model)),
                    Cell::F(linalg::trace(rho).re),
                ]);
            }
        }
    }
    let mut out: Vec<Artifact> = traj.finish(name).into();
    out.extend(conv.finish(name));
    outcome(out, None)
}

fn koopman(p: &KoopmanParams, name: &str) -> Run {
    let ham = Harmonic::default();
    let exact = |t: f64| (p.q0 * t.cos() + p.p0 * t.sin(), -p.q0 * t.sin() + p.p0 * t.cos());
    let sigma = p.sigma;
    let (q0, p0) = (p.q0, p.p0);
    let density = move |q: f64, pp: f64| {
        (-((q - q0).powi(2) + (pp - p0).powi(2)) / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma)
    };
    let mut conv = Table::new(
        "convergence",
        &[
            ("n_grid", "int", "grid points per axis"),
            ("mean_error", "float", "distance of (<q>, <p>) from the classical point at t_end"),
            ("density_l1", "float", "L1 distance to the exactly transported density"),
            ("ratio", "float", "previous row's density_l1 divided by this row's"),
            ("max_mass_drift", "float", "max |mass - 1|"),
            ("negative_mass", "float", "total negative mass at t_end"),
        ],
    );
    let mut traj = None;
    let mut prev: Option<f64> = None;
    for &n in &p.grid {
        let model = koopman_build(&ham, p.half_width, n as usize)?;
        let rho0 = gaussian_density(&model, p.q0, p.p0, p.sigma);
        let run = koopman_evolve(&model, &rho0, p.t_end, p.dt)?;
        let t_end = *run.times.last().expect("nonempty");
        let (qe, pe) = exact(t_end);
        let mean_error = (run.mean_q.last().unwrap() - qe).hypot(run.mean_p.last().unwrap() - pe);
        let reference = transported_density(&ham, density, &model, t_end, 200);
        let l1 = model.l1_distance(&run.density, &reference);
        conv.row(&[
            Cell::I(n),
            Cell::F(mean_error),
            Cell::F(l1),
            prev.map_or(Cell::Empty, |e| Cell::F(e / l1)),
            Cell::F(run.max_mass_drift),
            Cell::F(run.negative_mass),
        ]);
        prev = Some(l1);
        traj = Some(run);
    }
    let run = traj.expect("at least one grid");
    let mut t = Table::new(
        "trajectory",
        &[
            ("t", "float", "time"),
            ("mean_q", "float", "<q> of the grid density (finest grid)"),
            ("mean_p", "float", "<p> of the grid density (finest grid)"),
            ("exact_q", "float", "classical q(t)"),
            ("exact_p", "float", "classical p(t)"),
            ("mass", "float", "discrete integral of the density"),
        ],
    );
    for k in 0..run.times.len() {
        let (qe, pe) = exact(run.times[k]);
        t.row(&[
            Cell::F(run.times[k]),
            Cell::F(run.mean_q[k]),
            Cell::F(run.mean_p[k]),
            Cell::F(qe),
            Cell::F(pe),
            Cell::F(run.mass[k]),
        ]);
    }
    let mut out: Vec<Artifact> = t.finish(name).into();
    out.extend(conv.finish(name));
    outcome(out, None)
}

/// Model, initial state and counted channels for the named open system.
pub fn open_model(kind: OpenModel, gamma: f64, drive: f64, pump: f64) -> thermiq::Result<(LindbladModel, CVec, Vec<usize>)> {
    let z = c(0.0, 0.0);
    let lower = from_rows(2, &[z, c(gamma.sqrt(), 0.0), z, z]);
    Ok(match kind {
        OpenModel::Decay => (LindbladModel::new(HermitianQuantity::zero(2), vec![lower])?, basis_vector(2, 1), vec![0]),
        OpenModel::DrivenDamped => {
            let h = HermitianQuantity::new(sigma_x() * c(0.5 * drive, 0.0))?;
            (LindbladModel::new(h, vec![lower])?, basis_vector(2, 0), vec![0])
        }
        OpenModel::Repumped => {
            let raise = from_rows(2, &[z, z, c(pump.sqrt(), 0.0), z]);
            (LindbladModel::new(HermitianQuantity::zero(2), vec![lower, raise])?, basis_vector(2, 0), vec![0])
        }
        OpenModel::Poisson => {
            let l = from_rows(1, &[c(gamma.sqrt(), 0.0)]);
            (LindbladModel::new(HermitianQuantity::zero(1), vec![l])?, basis_vector(1, 0), vec![0])
        }
    })
}

#[derive(Serialize)]
struct PdpSummary {
    trajectories: u64,
    events: u64,
    mean_count: f64,
    variance: f64,
    fano: Option<f64>,
    /// KS distance of first-jump times to Exponential(gamma), decay model only.
    ks_first_jump: Option<f64>,
    norm_violations: u64,
}

fn pdp(p: &PdpParams, seed: u64, name: &str) -> Run {
    let (model, psi0, counted) = open_model(p.model, p.gamma, p.drive, p.pump)?;
    let n = p.trajectories as usize;
    let opts = PdpOptions { dt: p.dt, record_every: usize::MAX, stop_after_events: None };
    let trajs = pdp_ensemble(&model, &psi0, p.t_end, n, seed, &opts)?;
    let mut events = Table::new(
        "events",
        &[
            ("trajectory", "int", "trajectory index (= random stream)"),
            ("time", "float", "jump time"),
            ("channel", "int", "jump operator index"),
        ],
    );
    let mut counts = Vec::with_capacity(n);
    for (i, tr) in trajs.iter().enumerate() {
        for e in &tr.events {
            events.row(&[Cell::U(i as u64), Cell::F(e.time), Cell::U(e.channel as u64)]);
        }
        counts.push(tr.events.iter().filter(|e| counted.contains(&e.channel)).count() as u64);
    }
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0u64; max + 1];
    counts.iter().for_each(|&k| hist[k as usize] += 1);
    let mut histogram = Table::new(
        "counts",
        &[
            ("count", "int", "detections in the window [0, t_end]"),
            ("trajectories", "int", "number of trajectories with that count"),
        ],
    );
    for (k, &m) in hist.iter().enumerate() {
        histogram.row(&[Cell::U(k as u64), Cell::U(m)]);
    }
    let values: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
    let mean = linalg::pairwise_sum(&values) / n as f64;
    let sq: Vec<f64> = values.iter().map(|x| (x - mean).powi(2)).collect();
    let variance = if n > 1 { linalg::pairwise_sum(&sq) / (n as f64 - 1.0) } else { 0.0 };
    let ks_first_jump = (p.model == OpenModel::Decay).then(|| {
        let first: Vec<f64> = trajs.iter().filter_map(|t| t.events.first().map(|e| e.time)).collect();
        ks_exponential(&first, p.gamma)
    });
    let summary = PdpSummary {
        trajectories: n as u64,
        events: trajs.iter().map(|t| t.events.len() as u64).sum(),
        mean_count: mean,
        variance,
        fano: (mean > 0.0).then(|| variance / mean),
        ks_first_jump,
        norm_violations: trajs.iter().map(|t| t.norm_violations as u64).sum(),
    };
    let mut out: Vec<Artifact> = events.finish(name).into();
    out.extend(histogram.finish(name));
    out.push(json_artifact("summary", &summary));
    outcome(out, Some(n as u64))
}

fn ensemble(p: &EnsembleParams, seed: u64, name: &str) -> Run {
    let (model, psi0, _) = open_model(p.model, p.gamma, p.drive, p.pump)?;
    let n = p.trajectories as usize;
    let opts = PdpOptions { dt: p.dt, record_every: p.record_every as usize, stop_after_events: None };
    let ens = ensemble_average(&model, &psi0, p.t_end, n, seed, &opts)?;
    let master = master_integrate(&model, &DensityOperator::pure(&psi0)?, p.t_end, p.dt)?;
    let cmp = ens.compare(&master)?;
    let top = model.dim() - 1;
    let mut t = Table::new(
        "comparison",
        &[
            ("t", "float", "sample time"),
            ("excited_mean", "float", "trajectory mean of the top-level population"),
            ("excited_se", "float", "standard error of excited_mean"),
            ("excited_master", "float", "master-equation top-level population"),
            ("deviation", "float", "max entrywise |mean - rho_master|"),
            ("std_error", "float", "max entrywise standard error"),
            ("within_3se", "bool", "deviation <= 3 std_error (+1e-10)"),
        ],
    );
    for (k, row) in cmp.iter().enumerate() {
        let kk = (row.time / master.dt).round() as usize;
        t.row(&[
            Cell::F(row.time),
            Cell::F(ens.mean[k][(top, top)].re),
            Cell::F(ens.std_error[k][(top, top)].re),
            Cell::F(master.states[kk].matrix()[(top, top)].re),
            Cell::F(row.deviation),
            Cell::F(row.std_error),
            Cell::B(row.within(3.0)),
        ]);
    }
    outcome(t.finish(name).into(), Some(n as u64))
}

#[derive(Serialize)]
struct BistableSummary {
    runs: u64,
    left: u64,
    right: u64,
    undecided: u64,
    left_fraction: f64,
    undecided_fraction: f64,
    /// Five binomial standard deviations around one half.
    symmetric_bound: f64,
    dt: f64,
}

fn bistable(p: &BistableParams, seed: u64, name: &str) -> Run {
    let model = BistableModel { a: p.a, x0: p.x0, damping: p.damping, noise: p.noise, mass: p.mass, tilt: p.tilt };
    let n = p.runs as usize;
    let run = bistable_selection(&model, p.t_end, n, seed, p.dt)?;
    let mut finals = Table::new(
        "final",
        &[
            ("run", "int", "run index (= random stream)"),
            ("x", "float", "position at t_end"),
            ("branch", "string", "left, right or undecided"),
        ],
    );
    for (i, (&x, b)) in run.final_positions.iter().zip(&run.branches).enumerate() {
        let label = match b {
            Branch::Left => "left",
            Branch::Right => "right",
            Branch::Undecided => "undecided",
        };
        finals.row(&[Cell::U(i as u64), Cell::F(x), Cell::S(label.into())]);
    }
    let mut relax = Table::new(
        "relaxation",
        &[("t", "float", "time"), ("mean_abs_x", "float", "ensemble mean of |x|")],
    );
    for (t, m) in run.times.iter().zip(&run.mean_abs_x) {
        relax.row(&[Cell::F(*t), Cell::F(*m)]);
    }
    let summary = BistableSummary {
        runs: n as u64,
        left: run.left,
        right: run.right,
        undecided: run.undecided,
        left_fraction: run.left_fraction(),
        undecided_fraction: run.undecided_fraction(),
        symmetric_bound: 5.0 * (0.25 / n as f64).sqrt(),
        dt: run.dt,
    };
    let mut out: Vec<Artifact> = finals.finish(name).into();
    out.extend(relax.finish(name));
    out.push(json_artifact("summary", &summary));
    outcome(out, Some(n as u64))
}

/// Case `i` of a spectrum sweep: dimension cycles through the range, state and
/// quantity come from stream `i`.
pub fn spectrum_case(seed: u64, i: u64, dim_min: usize, dim_max: usize) -> (DensityOperator, HermitianQuantity) {
    let dim = dim_min + (i as usize) % (dim_max - dim_min + 1);
    let mut r = rng::split(seed, i);
    let rho = random::density(dim, &mut r);
    let a = random::hermitian(dim, &mut r);
    (rho, a)
}

fn spectrum(p: &SpectrumParams, seed: u64, name: &str) -> Run {
    let mut t = Table::new(
        "cases",
        &[
            ("case", "int", "case index (= random stream)"),
            ("dim", "int", "Hilbert-space dimension"),
            ("expectation", "float", "<A>"),
            ("uncertainty", "float", "sigma_A"),
            ("nearest", "float", "eigenvalue of A closest to <A>"),
            ("gap", "float", "|nearest - <A>|"),
            ("holds", "bool", "gap <= sigma_A + 1e-10"),
        ],
    );
    for i in 0..p.pairs as u64 {
        let (rho, a) = spectrum_case(seed, i, p.dim_min as usize, p.dim_max as usize);
        let prox = nearest_spectral_value(&rho, &a)?;
        t.row(&[
            Cell::U(i),
            Cell::U(rho.dim() as u64),
            Cell::F(q_expectation(&rho, &a)?),
            Cell::F(prox.sigma),
            Cell::F(prox.lambda),
            Cell::F(prox.gap),
            Cell::B(prox.gap <= prox.sigma + 1e-10),
        ]);
    }
    outcome(t.finish(name).into(), Some(p.pairs as u64))
}

fn gibbs(p: &GibbsParams, name: &str) -> Run {
    let h = HermitianQuantity::from_real_diagonal(&[0.0, p.epsilon]);
    let number = HermitianQuantity::from_real_diagonal(&[0.0, 1.0]);
    let mut t = Table::new(
        "occupation",
        &[
            ("temperature", "float", "T (k = 1)"),
            ("occupation", "float", "<N> in the grand-canonical state"),
            ("closed_form", "float", "1 / (exp((epsilon - mu)/T) + 1)"),
            ("pressure", "float", "P fixed by Tr rho = 1"),
            ("euler_residual", "float", "<H> - T<S> + P V - mu <N>"),
        ],
    );
    for &temp in &p.temperatures {
        let gc = grand_canonical(&h, &number, temp, p.mu, p.volume)?;
        let occ = q_expectation(&gc.state.rho, &number)?;
        let closed = 1.0 / (((p.epsilon - p.mu) / temp).exp() + 1.0);
        let terms = [(-gc.pressure, HermitianQuantity::identity(2).scale(p.volume)), (p.mu, number.clone())];
        let residual = euler_residual(&gc.state, &h, &terms, temp)?;
        t.row(&[Cell::F(temp), Cell::F(occ), Cell::F(closed), Cell::F(gc.pressure), Cell::F(residual)]);
    }
    outcome(t.finish(name).into(), None)
}
