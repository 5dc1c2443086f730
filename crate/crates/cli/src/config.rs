//! Experiment configs: one TOML file per run.
//!
//! ```toml
//! kind = "malus"
//! seed = 7
//! output = "out/malus"
//!
//! [parameters]
//! angles = 36
//! ```
//!
//! Every parameter has a default; unknown keys anywhere are rejected.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

pub const KINDS: [&str; 10] = [
    "tomography",
    "malus",
    "sliced-medium",
    "hybrid",
    "koopman",
    "pdp",
    "ensemble",
    "bistable",
    "spectrum-sweep",
    "gibbs",
];

pub fn describe_kind(kind: &str) -> &'static str {
    match kind {
        "tomography" => "reconstruct a random state from binary test frequencies",
        "malus" => "polarizer sweep against |phi*psi|^2",
        "sliced-medium" => "thin-slice product vs exact evolution for H(t) = sigma_x sin t",
        "hybrid" => "spin-boson hybrid trajectory and energy-drift convergence",
        "koopman" => "Gaussian phase-space density under the Koopman generator",
        "pdp" => "quantum-jump event log and count histogram",
        "ensemble" => "jump-trajectory average against the master equation",
        "bistable" => "branch selection in a noisy double well",
        "spectrum-sweep" => "nearest eigenvalue within one uncertainty of the q-expectation",
        "gibbs" => "grand-canonical two-level occupation and Euler identity",
        _ => "",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographyParams {
    pub dim: i64,
    pub samples: i64,
    /// Use exact probabilities instead of sampled frequencies.
    pub exact: bool,
}

impl Default for TomographyParams {
    fn default() -> Self {
        Self { dim: 2, samples: 100_000, exact: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MalusParams {
    pub angles: i64,
    /// Linear polarization angle of the incoming beam.
    pub polarization: f64,
}

impl Default for MalusParams {
    fn default() -> Self {
        Self { angles: 36, polarization: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlicedParams {
    pub slices: Vec<i64>,
    pub t_end: f64,
}

impl Default for SlicedParams {
    fn default() -> Self {
        Self { slices: vec![100, 200, 400], t_end: PI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HybridParams {
    pub dt: Vec<f64>,
    pub t_end: f64,
    pub q0: f64,
    pub p0: f64,
    pub mass: f64,
    pub omega: f64,
    pub tunneling: f64,
    pub coupling: f64,
    pub bias: f64,
    pub record_every: i64,
}

impl Default for HybridParams {
    fn default() -> Self {
        Self {
            dt: vec![1e-2, 5e-3, 2.5e-3],
            t_end: 10.0,
            q0: 1.0,
            p0: 0.0,
            mass: 1.0,
            omega: 1.0,
            tunneling: 1.0,
            coupling: 0.5,
            bias: 0.0,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KoopmanParams {
    pub grid: Vec<i64>,
    pub half_width: f64,
    pub q0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for KoopmanParams {
    fn default() -> Self {
        Self { grid: vec![128, 256], half_width: 4.0, q0: 1.0, p0: 0.0, sigma: 0.2, t_end: FRAC_PI_2, dt: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpenModel {
    /// `H = 0`, `L = √γ |0⟩⟨1|`, start in `|1⟩`.
    Decay,
    /// `H = (Ω/2) σx`, `L = √γ |0⟩⟨1|`, start in `|0⟩`.
    DrivenDamped,
    /// Decay plus incoherent pump `√Γ |1⟩⟨0|`, start in `|0⟩`; only decays are counted.
    Repumped,
    /// One level with `L = √γ`: a constant-rate event source.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdpParams {
    pub model: OpenModel,
    pub gamma: f64,
    pub drive: f64,
    pub pump: f64,
    pub t_end: f64,
    pub dt: f64,
    pub trajectories: i64,
}

impl Default for PdpParams {
    fn default() -> Self {
        Self { model: OpenModel::DrivenDamped, gamma: 1.0, drive: 2.0, pump: 100.0, t_end: 5.0, dt: 0.01, trajectories: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleParams {
    pub model: OpenModel,
    pub gamma: f64,
    pub drive: f64,
    pub pump: f64,
    pub t_end: f64,
    pub dt: f64,
    pub trajectories: i64,
    pub record_every: i64,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            model: OpenModel::DrivenDamped,
            gamma: 1.0,
            drive: 2.0,
            pump: 100.0,
            t_end: 5.0,
            dt: 0.01,
            trajectories: 2000,
            record_every: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BistableParams {
    pub a: f64,
    pub x0: f64,
    pub damping: f64,
    pub noise: f64,
    pub mass: f64,
    pub tilt: f64,
    pub t_end: f64,
    pub runs: i64,
    pub dt: f64,
}

impl Default for BistableParams {
    fn default() -> Self {
        Self { a: 1.0, x0: 1.0, damping: 1.0, noise: 0.1, mass: 1.0, tilt: 0.0, t_end: 20.0, runs: 10_000, dt: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumParams {
    pub pairs: i64,
    pub dim_min: i64,
    pub dim_max: i64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self { pairs: 1000, dim_min: 2, dim_max: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsParams {
    /// Level spacing of the two-level system.
    pub epsilon: f64,
    pub mu: f64,
    pub temperatures: Vec<f64>,
    pub volume: f64,
}

impl Default for GibbsParams {
    fn default() -> Self {
        Self { epsilon: 1.0, mu: 0.3, temperatures: vec![0.25, 0.5, 1.0, 2.0, 4.0], volume: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "kebab-case")]
pub enum Params {
    Tomography(TomographyParams),
    Malus(MalusParams),
    SlicedMedium(SlicedParams),
    Hybrid(HybridParams),
    Koopman(KoopmanParams),
    Pdp(PdpParams),
    Ensemble(EnsembleParams),
    Bistable(BistableParams),
    SpectrumSweep(SpectrumParams),
    Gibbs(GibbsParams),
}

impl Params {
    pub fn kind(&self) -> &'static str {
        match self {
            Params::Tomography(_) => "tomography",
            Params::Malus(_) => "malus",
            Params::SlicedMedium(_) => "sliced-medium",
            Params::Hybrid(_) => "hybrid",
            Params::Koopman(_) => "koopman",
            Params::Pdp(_) => "pdp",
            Params::Ensemble(_) => "ensemble",
            Params::Bistable(_) => "bistable",
            Params::SpectrumSweep(_) => "spectrum-sweep",
            Params::Gibbs(_) => "gibbs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub params: Params,
    pub seed: u64,
    pub output: String,
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        self.params.kind()
    }
}

/// Parses and fully validates a config, collecting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<Diagnostic>> {
    let table: toml::Table = toml::from_str(text).map_err(|e| vec![parse_diagnostic(text, &e)])?;
    let mut diags = Vec::new();
    for key in table.keys() {
        if !["kind", "seed", "output", "parameters"].contains(&key.as_str()) {
            diags.push(Diagnostic::new(key.clone(), "unknown key"));
        }
    }
    let kind = match table.get("kind") {
        None => {
            diags.push(Diagnostic::new("kind", format!("missing; expected one of {}", KINDS.join(", "))));
            None
        }
        Some(toml::Value::String(k)) if KINDS.contains(&k.as_str()) => Some(k.clone()),
        Some(toml::Value::String(k)) => {
            diags.push(Diagnostic::new("kind", format!("unknown experiment kind `{k}`; expected one of {}", KINDS.join(", "))));
            None
        }
        Some(_) => {
            diags.push(Diagnostic::new("kind", "must be a string"));
            None
        }
    };
    let seed = match table.get("seed") {
        None => 0,
        Some(toml::Value::Integer(s)) if *s >= 0 => *s as u64,
        Some(toml::Value::Integer(s)) => {
            diags.push(Diagnostic::new("seed", format!("must be nonnegative, got {s}")));
            0
        }
        Some(_) => {
            diags.push(Diagnostic::new("seed", "must be an integer"));
            0
        }
    };
    let output = match table.get("output") {
        None => kind.as_deref().map(|k| format!("out/{k}")).unwrap_or_default(),
        Some(toml::Value::String(s)) if !s.trim().is_empty() => s.clone(),
        Some(_) => {
            diags.push(Diagnostic::new("output", "must be a nonempty path prefix"));
            String::new()
        }
    };
    let params_table = match table.get("parameters") {
        None => toml::Table::new(),
        Some(toml::Value::Table(t)) => t.clone(),
        Some(_) => {
            diags.push(Diagnostic::new("parameters", "must be a table"));
            toml::Table::new()
        }
    };
    let params = kind.and_then(|k| match build_params(&k, params_table) {
        Ok(p) => Some(p),
        Err(d) => {
            diags.extend(d);
            None
        }
    });
    if let Some(p) = &params {
        diags.extend(check_params(p));
    }
    match params {
        Some(params) if diags.is_empty() => Ok(ExperimentConfig { params, seed, output }),
        _ => Err(diags),
    }
}

fn parse_diagnostic(text: &str, e: &toml::de::Error) -> Diagnostic {
    let message = e.message().to_string();
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            Diagnostic::new("", format!("parse error at line {line}, column {column}: {message}"))
        }
        None => Diagnostic::new("", format!("parse error: {message}")),
    }
}

fn typed<T: DeserializeOwned>(table: toml::Table) -> Result<T, Vec<Diagnostic>> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| vec![Diagnostic::new("parameters", e.message().trim().to_string())])
}

fn build_params(kind: &str, table: toml::Table) -> Result<Params, Vec<Diagnostic>> {
    Ok(match kind {
        "tomography" => Params::Tomography(typed(table)?),
        "malus" => Params::Malus(typed(table)?),
        "sliced-medium" => Params::SlicedMedium(typed(table)?),
        "hybrid" => Params::Hybrid(typed(table)?),
        "koopman" => Params::Koopman(typed(table)?),
        "pdp" => Params::Pdp(typed(table)?),
        "ensemble" => Params::Ensemble(typed(table)?),
        "bistable" => Params::Bistable(typed(table)?),
        "spectrum-sweep" => Params::SpectrumSweep(typed(table)?),
        "gibbs" => Params::Gibbs(typed(table)?),
        other => unreachable!("kind {other} checked above"),
    })
}

struct Checker(Vec<Diagnostic>);

impl Checker {
    fn fail(&mut self, field: &str, msg: String) {
        self.0.push(Diagnostic::new(format!("parameters.{field}"), msg));
    }

    fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.fail(field, format!("must be positive, got {v}"));
        }
    }

    fn nonnegative(&mut self, field: &str, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.fail(field, format!("must be nonnegative, got {v}"));
        }
    }

    fn finite(&mut self, field: &str, v: f64) {
        if !v.is_finite() {
            self.fail(field, format!("must be finite, got {v}"));
        }
    }

    fn range(&mut self, field: &str, v: i64, lo: i64, hi: i64) {
        if v < lo || v > hi {
            self.fail(field, format!("must be in [{lo}, {hi}], got {v}"));
        }
    }

    fn nonempty<T>(&mut self, field: &str, v: &[T]) {
        if v.is_empty() {
            self.fail(field, "must not be empty".into());
        }
    }
}

const MAX_COUNT: i64 = 1 << 40;

fn check_params(p: &Params) -> Vec<Diagnostic> {
    let mut c = Checker(Vec::new());
    match p {
        Params::Tomography(t) => {
            c.range("dim", t.dim, 2, 16);
            c.range("samples", t.samples, 1, MAX_COUNT);
        }
        Params::Malus(m) => {
            c.range("angles", m.angles, 1, 1_000_000);
            c.finite("polarization", m.polarization);
        }
        Params::SlicedMedium(s) => {
            c.nonempty("slices", &s.slices);
            for (i, &n) in s.slices.iter().enumerate() {
                c.range(&format!("slices[{i}]"), n, 1, 10_000_000);
            }
            c.positive("t_end", s.t_end);
        }
        Params::Hybrid(h) => {
            c.nonempty("dt", &h.dt);
            for (i, &dt) in h.dt.iter().enumerate() {
                c.positive(&format!("dt[{i}]"), dt);
            }
            c.positive("t_end", h.t_end);
            c.positive("mass", h.mass);
            c.nonnegative("omega", h.omega);
            for (f, v) in [("q0", h.q0), ("p0", h.p0), ("tunneling", h.tunneling), ("coupling", h.coupling), ("bias", h.bias)] {
                c.finite(f, v);
            }
            c.range("record_every", h.record_every, 1, MAX_COUNT);
        }
        Params::Koopman(k) => {
            c.nonempty("grid", &k.grid);
            for (i, &n) in k.grid.iter().enumerate() {
                c.range(&format!("grid[{i}]"), n, 16, 1024);
                if n % 2 != 0 {
                    c.fail(&format!("grid[{i}]"), format!("must be even, got {n}"));
                }
            }
            c.positive("half_width", k.half_width);
            c.positive("sigma", k.sigma);
            c.nonnegative("t_end", k.t_end);
            c.positive("dt", k.dt);
            c.finite("q0", k.q0);
            c.finite("p0", k.p0);
        }
        Params::Pdp(p) => {
            check_open(&mut c, p.gamma, p.drive, p.pump);
            c.positive("t_end", p.t_end);
            c.positive("dt", p.dt);
            c.range("trajectories", p.trajectories, 1, MAX_COUNT);
        }
        Params::Ensemble(e) => {
            check_open(&mut c, e.gamma, e.drive, e.pump);
            c.positive("t_end", e.t_end);
            c.positive("dt", e.dt);
            c.range("trajectories", e.trajectories, 1, MAX_COUNT);
            c.range("record_every", e.record_every, 1, MAX_COUNT);
        }
        Params::Bistable(b) => {
            c.positive("a", b.a);
            c.positive("x0", b.x0);
            c.nonnegative("damping", b.damping);
            c.nonnegative("noise", b.noise);
            c.positive("mass", b.mass);
            c.finite("tilt", b.tilt);
            c.positive("t_end", b.t_end);
            c.positive("dt", b.dt);
            c.range("runs", b.runs, 1, MAX_COUNT);
        }
        Params::SpectrumSweep(s) => {
            c.range("pairs", s.pairs, 1, MAX_COUNT);
            c.range("dim_min", s.dim_min, 1, 64);
            c.range("dim_max", s.dim_max, s.dim_min.max(1), 64);
        }
        Params::Gibbs(g) => {
            c.finite("epsilon", g.epsilon);
            c.finite("mu", g.mu);
            c.nonempty("temperatures", &g.temperatures);
            for (i, &t) in g.temperatures.iter().enumerate() {
                c.positive(&format!("temperatures[{i}]"), t);
            }
            c.positive("volume", g.volume);
        }
    }
    c.0
}

fn check_open(c: &mut Checker, gamma: f64, drive: f64, pump: f64) {
    c.positive("gamma", gamma);
    c.finite("drive", drive);
    c.nonnegative("pump", pump);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_parameters() {
        let cfg = parse_config("kind = \"malus\"\nseed = 3\n").unwrap();
        assert_eq!(cfg.params, Params::Malus(MalusParams::default()));
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.output, "out/malus");
    }

    #[test]
    fn unknown_kind_names_the_field() {
        let d = parse_config("kind = \"teleport\"\n").unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "kind");
    }

    #[test]
    fn negative_sample_size_is_a_range_error() {
        let d = parse_config("kind = \"tomography\"\n[parameters]\nsamples = -5\n").unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].field, "parameters.samples");
        assert!(d[0].message.contains("must be in"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let d = parse_config("kind = \"malus\"\ncolour = 1\n").unwrap_err();
        assert_eq!(d[0].field, "colour");
        let d = parse_config("kind = \"malus\"\n[parameters]\nangels = 3\n").unwrap_err();
        assert!(d[0].message.contains("angels"), "{}", d[0]);
    }

    #[test]
    fn parse_errors_carry_position() {
        let d = parse_config("kind = \"malus\"\nseed = = 4\n").unwrap_err();
        assert!(d[0].message.contains("line 2"), "{}", d[0]);
    }

    #[test]
    fn every_kind_has_valid_defaults() {
        for kind in KINDS {
            assert!(parse_config(&format!("kind = \"{kind}\"")).is_ok(), "{kind}");
            assert!(!describe_kind(kind).is_empty());
        }
    }
}
