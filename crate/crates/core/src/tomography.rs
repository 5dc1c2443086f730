//! State tomography from `N² − 1` binary tests and POVM calibration.
//!
//! Test order for dimension `N` (0-based indices):
//!
//! 1. diagonal tests `e_j` for `j = 0..N−1` (the last diagonal entry follows from `Tr ρ = 1`),
//! 2. real pair tests `(e_j + e_k)/√2` for `j < k`, lexicographic,
//! 3. imaginary pair tests `(e_j + i e_k)/√2` for `j < k`, lexicographic.
//!
//! With `f` the pass probability of a test, the inversion is
//!
//! ```text
//! ρ_jj    = f(e_j)                                   j < N − 1
//! ρ_NN    = 1 − Σ_{j<N−1} ρ_jj
//! Re ρ_jk = f((e_j + e_k)/√2)  − (ρ_jj + ρ_kk)/2
//! Im ρ_jk = (ρ_jj + ρ_kk)/2 − f((e_j + i e_k)/√2)
//! ```
//!
//! Sampled estimates are projected to the nearest valid state by eigenvalue
//! clipping and renormalization; the size of that correction is reported.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMat, CVec, HermitianEigen};
use crate::measure::{OutcomeLabel, Povm};
use crate::qcore::{check_dims, DensityOperator, HermitianQuantity, Tolerances};
use crate::rng;
use crate::{Error, Result};

/// Conditioning limit for calibration designs.
pub const KAPPA_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    Diagonal(usize),
    RealPair(usize, usize),
    ImagPair(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    dim: usize,
    kinds: Vec<TestKind>,
    tests: Vec<CVec>,
}

impl TestSuite {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn tests(&self) -> &[CVec] {
        &self.tests
    }

    pub fn kinds(&self) -> &[TestKind] {
        &self.kinds
    }
}

pub fn standard_test_suite(n: usize) -> Result<TestSuite> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("tomography needs N >= 2, got {n}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut kinds = Vec::with_capacity(n * n - 1);
    let mut tests = Vec::with_capacity(n * n - 1);
    for j in 0..n - 1 {
        kinds.push(TestKind::Diagonal(j));
        tests.push(linalg::basis_vector(n, j));
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut v = CVec::zeros(n);
            v[j] = c(s, 0.0);
            v[k] = c(s, 0.0);
            kinds.push(TestKind::RealPair(j, k));
            tests.push(v);
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut v = CVec::zeros(n);
            v[j] = c(s, 0.0);
            v[k] = c(0.0, s);
            kinds.push(TestKind::ImagPair(j, k));
            tests.push(v);
        }
    }
    Ok(TestSuite { dim: n, kinds, tests })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSize {
    Exact,
    Count(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub values: Vec<f64>,
    pub sample_sizes: Vec<SampleSize>,
}

impl FrequencyTable {
    pub fn new(values: Vec<f64>, sample_sizes: Vec<SampleSize>) -> Result<Self> {
        if values.len() != sample_sizes.len() {
            return Err(Error::InvalidArgument("values and sample sizes differ in length".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("frequency {bad} outside [0, 1]")));
        }
        Ok(Self { values, sample_sizes })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    Exact,
    /// `n` runs per test; test `i` draws from stream `i` of `seed`.
    Sampled { n: u64, seed: u64 },
}

/// Pass frequency of every test `{φφ*, I − φφ*}` in the suite.
pub fn measure_suite(rho: &DensityOperator, suite: &TestSuite, sampling: Sampling) -> Result<FrequencyTable> {
    check_dims(suite.dim, rho.dim())?;
    let exact: Vec<f64> = suite
        .tests
        .iter()
        .map(|phi| (phi.adjoint() * rho.matrix() * phi)[(0, 0)].re.clamp(0.0, 1.0))
        .collect();
    match sampling {
        Sampling::Exact => FrequencyTable::new(exact, vec![SampleSize::Exact; suite.len()]),
        Sampling::Sampled { n, seed } => {
            if n == 0 {
                return Err(Error::InvalidArgument("sample size must be positive".into()));
            }
            let values = exact
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let mut r = rng::split(seed, i as u64);
                    let hits = Binomial::new(n, p)
                        .map_err(|e| Error::InvalidArgument(e.to_string()))?
                        .sample(&mut r);
                    Ok(hits as f64 / n as f64)
                })
                .collect::<Result<Vec<_>>>()?;
            FrequencyTable::new(values, vec![SampleSize::Count(n); suite.len()])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub state: DensityOperator,
    /// Linear-inversion estimate before projection (Hermitian, trace one).
    pub linear_estimate: CMat,
    /// Frobenius norm of the projection correction.
    pub projection_residual: f64,
}

/// Linear inversion from a table in standard-suite order.
pub fn linear_inversion(table: &FrequencyTable, n: usize) -> Result<CMat> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("tomography needs N >= 2, got {n}")));
    }
    if table.len() != n * n - 1 {
        return Err(Error::InvalidArgument(format!(
            "table has {} entries, dimension {n} needs {}",
            table.len(),
            n * n - 1
        )));
    }
    let f = &table.values;
    let mut rho = CMat::zeros(n, n);
    let mut diag_sum = 0.0;
    for j in 0..n - 1 {
        rho[(j, j)] = c(f[j], 0.0);
        diag_sum += f[j];
    }
    rho[(n - 1, n - 1)] = c(1.0 - diag_sum, 0.0);
    let pairs = n * (n - 1) / 2;
    let mut idx = 0;
    for j in 0..n {
        for k in j + 1..n {
            let mean_diag = 0.5 * (rho[(j, j)].re + rho[(k, k)].re);
            let re = f[n - 1 + idx] - mean_diag;
            let im = mean_diag - f[n - 1 + pairs + idx];
            rho[(j, k)] = c(re, im);
            rho[(k, j)] = c(re, -im);
            idx += 1;
        }
    }
    Ok(rho)
}

pub fn reconstruct_state(table: &FrequencyTable, n: usize) -> Result<Reconstruction> {
    let linear_estimate = linear_inversion(table, n)?;
    let state = DensityOperator::from_clipped(&linear_estimate)?;
    let projection_residual = (state.matrix() - &linear_estimate).norm();
    Ok(Reconstruction { state, linear_estimate, projection_residual })
}

/// Orthonormal (Hilbert–Schmidt) basis of the real space of `N×N` Hermitian matrices.
pub fn hermitian_basis(n: usize) -> Vec<CMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(n * n);
    for j in 0..n {
        let mut e = CMat::zeros(n, n);
        e[(j, j)] = c(1.0, 0.0);
        basis.push(e);
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut re = CMat::zeros(n, n);
            re[(j, k)] = c(s, 0.0);
            re[(k, j)] = c(s, 0.0);
            basis.push(re);
            let mut im = CMat::zeros(n, n);
            im[(j, k)] = c(0.0, s);
            im[(k, j)] = c(0.0, -s);
            basis.push(im);
        }
    }
    basis
}

/// Standard suite states plus the omitted last diagonal test: `N²` states that
/// span the Hermitian matrices.
pub fn calibration_states(n: usize) -> Result<Vec<DensityOperator>> {
    let suite = standard_test_suite(n)?;
    let mut states = suite
        .tests
        .iter()
        .map(DensityOperator::pure)
        .collect::<Result<Vec<_>>>()?;
    states.push(DensityOperator::basis_state(n, n - 1));
    Ok(states)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub povm: Povm,
    /// Condition number of the state design matrix.
    pub condition: f64,
    /// `sqrt(Σ_jk (Tr ρ_j P_k − p_jk)²)` for the unconstrained least-squares effects.
    pub least_squares_residual: f64,
    /// Same residual for the projected (valid) effects.
    pub residual: f64,
}

/// Least-squares POVM estimate from `freqs[j][k] ≈ Tr ρ_j P_k`, projected onto
/// PSD effects summing to the identity.
pub fn calibrate_instrument(states: &[DensityOperator], freqs: &[Vec<f64>], k: usize) -> Result<Calibration> {
    if states.is_empty() || k == 0 {
        return Err(Error::InvalidArgument("need at least one state and one effect".into()));
    }
    if freqs.len() != states.len() || freqs.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidArgument(format!(
            "frequency matrix must be {}x{k}",
            states.len()
        )));
    }
    let n = states[0].dim();
    for s in states {
        check_dims(n, s.dim())?;
    }
    let basis = hermitian_basis(n);
    let design = DMatrix::from_fn(states.len(), basis.len(), |j, b| {
        linalg::trace_product(states[j].matrix(), &basis[b]).re
    });
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = if states.len() < basis.len() { 0.0 } else { svd.singular_values.min() };
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > KAPPA_MAX {
        return Err(Error::InsufficientSpan { condition, limit: KAPPA_MAX });
    }

    let mut raw = Vec::with_capacity(k);
    let mut ls_sq = 0.0;
    for col in 0..k {
        let rhs = DVector::from_fn(states.len(), |j, _| freqs[j][col]);
        let x = svd
            .solve(&rhs, f64::EPSILON * smax)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        ls_sq += (&design * &x - &rhs).norm_squared();
        let mut effect = CMat::zeros(n, n);
        for (coef, b) in x.iter().zip(&basis) {
            effect += b * c(*coef, 0.0);
        }
        raw.push(effect);
    }

    let effects = project_to_povm(raw)?;
    let mut res_sq = 0.0;
    for (j, s) in states.iter().enumerate() {
        for (col, e) in effects.iter().enumerate() {
            res_sq += (linalg::trace_product(s.matrix(), e.matrix()).re - freqs[j][col]).powi(2);
        }
    }
    let outcomes = (0..k).map(|j| OutcomeLabel::Value(j as f64)).collect();
    Ok(Calibration {
        povm: Povm::new(effects, outcomes)?,
        condition,
        least_squares_residual: ls_sq.sqrt(),
        residual: res_sq.sqrt(),
    })
}

/// Symmetrize, clip negative eigenvalues, then hand the completeness deficit
/// `I − Σ P_k` to the effects in proportion to their traces. Repeated until the
/// result is valid, since a deficit with negative directions can undo the clipping.
fn project_to_povm(raw: Vec<CMat>) -> Result<Vec<HermitianQuantity>> {
    let n = raw[0].nrows();
    let tol = Tolerances::default();
    let mut effects: Vec<CMat> = raw.iter().map(linalg::hermitian_part).collect();
    for _ in 0..100 {
        let mut clipped = Vec::with_capacity(effects.len());
        for e in &effects {
            clipped.push(HermitianEigen::new(e)?.map_real(|x| x.max(0.0)));
        }
        let total = clipped.iter().fold(CMat::zeros(n, n), |acc, e| acc + e);
        let deficit = linalg::identity(n) - total;
        let traces: Vec<f64> = clipped.iter().map(|e| linalg::trace(e).re).collect();
        let trace_sum: f64 = traces.iter().sum();
        let k = clipped.len() as f64;
        effects = clipped
            .into_iter()
            .zip(&traces)
            .map(|(e, t)| {
                let w = if trace_sum > 0.0 { t / trace_sum } else { 1.0 / k };
                linalg::hermitian_part(&(e + &deficit * c(w, 0.0)))
            })
            .collect();
        let mut worst = 0.0f64;
        for e in &effects {
            worst = worst.max(-HermitianEigen::new(e)?.min());
        }
        if worst <= tol.psd {
            break;
        }
    }
    effects.into_iter().map(HermitianQuantity::new).collect()
}
