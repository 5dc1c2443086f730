//! POVM instruments, q-probabilities, event sampling, Kraus filters and ideal
//! (Born) measurements.

use std::fmt;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMat, CVec};
use crate::qcore::{check_dims, check_unit, DensityOperator, HermitianQuantity, Tolerances};
use crate::rng;
use crate::{Error, Result};

/// Label attached to an instrument outcome: a measured value or a named event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutcomeLabel {
    Value(f64),
    Name(String),
}

impl OutcomeLabel {
    pub fn value(&self) -> Option<f64> {
        match self {
            OutcomeLabel::Value(v) => Some(*v),
            OutcomeLabel::Name(_) => None,
        }
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeLabel::Value(v) => write!(f, "{v}"),
            OutcomeLabel::Name(s) => f.write_str(s),
        }
    }
}

impl From<f64> for OutcomeLabel {
    fn from(v: f64) -> Self {
        OutcomeLabel::Value(v)
    }
}

impl From<&str> for OutcomeLabel {
    fn from(s: &str) -> Self {
        OutcomeLabel::Name(s.to_owned())
    }
}

/// Positive operator-valued measure: PSD effects summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<HermitianQuantity>,
    outcomes: Vec<OutcomeLabel>,
}

impl Povm {
    pub fn new(effects: Vec<HermitianQuantity>, outcomes: Vec<OutcomeLabel>) -> Result<Self> {
        Self::with_tolerances(effects, outcomes, &Tolerances::default())
    }

    pub fn with_tolerances(
        effects: Vec<HermitianQuantity>,
        outcomes: Vec<OutcomeLabel>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidArgument("a POVM needs at least one effect".into()));
        }
        if effects.len() != outcomes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} effects but {} outcome labels",
                effects.len(),
                outcomes.len()
            )));
        }
        let n = effects[0].dim();
        let mut sum = CMat::zeros(n, n);
        for e in &effects {
            check_dims(n, e.dim())?;
            let min_eigenvalue = e.eigen()?.min();
            if min_eigenvalue < -tol.psd {
                return Err(Error::NotPositive { min_eigenvalue });
            }
            sum += e.matrix();
        }
        let residual = linalg::max_abs(&(sum - linalg::identity(n)));
        if residual > tol.hermitian {
            return Err(Error::Incomplete { residual });
        }
        Ok(Self { effects, outcomes })
    }

    /// Effects `v_k v_k*` for an orthonormal family, labelled `0, 1, …`.
    pub fn from_orthonormal(vectors: &[CVec]) -> Result<Self> {
        let effects = vectors
            .iter()
            .map(|v| HermitianQuantity::new(linalg::projector(v)))
            .collect::<Result<Vec<_>>>()?;
        let outcomes = (0..vectors.len()).map(|k| OutcomeLabel::Value(k as f64)).collect();
        Self::new(effects, outcomes)
    }

    /// Computational-basis readout.
    pub fn computational(n: usize) -> Self {
        let basis: Vec<CVec> = (0..n).map(|k| linalg::basis_vector(n, k)).collect();
        Self::from_orthonormal(&basis).expect("computational basis is complete")
    }

    /// Binary test `{φφ*, I − φφ*}` with outcomes `1` (pass) and `0` (fail).
    pub fn binary_test(phi: &CVec) -> Result<Self> {
        check_unit(phi, Tolerances::default().hermitian)?;
        let n = phi.len();
        let pass = linalg::projector(phi);
        let fail = linalg::identity(n) - &pass;
        Self::new(
            vec![HermitianQuantity::new(pass)?, HermitianQuantity::new(fail)?],
            vec![OutcomeLabel::Value(1.0), OutcomeLabel::Value(0.0)],
        )
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[HermitianQuantity] {
        &self.effects
    }

    pub fn outcomes(&self) -> &[OutcomeLabel] {
        &self.outcomes
    }

    /// Numeric outcome values, if every label is a number.
    pub fn outcome_values(&self) -> Option<Vec<f64>> {
        self.outcomes.iter().map(OutcomeLabel::value).collect()
    }
}

/// `p_k = Tr ρ P_k`, clipped to `[0, 1]` and renormalized.
pub fn q_probabilities(rho: &DensityOperator, povm: &Povm) -> Result<Vec<f64>> {
    check_dims(povm.dim(), rho.dim())?;
    let tol = Tolerances::default();
    let raw: Vec<f64> = povm
        .effects
        .iter()
        .map(|e| linalg::trace_product(rho.matrix(), e.matrix()).re)
        .collect();
    let total: f64 = raw.iter().sum();
    if (total - 1.0).abs() > tol.trace * povm.len() as f64 {
        return Err(Error::Incomplete { residual: (total - 1.0).abs() });
    }
    let clipped: Vec<f64> = raw.iter().map(|p| p.clamp(0.0, 1.0)).collect();
    let norm: f64 = clipped.iter().sum();
    Ok(clipped.into_iter().map(|p| p / norm).collect())
}

/// Outcome counts of `total` independent runs of an instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSample {
    /// Counts in the instrument's outcome order.
    pub counts: Vec<(OutcomeLabel, u64)>,
    pub total: u64,
    pub seed: u64,
}

impl EventSample {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|(_, k)| *k as f64 / self.total as f64).collect()
    }

    pub fn count_of(&self, index: usize) -> u64 {
        self.counts[index].1
    }
}

/// Draws `n` events from the categorical distribution of `q_probabilities`.
pub fn sample_events(rho: &DensityOperator, povm: &Povm, n: u64, seed: u64) -> Result<EventSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let probs = q_probabilities(rho, povm)?;
    let counts = multinomial(&probs, n, seed)?;
    Ok(EventSample {
        counts: povm.outcomes.iter().cloned().zip(counts).collect(),
        total: n,
        seed,
    })
}

/// Multinomial draw by sequential conditional binomials.
pub(crate) fn multinomial(probs: &[f64], n: u64, seed: u64) -> Result<Vec<u64>> {
    let mut rng = rng::seeded(seed);
    let mut remaining = n;
    let mut mass = 1.0f64;
    let mut counts = Vec::with_capacity(probs.len());
    for (k, &p) in probs.iter().enumerate() {
        if k + 1 == probs.len() {
            counts.push(remaining);
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, q)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(&mut rng);
        counts.push(draw);
        remaining -= draw;
        mass -= p;
    }
    Ok(counts)
}

/// Event-based filter given by Kraus operators with `Σ R_k* R_k = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausFilter {
    ops: Vec<CMat>,
}

impl KrausFilter {
    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidArgument("a filter needs at least one operator".into()));
        }
        let n = linalg::check_square(&ops[0])?;
        let mut sum = CMat::zeros(n, n);
        for r in &ops {
            check_dims(n, linalg::check_square(r)?)?;
            sum += r.adjoint() * r;
        }
        let residual = linalg::max_abs(&(sum - linalg::identity(n)));
        if residual > Tolerances::default().hermitian {
            return Err(Error::Incomplete { residual });
        }
        Ok(Self { ops })
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    /// The POVM `{R_k* R_k}` describing the filter's event statistics.
    pub fn induced_povm(&self) -> Result<Povm> {
        let effects = self
            .ops
            .iter()
            .map(|r| HermitianQuantity::new(r.adjoint() * r))
            .collect::<Result<Vec<_>>>()?;
        let outcomes = (0..self.ops.len()).map(|k| OutcomeLabel::Value(k as f64)).collect();
        Povm::new(effects, outcomes)
    }

    /// Unconditional output `Σ_k R_k ρ R_k*`.
    pub fn mixture(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        check_dims(self.dim(), rho.dim())?;
        let n = self.dim();
        let mut out = CMat::zeros(n, n);
        for r in &self.ops {
            out += r * rho.matrix() * r.adjoint();
        }
        Ok(DensityOperator::from_trusted(out))
    }
}

/// Result of conditioning on filter event `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub probability: f64,
    pub state: DensityOperator,
}

/// `p_k = ⟨R_k* R_k⟩` and `ρ_k = R_k ρ R_k* / p_k`.
pub fn apply_filter(rho: &DensityOperator, filter: &KrausFilter, k: usize) -> Result<FilterOutcome> {
    check_dims(filter.dim(), rho.dim())?;
    let r = filter
        .ops
        .get(k)
        .ok_or_else(|| Error::InvalidArgument(format!("filter has no event {k}")))?;
    let unnormalized = r * rho.matrix() * r.adjoint();
    let probability = linalg::trace(&unnormalized).re;
    if probability <= Tolerances::default().psd {
        return Err(Error::NullEvent { probability });
    }
    let state = DensityOperator::new(unnormalized * c(1.0 / probability, 0.0))?;
    Ok(FilterOutcome { probability, state })
}

/// Ideal measurement of `A`: orthogonal eigenprojectors labelled by the distinct
/// eigenvalues, in descending order. Eigenvalues within `εdegen` share a projector.
pub fn born_instrument(a: &HermitianQuantity) -> Result<Povm> {
    born_instrument_with(a, Tolerances::default().degenerate)
}

pub fn born_instrument_with(a: &HermitianQuantity, degenerate: f64) -> Result<Povm> {
    let eig = a.eigen()?;
    let n = a.dim();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in (0..n).rev() {
        match clusters.last_mut() {
            Some(cluster) if eig.values[cluster[0]] - eig.values[k] <= degenerate => cluster.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    let mut effects = Vec::with_capacity(clusters.len());
    let mut outcomes = Vec::with_capacity(clusters.len());
    for cluster in &clusters {
        let mut p = CMat::zeros(n, n);
        for &k in cluster {
            let v = eig.vectors.column(k);
            p += &v * v.adjoint();
        }
        let value = cluster.iter().map(|&k| eig.values[k]).sum::<f64>() / cluster.len() as f64;
        effects.push(HermitianQuantity::new(p)?);
        outcomes.push(OutcomeLabel::Value(value));
    }
    Povm::new(effects, outcomes)
}

/// `|φ*ψ|²` for unit vectors.
pub fn test_state(phi: &CVec, psi: &CVec) -> Result<f64> {
    check_dims(phi.len(), psi.len())?;
    let tol = Tolerances::default().hermitian;
    check_unit(phi, tol)?;
    check_unit(psi, tol)?;
    Ok(linalg::inner(phi, psi).norm_sqr().min(1.0))
}
