use super::{check_dims, q_expectation, DensityOperator, HermitianQuantity};
use crate::linalg::{self, c};
use crate::{Error, Result};

/// A Gibbs state `ρ = exp(−S/k̄)` together with its entropy operator `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsState {
    pub rho: DensityOperator,
    pub entropy: HermitianQuantity,
    pub kbar: f64,
}

impl GibbsState {
    /// `max |exp(−S/k̄) − ρ|`, recomputed from `S` alone.
    pub fn roundtrip_error(&self) -> Result<f64> {
        let kbar = self.kbar;
        let rebuilt = self.entropy.eigen()?.map_real(|s| (-s / kbar).exp());
        Ok(linalg::max_abs(&(rebuilt - self.rho.matrix())))
    }

    /// `⟨S⟩`
    pub fn mean_entropy(&self) -> Result<f64> {
        q_expectation(&self.rho, &self.entropy)
    }
}

/// `ρ = exp(−K)/Tr exp(−K)` with entropy operator `S = k̄ (K + ln Z)`.
///
/// The exponential is taken on the spectrum shifted by its minimum, so only
/// non-finite generators fail.
pub fn gibbs_from_generator(k: &HermitianQuantity, kbar: f64) -> Result<GibbsState> {
    if !(kbar > 0.0) {
        return Err(Error::InvalidArgument(format!("kbar must be positive, got {kbar}")));
    }
    let eig = k.eigen()?;
    let shift = eig.min();
    let weights: Vec<f64> = eig.values.iter().map(|&x| (-(x - shift)).exp()).collect();
    let z_shifted: f64 = weights.iter().sum();
    let log_z = z_shifted.ln() - shift;
    if !log_z.is_finite() {
        return Err(Error::Overflow("partition function of exp(-K)".into()));
    }
    let rho = eig.map_real(|x| (-(x - shift)).exp() / z_shifted);
    let n = k.dim();
    let entropy = (k.matrix() + linalg::identity(n) * c(log_z, 0.0)) * c(kbar, 0.0);
    Ok(GibbsState {
        rho: DensityOperator::from_trusted(rho),
        entropy: HermitianQuantity::new(entropy)?,
        kbar,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrandCanonical {
    pub state: GibbsState,
    pub pressure: f64,
    /// `P·V = T ln Tr exp(−(H − μN)/T)`
    pub pv: f64,
}

/// Grand-canonical state `ρ = exp(−(H + PV − μN)/T)` with the pressure fixed by
/// `Tr ρ = 1`. Units with `k̄ = 1`, so `T` is an energy.
pub fn grand_canonical(
    h: &HermitianQuantity,
    number: &HermitianQuantity,
    temperature: f64,
    mu: f64,
    volume: f64,
) -> Result<GrandCanonical> {
    check_dims(h.dim(), number.dim())?;
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {temperature}")));
    }
    if !(volume > 0.0) {
        return Err(Error::InvalidArgument(format!("volume must be positive, got {volume}")));
    }
    let generator = h.add(&number.scale(-mu))?.scale(1.0 / temperature);
    let state = gibbs_from_generator(&generator, 1.0)?;
    // S = K + ln Z = (H − μN + T ln Z)/T, hence PV = T ln Z
    let n = h.dim();
    let log_z = linalg::trace(&(state.entropy.matrix() - generator.matrix())).re / n as f64;
    let pv = temperature * log_z;
    Ok(GrandCanonical { state, pressure: pv / volume, pv })
}

/// `⟨H⟩ − T⟨S⟩ − Σ_j α_j ⟨X_j⟩` in the state.
pub fn euler_residual(
    state: &GibbsState,
    h: &HermitianQuantity,
    terms: &[(f64, HermitianQuantity)],
    temperature: f64,
) -> Result<f64> {
    let mut residual = q_expectation(&state.rho, h)? - temperature * state.mean_entropy()?;
    for (alpha, x) in terms {
        residual -= alpha * q_expectation(&state.rho, x)?;
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random;
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn zero_generator_is_maximally_mixed() {
        let g = gibbs_from_generator(&HermitianQuantity::zero(4), 1.0).unwrap();
        let target = DensityOperator::maximally_mixed(4);
        assert!(linalg::max_abs(&(g.rho.matrix() - target.matrix())) < 1e-15);
        let s = linalg::identity(4) * c(4f64.ln(), 0.0);
        assert!(linalg::max_abs(&(g.entropy.matrix() - s)) < 1e-14);
    }

    #[test]
    fn two_level_boltzmann_weights() {
        let k = HermitianQuantity::from_real_diagonal(&[0.0, 3f64.ln()]);
        let g = gibbs_from_generator(&k, 1.0).unwrap();
        assert!((g.rho.matrix()[(0, 0)].re - 0.75).abs() < 1e-15);
        assert!((g.rho.matrix()[(1, 1)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn random_generator_roundtrip() {
        let mut rng = seeded(8);
        for n in 2..7 {
            for &kbar in &[1.0, 0.37, 2.5] {
                let k = random::hermitian(n, &mut rng);
                let g = gibbs_from_generator(&k, kbar).unwrap();
                assert!((linalg::trace(g.rho.matrix()).re - 1.0).abs() < 1e-12);
                assert!(g.roundtrip_error().unwrap() < 1e-10);
                assert!(g.mean_entropy().unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn large_spread_does_not_overflow() {
        let k = HermitianQuantity::from_real_diagonal(&[-900.0, 0.0, 900.0]);
        let g = gibbs_from_generator(&k, 1.0).unwrap();
        assert!((g.rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_kbar_rejected() {
        assert!(gibbs_from_generator(&HermitianQuantity::zero(2), 0.0).is_err());
    }

    #[test]
    fn trivial_grand_canonical() {
        let zero = HermitianQuantity::zero(3);
        let gc = grand_canonical(&zero, &zero, 2.0, 0.3, 5.0).unwrap();
        assert!((gc.pv - 2.0 * 3f64.ln()).abs() < 1e-14);
        assert!((gc.pressure * 5.0 - gc.pv).abs() < 1e-14);
    }

    #[test]
    fn grand_canonical_rejects_bad_parameters() {
        let zero = HermitianQuantity::zero(2);
        assert!(grand_canonical(&zero, &zero, 0.0, 0.0, 1.0).is_err());
        assert!(grand_canonical(&zero, &zero, 1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn fermi_occupation_of_two_level_mode() {
        for &(eps, mu, t) in &[(1.0, 0.2, 0.5), (0.3, 0.9, 1.7), (2.0, -1.0, 0.25)] {
            let h = HermitianQuantity::from_real_diagonal(&[0.0, eps]);
            let n = HermitianQuantity::from_real_diagonal(&[0.0, 1.0]);
            let gc = grand_canonical(&h, &n, t, mu, 1.0).unwrap();
            let occupation = q_expectation(&gc.state.rho, &n).unwrap();
            let fermi = 1.0 / (((eps - mu) / t as f64).exp() + 1.0);
            assert!((occupation - fermi).abs() < 1e-10);
        }
    }

    #[test]
    fn euler_identity_for_grand_canonical() {
        let mut rng = seeded(99);
        for n in 2..6 {
            let h = random::hermitian(n, &mut rng);
            let num = random::hermitian(n, &mut rng);
            let (t, mu, v) = (1.3, 0.4, 2.0);
            let gc = grand_canonical(&h, &num, t, mu, v).unwrap();
            let terms = vec![
                (-gc.pressure, HermitianQuantity::identity(n).scale(v)),
                (mu, num.clone()),
            ];
            assert!(euler_residual(&gc.state, &h, &terms, t).unwrap().abs() < 1e-9);

            // perturbing one coefficient shifts the residual linearly
            let delta = 1e-3;
            let mut perturbed = terms.clone();
            perturbed[1].0 += delta;
            let shifted = euler_residual(&gc.state, &h, &perturbed, t).unwrap();
            let expected = -delta * q_expectation(&gc.state.rho, &num).unwrap();
            assert!((shifted - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn euler_residual_without_terms() {
        let mut rng = seeded(3);
        let k = random::hermitian(3, &mut rng);
        let g = gibbs_from_generator(&k, 1.0).unwrap();
        let t = 0.8;
        let h = g.entropy.scale(t);
        assert!(euler_residual(&g, &h, &[], t).unwrap().abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn unitary_covariance(seed in any::<u64>(), n in 2usize..6) {
            let mut rng = seeded(seed);
            let k = random::hermitian(n, &mut rng);
            let u = random::unitary(n, &mut rng);
            let rotated = gibbs_from_generator(&k.conjugate_by(&u), 1.0).unwrap();
            let base = gibbs_from_generator(&k, 1.0).unwrap();
            let expected = &u * base.rho.matrix() * u.adjoint();
            prop_assert!(linalg::max_abs(&(rotated.rho.matrix() - expected)) < 1e-10);
        }
    }
}
