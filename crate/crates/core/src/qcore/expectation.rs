use super::{check_dims, DensityOperator, HermitianQuantity, Tolerances};
use crate::linalg::{self, c};
use crate::{Error, Result};

/// `⟨A⟩ = Tr ρA`.
pub fn q_expectation(rho: &DensityOperator, a: &HermitianQuantity) -> Result<f64> {
    check_dims(rho.dim(), a.dim())?;
    let value = linalg::trace_product(rho.matrix(), a.matrix());
    let tol = Tolerances::default().hermitian * linalg::max_abs(a.matrix()).max(1.0);
    if value.im.abs() > tol {
        return Err(Error::NotHermitian { residual: value.im.abs() });
    }
    Ok(value.re)
}

/// `σ_A = sqrt(⟨(A − ⟨A⟩)²⟩)`.
pub fn q_uncertainty(rho: &DensityOperator, a: &HermitianQuantity) -> Result<f64> {
    let mean = q_expectation(rho, a)?;
    let shifted = a.matrix() - linalg::identity(a.dim()) * c(mean, 0.0);
    let variance = linalg::trace_product(rho.matrix(), &(&shifted * &shifted)).re;
    Ok(variance.max(0.0).sqrt())
}

/// Eigenvalue of `A` closest to `⟨A⟩`, together with the distance and `σ_A`.
///
/// Since `σ_A² = Σ_k w_k (λ_k − ⟨A⟩)²` is an average of squared distances to the
/// spectrum, the closest eigenvalue always satisfies `gap ≤ σ_A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralProximity {
    pub lambda: f64,
    pub gap: f64,
    pub sigma: f64,
}

pub fn nearest_spectral_value(
    rho: &DensityOperator,
    a: &HermitianQuantity,
) -> Result<SpectralProximity> {
    let mean = q_expectation(rho, a)?;
    let sigma = q_uncertainty(rho, a)?;
    let eig = a.eigen()?;
    let lambda = eig
        .values
        .iter()
        .copied()
        .min_by(|x, y| (x - mean).abs().total_cmp(&(y - mean).abs()))
        .ok_or_else(|| Error::Eigen("empty spectrum".into()))?;
    Ok(SpectralProximity { lambda, gap: (lambda - mean).abs(), sigma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sigma_x, sigma_z, CMat};
    use crate::qcore::random;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn sz() -> HermitianQuantity {
        HermitianQuantity::new(sigma_z()).unwrap()
    }

    /// Independent route: `Σ_i w_i v_i* A v_i` over the eigenbasis of `ρ`.
    fn spectral_oracle(rho: &DensityOperator, a: &HermitianQuantity) -> f64 {
        let eig = rho.eigen().unwrap();
        let mut acc = 0.0;
        for (i, w) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(i);
            acc += w * (v.adjoint() * a.matrix() * v)[(0, 0)].re;
        }
        acc
    }

    #[test]
    fn expectation_trivial_cases() {
        let mixed = DensityOperator::maximally_mixed(2);
        assert!(q_expectation(&mixed, &sz()).unwrap().abs() < 1e-15);
        let up = DensityOperator::basis_state(2, 0);
        assert!((q_expectation(&up, &sz()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expectation_matches_spectral_oracle() {
        let mut rng = seeded(2024);
        for _ in 0..20 {
            let rho = random::density(4, &mut rng);
            let a = random::hermitian(4, &mut rng);
            let direct = q_expectation(&rho, &a).unwrap();
            assert!((direct - spectral_oracle(&rho, &a)).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rho = DensityOperator::maximally_mixed(3);
        assert!(matches!(
            q_expectation(&rho, &sz()),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn uncertainty_trivial_cases() {
        let up = DensityOperator::basis_state(2, 0);
        assert!(q_uncertainty(&up, &sz()).unwrap() < 1e-15);
        let mixed = DensityOperator::maximally_mixed(2);
        assert!((q_uncertainty(&mixed, &sz()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uncertainty_matches_born_probabilities() {
        let mut rng = seeded(77);
        for n in 2..6 {
            let rho = random::density(n, &mut rng);
            let a = random::hermitian(n, &mut rng);
            let eig = a.eigen().unwrap();
            let mean = q_expectation(&rho, &a).unwrap();
            // p_k = v_k* ρ v_k for the (non-degenerate) eigenvectors of A
            let mut var = 0.0;
            for (k, ak) in eig.values.iter().enumerate() {
                let v = eig.vectors.column(k);
                let pk = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
                var += pk * (ak - mean).powi(2);
            }
            assert!((q_uncertainty(&rho, &a).unwrap() - var.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn nearest_value_boundary_and_sharp_cases() {
        let mixed = DensityOperator::maximally_mixed(2);
        let r = nearest_spectral_value(&mixed, &sz()).unwrap();
        assert!((r.lambda.abs() - 1.0).abs() < 1e-12);
        assert!((r.gap - 1.0).abs() < 1e-12 && (r.sigma - 1.0).abs() < 1e-12);

        let up = DensityOperator::basis_state(2, 0);
        let r = nearest_spectral_value(&up, &sz()).unwrap();
        assert!((r.lambda - 1.0).abs() < 1e-12 && r.gap < 1e-12);
    }

    #[test]
    fn sharp_value_is_an_eigenvalue() {
        // eigenstate of σx has σ = 0 and ⟨σx⟩ = 1
        let plus = crate::linalg::normalize(&crate::CVec::from_vec(vec![c(1., 0.), c(1., 0.)]));
        let rho = DensityOperator::pure(&plus).unwrap();
        let a = HermitianQuantity::new(sigma_x()).unwrap();
        let r = nearest_spectral_value(&rho, &a).unwrap();
        assert!(r.sigma < 1e-8 && r.gap < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn gap_bounded_by_uncertainty(seed in any::<u64>(), n in 2usize..=8, rank in 1usize..=8) {
            let mut rng = seeded(seed);
            let rho = random::density_of_rank(n, rank.min(n), &mut rng);
            let a = random::hermitian(n, &mut rng);
            let r = nearest_spectral_value(&rho, &a).unwrap();
            prop_assert!(r.gap <= r.sigma + 1e-10);
        }

        #[test]
        fn expectation_is_linear(seed in any::<u64>(), s in -3.0f64..3.0) {
            let mut rng = seeded(seed);
            let rho = random::density(3, &mut rng);
            let a = random::hermitian(3, &mut rng);
            let b = random::hermitian(3, &mut rng);
            let combo = HermitianQuantity::new(a.matrix() * c(s, 0.0) + b.matrix()).unwrap();
            let lhs = q_expectation(&rho, &combo).unwrap();
            let rhs = s * q_expectation(&rho, &a).unwrap() + q_expectation(&rho, &b).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_matrix_has_zero_uncertainty() {
        let rho = DensityOperator::maximally_mixed(3);
        let zero = HermitianQuantity::new(CMat::zeros(3, 3)).unwrap();
        assert_eq!(q_uncertainty(&rho, &zero).unwrap(), 0.0);
    }
}
