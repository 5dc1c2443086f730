use super::hybrid::{HybridModel, PhaseSpaceOperator};
use crate::linalg::{self, c, CMat};
use crate::qcore::HermitianQuantity;
use crate::Result;

/// `α_i = [[0, σ_i], [σ_i, 0]]` in the standard (Dirac) representation.
pub fn dirac_alpha() -> [CMat; 3] {
    let paulis = [linalg::sigma_x(), linalg::sigma_y(), linalg::sigma_z()];
    paulis.map(|s| {
        let mut a = CMat::zeros(4, 4);
        a.view_mut((0, 2), (2, 2)).copy_from(&s);
        a.view_mut((2, 0), (2, 2)).copy_from(&s);
        a
    })
}

/// `β = diag(1, 1, −1, −1)`
pub fn dirac_beta() -> CMat {
    linalg::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0])
}

/// `H(p,q) = α·p + βm + eV(q)` for a spinning relativistic particle with classical
/// position and momentum.
pub fn dirac_spin_hamiltonian<V>(p: [f64; 3], q: [f64; 3], mass: f64, charge: f64, potential: V) -> Result<HermitianQuantity>
where
    V: Fn([f64; 3]) -> f64,
{
    HermitianQuantity::new(dirac_matrix(p, mass, charge * potential(q)))
}

fn dirac_matrix(p: [f64; 3], mass: f64, energy_shift: f64) -> CMat {
    let alpha = dirac_alpha();
    let mut h = dirac_beta() * c(mass, 0.0) + linalg::identity(4) * c(energy_shift, 0.0);
    for (a, pi) in alpha.iter().zip(p) {
        h += a * c(pi, 0.0);
    }
    h
}

/// Hybrid model for the Dirac particle: spin sector quantum, `(q, p)` classical.
pub struct DiracParticle<V, G> {
    pub mass: f64,
    pub charge: f64,
    pub potential: V,
    /// `∇V(q)`
    pub potential_gradient: G,
}

impl<V, G> PhaseSpaceOperator for DiracParticle<V, G>
where
    V: Fn([f64; 3]) -> f64,
    G: Fn([f64; 3]) -> [f64; 3],
{
    fn dim(&self) -> usize {
        4
    }

    fn dof(&self) -> usize {
        3
    }

    fn operator(&self, p: &[f64], q: &[f64]) -> CMat {
        let q3 = [q[0], q[1], q[2]];
        dirac_matrix([p[0], p[1], p[2]], self.mass, self.charge * (self.potential)(q3))
    }

    fn grad_p(&self, _p: &[f64], _q: &[f64]) -> Vec<CMat> {
        dirac_alpha().to_vec()
    }

    fn grad_q(&self, _p: &[f64], q: &[f64]) -> Vec<CMat> {
        let g = (self.potential_gradient)([q[0], q[1], q[2]]);
        g.iter().map(|gi| linalg::identity(4) * c(self.charge * gi, 0.0)).collect()
    }
}

impl<V, G> HybridModel for DiracParticle<V, G>
where
    V: Fn([f64; 3]) -> f64,
    G: Fn([f64; 3]) -> [f64; 3],
{
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{check_gradients, integrate, HybridState};
    use crate::qcore::DensityOperator;
    use proptest::prelude::*;

    fn sorted_eigs(h: &HermitianQuantity) -> Vec<f64> {
        h.eigen().unwrap().values
    }

    #[test]
    fn rest_frame_spectrum() {
        let h = dirac_spin_hamiltonian([0.0; 3], [0.0; 3], 1.5, 1.0, |_| 0.0).unwrap();
        let e = sorted_eigs(&h);
        for (x, y) in e.iter().zip([-1.5, -1.5, 1.5, 1.5]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn relativistic_dispersion() {
        // |p| = 3, m = 4 → ±5
        let h = dirac_spin_hamiltonian([1.0, 2.0, 2.0], [0.0; 3], 4.0, 1.0, |_| 0.0).unwrap();
        let e = sorted_eigs(&h);
        for (x, y) in e.iter().zip([-5.0, -5.0, 5.0, 5.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_beta_anticommute() {
        let a = dirac_alpha();
        let b = dirac_beta();
        for i in 0..3 {
            assert!(linalg::max_abs(&linalg::anticommutator(&a[i], &b)) < 1e-15);
            for j in 0..3 {
                let expected = if i == j { linalg::identity(4) * c(2.0, 0.0) } else { CMat::zeros(4, 4) };
                assert!(linalg::max_abs(&(linalg::anticommutator(&a[i], &a[j]) - expected)) < 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn spectrum_and_hermiticity(p in prop::array::uniform3(-5.0f64..5.0), q in prop::array::uniform3(-2.0f64..2.0),
                                    m in 0.0f64..3.0, e in -2.0f64..2.0) {
            let v = |x: [f64; 3]| 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
            let h = dirac_spin_hamiltonian(p, q, m, e, v).unwrap();
            prop_assert!(linalg::hermitian_residual(h.matrix()) < 1e-12);
            let energy = (p.iter().map(|x| x * x).sum::<f64>() + m * m).sqrt();
            let shift = e * v(q);
            let expected = [shift - energy, shift - energy, shift + energy, shift + energy];
            for (x, y) in sorted_eigs(&h).iter().zip(expected) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn particle_in_harmonic_trap_conserves_energy() {
        let model = DiracParticle {
            mass: 1.0,
            charge: 1.0,
            potential: |x: [f64; 3]| 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]),
            potential_gradient: |x: [f64; 3]| x,
        };
        assert!(check_gradients(&model, &[0.2, -0.1, 0.3], &[0.5, 0.0, -0.4], 1e-5) < 1e-6);
        let rho = DensityOperator::basis_state(4, 0);
        let s0 = HybridState::new(vec![0.5, 0.0, 0.0], vec![0.0, 0.3, 0.0], rho).unwrap();
        let e0 = s0.energy(&model);
        let path = integrate(&s0, &model, 0.005, 2000, 100).unwrap();
        for s in &path {
            assert!((s.energy(&model) - e0).abs() < 1e-3);
            assert!((linalg::trace(s.rho.matrix()).re - 1.0).abs() < 1e-12);
        }
    }
}
