//! Random test ensembles: Gaussian Hermitian matrices, Ginibre density operators,
//! Haar-like unit vectors and unitaries.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DensityOperator, HermitianQuantity};
use crate::linalg::{self, c, CMat, CVec, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> CMat {
    CMat::from_fn(n, m, |_, _| gaussian(rng))
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianQuantity {
    let g = ginibre(n, n, rng);
    HermitianQuantity::new(linalg::hermitian_part(&g)).expect("Hermitian by construction")
}

/// Density operator of rank `rank` from a Ginibre ensemble.
pub fn density_of_rank<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> DensityOperator {
    let g = ginibre(n, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityOperator::from_trusted(m * c(1.0 / tr, 0.0))
}

pub fn density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityOperator {
    density_of_rank(n, n, rng)
}

pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    linalg::normalize(&CVec::from_fn(n, |_, _| gaussian(rng)))
}

pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let h = hermitian(n, rng);
    linalg::unitary_propagator(h.matrix(), 1.0).expect("finite Hermitian generator")
}
