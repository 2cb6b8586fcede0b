#![allow(dead_code)]

use nogo_core::linalg::{Complex64, ComplexOperator, PureState};
use nogo_core::system::{Configuration, Partition, Party};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_state<R: Rng>(rng: &mut R, dims: &[usize]) -> PureState {
    let n: usize = dims.iter().product();
    let amps: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PureState::normalized(amps, dims.to_vec()).unwrap()
}

pub fn state_from_parts(parts: &[(f64, f64)], dims: &[usize]) -> Option<PureState> {
    let amps: Vec<Complex64> = parts.iter().map(|&(r, i)| Complex64::new(r, i)).collect();
    PureState::normalized(amps, dims.to_vec()).ok()
}

pub fn config(state: PureState, owners: &[Party]) -> Configuration {
    let dims = state.dims().to_vec();
    Configuration::new(state, Partition::new(owners.to_vec(), dims).unwrap()).unwrap()
}

/// Alice first, then Bob.
pub fn bipartite(state: PureState) -> Configuration {
    config(state, &[Party::Alice, Party::Bob])
}

/// Random density operator of rank up to `dim` on one register.
pub fn mixed_state<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> ComplexOperator {
    let psi = gaussian_state(rng, &[dim, rank]);
    psi.reduced_density(&[0]).unwrap()
}

/// Fidelity as `‖√ρ √σ‖₁`, with each root taken from nalgebra's eigen
/// decomposition; independent of the library's factor-based evaluation.
pub fn fidelity_oracle(rho: &ComplexOperator, sigma: &ComplexOperator) -> f64 {
    let root = |m: &ComplexOperator| {
        let e = nalgebra::SymmetricEigen::new(m.matrix().clone());
        // Exact zeros come back as ±1e-17 residue; their roots would add ~1e-8.
        let floor = 1e-14 * e.eigenvalues.amax();
        let d = e
            .eigenvalues
            .map(|l| Complex64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0));
        &e.eigenvectors * nalgebra::DMatrix::from_diagonal(&d) * e.eigenvectors.adjoint()
    };
    (root(rho) * root(sigma)).singular_values().sum()
}

/// `max_U |⟨ψ0|U ⊗ I|ψ1⟩| = ‖M1 M0†‖₁` for amplitude matrices with the first
/// register as rows.
pub fn uhlmann_oracle(psi0: &PureState, psi1: &PureState) -> f64 {
    let m0 = psi0.as_matrix(&[0]).unwrap();
    let m1 = psi1.as_matrix(&[0]).unwrap();
    (m1 * m0.adjoint()).singular_values().sum()
}
