//! Hermitian spectral functions: square roots, fidelity and purification.

use std::cmp::Ordering;

use nalgebra::{SymmetricEigen, SVD};

use super::{c, CMatrix, ComplexOperator, PureState, STATE_TOL, ZERO};
use crate::error::{Error, Result};

/// Eigenvalues at or below this (relative to the largest) are treated as
/// exact zeros when forming square roots inside `fidelity`. Double-precision
/// eigensolvers leave ~1e-16 residue on rank-deficient inputs whose square
/// roots would otherwise contribute ~1e-8 to the result.
const SQRT_NOISE_FLOOR: f64 = 1e-13;

/// Eigen-decomposition of the Hermitian part of `m`; eigenvalues ascending is
/// not guaranteed.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn check_hermitian(op: &ComplexOperator) -> Result<()> {
    let defect = op.hermiticity_defect();
    if defect > STATE_TOL {
        return Err(Error::validation(format!(
            "operator is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(())
}

fn clamp_spectrum(values: &mut [f64]) -> Result<()> {
    for v in values.iter_mut() {
        if *v < -STATE_TOL {
            return Err(Error::validation(format!(
                "operator is not positive semidefinite (eigenvalue {v:.3e})"
            )));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

/// Validates a density operator and returns its clamped spectrum.
pub(super) fn density_spectrum(rho: &ComplexOperator) -> Result<(Vec<f64>, CMatrix)> {
    check_hermitian(rho)?;
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
        return Err(Error::validation(format!("trace {tr} is not 1")));
    }
    let (mut values, vectors) = hermitian_eigen(rho.matrix());
    clamp_spectrum(&mut values)?;
    Ok((values, vectors))
}

/// Principal square root of a Hermitian positive semidefinite operator.
pub fn hermitian_sqrt(rho: &ComplexOperator) -> Result<ComplexOperator> {
    check_hermitian(rho)?;
    let (mut values, vectors) = hermitian_eigen(rho.matrix());
    clamp_spectrum(&mut values)?;
    let n = rho.dim();
    let scaled = CMatrix::from_fn(n, n, |i, k| vectors[(i, k)] * values[k].sqrt());
    ComplexOperator::new(scaled * vectors.adjoint(), rho.dims().to_vec())
}

/// Factor `A` with `AA† = ρ`, keeping only columns above the noise floor.
fn sqrt_factor(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let top = values.iter().copied().fold(0.0, f64::max);
    let floor = SQRT_NOISE_FLOOR * top.max(1.0);
    let kept: Vec<usize> = (0..values.len()).filter(|&k| values[k] > floor).collect();
    CMatrix::from_fn(vectors.nrows(), kept.len(), |i, j| {
        vectors[(i, kept[j])] * values[kept[j]].sqrt()
    })
}

/// Uhlmann fidelity `tr √(√ρ σ √ρ)` (unsquared), clamped to `[0, 1]`.
///
/// Evaluated as the trace norm of `√ρ √σ`, which has the same singular
/// values as `A†B` for any factors `ρ = AA†`, `σ = BB†`.
pub fn fidelity(rho: &ComplexOperator, sigma: &ComplexOperator) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(Error::argument(format!(
            "fidelity of operators on {:?} and {:?}",
            rho.dims(),
            sigma.dims()
        )));
    }
    let (va, ua) = density_spectrum(rho)?;
    let (vb, ub) = density_spectrum(sigma)?;
    let a = sqrt_factor(&va, &ua);
    let b = sqrt_factor(&vb, &ub);
    if a.ncols() == 0 || b.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(trace_norm(&(a.adjoint() * b)).clamp(0.0, 1.0))
}

/// Sum of singular values.
pub(crate) fn trace_norm(m: &CMatrix) -> f64 {
    SVD::new(m.clone(), false, false).singular_values.sum()
}

fn lex_cmp(a: &[(f64, f64)], b: &[(f64, f64)]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Canonical purification on `dims ++ [d]`: `Σ_k √λ_k |v_k⟩|k⟩` with
/// eigenvalues descending and ties broken by the lexicographic order of the
/// phase-fixed eigenvectors.
pub fn purify(rho: &ComplexOperator) -> Result<PureState> {
    let (values, vectors) = density_spectrum(rho)?;
    let n = rho.dim();

    // Fix each eigenvector's phase so its first non-negligible entry is real positive.
    let columns: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|k| {
            let col = vectors.column(k);
            let pivot = col
                .iter()
                .find(|z| z.norm() > 1e-12)
                .copied()
                .unwrap_or(c(1.0, 0.0));
            let phase = pivot.conj() / pivot.norm();
            col.iter()
                .map(|z| {
                    let w = z * phase;
                    (w.re, w.im)
                })
                .collect()
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[j]
            .partial_cmp(&values[i])
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                if (values[i] - values[j]).abs() <= STATE_TOL {
                    lex_cmp(&columns[i], &columns[j])
                } else {
                    Ordering::Equal
                }
            })
    });

    let mut amplitudes = vec![ZERO; n * n];
    for (rank, &k) in order.iter().enumerate() {
        let weight = values[k].sqrt();
        for (i, &(re, im)) in columns[k].iter().enumerate() {
            amplitudes[i * n + rank] = c(re, im) * weight;
        }
    }
    let mut dims = rho.dims().to_vec();
    dims.push(n);
    PureState::normalized(amplitudes, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, partial_trace, ONE};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn diag(values: &[f64]) -> ComplexOperator {
        let n = values.len();
        ComplexOperator::new(
            CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { ZERO }),
            vec![n],
        )
        .unwrap()
    }

    fn proj(amps: &[(f64, f64)]) -> ComplexOperator {
        let n = amps.len();
        PureState::normalized(amps.iter().map(|&(r, i)| c(r, i)).collect(), vec![n])
            .unwrap()
            .density()
    }

    #[test]
    fn sqrt_examples() {
        let id = ComplexOperator::identity(vec![3]).unwrap();
        assert!(hermitian_sqrt(&id).unwrap().max_abs_diff(&id) < 1e-12);
        let root = hermitian_sqrt(&diag(&[4.0, 9.0])).unwrap();
        assert!(root.max_abs_diff(&diag(&[2.0, 3.0])) < 1e-12);
    }

    #[test]
    fn sqrt_clamps_tiny_negatives_and_rejects_large_ones() {
        let root = hermitian_sqrt(&diag(&[1.0, -5e-10])).unwrap();
        assert!(root.max_abs_diff(&diag(&[1.0, 0.0])) < 1e-12);
        assert!(matches!(
            hermitian_sqrt(&diag(&[1.0, -1e-6])),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn fidelity_examples() {
        let zero = proj(&[(1.0, 0.0), (0.0, 0.0)]);
        let one = proj(&[(0.0, 0.0), (1.0, 0.0)]);
        let plus = proj(&[(1.0, 0.0), (1.0, 0.0)]);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!((fidelity(&zero, &plus).unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
        let mixed = diag(&[0.5, 0.5]);
        assert!((fidelity(&mixed, &mixed).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_rejects_invalid_inputs() {
        let bad = diag(&[1.5, -0.5]);
        let ok = diag(&[0.5, 0.5]);
        assert!(matches!(fidelity(&bad, &ok), Err(Error::Validation(_))));
        let unnormalised = diag(&[0.5, 0.6]);
        assert!(fidelity(&ok, &unnormalised).is_err());
        assert!(fidelity(&ok, &diag(&[1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn purify_pure_input() {
        let zero = proj(&[(1.0, 0.0), (0.0, 0.0)]);
        let psi = purify(&zero).unwrap();
        assert_eq!(psi.dims(), &[2, 2]);
        assert!((psi.amplitudes()[0] - ONE).norm() < 1e-12);
        let back = partial_trace(&psi.density(), &[1]).unwrap();
        assert!(back.max_abs_diff(&zero) < 1e-12);
    }

    #[test]
    fn purify_maximally_mixed() {
        let half = diag(&[0.5, 0.5]);
        let psi = purify(&half).unwrap();
        let back = partial_trace(&psi.density(), &[1]).unwrap();
        assert!(back.max_abs_diff(&half) < 1e-12);
        // Bell-type: ancilla reduced state is also maximally mixed
        let anc = partial_trace(&psi.density(), &[0]).unwrap();
        assert!(anc.max_abs_diff(&half) < 1e-12);
    }

    #[test]
    fn purify_diagonal_matches_hand_computation() {
        // Oracle: √0.9|0,a0⟩ + √0.1|1,a1⟩ written out by hand.
        let rho = diag(&[0.9, 0.1]);
        let psi = purify(&rho).unwrap();
        let expected = [0.9f64.sqrt(), 0.0, 0.0, 0.1f64.sqrt()];
        for (k, want) in expected.iter().enumerate() {
            assert!(
                (psi.amplitudes()[k] - c(*want, 0.0)).norm() < 1e-12,
                "amp {k}"
            );
        }
        // Independent trace-back by explicit summation over the ancilla index.
        let a = psi.amplitudes();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += a[i * 2 + k] * a[j * 2 + k].conj();
                }
                assert!((acc - rho.matrix()[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn purify_sorts_descending() {
        let psi = purify(&diag(&[0.2, 0.8])).unwrap();
        // largest eigenvalue (on |1⟩) goes to ancilla index 0
        assert!((psi.amplitudes()[2].norm() - 0.8f64.sqrt()).abs() < 1e-12);
        assert!((psi.amplitudes()[1].norm() - 0.2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_of_diagonal() {
        let m = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                c(-3.0 + 5.0 * i as f64, 0.0)
            } else {
                ZERO
            }
        });
        assert!((trace_norm(&m) - 5.0).abs() < 1e-12);
        assert!(max_abs_diff(&m, &m) == 0.0);
    }
}
