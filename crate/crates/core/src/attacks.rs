//! Alice's binding attack: the local unitary that steers her commitment to
//! one bit towards the purification of the other.

use crate::error::{Error, Result};
use crate::linalg::{fidelity, hermitian_eigen, CMatrix, ComplexOperator, ONE, ZERO};
use crate::protocol::{Executor, ProtocolScript};
use crate::system::{reduced_state, Configuration, Party, Symbol};

/// Optimal unitary on the controllable party's registers.
#[derive(Debug, Clone, PartialEq)]
pub struct CheatUnitary {
    pub operator: ComplexOperator,
    /// Protocol-level ids of the registers `operator` acts on, in order.
    pub registers: Vec<usize>,
    /// `|⟨Ψ(0)|U ⊗ I|Ψ(1)⟩|`
    pub achieved_overlap: f64,
    /// Commitment the attack starts from, and the bit it then declares.
    pub target_bit_pair: (u8, u8),
}

impl CheatUnitary {
    /// Applies the unitary to the controllable registers of `config`.
    pub fn apply(&self, config: &Configuration) -> Result<Configuration> {
        let mut out = config.clone();
        if self.registers.is_empty() {
            return Ok(out);
        }
        let pos = self
            .registers
            .iter()
            .map(|&id| config.position(id))
            .collect::<Result<Vec<_>>>()?;
        out.apply(self.operator.matrix(), &pos)?;
        Ok(out)
    }
}

fn same_layout(a: &Configuration, b: &Configuration) -> Result<()> {
    if a.partition != b.partition || a.register_ids != b.register_ids {
        return Err(Error::argument(
            "configurations differ in register layout or ownership",
        ));
    }
    Ok(())
}

fn overlap_with(u: &CMatrix, m0: &CMatrix, m1: &CMatrix) -> f64 {
    (m0.adjoint() * u * m1).trace().norm()
}

/// Unitary `U` with `|tr(U X)|` equal to the trace norm of square `X`.
///
/// With `V` the eigenvectors of `X†X` (largest first), `Z = XV` has
/// orthogonal columns, so its QR factor `R` is diagonal with `|R_kk| = σ_k`
/// and `U = V D Q†` with `D` cancelling the phases of `R`. This avoids the
/// singular vectors of a complex SVD, which are unreliable on rank-deficient
/// input.
fn uhlmann_unitary(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let (values, vectors) = hermitian_eigen(&(x.adjoint() * x));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let v = CMatrix::from_fn(n, n, |r, k| vectors[(r, order[k])]);
    let qr = (x * &v).qr();
    let (q, r) = (qr.q(), qr.r());
    let d = CMatrix::from_fn(n, n, |i, j| {
        let z = r[(i, i)];
        match (i == j, z.norm() > 0.0) {
            (true, true) => z.conj() / z.norm(),
            (true, false) => ONE,
            _ => ZERO,
        }
    });
    v * d * q.adjoint()
}

/// Unitary on `controllable`'s registers maximising
/// `|⟨psi0|(U ⊗ I)|psi1⟩|`. The maximum equals the fidelity of the two
/// states reduced to every other register.
pub fn synthesize_cheat(
    psi0: &Configuration,
    psi1: &Configuration,
    controllable: Party,
) -> Result<CheatUnitary> {
    if !controllable.is_controllable() {
        return Err(Error::argument(format!(
            "{controllable} cannot apply a cheating unitary"
        )));
    }
    same_layout(psi0, psi1)?;
    let rows = psi0.partition.registers_of(&[controllable]);
    let registers: Vec<usize> = rows.iter().map(|&p| psi0.register_ids[p]).collect();
    let dims: Vec<usize> = rows.iter().map(|&p| psi0.partition.dims()[p]).collect();
    let m0 = psi0.state.as_matrix(&rows)?;
    let m1 = psi1.state.as_matrix(&rows)?;

    let u = uhlmann_unitary(&(&m1 * m0.adjoint()));
    let overlap = overlap_with(&u, &m0, &m1);

    let operator = if rows.is_empty() {
        ComplexOperator::new(CMatrix::from_element(1, 1, ONE), vec![])?
    } else {
        ComplexOperator::new(u, dims)?
    };
    Ok(CheatUnitary {
        operator,
        registers,
        achieved_overlap: overlap.clamp(0.0, 1.0),
        target_bit_pair: (1, 0),
    })
}

/// Outcome of running the binding attack on a script.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub cheat: CheatUnitary,
    /// Fidelity of Bob's final state under the attack with his honest `b = 0`
    /// final state.
    pub attack_success: f64,
}

/// Unitary at the end of the commit phase for the given executor.
pub fn commit_cheat(exec: &Executor, script: &ProtocolScript) -> Result<CheatUnitary> {
    let commit = script.commit_phase_end()?;
    let psi0 = exec.purified(script, 0, commit + 1)?;
    let psi1 = exec.purified(script, 1, commit + 1)?;
    synthesize_cheat(&psi0, &psi1, Party::Alice)
}

/// Commits to 1, applies `cheat`, then opens as if committed to 0.
pub fn evaluate_attack(
    exec: &Executor,
    script: &ProtocolScript,
    cheat: &CheatUnitary,
) -> Result<f64> {
    let commit = script.commit_phase_end()?;
    let end = script.steps.len();
    let committed = exec.purified(script, 1, commit + 1)?;
    let steered = cheat.apply(&committed)?;
    let cheated = exec.continue_purified(script, steered, commit + 1, end, 0)?;
    let honest = exec.purified(script, 0, end)?;
    fidelity(
        &reduced_state(&honest, &[Party::Bob])?,
        &reduced_state(&cheated, &[Party::Bob])?,
    )
}

/// Synthesises the commit-end unitary and evaluates it.
pub fn run_attack(exec: &Executor, script: &ProtocolScript) -> Result<AttackOutcome> {
    let cheat = commit_cheat(exec, script)?;
    let attack_success = evaluate_attack(exec, script, &cheat)?;
    Ok(AttackOutcome {
        cheat,
        attack_success,
    })
}

/// Per-transcript terms of the branch-averaged cheat.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchCheat {
    pub transcript: Vec<Symbol>,
    pub p0: f64,
    pub p1: f64,
    /// Best overlap `|⟨ψ0,γ|U_γ|ψ1,γ⟩|` for this transcript.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchCheatMetrics {
    /// `Σ_γ √(p0 p1) · overlap_γ` over transcripts common to both bits.
    pub cheat_prime: f64,
    /// Overlap reached by the single purified-mode unitary.
    pub global_overlap: f64,
    pub per_branch: Vec<BranchCheat>,
    /// Probability carried by transcripts seen under only one bit.
    pub unmatched_mass: [f64; 2],
    pub pruned_mass: f64,
}

/// Branch-averaged cheat at the end of the commit phase.
pub fn branch_cheat_metrics(
    exec: &Executor,
    script: &ProtocolScript,
) -> Result<BranchCheatMetrics> {
    let commit = script.commit_phase_end()?;
    let e0 = exec.branches(script, 0, commit + 1)?;
    let e1 = exec.branches(script, 1, commit + 1)?;
    let global_overlap = commit_cheat(exec, script)?.achieved_overlap;

    let mut per_branch = Vec::new();
    let mut unmatched_mass = [0.0; 2];
    let (mut i, mut j) = (0, 0);
    while i < e0.branches.len() || j < e1.branches.len() {
        let order = match (e0.branches.get(i), e1.branches.get(j)) {
            (Some(a), Some(b)) => a.transcript.cmp(&b.transcript),
            (Some(_), None) => std::cmp::Ordering::Less,
            _ => std::cmp::Ordering::Greater,
        };
        match order {
            std::cmp::Ordering::Less => {
                unmatched_mass[0] += e0.branches[i].probability;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                unmatched_mass[1] += e1.branches[j].probability;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let (a, b) = (&e0.branches[i], &e1.branches[j]);
                let cheat = synthesize_cheat(&a.config, &b.config, Party::Alice)?;
                per_branch.push(BranchCheat {
                    transcript: a.transcript.clone(),
                    p0: a.probability,
                    p1: b.probability,
                    overlap: cheat.achieved_overlap,
                });
                i += 1;
                j += 1;
            }
        }
    }
    let cheat_prime = per_branch
        .iter()
        .map(|r| (r.p0 * r.p1).sqrt() * r.overlap)
        .sum();
    Ok(BranchCheatMetrics {
        cheat_prime,
        global_overlap,
        per_branch,
        unmatched_mass,
        pruned_mass: e0.pruned_mass + e1.pruned_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, PureState};
    use crate::system::Partition;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn config(amps: Vec<(f64, f64)>, owners: Vec<Party>) -> Configuration {
        let dims = vec![2; owners.len()];
        let state = PureState::normalized(
            amps.into_iter().map(|(r, i)| c(r, i)).collect(),
            dims.clone(),
        )
        .unwrap();
        Configuration::new(state, Partition::new(owners, dims).unwrap()).unwrap()
    }

    #[test]
    fn identical_states_overlap_one() {
        let s = config(
            vec![(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)],
            vec![Party::Alice, Party::Bob],
        );
        let u = synthesize_cheat(&s, &s, Party::Alice).unwrap();
        assert!((u.achieved_overlap - 1.0).abs() < 1e-12);
        assert!(u.operator.is_unitary());
        assert_eq!(u.registers, vec![0]);
    }

    #[test]
    fn bell_states_are_steerable() {
        // Φ+ and Φ− differ by Z on Alice's qubit.
        let plus = config(
            vec![(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)],
            vec![Party::Alice, Party::Bob],
        );
        let minus = config(
            vec![(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)],
            vec![Party::Alice, Party::Bob],
        );
        let u = synthesize_cheat(&plus, &minus, Party::Alice).unwrap();
        assert!((u.achieved_overlap - 1.0).abs() < 1e-12);
        let steered = u.apply(&minus).unwrap();
        let ov = plus.state.inner(&steered.state).unwrap().norm();
        assert!((ov - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_bob_states_block_the_attack() {
        let zero = config(
            vec![(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
            vec![Party::Alice, Party::Bob],
        );
        let one = config(
            vec![(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
            vec![Party::Alice, Party::Bob],
        );
        let u = synthesize_cheat(&zero, &one, Party::Alice).unwrap();
        assert!(u.achieved_overlap < 1e-12);
    }

    #[test]
    fn no_alice_registers_gives_plain_overlap() {
        let zero = config(vec![(1.0, 0.0), (0.0, 0.0)], vec![Party::Bob]);
        let plus = config(vec![(1.0, 0.0), (1.0, 0.0)], vec![Party::Bob]);
        let u = synthesize_cheat(&zero, &plus, Party::Alice).unwrap();
        assert_eq!(u.operator.dim(), 1);
        assert!((u.achieved_overlap - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_cross_matrix_still_saturates() {
        // Alice qutrit, Bob qubit: `M1 M0†` is 3×3 of rank 2. A complex SVD
        // returned inconsistent singular vectors for this pair.
        let psi0 = [
            (-0.003192530977064869, -0.4003471040484368),
            (-0.33547283134630407, -0.22137343299071074),
            (-0.30403605646079157, -0.10283494069210758),
            (-0.2865587976285115, 0.10510755619401685),
            (-0.4928334597982774, 0.06559554627224098),
            (0.352299920743846, -0.3326927503779164),
        ];
        let psi1 = [
            (-0.24367154542487357, -0.011723006539532602),
            (0.5343639102129363, -0.17147736019294196),
            (-2.1693827534306123e-5, 0.022030008140099214),
            (-0.010637135695891711, 0.36014684138440056),
            (-0.25300311977121537, -0.5924932029262764),
            (-0.1645638660014531, -0.2304196554240344),
        ];
        let make = |amps: &[(f64, f64)]| {
            let state =
                PureState::normalized(amps.iter().map(|&(r, i)| c(r, i)).collect(), vec![3, 2])
                    .unwrap();
            Configuration::new(
                state,
                Partition::new(vec![Party::Alice, Party::Bob], vec![3, 2]).unwrap(),
            )
            .unwrap()
        };
        let (a, b) = (make(&psi0), make(&psi1));
        let u = synthesize_cheat(&a, &b, Party::Alice).unwrap();
        let f = fidelity(
            &reduced_state(&a, &[Party::Bob]).unwrap(),
            &reduced_state(&b, &[Party::Bob]).unwrap(),
        )
        .unwrap();
        assert!(
            (u.achieved_overlap - f).abs() < 1e-12,
            "{} vs {f}",
            u.achieved_overlap
        );
        assert!(u.operator.unitarity_defect() < 1e-12);
    }

    #[test]
    fn layout_mismatch_rejected() {
        let a = config(
            vec![(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
            vec![Party::Alice, Party::Bob],
        );
        let b = config(
            vec![(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
            vec![Party::Bob, Party::Alice],
        );
        assert!(matches!(
            synthesize_cheat(&a, &b, Party::Alice),
            Err(Error::Argument(_))
        ));
        assert!(synthesize_cheat(&a, &a, Party::Environment).is_err());
    }
}
