use crate::channels::{
    apply_oracle_branches, apply_oracle_purified, broadcast_branches, broadcast_purified,
    erasure_branches, erasure_purified, Fork,
};
use crate::error::{Error, Result};
use crate::linalg::{digit, total_dim, ComplexOperator, PureState, DEFAULT_MAX_DIM, ZERO};
use crate::system::{reduced_state, transfer_register, Configuration, Partition, Party, Symbol};

use super::{ProtocolScript, Step};

/// Branches lighter than this are dropped; their weight is reported as
/// `pruned_mass`.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub transcript: Vec<Symbol>,
    pub probability: f64,
    pub config: Configuration,
}

/// Collapsed-mode execution result, sorted by transcript.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BranchEnsemble {
    pub branches: Vec<Branch>,
    pub pruned_mass: f64,
}

impl BranchEnsemble {
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    /// `Σ_γ p_γ ρ_γ` over the given parties.
    pub fn averaged_state(&self, parties: &[Party]) -> Result<ComplexOperator> {
        let mut acc: Option<ComplexOperator> = None;
        for b in &self.branches {
            let rho = reduced_state(&b.config, parties)?;
            let scaled = rho.matrix() * crate::linalg::c(b.probability, 0.0);
            acc = Some(match acc {
                None => ComplexOperator::new(scaled, rho.dims().to_vec())?,
                Some(prev) => {
                    ComplexOperator::new(prev.into_matrix() + scaled, rho.dims().to_vec())?
                }
            });
        }
        acc.ok_or_else(|| Error::validation("empty branch ensemble"))
    }
}

/// Runs protocol scripts under a dimension cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Executor {
    pub max_dim: usize,
}

impl Default for Executor {
    fn default() -> Self {
        Executor {
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

impl Executor {
    pub fn new(max_dim: usize) -> Self {
        Executor { max_dim }
    }

    /// Configuration before step 0: Alice's declared registers in the
    /// script's initial state for `bit`, Bob's in `|0⟩`.
    pub fn initial(&self, script: &ProtocolScript, bit: u8) -> Result<Configuration> {
        check_bit(bit)?;
        let dims: Vec<usize> = script.registers.iter().map(|r| r.dim).collect();
        let owners: Vec<Party> = script.registers.iter().map(|r| r.owner).collect();
        let total = total_dim(&dims).unwrap_or(usize::MAX);
        if total > self.max_dim {
            return Err(Error::Capacity {
                requested: total,
                cap: self.max_dim,
            });
        }
        let alice = script.alice_registers();
        let local = &script.initial_states[bit as usize];
        if local.dims().len() != alice.len() {
            return Err(Error::validation(
                "initial state does not cover Alice's registers",
            ));
        }
        let mut amps = vec![ZERO; total];
        'outer: for (g, a) in amps.iter_mut().enumerate() {
            let mut idx = 0usize;
            for r in 0..dims.len() {
                let v = digit(g, &dims, r);
                if owners[r] == Party::Alice {
                    idx = idx * dims[r] + v;
                } else if v != 0 {
                    continue 'outer;
                }
            }
            *a = local.amplitudes()[idx];
        }
        let state = PureState::new(amps, dims.clone())?;
        Configuration::new(state, Partition::new(owners, dims)?)
    }

    /// Purified run of `steps[..until]` with Alice committing to `bit`.
    pub fn purified(
        &self,
        script: &ProtocolScript,
        bit: u8,
        until: usize,
    ) -> Result<Configuration> {
        script.validate()?;
        check_until(script, until)?;
        let start = self.initial(script, bit)?;
        self.continue_purified(script, start, 0, until, bit)
    }

    /// Runs `steps[from..to]` on `config` in purified mode, executing the
    /// opening branch for `declared`.
    pub fn continue_purified(
        &self,
        script: &ProtocolScript,
        mut config: Configuration,
        from: usize,
        to: usize,
        declared: u8,
    ) -> Result<Configuration> {
        check_bit(declared)?;
        check_until(script, to)?;
        for index in from..to {
            config = self
                .purified_step(script, &config, &script.steps[index], declared)
                .map_err(|e| e.at_step(index))?;
        }
        Ok(config)
    }

    fn purified_step(
        &self,
        script: &ProtocolScript,
        config: &Configuration,
        step: &Step,
        declared: u8,
    ) -> Result<Configuration> {
        let max = self.max_dim;
        match step {
            Step::AllocateRegister { owner, dim, basis } => {
                let mut out = config.clone();
                out.append_basis(*owner, *dim, *basis, max)?;
                Ok(out)
            }
            Step::LocalUnitary {
                owner,
                registers,
                operator,
            } => {
                let mut out = config.clone();
                let pos = owned_positions(config, *owner, registers)?;
                out.apply(operator.matrix(), &pos)?;
                Ok(out)
            }
            Step::SendQuantum { register, to } => {
                transfer_register(config, config.position(*register)?, *to)
            }
            Step::ClassicalBroadcast { sender, register } => {
                broadcast_purified(config, *sender, *register, max)
            }
            Step::ErasureSend {
                sender,
                register,
                survival_probability,
            } => erasure_purified(config, *sender, *register, *survival_probability, max),
            Step::OracleCall { oracle, inputs } => {
                apply_oracle_purified(config, script.oracle(oracle)?, inputs, max)
            }
            Step::CommitPhaseEnd => Ok(config.clone()),
            Step::OpenFor { bit, step } => {
                if *bit == declared {
                    self.purified_step(script, config, step, declared)
                } else {
                    Ok(config.clone())
                }
            }
        }
    }

    /// Collapsed run of `steps[..until]` with Alice committing to `bit`.
    pub fn branches(
        &self,
        script: &ProtocolScript,
        bit: u8,
        until: usize,
    ) -> Result<BranchEnsemble> {
        script.validate()?;
        check_until(script, until)?;
        let start = self.initial(script, bit)?;
        let ensemble = BranchEnsemble {
            branches: vec![Branch {
                transcript: Vec::new(),
                probability: 1.0,
                config: start,
            }],
            pruned_mass: 0.0,
        };
        self.continue_branches(script, ensemble, 0, until, bit)
    }

    /// Runs `steps[from..to]` on every branch of `ensemble` in collapsed mode.
    pub fn continue_branches(
        &self,
        script: &ProtocolScript,
        mut ensemble: BranchEnsemble,
        from: usize,
        to: usize,
        declared: u8,
    ) -> Result<BranchEnsemble> {
        check_bit(declared)?;
        check_until(script, to)?;
        for index in from..to {
            let mut next = Vec::new();
            for branch in ensemble.branches {
                let fork = self
                    .branch_step(
                        script,
                        &branch.config,
                        &script.steps[index],
                        index,
                        declared,
                    )
                    .map_err(|e| e.at_step(index))?;
                for (p, config) in fork {
                    let probability = branch.probability * p;
                    if probability < PRUNE_THRESHOLD {
                        ensemble.pruned_mass += probability;
                        continue;
                    }
                    next.push(Branch {
                        transcript: config.transcript.clone(),
                        probability,
                        config,
                    });
                }
            }
            next.sort_by(|a, b| a.transcript.cmp(&b.transcript));
            ensemble.branches = next;
        }
        Ok(ensemble)
    }

    fn branch_step(
        &self,
        script: &ProtocolScript,
        config: &Configuration,
        step: &Step,
        index: usize,
        declared: u8,
    ) -> Result<Fork> {
        let max = self.max_dim;
        match step {
            Step::ClassicalBroadcast { sender, register } => {
                broadcast_branches(config, *sender, *register, index, max)
            }
            Step::ErasureSend {
                sender,
                register,
                survival_probability,
            } => erasure_branches(
                config,
                *sender,
                *register,
                *survival_probability,
                index,
                max,
            ),
            Step::OracleCall { oracle, inputs } => {
                apply_oracle_branches(config, script.oracle(oracle)?, inputs, index, max)
            }
            Step::OpenFor { bit, step } => {
                if *bit == declared {
                    self.branch_step(script, config, step, index, declared)
                } else {
                    Ok(vec![(1.0, config.clone())])
                }
            }
            other => Ok(vec![(
                1.0,
                self.purified_step(script, config, other, declared)?,
            )]),
        }
    }
}

fn check_bit(bit: u8) -> Result<()> {
    if bit > 1 {
        return Err(Error::argument(format!("bit {bit} is not 0 or 1")));
    }
    Ok(())
}

fn check_until(script: &ProtocolScript, until: usize) -> Result<()> {
    if until > script.steps.len() {
        return Err(Error::argument(format!(
            "step bound {until} exceeds script length {}",
            script.steps.len()
        )));
    }
    Ok(())
}

fn owned_positions(config: &Configuration, owner: Party, ids: &[usize]) -> Result<Vec<usize>> {
    ids.iter()
        .map(|&id| {
            let p = config.position(id)?;
            let held = config.partition.owners()[p];
            if held != owner {
                return Err(Error::argument(format!(
                    "register {id} is held by {held}, not {owner}"
                )));
            }
            Ok(p)
        })
        .collect()
}

/// Purified run under the default cap.
pub fn execute_purified(script: &ProtocolScript, bit: u8, until: usize) -> Result<Configuration> {
    Executor::default().purified(script, bit, until)
}

/// Collapsed run under the default cap.
pub fn execute_branches(script: &ProtocolScript, bit: u8, until: usize) -> Result<BranchEnsemble> {
    Executor::default().branches(script, bit, until)
}

/// Largest entrywise gap between Bob's reduced state in purified mode and
/// the probability-weighted average of his branch states, over every prefix
/// of the script.
pub fn mode_consistency_check(script: &ProtocolScript, bit: u8) -> Result<f64> {
    mode_consistency_with(&Executor::default(), script, bit)
}

pub(crate) fn mode_consistency_with(
    exec: &Executor,
    script: &ProtocolScript,
    bit: u8,
) -> Result<f64> {
    script.validate()?;
    let mut pure = exec.initial(script, bit)?;
    let mut ensemble = BranchEnsemble {
        branches: vec![Branch {
            transcript: Vec::new(),
            probability: 1.0,
            config: pure.clone(),
        }],
        pruned_mass: 0.0,
    };
    let mut worst = bob_gap(&pure, &ensemble)?;
    for index in 0..script.steps.len() {
        pure = exec.continue_purified(script, pure, index, index + 1, bit)?;
        ensemble = exec.continue_branches(script, ensemble, index, index + 1, bit)?;
        worst = worst.max(bob_gap(&pure, &ensemble)?);
    }
    Ok(worst)
}

fn bob_gap(pure: &Configuration, ensemble: &BranchEnsemble) -> Result<f64> {
    let rho = reduced_state(pure, &[Party::Bob])?;
    let avg = ensemble.averaged_state(&[Party::Bob])?;
    if rho.dims() != avg.dims() {
        return Err(Error::validation(format!(
            "Bob's registers differ between modes: {:?} vs {:?}",
            rho.dims(),
            avg.dims()
        )));
    }
    Ok(rho.max_abs_diff(&avg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{OracleKind, OracleSpec};
    use crate::linalg::{c, gates, ONE};
    use crate::protocol::RegisterDecl;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn plus_or_zero() -> [PureState; 2] {
        [
            PureState::basis(vec![2], 0).unwrap(),
            PureState::normalized(vec![ONE, ONE], vec![2]).unwrap(),
        ]
    }

    fn broadcast_script() -> ProtocolScript {
        ProtocolScript {
            id: "bc".into(),
            registers: vec![
                RegisterDecl::new("a", Party::Alice, 2),
                RegisterDecl::new("r", Party::Bob, 2),
            ],
            initial_states: plus_or_zero(),
            oracles: vec![],
            steps: vec![
                Step::ClassicalBroadcast {
                    sender: Party::Alice,
                    register: 0,
                },
                Step::CommitPhaseEnd,
                Step::SendQuantum {
                    register: 0,
                    to: Party::Bob,
                },
            ],
        }
    }

    #[test]
    fn initial_interleaves_bob_zero_registers() {
        let s = ProtocolScript {
            registers: vec![
                RegisterDecl::new("r", Party::Bob, 2),
                RegisterDecl::new("a", Party::Alice, 2),
            ],
            ..broadcast_script()
        };
        let cfg = Executor::default().initial(&s, 1).unwrap();
        // |0⟩_r ⊗ |+⟩_a
        let a = cfg.state.amplitudes();
        assert!((a[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!((a[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert!(a[2].norm() < 1e-12 && a[3].norm() < 1e-12);
    }

    #[test]
    fn broadcast_branches_split_by_outcome() {
        let s = broadcast_script();
        let e = execute_branches(&s, 1, 3).unwrap();
        assert_eq!(e.branches.len(), 2);
        assert_eq!(e.branches[0].transcript, vec![Symbol { step: 0, value: 0 }]);
        assert!((e.branches[0].probability - 0.5).abs() < 1e-12);
        assert_eq!(e.pruned_mass, 0.0);
        let e0 = execute_branches(&s, 0, 3).unwrap();
        assert_eq!(e0.branches.len(), 1);
    }

    #[test]
    fn purified_broadcast_registers() {
        let s = broadcast_script();
        let cfg = execute_purified(&s, 1, 1).unwrap();
        assert_eq!(
            cfg.partition.owners(),
            &[Party::Alice, Party::Bob, Party::Environment, Party::Bob]
        );
        assert_eq!(cfg.allocated, 4);
    }

    #[test]
    fn modes_agree_for_broadcast_and_erasure() {
        let mut s = broadcast_script();
        assert!(mode_consistency_check(&s, 1).unwrap() < 1e-12);
        s.steps[0] = Step::ErasureSend {
            sender: Party::Alice,
            register: 0,
            survival_probability: 0.3,
        };
        assert!(mode_consistency_check(&s, 1).unwrap() < 1e-12);
        assert!(mode_consistency_check(&s, 0).unwrap() < 1e-12);
    }

    #[test]
    fn modes_agree_for_oracles() {
        let s = ProtocolScript {
            id: "o".into(),
            registers: vec![RegisterDecl::new("a", Party::Alice, 2)],
            initial_states: plus_or_zero(),
            oracles: vec![
                OracleSpec::new("coin", OracleKind::ClassicalCoin),
                OracleSpec::new("pub", OracleKind::Trivial { measured: vec![0] }),
                OracleSpec::new(
                    "dump",
                    OracleKind::ShortTerm {
                        circuit: ComplexOperator::from_matrix(gates::cnot()).unwrap(),
                        ancilla_dims: vec![2],
                    },
                ),
            ],
            steps: vec![
                Step::OracleCall {
                    oracle: "dump".into(),
                    inputs: vec![0],
                },
                Step::OracleCall {
                    oracle: "coin".into(),
                    inputs: vec![],
                },
                Step::OracleCall {
                    oracle: "pub".into(),
                    inputs: vec![0],
                },
                Step::CommitPhaseEnd,
                Step::SendQuantum {
                    register: 0,
                    to: Party::Bob,
                },
            ],
        };
        for b in 0..2 {
            assert!(mode_consistency_check(&s, b).unwrap() < 1e-12);
        }
        let e = execute_branches(&s, 1, 5).unwrap();
        // dump (2) × coin (2) × publish (1, already collapsed)
        assert_eq!(e.branches.len(), 4);
        assert!((e.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_for_runs_only_on_declared_bit() {
        let mut s = broadcast_script();
        s.steps[2] = Step::OpenFor {
            bit: 1,
            step: Box::new(Step::SendQuantum {
                register: 0,
                to: Party::Bob,
            }),
        };
        let exec = Executor::default();
        let c1 = exec.purified(&s, 1, 3).unwrap();
        assert_eq!(c1.partition.owners()[0], Party::Bob);
        let c0 = exec.purified(&s, 0, 3).unwrap();
        assert_eq!(c0.partition.owners()[0], Party::Alice);
    }

    #[test]
    fn capacity_errors_surface_with_step_index() {
        let s = broadcast_script();
        let err = Executor::new(8).purified(&s, 0, 1).unwrap_err();
        assert!(err.is_capacity());
        assert!(matches!(err, Error::Step { index: 0, .. }));
    }

    #[test]
    fn until_bound_checked() {
        let s = broadcast_script();
        assert!(matches!(
            execute_purified(&s, 0, 4),
            Err(Error::Argument(_))
        ));
        assert!(execute_purified(&s, 2, 1).is_err());
    }
}
