//! Protocol scripts and their two execution modes.
//!
//! Register references in steps are protocol-level ids: the declared
//! registers come first, then every register a step allocates, in order.
//! A broadcast allocates `[E*, receiver]`, an erasure send
//! `[E* copy, E* flag, receiver]`, and oracles allocate their ancillas or
//! records. Ids are the same in both execution modes even though the
//! collapsed mode never materialises environment registers.

mod exec;

pub(crate) use exec::mode_consistency_with;
pub use exec::{
    execute_branches, execute_purified, mode_consistency_check, Branch, BranchEnsemble, Executor,
    PRUNE_THRESHOLD,
};

use crate::channels::{OracleKind, OracleSpec};
use crate::error::{Error, Result};
use crate::linalg::{ComplexOperator, PureState};
use crate::system::Party;

/// A register present before the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterDecl {
    pub name: String,
    pub owner: Party,
    pub dim: usize,
}

impl RegisterDecl {
    pub fn new(name: impl Into<String>, owner: Party, dim: usize) -> Self {
        RegisterDecl {
            name: name.into(),
            owner,
            dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// New register in basis state `|basis⟩`.
    AllocateRegister {
        owner: Party,
        dim: usize,
        basis: usize,
    },
    LocalUnitary {
        owner: Party,
        registers: Vec<usize>,
        operator: ComplexOperator,
    },
    SendQuantum {
        register: usize,
        to: Party,
    },
    /// Computational-basis measurement published over the macroscopic channel.
    ClassicalBroadcast {
        sender: Party,
        register: usize,
    },
    ErasureSend {
        sender: Party,
        register: usize,
        survival_probability: f64,
    },
    OracleCall {
        oracle: String,
        inputs: Vec<usize>,
    },
    CommitPhaseEnd,
    /// Opening-phase step run only when the declared bit equals `bit`.
    OpenFor {
        bit: u8,
        step: Box<Step>,
    },
}

impl Step {
    pub fn tag(&self) -> &'static str {
        match self {
            Step::AllocateRegister { .. } => "allocate",
            Step::LocalUnitary { .. } => "local_unitary",
            Step::SendQuantum { .. } => "send_quantum",
            Step::ClassicalBroadcast { .. } => "broadcast",
            Step::ErasureSend { .. } => "erasure_send",
            Step::OracleCall { .. } => "oracle_call",
            Step::CommitPhaseEnd => "commit_end",
            Step::OpenFor { .. } => "open_for",
        }
    }
}

/// A two-phase protocol over Alice's committed bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolScript {
    pub id: String,
    pub registers: Vec<RegisterDecl>,
    /// Initial state of Alice's declared registers for `b = 0` and `b = 1`;
    /// Bob's declared registers start in `|0⟩`.
    pub initial_states: [PureState; 2],
    pub oracles: Vec<OracleSpec>,
    pub steps: Vec<Step>,
}

/// Register table produced by a static walk over a script.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub owners: Vec<Party>,
    pub dims: Vec<usize>,
}

impl Layout {
    fn push(&mut self, owner: Party, dim: usize) {
        self.owners.push(owner);
        self.dims.push(dim);
    }

    fn owner(&self, id: usize) -> Result<Party> {
        self.owners
            .get(id)
            .copied()
            .ok_or_else(|| Error::validation(format!("register {id} does not exist")))
    }
}

fn other(p: Party) -> Result<Party> {
    match p {
        Party::Alice => Ok(Party::Bob),
        Party::Bob => Ok(Party::Alice),
        p => Err(Error::validation(format!(
            "{p} cannot act in a protocol step"
        ))),
    }
}

impl ProtocolScript {
    /// Index of the single `CommitPhaseEnd` step.
    pub fn commit_phase_end(&self) -> Result<usize> {
        let ends: Vec<usize> = self
            .steps
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Step::CommitPhaseEnd))
            .map(|(i, _)| i)
            .collect();
        match ends.as_slice() {
            [one] => Ok(*one),
            _ => Err(Error::validation(format!(
                "script must contain exactly one commit_end marker, found {}",
                ends.len()
            ))),
        }
    }

    pub fn oracle(&self, id: &str) -> Result<&OracleSpec> {
        self.oracles
            .iter()
            .find(|o| o.id == id)
            .ok_or_else(|| Error::validation(format!("unknown oracle {id:?}")))
    }

    /// Alice's declared registers, in order.
    pub fn alice_registers(&self) -> Vec<usize> {
        (0..self.registers.len())
            .filter(|&r| self.registers[r].owner == Party::Alice)
            .collect()
    }

    /// Full structural validation for both declared bits.
    pub fn validate(&self) -> Result<()> {
        self.commit_phase_end()?;
        for (i, r) in self.registers.iter().enumerate() {
            if !r.owner.is_controllable() {
                return Err(Error::validation(format!(
                    "declared register {i} must start with Alice or Bob, not {}",
                    r.owner
                )));
            }
            if r.dim < 2 {
                return Err(Error::validation(format!(
                    "declared register {i} has dimension < 2"
                )));
            }
        }
        let alice_dims: Vec<usize> = self
            .alice_registers()
            .iter()
            .map(|&r| self.registers[r].dim)
            .collect();
        for (b, s) in self.initial_states.iter().enumerate() {
            if s.dims() != alice_dims.as_slice() {
                return Err(Error::validation(format!(
                    "initial state for b={b} has dims {:?}, Alice's registers are {alice_dims:?}",
                    s.dims()
                )));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for o in &self.oracles {
            o.validate()?;
            if !ids.insert(o.id.as_str()) {
                return Err(Error::validation(format!("duplicate oracle id {:?}", o.id)));
            }
        }
        for declared in 0..2u8 {
            self.layout(declared, self.steps.len())?;
        }
        Ok(())
    }

    /// Register table after running `steps[..until]` with the given
    /// declared bit, checking every step's ownership preconditions.
    pub fn layout(&self, declared: u8, until: usize) -> Result<Layout> {
        let commit = self.commit_phase_end()?;
        let mut layout = Layout {
            owners: self.registers.iter().map(|r| r.owner).collect(),
            dims: self.registers.iter().map(|r| r.dim).collect(),
        };
        for (index, step) in self.steps.iter().take(until).enumerate() {
            if let Step::OpenFor { .. } = step {
                if index < commit {
                    return Err(Error::validation("open_for step before commit_end").at_step(index));
                }
            }
            self.layout_step(&mut layout, step, declared, false)
                .map_err(|e| e.at_step(index))?;
        }
        Ok(layout)
    }

    fn layout_step(
        &self,
        layout: &mut Layout,
        step: &Step,
        declared: u8,
        nested: bool,
    ) -> Result<()> {
        match step {
            Step::AllocateRegister { owner, dim, basis } => {
                other(*owner)?;
                if *dim < 2 || basis >= dim {
                    return Err(Error::validation(format!(
                        "allocate: basis {basis} invalid for dimension {dim}"
                    )));
                }
                layout.push(*owner, *dim);
            }
            Step::LocalUnitary {
                owner,
                registers,
                operator,
            } => {
                other(*owner)?;
                let mut seen = registers.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != registers.len() || registers.is_empty() {
                    return Err(Error::validation(
                        "local_unitary: registers must be distinct and non-empty",
                    ));
                }
                let mut dim = 1usize;
                for &r in registers {
                    let o = layout.owner(r)?;
                    if o != *owner {
                        return Err(Error::validation(format!(
                            "local_unitary by {owner} on register {r} held by {o}"
                        )));
                    }
                    dim *= layout.dims[r];
                }
                if operator.dim() != dim {
                    return Err(Error::validation(format!(
                        "local_unitary: operator dimension {} does not match registers ({dim})",
                        operator.dim()
                    )));
                }
                if !operator.is_unitary() {
                    return Err(Error::validation(format!(
                        "local_unitary: operator is not unitary (defect {:.3e})",
                        operator.unitarity_defect()
                    )));
                }
            }
            Step::SendQuantum { register, to } => {
                let o = layout.owner(*register)?;
                if !o.is_controllable() || !to.is_controllable() {
                    return Err(Error::validation(format!(
                        "send_quantum: register {register} held by {o} cannot go to {to}"
                    )));
                }
                layout.owners[*register] = *to;
            }
            Step::ClassicalBroadcast { sender, register } => {
                let receiver = other(*sender)?;
                let o = layout.owner(*register)?;
                if o != *sender {
                    return Err(Error::validation(format!(
                        "broadcast by {sender} of register {register} held by {o}"
                    )));
                }
                let d = layout.dims[*register];
                layout.push(Party::Environment, d);
                layout.push(receiver, d);
            }
            Step::ErasureSend {
                sender,
                register,
                survival_probability,
            } => {
                let receiver = other(*sender)?;
                if !(0.0..=1.0).contains(survival_probability) {
                    return Err(Error::validation(format!(
                        "erasure_send: survival probability {survival_probability} outside [0, 1]"
                    )));
                }
                let o = layout.owner(*register)?;
                if o != *sender {
                    return Err(Error::validation(format!(
                        "erasure_send by {sender} of register {register} held by {o}"
                    )));
                }
                let d = layout.dims[*register];
                layout.push(Party::Environment, d);
                layout.push(Party::Environment, 2);
                layout.push(receiver, d + 1);
            }
            Step::OracleCall { oracle, inputs } => {
                let spec = self.oracle(oracle)?;
                for &r in inputs {
                    let o = layout.owner(r)?;
                    if !spec.accepts_input_from(o) {
                        return Err(Error::validation(format!(
                            "oracle {oracle} cannot take register {r} held by {o}"
                        )));
                    }
                }
                if let Some(arity) = spec.fixed_arity() {
                    if arity != inputs.len() {
                        return Err(Error::validation(format!(
                            "oracle {oracle} expects {arity} inputs, got {} (split map must cover every input and ancilla)",
                            inputs.len()
                        )));
                    }
                }
                match &spec.kind {
                    OracleKind::PostEmpty {
                        ancilla_dims,
                        split,
                        ..
                    } => {
                        for (&r, &p) in inputs.iter().zip(split) {
                            layout.owners[r] = p;
                        }
                        for (&d, &p) in ancilla_dims.iter().zip(&split[inputs.len()..]) {
                            layout.push(p, d);
                        }
                    }
                    OracleKind::ShortTerm { ancilla_dims, .. } => {
                        for &d in ancilla_dims {
                            layout.push(Party::Environment, d);
                        }
                    }
                    OracleKind::Hidden { ancillas, .. } => {
                        for &(d, p) in ancillas {
                            layout.push(p, d);
                        }
                    }
                    OracleKind::Trivial { measured } => {
                        for &m in measured {
                            let &r = inputs.get(m).ok_or_else(|| {
                                Error::validation(format!(
                                    "oracle {oracle}: measured input {m} out of range"
                                ))
                            })?;
                            let d = layout.dims[r];
                            layout.push(Party::Environment, d);
                            layout.push(Party::Alice, d);
                            layout.push(Party::Bob, d);
                        }
                    }
                    OracleKind::BellCoin => {
                        layout.push(Party::Alice, 2);
                        layout.push(Party::Bob, 2);
                    }
                    OracleKind::ClassicalCoin => {
                        layout.push(Party::Alice, 2);
                        layout.push(Party::Bob, 2);
                        layout.push(Party::Environment, 2);
                    }
                }
            }
            Step::CommitPhaseEnd => {}
            Step::OpenFor { bit, step } => {
                if nested || matches!(**step, Step::CommitPhaseEnd | Step::OpenFor { .. }) {
                    return Err(Error::validation("open_for must wrap a plain step"));
                }
                if *bit > 1 {
                    return Err(Error::validation(format!(
                        "open_for bit {bit} is not 0 or 1"
                    )));
                }
                if *bit == declared {
                    self.layout_step(layout, step, declared, true)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, gates, ONE, ZERO};

    fn bit(b: usize) -> PureState {
        PureState::basis(vec![2], b).unwrap()
    }

    fn script(steps: Vec<Step>) -> ProtocolScript {
        ProtocolScript {
            id: "t".into(),
            registers: vec![
                RegisterDecl::new("a", Party::Alice, 2),
                RegisterDecl::new("r", Party::Bob, 2),
            ],
            initial_states: [bit(0), bit(1)],
            oracles: vec![],
            steps,
        }
    }

    #[test]
    fn commit_marker_must_be_unique() {
        assert!(script(vec![]).validate().is_err());
        assert!(script(vec![Step::CommitPhaseEnd, Step::CommitPhaseEnd])
            .validate()
            .is_err());
        assert!(script(vec![Step::CommitPhaseEnd]).validate().is_ok());
    }

    #[test]
    fn layout_tracks_allocations() {
        let s = script(vec![
            Step::ClassicalBroadcast {
                sender: Party::Alice,
                register: 0,
            },
            Step::ErasureSend {
                sender: Party::Alice,
                register: 0,
                survival_probability: 0.5,
            },
            Step::CommitPhaseEnd,
            Step::OpenFor {
                bit: 1,
                step: Box::new(Step::AllocateRegister {
                    owner: Party::Bob,
                    dim: 3,
                    basis: 2,
                }),
            },
        ]);
        s.validate().unwrap();
        let l0 = s.layout(0, 4).unwrap();
        let l1 = s.layout(1, 4).unwrap();
        assert_eq!(l0.dims, vec![2, 2, 2, 2, 2, 2, 3]);
        assert_eq!(l1.dims.len(), 8);
        assert_eq!(l0.owners[2], Party::Environment);
        assert_eq!(l0.owners[3], Party::Bob);
    }

    #[test]
    fn ownership_errors_carry_step_index() {
        let s = script(vec![
            Step::CommitPhaseEnd,
            Step::LocalUnitary {
                owner: Party::Alice,
                registers: vec![1],
                operator: ComplexOperator::from_matrix(gates::pauli_x()).unwrap(),
            },
        ]);
        match s.validate() {
            Err(Error::Step { index: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn environment_registers_are_write_once() {
        let s = script(vec![
            Step::ClassicalBroadcast {
                sender: Party::Alice,
                register: 0,
            },
            Step::SendQuantum {
                register: 2,
                to: Party::Bob,
            },
            Step::CommitPhaseEnd,
        ]);
        assert!(matches!(s.validate(), Err(Error::Step { index: 1, .. })));
    }

    #[test]
    fn non_unitary_operator_rejected() {
        let bad = ComplexOperator::from_rows(&[vec![ONE, ONE], vec![ZERO, ONE]], vec![2]).unwrap();
        let s = script(vec![
            Step::LocalUnitary {
                owner: Party::Alice,
                registers: vec![0],
                operator: bad,
            },
            Step::CommitPhaseEnd,
        ]);
        assert!(matches!(s.validate(), Err(Error::Step { index: 0, .. })));
    }

    #[test]
    fn initial_state_layout_checked() {
        let mut s = script(vec![Step::CommitPhaseEnd]);
        s.initial_states[1] = PureState::new(vec![ONE, ZERO, ZERO, ZERO], vec![2, 2]).unwrap();
        assert!(s.validate().is_err());
        let _ = c(0.0, 0.0);
    }

    #[test]
    fn open_for_only_after_commit() {
        let s = script(vec![
            Step::OpenFor {
                bit: 0,
                step: Box::new(Step::SendQuantum {
                    register: 0,
                    to: Party::Bob,
                }),
            },
            Step::CommitPhaseEnd,
        ]);
        assert!(s.validate().is_err());
    }
}
