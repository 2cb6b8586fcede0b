//! Classical channels and trusted-third-party oracles.
//!
//! Every channel and oracle has two realisations: a purified one that keeps
//! the global state pure by copying classical data into environment
//! registers, and a collapsed one that forks the execution per outcome and
//! drops environment registers. Bob's reduced state agrees between the two.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexOperator, PureState, DEFAULT_MAX_DIM, ZERO};
use crate::system::{Configuration, Party, Symbol};

/// Outcome-weighted successors of a configuration.
pub type Fork = Vec<(f64, Configuration)>;

/// Model of the channel carrying a classical message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// Noiseless macroscopic channel: the signal is copied into the
    /// environment and on to the receiver.
    BroadcastCopy,
    /// The environment always learns the symbol; the receiver gets it with
    /// probability `survival_probability` and an erasure flag otherwise.
    Erasure { survival_probability: f64 },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::BroadcastCopy => Ok(()),
            ChannelModel::Erasure {
                survival_probability: q,
            } if (0.0..=1.0).contains(&q) => Ok(()),
            ChannelModel::Erasure {
                survival_probability: q,
            } => Err(Error::validation(format!(
                "survival probability {q} outside [0, 1]"
            ))),
        }
    }
}

/// A trusted third party callable in one protocol step.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    pub id: String,
    pub kind: OracleKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleKind {
    /// Runs `circuit` on inputs followed by fresh ancillas, then hands every
    /// register (inputs first, then ancillas) to the party in `split`.
    PostEmpty {
        circuit: ComplexOperator,
        ancilla_dims: Vec<usize>,
        split: Vec<Party>,
    },
    /// Measures the listed input positions and publishes each outcome to
    /// the environment, Alice and Bob.
    Trivial { measured: Vec<usize> },
    /// Runs `circuit` on inputs and fresh ancillas, then dumps the ancillas
    /// into the environment without copies for Alice or Bob.
    ShortTerm {
        circuit: ComplexOperator,
        ancilla_dims: Vec<usize>,
    },
    /// Runs `circuit` on inputs and fresh ancillas; each ancilla goes to the
    /// listed owner, which may be the oracle's private memory. Inputs may
    /// include registers already held by the oracle.
    Hidden {
        circuit: ComplexOperator,
        ancillas: Vec<(usize, Party)>,
    },
    /// Hands out `(|00⟩ + |11⟩)/√2`, first qubit to Alice, second to Bob.
    BellCoin,
    /// Hands matching classical coins to Alice and Bob, with the environment
    /// holding the purifying third copy.
    ClassicalCoin,
}

/// Whether the no-go argument covers protocols using an oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleClass {
    Penalized,
    NotPenalized,
}

/// Oracles that hide nothing from the joint view of Alice, Bob and the
/// public environment are penalized; only the hidden oracle escapes.
pub fn classify_oracle(spec: &OracleSpec) -> OracleClass {
    match spec.kind {
        OracleKind::Hidden { .. } => OracleClass::NotPenalized,
        _ => OracleClass::Penalized,
    }
}

fn ancilla_dims_ok(dims: &[usize]) -> Result<()> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::validation("ancilla dimensions must be at least 2"));
    }
    Ok(())
}

fn circuit_ok(id: &str, circuit: &ComplexOperator) -> Result<()> {
    if !circuit.is_unitary() {
        return Err(Error::validation(format!(
            "oracle {id}: circuit is not unitary (defect {:.3e})",
            circuit.unitarity_defect()
        )));
    }
    Ok(())
}

impl OracleSpec {
    pub fn new(id: impl Into<String>, kind: OracleKind) -> Self {
        OracleSpec {
            id: id.into(),
            kind,
        }
    }

    /// Static checks that do not depend on the call site.
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            OracleKind::PostEmpty {
                circuit,
                ancilla_dims,
                split,
            } => {
                ancilla_dims_ok(ancilla_dims)?;
                circuit_ok(&self.id, circuit)?;
                if split.len() < ancilla_dims.len() {
                    return Err(Error::validation(format!(
                        "oracle {}: split map does not cover every ancilla",
                        self.id
                    )));
                }
                if split.iter().any(|p| !p.is_controllable()) {
                    return Err(Error::validation(format!(
                        "oracle {}: post-empty oracles return every register to Alice or Bob",
                        self.id
                    )));
                }
                Ok(())
            }
            OracleKind::ShortTerm {
                circuit,
                ancilla_dims,
            } => {
                ancilla_dims_ok(ancilla_dims)?;
                circuit_ok(&self.id, circuit)
            }
            OracleKind::Hidden { circuit, ancillas } => {
                let dims: Vec<usize> = ancillas.iter().map(|a| a.0).collect();
                ancilla_dims_ok(&dims)?;
                if ancillas.iter().any(|a| a.1 == Party::Environment) {
                    return Err(Error::validation(format!(
                        "oracle {}: hidden oracle ancillas cannot go to the environment",
                        self.id
                    )));
                }
                circuit_ok(&self.id, circuit)
            }
            OracleKind::Trivial { .. } | OracleKind::BellCoin | OracleKind::ClassicalCoin => Ok(()),
        }
    }

    /// Number of input registers the oracle expects, when fixed by its kind.
    pub fn fixed_arity(&self) -> Option<usize> {
        match &self.kind {
            OracleKind::PostEmpty {
                ancilla_dims,
                split,
                ..
            } => Some(split.len() - ancilla_dims.len().min(split.len())),
            OracleKind::BellCoin | OracleKind::ClassicalCoin => Some(0),
            _ => None,
        }
    }

    /// Allowed owners of input registers.
    pub fn accepts_input_from(&self, owner: Party) -> bool {
        match self.kind {
            OracleKind::Hidden { .. } => owner != Party::Environment,
            _ => owner.is_controllable(),
        }
    }
}

fn positions(config: &Configuration, ids: &[usize]) -> Result<Vec<usize>> {
    ids.iter().map(|&id| config.position(id)).collect()
}

fn check_inputs(config: &Configuration, spec: &OracleSpec, inputs: &[usize]) -> Result<Vec<usize>> {
    let pos = positions(config, inputs)?;
    for (&id, &p) in inputs.iter().zip(&pos) {
        let owner = config.partition.owners()[p];
        if !spec.accepts_input_from(owner) {
            return Err(Error::argument(format!(
                "oracle {} cannot take register {id} held by {owner}",
                spec.id
            )));
        }
    }
    let mut sorted = inputs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != inputs.len() {
        return Err(Error::argument(format!(
            "oracle {}: repeated input",
            spec.id
        )));
    }
    if let Some(arity) = spec.fixed_arity() {
        if arity != inputs.len() {
            return Err(Error::validation(format!(
                "oracle {} expects {arity} inputs, got {} (split map must cover every input and ancilla)",
                spec.id,
                inputs.len()
            )));
        }
    }
    Ok(pos)
}

/// Appends ancillas in `|0⟩` and applies `circuit` to inputs then ancillas.
/// Returns the ancilla positions.
fn run_circuit(
    config: &mut Configuration,
    spec_id: &str,
    circuit: &ComplexOperator,
    input_pos: &[usize],
    ancilla_dims: &[usize],
    max_dim: usize,
) -> Result<Vec<usize>> {
    let mut ancilla_pos = Vec::with_capacity(ancilla_dims.len());
    for &d in ancilla_dims {
        ancilla_pos.push(config.append_basis(Party::OracleHidden, d, 0, max_dim)?);
    }
    let targets: Vec<usize> = input_pos.iter().chain(&ancilla_pos).copied().collect();
    let needed: usize = targets
        .iter()
        .map(|&p| config.partition.dims()[p])
        .product();
    if circuit.dim() != needed {
        return Err(Error::validation(format!(
            "oracle {spec_id}: circuit dimension {} does not match inputs and ancillas ({needed})",
            circuit.dim()
        )));
    }
    config.apply(circuit.matrix(), &targets)?;
    Ok(ancilla_pos)
}

fn ghz(parties: usize, amp: f64) -> PureState {
    let dims = vec![2; parties];
    let n = 1 << parties;
    let mut a = vec![ZERO; n];
    a[0] = c(amp, 0.0);
    a[n - 1] = c(amp, 0.0);
    PureState::from_parts_unchecked(a.into(), dims)
}

fn other_party(p: Party) -> Result<Party> {
    match p {
        Party::Alice => Ok(Party::Bob),
        Party::Bob => Ok(Party::Alice),
        other => Err(Error::argument(format!(
            "{other} cannot send classical messages"
        ))),
    }
}

fn check_sender(config: &Configuration, sender: Party, register: usize) -> Result<usize> {
    let pos = config.position(register)?;
    let owner = config.partition.owners()[pos];
    if owner != sender {
        return Err(Error::argument(format!(
            "register {register} is held by {owner}, not the sender {sender}"
        )));
    }
    Ok(pos)
}

/// Noiseless broadcast, purified: the sender's register stays as its record,
/// the environment gets a basis copy, and the receiver gets a copy of that.
pub fn broadcast_purified(
    config: &Configuration,
    sender: Party,
    register: usize,
    max_dim: usize,
) -> Result<Configuration> {
    let receiver = other_party(sender)?;
    let pos = check_sender(config, sender, register)?;
    let mut out = config.clone();
    let env = out.append_copy(Party::Environment, pos, max_dim)?;
    out.append_copy(receiver, env, max_dim)?;
    Ok(out)
}

/// Noiseless broadcast, collapsed: one successor per outcome, the receiver
/// holding `|i⟩`; the environment copy is implicit in the transcript.
pub fn broadcast_branches(
    config: &Configuration,
    sender: Party,
    register: usize,
    step: usize,
    max_dim: usize,
) -> Result<Fork> {
    let receiver = other_party(sender)?;
    let pos = check_sender(config, sender, register)?;
    let dim = config.partition.dims()[pos];
    let mut fork = Vec::new();
    for (v, p, mut cfg) in config.measure(pos) {
        cfg.skip_id();
        cfg.append_basis(receiver, dim, v, max_dim)?;
        cfg.transcript.push(Symbol { step, value: v });
        fork.push((p, cfg));
    }
    Ok(fork)
}

fn check_survival(q: f64) -> Result<()> {
    ChannelModel::Erasure {
        survival_probability: q,
    }
    .validate()
}

/// Erasure channel, purified. Appends the environment's copy, the
/// environment's survival flag `√(1−q)|0⟩ + √q|1⟩`, and the receiver's
/// register of dimension `n + 1` holding the symbol when the flag is set and
/// the erasure mark `n` otherwise.
pub fn erasure_purified(
    config: &Configuration,
    sender: Party,
    register: usize,
    survival: f64,
    max_dim: usize,
) -> Result<Configuration> {
    check_survival(survival)?;
    let receiver = other_party(sender)?;
    let pos = check_sender(config, sender, register)?;
    let n = config.partition.dims()[pos];
    let mut out = config.clone();
    let env = out.append_copy(Party::Environment, pos, max_dim)?;
    let flag = PureState::from_parts_unchecked(
        vec![c((1.0 - survival).sqrt(), 0.0), c(survival.sqrt(), 0.0)].into(),
        vec![2],
    );
    out.append_state(&[Party::Environment], &flag, max_dim)?;
    let flag_pos = out.partition.len() - 1;
    let dims = out.state.dims().to_vec();
    out.append_derived(receiver, n + 1, max_dim, |g| {
        if crate::linalg::digit(g, &dims, flag_pos) == 1 {
            crate::linalg::digit(g, &dims, env)
        } else {
            n
        }
    })?;
    Ok(out)
}

/// Erasure channel, collapsed. Transcript value is `i` when delivered and
/// `n + i` when erased; the environment learns `i` either way.
pub fn erasure_branches(
    config: &Configuration,
    sender: Party,
    register: usize,
    survival: f64,
    step: usize,
    max_dim: usize,
) -> Result<Fork> {
    check_survival(survival)?;
    let receiver = other_party(sender)?;
    let pos = check_sender(config, sender, register)?;
    let n = config.partition.dims()[pos];
    let mut delivered = Vec::new();
    let mut erased = Vec::new();
    for (v, p, cfg) in config.measure(pos) {
        for (survived, weight) in [(true, survival), (false, 1.0 - survival)] {
            if weight == 0.0 {
                continue;
            }
            let mut next = cfg.clone();
            next.skip_id();
            next.skip_id();
            let (mark, value) = if survived { (v, v) } else { (n, n + v) };
            next.append_basis(receiver, n + 1, mark, max_dim)?;
            next.transcript.push(Symbol { step, value });
            if survived {
                delivered.push((p * weight, next));
            } else {
                erased.push((p * weight, next));
            }
        }
    }
    delivered.extend(erased);
    Ok(delivered)
}

/// Purified oracle call under the default dimension cap.
pub fn apply_oracle(
    config: &Configuration,
    spec: &OracleSpec,
    inputs: &[usize],
) -> Result<Configuration> {
    apply_oracle_purified(config, spec, inputs, DEFAULT_MAX_DIM)
}

/// Purified oracle call: the global state stays pure; anything the oracle
/// publishes or dumps lands in environment registers.
pub fn apply_oracle_purified(
    config: &Configuration,
    spec: &OracleSpec,
    inputs: &[usize],
    max_dim: usize,
) -> Result<Configuration> {
    spec.validate()?;
    let input_pos = check_inputs(config, spec, inputs)?;
    let mut out = config.clone();
    match &spec.kind {
        OracleKind::PostEmpty {
            circuit,
            ancilla_dims,
            split,
        } => {
            let anc = run_circuit(
                &mut out,
                &spec.id,
                circuit,
                &input_pos,
                ancilla_dims,
                max_dim,
            )?;
            for (&p, &owner) in input_pos.iter().chain(&anc).zip(split) {
                out.partition.set_owner(p, owner);
            }
        }
        OracleKind::ShortTerm {
            circuit,
            ancilla_dims,
        } => {
            let anc = run_circuit(
                &mut out,
                &spec.id,
                circuit,
                &input_pos,
                ancilla_dims,
                max_dim,
            )?;
            for p in anc {
                out.partition.set_owner(p, Party::Environment);
            }
        }
        OracleKind::Hidden { circuit, ancillas } => {
            let dims: Vec<usize> = ancillas.iter().map(|a| a.0).collect();
            let anc = run_circuit(&mut out, &spec.id, circuit, &input_pos, &dims, max_dim)?;
            for (p, &(_, owner)) in anc.into_iter().zip(ancillas) {
                out.partition.set_owner(p, owner);
            }
            let retains = out.partition.owners().contains(&Party::OracleHidden);
            if !retains {
                return Err(Error::validation(format!(
                    "hidden oracle {} must retain at least one register",
                    spec.id
                )));
            }
        }
        OracleKind::Trivial { measured } => {
            for &m in measured {
                let &p = input_pos.get(m).ok_or_else(|| {
                    Error::validation(format!(
                        "oracle {}: measured input {m} out of range",
                        spec.id
                    ))
                })?;
                let env = out.append_copy(Party::Environment, p, max_dim)?;
                out.append_copy(Party::Alice, env, max_dim)?;
                out.append_copy(Party::Bob, env, max_dim)?;
            }
        }
        OracleKind::BellCoin => {
            out.append_state(&[Party::Alice, Party::Bob], &ghz(2, FRAC_1_SQRT_2), max_dim)?;
        }
        OracleKind::ClassicalCoin => {
            out.append_state(
                &[Party::Alice, Party::Bob, Party::Environment],
                &ghz(3, FRAC_1_SQRT_2),
                max_dim,
            )?;
        }
    }
    Ok(out)
}

/// Measures-and-removes the register at `pos` in every configuration of
/// `fork`, extending transcripts.
fn collapse_register(fork: Fork, pos: usize, step: usize) -> Fork {
    let mut out = Vec::new();
    for (p, cfg) in fork {
        for (v, q, mut next) in cfg.measure(pos) {
            next.remove_collapsed(pos, v);
            next.transcript.push(Symbol { step, value: v });
            out.push((p * q, next));
        }
    }
    out
}

/// Collapsed oracle call: public measurements fork the execution and
/// environment-held registers are measured and removed.
pub fn apply_oracle_branches(
    config: &Configuration,
    spec: &OracleSpec,
    inputs: &[usize],
    step: usize,
    max_dim: usize,
) -> Result<Fork> {
    spec.validate()?;
    let input_pos = check_inputs(config, spec, inputs)?;
    match &spec.kind {
        OracleKind::PostEmpty { .. } | OracleKind::Hidden { .. } | OracleKind::BellCoin => Ok(
            vec![(1.0, apply_oracle_purified(config, spec, inputs, max_dim)?)],
        ),
        OracleKind::ShortTerm {
            circuit,
            ancilla_dims,
        } => {
            let mut cfg = config.clone();
            let anc = run_circuit(
                &mut cfg,
                &spec.id,
                circuit,
                &input_pos,
                ancilla_dims,
                max_dim,
            )?;
            let mut fork = vec![(1.0, cfg)];
            // Remove from the right so earlier positions stay valid.
            for &p in anc.iter().rev() {
                fork = collapse_register(fork, p, step);
            }
            // Restore ascending per-ancilla order in transcripts.
            for (_, cfg) in fork.iter_mut() {
                let k = anc.len();
                let len = cfg.transcript.len();
                cfg.transcript[len - k..].reverse();
            }
            fork.sort_by(|a, b| a.1.transcript.cmp(&b.1.transcript));
            Ok(fork)
        }
        OracleKind::Trivial { measured } => {
            let mut fork: Fork = vec![(1.0, config.clone())];
            for &m in measured {
                let &p = input_pos.get(m).ok_or_else(|| {
                    Error::validation(format!(
                        "oracle {}: measured input {m} out of range",
                        spec.id
                    ))
                })?;
                let dim = config.partition.dims()[p];
                let mut next = Vec::new();
                for (w, cfg) in fork {
                    for (v, q, mut branch) in cfg.measure(p) {
                        branch.skip_id();
                        branch.append_basis(Party::Alice, dim, v, max_dim)?;
                        branch.append_basis(Party::Bob, dim, v, max_dim)?;
                        branch.transcript.push(Symbol { step, value: v });
                        next.push((w * q, branch));
                    }
                }
                fork = next;
            }
            Ok(fork)
        }
        OracleKind::ClassicalCoin => {
            let mut fork = Vec::new();
            for v in 0..2 {
                let mut cfg = config.clone();
                cfg.append_basis(Party::Alice, 2, v, max_dim)?;
                cfg.append_basis(Party::Bob, 2, v, max_dim)?;
                cfg.skip_id();
                cfg.transcript.push(Symbol { step, value: v });
                fork.push((0.5, cfg));
            }
            Ok(fork)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gates, hermitian_eigen, CMatrix};
    use crate::system::{reduced_state, Partition};

    fn config(amps: &[f64], owners: Vec<Party>) -> Configuration {
        let dims = vec![2; owners.len()];
        let state =
            PureState::normalized(amps.iter().map(|&a| c(a, 0.0)).collect(), dims.clone()).unwrap();
        Configuration::new(state, Partition::new(owners, dims).unwrap()).unwrap()
    }

    fn op(m: CMatrix, dims: Vec<usize>) -> ComplexOperator {
        ComplexOperator::new(m, dims).unwrap()
    }

    #[test]
    fn broadcast_of_superposition_gives_three_way_correlation() {
        let (alpha, beta) = (0.6, 0.8);
        let cfg = config(&[alpha, beta], vec![Party::Alice]);
        let out = broadcast_purified(&cfg, Party::Alice, 0, 64).unwrap();
        assert_eq!(
            out.partition.owners(),
            &[Party::Alice, Party::Environment, Party::Bob]
        );
        let a = out.state.amplitudes();
        assert!((a[0] - c(alpha, 0.0)).norm() < 1e-15);
        assert!((a[7] - c(beta, 0.0)).norm() < 1e-15);
        assert!((out.state.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn broadcast_requires_sender_ownership() {
        let cfg = config(&[1.0, 0.0, 0.0, 0.0], vec![Party::Alice, Party::Bob]);
        assert!(broadcast_purified(&cfg, Party::Alice, 1, 64).is_err());
        assert!(broadcast_branches(&cfg, Party::Environment, 0, 0, 64).is_err());
    }

    #[test]
    fn broadcast_branches_follow_born_rule() {
        let cfg = config(&[1.0, 1.0], vec![Party::Alice]);
        let fork = broadcast_branches(&cfg, Party::Alice, 0, 3, 64).unwrap();
        assert_eq!(fork.len(), 2);
        for (k, (p, b)) in fork.iter().enumerate() {
            assert!((p - 0.5).abs() < 1e-15);
            assert_eq!(b.transcript, vec![Symbol { step: 3, value: k }]);
            assert_eq!(b.register_ids, vec![0, 2]);
            assert_eq!(b.allocated, 3);
        }
    }

    #[test]
    fn erasure_hides_lost_symbols_from_bob_only() {
        let cfg = config(&[1.0, 1.0], vec![Party::Alice]);
        let out = erasure_purified(&cfg, Party::Alice, 0, 0.5, 256).unwrap();
        assert_eq!(out.partition.dims(), &[2, 2, 2, 3]);
        let bob = reduced_state(&out, &[Party::Bob]).unwrap();
        // Bob: |0⟩, |1⟩ with 1/4 each, erasure mark with 1/2.
        let expected = [0.25, 0.25, 0.5];
        for (k, want) in expected.iter().enumerate() {
            assert!((bob.matrix()[(k, k)].re - want).abs() < 1e-15);
        }
        let fork = erasure_branches(&cfg, Party::Alice, 0, 0.5, 0, 256).unwrap();
        let values: Vec<usize> = fork.iter().map(|(_, b)| b.transcript[0].value).collect();
        assert_eq!(values, vec![0, 1, 2, 3]);
        assert!(erasure_purified(&cfg, Party::Alice, 0, 1.5, 256).is_err());
    }

    #[test]
    fn bell_coin_then_broadcasts_give_matching_uniform_coins() {
        let cfg = config(&[1.0, 0.0], vec![Party::Bob]);
        let spec = OracleSpec::new("coin", OracleKind::BellCoin);
        let fork = apply_oracle_branches(&cfg, &spec, &[], 0, 64).unwrap();
        let (_, cfg) = &fork[0];
        let mut outcomes = Vec::new();
        for (p, a) in broadcast_branches(cfg, Party::Alice, 1, 1, 64).unwrap() {
            for (q, b) in broadcast_branches(&a, Party::Bob, 2, 2, 64).unwrap() {
                if p * q > 1e-12 {
                    outcomes.push((p * q, b.transcript[0].value, b.transcript[1].value));
                }
            }
        }
        assert_eq!(outcomes.len(), 2);
        for (p, x, y) in outcomes {
            assert!((p - 0.5).abs() < 1e-9);
            assert_eq!(x, y);
        }
    }

    #[test]
    fn classical_coin_bob_env_state_is_classical_mixture() {
        let cfg = config(&[1.0, 0.0], vec![Party::Alice]);
        let spec = OracleSpec::new("coin", OracleKind::ClassicalCoin);
        let out = apply_oracle(&cfg, &spec, &[]).unwrap();
        let rho = reduced_state(&out, &[Party::Bob, Party::Environment]).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 0)] = c(0.5, 0.0);
        expected[(3, 3)] = c(0.5, 0.0);
        assert!((rho.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn hidden_copy_leaves_alice_and_bob_mixed() {
        let cfg = config(&[1.0, 0.0, 1.0, 0.0], vec![Party::Alice, Party::Bob]);
        let spec = OracleSpec::new(
            "hide",
            OracleKind::Hidden {
                circuit: op(gates::cnot(), vec![2, 2]),
                ancillas: vec![(2, Party::OracleHidden)],
            },
        );
        let out = apply_oracle(&cfg, &spec, &[0]).unwrap();
        let ab = reduced_state(&out, &[Party::Alice, Party::Bob]).unwrap();
        assert!(ab.purity() < 1.0 - 1e-6);
        assert!((ab.purity() - 0.5).abs() < 1e-12);
        let (values, _) = hermitian_eigen(ab.matrix());
        assert!(values.iter().all(|&v| v > -1e-12));
    }

    #[test]
    fn hidden_oracle_must_retain_something() {
        let cfg = config(&[1.0, 0.0], vec![Party::Alice]);
        let spec = OracleSpec::new(
            "leaky",
            OracleKind::Hidden {
                circuit: op(gates::cnot(), vec![2, 2]),
                ancillas: vec![(2, Party::Bob)],
            },
        );
        assert!(apply_oracle(&cfg, &spec, &[0]).is_err());
    }

    #[test]
    fn post_empty_returns_everything() {
        let cfg = config(&[1.0, 1.0], vec![Party::Alice]);
        let spec = OracleSpec::new(
            "pe",
            OracleKind::PostEmpty {
                circuit: op(gates::cnot(), vec![2, 2]),
                ancilla_dims: vec![2],
                split: vec![Party::Bob, Party::Alice],
            },
        );
        let out = apply_oracle(&cfg, &spec, &[0]).unwrap();
        assert_eq!(out.partition.owners(), &[Party::Bob, Party::Alice]);
        assert!((out.state.norm() - 1.0).abs() < 1e-15);
        let ab = reduced_state(&out, &[Party::Alice, Party::Bob]).unwrap();
        assert!((ab.purity() - 1.0).abs() < 1e-12);

        let incomplete = OracleSpec::new(
            "pe",
            OracleKind::PostEmpty {
                circuit: op(gates::cnot(), vec![2, 2]),
                ancilla_dims: vec![2],
                split: vec![Party::Alice],
            },
        );
        assert!(matches!(
            apply_oracle(&cfg, &incomplete, &[0]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn trivial_oracle_publishes_identical_records() {
        let cfg = config(&[0.6, 0.8], vec![Party::Bob]);
        let spec = OracleSpec::new("t", OracleKind::Trivial { measured: vec![0] });
        let out = apply_oracle(&cfg, &spec, &[0]).unwrap();
        let owners = out.partition.owners();
        assert_eq!(
            owners,
            &[Party::Bob, Party::Environment, Party::Alice, Party::Bob]
        );
        // Joint support of (E*, Alice record, Bob record) is {000, 111}.
        for (g, a) in out.state.amplitudes().iter().enumerate() {
            let bits = g & 0b111;
            if a.norm() > 0.0 {
                assert!(bits == 0 || bits == 0b111);
            }
        }
        let fork = apply_oracle_branches(&cfg, &spec, &[0], 4, 64).unwrap();
        assert_eq!(fork.len(), 2);
        assert!((fork[0].0 - 0.36).abs() < 1e-12);
    }

    #[test]
    fn short_term_ancillas_go_to_environment_only() {
        let cfg = config(&[1.0, 1.0], vec![Party::Alice]);
        let spec = OracleSpec::new(
            "st",
            OracleKind::ShortTerm {
                circuit: op(gates::cnot(), vec![2, 2]),
                ancilla_dims: vec![2],
            },
        );
        let first = apply_oracle(&cfg, &spec, &[0]).unwrap();
        assert_eq!(
            first.partition.owners(),
            &[Party::Alice, Party::Environment]
        );
        let second = apply_oracle(&first, &spec, &[0]).unwrap();
        // Fresh ancilla on the second call; the dumped one is untouched.
        assert_eq!(second.partition.len(), 3);
        assert_eq!(
            reduced_state(&second, &[Party::Environment]).unwrap().dim(),
            4
        );
        let fork = apply_oracle_branches(&cfg, &spec, &[0], 0, 64).unwrap();
        assert_eq!(fork.len(), 2);
        assert!(fork.iter().all(|(_, b)| b.partition.len() == 1));
    }

    #[test]
    fn classification() {
        let circuit = op(gates::cnot(), vec![2, 2]);
        let kinds = [
            (OracleKind::BellCoin, OracleClass::Penalized),
            (OracleKind::ClassicalCoin, OracleClass::Penalized),
            (
                OracleKind::Trivial { measured: vec![0] },
                OracleClass::Penalized,
            ),
            (
                OracleKind::ShortTerm {
                    circuit: circuit.clone(),
                    ancilla_dims: vec![2],
                },
                OracleClass::Penalized,
            ),
            (
                OracleKind::PostEmpty {
                    circuit: circuit.clone(),
                    ancilla_dims: vec![2],
                    split: vec![Party::Alice, Party::Bob],
                },
                OracleClass::Penalized,
            ),
            (
                OracleKind::Hidden {
                    circuit,
                    ancillas: vec![(2, Party::OracleHidden)],
                },
                OracleClass::NotPenalized,
            ),
        ];
        for (kind, class) in kinds {
            assert_eq!(classify_oracle(&OracleSpec::new("o", kind)), class);
        }
    }
}
