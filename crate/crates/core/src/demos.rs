//! Built-in commitment protocols, each a one-parameter family.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use crate::channels::{OracleKind, OracleSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, gates, CMatrix, Complex64, ComplexOperator, PureState, ONE, ZERO};
use crate::protocol::{ProtocolScript, RegisterDecl, Step};
use crate::system::Party;

/// What the no-go argument predicts for a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    /// Binding attack succeeds at least as well as the protocol conceals.
    NoGoApplies,
    /// Perfectly concealing yet binding: outside the no-go hypotheses.
    Counterexample,
    /// Lossy channel: the environment learns more than Bob, so the attack
    /// falls short of Bob's concealment.
    ChannelNoise,
}

impl Behavior {
    pub fn tag(self) -> &'static str {
        match self {
            Behavior::NoGoApplies => "no_go_applies",
            Behavior::Counterexample => "counterexample",
            Behavior::ChannelNoise => "channel_noise",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub default: f64,
}

impl ParamSpec {
    fn contains(&self, x: f64) -> bool {
        // Accept grid points that overshoot the bound by float drift.
        x.is_finite() && x >= self.min - 1e-12 && x <= self.max + 1e-12
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DemoFamily {
    pub id: &'static str,
    pub description: &'static str,
    pub parameter: Option<ParamSpec>,
    pub behavior: Behavior,
    builder: fn(f64) -> Result<ProtocolScript>,
}

impl DemoFamily {
    /// Builds the script; `None` selects the default parameter.
    pub fn build(&self, parameter: Option<f64>) -> Result<ProtocolScript> {
        let x = match (self.parameter, parameter) {
            (Some(spec), None) => spec.default,
            (Some(spec), Some(x)) if spec.contains(x) => x.clamp(spec.min, spec.max),
            (Some(spec), Some(x)) => {
                return Err(Error::argument(format!(
                    "{} = {x} outside [{}, {}] for demo {}",
                    spec.name, spec.min, spec.max, self.id
                )))
            }
            (None, None) => 0.0,
            (None, Some(_)) => {
                return Err(Error::argument(format!(
                    "demo {} takes no parameter",
                    self.id
                )))
            }
        };
        (self.builder)(x)
    }
}

const THETA: ParamSpec = ParamSpec {
    name: "theta",
    min: 0.0,
    max: FRAC_PI_2,
    default: FRAC_PI_4,
};

const HIDDEN_THETA: ParamSpec = ParamSpec {
    name: "theta",
    min: PI / 16.0,
    max: FRAC_PI_2,
    default: FRAC_PI_4,
};

const SURVIVAL: ParamSpec = ParamSpec {
    name: "survival_probability",
    min: 0.0,
    max: 1.0,
    default: 0.5,
};

static CATALOG: [DemoFamily; 12] = [
    DemoFamily {
        id: "revealing",
        description: "Alice sends |b> outright",
        parameter: None,
        behavior: Behavior::NoGoApplies,
        builder: revealing,
    },
    DemoFamily {
        id: "perfectly_concealing",
        description: "Bell state sign encodes b; Bob gets one half",
        parameter: None,
        behavior: Behavior::NoGoApplies,
        builder: perfectly_concealing,
    },
    DemoFamily {
        id: "theta_family",
        description: "Bob receives |phi_b> with overlap cos(theta)",
        parameter: Some(THETA),
        behavior: Behavior::NoGoApplies,
        builder: theta_family,
    },
    DemoFamily {
        id: "broadcast_bc",
        description: "theta family masked by publicly broadcast dice",
        parameter: Some(THETA),
        behavior: Behavior::NoGoApplies,
        builder: broadcast_bc,
    },
    DemoFamily {
        id: "biased_broadcast",
        description: "broadcast symbol with bit-dependent bias",
        parameter: Some(THETA),
        behavior: Behavior::NoGoApplies,
        builder: biased_broadcast,
    },
    DemoFamily {
        id: "coinflip_bell",
        description: "commitment masked by a Bell-pair coin",
        parameter: Some(THETA),
        behavior: Behavior::NoGoApplies,
        builder: coinflip_bell,
    },
    DemoFamily {
        id: "coinflip_classical",
        description: "commitment masked by a classical shared coin",
        parameter: Some(THETA),
        behavior: Behavior::NoGoApplies,
        builder: coinflip_classical,
    },
    DemoFamily {
        id: "peo_bc",
        description: "post-empty oracle copies the commitment qubit",
        parameter: Some(THETA),
        behavior: Behavior::NoGoApplies,
        builder: peo_bc,
    },
    DemoFamily {
        id: "trivial_oracle_bc",
        description: "trivial oracle publishes Alice's dice",
        parameter: Some(THETA),
        behavior: Behavior::NoGoApplies,
        builder: trivial_oracle_bc,
    },
    DemoFamily {
        id: "short_term_bc",
        description: "short-term oracle dumps a copy into the environment",
        parameter: Some(THETA),
        behavior: Behavior::NoGoApplies,
        builder: short_term_bc,
    },
    DemoFamily {
        id: "hidden_oracle",
        description: "hidden oracle keeps a private copy of Alice's bit",
        parameter: Some(HIDDEN_THETA),
        behavior: Behavior::Counterexample,
        builder: hidden_oracle,
    },
    DemoFamily {
        id: "erasure_bc",
        description: "commitment sent over an erasure channel",
        parameter: Some(SURVIVAL),
        behavior: Behavior::ChannelNoise,
        builder: erasure_bc,
    },
];

/// Every registered family, in a fixed order.
pub fn catalog() -> &'static [DemoFamily] {
    &CATALOG
}

pub fn find_demo(id: &str) -> Result<&'static DemoFamily> {
    CATALOG
        .iter()
        .find(|d| d.id == id)
        .ok_or_else(|| Error::argument(format!("unknown demo {id:?}")))
}

pub fn build_demo(id: &str, parameter: Option<f64>) -> Result<ProtocolScript> {
    find_demo(id)?.build(parameter)
}

/// `(b0, b1, c, x) ↦ (b0, b1, c, x ⊕ b_c)`; an involution on four bits.
pub fn reversible_ot_gate(b0: u8, b1: u8, choice: u8, x: u8) -> Result<(u8, u8, u8, u8)> {
    if [b0, b1, choice, x].iter().any(|&v| v > 1) {
        return Err(Error::argument("OT gate inputs must be bits"));
    }
    let chosen = if choice == 0 { b0 } else { b1 };
    Ok((b0, b1, choice, x ^ chosen))
}

fn op(m: CMatrix) -> ComplexOperator {
    ComplexOperator::from_matrix(m).expect("square gate")
}

fn state(amps: &[Complex64], dims: Vec<usize>) -> Result<PureState> {
    PureState::normalized(amps.to_vec(), dims)
}

fn real(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| c(x, 0.0)).collect()
}

/// `|φ0⟩ = |0⟩`, `|φ1⟩ = cos θ|0⟩ + sin θ|1⟩`.
fn phi(theta: f64, bit: u8) -> [f64; 2] {
    if bit == 0 {
        [1.0, 0.0]
    } else {
        [theta.cos(), theta.sin()]
    }
}

/// Symmetric pair around `|+⟩` whose squared amplitudes have
/// Bhattacharyya coefficient `cos θ`.
fn biased(theta: f64, bit: u8) -> [f64; 2] {
    let a = if bit == 0 {
        FRAC_PI_4 - theta / 2.0
    } else {
        FRAC_PI_4 + theta / 2.0
    };
    [a.cos(), a.sin()]
}

/// `|b⟩ ⊗ |φ_b⟩` on two qubits.
fn bit_and_phi(theta: f64, bit: u8) -> Result<PureState> {
    let [x, y] = phi(theta, bit);
    let amps = if bit == 0 {
        [x, y, 0.0, 0.0]
    } else {
        [0.0, 0.0, x, y]
    };
    state(&real(&amps), vec![2, 2])
}

fn prefixed(prefix: &[Complex64], rest: &PureState) -> Result<PureState> {
    let mut dims = vec![prefix.len()];
    dims.extend_from_slice(rest.dims());
    let amps: Vec<Complex64> = prefix
        .iter()
        .flat_map(|p| rest.amplitudes().iter().map(move |a| p * a))
        .collect();
    state(&amps, dims)
}

fn script(
    id: &str,
    registers: Vec<RegisterDecl>,
    initial: impl Fn(u8) -> Result<PureState>,
    oracles: Vec<OracleSpec>,
    steps: Vec<Step>,
) -> Result<ProtocolScript> {
    let s = ProtocolScript {
        id: id.into(),
        registers,
        initial_states: [initial(0)?, initial(1)?],
        oracles,
        steps,
    };
    s.validate()?;
    Ok(s)
}

fn send(register: usize, to: Party) -> Step {
    Step::SendQuantum { register, to }
}

fn open(bit: u8, step: Step) -> Step {
    Step::OpenFor {
        bit,
        step: Box::new(step),
    }
}

fn alice(name: &str) -> RegisterDecl {
    RegisterDecl::new(name, Party::Alice, 2)
}

fn revealing(_: f64) -> Result<ProtocolScript> {
    script(
        "revealing",
        vec![alice("a"), alice("k")],
        |b| PureState::basis(vec![2, 2], 3 * b as usize),
        vec![],
        vec![
            send(0, Party::Bob),
            Step::CommitPhaseEnd,
            send(1, Party::Bob),
        ],
    )
}

fn perfectly_concealing(_: f64) -> Result<ProtocolScript> {
    script(
        "perfectly_concealing",
        vec![alice("a"), alice("k")],
        |b| {
            let s = if b == 0 { 1.0 } else { -1.0 };
            state(&real(&[1.0, 0.0, 0.0, s]), vec![2, 2])
        },
        vec![],
        vec![
            send(0, Party::Bob),
            Step::CommitPhaseEnd,
            send(1, Party::Bob),
        ],
    )
}

fn theta_family(theta: f64) -> Result<ProtocolScript> {
    script(
        "theta_family",
        vec![alice("p"), alice("q")],
        |b| bit_and_phi(theta, b),
        vec![],
        vec![
            send(1, Party::Bob),
            Step::CommitPhaseEnd,
            send(0, Party::Bob),
        ],
    )
}

fn controlled_x() -> ComplexOperator {
    op(gates::cnot())
}

fn broadcast_bc(theta: f64) -> Result<ProtocolScript> {
    // d=0, p=1, q=2 (Alice); r=3 (Bob's dice)
    let dice = [ONE, ZERO];
    script(
        "broadcast_bc",
        vec![
            alice("d"),
            alice("p"),
            alice("q"),
            RegisterDecl::new("r", Party::Bob, 2),
        ],
        |b| prefixed(&dice, &bit_and_phi(theta, b)?),
        vec![],
        vec![
            Step::LocalUnitary {
                owner: Party::Alice,
                registers: vec![0],
                operator: op(gates::hadamard()),
            },
            Step::ClassicalBroadcast {
                sender: Party::Alice,
                register: 0,
            },
            Step::LocalUnitary {
                owner: Party::Bob,
                registers: vec![3],
                operator: op(gates::hadamard()),
            },
            Step::ClassicalBroadcast {
                sender: Party::Bob,
                register: 3,
            },
            Step::LocalUnitary {
                owner: Party::Alice,
                registers: vec![0, 2],
                operator: controlled_x(),
            },
            send(2, Party::Bob),
            Step::CommitPhaseEnd,
            send(1, Party::Bob),
        ],
    )
}

fn biased_broadcast(theta: f64) -> Result<ProtocolScript> {
    // s=0 carries the biased symbol, p=1 the bit
    script(
        "biased_broadcast",
        vec![alice("s"), alice("p")],
        |b| {
            let [x, y] = biased(theta, b);
            let bit = if b == 0 { [ONE, ZERO] } else { [ZERO, ONE] };
            let s = state(&real(&[x, y]), vec![2])?;
            let amps: Vec<Complex64> = s
                .amplitudes()
                .iter()
                .flat_map(|a| bit.iter().map(move |v| a * v))
                .collect();
            state(&amps, vec![2, 2])
        },
        vec![],
        vec![
            Step::ClassicalBroadcast {
                sender: Party::Alice,
                register: 0,
            },
            Step::CommitPhaseEnd,
            send(1, Party::Bob),
        ],
    )
}

fn coin_steps(coin_alice: usize, coin_bob: usize) -> Vec<Step> {
    vec![
        Step::OracleCall {
            oracle: "coin".into(),
            inputs: vec![],
        },
        Step::ClassicalBroadcast {
            sender: Party::Alice,
            register: coin_alice,
        },
        Step::ClassicalBroadcast {
            sender: Party::Bob,
            register: coin_bob,
        },
        Step::LocalUnitary {
            owner: Party::Alice,
            registers: vec![coin_alice, 1],
            operator: controlled_x(),
        },
        send(1, Party::Bob),
        Step::CommitPhaseEnd,
        send(0, Party::Bob),
    ]
}

fn coinflip_bell(theta: f64) -> Result<ProtocolScript> {
    // p=0, q=1; the oracle hands out 2 (Alice) and 3 (Bob)
    script(
        "coinflip_bell",
        vec![alice("p"), alice("q")],
        |b| bit_and_phi(theta, b),
        vec![OracleSpec::new("coin", OracleKind::BellCoin)],
        coin_steps(2, 3),
    )
}

fn coinflip_classical(theta: f64) -> Result<ProtocolScript> {
    script(
        "coinflip_classical",
        vec![alice("p"), alice("q")],
        |b| bit_and_phi(theta, b),
        vec![OracleSpec::new("coin", OracleKind::ClassicalCoin)],
        coin_steps(2, 3),
    )
}

fn peo_bc(theta: f64) -> Result<ProtocolScript> {
    // q goes to Bob, the oracle's copy (id 2) to Alice
    script(
        "peo_bc",
        vec![alice("p"), alice("q")],
        |b| bit_and_phi(theta, b),
        vec![OracleSpec::new(
            "copy",
            OracleKind::PostEmpty {
                circuit: controlled_x(),
                ancilla_dims: vec![2],
                split: vec![Party::Bob, Party::Alice],
            },
        )],
        vec![
            Step::OracleCall {
                oracle: "copy".into(),
                inputs: vec![1],
            },
            Step::CommitPhaseEnd,
            send(0, Party::Bob),
        ],
    )
}

fn trivial_oracle_bc(theta: f64) -> Result<ProtocolScript> {
    // d=0, p=1, q=2
    let dice = [ONE, ZERO];
    script(
        "trivial_oracle_bc",
        vec![alice("d"), alice("p"), alice("q")],
        |b| prefixed(&dice, &bit_and_phi(theta, b)?),
        vec![OracleSpec::new(
            "publish",
            OracleKind::Trivial { measured: vec![0] },
        )],
        vec![
            Step::LocalUnitary {
                owner: Party::Alice,
                registers: vec![0],
                operator: op(gates::hadamard()),
            },
            Step::OracleCall {
                oracle: "publish".into(),
                inputs: vec![0],
            },
            Step::LocalUnitary {
                owner: Party::Alice,
                registers: vec![0, 2],
                operator: controlled_x(),
            },
            send(2, Party::Bob),
            Step::CommitPhaseEnd,
            send(1, Party::Bob),
        ],
    )
}

fn short_term_bc(theta: f64) -> Result<ProtocolScript> {
    script(
        "short_term_bc",
        vec![alice("p"), alice("q")],
        |b| bit_and_phi(theta, b),
        vec![OracleSpec::new(
            "dump",
            OracleKind::ShortTerm {
                circuit: controlled_x(),
                ancilla_dims: vec![2],
            },
        )],
        vec![
            Step::OracleCall {
                oracle: "dump".into(),
                inputs: vec![1],
            },
            send(1, Party::Bob),
            Step::CommitPhaseEnd,
            send(0, Party::Bob),
        ],
    )
}

fn hidden_oracle(theta: f64) -> Result<ProtocolScript> {
    // a=0 (Alice), r=1 (Bob's idle register); "keep" stores h=2, "reveal" hands v=3 to Bob
    let hidden = |owner| OracleKind::Hidden {
        circuit: controlled_x(),
        ancillas: vec![(2, owner)],
    };
    script(
        "hidden_oracle",
        vec![alice("a"), RegisterDecl::new("r", Party::Bob, 2)],
        |b| state(&real(&biased(theta, b)), vec![2]),
        vec![
            OracleSpec::new("keep", hidden(Party::OracleHidden)),
            OracleSpec::new("reveal", hidden(Party::Bob)),
        ],
        vec![
            Step::OracleCall {
                oracle: "keep".into(),
                inputs: vec![0],
            },
            Step::CommitPhaseEnd,
            send(0, Party::Bob),
            Step::OracleCall {
                oracle: "reveal".into(),
                inputs: vec![2],
            },
        ],
    )
}

fn erasure_bc(survival: f64) -> Result<ProtocolScript> {
    script(
        "erasure_bc",
        vec![alice("a")],
        |b| {
            if b == 0 {
                PureState::basis(vec![2], 0)
            } else {
                state(&real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]), vec![2])
            }
        },
        vec![],
        vec![
            Step::ErasureSend {
                sender: Party::Alice,
                register: 0,
                survival_probability: survival,
            },
            Step::CommitPhaseEnd,
            send(0, Party::Bob),
        ],
    )
}

/// Opening variant used by tests: reveal through `OpenFor` steps instead of
/// a bit-independent send.
pub fn theta_family_with_branching_open(theta: f64) -> Result<ProtocolScript> {
    let mut s = theta_family(theta)?;
    s.id = "theta_family_open_for".into();
    s.steps.pop();
    s.steps.push(open(0, send(0, Party::Bob)));
    s.steps.push(open(1, send(0, Party::Bob)));
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_demo_builds_across_its_range() {
        for d in catalog() {
            match d.parameter {
                None => {
                    d.build(None).unwrap();
                    assert!(d.build(Some(0.1)).is_err());
                }
                Some(p) => {
                    for k in 0..=8 {
                        let x = p.min + (p.max - p.min) * k as f64 / 8.0;
                        d.build(Some(x))
                            .unwrap_or_else(|e| panic!("{} at {x}: {e}", d.id));
                    }
                    assert!(d.build(Some(p.max + 0.1)).is_err());
                    assert!(d.build(Some(f64::NAN)).is_err());
                }
            }
        }
    }

    #[test]
    fn ids_are_unique_and_known() {
        let mut ids: Vec<_> = catalog().iter().map(|d| d.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), catalog().len());
        for id in ["theta_family", "coinflip_bell", "hidden_oracle"] {
            assert!(find_demo(id).is_ok());
        }
        assert!(matches!(build_demo("nope", None), Err(Error::Argument(_))));
    }

    #[test]
    fn ot_gate_examples() {
        assert_eq!(reversible_ot_gate(1, 0, 0, 0).unwrap(), (1, 0, 0, 1));
        assert_eq!(reversible_ot_gate(1, 0, 1, 0).unwrap(), (1, 0, 1, 0));
        assert!(reversible_ot_gate(2, 0, 0, 0).is_err());
    }

    #[test]
    fn biased_pair_has_expected_overlap() {
        for theta in [0.0, 0.3, FRAC_PI_4, FRAC_PI_2] {
            let [a, b] = biased(theta, 0);
            let [x, y] = biased(theta, 1);
            let bc = (a * a * x * x).sqrt() + (b * b * y * y).sqrt();
            assert!((bc - theta.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn branching_open_variant_validates() {
        theta_family_with_branching_open(0.4).unwrap();
    }
}
