//! JSON protocol files.
//!
//! Complex numbers are `[re, im]` pairs; matrices are row-major lists of
//! rows. Registers are referenced by protocol-level id.

use serde::{Deserialize, Serialize};

use crate::channels::{OracleKind, OracleSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, Complex64, ComplexOperator, PureState};
use crate::protocol::{ProtocolScript, RegisterDecl, Step};
use crate::system::Party;

/// Largest norm deviation accepted for amplitude lists before they are
/// renormalised.
pub const LOAD_NORM_TOL: f64 = 1e-6;

type Pair = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    pub id: String,
    pub registers: Vec<RegisterEntry>,
    /// Amplitudes over Alice's declared registers for `b = 0` and `b = 1`.
    pub initial_states: [Vec<Pair>; 2],
    #[serde(default)]
    pub oracles: Vec<OracleEntry>,
    pub steps: Vec<StepEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterEntry {
    pub name: String,
    pub owner: Party,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntry {
    pub rows: Vec<Vec<Pair>>,
    /// Register dimensions the matrix acts on; defaults to one register.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub id: String,
    #[serde(flatten)]
    pub kind: OracleKindEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleKindEntry {
    PostEmpty {
        circuit: MatrixEntry,
        ancilla_dims: Vec<usize>,
        split: Vec<Party>,
    },
    Trivial {
        measured: Vec<usize>,
    },
    ShortTerm {
        circuit: MatrixEntry,
        ancilla_dims: Vec<usize>,
    },
    Hidden {
        circuit: MatrixEntry,
        ancillas: Vec<HiddenAncilla>,
    },
    BellCoin,
    ClassicalCoin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenAncilla {
    pub dim: usize,
    pub owner: Party,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepEntry {
    Allocate {
        owner: Party,
        dim: usize,
        #[serde(default)]
        basis: usize,
    },
    LocalUnitary {
        owner: Party,
        registers: Vec<usize>,
        operator: MatrixEntry,
    },
    SendQuantum {
        register: usize,
        to: Party,
    },
    Broadcast {
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
        #[serde(default)]
        inputs: Vec<usize>,
    },
    CommitEnd,
    OpenFor {
        bit: u8,
        step: Box<StepEntry>,
    },
}

fn pair(z: &Complex64) -> Pair {
    [z.re, z.im]
}

fn matrix_entry(op: &ComplexOperator) -> MatrixEntry {
    let m = op.matrix();
    let rows = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect())
        .collect();
    let dims = if op.dims() == [op.dim()] {
        None
    } else {
        Some(op.dims().to_vec())
    };
    MatrixEntry { rows, dims }
}

fn operator(entry: &MatrixEntry) -> Result<ComplexOperator> {
    let n = entry.rows.len();
    if entry.rows.iter().any(|r| r.len() != n) {
        return Err(Error::validation("matrix rows must form a square"));
    }
    let m = CMatrix::from_fn(n, n, |i, j| c(entry.rows[i][j][0], entry.rows[i][j][1]));
    ComplexOperator::new(m, entry.dims.clone().unwrap_or_else(|| vec![n]))
}

fn oracle_entry(spec: &OracleSpec) -> OracleEntry {
    let kind = match &spec.kind {
        OracleKind::PostEmpty {
            circuit,
            ancilla_dims,
            split,
        } => OracleKindEntry::PostEmpty {
            circuit: matrix_entry(circuit),
            ancilla_dims: ancilla_dims.clone(),
            split: split.clone(),
        },
        OracleKind::Trivial { measured } => OracleKindEntry::Trivial {
            measured: measured.clone(),
        },
        OracleKind::ShortTerm {
            circuit,
            ancilla_dims,
        } => OracleKindEntry::ShortTerm {
            circuit: matrix_entry(circuit),
            ancilla_dims: ancilla_dims.clone(),
        },
        OracleKind::Hidden { circuit, ancillas } => OracleKindEntry::Hidden {
            circuit: matrix_entry(circuit),
            ancillas: ancillas
                .iter()
                .map(|&(dim, owner)| HiddenAncilla { dim, owner })
                .collect(),
        },
        OracleKind::BellCoin => OracleKindEntry::BellCoin,
        OracleKind::ClassicalCoin => OracleKindEntry::ClassicalCoin,
    };
    OracleEntry {
        id: spec.id.clone(),
        kind,
    }
}

fn oracle_spec(entry: &OracleEntry) -> Result<OracleSpec> {
    let kind = match &entry.kind {
        OracleKindEntry::PostEmpty {
            circuit,
            ancilla_dims,
            split,
        } => OracleKind::PostEmpty {
            circuit: operator(circuit)?,
            ancilla_dims: ancilla_dims.clone(),
            split: split.clone(),
        },
        OracleKindEntry::Trivial { measured } => OracleKind::Trivial {
            measured: measured.clone(),
        },
        OracleKindEntry::ShortTerm {
            circuit,
            ancilla_dims,
        } => OracleKind::ShortTerm {
            circuit: operator(circuit)?,
            ancilla_dims: ancilla_dims.clone(),
        },
        OracleKindEntry::Hidden { circuit, ancillas } => OracleKind::Hidden {
            circuit: operator(circuit)?,
            ancillas: ancillas.iter().map(|a| (a.dim, a.owner)).collect(),
        },
        OracleKindEntry::BellCoin => OracleKind::BellCoin,
        OracleKindEntry::ClassicalCoin => OracleKind::ClassicalCoin,
    };
    Ok(OracleSpec::new(entry.id.clone(), kind))
}

fn step_entry(step: &Step) -> StepEntry {
    match step {
        Step::AllocateRegister { owner, dim, basis } => StepEntry::Allocate {
            owner: *owner,
            dim: *dim,
            basis: *basis,
        },
        Step::LocalUnitary {
            owner,
            registers,
            operator,
        } => StepEntry::LocalUnitary {
            owner: *owner,
            registers: registers.clone(),
            operator: matrix_entry(operator),
        },
        Step::SendQuantum { register, to } => StepEntry::SendQuantum {
            register: *register,
            to: *to,
        },
        Step::ClassicalBroadcast { sender, register } => StepEntry::Broadcast {
            sender: *sender,
            register: *register,
        },
        Step::ErasureSend {
            sender,
            register,
            survival_probability,
        } => StepEntry::ErasureSend {
            sender: *sender,
            register: *register,
            survival_probability: *survival_probability,
        },
        Step::OracleCall { oracle, inputs } => StepEntry::OracleCall {
            oracle: oracle.clone(),
            inputs: inputs.clone(),
        },
        Step::CommitPhaseEnd => StepEntry::CommitEnd,
        Step::OpenFor { bit, step } => StepEntry::OpenFor {
            bit: *bit,
            step: Box::new(step_entry(step)),
        },
    }
}

fn step(entry: &StepEntry) -> Result<Step> {
    Ok(match entry {
        StepEntry::Allocate { owner, dim, basis } => Step::AllocateRegister {
            owner: *owner,
            dim: *dim,
            basis: *basis,
        },
        StepEntry::LocalUnitary {
            owner,
            registers,
            operator: m,
        } => Step::LocalUnitary {
            owner: *owner,
            registers: registers.clone(),
            operator: operator(m)?,
        },
        StepEntry::SendQuantum { register, to } => Step::SendQuantum {
            register: *register,
            to: *to,
        },
        StepEntry::Broadcast { sender, register } => Step::ClassicalBroadcast {
            sender: *sender,
            register: *register,
        },
        StepEntry::ErasureSend {
            sender,
            register,
            survival_probability,
        } => Step::ErasureSend {
            sender: *sender,
            register: *register,
            survival_probability: *survival_probability,
        },
        StepEntry::OracleCall { oracle, inputs } => Step::OracleCall {
            oracle: oracle.clone(),
            inputs: inputs.clone(),
        },
        StepEntry::CommitEnd => Step::CommitPhaseEnd,
        StepEntry::OpenFor { bit, step: inner } => Step::OpenFor {
            bit: *bit,
            step: Box::new(step(inner)?),
        },
    })
}

fn load_state(amps: &[Pair], dims: Vec<usize>, bit: usize) -> Result<PureState> {
    let amps: Vec<Complex64> = amps.iter().map(|p| c(p[0], p[1])).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > LOAD_NORM_TOL {
        return Err(Error::validation(format!(
            "initial state for b={bit} has norm {norm}, expected 1"
        )));
    }
    // Unit-norm input up to rounding is kept bit-for-bit so export and
    // reload are lossless.
    if (norm - 1.0).abs() <= 16.0 * f64::EPSILON {
        return PureState::new(amps, dims);
    }
    PureState::normalized(amps, dims)
}

impl ProtocolFile {
    pub fn from_script(script: &ProtocolScript) -> Self {
        ProtocolFile {
            id: script.id.clone(),
            registers: script
                .registers
                .iter()
                .map(|r| RegisterEntry {
                    name: r.name.clone(),
                    owner: r.owner,
                    dim: r.dim,
                })
                .collect(),
            initial_states: [
                script.initial_states[0]
                    .amplitudes()
                    .iter()
                    .map(pair)
                    .collect(),
                script.initial_states[1]
                    .amplitudes()
                    .iter()
                    .map(pair)
                    .collect(),
            ],
            oracles: script.oracles.iter().map(oracle_entry).collect(),
            steps: script.steps.iter().map(step_entry).collect(),
        }
    }

    /// Converts to a validated script.
    pub fn into_script(self) -> Result<ProtocolScript> {
        let registers: Vec<RegisterDecl> = self
            .registers
            .into_iter()
            .map(|r| RegisterDecl::new(r.name, r.owner, r.dim))
            .collect();
        let alice_dims: Vec<usize> = registers
            .iter()
            .filter(|r| r.owner == Party::Alice)
            .map(|r| r.dim)
            .collect();
        let [s0, s1] = &self.initial_states;
        let script = ProtocolScript {
            id: self.id,
            initial_states: [
                load_state(s0, alice_dims.clone(), 0)?,
                load_state(s1, alice_dims, 1)?,
            ],
            registers,
            oracles: self
                .oracles
                .iter()
                .map(oracle_spec)
                .collect::<Result<_>>()?,
            steps: self
                .steps
                .iter()
                .enumerate()
                .map(|(i, s)| step(s).map_err(|e| e.at_step(i)))
                .collect::<Result<_>>()?,
        };
        script.validate()?;
        Ok(script)
    }
}

/// Parses and validates a protocol document.
pub fn parse_protocol(text: &str) -> Result<ProtocolScript> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ProtocolFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse(format!("at {path}: {}", e.into_inner()))
    })?;
    file.into_script()
}

/// Pretty JSON document for a script.
pub fn protocol_to_json(script: &ProtocolScript) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ProtocolFile::from_script(script))
        .map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
