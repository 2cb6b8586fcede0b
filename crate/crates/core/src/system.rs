//! Register ownership bookkeeping and party-local reduced states.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{digit, total_dim, CMatrix, ComplexOperator, PureState, ZERO};

/// Owner of a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Alice,
    Bob,
    /// Passive environment `E*` amplifying classical signals.
    Environment,
    /// Private memory of a trusted oracle.
    OracleHidden,
}

impl Party {
    /// Whether a protocol participant can apply operations to this party's registers.
    pub fn is_controllable(self) -> bool {
        matches!(self, Party::Alice | Party::Bob)
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
            Party::Environment => "environment",
            Party::OracleHidden => "oracle_hidden",
        };
        f.write_str(s)
    }
}

/// Owner and dimension of every register, in register order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    owners: Vec<Party>,
    dims: Vec<usize>,
}

impl Partition {
    pub fn new(owners: Vec<Party>, dims: Vec<usize>) -> Result<Self> {
        if owners.len() != dims.len() {
            return Err(Error::validation(format!(
                "{} owners for {} registers",
                owners.len(),
                dims.len()
            )));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::validation(format!("register dimension {d} < 2")));
        }
        Ok(Partition { owners, dims })
    }

    pub fn empty() -> Self {
        Partition {
            owners: Vec::new(),
            dims: Vec::new(),
        }
    }

    pub fn owners(&self) -> &[Party] {
        &self.owners
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.owners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owners.is_empty()
    }

    pub fn owner(&self, register: usize) -> Option<Party> {
        self.owners.get(register).copied()
    }

    /// Indices of registers owned by any of `parties`, ascending.
    pub fn registers_of(&self, parties: &[Party]) -> Vec<usize> {
        (0..self.owners.len())
            .filter(|&r| parties.contains(&self.owners[r]))
            .collect()
    }

    pub(crate) fn push(&mut self, owner: Party, dim: usize) {
        self.owners.push(owner);
        self.dims.push(dim);
    }

    pub(crate) fn set_owner(&mut self, register: usize, owner: Party) {
        self.owners[register] = owner;
    }

    pub(crate) fn remove(&mut self, register: usize) {
        self.owners.remove(register);
        self.dims.remove(register);
    }
}

/// One recorded classical event: the step that produced it and its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub step: usize,
    pub value: usize,
}

/// Renders a transcript as `step:value` pairs joined by `/`; empty
/// transcripts render as `-`.
pub fn transcript_label(transcript: &[Symbol]) -> String {
    if transcript.is_empty() {
        return "-".to_string();
    }
    transcript
        .iter()
        .map(|s| format!("{}:{}", s.step, s.value))
        .collect::<Vec<_>>()
        .join("/")
}

/// A global pure state together with who owns each register.
///
/// `register_ids` maps each state register to its protocol-level register
/// index; the two differ when environment registers have been dropped.
/// `allocated` counts protocol-level registers handed out so far, including
/// dropped ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub state: PureState,
    pub partition: Partition,
    pub register_ids: Vec<usize>,
    pub transcript: Vec<Symbol>,
    pub allocated: usize,
}

impl Configuration {
    pub fn new(state: PureState, partition: Partition) -> Result<Self> {
        if state.dims() != partition.dims() {
            return Err(Error::validation(format!(
                "state dims {:?} do not match partition dims {:?}",
                state.dims(),
                partition.dims()
            )));
        }
        let register_ids = (0..partition.len()).collect();
        Ok(Configuration {
            state,
            allocated: partition.len(),
            partition,
            register_ids,
            transcript: Vec::new(),
        })
    }

    /// Position in the state of protocol register `id`.
    pub fn position_of(&self, id: usize) -> Option<usize> {
        self.register_ids.iter().position(|&r| r == id)
    }

    pub(crate) fn position(&self, id: usize) -> Result<usize> {
        self.position_of(id)
            .ok_or_else(|| Error::argument(format!("register {id} is not present")))
    }

    /// Reserves a protocol-level register id without adding a register.
    pub(crate) fn skip_id(&mut self) -> usize {
        self.allocated += 1;
        self.allocated - 1
    }

    /// Appends a register whose basis value is a function of the existing
    /// global basis index. This is an isometry: a controlled basis copy.
    pub(crate) fn append_derived(
        &mut self,
        owner: Party,
        dim: usize,
        max_dim: usize,
        value: impl Fn(usize) -> usize,
    ) -> Result<usize> {
        let old = self.state.dim();
        let total = old.saturating_mul(dim);
        if total > max_dim {
            return Err(Error::Capacity {
                requested: total,
                cap: max_dim,
            });
        }
        let mut amps = vec![ZERO; total];
        for (g, a) in self.state.amplitudes().iter().enumerate() {
            let v = value(g);
            debug_assert!(v < dim);
            amps[g * dim + v] = *a;
        }
        let mut dims = self.state.dims().to_vec();
        dims.push(dim);
        self.state = PureState::from_parts_unchecked(amps.into(), dims);
        self.partition.push(owner, dim);
        let id = self.skip_id();
        self.register_ids.push(id);
        Ok(self.partition.len() - 1)
    }

    /// Appends a register holding `|value⟩`.
    pub(crate) fn append_basis(
        &mut self,
        owner: Party,
        dim: usize,
        value: usize,
        max_dim: usize,
    ) -> Result<usize> {
        self.append_derived(owner, dim, max_dim, |_| value)
    }

    /// Appends a basis copy of the register at `source`.
    pub(crate) fn append_copy(
        &mut self,
        owner: Party,
        source: usize,
        max_dim: usize,
    ) -> Result<usize> {
        let dims = self.state.dims().to_vec();
        self.append_derived(owner, dims[source], max_dim, |g| digit(g, &dims, source))
    }

    /// Appends fresh registers prepared in `local` (owners in register order).
    pub(crate) fn append_state(
        &mut self,
        owners: &[Party],
        local: &PureState,
        max_dim: usize,
    ) -> Result<()> {
        debug_assert_eq!(owners.len(), local.dims().len());
        let total = total_dim(&[self.state.dim(), local.dim()]).unwrap_or(usize::MAX);
        if total > max_dim {
            return Err(Error::Capacity {
                requested: total,
                cap: max_dim,
            });
        }
        use crate::linalg::Tensor;
        self.state = self.state.tensor_product(local, max_dim)?;
        for (owner, &dim) in owners.iter().zip(local.dims()) {
            self.partition.push(*owner, dim);
            let id = self.skip_id();
            self.register_ids.push(id);
        }
        Ok(())
    }

    pub(crate) fn apply(&mut self, op: &CMatrix, positions: &[usize]) -> Result<()> {
        self.state = self.state.apply_local(op, positions)?;
        Ok(())
    }

    /// Computational-basis measurement of the register at `pos`: one entry per
    /// outcome with non-zero weight, each renormalised, register kept.
    pub(crate) fn measure(&self, pos: usize) -> Vec<(usize, f64, Configuration)> {
        let dims = self.state.dims().to_vec();
        let mut out = Vec::new();
        for v in 0..dims[pos] {
            let amps: Vec<_> = self
                .state
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(g, a)| if digit(g, &dims, pos) == v { *a } else { ZERO })
                .collect();
            let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            if p == 0.0 {
                continue;
            }
            let scale = 1.0 / p.sqrt();
            let mut cfg = self.clone();
            cfg.state = PureState::from_parts_unchecked(
                amps.into_iter()
                    .map(|a| a * scale)
                    .collect::<Vec<_>>()
                    .into(),
                dims.clone(),
            );
            out.push((v, p, cfg));
        }
        out
    }

    /// Removes the register at `pos`, which must hold the basis value `value`
    /// (e.g. right after `measure`).
    pub(crate) fn remove_collapsed(&mut self, pos: usize, value: usize) {
        let dims = self.state.dims().to_vec();
        let amps: Vec<_> = self
            .state
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(g, _)| digit(*g, &dims, pos) == value)
            .map(|(_, a)| *a)
            .collect();
        let mut new_dims = dims;
        new_dims.remove(pos);
        self.state = PureState::from_parts_unchecked(amps.into(), new_dims);
        self.partition.remove(pos);
        self.register_ids.remove(pos);
    }
}

/// Density operator over the registers owned by `parties`, tracing out the
/// rest.
pub fn reduced_state(config: &Configuration, parties: &[Party]) -> Result<ComplexOperator> {
    if parties.is_empty() {
        return Err(Error::argument("reduced_state needs at least one party"));
    }
    let keep = config.partition.registers_of(parties);
    config.state.reduced_density(&keep)
}

/// Hands a register to Alice or Bob. Environment and oracle ownership only
/// change through channel and oracle operations.
pub fn transfer_register(
    config: &Configuration,
    register: usize,
    new_owner: Party,
) -> Result<Configuration> {
    let current = config.partition.owner(register).ok_or_else(|| {
        Error::argument(format!(
            "register {register} does not exist ({} registers)",
            config.partition.len()
        ))
    })?;
    if !new_owner.is_controllable() {
        return Err(Error::argument(format!(
            "cannot transfer register {register} to {new_owner}"
        )));
    }
    if !current.is_controllable() {
        return Err(Error::argument(format!(
            "register {register} is held by {current} and cannot be transferred"
        )));
    }
    let mut out = config.clone();
    out.partition.set_owner(register, new_owner);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CMatrix, PureState};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell_config() -> Configuration {
        let h = c(FRAC_1_SQRT_2, 0.0);
        let zero = c(0.0, 0.0);
        let state = PureState::new(vec![h, zero, zero, h], vec![2, 2]).unwrap();
        let partition = Partition::new(vec![Party::Alice, Party::Bob], vec![2, 2]).unwrap();
        Configuration::new(state, partition).unwrap()
    }

    #[test]
    fn all_parties_gives_projector() {
        let cfg = bell_config();
        let rho = reduced_state(&cfg, &[Party::Alice, Party::Bob, Party::Environment]).unwrap();
        assert!(rho.max_abs_diff(&cfg.state.density()) < 1e-15);
    }

    #[test]
    fn bob_half_of_bell_pair_is_maximally_mixed() {
        let rho = reduced_state(&bell_config(), &[Party::Bob]).unwrap();
        let half = CMatrix::identity(2, 2) * c(0.5, 0.0);
        assert!((rho.matrix() - half).norm() < 1e-15);
        assert!(reduced_state(&bell_config(), &[]).is_err());
    }

    #[test]
    fn party_without_registers_sees_the_scalar_one() {
        let rho = reduced_state(&bell_config(), &[Party::Environment]).unwrap();
        assert_eq!(rho.dim(), 1);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn broadcast_reduction_is_block_diagonal() {
        // (α|0⟩+β|1⟩)_A copied into E* and Bob: α|000⟩ + β|111⟩ over (A, E*, B),
        // followed by an extra Bob qubit entangled with A's branch i via |ψ_i⟩.
        // Direct computation: ρ^{E*,B} = Σ p_i |ii⟩⟨ii| ⊗ tr_A(|ψ_i⟩⟨ψ_i|).
        let (alpha, beta) = (0.6f64, 0.8f64);
        let dims = vec![2, 2, 2];
        let mut amps = vec![c(0.0, 0.0); 8];
        amps[0] = c(alpha, 0.0);
        amps[7] = c(beta, 0.0);
        let state = PureState::new(amps, dims.clone()).unwrap();
        let partition =
            Partition::new(vec![Party::Alice, Party::Environment, Party::Bob], dims).unwrap();
        let cfg = Configuration::new(state, partition).unwrap();
        let rho = reduced_state(&cfg, &[Party::Bob, Party::Environment]).unwrap();
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 0)] = c(alpha * alpha, 0.0);
        expected[(3, 3)] = c(beta * beta, 0.0);
        assert!((rho.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn transfer_round_trip_and_errors() {
        let cfg = bell_config();
        let moved = transfer_register(&cfg, 1, Party::Alice).unwrap();
        assert_eq!(moved.state, cfg.state);
        assert_eq!(reduced_state(&moved, &[Party::Alice]).unwrap().dim(), 4);
        let back = transfer_register(&moved, 1, Party::Bob).unwrap();
        assert_eq!(back, cfg);
        assert!(transfer_register(&cfg, 1, Party::Environment).is_err());
        assert!(transfer_register(&cfg, 5, Party::Alice).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![Party::Alice], vec![1]).is_err());
        assert!(Partition::new(vec![Party::Alice], vec![2, 2]).is_err());
        assert_eq!(transcript_label(&[]), "-");
        assert_eq!(
            transcript_label(&[Symbol { step: 1, value: 0 }, Symbol { step: 4, value: 2 }]),
            "1:0/4:2"
        );
    }
}
