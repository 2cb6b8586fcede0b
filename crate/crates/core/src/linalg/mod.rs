//! Dense complex linear algebra over labelled tensor-product registers.
//!
//! States and operators carry the ordered list of register dimensions they
//! live on. Register 0 is the most significant factor of every global index
//! (Kronecker convention, left operand first).

mod index;
mod spectral;

use nalgebra::DMatrix;
use nalgebra::DVector;
pub use num_complex::Complex64;

use crate::error::{Error, Result};
pub use index::total_dim;
pub(crate) use index::{digit, Split};
pub use spectral::{fidelity, hermitian_eigen, hermitian_sqrt, purify};

/// Absolute tolerance for state and operator checks.
pub const STATE_TOL: f64 = 1e-9;
/// Tolerance for composed operations (square roots, fidelity chains).
pub const COMPOSED_TOL: f64 = 1e-8;
/// Default cap on the global Hilbert-space dimension.
pub const DEFAULT_MAX_DIM: usize = 4096;

pub type CMatrix = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn checked_dim(dims: &[usize], max_dim: usize) -> Result<usize> {
    let total = total_dim(dims).ok_or(Error::Capacity {
        requested: usize::MAX,
        cap: max_dim,
    })?;
    if total > max_dim {
        return Err(Error::Capacity {
            requested: total,
            cap: max_dim,
        });
    }
    Ok(total)
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::validation("register dimensions must be positive"));
    }
    Ok(())
}

/// Kronecker product of two same-kind values.
pub trait Tensor: Sized {
    fn tensor_product(&self, other: &Self, max_dim: usize) -> Result<Self>;
}

/// `a ⊗ b` under the default dimension cap.
pub fn tensor_product<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor_product(b, DEFAULT_MAX_DIM)
}

/// A normalised pure state over an ordered register list.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<Complex64>,
    dims: Vec<usize>,
}

impl PureState {
    /// Builds a state, checking amplitude count and unit norm.
    pub fn new(amplitudes: Vec<Complex64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let total = total_dim(&dims).ok_or_else(|| Error::validation("dimension overflow"))?;
        if amplitudes.len() != total {
            return Err(Error::validation(format!(
                "expected {total} amplitudes for dims {dims:?}, got {}",
                amplitudes.len()
            )));
        }
        let state = PureState {
            amplitudes: DVector::from_vec(amplitudes),
            dims,
        };
        let norm = state.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::validation(format!("state norm {norm} is not 1")));
        }
        Ok(state)
    }

    /// Builds a state after rescaling to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>, dims: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::validation("cannot normalise the zero vector"));
        }
        PureState::new(amplitudes.into_iter().map(|a| a / norm).collect(), dims)
    }

    pub(crate) fn from_parts_unchecked(amplitudes: DVector<Complex64>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(Some(amplitudes.len()), total_dim(&dims));
        PureState { amplitudes, dims }
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self> {
        check_dims(&dims)?;
        let total = total_dim(&dims).ok_or_else(|| Error::validation("dimension overflow"))?;
        if index >= total {
            return Err(Error::argument(format!("basis index {index} >= {total}")));
        }
        let mut amplitudes = DVector::from_element(total, ZERO);
        amplitudes[index] = ONE;
        Ok(PureState { amplitudes, dims })
    }

    /// The zero-register state `1`, neutral for tensor products.
    pub fn scalar() -> Self {
        PureState {
            amplitudes: DVector::from_element(1, ONE),
            dims: Vec::new(),
        }
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dims != other.dims {
            return Err(Error::argument(format!(
                "layout mismatch: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> ComplexOperator {
        ComplexOperator {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
            dims: self.dims.clone(),
        }
    }

    /// Reshapes the amplitudes into a matrix whose row index enumerates the
    /// registers in `rows` (in the given order) and whose column index
    /// enumerates the remaining registers in ascending order.
    pub fn as_matrix(&self, rows: &[usize]) -> Result<CMatrix> {
        let split = Split::new(&self.dims, rows)?;
        Ok(CMatrix::from_fn(split.rows(), split.cols(), |r, c| {
            self.amplitudes[split.global(r, c)]
        }))
    }

    /// Reduced density operator on `keep` (sorted ascending), tracing the rest.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<ComplexOperator> {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        let m = self.as_matrix(&keep)?;
        Ok(ComplexOperator {
            matrix: &m * m.adjoint(),
            dims: keep.iter().map(|&r| self.dims[r]).collect(),
        })
    }

    /// Applies `op` to the `targets` registers (op's first factor acts on
    /// `targets[0]`), identity elsewhere.
    pub fn apply_local(&self, op: &CMatrix, targets: &[usize]) -> Result<PureState> {
        let split = Split::new(&self.dims, targets)?;
        if op.nrows() != split.rows() || op.ncols() != split.rows() {
            return Err(Error::argument(format!(
                "operator is {}x{}, targets span dimension {}",
                op.nrows(),
                op.ncols(),
                split.rows()
            )));
        }
        let m = CMatrix::from_fn(split.rows(), split.cols(), |r, c| {
            self.amplitudes[split.global(r, c)]
        });
        let out = op * m;
        let mut amplitudes = self.amplitudes.clone();
        for r in 0..split.rows() {
            for c in 0..split.cols() {
                amplitudes[split.global(r, c)] = out[(r, c)];
            }
        }
        Ok(PureState {
            amplitudes,
            dims: self.dims.clone(),
        })
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn with_global_phase(&self, phi: f64) -> PureState {
        let phase = Complex64::from_polar(1.0, phi);
        PureState {
            amplitudes: self.amplitudes.map(|a| a * phase),
            dims: self.dims.clone(),
        }
    }
}

impl Tensor for PureState {
    fn tensor_product(&self, other: &Self, max_dim: usize) -> Result<Self> {
        let dims: Vec<usize> = self.dims.iter().chain(&other.dims).copied().collect();
        let total = checked_dim(&dims, max_dim)?;
        let mut amplitudes = Vec::with_capacity(total);
        for a in self.amplitudes.iter() {
            for b in other.amplitudes.iter() {
                amplitudes.push(a * b);
            }
        }
        Ok(PureState {
            amplitudes: DVector::from_vec(amplitudes),
            dims,
        })
    }
}

/// A square complex operator over an ordered register list.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl ComplexOperator {
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let total = total_dim(&dims).ok_or_else(|| Error::validation("dimension overflow"))?;
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::validation(format!(
                "matrix is {}x{}, dims {dims:?} require {total}x{total}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(ComplexOperator { matrix, dims })
    }

    /// Operator on a single register of the matrix's size.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        ComplexOperator::new(matrix, vec![n])
    }

    /// Row-major construction from real-imaginary pairs.
    pub fn from_rows(rows: &[Vec<Complex64>], dims: Vec<usize>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("matrix rows must form a square"));
        }
        ComplexOperator::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]), dims)
    }

    pub fn identity(dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let n = total_dim(&dims).ok_or_else(|| Error::validation("dimension overflow"))?;
        Ok(ComplexOperator {
            matrix: CMatrix::identity(n, n),
            dims,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> ComplexOperator {
        ComplexOperator {
            matrix: self.matrix.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `tr(ρ²)`, real part.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn max_abs_diff(&self, other: &ComplexOperator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    /// `max |(U†U − I)_{ij}|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        max_abs_diff(
            &(self.matrix.adjoint() * &self.matrix),
            &CMatrix::identity(n, n),
        )
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= STATE_TOL
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    /// Checks Hermiticity, positive semidefiniteness and unit trace.
    pub fn validate_density(&self) -> Result<()> {
        spectral::density_spectrum(self).map(|_| ())
    }
}

impl Tensor for ComplexOperator {
    fn tensor_product(&self, other: &Self, max_dim: usize) -> Result<Self> {
        let dims: Vec<usize> = self.dims.iter().chain(&other.dims).copied().collect();
        checked_dim(&dims, max_dim)?;
        Ok(ComplexOperator {
            matrix: self.matrix.kronecker(&other.matrix),
            dims,
        })
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Traces out the registers listed in `traced`; the result lives on the
/// remaining registers in ascending order.
pub fn partial_trace(rho: &ComplexOperator, traced: &[usize]) -> Result<ComplexOperator> {
    let n = rho.dims.len();
    if let Some(&bad) = traced.iter().find(|&&r| r >= n) {
        return Err(Error::argument(format!(
            "traced register {bad} out of range for {n} registers"
        )));
    }
    let keep: Vec<usize> = (0..n).filter(|r| !traced.contains(r)).collect();
    let split = Split::new(&rho.dims, &keep)?;
    let mut out = CMatrix::zeros(split.rows(), split.rows());
    for i in 0..split.rows() {
        for j in 0..split.rows() {
            let mut acc = ZERO;
            for c in 0..split.cols() {
                acc += rho.matrix[(split.global(i, c), split.global(j, c))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(ComplexOperator {
        matrix: out,
        dims: keep.iter().map(|&r| rho.dims[r]).collect(),
    })
}

/// Global operator acting as `op` on `targets` (in order) and as the identity
/// on every other register of `dims`.
pub fn embed_local(
    op: &ComplexOperator,
    targets: &[usize],
    dims: &[usize],
) -> Result<ComplexOperator> {
    check_dims(dims)?;
    let split = Split::new(dims, targets)?;
    if op.dim() != split.rows() {
        return Err(Error::argument(format!(
            "operator dimension {} does not match target dimension {}",
            op.dim(),
            split.rows()
        )));
    }
    let total = split.rows() * split.cols();
    let mut out = CMatrix::zeros(total, total);
    for c in 0..split.cols() {
        for i in 0..split.rows() {
            for j in 0..split.rows() {
                out[(split.global(i, c), split.global(j, c))] = op.matrix[(i, j)];
            }
        }
    }
    Ok(ComplexOperator {
        matrix: out,
        dims: dims.to_vec(),
    })
}

/// Common single- and two-qubit gates.
pub mod gates {
    use super::{c, CMatrix, ONE, ZERO};

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    pub fn hadamard() -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
    }

    /// Real rotation `|0⟩ ↦ cos a|0⟩ + sin a|1⟩`.
    pub fn ry(a: f64) -> CMatrix {
        let (s, co) = a.sin_cos();
        CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
    }

    /// `|a,b⟩ ↦ |a, b ⊕ a⟩` on two qubits, first factor is the control.
    pub fn cnot() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        m
    }

    /// Controlled-`u` with the first qubit as control.
    pub fn controlled(u: &CMatrix) -> CMatrix {
        let n = u.nrows();
        let mut m = CMatrix::identity(2 * n, 2 * n);
        m.view_mut((n, n), (n, n)).copy_from(u);
        m
    }

    pub fn swap() -> CMatrix {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        m
    }
}
