//! Mixed-radix index arithmetic over ordered register lists.
//!
//! Register 0 is the most significant digit of a global basis index.

use crate::error::{Error, Result};

/// Product of register dimensions, or `None` on overflow.
pub fn total_dim(dims: &[usize]) -> Option<usize> {
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    strides
}

/// Global offsets contributed by each joint value of `regs`, enumerated with
/// `regs[0]` most significant.
fn offsets(dims: &[usize], strides: &[usize], regs: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &r in regs {
        let mut next = Vec::with_capacity(out.len() * dims[r]);
        for &base in &out {
            for v in 0..dims[r] {
                next.push(base + v * strides[r]);
            }
        }
        out = next;
    }
    out
}

/// Factorisation of a global index space into a "row" register group (in
/// caller order) and the remaining registers (ascending order).
#[derive(Debug, Clone)]
pub(crate) struct Split {
    pub row_offsets: Vec<usize>,
    pub col_offsets: Vec<usize>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub rest: Vec<usize>,
}

impl Split {
    pub fn new(dims: &[usize], rows: &[usize]) -> Result<Self> {
        let mut seen = vec![false; dims.len()];
        for &r in rows {
            if r >= dims.len() {
                return Err(Error::argument(format!(
                    "register index {r} out of range for {} registers",
                    dims.len()
                )));
            }
            if seen[r] {
                return Err(Error::argument(format!("register index {r} repeated")));
            }
            seen[r] = true;
        }
        let rest: Vec<usize> = (0..dims.len()).filter(|&r| !seen[r]).collect();
        let strides = strides(dims);
        Ok(Split {
            row_offsets: offsets(dims, &strides, rows),
            col_offsets: offsets(dims, &strides, &rest),
            rest,
        })
    }

    pub fn rows(&self) -> usize {
        self.row_offsets.len()
    }

    pub fn cols(&self) -> usize {
        self.col_offsets.len()
    }

    #[inline]
    pub fn global(&self, row: usize, col: usize) -> usize {
        self.row_offsets[row] + self.col_offsets[col]
    }
}

/// Digit of register `reg` in global index `index`.
pub(crate) fn digit(index: usize, dims: &[usize], reg: usize) -> usize {
    let stride: usize = dims[reg + 1..].iter().product();
    (index / stride) % dims[reg]
}
