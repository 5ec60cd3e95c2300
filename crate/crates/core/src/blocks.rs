use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// An element of `H^k`, stored as an `m × k` matrix whose columns are the blocks.
///
/// A coefficient matrix `B` (`r × k`) acts blockwise: `(B z)_i = Σ_j B_ij z_j`,
/// which is the matrix product `Z Bᵀ` in this layout.
#[derive(Clone, PartialEq)]
pub struct BlockVector {
    data: Matrix,
}

/// Element of `H^d` (lifted iterate).
pub type LiftedVector = BlockVector;
/// Element of `H^n` (primal-dual variable).
pub type DualVector = BlockVector;

impl BlockVector {
    pub fn zeros(m: usize, k: usize) -> Self {
        BlockVector {
            data: Matrix::zeros(m, k),
        }
    }

    /// Every block equal to `v`.
    pub fn repeat(v: &Vector, k: usize) -> Self {
        BlockVector {
            data: Matrix::from_fn(v.len(), k, |i, _| v[i]),
        }
    }

    pub fn from_blocks(blocks: &[Vector]) -> Result<Self> {
        let m = blocks.first().map_or(0, |b| b.len());
        if let Some(b) = blocks.iter().find(|b| b.len() != m) {
            return Err(Error::dims("block length", m, b.len()));
        }
        if blocks.iter().any(|b| b.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("block vector"));
        }
        if blocks.is_empty() {
            return Ok(BlockVector::zeros(0, 0));
        }
        Ok(BlockVector {
            data: Matrix::from_columns(blocks),
        })
    }

    /// Wraps an `m × k` matrix whose columns are the blocks.
    pub fn from_matrix(data: Matrix) -> Self {
        BlockVector { data }
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }

    /// Dimension `m` of each block.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of blocks `k`.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn block(&self, j: usize) -> Vector {
        self.data.column(j).into_owned()
    }

    pub fn set_block(&mut self, j: usize, v: &Vector) {
        self.data.set_column(j, v);
    }

    pub fn blocks(&self) -> Vec<Vector> {
        (0..self.len()).map(|j| self.block(j)).collect()
    }

    /// Applies the coefficient matrix `b` (`r × k`) blockwise.
    pub fn apply(&self, b: &Matrix) -> Result<BlockVector> {
        if b.ncols() != self.len() {
            return Err(Error::dims("coefficient matrix columns", self.len(), b.ncols()));
        }
        Ok(BlockVector {
            data: &self.data * b.transpose(),
        })
    }

    /// Euclidean norm over all blocks.
    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    /// Squared weighted norm `Σ h_ij ⟨z_i, z_j⟩`.
    pub fn weighted_norm_sq(&self, h: &Matrix) -> f64 {
        crate::linalg::block_inner(h, &self.data, &self.data)
    }

    pub fn sub(&self, other: &BlockVector) -> BlockVector {
        BlockVector {
            data: &self.data - &other.data,
        }
    }

    pub fn add(&self, other: &BlockVector) -> BlockVector {
        BlockVector {
            data: &self.data + &other.data,
        }
    }

    pub fn max_abs_diff(&self, other: &BlockVector) -> f64 {
        (&self.data - &other.data).amax()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for BlockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.blocks().iter().map(|b| b.as_slice().to_vec())).finish()
    }
}
