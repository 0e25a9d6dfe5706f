//! Exact linear algebra over Z, Q, Z/p and Z/p^N.

mod fp;
mod int;
mod modp;
mod rat;

pub use fp::{kernel_image_mod_p, FpMatrix, KernelImage};
pub use int::IntMatrix;
pub use modp::{stable_fitting, stable_fitting_on, FittingSplit, ModMatrix, PModule};
pub use rat::{charpoly_rational, CharPolyReport, QMatrix};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    SingularMatrix,
}

/// Result of a Smith normal form computation: `u * m * v = D` with `D`
/// diagonal (`diag`, length `min(rows, cols)`), each entry dividing the next.
#[derive(Clone, Debug)]
pub struct SnfResult<M: SmithNormalForm> {
    pub u: M,
    pub u_inv: M,
    pub v: M,
    pub v_inv: M,
    pub diag: alloc::vec::Vec<M::Elem>,
}

pub trait SmithNormalForm: Sized {
    type Elem;
    fn smith_normal_form(&self) -> SnfResult<Self>;
}

pub fn smith_normal_form<M: SmithNormalForm>(m: &M) -> SnfResult<M> {
    m.smith_normal_form()
}

impl SnfResult<IntMatrix> {
    pub fn d_matrix(&self, rows: usize, cols: usize) -> IntMatrix {
        let mut d = IntMatrix::zeros(rows, cols);
        for (i, x) in self.diag.iter().enumerate() {
            d[(i, i)] = x.clone();
        }
        d
    }

    /// Number of nonzero diagonal entries.
    pub fn rank(&self) -> usize {
        use num_traits::Zero;
        self.diag.iter().filter(|d| !d.is_zero()).count()
    }
}
