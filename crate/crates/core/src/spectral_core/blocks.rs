use std::collections::BTreeMap;

use super::dense::{spectral_norm, sym_extreme_eigs};
use crate::error::{invalid, Result};
use crate::scalar::{CMat, Real};

/// Square block matrix stored by nonzero block position.
#[derive(Clone, Debug)]
pub struct BlockMatrix<T: Real> {
    pub nblocks: usize,
    pub bsize: usize,
    pub blocks: BTreeMap<(usize, usize), CMat<T>>,
}

impl<T: Real> BlockMatrix<T> {
    pub fn new(nblocks: usize, bsize: usize) -> Self {
        Self { nblocks, bsize, blocks: BTreeMap::new() }
    }

    pub fn insert(&mut self, i: usize, j: usize, m: CMat<T>) -> Result<()> {
        if i >= self.nblocks || j >= self.nblocks {
            return invalid(format!("block ({i},{j}) outside {}x{} grid", self.nblocks, self.nblocks));
        }
        if m.nrows() != self.bsize || m.ncols() != self.bsize {
            return invalid(format!("block ({i},{j}) has shape {}x{}, expected {}", m.nrows(), m.ncols(), self.bsize));
        }
        self.blocks.insert((i, j), m);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.nblocks * self.bsize
    }

    pub fn to_dense(&self) -> CMat<T> {
        let n = self.dim();
        let b = self.bsize;
        let mut out = CMat::<T>::zeros(n, n);
        for (&(i, j), m) in &self.blocks {
            out.view_mut((i * b, j * b), (b, b)).copy_from(m);
        }
        out
    }
}

/// `sum_k max_{j-i=k} ||A_ij||_2`: an upper bound on `||A||_2` obtained by
/// splitting into block diagonals.
pub fn block_norm_bound<T: Real>(a: &BlockMatrix<T>) -> T {
    let mut per_diag: BTreeMap<isize, T> = BTreeMap::new();
    for (&(i, j), m) in &a.blocks {
        let k = j as isize - i as isize;
        let nrm = spectral_norm(m);
        let e = per_diag.entry(k).or_insert_with(T::zero);
        if nrm > *e {
            *e = nrm;
        }
    }
    per_diag.values().fold(T::zero(), |s, &x| s + x)
}

/// `min_j lambda_min(sym P_j) - max_j ||Q_j||_2`, a lower bound on the
/// smallest eigenvalue of the Hermitian part of the bidiagonal block system.
pub fn weyl_gap_bound<T: Real>(ps: &[CMat<T>], qs: &[CMat<T>]) -> Result<T> {
    if ps.is_empty() {
        return invalid("weyl_gap_bound: no diagonal blocks");
    }
    let mut lo = T::max_value().unwrap();
    for p in ps {
        let (l, _) = sym_extreme_eigs(p)?;
        if l < lo {
            lo = l;
        }
    }
    let qmax = qs.iter().map(spectral_norm).fold(T::zero(), |m, x| if x > m { x } else { m });
    Ok(lo - qmax)
}
