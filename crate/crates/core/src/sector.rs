//! Operator matrices on lists of basis states.

use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::operator::{act_string, Factor, OperatorExpr};

/// Real sparse matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SectorMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(pos) => self.vals[self.row_ptr[r] + pos],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// `y = A x`; rows are independent so the result does not depend on threading.
    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let out: Vec<f64> =
            (0..self.dim).into_par_iter().map(|r| self.row(r).fold(0.0, |acc, (c, v)| acc + v * x[c])).collect();
        DVector::from_vec(out)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|r| self.row(r).all(|(c, v)| (v - self.get(c, r)).abs() <= tol))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, r)).collect()
    }
}

/// `<basis_r| A |basis_c>` for every pair. The basis must be sorted ascending.
pub fn matrix_in_sector(op: &OperatorExpr, basis: &[FockState]) -> Result<SectorMatrix> {
    if basis.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidLattice("sector basis must be strictly ascending".into()));
    }
    let fixed_number = basis.windows(2).all(|w| w[0].particle_count() == w[1].particle_count());
    if fixed_number && !op.conserves_number() {
        return Err(Error::NotNumberConserving);
    }
    let terms: Vec<(&[Factor], f64)> = op.terms().map(|(fs, c)| (fs, c.to_f64().unwrap_or(f64::NAN))).collect();

    let columns: Vec<Vec<(usize, f64)>> = basis
        .par_iter()
        .map(|&s| {
            let mut col: Vec<(usize, f64)> = Vec::new();
            for (fs, c) in &terms {
                if let Some((sign, t)) = act_string(fs, s) {
                    if let Ok(r) = basis.binary_search(&t) {
                        col.push((r, c * f64::from(sign)));
                    }
                }
            }
            col.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for (r, v) in col {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => merged.push((r, v)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            merged
        })
        .collect();

    let dim = basis.len();
    let mut counts = vec![0usize; dim + 1];
    for col in &columns {
        for &(r, _) in col {
            counts[r + 1] += 1;
        }
    }
    for i in 0..dim {
        counts[i + 1] += counts[i];
    }
    let row_ptr = counts.clone();
    let mut fill = counts;
    let nnz = row_ptr[dim];
    let mut cols = vec![0usize; nnz];
    let mut vals = vec![0f64; nnz];
    for (c, col) in columns.iter().enumerate() {
        for &(r, v) in col {
            let slot = fill[r];
            cols[slot] = c;
            vals[slot] = v;
            fill[r] += 1;
        }
    }
    Ok(SectorMatrix { dim, row_ptr, cols, vals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};
    use crate::fock::{sector_basis, DEFAULT_BASIS_CAP};
    use crate::lattice::{KVector, LatticeConfig, ModeTable};
    use crate::model::{
        free_hamiltonian, number_operator, pairing_interaction, Formfactor, FormfactorMode, FormfactorValues,
    };
    use crate::operator::{create, OperatorExpr};

    fn single_pair() -> ModeTable {
        let cfg = LatticeConfig::new(int(1), ratio(1, 2)).with_support(vec![KVector::new(0, 0, 1)]);
        ModeTable::build(&cfg).unwrap()
    }

    #[test]
    fn pairing_block_on_single_pair() {
        let t = single_pair();
        let ff = FormfactorValues::resolve(&t, &Formfactor::Unit, FormfactorMode::Symmetrize).unwrap();
        let w = pairing_interaction(&t, &int(1), &ff);
        let basis = sector_basis(4, 2, DEFAULT_BASIS_CAP).unwrap();
        let m = matrix_in_sector(&w, &basis).unwrap();
        let idx = |s: &str| basis.binary_search(&FockState::from_bitstring(s).unwrap()).unwrap();
        let (a, b) = (idx("1001"), idx("0110"));
        // hand-evaluated: W|1001> = |1001> - |0110>
        assert_eq!(m.get(a, a), 1.0);
        assert_eq!(m.get(b, b), 1.0);
        assert_eq!(m.get(a, b), -1.0);
        assert_eq!(m.get(b, a), -1.0);
        assert_eq!(m.nnz(), 4);
        assert!(m.is_symmetric(0.0));
    }

    #[test]
    fn free_hamiltonian_matrix_is_diagonal() {
        let t = single_pair();
        let basis = sector_basis(4, 2, DEFAULT_BASIS_CAP).unwrap();
        let m = matrix_in_sector(&free_hamiltonian(&t), &basis).unwrap();
        assert_eq!(m.nnz(), 6);
        assert!(m.diagonal().iter().all(|&d| d == 2.0));
        let n = matrix_in_sector(&number_operator(&t), &basis).unwrap();
        assert_eq!(n.to_dense(), DMatrix::identity(6, 6) * 2.0);
    }

    #[test]
    fn rejects_number_changing_operator() {
        let basis = sector_basis(4, 2, DEFAULT_BASIS_CAP).unwrap();
        let op = OperatorExpr::factor(create(0));
        assert!(matches!(matrix_in_sector(&op, &basis), Err(Error::NotNumberConserving)));
    }
}
