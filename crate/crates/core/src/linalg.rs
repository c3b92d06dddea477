//! Dense matrices over a [`Field`], plus two incremental echelon forms used
//! by the jet and secant rank computations.


use crate::error::{Error, Result};
use crate::field::Field;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Clone> Matrix<E> {
    pub fn filled(rows: usize, cols: usize, value: E) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from rows of equal length.
    pub fn from_rows(rows: Vec<Vec<E>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged matrix rows".into()));
        }
        let n = rows.len();
        Ok(Matrix {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &E {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: E) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [E] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<T>(&self, f: impl FnMut(&E) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

/// Reduces `m` in place to row echelon form and returns the pivot columns.
/// The returned flag is true if an odd number of row swaps was made.
fn echelon<F: Field>(f: &F, m: &mut Matrix<F::Elem>) -> (Vec<usize>, bool) {
    let mut pivots = Vec::new();
    let mut odd = false;
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| !f.is_zero(m.get(i, c))) else {
            continue;
        };
        if p != r {
            m.swap_rows(p, r);
            odd = !odd;
        }
        let inv = f.inv(m.get(r, c)).expect("pivot is nonzero");
        for i in r + 1..m.rows {
            if f.is_zero(m.get(i, c)) {
                continue;
            }
            let factor = f.mul(m.get(i, c), &inv);
            for j in c..m.cols {
                let v = f.sub_mul(m.get(i, j), &factor, m.get(r, j));
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    (pivots, odd)
}

/// Rank by Gaussian elimination.
pub fn rank<F: Field>(f: &F, m: &Matrix<F::Elem>) -> usize {
    let mut work = m.clone();
    echelon(f, &mut work).0.len()
}

pub fn determinant<F: Field>(f: &F, m: &Matrix<F::Elem>) -> Result<F::Elem> {
    if m.rows != m.cols {
        return Err(Error::InvalidParameter(format!(
            "determinant of a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let mut work = m.clone();
    let (pivots, odd) = echelon(f, &mut work);
    if pivots.len() < m.rows {
        return Ok(f.zero());
    }
    let mut det = f.one();
    for i in 0..m.rows {
        det = f.mul(&det, work.get(i, i));
    }
    Ok(if odd { f.neg(&det) } else { det })
}

/// Solves the square system `a x = b`; singular systems are an error.
pub fn solve<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &[F::Elem]) -> Result<Vec<F::Elem>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::InvalidParameter(format!(
            "solve needs a square system, got {}x{} with {} right-hand sides",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    let mut aug = Matrix::from_fn(n, n + 1, |i, j| {
        if j < n {
            a.get(i, j).clone()
        } else {
            b[i].clone()
        }
    });
    let (pivots, _) = echelon(f, &mut aug);
    if pivots.len() < n || pivots.last() == Some(&n) {
        return Err(Error::Singular(format!("{n}x{n} system has rank {}", pivots.len().min(n))));
    }
    let mut x = vec![f.zero(); n];
    for i in (0..n).rev() {
        let mut acc = aug.get(i, n).clone();
        for j in i + 1..n {
            acc = f.sub_mul(&acc, aug.get(i, j), &x[j]);
        }
        x[i] = f.mul(&acc, &f.inv(aug.get(i, i)).expect("pivot is nonzero"));
    }
    Ok(x)
}

/// Some solution of a possibly rectangular system `a x = b` (free
/// variables set to zero), or `None` when it is inconsistent.
pub fn solve_any<F: Field>(f: &F, a: &Matrix<F::Elem>, b: &[F::Elem]) -> Result<Option<Vec<F::Elem>>> {
    if b.len() != a.rows {
        return Err(Error::InvalidParameter(format!(
            "{} right-hand sides for {} equations",
            b.len(),
            a.rows
        )));
    }
    let n = a.cols;
    let mut aug = Matrix::from_fn(a.rows, n + 1, |i, j| {
        if j < n {
            a.get(i, j).clone()
        } else {
            b[i].clone()
        }
    });
    let (pivots, _) = echelon(f, &mut aug);
    if pivots.last() == Some(&n) {
        return Ok(None);
    }
    let mut x = vec![f.zero(); n];
    for (r, &c) in pivots.iter().enumerate().rev() {
        let mut acc = aug.get(r, n).clone();
        for j in c + 1..n {
            acc = f.sub_mul(&acc, aug.get(r, j), &x[j]);
        }
        x[c] = f.mul(&acc, &f.inv(aug.get(r, c)).expect("pivot is nonzero"));
    }
    Ok(Some(x))
}

pub fn mat_vec<F: Field>(f: &F, a: &Matrix<F::Elem>, x: &[F::Elem]) -> Vec<F::Elem> {
    (0..a.rows)
        .map(|i| {
            a.row(i)
                .iter()
                .zip(x)
                .fold(f.zero(), |acc, (u, v)| f.add(&acc, &f.mul(u, v)))
        })
        .collect()
}

/// Dense row space built one row at a time.
///
/// Stored rows are normalized (pivot entry one) and each new row is reduced
/// against the stored ones in insertion order, which is enough since a
/// stored row vanishes at every earlier pivot.
#[derive(Clone, Debug)]
pub struct EchelonBasis<F: Field> {
    field: F,
    cols: usize,
    rows: Vec<(usize, Vec<F::Elem>)>,
}

impl<F: Field + Clone> EchelonBasis<F> {
    pub fn new(field: F, cols: usize) -> Self {
        EchelonBasis {
            field,
            cols,
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.cols
    }

    /// Adds a row; returns true if it increased the rank.
    pub fn insert(&mut self, mut row: Vec<F::Elem>) -> bool {
        assert_eq!(row.len(), self.cols, "row length");
        let f = &self.field;
        for (p, basis_row) in &self.rows {
            if f.is_zero(&row[*p]) {
                continue;
            }
            let factor = row[*p].clone();
            for (x, y) in row.iter_mut().zip(basis_row).skip(*p) {
                if !f.is_zero(y) {
                    *x = f.sub_mul(x, &factor, y);
                }
            }
        }
        let Some(p) = row.iter().position(|x| !f.is_zero(x)) else {
            return false;
        };
        let inv = f.inv(&row[p]).expect("nonzero");
        for x in row.iter_mut().skip(p) {
            *x = f.mul(x, &inv);
        }
        self.rows.push((p, row));
        true
    }
}

/// Sparse row space keyed by leading column. Rows are `(column, value)`
/// lists sorted by column.
#[derive(Clone, Debug)]
pub struct SparseEchelon<F: Field> {
    field: F,
    /// indexed by leading column, grown on demand; rows are not normalized,
    /// the inverse of the leading entry is cached on first use
    rows: Vec<Option<Pivot<F::Elem>>>,
    rank: usize,
}

#[derive(Clone, Debug)]
struct Pivot<E> {
    entries: Vec<(usize, E)>,
    inv_lead: Option<E>,
}

impl<F: Field + Clone> SparseEchelon<F> {
    pub fn new(field: F) -> Self {
        SparseEchelon {
            field,
            rows: Vec::new(),
            rank: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Adds a row (entries sorted by column, no zeros); returns true if the
    /// rank increased.
    pub fn insert(&mut self, mut row: Vec<(usize, F::Elem)>) -> bool {
        let f = &self.field;
        loop {
            let Some((lead, lead_val)) = row.first().cloned() else {
                return false;
            };
            if self.rows.len() <= lead {
                self.rows.resize(lead + 1, None);
            }
            let Some(pivot) = self.rows[lead].as_mut() else {
                self.rows[lead] = Some(Pivot {
                    entries: row,
                    inv_lead: None,
                });
                self.rank += 1;
                return true;
            };
            let inv = pivot
                .inv_lead
                .get_or_insert_with(|| f.inv(&pivot.entries[0].1).expect("nonzero"));
            let c = f.mul(&lead_val, inv);
            let basis_row = &pivot.entries;
            // row -= c * basis_row
            let mut merged = Vec::with_capacity(row.len() + basis_row.len());
            let (mut i, mut j) = (0, 0);
            while i < row.len() || j < basis_row.len() {
                let ci = row.get(i).map_or(usize::MAX, |e| e.0);
                let cj = basis_row.get(j).map_or(usize::MAX, |e| e.0);
                if ci < cj {
                    merged.push(row[i].clone());
                    i += 1;
                } else if cj < ci {
                    merged.push((cj, f.neg(&f.mul(&c, &basis_row[j].1))));
                    j += 1;
                } else {
                    let v = f.sub_mul(&row[i].1, &c, &basis_row[j].1);
                    if !f.is_zero(&v) {
                        merged.push((ci, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
            row = merged;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Exact, PrimeField};
    use num_rational::BigRational;

    type Q = Exact<BigRational>;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    fn qmat(rows: &[&[i64]]) -> Matrix<BigRational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect()).unwrap()
    }

    #[test]
    fn rank_and_determinant() {
        let f = Q::new();
        let m = qmat(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        assert_eq!(rank(&f, &m), 2);
        assert_eq!(determinant(&f, &m).unwrap(), q(0));
        let m = qmat(&[&[0, 1], &[1, 0]]);
        assert_eq!(determinant(&f, &m).unwrap(), q(-1));
        let m = qmat(&[&[2, 0, 1], &[1, 3, 2], &[1, 1, 1]]);
        // 2(3-2) - 0 + 1(1-3) = 0
        assert_eq!(determinant(&f, &m).unwrap(), q(0));
        let m = qmat(&[&[2, 0, 1], &[1, 3, 2], &[1, 1, 2]]);
        assert_eq!(determinant(&f, &m).unwrap(), q(6));
    }

    #[test]
    fn rectangular_systems() {
        let f = Q::new();
        let a = qmat(&[&[1, 1, 0], &[0, 1, 1]]);
        let x = solve_any(&f, &a, &[q(2), q(3)]).unwrap().unwrap();
        assert_eq!(mat_vec(&f, &a, &x), vec![q(2), q(3)]);
        let a = qmat(&[&[1, 2], &[2, 4], &[0, 1]]);
        assert_eq!(solve_any(&f, &a, &[q(1), q(3), q(0)]).unwrap(), None);
        let x = solve_any(&f, &a, &[q(1), q(2), q(5)]).unwrap().unwrap();
        assert_eq!(x, vec![q(-9), q(5)]);
    }

    #[test]
    fn solve_square_system() {
        let f = Q::new();
        let a = qmat(&[&[2, 1], &[1, 3]]);
        let x = solve(&f, &a, &[q(3), q(5)]).unwrap();
        assert_eq!(mat_vec(&f, &a, &x), vec![q(3), q(5)]);
        let singular = qmat(&[&[1, 2], &[2, 4]]);
        assert!(matches!(solve(&f, &singular, &[q(1), q(1)]), Err(Error::Singular(_))));
    }

    #[test]
    fn incremental_forms_agree_with_batch_rank() {
        let f = PrimeField::new(101).unwrap();
        let rows: Vec<Vec<u64>> = vec![
            vec![1, 2, 0, 0, 5],
            vec![0, 0, 3, 0, 0],
            vec![2, 4, 3, 0, 10],
            vec![0, 0, 0, 0, 0],
            vec![0, 1, 0, 7, 0],
            vec![1, 3, 0, 7, 5],
        ];
        let m = Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| f.from_u64(v)).collect())
                .collect(),
        )
        .unwrap();
        let mut dense = EchelonBasis::new(f, 5);
        let mut sparse = SparseEchelon::new(f);
        for i in 0..m.nrows() {
            dense.insert(m.row(i).to_vec());
            let sp: Vec<_> = m
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, v)| !f.is_zero(v))
                .map(|(c, v)| (c, *v))
                .collect();
            sparse.insert(sp);
        }
        assert_eq!(rank(&f, &m), 3);
        assert_eq!(dense.rank(), 3);
        assert_eq!(sparse.rank(), 3);
    }
}
