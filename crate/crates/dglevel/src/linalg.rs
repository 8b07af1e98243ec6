//! Dense exact matrices: rank, kernels, row reduction and linear solves.
//!
//! Over the rationals the forward pass is fraction-free (Bareiss); only the
//! `rank` echelon rows are ever turned back into fractions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::field::{denominator_lcm, FieldTag, Scalar};

/// A dense matrix acting on column vectors: `rows` is the target dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    field: FieldTag,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(field: FieldTag, rows: usize, cols: usize) -> Matrix {
        Matrix { field, rows, cols, data: vec![field.zero(); rows * cols] }
    }

    pub fn identity(field: FieldTag, n: usize) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_rows(field: FieldTag, rows: Vec<Vec<Scalar>>) -> Result<Matrix> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch("ragged matrix rows".into()));
            }
            for x in row {
                if x.field() != field {
                    return Err(Error::FieldMismatch(field, x.field()));
                }
                data.push(x);
            }
        }
        Ok(Matrix { field, rows: r, cols: c, data })
    }

    /// Builds a matrix from small integers, handy in tests and examples.
    pub fn from_i64(field: FieldTag, rows: &[&[i64]]) -> Matrix {
        let v = rows.iter().map(|r| r.iter().map(|&x| field.from_i64(x)).collect()).collect();
        Matrix::from_rows(field, v).expect("rectangular input")
    }

    /// Builds a matrix whose columns are the given vectors of length `rows`.
    pub fn from_columns(field: FieldTag, rows: usize, cols: &[Vec<Scalar>]) -> Matrix {
        let mut m = Matrix::zeros(field, rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        m
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Scalar) {
        self.data[i * self.cols + j] = x;
    }

    pub fn add_to(&mut self, i: usize, j: usize, x: &Scalar) {
        let k = i * self.cols + j;
        self.data[k] = &self.data[k] + x;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// `self * other`.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.field != other.field {
            return Err(Error::FieldMismatch(self.field, other.field));
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.add_to(i, j, &(a * b));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.cols, "vector length does not match matrix");
        let mut out = vec![self.field.zero(); self.rows];
        for (j, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                let a = self.get(i, j);
                if !a.is_zero() {
                    *o = &*o + &(a * x);
                }
            }
        }
        out
    }

    pub fn scale(&self, s: &Scalar) -> Matrix {
        Matrix { field: self.field, rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch("matrix sum".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.checked_add(b)).collect::<Result<_>>()?;
        Ok(Matrix { field: self.field, rows: self.rows, cols: self.cols, data })
    }

    pub fn rank(&self) -> usize {
        rref(self).pivots.len()
    }

    /// Permutes rows and columns: entry `(i, j)` moves to `(row_perm[i], col_perm[j])`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.field, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(row_perm[i], col_perm[j], self.get(i, j).clone());
            }
        }
        m
    }

    fn check_uniform(&self) -> Result<()> {
        for x in &self.data {
            if x.field() != self.field {
                return Err(Error::FieldMismatch(self.field, x.field()));
            }
        }
        Ok(())
    }
}

/// Reduced row echelon form: the nonzero rows and their pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub rows: Vec<Vec<Scalar>>,
    pub pivots: Vec<usize>,
    pub cols: usize,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn kernel(&self, field: FieldTag) -> Vec<Vec<Scalar>> {
        let mut is_pivot = vec![None; self.cols];
        for (r, &c) in self.pivots.iter().enumerate() {
            is_pivot[c] = Some(r);
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| is_pivot[c].is_none()) {
            let mut v = vec![field.zero(); self.cols];
            v[free] = field.one();
            for (r, &c) in self.pivots.iter().enumerate() {
                v[c] = -&self.rows[r][free];
            }
            basis.push(v);
        }
        basis
    }
}

pub fn rref(m: &Matrix) -> Rref {
    match m.field {
        FieldTag::Prime(p) => rref_mod_p(m, p as u64),
        FieldTag::Rationals => rref_rational(m),
    }
}

fn rref_mod_p(m: &Matrix, p: u64) -> Rref {
    let mut a: Vec<Vec<u64>> = (0..m.rows)
        .map(|i| {
            m.row(i)
                .iter()
                .map(|x| match x {
                    Scalar::Fp { v, .. } => *v as u64,
                    Scalar::Q(_) => unreachable!("rational entry in a prime-field matrix"),
                })
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(piv) = (r..m.rows).find(|&i| a[i][c] != 0) else { continue };
        a.swap(r, piv);
        let inv = crate::field::pow_mod(a[r][c], p - 2, p);
        for x in a[r].iter_mut() {
            *x = *x * inv % p;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || row[c] == 0 {
                continue;
            }
            let f = row[c];
            for (x, y) in row.iter_mut().zip(&pivot_row).skip(c) {
                *x = (*x + p - f * y % p) % p;
            }
        }
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    let rows = a.into_iter().map(|row| row.into_iter().map(|v| Scalar::Fp { p: p as u32, v: v as u32 }).collect()).collect();
    Rref { rows, pivots, cols: m.cols }
}

/// Fraction-free forward elimination on an integer matrix. Returns the echelon
/// rows and pivot columns; every division is exact.
fn bareiss(mut a: Vec<Vec<BigInt>>, cols: usize) -> (Vec<Vec<BigInt>>, Vec<usize>) {
    let nrows = a.len();
    let mut prev = BigInt::one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == nrows {
            break;
        }
        let Some(piv) = (r..nrows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, piv);
        let (top, rest) = a.split_at_mut(r + 1);
        let prow = &top[r];
        for row in rest.iter_mut() {
            if row[c].is_zero() {
                for j in c + 1..cols {
                    if !row[j].is_zero() {
                        row[j] = &row[j] * &prow[c] / &prev;
                    }
                }
                continue;
            }
            for j in c + 1..cols {
                row[j] = (&prow[c] * &row[j] - &row[c] * &prow[j]) / &prev;
            }
            row[c] = BigInt::zero();
        }
        prev = prow[c].clone();
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    (a, pivots)
}

fn rref_rational(m: &Matrix) -> Rref {
    let ints: Vec<Vec<BigInt>> = (0..m.rows)
        .map(|i| {
            let row: Vec<BigRational> = m
                .row(i)
                .iter()
                .map(|x| match x {
                    Scalar::Q(r) => r.clone(),
                    Scalar::Fp { .. } => unreachable!("residue in a rational matrix"),
                })
                .collect();
            let l = denominator_lcm(&row);
            row.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    let (ech, pivots) = bareiss(ints, m.cols);
    let mut rows: Vec<Vec<BigRational>> =
        ech.into_iter().map(|r| r.into_iter().map(BigRational::from_integer).collect()).collect();
    for k in (0..rows.len()).rev() {
        let c = pivots[k];
        let inv = rows[k][c].recip();
        for x in rows[k].iter_mut().skip(c) {
            *x = &*x * &inv;
        }
        let pivot_row = rows[k].clone();
        for row in rows.iter_mut().take(k) {
            if row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row).skip(c) {
                *x = &*x - &f * y;
            }
        }
    }
    let rows = rows.into_iter().map(|r| r.into_iter().map(Scalar::Q).collect()).collect();
    Rref { rows, pivots, cols: m.cols }
}

/// Rank and a basis of the kernel (column-vector convention).
pub fn rank_and_kernel(m: &Matrix) -> Result<(usize, Vec<Vec<Scalar>>)> {
    m.check_uniform()?;
    let r = rref(m);
    Ok((r.rank(), r.kernel(m.field)))
}

/// Some `x` with `m x = b`, if one exists.
pub fn solve(m: &Matrix, b: &[Scalar]) -> Option<Vec<Scalar>> {
    let mut aug = Matrix::zeros(m.field, m.rows, m.cols + 1);
    for i in 0..m.rows {
        for j in 0..m.cols {
            aug.set(i, j, m.get(i, j).clone());
        }
        aug.set(i, m.cols, b[i].clone());
    }
    let r = rref(&aug);
    if r.pivots.last() == Some(&m.cols) {
        return None;
    }
    let mut x = vec![m.field.zero(); m.cols];
    for (k, &c) in r.pivots.iter().enumerate() {
        x[c] = r.rows[k][m.cols].clone();
    }
    Some(x)
}

/// An incrementally grown subspace kept in reduced echelon form.
#[derive(Clone, Debug)]
pub struct Span {
    field: FieldTag,
    len: usize,
    rows: Vec<(usize, Vec<Scalar>)>,
}

impl Span {
    pub fn new(field: FieldTag, len: usize) -> Span {
        Span { field, len, rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the current basis.
    pub fn reduce(&self, v: &[Scalar]) -> Vec<Scalar> {
        let mut w = v.to_vec();
        for (c, row) in &self.rows {
            if w[*c].is_zero() {
                continue;
            }
            let f = w[*c].clone();
            for (x, y) in w.iter_mut().zip(row) {
                if !y.is_zero() {
                    *x = &*x - &(&f * y);
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[Scalar]) -> bool {
        self.reduce(v).iter().all(Scalar::is_zero)
    }

    /// Adds `v`; returns whether the span grew.
    pub fn insert(&mut self, v: &[Scalar]) -> bool {
        assert_eq!(v.len(), self.len);
        let w = self.reduce(v);
        let Some(c) = w.iter().position(|x| !x.is_zero()) else { return false };
        let inv = w[c].inv().expect("nonzero pivot");
        let w: Vec<Scalar> = w.iter().map(|x| x * &inv).collect();
        for (_, row) in self.rows.iter_mut() {
            if row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&w) {
                if !y.is_zero() {
                    *x = &*x - &(&f * y);
                }
            }
        }
        self.rows.push((c, w));
        true
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }
}

pub fn zero_vec(field: FieldTag, n: usize) -> Vec<Scalar> {
    vec![field.zero(); n]
}

pub fn axpy(y: &mut [Scalar], a: &Scalar, x: &[Scalar]) {
    if a.is_zero() {
        return;
    }
    for (yi, xi) in y.iter_mut().zip(x) {
        if !xi.is_zero() {
            *yi = &*yi + &(a * xi);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_full_rank() {
        let q = FieldTag::Rationals;
        let (r, k) = rank_and_kernel(&Matrix::identity(q, 2)).unwrap();
        assert_eq!((r, k.len()), (2, 0));
    }

    #[test]
    fn all_ones_mod_two() {
        let f2 = FieldTag::Prime(2);
        let (r, k) = rank_and_kernel(&Matrix::from_i64(f2, &[&[1, 1], &[1, 1]])).unwrap();
        assert_eq!(r, 1);
        assert_eq!(k, vec![vec![f2.one(), f2.one()]]);
    }

    #[test]
    fn proportional_rows() {
        let q = FieldTag::Rationals;
        let (r, k) = rank_and_kernel(&Matrix::from_i64(q, &[&[2, 4], &[1, 2]])).unwrap();
        assert_eq!(r, 1);
        assert_eq!(k, vec![vec![q.from_i64(-2), q.one()]]);
    }

    #[test]
    fn solve_finds_preimage() {
        let q = FieldTag::Rationals;
        let m = Matrix::from_i64(q, &[&[1, 2, 0], &[0, 1, 3]]);
        let b = vec![q.from_i64(5), q.from_i64(7)];
        let x = solve(&m, &b).unwrap();
        assert_eq!(m.apply(&x), b);
        let z = Matrix::from_i64(q, &[&[1, 1], &[1, 1]]);
        assert!(solve(&z, &[q.one(), q.zero()]).is_none());
    }

    #[test]
    fn span_tracks_dimension() {
        let f3 = FieldTag::Prime(3);
        let mut s = Span::new(f3, 3);
        assert!(s.insert(&[f3.one(), f3.one(), f3.zero()]));
        assert!(s.insert(&[f3.zero(), f3.one(), f3.one()]));
        assert!(!s.insert(&[f3.one(), f3.from_i64(2), f3.one()]));
        assert_eq!(s.dim(), 2);
    }
}
