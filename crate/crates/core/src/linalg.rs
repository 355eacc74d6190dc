//! Dense exact linear algebra over [`Scalar`].

use std::fmt;

use num_traits::{One, Zero};

use crate::scalar::{dot, format_scalar, Scalar, Vector};

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Scalar::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::one();
        }
        m
    }

    /// Builds a matrix from row vectors. All rows must have length `cols`.
    pub fn from_rows(cols: usize, rows: &[Vector]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r.iter().cloned());
        }
        Matrix { rows: rows.len(), cols, data }
    }

    pub fn from_cols(rows: usize, cols: &[Vector]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, x) in c.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    /// Outer product `col * row^T`.
    pub fn outer(col: &[Scalar], row: &[Scalar]) -> Self {
        let mut m = Self::zeros(col.len(), row.len());
        for (i, a) in col.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                m[(i, j)] = a * b;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn row_vectors(&self) -> Vec<Vector> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[Scalar]) -> Vector {
        assert_eq!(x.len(), self.cols, "dimension mismatch in matrix-vector product");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Covector-matrix product `y^T M`.
    pub fn covec_mul(&self, y: &[Scalar]) -> Vector {
        assert_eq!(y.len(), self.rows, "dimension mismatch in covector-matrix product");
        let mut out = vec![Scalar::zero(); self.cols];
        for (i, yi) in y.iter().enumerate() {
            if yi.is_zero() {
                continue;
            }
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                if !m.is_zero() {
                    *o += yi * m;
                }
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matrix product");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    /// Kronecker product, consistent with [`crate::scalar::kron`] on vectors.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = &self[(i, j)];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * &other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, k: &Scalar) -> Matrix {
        let data = self.data.iter().map(|a| a * k).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(crate::scalar::to_f64).collect())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Scalar;

    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(format_scalar).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Reduced row echelon form. Returns the reduced rows (zero rows dropped) and
/// the pivot column of each returned row.
pub fn rref(cols: usize, rows: &[Vector]) -> (Vec<Vector>, Vec<usize>) {
    let mut m: Vec<Vector> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

pub fn rank(cols: usize, rows: &[Vector]) -> usize {
    rref(cols, rows).1.len()
}

/// Basis of `{x : row . x = 0 for every row}`.
pub fn nullspace(cols: usize, rows: &[Vector]) -> Vec<Vector> {
    let (reduced, pivots) = rref(cols, rows);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Scalar::zero(); cols];
            v[f] = Scalar::one();
            for (row, &p) in reduced.iter().zip(&pivots) {
                v[p] = -row[f].clone();
            }
            v
        })
        .collect()
}

/// A maximal linearly independent subset of `vectors`, returned by index in
/// input order.
pub fn independent_subset(dim: usize, vectors: &[Vector]) -> Vec<usize> {
    let mut chosen = Vec::new();
    let mut basis: Vec<Vector> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        basis.push(v.clone());
        if rank(dim, &basis) == basis.len() {
            chosen.push(i);
        } else {
            basis.pop();
        }
    }
    chosen
}

/// Basis of the column space of `m`, drawn from its columns.
pub fn column_basis(m: &Matrix) -> Vec<Vector> {
    let cols: Vec<Vector> = (0..m.cols()).map(|j| m.column(j)).collect();
    independent_subset(m.rows(), &cols).into_iter().map(|j| cols[j].clone()).collect()
}

pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    if n != m.cols() {
        return None;
    }
    let augmented: Vec<Vector> = (0..n)
        .map(|i| {
            let mut row = m.row(i).to_vec();
            row.extend((0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }));
            row
        })
        .collect();
    let (reduced, pivots) = rref(2 * n, &augmented);
    if pivots.len() < n || pivots[n - 1] >= n {
        return None;
    }
    let rows: Vec<Vector> = reduced.iter().map(|r| r[n..].to_vec()).collect();
    Some(Matrix::from_rows(n, &rows))
}

/// Some solution of `rows . x = rhs`, or `None` when inconsistent.
pub fn solve(cols: usize, rows: &[Vector], rhs: &[Scalar]) -> Option<Vector> {
    assert_eq!(rows.len(), rhs.len());
    let augmented: Vec<Vector> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let (reduced, pivots) = rref(cols + 1, &augmented);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![Scalar::zero(); cols];
    for (row, &p) in reduced.iter().zip(&pivots) {
        x[p] = row[cols].clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat, vector};

    #[test]
    fn inverse_round_trips() {
        let m = Matrix::from_rows(2, &[vector(&[2, 1]), vector(&[1, 1])]);
        let inv = inverse(&m).unwrap();
        assert_eq!(m.mul(&inv), Matrix::identity(2));
        let singular = Matrix::from_rows(2, &[vector(&[1, 2]), vector(&[2, 4])]);
        assert!(inverse(&singular).is_none());
    }

    #[test]
    fn nullspace_is_annihilated() {
        let rows = vec![vector(&[1, 1, 0]), vector(&[0, 1, 1])];
        let ns = nullspace(3, &rows);
        assert_eq!(ns.len(), 1);
        for r in &rows {
            assert_eq!(dot(r, &ns[0]), int(0));
        }
    }

    #[test]
    fn solve_detects_inconsistency() {
        let rows = vec![vector(&[1, 1]), vector(&[2, 2])];
        assert!(solve(2, &rows, &[int(1), int(3)]).is_none());
        let x = solve(2, &rows, &[int(1), int(2)]).unwrap();
        assert_eq!(dot(&rows[0], &x), int(1));
    }

    #[test]
    fn kron_matches_vector_kron() {
        let a = Matrix::from_rows(2, &[vector(&[1, 2]), vector(&[0, 1])]);
        let b = Matrix::from_rows(2, &[vector(&[3, 0]), vector(&[1, 1])]);
        let x = vec![rat(1, 2), int(3)];
        let y = vec![int(-1), rat(2, 3)];
        let lhs = a.kron(&b).mul_vec(&crate::scalar::kron(&x, &y));
        let rhs = crate::scalar::kron(&a.mul_vec(&x), &b.mul_vec(&y));
        assert_eq!(lhs, rhs);
    }
}
