//! Feasibility through the normalized Farkas program.
//!
//! Equalities are eliminated exactly, leaving `x = x0 + N z` with `z` free and
//! every other row (sign constraints included) as `G z <= h`. The program
//!
//! ```text
//! min h.y   s.t.   G^T y = 0,   1.y <= 1,   y >= 0
//! ```
//!
//! is feasible and bounded. A negative optimum is a Farkas certificate; at a
//! zero optimum the simplex prices of the optimal basis are a point with
//! `G z <= h`. The basis has `rank G + 1` rows, so the revised simplex stays
//! small even when the input has hundreds of inequalities. Everything after
//! the elimination runs on integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{FarkasCertificate, Feasibility, LpSystem, Relation, VarKind};
use crate::linalg::{inverse, rref, Matrix};
use crate::scalar::{Scalar, Vector};

enum Origin {
    /// Input row `index`, multiplied by `sign` to read as `<=`.
    Row { index: usize, sign: Scalar },
    /// `-x_j <= 0` for a nonnegative variable.
    Sign,
}

struct Inequality {
    coeffs: Vector,
    rhs: Scalar,
    origin: Origin,
}

/// Solution set of the equalities, `x = x0 + N z`.
struct Elimination {
    /// Pivot column of each reduced row and the combination of input
    /// equalities it is.
    pivots: Vec<usize>,
    combos: Vec<Vector>,
    x0: Vector,
    /// Columns of `N`, each scaled to integer entries.
    null: Vec<Vector>,
    /// `denom * x0` and `N` as integers.
    x0_int: Vec<BigInt>,
    denom: BigInt,
    null_int: Vec<Vec<BigInt>>,
}

pub(super) fn decide(sys: &LpSystem) -> Feasibility {
    let n = sys.num_vars();
    let eq_index: Vec<usize> =
        sys.constraints.iter().enumerate().filter(|(_, c)| c.relation == Relation::Eq).map(|(i, _)| i).collect();
    let elim = match eliminate(sys, &eq_index) {
        Ok(e) => e,
        Err(cert) => return Feasibility::Infeasible(cert),
    };

    let mut ineqs: Vec<Inequality> = Vec::new();
    for (index, c) in sys.constraints.iter().enumerate() {
        let sign = match c.relation {
            Relation::Le => Scalar::one(),
            Relation::Ge => -Scalar::one(),
            Relation::Eq => continue,
        };
        let coeffs = c.coeffs.iter().map(|a| a * &sign).collect();
        ineqs.push(Inequality { coeffs, rhs: &c.rhs * &sign, origin: Origin::Row { index, sign } });
    }
    for (j, k) in sys.kinds.iter().enumerate() {
        if *k == VarKind::NonNegative {
            let mut coeffs = vec![Scalar::zero(); n];
            coeffs[j] = -Scalar::one();
            ineqs.push(Inequality { coeffs, rhs: Scalar::zero(), origin: Origin::Sign });
        }
    }

    // Integer rows of G and h; row i is scales[i] times input row i.
    let mut g: Vec<Vec<BigInt>> = Vec::with_capacity(ineqs.len());
    let mut h: Vec<BigInt> = Vec::with_capacity(ineqs.len());
    let mut scales: Vec<Scalar> = Vec::with_capacity(ineqs.len());
    for q in &ineqs {
        let (a, b, k) = primitive(&q.coeffs, &q.rhs);
        let mut row: Vec<BigInt> = elim.null_int.iter().map(|col| sparse_dot(&a, col) * &elim.denom).collect();
        let mut rhs = &b * &elim.denom - sparse_dot(&a, &elim.x0_int);
        let mut scale = k * Scalar::from_integer(elim.denom.clone());
        let gcd = row.iter().fold(rhs.abs(), |acc, x| acc.gcd(x));
        if !gcd.is_zero() && !gcd.is_one() {
            for x in row.iter_mut() {
                *x = &*x / &gcd;
            }
            rhs = &rhs / &gcd;
            scale /= Scalar::from_integer(gcd);
        }
        g.push(row);
        h.push(rhs);
        scales.push(scale);
    }

    let (basis_rows, cols) = independent_rows(&g, elim.null.len());
    let g: Vec<Vec<BigInt>> = g.iter().map(|row| cols.iter().map(|&c| row[c].clone()).collect()).collect();
    let program = Program { g, h, r: cols.len() };
    match program.solve(&basis_rows) {
        Solution::Certificate(y) => {
            let mut multipliers = vec![Scalar::zero(); sys.constraints.len()];
            let mut w = vec![Scalar::zero(); n];
            for (i, (yi, k)) in y.iter().zip(&scales).enumerate() {
                if yi.is_zero() {
                    continue;
                }
                let yi = yi * k;
                for (acc, a) in w.iter_mut().zip(&ineqs[i].coeffs) {
                    if !a.is_zero() {
                        *acc += &yi * a;
                    }
                }
                if let Origin::Row { index, sign } = &ineqs[i].origin {
                    multipliers[*index] += &yi * sign;
                }
            }
            // w vanishes on the null space of the equalities, so it is a
            // combination of the reduced rows with weights w at the pivots.
            for (&p, combo) in elim.pivots.iter().zip(&elim.combos) {
                if w[p].is_zero() {
                    continue;
                }
                for (e, c) in eq_index.iter().zip(combo) {
                    if !c.is_zero() {
                        multipliers[*e] -= &w[p] * c;
                    }
                }
            }
            let cert = FarkasCertificate { multipliers };
            debug_assert!(cert.verify(sys), "reduced Farkas certificate failed verification");
            Feasibility::Infeasible(cert)
        }
        Solution::Point(z) => {
            let mut x = elim.x0.clone();
            for (t, &c) in cols.iter().enumerate() {
                if z[t].is_zero() {
                    continue;
                }
                for (xi, v) in x.iter_mut().zip(&elim.null[c]) {
                    if !v.is_zero() {
                        *xi += &z[t] * v;
                    }
                }
            }
            debug_assert!(sys.is_satisfied_by(&x), "reduced witness failed verification");
            Feasibility::Feasible(x)
        }
    }
}

fn sparse_dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).filter(|(x, y)| !x.is_zero() && !y.is_zero()).map(|(x, y)| x * y).sum()
}

/// Positive integer multiple of `(row, rhs)`, with the factor.
fn primitive(row: &[Scalar], rhs: &Scalar) -> (Vec<BigInt>, BigInt, Scalar) {
    let lcm = row.iter().chain(std::iter::once(rhs)).fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let b = rhs.numer() * (&lcm / rhs.denom());
    (ints, b, Scalar::from_integer(lcm))
}

/// Smallest positive integer multiple of `v`, with the factor.
fn integer_multiple(v: &[Scalar]) -> (Vec<BigInt>, BigInt) {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    (v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect(), lcm)
}

fn eliminate(sys: &LpSystem, eq_index: &[usize]) -> Result<Elimination, FarkasCertificate> {
    let n = sys.num_vars();
    let q = eq_index.len();
    let augmented: Vec<Vector> = eq_index
        .iter()
        .enumerate()
        .map(|(t, &i)| {
            let c = &sys.constraints[i];
            let mut row = c.coeffs.clone();
            row.push(c.rhs.clone());
            row.extend((0..q).map(|s| if s == t { Scalar::one() } else { Scalar::zero() }));
            row
        })
        .collect();
    let (reduced, pivots) = rref(n + 1 + q, &augmented);
    let mut rows: Vec<&Vector> = Vec::new();
    let mut kept = Vec::new();
    for (row, &p) in reduced.iter().zip(&pivots) {
        if p == n {
            // 0 = 1 as a combination of the equalities.
            let mut multipliers = vec![Scalar::zero(); sys.constraints.len()];
            for (e, c) in eq_index.iter().zip(&row[n + 1..]) {
                multipliers[*e] = -c.clone();
            }
            return Err(FarkasCertificate { multipliers });
        }
        if p > n {
            break;
        }
        rows.push(row);
        kept.push(p);
    }
    let mut x0 = vec![Scalar::zero(); n];
    for (row, &p) in rows.iter().zip(&kept) {
        x0[p] = row[n].clone();
    }
    let null: Vec<Vector> = (0..n)
        .filter(|j| !kept.contains(j))
        .map(|f| {
            let mut v = vec![Scalar::zero(); n];
            v[f] = Scalar::one();
            for (row, &p) in rows.iter().zip(&kept) {
                v[p] = -row[f].clone();
            }
            let k = Scalar::from_integer(integer_multiple(&v).1);
            v.into_iter().map(|x| x * &k).collect()
        })
        .collect();
    let (x0_int, denom) = integer_multiple(&x0);
    let null_int = null.iter().map(|v| v.iter().map(|x| x.to_integer()).collect()).collect();
    Ok(Elimination {
        pivots: kept,
        combos: rows.iter().map(|r| r[n + 1..].to_vec()).collect(),
        x0,
        null,
        x0_int,
        denom,
        null_int,
    })
}

/// Indices of a maximal independent set of rows of `g` and of columns making
/// the corresponding square submatrix invertible.
fn independent_rows(g: &[Vec<BigInt>], width: usize) -> (Vec<usize>, Vec<usize>) {
    let mut echelon: Vec<(usize, Vec<BigInt>)> = Vec::new();
    let mut rows = Vec::new();
    for (i, row) in g.iter().enumerate() {
        if echelon.len() == width {
            break;
        }
        let mut v = row.clone();
        for (p, e) in &echelon {
            if v[*p].is_zero() {
                continue;
            }
            // v <- e[p] v - v[p] e, then drop the common factor.
            let (a, b) = (e[*p].clone(), v[*p].clone());
            for (x, y) in v.iter_mut().zip(e) {
                *x = &a * &*x - &b * y;
            }
            let gcd = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
            if !gcd.is_zero() && !gcd.is_one() {
                for x in v.iter_mut() {
                    *x = &*x / &gcd;
                }
            }
        }
        if let Some(p) = v.iter().position(|x| !x.is_zero()) {
            echelon.push((p, v));
            rows.push(i);
        }
    }
    // Each echelon row vanishes on the pivots before its own, so the pivot
    // columns of the chosen rows form an invertible block.
    let mut cols: Vec<usize> = echelon.iter().map(|(p, _)| *p).collect();
    cols.sort_unstable();
    (rows, cols)
}

/// Determinant by fraction-free elimination.
fn determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !m[i][k].is_zero()) else {
            return BigInt::zero();
        };
        if p != k {
            m.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * prev
}

/// `det * m^-1` for an invertible integer matrix with determinant `det`.
fn adjugate(m: &[Vec<BigInt>], det: &BigInt) -> Vec<Vec<BigInt>> {
    let rows: Vec<Vector> = m.iter().map(|r| r.iter().map(|x| Scalar::from_integer(x.clone())).collect()).collect();
    let inv = inverse(&Matrix::from_rows(m.len(), &rows)).expect("starting basis is invertible");
    let d = Scalar::from_integer(det.clone());
    inv.row_vectors().into_iter().map(|row| row.iter().map(|x| (x * &d).to_integer()).collect()).collect()
}

enum Solution {
    Point(Vector),
    Certificate(Vector),
}

/// The normalized Farkas program with integer data.
///
/// The basis inverse is kept as `A = D B^-1` with `D = det B > 0`, which stays
/// integral under pivoting with exact division by the previous determinant.
/// Pricing scales reduced costs by static column norms; the ratio test is
/// lexicographic against the starting basis, which rules out cycling.
struct Program {
    g: Vec<Vec<BigInt>>,
    h: Vec<BigInt>,
    r: usize,
}

impl Program {
    /// Column `j` of the constraint matrix: `(g_j, 1)` for `j < p`, the slack
    /// `e_r` for `j == p`.
    fn column(&self, j: usize) -> Vec<BigInt> {
        if j == self.g.len() {
            let mut e = vec![BigInt::zero(); self.r + 1];
            e[self.r] = BigInt::one();
            e
        } else {
            let mut c = self.g[j].clone();
            c.push(BigInt::one());
            c
        }
    }

    fn cost(&self, j: usize) -> BigInt {
        if j == self.g.len() {
            BigInt::zero()
        } else {
            self.h[j].clone()
        }
    }

    fn solve(&self, start: &[usize]) -> Solution {
        let p = self.g.len();
        let m = self.r + 1;
        let norms: Vec<BigInt> = (0..=p).map(|j| self.column(j).iter().map(|x| x * x).sum()).collect();
        let mut basis: Vec<usize> = start.to_vec();
        basis.push(p);
        let cols: Vec<Vec<BigInt>> = basis.iter().map(|&j| self.column(j)).collect();
        let rows: Vec<Vec<BigInt>> = (0..m).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
        let mut det = determinant(rows.clone());
        let mut a = adjugate(&rows, &det);
        if det.is_negative() {
            det = -det;
            for x in a.iter_mut().flatten() {
                *x = -x.clone();
            }
        }
        // `D` times the current tableau columns of the starting basis.
        let mut lex: Vec<Vec<BigInt>> =
            (0..m).map(|i| (0..m).map(|j| if i == j { det.clone() } else { BigInt::zero() }).collect()).collect();
        let mut in_basis = vec![false; p + 1];
        for &b in &basis {
            in_basis[b] = true;
        }
        loop {
            let costs: Vec<BigInt> = basis.iter().map(|&j| self.cost(j)).collect();
            let mut pi = vec![BigInt::zero(); m];
            for (c, row) in costs.iter().zip(&a) {
                if c.is_zero() {
                    continue;
                }
                for (acc, x) in pi.iter_mut().zip(row) {
                    if !x.is_zero() {
                        *acc += c * x;
                    }
                }
            }
            // Reduced costs scaled by D; the best negative one maximizes
            // d^2 / |column|^2.
            let mut entering: Option<(usize, BigInt)> = None;
            for j in 0..=p {
                if in_basis[j] {
                    continue;
                }
                let d = if j == p {
                    -pi[self.r].clone()
                } else {
                    &self.h[j] * &det - &pi[self.r] - sparse_dot(&self.g[j], &pi[..self.r])
                };
                if !d.is_negative() {
                    continue;
                }
                let better = match &entering {
                    None => true,
                    Some((b, best)) => &d * &d * &norms[*b] > best * best * &norms[j],
                };
                if better {
                    entering = Some((j, d));
                }
            }
            let Some((e, _)) = entering else {
                let value: BigInt = costs.iter().zip(&a).map(|(c, row)| c * &row[self.r]).sum();
                let denom = Scalar::from_integer(det.clone());
                if value.is_negative() {
                    let mut y = vec![Scalar::zero(); p];
                    for (&b, row) in basis.iter().zip(&a) {
                        if b < p {
                            y[b] = Scalar::from_integer(row[self.r].clone()) / &denom;
                        }
                    }
                    return Solution::Certificate(y);
                }
                debug_assert!(pi[self.r].is_zero());
                return Solution::Point(pi[..self.r].iter().map(|x| Scalar::from_integer(x.clone()) / &denom).collect());
            };
            let col = self.column(e);
            let u: Vec<BigInt> = a.iter().map(|row| sparse_dot(row, &col)).collect();
            let mut leaving: Option<usize> = None;
            for i in 0..m {
                if !u[i].is_positive() {
                    continue;
                }
                let better = match leaving {
                    None => true,
                    Some(l) => {
                        let key = |k: usize, t: usize| if t == 0 { &a[k][self.r] } else { &lex[k][t - 1] };
                        (0..=m)
                            .map(|t| (key(i, t) * &u[l]).cmp(&(key(l, t) * &u[i])))
                            .find(|o| o.is_ne())
                            .is_some_and(|o| o.is_lt())
                    }
                };
                if better {
                    leaving = Some(i);
                }
            }
            let l = leaving.expect("the program is bounded");
            for mat in [&mut a, &mut lex] {
                let pivot_row = mat[l].clone();
                for (i, row) in mat.iter_mut().enumerate() {
                    if i == l {
                        continue;
                    }
                    for (x, y) in row.iter_mut().zip(&pivot_row) {
                        let mut v = &u[l] * &*x;
                        if !y.is_zero() && !u[i].is_zero() {
                            v -= &u[i] * y;
                        }
                        *x = v / &det;
                    }
                }
            }
            det = u[l].clone();
            in_basis[basis[l]] = false;
            in_basis[e] = true;
            basis[l] = e;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_and_adjugate_agree() {
        let m: Vec<Vec<BigInt>> = vec![vec![2.into(), 1.into()], vec![1.into(), 3.into()]];
        let det = determinant(m.clone());
        assert_eq!(det, BigInt::from(5));
        let adj = adjugate(&m, &det);
        assert_eq!(adj, vec![vec![BigInt::from(3), BigInt::from(-1)], vec![BigInt::from(-1), BigInt::from(2)]]);
    }

    #[test]
    fn primitive_clears_denominators() {
        let half = Scalar::new(1.into(), 2.into());
        let two_thirds = Scalar::new(2.into(), 3.into());
        let (row, b, k) = primitive(&[half, two_thirds], &Scalar::one());
        assert_eq!(row, vec![BigInt::from(3), BigInt::from(4)]);
        assert_eq!(b, BigInt::from(6));
        assert_eq!(k, Scalar::from_integer(6.into()));
    }
}
