//! Incremental double description for polyhedral cones `{y : A y >= 0}`.

use num_traits::{Signed, Zero};

use crate::scalar::{dot, primitive, Scalar, Vector};

#[derive(Debug, Clone)]
pub(crate) struct ConeRow {
    pub coeffs: Vector,
    /// `row . y = 0` instead of `row . y >= 0`.
    pub equality: bool,
}

impl ConeRow {
    pub fn ge(coeffs: Vector) -> Self {
        ConeRow { coeffs, equality: false }
    }

    pub fn eq(coeffs: Vector) -> Self {
        ConeRow { coeffs, equality: true }
    }
}

/// Minkowski-Weyl generators: the cone equals `span(lineality) + cone(rays)`.
#[derive(Debug, Clone, Default)]
pub(crate) struct ConeGenerators {
    pub lineality: Vec<Vector>,
    pub rays: Vec<Vector>,
}

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

struct Ray {
    v: Vector,
    /// Processed rows at which the ray is tight.
    zeros: Bits,
}

/// Extreme rays and lineality space of `{y in R^dim : rows}`.
///
/// Adjacency of rays is decided combinatorially: two rays are adjacent iff no
/// third ray is tight on every processed row they share.
pub(crate) fn double_description(dim: usize, rows: &[ConeRow]) -> ConeGenerators {
    let total = rows.len();
    let mut lineality: Vec<Vector> = (0..dim)
        .map(|i| {
            let mut e = vec![Scalar::zero(); dim];
            e[i] = Scalar::from_integer(1.into());
            e
        })
        .collect();
    let mut rays: Vec<Ray> = Vec::new();
    let mut processed = Bits::new(total);

    for (k, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.coeffs.len(), dim);
        let pivot = lineality.iter().position(|l| !dot(&row.coeffs, l).is_zero());
        if let Some(p) = pivot {
            let mut l0 = lineality.swap_remove(p);
            let v0 = dot(&row.coeffs, &l0);
            for l in lineality.iter_mut() {
                let f = dot(&row.coeffs, l) / &v0;
                if !f.is_zero() {
                    for (x, y) in l.iter_mut().zip(&l0) {
                        *x -= &f * y;
                    }
                }
            }
            for r in rays.iter_mut() {
                let f = dot(&row.coeffs, &r.v) / &v0;
                if !f.is_zero() {
                    for (x, y) in r.v.iter_mut().zip(&l0) {
                        *x -= &f * y;
                    }
                    r.v = primitive(&r.v);
                }
                r.zeros.set(k);
            }
            if !row.equality {
                if v0.is_negative() {
                    for x in l0.iter_mut() {
                        *x = -x.clone();
                    }
                }
                rays.push(Ray { v: primitive(&l0), zeros: processed.clone() });
            }
            processed.set(k);
            continue;
        }

        let values: Vec<Scalar> = rays.iter().map(|r| dot(&row.coeffs, &r.v)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| values[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| values[i].is_negative()).collect();
        if neg.is_empty() && (!row.equality || pos.is_empty()) {
            for (r, v) in rays.iter_mut().zip(&values) {
                if v.is_zero() {
                    r.zeros.set(k);
                }
            }
            processed.set(k);
            continue;
        }

        // Tight rows needed for two rays to span a 2-face of the pointed part.
        let pointed_dim = dim - lineality.len();
        let min_common = pointed_dim.saturating_sub(2);
        let mut created = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = rays[p].zeros.and(&rays[n].zeros);
                if common.count() < min_common {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(i, r)| i == p || i == n || !common.subset_of(&r.zeros));
                if !adjacent {
                    continue;
                }
                let vp = &values[p];
                let vn = &values[n];
                let v: Vector = rays[n]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(xn, xp)| vp * xn - vn * xp)
                    .collect();
                let mut zeros = common;
                zeros.set(k);
                created.push(Ray { v: primitive(&v), zeros });
            }
        }

        let mut next = Vec::with_capacity(rays.len() + created.len());
        for (i, mut r) in rays.into_iter().enumerate() {
            if values[i].is_zero() {
                r.zeros.set(k);
                next.push(r);
            } else if values[i].is_positive() && !row.equality {
                next.push(r);
            }
        }
        next.extend(created);
        rays = next;
        processed.set(k);
    }

    ConeGenerators { lineality, rays: rays.into_iter().map(|r| r.v).collect() }
}
