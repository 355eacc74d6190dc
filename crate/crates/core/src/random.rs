//! Seeded random states and channels for sweeps and property tests.

use std::sync::Arc;

use num_traits::Zero;
use rand::seq::index::sample;
use rand::Rng;

use crate::channel::AffineChannel;
use crate::linalg::Matrix;
use crate::scalar::{combination, int, rat, Scalar, Vector};
use crate::space::StateSpace;

/// Convex combination of `points` with integer weights in `1..=max_weight`,
/// normalized.
pub fn random_convex_combination<R: Rng + ?Sized>(rng: &mut R, points: &[Vector], max_weight: i64) -> Vector {
    let raw: Vec<i64> = points.iter().map(|_| rng.random_range(1..=max_weight)).collect();
    let total: i64 = raw.iter().sum();
    let weights: Vec<Scalar> = raw.iter().map(|&w| rat(w, total)).collect();
    combination(&weights, points)
}

/// A state mixing one to three distinct vertices.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, space: &StateSpace) -> Vector {
    let verts = space.vertices();
    let k = rng.random_range(1..=verts.len().min(3));
    let chosen: Vec<Vector> = sample(rng, verts.len(), k).into_iter().map(|i| verts[i].clone()).collect();
    random_convex_combination(rng, &chosen, 3)
}

/// `size` random states. Pure states are drawn with probability one half, so
/// that distinguishable and broadcastable sets are not rare.
pub fn random_state_set<R: Rng + ?Sized>(rng: &mut R, space: &StateSpace, size: usize) -> Vec<Vector> {
    (0..size)
        .map(|_| {
            if rng.random_bool(0.5) {
                let verts = space.vertices();
                verts[rng.random_range(0..verts.len())].clone()
            } else {
                random_state(rng, space)
            }
        })
        .collect()
}

/// A valid channel `Ω -> Ω`: a convex mixture of vertex-permuting symmetries,
/// constant maps and measure-and-prepare maps over extreme effects.
pub fn random_endochannel<R: Rng + ?Sized>(rng: &mut R, space: &Arc<StateSpace>) -> AffineChannel {
    let d = space.dim();
    let symmetries = space.symmetries();
    let terms = rng.random_range(1..=3);
    let mut parts: Vec<Matrix> = Vec::with_capacity(terms);
    for _ in 0..terms {
        let m = match rng.random_range(0..3) {
            0 => symmetries[rng.random_range(0..symmetries.len())].clone(),
            1 => {
                let state = random_state(rng, space);
                Matrix::outer(&state, space.unit())
            }
            _ => {
                let effects = space.effect_polytope_vertices();
                let nonzero: Vec<_> = effects.iter().filter(|e| !e.0.iter().all(Zero::is_zero)).collect();
                let e = nonzero[rng.random_range(0..nonzero.len())].clone();
                let complement: Vector = space.unit().iter().zip(&e.0).map(|(u, x)| u - x).collect();
                let a = random_state(rng, space);
                let b = random_state(rng, space);
                Matrix::outer(&a, &e.0).add(&Matrix::outer(&b, &complement))
            }
        };
        parts.push(m);
    }
    let raw: Vec<i64> = parts.iter().map(|_| rng.random_range(1..=3)).collect();
    let total: i64 = raw.iter().sum();
    let mut sum = Matrix::zeros(d, d);
    for (m, w) in parts.iter().zip(&raw) {
        sum = sum.add(&m.scale(&(int(*w) / int(total))));
    }
    AffineChannel::new(sum, space.clone(), space.clone()).expect("square matrix")
}
