//! Joint systems between the minimal and maximal tensor products.
//!
//! Joint vectors use the Kronecker layout: coordinate `(i, j)` of
//! `V(Ω_A) ⊗ V(Ω_B)` is stored at `i * d_B + j`.
//!
//! The maximal tensor product is cut out by `(e ⊗ f)(ω) >= 0` for effects `e`,
//! `f` on extreme rays of the two effect cones, plus `(u_A ⊗ u_B)(ω) = 1`.
//! Every effect is a nonnegative combination of ray effects, so positivity on
//! those pairs is positivity on all product effects.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::channel::AffineChannel;
use crate::linalg::Matrix;
use crate::polytope::{HRep, Halfspace, Hyperplane, Polytope, PolytopeError};
use crate::scalar::{kron, Scalar, Vector};
use crate::space::{Factors, StateSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TensorVariant {
    Min,
    Max,
    Custom,
}

impl fmt::Display for TensorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TensorVariant::Min => "min",
            TensorVariant::Max => "max",
            TensorVariant::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompositeError {
    #[error("state has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("joint state is not normalized: (u_A ⊗ u_B)(ω) = {0}")]
    NotNormalized(String),
    #[error("swap requires identical factors")]
    UnequalFactors,
    #[error("custom joint space is not contained in the maximal tensor product (vertex {0})")]
    AboveMax(usize),
    #[error("custom joint space misses product vertex {0} of the minimal tensor product")]
    BelowMin(usize),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Space(#[from] crate::space::SpaceError),
}

/// A joint state space of two factors. Cheap to clone.
#[derive(Clone, Debug)]
pub struct CompositeSpace {
    space: Arc<StateSpace>,
}

impl PartialEq for CompositeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.variant() == other.variant()
    }
}

fn joint_name(a: &StateSpace, b: &StateSpace, variant: TensorVariant) -> String {
    format!("{a} ⊗_{variant} {b}")
}

/// Convex hull of the product states.
pub fn min_tensor(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> CompositeSpace {
    let dim = a.dim() * b.dim();
    let products: Vec<Vector> = a
        .vertices()
        .iter()
        .flat_map(|va| b.vertices().iter().map(move |vb| kron(va, vb)))
        .collect();
    // Products of pure states are pure in the maximal product, hence extreme here.
    let joint = Polytope::from_extreme_points(dim, products);
    let unit = kron(a.unit(), b.unit());
    let space = StateSpace::new(joint_name(a, b, TensorVariant::Min), unit, joint)
        .expect("products of spanning state spaces span the tensor space")
        .with_factors(Factors { a: a.clone(), b: b.clone(), variant: TensorVariant::Min });
    CompositeSpace { space: Arc::new(space) }
}

/// Inequalities of the maximal tensor product before redundancy removal.
pub fn max_tensor_hrep(a: &StateSpace, b: &StateSpace) -> HRep {
    let ea = a.ray_effects();
    let eb = b.ray_effects();
    let mut inequalities = Vec::with_capacity(ea.len() * eb.len());
    for e in &ea {
        for f in &eb {
            let normal: Vector = kron(&e.0, &f.0).into_iter().map(|x| -x).collect();
            inequalities.push(Halfspace::new(normal, Scalar::zero()));
        }
    }
    let equalities = vec![Hyperplane::new(kron(a.unit(), b.unit()), Scalar::one())];
    HRep { inequalities, equalities }
}

/// All normalized joint states positive on every pair of effects.
pub fn max_tensor(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> CompositeSpace {
    let dim = a.dim() * b.dim();
    let joint = Polytope::from_hrep(dim, &max_tensor_hrep(a, b)).expect("maximal tensor product is a polytope");
    let unit = kron(a.unit(), b.unit());
    let space = StateSpace::new(joint_name(a, b, TensorVariant::Max), unit, joint)
        .expect("maximal tensor product is a valid state space")
        .with_factors(Factors { a: a.clone(), b: b.clone(), variant: TensorVariant::Max });
    CompositeSpace { space: Arc::new(space) }
}

/// A joint space given by an explicit H-rep, validated against the sandwich
/// `⊗_min ⊆ joint ⊆ ⊗_max`.
pub fn custom_tensor(a: &Arc<StateSpace>, b: &Arc<StateSpace>, hrep: &HRep) -> Result<CompositeSpace, CompositeError> {
    let dim = a.dim() * b.dim();
    let joint = Polytope::from_hrep(dim, hrep)?;
    let max = max_tensor_hrep(a, b);
    if let Some(i) = joint.vertices().iter().position(|v| !max.contains(v)) {
        return Err(CompositeError::AboveMax(i));
    }
    let products = a.vertices().iter().flat_map(|va| b.vertices().iter().map(move |vb| kron(va, vb)));
    for (i, p) in products.enumerate() {
        if !joint.contains(&p) {
            return Err(CompositeError::BelowMin(i));
        }
    }
    let unit = kron(a.unit(), b.unit());
    let space = StateSpace::new(joint_name(a, b, TensorVariant::Custom), unit, joint)?
        .with_factors(Factors { a: a.clone(), b: b.clone(), variant: TensorVariant::Custom });
    Ok(CompositeSpace { space: Arc::new(space) })
}

/// The composite of `variant` over `a` and `b`. Custom variants need an H-rep
/// and go through [`custom_tensor`].
pub fn tensor(a: &Arc<StateSpace>, b: &Arc<StateSpace>, variant: TensorVariant) -> CompositeSpace {
    match variant {
        TensorVariant::Min => min_tensor(a, b),
        TensorVariant::Max => max_tensor(a, b),
        TensorVariant::Custom => panic!("custom composites are built with custom_tensor"),
    }
}

impl CompositeSpace {
    /// Wraps a state space that carries bipartite structure.
    pub fn from_space(space: Arc<StateSpace>) -> Option<Self> {
        space.factors()?;
        Some(CompositeSpace { space })
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    fn factors(&self) -> &Factors {
        self.space.factors().expect("composite spaces carry factors")
    }

    pub fn factor_a(&self) -> &Arc<StateSpace> {
        &self.factors().a
    }

    pub fn factor_b(&self) -> &Arc<StateSpace> {
        &self.factors().b
    }

    pub fn variant(&self) -> TensorVariant {
        self.factors().variant
    }

    pub fn joint(&self) -> &Polytope {
        self.space.omega()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn unit(&self) -> &[Scalar] {
        self.space.unit()
    }

    pub fn product_state(&self, state_a: &[Scalar], state_b: &[Scalar]) -> Result<Vector, CompositeError> {
        let (da, db) = (self.factor_a().dim(), self.factor_b().dim());
        if state_a.len() != da {
            return Err(CompositeError::DimensionMismatch { expected: da, found: state_a.len() });
        }
        if state_b.len() != db {
            return Err(CompositeError::DimensionMismatch { expected: db, found: state_b.len() });
        }
        Ok(kron(state_a, state_b))
    }

    fn check_normalized(&self, joint: &[Scalar]) -> Result<(), CompositeError> {
        if joint.len() != self.dim() {
            return Err(CompositeError::DimensionMismatch { expected: self.dim(), found: joint.len() });
        }
        let norm = crate::scalar::dot(self.unit(), joint);
        if !norm.is_one() {
            return Err(CompositeError::NotNormalized(crate::scalar::format_scalar(&norm)));
        }
        Ok(())
    }

    /// `ω_A(a) = ω_AB(a, u_B)`.
    pub fn marginal_a(&self, joint: &[Scalar]) -> Result<Vector, CompositeError> {
        self.check_normalized(joint)?;
        Ok(self.marginal_a_matrix().mul_vec(joint))
    }

    /// `ω_B(b) = ω_AB(u_A, b)`.
    pub fn marginal_b(&self, joint: &[Scalar]) -> Result<Vector, CompositeError> {
        self.check_normalized(joint)?;
        Ok(self.marginal_b_matrix().mul_vec(joint))
    }

    /// Contraction with `u_B` as a `d_A x d_A d_B` matrix.
    pub fn marginal_a_matrix(&self) -> Matrix {
        marginal_a_matrix(self.factor_a().dim(), self.factor_b().unit())
    }

    /// Contraction with `u_A` as a `d_B x d_A d_B` matrix.
    pub fn marginal_b_matrix(&self) -> Matrix {
        marginal_b_matrix(self.factor_a().unit(), self.factor_b().dim())
    }

    /// The coordinate transposition `σ(ω_A ⊗ ω_B) = ω_B ⊗ ω_A` as a channel of
    /// the composite into itself.
    pub fn swap_channel(&self) -> Result<AffineChannel, CompositeError> {
        if self.factor_a() != self.factor_b() {
            return Err(CompositeError::UnequalFactors);
        }
        let d = self.factor_a().dim();
        Ok(AffineChannel::new_unchecked(swap_matrix(d), self.space.clone(), self.space.clone()))
    }
}

pub(crate) fn marginal_a_matrix(da: usize, unit_b: &[Scalar]) -> Matrix {
    let db = unit_b.len();
    let mut m = Matrix::zeros(da, da * db);
    for i in 0..da {
        for (j, u) in unit_b.iter().enumerate() {
            m[(i, i * db + j)] = u.clone();
        }
    }
    m
}

pub(crate) fn marginal_b_matrix(unit_a: &[Scalar], db: usize) -> Matrix {
    let da = unit_a.len();
    let mut m = Matrix::zeros(db, da * db);
    for (i, u) in unit_a.iter().enumerate() {
        for j in 0..db {
            m[(j, i * db + j)] = u.clone();
        }
    }
    m
}

/// Permutation matrix sending index `(i, j)` to `(j, i)` on `R^d ⊗ R^d`.
pub fn swap_matrix(d: usize) -> Matrix {
    let mut m = Matrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(j * d + i, i * d + j)] = Scalar::one();
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, vector};
    use crate::space::{make_classical, make_square_gbit, square_half_effect};

    fn square() -> Arc<StateSpace> {
        Arc::new(make_square_gbit())
    }

    #[test]
    fn classical_bits_give_a_simplex_either_way() {
        let bit = Arc::new(make_classical(2).unwrap());
        let min = min_tensor(&bit, &bit);
        let max = max_tensor(&bit, &bit);
        assert_eq!(min.joint().vertices().len(), 4);
        assert!(min.joint().is_simplex());
        assert_eq!(min.joint(), max.joint());
    }

    #[test]
    fn square_products() {
        let s = square();
        let min = min_tensor(&s, &s);
        assert_eq!(min.joint().vertices().len(), 16);
        let max = max_tensor(&s, &s);
        assert_eq!(max.joint().vertices().len(), 24);
        assert!(min.joint().is_subset_of(max.joint()));
        assert_eq!(max.joint().hrep().inequalities.len(), 16);
    }

    #[test]
    fn classical_factor_collapses_the_sandwich() {
        let bit = Arc::new(make_classical(2).unwrap());
        let s = square();
        assert_eq!(min_tensor(&bit, &s).joint(), max_tensor(&bit, &s).joint());
    }

    #[test]
    fn centroid_product_on_half_effects() {
        let s = square();
        let min = min_tensor(&s, &s);
        let c = s.centroid();
        let joint = min.product_state(&c, &c).unwrap();
        let e = square_half_effect(0, 1);
        let f = square_half_effect(1, -1);
        assert_eq!(crate::scalar::dot(&kron(&e.0, &f.0), &joint), rat(1, 4));
        assert_eq!(min.marginal_a(&joint).unwrap(), c);
    }

    #[test]
    fn marginals_of_swapped_mixture() {
        let s = square();
        let max = max_tensor(&s, &s);
        let v = vector(&[1, 1, 1]);
        let w = vector(&[-1, 1, 1]);
        let vw = kron(&v, &w);
        let wv = kron(&w, &v);
        let mix: Vector = vw.iter().zip(&wv).map(|(a, b)| (a + b) * rat(1, 2)).collect();
        let mid: Vector = v.iter().zip(&w).map(|(a, b)| (a + b) * rat(1, 2)).collect();
        assert_eq!(max.marginal_a(&mix).unwrap(), mid);
        assert_eq!(max.marginal_b(&mix).unwrap(), mid);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let s = square();
        let max = max_tensor(&s, &s);
        let zero = vec![Scalar::zero(); 9];
        assert!(matches!(max.marginal_a(&zero), Err(CompositeError::NotNormalized(_))));
    }

    #[test]
    fn swap_is_an_involution() {
        let s = square();
        let max = max_tensor(&s, &s);
        let sigma = max.swap_channel().unwrap();
        assert_eq!(sigma.matrix().mul(sigma.matrix()), Matrix::identity(9));
        let v = vector(&[1, -1, 1]);
        let w = vector(&[-1, -1, 1]);
        assert_eq!(sigma.apply(&kron(&v, &w)), kron(&w, &v));
        let mut images: Vec<Vector> = max.joint().vertices().iter().map(|x| sigma.apply(x)).collect();
        images.sort();
        assert_eq!(images, max.joint().vertices());
    }

    #[test]
    fn swap_requires_equal_factors() {
        let bit = Arc::new(make_classical(2).unwrap());
        let mixed = min_tensor(&bit, &square());
        assert_eq!(mixed.swap_channel().unwrap_err(), CompositeError::UnequalFactors);
    }

    #[test]
    fn custom_sandwich_is_validated() {
        let s = square();
        let max = max_tensor(&s, &s);
        let ok = custom_tensor(&s, &s, max.joint().hrep()).unwrap();
        assert_eq!(ok.joint(), max.joint());
        // A single product point is far below the minimal tensor product.
        let p = kron(&vector(&[1, 1, 1]), &vector(&[1, 1, 1]));
        let point = HRep {
            inequalities: vec![],
            equalities: (0..9)
                .map(|i| {
                    let mut n = vec![Scalar::zero(); 9];
                    n[i] = Scalar::one();
                    Hyperplane::new(n, p[i].clone())
                })
                .collect(),
        };
        assert!(matches!(custom_tensor(&s, &s, &point), Err(CompositeError::BelowMin(_))));
    }
}
