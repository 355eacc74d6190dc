//! Affine channels between state spaces, represented as linear maps between
//! spans, and the fixed-point compression of an endochannel.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::composite::{marginal_a_matrix, marginal_b_matrix, swap_matrix, CompositeSpace};
use crate::linalg::{column_basis, inverse, nullspace, Matrix};
use crate::polytope::{Hyperplane, Polytope, PolytopeError};
use crate::scalar::{rat, Scalar, Show, Vector};
use crate::space::{Effect, StateSpace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelViolation {
    /// `u_out ∘ M` differs from `u_in`.
    UnitNotPreserved { pulled_back_unit: Vector },
    /// The image of a domain vertex leaves the codomain.
    VertexEscapes { vertex: usize, state: Vector, image: Vector },
}

impl fmt::Display for ChannelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelViolation::UnitNotPreserved { pulled_back_unit } => {
                write!(f, "unit not preserved: u_out ∘ T = {}", Show(pulled_back_unit))
            }
            ChannelViolation::VertexEscapes { vertex, state, image } => {
                write!(f, "vertex {vertex} {} is mapped to {} outside the codomain", Show(state), Show(image))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChannelError {
    #[error("matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    Shape { rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },
    #[error("channels do not compose: codomain {0} differs from domain {1}")]
    Mismatch(String, String),
    #[error("codomain is not a composite of two copies of the domain")]
    NotSquareComposite,
    #[error("channel is not an endochannel")]
    NotEndochannel,
    #[error("invalid channel: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ChannelViolation>),
    #[error("kernel and image of T - I do not split the span (T is not power bounded)")]
    NoDecomposition,
    #[error("map is not idempotent")]
    NotIdempotent,
    #[error("effect takes value {value} on compressed vertex {vertex}, outside [0, 1]")]
    EffectOutOfRange { vertex: usize, value: String },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

/// A unit-preserving linear map `V(Ω_in) -> V(Ω_out)`. Construction only checks
/// shapes; [`AffineChannel::validate`] certifies that `Ω_in` lands in `Ω_out`.
#[derive(Clone)]
pub struct AffineChannel {
    matrix: Matrix,
    domain: Arc<StateSpace>,
    codomain: Arc<StateSpace>,
}

impl fmt::Debug for AffineChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AffineChannel")
            .field("domain", &self.domain.name())
            .field("codomain", &self.codomain.name())
            .field("matrix", &self.matrix)
            .finish()
    }
}

impl PartialEq for AffineChannel {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix && self.domain == other.domain && self.codomain == other.codomain
    }
}

impl AffineChannel {
    pub fn new(matrix: Matrix, domain: Arc<StateSpace>, codomain: Arc<StateSpace>) -> Result<Self, ChannelError> {
        if matrix.rows() != codomain.dim() || matrix.cols() != domain.dim() {
            return Err(ChannelError::Shape {
                rows: matrix.rows(),
                cols: matrix.cols(),
                expected_rows: codomain.dim(),
                expected_cols: domain.dim(),
            });
        }
        Ok(AffineChannel { matrix, domain, codomain })
    }

    pub(crate) fn new_unchecked(matrix: Matrix, domain: Arc<StateSpace>, codomain: Arc<StateSpace>) -> Self {
        debug_assert_eq!((matrix.rows(), matrix.cols()), (codomain.dim(), domain.dim()));
        AffineChannel { matrix, domain, codomain }
    }

    /// New channel that must pass [`validate`](Self::validate).
    pub fn validated(matrix: Matrix, domain: Arc<StateSpace>, codomain: Arc<StateSpace>) -> Result<Self, ChannelError> {
        let c = Self::new(matrix, domain, codomain)?;
        c.validate().map_err(ChannelError::Invalid)?;
        Ok(c)
    }

    pub fn identity(space: &Arc<StateSpace>) -> Self {
        Self::new_unchecked(Matrix::identity(space.dim()), space.clone(), space.clone())
    }

    /// `ω ↦ state` for every input, i.e. `state ⊗ u_in`.
    pub fn constant(domain: &Arc<StateSpace>, codomain: &Arc<StateSpace>, state: &[Scalar]) -> Self {
        Self::new_unchecked(Matrix::outer(state, domain.unit()), domain.clone(), codomain.clone())
    }

    /// `ω ↦ Σ_j e_j(ω) ρ_j`.
    pub fn measure_prepare(
        domain: &Arc<StateSpace>,
        codomain: &Arc<StateSpace>,
        effects: &[Effect],
        preparations: &[Vector],
    ) -> Self {
        assert_eq!(effects.len(), preparations.len());
        let mut m = Matrix::zeros(codomain.dim(), domain.dim());
        for (e, rho) in effects.iter().zip(preparations) {
            m = m.add(&Matrix::outer(rho, &e.0));
        }
        Self::new_unchecked(m, domain.clone(), codomain.clone())
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn domain(&self) -> &Arc<StateSpace> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<StateSpace> {
        &self.codomain
    }

    pub fn apply(&self, state: &[Scalar]) -> Vector {
        self.matrix.mul_vec(state)
    }

    /// Unit preservation plus membership of every vertex image; by convexity
    /// this certifies `T(Ω_in) ⊆ Ω_out`.
    pub fn validate(&self) -> Result<(), Vec<ChannelViolation>> {
        let mut violations = Vec::new();
        let pulled = self.matrix.covec_mul(self.codomain.unit());
        if pulled.as_slice() != self.domain.unit() {
            violations.push(ChannelViolation::UnitNotPreserved { pulled_back_unit: pulled });
        }
        for (i, v) in self.domain.vertices().iter().enumerate() {
            let image = self.apply(v);
            if !self.codomain.omega().contains(&image) {
                violations.push(ChannelViolation::VertexEscapes { vertex: i, state: v.clone(), image });
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Endochannel with equal domain and codomain.
    pub fn is_endochannel(&self) -> bool {
        self.domain == self.codomain
    }

    /// `T` clones `ω` iff `T(ω) = ω ⊗ ω`.
    pub fn clones(&self, state: &[Scalar]) -> bool {
        self.apply(state) == crate::scalar::kron(state, state)
    }

    /// Both marginals of `T(ω)` equal `ω`. Requires a bipartite codomain.
    pub fn broadcasts(&self, state: &[Scalar]) -> bool {
        let Some(f) = self.codomain.factors() else {
            return false;
        };
        let out = self.apply(state);
        marginal_a_matrix(f.a.dim(), f.b.unit()).mul_vec(&out) == state
            && marginal_b_matrix(f.a.unit(), f.b.dim()).mul_vec(&out) == state
    }
}

/// `c2 ∘ c1`, re-validated.
pub fn compose(c2: &AffineChannel, c1: &AffineChannel) -> Result<AffineChannel, ChannelError> {
    if c1.codomain != c2.domain {
        return Err(ChannelError::Mismatch(c1.codomain.name().into(), c2.domain.name().into()));
    }
    AffineChannel::validated(c2.matrix.mul(&c1.matrix), c1.domain.clone(), c2.codomain.clone())
}

/// `P ⊗ Q` from `domain` (over the domains of `p`, `q`) to `codomain` (over their
/// codomains), re-validated. `(P ⊗ Q)(ω_A ⊗ ω_B) = P(ω_A) ⊗ Q(ω_B)`.
pub fn tensor_pair(
    p: &AffineChannel,
    q: &AffineChannel,
    domain: &CompositeSpace,
    codomain: &CompositeSpace,
) -> Result<AffineChannel, ChannelError> {
    if **domain.factor_a() != *p.domain || **domain.factor_b() != *q.domain {
        return Err(ChannelError::Mismatch(domain.space().name().into(), format!("{} ⊗ {}", p.domain, q.domain)));
    }
    if **codomain.factor_a() != *p.codomain || **codomain.factor_b() != *q.codomain {
        return Err(ChannelError::Mismatch(format!("{} ⊗ {}", p.codomain, q.codomain), codomain.space().name().into()));
    }
    AffineChannel::validated(p.matrix.kron(&q.matrix), domain.space().clone(), codomain.space().clone())
}

fn square_composite(b: &AffineChannel) -> Result<(), ChannelError> {
    let f = b.codomain.factors().ok_or(ChannelError::NotSquareComposite)?;
    if *f.a != *b.domain || *f.b != *b.domain {
        return Err(ChannelError::NotSquareComposite);
    }
    Ok(())
}

/// `B = (B' + σ ∘ B')/2`; satisfies `σ ∘ B = B`.
pub fn symmetrize(b: &AffineChannel) -> Result<AffineChannel, ChannelError> {
    square_composite(b)?;
    let sigma = swap_matrix(b.domain.dim());
    let m = b.matrix.add(&sigma.mul(&b.matrix)).scale(&rat(1, 2));
    Ok(AffineChannel::new_unchecked(m, b.domain.clone(), b.codomain.clone()))
}

/// `B_A(ω) = (B(ω))_A` as an endochannel.
pub fn marginal_channel_a(b: &AffineChannel) -> Result<AffineChannel, ChannelError> {
    square_composite(b)?;
    let d = b.domain.dim();
    let m = marginal_a_matrix(d, b.domain.unit()).mul(&b.matrix);
    Ok(AffineChannel::new_unchecked(m, b.domain.clone(), b.domain.clone()))
}

/// `B_B(ω) = (B(ω))_B` as an endochannel.
pub fn marginal_channel_b(b: &AffineChannel) -> Result<AffineChannel, ChannelError> {
    square_composite(b)?;
    let m = marginal_b_matrix(b.domain.unit(), b.domain.dim()).mul(&b.matrix);
    Ok(AffineChannel::new_unchecked(m, b.domain.clone(), b.domain.clone()))
}

fn fixed_space_equations(t: &AffineChannel) -> Vec<Hyperplane> {
    let d = t.domain.dim();
    let diff = t.matrix.sub(&Matrix::identity(d));
    diff.row_vectors().into_iter().map(|r| Hyperplane::new(r, Scalar::zero())).collect()
}

/// `Ω ∩ ker(T - I)`. Empty only for an invalid channel.
pub fn fixed_set(t: &AffineChannel) -> Result<Polytope, ChannelError> {
    if !t.is_endochannel() {
        return Err(ChannelError::NotEndochannel);
    }
    Ok(t.domain.omega().intersect_with_affine(&fixed_space_equations(t))?)
}

/// Exact limit of the Cesàro averages `(1/n) Σ_{k=1}^n T^k`: the projection onto
/// `ker(T - I)` along `im(T - I)`.
///
/// For a channel mapping `Ω` into itself the powers of `T` are bounded, so the
/// eigenvalue 1 is semisimple and the two subspaces are complementary. The
/// result is idempotent with range polytope `fixed_set(T)`.
pub fn compression(t: &AffineChannel) -> Result<AffineChannel, ChannelError> {
    if !t.is_endochannel() {
        return Err(ChannelError::NotEndochannel);
    }
    let d = t.domain.dim();
    let diff = t.matrix.sub(&Matrix::identity(d));
    let kernel = nullspace(d, &diff.row_vectors());
    let image = column_basis(&diff);
    if kernel.len() + image.len() != d {
        return Err(ChannelError::NoDecomposition);
    }
    let mut basis = kernel.clone();
    basis.extend(image);
    let s = Matrix::from_cols(d, &basis);
    let s_inv = inverse(&s).ok_or(ChannelError::NoDecomposition)?;
    let mut keep = Matrix::zeros(d, d);
    for i in 0..kernel.len() {
        keep[(i, i)] = Scalar::from_integer(1.into());
    }
    let p = s.mul(&keep).mul(&s_inv);
    Ok(AffineChannel::new_unchecked(p, t.domain.clone(), t.domain.clone()))
}

/// `P ∘ P = P`.
pub fn is_idempotent(p: &AffineChannel) -> bool {
    p.matrix.mul(&p.matrix) == p.matrix
}

/// Range polytope `P(Ω) = conv{P(v)}`.
pub fn range_polytope(p: &AffineChannel) -> Result<Polytope, ChannelError> {
    let dim = p.codomain.dim();
    Ok(p.domain.omega().map_points(dim, |v| p.apply(v))?)
}

/// Pulls an effect on the compressed set back to `Ω`: `e ↦ e ∘ P`.
///
/// `effect` is a functional on the span of `P(Ω)`, given in the coordinates of
/// `V(Ω)` (its values off that span do not matter). It must lie in `[0, 1]` on
/// `P(Ω)`; the lift then lies in `[0, 1]` on `Ω` and agrees with `effect` on
/// `P(Ω)`.
pub fn lift_effect(p: &AffineChannel, effect: &Effect) -> Result<Effect, ChannelError> {
    if !p.is_endochannel() {
        return Err(ChannelError::NotEndochannel);
    }
    if !is_idempotent(p) {
        return Err(ChannelError::NotIdempotent);
    }
    for (i, v) in p.domain.vertices().iter().enumerate() {
        let value = effect.eval(&p.apply(v));
        if value < Scalar::zero() || value > Scalar::from_integer(1.into()) {
            return Err(ChannelError::EffectOutOfRange { vertex: i, value: crate::scalar::format_scalar(&value) });
        }
    }
    Ok(Effect(p.matrix.covec_mul(&effect.0)))
}

/// Outcome of the iterative Cesàro cross-check.
#[derive(Debug, Clone)]
pub struct CesaroAverage {
    pub matrix: Vec<Vec<f64>>,
    /// Doubling steps performed; the average covers `2^iterations` powers.
    pub iterations: usize,
    pub converged: bool,
    pub last_difference: f64,
}

/// Default stopping threshold on the max-norm change between averages.
pub const CESARO_TOLERANCE: f64 = 1e-12;
/// Default iteration cap.
pub const CESARO_MAX_ITERATIONS: usize = 1_000_000;

/// Binary fixed point with `FIXED_BITS` fractional bits.
const FIXED_BITS: usize = 512;

type Fixed = Vec<Vec<BigInt>>;

fn to_fixed(m: &Matrix) -> Fixed {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| {
                    let x = &m[(i, j)];
                    (x.numer() << FIXED_BITS) / x.denom()
                })
                .collect()
        })
        .collect()
}

fn fixed_to_f64(x: &BigInt) -> f64 {
    // Keep 64 significant fractional bits before converting.
    let shifted: BigInt = x >> (FIXED_BITS - 64);
    shifted.to_f64().unwrap_or(f64::NAN) / 2f64.powi(64)
}

fn fixed_mul(a: &Fixed, b: &Fixed) -> Fixed {
    let m = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| {
                    let acc: BigInt = row.iter().zip(b).map(|(x, brow)| x * &brow[j]).sum();
                    acc >> FIXED_BITS
                })
                .collect()
        })
        .collect()
}

/// Cesàro averages `P_n = (1/n) Σ_{k=1}^n T^k` along the dyadic subsequence
/// `n = 2^j`, via `P_{2n} = (P_n + T^n P_n)/2`.
///
/// Each doubling step counts as one iteration. The error of `P_n` decays like
/// `1/n`, so stepping `n` linearly could not reach a 1e-12 change within a
/// million steps; doubling reaches it in about forty. Repeated squaring
/// amplifies rounding by roughly `2^j`, which destroys plain `f64` long before
/// that, so the iteration runs in 512-bit binary fixed point and only the
/// result is rounded to `f64`. Used only as a cross-check of [`compression`].
pub fn cesaro_average(t: &AffineChannel, tolerance: f64, max_iterations: usize) -> CesaroAverage {
    let mut power = to_fixed(&t.matrix); // T^n
    let mut avg = power.clone(); // P_n with n = 1
    let mut last_difference = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        let shifted = fixed_mul(&power, &avg);
        let next: Fixed = avg
            .iter()
            .zip(&shifted)
            .map(|(a, s)| a.iter().zip(s).map(|(x, y)| (x + y) >> 1usize).collect())
            .collect();
        last_difference = avg
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| fixed_to_f64(&(x - y)).abs()))
            .fold(0.0, f64::max);
        avg = next;
        if last_difference < tolerance {
            converged = true;
            break;
        }
        power = fixed_mul(&power, &power);
    }
    let matrix = avg.iter().map(|row| row.iter().map(fixed_to_f64).collect()).collect();
    CesaroAverage { matrix, iterations, converged, last_difference }
}

/// Largest entrywise difference between an exact and a floating matrix.
pub fn max_abs_difference(exact: &Matrix, approx: &[Vec<f64>]) -> f64 {
    exact
        .to_f64()
        .iter()
        .zip(approx)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}
