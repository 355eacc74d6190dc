//! State spaces, effects and measurements of a single system.
//!
//! A state space is a polytope `Ω` sitting in the hyperplane `u(x) = 1` of its
//! linear span, with `u` the unit effect. Affine maps on `Ω` are therefore
//! linear maps on the span.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{One, Signed, Zero};

use crate::composite::TensorVariant;
use crate::linalg::{independent_subset, rank, Matrix};
use crate::polytope::{halfspaces_to_vertices, HRep, Halfspace, Polytope, PolytopeError, VertexEnumeration};
use crate::scalar::{dot, int, rat, Scalar, Show, Vector};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpaceError {
    #[error("a classical system needs at least one outcome")]
    NoOutcomes,
    #[error("a polygon needs at least 3 vertices, got {0}")]
    TooFewPolygonVertices(usize),
    #[error("unit functional has length {unit} but states live in dimension {dim}")]
    UnitDimension { unit: usize, dim: usize },
    #[error("unit evaluates to {value} on vertex {vertex}, expected 1")]
    UnitNotOne { vertex: String, value: String },
    #[error("vertices span a {rank}-dimensional subspace of the {dim}-dimensional ambient space")]
    SpanDeficient { rank: usize, dim: usize },
    #[error("state space is empty")]
    Empty,
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

/// Bipartite structure of a joint state space.
#[derive(Clone)]
pub struct Factors {
    pub a: Arc<StateSpace>,
    pub b: Arc<StateSpace>,
    pub variant: TensorVariant,
}

pub struct StateSpace {
    name: String,
    unit: Vector,
    omega: Polytope,
    factors: Option<Factors>,
    effects: OnceLock<Vec<Effect>>,
}

impl Clone for StateSpace {
    fn clone(&self) -> Self {
        StateSpace {
            name: self.name.clone(),
            unit: self.unit.clone(),
            omega: self.omega.clone(),
            factors: self.factors.clone(),
            effects: self.effects.clone(),
        }
    }
}

impl fmt::Debug for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateSpace")
            .field("name", &self.name)
            .field("unit", &Show(&self.unit).to_string())
            .field("omega", &self.omega)
            .finish()
    }
}

/// Two spaces are the same system when they share unit and state polytope.
impl PartialEq for StateSpace {
    fn eq(&self, other: &Self) -> bool {
        self.unit == other.unit && self.omega == other.omega
    }
}

impl Eq for StateSpace {}

/// A functional on the span with values in `[0, 1]` on every state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Effect(pub Vector);

impl Effect {
    pub fn eval(&self, state: &[Scalar]) -> Scalar {
        dot(&self.0, state)
    }

    pub fn functional(&self) -> &[Scalar] {
        &self.0
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Show(&self.0).fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measurement {
    pub outcomes: Vec<Effect>,
    pub labels: Vec<String>,
}

impl Measurement {
    /// Outcomes labelled by their index.
    pub fn new(outcomes: Vec<Effect>) -> Self {
        let labels = (0..outcomes.len()).map(|i| i.to_string()).collect();
        Measurement { outcomes, labels }
    }

    pub fn with_labels(outcomes: Vec<Effect>, labels: Vec<String>) -> Self {
        assert_eq!(outcomes.len(), labels.len());
        Measurement { outcomes, labels }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Outcome probabilities for `state`.
    pub fn probabilities(&self, state: &[Scalar]) -> Vector {
        self.outcomes.iter().map(|e| e.eval(state)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasurementViolation {
    WrongLength { outcome: usize, found: usize, expected: usize },
    OutOfRange { outcome: usize, vertex: usize, value: Scalar },
    SumNotUnit { sum: Vector },
}

impl fmt::Display for MeasurementViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasurementViolation::WrongLength { outcome, found, expected } => {
                write!(f, "outcome {outcome} has length {found}, expected {expected}")
            }
            MeasurementViolation::OutOfRange { outcome, vertex, value } => write!(
                f,
                "outcome {outcome} takes value {} on vertex {vertex}, outside [0, 1]",
                crate::scalar::format_scalar(value)
            ),
            MeasurementViolation::SumNotUnit { sum } => write!(f, "outcomes sum to {}, not the unit", Show(sum)),
        }
    }
}

impl StateSpace {
    /// Validates the unit and span conditions.
    pub fn new(name: impl Into<String>, unit: Vector, omega: Polytope) -> Result<Self, SpaceError> {
        if unit.len() != omega.dim() {
            return Err(SpaceError::UnitDimension { unit: unit.len(), dim: omega.dim() });
        }
        if omega.is_empty() {
            return Err(SpaceError::Empty);
        }
        for v in omega.vertices() {
            let value = dot(&unit, v);
            if !value.is_one() {
                return Err(SpaceError::UnitNotOne {
                    vertex: Show(v).to_string(),
                    value: crate::scalar::format_scalar(&value),
                });
            }
        }
        let r = rank(omega.dim(), omega.vertices());
        if r != omega.dim() {
            return Err(SpaceError::SpanDeficient { rank: r, dim: omega.dim() });
        }
        Ok(StateSpace { name: name.into(), unit, omega, factors: None, effects: OnceLock::new() })
    }

    pub fn from_vertices(name: impl Into<String>, unit: Vector, vertices: Vec<Vector>) -> Result<Self, SpaceError> {
        let dim = unit.len();
        let omega = Polytope::from_points(dim, vertices)?;
        Self::new(name, unit, omega)
    }

    pub fn from_hrep(name: impl Into<String>, unit: Vector, hrep: &HRep) -> Result<Self, SpaceError> {
        let dim = unit.len();
        let omega = Polytope::from_hrep(dim, hrep)?;
        Self::new(name, unit, omega)
    }

    pub(crate) fn with_factors(mut self, factors: Factors) -> Self {
        self.factors = Some(factors);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Dimension of the span `V(Ω)`.
    pub fn dim(&self) -> usize {
        self.unit.len()
    }

    pub fn unit(&self) -> &[Scalar] {
        &self.unit
    }

    pub fn unit_effect(&self) -> Effect {
        Effect(self.unit.clone())
    }

    pub fn omega(&self) -> &Polytope {
        &self.omega
    }

    pub fn vertices(&self) -> &[Vector] {
        self.omega.vertices()
    }

    pub fn factors(&self) -> Option<&Factors> {
        self.factors.as_ref()
    }

    /// Exact membership of a vector in `Ω`.
    pub fn contains(&self, state: &[Scalar]) -> bool {
        state.len() == self.dim() && dot(&self.unit, state).is_one() && self.omega.contains(state)
    }

    pub fn is_pure(&self, state: &[Scalar]) -> bool {
        self.vertices().iter().any(|v| v.as_slice() == state)
    }

    /// The uniform mixture of the vertices.
    pub fn centroid(&self) -> Vector {
        crate::scalar::centroid(self.vertices())
    }

    /// `Ω` is a simplex: its vertices are linearly independent in `V(Ω)`.
    pub fn is_classical(&self) -> bool {
        self.omega.is_simplex()
    }

    /// Extreme points of the effect polytope `{a : 0 <= a(ω) <= 1 on Ω}`, in
    /// lexicographic order. Always contains `0` and `u`.
    pub fn effect_polytope_vertices(&self) -> &[Effect] {
        self.effects.get_or_init(|| {
            let d = self.dim();
            let mut inequalities = Vec::with_capacity(2 * self.vertices().len());
            for v in self.vertices() {
                inequalities.push(Halfspace::new(v.iter().map(|x| -x.clone()).collect(), Scalar::zero()));
                inequalities.push(Halfspace::new(v.clone(), Scalar::one()));
            }
            match halfspaces_to_vertices(d, &HRep { inequalities, equalities: Vec::new() }) {
                Ok(VertexEnumeration::Bounded(vs)) => vs.into_iter().map(Effect).collect(),
                other => unreachable!("effect polytope of a spanning state space is a nonempty polytope: {other:?}"),
            }
        })
    }

    /// Extreme effects lying on extreme rays of the cone of positive
    /// functionals, i.e. those vanishing on a facet of `Ω`. Positivity on
    /// these is positivity on every effect.
    pub fn ray_effects(&self) -> Vec<Effect> {
        let d = self.dim();
        self.effect_polytope_vertices()
            .iter()
            .filter(|e| {
                let zeros: Vec<Vector> = self.vertices().iter().filter(|v| e.eval(v).is_zero()).cloned().collect();
                !zeros.is_empty() && rank(d, &zeros) + 1 == d
            })
            .cloned()
            .collect()
    }

    /// Checks effect bounds on every vertex and exact summation to `u`.
    pub fn validate_measurement(&self, m: &Measurement) -> Result<(), Vec<MeasurementViolation>> {
        let d = self.dim();
        let mut violations = Vec::new();
        let mut sum = vec![Scalar::zero(); d];
        for (i, e) in m.outcomes.iter().enumerate() {
            if e.0.len() != d {
                violations.push(MeasurementViolation::WrongLength { outcome: i, found: e.0.len(), expected: d });
                continue;
            }
            for (vi, v) in self.vertices().iter().enumerate() {
                let value = e.eval(v);
                if value.is_negative() || value > Scalar::one() {
                    violations.push(MeasurementViolation::OutOfRange { outcome: i, vertex: vi, value });
                }
            }
            for (s, x) in sum.iter_mut().zip(&e.0) {
                *s += x;
            }
        }
        if sum != self.unit {
            violations.push(MeasurementViolation::SumNotUnit { sum });
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Linear maps of `V(Ω)` permuting the vertices of `Ω`, identity first.
    pub fn symmetries(&self) -> Vec<Matrix> {
        let d = self.dim();
        let verts = self.vertices();
        let basis = independent_subset(d, verts);
        let basis_matrix = Matrix::from_cols(d, &basis.iter().map(|&i| verts[i].clone()).collect::<Vec<_>>());
        let inv = crate::linalg::inverse(&basis_matrix).expect("vertices span");
        let mut found = Vec::new();
        let mut images = vec![0usize; basis.len()];
        enumerate_injections(verts.len(), basis.len(), &mut images, 0, &mut |assign| {
            let image = Matrix::from_cols(d, &assign.iter().map(|&i| verts[i].clone()).collect::<Vec<_>>());
            let m = image.mul(&inv);
            let mut mapped: Vec<Vector> = verts.iter().map(|v| m.mul_vec(v)).collect();
            mapped.sort();
            if mapped == verts {
                found.push(m);
            }
        });
        let id = Matrix::identity(d);
        found.sort_by_key(|m| m != &id);
        found
    }
}

fn enumerate_injections(n: usize, k: usize, buf: &mut Vec<usize>, depth: usize, f: &mut impl FnMut(&[usize])) {
    if depth == k {
        f(buf);
        return;
    }
    for i in 0..n {
        if buf[..depth].contains(&i) {
            continue;
        }
        buf[depth] = i;
        enumerate_injections(n, k, buf, depth + 1, f);
    }
}

impl fmt::Display for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// The probability simplex on `n` outcomes with `u = (1, ..., 1)`.
pub fn make_classical(n: usize) -> Result<StateSpace, SpaceError> {
    if n == 0 {
        return Err(SpaceError::NoOutcomes);
    }
    let vertices: Vec<Vector> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }).collect())
        .collect();
    let omega = Polytope::from_extreme_points(n, vertices);
    StateSpace::new(format!("classical({n})"), vec![Scalar::one(); n], omega)
}

/// The square gbit: vertices `(±1, ±1, 1)`, `u = (0, 0, 1)`.
pub fn make_square_gbit() -> StateSpace {
    let vertices = vec![
        crate::scalar::vector(&[1, 1, 1]),
        crate::scalar::vector(&[1, -1, 1]),
        crate::scalar::vector(&[-1, 1, 1]),
        crate::scalar::vector(&[-1, -1, 1]),
    ];
    let omega = Polytope::from_extreme_points(3, vertices);
    StateSpace::new("square", crate::scalar::vector(&[0, 0, 1]), omega).expect("square gbit is valid")
}

/// Largest denominator of the tangent half-angle approximants used by
/// [`make_polygon`].
pub const POLYGON_DENOMINATOR: i64 = 32;

/// Best rational approximation of `x` with denominator at most `max_den`;
/// ties go to the smaller denominator.
fn rational_approximation(x: f64, max_den: i64) -> (i64, i64) {
    let mut best = (x.round() as i64, 1i64);
    let mut best_err = (x - best.0 as f64).abs();
    for q in 2..=max_den {
        let p = (x * q as f64).round() as i64;
        let err = (x - p as f64 / q as f64).abs();
        if err + 1e-15 < best_err {
            best = (p, q);
            best_err = err;
        }
    }
    best
}

/// Exact rational point on the unit circle near angle `theta`, from the
/// half-angle parametrization with a rational tangent (or cotangent).
fn circle_point(theta: f64) -> (Scalar, Scalar) {
    let half = theta / 2.0;
    let (t, use_cot) = if half.tan().abs() <= 1.0 { (half.tan(), false) } else { (1.0 / half.tan(), true) };
    let (p, q) = rational_approximation(t, POLYGON_DENOMINATOR);
    let (p2, q2) = (int(p * p), int(q * q));
    let denom = &q2 + &p2;
    let x = (&q2 - &p2) / &denom;
    let y = int(2 * p * q) / &denom;
    if use_cot {
        // cot parametrization: (s^2 - 1, 2 s) / (s^2 + 1) with s = p/q.
        (-x, y)
    } else {
        (x, y)
    }
}

/// Rational approximation of the regular `n`-gon at height `u = 1`.
///
/// Vertex `k` is the exact rational point of the unit circle obtained from the
/// half-angle tangent of `2πk/n`, rounded to a fraction with denominator at
/// most [`POLYGON_DENOMINATOR`]. All points lie exactly on the circle, hence in
/// convex position; the resulting polytope is the model, not the ideal polygon.
pub fn make_polygon(n: usize) -> Result<StateSpace, SpaceError> {
    if n < 3 {
        return Err(SpaceError::TooFewPolygonVertices(n));
    }
    let vertices: Vec<Vector> = (0..n)
        .map(|k| {
            let (x, y) = circle_point(2.0 * PI * k as f64 / n as f64);
            vec![x, y, Scalar::one()]
        })
        .collect();
    let omega = Polytope::from_points(3, vertices)?;
    assert_eq!(omega.vertices().len(), n, "polygon vertices collapsed; raise POLYGON_DENOMINATOR");
    StateSpace::new(format!("polygon({n})"), crate::scalar::vector(&[0, 0, 1]), omega)
}

/// Named builtin spaces accepted by scenario files and the sweep driver.
pub fn builtin(name: &str, param: Option<usize>) -> Option<Result<StateSpace, SpaceError>> {
    match name {
        "classical" | "simplex" => Some(make_classical(param.unwrap_or(2))),
        "bit" => Some(make_classical(2)),
        "trit" => Some(make_classical(3)),
        "square" | "gbit" => Some(Ok(make_square_gbit())),
        "polygon" => Some(make_polygon(param.unwrap_or(5))),
        "triangle" => Some(make_polygon(3)),
        "pentagon" => Some(make_polygon(5)),
        _ => None,
    }
}

/// The effect `(u + s X)/2` style half-effect reading coordinate `axis` of the
/// square gbit with sign `sign`.
pub fn square_half_effect(axis: usize, sign: i64) -> Effect {
    let mut f = vec![Scalar::zero(), Scalar::zero(), rat(1, 2)];
    f[axis] = rat(sign, 2);
    Effect(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::vector;

    #[test]
    fn classical_bit_is_segment() {
        let s = make_classical(2).unwrap();
        assert_eq!(s.vertices(), &[vector(&[0, 1]), vector(&[1, 0])]);
        assert_eq!(s.unit(), vector(&[1, 1]).as_slice());
        assert!(s.is_classical());
    }

    #[test]
    fn classical_point_and_zero() {
        let s = make_classical(1).unwrap();
        assert_eq!(s.vertices(), &[vector(&[1])]);
        assert!(s.is_classical());
        assert_eq!(make_classical(0).unwrap_err(), SpaceError::NoOutcomes);
    }

    #[test]
    fn square_basics() {
        let s = make_square_gbit();
        assert_eq!(s.vertices().len(), 4);
        assert!(s.vertices().iter().all(|v| dot(s.unit(), v).is_one()));
        assert!(!s.is_classical());
    }

    #[test]
    fn square_effects() {
        let s = make_square_gbit();
        let mut expected = vec![
            Effect(vector(&[0, 0, 0])),
            Effect(vector(&[0, 0, 1])),
            square_half_effect(0, 1),
            square_half_effect(0, -1),
            square_half_effect(1, 1),
            square_half_effect(1, -1),
        ];
        expected.sort();
        assert_eq!(s.effect_polytope_vertices(), expected.as_slice());
        assert_eq!(s.ray_effects().len(), 4);
    }

    #[test]
    fn polygon_family() {
        assert!(make_polygon(3).unwrap().is_classical());
        assert!(!make_polygon(5).unwrap().is_classical());
        assert!(!make_polygon(7).unwrap().is_classical());
        assert_eq!(make_polygon(2).unwrap_err(), SpaceError::TooFewPolygonVertices(2));
        for n in 3..=8 {
            let p = make_polygon(n).unwrap();
            assert_eq!(p.vertices().len(), n);
        }
    }

    #[test]
    fn polygon_four_is_the_diamond() {
        let p = make_polygon(4).unwrap();
        let mut expected = vec![vector(&[1, 0, 1]), vector(&[0, 1, 1]), vector(&[-1, 0, 1]), vector(&[0, -1, 1])];
        expected.sort();
        assert_eq!(p.vertices(), expected.as_slice());
    }

    #[test]
    fn measurement_validation() {
        let bit = make_classical(2).unwrap();
        let coords = Measurement::new(vec![Effect(vector(&[1, 0])), Effect(vector(&[0, 1]))]);
        assert!(bit.validate_measurement(&coords).is_ok());
        assert!(bit.validate_measurement(&Measurement::new(vec![bit.unit_effect()])).is_ok());
        let doubled = Measurement::new(vec![Effect(vector(&[1, 0])), Effect(vector(&[1, 0]))]);
        let errs = bit.validate_measurement(&doubled).unwrap_err();
        assert_eq!(errs, vec![MeasurementViolation::SumNotUnit { sum: vector(&[2, 0]) }]);
    }

    #[test]
    fn out_of_range_effect_is_pinpointed() {
        let s = make_square_gbit();
        let m = Measurement::new(vec![Effect(vector(&[1, 0, 0])), Effect(vector(&[-1, 0, 1]))]);
        let errs = s.validate_measurement(&m).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, MeasurementViolation::OutOfRange { outcome: 0, .. })));
    }

    #[test]
    fn square_has_dihedral_symmetry() {
        assert_eq!(make_square_gbit().symmetries().len(), 8);
        assert_eq!(make_classical(3).unwrap().symmetries().len(), 6);
    }

    #[test]
    fn unit_violation_is_rejected() {
        let err = StateSpace::from_vertices("bad", vector(&[1, 1]), vec![vector(&[1, 0]), vector(&[0, 2])]).unwrap_err();
        assert!(matches!(err, SpaceError::UnitNotOne { .. }));
    }
}
