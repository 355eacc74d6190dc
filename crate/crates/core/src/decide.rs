//! Decision procedures for joint distinguishability, cloning and broadcasting.
//!
//! Every procedure is an exact LP. A "yes" carries a witness (measurement or
//! channel) that is re-checked by substitution before it is returned; a "no"
//! carries the LP together with a Farkas certificate for it.
//!
//! The broadcast side also runs the structural pipeline in reverse: starting
//! from any broadcasting channel it symmetrizes, compresses onto the fixed set
//! `Γ` of the marginal channel and returns `Γ`'s vertices as jointly
//! distinguishable generators of a simplex containing the input states.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};

use crate::channel::{
    cesaro_average, compression, max_abs_difference, CESARO_MAX_ITERATIONS, CESARO_TOLERANCE, fixed_set, is_idempotent, lift_effect, marginal_channel_a, marginal_channel_b, range_polytope,
    symmetrize, AffineChannel, ChannelError,
};
use crate::composite::{marginal_a_matrix, marginal_b_matrix, max_tensor, min_tensor, CompositeError, CompositeSpace, TensorVariant};
use crate::linalg::{inverse, rank, Matrix};
use crate::lp::{lp_feasible, FarkasCertificate, Feasibility, LpSystem, Relation, VarKind};
use crate::polytope::{Membership, Polytope, PolytopeError};
use crate::scalar::{centroid, format_scalar, kron, rat, Scalar, Show, Vector};
use crate::space::{Effect, Measurement, StateSpace};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecisionError {
    #[error("state {index} has length {found}, expected {expected}")]
    StateDimension { index: usize, found: usize, expected: usize },
    #[error("state {index} {state} is not in the state space")]
    StateOutsideSpace { index: usize, state: String },
    #[error("measurement has {found} outcomes for {expected} states")]
    OutcomeCount { found: usize, expected: usize },
    #[error("measurement is invalid: {0}")]
    InvalidMeasurement(String),
    #[error("outcome {outcome} gives probability {value} on state {state}, expected {expected}")]
    NotDistinguishing { outcome: usize, state: usize, value: String, expected: String },
    #[error("generators are affinely dependent")]
    DependentGenerators,
    #[error("composite is not built over the state set's space")]
    SpaceMismatch,
    #[error("channel does not broadcast state {0}")]
    NotBroadcast(usize),
    #[error("cover extraction failed: {0}")]
    CoverFailed(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Composite(#[from] CompositeError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

/// A finite set of states of one space, duplicates removed.
#[derive(Debug, Clone)]
pub struct StateSet {
    space: Arc<StateSpace>,
    states: Vec<Vector>,
    warnings: Vec<String>,
}

impl StateSet {
    /// Checks every state for exact membership in `Ω`. Repeated states are
    /// dropped (first occurrence kept) with a warning.
    pub fn new(space: Arc<StateSpace>, states: Vec<Vector>) -> Result<Self, DecisionError> {
        let d = space.dim();
        let mut kept: Vec<Vector> = Vec::with_capacity(states.len());
        let mut warnings = Vec::new();
        for (i, s) in states.into_iter().enumerate() {
            if s.len() != d {
                return Err(DecisionError::StateDimension { index: i, found: s.len(), expected: d });
            }
            if !space.contains(&s) {
                return Err(DecisionError::StateOutsideSpace { index: i, state: Show(&s).to_string() });
            }
            if kept.contains(&s) {
                warnings.push(format!("duplicate state {} (input {i}) removed", Show(&s)));
                continue;
            }
            kept.push(s);
        }
        Ok(StateSet { space, states: kept, warnings })
    }

    /// All vertices of `Ω`.
    pub fn all_vertices(space: &Arc<StateSpace>) -> Self {
        StateSet { space: space.clone(), states: space.vertices().to_vec(), warnings: Vec::new() }
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Distinguish,
    Clone,
    Broadcast,
    SimplexCover,
    Analyze,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Distinguish => "distinguish",
            Task::Clone => "clone",
            Task::Broadcast => "broadcast",
            Task::SimplexCover => "simplex_cover",
            Task::Analyze => "analyze",
        })
    }
}

/// Output of [`extract_simplex_cover`].
#[derive(Debug, Clone)]
pub struct SimplexCover {
    /// The broadcaster the pipeline started from.
    pub broadcaster: AffineChannel,
    /// `(B' + σ ∘ B')/2`.
    pub symmetrized: AffineChannel,
    /// Compression of `Ω` onto `Γ = Fix(B_A)`.
    pub compression: AffineChannel,
    /// `Γ`, the states broadcast by the symmetrized channel.
    pub broadcast_set: Polytope,
    /// Vertices of `Γ`.
    pub generators: Vec<Vector>,
    /// Measurement on `Ω` (lifted through the compression) with
    /// `g_i(e_j) = δ_ij` on the generators.
    pub measurement: Measurement,
    /// Convex weights of each input state over `generators`.
    pub weights: Vec<Vector>,
    /// `Γ` is a simplex.
    pub gamma_is_simplex: bool,
    /// `Q = (P ⊗ P) ∘ B` has both marginals equal to the identity on `Γ`'s
    /// vertices.
    pub q_broadcasts_generators: bool,
}

#[derive(Debug, Clone)]
pub enum Witness {
    Measurement(Measurement),
    Channel(AffineChannel),
    Cover(Box<SimplexCover>),
}

/// An infeasible LP together with its Farkas certificate.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub system: LpSystem,
    pub farkas: FarkasCertificate,
}

impl Certificate {
    pub fn verify(&self) -> bool {
        self.farkas.verify(&self.system)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CrossCheck {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CrossCheck { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone)]
pub struct DecisionReport {
    pub task: Task,
    pub subject: StateSet,
    /// Variant of the composite the channel LPs targeted, if any.
    pub composite: Option<TensorVariant>,
    pub verdict: bool,
    pub witness: Option<Witness>,
    pub certificate: Option<Certificate>,
    pub cross_checks: Vec<CrossCheck>,
    pub warnings: Vec<String>,
    pub elapsed: Duration,
}

impl DecisionReport {
    fn new(task: Task, subject: &StateSet, composite: Option<TensorVariant>) -> Self {
        DecisionReport {
            task,
            subject: subject.clone(),
            composite,
            verdict: false,
            witness: None,
            certificate: None,
            cross_checks: Vec::new(),
            warnings: subject.warnings.clone(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn all_checks_passed(&self) -> bool {
        self.cross_checks.iter().all(|c| c.passed)
    }

    /// Re-verifies the report by substitution: the witness against its
    /// defining conditions, or the certificate against its LP.
    pub fn reverify(&self) -> bool {
        if !self.verdict {
            return self.witness.is_none() && self.certificate.as_ref().is_some_and(Certificate::verify);
        }
        if self.certificate.is_some() {
            return false;
        }
        let states = self.subject.states();
        match &self.witness {
            Some(Witness::Measurement(m)) => check_distinguishes(&self.subject, m).is_ok(),
            Some(Witness::Channel(c)) => {
                c.is_valid()
                    && match self.task {
                        Task::Clone => states.iter().all(|s| c.clones(s)),
                        _ => states.iter().all(|s| c.broadcasts(s)),
                    }
            }
            Some(Witness::Cover(cover)) => {
                cover.broadcaster.is_valid()
                    && states.iter().all(|s| cover.broadcaster.broadcasts(s))
                    && check_cover(&self.subject, cover).is_ok()
            }
            None => false,
        }
    }
}

/// Checks `m` is a valid measurement with `ω_i(e_j) = δ_ij`.
pub fn check_distinguishes(ss: &StateSet, m: &Measurement) -> Result<(), DecisionError> {
    let expected = ss.len().max(1);
    if m.len() != expected {
        return Err(DecisionError::OutcomeCount { found: m.len(), expected });
    }
    if let Err(v) = ss.space.validate_measurement(m) {
        let text: Vec<String> = v.iter().map(ToString::to_string).collect();
        return Err(DecisionError::InvalidMeasurement(text.join("; ")));
    }
    for (i, s) in ss.states.iter().enumerate() {
        for (j, e) in m.outcomes.iter().enumerate() {
            let value = e.eval(s);
            let expected = if i == j { Scalar::one() } else { Scalar::zero() };
            if value != expected {
                return Err(DecisionError::NotDistinguishing {
                    outcome: j,
                    state: i,
                    value: format_scalar(&value),
                    expected: format_scalar(&expected),
                });
            }
        }
    }
    Ok(())
}

fn check_composite(ss: &StateSet, composite: &CompositeSpace) -> Result<(), DecisionError> {
    if **composite.factor_a() != *ss.space || **composite.factor_b() != *ss.space {
        return Err(DecisionError::SpaceMismatch);
    }
    Ok(())
}

/// The LP `e_j(v) >= 0` on every vertex, `Σ_j e_j = u`, `e_j(ω_i) = δ_ij`.
/// Variable `j * d + c` is coordinate `c` of outcome `j`.
pub fn distinguishability_system(ss: &StateSet) -> LpSystem {
    let space = &ss.space;
    let d = space.dim();
    let n = ss.len().max(1);
    let mut sys = LpSystem::new();
    sys.add_vars(n * d, VarKind::Free);
    for j in 0..n {
        for (k, v) in space.vertices().iter().enumerate() {
            sys.add_sparse((0..d).map(|c| (j * d + c, v[c].clone())), Relation::Ge, Scalar::zero(), format!("e{j}(vertex {k}) >= 0"));
        }
    }
    for c in 0..d {
        sys.add_sparse((0..n).map(|j| (j * d + c, Scalar::one())), Relation::Eq, space.unit()[c].clone(), format!("sum_j e_j[{c}] = u[{c}]"));
    }
    for (i, s) in ss.states.iter().enumerate() {
        for j in 0..n {
            let rhs = if i == j { Scalar::one() } else { Scalar::zero() };
            sys.add_sparse((0..d).map(|c| (j * d + c, s[c].clone())), Relation::Eq, rhs, format!("e{j}(state {i}) = δ"));
        }
    }
    sys
}

/// `ω_i(e_j) = δ_ij` for a single measurement.
pub fn jointly_distinguishable(ss: &StateSet) -> DecisionReport {
    let start = Instant::now();
    let mut report = DecisionReport::new(Task::Distinguish, ss, None);
    let sys = distinguishability_system(ss);
    match lp_feasible(&sys) {
        Feasibility::Feasible(x) => {
            let d = ss.space.dim();
            let outcomes: Vec<Effect> = x.chunks(d).map(|c| Effect(c.to_vec())).collect();
            let m = Measurement::new(outcomes);
            let ok = check_distinguishes(ss, &m);
            report.cross_checks.push(CrossCheck::new("witness measurement re-validates", ok.is_ok(), ok.err().map(|e| e.to_string()).unwrap_or_default()));
            report.verdict = true;
            report.witness = Some(Witness::Measurement(m));
        }
        Feasibility::Infeasible(farkas) => {
            let cert = Certificate { system: sys, farkas };
            report.cross_checks.push(CrossCheck::new("farkas certificate verifies", cert.verify(), ""));
            report.certificate = Some(cert);
        }
    }
    report.elapsed = start.elapsed();
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelGoal {
    Clone,
    Broadcast,
}

/// Variable index of channel matrix entry `(r, c)`.
fn t_var(r: usize, c: usize, d: usize) -> usize {
    r * d + c
}

/// LP over the entries of a channel matrix `T: V(Ω) -> V(Ω) ⊗ V(Ω)`:
/// unit preservation, every vertex image inside the composite, and either
/// `T(ω_i) = ω_i ⊗ ω_i` or both marginals of `T(ω_i)` equal to `ω_i`.
///
/// Vertex images are constrained through the composite's facets; for the
/// minimal tensor product these come from double description of the product
/// vertices and are cached on the composite.
pub fn channel_system(ss: &StateSet, composite: &CompositeSpace, goal: ChannelGoal) -> LpSystem {
    let space = &ss.space;
    let d = space.dim();
    let dd = d * d;
    let mut sys = LpSystem::new();
    sys.add_vars(dd * d, VarKind::Free);
    let image_terms = |v: &[Scalar], r: usize| -> Vec<(usize, Scalar)> {
        (0..d).filter(|&c| !v[c].is_zero()).map(|c| (t_var(r, c, d), v[c].clone())).collect()
    };

    let joint_unit = composite.unit().to_vec();
    for c in 0..d {
        sys.add_sparse(
            (0..dd).filter(|&r| !joint_unit[r].is_zero()).map(|r| (t_var(r, c, d), joint_unit[r].clone())),
            Relation::Eq,
            space.unit()[c].clone(),
            format!("unit preservation [{c}]"),
        );
    }

    let h = composite.joint().hrep();
    for (k, v) in space.vertices().iter().enumerate() {
        for (f, facet) in h.inequalities.iter().enumerate() {
            let terms = (0..dd).filter(|&r| !facet.normal[r].is_zero()).flat_map(|r| {
                image_terms(v, r).into_iter().map(move |(j, a)| (j, a * &facet.normal[r]))
            });
            sys.add_sparse(terms.collect::<Vec<_>>(), Relation::Le, facet.offset.clone(), format!("T(vertex {k}) facet {f}"));
        }
        for (q, eq) in h.equalities.iter().enumerate() {
            let terms = (0..dd).filter(|&r| !eq.normal[r].is_zero()).flat_map(|r| {
                image_terms(v, r).into_iter().map(move |(j, a)| (j, a * &eq.normal[r]))
            });
            sys.add_sparse(terms.collect::<Vec<_>>(), Relation::Eq, eq.offset.clone(), format!("T(vertex {k}) hull equality {q}"));
        }
    }

    for (i, s) in ss.states.iter().enumerate() {
        match goal {
            ChannelGoal::Clone => {
                let target = kron(s, s);
                for r in 0..dd {
                    sys.add_sparse(image_terms(s, r), Relation::Eq, target[r].clone(), format!("T(state {i})[{r}] = (ω⊗ω)[{r}]"));
                }
            }
            ChannelGoal::Broadcast => {
                let ma = marginal_a_matrix(d, space.unit());
                let mb = marginal_b_matrix(space.unit(), d);
                for (name, m) in [("A", &ma), ("B", &mb)] {
                    for a in 0..d {
                        let terms: Vec<(usize, Scalar)> = (0..dd)
                            .filter(|&r| !m[(a, r)].is_zero())
                            .flat_map(|r| image_terms(s, r).into_iter().map(move |(j, x)| (j, x * &m[(a, r)])))
                            .collect();
                        sys.add_sparse(terms, Relation::Eq, s[a].clone(), format!("marginal {name} of T(state {i})[{a}]"));
                    }
                }
            }
        }
    }
    sys
}

fn channel_from_solution(x: &[Scalar], ss: &StateSet, composite: &CompositeSpace) -> AffineChannel {
    let d = ss.space.dim();
    let rows: Vec<Vector> = (0..d * d).map(|r| x[r * d..(r + 1) * d].to_vec()).collect();
    let m = Matrix::from_rows(d, &rows);
    AffineChannel::new(m, ss.space.clone(), composite.space().clone()).expect("shape matches by construction")
}

fn channel_exists(ss: &StateSet, composite: &CompositeSpace, goal: ChannelGoal) -> Result<DecisionReport, DecisionError> {
    check_composite(ss, composite)?;
    let start = Instant::now();
    let task = match goal {
        ChannelGoal::Clone => Task::Clone,
        ChannelGoal::Broadcast => Task::Broadcast,
    };
    let mut report = DecisionReport::new(task, ss, Some(composite.variant()));
    let sys = channel_system(ss, composite, goal);
    match lp_feasible(&sys) {
        Feasibility::Feasible(x) => {
            let t = channel_from_solution(&x, ss, composite);
            let valid = t.validate();
            report.cross_checks.push(CrossCheck::new(
                "witness channel validates",
                valid.is_ok(),
                valid.err().map(|v| v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")).unwrap_or_default(),
            ));
            let achieved = ss.states.iter().all(|s| match goal {
                ChannelGoal::Clone => t.clones(s),
                ChannelGoal::Broadcast => t.broadcasts(s),
            });
            report.cross_checks.push(CrossCheck::new(format!("witness {}s every state", task), achieved, ""));
            report.verdict = true;
            report.witness = Some(Witness::Channel(t));
        }
        Feasibility::Infeasible(farkas) => {
            let cert = Certificate { system: sys, farkas };
            report.cross_checks.push(CrossCheck::new("farkas certificate verifies", cert.verify(), ""));
            report.certificate = Some(cert);
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Direct LP for a cloning channel into `composite`; the report also records
/// agreement with [`jointly_distinguishable`].
pub fn cloner_exists(ss: &StateSet, composite: &CompositeSpace) -> Result<DecisionReport, DecisionError> {
    let mut report = channel_exists(ss, composite, ChannelGoal::Clone)?;
    let dist = jointly_distinguishable(ss);
    report.cross_checks.push(CrossCheck::new(
        "cloneable iff jointly distinguishable",
        dist.verdict == report.verdict,
        format!("clone: {}, distinguish: {}", report.verdict, dist.verdict),
    ));
    Ok(report)
}

/// Direct LP for a broadcasting channel into `composite`.
pub fn broadcaster_exists(ss: &StateSet, composite: &CompositeSpace) -> Result<DecisionReport, DecisionError> {
    channel_exists(ss, composite, ChannelGoal::Broadcast)
}

/// Measure-and-prepare cloner `T(ω) = Σ_j e_j(ω) ω_j ⊗ ω_j`, into `composite`.
pub fn construct_cloner(ss: &StateSet, m: &Measurement, composite: &CompositeSpace) -> Result<AffineChannel, DecisionError> {
    check_composite(ss, composite)?;
    check_distinguishes(ss, m)?;
    let preparations: Vec<Vector> = if ss.is_empty() {
        let c = ss.space.centroid();
        vec![kron(&c, &c)]
    } else {
        ss.states.iter().map(|s| kron(s, s)).collect()
    };
    let t = AffineChannel::measure_prepare(&ss.space, composite.space(), &m.outcomes, &preparations);
    t.validate().map_err(|v| DecisionError::Channel(ChannelError::Invalid(v)))?;
    Ok(t)
}

/// The cloner of affinely independent, jointly distinguishable generators,
/// checked to broadcast the generators, their centroid and every pairwise
/// midpoint.
pub fn construct_broadcaster(
    generators: &StateSet,
    m: &Measurement,
    composite: &CompositeSpace,
) -> Result<AffineChannel, DecisionError> {
    if rank(generators.space.dim(), &generators.states) != generators.len() {
        return Err(DecisionError::DependentGenerators);
    }
    let t = construct_cloner(generators, m, composite)?;
    let mut probes: Vec<Vector> = generators.states.clone();
    if !generators.is_empty() {
        probes.push(centroid(&generators.states));
    }
    for i in 0..generators.len() {
        for j in i + 1..generators.len() {
            probes.push(centroid(&[generators.states[i].clone(), generators.states[j].clone()]));
        }
    }
    if let Some(i) = probes.iter().position(|p| !t.broadcasts(p)) {
        return Err(DecisionError::NotBroadcast(i));
    }
    Ok(t)
}

/// Coordinates on a subspace spanned by `basis` (columns), with an exact left
/// inverse.
struct SubspaceChart {
    basis: Matrix,
    left_inverse: Matrix,
}

impl SubspaceChart {
    fn new(dim: usize, spanning: &[Vector]) -> Self {
        let idx = crate::linalg::independent_subset(dim, spanning);
        let cols: Vec<Vector> = idx.iter().map(|&i| spanning[i].clone()).collect();
        let basis = Matrix::from_cols(dim, &cols);
        let bt = basis.transpose();
        let gram_inv = inverse(&bt.mul(&basis)).expect("independent columns");
        SubspaceChart { left_inverse: gram_inv.mul(&bt), basis }
    }

    fn coords(&self, x: &[Scalar]) -> Vector {
        self.left_inverse.mul_vec(x)
    }
}

/// Runs the broadcast-to-simplex pipeline on a channel `b` that broadcasts
/// every state of `ss`:
///
/// 1. symmetrize `B = (B' + σ ∘ B')/2`;
/// 2. `Γ = Fix(B_A)`, the states broadcast by `B`;
/// 3. compress `Ω` onto `Γ`;
/// 4. check `Q = (P ⊗ P) ∘ B` broadcasts `Γ`'s vertices;
/// 5. distinguish `Γ`'s vertices with effects on `Γ` and lift them through `P`;
/// 6. certify each input state as a convex combination of the generators.
pub fn extract_simplex_cover(b: &AffineChannel, ss: &StateSet) -> Result<SimplexCover, DecisionError> {
    if **b.domain() != *ss.space {
        return Err(DecisionError::SpaceMismatch);
    }
    if let Some(i) = ss.states.iter().position(|s| !b.broadcasts(s)) {
        return Err(DecisionError::NotBroadcast(i));
    }
    let space = ss.space.clone();
    let d = space.dim();
    let sym = symmetrize(b)?;
    let marginal = marginal_channel_a(&sym)?;
    if marginal.matrix() != marginal_channel_b(&sym)?.matrix() {
        return Err(DecisionError::CoverFailed("symmetrized marginals differ".into()));
    }
    let gamma = fixed_set(&marginal)?;
    if gamma.is_empty() {
        return Err(DecisionError::CoverFailed("marginal channel has no fixed state".into()));
    }
    let p = compression(&marginal)?;
    if !is_idempotent(&p) {
        return Err(DecisionError::CoverFailed("compression is not idempotent".into()));
    }
    if range_polytope(&p)? != gamma {
        return Err(DecisionError::CoverFailed("range of the compression differs from the fixed set".into()));
    }
    let generators = gamma.vertices().to_vec();
    let gamma_is_simplex = gamma.is_simplex();

    // Q(γ) = (P ⊗ P)(B(γ)) must have both marginals γ on Γ.
    let q = p.matrix().kron(p.matrix()).mul(sym.matrix());
    let ma = marginal_a_matrix(d, space.unit());
    let mb = marginal_b_matrix(space.unit(), d);
    let q_broadcasts_generators = generators.iter().all(|g| {
        let out = q.mul_vec(g);
        ma.mul_vec(&out) == *g && mb.mul_vec(&out) == *g
    });

    // Distinguish the generators inside Γ, in coordinates on its span.
    let chart = SubspaceChart::new(d, &generators);
    let gamma_vertices: Vec<Vector> = generators.iter().map(|g| chart.coords(g)).collect();
    let gamma_unit = chart.basis.covec_mul(space.unit());
    let gamma_space = Arc::new(
        StateSpace::from_vertices("Γ", gamma_unit, gamma_vertices.clone())
            .map_err(|e| DecisionError::CoverFailed(format!("Γ is not a state space: {e}")))?,
    );
    let gamma_set = StateSet::new(gamma_space, gamma_vertices)?;
    let inner = jointly_distinguishable(&gamma_set);
    let Some(Witness::Measurement(inner_m)) = inner.witness else {
        return Err(DecisionError::CoverFailed(format!(
            "vertices of Γ are not jointly distinguishable in Γ (Γ simplex: {gamma_is_simplex})"
        )));
    };
    let mut outcomes = Vec::with_capacity(inner_m.len());
    for e in &inner_m.outcomes {
        let on_omega = Effect(chart.left_inverse.covec_mul(&e.0));
        outcomes.push(lift_effect(&p, &on_omega)?);
    }
    let measurement = Measurement::new(outcomes);

    let hull = Polytope::from_extreme_points(d, generators.clone());
    let mut weights = Vec::with_capacity(ss.len());
    for (i, s) in ss.states.iter().enumerate() {
        match hull.member(s)? {
            // Hull vertices are sorted, as are Γ's, so the orders agree.
            Membership::Inside { weights: w } => weights.push(w),
            Membership::Outside { .. } => {
                return Err(DecisionError::CoverFailed(format!("state {i} lies outside the generated simplex")));
            }
        }
    }
    let cover = SimplexCover {
        broadcaster: b.clone(),
        symmetrized: sym,
        compression: p,
        broadcast_set: gamma,
        generators,
        measurement,
        weights,
        gamma_is_simplex,
        q_broadcasts_generators,
    };
    check_cover(ss, &cover)?;
    Ok(cover)
}

/// Substitution checks on a cover: distinguishing measurement on `Ω`, exact
/// convex weights, broadcast of every generator by the symmetrized channel.
pub fn check_cover(ss: &StateSet, cover: &SimplexCover) -> Result<(), DecisionError> {
    let gens = StateSet {
        space: ss.space.clone(),
        states: cover.generators.clone(),
        warnings: Vec::new(),
    };
    check_distinguishes(&gens, &cover.measurement)?;
    if cover.weights.len() != ss.len() {
        return Err(DecisionError::CoverFailed("one weight vector per state required".into()));
    }
    for (i, (s, w)) in ss.states.iter().zip(&cover.weights).enumerate() {
        let nonneg = w.iter().all(|x| *x >= Scalar::zero());
        let sums = w.iter().fold(Scalar::zero(), |a, x| a + x).is_one();
        if !nonneg || !sums || w.len() != cover.generators.len() || crate::scalar::combination(w, &cover.generators) != *s {
            return Err(DecisionError::CoverFailed(format!("weights for state {i} do not reproduce it")));
        }
    }
    if let Some(i) = cover.generators.iter().position(|g| !cover.symmetrized.broadcasts(g)) {
        return Err(DecisionError::NotBroadcast(i));
    }
    Ok(())
}

/// Generator sets found by the bounded search of [`analyze`].
fn heuristic_cover_search(ss: &StateSet) -> Option<Vec<Vector>> {
    let space = &ss.space;
    let d = space.dim();
    let mut candidates: Vec<Vector> = space.vertices().to_vec();
    for s in &ss.states {
        if !candidates.contains(s) {
            candidates.push(s.clone());
        }
    }
    let n = candidates.len();
    let mut found = None;
    let mut subset = Vec::new();
    fn walk(
        start: usize,
        n: usize,
        max: usize,
        subset: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if !subset.is_empty() && visit(subset) {
            return true;
        }
        if subset.len() == max {
            return false;
        }
        for i in start..n {
            subset.push(i);
            if walk(i + 1, n, max, subset, visit) {
                return true;
            }
            subset.pop();
        }
        false
    }
    walk(0, n, d, &mut subset, &mut |idx| {
        let gens: Vec<Vector> = idx.iter().map(|&i| candidates[i].clone()).collect();
        if rank(d, &gens) != gens.len() {
            return false;
        }
        let hull = Polytope::from_extreme_points(d, gens.clone());
        let covers = ss.states.iter().all(|s| matches!(hull.member(s), Ok(Membership::Inside { .. })));
        if !covers {
            return false;
        }
        let set = StateSet { space: space.clone(), states: gens.clone(), warnings: Vec::new() };
        if jointly_distinguishable(&set).verdict {
            found = Some(gens);
            return true;
        }
        false
    });
    found
}

/// Settings for the floating-point Cesàro cross-check in [`analyze_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CesaroSettings {
    /// Allowed entrywise gap between the iterated average and the exact
    /// compression.
    pub agreement: f64,
    /// Stopping threshold on successive averages.
    pub step_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CesaroSettings {
    fn default() -> Self {
        CesaroSettings { agreement: 1e-9, step_tolerance: CESARO_TOLERANCE, max_iterations: CESARO_MAX_ITERATIONS }
    }
}

/// Compares the iterated Cesàro average of `t` with its exact compression.
pub fn cesaro_check(t: &AffineChannel, settings: &CesaroSettings) -> Result<CrossCheck, DecisionError> {
    let exact = compression(t)?;
    let avg = cesaro_average(t, settings.step_tolerance, settings.max_iterations);
    let gap = max_abs_difference(exact.matrix(), &avg.matrix);
    Ok(CrossCheck::new(
        "Cesàro average matches exact compression",
        avg.converged && gap <= settings.agreement,
        format!("max gap {gap:.3e} after {} doubling steps", avg.iterations),
    ))
}

/// Broadcastability with the full set of cross-checks, against `composite`
/// and the other standard tensor product.
pub fn analyze(ss: &StateSet, composite: &CompositeSpace) -> Result<DecisionReport, DecisionError> {
    check_composite(ss, composite)?;
    let other = match composite.variant() {
        TensorVariant::Min => max_tensor(&ss.space, &ss.space),
        _ => min_tensor(&ss.space, &ss.space),
    };
    analyze_with(ss, composite, &other, &CesaroSettings::default())
}

/// [`analyze`] with the comparison composite and Cesàro settings supplied by
/// the caller.
pub fn analyze_with(
    ss: &StateSet,
    composite: &CompositeSpace,
    other: &CompositeSpace,
    cesaro: &CesaroSettings,
) -> Result<DecisionReport, DecisionError> {
    check_composite(ss, composite)?;
    check_composite(ss, other)?;
    let start = Instant::now();
    let mut report = DecisionReport::new(Task::Analyze, ss, Some(composite.variant()));
    let broadcast = broadcaster_exists(ss, composite)?;
    report.cross_checks.extend(broadcast.cross_checks.iter().cloned());
    report.verdict = broadcast.verdict;

    match broadcast.witness {
        Some(Witness::Channel(b)) => match extract_simplex_cover(&b, ss) {
            Ok(cover) => {
                report.cross_checks.push(CrossCheck::new("Γ is a simplex", cover.gamma_is_simplex, format!("{} vertices", cover.generators.len())));
                report.cross_checks.push(CrossCheck::new("Q broadcasts the vertices of Γ", cover.q_broadcasts_generators, ""));
                let gens = StateSet { space: ss.space.clone(), states: cover.generators.clone(), warnings: Vec::new() };
                let dist = jointly_distinguishable(&gens);
                report.cross_checks.push(CrossCheck::new("generators jointly distinguishable in Ω", dist.verdict, ""));
                report.cross_checks.push(CrossCheck::new("states lie in the generated simplex", true, ""));
                let marginal = marginal_channel_a(&cover.symmetrized)?;
                report.cross_checks.push(cesaro_check(&marginal, cesaro)?);
                report.witness = Some(Witness::Cover(Box::new(cover)));
            }
            Err(e) => {
                report.cross_checks.push(CrossCheck::new("simplex cover extracted", false, e.to_string()));
                report.witness = Some(Witness::Channel(b));
            }
        },
        _ => {
            report.certificate = broadcast.certificate;
            let found = heuristic_cover_search(ss);
            report.cross_checks.push(CrossCheck::new(
                "no distinguishable cover among vertex/state candidates (heuristic)",
                found.is_none(),
                found.map(|g| format!("found generators {}", g.iter().map(|v| Show(v).to_string()).collect::<Vec<_>>().join(", "))).unwrap_or_default(),
            ));
        }
    }

    let other_broadcast = broadcaster_exists(ss, other)?;
    report.cross_checks.push(CrossCheck::new(
        format!("broadcast verdict agrees under ⊗_{}", other.variant()),
        other_broadcast.verdict == report.verdict,
        format!("{}: {}, {}: {}", composite.variant(), report.verdict, other.variant(), other_broadcast.verdict),
    ));

    let clone = cloner_exists(ss, composite)?;
    report.cross_checks.extend(clone.cross_checks.into_iter().filter(|c| c.name.starts_with("cloneable")));

    let all_vertices: BTreeSet<&Vector> = ss.space.vertices().iter().collect();
    let given: BTreeSet<&Vector> = ss.states.iter().collect();
    if all_vertices.is_subset(&given) {
        let classical = ss.space.is_classical();
        report.cross_checks.push(CrossCheck::new(
            "universal cloning only for classical spaces",
            !clone.verdict || classical,
            format!("clone all vertices: {}, classical: {}", clone.verdict, classical),
        ));
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// `(num/den)`-weighted mixture helper used in tests and demos.
pub fn mixture(weights: &[(i64, i64)], points: &[Vector]) -> Vector {
    let w: Vec<Scalar> = weights.iter().map(|&(n, d)| rat(n, d)).collect();
    crate::scalar::combination(&w, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::{max_tensor, min_tensor};
    use crate::scalar::vector;
    use crate::space::{make_classical, make_square_gbit, square_half_effect};

    fn square() -> Arc<StateSpace> {
        Arc::new(make_square_gbit())
    }

    fn set(space: &Arc<StateSpace>, states: &[&[i64]]) -> StateSet {
        StateSet::new(space.clone(), states.iter().map(|s| vector(s)).collect()).unwrap()
    }

    #[test]
    fn classical_bit_vertices_are_distinguishable() {
        let bit = Arc::new(make_classical(2).unwrap());
        let r = jointly_distinguishable(&set(&bit, &[&[1, 0], &[0, 1]]));
        assert!(r.verdict);
        let Some(Witness::Measurement(m)) = &r.witness else { panic!() };
        assert_eq!(m.outcomes, vec![Effect(vector(&[1, 0])), Effect(vector(&[0, 1]))]);
        assert!(r.reverify());
    }

    #[test]
    fn opposite_square_vertices_use_the_x_measurement() {
        let s = square();
        let r = jointly_distinguishable(&set(&s, &[&[1, 1, 1], &[-1, -1, 1]]));
        assert!(r.verdict);
        assert!(r.reverify());
        let ss = set(&s, &[&[1, 1, 1], &[-1, -1, 1]]);
        let x = Measurement::new(vec![square_half_effect(0, 1), square_half_effect(0, -1)]);
        assert!(check_distinguishes(&ss, &x).is_ok());
    }

    #[test]
    fn three_square_vertices_are_not_distinguishable() {
        let s = square();
        let r = jointly_distinguishable(&set(&s, &[&[1, 1, 1], &[1, -1, 1], &[-1, 1, 1]]));
        assert!(!r.verdict);
        assert!(r.certificate.as_ref().unwrap().verify());
        assert!(r.reverify());
    }

    #[test]
    fn duplicates_are_removed_with_warning() {
        let s = square();
        let ss = set(&s, &[&[1, 1, 1], &[1, 1, 1]]);
        assert_eq!(ss.len(), 1);
        assert_eq!(ss.warnings().len(), 1);
    }

    #[test]
    fn states_outside_are_rejected() {
        let s = square();
        let err = StateSet::new(s, vec![vector(&[2, 0, 1])]).unwrap_err();
        assert!(matches!(err, DecisionError::StateOutsideSpace { index: 0, .. }));
    }

    #[test]
    fn classical_copier_correlates_the_center() {
        let bit = Arc::new(make_classical(2).unwrap());
        let min = min_tensor(&bit, &bit);
        let ss = set(&bit, &[&[1, 0], &[0, 1]]);
        let m = Measurement::new(vec![Effect(vector(&[1, 0])), Effect(vector(&[0, 1]))]);
        let t = construct_cloner(&ss, &m, &min).unwrap();
        let center = vec![rat(1, 2), rat(1, 2)];
        let out = t.apply(&center);
        assert_eq!(out, vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(1, 2)]);
        assert_ne!(out, kron(&center, &center));
        assert!(t.broadcasts(&center));
    }

    #[test]
    fn single_state_cloner_is_constant() {
        let s = square();
        let min = min_tensor(&s, &s);
        let w = vector(&[1, -1, 1]);
        let ss = StateSet::new(s.clone(), vec![w.clone()]).unwrap();
        let t = construct_cloner(&ss, &Measurement::new(vec![s.unit_effect()]), &min).unwrap();
        for v in s.vertices() {
            assert_eq!(t.apply(v), kron(&w, &w));
        }
    }

    #[test]
    fn cloner_rejects_non_distinguishing_measurement() {
        let s = square();
        let min = min_tensor(&s, &s);
        let ss = set(&s, &[&[1, 1, 1], &[1, -1, 1]]);
        let x = Measurement::new(vec![square_half_effect(0, 1), square_half_effect(0, -1)]);
        assert!(matches!(construct_cloner(&ss, &x, &min), Err(DecisionError::NotDistinguishing { .. })));
    }

    #[test]
    fn cloner_lp_agrees_with_distinguishability() {
        let s = square();
        let max = max_tensor(&s, &s);
        let yes = cloner_exists(&set(&s, &[&[1, 1, 1], &[-1, -1, 1]]), &max).unwrap();
        assert!(yes.verdict && yes.all_checks_passed() && yes.reverify());
        let no = cloner_exists(&set(&s, &[&[1, 1, 1], &[1, -1, 1], &[-1, 1, 1]]), &max).unwrap();
        assert!(!no.verdict && no.all_checks_passed() && no.reverify());
    }

    #[test]
    fn interior_points_on_a_diagonal_are_not_cloneable() {
        // Two distinct interior points are never perfectly distinguishable.
        let s = square();
        let max = max_tensor(&s, &s);
        let ss = StateSet::new(s.clone(), vec![vec![rat(1, 2), rat(1, 2), rat(1, 1)], vec![rat(-1, 3), rat(-1, 3), rat(1, 1)]]).unwrap();
        let r = cloner_exists(&ss, &max).unwrap();
        assert!(!r.verdict);
        assert!(r.all_checks_passed());
    }

    #[test]
    fn broadcast_examples() {
        let trit = Arc::new(make_classical(3).unwrap());
        let tmax = max_tensor(&trit, &trit);
        let all = StateSet::all_vertices(&trit);
        let r = broadcaster_exists(&all, &tmax).unwrap();
        assert!(r.verdict && r.reverify());

        let s = square();
        let max = max_tensor(&s, &s);
        let mut states = vec![vector(&[1, 1, 1]), vector(&[-1, -1, 1])];
        states.push(vector(&[0, 0, 1]));
        let covered = StateSet::new(s.clone(), states).unwrap();
        let r = broadcaster_exists(&covered, &max).unwrap();
        assert!(r.verdict && r.reverify());

        let three = set(&s, &[&[1, 1, 1], &[1, -1, 1], &[-1, 1, 1]]);
        let r = broadcaster_exists(&three, &max).unwrap();
        assert!(!r.verdict && r.reverify());
    }

    #[test]
    fn constructed_broadcaster_covers_the_segment() {
        let s = square();
        let min = min_tensor(&s, &s);
        let gens = set(&s, &[&[1, 1, 1], &[-1, -1, 1]]);
        let x = Measurement::new(vec![square_half_effect(0, 1), square_half_effect(0, -1)]);
        let b = construct_broadcaster(&gens, &x, &min).unwrap();
        assert!(b.broadcasts(&s.centroid()));
        assert!(!b.clones(&s.centroid()));
    }

    #[test]
    fn dependent_generators_are_rejected() {
        let s = square();
        let min = min_tensor(&s, &s);
        let gens = StateSet::all_vertices(&s);
        let m = Measurement::new(vec![s.unit_effect(); 4]);
        assert_eq!(construct_broadcaster(&gens, &m, &min).unwrap_err(), DecisionError::DependentGenerators);
    }

    #[test]
    fn cover_of_measure_prepare_broadcaster() {
        let s = square();
        let min = min_tensor(&s, &s);
        let gens = set(&s, &[&[1, 1, 1], &[-1, -1, 1]]);
        let x = Measurement::new(vec![square_half_effect(0, 1), square_half_effect(0, -1)]);
        let b = construct_broadcaster(&gens, &x, &min).unwrap();
        let cover = extract_simplex_cover(&b, &gens).unwrap();
        assert_eq!(cover.generators, vec![vector(&[-1, -1, 1]), vector(&[1, 1, 1])]);
        assert!(cover.gamma_is_simplex && cover.q_broadcasts_generators);
    }

    #[test]
    fn cover_of_classical_universal_broadcaster() {
        let bit = Arc::new(make_classical(2).unwrap());
        let min = min_tensor(&bit, &bit);
        let all = StateSet::all_vertices(&bit);
        let m = Measurement::new(vec![Effect(vector(&[0, 1])), Effect(vector(&[1, 0]))]);
        let b = construct_broadcaster(&all, &m, &min).unwrap();
        let cover = extract_simplex_cover(&b, &all).unwrap();
        assert_eq!(cover.generators, all.states());
        assert_eq!(cover.measurement.outcomes, m.outcomes);
    }

    #[test]
    fn cover_of_lp_broadcaster_contains_inputs() {
        let s = square();
        let max = max_tensor(&s, &s);
        let ss = StateSet::new(s.clone(), vec![vector(&[1, 1, 1]), vector(&[-1, -1, 1]), vector(&[0, 0, 1])]).unwrap();
        let r = broadcaster_exists(&ss, &max).unwrap();
        let Some(Witness::Channel(b)) = &r.witness else { panic!() };
        let cover = extract_simplex_cover(b, &ss).unwrap();
        assert!(cover.generators.len() >= 2);
        assert!(cover.gamma_is_simplex);
        assert_eq!(cover.weights.len(), 3);
    }

    #[test]
    fn cover_rejects_non_broadcast_states() {
        let s = square();
        let min = min_tensor(&s, &s);
        let gens = set(&s, &[&[1, 1, 1], &[-1, -1, 1]]);
        let x = Measurement::new(vec![square_half_effect(0, 1), square_half_effect(0, -1)]);
        let b = construct_broadcaster(&gens, &x, &min).unwrap();
        let other = set(&s, &[&[1, -1, 1]]);
        assert_eq!(extract_simplex_cover(&b, &other).unwrap_err(), DecisionError::NotBroadcast(0));
    }

    #[test]
    fn analyze_square_vertices() {
        let s = square();
        let max = max_tensor(&s, &s);
        let r = analyze(&StateSet::all_vertices(&s), &max).unwrap();
        assert!(!r.verdict);
        assert!(r.all_checks_passed(), "{:?}", r.cross_checks);
        assert!(r.reverify());
    }

    #[test]
    fn analyze_classical_simplex() {
        let c = Arc::new(make_classical(4).unwrap());
        let max = max_tensor(&c, &c);
        let r = analyze(&StateSet::all_vertices(&c), &max).unwrap();
        assert!(r.verdict);
        assert!(r.all_checks_passed(), "{:?}", r.cross_checks);
        let Some(Witness::Cover(cover)) = &r.witness else { panic!() };
        assert_eq!(cover.generators, c.vertices());
        assert!(r.reverify());
    }

    #[test]
    fn empty_set_is_vacuously_broadcastable() {
        let s = square();
        let max = max_tensor(&s, &s);
        let empty = StateSet::new(s.clone(), vec![]).unwrap();
        assert!(jointly_distinguishable(&empty).verdict);
        assert!(broadcaster_exists(&empty, &max).unwrap().verdict);
        assert!(cloner_exists(&empty, &max).unwrap().verdict);
    }
}
