//! Exact convex polytopes with vertex and facet descriptions.
//!
//! A [`Polytope`] always knows its vertices. The facet description is derived
//! on first use and cached; concurrent readers see a value computed once.
//! Empty polytopes are ordinary values with no vertices.

use std::fmt;
use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};

use crate::cone::{double_description, ConeRow};
use crate::linalg::{nullspace, rank, rref};
use crate::lp::{lp_solve, Feasibility, LpOutcome, LpSystem, Relation, Sense, VarKind};
use crate::scalar::{dot, primitive, sub, Scalar, Show, Vector};

/// `normal . x <= offset`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Halfspace {
    pub normal: Vector,
    pub offset: Scalar,
}

/// `normal . x = offset`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyperplane {
    pub normal: Vector,
    pub offset: Scalar,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: Scalar) -> Self {
        Halfspace { normal, offset }
    }

    pub fn contains(&self, x: &[Scalar]) -> bool {
        dot(&self.normal, x) <= self.offset
    }

    pub fn is_tight(&self, x: &[Scalar]) -> bool {
        dot(&self.normal, x) == self.offset
    }
}

impl Hyperplane {
    pub fn new(normal: Vector, offset: Scalar) -> Self {
        Hyperplane { normal, offset }
    }

    pub fn contains(&self, x: &[Scalar]) -> bool {
        dot(&self.normal, x) == self.offset
    }
}

impl fmt::Display for Halfspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} . x <= {}", Show(&self.normal), crate::scalar::format_scalar(&self.offset))
    }
}

/// Facet description: inequalities plus the equalities of the affine hull.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HRep {
    pub inequalities: Vec<Halfspace>,
    pub equalities: Vec<Hyperplane>,
}

impl HRep {
    pub fn contains(&self, x: &[Scalar]) -> bool {
        self.equalities.iter().all(|h| h.contains(x)) && self.inequalities.iter().all(|h| h.contains(x))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolytopeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("at least one vertex is required")]
    NoVertices,
    #[error("the inequality system describes an unbounded set")]
    Unbounded,
}

/// Result of enumerating the vertices of an inequality system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VertexEnumeration {
    Bounded(Vec<Vector>),
    Empty,
}

/// Membership verdict with a certificate either way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    /// Convex weights over [`Polytope::vertices`] reproducing the point.
    Inside { weights: Vector },
    /// `separator . x > separator . v` for every vertex `v`.
    Outside { separator: Vector },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside { .. })
    }
}

pub struct Polytope {
    dim: usize,
    vertices: Vec<Vector>,
    hrep: OnceLock<HRep>,
}

impl Clone for Polytope {
    fn clone(&self) -> Self {
        Polytope { dim: self.dim, vertices: self.vertices.clone(), hrep: self.hrep.clone() }
    }
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.vertices == other.vertices
    }
}

impl Eq for Polytope {}

impl fmt::Debug for Polytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verts: Vec<String> = self.vertices.iter().map(|v| Show(v).to_string()).collect();
        f.debug_struct("Polytope").field("dim", &self.dim).field("vertices", &verts).finish()
    }
}

fn check_dims(dim: usize, points: &[Vector]) -> Result<(), PolytopeError> {
    for p in points {
        if p.len() != dim {
            return Err(PolytopeError::DimensionMismatch { expected: dim, found: p.len() });
        }
    }
    Ok(())
}

fn sorted_unique(mut points: Vec<Vector>) -> Vec<Vector> {
    points.sort();
    points.dedup();
    points
}

/// Canonical equalities `{x : a . x = b}` of the affine hull of `points`.
fn affine_hull(dim: usize, points: &[Vector]) -> Vec<Hyperplane> {
    let rows: Vec<Vector> = points
        .iter()
        .map(|p| {
            let mut r = p.clone();
            r.push(-Scalar::one());
            r
        })
        .collect();
    let kernel = nullspace(dim + 1, &rows);
    let (reduced, _) = rref(dim + 1, &kernel);
    reduced
        .into_iter()
        .map(|mut r| {
            let b = r.pop().expect("augmented row");
            let mut row = r;
            row.push(b);
            let row = primitive(&row);
            let (normal, offset) = row.split_at(dim);
            Hyperplane::new(normal.to_vec(), offset[0].clone())
        })
        .collect()
}

fn affine_rank(points: &[&Vector]) -> usize {
    match points.split_first() {
        None => 0,
        Some((first, rest)) => {
            let dim = first.len();
            let diffs: Vec<Vector> = rest.iter().map(|p| sub(p, first)).collect();
            rank(dim, &diffs)
        }
    }
}

/// Orthogonal projection of `normal` onto the complement of the equality
/// normals, so that facets differing by hull equalities compare equal.
fn reduce_normal(normal: &[Scalar], equality_basis: &[Vector]) -> Vector {
    let mut v = normal.to_vec();
    for b in equality_basis {
        let bb = dot(b, b);
        let f = dot(&v, b) / bb;
        if !f.is_zero() {
            for (x, y) in v.iter_mut().zip(b) {
                *x -= &f * y;
            }
        }
    }
    v
}

/// Orthogonal basis (Gram-Schmidt, exact) of the equality normals.
fn orthogonal_basis(equalities: &[Hyperplane]) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    for e in equalities {
        let v = reduce_normal(&e.normal, &basis);
        if !v.iter().all(Zero::is_zero) {
            basis.push(v);
        }
    }
    basis
}

/// Keeps the candidates that define facets of `conv(vertices)`, in canonical
/// form, sorted and deduplicated.
fn canonical_facets(dim: usize, vertices: &[Vector], equalities: &[Hyperplane], candidates: &[Halfspace]) -> Vec<Halfspace> {
    let aff_dim = dim - equalities.len();
    if aff_dim == 0 {
        return Vec::new();
    }
    let basis = orthogonal_basis(equalities);
    let mut out = Vec::new();
    for h in candidates {
        let tight: Vec<&Vector> = vertices.iter().filter(|v| h.is_tight(v)).collect();
        if tight.is_empty() || tight.len() == vertices.len() || affine_rank(&tight) + 1 != aff_dim {
            continue;
        }
        let normal = reduce_normal(&h.normal, &basis);
        let offset = dot(&normal, tight[0]);
        let mut row = normal;
        row.push(offset);
        let row = primitive(&row);
        let (normal, offset) = row.split_at(dim);
        out.push(Halfspace::new(normal.to_vec(), offset[0].clone()));
    }
    out.sort();
    out.dedup();
    out
}

/// Facet description of the convex hull of `vertices`: a non-redundant list of
/// inequalities plus the equalities of the affine hull, both canonical.
pub fn hull_to_halfspaces(dim: usize, vertices: &[Vector]) -> Result<HRep, PolytopeError> {
    if vertices.is_empty() {
        return Err(PolytopeError::NoVertices);
    }
    check_dims(dim, vertices)?;
    let vertices = sorted_unique(vertices.to_vec());
    let equalities = affine_hull(dim, &vertices);
    // Cone of valid inequalities b + a.x >= 0, i.e. (-a).x <= b.
    let rows: Vec<ConeRow> = vertices
        .iter()
        .map(|v| {
            let mut r = Vec::with_capacity(dim + 1);
            r.push(Scalar::one());
            r.extend(v.iter().cloned());
            ConeRow::ge(r)
        })
        .collect();
    let gens = double_description(dim + 1, &rows);
    let candidates: Vec<Halfspace> = gens
        .rays
        .iter()
        .map(|r| Halfspace::new(r[1..].iter().map(|x| -x.clone()).collect(), r[0].clone()))
        .collect();
    let inequalities = canonical_facets(dim, &vertices, &equalities, &candidates);
    Ok(HRep { inequalities, equalities })
}

/// Vertices of `{x : inequalities, equalities}` in lexicographic order.
pub fn halfspaces_to_vertices(dim: usize, hrep: &HRep) -> Result<VertexEnumeration, PolytopeError> {
    for h in &hrep.inequalities {
        if h.normal.len() != dim {
            return Err(PolytopeError::DimensionMismatch { expected: dim, found: h.normal.len() });
        }
    }
    for h in &hrep.equalities {
        if h.normal.len() != dim {
            return Err(PolytopeError::DimensionMismatch { expected: dim, found: h.normal.len() });
        }
    }
    // Homogenize as (t, x) with t >= 0: b t - a.x >= 0.
    let homogenize = |normal: &[Scalar], offset: &Scalar| -> Vector {
        let mut r = Vec::with_capacity(dim + 1);
        r.push(offset.clone());
        r.extend(normal.iter().map(|a| -a.clone()));
        r
    };
    let mut rows = Vec::with_capacity(hrep.inequalities.len() + hrep.equalities.len() + 1);
    let mut t_row = vec![Scalar::zero(); dim + 1];
    t_row[0] = Scalar::one();
    rows.push(ConeRow::ge(t_row));
    rows.extend(hrep.equalities.iter().map(|h| ConeRow::eq(homogenize(&h.normal, &h.offset))));
    rows.extend(hrep.inequalities.iter().map(|h| ConeRow::ge(homogenize(&h.normal, &h.offset))));
    let gens = double_description(dim + 1, &rows);

    let (finite, recession): (Vec<&Vector>, Vec<&Vector>) = gens.rays.iter().partition(|r| r[0].is_positive());
    if finite.is_empty() {
        return Ok(VertexEnumeration::Empty);
    }
    if !gens.lineality.is_empty() || !recession.is_empty() {
        return Err(PolytopeError::Unbounded);
    }
    let vertices = finite
        .into_iter()
        .map(|r| r[1..].iter().map(|x| x / &r[0]).collect())
        .collect();
    Ok(VertexEnumeration::Bounded(sorted_unique(vertices)))
}

impl Polytope {
    pub fn empty(dim: usize) -> Self {
        Polytope { dim, vertices: Vec::new(), hrep: OnceLock::new() }
    }

    /// Convex hull of `points`; duplicates and non-extreme points are removed.
    pub fn from_points(dim: usize, points: Vec<Vector>) -> Result<Self, PolytopeError> {
        if points.is_empty() {
            return Err(PolytopeError::NoVertices);
        }
        check_dims(dim, &points)?;
        let points = sorted_unique(points);
        let extreme: Vec<Vector> = (0..points.len())
            .filter(|&i| {
                let others: Vec<Vector> =
                    points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| p.clone()).collect();
                others.is_empty() || !convex_weights(dim, &others, &points[i]).is_feasible()
            })
            .map(|i| points[i].clone())
            .collect();
        Ok(Polytope { dim, vertices: extreme, hrep: OnceLock::new() })
    }

    /// Trusted constructor for a list already known to consist of extreme
    /// points.
    pub(crate) fn from_extreme_points(dim: usize, points: Vec<Vector>) -> Self {
        Polytope { dim, vertices: sorted_unique(points), hrep: OnceLock::new() }
    }

    /// Polytope cut out by an H-rep; the stored H-rep is the canonical,
    /// redundancy-free version of the input.
    pub fn from_hrep(dim: usize, hrep: &HRep) -> Result<Self, PolytopeError> {
        match halfspaces_to_vertices(dim, hrep)? {
            VertexEnumeration::Empty => Ok(Polytope::empty(dim)),
            VertexEnumeration::Bounded(vertices) => {
                let equalities = affine_hull(dim, &vertices);
                let inequalities = canonical_facets(dim, &vertices, &equalities, &hrep.inequalities);
                let cell = OnceLock::new();
                let _ = cell.set(HRep { inequalities, equalities });
                Ok(Polytope { dim, vertices, hrep: cell })
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Extreme points in lexicographic order.
    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Facet description, computed on first access.
    pub fn hrep(&self) -> &HRep {
        self.hrep.get_or_init(|| {
            if self.vertices.is_empty() {
                let mut zero = vec![Scalar::zero(); self.dim];
                zero.shrink_to_fit();
                return HRep { inequalities: vec![Halfspace::new(zero, -Scalar::one())], equalities: Vec::new() };
            }
            hull_to_halfspaces(self.dim, &self.vertices).expect("nonempty vertex list")
        })
    }

    pub fn hrep_if_computed(&self) -> Option<&HRep> {
        self.hrep.get()
    }

    /// Dimension of the affine hull; `None` when empty.
    pub fn affine_dim(&self) -> Option<usize> {
        if self.vertices.is_empty() {
            return None;
        }
        let refs: Vec<&Vector> = self.vertices.iter().collect();
        Some(affine_rank(&refs))
    }

    /// Vertices affinely independent.
    pub fn is_simplex(&self) -> bool {
        self.affine_dim().is_some_and(|d| d + 1 == self.vertices.len())
    }

    /// Exact containment test through the facet description.
    pub fn contains(&self, x: &[Scalar]) -> bool {
        x.len() == self.dim && !self.vertices.is_empty() && self.hrep().contains(x)
    }

    /// Membership with certificate. Inside points get the convex weights
    /// maximizing the smallest weight, so symmetric points get symmetric
    /// weights.
    pub fn member(&self, x: &[Scalar]) -> Result<Membership, PolytopeError> {
        if x.len() != self.dim {
            return Err(PolytopeError::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        if self.vertices.is_empty() {
            let mut separator = vec![Scalar::zero(); self.dim];
            separator.shrink_to_fit();
            return Ok(Membership::Outside { separator });
        }
        if let Some(h) = self.hrep.get() {
            for e in &h.equalities {
                let lhs = dot(&e.normal, x);
                if lhs != e.offset {
                    let separator = if lhs > e.offset { e.normal.clone() } else { e.normal.iter().map(|a| -a.clone()).collect() };
                    return Ok(Membership::Outside { separator });
                }
            }
            if let Some(h) = h.inequalities.iter().find(|h| !h.contains(x)) {
                return Ok(Membership::Outside { separator: h.normal.clone() });
            }
        }
        Ok(match maximin_weights(self.dim, &self.vertices, x) {
            Ok(weights) => Membership::Inside { weights },
            Err(separator) => Membership::Outside { separator },
        })
    }

    /// `self ∩ {equalities}`, possibly empty.
    pub fn intersect_with_affine(&self, equalities: &[Hyperplane]) -> Result<Polytope, PolytopeError> {
        for e in equalities {
            if e.normal.len() != self.dim {
                return Err(PolytopeError::DimensionMismatch { expected: self.dim, found: e.normal.len() });
            }
        }
        if self.vertices.is_empty() {
            return Ok(Polytope::empty(self.dim));
        }
        let mut h = self.hrep().clone();
        h.equalities.extend(equalities.iter().cloned());
        Polytope::from_hrep(self.dim, &h)
    }

    /// Image under a linear map given as a function on vectors.
    pub fn map_points(&self, out_dim: usize, f: impl Fn(&[Scalar]) -> Vector) -> Result<Polytope, PolytopeError> {
        if self.vertices.is_empty() {
            return Ok(Polytope::empty(out_dim));
        }
        Polytope::from_points(out_dim, self.vertices.iter().map(|v| f(v)).collect())
    }

    /// Every vertex of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &Polytope) -> bool {
        self.vertices.iter().all(|v| other.contains(v))
    }
}

/// Feasibility of `x` as a convex combination of `points`.
fn convex_weights(dim: usize, points: &[Vector], x: &[Scalar]) -> Feasibility {
    let mut sys = LpSystem::new();
    sys.add_vars(points.len(), VarKind::NonNegative);
    for c in 0..dim {
        sys.add_sparse(
            points.iter().enumerate().map(|(i, p)| (i, p[c].clone())),
            Relation::Eq,
            x[c].clone(),
            format!("coordinate {c}"),
        );
    }
    sys.add_sparse((0..points.len()).map(|i| (i, Scalar::one())), Relation::Eq, Scalar::one(), "weights sum to one");
    crate::lp::lp_feasible(&sys)
}

/// Convex weights maximizing the minimum weight, or a separating functional.
fn maximin_weights(dim: usize, points: &[Vector], x: &[Scalar]) -> Result<Vector, Vector> {
    let k = points.len();
    let mut sys = LpSystem::new();
    sys.add_vars(k, VarKind::NonNegative);
    let t = sys.add_vars(1, VarKind::Free);
    for c in 0..dim {
        sys.add_sparse(
            points.iter().enumerate().map(|(i, p)| (i, p[c].clone())),
            Relation::Eq,
            x[c].clone(),
            format!("coordinate {c}"),
        );
    }
    sys.add_sparse((0..k).map(|i| (i, Scalar::one())), Relation::Eq, Scalar::one(), "weights sum to one");
    for i in 0..k {
        sys.add_sparse([(i, Scalar::one()), (t, -Scalar::one())], Relation::Ge, Scalar::zero(), format!("floor {i}"));
    }
    sys.set_objective([(t, Scalar::one())], Sense::Maximize);
    match lp_solve(&sys) {
        LpOutcome::Optimal { point, .. } => Ok(point[..k].to_vec()),
        LpOutcome::Infeasible(cert) => {
            // Multipliers y on the coordinate rows give y.v_i + y_s >= 0 for all
            // vertices and y.x + y_s < 0; -y separates.
            let sep: Vector = cert.multipliers[..dim].iter().map(|y| -y.clone()).collect();
            debug_assert!(points.iter().all(|p| dot(&sep, p) < dot(&sep, x)));
            Err(sep)
        }
        LpOutcome::Unbounded { .. } => unreachable!("weights are bounded"),
    }
}
