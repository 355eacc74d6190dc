//! Exact rational simplex method.
//!
//! [`lp_feasible`] decides a system of linear constraints and always returns
//! something that can be checked by substitution: either a point satisfying
//! every row, or a [`FarkasCertificate`] whose multipliers combine the rows
//! into the contradiction `0 <= c.x <= y.b < 0`.
//!
//! Feasibility questions go through a compact revised simplex on the
//! normalized Farkas program (see `farkas`). Optimization uses a two-phase
//! tableau: free variables are eliminated by Gauss-Jordan pivots before phase
//! one, and every row carries the coefficients expressing it as a combination
//! of the input rows, so an infeasible phase one still yields a certificate.

use std::fmt;

mod farkas;

use num_traits::{One, Signed, Zero};

use crate::scalar::{dot, Scalar, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Free,
    NonNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vector,
    pub relation: Relation,
    pub rhs: Scalar,
    pub label: String,
}

impl Constraint {
    pub fn holds_at(&self, x: &[Scalar]) -> bool {
        let lhs = dot(&self.coeffs, x);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    pub coeffs: Vector,
    pub sense: Sense,
}

/// A linear system over variables that are either free or nonnegative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LpSystem {
    kinds: Vec<VarKind>,
    constraints: Vec<Constraint>,
    objective: Option<Objective>,
}

impl LpSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `count` variables of the given kind and returns the index of
    /// the first one.
    pub fn add_vars(&mut self, count: usize, kind: VarKind) -> usize {
        let first = self.kinds.len();
        self.kinds.extend(std::iter::repeat_n(kind, count));
        for c in &mut self.constraints {
            c.coeffs.resize(self.kinds.len(), Scalar::zero());
        }
        if let Some(obj) = &mut self.objective {
            obj.coeffs.resize(self.kinds.len(), Scalar::zero());
        }
        first
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> Option<&Objective> {
        self.objective.as_ref()
    }

    /// Adds a row given as sparse `(variable, coefficient)` terms. Repeated
    /// variables accumulate.
    pub fn add_sparse(
        &mut self,
        terms: impl IntoIterator<Item = (usize, Scalar)>,
        relation: Relation,
        rhs: Scalar,
        label: impl Into<String>,
    ) {
        let mut coeffs = vec![Scalar::zero(); self.kinds.len()];
        for (j, a) in terms {
            assert!(j < coeffs.len(), "constraint references unknown variable {j}");
            coeffs[j] += a;
        }
        self.constraints.push(Constraint { coeffs, relation, rhs, label: label.into() });
    }

    pub fn add_dense(&mut self, coeffs: Vector, relation: Relation, rhs: Scalar, label: impl Into<String>) {
        assert_eq!(coeffs.len(), self.kinds.len(), "constraint row length must equal variable count");
        self.constraints.push(Constraint { coeffs, relation, rhs, label: label.into() });
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (usize, Scalar)>, sense: Sense) {
        let mut coeffs = vec![Scalar::zero(); self.kinds.len()];
        for (j, a) in terms {
            coeffs[j] += a;
        }
        self.objective = Some(Objective { coeffs, sense });
    }

    /// Exact check that `x` satisfies every row and sign constraint.
    pub fn is_satisfied_by(&self, x: &[Scalar]) -> bool {
        x.len() == self.kinds.len()
            && self
                .kinds
                .iter()
                .zip(x)
                .all(|(k, v)| *k == VarKind::Free || !v.is_negative())
            && self.constraints.iter().all(|c| c.holds_at(x))
    }

    /// Index of the first violated row, if any.
    pub fn first_violation(&self, x: &[Scalar]) -> Option<usize> {
        self.constraints.iter().position(|c| !c.holds_at(x))
    }
}

/// Multipliers, one per constraint row, proving that an [`LpSystem`] has no
/// solution.
///
/// Sign convention: `y_i >= 0` on `<=` rows, `y_i <= 0` on `>=` rows, free on
/// equalities. The combined row `c = sum_i y_i a_i` vanishes on free variables
/// and is nonnegative on nonnegative ones, while `sum_i y_i b_i < 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub multipliers: Vector,
}

impl FarkasCertificate {
    pub fn verify(&self, sys: &LpSystem) -> bool {
        if self.multipliers.len() != sys.constraints.len() {
            return false;
        }
        let mut combined = vec![Scalar::zero(); sys.num_vars()];
        let mut bound = Scalar::zero();
        for (y, c) in self.multipliers.iter().zip(&sys.constraints) {
            let sign_ok = match c.relation {
                Relation::Le => !y.is_negative(),
                Relation::Ge => !y.is_positive(),
                Relation::Eq => true,
            };
            if !sign_ok {
                return false;
            }
            if y.is_zero() {
                continue;
            }
            for (acc, a) in combined.iter_mut().zip(&c.coeffs) {
                if !a.is_zero() {
                    *acc += y * a;
                }
            }
            bound += y * &c.rhs;
        }
        let combined_ok = combined.iter().zip(&sys.kinds).all(|(c, k)| match k {
            VarKind::Free => c.is_zero(),
            VarKind::NonNegative => !c.is_negative(),
        });
        combined_ok && bound.is_negative()
    }

    /// Rows with a nonzero multiplier.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.multipliers
            .iter()
            .enumerate()
            .filter(|(_, y)| !y.is_zero())
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vector),
    Infeasible(FarkasCertificate),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { point: Vector, value: Scalar },
    Infeasible(FarkasCertificate),
    Unbounded { point: Vector },
}

/// Decides feasibility of `sys`, ignoring any objective.
pub fn lp_feasible(sys: &LpSystem) -> Feasibility {
    farkas::decide(sys)
}

/// Optimizes the objective of `sys` (feasibility only when it has none).
pub fn lp_solve(sys: &LpSystem) -> LpOutcome {
    Tableau::run(sys, true)
}

/// Degenerate pivots tolerated under largest-coefficient pricing before
/// switching to Bland's rule.
const DEGENERATE_LIMIT: usize = 50;

#[derive(Clone, Copy, PartialEq, Eq)]
enum RowState {
    /// Row defines a free variable; excluded from ratio tests.
    Defining,
    Active,
    Dropped,
}

struct Tableau {
    /// Columns: structural `[0, n)`, slacks `[n, n + s)`, artificials
    /// `[n + s, n + s + m)`, then `m` tracking columns.
    rows: Vec<Vector>,
    rhs: Vec<Scalar>,
    basis: Vec<usize>,
    state: Vec<RowState>,
    n: usize,
    slacks: usize,
    m: usize,
    kinds: Vec<VarKind>,
}

impl Tableau {
    fn art(&self, r: usize) -> usize {
        self.n + self.slacks + r
    }

    fn track(&self, r: usize) -> usize {
        self.n + self.slacks + self.m + r
    }

    fn width(&self) -> usize {
        self.n + self.slacks + 2 * self.m
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.slacks && j < self.n + self.slacks + self.m
    }

    /// Columns that may enter the basis during the simplex phases.
    fn is_pricable(&self, j: usize) -> bool {
        if j < self.n {
            self.kinds[j] == VarKind::NonNegative
        } else {
            j < self.n + self.slacks
        }
    }

    fn build(sys: &LpSystem) -> Self {
        let n = sys.num_vars();
        let m = sys.constraints.len();
        let slacks = sys.constraints.iter().filter(|c| c.relation != Relation::Eq).count();
        let mut t = Tableau {
            rows: Vec::with_capacity(m),
            rhs: Vec::with_capacity(m),
            basis: vec![usize::MAX; m],
            state: vec![RowState::Active; m],
            n,
            slacks,
            m,
            kinds: sys.kinds.clone(),
        };
        let width = t.width();
        let mut slack = n;
        for (i, c) in sys.constraints.iter().enumerate() {
            let mut row = vec![Scalar::zero(); width];
            row[..n].clone_from_slice(&c.coeffs);
            match c.relation {
                Relation::Le => {
                    row[slack] = Scalar::one();
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -Scalar::one();
                    slack += 1;
                }
                Relation::Eq => {}
            }
            row[n + slacks + m + i] = Scalar::one();
            t.rows.push(row);
            t.rhs.push(c.rhs.clone());
        }
        t
    }

    /// Gauss-Jordan pivot on `(r, c)` applied to every non-dropped row and to
    /// the optional objective row.
    fn pivot(&mut self, r: usize, c: usize, objective: Option<(&mut Vector, &mut Scalar)>) {
        let inv = self.rows[r][c].recip();
        if !inv.is_one() {
            for x in self.rows[r].iter_mut() {
                if !x.is_zero() {
                    *x *= &inv;
                }
            }
            self.rhs[r] *= &inv;
        }
        let support: Vec<usize> = (0..self.rows[r].len()).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.state[i] == RowState::Dropped || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for &j in &support {
                let delta = &f * &pivot_row[j];
                self.rows[i][j] -= delta;
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        if let Some((z, value)) = objective {
            if !z[c].is_zero() {
                let f = z[c].clone();
                for &j in &support {
                    let delta = &f * &pivot_row[j];
                    z[j] -= delta;
                }
                *value -= &f * &pivot_rhs;
            }
        }
        self.basis[r] = c;
    }

    fn eliminate_free(&mut self) {
        for j in 0..self.n {
            if self.kinds[j] != VarKind::Free {
                continue;
            }
            let row = (0..self.m).find(|&r| self.state[r] == RowState::Active && !self.rows[r][j].is_zero());
            if let Some(r) = row {
                self.pivot(r, j, None);
                self.state[r] = RowState::Defining;
            }
        }
    }

    /// Certificate read from the tracking columns of a combined row.
    fn certificate_from(&self, combo: impl Fn(usize) -> Scalar) -> FarkasCertificate {
        FarkasCertificate { multipliers: (0..self.m).map(|i| combo(self.track(i))).collect() }
    }

    /// One simplex phase minimizing the objective row `z` (reduced costs) with
    /// current value `value`. Returns the entering column of an unbounded ray
    /// on failure.
    fn iterate(&mut self, z: &mut Vector, value: &mut Scalar, allow_artificial: bool) -> Result<(), usize> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_LIMIT;
            let mut entering: Option<usize> = None;
            for j in 0..self.n + self.slacks + self.m {
                let eligible = self.is_pricable(j) || (allow_artificial && self.is_artificial(j));
                if !eligible || !z[j].is_negative() {
                    continue;
                }
                match entering {
                    None => entering = Some(j),
                    Some(best) if !bland && z[j] < z[best] => entering = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, Scalar)> = None;
            for r in 0..self.m {
                if self.state[r] != RowState::Active || !self.rows[r][c].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / &self.rows[r][c];
                let better = match &leaving {
                    None => true,
                    Some((best_r, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*best_r]),
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            let Some((r, ratio)) = leaving else {
                return Err(c);
            };
            if ratio.is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c, Some((z, value)));
        }
    }

    fn current_point(&self) -> Vector {
        let mut x = vec![Scalar::zero(); self.n];
        for r in 0..self.m {
            if self.state[r] != RowState::Dropped && self.basis[r] < self.n {
                x[self.basis[r]] = self.rhs[r].clone();
            }
        }
        x
    }

    fn run(sys: &LpSystem, optimize: bool) -> LpOutcome {
        let mut t = Tableau::build(sys);
        t.eliminate_free();

        for r in 0..t.m {
            if t.state[r] != RowState::Active {
                continue;
            }
            let empty = (0..t.n + t.slacks).all(|j| t.rows[r][j].is_zero());
            if empty {
                if t.rhs[r].is_zero() {
                    t.state[r] = RowState::Dropped;
                } else {
                    // 0 = rhs: the tracking combination itself is the certificate.
                    let flip = if t.rhs[r].is_positive() { -Scalar::one() } else { Scalar::one() };
                    let cert = t.certificate_from(|j| &flip * &t.rows[r][j]);
                    debug_assert!(cert.verify(sys));
                    return LpOutcome::Infeasible(cert);
                }
            }
        }

        // Phase one: artificial basis on every active row with rhs >= 0.
        let width = t.width();
        let mut z = vec![Scalar::zero(); width];
        let mut value = Scalar::zero();
        for r in 0..t.m {
            if t.state[r] != RowState::Active {
                continue;
            }
            if t.rhs[r].is_negative() {
                for x in t.rows[r].iter_mut() {
                    *x = -x.clone();
                }
                t.rhs[r] = -t.rhs[r].clone();
            }
            let a = t.art(r);
            t.rows[r][a] = Scalar::one();
            t.basis[r] = a;
            for (zj, x) in z.iter_mut().zip(&t.rows[r]) {
                if !x.is_zero() {
                    *zj -= x;
                }
            }
            z[a] = Scalar::zero();
            value -= &t.rhs[r];
        }
        // `value` holds minus the phase-one objective.
        if t.iterate(&mut z, &mut value, false).is_err() {
            unreachable!("phase one objective is bounded below by zero");
        }
        if value.is_negative() {
            // z over the tracking columns equals -pi^T R; pi certifies
            // infeasibility of the reduced system.
            let cert = t.certificate_from(|j| z[j].clone());
            debug_assert!(cert.verify(sys), "phase-one certificate failed verification");
            return LpOutcome::Infeasible(cert);
        }

        // Drive zero-level artificials out of the basis.
        for r in 0..t.m {
            if t.state[r] != RowState::Active || !t.is_artificial(t.basis[r]) {
                continue;
            }
            let col = (0..t.n + t.slacks).find(|&j| t.is_pricable(j) && !t.rows[r][j].is_zero());
            match col {
                Some(c) => t.pivot(r, c, None),
                None => t.state[r] = RowState::Dropped,
            }
        }
        for r in 0..t.m {
            if t.state[r] == RowState::Dropped {
                continue;
            }
            for a in 0..t.m {
                let j = t.art(a);
                t.rows[r][j] = Scalar::zero();
            }
        }

        let objective = if optimize { sys.objective.as_ref() } else { None };
        let Some(objective) = objective else {
            let x = t.current_point();
            debug_assert!(sys.is_satisfied_by(&x));
            let value = Scalar::zero();
            return LpOutcome::Optimal { point: x, value };
        };

        // Phase two on min c.x (negated for maximization).
        let mut z = vec![Scalar::zero(); width];
        for (j, c) in objective.coeffs.iter().enumerate() {
            z[j] = match objective.sense {
                Sense::Minimize => c.clone(),
                Sense::Maximize => -c.clone(),
            };
        }
        let mut value = Scalar::zero();
        for r in 0..t.m {
            if t.state[r] == RowState::Dropped {
                continue;
            }
            let b = t.basis[r];
            if z[b].is_zero() {
                continue;
            }
            let f = z[b].clone();
            for (zj, x) in z.iter_mut().zip(&t.rows[r]) {
                if !x.is_zero() {
                    *zj -= &f * x;
                }
            }
            value -= &f * &t.rhs[r];
        }
        // Free variables without a defining row are unconstrained.
        for j in 0..t.n {
            if t.kinds[j] == VarKind::Free && !z[j].is_zero() && !t.basis.contains(&j) {
                let point = t.current_point();
                return LpOutcome::Unbounded { point };
            }
        }
        match t.iterate(&mut z, &mut value, false) {
            Ok(()) => {
                let point = t.current_point();
                debug_assert!(sys.is_satisfied_by(&point));
                let value = dot(&objective.coeffs, &point);
                LpOutcome::Optimal { point, value }
            }
            Err(_) => LpOutcome::Unbounded { point: t.current_point() },
        }
    }
}
