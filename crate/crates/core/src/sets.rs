//! Conditional set representations with per-atom product (CSet) semantics:
//! the trivial region A_C/D_C, the outside relation and its stratification
//! set H_{C,x}, concatenation hulls, and the maximal-set operations.

use crate::lp::{
    self, Constraint, HalfSpace, LinearProgram, LpError, LpOutcome, Sense, SeparationOutcome,
};
use crate::rat::{ExtRat, Rat};
use crate::space::{ExtendedGRV, FiniteSpace, GSet, RandomVariable, SpaceError};
use num_traits::Zero;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SetError {
    #[error("empty input point list")]
    EmptyInput,
    #[error("empty relation family")]
    EmptyFamily,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// One conditional half-space `<x,z> < Y` (or `<= Y`) imposed on the atoms
/// where `Y` is finite; `+inf` encodes "no constraint on this atom".
#[derive(Debug, Clone)]
pub struct HConstraint {
    pub density: RandomVariable,
    pub level: ExtendedGRV,
    pub strict: bool,
}

/// Atom-projection of a VRep set, in that atom's outcome coordinates.
#[derive(Debug, Clone)]
pub enum AtomShape {
    /// The whole atom-space.
    Full,
    /// conv(vertices) + cone(rays).
    Polyhedron {
        vertices: Vec<Vec<Rat>>,
        rays: Vec<Vec<Rat>>,
    },
    /// A plain finite point set, not convexified (the image of cc_hull).
    Finite { points: Vec<Vec<Rat>> },
}

/// A conditional set, always stored in CSet-closed (per-atom product) form:
/// membership factorizes across atoms by construction.
#[derive(Debug, Clone)]
pub enum ConditionalSet {
    HRep { constraints: Vec<HConstraint> },
    VRep { atoms: Vec<AtomShape> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrivialRegion {
    pub a_c: GSet,
    pub d_c: GSet,
}

/// Outcome of separating a point from one atom-projection.
#[derive(Debug, Clone)]
pub enum AtomSeparationGrade {
    /// Strict gap: pairing(x,z) - sup over the set >= margin > 0.
    Strict { density: Vec<Rat>, margin: Rat },
    /// x lies on the boundary of an open projection: non-member, but only a
    /// weak inequality holds.
    WeakBoundary { density: Vec<Rat> },
    NoSeparation,
}

impl ConditionalSet {
    /// Countable concatenation hull of a finite point family: per atom, the
    /// plain set of projections. No convexification. On a finite space this
    /// per-atom product form IS the closure under concatenation.
    pub fn cc_hull(points: &[RandomVariable], sp: &FiniteSpace) -> Result<Self, SetError> {
        if points.is_empty() {
            return Err(SetError::EmptyInput);
        }
        let atoms = (0..sp.n_atoms())
            .map(|a| {
                let mut projs: Vec<Vec<Rat>> = Vec::new();
                for p in points {
                    let pr = p.restrict(sp, a);
                    if !projs.contains(&pr) {
                        projs.push(pr);
                    }
                }
                AtomShape::Finite { points: projs }
            })
            .collect();
        Ok(ConditionalSet::VRep { atoms })
    }

    /// L0-convex + CSet hull: per-atom ordinary convex hulls of the
    /// projections (G-measurable mixing weights are per-atom constants).
    pub fn l0_convex_hull(points: &[RandomVariable], sp: &FiniteSpace) -> Result<Self, SetError> {
        if points.is_empty() {
            return Err(SetError::EmptyInput);
        }
        let atoms = (0..sp.n_atoms())
            .map(|a| {
                let mut projs: Vec<Vec<Rat>> = Vec::new();
                for p in points {
                    let pr = p.restrict(sp, a);
                    if !projs.contains(&pr) {
                        projs.push(pr);
                    }
                }
                AtomShape::Polyhedron {
                    vertices: projs,
                    rays: Vec::new(),
                }
            })
            .collect();
        Ok(ConditionalSet::VRep { atoms })
    }

    /// Rewrites polyhedron atoms whose rays positively span the atom-space as
    /// explicit `Full` markers.
    pub fn normalized(&self, sp: &FiniteSpace) -> Result<Self, SetError> {
        match self {
            ConditionalSet::HRep { .. } => Ok(self.clone()),
            ConditionalSet::VRep { atoms } => {
                let mut out = Vec::with_capacity(atoms.len());
                for (a, shape) in atoms.iter().enumerate() {
                    let full = match shape {
                        AtomShape::Polyhedron { vertices, rays } => {
                            !vertices.is_empty() && rays_span_space(rays, sp.atom(a).len())?
                        }
                        _ => false,
                    };
                    out.push(if full { AtomShape::Full } else { shape.clone() });
                }
                Ok(ConditionalSet::VRep { atoms: out })
            }
        }
    }

    /// Closed-relaxation inequality rows of one atom of an HRep set, in raw
    /// atom coordinates, with per-row strictness. `None` means the projection
    /// is syntactically empty (a -inf level).
    pub fn hrep_atom_rows(
        constraints: &[HConstraint],
        sp: &FiniteSpace,
        a: usize,
    ) -> Option<Vec<(HalfSpace, bool)>> {
        let weights = sp.atom_weights(a);
        let mut rows = Vec::new();
        for c in constraints {
            match &c.level.per_atom[a] {
                ExtRat::PosInf => continue,
                ExtRat::NegInf => return None,
                ExtRat::Finite(y) => {
                    let z_a = c.density.restrict(sp, a);
                    let coeffs: Vec<Rat> =
                        weights.iter().zip(&z_a).map(|(w, z)| w * z).collect();
                    rows.push((
                        HalfSpace {
                            coeffs,
                            rhs: y.clone(),
                        },
                        c.strict,
                    ));
                }
            }
        }
        Some(rows)
    }

    /// Membership of the atom-projection x|_a; by the product structure the
    /// global membership is the conjunction over atoms.
    pub fn atom_membership(
        &self,
        x_a: &[Rat],
        sp: &FiniteSpace,
        a: usize,
    ) -> Result<bool, SetError> {
        match self {
            ConditionalSet::HRep { constraints } => {
                let Some(rows) = Self::hrep_atom_rows(constraints, sp, a) else {
                    return Ok(false);
                };
                for (hs, strict) in &rows {
                    let lhs: Rat = hs.coeffs.iter().zip(x_a).map(|(c, v)| c * v).sum();
                    let ok = if *strict { lhs < hs.rhs } else { lhs <= hs.rhs };
                    if !ok {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            ConditionalSet::VRep { atoms } => match &atoms[a] {
                AtomShape::Full => Ok(true),
                AtomShape::Finite { points } => Ok(points.iter().any(|p| p == x_a)),
                AtomShape::Polyhedron { vertices, rays } => {
                    Ok(lp::polytope_member(x_a, vertices, rays)?)
                }
            },
        }
    }

    pub fn membership(&self, x: &RandomVariable, sp: &FiniteSpace) -> Result<bool, SetError> {
        for a in 0..sp.n_atoms() {
            if !self.atom_membership(&x.restrict(sp, a), sp, a)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether the atom-projection is nonempty (strict rows demand a strictly
    /// feasible point).
    pub fn atom_feasible(&self, sp: &FiniteSpace, a: usize) -> Result<bool, SetError> {
        match self {
            ConditionalSet::VRep { atoms } => Ok(match &atoms[a] {
                AtomShape::Full => true,
                AtomShape::Finite { points } => !points.is_empty(),
                AtomShape::Polyhedron { vertices, .. } => !vertices.is_empty(),
            }),
            ConditionalSet::HRep { constraints } => {
                let Some(rows) = Self::hrep_atom_rows(constraints, sp, a) else {
                    return Ok(false);
                };
                if rows.is_empty() {
                    return Ok(true);
                }
                let d = sp.atom(a).len();
                // maximize slack s, s <= 1, rows hold with slack on strict rows
                let mut obj = vec![Rat::zero(); d + 1];
                obj[d] = Rat::from_integer(1.into());
                let mut prog = LinearProgram::new(Sense::Maximize, obj);
                for (hs, strict) in &rows {
                    let mut coeffs = hs.coeffs.clone();
                    coeffs.push(if *strict {
                        Rat::from_integer(1.into())
                    } else {
                        Rat::zero()
                    });
                    prog.push(Constraint::le(coeffs, hs.rhs.clone()));
                }
                let mut cap = vec![Rat::zero(); d + 1];
                cap[d] = Rat::from_integer(1.into());
                prog.push(Constraint::le(cap, Rat::from_integer(1.into())));
                match lp::solve(&prog)? {
                    LpOutcome::Optimal { value, .. } => Ok(value > Rat::zero()
                        || rows.iter().all(|(_, s)| !s) && value >= Rat::zero()),
                    LpOutcome::Unbounded { .. } => Ok(true),
                    LpOutcome::Infeasible => Ok(false),
                }
            }
        }
    }

    /// The maximal region A_C where the set coincides with the whole space,
    /// and its complement D_C.
    pub fn trivial_region(&self, sp: &FiniteSpace) -> Result<TrivialRegion, SetError> {
        let mut mask = Vec::with_capacity(sp.n_atoms());
        for a in 0..sp.n_atoms() {
            mask.push(self.atom_is_full(sp, a)?);
        }
        let a_c = GSet::new(mask);
        let d_c = a_c.complement();
        Ok(TrivialRegion { a_c, d_c })
    }

    fn atom_is_full(&self, sp: &FiniteSpace, a: usize) -> Result<bool, SetError> {
        match self {
            ConditionalSet::HRep { constraints } => {
                let Some(rows) = Self::hrep_atom_rows(constraints, sp, a) else {
                    return Ok(false);
                };
                // Full iff every finite-level row is vacuous (zero coefficients
                // and a satisfied constant comparison).
                for (hs, strict) in &rows {
                    if hs.coeffs.iter().any(|c| !c.is_zero()) {
                        return Ok(false);
                    }
                    let ok = if *strict {
                        Rat::zero() < hs.rhs
                    } else {
                        Rat::zero() <= hs.rhs
                    };
                    if !ok {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            ConditionalSet::VRep { atoms } => match &atoms[a] {
                AtomShape::Full => Ok(true),
                AtomShape::Finite { .. } => Ok(false),
                AtomShape::Polyhedron { vertices, rays } => {
                    Ok(!vertices.is_empty() && rays_span_space(rays, sp.atom(a).len())?)
                }
            },
        }
    }

    /// H_{C,x}: the union of atoms of D_C whose projection excludes x|_a —
    /// the largest G-set on which x is outside C.
    pub fn outside_region(
        &self,
        x: &RandomVariable,
        sp: &FiniteSpace,
    ) -> Result<GSet, SetError> {
        let triv = self.trivial_region(sp)?;
        let mut mask = vec![false; sp.n_atoms()];
        for a in triv.d_c.atoms() {
            if !self.atom_membership(&x.restrict(sp, a), sp, a)? {
                mask[a] = true;
            }
        }
        Ok(GSet::new(mask))
    }

    /// x is outside C iff it misses the projection on every atom of D_C.
    pub fn is_outside(&self, x: &RandomVariable, sp: &FiniteSpace) -> Result<bool, SetError> {
        let triv = self.trivial_region(sp)?;
        Ok(self.outside_region(x, sp)? == triv.d_c)
    }

    /// Strict separation of x|_a from the atom-projection, reported in
    /// density (pairing) coordinates.
    pub fn separate_atom(
        &self,
        x: &RandomVariable,
        sp: &FiniteSpace,
        a: usize,
    ) -> Result<AtomSeparationGrade, SetError> {
        let x_a = x.restrict(sp, a);
        let weights = sp.atom_weights(a);
        match self {
            ConditionalSet::VRep { atoms } => {
                let (vertices, rays): (Vec<Vec<Rat>>, Vec<Vec<Rat>>) = match &atoms[a] {
                    AtomShape::Full => return Ok(AtomSeparationGrade::NoSeparation),
                    AtomShape::Finite { points } => (points.clone(), Vec::new()),
                    AtomShape::Polyhedron { vertices, rays } => {
                        (vertices.clone(), rays.clone())
                    }
                };
                match lp::separate_point_from_atomwise_polytope(&x_a, &vertices, &rays, &weights)?
                {
                    SeparationOutcome::Separated(s) => Ok(AtomSeparationGrade::Strict {
                        density: s.functional,
                        margin: s.margin,
                    }),
                    SeparationOutcome::NoSeparation => Ok(AtomSeparationGrade::NoSeparation),
                }
            }
            ConditionalSet::HRep { constraints } => {
                let Some(rows) = Self::hrep_atom_rows(constraints, sp, a) else {
                    // Empty projection: everything is outside; any density
                    // separates vacuously, report the zero functional.
                    return Ok(AtomSeparationGrade::Strict {
                        density: vec![Rat::zero(); x_a.len()],
                        margin: Rat::zero(),
                    });
                };
                if !self.atom_feasible(sp, a)? {
                    return Ok(AtomSeparationGrade::Strict {
                        density: vec![Rat::zero(); x_a.len()],
                        margin: Rat::zero(),
                    });
                }
                let closed: Vec<HalfSpace> = rows.iter().map(|(hs, _)| hs.clone()).collect();
                match lp::separate_point_from_atomwise_hrep(&x_a, &closed)? {
                    SeparationOutcome::Separated(s) => {
                        let density: Vec<Rat> = s
                            .functional
                            .iter()
                            .zip(&weights)
                            .map(|(f, w)| f / w)
                            .collect();
                        Ok(AtomSeparationGrade::Strict {
                            density,
                            margin: s.margin,
                        })
                    }
                    SeparationOutcome::NoSeparation => {
                        // x in the closure; on an open projection a strict row
                        // active at x still witnesses non-membership.
                        for (hs, strict) in &rows {
                            if !*strict {
                                continue;
                            }
                            let lhs: Rat =
                                hs.coeffs.iter().zip(&x_a).map(|(c, v)| c * v).sum();
                            if lhs == hs.rhs {
                                let density: Vec<Rat> = hs
                                    .coeffs
                                    .iter()
                                    .zip(&weights)
                                    .map(|(c, w)| c / w)
                                    .collect();
                                return Ok(AtomSeparationGrade::WeakBoundary { density });
                            }
                        }
                        Ok(AtomSeparationGrade::NoSeparation)
                    }
                }
            }
        }
    }

    /// A point whose atom-projection lies outside proj_a(C); `None` when the
    /// projection is the full atom-space.
    pub fn atom_outside_point(
        &self,
        sp: &FiniteSpace,
        a: usize,
    ) -> Result<Option<Vec<Rat>>, SetError> {
        if self.atom_is_full(sp, a)? {
            return Ok(None);
        }
        let d = sp.atom(a).len();
        match self {
            ConditionalSet::HRep { constraints } => {
                let Some(rows) = Self::hrep_atom_rows(constraints, sp, a) else {
                    return Ok(Some(vec![Rat::zero(); d]));
                };
                for (hs, _) in &rows {
                    if hs.coeffs.iter().all(|c| c.is_zero()) {
                        // Contradictory constant row: empty projection.
                        return Ok(Some(vec![Rat::zero(); d]));
                    }
                }
                // Push past the first non-vacuous row.
                let (hs, _) = rows
                    .iter()
                    .find(|(hs, _)| hs.coeffs.iter().any(|c| !c.is_zero()))
                    .expect("atom not full implies a binding row");
                let norm_sq: Rat = hs.coeffs.iter().map(|c| c * c).sum();
                let scale = (&hs.rhs + Rat::from_integer(1.into())) / norm_sq;
                Ok(Some(hs.coeffs.iter().map(|c| c * &scale).collect()))
            }
            ConditionalSet::VRep { atoms } => match &atoms[a] {
                AtomShape::Full => Ok(None),
                AtomShape::Finite { points } => {
                    let mut first = points
                        .iter()
                        .map(|p| p[0].clone())
                        .max()
                        .unwrap_or_else(Rat::zero);
                    first += Rat::from_integer(1.into());
                    let mut out = vec![Rat::zero(); d];
                    out[0] = first;
                    Ok(Some(out))
                }
                AtomShape::Polyhedron { vertices, rays } => {
                    let dir = bounded_support_direction(rays, d)?
                        .expect("non-full polyhedron has a bounded direction");
                    // sup over the set along dir is attained on the vertices.
                    let sup = vertices
                        .iter()
                        .map(|v| {
                            v.iter()
                                .zip(&dir)
                                .map(|(a, b)| a * b)
                                .sum::<Rat>()
                        })
                        .max()
                        .expect("nonempty vertex list");
                    let best = vertices
                        .iter()
                        .find(|v| {
                            v.iter()
                                .zip(&dir)
                                .map(|(a, b)| a * b)
                                .sum::<Rat>()
                                == sup
                        })
                        .expect("sup attained");
                    Ok(Some(
                        best.iter().zip(&dir).map(|(v, c)| v + c).collect(),
                    ))
                }
            },
        }
    }
}

/// Whether cone(rays) = R^d, decided by 2d cone-membership LPs on +-e_i.
fn rays_span_space(rays: &[Vec<Rat>], d: usize) -> Result<bool, LpError> {
    if rays.is_empty() {
        return Ok(d == 0);
    }
    for i in 0..d {
        for sign in [1i64, -1] {
            let mut e = vec![Rat::zero(); d];
            e[i] = Rat::from_integer(sign.into());
            if !cone_member(&e, rays)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// x in cone(rays) by nonnegative-combination feasibility.
pub fn cone_member(x: &[Rat], rays: &[Vec<Rat>]) -> Result<bool, LpError> {
    if rays.is_empty() {
        return Ok(x.iter().all(|v| v.is_zero()));
    }
    let d = x.len();
    let mut prog = LinearProgram::new(Sense::Minimize, vec![Rat::zero(); rays.len()]);
    prog.nonneg = vec![true; rays.len()];
    for i in 0..d {
        let row: Vec<Rat> = rays.iter().map(|r| r[i].clone()).collect();
        prog.push(Constraint::eq(row, x[i].clone()));
    }
    Ok(!matches!(lp::solve(&prog)?, LpOutcome::Infeasible))
}

/// A nonzero direction with bounded support over cone(rays) (an element of
/// the polar cone), or `None` when the rays span the whole space.
fn bounded_support_direction(
    rays: &[Vec<Rat>],
    d: usize,
) -> Result<Option<Vec<Rat>>, LpError> {
    for i in 0..d {
        for sign in [1i64, -1] {
            // maximize sign*c_i over { c : <r,c> <= 0 for all rays, |c|_1 <= 1 }
            let n = 2 * d;
            let mut obj = vec![Rat::zero(); n];
            obj[i] = Rat::from_integer(sign.into());
            let mut prog = LinearProgram::new(Sense::Maximize, obj);
            for j in d..n {
                prog.nonneg[j] = true;
            }
            for r in rays {
                let mut row = vec![Rat::zero(); n];
                row[..d].clone_from_slice(r);
                prog.push(Constraint::le(row, Rat::zero()));
            }
            for k in 0..d {
                let mut up = vec![Rat::zero(); n];
                up[k] = Rat::from_integer(1.into());
                up[d + k] = Rat::from_integer((-1).into());
                prog.push(Constraint::le(up, Rat::zero()));
                let mut lo = vec![Rat::zero(); n];
                lo[k] = Rat::from_integer((-1).into());
                lo[d + k] = Rat::from_integer((-1).into());
                prog.push(Constraint::le(lo, Rat::zero()));
            }
            let mut ball = vec![Rat::zero(); n];
            for item in ball.iter_mut().skip(d) {
                *item = Rat::from_integer(1.into());
            }
            prog.push(Constraint::le(ball, Rat::from_integer(1.into())));
            if let LpOutcome::Optimal { point, value, .. } = lp::solve(&prog)? {
                if value > Rat::zero() {
                    return Ok(Some(point[..d].to_vec()));
                }
            }
        }
    }
    Ok(None)
}

/// Binary relations for maximal-set computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetRelation {
    Ge,
    Le,
    Eq,
    Gt,
    Lt,
}

impl SetRelation {
    pub fn holds(&self, y: &ExtRat, y0: &ExtRat) -> bool {
        match self {
            SetRelation::Ge => y >= y0,
            SetRelation::Le => y <= y0,
            SetRelation::Eq => y == y0,
            SetRelation::Gt => y > y0,
            SetRelation::Lt => y < y0,
        }
    }

    pub fn parse(s: &str) -> Option<SetRelation> {
        match s {
            ">=" => Some(SetRelation::Ge),
            "<=" => Some(SetRelation::Le),
            "=" | "==" => Some(SetRelation::Eq),
            ">" => Some(SetRelation::Gt),
            "<" => Some(SetRelation::Lt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaximalSets {
    /// Atoms where the relation holds for every member of the family.
    pub a_m: GSet,
    /// Atoms where some member violates it.
    pub a_m_comp: GSet,
    /// Atomwise concatenation of violating members (family values elsewhere).
    pub witness: ExtendedGRV,
}

/// The maximal set A_M on which `rel(Y, Y0)` holds for all Y in the family,
/// its complement, and the concatenated violating witness.
pub fn maximal_set(
    family: &[ExtendedGRV],
    y0: &ExtendedGRV,
    rel: SetRelation,
) -> Result<MaximalSets, SetError> {
    if family.is_empty() {
        return Err(SetError::EmptyFamily);
    }
    let n_atoms = y0.per_atom.len();
    let mut mask = vec![false; n_atoms];
    let mut witness = Vec::with_capacity(n_atoms);
    for a in 0..n_atoms {
        let violator = family
            .iter()
            .find(|y| !rel.holds(&y.per_atom[a], &y0.per_atom[a]));
        match violator {
            Some(y) => witness.push(y.per_atom[a].clone()),
            None => {
                mask[a] = true;
                witness.push(family[0].per_atom[a].clone());
            }
        }
    }
    let a_m = GSet::new(mask);
    let a_m_comp = a_m.complement();
    Ok(MaximalSets {
        a_m,
        a_m_comp,
        witness: ExtendedGRV::new(witness),
    })
}

/// The comparison domain of `dual_trivial_pair`: the whole space E or the
/// concatenation hull of a finite point family.
#[derive(Debug, Clone)]
pub enum ComparisonSet<'a> {
    Full,
    Points(&'a [RandomVariable]),
}

#[derive(Debug, Clone)]
pub struct DualTrivialPair {
    pub a_m: GSet,
    pub a_m_comp: GSet,
    /// A point outside|_{A_M-complement} of C, when that region is nonempty.
    pub witness: Option<RandomVariable>,
}

/// Maximal set of atoms on which every element of D can be matched inside C,
/// with the complementary witness. With D = Full and C CSet-closed this
/// recovers the trivial region of C.
pub fn dual_trivial_pair(
    c: &ConditionalSet,
    d: ComparisonSet<'_>,
    sp: &FiniteSpace,
) -> Result<DualTrivialPair, SetError> {
    let n_atoms = sp.n_atoms();
    let mut mask = vec![false; n_atoms];
    let mut witness_atoms: Vec<Option<Vec<Rat>>> = vec![None; n_atoms];
    for a in 0..n_atoms {
        match &d {
            ComparisonSet::Full => match c.atom_outside_point(sp, a)? {
                None => mask[a] = true,
                Some(p) => witness_atoms[a] = Some(p),
            },
            ComparisonSet::Points(points) => {
                let mut bad = None;
                for p in points.iter() {
                    let pr = p.restrict(sp, a);
                    if !c.atom_membership(&pr, sp, a)? {
                        bad = Some(pr);
                        break;
                    }
                }
                match bad {
                    None => mask[a] = true,
                    Some(pr) => witness_atoms[a] = Some(pr),
                }
            }
        }
    }
    let a_m = GSet::new(mask);
    let a_m_comp = a_m.complement();
    let witness = if a_m_comp.is_empty() {
        None
    } else {
        let mut values = vec![Rat::zero(); sp.n_outcomes()];
        for a in 0..n_atoms {
            if let Some(p) = &witness_atoms[a] {
                for (k, &w) in sp.atom(a).iter().enumerate() {
                    values[w] = p[k].clone();
                }
            }
        }
        Some(RandomVariable::new(values))
    };
    Ok(DualTrivialPair {
        a_m,
        a_m_comp,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};
    use crate::space::GMeasurableRV;

    fn space4() -> FiniteSpace {
        FiniteSpace::uniform(4, vec![vec![0, 1], vec![2, 3]]).unwrap()
    }

    fn unit_box_product(sp: &FiniteSpace) -> ConditionalSet {
        let atoms = (0..sp.n_atoms())
            .map(|a| {
                let d = sp.atom(a).len();
                let mut vertices = Vec::new();
                for bits in 0..(1u32 << d) {
                    let v: Vec<Rat> = (0..d)
                        .map(|i| {
                            if bits & (1 << i) != 0 {
                                rat(1)
                            } else {
                                rat(0)
                            }
                        })
                        .collect();
                    vertices.push(v);
                }
                AtomShape::Polyhedron {
                    vertices,
                    rays: Vec::new(),
                }
            })
            .collect();
        ConditionalSet::VRep { atoms }
    }

    #[test]
    fn vrep_membership_examples() {
        let sp = space4();
        let c = unit_box_product(&sp);
        let inside = RandomVariable::new(vec![ratio(1, 2), ratio(1, 2), rat(1), rat(1)]);
        assert!(c.membership(&inside, &sp).unwrap());
        let outside = RandomVariable::from_i64(&[2, 0, 0, 0]);
        assert!(!c.membership(&outside, &sp).unwrap());
    }

    #[test]
    fn hrep_membership_example() {
        let sp = space4();
        let c = ConditionalSet::HRep {
            constraints: vec![HConstraint {
                density: RandomVariable::from_i64(&[1, 1, 1, 1]),
                level: ExtendedGRV::new(vec![ExtRat::Finite(rat(1)), ExtRat::PosInf]),
                strict: true,
            }],
        };
        let x = RandomVariable::from_i64(&[0, 0, 99, 99]);
        assert!(c.membership(&x, &sp).unwrap());
        let y = RandomVariable::from_i64(&[2, 2, 0, 0]);
        assert!(!c.membership(&y, &sp).unwrap());
    }

    #[test]
    fn cc_hull_recombinations() {
        let sp = space4();
        let p0 = RandomVariable::from_i64(&[0, 0, 0, 0]);
        let p1 = RandomVariable::from_i64(&[1, 1, 2, 2]);
        let c = ConditionalSet::cc_hull(&[p0.clone(), p1.clone()], &sp).unwrap();
        for (a1, a2) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let pick = |k: usize| if k == 0 { &p0 } else { &p1 };
            let mixed = crate::space::concat(
                pick(a1),
                pick(a2),
                &GSet::from_atoms(&[0], 2),
                &sp,
            )
            .unwrap();
            assert!(c.membership(&mixed, &sp).unwrap());
        }
        // The midpoint is NOT in the concatenation hull.
        let mid = RandomVariable::new(vec![ratio(1, 2), ratio(1, 2), rat(1), rat(1)]);
        assert!(!c.membership(&mid, &sp).unwrap());
        assert!(ConditionalSet::cc_hull(&[], &sp).is_err());
    }

    #[test]
    fn l0_hull_examples() {
        let sp = space4();
        let p0 = RandomVariable::zero(4);
        let p2 = RandomVariable::from_i64(&[2, 2, 2, 2]);
        let c = ConditionalSet::l0_convex_hull(&[p0.clone(), p2.clone()], &sp).unwrap();
        // Lambda = (1/2 on a1, 0 on a2)
        let x = RandomVariable::from_i64(&[1, 1, 2, 2]);
        assert!(c.membership(&x, &sp).unwrap());
        let y = RandomVariable::from_i64(&[3, 3, 0, 0]);
        assert!(!c.membership(&y, &sp).unwrap());
        assert!(c.membership(&p0, &sp).unwrap());
        assert!(c.membership(&p2, &sp).unwrap());
    }

    #[test]
    fn trivial_region_examples() {
        let sp = space4();
        let c = ConditionalSet::HRep {
            constraints: vec![HConstraint {
                density: RandomVariable::from_i64(&[1, 1, 1, 1]),
                level: ExtendedGRV::new(vec![ExtRat::PosInf, ExtRat::Finite(rat(1))]),
                strict: true,
            }],
        };
        let t = c.trivial_region(&sp).unwrap();
        assert_eq!(t.a_c, GSet::from_atoms(&[0], 2));
        assert_eq!(t.d_c, GSet::from_atoms(&[1], 2));

        let bounded = unit_box_product(&sp);
        assert!(bounded.trivial_region(&sp).unwrap().a_c.is_empty());

        // Rays spanning atom a1's plane.
        let spanning = ConditionalSet::VRep {
            atoms: vec![
                AtomShape::Polyhedron {
                    vertices: vec![vec![rat(0), rat(0)]],
                    rays: vec![
                        vec![rat(1), rat(0)],
                        vec![rat(-1), rat(0)],
                        vec![rat(0), rat(1)],
                        vec![rat(0), rat(-1)],
                    ],
                },
                AtomShape::Polyhedron {
                    vertices: vec![vec![rat(0), rat(0)]],
                    rays: vec![],
                },
            ],
        };
        let t = spanning.trivial_region(&sp).unwrap();
        assert!(t.a_c.contains(0));
        assert!(!t.a_c.contains(1));
        let norm = spanning.normalized(&sp).unwrap();
        match norm {
            ConditionalSet::VRep { ref atoms } => {
                assert!(matches!(atoms[0], AtomShape::Full));
                assert!(matches!(atoms[1], AtomShape::Polyhedron { .. }));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn outside_region_examples() {
        let sp = space4();
        let c = unit_box_product(&sp);
        let x = RandomVariable::from_i64(&[2, 2, 0, 0]);
        assert_eq!(c.outside_region(&x, &sp).unwrap(), GSet::from_atoms(&[0], 2));
        assert!(!c.is_outside(&x, &sp).unwrap());
        let y = RandomVariable::from_i64(&[2, 2, 5, 5]);
        assert_eq!(c.outside_region(&y, &sp).unwrap(), GSet::full(2));
        assert!(c.is_outside(&y, &sp).unwrap());
        let inside = RandomVariable::new(vec![ratio(1, 2); 4]);
        assert!(c.outside_region(&inside, &sp).unwrap().is_empty());
    }

    #[test]
    fn maximal_set_examples() {
        let f = vec![
            ExtendedGRV::new(vec![ExtRat::Finite(rat(1)), ExtRat::Finite(rat(-1))]),
            ExtendedGRV::new(vec![ExtRat::Finite(rat(-1)), ExtRat::Finite(rat(2))]),
        ];
        let y0 = ExtendedGRV::new(vec![ExtRat::zero(), ExtRat::zero()]);
        let m = maximal_set(&f, &y0, SetRelation::Ge).unwrap();
        assert!(m.a_m.is_empty());
        assert!(m.a_m_comp.is_full());
        assert_eq!(
            m.witness.per_atom,
            vec![ExtRat::Finite(rat(-1)), ExtRat::Finite(rat(-1))]
        );

        let refl = maximal_set(&[y0.clone()], &y0, SetRelation::Ge).unwrap();
        assert!(refl.a_m.is_full());

        let inf = ExtendedGRV::constant(ExtRat::PosInf, 2);
        let m = maximal_set(&[inf], &y0, SetRelation::Gt).unwrap();
        assert!(m.a_m.is_full());

        assert!(maximal_set(&[], &y0, SetRelation::Ge).is_err());
    }

    #[test]
    fn dual_trivial_pair_examples() {
        let sp = space4();
        let bounded = unit_box_product(&sp);
        let p = dual_trivial_pair(&bounded, ComparisonSet::Full, &sp).unwrap();
        assert!(p.a_m.is_empty());
        let w = p.witness.expect("witness exists");
        assert!(bounded.is_outside(&w, &sp).unwrap());

        let half_full = ConditionalSet::VRep {
            atoms: vec![
                AtomShape::Full,
                AtomShape::Polyhedron {
                    vertices: vec![vec![rat(0), rat(0)]],
                    rays: vec![],
                },
            ],
        };
        let p = dual_trivial_pair(&half_full, ComparisonSet::Full, &sp).unwrap();
        assert_eq!(p.a_m, GSet::from_atoms(&[0], 2));
        assert_eq!(p.a_m, half_full.trivial_region(&sp).unwrap().a_c);
    }

    #[test]
    fn separate_atom_grades() {
        let sp = space4();
        let c = unit_box_product(&sp);
        let x = RandomVariable::from_i64(&[2, 2, 0, 0]);
        match c.separate_atom(&x, &sp, 0).unwrap() {
            AtomSeparationGrade::Strict { density, margin } => {
                assert!(margin > rat(0));
                // Re-verify against all vertices via the pairing.
                let weights = sp.atom_weights(0);
                let x_val = crate::space::atom_pairing(&x.restrict(&sp, 0), &density, &weights);
                if let ConditionalSet::VRep { atoms } = &c {
                    if let AtomShape::Polyhedron { vertices, .. } = &atoms[0] {
                        for v in vertices {
                            let vv = crate::space::atom_pairing(v, &density, &weights);
                            assert!(&x_val - &vv >= margin);
                        }
                    }
                }
            }
            other => panic!("expected strict separation, got {other:?}"),
        }

        // Open half-space boundary point: weak grade.
        let open = ConditionalSet::HRep {
            constraints: vec![HConstraint {
                density: RandomVariable::from_i64(&[1, 1, 1, 1]),
                level: ExtendedGRV::finite(&GMeasurableRV::constant(rat(0), 2)),
                strict: true,
            }],
        };
        let boundary = RandomVariable::from_i64(&[0, 0, 0, 0]);
        match open.separate_atom(&boundary, &sp, 0).unwrap() {
            AtomSeparationGrade::WeakBoundary { .. } => {}
            other => panic!("expected weak boundary, got {other:?}"),
        }
    }

    #[test]
    fn hrep_feasibility() {
        let sp = space4();
        let empty = ConditionalSet::HRep {
            constraints: vec![
                HConstraint {
                    density: RandomVariable::from_i64(&[1, 1, 1, 1]),
                    level: ExtendedGRV::finite(&GMeasurableRV::constant(rat(0), 2)),
                    strict: false,
                },
                HConstraint {
                    density: RandomVariable::from_i64(&[-1, -1, -1, -1]),
                    level: ExtendedGRV::finite(&GMeasurableRV::constant(rat(-1), 2)),
                    strict: false,
                },
            ],
        };
        assert!(!empty.atom_feasible(&sp, 0).unwrap());
        let nonempty = unit_box_product(&sp);
        assert!(nonempty.atom_feasible(&sp, 0).unwrap());
    }
}
