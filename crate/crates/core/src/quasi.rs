//! Regular quasiconvex maps given by per-atom descriptors, their sublevel
//! sets, the infinity/constancy decompositions of the atom space, and the
//! randomized regularity / quasiconvexity / even-quasiconvexity checks.

use crate::lp::{self, Constraint, LinearProgram, LpError, LpOutcome, Sense};
use crate::rat::{ExtRat, Rat};
use crate::sets::{
    maximal_set, AtomSeparationGrade, ConditionalSet, HConstraint, SetError, SetRelation,
};
use crate::space::{
    atom_pairing, concat, ExtendedGRV, FiniteSpace, GMeasurableRV, GSet, RandomVariable,
    SpaceError,
};
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("descriptor count {got} does not match atom count {expected}")]
    AtomCount { expected: usize, got: usize },
    #[error("descriptor on atom {atom}: {reason}")]
    BadDescriptor { atom: usize, reason: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// A continuous nondecreasing piecewise-linear scalar function, given by its
/// breakpoints plus the slopes of the two unbounded end pieces.
#[derive(Debug, Clone)]
pub struct PLFunction {
    /// (t, g(t)) with strictly increasing t; nonempty.
    pub breakpoints: Vec<(Rat, Rat)>,
    pub left_slope: Rat,
    pub right_slope: Rat,
}

impl PLFunction {
    pub fn validate(&self) -> Result<(), String> {
        if self.breakpoints.is_empty() {
            return Err("no breakpoints".into());
        }
        if self.left_slope < Rat::zero() || self.right_slope < Rat::zero() {
            return Err("negative end slope".into());
        }
        for w in self.breakpoints.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err("breakpoints not strictly increasing".into());
            }
            if w[1].1 < w[0].1 {
                return Err("values not nondecreasing".into());
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: &Rat) -> Rat {
        let (t0, g0) = &self.breakpoints[0];
        if t <= t0 {
            return g0 + &self.left_slope * (t - t0);
        }
        for w in self.breakpoints.windows(2) {
            let (ta, ga) = &w[0];
            let (tb, gb) = &w[1];
            if t <= tb {
                let s = (gb - ga) / (tb - ta);
                return ga + s * (t - ta);
            }
        }
        let (tn, gn) = self.breakpoints.last().unwrap();
        gn + &self.right_slope * (t - tn)
    }

    fn first(&self) -> (&Rat, &Rat) {
        let (t, g) = &self.breakpoints[0];
        (t, g)
    }

    fn last(&self) -> (&Rat, &Rat) {
        let (t, g) = self.breakpoints.last().unwrap();
        (t, g)
    }

    /// Largest t with g(t) <= y: the closed sublevel threshold.
    pub fn inv_le(&self, y: &Rat) -> ExtRat {
        let (tn, gn) = self.last();
        if y >= gn {
            if self.right_slope.is_zero() {
                return ExtRat::PosInf;
            }
            return ExtRat::Finite(tn + (y - gn) / &self.right_slope);
        }
        // Largest breakpoint index with value <= y.
        let pos = self.breakpoints.iter().rposition(|(_, g)| g <= y);
        match pos {
            Some(j) => {
                let (ta, ga) = &self.breakpoints[j];
                let (tb, gb) = &self.breakpoints[j + 1];
                let s = (gb - ga) / (tb - ta);
                ExtRat::Finite(ta + (y - ga) / s)
            }
            None => {
                let (t0, g0) = self.first();
                if self.left_slope.is_zero() {
                    ExtRat::NegInf
                } else {
                    ExtRat::Finite(t0 + (y - g0) / &self.left_slope)
                }
            }
        }
    }

    /// sup{t : g(t) < y} = inf{t : g(t) >= y} (continuity), the open
    /// sublevel threshold.
    pub fn inv_lt(&self, y: &Rat) -> ExtRat {
        let (tn, gn) = self.last();
        if y > gn && self.right_slope.is_zero() {
            return ExtRat::PosInf;
        }
        let (t0, g0) = self.first();
        if g0 >= y {
            if self.left_slope.is_zero() {
                return ExtRat::NegInf;
            }
            return ExtRat::Finite(t0 + (y - g0) / &self.left_slope);
        }
        let pos = self.breakpoints.iter().position(|(_, g)| g >= y);
        match pos {
            Some(j) => {
                let (ta, ga) = &self.breakpoints[j - 1];
                let (tb, gb) = &self.breakpoints[j];
                let s = (gb - ga) / (tb - ta);
                ExtRat::Finite(ta + (y - ga) / s)
            }
            None => ExtRat::Finite(tn + (y - gn) / &self.right_slope),
        }
    }
}

/// Affine pieces of a per-atom convex PL value: (density-coordinate
/// gradient, offset), evaluated as max_j pairing(v, alpha_j) + beta_j.
pub type AffinePieces = Vec<(Vec<Rat>, Rat)>;

#[derive(Debug, Clone)]
pub enum AtomMap {
    /// v -> pairing(v, density) + offset.
    Linear { density: Vec<Rat>, offset: Rat },
    /// v -> max over the atom's outcomes of v_w (conditional ess-sup).
    WorstCase,
    /// v -> max_j pairing(v, alpha_j) + beta_j.
    ConvexPL { pieces: AffinePieces },
    /// v -> g(inner(v)) for a nondecreasing PL g: quasiconvex, generally
    /// non-convex.
    Transformed { g: PLFunction, inner: AffinePieces },
    /// Constant +inf.
    InfiniteAtom,
}

#[derive(Debug, Clone)]
pub struct QuasiMap {
    pub atoms: Vec<AtomMap>,
}

/// Anything that maps random variables to extended G-measurable values; the
/// regularity and quasiconvexity checkers run against this interface so test
/// harnesses can feed deliberately broken maps through them.
pub trait RegularMap {
    fn eval_map(&self, x: &RandomVariable, sp: &FiniteSpace) -> ExtendedGRV;
}

impl QuasiMap {
    pub fn new(atoms: Vec<AtomMap>, sp: &FiniteSpace) -> Result<Self, MapError> {
        if atoms.len() != sp.n_atoms() {
            return Err(MapError::AtomCount {
                expected: sp.n_atoms(),
                got: atoms.len(),
            });
        }
        for (a, m) in atoms.iter().enumerate() {
            let d = sp.atom(a).len();
            let check_dim = |v: &Vec<Rat>| -> Result<(), MapError> {
                if v.len() != d {
                    return Err(MapError::BadDescriptor {
                        atom: a,
                        reason: format!("gradient length {} != atom size {d}", v.len()),
                    });
                }
                Ok(())
            };
            match m {
                AtomMap::Linear { density, .. } => check_dim(density)?,
                AtomMap::WorstCase | AtomMap::InfiniteAtom => {}
                AtomMap::ConvexPL { pieces } | AtomMap::Transformed { inner: pieces, .. } => {
                    if pieces.is_empty() {
                        return Err(MapError::BadDescriptor {
                            atom: a,
                            reason: "empty piece list".into(),
                        });
                    }
                    for (alpha, _) in pieces {
                        check_dim(alpha)?;
                    }
                }
            }
            if let AtomMap::Transformed { g, .. } = m {
                g.validate().map_err(|reason| MapError::BadDescriptor {
                    atom: a,
                    reason,
                })?;
            }
        }
        Ok(QuasiMap { atoms })
    }

    fn pieces_value(pieces: &AffinePieces, x_a: &[Rat], weights: &[Rat]) -> Rat {
        pieces
            .iter()
            .map(|(alpha, beta)| atom_pairing(x_a, alpha, weights) + beta)
            .max()
            .expect("nonempty pieces")
    }

    pub fn eval_atom(&self, x: &RandomVariable, sp: &FiniteSpace, a: usize) -> ExtRat {
        let x_a = x.restrict(sp, a);
        let weights = sp.atom_weights(a);
        match &self.atoms[a] {
            AtomMap::Linear { density, offset } => {
                ExtRat::Finite(atom_pairing(&x_a, density, &weights) + offset)
            }
            AtomMap::WorstCase => ExtRat::Finite(x_a.iter().max().unwrap().clone()),
            AtomMap::ConvexPL { pieces } => {
                ExtRat::Finite(Self::pieces_value(pieces, &x_a, &weights))
            }
            AtomMap::Transformed { g, inner } => {
                ExtRat::Finite(g.eval(&Self::pieces_value(inner, &x_a, &weights)))
            }
            AtomMap::InfiniteAtom => ExtRat::PosInf,
        }
    }

    pub fn eval(&self, x: &RandomVariable, sp: &FiniteSpace) -> ExtendedGRV {
        ExtendedGRV::new(
            (0..sp.n_atoms())
                .map(|a| self.eval_atom(x, sp, a))
                .collect(),
        )
    }

    /// (Upsilon, T): the maximal region where the map is identically +inf
    /// and its complement, recovered through the maximal-set operation.
    pub fn infinity_region(&self, sp: &FiniteSpace) -> Result<(GSet, GSet), MapError> {
        let probe = self.eval(&RandomVariable::zero(sp.n_outcomes()), sp);
        let y0 = ExtendedGRV::constant(ExtRat::PosInf, sp.n_atoms());
        let m = maximal_set(&[probe], &y0, SetRelation::Eq)?;
        Ok((m.a_m, m.a_m_comp))
    }

    /// (A, A-complement): the maximal region where the map is constant over
    /// all of E (with the +inf - inf = 0 convention, infinite atoms are
    /// constant).
    pub fn constancy_region(&self, sp: &FiniteSpace) -> Result<(GSet, GSet), MapError> {
        let mut mask = Vec::with_capacity(sp.n_atoms());
        for (a, m) in self.atoms.iter().enumerate() {
            let constant = match m {
                AtomMap::InfiniteAtom => true,
                AtomMap::Linear { density, .. } => density.iter().all(|z| z.is_zero()),
                AtomMap::WorstCase => false,
                AtomMap::ConvexPL { pieces } => pieces
                    .iter()
                    .all(|(alpha, _)| alpha.iter().all(|z| z.is_zero())),
                AtomMap::Transformed { g, inner } => {
                    if inner
                        .iter()
                        .all(|(alpha, _)| alpha.iter().all(|z| z.is_zero()))
                    {
                        true
                    } else {
                        // g flat on [inf inner, +inf): the composite is
                        // constant although the inner value is not.
                        match pieces_infimum(inner, sp, a)? {
                            ExtRat::NegInf => {
                                let (_, g0) = g.first();
                                let (_, gn) = g.last();
                                g.left_slope.is_zero()
                                    && g.right_slope.is_zero()
                                    && g0 == gn
                            }
                            ExtRat::Finite(m) => {
                                let (_, gn) = g.last();
                                g.right_slope.is_zero() && &g.eval(&m) == gn
                            }
                            ExtRat::PosInf => unreachable!("finite pieces"),
                        }
                    }
                }
            };
            mask.push(constant);
        }
        let a_set = GSet::new(mask);
        let comp = a_set.complement();
        Ok((a_set, comp))
    }

    /// Sublevel set {xi : pi(xi) 1_T <= Y} (or the strict variant) as a
    /// conditional set: FULL outside region * T and where Y = +inf; the
    /// all-WorstCase non-strict case is returned in vertex/ray form.
    pub fn level_set(
        &self,
        spec: &LevelSetSpec,
        sp: &FiniteSpace,
    ) -> Result<ConditionalSet, MapError> {
        let (_, t_pi) = self.infinity_region(sp)?;
        let active = spec.region.intersect(&t_pi);
        let constrained: Vec<usize> = (0..sp.n_atoms())
            .filter(|&a| active.contains(a) && spec.y.per_atom[a] != ExtRat::PosInf)
            .collect();
        let all_worst = constrained
            .iter()
            .all(|&a| matches!(self.atoms[a], AtomMap::WorstCase));
        if all_worst && !spec.strict {
            let mut shapes = Vec::with_capacity(sp.n_atoms());
            for a in 0..sp.n_atoms() {
                if !constrained.contains(&a) {
                    shapes.push(crate::sets::AtomShape::Full);
                    continue;
                }
                let d = sp.atom(a).len();
                match &spec.y.per_atom[a] {
                    ExtRat::NegInf => {
                        shapes.push(crate::sets::AtomShape::Finite { points: vec![] })
                    }
                    ExtRat::Finite(y) => {
                        let vertex = vec![y.clone(); d];
                        let rays = (0..d)
                            .map(|i| {
                                let mut r = vec![Rat::zero(); d];
                                r[i] = -Rat::one();
                                r
                            })
                            .collect();
                        shapes.push(crate::sets::AtomShape::Polyhedron {
                            vertices: vec![vertex],
                            rays,
                        });
                    }
                    ExtRat::PosInf => unreachable!("filtered above"),
                }
            }
            return Ok(ConditionalSet::VRep { atoms: shapes });
        }

        let n = sp.n_outcomes();
        let n_atoms = sp.n_atoms();
        let mut constraints: Vec<HConstraint> = Vec::new();
        let push_row = |constraints: &mut Vec<HConstraint>,
                        a: usize,
                        density_a: Vec<Rat>,
                        level: Rat,
                        strict: bool| {
            let mut values = vec![Rat::zero(); n];
            for (i, &w) in sp.atom(a).iter().enumerate() {
                values[w] = density_a[i].clone();
            }
            let mut lv = vec![ExtRat::PosInf; n_atoms];
            lv[a] = ExtRat::Finite(level);
            constraints.push(HConstraint {
                density: RandomVariable::new(values),
                level: ExtendedGRV::new(lv),
                strict,
            });
        };
        let empty_row = |a: usize| HConstraint {
            density: RandomVariable::zero(n),
            level: {
                let mut lv = vec![ExtRat::PosInf; n_atoms];
                lv[a] = ExtRat::Finite(-Rat::one());
                ExtendedGRV::new(lv)
            },
            strict: false,
        };
        for &a in &constrained {
            let d = sp.atom(a).len();
            let weights = sp.atom_weights(a);
            let y = match &spec.y.per_atom[a] {
                ExtRat::NegInf => {
                    constraints.push(empty_row(a));
                    continue;
                }
                ExtRat::Finite(y) => y.clone(),
                ExtRat::PosInf => unreachable!("filtered above"),
            };
            match &self.atoms[a] {
                AtomMap::InfiniteAtom => unreachable!("outside T"),
                AtomMap::Linear { density, offset } => {
                    push_row(&mut constraints, a, density.clone(), &y - offset, spec.strict);
                }
                AtomMap::WorstCase => {
                    for i in 0..d {
                        let mut z = vec![Rat::zero(); d];
                        z[i] = Rat::one() / &weights[i];
                        push_row(&mut constraints, a, z, y.clone(), spec.strict);
                    }
                }
                AtomMap::ConvexPL { pieces } => {
                    for (alpha, beta) in pieces {
                        push_row(&mut constraints, a, alpha.clone(), &y - beta, spec.strict);
                    }
                }
                AtomMap::Transformed { g, inner } => {
                    let threshold = if spec.strict { g.inv_lt(&y) } else { g.inv_le(&y) };
                    match threshold {
                        ExtRat::PosInf => {}
                        ExtRat::NegInf => constraints.push(empty_row(a)),
                        ExtRat::Finite(t) => {
                            for (alpha, beta) in inner {
                                push_row(&mut constraints, a, alpha.clone(), &t - beta, spec.strict);
                            }
                        }
                    }
                }
            }
        }
        Ok(ConditionalSet::HRep { constraints })
    }
}

impl RegularMap for QuasiMap {
    fn eval_map(&self, x: &RandomVariable, sp: &FiniteSpace) -> ExtendedGRV {
        self.eval(x, sp)
    }
}

/// inf over the atom-space of max_j pairing(v, alpha_j) + beta_j, by LP.
fn pieces_infimum(
    pieces: &AffinePieces,
    sp: &FiniteSpace,
    a: usize,
) -> Result<ExtRat, MapError> {
    let d = sp.atom(a).len();
    let weights = sp.atom_weights(a);
    let mut obj = vec![Rat::zero(); d + 1];
    obj[d] = Rat::one();
    let mut prog = LinearProgram::new(Sense::Minimize, obj);
    for (alpha, beta) in pieces {
        let mut row: Vec<Rat> = alpha.iter().zip(&weights).map(|(z, w)| z * w).collect();
        row.push(-Rat::one());
        prog.push(Constraint::le(row, -beta.clone()));
    }
    match lp::solve(&prog)? {
        LpOutcome::Optimal { value, .. } => Ok(ExtRat::Finite(value)),
        LpOutcome::Unbounded { .. } => Ok(ExtRat::NegInf),
        LpOutcome::Infeasible => unreachable!("epigraph is nonempty"),
    }
}

#[derive(Debug, Clone)]
pub struct LevelSetSpec {
    pub y: ExtendedGRV,
    pub strict: bool,
    /// Atoms on which the level constraint applies (intersected with T).
    pub region: GSet,
}

impl LevelSetSpec {
    pub fn closed(y: ExtendedGRV, n_atoms: usize) -> Self {
        LevelSetSpec {
            y,
            strict: false,
            region: GSet::full(n_atoms),
        }
    }

    pub fn open(y: ExtendedGRV, n_atoms: usize) -> Self {
        LevelSetSpec {
            y,
            strict: true,
            region: GSet::full(n_atoms),
        }
    }
}

pub(crate) fn random_rat(rng: &mut ChaCha8Rng, lo: i64, hi: i64, max_den: i64) -> Rat {
    let num: i64 = rng.gen_range(lo..=hi);
    let den: i64 = rng.gen_range(1..=max_den);
    Rat::new(num.into(), den.into())
}

pub(crate) fn random_rv(rng: &mut ChaCha8Rng, n: usize) -> RandomVariable {
    RandomVariable::new((0..n).map(|_| random_rat(rng, -8, 8, 4)).collect())
}

#[derive(Debug, Clone)]
pub struct RegWitness {
    pub set: GSet,
    pub x: RandomVariable,
    pub y: RandomVariable,
}

#[derive(Debug, Clone)]
pub struct RegReport {
    pub trials: usize,
    pub witness: Option<RegWitness>,
}

impl RegReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Randomized exact check of the regularity concatenation identity:
/// eval(x 1_A + y 1_{A^c}) agrees with eval(x) on A.
pub fn check_reg<M: RegularMap>(
    map: &M,
    sp: &FiniteSpace,
    seed: u64,
    trials: usize,
) -> Result<RegReport, MapError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_atoms = sp.n_atoms();
    for _ in 0..trials {
        let x = random_rv(&mut rng, sp.n_outcomes());
        let y = random_rv(&mut rng, sp.n_outcomes());
        let mask: Vec<bool> = (0..n_atoms).map(|_| rng.gen_bool(0.5)).collect();
        let set = GSet::new(mask);
        let mixed = concat(&x, &y, &set, sp)?;
        let ev_mixed = map.eval_map(&mixed, sp);
        let ev_x = map.eval_map(&x, sp);
        for a in set.atoms() {
            if ev_mixed.per_atom[a] != ev_x.per_atom[a] {
                return Ok(RegReport {
                    trials,
                    witness: Some(RegWitness { set, x, y }),
                });
            }
        }
    }
    Ok(RegReport {
        trials,
        witness: None,
    })
}

#[derive(Debug, Clone)]
pub struct QcoWitness {
    pub x1: RandomVariable,
    pub x2: RandomVariable,
    pub lambda: GMeasurableRV,
    pub atom: usize,
}

#[derive(Debug, Clone)]
pub struct QcoReport {
    pub trials: usize,
    pub witness: Option<QcoWitness>,
}

impl QcoReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Randomized exact check of quasiconvexity in its max form:
/// pi(L x1 + (1-L) x2) <= pi(x1) v pi(x2) for G-measurable L in [0,1].
pub fn check_qco<M: RegularMap>(
    map: &M,
    sp: &FiniteSpace,
    seed: u64,
    trials: usize,
) -> Result<QcoReport, MapError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_atoms = sp.n_atoms();
    for _ in 0..trials {
        let x1 = random_rv(&mut rng, sp.n_outcomes());
        let x2 = random_rv(&mut rng, sp.n_outcomes());
        let lam = GMeasurableRV::new(
            (0..n_atoms)
                .map(|_| {
                    let den: i64 = rng.gen_range(1..=4);
                    let num: i64 = rng.gen_range(0..=den);
                    Rat::new(num.into(), den.into())
                })
                .collect(),
        );
        let one_minus = GMeasurableRV::new(
            lam.per_atom.iter().map(|l| Rat::one() - l).collect(),
        );
        let mix = x1.scale_g(sp, &lam).add(&x2.scale_g(sp, &one_minus));
        let ev = map.eval_map(&mix, sp);
        let e1 = map.eval_map(&x1, sp);
        let e2 = map.eval_map(&x2, sp);
        for a in 0..n_atoms {
            let bound = e1.per_atom[a].clone().max(e2.per_atom[a].clone());
            if ev.per_atom[a] > bound {
                return Ok(QcoReport {
                    trials,
                    witness: Some(QcoWitness {
                        x1,
                        x2,
                        lambda: lam,
                        atom: a,
                    }),
                });
            }
        }
    }
    Ok(QcoReport {
        trials,
        witness: None,
    })
}

#[derive(Debug, Clone)]
pub struct EqcWitness {
    pub y: ExtendedGRV,
    pub x: RandomVariable,
    pub atom: usize,
}

#[derive(Debug, Clone)]
pub struct EqcReport {
    pub trials: usize,
    pub separations: usize,
    pub witness: Option<EqcWitness>,
}

impl EqcReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Randomized check of even quasiconvexity: points missing a sublevel-set
/// projection must be strictly separable from it, atom by atom.
pub fn check_eqc(
    map: &QuasiMap,
    sp: &FiniteSpace,
    seed: u64,
    trials: usize,
) -> Result<EqcReport, MapError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_atoms = sp.n_atoms();
    let mut separations = 0usize;
    for _ in 0..trials {
        let y = ExtendedGRV::new(
            (0..n_atoms)
                .map(|_| {
                    if rng.gen_range(0..8) == 0 {
                        ExtRat::PosInf
                    } else {
                        ExtRat::Finite(random_rat(&mut rng, -6, 6, 3))
                    }
                })
                .collect(),
        );
        let level = map.level_set(&LevelSetSpec::closed(y.clone(), n_atoms), sp)?;
        let triv = level.trivial_region(sp)?;
        let x = random_rv(&mut rng, sp.n_outcomes());
        for a in triv.d_c.atoms() {
            if level.atom_membership(&x.restrict(sp, a), sp, a)? {
                continue;
            }
            match level.separate_atom(&x, sp, a)? {
                AtomSeparationGrade::Strict { .. } => separations += 1,
                _ => {
                    return Ok(EqcReport {
                        trials,
                        separations,
                        witness: Some(EqcWitness { y, x, atom: a }),
                    })
                }
            }
        }
    }
    Ok(EqcReport {
        trials,
        separations,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};
    use crate::sets::AtomShape;

    fn space4() -> FiniteSpace {
        FiniteSpace::uniform(4, vec![vec![0, 1], vec![2, 3]]).unwrap()
    }

    fn clamp_at_5() -> PLFunction {
        PLFunction {
            breakpoints: vec![(rat(5), rat(5))],
            left_slope: rat(1),
            right_slope: rat(0),
        }
    }

    fn worst_case_pieces(sp: &FiniteSpace, a: usize) -> AffinePieces {
        let weights = sp.atom_weights(a);
        (0..weights.len())
            .map(|i| {
                let mut alpha = vec![Rat::zero(); weights.len()];
                alpha[i] = Rat::one() / &weights[i];
                (alpha, Rat::zero())
            })
            .collect()
    }

    #[test]
    fn eval_examples() {
        let sp = space4();
        let lin = QuasiMap::new(
            vec![
                AtomMap::Linear {
                    density: vec![rat(1), rat(1)],
                    offset: rat(0),
                },
                AtomMap::Linear {
                    density: vec![rat(1), rat(1)],
                    offset: rat(0),
                },
            ],
            &sp,
        )
        .unwrap();
        let x = RandomVariable::from_i64(&[1, 2, 3, 4]);
        assert_eq!(
            lin.eval(&x, &sp).per_atom,
            vec![ExtRat::Finite(ratio(3, 2)), ExtRat::Finite(ratio(7, 2))]
        );

        let wc = QuasiMap::new(vec![AtomMap::WorstCase, AtomMap::WorstCase], &sp).unwrap();
        let x = RandomVariable::from_i64(&[1, -3, 2, -2]);
        assert_eq!(
            wc.eval(&x, &sp).per_atom,
            vec![ExtRat::Finite(rat(1)), ExtRat::Finite(rat(2))]
        );

        let tr = QuasiMap::new(
            vec![
                AtomMap::Transformed {
                    g: clamp_at_5(),
                    inner: worst_case_pieces(&sp, 0),
                },
                AtomMap::Transformed {
                    g: clamp_at_5(),
                    inner: worst_case_pieces(&sp, 1),
                },
            ],
            &sp,
        )
        .unwrap();
        let x = RandomVariable::from_i64(&[9, 9, 1, 1]);
        assert_eq!(
            tr.eval(&x, &sp).per_atom,
            vec![ExtRat::Finite(rat(5)), ExtRat::Finite(rat(1))]
        );
    }

    #[test]
    fn pl_inverse_thresholds() {
        let g = clamp_at_5();
        assert_eq!(g.inv_le(&rat(3)), ExtRat::Finite(rat(3)));
        assert_eq!(g.inv_le(&rat(5)), ExtRat::PosInf);
        assert_eq!(g.inv_le(&rat(7)), ExtRat::PosInf);
        assert_eq!(g.inv_lt(&rat(3)), ExtRat::Finite(rat(3)));
        assert_eq!(g.inv_lt(&rat(5)), ExtRat::Finite(rat(5)));
        assert_eq!(g.inv_lt(&rat(7)), ExtRat::PosInf);

        let flat = PLFunction {
            breakpoints: vec![(rat(0), rat(2))],
            left_slope: rat(0),
            right_slope: rat(1),
        };
        assert_eq!(flat.inv_le(&rat(1)), ExtRat::NegInf);
        assert_eq!(flat.inv_lt(&rat(2)), ExtRat::NegInf);
        assert_eq!(flat.inv_le(&rat(3)), ExtRat::Finite(rat(1)));
    }

    #[test]
    fn infinity_region_examples() {
        let sp = space4();
        let finite = QuasiMap::new(vec![AtomMap::WorstCase, AtomMap::WorstCase], &sp).unwrap();
        let (u, t) = finite.infinity_region(&sp).unwrap();
        assert!(u.is_empty());
        assert!(t.is_full());

        let partial =
            QuasiMap::new(vec![AtomMap::InfiniteAtom, AtomMap::WorstCase], &sp).unwrap();
        let (u, t) = partial.infinity_region(&sp).unwrap();
        assert_eq!(u, GSet::from_atoms(&[0], 2));
        assert_eq!(t, GSet::from_atoms(&[1], 2));

        let all = QuasiMap::new(vec![AtomMap::InfiniteAtom, AtomMap::InfiniteAtom], &sp).unwrap();
        let (_, t) = all.infinity_region(&sp).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn constancy_region_examples() {
        let sp = space4();
        let m = QuasiMap::new(
            vec![
                AtomMap::InfiniteAtom,
                AtomMap::Linear {
                    density: vec![rat(0), rat(0)],
                    offset: rat(3),
                },
            ],
            &sp,
        )
        .unwrap();
        let (a, comp) = m.constancy_region(&sp).unwrap();
        assert!(a.is_full());
        assert!(comp.is_empty());

        let wc = QuasiMap::new(vec![AtomMap::WorstCase, AtomMap::WorstCase], &sp).unwrap();
        let (a, comp) = wc.constancy_region(&sp).unwrap();
        assert!(a.is_empty());
        assert!(comp.is_full());

        // Saturating transform of an unbounded-below inner value is NOT
        // constant (left tail varies), but a globally flat g is.
        let flat_g = PLFunction {
            breakpoints: vec![(rat(0), rat(7))],
            left_slope: rat(0),
            right_slope: rat(0),
        };
        let m = QuasiMap::new(
            vec![
                AtomMap::Transformed {
                    g: flat_g,
                    inner: worst_case_pieces(&sp, 0),
                },
                AtomMap::WorstCase,
            ],
            &sp,
        )
        .unwrap();
        let (a, _) = m.constancy_region(&sp).unwrap();
        assert_eq!(a, GSet::from_atoms(&[0], 2));
    }

    #[test]
    fn level_set_worst_case_is_box() {
        let sp = space4();
        let wc = QuasiMap::new(vec![AtomMap::WorstCase, AtomMap::WorstCase], &sp).unwrap();
        let y = ExtendedGRV::new(vec![ExtRat::Finite(rat(1)), ExtRat::Finite(rat(2))]);
        let c = wc.level_set(&LevelSetSpec::closed(y, 2), &sp).unwrap();
        match &c {
            ConditionalSet::VRep { atoms } => {
                assert!(matches!(&atoms[0], AtomShape::Polyhedron { vertices, rays }
                    if vertices == &vec![vec![rat(1), rat(1)]] && rays.len() == 2));
            }
            _ => panic!("expected VRep"),
        }
        let inside = RandomVariable::from_i64(&[1, 0, 2, -5]);
        assert!(c.membership(&inside, &sp).unwrap());
        let outside = RandomVariable::from_i64(&[1, 0, 3, 0]);
        assert!(!c.membership(&outside, &sp).unwrap());
    }

    #[test]
    fn level_set_full_and_linear() {
        let sp = space4();
        let lin = QuasiMap::new(
            vec![
                AtomMap::Linear {
                    density: vec![rat(1), rat(1)],
                    offset: rat(0),
                },
                AtomMap::Linear {
                    density: vec![rat(1), rat(1)],
                    offset: rat(0),
                },
            ],
            &sp,
        )
        .unwrap();
        let y = ExtendedGRV::new(vec![ExtRat::PosInf, ExtRat::Finite(rat(0))]);
        let c = lin.level_set(&LevelSetSpec::closed(y, 2), &sp).unwrap();
        let t = c.trivial_region(&sp).unwrap();
        assert!(t.a_c.contains(0));
        assert!(!t.a_c.contains(1));
        let x = RandomVariable::from_i64(&[100, 100, -1, 1]);
        assert!(c.membership(&x, &sp).unwrap());
        let x = RandomVariable::from_i64(&[0, 0, 1, 1]);
        assert!(!c.membership(&x, &sp).unwrap());
    }

    #[test]
    fn level_set_infinite_atom_is_full() {
        let sp = space4();
        let m = QuasiMap::new(vec![AtomMap::InfiniteAtom, AtomMap::WorstCase], &sp).unwrap();
        let y = ExtendedGRV::new(vec![ExtRat::Finite(rat(0)), ExtRat::Finite(rat(0))]);
        let c = m.level_set(&LevelSetSpec::closed(y, 2), &sp).unwrap();
        let t = c.trivial_region(&sp).unwrap();
        assert!(t.a_c.contains(0), "level sets are FULL on infinite atoms");
    }

    #[test]
    fn level_set_transformed_threshold() {
        let sp = space4();
        let m = QuasiMap::new(
            vec![
                AtomMap::Transformed {
                    g: clamp_at_5(),
                    inner: worst_case_pieces(&sp, 0),
                },
                AtomMap::WorstCase,
            ],
            &sp,
        )
        .unwrap();
        // Y = 5 saturates g on atom 1: no constraint there.
        let y = ExtendedGRV::new(vec![ExtRat::Finite(rat(5)), ExtRat::Finite(rat(0))]);
        let c = m.level_set(&LevelSetSpec::closed(y, 2), &sp).unwrap();
        let x = RandomVariable::from_i64(&[1000, 1000, 0, 0]);
        assert!(c.membership(&x, &sp).unwrap());
        // Y = 3: inner <= 3 binds.
        let y = ExtendedGRV::new(vec![ExtRat::Finite(rat(3)), ExtRat::Finite(rat(0))]);
        let c = m.level_set(&LevelSetSpec::closed(y, 2), &sp).unwrap();
        let x = RandomVariable::from_i64(&[4, 0, 0, 0]);
        assert!(!c.membership(&x, &sp).unwrap());
        let x = RandomVariable::from_i64(&[3, 3, 0, 0]);
        assert!(c.membership(&x, &sp).unwrap());
    }

    #[test]
    fn level_set_monotone_in_y() {
        let sp = space4();
        let m = QuasiMap::new(
            vec![
                AtomMap::ConvexPL {
                    pieces: vec![
                        (vec![rat(2), rat(0)], rat(0)),
                        (vec![rat(0), rat(2)], rat(1)),
                    ],
                },
                AtomMap::WorstCase,
            ],
            &sp,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let y1v = random_rat(&mut rng, -5, 5, 3);
            let y2v = &y1v + random_rat(&mut rng, 0, 4, 2);
            let y1 = ExtendedGRV::constant(ExtRat::Finite(y1v), 2);
            let y2 = ExtendedGRV::constant(ExtRat::Finite(y2v), 2);
            let c1 = m.level_set(&LevelSetSpec::closed(y1, 2), &sp).unwrap();
            let c2 = m.level_set(&LevelSetSpec::closed(y2, 2), &sp).unwrap();
            let x = random_rv(&mut rng, 4);
            if c1.membership(&x, &sp).unwrap() {
                assert!(c2.membership(&x, &sp).unwrap());
            }
        }
    }

    #[test]
    fn builtin_maps_pass_reg_and_qco() {
        let sp = space4();
        let maps = vec![
            QuasiMap::new(vec![AtomMap::WorstCase, AtomMap::InfiniteAtom], &sp).unwrap(),
            QuasiMap::new(
                vec![
                    AtomMap::Linear {
                        density: vec![rat(2), rat(-1)],
                        offset: rat(3),
                    },
                    AtomMap::ConvexPL {
                        pieces: vec![
                            (vec![rat(1), rat(0)], rat(0)),
                            (vec![rat(-1), rat(1)], rat(2)),
                        ],
                    },
                ],
                &sp,
            )
            .unwrap(),
            QuasiMap::new(
                vec![
                    AtomMap::Transformed {
                        g: clamp_at_5(),
                        inner: worst_case_pieces(&sp, 0),
                    },
                    AtomMap::WorstCase,
                ],
                &sp,
            )
            .unwrap(),
        ];
        for m in &maps {
            assert!(check_reg(m, &sp, 11, 100).unwrap().passed());
            assert!(check_qco(m, &sp, 12, 500).unwrap().passed());
        }
    }

    /// A deliberately broken "map" whose value on atom 0 reads outcome 2.
    struct CouplingMap;
    impl RegularMap for CouplingMap {
        fn eval_map(&self, x: &RandomVariable, _sp: &FiniteSpace) -> ExtendedGRV {
            ExtendedGRV::new(vec![
                ExtRat::Finite(x.values[2].clone()),
                ExtRat::Finite(x.values[2].clone()),
            ])
        }
    }

    #[test]
    fn coupling_map_fails_reg() {
        let sp = space4();
        let rep = check_reg(&CouplingMap, &sp, 3, 100).unwrap();
        assert!(!rep.passed());
        let w = rep.witness.unwrap();
        // Re-verify the witness.
        let mixed = concat(&w.x, &w.y, &w.set, &sp).unwrap();
        let em = CouplingMap.eval_map(&mixed, &sp);
        let ex = CouplingMap.eval_map(&w.x, &sp);
        assert!(w
            .set
            .atoms()
            .iter()
            .any(|&a| em.per_atom[a] != ex.per_atom[a]));
    }

    /// Min of two affine maps: regular but not quasiconvex.
    struct MinAffine;
    impl RegularMap for MinAffine {
        fn eval_map(&self, x: &RandomVariable, sp: &FiniteSpace) -> ExtendedGRV {
            ExtendedGRV::new(
                (0..sp.n_atoms())
                    .map(|a| {
                        let xa = x.restrict(sp, a);
                        ExtRat::Finite(xa[0].clone().min(xa[1].clone()))
                    })
                    .collect(),
            )
        }
    }

    #[test]
    fn min_affine_fails_qco() {
        let sp = space4();
        let rep = check_qco(&MinAffine, &sp, 5, 500).unwrap();
        assert!(!rep.passed());
        let w = rep.witness.unwrap();
        // Re-verify the witness triple.
        let one_minus = GMeasurableRV::new(
            w.lambda.per_atom.iter().map(|l| Rat::one() - l).collect(),
        );
        let mix = w
            .x1
            .scale_g(&sp, &w.lambda)
            .add(&w.x2.scale_g(&sp, &one_minus));
        let lhs = MinAffine.eval_map(&mix, &sp);
        let b1 = MinAffine.eval_map(&w.x1, &sp);
        let b2 = MinAffine.eval_map(&w.x2, &sp);
        let bound = b1.per_atom[w.atom].clone().max(b2.per_atom[w.atom].clone());
        assert!(lhs.per_atom[w.atom] > bound);
    }

    #[test]
    fn builtin_maps_pass_eqc() {
        let sp = space4();
        let m = QuasiMap::new(
            vec![
                AtomMap::ConvexPL {
                    pieces: vec![
                        (vec![rat(1), rat(1)], rat(0)),
                        (vec![rat(-2), rat(1)], rat(1)),
                    ],
                },
                AtomMap::Transformed {
                    g: clamp_at_5(),
                    inner: worst_case_pieces(&sp, 1),
                },
            ],
            &sp,
        )
        .unwrap();
        let rep = check_eqc(&m, &sp, 21, 60).unwrap();
        assert!(rep.passed(), "witness: {:?}", rep.witness);
        assert!(rep.separations > 0);
    }

    #[test]
    fn validation_errors() {
        let sp = space4();
        assert!(matches!(
            QuasiMap::new(vec![AtomMap::WorstCase], &sp),
            Err(MapError::AtomCount { .. })
        ));
        assert!(matches!(
            QuasiMap::new(
                vec![
                    AtomMap::Linear {
                        density: vec![rat(1)],
                        offset: rat(0)
                    },
                    AtomMap::WorstCase
                ],
                &sp
            ),
            Err(MapError::BadDescriptor { atom: 0, .. })
        ));
        let bad_g = PLFunction {
            breakpoints: vec![(rat(0), rat(1)), (rat(1), rat(0))],
            left_slope: rat(1),
            right_slope: rat(1),
        };
        assert!(QuasiMap::new(
            vec![
                AtomMap::Transformed {
                    g: bad_g,
                    inner: worst_case_pieces(&sp, 0)
                },
                AtomMap::WorstCase
            ],
            &sp
        )
        .is_err());
    }
}
