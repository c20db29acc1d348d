//! Conditional polar and bipolar sets, the cone specialization, and the
//! bipolar fixed-point check C = C°°.
//!
//! Polars are kept implicit: a constraint system over densities plus LP
//! oracles, never an explicit dual vertex enumeration.

use crate::lp::{self, Constraint, LinearProgram, LpError, LpOutcome, Sense};
use crate::rat::Rat;
use crate::sets::{AtomShape, ConditionalSet, SetError};
use crate::space::{atom_pairing, FiniteSpace, GSet, RandomVariable};
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolarError {
    #[error("polar requires a VRep primal")]
    NotVRep,
    #[error("cone polar requires a cone representation (origin vertex plus rays) on every atom")]
    NotCone,
    #[error("bipolar operations require 0 in the primal set")]
    ZeroNotInPrimal,
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// One atom of the polar: membership of a density w demands
/// pairing(v,w) < 1 per vertex v and pairing(r,w) <= 0 per ray r
/// (cone form: <= 0 per generator).
#[derive(Debug, Clone)]
pub struct PolarAtom {
    pub vertices: Vec<Vec<Rat>>,
    pub rays: Vec<Vec<Rat>>,
}

#[derive(Debug, Clone)]
pub struct PolarSet {
    /// Atoms where the polar constraints apply: the D_C of the primal.
    pub base_d: GSet,
    pub cone: bool,
    pub atoms: Vec<PolarAtom>,
}

impl PolarSet {
    /// Membership of a density: constraints checked on base_D only.
    pub fn membership(&self, z: &RandomVariable, sp: &FiniteSpace) -> Result<bool, PolarError> {
        for a in self.base_d.atoms() {
            let z_a = z.restrict(sp, a);
            let weights = sp.atom_weights(a);
            let at = &self.atoms[a];
            for v in &at.vertices {
                let p = atom_pairing(v, &z_a, &weights);
                let ok = if self.cone { p <= Rat::zero() } else { p < Rat::one() };
                if !ok {
                    return Ok(false);
                }
            }
            for r in &at.rays {
                if atom_pairing(r, &z_a, &weights) > Rat::zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Polar of a VRep set: per atom of D_C, the densities paired strictly below
/// 1 against every vertex and nonpositively against every ray; cone form
/// replaces the vertex rows by `<= 0` generator rows.
pub fn polar(c: &ConditionalSet, cone: bool, sp: &FiniteSpace) -> Result<PolarSet, PolarError> {
    let ConditionalSet::VRep { atoms } = c else {
        return Err(PolarError::NotVRep);
    };
    let triv = c.trivial_region(sp)?;
    let mut out = Vec::with_capacity(atoms.len());
    for (a, shape) in atoms.iter().enumerate() {
        let (vertices, rays) = match shape {
            AtomShape::Full => (Vec::new(), Vec::new()),
            AtomShape::Finite { points } => (points.clone(), Vec::new()),
            AtomShape::Polyhedron { vertices, rays } => (vertices.clone(), rays.clone()),
        };
        if cone {
            let is_cone = matches!(shape, AtomShape::Full)
                || vertices.iter().all(|v| v.iter().all(|x| x.is_zero()));
            if !is_cone {
                return Err(PolarError::NotCone);
            }
            // Generators are the rays; the origin vertex contributes nothing.
            out.push(PolarAtom {
                vertices: Vec::new(),
                rays: rays.clone(),
            });
        } else {
            out.push(PolarAtom { vertices, rays });
        }
        let _ = a;
    }
    Ok(PolarSet {
        base_d: triv.d_c,
        cone,
        atoms: out,
    })
}

/// Per-atom supremum of pairing(v,w) over the closed relaxation of a polar
/// atom, `None` when unbounded.
fn polar_sup(
    p: &PolarSet,
    a: usize,
    v_a: &[Rat],
    sp: &FiniteSpace,
) -> Result<Option<Rat>, PolarError> {
    let weights = sp.atom_weights(a);
    let d = v_a.len();
    let obj: Vec<Rat> = v_a.iter().zip(&weights).map(|(v, w)| v * w).collect();
    let mut prog = LinearProgram::new(Sense::Maximize, obj);
    let at = &p.atoms[a];
    for g in &at.vertices {
        let row: Vec<Rat> = g.iter().zip(&weights).map(|(g, w)| g * w).collect();
        prog.push(Constraint::le(row, Rat::one()));
    }
    for r in &at.rays {
        let row: Vec<Rat> = r.iter().zip(&weights).map(|(g, w)| g * w).collect();
        prog.push(Constraint::le(row, Rat::zero()));
    }
    if prog.constraints.is_empty() {
        // Unconstrained polar atom: sup is 0 only for v = 0.
        return Ok(if v_a.iter().all(|x| x.is_zero()) {
            Some(Rat::zero())
        } else {
            None
        });
    }
    let _ = d;
    match lp::solve(&prog)? {
        LpOutcome::Optimal { value, .. } => Ok(Some(value)),
        LpOutcome::Unbounded { .. } => Ok(None),
        LpOutcome::Infeasible => unreachable!("0 is always polar-feasible"),
    }
}

/// Boundary case of the non-cone bipolar test: sup over the closed
/// relaxation equals 1. v is then a non-member iff some w in the OPEN polar
/// still reaches pairing(v,w) >= 1, decided by maximizing a uniform slack on
/// the strict rows subject to pairing(v,w) >= 1.
fn open_reachable_at_one(
    p: &PolarSet,
    a: usize,
    v_a: &[Rat],
    sp: &FiniteSpace,
) -> Result<bool, PolarError> {
    let weights = sp.atom_weights(a);
    let d = v_a.len();
    let mut obj = vec![Rat::zero(); d + 1];
    obj[d] = Rat::one();
    let mut prog = LinearProgram::new(Sense::Maximize, obj);
    let at = &p.atoms[a];
    for g in &at.vertices {
        let mut row: Vec<Rat> = g.iter().zip(&weights).map(|(g, w)| g * w).collect();
        row.push(Rat::one());
        prog.push(Constraint::le(row, Rat::one()));
    }
    for r in &at.rays {
        let mut row: Vec<Rat> = r.iter().zip(&weights).map(|(g, w)| g * w).collect();
        row.push(Rat::zero());
        prog.push(Constraint::le(row, Rat::zero()));
    }
    let mut lower: Vec<Rat> = v_a.iter().zip(&weights).map(|(v, w)| -(v * w)).collect();
    lower.push(Rat::zero());
    prog.push(Constraint::le(lower, -Rat::one()));
    let mut cap = vec![Rat::zero(); d + 1];
    cap[d] = Rat::one();
    prog.push(Constraint::le(cap, Rat::one()));
    match lp::solve(&prog)? {
        LpOutcome::Optimal { value, .. } => Ok(value > Rat::zero()),
        LpOutcome::Unbounded { .. } => Ok(true),
        LpOutcome::Infeasible => Ok(false),
    }
}

/// v ∈ C°° iff on every atom of D_C the supremum of pairing(v,·) over the
/// polar stays below 1 (cone: at most 0).
pub fn bipolar_membership(
    c: &ConditionalSet,
    p: &PolarSet,
    v: &RandomVariable,
    sp: &FiniteSpace,
) -> Result<bool, PolarError> {
    let zero = RandomVariable::zero(sp.n_outcomes());
    if !c.membership(&zero, sp)? {
        return Err(PolarError::ZeroNotInPrimal);
    }
    for a in p.base_d.atoms() {
        let v_a = v.restrict(sp, a);
        let Some(sup) = polar_sup(p, a, &v_a, sp)? else {
            return Ok(false);
        };
        if p.cone {
            if sup > Rat::zero() {
                return Ok(false);
            }
        } else if sup > Rat::one() {
            return Ok(false);
        } else if sup == Rat::one() && open_reachable_at_one(p, a, &v_a, sp)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct BipolarDiscrepancy {
    pub point: RandomVariable,
    pub in_primal: bool,
    pub in_bipolar: bool,
}

#[derive(Debug, Clone)]
pub struct BipolarReport {
    pub member_probes: usize,
    pub nonmember_probes: usize,
    pub discrepancies: Vec<BipolarDiscrepancy>,
}

impl BipolarReport {
    pub fn passed(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> RandomVariable {
    let values = (0..n)
        .map(|_| {
            let num: i64 = rng.gen_range(-8..=8);
            let den: i64 = rng.gen_range(1..=4);
            Rat::new(num.into(), den.into())
        })
        .collect();
    RandomVariable::new(values)
}

/// Generator probes: atomwise recombinations of the primal's vertex/ray data.
fn generator_probes(c: &ConditionalSet, sp: &FiniteSpace) -> Vec<RandomVariable> {
    let ConditionalSet::VRep { atoms } = c else {
        return Vec::new();
    };
    let mut per_atom: Vec<Vec<Vec<Rat>>> = Vec::new();
    for (a, shape) in atoms.iter().enumerate() {
        let d = sp.atom(a).len();
        let pts = match shape {
            AtomShape::Full => vec![vec![Rat::zero(); d]],
            AtomShape::Finite { points } => points.clone(),
            AtomShape::Polyhedron { vertices, rays } => {
                let mut pts = vertices.clone();
                // Points along each ray from each vertex stay in the set.
                for v in vertices {
                    for r in rays {
                        pts.push(v.iter().zip(r).map(|(a, b)| a + b).collect());
                    }
                }
                pts
            }
        };
        per_atom.push(pts);
    }
    let count = per_atom.iter().map(|p| p.len()).max().unwrap_or(0);
    let mut probes = Vec::new();
    for k in 0..count {
        let mut values = vec![Rat::zero(); sp.n_outcomes()];
        for (a, pts) in per_atom.iter().enumerate() {
            let p = &pts[k % pts.len()];
            for (i, &w) in sp.atom(a).iter().enumerate() {
                values[w] = p[i].clone();
            }
        }
        probes.push(RandomVariable::new(values));
    }
    probes
}

/// Verifies C = C°° on generator probes and randomized non-member probes;
/// any disagreement between primal membership and bipolar membership is a
/// reported discrepancy.
pub fn bipolar_check(
    c: &ConditionalSet,
    cone: bool,
    sp: &FiniteSpace,
    seed: u64,
    nonmember_target: usize,
) -> Result<BipolarReport, PolarError> {
    let zero = RandomVariable::zero(sp.n_outcomes());
    if !c.membership(&zero, sp)? {
        return Err(PolarError::ZeroNotInPrimal);
    }
    let p = polar(c, cone, sp)?;
    let mut report = BipolarReport {
        member_probes: 0,
        nonmember_probes: 0,
        discrepancies: Vec::new(),
    };
    let gens = generator_probes(c, sp);
    let mut probes = gens.clone();
    // Pairwise midpoints: they expose sets that are not L0-convex, where the
    // bipolar strictly grows.
    let half = Rat::new(1.into(), 2.into());
    for i in 0..gens.len() {
        for j in (i + 1)..gens.len() {
            probes.push(gens[i].add(&gens[j]).scale(&half));
        }
    }
    for g in probes {
        let in_primal = c.membership(&g, sp)?;
        let in_bipolar = bipolar_membership(c, &p, &g, sp)?;
        if in_primal {
            report.member_probes += 1;
        } else {
            report.nonmember_probes += 1;
        }
        if in_primal != in_bipolar {
            report.discrepancies.push(BipolarDiscrepancy {
                point: g,
                in_primal,
                in_bipolar,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found = 0usize;
    let mut attempts = 0usize;
    while found < nonmember_target && attempts < nonmember_target * 100 {
        attempts += 1;
        let x = random_point(&mut rng, sp.n_outcomes());
        if c.membership(&x, sp)? {
            continue;
        }
        found += 1;
        report.nonmember_probes += 1;
        if bipolar_membership(c, &p, &x, sp)? {
            report.discrepancies.push(BipolarDiscrepancy {
                point: x,
                in_primal: false,
                in_bipolar: true,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, ratio};

    fn space4() -> FiniteSpace {
        FiniteSpace::uniform(4, vec![vec![0, 1], vec![2, 3]]).unwrap()
    }

    fn box_set(sp: &FiniteSpace) -> ConditionalSet {
        let atoms = (0..sp.n_atoms())
            .map(|_| AtomShape::Polyhedron {
                vertices: vec![
                    vec![rat(1), rat(1)],
                    vec![rat(1), rat(-1)],
                    vec![rat(-1), rat(1)],
                    vec![rat(-1), rat(-1)],
                ],
                rays: vec![],
            })
            .collect();
        ConditionalSet::VRep { atoms }
    }

    fn orthant_cone(sp: &FiniteSpace) -> ConditionalSet {
        let atoms = (0..sp.n_atoms())
            .map(|_| AtomShape::Polyhedron {
                vertices: vec![vec![rat(0), rat(0)]],
                rays: vec![vec![rat(1), rat(0)], vec![rat(0), rat(1)]],
            })
            .collect();
        ConditionalSet::VRep { atoms }
    }

    #[test]
    fn polar_of_symmetric_box_is_l1_ball() {
        // [-1,1]^2 per atom with conditional weights 1/2 each: the polar is
        // { |z1| + |z2| < 2 } per atom.
        let sp = space4();
        let c = box_set(&sp);
        let p = polar(&c, false, &sp).unwrap();
        assert!(p.base_d.is_full());
        let inside = RandomVariable::new(vec![rat(1), ratio(1, 2), rat(-1), ratio(1, 2)]);
        assert!(p.membership(&inside, &sp).unwrap());
        let boundary = RandomVariable::from_i64(&[1, 1, 0, 0]);
        assert!(!p.membership(&boundary, &sp).unwrap());
        let zero = RandomVariable::zero(4);
        assert!(p.membership(&zero, &sp).unwrap());
    }

    #[test]
    fn cone_polar_is_nonpositive_orthant() {
        let sp = space4();
        let c = orthant_cone(&sp);
        let p = polar(&c, true, &sp).unwrap();
        let neg = RandomVariable::from_i64(&[-1, -2, -3, 0]);
        assert!(p.membership(&neg, &sp).unwrap());
        let mixed = RandomVariable::from_i64(&[1, -1, -1, -1]);
        assert!(!p.membership(&mixed, &sp).unwrap());
        assert!(matches!(
            polar(&box_set(&sp), true, &sp),
            Err(PolarError::NotCone)
        ));
    }

    #[test]
    fn bipolar_membership_box() {
        let sp = space4();
        let c = box_set(&sp);
        let p = polar(&c, false, &sp).unwrap();
        // Every vertex recombination belongs to the bipolar.
        for g in generator_probes(&c, &sp) {
            assert!(bipolar_membership(&c, &p, &g, &sp).unwrap());
        }
        // Scaled outside point: LP value 2 > 1.
        let far = RandomVariable::from_i64(&[2, 2, 2, 2]);
        assert!(!bipolar_membership(&c, &p, &far, &sp).unwrap());
        // Boundary point of the closed box stays a member.
        let edge = RandomVariable::from_i64(&[1, 0, 0, 1]);
        assert!(bipolar_membership(&c, &p, &edge, &sp).unwrap());
    }

    #[test]
    fn bipolar_membership_cone() {
        let sp = space4();
        let c = orthant_cone(&sp);
        let p = polar(&c, true, &sp).unwrap();
        let inside = RandomVariable::from_i64(&[3, 0, 1, 2]);
        assert!(bipolar_membership(&c, &p, &inside, &sp).unwrap());
        let outside = RandomVariable::from_i64(&[-1, 0, 1, 1]);
        assert!(!bipolar_membership(&c, &p, &outside, &sp).unwrap());
    }

    #[test]
    fn bipolar_check_closed_cone_passes() {
        let sp = space4();
        let rep = bipolar_check(&orthant_cone(&sp), true, &sp, 0, 50).unwrap();
        assert!(rep.passed(), "discrepancies: {:?}", rep.discrepancies);
        assert!(rep.nonmember_probes >= 50);
    }

    #[test]
    fn bipolar_check_box_passes() {
        let sp = space4();
        let rep = bipolar_check(&box_set(&sp), false, &sp, 1, 50).unwrap();
        assert!(rep.passed(), "discrepancies: {:?}", rep.discrepancies);
    }

    #[test]
    fn bipolar_check_singleton_origin() {
        let sp = space4();
        let atoms = (0..2)
            .map(|_| AtomShape::Polyhedron {
                vertices: vec![vec![rat(0), rat(0)]],
                rays: vec![],
            })
            .collect();
        let c = ConditionalSet::VRep { atoms };
        let rep = bipolar_check(&c, false, &sp, 2, 50).unwrap();
        assert!(rep.passed(), "discrepancies: {:?}", rep.discrepancies);
    }

    #[test]
    fn bipolar_check_flags_nonconvex_point_pair() {
        // Two-point set {0, (2,2,2,2)}: the midpoint is in the bipolar but
        // not the set, so probes must surface a discrepancy.
        let sp = space4();
        let p0 = RandomVariable::zero(4);
        let p1 = RandomVariable::from_i64(&[2, 2, 2, 2]);
        let c = ConditionalSet::cc_hull(&[p0, p1], &sp).unwrap();
        let rep = bipolar_check(&c, false, &sp, 3, 100).unwrap();
        assert!(!rep.passed());
    }

    #[test]
    fn bipolar_requires_zero() {
        let sp = space4();
        let shifted = ConditionalSet::VRep {
            atoms: (0..2)
                .map(|_| AtomShape::Polyhedron {
                    vertices: vec![vec![rat(2), rat(2)], vec![rat(3), rat(3)]],
                    rays: vec![],
                })
                .collect(),
        };
        assert!(matches!(
            bipolar_check(&shifted, false, &sp, 0, 10),
            Err(PolarError::ZeroNotInPrimal)
        ));
    }

    #[test]
    fn cone_scaling_invariance() {
        // Polar membership of a cone is invariant under positive G-scaling
        // of the probe.
        let sp = space4();
        let c = orthant_cone(&sp);
        let p = polar(&c, true, &sp).unwrap();
        let probe = RandomVariable::from_i64(&[-2, -1, 1, 2]);
        let scaled = probe.scale(&ratio(7, 3));
        assert_eq!(
            p.membership(&probe, &sp).unwrap(),
            p.membership(&scaled, &sp).unwrap()
        );
    }
}
