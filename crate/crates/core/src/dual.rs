//! The dual function R(Y,z) = inf{pi(xi) : pairing(xi,z) >= Y}, the
//! constructive epsilon-certificate engine for the dual representation of
//! evenly quasiconvex regular maps, the exact max variant for maps with open
//! level sets, and the randomized property suite for R.

use crate::lp::{self, Constraint, LinearProgram, LpError, LpOutcome, Sense};
use crate::quasi::{AtomMap, LevelSetSpec, MapError, QuasiMap};
use crate::rat::{ExtRat, Rat};
use crate::sets::{AtomSeparationGrade, SetError};
use crate::space::{
    atom_pairing, pairing, ExtendedGRV, FiniteSpace, GMeasurableRV, GSet, RandomVariable,
    SpaceError,
};
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DualError {
    #[error("schedule entry {index} is not strictly positive on atom {atom}")]
    NonPositiveEpsilon { index: usize, atom: usize },
    #[error("separation failed on atom {atom}: the level set is not evenly convex there")]
    SeparationFailure { atom: usize },
    #[error("exact attainment failed on atom {atom}")]
    AttainmentFailure { atom: usize },
    #[error("certificate violated on atom {atom}: {what}")]
    CertificateViolation { atom: usize, what: String },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// One evaluation request for R: a level Y and a density standing for the
/// dual element through the pairing.
#[derive(Debug, Clone)]
pub struct DualFunctionQuery {
    pub y: ExtendedGRV,
    pub density: RandomVariable,
}

/// Per-atom R value plus, where the infimum is attained, a minimizer.
fn atom_r(
    m: &AtomMap,
    y: &ExtRat,
    z_a: &[Rat],
    weights: &[Rat],
) -> Result<(ExtRat, Option<Vec<Rat>>), DualError> {
    let d = z_a.len();
    if matches!(m, AtomMap::InfiniteAtom) {
        return Ok((ExtRat::PosInf, None));
    }
    let y = match y {
        ExtRat::PosInf => return Ok((ExtRat::PosInf, None)),
        ExtRat::NegInf => None,
        ExtRat::Finite(v) => Some(v.clone()),
    };
    // Raw-coefficient pairing row: sum_i w_i z_i xi_i >= y.
    let pairing_row = |extra: usize| -> Option<Constraint> {
        y.as_ref().map(|yv| {
            let mut row: Vec<Rat> = weights.iter().zip(z_a).map(|(w, z)| -(w * z)).collect();
            row.extend(std::iter::repeat(Rat::zero()).take(extra));
            Constraint::le(row, -yv.clone())
        })
    };
    match m {
        AtomMap::InfiniteAtom => unreachable!(),
        AtomMap::Linear { density, offset } => {
            let obj: Vec<Rat> = weights.iter().zip(density).map(|(w, z)| w * z).collect();
            let mut prog = LinearProgram::new(Sense::Minimize, obj);
            if let Some(c) = pairing_row(0) {
                prog.push(c);
            }
            match lp::solve(&prog)? {
                LpOutcome::Optimal { point, value, .. } => {
                    Ok((ExtRat::Finite(value + offset), Some(point)))
                }
                LpOutcome::Unbounded { .. } => Ok((ExtRat::NegInf, None)),
                LpOutcome::Infeasible => Ok((ExtRat::PosInf, None)),
            }
        }
        AtomMap::WorstCase | AtomMap::ConvexPL { .. } | AtomMap::Transformed { .. } => {
            // Epigraph LP over (xi, t): minimize t above every piece.
            let pieces: Vec<(Vec<Rat>, Rat)> = match m {
                AtomMap::WorstCase => (0..d)
                    .map(|i| {
                        let mut alpha = vec![Rat::zero(); d];
                        alpha[i] = Rat::one() / &weights[i];
                        (alpha, Rat::zero())
                    })
                    .collect(),
                AtomMap::ConvexPL { pieces } => pieces.clone(),
                AtomMap::Transformed { inner, .. } => inner.clone(),
                _ => unreachable!(),
            };
            let mut obj = vec![Rat::zero(); d + 1];
            obj[d] = Rat::one();
            let mut prog = LinearProgram::new(Sense::Minimize, obj);
            for (alpha, beta) in &pieces {
                let mut row: Vec<Rat> =
                    weights.iter().zip(alpha).map(|(w, a)| w * a).collect();
                row.push(-Rat::one());
                prog.push(Constraint::le(row, -beta.clone()));
            }
            if let Some(c) = pairing_row(1) {
                prog.push(c);
            }
            let inner = match lp::solve(&prog)? {
                LpOutcome::Optimal { point, value, .. } => {
                    (ExtRat::Finite(value), Some(point[..d].to_vec()))
                }
                LpOutcome::Unbounded { .. } => (ExtRat::NegInf, None),
                LpOutcome::Infeasible => (ExtRat::PosInf, None),
            };
            match m {
                AtomMap::Transformed { g, .. } => match inner {
                    (ExtRat::Finite(t), point) => Ok((ExtRat::Finite(g.eval(&t)), point)),
                    (ExtRat::PosInf, _) => Ok((ExtRat::PosInf, None)),
                    (ExtRat::NegInf, _) => {
                        if !g.left_slope.is_zero() {
                            return Ok((ExtRat::NegInf, None));
                        }
                        // g is flat on the left: the infimum equals g's left
                        // plateau and is attained at any feasible xi whose
                        // inner value sits at or before the first breakpoint.
                        let (t0, g0) = &g.breakpoints[0];
                        let mut prog2 =
                            LinearProgram::new(Sense::Minimize, vec![Rat::zero(); d]);
                        for (alpha, beta) in &pieces {
                            let row: Vec<Rat> =
                                weights.iter().zip(alpha).map(|(w, a)| w * a).collect();
                            prog2.push(Constraint::le(row, t0 - beta));
                        }
                        if let Some(yv) = y.as_ref() {
                            let row: Vec<Rat> = weights
                                .iter()
                                .zip(z_a)
                                .map(|(w, z)| -(w * z))
                                .collect();
                            prog2.push(Constraint::le(row, -yv.clone()));
                        }
                        let point = match lp::solve(&prog2)? {
                            LpOutcome::Optimal { point, .. } => Some(point),
                            _ => None,
                        };
                        Ok((ExtRat::Finite(g0.clone()), point))
                    }
                },
                _ => Ok(inner),
            }
        }
    }
}

pub fn eval_r(
    pi: &QuasiMap,
    q: &DualFunctionQuery,
    sp: &FiniteSpace,
) -> Result<ExtendedGRV, DualError> {
    Ok(ExtendedGRV::new(
        eval_r_detailed(pi, q, sp)?
            .into_iter()
            .map(|(v, _)| v)
            .collect(),
    ))
}

/// Per-atom (value, minimizer) pairs; minimizers realize the selection
/// argument behind the downward-directedness of the feasible value family.
pub fn eval_r_detailed(
    pi: &QuasiMap,
    q: &DualFunctionQuery,
    sp: &FiniteSpace,
) -> Result<Vec<(ExtRat, Option<Vec<Rat>>)>, DualError> {
    let mut out = Vec::with_capacity(sp.n_atoms());
    for a in 0..sp.n_atoms() {
        let z_a = q.density.restrict(sp, a);
        let weights = sp.atom_weights(a);
        out.push(atom_r(&pi.atoms[a], &q.y.per_atom[a], &z_a, &weights)?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DualRegions {
    pub upsilon: GSet,
    pub t: GSet,
    pub constancy: GSet,
    pub nonconstancy: GSet,
    /// G = {pi(x) < +inf}.
    pub finite: GSet,
}

#[derive(Debug, Clone)]
pub struct CertEntry {
    pub eps: GMeasurableRV,
    pub density: RandomVariable,
    pub r_value: ExtendedGRV,
    /// pi(x) - R per atom, with +inf - inf = 0.
    pub gap: ExtendedGRV,
    /// Atoms certified through the empty-level-set branch.
    pub step2: GSet,
    /// Separation margins on the atoms where the oracle ran.
    pub margins: Vec<Option<Rat>>,
}

#[derive(Debug, Clone)]
pub struct DualCertificate {
    pub x: RandomVariable,
    pub pi_x: ExtendedGRV,
    pub regions: DualRegions,
    pub entries: Vec<CertEntry>,
}

pub fn default_schedule(n_atoms: usize) -> Vec<GMeasurableRV> {
    [(1i64, 1i64), (1, 4), (1, 16), (1, 64)]
        .iter()
        .map(|&(n, d)| GMeasurableRV::constant(Rat::new(n.into(), d.into()), n_atoms))
        .collect()
}

/// Constructive dual representation: for each scheduled epsilon builds the
/// shifted level Y_eps and its sublevel set, separates x from it atom by
/// atom, and certifies pi(x) - R < eps on the finite region (exact equality
/// on the constancy region).
pub fn represent(
    pi: &QuasiMap,
    x: &RandomVariable,
    schedule: &[GMeasurableRV],
    sp: &FiniteSpace,
) -> Result<DualCertificate, DualError> {
    let n_atoms = sp.n_atoms();
    let (upsilon, t) = pi.infinity_region(sp)?;
    let (constancy, nonconstancy) = pi.constancy_region(sp)?;
    let pi_x = pi.eval(x, sp);
    let finite = GSet::new(
        (0..n_atoms)
            .map(|a| pi_x.per_atom[a].is_finite())
            .collect(),
    );
    let mut entries = Vec::with_capacity(schedule.len());
    for (idx, eps) in schedule.iter().enumerate() {
        for a in 0..n_atoms {
            if eps.per_atom[a] <= Rat::zero() {
                return Err(DualError::NonPositiveEpsilon { index: idx, atom: a });
            }
        }
        // Y_eps = 0 on Upsilon, pi(x) on the rest of the constancy region,
        // pi(x) - eps on the finite nonconstant atoms, eps on the infinite
        // nonconstant atoms.
        let y_eps = ExtendedGRV::new(
            (0..n_atoms)
                .map(|a| {
                    if upsilon.contains(a) {
                        ExtRat::zero()
                    } else if constancy.contains(a) {
                        pi_x.per_atom[a].clone()
                    } else if finite.contains(a) {
                        let v = pi_x.per_atom[a].as_finite().expect("finite atom");
                        ExtRat::Finite(v - &eps.per_atom[a])
                    } else {
                        ExtRat::Finite(eps.per_atom[a].clone())
                    }
                })
                .collect(),
        );
        let c_eps = pi.level_set(&LevelSetSpec::closed(y_eps, n_atoms), sp)?;
        let mut density_values = vec![Rat::zero(); sp.n_outcomes()];
        let mut step2_mask = vec![false; n_atoms];
        let mut margins: Vec<Option<Rat>> = vec![None; n_atoms];
        for a in nonconstancy.atoms() {
            if !c_eps.atom_feasible(sp, a)? {
                // Empty sublevel set: pi(x) is within eps of the atom
                // minimum and the zero density certifies it.
                step2_mask[a] = true;
                continue;
            }
            if c_eps.atom_membership(&x.restrict(sp, a), sp, a)? {
                return Err(DualError::CertificateViolation {
                    atom: a,
                    what: "x belongs to its own shifted sublevel set".into(),
                });
            }
            match c_eps.separate_atom(x, sp, a)? {
                AtomSeparationGrade::Strict { density, margin } => {
                    for (i, &w) in sp.atom(a).iter().enumerate() {
                        density_values[w] = density[i].clone();
                    }
                    margins[a] = Some(margin);
                }
                _ => return Err(DualError::SeparationFailure { atom: a }),
            }
        }
        let density = RandomVariable::new(density_values);
        let y_pair = ExtendedGRV::finite(&pairing(x, &density, sp)?);
        let r_value = eval_r(
            pi,
            &DualFunctionQuery {
                y: y_pair,
                density: density.clone(),
            },
            sp,
        )?;
        let gap = ExtendedGRV::new(
            (0..n_atoms)
                .map(|a| pi_x.per_atom[a].sub_inf_zero(&r_value.per_atom[a]))
                .collect(),
        );
        let entry = CertEntry {
            eps: eps.clone(),
            density,
            r_value,
            gap,
            step2: GSet::new(step2_mask),
            margins,
        };
        check_entry(&entry, &pi_x, &constancy, &nonconstancy, &finite)?;
        entries.push(entry);
    }
    Ok(DualCertificate {
        x: x.clone(),
        pi_x,
        regions: DualRegions {
            upsilon,
            t,
            constancy,
            nonconstancy,
            finite,
        },
        entries,
    })
}

fn check_entry(
    entry: &CertEntry,
    pi_x: &ExtendedGRV,
    constancy: &GSet,
    nonconstancy: &GSet,
    finite: &GSet,
) -> Result<(), DualError> {
    let n_atoms = pi_x.per_atom.len();
    for a in 0..n_atoms {
        // Weak duality everywhere.
        if entry.r_value.per_atom[a] > pi_x.per_atom[a] {
            return Err(DualError::CertificateViolation {
                atom: a,
                what: "weak duality violated".into(),
            });
        }
        if constancy.contains(a) && entry.gap.per_atom[a] != ExtRat::zero() {
            return Err(DualError::CertificateViolation {
                atom: a,
                what: "nonzero gap on a constancy atom".into(),
            });
        }
        if nonconstancy.contains(a) && finite.contains(a) {
            let bound = ExtRat::Finite(entry.eps.per_atom[a].clone());
            if entry.gap.per_atom[a] >= bound {
                return Err(DualError::CertificateViolation {
                    atom: a,
                    what: "epsilon-closeness violated".into(),
                });
            }
        }
    }
    Ok(())
}

/// Independent re-check of a certificate: recomputes pi(x), the regions, and
/// every entry's R value from the stored densities.
pub fn verify_certificate(
    pi: &QuasiMap,
    cert: &DualCertificate,
    sp: &FiniteSpace,
) -> Result<(), DualError> {
    let pi_x = pi.eval(&cert.x, sp);
    if pi_x.per_atom != cert.pi_x.per_atom {
        return Err(DualError::CertificateViolation {
            atom: 0,
            what: "stored pi(x) does not match".into(),
        });
    }
    let (constancy, nonconstancy) = pi.constancy_region(sp)?;
    let finite = GSet::new(
        (0..sp.n_atoms())
            .map(|a| pi_x.per_atom[a].is_finite())
            .collect(),
    );
    for entry in &cert.entries {
        let y = ExtendedGRV::finite(&pairing(&cert.x, &entry.density, sp)?);
        let r = eval_r(
            pi,
            &DualFunctionQuery {
                y,
                density: entry.density.clone(),
            },
            sp,
        )?;
        if r.per_atom != entry.r_value.per_atom {
            return Err(DualError::CertificateViolation {
                atom: 0,
                what: "stored R value does not match re-evaluation".into(),
            });
        }
        check_entry(entry, &pi_x, &constancy, &nonconstancy, &finite)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct UscResult {
    pub density: RandomVariable,
    pub value: ExtendedGRV,
}

/// Exact max form for maps with open level sets: returns a density whose R
/// value attains pi(x) atom by atom, verified through eval_r.
pub fn usc_max(
    pi: &QuasiMap,
    x: &RandomVariable,
    sp: &FiniteSpace,
) -> Result<UscResult, DualError> {
    let n_atoms = sp.n_atoms();
    let (constancy, nonconstancy) = pi.constancy_region(sp)?;
    let pi_x = pi.eval(x, sp);
    // Open set O = {pi < pi(x)} on nonconstant atoms; above the constant
    // elsewhere, which leaves those atoms unconstrained.
    let y = ExtendedGRV::new(
        (0..n_atoms)
            .map(|a| {
                if nonconstancy.contains(a) {
                    pi_x.per_atom[a].clone()
                } else {
                    ExtRat::PosInf
                }
            })
            .collect(),
    );
    let open_set = pi.level_set(&LevelSetSpec::open(y, n_atoms), sp)?;
    let mut density_values = vec![Rat::zero(); sp.n_outcomes()];
    for a in nonconstancy.atoms() {
        if !open_set.atom_feasible(sp, a)? {
            // pi(x) is the atom minimum: the zero density already attains.
            continue;
        }
        let density = match open_set.separate_atom(x, sp, a)? {
            AtomSeparationGrade::Strict { density, .. } => density,
            AtomSeparationGrade::WeakBoundary { density } => density,
            AtomSeparationGrade::NoSeparation => {
                return Err(DualError::AttainmentFailure { atom: a })
            }
        };
        for (i, &w) in sp.atom(a).iter().enumerate() {
            density_values[w] = density[i].clone();
        }
    }
    let density = RandomVariable::new(density_values);
    let yq = ExtendedGRV::finite(&pairing(x, &density, sp)?);
    let value = eval_r(
        pi,
        &DualFunctionQuery {
            y: yq,
            density: density.clone(),
        },
        sp,
    )?;
    for a in 0..n_atoms {
        if value.per_atom[a] != pi_x.per_atom[a] {
            let _ = &constancy;
            return Err(DualError::AttainmentFailure { atom: a });
        }
    }
    Ok(UscResult { density, value })
}

#[derive(Debug, Clone, Default)]
pub struct PropertyReport {
    pub instances: usize,
    pub monotone_checks: usize,
    pub scaling_checks: usize,
    pub selection_checks: usize,
    pub locality_checks: usize,
    pub lattice_checks: usize,
    pub quasi_affine_checks: usize,
    pub inf_consistency_checks: usize,
    pub inf_unbounded_skips: usize,
    pub failures: Vec<String>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn grv_random(rng: &mut ChaCha8Rng, n_atoms: usize) -> GMeasurableRV {
    GMeasurableRV::new(
        (0..n_atoms)
            .map(|_| crate::quasi::random_rat(rng, -6, 6, 3))
            .collect(),
    )
}

fn ext_from(g: &GMeasurableRV) -> ExtendedGRV {
    ExtendedGRV::finite(g)
}

/// Randomized exact verification of the structural properties of R:
/// monotonicity, positive scaling invariance, the selection realization of
/// downward-directedness, locality, the lattice identities at paired levels,
/// quasi-affinity along G-measurable segments, and grid-consistency of the
/// density-independent infimum.
pub fn property_suite_r(
    pi: &QuasiMap,
    sp: &FiniteSpace,
    seed: u64,
    instances: usize,
) -> Result<PropertyReport, DualError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_atoms = sp.n_atoms();
    let n = sp.n_outcomes();
    let mut rep = PropertyReport {
        instances,
        ..Default::default()
    };
    for _ in 0..instances {
        let z = crate::quasi::random_rv(&mut rng, n);
        let x = crate::quasi::random_rv(&mut rng, n);
        let y = grv_random(&mut rng, n_atoms);
        let bump = GMeasurableRV::new(
            (0..n_atoms)
                .map(|_| crate::quasi::random_rat(&mut rng, 0, 4, 2))
                .collect(),
        );
        let y_hi = y.add(&bump);

        // (i) monotone nondecreasing in Y.
        let r_lo = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&y),
                density: z.clone(),
            },
            sp,
        )?;
        let r_hi = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&y_hi),
                density: z.clone(),
            },
            sp,
        )?;
        rep.monotone_checks += 1;
        for a in 0..n_atoms {
            if r_lo.per_atom[a] > r_hi.per_atom[a] {
                rep.failures
                    .push(format!("monotonicity failed on atom {a}"));
            }
        }

        // (ii) positive G-measurable scaling invariance.
        let lam = GMeasurableRV::new(
            (0..n_atoms)
                .map(|_| {
                    let num: i64 = rng.gen_range(1..=6);
                    let den: i64 = rng.gen_range(1..=3);
                    Rat::new(num.into(), den.into())
                })
                .collect(),
        );
        let y_x = pairing(&x, &z, sp)?;
        let y_scaled = GMeasurableRV::new(
            y_x.per_atom
                .iter()
                .zip(&lam.per_atom)
                .map(|(v, l)| v * l)
                .collect(),
        );
        let z_scaled = z.scale_g(sp, &lam);
        let r_base = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&y_x),
                density: z.clone(),
            },
            sp,
        )?;
        let r_scaled = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&y_scaled),
                density: z_scaled,
            },
            sp,
        )?;
        rep.scaling_checks += 1;
        if r_base.per_atom != r_scaled.per_atom {
            rep.failures.push("scaling invariance failed".into());
        }

        // (iii) selection: a finite R value is realized by a feasible xi.
        let detailed = eval_r_detailed(
            pi,
            &DualFunctionQuery {
                y: ext_from(&y),
                density: z.clone(),
            },
            sp,
        )?;
        rep.selection_checks += 1;
        for (a, (value, minimizer)) in detailed.iter().enumerate() {
            if let (ExtRat::Finite(v), Some(xi)) = (value, minimizer) {
                let weights = sp.atom_weights(a);
                let z_a = z.restrict(sp, a);
                if atom_pairing(xi, &z_a, &weights) < y.per_atom[a] {
                    rep.failures
                        .push(format!("selection produced infeasible xi on atom {a}"));
                }
                let mut xi_full = vec![Rat::zero(); n];
                for (i, &w) in sp.atom(a).iter().enumerate() {
                    xi_full[w] = xi[i].clone();
                }
                let val = pi.eval_atom(&RandomVariable::new(xi_full), sp, a);
                if val != ExtRat::Finite(v.clone()) {
                    rep.failures
                        .push(format!("selection value mismatch on atom {a}"));
                }
            }
        }

        // (iv) locality: zeroing Y off A does not change R on A.
        let mask: Vec<bool> = (0..n_atoms).map(|_| rng.gen_bool(0.5)).collect();
        let a_set = GSet::new(mask);
        let y_masked = GMeasurableRV::new(
            (0..n_atoms)
                .map(|a| {
                    if a_set.contains(a) {
                        y.per_atom[a].clone()
                    } else {
                        Rat::zero()
                    }
                })
                .collect(),
        );
        let r_masked = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&y_masked),
                density: z.clone(),
            },
            sp,
        )?;
        rep.locality_checks += 1;
        for a in a_set.atoms() {
            if r_lo.per_atom[a] != r_masked.per_atom[a] {
                rep.failures.push(format!("locality failed on atom {a}"));
            }
        }

        // (v) lattice identities at paired levels; (vi) quasi-affinity.
        let x2 = crate::quasi::random_rv(&mut rng, n);
        let ya = pairing(&x, &z, sp)?;
        let yb = pairing(&x2, &z, sp)?;
        let meet = GMeasurableRV::new(
            ya.per_atom
                .iter()
                .zip(&yb.per_atom)
                .map(|(a, b)| a.clone().min(b.clone()))
                .collect(),
        );
        let join = GMeasurableRV::new(
            ya.per_atom
                .iter()
                .zip(&yb.per_atom)
                .map(|(a, b)| a.clone().max(b.clone()))
                .collect(),
        );
        let ra = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&ya),
                density: z.clone(),
            },
            sp,
        )?;
        let rb = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&yb),
                density: z.clone(),
            },
            sp,
        )?;
        let r_meet = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&meet),
                density: z.clone(),
            },
            sp,
        )?;
        let r_join = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&join),
                density: z.clone(),
            },
            sp,
        )?;
        rep.lattice_checks += 1;
        for a in 0..n_atoms {
            let lhs_meet = ra.per_atom[a].clone().min(rb.per_atom[a].clone());
            let lhs_join = ra.per_atom[a].clone().max(rb.per_atom[a].clone());
            if lhs_meet != r_meet.per_atom[a] || lhs_join != r_join.per_atom[a] {
                rep.failures.push(format!("lattice identity failed on atom {a}"));
            }
        }
        let lam01 = GMeasurableRV::new(
            (0..n_atoms)
                .map(|_| {
                    let den: i64 = rng.gen_range(1..=4);
                    let num: i64 = rng.gen_range(0..=den);
                    Rat::new(num.into(), den.into())
                })
                .collect(),
        );
        let y_mix = GMeasurableRV::new(
            (0..n_atoms)
                .map(|a| {
                    let l = &lam01.per_atom[a];
                    l * &ya.per_atom[a] + (Rat::one() - l) * &yb.per_atom[a]
                })
                .collect(),
        );
        let r_mix = eval_r(
            pi,
            &DualFunctionQuery {
                y: ext_from(&y_mix),
                density: z.clone(),
            },
            sp,
        )?;
        rep.quasi_affine_checks += 1;
        for a in 0..n_atoms {
            let lo = ra.per_atom[a].clone().min(rb.per_atom[a].clone());
            let hi = ra.per_atom[a].clone().max(rb.per_atom[a].clone());
            if r_mix.per_atom[a] < lo || r_mix.per_atom[a] > hi {
                rep.failures
                    .push(format!("quasi-affinity failed on atom {a}"));
            }
        }

        // (vii) the infimum of R over Y is density-independent: both random
        // densities reach the unconstrained infimum of pi exactly once the
        // grid includes the pairing of an unconstrained minimizer.
        let z2 = crate::quasi::random_rv(&mut rng, n);
        let unconstrained = eval_r_detailed(
            pi,
            &DualFunctionQuery {
                y: ExtendedGRV::constant(ExtRat::NegInf, n_atoms),
                density: RandomVariable::zero(n),
            },
            sp,
        )?;
        rep.inf_consistency_checks += 1;
        for (a, (base, minimizer)) in unconstrained.iter().enumerate() {
            match (base, minimizer) {
                (ExtRat::Finite(_), Some(xi)) => {
                    for zz in [&z, &z2] {
                        let weights = sp.atom_weights(a);
                        let z_a = zz.restrict(sp, a);
                        let y_star = atom_pairing(xi, &z_a, &weights);
                        let (r_at, _) =
                            atom_r(&pi.atoms[a], &ExtRat::Finite(y_star), &z_a, &weights)?;
                        if r_at != *base {
                            rep.failures.push(format!(
                                "infimum consistency failed on atom {a}"
                            ));
                        }
                    }
                }
                _ => rep.inf_unbounded_skips += 1,
            }
        }
    }
    Ok(rep)
}
