//! Property-based invariants over randomly generated spaces and variables.

use condcvx::dual::{eval_r, DualFunctionQuery};
use condcvx::quasi::{AtomMap, LevelSetSpec, QuasiMap};
use condcvx::rat::{ExtRat, Rat};
use condcvx::sets::{maximal_set, SetRelation};
use condcvx::{
    concat, cond_exp, cond_norm, pairing, ExtendedGRV, FiniteSpace, GMeasurableRV, GSet,
    NormExponent, RandomVariable,
};
use num_traits::Zero;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Scenario {
    sp: FiniteSpace,
    x: RandomVariable,
    y: RandomVariable,
    z: RandomVariable,
    lam: GMeasurableRV,
}

fn small_rat() -> impl Strategy<Value = Rat> {
    (-8i64..=8, 1i64..=4).prop_map(|(n, d)| Rat::new(n.into(), d.into()))
}

fn scenario() -> impl Strategy<Value = Scenario> {
    (2usize..=7)
        .prop_flat_map(|n| {
            (
                Just(n),
                prop::collection::vec(1i64..=5, n),
                prop::collection::vec(small_rat(), n),
                prop::collection::vec(small_rat(), n),
                prop::collection::vec(small_rat(), n),
                prop::collection::vec(prop::bool::ANY, n - 1),
                prop::collection::vec(small_rat(), n),
            )
        })
        .prop_map(|(n, weights, xs, ys, zs, cuts, lams)| {
            let total: i64 = weights.iter().sum();
            let probs = weights
                .iter()
                .map(|&w| Rat::new(w.into(), total.into()))
                .collect();
            let mut atoms = vec![vec![0usize]];
            for (w, cut) in cuts.iter().enumerate() {
                if *cut {
                    atoms.push(Vec::new());
                }
                atoms.last_mut().unwrap().push(w + 1);
            }
            let names = (0..n).map(|i| format!("w{i}")).collect();
            let sp = FiniteSpace::new(names, probs, atoms).unwrap();
            let lam = GMeasurableRV::new(lams[..sp.n_atoms()].to_vec());
            Scenario {
                sp,
                x: RandomVariable::new(xs),
                y: RandomVariable::new(ys),
                z: RandomVariable::new(zs),
                lam,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tower_property(sc in scenario()) {
        let ce = cond_exp(&sc.x, &sc.sp).unwrap();
        let outer: Rat = (0..sc.sp.n_atoms())
            .map(|a| sc.sp.atom_prob(a) * &ce.per_atom[a])
            .sum();
        let direct: Rat = (0..sc.sp.n_outcomes())
            .map(|w| sc.sp.prob(w) * &sc.x.values[w])
            .sum();
        prop_assert_eq!(outer, direct);
    }

    #[test]
    fn pairing_is_bilinear_and_local(sc in scenario()) {
        let sp = &sc.sp;
        let sum = pairing(&sc.x.add(&sc.y), &sc.z, sp).unwrap();
        let split = pairing(&sc.x, &sc.z, sp).unwrap().add(&pairing(&sc.y, &sc.z, sp).unwrap());
        prop_assert_eq!(&sum.per_atom, &split.per_atom);
        // G-measurable scalars pull out of the pairing.
        let base = pairing(&sc.x, &sc.z, sp).unwrap();
        let scaled = pairing(&sc.x.scale_g(sp, &sc.lam), &sc.z, sp).unwrap();
        for a in 0..sp.n_atoms() {
            prop_assert_eq!(&scaled.per_atom[a], &(&base.per_atom[a] * &sc.lam.per_atom[a]));
        }
        // Locality: the value on an atom only depends on the restrictions.
        for a in 0..sp.n_atoms() {
            let mut x2 = sc.x.clone();
            for w in 0..sp.n_outcomes() {
                if sp.atom_of(w) != a {
                    x2.values[w] = &sc.y.values[w] + &sc.z.values[w];
                }
            }
            let changed = pairing(&x2, &sc.z, sp).unwrap();
            prop_assert_eq!(&changed.per_atom[a], &base.per_atom[a]);
        }
    }

    #[test]
    fn concat_pastes_atomwise(sc in scenario()) {
        let sp = &sc.sp;
        let n_atoms = sp.n_atoms();
        let picked: Vec<usize> = (0..n_atoms).filter(|a| a % 2 == 0).collect();
        let set = GSet::from_atoms(&picked, n_atoms);
        let pasted = concat(&sc.x, &sc.y, &set, sp).unwrap();
        for w in 0..sp.n_outcomes() {
            let expect = if set.contains(sp.atom_of(w)) {
                &sc.x.values[w]
            } else {
                &sc.y.values[w]
            };
            prop_assert_eq!(&pasted.values[w], expect);
        }
        // Pairing splits the same way.
        let px = pairing(&sc.x, &sc.z, sp).unwrap();
        let py = pairing(&sc.y, &sc.z, sp).unwrap();
        let pp = pairing(&pasted, &sc.z, sp).unwrap();
        for a in 0..n_atoms {
            let expect = if set.contains(a) { &px.per_atom[a] } else { &py.per_atom[a] };
            prop_assert_eq!(&pp.per_atom[a], expect);
        }
    }

    #[test]
    fn norms_dominate_conditional_expectation(sc in scenario()) {
        let sp = &sc.sp;
        let n1 = cond_norm(&sc.x, NormExponent::One, sp).unwrap();
        let ninf = cond_norm(&sc.x, NormExponent::Infinity, sp).unwrap();
        let n2sq = cond_norm(&sc.x, NormExponent::TwoSquared, sp).unwrap();
        let ce = cond_exp(&sc.x, sp).unwrap();
        for a in 0..sp.n_atoms() {
            // |E[x|G]| <= E[|x||G] <= ess sup |x|, and E[x^2|G] <= (ess sup)^2.
            let abs_ce = condcvx::rat::abs(&ce.per_atom[a]);
            prop_assert!(abs_ce <= n1.per_atom[a].clone());
            prop_assert!(n1.per_atom[a] <= ninf.per_atom[a]);
            prop_assert!(n2sq.per_atom[a].clone() <= &ninf.per_atom[a] * &ninf.per_atom[a]);
        }
    }

    #[test]
    fn maximal_set_partition_is_maximal(
        family in prop::collection::vec(
            prop::collection::vec(small_rat(), 3), 1..4),
        y0 in prop::collection::vec(small_rat(), 3),
    ) {
        let family: Vec<ExtendedGRV> = family
            .into_iter()
            .map(|v| ExtendedGRV::new(v.into_iter().map(ExtRat::Finite).collect()))
            .collect();
        let y0 = ExtendedGRV::new(y0.into_iter().map(ExtRat::Finite).collect());
        for rel in [SetRelation::Ge, SetRelation::Le, SetRelation::Eq] {
            let m = maximal_set(&family, &y0, rel).unwrap();
            prop_assert!(m.a_m.intersect(&m.a_m_comp).is_empty());
            prop_assert!(m.a_m.union(&m.a_m_comp).is_full());
            // On A_M every family member satisfies the relation; elsewhere
            // the returned witness violates it, so A_M really is maximal.
            for a in 0..3 {
                if m.a_m.contains(a) {
                    prop_assert!(family
                        .iter()
                        .all(|f| rel.holds(&f.per_atom[a], &y0.per_atom[a])));
                } else {
                    prop_assert!(!rel.holds(&m.witness.per_atom[a], &y0.per_atom[a]));
                }
            }
        }
    }

    #[test]
    fn level_sets_are_monotone_in_level(sc in scenario(), y1 in small_rat(), dy in small_rat()) {
        let sp = &sc.sp;
        let n_atoms = sp.n_atoms();
        let pi = QuasiMap::new(
            (0..n_atoms)
                .map(|a| {
                    if a % 2 == 0 {
                        AtomMap::WorstCase
                    } else {
                        AtomMap::Linear {
                            density: sc.z.restrict(sp, a),
                            offset: Rat::zero(),
                        }
                    }
                })
                .collect(),
            sp,
        )
        .unwrap();
        let y2 = &y1 + condcvx::rat::abs(&dy);
        let lo = pi
            .level_set(&LevelSetSpec::closed(
                ExtendedGRV::constant(ExtRat::Finite(y1), n_atoms), n_atoms), sp)
            .unwrap();
        let hi = pi
            .level_set(&LevelSetSpec::closed(
                ExtendedGRV::constant(ExtRat::Finite(y2), n_atoms), n_atoms), sp)
            .unwrap();
        // Membership of the smaller set implies membership of the larger;
        // both agree with direct evaluation.
        for probe in [&sc.x, &sc.y] {
            let in_lo = lo.membership(probe, sp).unwrap();
            let in_hi = hi.membership(probe, sp).unwrap();
            prop_assert!(!in_lo || in_hi);
        }
    }

    #[test]
    fn weak_duality_for_dual_function(sc in scenario()) {
        let sp = &sc.sp;
        let pi = QuasiMap::new(
            (0..sp.n_atoms())
                .map(|a| {
                    if a % 2 == 0 {
                        AtomMap::Linear {
                            density: sc.y.restrict(sp, a),
                            offset: Rat::zero(),
                        }
                    } else {
                        AtomMap::WorstCase
                    }
                })
                .collect(),
            sp,
        )
        .unwrap();
        let q = DualFunctionQuery {
            y: ExtendedGRV::new(
                pairing(&sc.x, &sc.z, sp)
                    .unwrap()
                    .per_atom
                    .into_iter()
                    .map(ExtRat::Finite)
                    .collect(),
            ),
            density: sc.z.clone(),
        };
        let r = eval_r(&pi, &q, sp).unwrap();
        let direct = pi.eval(&sc.x, sp);
        // x is feasible for its own pairing level, so the infimum is below.
        for a in 0..sp.n_atoms() {
            prop_assert!(r.per_atom[a] <= direct.per_atom[a]);
        }
    }
}
