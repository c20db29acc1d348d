//! Finite probability space with a coarse atom partition, G-measurable data,
//! the conditional-expectation pairing and conditional p-norms.

use crate::rat::{ExtRat, Rat};
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("probabilities must be strictly positive (outcome {0})")]
    NonPositiveProb(usize),
    #[error("probabilities sum to {0}, expected 1")]
    ProbSum(String),
    #[error("atoms must partition the outcome set")]
    BadPartition,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported norm exponent")]
    UnsupportedNorm,
}

/// Sample space, reference probability and the G-atom partition.
/// The fine sigma-algebra is the discrete one; G-measurable objects are
/// constant on each atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpace {
    outcomes: Vec<String>,
    probs: Vec<Rat>,
    atoms: Vec<Vec<usize>>,
    atom_probs: Vec<Rat>,
    atom_of: Vec<usize>,
}

impl FiniteSpace {
    pub fn new(
        outcomes: Vec<String>,
        probs: Vec<Rat>,
        atoms: Vec<Vec<usize>>,
    ) -> Result<Self, SpaceError> {
        let n = outcomes.len();
        if probs.len() != n {
            return Err(SpaceError::DimensionMismatch {
                expected: n,
                got: probs.len(),
            });
        }
        for (i, p) in probs.iter().enumerate() {
            if *p <= Rat::zero() {
                return Err(SpaceError::NonPositiveProb(i));
            }
        }
        let total: Rat = probs.iter().sum();
        if !total.is_one() {
            return Err(SpaceError::ProbSum(crate::rat::format_rat(&total)));
        }
        let mut seen = vec![false; n];
        for atom in &atoms {
            if atom.is_empty() {
                return Err(SpaceError::BadPartition);
            }
            for &w in atom {
                if w >= n || seen[w] {
                    return Err(SpaceError::BadPartition);
                }
                seen[w] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(SpaceError::BadPartition);
        }
        let atom_probs: Vec<Rat> = atoms
            .iter()
            .map(|a| a.iter().map(|&w| probs[w].clone()).sum())
            .collect();
        let mut atom_of = vec![0usize; n];
        for (ai, atom) in atoms.iter().enumerate() {
            for &w in atom {
                atom_of[w] = ai;
            }
        }
        Ok(FiniteSpace {
            outcomes,
            probs,
            atoms,
            atom_probs,
            atom_of,
        })
    }

    /// Uniform probabilities, atoms given as index lists.
    pub fn uniform(n: usize, atoms: Vec<Vec<usize>>) -> Result<Self, SpaceError> {
        let outcomes = (0..n).map(|i| format!("w{}", i + 1)).collect();
        let p = Rat::new(1.into(), (n as i64).into());
        FiniteSpace::new(outcomes, vec![p; n], atoms)
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn probs(&self) -> &[Rat] {
        &self.probs
    }

    pub fn prob(&self, outcome: usize) -> &Rat {
        &self.probs[outcome]
    }

    pub fn atoms(&self) -> &[Vec<usize>] {
        &self.atoms
    }

    pub fn atom(&self, a: usize) -> &[usize] {
        &self.atoms[a]
    }

    pub fn atom_prob(&self, a: usize) -> &Rat {
        &self.atom_probs[a]
    }

    pub fn atom_of(&self, outcome: usize) -> usize {
        self.atom_of[outcome]
    }

    /// Pairing weight of an outcome inside its atom: p_w / P(a).
    pub fn atom_weight(&self, a: usize, outcome: usize) -> Rat {
        &self.probs[outcome] / &self.atom_probs[a]
    }

    /// Per-outcome pairing weights of atom `a`, in atom coordinate order.
    pub fn atom_weights(&self, a: usize) -> Vec<Rat> {
        self.atoms[a]
            .iter()
            .map(|&w| self.atom_weight(a, w))
            .collect()
    }

    fn check_len(&self, len: usize) -> Result<(), SpaceError> {
        if len != self.n_outcomes() {
            Err(SpaceError::DimensionMismatch {
                expected: self.n_outcomes(),
                got: len,
            })
        } else {
            Ok(())
        }
    }
}

/// Exact-rational vector over outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomVariable {
    pub values: Vec<Rat>,
}

impl RandomVariable {
    pub fn new(values: Vec<Rat>) -> Self {
        RandomVariable { values }
    }

    pub fn zero(n: usize) -> Self {
        RandomVariable {
            values: vec![Rat::zero(); n],
        }
    }

    pub fn from_i64(values: &[i64]) -> Self {
        RandomVariable {
            values: values.iter().map(|&v| crate::rat::rat(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Restriction to an atom, in atom coordinate order.
    pub fn restrict(&self, sp: &FiniteSpace, a: usize) -> Vec<Rat> {
        sp.atom(a).iter().map(|&w| self.values[w].clone()).collect()
    }

    pub fn add(&self, other: &RandomVariable) -> RandomVariable {
        RandomVariable::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &RandomVariable) -> RandomVariable {
        RandomVariable::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, c: &Rat) -> RandomVariable {
        RandomVariable::new(self.values.iter().map(|v| v * c).collect())
    }

    /// Pointwise product with a G-measurable coefficient.
    pub fn scale_g(&self, sp: &FiniteSpace, g: &GMeasurableRV) -> RandomVariable {
        RandomVariable::new(
            self.values
                .iter()
                .enumerate()
                .map(|(w, v)| v * &g.per_atom[sp.atom_of(w)])
                .collect(),
        )
    }
}

/// Constant-per-atom random variable (an element of L0(G)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GMeasurableRV {
    pub per_atom: Vec<Rat>,
}

impl GMeasurableRV {
    pub fn new(per_atom: Vec<Rat>) -> Self {
        GMeasurableRV { per_atom }
    }

    pub fn constant(c: Rat, n_atoms: usize) -> Self {
        GMeasurableRV {
            per_atom: vec![c; n_atoms],
        }
    }

    pub fn expand(&self, sp: &FiniteSpace) -> RandomVariable {
        RandomVariable::new(
            (0..sp.n_outcomes())
                .map(|w| self.per_atom[sp.atom_of(w)].clone())
                .collect(),
        )
    }

    pub fn add(&self, other: &GMeasurableRV) -> GMeasurableRV {
        GMeasurableRV::new(
            self.per_atom
                .iter()
                .zip(&other.per_atom)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Maskwise paste: self on atoms of `mask`, other elsewhere.
    pub fn paste(&self, other: &GMeasurableRV, mask: &GSet) -> GMeasurableRV {
        GMeasurableRV::new(
            self.per_atom
                .iter()
                .zip(&other.per_atom)
                .enumerate()
                .map(|(a, (x, y))| if mask.contains(a) { x.clone() } else { y.clone() })
                .collect(),
        )
    }
}

/// Per-atom rational-or-infinite G-measurable data (the extended L0(G)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedGRV {
    pub per_atom: Vec<ExtRat>,
}

impl ExtendedGRV {
    pub fn new(per_atom: Vec<ExtRat>) -> Self {
        ExtendedGRV { per_atom }
    }

    pub fn finite(g: &GMeasurableRV) -> Self {
        ExtendedGRV {
            per_atom: g.per_atom.iter().cloned().map(ExtRat::Finite).collect(),
        }
    }

    pub fn constant(v: ExtRat, n_atoms: usize) -> Self {
        ExtendedGRV {
            per_atom: vec![v; n_atoms],
        }
    }

    pub fn all_finite(&self) -> Option<GMeasurableRV> {
        let mut out = Vec::with_capacity(self.per_atom.len());
        for v in &self.per_atom {
            out.push(v.as_finite()?.clone());
        }
        Some(GMeasurableRV::new(out))
    }
}

/// G-measurable event as an atom mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GSet {
    pub atom_mask: Vec<bool>,
}

impl GSet {
    pub fn new(atom_mask: Vec<bool>) -> Self {
        GSet { atom_mask }
    }

    pub fn empty(n_atoms: usize) -> Self {
        GSet {
            atom_mask: vec![false; n_atoms],
        }
    }

    pub fn full(n_atoms: usize) -> Self {
        GSet {
            atom_mask: vec![true; n_atoms],
        }
    }

    pub fn from_atoms(atoms: &[usize], n_atoms: usize) -> Self {
        let mut mask = vec![false; n_atoms];
        for &a in atoms {
            mask[a] = true;
        }
        GSet { atom_mask: mask }
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.atom_mask[atom]
    }

    pub fn is_empty(&self) -> bool {
        self.atom_mask.iter().all(|&b| !b)
    }

    pub fn is_full(&self) -> bool {
        self.atom_mask.iter().all(|&b| b)
    }

    pub fn union(&self, other: &GSet) -> GSet {
        GSet::new(
            self.atom_mask
                .iter()
                .zip(&other.atom_mask)
                .map(|(&a, &b)| a || b)
                .collect(),
        )
    }

    pub fn intersect(&self, other: &GSet) -> GSet {
        GSet::new(
            self.atom_mask
                .iter()
                .zip(&other.atom_mask)
                .map(|(&a, &b)| a && b)
                .collect(),
        )
    }

    pub fn complement(&self) -> GSet {
        GSet::new(self.atom_mask.iter().map(|&a| !a).collect())
    }

    pub fn atoms(&self) -> Vec<usize> {
        self.atom_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| if b { Some(i) } else { None })
            .collect()
    }

    pub fn prob(&self, sp: &FiniteSpace) -> Rat {
        self.atoms()
            .iter()
            .map(|&a| sp.atom_prob(a).clone())
            .sum()
    }
}

/// E[x|G], exact per atom.
pub fn cond_exp(x: &RandomVariable, sp: &FiniteSpace) -> Result<GMeasurableRV, SpaceError> {
    sp.check_len(x.len())?;
    let per_atom = (0..sp.n_atoms())
        .map(|a| {
            let s: Rat = sp
                .atom(a)
                .iter()
                .map(|&w| sp.prob(w) * &x.values[w])
                .sum();
            s / sp.atom_prob(a)
        })
        .collect();
    Ok(GMeasurableRV::new(per_atom))
}

/// The dual-pair pairing <x,z> = E[x z | G].
pub fn pairing(
    x: &RandomVariable,
    z: &RandomVariable,
    sp: &FiniteSpace,
) -> Result<GMeasurableRV, SpaceError> {
    sp.check_len(x.len())?;
    sp.check_len(z.len())?;
    let prod = RandomVariable::new(
        x.values
            .iter()
            .zip(&z.values)
            .map(|(a, b)| a * b)
            .collect(),
    );
    cond_exp(&prod, sp)
}

/// Pairing restricted to one atom: sum over the atom of p_w x_w z_w / P(a).
pub fn atom_pairing(x_a: &[Rat], z_a: &[Rat], weights: &[Rat]) -> Rat {
    x_a.iter()
        .zip(z_a)
        .zip(weights)
        .map(|((x, z), w)| x * z * w)
        .sum()
}

/// x on atoms of A, y elsewhere (the formal sum x 1_A + y 1_{A^c}).
pub fn concat(
    x: &RandomVariable,
    y: &RandomVariable,
    set: &GSet,
    sp: &FiniteSpace,
) -> Result<RandomVariable, SpaceError> {
    sp.check_len(x.len())?;
    sp.check_len(y.len())?;
    Ok(RandomVariable::new(
        (0..sp.n_outcomes())
            .map(|w| {
                if set.contains(sp.atom_of(w)) {
                    x.values[w].clone()
                } else {
                    y.values[w].clone()
                }
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormExponent {
    One,
    /// p = 2; the SQUARED conditional norm is returned so comparisons stay
    /// rational.
    TwoSquared,
    Infinity,
}

pub fn cond_norm(
    x: &RandomVariable,
    p: NormExponent,
    sp: &FiniteSpace,
) -> Result<GMeasurableRV, SpaceError> {
    sp.check_len(x.len())?;
    match p {
        NormExponent::One => {
            let abs = RandomVariable::new(x.values.iter().map(crate::rat::abs).collect());
            cond_exp(&abs, sp)
        }
        NormExponent::TwoSquared => {
            let sq = RandomVariable::new(x.values.iter().map(|v| v * v).collect());
            cond_exp(&sq, sp)
        }
        NormExponent::Infinity => {
            let per_atom = (0..sp.n_atoms())
                .map(|a| {
                    sp.atom(a)
                        .iter()
                        .map(|&w| crate::rat::abs(&x.values[w]))
                        .max()
                        .expect("atoms are nonempty")
                })
                .collect();
            Ok(GMeasurableRV::new(per_atom))
        }
    }
}
