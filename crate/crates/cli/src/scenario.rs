//! Scenario file schema and validation.
//!
//! All rationals travel as exact "p/q" strings; extended values additionally
//! admit "inf" and "-inf". Atoms and outcomes are referenced by their
//! declared names everywhere below the space block.

use std::collections::BTreeMap;

use condcvx::quasi::{AtomMap, PLFunction, QuasiMap};
use condcvx::rat::{parse_rat, ExtRat, Rat};
use condcvx::sets::{AtomShape, ConditionalSet, HConstraint, SetRelation};
use condcvx::{ExtendedGRV, FiniteSpace, GMeasurableRV, RandomVariable};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Validation(format!("{field}: {msg}"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub space: SpaceDesc,
    #[serde(default)]
    pub points: BTreeMap<String, Vec<String>>,
    /// Named extended G-measurable values, keyed by atom name.
    #[serde(default)]
    pub levels: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    pub sets: BTreeMap<String, SetDesc>,
    #[serde(default)]
    pub maps: BTreeMap<String, MapDesc>,
    #[serde(default)]
    pub tasks: Vec<TaskDesc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDesc {
    pub outcomes: Vec<String>,
    pub probs: Vec<String>,
    pub atoms: Vec<AtomDesc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDesc {
    pub name: String,
    pub outcomes: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetDesc {
    Vrep {
        atoms: BTreeMap<String, ShapeDesc>,
    },
    Hrep {
        constraints: Vec<ConstraintDesc>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeDesc {
    Full,
    Polyhedron {
        vertices: Vec<Vec<String>>,
        #[serde(default)]
        rays: Vec<Vec<String>>,
    },
    Finite {
        points: Vec<Vec<String>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDesc {
    /// Coordinates over the full outcome list, in declaration order.
    pub density: Vec<String>,
    /// Level per atom name; omitted atoms default to "inf" (vacuous).
    pub level: BTreeMap<String, String>,
    #[serde(default)]
    pub strict: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDesc {
    pub atoms: BTreeMap<String, AtomMapDesc>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AtomMapDesc {
    Linear {
        density: Vec<String>,
        #[serde(default)]
        offset: Option<String>,
    },
    WorstCase,
    ConvexPl {
        pieces: Vec<PieceDesc>,
    },
    Transformed {
        g: PlDesc,
        inner: Vec<PieceDesc>,
    },
    Infinite,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDesc {
    pub gradient: Vec<String>,
    #[serde(default)]
    pub offset: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlDesc {
    /// (t, g(t)) pairs in strictly increasing t order.
    pub breakpoints: Vec<(String, String)>,
    pub left_slope: String,
    pub right_slope: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "command", deny_unknown_fields)]
pub enum TaskDesc {
    #[serde(rename = "check-separation")]
    CheckSeparation { set: String, point: String },
    #[serde(rename = "polar")]
    Polar {
        set: String,
        #[serde(default)]
        cone: bool,
    },
    #[serde(rename = "bipolar-check")]
    BipolarCheck {
        set: String,
        #[serde(default)]
        cone: bool,
        #[serde(default)]
        nonmembers: Option<usize>,
    },
    #[serde(rename = "trivial-region")]
    TrivialRegion { set: String },
    #[serde(rename = "outside-region")]
    OutsideRegion { set: String, point: String },
    #[serde(rename = "maximal-set")]
    MaximalSet {
        family: Vec<String>,
        y0: String,
        relation: String,
    },
    #[serde(rename = "check-qco")]
    CheckQco {
        map: String,
        #[serde(default)]
        trials: Option<usize>,
    },
    #[serde(rename = "check-eqc")]
    CheckEqc {
        map: String,
        #[serde(default)]
        trials: Option<usize>,
    },
    #[serde(rename = "eval-R")]
    EvalR {
        map: String,
        level: String,
        density: String,
    },
    #[serde(rename = "dual-repr")]
    DualRepr {
        map: String,
        point: String,
        #[serde(default)]
        eps: Option<Vec<String>>,
    },
    #[serde(rename = "usc-max")]
    UscMax { map: String, point: String },
    #[serde(rename = "properties-R")]
    PropertiesR {
        map: String,
        #[serde(default)]
        instances: Option<usize>,
    },
    #[serde(rename = "norms")]
    Norms { point: String },
}

impl TaskDesc {
    pub fn command(&self) -> &'static str {
        match self {
            TaskDesc::CheckSeparation { .. } => "check-separation",
            TaskDesc::Polar { .. } => "polar",
            TaskDesc::BipolarCheck { .. } => "bipolar-check",
            TaskDesc::TrivialRegion { .. } => "trivial-region",
            TaskDesc::OutsideRegion { .. } => "outside-region",
            TaskDesc::MaximalSet { .. } => "maximal-set",
            TaskDesc::CheckQco { .. } => "check-qco",
            TaskDesc::CheckEqc { .. } => "check-eqc",
            TaskDesc::EvalR { .. } => "eval-R",
            TaskDesc::DualRepr { .. } => "dual-repr",
            TaskDesc::UscMax { .. } => "usc-max",
            TaskDesc::PropertiesR { .. } => "properties-R",
            TaskDesc::Norms { .. } => "norms",
        }
    }
}

/// Fully resolved scenario: names mapped to indices, strings to rationals.
pub struct Scenario {
    pub sp: FiniteSpace,
    pub atom_names: Vec<String>,
    pub points: BTreeMap<String, RandomVariable>,
    pub levels: BTreeMap<String, ExtendedGRV>,
    pub sets: BTreeMap<String, ConditionalSet>,
    pub maps: BTreeMap<String, QuasiMap>,
    pub tasks: Vec<TaskDesc>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        resolve(file)
    }

    pub fn point(&self, name: &str) -> Result<&RandomVariable, ScenarioError> {
        self.points
            .get(name)
            .ok_or_else(|| invalid("tasks", format!("unknown point {name:?}")))
    }

    pub fn level(&self, name: &str) -> Result<&ExtendedGRV, ScenarioError> {
        self.levels
            .get(name)
            .ok_or_else(|| invalid("tasks", format!("unknown level {name:?}")))
    }

    pub fn set(&self, name: &str) -> Result<&ConditionalSet, ScenarioError> {
        self.sets
            .get(name)
            .ok_or_else(|| invalid("tasks", format!("unknown set {name:?}")))
    }

    pub fn map(&self, name: &str) -> Result<&QuasiMap, ScenarioError> {
        self.maps
            .get(name)
            .ok_or_else(|| invalid("tasks", format!("unknown map {name:?}")))
    }

    pub fn relation(&self, s: &str) -> Result<SetRelation, ScenarioError> {
        SetRelation::parse(s)
            .ok_or_else(|| invalid("tasks", format!("unknown relation {s:?}")))
    }
}

pub fn parse_rat_field(field: &str, s: &str) -> Result<Rat, ScenarioError> {
    parse_rat(s).map_err(|e| invalid(field, e))
}

fn parse_ext_field(field: &str, s: &str) -> Result<ExtRat, ScenarioError> {
    ExtRat::parse_ext(s).map_err(|e| invalid(field, e))
}

fn parse_vec(field: &str, v: &[String], dim: usize) -> Result<Vec<Rat>, ScenarioError> {
    if v.len() != dim {
        return Err(invalid(
            field,
            format!("expected {dim} coordinates, found {}", v.len()),
        ));
    }
    v.iter().map(|s| parse_rat_field(field, s)).collect()
}

fn resolve(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let n = file.space.outcomes.len();
    let mut outcome_index = BTreeMap::new();
    for (i, name) in file.space.outcomes.iter().enumerate() {
        if outcome_index.insert(name.clone(), i).is_some() {
            return Err(invalid("space.outcomes", format!("duplicate name {name:?}")));
        }
    }
    let probs: Vec<Rat> = file
        .space
        .probs
        .iter()
        .map(|s| parse_rat_field("space.probs", s))
        .collect::<Result<_, _>>()?;
    let mut atoms = Vec::new();
    let mut atom_names = Vec::new();
    for atom in &file.space.atoms {
        if atom_names.contains(&atom.name) {
            return Err(invalid(
                "space.atoms",
                format!("duplicate atom name {:?}", atom.name),
            ));
        }
        let idxs = atom
            .outcomes
            .iter()
            .map(|o| {
                outcome_index.get(o).copied().ok_or_else(|| {
                    invalid("space.atoms", format!("unknown outcome {o:?} in atom {:?}", atom.name))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        atoms.push(idxs);
        atom_names.push(atom.name.clone());
    }
    let sp = FiniteSpace::new(file.space.outcomes.clone(), probs, atoms)
        .map_err(|e| invalid("space", e))?;
    let n_atoms = sp.n_atoms();
    let atom_index: BTreeMap<&str, usize> = atom_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let mut points = BTreeMap::new();
    for (name, coords) in &file.points {
        let field = format!("points.{name}");
        points.insert(
            name.clone(),
            RandomVariable::new(parse_vec(&field, coords, n)?),
        );
    }

    let mut levels = BTreeMap::new();
    for (name, by_atom) in &file.levels {
        let field = format!("levels.{name}");
        let mut per_atom = vec![ExtRat::PosInf; n_atoms];
        for (atom, s) in by_atom {
            let a = *atom_index
                .get(atom.as_str())
                .ok_or_else(|| invalid(&field, format!("unknown atom {atom:?}")))?;
            per_atom[a] = parse_ext_field(&field, s)?;
        }
        levels.insert(name.clone(), ExtendedGRV::new(per_atom));
    }

    let mut sets = BTreeMap::new();
    for (name, desc) in &file.sets {
        let field = format!("sets.{name}");
        sets.insert(name.clone(), resolve_set(&field, desc, &sp, &atom_index)?);
    }

    let mut maps = BTreeMap::new();
    for (name, desc) in &file.maps {
        let field = format!("maps.{name}");
        maps.insert(name.clone(), resolve_map(&field, desc, &sp, &atom_index)?);
    }

    let scenario = Scenario {
        sp,
        atom_names,
        points,
        levels,
        sets,
        maps,
        tasks: file.tasks,
    };
    // Resolve every task reference up front so a bad name fails before any
    // work starts.
    for task in &scenario.tasks {
        check_task_names(&scenario, task)?;
    }
    Ok(scenario)
}

fn check_task_names(sc: &Scenario, task: &TaskDesc) -> Result<(), ScenarioError> {
    match task {
        TaskDesc::CheckSeparation { set, point }
        | TaskDesc::OutsideRegion { set, point } => {
            sc.set(set)?;
            sc.point(point)?;
        }
        TaskDesc::Polar { set, .. }
        | TaskDesc::BipolarCheck { set, .. }
        | TaskDesc::TrivialRegion { set } => {
            sc.set(set)?;
        }
        TaskDesc::MaximalSet { family, y0, relation } => {
            for f in family {
                sc.level(f)?;
            }
            sc.level(y0)?;
            sc.relation(relation)?;
        }
        TaskDesc::CheckQco { map, .. }
        | TaskDesc::CheckEqc { map, .. }
        | TaskDesc::PropertiesR { map, .. } => {
            sc.map(map)?;
        }
        TaskDesc::EvalR { map, level, density } => {
            sc.map(map)?;
            sc.level(level)?;
            sc.point(density)?;
        }
        TaskDesc::DualRepr { map, point, eps } => {
            sc.map(map)?;
            sc.point(point)?;
            if let Some(eps) = eps {
                for e in eps {
                    parse_rat_field("tasks.eps", e)?;
                }
            }
        }
        TaskDesc::UscMax { map, point } => {
            sc.map(map)?;
            sc.point(point)?;
        }
        TaskDesc::Norms { point } => {
            sc.point(point)?;
        }
    }
    Ok(())
}

fn resolve_set(
    field: &str,
    desc: &SetDesc,
    sp: &FiniteSpace,
    atom_index: &BTreeMap<&str, usize>,
) -> Result<ConditionalSet, ScenarioError> {
    match desc {
        SetDesc::Vrep { atoms } => {
            let mut shapes: Vec<Option<AtomShape>> = vec![None; sp.n_atoms()];
            for (atom, shape) in atoms {
                let a = *atom_index
                    .get(atom.as_str())
                    .ok_or_else(|| invalid(field, format!("unknown atom {atom:?}")))?;
                let d = sp.atom(a).len();
                let f = format!("{field}.atoms.{atom}");
                shapes[a] = Some(match shape {
                    ShapeDesc::Full => AtomShape::Full,
                    ShapeDesc::Polyhedron { vertices, rays } => AtomShape::Polyhedron {
                        vertices: vertices
                            .iter()
                            .map(|v| parse_vec(&f, v, d))
                            .collect::<Result<_, _>>()?,
                        rays: rays
                            .iter()
                            .map(|r| parse_vec(&f, r, d))
                            .collect::<Result<_, _>>()?,
                    },
                    ShapeDesc::Finite { points } => AtomShape::Finite {
                        points: points
                            .iter()
                            .map(|p| parse_vec(&f, p, d))
                            .collect::<Result<_, _>>()?,
                    },
                });
            }
            let atoms = shapes
                .into_iter()
                .enumerate()
                .map(|(a, s)| {
                    s.ok_or_else(|| {
                        invalid(field, format!("missing shape for atom index {a}"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ConditionalSet::VRep { atoms })
        }
        SetDesc::Hrep { constraints } => {
            let rows = constraints
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let f = format!("{field}.constraints[{i}]");
                    let density = RandomVariable::new(parse_vec(
                        &f,
                        &c.density,
                        sp.n_outcomes(),
                    )?);
                    let mut per_atom = vec![ExtRat::PosInf; sp.n_atoms()];
                    for (atom, s) in &c.level {
                        let a = *atom_index
                            .get(atom.as_str())
                            .ok_or_else(|| invalid(&f, format!("unknown atom {atom:?}")))?;
                        per_atom[a] = parse_ext_field(&f, s)?;
                    }
                    Ok(HConstraint {
                        density,
                        level: ExtendedGRV::new(per_atom),
                        strict: c.strict,
                    })
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            Ok(ConditionalSet::HRep { constraints: rows })
        }
    }
}

fn parse_pieces(
    field: &str,
    pieces: &[PieceDesc],
    d: usize,
) -> Result<Vec<(Vec<Rat>, Rat)>, ScenarioError> {
    pieces
        .iter()
        .map(|p| {
            let grad = parse_vec(field, &p.gradient, d)?;
            let off = match &p.offset {
                Some(s) => parse_rat_field(field, s)?,
                None => Rat::from_integer(0.into()),
            };
            Ok((grad, off))
        })
        .collect()
}

fn resolve_map(
    field: &str,
    desc: &MapDesc,
    sp: &FiniteSpace,
    atom_index: &BTreeMap<&str, usize>,
) -> Result<QuasiMap, ScenarioError> {
    let mut slots: Vec<Option<AtomMap>> = vec![None; sp.n_atoms()];
    for (atom, am) in &desc.atoms {
        let a = *atom_index
            .get(atom.as_str())
            .ok_or_else(|| invalid(field, format!("unknown atom {atom:?}")))?;
        let d = sp.atom(a).len();
        let f = format!("{field}.atoms.{atom}");
        slots[a] = Some(match am {
            AtomMapDesc::Linear { density, offset } => AtomMap::Linear {
                density: parse_vec(&f, density, d)?,
                offset: match offset {
                    Some(s) => parse_rat_field(&f, s)?,
                    None => Rat::from_integer(0.into()),
                },
            },
            AtomMapDesc::WorstCase => AtomMap::WorstCase,
            AtomMapDesc::ConvexPl { pieces } => AtomMap::ConvexPL {
                pieces: parse_pieces(&f, pieces, d)?,
            },
            AtomMapDesc::Transformed { g, inner } => {
                let breakpoints = g
                    .breakpoints
                    .iter()
                    .map(|(t, v)| {
                        Ok((parse_rat_field(&f, t)?, parse_rat_field(&f, v)?))
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                AtomMap::Transformed {
                    g: PLFunction {
                        breakpoints,
                        left_slope: parse_rat_field(&f, &g.left_slope)?,
                        right_slope: parse_rat_field(&f, &g.right_slope)?,
                    },
                    inner: parse_pieces(&f, inner, d)?,
                }
            }
            AtomMapDesc::Infinite => AtomMap::InfiniteAtom,
        });
    }
    let atoms = slots
        .into_iter()
        .enumerate()
        .map(|(a, s)| {
            s.ok_or_else(|| invalid(field, format!("missing descriptor for atom index {a}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    QuasiMap::new(atoms, sp).map_err(|e| invalid(field, e))
}

/// Comma-separated epsilon schedule, each entry a positive rational.
pub fn parse_eps_list(s: &str) -> Result<Vec<Rat>, ScenarioError> {
    s.split(',')
        .map(|part| parse_rat_field("eps", part.trim()))
        .collect()
}

pub fn schedule_from(eps: &[Rat], n_atoms: usize) -> Vec<GMeasurableRV> {
    eps.iter()
        .map(|e| GMeasurableRV::constant(e.clone(), n_atoms))
        .collect()
}
