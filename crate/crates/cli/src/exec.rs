//! Task execution and report assembly.

use condcvx::dual::{
    eval_r, property_suite_r, represent, usc_max, verify_certificate, DualCertificate,
    DualFunctionQuery,
};
use condcvx::polar::{bipolar_check, polar};
use condcvx::quasi::{check_eqc, check_qco};
use condcvx::rat::{format_rat, ExtRat, Rat};
use condcvx::sets::{maximal_set, AtomSeparationGrade, ConditionalSet};
use condcvx::space::atom_pairing;
use condcvx::{cond_norm, pairing, GSet, NormExponent, RandomVariable};
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::scenario::{parse_eps_list, schedule_from, Scenario, ScenarioError, TaskDesc};

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub seed: u64,
    pub parallel: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub tasks: Vec<TaskReport>,
    pub all_passed: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TaskReport {
    pub command: String,
    pub verdict: String,
    pub details: Value,
}

impl TaskReport {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }
}

pub fn run(sc: &Scenario, opts: &RunOptions) -> Result<Report, ScenarioError> {
    let exec = |(idx, task): (usize, &TaskDesc)| -> Result<TaskReport, ScenarioError> {
        // Per-task seeds keep reports independent of execution order.
        let seed = opts.seed.wrapping_add(idx as u64);
        run_task(sc, task, seed)
    };
    let tasks: Vec<TaskReport> = if opts.parallel {
        sc.tasks
            .par_iter()
            .enumerate()
            .map(exec)
            .collect::<Result<_, _>>()?
    } else {
        sc.tasks
            .iter()
            .enumerate()
            .map(exec)
            .collect::<Result<_, _>>()?
    };
    let all_passed = tasks.iter().all(|t| t.passed());
    Ok(Report {
        seed: opts.seed,
        tasks,
        all_passed,
    })
}

fn atom_list(sc: &Scenario, set: &GSet) -> Value {
    Value::Array(
        set.atoms()
            .iter()
            .map(|&a| Value::String(sc.atom_names[a].clone()))
            .collect(),
    )
}

fn rv_json(sc: &Scenario, x: &RandomVariable) -> Value {
    let mut obj = serde_json::Map::new();
    for (w, v) in x.values.iter().enumerate() {
        obj.insert(sc.sp.outcomes()[w].clone(), json!(format_rat(v)));
    }
    Value::Object(obj)
}

fn atom_coords_json(sc: &Scenario, a: usize, coords: &[Rat]) -> Value {
    let mut obj = serde_json::Map::new();
    for (i, &w) in sc.sp.atom(a).iter().enumerate() {
        obj.insert(sc.sp.outcomes()[w].clone(), json!(format_rat(&coords[i])));
    }
    Value::Object(obj)
}

fn ext_grv_json(sc: &Scenario, per_atom: &[ExtRat]) -> Value {
    let mut obj = serde_json::Map::new();
    for (a, v) in per_atom.iter().enumerate() {
        obj.insert(sc.atom_names[a].clone(), json!(v.to_string_ext()));
    }
    Value::Object(obj)
}

fn grv_json(sc: &Scenario, per_atom: &[Rat]) -> Value {
    let mut obj = serde_json::Map::new();
    for (a, v) in per_atom.iter().enumerate() {
        obj.insert(sc.atom_names[a].clone(), json!(format_rat(v)));
    }
    Value::Object(obj)
}

fn report(command: &str, verdict: &str, details: Value) -> TaskReport {
    TaskReport {
        command: command.to_string(),
        verdict: verdict.to_string(),
        details,
    }
}

fn internal(command: &str, err: impl std::fmt::Display) -> TaskReport {
    report(command, "fail", json!({ "error": err.to_string() }))
}

fn run_task(sc: &Scenario, task: &TaskDesc, seed: u64) -> Result<TaskReport, ScenarioError> {
    let cmd = task.command();
    let sp = &sc.sp;
    let rep = match task {
        TaskDesc::CheckSeparation { set, point } => {
            let c = sc.set(set)?;
            let x = sc.point(point)?;
            match check_separation(sc, c, x) {
                Ok((verdict, details)) => report(cmd, verdict, details),
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::Polar { set, cone } => {
            let c = sc.set(set)?;
            match polar(c, *cone, sp) {
                Ok(p) => {
                    let mut atoms = serde_json::Map::new();
                    for (a, at) in p.atoms.iter().enumerate() {
                        atoms.insert(
                            sc.atom_names[a].clone(),
                            json!({
                                "vertices": at.vertices.iter()
                                    .map(|v| atom_coords_json(sc, a, v)).collect::<Vec<_>>(),
                                "rays": at.rays.iter()
                                    .map(|r| atom_coords_json(sc, a, r)).collect::<Vec<_>>(),
                            }),
                        );
                    }
                    report(
                        cmd,
                        "pass",
                        json!({
                            "cone": p.cone,
                            "base_d": atom_list(sc, &p.base_d),
                            "atoms": Value::Object(atoms),
                        }),
                    )
                }
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::BipolarCheck { set, cone, nonmembers } => {
            let c = sc.set(set)?;
            let target = nonmembers.unwrap_or(100);
            match bipolar_check(c, *cone, sp, seed, target) {
                Ok(rep) => {
                    let verdict = if rep.passed() { "pass" } else { "counterexample" };
                    let discrepancies: Vec<Value> = rep
                        .discrepancies
                        .iter()
                        .map(|d| {
                            json!({
                                "point": rv_json(sc, &d.point),
                                "in_primal": d.in_primal,
                                "in_bipolar": d.in_bipolar,
                            })
                        })
                        .collect();
                    report(
                        cmd,
                        verdict,
                        json!({
                            "member_probes": rep.member_probes,
                            "nonmember_probes": rep.nonmember_probes,
                            "discrepancies": discrepancies,
                        }),
                    )
                }
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::TrivialRegion { set } => {
            let c = sc.set(set)?;
            match c.trivial_region(sp) {
                Ok(t) => report(
                    cmd,
                    "pass",
                    json!({ "a_c": atom_list(sc, &t.a_c), "d_c": atom_list(sc, &t.d_c) }),
                ),
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::OutsideRegion { set, point } => {
            let c = sc.set(set)?;
            let x = sc.point(point)?;
            match (c.outside_region(x, sp), c.is_outside(x, sp)) {
                (Ok(h), Ok(outside)) => report(
                    cmd,
                    "pass",
                    json!({ "h": atom_list(sc, &h), "is_outside": outside }),
                ),
                (Err(e), _) | (_, Err(e)) => internal(cmd, e),
            }
        }
        TaskDesc::MaximalSet { family, y0, relation } => {
            let fam: Vec<_> = family
                .iter()
                .map(|f| sc.level(f).cloned())
                .collect::<Result<_, _>>()?;
            let y0 = sc.level(y0)?;
            let rel = sc.relation(relation)?;
            match maximal_set(&fam, y0, rel) {
                Ok(m) => report(
                    cmd,
                    "pass",
                    json!({
                        "a_m": atom_list(sc, &m.a_m),
                        "a_m_comp": atom_list(sc, &m.a_m_comp),
                        "witness": ext_grv_json(sc, &m.witness.per_atom),
                    }),
                ),
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::CheckQco { map, trials } => {
            let pi = sc.map(map)?;
            match check_qco(pi, sp, seed, trials.unwrap_or(500)) {
                Ok(rep) => {
                    let verdict = if rep.passed() { "pass" } else { "counterexample" };
                    let witness = rep.witness.as_ref().map(|w| {
                        json!({
                            "x1": rv_json(sc, &w.x1),
                            "x2": rv_json(sc, &w.x2),
                            "lambda": grv_json(sc, &w.lambda.per_atom),
                            "atom": sc.atom_names[w.atom],
                        })
                    });
                    report(
                        cmd,
                        verdict,
                        json!({ "trials": rep.trials, "witness": witness }),
                    )
                }
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::CheckEqc { map, trials } => {
            let pi = sc.map(map)?;
            match check_eqc(pi, sp, seed, trials.unwrap_or(200)) {
                Ok(rep) => {
                    let verdict = if rep.passed() { "pass" } else { "counterexample" };
                    let witness = rep.witness.as_ref().map(|w| {
                        json!({
                            "y": ext_grv_json(sc, &w.y.per_atom),
                            "x": rv_json(sc, &w.x),
                            "atom": sc.atom_names[w.atom],
                        })
                    });
                    report(
                        cmd,
                        verdict,
                        json!({
                            "trials": rep.trials,
                            "separations": rep.separations,
                            "witness": witness,
                        }),
                    )
                }
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::EvalR { map, level, density } => {
            let pi = sc.map(map)?;
            let q = DualFunctionQuery {
                y: sc.level(level)?.clone(),
                density: sc.point(density)?.clone(),
            };
            match eval_r(pi, &q, sp) {
                Ok(r) => report(cmd, "pass", json!({ "r": ext_grv_json(sc, &r.per_atom) })),
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::DualRepr { map, point, eps } => {
            let pi = sc.map(map)?;
            let x = sc.point(point)?;
            let schedule = match eps {
                Some(list) => {
                    let joined = list.join(",");
                    schedule_from(&parse_eps_list(&joined)?, sp.n_atoms())
                }
                None => condcvx::dual::default_schedule(sp.n_atoms()),
            };
            match represent(pi, x, &schedule, sp)
                .and_then(|c| verify_certificate(pi, &c, sp).map(|_| c))
            {
                Ok(cert) => report(cmd, "pass", cert_json(sc, &cert)),
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::UscMax { map, point } => {
            let pi = sc.map(map)?;
            let x = sc.point(point)?;
            match usc_max(pi, x, sp) {
                Ok(res) => report(
                    cmd,
                    "pass",
                    json!({
                        "density": rv_json(sc, &res.density),
                        "value": ext_grv_json(sc, &res.value.per_atom),
                        "attained": true,
                    }),
                ),
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::PropertiesR { map, instances } => {
            let pi = sc.map(map)?;
            match property_suite_r(pi, sp, seed, instances.unwrap_or(100)) {
                Ok(rep) => {
                    let verdict = if rep.passed() { "pass" } else { "counterexample" };
                    report(
                        cmd,
                        verdict,
                        json!({
                            "instances": rep.instances,
                            "monotone_checks": rep.monotone_checks,
                            "scaling_checks": rep.scaling_checks,
                            "selection_checks": rep.selection_checks,
                            "locality_checks": rep.locality_checks,
                            "lattice_checks": rep.lattice_checks,
                            "quasi_affine_checks": rep.quasi_affine_checks,
                            "inf_consistency_checks": rep.inf_consistency_checks,
                            "inf_unbounded_skips": rep.inf_unbounded_skips,
                            "failures": rep.failures,
                        }),
                    )
                }
                Err(e) => internal(cmd, e),
            }
        }
        TaskDesc::Norms { point } => {
            let x = sc.point(point)?;
            let go = |p| cond_norm(x, p, sp);
            match (
                go(NormExponent::One),
                go(NormExponent::TwoSquared),
                go(NormExponent::Infinity),
            ) {
                (Ok(n1), Ok(n2), Ok(ni)) => report(
                    cmd,
                    "pass",
                    json!({
                        "p1": grv_json(sc, &n1.per_atom),
                        "p2_squared": grv_json(sc, &n2.per_atom),
                        "pinf": grv_json(sc, &ni.per_atom),
                    }),
                ),
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => internal(cmd, e),
            }
        }
    };
    Ok(rep)
}

/// Strict separation of an outside point: pass requires a strictly positive
/// margin on every non-trivial atom, re-verified here against the set's own
/// generators (VRep) or rows (HRep membership re-check).
fn check_separation(
    sc: &Scenario,
    c: &ConditionalSet,
    x: &RandomVariable,
) -> Result<(&'static str, Value), Box<dyn std::error::Error + Send + Sync>> {
    let sp = &sc.sp;
    let triv = c.trivial_region(sp)?;
    let h = c.outside_region(x, sp)?;
    let outside = !triv.d_c.atoms().iter().any(|a| !h.contains(*a));
    let mut atoms = serde_json::Map::new();
    let mut all_strict = true;
    for a in triv.d_c.atoms() {
        let grade = c.separate_atom(x, sp, a)?;
        let entry = match grade {
            AtomSeparationGrade::Strict { density, margin } => {
                // Independent re-check: the margin must survive every vertex.
                let weights = sp.atom_weights(a);
                let x_val = atom_pairing(&x.restrict(sp, a), &density, &weights);
                if let ConditionalSet::VRep { atoms } = c {
                    if let condcvx::sets::AtomShape::Polyhedron { vertices, .. } = &atoms[a] {
                        for v in vertices {
                            let vv = atom_pairing(v, &density, &weights);
                            if &x_val - vv < margin {
                                return Err("margin re-check failed".into());
                            }
                        }
                    }
                }
                json!({
                    "grade": "strict",
                    "density": atom_coords_json(sc, a, &density),
                    "margin": format_rat(&margin),
                    "pairing_at_point": format_rat(&x_val),
                })
            }
            AtomSeparationGrade::WeakBoundary { density } => {
                all_strict = false;
                json!({
                    "grade": "weak-boundary",
                    "density": atom_coords_json(sc, a, &density),
                })
            }
            AtomSeparationGrade::NoSeparation => {
                all_strict = false;
                json!({ "grade": "none" })
            }
        };
        atoms.insert(sc.atom_names[a].clone(), entry);
    }
    // An everywhere-trivial set leaves nothing to separate from.
    let verdict = if outside && all_strict && !triv.d_c.is_empty() {
        "pass"
    } else {
        "fail"
    };
    Ok((
        verdict,
        json!({
            "is_outside": outside,
            "h_region": atom_list(sc, &h),
            "d_c": atom_list(sc, &triv.d_c),
            "atoms": Value::Object(atoms),
        }),
    ))
}

fn cert_json(sc: &Scenario, cert: &DualCertificate) -> Value {
    let entries: Vec<Value> = cert
        .entries
        .iter()
        .map(|e| {
            let mut margins = serde_json::Map::new();
            for (a, m) in e.margins.iter().enumerate() {
                margins.insert(
                    sc.atom_names[a].clone(),
                    match m {
                        Some(r) => json!(format_rat(r)),
                        None => Value::Null,
                    },
                );
            }
            json!({
                "eps": grv_json(sc, &e.eps.per_atom),
                "density": rv_json(sc, &e.density),
                "r_value": ext_grv_json(sc, &e.r_value.per_atom),
                "gap": ext_grv_json(sc, &e.gap.per_atom),
                "step2": atom_list(sc, &e.step2),
                "margins": Value::Object(margins),
            })
        })
        .collect();
    json!({
        "x": rv_json(sc, &cert.x),
        "pi_x": ext_grv_json(sc, &cert.pi_x.per_atom),
        "regions": {
            "upsilon": atom_list(sc, &cert.regions.upsilon),
            "t": atom_list(sc, &cert.regions.t),
            "constancy": atom_list(sc, &cert.regions.constancy),
            "nonconstancy": atom_list(sc, &cert.regions.nonconstancy),
            "finite": atom_list(sc, &cert.regions.finite),
        },
        "entries": entries,
    })
}

/// Independent re-check of a stored report: dual-representation entries are
/// re-verified from their serialized densities (weak duality and the gap
/// bound), and everything else is recomputed and compared exactly.
pub fn verify_report(
    sc: &Scenario,
    stored: &Report,
    opts: &RunOptions,
) -> Result<Vec<String>, ScenarioError> {
    let mut problems = Vec::new();
    let fresh = run(sc, &RunOptions { seed: stored.seed, parallel: opts.parallel })?;
    if fresh != *stored {
        problems.push("stored report differs from deterministic recomputation".to_string());
    }
    for (task, rep) in sc.tasks.iter().zip(&stored.tasks) {
        if let TaskDesc::DualRepr { map, point, .. } = task {
            if rep.verdict != "pass" {
                continue;
            }
            if let Err(e) = recheck_dual_entries(sc, sc.map(map)?, sc.point(point)?, &rep.details)
            {
                problems.push(format!("dual-repr certificate for map {map:?}: {e}"));
            }
        }
    }
    Ok(problems)
}

fn recheck_dual_entries(
    sc: &Scenario,
    pi: &condcvx::quasi::QuasiMap,
    x: &RandomVariable,
    details: &Value,
) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let sp = &sc.sp;
    let pi_x = pi.eval(x, sp);
    let entries = details["entries"].as_array().ok_or("missing entries")?;
    for entry in entries {
        let density = parse_stored_rv(sc, &entry["density"])?;
        let eps = parse_stored_grv(sc, &entry["eps"])?;
        let y = pairing(x, &density, sp)?;
        let q = DualFunctionQuery {
            y: condcvx::ExtendedGRV::finite(&y),
            density,
        };
        let r = eval_r(pi, &q, sp)?;
        for a in 0..sp.n_atoms() {
            if r.per_atom[a] > pi_x.per_atom[a] {
                return Err(format!("weak duality fails on atom {}", sc.atom_names[a]).into());
            }
            if let (ExtRat::Finite(pv), ExtRat::Finite(rv)) =
                (&pi_x.per_atom[a], &r.per_atom[a])
            {
                if pv - rv >= eps[a] && !(pv - rv).is_zero() {
                    return Err(format!(
                        "gap bound fails on atom {}",
                        sc.atom_names[a]
                    )
                    .into());
                }
            }
        }
    }
    Ok(())
}

fn parse_stored_rv(
    sc: &Scenario,
    v: &Value,
) -> Result<RandomVariable, Box<dyn std::error::Error + Send + Sync>> {
    let obj = v.as_object().ok_or("expected object")?;
    let mut values = vec![Rat::zero(); sc.sp.n_outcomes()];
    for (name, s) in obj {
        let w = sc
            .sp
            .outcomes().iter().position(|o| o == name)
            .ok_or_else(|| format!("unknown outcome {name:?}"))?;
        values[w] = condcvx::rat::parse_rat(s.as_str().ok_or("expected string")?)?;
    }
    Ok(RandomVariable::new(values))
}

fn parse_stored_grv(
    sc: &Scenario,
    v: &Value,
) -> Result<Vec<Rat>, Box<dyn std::error::Error + Send + Sync>> {
    let obj = v.as_object().ok_or("expected object")?;
    let mut values = vec![Rat::zero(); sc.sp.n_atoms()];
    for (name, s) in obj {
        let a = sc
            .atom_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| format!("unknown atom {name:?}"))?;
        values[a] = condcvx::rat::parse_rat(s.as_str().ok_or("expected string")?)?;
    }
    Ok(values)
}
