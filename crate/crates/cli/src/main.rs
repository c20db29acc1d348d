mod exec;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exec::{run, verify_report, Report, RunOptions};
use scenario::{Scenario, ScenarioError, TaskDesc};

/// Batch verifier for conditional convex analysis scenarios. Every number in
/// a scenario or report is an exact rational "p/q" string; "inf"/"-inf" mark
/// extended values.
#[derive(Parser)]
#[command(name = "condcvx", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Seed for randomized suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated epsilon schedule for dual representations, e.g. "1,1/4,1/16".
    #[arg(long)]
    eps: Option<String>,
    /// Instance count for randomized suites.
    #[arg(long)]
    instances: Option<usize>,
    /// Run independent tasks concurrently.
    #[arg(long)]
    parallel: bool,
    /// Re-verify a previously emitted report instead of writing a new one.
    #[arg(long)]
    verify: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every task in the scenario file, in order.
    Run(Common),
    /// Separate a point from a set with per-atom density certificates.
    CheckSeparation {
        #[command(flatten)]
        common: Common,
        set: String,
        point: String,
    },
    /// Compute the polar (or cone polar) of a set.
    Polar {
        #[command(flatten)]
        common: Common,
        set: String,
        #[arg(long)]
        cone: bool,
    },
    /// Probe a set against its bipolar.
    BipolarCheck {
        #[command(flatten)]
        common: Common,
        set: String,
        #[arg(long)]
        cone: bool,
        #[arg(long)]
        nonmembers: Option<usize>,
    },
    /// Report the atoms where a set is the whole space, and their complement.
    TrivialRegion {
        #[command(flatten)]
        common: Common,
        set: String,
    },
    /// Report the largest region on which a point is outside a set.
    OutsideRegion {
        #[command(flatten)]
        common: Common,
        set: String,
        point: String,
    },
    /// Maximal region where every family member satisfies a relation.
    MaximalSet {
        #[command(flatten)]
        common: Common,
        /// Names of level variables forming the family.
        family: Vec<String>,
        #[arg(long)]
        y0: String,
        #[arg(long, default_value = ">=")]
        relation: String,
    },
    /// Randomized quasiconvexity check for a map.
    CheckQco {
        #[command(flatten)]
        common: Common,
        map: String,
    },
    /// Randomized even-quasiconvexity (separation) check for a map.
    CheckEqc {
        #[command(flatten)]
        common: Common,
        map: String,
    },
    /// Evaluate the dual function R(Y, z) of a map.
    #[command(name = "eval-R")]
    EvalR {
        #[command(flatten)]
        common: Common,
        map: String,
        level: String,
        density: String,
    },
    /// Build and verify an epsilon-certificate dual representation.
    DualRepr {
        #[command(flatten)]
        common: Common,
        map: String,
        point: String,
    },
    /// Exact max attainment for maps with open level sets.
    UscMax {
        #[command(flatten)]
        common: Common,
        map: String,
        point: String,
    },
    /// Randomized structural property suite for the dual function.
    #[command(name = "properties-R")]
    PropertiesR {
        #[command(flatten)]
        common: Common,
        map: String,
    },
    /// Conditional norms of a point for p in {1, 2 (squared), infinity}.
    Norms {
        #[command(flatten)]
        common: Common,
        point: String,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Run(c) => c,
            Command::CheckSeparation { common, .. }
            | Command::Polar { common, .. }
            | Command::BipolarCheck { common, .. }
            | Command::TrivialRegion { common, .. }
            | Command::OutsideRegion { common, .. }
            | Command::MaximalSet { common, .. }
            | Command::CheckQco { common, .. }
            | Command::CheckEqc { common, .. }
            | Command::EvalR { common, .. }
            | Command::DualRepr { common, .. }
            | Command::UscMax { common, .. }
            | Command::PropertiesR { common, .. }
            | Command::Norms { common, .. } => common,
        }
    }

    /// Single-task form of a subcommand; `Run` uses the scenario's own list.
    fn task(&self) -> Option<TaskDesc> {
        let c = self.common();
        Some(match self {
            Command::Run(_) => return None,
            Command::CheckSeparation { set, point, .. } => TaskDesc::CheckSeparation {
                set: set.clone(),
                point: point.clone(),
            },
            Command::Polar { set, cone, .. } => TaskDesc::Polar {
                set: set.clone(),
                cone: *cone,
            },
            Command::BipolarCheck { set, cone, nonmembers, .. } => TaskDesc::BipolarCheck {
                set: set.clone(),
                cone: *cone,
                nonmembers: *nonmembers,
            },
            Command::TrivialRegion { set, .. } => TaskDesc::TrivialRegion { set: set.clone() },
            Command::OutsideRegion { set, point, .. } => TaskDesc::OutsideRegion {
                set: set.clone(),
                point: point.clone(),
            },
            Command::MaximalSet { family, y0, relation, .. } => TaskDesc::MaximalSet {
                family: family.clone(),
                y0: y0.clone(),
                relation: relation.clone(),
            },
            Command::CheckQco { map, .. } => TaskDesc::CheckQco {
                map: map.clone(),
                trials: c.instances,
            },
            Command::CheckEqc { map, .. } => TaskDesc::CheckEqc {
                map: map.clone(),
                trials: c.instances,
            },
            Command::EvalR { map, level, density, .. } => TaskDesc::EvalR {
                map: map.clone(),
                level: level.clone(),
                density: density.clone(),
            },
            Command::DualRepr { map, point, .. } => TaskDesc::DualRepr {
                map: map.clone(),
                point: point.clone(),
                eps: c.eps.as_ref().map(|s| {
                    s.split(',').map(|p| p.trim().to_string()).collect()
                }),
            },
            Command::UscMax { map, point, .. } => TaskDesc::UscMax {
                map: map.clone(),
                point: point.clone(),
            },
            Command::PropertiesR { map, .. } => TaskDesc::PropertiesR {
                map: map.clone(),
                instances: c.instances,
            },
            Command::Norms { point, .. } => TaskDesc::Norms { point: point.clone() },
        })
    }
}

fn apply_overrides(sc: &mut Scenario, common: &Common) -> Result<(), ScenarioError> {
    if let Some(eps) = &common.eps {
        // Validate once; the override is injected into dual-repr tasks that
        // did not pin their own schedule.
        scenario::parse_eps_list(eps)?;
        let list: Vec<String> = eps.split(',').map(|p| p.trim().to_string()).collect();
        for task in &mut sc.tasks {
            if let TaskDesc::DualRepr { eps: slot @ None, .. } = task {
                *slot = Some(list.clone());
            }
        }
    }
    if let Some(n) = common.instances {
        for task in &mut sc.tasks {
            match task {
                TaskDesc::CheckQco { trials: t @ None, .. }
                | TaskDesc::CheckEqc { trials: t @ None, .. } => *t = Some(n),
                TaskDesc::PropertiesR { instances: i @ None, .. } => *i = Some(n),
                _ => {}
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn run_cli(command: &Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let common = command.common();
    let text = std::fs::read_to_string(&common.scenario)
        .map_err(|e| format!("cannot read {}: {e}", common.scenario.display()))?;
    let mut sc = Scenario::from_json(&text)?;
    if let Some(task) = command.task() {
        sc.tasks = vec![task];
    }
    apply_overrides(&mut sc, common)?;
    let opts = RunOptions {
        seed: common.seed,
        parallel: common.parallel,
    };

    if let Some(report_path) = &common.verify {
        let stored_text = std::fs::read_to_string(report_path)
            .map_err(|e| format!("cannot read {}: {e}", report_path.display()))?;
        let stored: Report = serde_json::from_str(&stored_text)
            .map_err(|e| format!("report parse error: {e}"))?;
        let problems = verify_report(&sc, &stored, &opts)?;
        if problems.is_empty() && stored.all_passed {
            println!("report verified: {} task(s), all certificates re-checked", stored.tasks.len());
            return Ok(ExitCode::SUCCESS);
        }
        for p in &problems {
            eprintln!("verification failure: {p}");
        }
        if !stored.all_passed {
            eprintln!("verification failure: stored report contains failing tasks");
        }
        return Ok(ExitCode::FAILURE);
    }

    let report = run(&sc, &opts)?;
    let rendered = serde_json::to_string_pretty(&report)?;
    match &common.output {
        Some(path) => std::fs::write(path, rendered + "\n")
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => println!("{rendered}"),
    }
    if report.all_passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}
