//! Single runs and the `run` verb.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use dphase_core::diagnostics::{run_diagnostics, AssertionRow, DiagnosticsReport, MonitorRow};
use dphase_core::galerkin::{self, GalerkinSystem, Trajectory};
use dphase_core::{par, FieldSpec, SpaceRule};

use crate::config::{LoadedConfig, RunConfig};
use crate::error::{CliError, Result, Verdict};
use crate::output;
use crate::sweep as studies;

pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Minimum Gauss order per axis of the reference-error quadrature.
const ERROR_QUADRATURE_ORDER: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestKind {
    Run,
    Sweep,
}

/// One sweep or property member as recorded in the parent manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub name: String,
    pub study: String,
    pub parameter: String,
    pub value: f64,
    pub verdict: Verdict,
    #[serde(default)]
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: ManifestKind,
    pub scenario: String,
    pub software_version: String,
    pub config: RunConfig,
    pub workers: usize,
    pub seed: u64,
    pub validation: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub failure: Option<String>,
    pub final_l2_error: Option<f64>,
    pub steps: usize,
    pub assertions: Vec<AssertionRow>,
    pub monitors: Vec<MonitorRow>,
    pub members: Vec<MemberSummary>,
}

impl RunManifest {
    pub fn new(
        kind: ManifestKind,
        cfg: &RunConfig,
        workers: usize,
        validation: serde_json::Value,
    ) -> Self {
        RunManifest {
            kind,
            scenario: cfg.scenario.clone(),
            software_version: SOFTWARE_VERSION.into(),
            config: cfg.clone(),
            workers,
            seed: cfg.seed,
            validation,
            timings_ms: BTreeMap::new(),
            verdict: Verdict::Passed,
            failure: None,
            final_l2_error: None,
            steps: 0,
            assertions: Vec::new(),
            monitors: Vec::new(),
            members: Vec::new(),
        }
    }

    /// Recomputes the verdict from the assertions, members and failure.
    pub fn settle(&mut self) {
        let mut v = if self.assertions.iter().all(|a| a.passed) {
            Verdict::Passed
        } else {
            Verdict::AssertionFailure
        };
        if self.failure.is_some() {
            v = Verdict::SolverFailure;
        }
        for m in &self.members {
            v = v.max(m.verdict);
        }
        self.verdict = v;
    }

    fn time(&mut self, stage: &str, since: Instant) {
        self.timings_ms
            .insert(stage.into(), since.elapsed().as_secs_f64() * 1e3);
    }
}

/// A completed solve with its diagnostics.
pub struct Solved {
    pub system: GalerkinSystem,
    pub trajectory: Trajectory,
    pub report: DiagnosticsReport,
}

pub struct SingleRun {
    pub manifest: RunManifest,
    pub solved: Option<Solved>,
}

impl SingleRun {
    pub fn verdict(&self) -> Verdict {
        self.manifest.verdict
    }
}

/// `‖u_h(T) − u_exact(T)‖_{L²}` on a refined Gauss rule.
pub fn final_l2_error(
    system: &GalerkinSystem,
    trajectory: &Trajectory,
    exact: &FieldSpec,
) -> Result<f64> {
    let basis = system.basis();
    let order = system.rule().order().max(ERROR_QUADRATURE_ORDER);
    let rule = SpaceRule::gauss(basis.dim(), order)?;
    let last = trajectory.last();
    let err_sq = par::weighted_sum(rule.weights(), |n| {
        let x = rule.point(n);
        match basis.evaluate(&last.coeffs, x) {
            Ok((u, _)) => (u - exact.eval(x, last.t)).powi(2),
            Err(_) => f64::NAN,
        }
    });
    Ok(err_sq.sqrt())
}

/// Solves, diagnoses and writes one run into `dir` on the ambient pool.
pub fn run_single(
    cfg: &RunConfig,
    validation: &serde_json::Value,
    workers: usize,
    dir: &Path,
) -> Result<SingleRun> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut manifest = RunManifest::new(ManifestKind::Run, cfg, workers, validation.clone());

    let start = Instant::now();
    let solved = galerkin::build_system(&cfg.solver, &cfg.data, &cfg.forcing)
        .and_then(|sys| galerkin::project_initial(&sys, &cfg.initial).map(|u0| (sys, u0)))
        .map_err(|e| (Vec::new(), e.to_string()))
        .and_then(
            |(sys, u0)| match galerkin::solve_system(&sys, &cfg.solver, u0) {
                Ok(traj) => Ok((sys, traj)),
                Err(f) => Err((f.partial.steps.clone(), f.to_string())),
            },
        );
    manifest.time("solve", start);
    let (system, trajectory) = match solved {
        Ok(s) => s,
        Err((steps, msg)) => {
            output::write_steps(dir, &steps)?;
            manifest.steps = steps.len();
            manifest.failure = Some(msg);
            manifest.settle();
            output::write_json(&dir.join(output::MANIFEST), &manifest)?;
            return Ok(SingleRun {
                manifest,
                solved: None,
            });
        }
    };
    manifest.steps = trajectory.steps.len();

    let start = Instant::now();
    let report = match run_diagnostics(&system, &trajectory, &cfg.diagnostics) {
        Ok(r) => r,
        Err(e) => {
            output::write_steps(dir, &trajectory.steps)?;
            manifest.failure = Some(format!("diagnostics failed: {e}"));
            manifest.settle();
            output::write_json(&dir.join(output::MANIFEST), &manifest)?;
            return Ok(SingleRun {
                manifest,
                solved: None,
            });
        }
    };
    manifest.assertions = report.assertions.clone();
    manifest.monitors = report.monitors.clone();
    if let Some(ex) = &cfg.exact {
        let err = final_l2_error(&system, &trajectory, &ex.field)?;
        manifest.final_l2_error = Some(err);
        match ex.tolerance {
            Some(tol) => manifest.assertions.push(AssertionRow::at_most(
                "mms",
                "final-time L2 error vs exact solution",
                err,
                tol,
                0.0,
            )),
            None => manifest
                .monitors
                .push(MonitorRow::new("mms", "final-time L2 error", err)),
        }
    }
    manifest.time("diagnostics", start);

    let start = Instant::now();
    output::write_timeseries(dir, &report.series)?;
    output::write_higher_integrability(dir, &report.higher_integrability)?;
    output::write_second_order(dir, report.second_order.as_ref())?;
    output::write_steps(dir, &trajectory.steps)?;
    if let Some(snap) = &cfg.snapshots {
        for &t in &snap.times {
            let state = trajectory
                .states
                .iter()
                .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
                .expect("trajectory has the initial state");
            output::write_snapshot(
                dir,
                &output::snapshot_name(t),
                system.basis(),
                state,
                snap.lattice,
            )?;
        }
    }
    manifest.time("output", start);
    manifest.settle();
    output::write_json(&dir.join(output::MANIFEST), &manifest)?;
    Ok(SingleRun {
        manifest,
        solved: Some(Solved {
            system,
            trajectory,
            report,
        }),
    })
}

/// Outcome of a verb that produced a manifest.
pub struct Outcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.manifest.verdict.exit_code()
    }
}

pub fn validation_value(loaded: &LoadedConfig) -> Result<serde_json::Value> {
    let report = loaded.validate()?;
    serde_json::to_value(&report).map_err(|e| CliError::Json {
        path: loaded.path.clone(),
        source: e,
    })
}

/// `run`: the base solve, followed by any sweep or property studies.
pub fn run(loaded: &LoadedConfig, out: Option<&Path>, workers: usize) -> Result<Outcome> {
    let validation = validation_value(loaded)?;
    let dir = loaded.output_dir(out);
    let cfg = &loaded.config;
    par::with_workers(workers, || -> Result<Outcome> {
        let base = run_single(cfg, &validation, workers, &dir)?;
        let mut manifest = base.manifest.clone();
        if cfg.sweep.is_some() || cfg.property.is_some() {
            let studies = studies::studies(cfg, &validation, workers, &dir, base.solved.as_ref())?;
            studies.merge_into(&mut manifest);
        }
        manifest.settle();
        output::write_json(&dir.join(output::MANIFEST), &manifest)?;
        Ok(Outcome { dir, manifest })
    })
}

/// `sweep`: members and studies only.
pub fn sweep(loaded: &LoadedConfig, out: Option<&Path>, workers: usize) -> Result<Outcome> {
    let cfg = &loaded.config;
    if cfg.sweep.is_none() && cfg.property.is_none() {
        return Err(CliError::Config {
            path: loaded.path.clone(),
            line: 1,
            message: "no [sweep] or [property] block present".into(),
        });
    }
    let validation = validation_value(loaded)?;
    let dir = loaded.output_dir(out);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    par::with_workers(workers, || -> Result<Outcome> {
        let mut manifest = RunManifest::new(ManifestKind::Sweep, cfg, workers, validation.clone());
        let start = Instant::now();
        let studies = studies::studies(cfg, &validation, workers, &dir, None)?;
        studies.merge_into(&mut manifest);
        manifest.time("sweep", start);
        manifest.settle();
        output::write_json(&dir.join(output::MANIFEST), &manifest)?;
        Ok(Outcome { dir, manifest })
    })
}
