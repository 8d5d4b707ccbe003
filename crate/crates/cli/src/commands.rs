use std::sync::Arc;

use anyhow::{bail, Context};
use faber_phase::coefficient::check_family;
use faber_phase::eigen::{assemble, principal_eigenpair, sharp_eigenvalue};
use faber_phase::fields::{initial_field, seeded_rng};
use faber_phase::objective::{j_zero, modica_mortola_bound, Objective};
use faber_phase::optimize::{certify_minimizer, minimize, InitialField, OptimizerConfig, OptimizerTrace};
use faber_phase::profile::{gamma_check, solve_profile, GammaReport};
use faber_phase::rearrange::{exact_suite, RearrangementPlan, EXACT_SLACK};
use faber_phase::{Grid, ScalarField, SharpShape};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{write_atomic, write_json};
use crate::settings::{Command, Settings};

/// Result of a subcommand: the JSON printed on stdout and whether every
/// checked property held.
pub struct Report {
    pub json: Value,
    pub ok: bool,
}

impl Report {
    fn ok(json: Value) -> Self {
        Self { json, ok: true }
    }
}

pub fn run(s: &Settings) -> anyhow::Result<Report> {
    match s.command {
        Command::Eig => eig(s),
        Command::SharpEig => sharp_eig(s),
        Command::Energy => energy(s),
        Command::Minimize => minimize_cmd(s),
        Command::Sweep => sweep(s),
        Command::RearrangeCheck => rearrange_check(s),
        Command::Profile => profile(s),
        Command::GammaCheck => gamma_check_cmd(s),
        Command::FkCompare => fk_compare(s),
        Command::CheckAssumptions => check_assumptions(s),
    }
}

fn load_phase(s: &Settings, grid: &Arc<Grid>) -> anyhow::Result<ScalarField> {
    let field = match s.phase.as_str() {
        "ones" => ScalarField::constant(grid.clone(), 1.0)?,
        name @ ("radial-bump" | "offset-bump" | "seeded-noise") => {
            let kind: InitialField = name.parse()?;
            initial_field(grid, kind, s.m, s.seed[0])?.into_field()
        }
        path => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading phase field {path}"))?;
            ScalarField::from_csv(grid.clone(), &text)?
        }
    };
    if let Some(i) = field.values().iter().position(|v| !(0.0..=1.0).contains(v)) {
        bail!("phase field value {} at index {i} lies outside [0, 1]", field.values()[i]);
    }
    Ok(field)
}

fn objective(s: &Settings, grid: &Arc<Grid>, eps: f64, gamma: f64) -> anyhow::Result<Objective> {
    Ok(Objective::new(grid, eps, gamma, s.potential()?, s.family()?, s.eig_tol)?)
}

fn eig(s: &Settings) -> anyhow::Result<Report> {
    let grid = s.build_grid()?;
    let phi = load_phase(s, &grid)?;
    let eps = s.eps[0];
    let op = assemble(&phi, &s.family()?, eps)?;
    let pair = principal_eigenpair(&op, s.eig_tol)?;
    Ok(Report::ok(json!({
        "command": "eig",
        "lambda1": pair.lambda,
        "residual": pair.residual,
        "iterations": pair.iterations,
        "eig_tol": s.eig_tol,
        "eps": eps,
        "beta": s.family()?.beta(eps)?,
        "unknowns": grid.len(),
    })))
}

fn sharp_eig(s: &Settings) -> anyhow::Result<Report> {
    let grid = s.build_grid()?;
    let shape = SharpShape::parse(&s.shape)?;
    let pair = sharp_eigenvalue(&grid, &shape, s.eig_tol)?;
    Ok(Report::ok(json!({
        "command": "sharp-eig",
        "shape": shape.to_string(),
        "lambda1": pair.lambda,
        "residual": pair.residual,
        "iterations": pair.iterations,
        "eig_tol": s.eig_tol,
    })))
}

fn energy(s: &Settings) -> anyhow::Result<Report> {
    let grid = s.build_grid()?;
    let phi = load_phase(s, &grid)?;
    let obj = objective(s, &grid, s.eps[0], s.gamma[0])?;
    let eval = obj.evaluate(&phi, None)?;
    let b = eval.breakdown;
    let bound = modica_mortola_bound(&phi, &obj.potential);
    Ok(Report {
        ok: bound <= b.total * (1.0 + 1e-2) + 1e-12,
        json: json!({
            "command": "energy",
            "gradient": b.gradient,
            "potential": b.potential,
            "energy": b.total,
            "lambda1": eval.eigenpair.lambda,
            "j": eval.j(),
            "modica_mortola_bound": bound,
            "mean": phi.weighted_mean(),
            "eps": s.eps[0],
            "gamma": s.gamma[0],
            "eig_tol": s.eig_tol,
        }),
    })
}

#[derive(Debug, Clone, Serialize)]
struct RunSummary {
    run: usize,
    eps: f64,
    gamma: f64,
    seed: u64,
    j: f64,
    lambda1: f64,
    energy: f64,
    asymmetry: f64,
    interface_measure: f64,
    converged: bool,
    iterations: usize,
}

const SUMMARY_HEADER: &str = "run,eps,gamma,seed,J,lambda1,E,asymmetry,interface_measure,converged,iterations";

impl RunSummary {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            self.run,
            self.eps,
            self.gamma,
            self.seed,
            self.j,
            self.lambda1,
            self.energy,
            self.asymmetry,
            self.interface_measure,
            self.converged,
            self.iterations
        )
    }
}

struct Run {
    summary: RunSummary,
    phi: ScalarField,
    trace: OptimizerTrace,
    certificate: Value,
}

fn run_one(s: &Settings, grid: &Arc<Grid>, run: usize, eps: f64, gamma: f64, seed: u64) -> anyhow::Result<Run> {
    let obj = objective(s, grid, eps, gamma)?;
    let config = OptimizerConfig { eps, gamma, m: s.m, max_iter: s.max_iter, tol: s.tol, init: s.init, seed };
    let result = minimize(&obj, &config)?;
    let cert = certify_minimizer(result.phi.field(), &result.evaluation.eigenpair.eigenfunction, &obj, s.delta, None)?;
    let summary = RunSummary {
        run,
        eps,
        gamma,
        seed,
        j: result.evaluation.j(),
        lambda1: result.evaluation.eigenpair.lambda,
        energy: result.evaluation.breakdown.total,
        asymmetry: cert.asymmetry,
        interface_measure: cert.interface_measure,
        converged: result.trace.converged,
        iterations: result.trace.rows.last().map_or(0, |r| r.iter),
    };
    Ok(Run { summary, phi: result.phi.into_field(), trace: result.trace, certificate: serde_json::to_value(cert)? })
}

fn minimize_cmd(s: &Settings) -> anyhow::Result<Report> {
    let grid = s.build_grid()?;
    let run = run_one(s, &grid, 0, s.eps[0], s.gamma[0], s.seed[0])?;
    write_atomic(&s.out, "phi.csv", &run.phi.to_csv())?;
    write_atomic(&s.out, "trace.csv", &run.trace.to_csv())?;
    write_json(&s.out, "certificate.json", &run.certificate)?;
    let mut json = serde_json::to_value(&run.summary)?;
    let map = json.as_object_mut().expect("summary serializes to an object");
    map.insert("command".into(), "minimize".into());
    map.insert("tol".into(), s.tol.into());
    map.insert("eig_tol".into(), s.eig_tol.into());
    map.insert("m".into(), s.m.into());
    Ok(Report::ok(json))
}

fn sweep(s: &Settings) -> anyhow::Result<Report> {
    let grid = s.build_grid()?;
    let jobs: Vec<(usize, f64, f64, u64)> = s
        .eps
        .iter()
        .flat_map(|&e| s.gamma.iter().flat_map(move |&g| s.seed.iter().map(move |&k| (e, g, k))))
        .enumerate()
        .map(|(run, (e, g, k))| (run, e, g, k))
        .collect();
    let results: Vec<anyhow::Result<RunSummary>> = jobs
        .par_iter()
        .map(|&(run, eps, gamma, seed)| {
            let r = run_one(s, &grid, run, eps, gamma, seed)?;
            write_atomic(&s.out, &format!("trace_{run}.csv"), &r.trace.to_csv())?;
            Ok(r.summary)
        })
        .collect();
    let mut summaries = Vec::with_capacity(results.len());
    for r in results {
        summaries.push(r?);
    }
    let mut csv = format!("{SUMMARY_HEADER}\n");
    for row in &summaries {
        csv.push_str(&row.csv_row());
    }
    write_atomic(&s.out, "summary.csv", &csv)?;
    write_json(&s.out, "summary.json", &serde_json::to_value(&summaries)?)?;
    Ok(Report::ok(json!({
        "command": "sweep",
        "runs": summaries.len(),
        "converged": summaries.iter().filter(|r| r.converged).count(),
        "best_j": summaries.iter().map(|r| r.j).fold(f64::INFINITY, f64::min),
        "tol": s.tol,
        "eig_tol": s.eig_tol,
    })))
}

fn rearrange_check(s: &Settings) -> anyhow::Result<Report> {
    let grid = s.build_grid()?;
    if !grid.has_equal_weights() {
        bail!("rearrange-check needs a grid with equal cell weights (use --grid cartesian)");
    }
    let plan = RearrangementPlan::for_grid(&grid);
    let h2 = grid.weights()[0];
    let mut rng = seeded_rng(s.seed[0]);
    let mut checks = 0;
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..s.trials {
        let f: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
        let g: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
        for r in exact_suite(&plan, &f, &g, h2)? {
            checks += 1;
            violations += usize::from(!r.holds);
            worst = worst.max((r.lhs - r.rhs) / r.rhs.abs().max(1.0));
        }
    }
    Ok(Report {
        ok: violations == 0,
        json: json!({
            "command": "rearrange-check",
            "trials": s.trials,
            "checks": checks,
            "violations": violations,
            "slack": EXACT_SLACK,
            "worst_excess": worst,
        }),
    })
}

fn profile(s: &Settings) -> anyhow::Result<Report> {
    let psi = s.potential()?;
    let sol = solve_profile(&psi, s.t_max)?;
    write_atomic(&s.out, "profile.csv", &sol.to_csv())?;
    Ok(Report::ok(json!({
        "command": "profile",
        "potential": sol.potential,
        "step": sol.step,
        "t_max": sol.t_max,
        "samples": sol.eta.len(),
        "c0": psi.c0(),
        "to_zero": serde_json::to_value(sol.to_zero)?,
        "to_one": serde_json::to_value(sol.to_one)?,
    })))
}

fn gamma_check_cmd(s: &Settings) -> anyhow::Result<Report> {
    let grid = s.build_grid()?;
    let shape = SharpShape::parse(&s.shape)?;
    let report: GammaReport =
        gamma_check(&shape, &s.eps, &grid, s.gamma[0], &s.potential()?, &s.family()?, s.eig_tol)?;
    write_atomic(&s.out, "gamma.csv", &report.to_csv())?;
    Ok(Report::ok(json!({
        "command": "gamma-check",
        "shape": report.shape,
        "gamma": report.gamma,
        "rows": report.rows.len(),
        "l1_rate": report.l1_rate,
        "eigen_gap_decreasing": report.eigen_gap_decreasing,
        "penalty_decreasing": report.penalty_decreasing,
        "eig_tol": s.eig_tol,
    })))
}

fn fk_compare(s: &Settings) -> anyhow::Result<Report> {
    let grid = s.build_grid()?;
    let psi = s.potential()?;
    let mut rows = Vec::new();
    for text in &s.shapes {
        let shape = SharpShape::parse(text)?;
        let b = j_zero(&shape, &grid, s.gamma[0], &psi, s.eig_tol)?;
        rows.push((shape.to_string(), shape.volume(s.n), matches!(shape, SharpShape::Ball { .. }), b));
    }
    rows.sort_by(|a, b| a.3.j.total_cmp(&b.3.j));
    let mut csv = String::from("rank,shape,volume,lambda1,perimeter,contact,j\n");
    for (k, (name, volume, _, b)) in rows.iter().enumerate() {
        csv.push_str(&format!("{},{name},{volume},{},{},{},{}\n", k + 1, b.lambda1, b.perimeter, b.contact, b.j));
    }
    write_atomic(&s.out, "fk.csv", &csv)?;
    let mut ok = true;
    for (_, volume, _, ball) in rows.iter().filter(|r| r.2) {
        for (_, v, _, other) in &rows {
            if (v - volume).abs() <= 1e-9 * volume && other.lambda1 < ball.lambda1 * (1.0 - 1e-3) {
                ok = false;
            }
        }
    }
    Ok(Report {
        ok,
        json: json!({
            "command": "fk-compare",
            "shapes": rows.len(),
            "best": rows.first().map(|r| r.0.clone()),
            "best_j": rows.first().map(|r| r.3.j),
            "ball_minimal": ok,
            "eig_tol": s.eig_tol,
        }),
    })
}

fn check_assumptions(s: &Settings) -> anyhow::Result<Report> {
    let family = s.family()?;
    let psi = s.potential()?;
    let mut samples = s.eps.clone();
    samples.extend([0.1, 0.05, 0.02, 0.01, 0.005]);
    samples.sort_by(|a, b| b.total_cmp(a));
    samples.dedup();
    let mut checks = check_family(&family, &samples);
    let interior = (1..1000).all(|k| psi.psi(k as f64 / 1000.0).is_ok_and(|v| v > 0.0));
    let wells = psi.psi(0.0)? == 0.0 && psi.psi(1.0)? == 0.0;
    checks.push(faber_phase::coefficient::AssumptionCheck {
        name: "psi(0)=psi(1)=0 < psi on (0,1)".into(),
        passed: interior && wells,
        detail: format!("{}, c0 = {}", psi.name(), psi.c0()),
    });
    let ok = checks.iter().all(|c| c.passed);
    Ok(Report {
        ok,
        json: json!({
            "command": "check-assumptions",
            "passed": checks.iter().filter(|c| c.passed).count(),
            "failed": checks.iter().filter(|c| !c.passed).count(),
            "checks": serde_json::to_value(&checks)?,
        }),
    })
}
