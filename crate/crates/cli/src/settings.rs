//! Command-line flags, the `key = value` config file, and the resolved
//! experiment settings.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use faber_phase::optimize::InitialField;
use faber_phase::{BallDomain, CoefficientFamily, Grid, Potential, SharpShape};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "faber-phase", version, about = "Phase-field Faber-Krahn experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Principal eigenvalue of -Laplace + b(phi) for a given phase field.
    #[command(after_help = "Prints a JSON object with lambda1, residual and the tolerance used.")]
    Eig,
    /// Principal Dirichlet eigenvalue of a sharp shape.
    #[command(after_help = "Prints a JSON object with lambda1 and the tolerance used.")]
    SharpEig,
    /// Ginzburg-Landau energy and objective value of a phase field.
    #[command(after_help = "Prints the energy breakdown (gradient, potential, total, lambda1, j) as JSON.")]
    Energy,
    /// Projected gradient descent for the objective.
    #[command(after_help = "Writes to --out:\n  \
        phi.csv          index,x,y,value (Cartesian) or index,r,value (radial)\n  \
        trace.csv        iter,J,lambda1,E,step,pgnorm,asym\n  \
        certificate.json asymmetry, eigenfunction asymmetry, interface measure")]
    Minimize,
    /// Minimizations over lists of eps, gamma and seeds, run in parallel.
    #[command(after_help = "Writes to --out:\n  \
        trace_<k>.csv  iter,J,lambda1,E,step,pgnorm,asym for run k\n  \
        summary.csv    run,eps,gamma,seed,J,lambda1,E,asymmetry,interface_measure,converged,iterations\n  \
        summary.json   the same rows as JSON objects")]
    Sweep,
    /// Seeded exact rearrangement inequalities on an equal-weight grid.
    #[command(after_help = "Prints check counts, violations and the slack as JSON.")]
    RearrangeCheck,
    /// Optimal profile eta' = sqrt(2 psi(eta)), eta(0) = 1/2.
    #[command(after_help = "Writes profile.csv with header t,eta to --out.")]
    Profile,
    /// Recovery-sequence and eigenvalue-continuity checks for a shape.
    #[command(after_help = "Writes gamma.csv to --out with header\n  \
        eps,energy,energy_limit,energy_gap,lambda_eps,lambda_zero,eigen_gap,penalty,l1_error,mass")]
    GammaCheck,
    /// Sharp functional for a list of shapes, ranked.
    #[command(after_help = "Writes fk.csv to --out with header\n  \
        rank,shape,volume,lambda1,perimeter,contact,j")]
    FkCompare,
    /// Structural checks of the potential and the coefficient family.
    #[command(after_help = "Prints one JSON object per check.")]
    CheckAssumptions,
}

/// Every flag is optional so that the config file can fill it in.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Space dimension (2 or 3).
    #[arg(long, global = true)]
    pub n: Option<String>,
    /// Domain radius.
    #[arg(long = "R", global = true)]
    pub radius: Option<String>,
    /// cartesian or radial.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Cells per axis (Cartesian) or nodes (radial).
    #[arg(long, global = true)]
    pub resolution: Option<String>,
    /// double-well or double-obstacle.
    #[arg(long, global = true)]
    pub potential: Option<String>,
    #[arg(long = "beta-bar", global = true)]
    pub beta_bar: Option<String>,
    #[arg(long = "kappa-used", global = true)]
    pub kappa_used: Option<String>,
    #[arg(long = "c-half", global = true)]
    pub c_half: Option<String>,
    /// Interface width; comma-separated list for sweep and gamma-check.
    #[arg(long, global = true)]
    pub eps: Option<String>,
    /// Regularization weight; comma-separated list for sweep.
    #[arg(long, global = true)]
    pub gamma: Option<String>,
    /// Prescribed mass in (0, 1).
    #[arg(long, global = true)]
    pub m: Option<String>,
    /// Threshold for the interface measure.
    #[arg(long, global = true)]
    pub delta: Option<String>,
    /// Eigensolver tolerance.
    #[arg(long = "eig-tol", global = true)]
    pub eig_tol: Option<String>,
    /// Optimizer tolerance on the projected-gradient norm.
    #[arg(long, global = true)]
    pub tol: Option<String>,
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<String>,
    /// radial-bump, offset-bump or seeded-noise.
    #[arg(long, global = true)]
    pub init: Option<String>,
    /// ones, radial-bump, offset-bump, seeded-noise or a CSV file.
    #[arg(long, global = true)]
    pub phase: Option<String>,
    /// Shape descriptor, e.g. ball:0.5, annulus:0.5,1.1, ellipse:1.4,0.7, rectangle:1,2.
    #[arg(long, global = true)]
    pub shape: Option<String>,
    /// Semicolon-separated shape descriptors.
    #[arg(long, global = true)]
    pub shapes: Option<String>,
    /// 64-bit RNG seed; comma-separated list for sweep.
    #[arg(long, global = true)]
    pub seed: Option<String>,
    #[arg(long, global = true)]
    pub trials: Option<String>,
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

const KEYS: [&str; 24] = [
    "n", "R", "grid", "resolution", "potential", "beta-bar", "kappa-used", "c-half", "eps", "gamma", "m", "delta",
    "eig-tol", "tol", "max-iter", "init", "phase", "shape", "shapes", "seed", "trials", "t-max", "out", "config",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, Vec<String>> {
    let mut map = BTreeMap::new();
    let mut errors = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("config line {}: expected `key = value`", k + 1));
            continue;
        };
        let key = key.trim();
        if !KEYS.contains(&key) || key == "config" {
            errors.push(format!("config line {}: unknown key `{key}`", k + 1));
            continue;
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(errors)
    }
}

impl Flags {
    /// Fills unset flags from the config map.
    pub fn merge(mut self, file: &BTreeMap<String, String>) -> Self {
        let slots: [(&str, &mut Option<String>); 22] = [
            ("n", &mut self.n),
            ("R", &mut self.radius),
            ("grid", &mut self.grid),
            ("resolution", &mut self.resolution),
            ("potential", &mut self.potential),
            ("beta-bar", &mut self.beta_bar),
            ("kappa-used", &mut self.kappa_used),
            ("c-half", &mut self.c_half),
            ("eps", &mut self.eps),
            ("gamma", &mut self.gamma),
            ("m", &mut self.m),
            ("delta", &mut self.delta),
            ("eig-tol", &mut self.eig_tol),
            ("tol", &mut self.tol),
            ("max-iter", &mut self.max_iter),
            ("init", &mut self.init),
            ("phase", &mut self.phase),
            ("shape", &mut self.shape),
            ("shapes", &mut self.shapes),
            ("seed", &mut self.seed),
            ("trials", &mut self.trials),
            ("t-max", &mut self.t_max),
        ];
        for (key, slot) in slots {
            if slot.is_none() {
                *slot = file.get(key).cloned();
            }
        }
        if self.out.is_none() {
            self.out = file.get("out").map(PathBuf::from);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Cartesian,
    Radial,
}

/// Fully resolved and validated experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub command: Command,
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub grid: GridKind,
    pub resolution: usize,
    pub potential: String,
    pub beta_bar: f64,
    pub kappa_used: f64,
    pub c_half: f64,
    pub eps: Vec<f64>,
    pub gamma: Vec<f64>,
    pub m: f64,
    pub delta: f64,
    pub eig_tol: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub init: InitialField,
    pub phase: String,
    pub shape: String,
    pub shapes: Vec<String>,
    pub seed: Vec<u64>,
    pub trials: usize,
    pub t_max: f64,
    pub out: PathBuf,
}

struct Collector(Vec<String>);

impl Collector {
    fn get<T: FromStr>(&mut self, name: &str, raw: &Option<String>, default: T) -> T
    where
        T::Err: std::fmt::Display,
    {
        match raw {
            None => default,
            Some(s) => match s.trim().parse() {
                Ok(v) => v,
                Err(e) => {
                    self.0.push(format!("--{name}: cannot parse {s:?}: {e}"));
                    default
                }
            },
        }
    }

    fn list<T: FromStr>(&mut self, name: &str, raw: &Option<String>, default: Vec<T>) -> Vec<T>
    where
        T::Err: std::fmt::Display,
    {
        let Some(s) = raw else { return default };
        let mut out = Vec::new();
        for item in s.split(',') {
            match item.trim().parse() {
                Ok(v) => out.push(v),
                Err(e) => self.0.push(format!("--{name}: cannot parse {item:?}: {e}")),
            }
        }
        out
    }

    fn require(&mut self, ok: bool, message: impl Into<String>) {
        if !ok {
            self.0.push(message.into());
        }
    }
}

impl Settings {
    /// Resolves flags against defaults, collecting every validation error.
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self, Vec<String>> {
        let mut c = Collector(Vec::new());
        let n: usize = c.get("n", &flags.n, 2);
        let radius: f64 = c.get("R", &flags.radius, 1.0);
        let grid = match flags.grid.as_deref() {
            None if n == 3 => GridKind::Radial,
            None => GridKind::Cartesian,
            Some("cartesian") => GridKind::Cartesian,
            Some("radial") => GridKind::Radial,
            Some(other) => {
                c.0.push(format!("--grid: expected cartesian or radial, got {other:?}"));
                GridKind::Cartesian
            }
        };
        let default_resolution = match grid {
            GridKind::Cartesian => 128,
            GridKind::Radial => 1000,
        };
        let resolution: usize = c.get("resolution", &flags.resolution, default_resolution);
        let potential = flags.potential.clone().unwrap_or_else(|| "double-obstacle".into());
        let beta_bar: f64 = c.get("beta-bar", &flags.beta_bar, 1.0);
        let kappa_used: f64 = c.get("kappa-used", &flags.kappa_used, 0.5);
        let c_half: f64 = c.get("c-half", &flags.c_half, 10.0 / (radius * radius));
        let eps: Vec<f64> = c.list("eps", &flags.eps, vec![0.05]);
        let gamma: Vec<f64> = c.list("gamma", &flags.gamma, vec![0.01]);
        let m: f64 = c.get("m", &flags.m, 0.25);
        let delta: f64 = c.get("delta", &flags.delta, 0.1);
        let eig_tol: f64 = c.get("eig-tol", &flags.eig_tol, 1e-9);
        let tol: f64 = c.get("tol", &flags.tol, 1e-6);
        let max_iter: usize = c.get("max-iter", &flags.max_iter, 5000);
        let init: InitialField = match flags.init.as_deref() {
            Some(s) => s.parse().unwrap_or_else(|e| {
                c.0.push(format!("--init: {e}"));
                InitialField::RadialBump
            }),
            None if grid == GridKind::Radial => InitialField::RadialBump,
            None => InitialField::OffsetBump,
        };
        let phase = flags.phase.clone().unwrap_or_else(|| "ones".into());
        let shape = flags.shape.clone().unwrap_or_else(|| format!("ball:{}", 0.5 * radius));
        let shapes: Vec<String> = match &flags.shapes {
            Some(s) => s.split(';').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
            None => vec![shape.clone()],
        };
        let seed: Vec<u64> = c.list("seed", &flags.seed, vec![0]);
        let trials: usize = c.get("trials", &flags.trials, 1000);
        let t_max: f64 = c.get("t-max", &flags.t_max, 20.0);
        let out = flags.out.clone().unwrap_or_else(|| PathBuf::from("out"));

        c.require(n == 2 || n == 3, format!("--n: must be 2 or 3, got {n}"));
        c.require(radius > 0.0 && radius.is_finite(), format!("--R: must be positive, got {radius}"));
        c.require(!(n == 3 && grid == GridKind::Cartesian), "--grid: Cartesian grids are two-dimensional");
        c.require(Potential::by_name(&potential).is_ok(), format!("--potential: unknown potential {potential:?}"));
        c.require(eps.iter().all(|e| *e > 0.0 && e.is_finite()), "--eps: values must be positive");
        c.require(!eps.is_empty() || flags.eps.is_none(), "--eps: empty list");
        c.require(gamma.iter().all(|g| *g >= 0.0 && g.is_finite()), "--gamma: values must be non-negative");
        c.require(m > 0.0 && m < 1.0, format!("--m: must lie in (0, 1), got {m}"));
        c.require(delta > 0.0 && delta < 0.5, format!("--delta: must lie in (0, 1/2), got {delta}"));
        c.require(eig_tol > 0.0 && eig_tol <= 1e-4, format!("--eig-tol: must lie in (0, 1e-4], got {eig_tol}"));
        c.require(tol > 0.0, format!("--tol: must be positive, got {tol}"));
        c.require(max_iter > 0, "--max-iter: must be positive");
        c.require(!seed.is_empty(), "--seed: at least one seed required");
        c.require(trials > 0, "--trials: must be positive");
        c.require(t_max >= 20.0, format!("--t-max: must be at least 20, got {t_max}"));
        if n == 2 || n == 3 {
            if let Err(e) = CoefficientFamily::new(n, beta_bar, kappa_used, c_half) {
                c.0.push(format!("coefficient family: {e}"));
            }
        }
        let single = matches!(command, Command::Eig | Command::Energy | Command::Minimize);
        c.require(!single || eps.len() <= 1, "--eps: this subcommand takes a single value");
        c.require(!single || gamma.len() <= 1, "--gamma: this subcommand takes a single value");
        if matches!(command, Command::SharpEig | Command::GammaCheck) {
            if let Err(e) = SharpShape::parse(&shape) {
                c.0.push(format!("--shape: {e}"));
            }
        }
        if command == Command::FkCompare {
            for s in &shapes {
                if let Err(e) = SharpShape::parse(s) {
                    c.0.push(format!("--shapes: {s:?}: {e}"));
                }
            }
        }
        if command == Command::GammaCheck {
            c.require(eps.windows(2).all(|w| w[1] < w[0]), "--eps: list must be strictly decreasing");
        }
        if !c.0.is_empty() {
            return Err(c.0);
        }
        Ok(Self {
            command,
            n,
            radius,
            grid,
            resolution,
            potential,
            beta_bar,
            kappa_used,
            c_half,
            eps,
            gamma,
            m,
            delta,
            eig_tol,
            tol,
            max_iter,
            init,
            phase,
            shape,
            shapes,
            seed,
            trials,
            t_max,
            out,
        })
    }

    pub fn domain(&self) -> faber_phase::Result<BallDomain> {
        BallDomain::new(self.n, self.radius)
    }

    pub fn build_grid(&self) -> faber_phase::Result<Arc<Grid>> {
        match self.grid {
            GridKind::Cartesian => Grid::cartesian(self.domain()?, self.resolution),
            GridKind::Radial => Grid::radial(self.domain()?, self.resolution),
        }
    }

    pub fn family(&self) -> faber_phase::Result<CoefficientFamily> {
        CoefficientFamily::new(self.n, self.beta_bar, self.kappa_used, self.c_half)
    }

    pub fn potential(&self) -> faber_phase::Result<Potential> {
        Potential::by_name(&self.potential)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let map = parse_config("# comment\neps = 0.02\n\n gamma=0.1 # trailing\n").unwrap();
        assert_eq!(map["eps"], "0.02");
        assert_eq!(map["gamma"], "0.1");
        let errors = parse_config("foo = 1\nnonsense\n").unwrap_err();
        assert_eq!(errors.len(), 2);
    }

    #[test]
    fn flags_override_file() {
        let map = parse_config("eps = 0.02\nm = 0.3\n").unwrap();
        let flags = Flags { eps: Some("0.04".into()), ..Flags::default() }.merge(&map);
        let s = Settings::resolve(Command::Energy, &flags).unwrap();
        assert_eq!(s.eps, vec![0.04]);
        assert_eq!(s.m, 0.3);
    }

    #[test]
    fn aggregated_errors() {
        let flags = Flags {
            m: Some("1.5".into()),
            eps: Some("-1".into()),
            n: Some("4".into()),
            ..Flags::default()
        };
        let errors = Settings::resolve(Command::Eig, &flags).unwrap_err();
        assert!(errors.len() >= 3, "{errors:?}");
    }
}
