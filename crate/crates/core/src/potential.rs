//! Double-well type potentials on `[0, 1]` and the quantities derived from
//! them: the primitive `Psi(s) = int_0^s sqrt(2 psi)`, the surface tension
//! constant `c0 = Psi(1)` and the interface lower bound `alpha_delta`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

const SIMPSON_PANELS: usize = 10_000;
const VALIDATION_SAMPLES: usize = 10_000;

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    DoubleWell,
    DoubleObstacle,
    Custom {
        name: String,
        psi: Evaluator,
        dpsi: Evaluator,
    },
}

/// A potential `psi` restricted to `[0, 1]`, validated at construction.
#[derive(Clone)]
pub struct Potential {
    kind: Kind,
    c0: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name())
            .field("c0", &self.c0)
            .finish()
    }
}

impl Potential {
    /// `psi(s) = s^2 (1 - s)^2 / 4`.
    pub fn double_well() -> Self {
        Self::build(Kind::DoubleWell).expect("built-in potential is valid")
    }

    /// `psi(s) = s (1 - s) / 2` on `[0, 1]`; `+inf` outside, which the box
    /// constraint keeps out of reach.
    pub fn double_obstacle() -> Self {
        Self::build(Kind::DoubleObstacle).expect("built-in potential is valid")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "double-well" => Ok(Self::double_well()),
            "double-obstacle" => Ok(Self::double_obstacle()),
            other => Err(invalid(
                "potential",
                format!("unknown potential `{other}` (expected double-well or double-obstacle)"),
            )),
        }
    }

    /// A user supplied potential with its derivative. Rejected unless it
    /// vanishes exactly at 0 and 1, is positive in between and each minimum
    /// is non-degenerate (`psi' != 0`, or `psi' = 0 < psi''`).
    pub fn custom(
        name: impl Into<String>,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dpsi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::build(Kind::Custom {
            name: name.into(),
            psi: Arc::new(psi),
            dpsi: Arc::new(dpsi),
        })
    }

    fn build(kind: Kind) -> Result<Self> {
        let mut p = Self { kind, c0: 0.0 };
        p.validate()?;
        p.c0 = p.integrate_root(1.0);
        if !(p.c0 > 0.0) {
            return Err(Error::InvalidPotential("c0 must be positive".into()));
        }
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let (v0, v1) = (self.eval(0.0), self.eval(1.0));
        if v0 != 0.0 || v1 != 0.0 {
            return Err(Error::InvalidPotential(format!(
                "psi(0) = {v0}, psi(1) = {v1}; both must vanish"
            )));
        }
        for k in 1..VALIDATION_SAMPLES {
            let s = k as f64 / VALIDATION_SAMPLES as f64;
            let v = self.eval(s);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidPotential(format!(
                    "psi({s}) = {v}; must be positive and finite on (0, 1)"
                )));
            }
        }
        for (end, label) in [(0.0, "0"), (1.0, "1")] {
            let slope = self.eval_derivative(end);
            if slope.abs() > 1e-12 {
                continue;
            }
            if !(self.second_derivative(end) > 1e-8) {
                return Err(Error::InvalidPotential(format!(
                    "degenerate minimum at s = {label}: psi' = 0 and psi'' is not positive"
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            Kind::DoubleWell => "double-well",
            Kind::DoubleObstacle => "double-obstacle",
            Kind::Custom { name, .. } => name,
        }
    }

    fn eval(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::DoubleWell => 0.25 * s * s * (1.0 - s) * (1.0 - s),
            Kind::DoubleObstacle => 0.5 * s * (1.0 - s),
            Kind::Custom { psi, .. } => psi(s),
        }
    }

    fn eval_derivative(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::DoubleWell => 0.5 * s * (1.0 - s) * (1.0 - 2.0 * s),
            Kind::DoubleObstacle => 0.5 - s,
            Kind::Custom { dpsi, .. } => dpsi(s),
        }
    }

    fn second_derivative(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::DoubleWell => 0.5 * (1.0 - 6.0 * s + 6.0 * s * s),
            Kind::DoubleObstacle => -1.0,
            Kind::Custom { dpsi, .. } => {
                // one-sided at the endpoints
                let h = 1e-5;
                if s < 0.5 {
                    (dpsi(s + h) - dpsi(s)) / h
                } else {
                    (dpsi(s) - dpsi(s - h)) / h
                }
            }
        }
    }

    fn check_unit(s: f64) -> Result<()> {
        if (0.0..=1.0).contains(&s) {
            Ok(())
        } else {
            Err(invalid("s", format!("argument {s} outside [0, 1]")))
        }
    }

    pub fn psi(&self, s: f64) -> Result<f64> {
        Self::check_unit(s)?;
        Ok(self.eval(s))
    }

    pub fn dpsi(&self, s: f64) -> Result<f64> {
        Self::check_unit(s)?;
        Ok(self.eval_derivative(s))
    }

    /// Unchecked evaluation for hot loops over box-constrained fields.
    pub(crate) fn psi_unchecked(&self, s: f64) -> f64 {
        self.eval(s)
    }

    pub(crate) fn dpsi_unchecked(&self, s: f64) -> f64 {
        self.eval_derivative(s)
    }

    fn root(&self, s: f64) -> f64 {
        (2.0 * self.eval(s).max(0.0)).sqrt()
    }

    fn integrate_root(&self, upper: f64) -> f64 {
        if upper == 0.0 {
            return 0.0;
        }
        let n = SIMPSON_PANELS;
        let h = upper / n as f64;
        let mut acc = self.root(0.0) + self.root(upper);
        for k in 1..n {
            let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += weight * self.root(k as f64 * h);
        }
        acc * h / 3.0
    }

    /// `Psi(s) = int_0^s sqrt(2 psi(t)) dt`, composite Simpson.
    pub fn big_psi(&self, s: f64) -> Result<f64> {
        Self::check_unit(s)?;
        if s == 1.0 {
            return Ok(self.c0);
        }
        Ok(self.integrate_root(s))
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Minimum of `psi` over `[delta, 1 - delta]`, by a dense scan that
    /// includes both endpoints.
    pub fn alpha_delta(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(invalid("delta", format!("must lie in (0, 1/2), got {delta}")));
        }
        let (a, b) = (delta, 1.0 - delta);
        let n = VALIDATION_SAMPLES;
        let min = (0..=n)
            .map(|k| self.eval(a + (b - a) * k as f64 / n as f64))
            .fold(f64::INFINITY, f64::min);
        Ok(min)
    }

    /// Slope at an endpoint; zero means the profile only approaches that
    /// value asymptotically.
    pub fn endpoint_slope(&self, at_one: bool) -> f64 {
        self.eval_derivative(if at_one { 1.0 } else { 0.0 })
    }
}
