//! Optimal transition profile `eta' = sqrt(2 psi(eta))`, `eta(0) = 1/2`,
//! the interpolated profile `rho_eps`, recovery sequences for parametric
//! shapes, and the sharp-interface limit checks built on them.

use std::sync::Arc;

use serde::Serialize;

use crate::coefficient::CoefficientFamily;
use crate::eigen::{assemble, principal_eigenpair, sharp_eigenvalue};
use crate::error::{invalid, Error, Result};
use crate::grid::{weighted_sum, Grid, ScalarField};
use crate::objective::gl_energy;
use crate::potential::Potential;
use crate::shape::SharpShape;

pub const STEP: f64 = 1e-3;
/// Distance to 0 or 1 at which the solution is frozen.
pub const FREEZE: f64 = 1e-12;
pub const MIN_T_MAX: f64 = 20.0;
/// Tail samples with `1e-10 < dist < TAIL_START` enter the exponential fit.
const TAIL_START: f64 = 1e-2;
const TAIL_END: f64 = 1e-10;

/// Exponential approach `dist(t) ~ c exp(-a |t|)` to an endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tail {
    pub c: f64,
    pub a: f64,
    /// Largest relative deviation of the fit on the samples it was fitted to.
    pub residual: f64,
}

/// How the profile reaches one of the values 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Approach {
    /// Reached at a finite time.
    Hits(f64),
    Asymptotic(Tail),
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileSolution {
    pub potential: String,
    pub step: f64,
    pub t_max: f64,
    /// Samples at `t_k = -t_max + k step`.
    pub eta: Vec<f64>,
    pub to_zero: Approach,
    pub to_one: Approach,
    #[serde(skip)]
    psi: Potential,
}

fn rhs(psi: &Potential, eta: f64) -> f64 {
    (2.0 * psi.psi_unchecked(eta.clamp(0.0, 1.0)).max(0.0)).sqrt()
}

/// One direction of integration from `t = 0`; returns the samples and the
/// freezing time if any.
fn integrate(psi: &Potential, t_max: f64, forward: bool) -> (Vec<f64>, Option<f64>) {
    let steps = (t_max / STEP).round() as usize;
    let sign = if forward { 1.0 } else { -1.0 };
    let target = if forward { 1.0 } else { 0.0 };
    let h = sign * STEP;
    let f = |y: f64| sign * sign * rhs(psi, y);
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = 0.5;
    out.push(y);
    let mut frozen_at = None;
    for k in 0..steps {
        if frozen_at.is_some() {
            out.push(target);
            continue;
        }
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        let next = (y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, 1.0);
        if (next - target).abs() <= FREEZE {
            frozen_at = Some(hitting_time(psi, k as f64 * STEP, (y - target).abs(), forward));
            y = target;
        } else {
            y = next;
        }
        out.push(y);
    }
    (out, frozen_at)
}

/// Time of arrival from distance `dist` at `|t| = t`, using the local model
/// `psi ~ |psi'(end)| dist`, for which `sqrt(dist)` decreases linearly.
fn hitting_time(psi: &Potential, t: f64, dist: f64, forward: bool) -> f64 {
    let slope = psi.endpoint_slope(forward).abs();
    if slope > 0.0 {
        t + (2.0 * dist / slope).sqrt()
    } else {
        t + STEP
    }
}

/// Least-squares fit of `log dist = log c - a t` on the tail samples.
fn fit_tail(times: &[f64], dists: &[f64]) -> Option<Tail> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(dists)
        .filter(|(_, d)| **d < TAIL_START && **d > TAIL_END)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    if pts.len() < 10 {
        return None;
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    let slope = sxy / sxx;
    let log_c = my - slope * mt;
    let residual = pts
        .iter()
        .map(|(t, y)| ((log_c + slope * t - y).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    Some(Tail {
        c: log_c.exp(),
        a: -slope,
        residual,
    })
}

/// Integrates the profile equation on `[-t_max, t_max]` by RK4.
pub fn solve_profile(psi: &Potential, t_max: f64) -> Result<ProfileSolution> {
    if !(t_max >= MIN_T_MAX && t_max.is_finite()) {
        return Err(invalid("t-max", format!("must be at least {MIN_T_MAX}, got {t_max}")));
    }
    let (up, hit_one) = integrate(psi, t_max, true);
    let (down, hit_zero) = integrate(psi, t_max, false);
    let times: Vec<f64> = (0..up.len()).map(|k| k as f64 * STEP).collect();
    let approach = |hit: Option<f64>, dists: Vec<f64>| -> Result<Approach> {
        match hit {
            Some(t) => Ok(Approach::Hits(t)),
            None => fit_tail(&times, &dists).map(Approach::Asymptotic).ok_or_else(|| {
                Error::InvalidPotential("profile neither reaches the endpoint nor decays".into())
            }),
        }
    };
    let to_one = approach(hit_one, up.iter().map(|v| 1.0 - v).collect())?;
    let to_zero = approach(hit_zero.map(|t| -t), down.clone())?;
    let mut eta: Vec<f64> = down.into_iter().skip(1).rev().collect();
    eta.extend(up);
    Ok(ProfileSolution {
        potential: psi.name().to_string(),
        step: STEP,
        t_max,
        eta,
        to_zero,
        to_one,
        psi: psi.clone(),
    })
}

impl ProfileSolution {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.eta.len()).map(move |k| -self.t_max + k as f64 * self.step)
    }

    pub fn derivative_of(&self, eta: f64) -> f64 {
        rhs(&self.psi, eta)
    }

    /// `eta(t)` for any real `t`: cubic Hermite between samples, the frozen
    /// value or the fitted tail beyond them.
    pub fn eval(&self, t: f64) -> f64 {
        if let Approach::Hits(t1) = self.to_one {
            if t >= t1 {
                return 1.0;
            }
        }
        if let Approach::Hits(t0) = self.to_zero {
            if t <= t0 {
                return 0.0;
            }
        }
        if t >= self.t_max {
            return match self.to_one {
                Approach::Asymptotic(tail) => 1.0 - tail.c * (-tail.a * t).exp(),
                Approach::Hits(_) => 1.0,
            };
        }
        if t <= -self.t_max {
            return match self.to_zero {
                Approach::Asymptotic(tail) => tail.c * (tail.a * t).exp(),
                Approach::Hits(_) => 0.0,
            };
        }
        let x = (t + self.t_max) / self.step;
        let k = (x.floor() as usize).min(self.eta.len() - 2);
        let s = x - k as f64;
        let (y0, y1) = (self.eta[k], self.eta[k + 1]);
        let (d0, d1) = (self.derivative_of(y0) * self.step, self.derivative_of(y1) * self.step);
        let (s2, s3) = (s * s, s * s * s);
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1;
        v.clamp(y0.min(y1), y0.max(y1))
    }

    /// `(t, eta)` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,eta\n");
        for (t, e) in self.times().zip(&self.eta) {
            out.push_str(&format!("{t:.6},{e:.15e}\n"));
        }
        out
    }
}

/// The interpolated profile `rho_eps(t)` of a signed distance `t`.
pub fn profile_rho(sol: &ProfileSolution, eps: f64, t: f64) -> f64 {
    let r = eps.sqrt();
    if t > 2.0 * r {
        1.0
    } else if t >= r {
        1.0 + (1.0 - sol.eval(1.0 / r)) * (t - 2.0 * r) / r
    } else if t >= -r {
        sol.eval(t / eps)
    } else if t >= -2.0 * r {
        sol.eval(-1.0 / r) * (t + 2.0 * r) / r
    } else {
        0.0
    }
}

/// `phi_eps(x) = rho_eps(sd(x))`. The support of the transition must stay
/// `2 sqrt(eps)` away from the domain boundary, and the boundary layer is
/// set to zero.
pub fn recovery_sequence(shape: &SharpShape, eps: f64, grid: &Arc<Grid>, sol: &ProfileSolution) -> Result<ScalarField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    let domain = grid.domain();
    shape.validate(domain)?;
    if matches!(grid.as_ref(), Grid::Radial(_)) && !shape.is_radial() {
        return Err(Error::Unsupported(format!("{shape} on a radial grid")));
    }
    let required = 2.0 * eps.sqrt() + grid.spacing();
    let clearance = shape.clearance(domain);
    if clearance < required {
        return Err(Error::ShapeTooClose { clearance, required });
    }
    let values = (0..grid.len())
        .map(|i| {
            if grid.is_boundary_layer(i) {
                0.0
            } else {
                profile_rho(sol, eps, shape.signed_distance(grid.point(i)))
            }
        })
        .collect();
    ScalarField::new(grid.clone(), values)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaRow {
    pub eps: f64,
    pub energy: f64,
    /// `c0 P(E)`.
    pub energy_limit: f64,
    /// `|gamma E - gamma c0 P| / (gamma c0 P)`.
    pub energy_gap: f64,
    pub lambda_eps: f64,
    pub lambda_zero: f64,
    /// `(lambda_eps - lambda_zero) / lambda_zero`.
    pub eigen_gap: f64,
    /// `sum w_i b(phi_i) u_i^2`.
    pub penalty: f64,
    /// `||phi_eps - chi_E||_{L^1}`.
    pub l1_error: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub shape: String,
    pub gamma: f64,
    pub rows: Vec<GammaRow>,
    /// Log-log slope of the `L^1` error against `eps`.
    pub l1_rate: Option<f64>,
    pub eigen_gap_decreasing: bool,
    pub penalty_decreasing: bool,
}

impl GammaReport {
    pub const CSV_HEADER: &'static str =
        "eps,energy,energy_limit,energy_gap,lambda_eps,lambda_zero,eigen_gap,penalty,l1_error,mass";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.10e},{:.10e},{:.6e},{:.10e},{:.10e},{:.6e},{:.6e},{:.6e},{:.10e}\n",
                r.eps,
                r.energy,
                r.energy_limit,
                r.energy_gap,
                r.lambda_eps,
                r.lambda_zero,
                r.eigen_gap,
                r.penalty,
                r.l1_error,
                r.mass
            ));
        }
        out
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}

/// Evaluates the recovery sequence of `shape` along `eps_list` against the
/// sharp-interface functional.
pub fn gamma_check(
    shape: &SharpShape,
    eps_list: &[f64],
    grid: &Arc<Grid>,
    gamma: f64,
    psi: &Potential,
    family: &CoefficientFamily,
    tol: f64,
) -> Result<GammaReport> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("eps", "list must be non-empty and strictly decreasing"));
    }
    let sol = solve_profile(psi, MIN_T_MAX)?;
    let domain = grid.domain();
    let energy_limit = psi.c0() * shape.relative_perimeter(domain);
    let lambda_zero = sharp_eigenvalue(grid, shape, tol)?.lambda;
    let chi = ScalarField::from_fn(grid.clone(), |p| shape.contains(p) as u8 as f64)?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let phi = recovery_sequence(shape, eps, grid, &sol)?;
        let energy = gl_energy(&phi, eps, psi)?.total;
        let op = assemble(&phi, family, eps)?;
        let pair = principal_eigenpair(&op, tol)?;
        let b = family.at(eps);
        let u = pair.eigenfunction.values();
        let integrand: Vec<f64> = phi.values().iter().zip(u).map(|(&s, &w)| b.value(s) * w * w).collect();
        let diff: Vec<f64> = phi.values().iter().zip(chi.values()).map(|(a, b)| (a - b).abs()).collect();
        rows.push(GammaRow {
            eps,
            energy,
            energy_limit,
            energy_gap: (gamma * energy - gamma * energy_limit).abs() / (gamma * energy_limit),
            lambda_eps: pair.lambda,
            lambda_zero,
            eigen_gap: (pair.lambda - lambda_zero) / lambda_zero,
            penalty: weighted_sum(grid.weights(), &integrand),
            l1_error: weighted_sum(grid.weights(), &diff),
            mass: phi.weighted_mean(),
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let l1: Vec<f64> = rows.iter().map(|r| r.l1_error).collect();
    Ok(GammaReport {
        shape: shape.to_string(),
        gamma,
        l1_rate: log_log_slope(&eps, &l1),
        eigen_gap_decreasing: rows.windows(2).all(|w| w[1].eigen_gap.abs() <= w[0].eigen_gap.abs()),
        penalty_decreasing: rows.windows(2).all(|w| w[1].penalty <= w[0].penalty),
        rows,
    })
}
