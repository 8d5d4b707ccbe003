//! The interpolation family `b^eps(s) = beta(1 - s) / (1 + (beta / c) s)`
//! with `beta = beta_bar * eps^(-kappa)`.
//!
//! Each member is continuous, strictly decreasing from `beta` to 0 on
//! `[0, 1]`, increases as `eps` decreases, and tends pointwise to
//! `b0(s) = c (1 - s) / s`, so that `b0(1/2) = c` is finite.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientFamily {
    dim: usize,
    beta_bar: f64,
    kappa_used: f64,
    c_half: f64,
}

/// Value of the sharp-interface limit `b0`; infinite at `s = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitValue {
    Finite(f64),
    Infinite,
}

impl CoefficientFamily {
    /// Default constants for a domain of radius `radius`: `beta_bar = 1`,
    /// `kappa = 1/2`, `c = 10 / R^2`.
    pub fn default_for(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, 1.0, 0.5, 10.0 / (radius * radius))
    }

    pub fn new(dim: usize, beta_bar: f64, kappa_used: f64, c_half: f64) -> Result<Self> {
        if !(beta_bar > 0.0 && beta_bar.is_finite()) {
            return Err(invalid("beta-bar", format!("must be positive, got {beta_bar}")));
        }
        if !(c_half > 0.0 && c_half.is_finite()) {
            return Err(invalid("c-half", format!("must be positive, got {c_half}")));
        }
        // beta = o(eps^-kappa) requires kappa_used < kappa_max; beta -> inf
        // requires kappa_used > 0.
        let kappa_max = match dim {
            2 => 1.0,
            3 => 2.0 / 3.0,
            _ => return Err(invalid("n", format!("dimension must be 2 or 3, got {dim}"))),
        };
        if !(kappa_used > 0.0 && kappa_used < kappa_max) {
            return Err(Error::InvalidCoefficient(format!(
                "kappa_used = {kappa_used} must lie in (0, {kappa_max}) for n = {dim}"
            )));
        }
        Ok(Self {
            dim,
            beta_bar,
            kappa_used,
            c_half,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta_bar(&self) -> f64 {
        self.beta_bar
    }

    pub fn kappa_used(&self) -> f64 {
        self.kappa_used
    }

    pub fn c_half(&self) -> f64 {
        self.c_half
    }

    fn check_eps(eps: f64) -> Result<()> {
        if eps > 0.0 && eps.is_finite() {
            Ok(())
        } else {
            Err(invalid("eps", format!("must be positive, got {eps}")))
        }
    }

    pub fn beta(&self, eps: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        Ok(self.beta_unchecked(eps))
    }

    fn beta_unchecked(&self, eps: f64) -> f64 {
        self.beta_bar * eps.powf(-self.kappa_used)
    }

    pub fn b_eps(&self, eps: f64, s: f64) -> Result<f64> {
        Self::check_eps(eps)?;
        if !(0.0..=1.0).contains(&s) {
            return Err(invalid("s", format!("argument {s} outside [0, 1]")));
        }
        Ok(self.at(eps).value(s))
    }

    /// The member for a fixed `eps`, for evaluation in loops.
    pub fn at(&self, eps: f64) -> Coefficient {
        let beta = self.beta_unchecked(eps);
        Coefficient {
            beta,
            ratio: beta / self.c_half,
        }
    }

    pub fn b_zero(&self, s: f64) -> LimitValue {
        if s <= 0.0 {
            LimitValue::Infinite
        } else {
            LimitValue::Finite(self.c_half * (1.0 - s) / s)
        }
    }
}

/// `b^eps` for one fixed `eps`.
#[derive(Debug, Clone, Copy)]
pub struct Coefficient {
    beta: f64,
    ratio: f64,
}

impl Coefficient {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn value(&self, s: f64) -> f64 {
        self.beta * (1.0 - s) / (1.0 + self.ratio * s)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let d = 1.0 + self.ratio * s;
        -self.beta * (1.0 + self.ratio) / (d * d)
    }
}

/// Outcome of sampling the structural assumptions on the potential and the
/// coefficient family.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Samples every structural property of the family: endpoint values,
/// strict decrease on a 1000-point grid, monotonicity in `eps`, growth of
/// `beta` and finiteness of `b0(1/2)`.
pub fn check_family(family: &CoefficientFamily, eps_samples: &[f64]) -> Vec<AssumptionCheck> {
    let s_grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    let mut out = Vec::new();

    let mut endpoint_ok = true;
    let mut decreasing_ok = true;
    for &eps in eps_samples {
        let b = family.at(eps);
        endpoint_ok &= b.value(1.0) == 0.0 && (b.value(0.0) - b.beta()).abs() <= 1e-12 * b.beta();
        decreasing_ok &= s_grid.windows(2).all(|w| b.value(w[0]) > b.value(w[1]));
    }
    out.push(AssumptionCheck {
        name: "endpoints b(0)=beta, b(1)=0".into(),
        passed: endpoint_ok,
        detail: format!("{} eps samples", eps_samples.len()),
    });
    out.push(AssumptionCheck {
        name: "strictly decreasing in s".into(),
        passed: decreasing_ok,
        detail: format!("{} s samples", s_grid.len()),
    });

    let mut sorted = eps_samples.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let monotone = sorted.windows(2).all(|w| {
        let (coarse, fine) = (family.at(w[0]), family.at(w[1]));
        s_grid.iter().all(|&s| fine.value(s) >= coarse.value(s))
    });
    out.push(AssumptionCheck {
        name: "b^delta >= b^eps for delta <= eps".into(),
        passed: monotone,
        detail: format!("eps samples {sorted:?}"),
    });

    let growth = sorted.windows(2).all(|w| family.at(w[1]).beta() > family.at(w[0]).beta());
    let kappa_max = if family.dim() == 2 { 1.0 } else { 2.0 / 3.0 };
    out.push(AssumptionCheck {
        name: "beta -> inf, beta = o(eps^-kappa)".into(),
        passed: growth && family.kappa_used() < kappa_max,
        detail: format!("kappa_used {} < {kappa_max}", family.kappa_used()),
    });

    let half = family.b_zero(0.5);
    out.push(AssumptionCheck {
        name: "b0(1/2) finite".into(),
        passed: matches!(half, LimitValue::Finite(v) if v.is_finite()),
        detail: format!("{half:?}"),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family() -> CoefficientFamily {
        CoefficientFamily::new(2, 1.0, 0.5, 10.0).unwrap()
    }

    #[test]
    fn beta_schedule() {
        let f = family();
        assert!((f.beta(0.01).unwrap() - 10.0).abs() < 1e-12);
        let b: Vec<f64> = [0.1, 0.01, 0.001].iter().map(|&e| f.beta(e).unwrap()).collect();
        assert!(b[0] < b[1] && b[1] < b[2]);
        let ratios: Vec<f64> = (1..8)
            .map(|k| {
                let eps = 10f64.powi(-k);
                f.beta(eps).unwrap() / eps.powf(-0.9)
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
        assert!(*ratios.last().unwrap() < 1e-2);
        assert!(f.beta(0.0).is_err());
    }

    #[test]
    fn endpoint_values() {
        let f = family();
        assert_eq!(f.b_eps(0.05, 1.0).unwrap(), 0.0);
        assert!((f.b_eps(0.05, 0.0).unwrap() - f.beta(0.05).unwrap()).abs() < 1e-12);
        assert!(f.b_eps(0.05, 1.5).is_err());
    }

    #[test]
    fn pointwise_limit_at_half() {
        // beta(1-s)/(1+beta s/c) -> c(1-s)/s
        let f = family();
        // relative gap is c / (beta s) = 2e-3 at eps = 1e-8
        let v = f.b_eps(1e-8, 0.5).unwrap();
        assert!((v - 10.0).abs() / 10.0 < 1e-2, "{v}");
        assert_eq!(f.b_zero(0.5), LimitValue::Finite(10.0));
        assert_eq!(f.b_zero(1.0), LimitValue::Finite(0.0));
        assert_eq!(f.b_zero(0.0), LimitValue::Infinite);
    }

    #[test]
    fn monotone_convergence_and_strict_decrease() {
        let f = family();
        let eps = [0.1, 0.05, 0.01, 0.005];
        for k in 1..=1000 {
            let s = k as f64 / 1000.0;
            let LimitValue::Finite(limit) = f.b_zero(s) else { panic!() };
            let vals: Vec<f64> = eps.iter().map(|&e| f.b_eps(e, s).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            assert!(vals.iter().all(|&v| v <= limit + 1e-12));
        }
        assert!(check_family(&f, &eps).iter().all(|c| c.passed));
    }

    #[test]
    fn derivative_matches_difference() {
        let b = family().at(0.02);
        for k in 1..100 {
            let s = k as f64 / 100.0;
            let fd = (b.value(s + 1e-6) - b.value(s - 1e-6)) / 2e-6;
            assert!((b.derivative(s) - fd).abs() < 1e-6 * b.beta());
            assert!(b.derivative(s) < 0.0);
        }
    }

    #[test]
    fn rejects_inadmissible_exponents() {
        assert!(CoefficientFamily::new(2, 1.0, 1.0, 10.0).is_err());
        assert!(CoefficientFamily::new(3, 1.0, 0.7, 10.0).is_err());
        assert!(CoefficientFamily::new(3, 1.0, 0.5, 10.0).is_ok());
        assert!(CoefficientFamily::new(2, 1.0, 0.0, 10.0).is_err());
        assert!(CoefficientFamily::new(2, -1.0, 0.5, 10.0).is_err());
    }
}
