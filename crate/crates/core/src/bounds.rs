//! Total-variation bounds from an arbitrary starting state.
//!
//! With a strictly monotone eigenfunction `f` (eigenvalue `λ`) and the unique
//! minimal element `0 = (0, ..., 0, N)`:
//!
//! ```text
//! |f(x)| / (2 c2) · λ^n  <=  ||K^n_x - π||_TV  <=  (f(x) - 2 f(0)) / c1 · λ^n
//! ```
//!
//! where `c1` is the smallest increment of `f` along the order and `c2` its
//! sup norm. Where the stationary law is known in closed form the crude
//! spectral bound `λ^n / (2 sqrt(π(x)))` is reported alongside.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::kernels::ModelSpec;
use crate::spectral::{model_eigendata, EigenData};
use crate::statespace::Composition;

/// Coefficients of `λ^n` in the lower and upper bounds.
pub fn tv_bound_coefficients(ed: &EigenData, x: &Composition) -> (f64, f64) {
    let fx = ed.eval(x);
    (fx.abs() / (2.0 * ed.c2), (fx - 2.0 * ed.f0) / ed.c1)
}

/// Smallest `n >= 0` with `coeff · λ^n <= ε`.
pub fn steps_to_epsilon(coeff: f64, lambda: f64, epsilon: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Domain(format!("λ = {lambda} is not in [0, 1)")));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Domain(format!("ε = {epsilon} must be positive")));
    }
    if !coeff.is_finite() {
        return Err(Error::Domain(format!("coefficient {coeff} is not finite")));
    }
    if coeff <= epsilon {
        return Ok(0);
    }
    if lambda == 0.0 {
        return Ok(1);
    }
    let below = |n: u64| coeff * lambda.powf(n as f64) <= epsilon;
    let mut n = ((coeff / epsilon).ln() / -lambda.ln()).ceil().max(0.0) as u64;
    while n > 0 && below(n - 1) {
        n -= 1;
    }
    while !below(n) {
        n += 1;
    }
    Ok(n)
}

fn ln_choose_real(top: f64, k: f64) -> f64 {
    ln_gamma(top + 1.0) - ln_gamma(k + 1.0) - ln_gamma(top - k + 1.0)
}

/// Log of the Dirichlet-multinomial pmf with `N = sum(x)`:
/// `sum_i log C(x_i + α_i - 1, x_i) - log C(N + |α| - 1, N)`.
pub fn dm_log_pmf(x: &[u32], alpha: &[f64]) -> f64 {
    assert_eq!(x.len(), alpha.len(), "dm_log_pmf: length mismatch");
    let n: f64 = x.iter().map(|&c| c as f64).sum();
    let total: f64 = alpha.iter().sum();
    let num: f64 = x
        .iter()
        .zip(alpha)
        .map(|(&xi, &ai)| ln_choose_real(xi as f64 + ai - 1.0, xi as f64))
        .sum();
    num - ln_choose_real(n + total - 1.0, n)
}

/// Log of the multinomial pmf: `log C(N; x) + sum_i x_i log p_i`.
pub fn multinomial_log_pmf(x: &[u32], p: &[f64]) -> f64 {
    assert_eq!(x.len(), p.len(), "multinomial_log_pmf: length mismatch");
    let n: f64 = x.iter().map(|&c| c as f64).sum();
    let coeff = ln_gamma(n + 1.0) - x.iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>();
    let pw: f64 = x
        .iter()
        .zip(p)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &pi)| c as f64 * pi.ln())
        .sum();
    coeff + pw
}

/// Known closed-form stationary law of a model.
#[derive(Clone, Debug, PartialEq)]
pub enum StationaryLaw {
    DirichletMultinomial(Vec<f64>),
    Multinomial(Vec<f64>),
}

impl StationaryLaw {
    pub fn log_pmf(&self, x: &[u32]) -> f64 {
        match self {
            StationaryLaw::DirichletMultinomial(a) => dm_log_pmf(x, a),
            StationaryLaw::Multinomial(p) => multinomial_log_pmf(x, p),
        }
    }
}

/// The closed-form stationary law, when one is known.
///
/// Pólya chains of all three orders share `DM(N, α)`; the standard Moran
/// chain has `DM(N, α)` with `α_i = N m p_i / (1 - m)` (multinomial at
/// `m = 1`, where every birth is a fresh draw from `p`).
pub fn stationary_law(spec: &ModelSpec) -> Option<StationaryLaw> {
    match spec {
        ModelSpec::MoranGeneral { .. } => None,
        ModelSpec::MoranStandard { n, m, p } => {
            if *m < 1.0 {
                let scale = *n as f64 * m / (1.0 - m);
                Some(StationaryLaw::DirichletMultinomial(
                    p.iter().map(|pi| scale * pi).collect(),
                ))
            } else {
                Some(StationaryLaw::Multinomial(p.clone()))
            }
        }
        ModelSpec::Polya { alpha, .. } => Some(StationaryLaw::DirichletMultinomial(alpha.clone())),
        ModelSpec::Ehrenfest { p, .. } => Some(StationaryLaw::Multinomial(p.clone())),
    }
}

/// `1 / (2 sqrt(π(x)))`, evaluated in log space.
pub fn crude_bound(spec: &ModelSpec, x: &Composition) -> Result<f64> {
    spec.check_state(x)?;
    let law = stationary_law(spec).ok_or_else(|| {
        Error::CrudeUnavailable(format!(
            "no closed-form stationary law for {}",
            spec.family()
        ))
    })?;
    Ok(crude_from_log_pmf(law.log_pmf(x.counts())))
}

pub(crate) fn crude_from_log_pmf(log_pi: f64) -> f64 {
    (-0.5 * log_pi - std::f64::consts::LN_2).exp()
}

/// Bound coefficients and step counts for one model and start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lambda: f64,
    pub lower_coeff: f64,
    pub upper_coeff: f64,
    pub crude_coeff: Option<f64>,
    pub epsilon: f64,
    pub steps_necessary: u64,
    pub steps_sufficient: u64,
    pub steps_crude: Option<u64>,
}

/// Assembles the eigen data, both coefficients, the crude coefficient where
/// available and the three step counts.
pub fn bound_report(spec: &ModelSpec, x: &Composition, epsilon: f64) -> Result<BoundReport> {
    spec.check_state(x)?;
    let ed = model_eigendata(spec)?;
    let (lower, upper) = tv_bound_coefficients(&ed, x);
    let crude = match crude_bound(spec, x) {
        Ok(c) => Some(c),
        Err(Error::CrudeUnavailable(_)) => None,
        Err(e) => return Err(e),
    };
    let steps_crude = crude
        .map(|c| steps_to_epsilon(c, ed.lambda, epsilon))
        .transpose()?;
    Ok(BoundReport {
        lambda: ed.lambda,
        lower_coeff: lower,
        upper_coeff: upper,
        crude_coeff: crude,
        epsilon,
        steps_necessary: steps_to_epsilon(lower, ed.lambda, epsilon)?,
        steps_sufficient: steps_to_epsilon(upper, ed.lambda, epsilon)?,
        steps_crude,
    })
}
