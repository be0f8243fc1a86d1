//! Monotone eigenfunctions.
//!
//! For the Moran chain the eigenfunction comes from a positive eigenvector of
//! the reduced matrix `M*` with entries `m_ij - m_dj` (`i, j < d`), found by
//! power iteration. The urn families have closed forms: the centred count
//! of the first `d - 1` urns, with a family-specific eigenvalue.
//!
//! Every eigenfunction here is linear, `f(x) = sum_{i<d} a*_i x_i + N a_d`,
//! so it is stored as its coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph;
use crate::kernels::{moran_row, ModelSpec, MutationMatrix, PolyaOrder};
use crate::statespace::Composition;

pub const PERRON_TOL: f64 = 1e-14;
pub const PERRON_MAX_ITER: usize = 100_000;
const PERRON_RESIDUAL_TOL: f64 = 1e-12;
const EIGEN_CHECK_TOL: f64 = 1e-10;
// Entries below this are the residue of a zero eigenvector component.
const POSITIVE_FLOOR: f64 = 1e-10;

/// Which of the three mutation-matrix monotonicity conditions hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `m_dj < min_{k<d} m_kj` for every `j < d`.
    pub c1_holds: bool,
    /// Weak inequalities and `M*` irreducible.
    pub c2_holds: bool,
    /// Weak inequalities and `M*` has a strictly positive eigenvector.
    pub c3_holds: bool,
    /// `M*`, the `(d-1) x (d-1)` reduced matrix.
    pub reduced: Vec<Vec<f64>>,
}

impl ConditionReport {
    pub fn any(&self) -> bool {
        self.c1_holds || self.c2_holds || self.c3_holds
    }
}

/// Eigenvalue and linear eigenfunction of a chain, plus the constants the
/// total-variation bounds need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub lambda: f64,
    /// Perron root of `M*`; only for Moran chains.
    pub lambda_star: Option<f64>,
    /// `a*_i = a_i - a_d` for `i < d`, all positive.
    pub a_star: Vec<f64>,
    pub a_d: f64,
    /// Smallest increment of `f` along the order: `min a*_i`.
    pub c1: f64,
    /// `sup_x |f(x)|`.
    pub c2: f64,
    /// `f` at the minimal element, `N a_d`.
    pub f0: f64,
    #[serde(rename = "N")]
    pub n: u32,
}

impl EigenData {
    /// `f(x) = sum_{i<d} a*_i x_i + N a_d`.
    pub fn eval(&self, x: &Composition) -> f64 {
        let lin: f64 = self
            .a_star
            .iter()
            .zip(x.counts())
            .map(|(a, &c)| a * c as f64)
            .sum();
        lin + self.n as f64 * self.a_d
    }

    /// Multiplies `f` by `t > 0`; `c1`, `c2` and `f0` follow.
    pub fn rescaled(&self, t: f64) -> Self {
        Self {
            a_star: self.a_star.iter().map(|a| a * t).collect(),
            a_d: self.a_d * t,
            c1: self.c1 * t,
            c2: self.c2 * t,
            f0: self.f0 * t,
            ..self.clone()
        }
    }
}

fn reduced_matrix(m: &MutationMatrix) -> Vec<Vec<f64>> {
    let k = m.dim() - 1;
    (0..k)
        .map(|i| (0..k).map(|j| m.get(i, j) - m.get(k, j)).collect())
        .collect()
}

/// Checks the three monotonicity conditions on `M`.
pub fn classify_conditions(m: &MutationMatrix) -> ConditionReport {
    let k = m.dim() - 1;
    let col_min = |j: usize| (0..k).map(|i| m.get(i, j)).fold(f64::INFINITY, f64::min);
    let strict = (0..k).all(|j| m.get(k, j) < col_min(j));
    let weak = (0..k).all(|j| m.get(k, j) <= col_min(j));
    let reduced = reduced_matrix(m);
    let irreducible = graph::strongly_connected(&graph::positive_pattern(&reduced));
    let c3 = weak && perron(&reduced).is_ok();
    ConditionReport {
        c1_holds: strict,
        c2_holds: weak && irreducible,
        c3_holds: c3,
        reduced,
    }
}

/// Perron root and eigenvector of a nonnegative square matrix, the vector
/// normalized to max entry 1.
///
/// Power iteration runs on `A + I`: same eigenvectors, and the shift makes
/// the Perron root strictly dominant in modulus even when `A` is periodic.
pub fn perron(a: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let k = a.len();
    if k == 0 || a.iter().any(|r| r.len() != k) {
        return Err(Error::Validation("perron needs a non-empty square matrix".into()));
    }
    if a.iter().flatten().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Validation(
            "perron needs a nonnegative matrix".into(),
        ));
    }
    let shifted = |v: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|i| v[i] + (0..k).map(|j| a[i][j] * v[j]).sum::<f64>())
            .collect()
    };
    let mut v = vec![1.0; k];
    let mut converged = false;
    for _ in 0..PERRON_MAX_ITER {
        let w = shifted(&v);
        let top = w.iter().cloned().fold(0.0, f64::max);
        if top <= 0.0 {
            return Err(Error::PerronFailed { iterations: 0 });
        }
        let w: Vec<f64> = w.into_iter().map(|x| x / top).collect();
        let diff = w
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        v = w;
        if diff < PERRON_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::PerronFailed {
            iterations: PERRON_MAX_ITER,
        });
    }
    let av: Vec<f64> = (0..k).map(|i| (0..k).map(|j| a[i][j] * v[j]).sum()).collect();
    let top = (0..k)
        .max_by(|&i, &j| v[i].total_cmp(&v[j]))
        .expect("non-empty");
    let lambda = av[top] / v[top];
    let residual = av
        .iter()
        .zip(&v)
        .map(|(x, y)| (x - lambda * y).abs())
        .fold(0.0, f64::max);
    if residual > PERRON_RESIDUAL_TOL || v.iter().any(|&x| !(x > POSITIVE_FLOOR)) {
        return Err(Error::PerronFailed {
            iterations: PERRON_MAX_ITER,
        });
    }
    Ok((lambda, v))
}

/// Linear monotone eigenfunction of the Moran chain with mutation matrix `m`.
pub fn build_eigenfunction(m: &MutationMatrix, n: u32) -> Result<EigenData> {
    if n == 0 {
        return Err(Error::Validation("N must be positive".into()));
    }
    let report = classify_conditions(m);
    if !report.any() {
        return Err(Error::ConditionsFail(
            "no species dominates the mutation flow as required".into(),
        ));
    }
    let (lambda_star, a_star) = perron(&report.reduced)?;
    if !(lambda_star < 1.0) {
        return Err(Error::Consistency(format!(
            "Perron root of M* is {lambda_star}, expected below 1"
        )));
    }
    let d = m.dim();
    let flow: f64 = (0..d - 1).map(|j| m.get(d - 1, j) * a_star[j]).sum();
    let a_d = flow / (lambda_star - 1.0);
    if !(a_d < 0.0) {
        return Err(Error::Consistency(format!("a_d = {a_d}, expected negative")));
    }
    let nf = n as f64;
    let amax = a_star.iter().cloned().fold(f64::MIN, f64::max);
    let ed = EigenData {
        lambda: (nf - 1.0 + lambda_star) / nf,
        lambda_star: Some(lambda_star),
        c1: a_star.iter().cloned().fold(f64::INFINITY, f64::min),
        c2: f64::max(-nf * a_d, nf * (amax + a_d)),
        f0: nf * a_d,
        a_star,
        a_d,
        n,
    };
    verify_on_vertices(m, &ed)?;
    Ok(ed)
}

// Kf = λf on the d vertices N e_i and on the most balanced state.
fn verify_on_vertices(m: &MutationMatrix, ed: &EigenData) -> Result<()> {
    let d = m.dim();
    let n = ed.n;
    let mut probes: Vec<Composition> = (0..d)
        .map(|i| {
            let mut c = vec![0u32; d];
            c[i] = n;
            Composition::from_counts_unchecked(c)
        })
        .collect();
    let mut mid = vec![n / d as u32; d];
    mid[d - 1] += n - mid.iter().sum::<u32>();
    probes.push(Composition::from_counts_unchecked(mid));
    let tol = EIGEN_CHECK_TOL * (1.0 + ed.c2);
    for x in probes {
        let kf = moran_row(m, &x).expect(|y| ed.eval(y));
        let lf = ed.lambda * ed.eval(&x);
        if (kf - lf).abs() > tol {
            return Err(Error::Consistency(format!(
                "Kf - λf = {} at {x}",
                kf - lf
            )));
        }
    }
    Ok(())
}

/// Eigen data of the form shared by the urn families and the standard Moran
/// model: `f(x) = sum_{i<d} x_i - N (1 - p_d)`.
fn centred_count(lambda: f64, lambda_star: Option<f64>, n: u32, d: usize, one_minus_pd: f64) -> EigenData {
    let nf = n as f64;
    EigenData {
        lambda,
        lambda_star,
        a_star: vec![1.0; d - 1],
        a_d: -one_minus_pd,
        c1: 1.0,
        c2: f64::max(nf * (1.0 - one_minus_pd), nf * one_minus_pd),
        f0: -nf * one_minus_pd,
        n,
    }
}

/// Second eigenvalue of a Pólya urn chain, written as one ratio of products
/// so that integer-valued inputs give the correctly rounded value.
pub fn polya_lambda(order: PolyaOrder, n: u32, s: u32, alpha_total: f64) -> f64 {
    let (n, s, a) = (n as f64, s as f64, alpha_total);
    match order {
        PolyaOrder::Level => (n * (n + a) - s * a) / (n * (n + a)),
        PolyaOrder::DownUp => ((n - s) * (n + a)) / (n * (n + a - s)),
        PolyaOrder::UpDown => (n * (n + a + s)) / ((n + s) * (n + a)),
    }
}

/// Eigenvalue and monotone eigenfunction for any model.
pub fn model_eigendata(spec: &ModelSpec) -> Result<EigenData> {
    let n = spec.n();
    let d = spec.d();
    match spec {
        ModelSpec::MoranGeneral { mutation, .. } => build_eigenfunction(mutation, n),
        ModelSpec::MoranStandard { m, p, .. } => Ok(centred_count(
            (n as f64 - m) / n as f64,
            Some(1.0 - m),
            n,
            d,
            1.0 - p[d - 1],
        )),
        ModelSpec::Polya { order, s, alpha, .. } => {
            let total: f64 = alpha.iter().sum();
            let head: f64 = alpha[..d - 1].iter().sum();
            Ok(centred_count(
                polya_lambda(*order, n, *s, total),
                None,
                n,
                d,
                head / total,
            ))
        }
        ModelSpec::Ehrenfest { s, p, .. } => Ok(centred_count(
            (n - s) as f64 / n as f64,
            None,
            n,
            d,
            1.0 - p[d - 1],
        )),
    }
}
