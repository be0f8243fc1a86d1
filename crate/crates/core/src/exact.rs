//! Exact computations on small lattices.
//!
//! Materializes the transition matrix of a model, computes its stationary
//! distribution, total-variation curves from a fixed start, checks
//! irreducibility and aperiodicity, and audits monotonicity with random
//! monotone test functions.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{crude_bound, tv_bound_coefficients};
use crate::error::{Error, Result};
use crate::graph::strongly_connected;
use crate::kernels::ModelSpec;
use crate::spectral::{model_eigendata, EigenData};
use crate::statespace::{Composition, StateSpace, DEFAULT_STATE_CAP};

/// Largest lattice handled by the dense stationary solver.
pub const DENSE_LIMIT: usize = 2_500;

/// Row-sparse transition matrix over the colex-ranked states of a model.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    model: ModelSpec,
    space: StateSpace,
    states: Vec<Composition>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn states(&self) -> &[Composition] {
        &self.states
    }

    /// Nonzero entries `(column, probability)` of row `i`, by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    pub fn index_of(&self, x: &Composition) -> Result<usize> {
        self.model.check_state(x)?;
        Ok(self.space.rank_unchecked(x))
    }

    /// `(Kg)(x)` for every state.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        self.rows
            .par_iter()
            .map(|r| r.iter().map(|&(j, p)| p * g[j]).sum())
            .collect()
    }

    /// `vK` for a row vector `v`.
    pub fn push_forward(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (i, r) in self.rows.iter().enumerate() {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            for &(j, p) in r {
                out[j] += vi * p;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0.0; self.dim()];
                for &(j, p) in r {
                    d[j] = p;
                }
                d
            })
            .collect()
    }
}

pub fn build_matrix(spec: &ModelSpec) -> Result<TransitionMatrix> {
    build_matrix_with_cap(spec, DEFAULT_STATE_CAP)
}

pub fn build_matrix_with_cap(spec: &ModelSpec, cap: u64) -> Result<TransitionMatrix> {
    let space = StateSpace::with_cap(spec.n(), spec.d(), cap)?;
    let states = space.enumerate();
    let rows = states
        .par_iter()
        .map(|x| {
            let row = spec.row(x)?;
            let mut r: Vec<(usize, f64)> = row
                .probs
                .iter()
                .filter(|(_, &p)| p > 0.0)
                .map(|(y, &p)| (space.rank_unchecked(y), p))
                .collect();
            r.sort_unstable_by_key(|&(j, _)| j);
            let total: f64 = r.iter().map(|&(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(Error::Consistency(format!(
                    "row of {x} sums to {total}"
                )));
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionMatrix {
        model: spec.clone(),
        space,
        states,
        rows,
    })
}

/// True iff the graph of positive entries is strongly connected and some
/// state has a self-loop.
pub fn is_irreducible_aperiodic(tm: &TransitionMatrix) -> bool {
    let adj: Vec<Vec<usize>> = tm
        .rows
        .iter()
        .map(|r| r.iter().map(|&(j, _)| j).collect())
        .collect();
    let self_loop = tm
        .rows
        .iter()
        .enumerate()
        .any(|(i, r)| r.iter().any(|&(j, p)| j == i && p > 0.0));
    self_loop && strongly_connected(&adj)
}

pub fn check_irreducible_aperiodic(spec: &ModelSpec) -> Result<bool> {
    Ok(is_irreducible_aperiodic(&build_matrix(spec)?))
}

fn square(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    a.par_iter()
        .map(|ai| {
            let mut out = vec![0.0; n];
            for (k, &aik) in ai.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                for (o, &akj) in out.iter_mut().zip(&a[k]) {
                    *o += aik * akj;
                }
            }
            let s: f64 = out.iter().sum();
            out.iter_mut().for_each(|v| *v /= s);
            out
        })
        .collect()
}

fn row_spread(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    (0..n)
        .map(|j| {
            let (lo, hi) = a.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r[j]), hi.max(r[j]))
            });
            hi - lo
        })
        .fold(0.0, f64::max)
}

fn stationary_residual(rows: &[Vec<(usize, f64)>], pi: &[f64]) -> f64 {
    let mut out = vec![0.0; pi.len()];
    for (i, r) in rows.iter().enumerate() {
        for &(j, p) in r {
            out[j] += pi[i] * p;
        }
    }
    out.iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Stationary distribution of a row-sparse stochastic matrix by iterated
/// squaring until the rows agree to `1e-13`.
pub fn stationary_from_rows(rows: &[Vec<(usize, f64)>]) -> Result<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Validation("empty transition matrix".into()));
    }
    if n > DENSE_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            size: n.to_string(),
            cap: DENSE_LIMIT as u64,
        });
    }
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut d = vec![0.0; n];
            for &(j, p) in r {
                d[j] = p;
            }
            d
        })
        .collect();
    let mut converged = row_spread(&a) < 1e-13;
    for _ in 0..64 {
        if converged {
            break;
        }
        a = square(&a);
        converged = row_spread(&a) < 1e-13;
    }
    if !converged {
        return Err(Error::NonConvergence(
            "matrix powers did not approach a rank-one limit; the chain may be reducible or periodic"
                .into(),
        ));
    }
    let mut pi: Vec<f64> = (0..n).map(|j| a.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    let residual = stationary_residual(rows, &pi);
    if residual > 1e-12 {
        return Err(Error::NonConvergence(format!(
            "stationary residual {residual:e} exceeds 1e-12"
        )));
    }
    Ok(pi)
}

/// Stationary distribution indexed by state rank.
pub fn stationary(tm: &TransitionMatrix) -> Result<Vec<f64>> {
    if !is_irreducible_aperiodic(tm) {
        return Err(Error::NonConvergence(
            "transition graph is not irreducible and aperiodic".into(),
        ));
    }
    stationary_from_rows(&tm.rows)
}

/// Total-variation distance to stationarity from `x0` for `n = 0..=n_max`.
pub fn tv_curve(tm: &TransitionMatrix, x0: &Composition, n_max: usize) -> Result<Vec<f64>> {
    let pi = stationary(tm)?;
    tv_curve_with(tm, &pi, x0, n_max)
}

/// As [`tv_curve`] with a precomputed stationary distribution.
///
/// The signed difference `K^n(x0, .) - π` is propagated directly and
/// re-centred to zero mass each step, so the curve stays accurate far below
/// the rounding level of `π` itself.
pub fn tv_curve_with(
    tm: &TransitionMatrix,
    pi: &[f64],
    x0: &Composition,
    n_max: usize,
) -> Result<Vec<f64>> {
    let start = tm.index_of(x0)?;
    let mut delta: Vec<f64> = pi.iter().map(|&p| -p).collect();
    delta[start] += 1.0;
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            delta = tm.push_forward(&delta);
        }
        let mass: f64 = delta.iter().sum();
        delta.iter_mut().zip(pi).for_each(|(d, &p)| *d -= mass * p);
        out.push(0.5 * delta.iter().map(|d| d.abs()).sum::<f64>());
    }
    Ok(out)
}

/// Max-norm residual of `Kf - λf` over all states.
pub fn eigen_residual(tm: &TransitionMatrix, ed: &EigenData) -> f64 {
    let f: Vec<f64> = tm.states.iter().map(|x| ed.eval(x)).collect();
    tm.apply(&f)
        .iter()
        .zip(&f)
        .map(|(kf, fx)| (kf - ed.lambda * fx).abs())
        .fold(0.0, f64::max)
}

/// One line of an exact curve export.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub tv_exact: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub crude_bound: Option<f64>,
}

/// Exact TV curve from `x0` together with the three envelopes.
pub fn exact_curve(spec: &ModelSpec, x0: &Composition, n_max: usize) -> Result<Vec<CurvePoint>> {
    exact_curve_with_cap(spec, x0, n_max, DEFAULT_STATE_CAP)
}

pub fn exact_curve_with_cap(
    spec: &ModelSpec,
    x0: &Composition,
    n_max: usize,
    cap: u64,
) -> Result<Vec<CurvePoint>> {
    spec.check_state(x0)?;
    let tm = build_matrix_with_cap(spec, cap)?;
    let ed = model_eigendata(spec)?;
    let (lower, upper) = tv_bound_coefficients(&ed, x0);
    let crude = match crude_bound(spec, x0) {
        Ok(c) => Some(c),
        Err(Error::CrudeUnavailable(_)) => None,
        Err(e) => return Err(e),
    };
    let tv = tv_curve(&tm, x0, n_max)?;
    Ok(tv
        .into_iter()
        .enumerate()
        .map(|(n, tv_exact)| {
            let l = ed.lambda.powi(n as i32);
            CurvePoint {
                n,
                tv_exact,
                lower_bound: lower * l,
                upper_bound: upper * l,
                crude_bound: crude.map(|c| c * l),
            }
        })
        .collect())
}

/// Writes `n,tv_exact,lower_bound,upper_bound,crude_bound`; the crude column
/// is empty when no closed-form stationary law is known.
pub fn write_curve_csv<W: Write>(out: W, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "tv_exact", "lower_bound", "upper_bound", "crude_bound"])?;
    for p in curve {
        w.write_record([
            p.n.to_string(),
            format!("{:?}", p.tv_exact),
            format!("{:?}", p.lower_bound),
            format!("{:?}", p.upper_bound),
            p.crude_bound.map(|c| format!("{c:?}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of a randomized monotonicity audit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub trials: usize,
    pub pairs_checked: u64,
    pub violations: u64,
    /// Largest `Kg(x) - Kg(y)` seen over the checked pairs.
    pub worst_gap: f64,
}

/// A random nondecreasing function on the lattice.
///
/// Values are built in order of increasing head sum as a nonnegative
/// increment plus the largest value among the lower covers. Most increments
/// are zero so that step-like functions are well represented.
pub fn random_monotone_function<R: Rng + ?Sized>(tm: &TransitionMatrix, rng: &mut R) -> Vec<f64> {
    let last = tm.space.d() - 1;
    let mut order: Vec<usize> = (0..tm.dim()).collect();
    order.sort_by_key(|&i| tm.states[i].head_sum());
    let mut g = vec![0.0; tm.dim()];
    for i in order {
        let x = &tm.states[i];
        let below = (0..last)
            .filter(|&k| x.get(k) > 0)
            .map(|k| g[tm.space.rank_unchecked(&x.moved(k, last))])
            .fold(0.0, f64::max);
        let inc = if rng.gen::<f64>() < 0.7 {
            0.0
        } else {
            -(1.0 - rng.gen::<f64>()).ln()
        };
        g[i] = below + inc;
    }
    g
}

/// Checks `Kg(x) <= Kg(y)` for `trials` random monotone `g`.
///
/// Only covering pairs `y = x + e_i - e_d` are compared; every comparable
/// pair is joined by a chain of covers, so this checks all of them.
pub fn monotonicity_audit(tm: &TransitionMatrix, trials: usize, seed: u64) -> AuditReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = tm.space.d() - 1;
    let covers: Vec<(usize, usize)> = tm
        .states
        .iter()
        .enumerate()
        .flat_map(|(i, x)| {
            (0..last)
                .filter(move |_| x.get(last) > 0)
                .map(move |k| (i, tm.space.rank_unchecked(&x.moved(last, k))))
        })
        .collect();
    let mut report = AuditReport {
        trials,
        pairs_checked: 0,
        violations: 0,
        worst_gap: f64::NEG_INFINITY,
    };
    for _ in 0..trials {
        let g = random_monotone_function(tm, &mut rng);
        let scale = g.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
        let kg = tm.apply(&g);
        for &(lo, hi) in &covers {
            let gap = kg[lo] - kg[hi];
            report.pairs_checked += 1;
            report.worst_gap = report.worst_gap.max(gap);
            if gap > 1e-12 * scale {
                report.violations += 1;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{dm_log_pmf, multinomial_log_pmf};
    use crate::kernels::{MutationMatrix, PolyaOrder};

    fn c(v: &[u32]) -> Composition {
        Composition::from_counts(v.to_vec()).unwrap()
    }

    #[test]
    fn small_ehrenfest_matrix() {
        let spec = ModelSpec::ehrenfest(2, 1, vec![0.5, 0.5]).unwrap();
        let tm = build_matrix(&spec).unwrap();
        assert_eq!(tm.dim(), 3);
        for r in tm.rows() {
            let s: f64 = r.iter().map(|&(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        // from (2,0): drop one ball of kind 0, place it anywhere
        let i = tm.index_of(&c(&[2, 0])).unwrap();
        let j = tm.index_of(&c(&[1, 1])).unwrap();
        assert!((tm.get(i, i) - 0.5).abs() < 1e-15);
        assert!((tm.get(i, j) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_of_small_lattice() {
        let spec = ModelSpec::ehrenfest(8, 1, vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(build_matrix(&spec).unwrap().dim(), 45);
    }

    #[test]
    fn standard_matrix_matches_expansion() {
        let spec = ModelSpec::moran_standard(5, 0.4, vec![0.1, 0.3, 0.6]).unwrap();
        let a = build_matrix(&spec).unwrap();
        let b = build_matrix(&spec.expanded()).unwrap();
        // same function, so bitwise equality
        assert_eq!(a.rows(), b.rows());
    }

    #[test]
    fn cap_is_enforced() {
        let spec = ModelSpec::ehrenfest(30, 1, vec![0.25; 4]).unwrap();
        assert!(matches!(
            build_matrix_with_cap(&spec, 100),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn single_state_point_mass() {
        let pi = stationary_from_rows(&[vec![(0, 1.0)]]).unwrap();
        assert_eq!(pi, vec![1.0]);
    }

    #[test]
    fn periodic_rows_do_not_converge() {
        let rows = vec![vec![(1, 1.0)], vec![(0, 1.0)]];
        assert!(matches!(
            stationary_from_rows(&rows),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn ehrenfest_stationary_is_multinomial() {
        let p = vec![0.2, 0.3, 0.5];
        let spec = ModelSpec::ehrenfest(6, 2, p.clone()).unwrap();
        let tm = build_matrix(&spec).unwrap();
        let pi = stationary(&tm).unwrap();
        for (x, &v) in tm.states().iter().zip(&pi) {
            assert!((v - multinomial_log_pmf(x.counts(), &p).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn standard_moran_stationary_is_dm() {
        let (n, m, p) = (6u32, 0.3, vec![0.2, 0.3, 0.5]);
        let spec = ModelSpec::moran_standard(n, m, p.clone()).unwrap();
        let tm = build_matrix(&spec).unwrap();
        let pi = stationary(&tm).unwrap();
        let alpha: Vec<f64> = p.iter().map(|q| n as f64 * m * q / (1.0 - m)).collect();
        for (x, &v) in tm.states().iter().zip(&pi) {
            assert!((v - dm_log_pmf(x.counts(), &alpha).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn tv_starts_at_one_minus_mass() {
        let spec = ModelSpec::polya(PolyaOrder::Level, 5, 2, vec![1.0, 2.0, 0.5]).unwrap();
        let tm = build_matrix(&spec).unwrap();
        let pi = stationary(&tm).unwrap();
        let x0 = c(&[0, 0, 5]);
        let tv = tv_curve_with(&tm, &pi, &x0, 0).unwrap();
        assert_eq!(tv.len(), 1);
        let i = tm.index_of(&x0).unwrap();
        assert!((tv[0] - (1.0 - pi[i])).abs() < 1e-14);
    }

    #[test]
    fn tv_is_nonincreasing_and_tiny_values_survive() {
        let spec = ModelSpec::ehrenfest(8, 1, vec![0.2, 0.3, 0.5]).unwrap();
        let tm = build_matrix(&spec).unwrap();
        let tv = tv_curve(&tm, &c(&[0, 0, 8]), 400).unwrap();
        for w in tv.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9));
        }
        assert!(tv[400] > 0.0 && tv[400] < 1e-20);
    }

    #[test]
    fn eigen_identity_on_matrix() {
        let spec = ModelSpec::polya(PolyaOrder::UpDown, 5, 2, vec![0.7, 1.1, 2.0]).unwrap();
        let tm = build_matrix(&spec).unwrap();
        let ed = model_eigendata(&spec).unwrap();
        assert!(eigen_residual(&tm, &ed) < 1e-10);
    }

    #[test]
    fn cyclic_mutation_gives_aperiodic_chain() {
        let m = MutationMatrix::new(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let spec = ModelSpec::moran_general(4, m).unwrap();
        assert!(check_irreducible_aperiodic(&spec).unwrap());
    }

    #[test]
    fn single_individual_with_cyclic_mutation_is_periodic() {
        let m = MutationMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let spec = ModelSpec::moran_general(1, m.clone()).unwrap();
        assert!(!check_irreducible_aperiodic(&spec).unwrap());
        let spec = ModelSpec::moran_general(2, m).unwrap();
        assert!(check_irreducible_aperiodic(&spec).unwrap());
    }

    #[test]
    fn ehrenfest_audit_is_clean() {
        let spec = ModelSpec::ehrenfest(6, 2, vec![0.2, 0.3, 0.5]).unwrap();
        let tm = build_matrix(&spec).unwrap();
        let r = monotonicity_audit(&tm, 200, 7);
        assert_eq!(r.violations, 0, "{r:?}");
        assert!(r.pairs_checked > 0);
    }

    #[test]
    fn audit_flags_violating_moran() {
        // m_d1 far above m_11
        let m = MutationMatrix::new(vec![
            vec![0.05, 0.9, 0.05],
            vec![0.05, 0.9, 0.05],
            vec![0.9, 0.05, 0.05],
        ])
        .unwrap();
        let spec = ModelSpec::moran_general(4, m).unwrap();
        let tm = build_matrix(&spec).unwrap();
        assert!(monotonicity_audit(&tm, 200, 1).violations > 0);
    }

    #[test]
    fn monotone_functions_are_monotone() {
        let spec = ModelSpec::ehrenfest(5, 1, vec![0.25; 4]).unwrap();
        let tm = build_matrix(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_monotone_function(&tm, &mut rng);
        for (i, x) in tm.states().iter().enumerate() {
            for (j, y) in tm.states().iter().enumerate() {
                if crate::statespace::leq_unchecked(x, y) {
                    assert!(g[i] <= g[j]);
                }
            }
        }
    }

    #[test]
    fn curve_csv_layout() {
        let spec = ModelSpec::moran_general(
            3,
            MutationMatrix::new(vec![vec![0.6, 0.4], vec![0.3, 0.7]]).unwrap(),
        )
        .unwrap();
        let curve = exact_curve(&spec, &c(&[0, 3]), 2).unwrap();
        assert_eq!(curve.len(), 3);
        assert!(curve.iter().all(|p| p.crude_bound.is_none()));
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &curve).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("n,tv_exact,lower_bound,upper_bound,crude_bound"));
        assert!(text.lines().nth(1).unwrap().ends_with(','));
    }
}
