//! The five chain families and their one-step transition laws.
//!
//! Every kernel lives on the composition lattice `X_N^d`. Rows are computed
//! exactly (up to floating point) by enumerating the removal and addition
//! compositions of one step; samplers follow the verbal description of each
//! process with one uniform per categorical decision, inverted through the
//! cumulative weights in index order.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph;
use crate::statespace::{Composition, StateSpace};

const ROW_SUM_TOL: f64 = 1e-12;

/// A row-stochastic, irreducible `d x d` mutation matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "Vec<Vec<f64>>")]
pub struct MutationMatrix {
    rows: Vec<Vec<f64>>,
}

impl MutationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if d < 2 {
            return Err(Error::Validation(format!(
                "mutation matrix must be at least 2x2, got {d} rows"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Validation(format!(
                    "mutation matrix row {i} has {} entries, expected {d}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Validation(format!(
                    "mutation matrix row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Validation(format!(
                    "mutation matrix row {i} sums to {s}, not 1"
                )));
            }
        }
        if !graph::strongly_connected(&graph::positive_pattern(&rows)) {
            return Err(Error::Validation("mutation matrix is reducible".into()));
        }
        Ok(Self { rows })
    }

    /// `(1 - m) I + m P` where every row of `P` is `p`.
    pub fn standard(m: f64, p: &[f64]) -> Result<Self> {
        check_mutation_prob(m)?;
        check_prob_vector(p, "p")?;
        let d = p.len();
        let rows = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| m * p[j] + if i == j { 1.0 - m } else { 0.0 })
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

impl From<MutationMatrix> for Vec<Vec<f64>> {
    fn from(m: MutationMatrix) -> Self {
        m.rows
    }
}

impl<'de> Deserialize<'de> for MutationMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(de)?;
        MutationMatrix::new(rows).map_err(serde::de::Error::custom)
    }
}

fn check_mutation_prob(m: f64) -> Result<()> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::Validation(format!(
            "mutation probability must lie in (0, 1], got {m}"
        )));
    }
    Ok(())
}

fn check_prob_vector(p: &[f64], name: &str) -> Result<()> {
    if p.len() < 2 {
        return Err(Error::Validation(format!("{name} needs at least 2 entries")));
    }
    if p.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::Validation(format!("{name} entries must be positive")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::Validation(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

fn check_weights(alpha: &[f64]) -> Result<()> {
    if alpha.len() < 2 {
        return Err(Error::Validation("alpha needs at least 2 entries".into()));
    }
    if alpha.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::Validation("alpha entries must be positive".into()));
    }
    Ok(())
}

/// Order in which the mark, add and remove sub-steps of a Pólya step happen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolyaOrder {
    /// Mark `s`, add `s` (weights include the marked balls), remove the marked.
    Level,
    /// Add `s`, then mark and remove `s` of the `N + s` balls.
    UpDown,
    /// Mark and remove `s`, then add `s`.
    DownUp,
}

/// One of the chain families, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDoc", into = "ModelDoc")]
pub enum ModelSpec {
    MoranGeneral {
        n: u32,
        mutation: MutationMatrix,
    },
    MoranStandard {
        n: u32,
        m: f64,
        p: Vec<f64>,
    },
    Polya {
        order: PolyaOrder,
        n: u32,
        s: u32,
        alpha: Vec<f64>,
    },
    Ehrenfest {
        n: u32,
        s: u32,
        p: Vec<f64>,
    },
}

impl ModelSpec {
    pub fn moran_general(n: u32, mutation: MutationMatrix) -> Result<Self> {
        Self::MoranGeneral { n, mutation }.validated()
    }

    pub fn moran_standard(n: u32, m: f64, p: Vec<f64>) -> Result<Self> {
        Self::MoranStandard { n, m, p }.validated()
    }

    pub fn polya(order: PolyaOrder, n: u32, s: u32, alpha: Vec<f64>) -> Result<Self> {
        Self::Polya { order, n, s, alpha }.validated()
    }

    pub fn ehrenfest(n: u32, s: u32, p: Vec<f64>) -> Result<Self> {
        Self::Ehrenfest { n, s, p }.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.n() == 0 {
            return Err(Error::Validation("N must be positive".into()));
        }
        match &self {
            ModelSpec::MoranGeneral { .. } => {}
            ModelSpec::MoranStandard { m, p, .. } => {
                check_mutation_prob(*m)?;
                check_prob_vector(p, "p")?;
            }
            ModelSpec::Polya { n, s, alpha, .. } => {
                check_draws(*s, *n)?;
                check_weights(alpha)?;
            }
            ModelSpec::Ehrenfest { n, s, p } => {
                check_draws(*s, *n)?;
                check_prob_vector(p, "p")?;
            }
        }
        Ok(self)
    }

    pub fn n(&self) -> u32 {
        match self {
            ModelSpec::MoranGeneral { n, .. }
            | ModelSpec::MoranStandard { n, .. }
            | ModelSpec::Polya { n, .. }
            | ModelSpec::Ehrenfest { n, .. } => *n,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            ModelSpec::MoranGeneral { mutation, .. } => mutation.dim(),
            ModelSpec::MoranStandard { p, .. } | ModelSpec::Ehrenfest { p, .. } => p.len(),
            ModelSpec::Polya { alpha, .. } => alpha.len(),
        }
    }

    /// Short family name, as used in the JSON `model` field.
    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::MoranGeneral { .. } => "moran_general",
            ModelSpec::MoranStandard { .. } => "moran_standard",
            ModelSpec::Polya { order: PolyaOrder::Level, .. } => "polya_level",
            ModelSpec::Polya { order: PolyaOrder::UpDown, .. } => "polya_updown",
            ModelSpec::Polya { order: PolyaOrder::DownUp, .. } => "polya_downup",
            ModelSpec::Ehrenfest { .. } => "ehrenfest",
        }
    }

    /// The mutation matrix of a Moran model; the standard model is expanded.
    pub fn mutation_matrix(&self) -> Option<MutationMatrix> {
        match self {
            ModelSpec::MoranGeneral { mutation, .. } => Some(mutation.clone()),
            ModelSpec::MoranStandard { m, p, .. } => MutationMatrix::standard(*m, p).ok(),
            _ => None,
        }
    }

    /// The standard Moran model rewritten as a general one.
    pub fn expanded(&self) -> ModelSpec {
        match self {
            ModelSpec::MoranStandard { n, .. } => ModelSpec::MoranGeneral {
                n: *n,
                mutation: self.mutation_matrix().expect("validated standard model"),
            },
            other => other.clone(),
        }
    }

    pub fn state_space(&self) -> Result<StateSpace> {
        StateSpace::new(self.n(), self.d())
    }

    /// Checks that `x` is a state of this model's lattice.
    pub fn check_state(&self, x: &Composition) -> Result<()> {
        if x.dim() != self.d() || x.total() != self.n() {
            return Err(Error::Validation(format!(
                "state {x} is not in X_{}^{} for model {}",
                self.n(),
                self.d(),
                self.family()
            )));
        }
        Ok(())
    }

    /// Exact one-step transition row from `x`.
    pub fn row(&self, x: &Composition) -> Result<TransitionRow> {
        self.check_state(x)?;
        Ok(match self {
            ModelSpec::MoranGeneral { mutation, .. } => moran_row(mutation, x),
            ModelSpec::MoranStandard { .. } => {
                moran_row(&self.mutation_matrix().expect("validated"), x)
            }
            ModelSpec::Polya { order, s, alpha, .. } => polya_row(*order, *s, alpha, x),
            ModelSpec::Ehrenfest { s, p, .. } => ehrenfest_row(*s, p, x),
        })
    }
}

fn check_draws(s: u32, n: u32) -> Result<()> {
    if s < 1 || s > n {
        return Err(Error::Validation(format!(
            "s must satisfy 1 <= s <= N, got s = {s}, N = {n}"
        )));
    }
    Ok(())
}

/// Wire form of [`ModelSpec`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ModelDoc {
    pub model: String,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation_matrix: Option<Vec<Vec<f64>>>,
}

fn required<T>(v: Option<T>, field: &str, model: &str) -> Result<T> {
    v.ok_or_else(|| Error::Validation(format!("model {model} requires field {field:?}")))
}

impl TryFrom<ModelDoc> for ModelSpec {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        let model = doc.model.as_str();
        let polya = |order| -> Result<ModelSpec> {
            ModelSpec::polya(
                order,
                doc.n,
                required(doc.s, "s", model)?,
                required(doc.alpha.clone(), "alpha", model)?,
            )
        };
        match model {
            "moran_general" => ModelSpec::moran_general(
                doc.n,
                MutationMatrix::new(required(doc.mutation_matrix.clone(), "mutation_matrix", model)?)?,
            ),
            "moran_standard" => ModelSpec::moran_standard(
                doc.n,
                required(doc.m, "m", model)?,
                required(doc.p.clone(), "p", model)?,
            ),
            "polya_level" => polya(PolyaOrder::Level),
            "polya_updown" => polya(PolyaOrder::UpDown),
            "polya_downup" => polya(PolyaOrder::DownUp),
            "ehrenfest" => ModelSpec::ehrenfest(
                doc.n,
                required(doc.s, "s", model)?,
                required(doc.p.clone(), "p", model)?,
            ),
            other => Err(Error::Validation(format!("unknown model {other:?}"))),
        }
    }
}

impl From<ModelSpec> for ModelDoc {
    fn from(spec: ModelSpec) -> Self {
        let mut doc = ModelDoc {
            model: spec.family().to_string(),
            n: spec.n(),
            ..Default::default()
        };
        match spec {
            ModelSpec::MoranGeneral { mutation, .. } => doc.mutation_matrix = Some(mutation.into()),
            ModelSpec::MoranStandard { m, p, .. } => {
                doc.m = Some(m);
                doc.p = Some(p);
            }
            ModelSpec::Polya { s, alpha, .. } => {
                doc.s = Some(s);
                doc.alpha = Some(alpha);
            }
            ModelSpec::Ehrenfest { s, p, .. } => {
                doc.s = Some(s);
                doc.p = Some(p);
            }
        }
        doc
    }
}

/// One row `K(x, .)` of a transition kernel; zero entries are omitted.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionRow {
    pub source: Composition,
    pub probs: BTreeMap<Composition, f64>,
}

impl TransitionRow {
    fn from_raw(source: &Composition, raw: BTreeMap<Vec<u32>, f64>) -> Self {
        let probs = raw
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(k, p)| (Composition::from_counts_unchecked(k), p))
            .collect();
        Self {
            source: source.clone(),
            probs,
        }
    }

    pub fn prob(&self, y: &Composition) -> f64 {
        self.probs.get(y).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `sum_y K(x, y) g(y)`.
    pub fn expect<F: Fn(&Composition) -> f64>(&self, g: F) -> f64 {
        self.probs.iter().map(|(y, p)| p * g(y)).sum()
    }

    /// `sum_y K(x, y) y`.
    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.source.dim()];
        for (y, p) in &self.probs {
            for (o, &c) in out.iter_mut().zip(y.counts()) {
                *o += p * c as f64;
            }
        }
        out
    }
}

/// Multi-allele Moran row: one death, one birth with mutation.
pub fn moran_row(mutation: &MutationMatrix, x: &Composition) -> TransitionRow {
    let d = x.dim();
    let n = x.total() as f64;
    let xs: Vec<f64> = x.counts().iter().map(|&c| c as f64).collect();
    // newborn species law: sum_k (x_k / N) m_ki
    let birth: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|k| xs[k] / n * mutation.get(k, i)).sum())
        .collect();
    let mut raw = BTreeMap::new();
    let mut stay = 0.0;
    for j in 0..d {
        if x.get(j) == 0 {
            continue;
        }
        let death = xs[j] / n;
        for (i, b) in birth.iter().enumerate() {
            let p = death * b;
            if i == j {
                stay += p;
            } else if p > 0.0 {
                raw.insert(x.moved(j, i).counts().to_vec(), p);
            }
        }
    }
    raw.insert(x.counts().to_vec(), stay);
    TransitionRow::from_raw(x, raw)
}

/// `((1 - 1/N) I + M^T / N) x`, the expected next state of the Moran chain.
pub fn mean_drift(mutation: &MutationMatrix, x: &Composition) -> Vec<f64> {
    let d = x.dim();
    let n = x.total() as f64;
    (0..d)
        .map(|i| {
            let mt_x: f64 = (0..d).map(|k| mutation.get(k, i) * x.get(k) as f64).sum();
            (1.0 - 1.0 / n) * x.get(i) as f64 + mt_x / n
        })
        .collect()
}

/// All compositions of `s` into `bounds.len()` parts with part `i` at most `bounds[i]`.
pub(crate) fn bounded_compositions(s: u32, bounds: &[u32]) -> Vec<Vec<u32>> {
    fn go(i: usize, left: u32, bounds: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == bounds.len() - 1 {
            if left <= bounds[i] {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let rest: u32 = bounds[i + 1..].iter().sum();
        let lo = left.saturating_sub(rest);
        for v in lo..=left.min(bounds[i]) {
            cur.push(v);
            go(i + 1, left - v, bounds, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if bounds.is_empty() {
        return out;
    }
    go(0, s, bounds, &mut Vec::with_capacity(bounds.len()), &mut out);
    out
}

pub(crate) fn choose_f64(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// `prod_i C(x_i, r_i) / C(|x|, |r|)`: law of the urn counts of `|r|`
/// balls drawn without replacement from `x`.
pub(crate) fn hypergeometric_prob(r: &[u32], x: &[u32]) -> f64 {
    let s: u32 = r.iter().sum();
    let n: u32 = x.iter().sum();
    let num: f64 = r.iter().zip(x).map(|(&ri, &xi)| choose_f64(xi, ri)).product();
    num / choose_f64(n, s)
}

fn multinomial_coeff(a: &[u32]) -> f64 {
    let mut left: u32 = a.iter().sum();
    let mut acc = 1.0;
    for &ai in a {
        acc *= choose_f64(left, ai);
        left -= ai;
    }
    acc
}

fn rising(x: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (x + i as f64))
}

/// Dirichlet-multinomial probability of the counts `a` of `|a|` sequential
/// Pólya draws from weights `beta`.
pub(crate) fn dm_prob(a: &[u32], beta: &[f64]) -> f64 {
    let s: u32 = a.iter().sum();
    let total: f64 = beta.iter().sum();
    let num: f64 = a.iter().zip(beta).map(|(&ai, &bi)| rising(bi, ai)).product();
    multinomial_coeff(a) * num / rising(total, s)
}

pub(crate) fn multinomial_prob(a: &[u32], p: &[f64]) -> f64 {
    let pw: f64 = a.iter().zip(p).map(|(&ai, &pi)| pi.powi(ai as i32)).product();
    multinomial_coeff(a) * pw
}

fn add_into(raw: &mut BTreeMap<Vec<u32>, f64>, state: Vec<u32>, p: f64) {
    if p > 0.0 {
        *raw.entry(state).or_insert(0.0) += p;
    }
}

/// Generalized Ehrenfest row: `s` balls removed uniformly, each placed by `p`.
pub fn ehrenfest_row(s: u32, p: &[f64], x: &Composition) -> TransitionRow {
    let d = x.dim();
    let adds = bounded_compositions(s, &vec![s; d]);
    let add_probs: Vec<f64> = adds.iter().map(|a| multinomial_prob(a, p)).collect();
    let mut raw = BTreeMap::new();
    for r in bounded_compositions(s, x.counts()) {
        let pr = hypergeometric_prob(&r, x.counts());
        for (a, pa) in adds.iter().zip(&add_probs) {
            let y = (0..d).map(|i| x.get(i) - r[i] + a[i]).collect();
            add_into(&mut raw, y, pr * pa);
        }
    }
    TransitionRow::from_raw(x, raw)
}

/// Pólya urn row for any of the three sub-step orders.
pub fn polya_row(order: PolyaOrder, s: u32, alpha: &[f64], x: &Composition) -> TransitionRow {
    let d = x.dim();
    let xs = x.counts();
    let mut raw = BTreeMap::new();
    let adds = bounded_compositions(s, &vec![s; d]);
    match order {
        PolyaOrder::Level | PolyaOrder::DownUp => {
            let level_beta: Vec<f64> = (0..d).map(|i| alpha[i] + xs[i] as f64).collect();
            for r in bounded_compositions(s, xs) {
                let pr = hypergeometric_prob(&r, xs);
                let beta: Vec<f64> = match order {
                    PolyaOrder::Level => level_beta.clone(),
                    _ => (0..d).map(|i| alpha[i] + (xs[i] - r[i]) as f64).collect(),
                };
                for a in &adds {
                    let y = (0..d).map(|i| xs[i] - r[i] + a[i]).collect();
                    add_into(&mut raw, y, pr * dm_prob(a, &beta));
                }
            }
        }
        PolyaOrder::UpDown => {
            let beta: Vec<f64> = (0..d).map(|i| alpha[i] + xs[i] as f64).collect();
            for a in &adds {
                let pa = dm_prob(a, &beta);
                let up: Vec<u32> = (0..d).map(|i| xs[i] + a[i]).collect();
                for r in bounded_compositions(s, &up) {
                    let y = (0..d).map(|i| up[i] - r[i]).collect();
                    add_into(&mut raw, y, pa * hypergeometric_prob(&r, &up));
                }
            }
        }
    }
    TransitionRow::from_raw(x, raw)
}

/// Sequential CDF inversion of `u in [0, 1)` against `weights` (not
/// necessarily normalized): the first index whose cumulative weight exceeds
/// `u * total`. Intervals are half-open, so zero-weight categories are never
/// chosen; rounding past the last boundary falls to the last positive weight.
pub(crate) fn pick_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let t = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if w > 0.0 && t < acc {
            return i;
        }
    }
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("categorical draw with no positive weight")
}

/// Removes `s` balls chosen uniformly without replacement; returns the
/// per-urn removal counts.
fn sample_removal<R: Rng + ?Sized>(counts: &mut [u32], s: u32, rng: &mut R) -> Vec<u32> {
    let mut removed = vec![0u32; counts.len()];
    for _ in 0..s {
        let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let i = pick_index(&w, rng.gen::<f64>());
        counts[i] -= 1;
        removed[i] += 1;
    }
    removed
}

fn sample_polya_adds<R: Rng + ?Sized>(counts: &mut [u32], alpha: &[f64], s: u32, rng: &mut R) {
    for _ in 0..s {
        let w: Vec<f64> = counts
            .iter()
            .zip(alpha)
            .map(|(&c, &a)| a + c as f64)
            .collect();
        let i = pick_index(&w, rng.gen::<f64>());
        counts[i] += 1;
    }
}

/// Draws one step of the chain from `x`.
pub fn sample_step<R: Rng + ?Sized>(spec: &ModelSpec, x: &Composition, rng: &mut R) -> Composition {
    let mut y = x.clone();
    match spec {
        ModelSpec::MoranGeneral { .. } | ModelSpec::MoranStandard { .. } => {
            let mutation = match spec {
                ModelSpec::MoranGeneral { mutation, .. } => std::borrow::Cow::Borrowed(mutation),
                _ => std::borrow::Cow::Owned(spec.mutation_matrix().expect("validated")),
            };
            let w: Vec<f64> = x.counts().iter().map(|&c| c as f64).collect();
            let dying = pick_index(&w, rng.gen::<f64>());
            let parent = pick_index(&w, rng.gen::<f64>());
            let child = pick_index(mutation.row(parent), rng.gen::<f64>());
            let c = y.counts_mut();
            c[dying] -= 1;
            c[child] += 1;
        }
        ModelSpec::Polya { order, s, alpha, .. } => {
            let c = y.counts_mut();
            match order {
                PolyaOrder::Level => {
                    let mut unmarked = c.to_vec();
                    let marked = sample_removal(&mut unmarked, *s, rng);
                    sample_polya_adds(c, alpha, *s, rng);
                    for (ci, mi) in c.iter_mut().zip(marked) {
                        *ci -= mi;
                    }
                }
                PolyaOrder::DownUp => {
                    sample_removal(c, *s, rng);
                    sample_polya_adds(c, alpha, *s, rng);
                }
                PolyaOrder::UpDown => {
                    sample_polya_adds(c, alpha, *s, rng);
                    sample_removal(c, *s, rng);
                }
            }
        }
        ModelSpec::Ehrenfest { s, p, .. } => {
            let c = y.counts_mut();
            sample_removal(c, *s, rng);
            for _ in 0..*s {
                c[pick_index(p, rng.gen::<f64>())] += 1;
            }
        }
    }
    y
}
