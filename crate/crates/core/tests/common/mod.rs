//! Brute-force transition oracles shared by the integration tests.
//!
//! Every function here enumerates ordered sequences of labelled balls (or
//! individuals) and draws, multiplying step probabilities. None of them uses
//! the closed forms under test.

#![allow(dead_code)]

use std::collections::BTreeMap;

use monochain::{Composition, ModelSpec, PolyaOrder};

pub type Dist = BTreeMap<Vec<u32>, f64>;

fn add(d: &mut Dist, k: Vec<u32>, p: f64) {
    *d.entry(k).or_insert(0.0) += p;
}

/// Removes `s` distinct labelled balls one at a time, uniformly.
pub fn remove_ordered(counts: &[u32], s: u32) -> Dist {
    let mut out = Dist::new();
    let labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat(i).take(c as usize))
        .collect();
    fn go(labels: &[usize], taken: &mut Vec<bool>, left: u32, cur: &mut Vec<u32>, p: f64, out: &mut Dist) {
        if left == 0 {
            add(out, cur.clone(), p);
            return;
        }
        let free = taken.iter().filter(|t| !**t).count() as f64;
        for l in 0..labels.len() {
            if taken[l] {
                continue;
            }
            taken[l] = true;
            cur[labels[l]] -= 1;
            go(labels, taken, left - 1, cur, p / free, out);
            cur[labels[l]] += 1;
            taken[l] = false;
        }
    }
    let mut taken = vec![false; labels.len()];
    go(&labels, &mut taken, s, &mut counts.to_vec(), 1.0, &mut out);
    out
}

/// `s` sequential Pólya draws, each reinforcing the chosen urn.
pub fn polya_draws(counts: &[u32], alpha: &[f64], s: u32) -> Dist {
    let mut out = Dist::new();
    fn go(cur: &mut Vec<u32>, alpha: &[f64], left: u32, p: f64, out: &mut Dist) {
        if left == 0 {
            add(out, cur.clone(), p);
            return;
        }
        let total: f64 = cur.iter().zip(alpha).map(|(&c, &a)| a + c as f64).sum();
        for i in 0..cur.len() {
            let w = alpha[i] + cur[i] as f64;
            cur[i] += 1;
            go(cur, alpha, left - 1, p * w / total, out);
            cur[i] -= 1;
        }
    }
    go(&mut counts.to_vec(), alpha, s, 1.0, &mut out);
    out
}

/// `s` independent placements with probabilities `p`.
pub fn iid_placements(counts: &[u32], p: &[f64], s: u32) -> Dist {
    let mut out = Dist::new();
    fn go(cur: &mut Vec<u32>, p: &[f64], left: u32, q: f64, out: &mut Dist) {
        if left == 0 {
            add(out, cur.clone(), q);
            return;
        }
        for i in 0..cur.len() {
            cur[i] += 1;
            go(cur, p, left - 1, q * p[i], out);
            cur[i] -= 1;
        }
    }
    go(&mut counts.to_vec(), p, s, 1.0, &mut out);
    out
}

fn then(d: &Dist, f: impl Fn(&[u32]) -> Dist) -> Dist {
    let mut out = Dist::new();
    for (k, &p) in d {
        for (k2, q) in f(k) {
            add(&mut out, k2, p * q);
        }
    }
    out
}

/// Level order: mark on `x`, draw with the marked balls still present, then
/// take the marked balls out.
pub fn polya_level_oracle(x: &[u32], alpha: &[f64], s: u32) -> Dist {
    let removed = remove_ordered(x, s);
    let mut out = Dist::new();
    for (left, p) in &removed {
        let marked: Vec<u32> = x.iter().zip(left).map(|(a, b)| a - b).collect();
        for (added, q) in polya_draws(x, alpha, s) {
            let y: Vec<u32> = added.iter().zip(&marked).map(|(a, m)| a - m).collect();
            add(&mut out, y, p * q);
        }
    }
    out
}

pub fn polya_oracle(order: PolyaOrder, x: &[u32], alpha: &[f64], s: u32) -> Dist {
    match order {
        PolyaOrder::Level => polya_level_oracle(x, alpha, s),
        PolyaOrder::DownUp => then(&remove_ordered(x, s), |c| polya_draws(c, alpha, s)),
        PolyaOrder::UpDown => then(&polya_draws(x, alpha, s), |c| remove_ordered(c, s)),
    }
}

pub fn ehrenfest_oracle(x: &[u32], p: &[f64], s: u32) -> Dist {
    then(&remove_ordered(x, s), |c| iid_placements(c, p, s))
}

/// Moran step over ordered (dying individual, parent individual, offspring
/// type) triples.
pub fn moran_oracle(x: &[u32], m: &[Vec<f64>]) -> Dist {
    let labels: Vec<usize> = x
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat(i).take(c as usize))
        .collect();
    let n = labels.len() as f64;
    let mut out = Dist::new();
    for &dies in &labels {
        for &parent in &labels {
            for (j, &mij) in m[parent].iter().enumerate() {
                let mut y = x.to_vec();
                y[dies] -= 1;
                y[j] += 1;
                add(&mut out, y, mij / (n * n));
            }
        }
    }
    out
}

pub fn oracle_row(spec: &ModelSpec, x: &Composition) -> Dist {
    let c = x.counts();
    match spec {
        ModelSpec::Polya { order, s, alpha, .. } => polya_oracle(*order, c, alpha, *s),
        ModelSpec::Ehrenfest { s, p, .. } => ehrenfest_oracle(c, p, *s),
        _ => moran_oracle(c, spec.mutation_matrix().expect("moran model").rows()),
    }
}

/// Largest absolute difference between a closed-form row and the oracle.
pub fn row_gap(spec: &ModelSpec, x: &Composition) -> f64 {
    let row = spec.row(x).expect("valid state");
    let oracle = oracle_row(spec, x);
    let mut gap: f64 = 0.0;
    for (k, &p) in &oracle {
        let y = Composition::from_counts(k.clone()).unwrap();
        gap = gap.max((row.prob(&y) - p).abs());
    }
    for (y, &p) in &row.probs {
        if !oracle.contains_key(y.counts()) {
            gap = gap.max(p);
        }
    }
    gap
}

/// Urn models covered by the row oracle: N ≤ 4, s ≤ 2, d ≤ 3.
pub fn small_urn_models() -> Vec<ModelSpec> {
    let alphas = [vec![1.0, 1.0], vec![0.5, 2.5], vec![1.0, 2.0, 3.0], vec![0.3, 0.7, 1.9]];
    let ps = [vec![0.5, 0.5], vec![0.2, 0.8], vec![0.2, 0.3, 0.5], vec![0.6, 0.1, 0.3]];
    let mut out = Vec::new();
    for n in 1..=4 {
        for s in 1..=n.min(2) {
            for a in &alphas {
                for order in [PolyaOrder::Level, PolyaOrder::UpDown, PolyaOrder::DownUp] {
                    out.push(ModelSpec::polya(order, n, s, a.clone()).unwrap());
                }
            }
            for p in &ps {
                out.push(ModelSpec::ehrenfest(n, s, p.clone()).unwrap());
            }
        }
    }
    out
}

pub mod coupling_checks {
    use std::collections::BTreeMap;

    use monochain::coupling::{coupled_step, CoupledPair};
    use monochain::spectral::model_eigendata;
    use monochain::{Composition, Error, ModelSpec, StateIndex};
    use rand::Rng;

    /// A uniform state `x` and a `y ⪰ x` reached by up to `moves` random
    /// upward covers.
    pub fn random_ordered_pair<R: Rng>(spec: &ModelSpec, moves: usize, rng: &mut R) -> CoupledPair {
        let space = spec.state_space().unwrap();
        let x = space.unrank(StateIndex(rng.gen_range(0..space.len()))).unwrap();
        let last = spec.d() - 1;
        let mut y = x.clone();
        for _ in 0..moves {
            if y.get(last) == 0 {
                break;
            }
            y = y.moved(last, rng.gen_range(0..last));
        }
        CoupledPair::new(x, y).unwrap()
    }

    /// Runs coupled steps from fresh random ordered pairs, restarting after
    /// each meeting, and returns `(steps, order violations)`.
    pub fn count_violations<R: Rng>(spec: &ModelSpec, steps: u64, rng: &mut R) -> (u64, u64) {
        let mut pair = random_ordered_pair(spec, spec.n() as usize, rng);
        let mut violations = 0;
        for _ in 0..steps {
            match coupled_step(spec, &pair, rng) {
                Ok(next) => pair = next,
                Err(Error::Ordering(_)) => {
                    violations += 1;
                    pair = random_ordered_pair(spec, spec.n() as usize, rng);
                }
                Err(e) => panic!("coupled step failed: {e}"),
            }
            if pair.coalesced() {
                pair = random_ordered_pair(spec, spec.n() as usize, rng);
            }
        }
        (steps, violations)
    }

    pub struct OneStepCheck {
        pub tv_x: f64,
        pub tv_y: f64,
        pub mean_gap: f64,
        pub std_err: f64,
        pub expected_gap: f64,
    }

    impl OneStepCheck {
        /// Standard errors separating the empirical and predicted gap.
        pub fn z(&self) -> f64 {
            (self.mean_gap - self.expected_gap).abs() / self.std_err.max(f64::MIN_POSITIVE)
        }
    }

    fn tv(row: &monochain::TransitionRow, counts: &BTreeMap<Composition, usize>, n: usize) -> f64 {
        let mut t = 0.0;
        for (y, &p) in &row.probs {
            t += (p - counts.get(y).copied().unwrap_or(0) as f64 / n as f64).abs();
        }
        for (y, &c) in counts {
            if row.prob(y) == 0.0 {
                t += c as f64 / n as f64;
            }
        }
        0.5 * t
    }

    /// One coupled step from `pair`, `samples` times: marginal TV of each
    /// copy against its exact row and the mean of `f(Y_1) - f(X_1)`.
    pub fn one_step_check<R: Rng>(
        spec: &ModelSpec,
        pair: &CoupledPair,
        samples: usize,
        rng: &mut R,
    ) -> OneStepCheck {
        let ed = model_eigendata(spec).unwrap();
        let mut cx = BTreeMap::new();
        let mut cy = BTreeMap::new();
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..samples {
            let next = coupled_step(spec, pair, rng).unwrap();
            let g = ed.eval(&next.y) - ed.eval(&next.x);
            sum += g;
            sum2 += g * g;
            *cx.entry(next.x).or_insert(0) += 1;
            *cy.entry(next.y).or_insert(0) += 1;
        }
        let n = samples as f64;
        let mean = sum / n;
        let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
        OneStepCheck {
            tv_x: tv(&spec.row(&pair.x).unwrap(), &cx, samples),
            tv_y: tv(&spec.row(&pair.y).unwrap(), &cy, samples),
            mean_gap: mean,
            std_err: (var / n).sqrt(),
            expected_gap: ed.lambda * (ed.eval(&pair.y) - ed.eval(&pair.x)),
        }
    }
}
