//! Order-preserving couplings.
//!
//! Two copies of a chain started at `x ⪯ y` are driven by shared randomness
//! so that `X_n ⪯ Y_n` at every step and, once the copies meet, they move
//! together forever. Individuals (or balls) are matched through a
//! [`Labeling`] rebuilt from the current pair at every step.
//!
//! Categorical choices that may differ between the copies use one shared
//! uniform and a rearranged interval layout: the first copy inverts its own
//! cumulative weights; the second copy shares the first `d - 1` segments,
//! then lays out its surplus segments `q_i - p_i` in index order, then its
//! own last segment. So whenever the first copy picks a category `i < d`,
//! the second picks the same one, and each copy keeps its exact marginal.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{pick_index, ModelSpec, MutationMatrix, PolyaOrder};
use crate::statespace::{leq_unchecked, Composition};

/// Matching of the labels `0..N` of two ordered configurations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labeling {
    assignments: Vec<(usize, usize)>,
    k1: usize,
    k2: usize,
}

impl Labeling {
    /// Species of `label` in the first and second population.
    pub fn species(&self, label: usize) -> (usize, usize) {
        self.assignments[label]
    }

    pub fn assignments(&self) -> &[(usize, usize)] {
        &self.assignments
    }

    /// Individuals of the first `d - 1` species of the first population.
    pub fn k1(&self) -> usize {
        self.k1
    }

    /// Individuals of species `d` in the second population.
    pub fn k2(&self) -> usize {
        self.k2
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Counts left in each population after removing the given labels.
    pub fn remove_labels(&self, x: &[u32], y: &[u32], labels: &[usize]) -> (Vec<u32>, Vec<u32>) {
        let mut a = x.to_vec();
        let mut b = y.to_vec();
        for &l in labels {
            let (s1, s2) = self.assignments[l];
            a[s1] -= 1;
            b[s2] -= 1;
        }
        (a, b)
    }
}

/// Labels the two populations for `x ⪯ y`.
///
/// The first population's species occupy consecutive label blocks. The
/// second population reuses the first `x_i` labels of block `i` for
/// `i < d`, the first `y_d` labels of block `d`, and hands the remaining
/// `x_d - y_d` labels of block `d` to its extra individuals in ascending
/// species order.
pub fn build_labeling(x: &Composition, y: &Composition) -> Result<Labeling> {
    if x.dim() != y.dim() || x.total() != y.total() || !leq_unchecked(x, y) {
        return Err(Error::Ordering(format!("{x} is not below {y}")));
    }
    let d = x.dim();
    let last = d - 1;
    let mut assignments = Vec::with_capacity(x.total() as usize);
    for i in 0..last {
        assignments.extend(std::iter::repeat_n((i, i), x.get(i) as usize));
    }
    let k1 = assignments.len();
    assignments.extend(std::iter::repeat_n((last, last), y.get(last) as usize));
    for i in 0..last {
        let extra = (y.get(i) - x.get(i)) as usize;
        assignments.extend(std::iter::repeat_n((last, i), extra));
    }
    debug_assert_eq!(assignments.len(), x.total() as usize);
    Ok(Labeling {
        assignments,
        k1,
        k2: y.get(last) as usize,
    })
}

/// An ordered pair of states, `x ⪯ y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoupledPair {
    pub x: Composition,
    pub y: Composition,
}

impl CoupledPair {
    pub fn new(x: Composition, y: Composition) -> Result<Self> {
        if x.dim() != y.dim() || x.total() != y.total() || !leq_unchecked(&x, &y) {
            return Err(Error::Ordering(format!("{x} is not below {y}")));
        }
        Ok(Self { x, y })
    }

    pub fn coalesced(&self) -> bool {
        self.x == self.y
    }
}

/// Shared-uniform draw for two weight vectors `w1` (first copy) and `w2`
/// (second copy) with equal totals and `w1_i <= w2_i` for `i < d`.
///
/// Returns the categories chosen by the two copies. If the first copy picks
/// some `i < d`, so does the second.
pub fn coupled_draw(w1: &[f64], w2: &[f64], u: f64) -> (usize, usize) {
    let last = w1.len() - 1;
    let first = pick_index(w1, u);
    if first < last {
        return (first, first);
    }
    let total: f64 = w1.iter().sum();
    let shared: f64 = w1[..last].iter().sum();
    let rest = u * total - shared;
    let mut acc = 0.0;
    for i in 0..last {
        let surplus = (w2[i] - w1[i]).max(0.0);
        acc += surplus;
        if surplus > 0.0 && rest < acc {
            return (first, i);
        }
    }
    if w2[last] > 0.0 {
        return (first, last);
    }
    // rounding pushed u past the surplus segments of a copy with no mass left
    // in the last category
    let i = (0..last)
        .rev()
        .find(|&i| w2[i] > 0.0)
        .expect("second copy has positive weight");
    (first, i)
}

fn uniform_label<R: Rng + ?Sized>(n: usize, rng: &mut R) -> usize {
    ((rng.gen::<f64>() * n as f64) as usize).min(n - 1)
}

/// `s` distinct labels from `0..n`, drawn one at a time.
fn choose_labels<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    (0..s)
        .map(|_| {
            let i = uniform_label(pool.len(), rng);
            pool.remove(i)
        })
        .collect()
}

fn check_dominated_rows(m: &MutationMatrix) -> Result<()> {
    let last = m.dim() - 1;
    for k in 0..last {
        for j in 0..last {
            if m.get(last, j) > m.get(k, j) {
                return Err(Error::ConditionsFail(format!(
                    "m[{last}][{j}] = {} exceeds m[{k}][{j}] = {}",
                    m.get(last, j),
                    m.get(k, j)
                )));
            }
        }
    }
    Ok(())
}

fn make_pair(x: Vec<u32>, y: Vec<u32>) -> Result<CoupledPair> {
    CoupledPair::new(
        Composition::from_counts_unchecked(x),
        Composition::from_counts_unchecked(y),
    )
}

/// One coupled Moran step: death label, parent label, shared mutation uniform.
pub fn coupled_moran_step<R: Rng + ?Sized>(
    m: &MutationMatrix,
    pair: &CoupledPair,
    rng: &mut R,
) -> Result<CoupledPair> {
    check_dominated_rows(m)?;
    let labels = build_labeling(&pair.x, &pair.y)?;
    let n = labels.len();
    let last = m.dim() - 1;
    let dying = uniform_label(n, rng);
    let parent = uniform_label(n, rng);
    let u = rng.gen::<f64>();
    let (p1, p2) = labels.species(parent);
    let (b1, b2) = if p1 == p2 {
        let k = pick_index(m.row(p1), u);
        (k, k)
    } else {
        debug_assert_eq!(p1, last);
        coupled_draw(m.row(last), m.row(p2), u)
    };
    let (t1, t2) = labels.species(dying);
    let mut x = pair.x.counts().to_vec();
    let mut y = pair.y.counts().to_vec();
    x[b1] += 1;
    y[b2] += 1;
    x[t1] -= 1;
    y[t2] -= 1;
    make_pair(x, y)
}

fn coupled_polya_adds<R: Rng + ?Sized>(
    x: &mut [u32],
    y: &mut [u32],
    alpha: &[f64],
    s: u32,
    rng: &mut R,
) {
    for _ in 0..s {
        let w1: Vec<f64> = x.iter().zip(alpha).map(|(&c, &a)| a + c as f64).collect();
        let w2: Vec<f64> = y.iter().zip(alpha).map(|(&c, &a)| a + c as f64).collect();
        let (i, j) = coupled_draw(&w1, &w2, rng.gen::<f64>());
        x[i] += 1;
        y[j] += 1;
    }
}

/// One coupled Pólya step in the sub-step order of `order`.
pub fn coupled_polya_step<R: Rng + ?Sized>(
    order: PolyaOrder,
    s: u32,
    alpha: &[f64],
    pair: &CoupledPair,
    rng: &mut R,
) -> Result<CoupledPair> {
    let mut x = pair.x.counts().to_vec();
    let mut y = pair.y.counts().to_vec();
    match order {
        PolyaOrder::Level => {
            let labels = build_labeling(&pair.x, &pair.y)?;
            let marks = choose_labels(labels.len(), s as usize, rng);
            coupled_polya_adds(&mut x, &mut y, alpha, s, rng);
            for &l in &marks {
                let (a, b) = labels.species(l);
                x[a] -= 1;
                y[b] -= 1;
            }
        }
        PolyaOrder::DownUp => {
            let labels = build_labeling(&pair.x, &pair.y)?;
            let marks = choose_labels(labels.len(), s as usize, rng);
            (x, y) = labels.remove_labels(&x, &y, &marks);
            coupled_polya_adds(&mut x, &mut y, alpha, s, rng);
        }
        PolyaOrder::UpDown => {
            coupled_polya_adds(&mut x, &mut y, alpha, s, rng);
            let up = make_pair(x, y)?;
            let labels = build_labeling(&up.x, &up.y)?;
            let marks = choose_labels(labels.len(), s as usize, rng);
            (x, y) = labels.remove_labels(up.x.counts(), up.y.counts(), &marks);
        }
    }
    make_pair(x, y)
}

/// One coupled Ehrenfest step: shared removal labels, shared placements.
pub fn coupled_ehrenfest_step<R: Rng + ?Sized>(
    s: u32,
    p: &[f64],
    pair: &CoupledPair,
    rng: &mut R,
) -> Result<CoupledPair> {
    let labels = build_labeling(&pair.x, &pair.y)?;
    let marks = choose_labels(labels.len(), s as usize, rng);
    let (mut x, mut y) = labels.remove_labels(pair.x.counts(), pair.y.counts(), &marks);
    for _ in 0..s {
        let i = pick_index(p, rng.gen::<f64>());
        x[i] += 1;
        y[i] += 1;
    }
    make_pair(x, y)
}

/// One coupled step of any model.
pub fn coupled_step<R: Rng + ?Sized>(
    spec: &ModelSpec,
    pair: &CoupledPair,
    rng: &mut R,
) -> Result<CoupledPair> {
    match spec {
        ModelSpec::MoranGeneral { mutation, .. } => coupled_moran_step(mutation, pair, rng),
        ModelSpec::MoranStandard { .. } => {
            coupled_moran_step(&spec.mutation_matrix().expect("validated"), pair, rng)
        }
        ModelSpec::Polya { order, s, alpha, .. } => coupled_polya_step(*order, *s, alpha, pair, rng),
        ModelSpec::Ehrenfest { s, p, .. } => coupled_ehrenfest_step(*s, p, pair, rng),
    }
}

/// A coupled trajectory and its first meeting time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledRun {
    pub trajectory: Vec<CoupledPair>,
    pub coalescence_step: Option<usize>,
}

fn start_pair(spec: &ModelSpec, x0: &Composition, y0: &Composition) -> Result<CoupledPair> {
    spec.check_state(x0)?;
    spec.check_state(y0)?;
    CoupledPair::new(x0.clone(), y0.clone())
}

/// Runs the coupling until the copies meet or `max_steps` steps have been taken.
pub fn run_coupled<R: Rng + ?Sized>(
    spec: &ModelSpec,
    x0: &Composition,
    y0: &Composition,
    max_steps: usize,
    rng: &mut R,
) -> Result<CoupledRun> {
    let mut pair = start_pair(spec, x0, y0)?;
    let mut trajectory = vec![pair.clone()];
    for step in 0..max_steps {
        if pair.coalesced() {
            return Ok(CoupledRun {
                trajectory,
                coalescence_step: Some(step),
            });
        }
        pair = coupled_step(spec, &pair, rng)?;
        trajectory.push(pair.clone());
    }
    let coalescence_step = pair.coalesced().then_some(max_steps);
    Ok(CoupledRun {
        trajectory,
        coalescence_step,
    })
}

/// Runs exactly `steps` coupled steps, checking that a met pair stays met.
pub fn run_coupled_fixed<R: Rng + ?Sized>(
    spec: &ModelSpec,
    x0: &Composition,
    y0: &Composition,
    steps: usize,
    rng: &mut R,
) -> Result<CoupledRun> {
    let mut pair = start_pair(spec, x0, y0)?;
    let mut trajectory = vec![pair.clone()];
    let mut coalescence_step = pair.coalesced().then_some(0);
    for step in 1..=steps {
        let next = coupled_step(spec, &pair, rng)?;
        if pair.coalesced() && !next.coalesced() {
            return Err(Error::Consistency(format!(
                "coupled copies separated at step {step}"
            )));
        }
        if coalescence_step.is_none() && next.coalesced() {
            coalescence_step = Some(step);
        }
        pair = next;
        trajectory.push(pair.clone());
    }
    Ok(CoupledRun {
        trajectory,
        coalescence_step,
    })
}

/// Writes `step,x,y,coalesced` rows, counts joined with `;`.
pub fn write_trajectory_csv<W: Write>(out: W, run: &CoupledRun) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "x", "y", "coalesced"])?;
    for (step, pair) in run.trajectory.iter().enumerate() {
        w.write_record([
            step.to_string(),
            pair.x.join(";"),
            pair.y.join(";"),
            pair.coalesced().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(v: &[u32]) -> Composition {
        Composition::from_counts(v.to_vec()).unwrap()
    }

    #[test]
    fn table_one_labeling() {
        let l = build_labeling(&c(&[1, 5, 7, 4]), &c(&[2, 5, 8, 2])).unwrap();
        assert_eq!(l.len(), 17);
        assert_eq!((l.k1(), l.k2()), (13, 2));
        // labels 16 and 17 in one-based numbering
        assert_eq!(l.species(15), (3, 0));
        assert_eq!(l.species(16), (3, 2));
        assert_eq!(l.species(0), (0, 0));
        assert_eq!(l.species(13), (3, 3));
    }

    #[test]
    fn labeling_rejects_unordered() {
        assert!(matches!(
            build_labeling(&c(&[2, 0, 1]), &c(&[0, 2, 1])),
            Err(Error::Ordering(_))
        ));
    }

    #[test]
    fn labeling_of_equal_states_is_diagonal() {
        let x = c(&[3, 1, 4, 2]);
        let l = build_labeling(&x, &x).unwrap();
        assert!(l.assignments().iter().all(|(a, b)| a == b));
    }

    #[test]
    fn table_one_removal_keeps_order() {
        let x = c(&[1, 5, 7, 4]);
        let y = c(&[2, 5, 8, 2]);
        let l = build_labeling(&x, &y).unwrap();
        // one-based labels 6, 8, 14, 16
        let (a, b) = l.remove_labels(x.counts(), y.counts(), &[5, 7, 13, 15]);
        assert_eq!(a, vec![1, 4, 6, 2]);
        assert_eq!(b, vec![1, 4, 7, 1]);
        assert!(a[..3].iter().zip(&b[..3]).all(|(p, q)| p <= q));
    }

    #[test]
    fn coupled_draw_copies_head_categories() {
        let w1 = [0.1, 0.2, 0.7];
        let w2 = [0.3, 0.25, 0.45];
        for k in 0..1000 {
            let u = k as f64 / 1000.0;
            let (a, b) = coupled_draw(&w1, &w2, u);
            if a < 2 {
                assert_eq!(a, b);
            } else {
                assert_eq!(a, 2);
            }
        }
        // second-copy marginal from the interval lengths
        assert_eq!(coupled_draw(&w1, &w2, 0.305).1, 0);
        assert_eq!(coupled_draw(&w1, &w2, 0.52).1, 1);
        assert_eq!(coupled_draw(&w1, &w2, 0.6).1, 2);
    }

    #[test]
    fn equal_states_move_together() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let specs = [
            ModelSpec::moran_standard(6, 0.3, vec![0.2, 0.3, 0.5]).unwrap(),
            ModelSpec::polya(PolyaOrder::Level, 6, 2, vec![1.0, 2.0, 3.0]).unwrap(),
            ModelSpec::polya(PolyaOrder::UpDown, 6, 2, vec![1.0, 2.0, 3.0]).unwrap(),
            ModelSpec::polya(PolyaOrder::DownUp, 6, 3, vec![1.0, 2.0, 3.0]).unwrap(),
            ModelSpec::ehrenfest(6, 2, vec![0.2, 0.3, 0.5]).unwrap(),
        ];
        let x = c(&[1, 2, 3]);
        for spec in &specs {
            let run = run_coupled_fixed(spec, &x, &x, 200, &mut rng).unwrap();
            assert_eq!(run.coalescence_step, Some(0));
            assert!(run.trajectory.iter().all(|p| p.coalesced()));
            let run = run_coupled(spec, &x, &x, 200, &mut rng).unwrap();
            assert_eq!(run.coalescence_step, Some(0));
            assert_eq!(run.trajectory.len(), 1);
        }
    }

    #[test]
    fn moran_coupling_requires_dominated_rows() {
        let bad = MutationMatrix::new(vec![
            vec![0.2, 0.4, 0.4],
            vec![0.5, 0.3, 0.2],
            vec![0.3, 0.1, 0.6],
        ])
        .unwrap();
        let pair = CoupledPair::new(c(&[0, 0, 3]), c(&[1, 1, 1])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            coupled_moran_step(&bad, &pair, &mut rng),
            Err(Error::ConditionsFail(_))
        ));
    }

    #[test]
    fn trajectory_csv_layout() {
        let spec = ModelSpec::ehrenfest(3, 1, vec![0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let run = run_coupled(&spec, &c(&[0, 3]), &c(&[3, 0]), 500, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &run).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,x,y,coalesced"));
        assert_eq!(lines.next(), Some("0,0;3,3;0,false"));
        let last = text.lines().last().unwrap();
        assert!(last.ends_with(",true"), "{last}");
    }
}
