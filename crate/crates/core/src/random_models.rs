//! Random valid models for property checks and experiments.

use rand::Rng;

use crate::kernels::{ModelSpec, MutationMatrix, PolyaOrder};

fn simplex_point<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// A mutation matrix with every entry positive.
pub fn random_irreducible_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> MutationMatrix {
    loop {
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                let mut r = simplex_point(d, rng);
                // sparsify a little while keeping a positive cycle i -> i+1
                for v in r.iter_mut() {
                    if rng.gen::<f64>() < 0.25 {
                        *v = 0.0;
                    }
                }
                r
            })
            .enumerate()
            .map(|(i, mut r)| {
                r[(i + 1) % d] += 0.05;
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect();
        if let Ok(m) = MutationMatrix::new(rows) {
            return m;
        }
    }
}

/// Mutation matrix satisfying the strict condition `m_dj < min_k m_kj`.
pub fn random_c1_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> MutationMatrix {
    dominated_matrix(d, rng, false)
}

/// Mutation matrix satisfying the weak inequalities with `M*` irreducible;
/// some off-diagonal entries of `M*` are exactly zero.
pub fn random_c2_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> MutationMatrix {
    dominated_matrix(d, rng, true)
}

// Rows i < d are m_dj + (1 - sum_{j<d} m_dj) w_i with w_i on the simplex, so
// m_ij >= m_dj holds by construction and rows sum to one.
fn dominated_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R, sparse: bool) -> MutationMatrix {
    let k = d - 1;
    let last: Vec<f64> = (0..k).map(|_| 0.02 + 0.2 * rng.gen::<f64>() / k as f64).collect();
    let spent: f64 = last.iter().sum();
    let mut rows = Vec::with_capacity(d);
    for i in 0..k {
        let mut w = simplex_point(d, rng);
        if sparse {
            for (j, v) in w.iter_mut().enumerate().take(k) {
                // keep the cycle i -> i+1 (mod k) and the diagonal
                if j != i && j != (i + 1) % k && rng.gen::<f64>() < 0.5 {
                    *v = 0.0;
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        let mut row: Vec<f64> = (0..k).map(|j| last[j] + (1.0 - spent) * w[j]).collect();
        row.push((1.0 - spent) * w[k]);
        rows.push(row);
    }
    let mut lrow = last;
    lrow.push(1.0 - spent);
    rows.push(lrow);
    MutationMatrix::new(rows).expect("dominated construction is valid")
}

/// A random model of any family on a lattice with `2 <= d <= max_d` and
/// `1 <= N <= max_n`. Moran models get a matrix satisfying a monotonicity
/// condition.
pub fn random_model<R: Rng + ?Sized>(max_n: u32, max_d: usize, rng: &mut R) -> ModelSpec {
    let n = rng.gen_range(1..=max_n);
    let d = rng.gen_range(2..=max_d);
    let s = rng.gen_range(1..=n);
    let alpha: Vec<f64> = (0..d).map(|_| 0.2 + 3.0 * rng.gen::<f64>()).collect();
    match rng.gen_range(0..6) {
        0 => ModelSpec::moran_general(n, random_c1_matrix(d, rng)).unwrap(),
        1 => ModelSpec::moran_standard(n, 0.05 + 0.95 * rng.gen::<f64>(), simplex_point(d, rng))
            .unwrap_or_else(|_| ModelSpec::moran_standard(n, 0.5, vec![1.0 / d as f64; d]).unwrap()),
        2 => ModelSpec::polya(PolyaOrder::Level, n, s, alpha).unwrap(),
        3 => ModelSpec::polya(PolyaOrder::UpDown, n, s, alpha).unwrap(),
        4 => ModelSpec::polya(PolyaOrder::DownUp, n, s, alpha).unwrap(),
        _ => {
            let p = simplex_point(d, rng);
            ModelSpec::ehrenfest(n, s, p.clone())
                .unwrap_or_else(|_| ModelSpec::ehrenfest(n, s, vec![1.0 / d as f64; d]).unwrap())
        }
    }
}
