use std::collections::BTreeMap;

use monochain::kernels::sample_step;
use monochain::{Composition, ModelSpec, PolyaOrder};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn empirical_tv(spec: &ModelSpec, x: &Composition, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<Composition, usize> = BTreeMap::new();
    for _ in 0..samples {
        *counts.entry(sample_step(spec, x, &mut rng)).or_default() += 1;
    }
    let row = spec.row(x).unwrap();
    let mut tv = 0.0;
    for (y, &p) in &row.probs {
        let q = counts.get(y).copied().unwrap_or(0) as f64 / samples as f64;
        tv += (p - q).abs();
    }
    for y in counts.keys() {
        assert!(row.prob(y) > 0.0, "sampled impossible state {y}");
    }
    0.5 * tv
}

#[test]
fn moran_sampler_matches_row() {
    let spec = ModelSpec::moran_standard(4, 0.4, vec![0.2, 0.3, 0.5]).unwrap();
    let x = Composition::from_counts(vec![1, 2, 1]).unwrap();
    assert!(empirical_tv(&spec, &x, 100_000, 1) <= 0.01);
}

#[test]
fn urn_samplers_match_rows() {
    let x = Composition::from_counts(vec![2, 1, 3]).unwrap();
    let specs = [
        ModelSpec::polya(PolyaOrder::Level, 6, 2, vec![0.5, 1.0, 2.0]).unwrap(),
        ModelSpec::polya(PolyaOrder::UpDown, 6, 2, vec![0.5, 1.0, 2.0]).unwrap(),
        ModelSpec::polya(PolyaOrder::DownUp, 6, 2, vec![0.5, 1.0, 2.0]).unwrap(),
        ModelSpec::ehrenfest(6, 2, vec![0.2, 0.3, 0.5]).unwrap(),
    ];
    for (k, spec) in specs.iter().enumerate() {
        let tv = empirical_tv(spec, &x, 100_000, 10 + k as u64);
        assert!(tv <= 0.01, "{}: {tv}", spec.family());
    }
}

#[test]
fn sampler_is_deterministic_per_seed() {
    let spec = ModelSpec::ehrenfest(10, 3, vec![0.1, 0.2, 0.7]).unwrap();
    let x = Composition::from_counts(vec![3, 3, 4]).unwrap();
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = x.clone();
        (0..50).map(|_| {
            y = sample_step(&spec, &y, &mut rng);
            y.clone()
        }).collect::<Vec<_>>()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}
