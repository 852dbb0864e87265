use std::sync::Arc;

use fracsim_pcuq::surrogate::sample_surrogate;
use fracsim_pcuq::{sample_moments, surrogate_eval, PCExpansion, Projector, RuleKind, SparseGrid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn projector(level: usize) -> Projector {
    Projector::new(Arc::new(SparseGrid::new(3, RuleKind::GaussPatterson, level).unwrap()))
}

fn project(p: &Projector, f: impl Fn(&[f64]) -> f64) -> PCExpansion {
    p.project(&p.grid.nodes.iter().map(|x| f(x)).collect::<Vec<_>>())
        .unwrap()
}

fn smooth(x: &[f64]) -> f64 {
    (x[0] + x[1] * x[2]).exp()
}

fn max_error(level: usize) -> f64 {
    let pc = project(&projector(level), smooth);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..1000)
        .map(|_| {
            let xi: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            (surrogate_eval(&pc, &xi).unwrap() - smooth(&xi)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn surrogate_error_decreases_with_level() {
    let errors: Vec<f64> = (2..=5).map(max_error).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn moments_agree_with_monte_carlo() {
    let pc = project(&projector(3), smooth);
    let mc = sample_moments(&sample_surrogate(&pc, 100_000, 17));
    assert!((pc.mean() - mc.mean).abs() < 3.0 * mc.mean_std_error);
    assert!((pc.variance() - mc.variance).abs() < 3.0 * mc.variance_std_error);
}

#[test]
fn clenshaw_curtis_grids_also_converge() {
    let mut errors = Vec::new();
    for level in 2..=5 {
        let p = Projector::new(Arc::new(SparseGrid::new(3, RuleKind::ClenshawCurtis, level).unwrap()));
        let pc = project(&p, smooth);
        let xi = [0.3, 0.8, 0.45];
        errors.push((surrogate_eval(&pc, &xi).unwrap() - smooth(&xi)).abs());
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn expansions_in_the_span_are_reproduced(seed in any::<u64>()) {
        let p = projector(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<f64> = (0..p.basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let truth = PCExpansion { basis: p.basis.clone(), modes: modes.clone() };
        let samples: Vec<f64> = p.grid.nodes.iter().map(|x| surrogate_eval(&truth, x).unwrap()).collect();
        let back = p.project(&samples).unwrap();
        for (a, b) in back.modes.iter().zip(&modes) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
