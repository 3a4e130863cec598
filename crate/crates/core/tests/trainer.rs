use bigan_core::data::sample;
use bigan_core::ipm::{dudley_distance, joint_pushforward, JointOrder};
use bigan_core::relu_net::ReluNetwork;
use bigan_core::trainer::{
    empirical_objective, estimate_nn_distance, measure_decomposition, train, DecompositionConfig,
    DiscConfig, TrainingConfig,
};
use bigan_core::{DataSpec, DiscreteMeasure, LipschitzSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit_interval(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let spec = DataSpec::uniform_cube(1, 0.5).unwrap();
    sample(&spec, n, seed)
        .unwrap()
        .into_iter()
        .map(|p| vec![p[0] + 0.5])
        .collect()
}

#[test]
fn symmetric_uniform_problem_trains_to_near_zero() {
    let n = 64;
    let z = unit_interval(n, 1);
    let x = unit_interval(n, 2);
    let mut cfg = TrainingConfig::for_problem(n, 1, 1);
    cfg.outer_steps = 500;
    cfg.seed = 3;
    let state = train(&cfg, &z, &x).unwrap();
    let j = *state.trace.last().unwrap();
    assert!(j.abs() <= 0.1, "final objective {j}");
    assert_eq!(
        j,
        empirical_objective(&state.f, &state.g, &state.e, &z, &x).unwrap()
    );

    // Rescaled into the bounded 1-Lipschitz class, the critic's gap is below the exact sup.
    let gen = joint_pushforward(&z, &state.g, JointOrder::OutputFirst).unwrap();
    let enc = joint_pushforward(&x, &state.e, JointOrder::InputFirst).unwrap();
    let exact = dudley_distance(&gen, &enc, &LipschitzSpec::bounded(cfg.bound()).unwrap())
        .unwrap()
        .value;
    let scale = certify_scale(
        &state.f,
        gen.points().iter().chain(enc.points()),
        cfg.bound(),
    );
    assert!(
        j.abs() <= exact * scale + 1e-9,
        "|J| {j} vs Dudley {exact}, scale {scale}"
    );
}

/// Smallest `s ≥ 1` such that `f/s` is 1-Lipschitz and bounded by `bound` on the points.
fn certify_scale<'a>(f: &ReluNetwork, pts: impl Iterator<Item = &'a Vec<f64>>, bound: f64) -> f64 {
    let pts: Vec<&Vec<f64>> = pts.collect();
    let vals: Vec<f64> = pts.iter().map(|p| f.scalar(p)).collect();
    let mut s = vals.iter().fold(1.0f64, |m, v| m.max(v.abs() / bound));
    for i in 0..pts.len() {
        for j in 0..i {
            let r: f64 = pts[i]
                .iter()
                .zip(pts[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if r > 0.0 {
                s = s.max((vals[i] - vals[j]).abs() / r);
            }
        }
    }
    s
}

#[test]
fn untrained_pair_satisfies_decomposition() {
    let (n, d, k) = (32, 2, 1);
    let bound = 2f64.sqrt() * (n as f64).ln();
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let g = ReluNetwork::glorot_uniform(&[k, 8, 8, d], &mut rng).unwrap();
        let e = ReluNetwork::glorot_uniform(&[d, 8, 8, k], &mut rng).unwrap();
        let base = 4 * trial;
        let tz = sample(&DataSpec::standard_gaussian(k), n, base).unwrap();
        let tx = sample(&DataSpec::standard_gaussian(d), n, base + 1).unwrap();
        let fz = sample(&DataSpec::standard_gaussian(k), n, base + 2).unwrap();
        let fx = sample(&DataSpec::standard_gaussian(d), n, base + 3).unwrap();
        let cfg = DecompositionConfig {
            probes: 20,
            seed: trial,
            ..DecompositionConfig::default()
        };
        let dec = measure_decomposition(&g, &e, &tz, &tx, &fz, &fx, bound, &cfg, &[]).unwrap();
        assert!(
            dec.holds,
            "trial {trial}: measured {} > budget {}",
            dec.measured, dec.budget.total
        );
    }
}

#[test]
fn certified_estimate_never_exceeds_dudley() {
    for seed in 0..10u64 {
        let a = sample(&DataSpec::standard_gaussian(2), 20, 2 * seed).unwrap();
        let b = sample(
            &DataSpec::gaussian(vec![1.0, 0.0], vec![1.0, 0.5]).unwrap(),
            20,
            2 * seed + 1,
        )
        .unwrap();
        let (mu, nu) = (
            DiscreteMeasure::uniform(a).unwrap(),
            DiscreteMeasure::uniform(b).unwrap(),
        );
        let cfg = DiscConfig {
            seed,
            ..DiscConfig::default()
        };
        let est = estimate_nn_distance(&mu, &nu, &cfg, 200).unwrap();
        let exact = dudley_distance(&mu, &nu, &LipschitzSpec::bounded(cfg.bound).unwrap())
            .unwrap()
            .value;
        assert!(est.certified <= exact + 1e-9, "{} > {exact}", est.certified);
    }
}
