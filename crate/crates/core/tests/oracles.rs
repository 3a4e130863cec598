use bigan_core::cpwl::{build_transport_pair, verify_bijection};
use bigan_core::ipm::{dudley_distance, wasserstein1_transport};
use bigan_core::relu_net::ReluNetwork;
use bigan_core::{DiscreteMeasure, LipschitzSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Equal-size uniform measures: the optimal coupling is a permutation.
fn min_matching(u: &[Vec<f64>], v: &[Vec<f64>], cost: impl Fn(f64) -> f64) -> f64 {
    permutations(u.len())
        .iter()
        .map(|p| {
            (0..u.len())
                .map(|i| cost(dist(&u[i], &v[p[i]])))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
        / u.len() as f64
}

fn cloud(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, dim), n)
}

fn two_clouds() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..=6, 1usize..=3).prop_flat_map(|(n, dim)| (cloud(n, dim), cloud(n, dim)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dudley_matches_matching_enumeration((u, v) in two_clouds(), bound in 0.1..4.0f64) {
        let mu = DiscreteMeasure::uniform(u.clone()).unwrap();
        let nu = DiscreteMeasure::uniform(v.clone()).unwrap();
        let got = dudley_distance(&mu, &nu, &LipschitzSpec::bounded(bound).unwrap()).unwrap().value;
        let want = min_matching(&u, &v, |r| r.min(2.0 * bound));
        prop_assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn w1_matches_matching_enumeration((u, v) in two_clouds()) {
        let mu = DiscreteMeasure::uniform(u.clone()).unwrap();
        let nu = DiscreteMeasure::uniform(v.clone()).unwrap();
        let got = wasserstein1_transport(&mu, &nu).unwrap().value;
        prop_assert!((got - min_matching(&u, &v, |r| r)).abs() < 1e-9);
    }

    #[test]
    fn realized_pair_interpolates(seed in any::<u64>(), n in 1usize..=64, d in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<Vec<f64>> = (0..n).map(|_| vec![rand::Rng::random_range(&mut rng, -5.0..5.0)]).collect();
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rand::Rng::random_range(&mut rng, -5.0..5.0)).collect())
            .collect();
        let pair = build_transport_pair(&z, &x, 0.5).unwrap();
        let (g, e) = pair.networks().unwrap();
        let report = verify_bijection(&g, &e, &z, &x, &pair.pairing, 1e-9).unwrap();
        prop_assert!(report.pass, "{report:?}");
    }

    #[test]
    fn backward_matches_central_differences(seed in any::<u64>(), depth in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![3];
        sizes.extend(std::iter::repeat_n(6, depth - 1));
        sizes.push(2);
        let net = ReluNetwork::glorot_uniform(&sizes, &mut rng).unwrap();
        let x = [0.7, -1.3, 0.4];
        let up = [1.0, -0.5];
        let loss = |p: &[f64]| -> f64 {
            net.forward(p).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum()
        };
        let h = 1e-5;
        let grads = net.backward(&x, &up).unwrap();
        for i in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[i] += h;
            xm[i] -= h;
            let (lp, l0, lm) = (loss(&xp), loss(&x), loss(&xm));
            // Skip draws where a perturbation crosses a kink.
            prop_assume!(((lp - l0) - (l0 - lm)).abs() < 1e-12);
            let fd = (lp - lm) / (2.0 * h);
            let scale = grads.input[i].abs().max(1e-6);
            prop_assert!((fd - grads.input[i]).abs() / scale < 1e-4 || (fd - grads.input[i]).abs() < 1e-9);
        }
    }
}
