use apdp::datagen::{gen_almost_periodic, gen_correlated_counterexample, AlmostPeriodicParams};
use apdp::periodicity::correlation_from_decomposition;
use apdp::{correlation_matrix, decompose, decompose_with_periodic, NoiseRng, Period, Verdict};
use proptest::prelude::*;

type Blocks = Vec<Vec<Vec<f64>>>;

fn random_blocks(j: usize, k: usize, t: usize, seed: u64) -> Blocks {
    let mut rng = NoiseRng::seed_from_u64(seed);
    (0..j)
        .map(|_| (0..k).map(|_| (0..t).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).collect())
        .collect()
}

fn blocks_strategy() -> impl Strategy<Value = Blocks> {
    (2usize..6, 1usize..5, 1usize..5, any::<u64>()).prop_map(|(j, k, t, s)| random_blocks(j, k, t, s))
}

proptest! {
    #[test]
    fn scale_invariance(blocks in blocks_strategy(), gamma in 0.01f64..100.0) {
        let scaled: Blocks = blocks.iter().map(|r| r.iter().map(|b| b.iter().map(|v| v * gamma).collect()).collect()).collect();
        let a = correlation_matrix(&blocks).unwrap();
        let b = correlation_matrix(&scaled).unwrap();
        for (ra, rb) in a.rho.iter().zip(&b.rho) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn realization_permutation_invariance(blocks in blocks_strategy(), rot in 0usize..5) {
        let mut permuted = blocks.clone();
        let len = permuted.len();
        permuted.rotate_left(rot % len);
        permuted.reverse();
        let a = correlation_matrix(&blocks).unwrap();
        let b = correlation_matrix(&permuted).unwrap();
        for (ra, rb) in a.rho.iter().zip(&b.rho) {
            for (x, y) in ra.iter().zip(rb) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn period_permutation_equivariance(blocks in blocks_strategy(), rot in 0usize..4) {
        let k = blocks[0].len();
        let perm: Vec<usize> = (0..k).map(|i| (i + rot) % k).rev().collect();
        let permuted: Blocks = blocks.iter().map(|r| perm.iter().map(|&p| r[p].clone()).collect()).collect();
        let a = correlation_matrix(&blocks).unwrap();
        let b = correlation_matrix(&permuted).unwrap();
        for x in 0..k {
            for y in 0..k {
                prop_assert!((b.rho[x][y] - a.rho[perm[x]][perm[y]]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn copied_blocks_are_perfectly_correlated() {
    let mut blocks = random_blocks(30, 4, 5, 77);
    for r in &mut blocks {
        r[2] = r[1].clone();
    }
    let rep = correlation_matrix(&blocks).unwrap();
    assert!((rep.rho[1][2] - 1.0).abs() < 1e-9);
}

#[test]
fn independent_blocks_stay_weakly_correlated() {
    // J = 100 realizations, K = 20 periods, T = 10, one block constant plus
    // smaller noise per instant, independent across periods.
    let p = AlmostPeriodicParams::new(100, 20, 10);
    let mut below = 0;
    for seed in 0..20 {
        let panel = gen_almost_periodic(&p, seed).unwrap();
        let dec = decompose_with_periodic(&panel.data, &panel.periodic).unwrap();
        let rep = correlation_from_decomposition(&dec).unwrap();
        if rep.max_offdiag < 0.35 {
            below += 1;
        }
    }
    assert!(below >= 19, "{below}/20 seeds below 0.35");
}

#[test]
fn synthetic_pipeline_verdicts() {
    let p = AlmostPeriodicParams::new(100, 20, 10);
    let period = Period::new(10).unwrap();
    let consistent = (0..20)
        .filter(|&s| {
            let panel = gen_almost_periodic(&p, 100 + s).unwrap();
            let rep = correlation_from_decomposition(&decompose(&panel.data, period).unwrap()).unwrap();
            rep.verdict == Verdict::ConsistentWithAlmostPeriodicity
        })
        .count();
    assert!(consistent >= 19);

    let panel = gen_correlated_counterexample(100, 20, 10, 3).unwrap();
    let rep = correlation_from_decomposition(&decompose(&panel.data, period).unwrap()).unwrap();
    assert_eq!(rep.verdict, Verdict::Inconsistent);
    assert!(rep.median_offdiag > 0.9);
}
