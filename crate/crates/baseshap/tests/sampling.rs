//! Statistical behavior of the sampled estimators.

use baseshap::attribution::{shapley_exact, shapley_order, shapley_sampled};
use baseshap::game::{CoalitionGame, TableGame};

/// Averaging sampled estimates over many seeds approaches the exact
/// value (unbiasedness), and the error shrinks with more permutations.
#[test]
fn sampled_shapley_is_unbiased_across_seeds() {
    let n = 8;
    let game = TableGame::random(n, 21);
    let exact = shapley_exact(&game).unwrap().phi;
    let seeds = 200u64;
    let mut mean = vec![0.0; n];
    for seed in 0..seeds {
        let est = shapley_sampled(&game, 200, seed).unwrap().phi;
        for i in 0..n {
            mean[i] += est[i] / seeds as f64;
        }
    }
    // Pooled stderr is about 0.004; 0.03 leaves ample headroom.
    for i in 0..n {
        assert!(
            (mean[i] - exact[i]).abs() < 0.03,
            "var {i}: pooled mean {} vs exact {}",
            mean[i],
            exact[i]
        );
    }
}

#[test]
fn error_shrinks_with_more_permutations() {
    let n = 8;
    let game = TableGame::random(n, 22);
    let exact = shapley_exact(&game).unwrap().phi;
    let rmse = |perms: usize| -> f64 {
        let mut acc = 0.0;
        let seeds = 20u64;
        for seed in 100..100 + seeds {
            let est = shapley_sampled(&game, perms, seed).unwrap().phi;
            acc += (0..n).map(|i| (est[i] - exact[i]).powi(2)).sum::<f64>();
        }
        (acc / (seeds as f64 * n as f64)).sqrt()
    };
    let coarse = rmse(10);
    let fine = rmse(160);
    // 16x the samples should cut the error by about 4x; allow slack.
    assert!(fine < coarse / 2.0, "rmse {coarse} -> {fine}");
}

#[test]
fn reported_stderr_covers_the_true_value() {
    let n = 9;
    let game = TableGame::random(n, 23);
    let exact = shapley_exact(&game).unwrap().phi;
    let mut within = 0usize;
    let mut total = 0usize;
    for seed in 0..40u64 {
        let report = shapley_sampled(&game, 200, seed).unwrap();
        let stderr = report.stderr.unwrap();
        for i in 0..n {
            total += 1;
            if (report.phi[i] - exact[i]).abs() <= 3.0 * stderr[i] {
                within += 1;
            }
        }
    }
    // 3-sigma coverage should be nearly complete.
    assert!(
        within as f64 / total as f64 >= 0.95,
        "{within}/{total} within 3 stderr"
    );
}

#[test]
fn sampled_order_component_is_unbiased() {
    let n = 10;
    let game = TableGame::random(n, 24);
    let i = 3;
    let m = 5;
    let exact = shapley_order(&game, i, m, usize::MAX, None).unwrap();
    let seeds = 80u64;
    let mut mean = 0.0;
    for seed in 0..seeds {
        // Cap of 1 forces the sampled path.
        mean += shapley_order(&game, i, m, 1, Some((50, seed))).unwrap() / seeds as f64;
    }
    assert!((mean - exact).abs() < 0.03, "pooled {mean} vs exact {exact}");
}
