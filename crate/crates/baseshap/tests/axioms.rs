//! Shapley axioms checked on random coalition-value tables.

use baseshap::attribution::shapley_exact;
use baseshap::game::{Coalition, CoalitionGame, TableGame};
use baseshap::rng::derive_rng;
use rand::Rng;

const TOL: f64 = 1e-9;

fn table_of(game: &TableGame) -> Vec<f64> {
    let n = game.n();
    (0..1u32 << n)
        .map(|bits| game.value(Coalition::new(bits, n).unwrap()).unwrap())
        .collect()
}

#[test]
fn efficiency_on_random_games() {
    for trial in 0..200u64 {
        let n = 3 + (trial % 6) as usize;
        let game = TableGame::random(n, trial);
        let report = shapley_exact(&game).unwrap();
        let total: f64 = report.phi.iter().sum();
        assert!(
            (total - (report.v_full - report.v_empty)).abs() < TOL,
            "trial {trial}: sum(phi)={total} vs {}",
            report.v_full - report.v_empty
        );
    }
}

#[test]
fn linearity_on_random_games() {
    for trial in 0..50u64 {
        let n = 3 + (trial % 5) as usize;
        let a = TableGame::random(n, 1000 + trial);
        let b = TableGame::random(n, 2000 + trial);
        let mut rng = derive_rng(trial, &[0x11]);
        let (alpha, beta): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let combined_values: Vec<f64> = table_of(&a)
            .iter()
            .zip(table_of(&b))
            .map(|(&va, vb)| alpha * va + beta * vb)
            .collect();
        let combined = TableGame::new(n, combined_values).unwrap();
        let pa = shapley_exact(&a).unwrap().phi;
        let pb = shapley_exact(&b).unwrap().phi;
        let pc = shapley_exact(&combined).unwrap().phi;
        for i in 0..n {
            assert!((pc[i] - (alpha * pa[i] + beta * pb[i])).abs() < TOL);
        }
    }
}

#[test]
fn nullity_with_appended_dummy() {
    for trial in 0..50u64 {
        let n = 3 + (trial % 5) as usize;
        let base = TableGame::random(n, 3000 + trial);
        let base_values = table_of(&base);
        // Variable n is a dummy: the value ignores its membership.
        let extended: Vec<f64> = (0..1usize << (n + 1))
            .map(|bits| base_values[bits & ((1 << n) - 1)])
            .collect();
        let game = TableGame::new(n + 1, extended).unwrap();
        let report = shapley_exact(&game).unwrap();
        assert!(report.phi[n].abs() < TOL, "dummy got {}", report.phi[n]);
        let base_report = shapley_exact(&base).unwrap();
        for i in 0..n {
            assert!((report.phi[i] - base_report.phi[i]).abs() < TOL);
        }
    }
}

#[test]
fn symmetry_of_interchangeable_variables() {
    // Symmetrize a random game over a transposition (i j); the two
    // variables then get equal Shapley values.
    for trial in 0..50u64 {
        let n = 4 + (trial % 4) as usize;
        let base = TableGame::random(n, 4000 + trial);
        let values = table_of(&base);
        let (i, j) = (0usize, 1usize);
        let swap = |bits: usize| -> usize {
            let bi = bits >> i & 1;
            let bj = bits >> j & 1;
            (bits & !(1 << i) & !(1 << j)) | (bj << i) | (bi << j)
        };
        let sym: Vec<f64> = (0..1usize << n)
            .map(|bits| 0.5 * (values[bits] + values[swap(bits)]))
            .collect();
        let game = TableGame::new(n, sym).unwrap();
        let report = shapley_exact(&game).unwrap();
        assert!((report.phi[i] - report.phi[j]).abs() < TOL);
    }
}
