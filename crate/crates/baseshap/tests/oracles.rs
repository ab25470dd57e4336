//! Independent brute-force oracles for the closed-form algorithms.

use baseshap::attribution::{
    interaction, interaction_recursive, interaction_table, order_spectrum, shapley_exact,
    shapley_interaction_index, shapley_order,
};
use baseshap::game::{Coalition, CoalitionGame, TableGame};

/// Factorial-weight Shapley straight from the definition, enumerating all
/// n! orderings.
fn shapley_by_permutations(game: &TableGame) -> Vec<f64> {
    let n = game.n();
    let mut order: Vec<usize> = (0..n).collect();
    let mut phi = vec![0.0; n];
    let mut count = 0usize;
    permute(&mut order, 0, &mut |perm| {
        let mut prefix = Coalition::empty(n).unwrap();
        let mut prev = game.value(prefix).unwrap();
        for &i in perm {
            prefix = prefix.with(i);
            let cur = game.value(prefix).unwrap();
            phi[i] += cur - prev;
            prev = cur;
        }
        count += 1;
    });
    for p in &mut phi {
        *p /= count as f64;
    }
    phi
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[test]
fn exact_shapley_matches_permutation_enumeration() {
    for trial in 0..20u64 {
        let n = 3 + (trial % 4) as usize; // up to 6!
        let game = TableGame::random(n, 100 + trial);
        let fast = shapley_exact(&game).unwrap().phi;
        let slow = shapley_by_permutations(&game);
        for i in 0..n {
            assert!((fast[i] - slow[i]).abs() < 1e-9, "var {i}: {} vs {}", fast[i], slow[i]);
        }
    }
}

#[test]
fn closed_form_interaction_matches_recursion() {
    for trial in 0..20u64 {
        let n = 3 + (trial % 4) as usize;
        let game = TableGame::random(n, 200 + trial);
        for bits in 0..(1u32 << n) {
            let s = Coalition::new(bits, n).unwrap();
            if s.cardinality() < 2 {
                continue;
            }
            let a = interaction(&game, s).unwrap();
            let b = interaction_recursive(&game, s).unwrap();
            assert!((a - b).abs() < 1e-10, "S={bits:#b}: {a} vs {b}");
        }
    }
}

#[test]
fn interaction_table_matches_closed_form() {
    for trial in 0..10u64 {
        let n = 3 + (trial % 4) as usize;
        let game = TableGame::random(n, 300 + trial);
        let table = interaction_table(&game, None).unwrap();
        assert_eq!(
            table.entries().len(),
            (1usize << n) - 1 - n // all subsets minus empty and singletons
        );
        for &(s, value) in table.entries() {
            let direct = interaction(&game, s).unwrap();
            assert!((value - direct).abs() < 1e-10);
        }
    }
}

#[test]
fn singleton_interaction_index_is_shapley_value() {
    for trial in 0..10u64 {
        let n = 3 + (trial % 4) as usize;
        let game = TableGame::random(n, 400 + trial);
        let phi = shapley_exact(&game).unwrap().phi;
        for i in 0..n {
            let sii = shapley_interaction_index(&game, Coalition::from_members(&[i], n).unwrap())
                .unwrap();
            assert!((sii - phi[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn order_spectrum_matches_direct_interaction_sums() {
    for trial in 0..10u64 {
        let n = 3 + (trial % 4) as usize;
        let game = TableGame::random(n, 500 + trial);
        let spec = order_spectrum(&game).unwrap();
        assert!(!spec.degenerate);
        let v_empty = game.value(Coalition::empty(n).unwrap()).unwrap();
        let mut mass = vec![0.0f64; n + 1];
        for i in 0..n {
            mass[1] += (game.value(Coalition::from_members(&[i], n).unwrap()).unwrap() - v_empty)
                .abs();
        }
        for bits in 0..(1u32 << n) {
            let s = Coalition::new(bits, n).unwrap();
            if s.cardinality() >= 2 {
                mass[s.cardinality()] += interaction(&game, s).unwrap().abs();
            }
        }
        let total: f64 = mass.iter().sum();
        assert!((spec.normalizer - total).abs() < 1e-9);
        for m in 1..=n {
            assert!((spec.r[m] - mass[m] / total).abs() < 1e-9, "order {m}");
        }
        let ratio_sum: f64 = spec.r.iter().sum();
        assert!((ratio_sum - 1.0).abs() < 1e-9);
    }
}

#[test]
fn order_components_average_to_shapley() {
    for trial in 0..10u64 {
        let n = 3 + (trial % 4) as usize;
        let game = TableGame::random(n, 600 + trial);
        let phi = shapley_exact(&game).unwrap().phi;
        for i in 0..n {
            let mean: f64 = (0..n)
                .map(|m| shapley_order(&game, i, m, usize::MAX, None).unwrap())
                .sum::<f64>()
                / n as f64;
            assert!((mean - phi[i]).abs() < 1e-9);
        }
    }
}
