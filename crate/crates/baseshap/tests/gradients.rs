//! Central finite-difference oracles for every analytic gradient path:
//! expression graphs, MLP input gradients, and the two learning losses.

use baseshap::expr::ExprGraph;
use baseshap::game::{Backend, BaselineVector, GameSpec, Transform};
use baseshap::learn::{loss_with_draws, make_draws, LossKind};
use baseshap::mlp::{GradTarget, MlpModel};
use baseshap::rng::derive_rng;
use baseshap::synth::tsang_suite;
use rand::Rng;

fn central_diff(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            hi[j] += h;
            lo[j] -= h;
            (f(&hi) - f(&lo)) / (2.0 * h)
        })
        .collect()
}

fn assert_close_rel(analytic: &[f64], numeric: &[f64], rel: f64, ctx: &str) {
    for (j, (&a, &b)) in analytic.iter().zip(numeric).enumerate() {
        let scale = a.abs().max(b.abs()).max(1.0);
        assert!(
            (a - b).abs() <= rel * scale,
            "{ctx}: component {j}: analytic {a} vs numeric {b}"
        );
    }
}

#[test]
fn expr_gradients_match_finite_differences_on_bundled_suite() {
    for func in tsang_suite() {
        let graph = ExprGraph::parse(&func.expr).unwrap();
        let mut rng = derive_rng(41, &[0xfd]);
        for trial in 0..20 {
            // Interior points keep clear of abs/max kinks and domain edges.
            let x: Vec<f64> = (0..graph.arity())
                .map(|_| rng.gen_range(0.05..0.95))
                .collect();
            let r = graph.grad(&x).unwrap();
            let numeric = central_diff(|p| graph.eval(p).unwrap(), &x, 1e-6);
            assert_close_rel(
                &r.gradient,
                &numeric,
                1e-4,
                &format!("{} trial {trial}", func.name),
            );
        }
    }
}

#[test]
fn mlp_input_gradients_match_finite_differences() {
    for trial in 0..20u64 {
        let input_dim = 3 + (trial % 4) as usize;
        let model = MlpModel::init(input_dim, &[7, 5], 3, 50 + trial).unwrap();
        let mut rng = derive_rng(trial, &[0x9f]);
        let x: Vec<f64> = (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for target in [GradTarget::Logit(1), GradTarget::Prob(2), GradTarget::LogOdds(0)] {
            let (_, grad) = model.value_and_input_gradient(&x, target.clone()).unwrap();
            let numeric = central_diff(
                |p| model.value_and_input_gradient(p, target.clone()).unwrap().0,
                &x,
                1e-6,
            );
            assert_close_rel(&grad, &numeric, 1e-4, &format!("trial {trial} {target:?}"));
        }
    }
}

#[test]
fn feature_l1_gradients_match_finite_differences() {
    let model = MlpModel::init(4, &[6, 5], 2, 9).unwrap();
    let mut rng = derive_rng(3, &[0x1f]);
    for _ in 0..10 {
        let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, ga, gb) = model.feature_l1_diff(&a, &b).unwrap();
        let na = central_diff(|p| model.feature_l1_diff(p, &b).unwrap().0, &a, 1e-6);
        let nb = central_diff(|p| model.feature_l1_diff(&a, p).unwrap().0, &b, 1e-6);
        assert_close_rel(&ga, &na, 1e-4, "first input");
        assert_close_rel(&gb, &nb, 1e-4, "second input");
    }
}

/// Loss gradients against finite differences over b, holding the sampled
/// (m, S) draws fixed across probes.
#[test]
fn loss_gradients_match_finite_differences() {
    let graph = ExprGraph::parse("x1*x2*x3 + 0.7*x2*(x4+x5)^1.7 + sigmoid(3*x1-3*x4+1.5)").unwrap();
    let n = 5;
    let template = GameSpec::new(
        Backend::Expr(graph),
        vec![1.0; n],
        BaselineVector::unit(vec![0.0; n]).unwrap(),
        Transform::Identity,
        None,
    )
    .unwrap();
    let batch = vec![vec![1.0, 0.0, 1.0, 1.0, 0.0], vec![1.0; 5], vec![0.0, 1.0, 1.0, 0.0, 1.0]];
    let mut rng = derive_rng(8, &[0x10ad]);
    for trial in 0..8u64 {
        let b_values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..0.9)).collect();
        let draws = make_draws(n, 2, batch.len(), 4, 16, 99, trial).unwrap();
        for kind in [LossKind::Shapley, LossKind::Marginal] {
            let b = BaselineVector::unit(b_values.clone()).unwrap();
            let (_, grad) =
                loss_with_draws(&template, &batch, &b, kind, false, &draws).unwrap();
            let numeric = central_diff(
                |p| {
                    let bp = BaselineVector::unit(p.to_vec()).unwrap();
                    loss_with_draws(&template, &batch, &bp, kind, false, &draws)
                        .unwrap()
                        .0
                },
                &b_values,
                1e-4,
            );
            assert_close_rel(&grad, &numeric, 1e-3, &format!("{kind:?} trial {trial}"));
        }
    }
}

/// Same check through an MLP backend with the log-odds transform and the
/// intermediate-feature marginal variant.
#[test]
fn loss_gradients_match_finite_differences_mlp() {
    let n = 4;
    let model = MlpModel::init(n, &[6, 5], 2, 31).unwrap();
    let template = GameSpec::new(
        Backend::Mlp(model),
        vec![1.0; n],
        BaselineVector::unit(vec![0.0; n]).unwrap(),
        Transform::LogOdds,
        Some(1),
    )
    .unwrap();
    let batch = vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]];
    let mut rng = derive_rng(12, &[0x10ae]);
    for trial in 0..5u64 {
        let b_values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..0.9)).collect();
        let draws = make_draws(n, 2, batch.len(), 3, 8, 7, trial).unwrap();
        for (kind, feature) in [
            (LossKind::Shapley, false),
            (LossKind::Marginal, false),
            (LossKind::Marginal, true),
        ] {
            let b = BaselineVector::unit(b_values.clone()).unwrap();
            let (_, grad) =
                loss_with_draws(&template, &batch, &b, kind, feature, &draws).unwrap();
            let numeric = central_diff(
                |p| {
                    let bp = BaselineVector::unit(p.to_vec()).unwrap();
                    loss_with_draws(&template, &batch, &bp, kind, feature, &draws)
                        .unwrap()
                        .0
                },
                &b_values,
                1e-4,
            );
            assert_close_rel(
                &grad,
                &numeric,
                1e-3,
                &format!("{kind:?} feature={feature} trial {trial}"),
            );
        }
    }
}
