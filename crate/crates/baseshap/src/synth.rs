//! Synthetic functions with known ground-truth baselines: a seeded
//! template generator, the bundled annotated suite over [0.001, 0.999],
//! and batch scoring of learned baselines.

use crate::error::{Error, Result};
use crate::expr::ExprGraph;
use crate::game::{Backend, BaselineVector, GameSpec, Transform};
use crate::learn::{accuracy, learn, Init, LearnConfig, LearnState, LossKind};
use crate::rng::derive_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

/// One designed interaction pattern: the variables of a single additive
/// term and the value each must take for the term to be active.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pattern {
    pub vars: Vec<usize>,
    /// Activation literal per entry of `vars` (0 or 1 on binary domains).
    pub activation: Vec<f64>,
    /// The term on its own, parseable over the full variable set.
    pub term: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domain {
    Named(String),
    Bounds(Vec<(f64, f64)>),
}

impl Domain {
    pub fn binary() -> Self {
        Domain::Named("binary".into())
    }

    /// Box bounds; binary domains relax to [0, 1] for optimization.
    pub fn bounds(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        match self {
            Domain::Named(s) if s == "binary" => Ok(vec![(0.0, 1.0); n]),
            Domain::Named(s) => Err(Error::Config(format!("unknown domain {s:?}"))),
            Domain::Bounds(b) => {
                if b.len() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: b.len(),
                    });
                }
                Ok(b.clone())
            }
        }
    }
}

/// A function with per-variable optional ground-truth baselines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthFunction {
    pub name: String,
    pub n: usize,
    pub expr: String,
    pub domain: Domain,
    /// Ground-truth baseline per variable; None = unannotated.
    pub truth: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patterns: Vec<Pattern>,
}

impl SynthFunction {
    /// Input that activates every designed pattern. Variables outside all
    /// patterns sit at the midpoint of their bounds; annotated variables
    /// without a pattern sit at the complement of their truth value.
    pub fn activation_point(&self) -> Result<Vec<f64>> {
        let bounds = self.domain.bounds(self.n)?;
        let mut x: Vec<f64> = bounds
            .iter()
            .zip(&self.truth)
            .map(|(&(lo, hi), t)| match t {
                // Complement within the box: truth at lo activates at hi.
                Some(t) => lo + hi - t,
                None => 0.5 * (lo + hi),
            })
            .collect();
        for p in &self.patterns {
            for (&v, &lit) in p.vars.iter().zip(&p.activation) {
                x[v] = lit;
            }
        }
        Ok(x)
    }

    pub fn parse_expr(&self) -> Result<ExprGraph> {
        ExprGraph::parse(&self.expr)
    }

    /// Game over this function: input at the activation point, baseline
    /// initialized to the lower bounds.
    pub fn game(&self) -> Result<GameSpec> {
        let bounds = self.domain.bounds(self.n)?;
        let baseline = BaselineVector::new(bounds.iter().map(|b| b.0).collect(), bounds)?;
        GameSpec::new(
            Backend::Expr(self.parse_expr()?),
            self.activation_point()?,
            baseline,
            Transform::Identity,
            None,
        )
    }
}

/// Writes functions one JSON object per line.
pub fn write_jsonl(path: &Path, functions: &[SynthFunction]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for f in functions {
        serde_json::to_writer(&mut out, f)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<SynthFunction>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn fmt(v: f64) -> String {
    format!("{}", v)
}

struct Term {
    source: String,
    /// (variable, activation literal) pairs; truth is the complement.
    literals: Vec<(usize, f64)>,
}

/// Samples `count` distinct variables, preferring ones not yet covered by
/// any pattern so annotations stay dense.
fn pick_vars<R: Rng>(rng: &mut R, n: usize, count: usize, covered: &[bool]) -> Vec<usize> {
    let mut fresh: Vec<usize> = (0..n).filter(|&i| !covered[i]).collect();
    let mut used: Vec<usize> = (0..n).filter(|&i| covered[i]).collect();
    for pool in [&mut fresh, &mut used] {
        for k in (1..pool.len()).rev() {
            let j = rng.gen_range(0..=k);
            pool.swap(k, j);
        }
    }
    fresh.into_iter().chain(used).take(count).collect()
}

fn sample_term<R: Rng>(rng: &mut R, n: usize, covered: &[bool]) -> Term {
    match rng.gen_range(0..3u8) {
        0 => {
            // Monomial: product of 2-4 variables, active when all are 1.
            let k = rng.gen_range(2..=4usize);
            let vars = pick_vars(rng, n, k, covered);
            let source = vars
                .iter()
                .map(|&v| format!("x{}", v + 1))
                .collect::<Vec<_>>()
                .join("*");
            Term {
                source,
                literals: vars.into_iter().map(|v| (v, 1.0)).collect(),
            }
        }
        1 => {
            // Power: c * x_a * (sum of literals)^p. Negative literals are
            // written 1-x_j to keep the base non-negative on [0,1]^n.
            let inner = rng.gen_range(2..=3usize);
            let vars = pick_vars(rng, n, inner + 1, covered);
            let a = vars[0];
            let c = round3(rng.gen_range(0.3..2.0));
            let p = round3(rng.gen_range(1.1..2.6));
            let mut literals = vec![(a, 1.0)];
            let mut pieces = Vec::new();
            for &v in &vars[1..] {
                if rng.gen_bool(0.5) {
                    pieces.push(format!("x{}", v + 1));
                    literals.push((v, 1.0));
                } else {
                    pieces.push(format!("(1-x{})", v + 1));
                    literals.push((v, 0.0));
                }
            }
            let source = format!("{}*x{}*({})^{}", fmt(c), a + 1, pieces.join("+"), fmt(p));
            Term { source, literals }
        }
        _ => {
            // Sigmoid: activation needs positive-coefficient variables at
            // 1 and negative ones at 0; the offset puts the active point
            // at +k/2 and any single deactivation at -k/2.
            let count = rng.gen_range(2..=3usize);
            let vars = pick_vars(rng, n, count, covered);
            let k = rng.gen_range(3..=8u32) as f64;
            let mut literals = Vec::new();
            let mut arg = String::new();
            let mut positives = 0usize;
            for (idx, &v) in vars.iter().enumerate() {
                let positive = rng.gen_bool(0.5);
                let sign = if positive { "+" } else { "-" };
                if idx > 0 || !positive {
                    arg.push_str(sign);
                }
                arg.push_str(&format!("{}*x{}", fmt(k), v + 1));
                if positive {
                    positives += 1;
                    literals.push((v, 1.0));
                } else {
                    literals.push((v, 0.0));
                }
            }
            let offset = -k * positives as f64 + 0.5 * k;
            if offset >= 0.0 {
                arg.push('+');
            }
            arg.push_str(&fmt(offset));
            Term {
                source: format!("sigmoid({})", arg),
                literals,
            }
        }
    }
}

/// Generates a corpus of binary-domain functions built from monomial,
/// power, and sigmoid templates. Each variable's truth is the literal
/// deactivating every pattern it appears in; terms whose truth would
/// conflict with already-committed terms are resampled. Deterministic
/// under `seed`.
pub fn generate_corpus(count: usize, seed: u64) -> Result<Vec<SynthFunction>> {
    (0..count)
        .map(|idx| {
            let mut rng = derive_rng(seed, &[0x5e17, idx as u64]);
            let n = rng.gen_range(7..=12usize);
            let term_count = rng.gen_range(2..=4usize);
            let mut truth_map: HashMap<usize, f64> = HashMap::new();
            let mut covered = vec![false; n];
            let mut sources = Vec::new();
            let mut patterns = Vec::new();
            for _ in 0..term_count {
                let term = loop {
                    let t = sample_term(&mut rng, n, &covered);
                    let ok = t.literals.iter().all(|&(v, lit)| {
                        truth_map.get(&v).map_or(true, |&tv| tv == 1.0 - lit)
                    });
                    if ok {
                        break t;
                    }
                };
                for &(v, lit) in &term.literals {
                    truth_map.insert(v, 1.0 - lit);
                    covered[v] = true;
                }
                patterns.push(Pattern {
                    vars: term.literals.iter().map(|&(v, _)| v).collect(),
                    activation: term.literals.iter().map(|&(_, l)| l).collect(),
                    term: term.source.clone(),
                });
                let negate = rng.gen_bool(0.5);
                sources.push(if negate {
                    format!("-{}", term.source)
                } else {
                    term.source
                });
            }
            let expr = sources.join(" + ");
            ExprGraph::parse(&expr)?;
            let truth = (0..n).map(|v| truth_map.get(&v).copied()).collect();
            Ok(SynthFunction {
                name: format!("gen{:03}", idx),
                n,
                expr,
                domain: Domain::binary(),
                truth,
                patterns,
            })
        })
        .collect()
}

/// The bundled annotated suite: ten functions on [0.001, 0.999]^10 with
/// 61 ground-truth entries in total. Unannotated variables carry None.
pub fn tsang_suite() -> Vec<SynthFunction> {
    const LO: f64 = 0.001;
    const HI: f64 = 0.999;
    let f = |name: &str, expr: &str, hi: &[usize], lo: &[usize]| {
        let truth = (1..=10usize)
            .map(|i| {
                if hi.contains(&i) {
                    Some(HI)
                } else if lo.contains(&i) {
                    Some(LO)
                } else {
                    None
                }
            })
            .collect();
        SynthFunction {
            name: name.into(),
            n: 10,
            expr: expr.into(),
            domain: Domain::Bounds(vec![(LO, HI); 10]),
            truth,
            patterns: Vec::new(),
        }
    };
    vec![
        f(
            "tsang1",
            "pi^(x1*x2)*sqrt(2*x3) - asin(x4) + log(x3+x5) - (x9/x10)*sqrt(x7/x8) - x2*x7",
            &[5, 8, 10],
            &[1, 2, 7, 9],
        ),
        f(
            "tsang2",
            "pi^(x1*x2)*sqrt(2*abs(x3)) - asin(0.5*x4) + log(abs(x3+x5)+1) + (x9/(1+abs(x10)))*sqrt(x7/(1+abs(x8))) - x2*x7",
            &[5],
            &[1, 2, 7, 9],
        ),
        f(
            "tsang3",
            "exp(abs(x1-x2)) + abs(x2*x3) - x3^(2*abs(x4)) + log(x4^2+x5^2+x7^2+x8^2) + x9 + 1/(1+x10^2)",
            &[3, 5, 7, 8],
            &[],
        ),
        f(
            "tsang4",
            "exp(abs(x1-x2)) + abs(x2*x3) - x3^(2*abs(x4)) + (x1*x4)^2 + log(x4^2+x5^2+x7^2+x8^2) + x9 + 1/(1+x10^2)",
            &[3, 5, 7, 8],
            &[],
        ),
        f(
            "tsang5",
            "1/(1+x1^2+x2^2+x3^2) + sqrt(exp(x4+x5)) + abs(x6+x7) + x8*x9*x10",
            &[1, 2, 3],
            &[4, 5, 8, 9, 10],
        ),
        f(
            "tsang6",
            "exp(abs(x1*x2)+1) - exp(abs(x3+x4)+1) + cos(x5+x6-x8) + sqrt(x8^2+x9^2+x10^2)",
            &[8, 9, 10],
            &[1, 2, 3, 4, 5, 6],
        ),
        f(
            "tsang7",
            "(atan(x1)+atan(x2))^2 + max(x3*x4+x6, 0) - 1/(1+(x4*x5*x6*x7*x8)^2) + (abs(x7)/(1+abs(x9)))^5 + x1+x2+x3+x4+x5+x6+x7+x8+x9+x10",
            &[9],
            &[1, 2, 3, 4, 5, 6, 7, 8],
        ),
        f(
            "tsang8",
            "x1*x2 + 2^(x3+x5+x6) + 2^(x3+x4+x5+x7) + sin(x7*sin(x8+x9)) + acos(0.9*x10)",
            &[],
            &[1, 2, 3, 4, 5, 6],
        ),
        f(
            "tsang9",
            "tanh(x1*x2+x3*x4)*sqrt(abs(x5)) + exp(x5+x6) + log((x6*x7*x8)^2+1) + x9*x10 + 1/(1+abs(x10))",
            &[],
            &[6, 7, 8, 9, 10],
        ),
        f(
            "tsang10",
            "sinh(x1+x2) + acos(tanh(x3+x5+x7)) + cos(x4+x5) + sec(x7*x9)",
            &[3],
            &[1, 2, 4],
        ),
    ]
}

/// One scored learning run.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyRow {
    pub function: String,
    pub loss: LossKind,
    /// Init as a fraction of each variable's domain (0 = lower bound).
    pub init: f64,
    pub accuracy: f64,
    pub final_loss: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    #[serde(default = "default_losses")]
    pub losses: Vec<LossKind>,
    /// Init fill values as domain fractions, e.g. [0.0, 0.5, 1.0].
    #[serde(default = "default_inits")]
    pub inits: Vec<f64>,
    #[serde(default = "default_lambda_frac")]
    pub lambda_frac: f64,
    #[serde(default = "crate::learn::default_steps")]
    pub steps: usize,
    #[serde(default = "crate::learn::default_step_size")]
    pub step_size: f64,
    #[serde(default = "crate::learn::default_orders")]
    pub orders_per_step: usize,
    #[serde(default = "crate::learn::default_contexts")]
    pub contexts_per_order: usize,
    /// Training inputs per function: the activation point plus random
    /// corners of the domain box.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_losses() -> Vec<LossKind> {
    vec![LossKind::Shapley, LossKind::Marginal]
}
fn default_inits() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}
fn default_lambda_frac() -> f64 {
    0.5
}
fn default_jobs() -> usize {
    1
}
fn default_samples() -> usize {
    8
}

impl Default for VerifyConfig {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

fn verify_one(
    func: &SynthFunction,
    loss: LossKind,
    init: f64,
    cfg: &VerifyConfig,
    job_seed: u64,
) -> Result<VerifyRow> {
    let template = func.game()?;
    let bounds = func.domain.bounds(func.n)?;
    // Training inputs: activation point plus random corners, in
    // antithetic pairs (each corner with its complement). A single input
    // would make b = x a degenerate zero-loss solution, and unbalanced
    // corner counts bias the learned value toward the batch majority.
    let complement = |x: &[f64]| -> Vec<f64> {
        bounds.iter().zip(x).map(|(&(lo, hi), &v)| lo + hi - v).collect()
    };
    let act = func.activation_point()?;
    let mut batch = vec![complement(&act), act];
    let mut sample_rng = derive_rng(job_seed, &[0xba7c]);
    while batch.len() < cfg.samples.max(2) {
        let corner: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| if sample_rng.gen_bool(0.5) { hi } else { lo })
            .collect();
        batch.push(complement(&corner));
        batch.push(corner);
    }
    let init_values = bounds
        .iter()
        .map(|&(lo, hi)| lo + init * (hi - lo))
        .collect();
    let learn_cfg = LearnConfig {
        loss,
        lambda_frac: cfg.lambda_frac,
        init: Init::Explicit(init_values),
        steps: cfg.steps,
        step_size: cfg.step_size,
        orders_per_step: cfg.orders_per_step,
        contexts_per_order: cfg.contexts_per_order,
        batch,
        seed: job_seed,
        feature_variant: false,
    };
    let state: LearnState = learn(&learn_cfg, &template)?;
    Ok(VerifyRow {
        function: func.name.clone(),
        loss,
        init,
        accuracy: accuracy(&state.b, &func.truth)?,
        final_loss: *state.loss_trace.last().unwrap_or(&f64::NAN),
        steps: state.loss_trace.len(),
    })
}

/// Runs learning for every (function, loss, init) combination and scores
/// the recovered baselines. Rows come back in deterministic order and are
/// independent of `jobs`: each run's randomness derives only from the
/// verify seed and the combination's indices.
pub fn verify(corpus: &[SynthFunction], cfg: &VerifyConfig) -> Result<Vec<VerifyRow>> {
    if corpus.is_empty() {
        return Err(Error::Argument("empty corpus".into()));
    }
    if cfg.losses.is_empty() || cfg.inits.is_empty() {
        return Err(Error::Config("losses and inits must be non-empty".into()));
    }
    let mut tasks = Vec::new();
    for (fi, func) in corpus.iter().enumerate() {
        for (li, &loss) in cfg.losses.iter().enumerate() {
            for (ii, &init) in cfg.inits.iter().enumerate() {
                let job_seed = derive_rng(cfg.seed, &[0x5eed, fi as u64, li as u64, ii as u64])
                    .gen::<u64>();
                tasks.push((func, loss, init, job_seed));
            }
        }
    }
    let jobs = cfg.jobs.max(1);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<std::sync::Mutex<Option<Result<VerifyRow>>>> =
        (0..tasks.len()).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(tasks.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if idx >= tasks.len() {
                    break;
                }
                let (func, loss, init, job_seed) = &tasks[idx];
                let row = verify_one(func, *loss, *init, cfg, *job_seed);
                *results[idx].lock().unwrap() = Some(row);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("worker covered every task"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::order_spectrum;

    #[test]
    fn suite_annotation_count_is_61() {
        let suite = tsang_suite();
        assert_eq!(suite.len(), 10);
        let total: usize = suite
            .iter()
            .map(|f| f.truth.iter().filter(|t| t.is_some()).count())
            .sum();
        assert_eq!(total, 61);
        // First function spot check.
        let t = &suite[0].truth;
        for i in [5, 8, 10] {
            assert_eq!(t[i - 1], Some(0.999));
        }
        for i in [1, 2, 7, 9] {
            assert_eq!(t[i - 1], Some(0.001));
        }
        assert_eq!(t[2], None);
    }

    #[test]
    fn suite_parses_and_evaluates_over_domain() {
        for f in tsang_suite() {
            let g = f.parse_expr().expect(&f.name);
            let mut rng = derive_rng(3, &[0xabc]);
            for _ in 0..50 {
                let x: Vec<f64> = (0..f.n).map(|_| rng.gen_range(0.001..0.999)).collect();
                let v = g.eval(&x).expect(&f.name);
                assert!(v.is_finite());
                let r = g.grad(&x).expect(&f.name);
                assert!(r.gradient.iter().all(|d| d.is_finite()));
            }
        }
    }

    #[test]
    fn corpus_is_deterministic_and_well_formed() {
        let a = generate_corpus(20, 9).unwrap();
        let b = generate_corpus(20, 9).unwrap();
        for (fa, fb) in a.iter().zip(&b) {
            assert_eq!(fa.expr, fb.expr);
            assert_eq!(fa.truth, fb.truth);
        }
        for f in &a {
            assert!((7..=12).contains(&f.n));
            assert!((2..=4).contains(&f.patterns.len()));
            let g = f.parse_expr().unwrap();
            assert!(g.arity() <= f.n);
            // Annotated variables appear in at least one pattern.
            for (v, t) in f.truth.iter().enumerate() {
                let in_pattern = f.patterns.iter().any(|p| p.vars.contains(&v));
                assert_eq!(t.is_some(), in_pattern);
            }
            // No conflicting literals survive generation.
            for p in &f.patterns {
                for (&v, &lit) in p.vars.iter().zip(&p.activation) {
                    assert_eq!(f.truth[v], Some(1.0 - lit));
                }
            }
        }
    }

    #[test]
    fn truth_deactivates_every_pattern() {
        // Flipping any single pattern variable from its activation
        // literal to its truth value moves that term by >= 0.1.
        for f in generate_corpus(30, 4).unwrap() {
            let act = f.activation_point().unwrap();
            for p in &f.patterns {
                let term = ExprGraph::parse(&p.term).unwrap();
                let mut x = act.clone();
                for (&v, &lit) in p.vars.iter().zip(&p.activation) {
                    x[v] = lit;
                }
                let active = term.eval(&pad(&x, term.arity())).unwrap();
                for &v in &p.vars {
                    let mut y = x.clone();
                    y[v] = f.truth[v].unwrap();
                    let off = term.eval(&pad(&y, term.arity())).unwrap();
                    assert!(
                        (active - off).abs() >= 0.1,
                        "{}: pattern {:?} var {} moves only {}",
                        f.name,
                        p.term,
                        v + 1,
                        (active - off).abs()
                    );
                }
            }
        }
    }

    fn pad(x: &[f64], arity: usize) -> Vec<f64> {
        x.iter().copied().take(arity.max(1)).chain(
            std::iter::repeat(0.0).take(arity.saturating_sub(x.len())),
        ).collect::<Vec<_>>()
    }

    #[test]
    fn spectrum_at_truth_concentrates_on_designed_orders() {
        let corpus = generate_corpus(60, 12).unwrap();
        let monomial_only: Vec<_> = corpus
            .iter()
            .filter(|f| f.patterns.iter().all(|p| !p.term.contains('(')))
            .collect();
        assert!(!monomial_only.is_empty());
        for f in monomial_only {
            let bounds = f.domain.bounds(f.n).unwrap();
            let truth: Vec<f64> = f
                .truth
                .iter()
                .map(|t| t.unwrap_or(0.0))
                .collect();
            let game = f
                .game()
                .unwrap()
                .with_baseline(BaselineVector::new(truth, bounds).unwrap())
                .unwrap()
                .with_memo();
            let spec = order_spectrum(&game).unwrap();
            let designed: std::collections::HashSet<usize> =
                f.patterns.iter().map(|p| p.vars.len()).collect();
            let mass: f64 = designed.iter().map(|&m| spec.r[m]).sum();
            assert!(mass >= 0.95, "{}: designed-order mass {}", f.name, mass);
        }
    }

    #[test]
    fn verify_scores_product_function() {
        let func = SynthFunction {
            name: "prod".into(),
            n: 2,
            expr: "x1*x2".into(),
            domain: Domain::binary(),
            truth: vec![Some(0.0), Some(0.0)],
            patterns: vec![Pattern {
                vars: vec![0, 1],
                activation: vec![1.0, 1.0],
                term: "x1*x2".into(),
            }],
        };
        let cfg = VerifyConfig {
            steps: 300,
            ..VerifyConfig::default()
        };
        let rows = verify(&[func], &cfg).unwrap();
        assert_eq!(rows.len(), 6);
        for row in &rows {
            assert_eq!(row.accuracy, 1.0, "{:?}", row);
        }
    }

    #[test]
    fn verify_rejects_empty_corpus() {
        assert!(matches!(
            verify(&[], &VerifyConfig::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn verify_is_job_count_invariant() {
        let corpus = generate_corpus(2, 5).unwrap();
        let mut cfg = VerifyConfig {
            steps: 20,
            inits: vec![0.5],
            ..VerifyConfig::default()
        };
        let one = verify(&corpus, &cfg).unwrap();
        cfg.jobs = 4;
        let four = verify(&corpus, &cfg).unwrap();
        for (a, b) in one.iter().zip(&four) {
            assert_eq!(a.function, b.function);
            assert_eq!(a.accuracy.to_bits(), b.accuracy.to_bits());
            assert_eq!(a.final_loss.to_bits(), b.final_loss.to_bits());
        }
    }

    #[test]
    fn bundled_fixtures_match_generators() {
        let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        let corpus = read_jsonl(&base.join("corpus.jsonl")).unwrap();
        let regenerated = generate_corpus(100, 77).unwrap();
        assert_eq!(corpus.len(), regenerated.len());
        for (a, b) in corpus.iter().zip(&regenerated) {
            assert_eq!(a.expr, b.expr);
            assert_eq!(a.truth, b.truth);
        }
        let suite = read_jsonl(&base.join("tsang.jsonl")).unwrap();
        for (a, b) in suite.iter().zip(tsang_suite()) {
            assert_eq!(a.expr, b.expr);
            assert_eq!(a.truth, b.truth);
            assert_eq!(a.domain, b.domain);
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = std::env::temp_dir().join("baseshap_synth_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("corpus.jsonl");
        let corpus = generate_corpus(5, 7).unwrap();
        write_jsonl(&path, &corpus).unwrap();
        let back = read_jsonl(&path).unwrap();
        assert_eq!(back.len(), corpus.len());
        for (a, b) in corpus.iter().zip(&back) {
            assert_eq!(a.expr, b.expr);
            assert_eq!(a.truth, b.truth);
            assert_eq!(a.domain, b.domain);
        }
    }
}
