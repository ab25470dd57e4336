//! Learning baseline vectors by penalizing low-order interaction
//! strength: the L_Shapley and L_marginal losses and a projected
//! gradient descent loop over the baseline box bounds.

use crate::error::{Error, Result};
use crate::game::{BaselineVector, Coalition, GameSpec};
use crate::rng::derive_rng;
use crate::sum::csum;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Shapley,
    Marginal,
}

/// Baseline initialization scheme. `Mean` is the midpoint of each
/// variable's bounds; dataset-backed runs pass per-feature means as
/// `Explicit`.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zero,
    Mean,
    Explicit(Vec<f64>),
}

impl Serialize for Init {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Init::Zero => s.serialize_str("zero"),
            Init::Mean => s.serialize_str("mean"),
            Init::Explicit(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Init {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Values(Vec<f64>),
        }
        match Raw::deserialize(d)? {
            Raw::Name(n) if n == "zero" => Ok(Init::Zero),
            Raw::Name(n) if n == "mean" => Ok(Init::Mean),
            Raw::Name(n) => Err(D::Error::custom(format!("unknown init {n:?}"))),
            Raw::Values(v) => Ok(Init::Explicit(v)),
        }
    }
}

pub fn default_steps() -> usize {
    2000
}
pub fn default_step_size() -> f64 {
    0.05
}
pub fn default_orders() -> usize {
    4
}
pub fn default_contexts() -> usize {
    32
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnConfig {
    pub loss: LossKind,
    /// lambda = round(lambda_frac * n), capped at n - 1.
    pub lambda_frac: f64,
    pub init: Init,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_orders")]
    pub orders_per_step: usize,
    #[serde(default = "default_contexts")]
    pub contexts_per_order: usize,
    /// Input samples; empty means "use the game's own x".
    #[serde(default)]
    pub batch: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// L_marginal over intermediate features (MLP backends only).
    #[serde(default)]
    pub feature_variant: bool,
}

impl LearnConfig {
    pub fn validate(&self, n: usize) -> Result<usize> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be >= 1".into()));
        }
        if self.orders_per_step == 0 || self.contexts_per_order == 0 {
            return Err(Error::Config(
                "orders_per_step and contexts_per_order must be >= 1".into(),
            ));
        }
        if !(self.lambda_frac > 0.0 && self.lambda_frac <= 1.0) {
            return Err(Error::Config(format!(
                "lambda_frac must be in (0, 1], got {}",
                self.lambda_frac
            )));
        }
        let lambda = ((self.lambda_frac * n as f64).round() as usize).min(n - 1);
        Ok(lambda)
    }
}

/// Optimization trajectory of a baseline vector.
#[derive(Debug, Clone)]
pub struct LearnState {
    pub b: BaselineVector,
    pub loss_trace: Vec<f64>,
    pub grad_norm_trace: Vec<f64>,
    pub converged: bool,
}

/// One sampled loss term: estimate the order-m component of variable
/// `var` on batch sample `x_index` from these contexts.
#[derive(Debug, Clone)]
pub struct DrawEntry {
    pub x_index: usize,
    pub var: usize,
    pub m: usize,
    pub contexts: Vec<Coalition>,
}

/// The full set of (m, x, i, S) draws for one optimizer step. Held
/// explicit so finite-difference gradient checks can freeze them.
#[derive(Debug, Clone)]
pub struct Draws {
    pub entries: Vec<DrawEntry>,
}

fn binom_u64(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut num = 1u64;
    for j in 0..k {
        num = num * (n - j) as u64 / (j + 1) as u64;
    }
    num
}

/// Draws orders m ~ Unif{0..lambda} and, per (m, x, i), either all
/// contexts of size m (when few enough) or `contexts_per_order` uniform
/// ones. Counter-based seeding: (seed, step) fully determines the draws.
pub fn make_draws(
    n: usize,
    lambda: usize,
    batch_len: usize,
    orders_per_step: usize,
    contexts_per_order: usize,
    seed: u64,
    step: u64,
) -> Result<Draws> {
    let mut entries = Vec::new();
    for slot in 0..orders_per_step {
        let mut rng = derive_rng(seed, &[0xd7a3, step, slot as u64]);
        let m = rng.gen_range(0..=lambda.min(n - 1));
        for x_index in 0..batch_len {
            for var in 0..n {
                let pool: Vec<usize> = (0..n).filter(|&j| j != var).collect();
                let total = binom_u64(pool.len(), m);
                let contexts = if total <= contexts_per_order as u64 {
                    Coalition::full(n)?
                        .without(var)
                        .subsets()
                        .filter(|s| s.cardinality() == m)
                        .collect()
                } else {
                    let mut ctx_rng = derive_rng(
                        seed,
                        &[0xd7a4, step, slot as u64, x_index as u64, var as u64],
                    );
                    let mut scratch = pool.clone();
                    (0..contexts_per_order)
                        .map(|_| {
                            for k in 0..m {
                                let j = ctx_rng.gen_range(k..scratch.len());
                                scratch.swap(k, j);
                            }
                            Coalition::from_members(&scratch[..m], n)
                        })
                        .collect::<Result<Vec<_>>>()?
                };
                entries.push(DrawEntry {
                    x_index,
                    var,
                    m,
                    contexts,
                });
            }
        }
    }
    Ok(Draws { entries })
}

/// Evaluates either loss and its gradient w.r.t. the baseline vector for
/// a fixed set of draws.
pub fn loss_with_draws(
    template: &GameSpec,
    batch: &[Vec<f64>],
    b: &BaselineVector,
    kind: LossKind,
    feature_variant: bool,
    draws: &Draws,
) -> Result<(f64, Vec<f64>)> {
    let n = b.len();
    if feature_variant && kind != LossKind::Marginal {
        return Err(Error::Config(
            "feature_variant applies to the marginal loss only".into(),
        ));
    }
    let mut loss_terms = Vec::new();
    let mut grad = vec![0.0; n];
    // Games per batch sample, all sharing the candidate baseline.
    let games: Vec<GameSpec> = batch
        .iter()
        .map(|x| template.with_baseline(b.clone())?.with_input(x.clone()))
        .collect::<Result<Vec<_>>>()?;
    for entry in &draws.entries {
        let game = &games[entry.x_index];
        let i = entry.var;
        let count = entry.contexts.len() as f64;
        match kind {
            LossKind::Shapley => {
                // phi_hat = mean_S delta; loss term |phi_hat|.
                let mut phi = 0.0;
                let mut phi_grad = vec![0.0; n];
                for &s in &entry.contexts {
                    let (v1, g1) = game.value_and_baseline_grad(s.with(i))?;
                    let (v0, g0) = game.value_and_baseline_grad(s)?;
                    phi += v1 - v0;
                    for j in 0..n {
                        phi_grad[j] += g1[j] - g0[j];
                    }
                }
                phi /= count;
                loss_terms.push(phi.abs());
                // |.| subgradient at 0 is 0.
                let sign = if phi > 0.0 {
                    1.0
                } else if phi < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                for j in 0..n {
                    grad[j] += sign * phi_grad[j] / count;
                }
            }
            LossKind::Marginal => {
                let mut term = 0.0;
                let mut term_grad = vec![0.0; n];
                for &s in &entry.contexts {
                    if feature_variant {
                        let (v, g) = game.feature_l1_and_baseline_grad(s.with(i), s)?;
                        term += v;
                        for j in 0..n {
                            term_grad[j] += g[j];
                        }
                    } else {
                        let (v1, g1) = game.value_and_baseline_grad(s.with(i))?;
                        let (v0, g0) = game.value_and_baseline_grad(s)?;
                        let delta = v1 - v0;
                        term += delta.abs();
                        let sign = if delta > 0.0 {
                            1.0
                        } else if delta < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        for j in 0..n {
                            term_grad[j] += sign * (g1[j] - g0[j]);
                        }
                    }
                }
                loss_terms.push(term / count);
                for j in 0..n {
                    grad[j] += term_grad[j] / count;
                }
            }
        }
    }
    Ok((csum(loss_terms), grad))
}

/// L_Shapley at baseline `b` with draws derived from (seed, step).
#[allow(clippy::too_many_arguments)]
pub fn loss_shapley(
    template: &GameSpec,
    batch: &[Vec<f64>],
    b: &BaselineVector,
    lambda: usize,
    orders_per_step: usize,
    contexts_per_order: usize,
    seed: u64,
    step: u64,
) -> Result<(f64, Vec<f64>)> {
    let draws = make_draws(
        b.len(),
        lambda,
        batch.len(),
        orders_per_step,
        contexts_per_order,
        seed,
        step,
    )?;
    loss_with_draws(template, batch, b, LossKind::Shapley, false, &draws)
}

/// L_marginal at baseline `b` with draws derived from (seed, step).
#[allow(clippy::too_many_arguments)]
pub fn loss_marginal(
    template: &GameSpec,
    batch: &[Vec<f64>],
    b: &BaselineVector,
    lambda: usize,
    orders_per_step: usize,
    contexts_per_order: usize,
    seed: u64,
    step: u64,
    feature_variant: bool,
) -> Result<(f64, Vec<f64>)> {
    let draws = make_draws(
        b.len(),
        lambda,
        batch.len(),
        orders_per_step,
        contexts_per_order,
        seed,
        step,
    )?;
    loss_with_draws(template, batch, b, LossKind::Marginal, feature_variant, &draws)
}

const GRAD_TOL: f64 = 1e-6;
/// Sampled gradients can vanish by chance on one step; demand a streak.
const GRAD_STREAK: usize = 5;
const EMA_TOL: f64 = 1e-8;
const EMA_WINDOW: usize = 50;
const EMA_ALPHA: f64 = 0.1;

/// Projected gradient descent over the baseline box.
pub fn learn(config: &LearnConfig, template: &GameSpec) -> Result<LearnState> {
    let n = template.baseline().len();
    let lambda = config.validate(n)?;
    let bounds = template.baseline().bounds().to_vec();
    let init_values = match &config.init {
        Init::Zero => vec![0.0; n],
        Init::Mean => bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect(),
        Init::Explicit(v) => {
            if v.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: v.len(),
                });
            }
            v.clone()
        }
    };
    let seed_baseline = BaselineVector::new(
        bounds
            .iter()
            .zip(&init_values)
            .map(|(&(lo, hi), &v)| v.clamp(lo, hi))
            .collect(),
        bounds,
    )?;
    let batch: Vec<Vec<f64>> = if config.batch.is_empty() {
        vec![template.x().to_vec()]
    } else {
        config.batch.clone()
    };
    for x in &batch {
        if x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: x.len(),
            });
        }
    }

    let mut b = seed_baseline;
    let mut loss_trace = Vec::new();
    let mut grad_norm_trace = Vec::new();
    let mut converged = false;
    let mut small_grad_streak = 0usize;
    let mut ema: Option<f64> = None;
    let mut ema_history: Vec<f64> = Vec::new();
    for step in 0..config.steps {
        let draws = make_draws(
            n,
            lambda,
            batch.len(),
            config.orders_per_step,
            config.contexts_per_order,
            config.seed,
            step as u64,
        )?;
        let (loss, grad) = loss_with_draws(
            template,
            &batch,
            &b,
            config.loss,
            config.feature_variant,
            &draws,
        )?;
        loss_trace.push(loss);
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        grad_norm_trace.push(grad_norm);
        if grad_norm < GRAD_TOL {
            small_grad_streak += 1;
            if small_grad_streak >= GRAD_STREAK {
                converged = true;
                break;
            }
        } else {
            small_grad_streak = 0;
        }
        let e = match ema {
            None => loss,
            Some(prev) => EMA_ALPHA * loss + (1.0 - EMA_ALPHA) * prev,
        };
        ema = Some(e);
        ema_history.push(e);
        if ema_history.len() > EMA_WINDOW {
            let ago = ema_history[ema_history.len() - 1 - EMA_WINDOW];
            if ago - e < EMA_TOL {
                converged = true;
                break;
            }
        }
        let proposal: Vec<f64> = b
            .values()
            .iter()
            .zip(&grad)
            .map(|(&v, &g)| v - config.step_size * g)
            .collect();
        b = b.project(&proposal)?;
    }
    Ok(LearnState {
        b,
        loss_trace,
        grad_norm_trace,
        converged,
    })
}

/// Fraction of annotated variables whose learned baseline lands within
/// 0.5 of the ground truth after rescaling the variable's domain to
/// [0, 1]. Strict inequality: exactly 0.5 away counts as incorrect.
pub fn accuracy(b: &BaselineVector, truth: &[Option<f64>]) -> Result<f64> {
    if truth.len() != b.len() {
        return Err(Error::Dimension {
            expected: b.len(),
            got: truth.len(),
        });
    }
    let mut annotated = 0usize;
    let mut correct = 0usize;
    for ((&v, &(lo, hi)), t) in b.values().iter().zip(b.bounds()).zip(truth) {
        let Some(t) = t else { continue };
        annotated += 1;
        let scale = hi - lo;
        let (sv, st) = if scale > 0.0 {
            ((v - lo) / scale, (t - lo) / scale)
        } else {
            (0.0, 0.0)
        };
        if (sv - st).abs() < 0.5 {
            correct += 1;
        }
    }
    if annotated == 0 {
        return Err(Error::Argument("no annotated ground-truth entries".into()));
    }
    Ok(correct as f64 / annotated as f64)
}
