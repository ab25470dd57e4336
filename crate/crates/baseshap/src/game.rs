//! Coalition representation, the masking operator, and the value-function
//! contract consumed by all attribution and learning code.

use crate::error::{Error, Result};
use crate::expr::ExprGraph;
use crate::mlp::{GradTarget, MlpModel};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::RwLock;

/// Hard cap on the number of variables for exact enumeration paths.
pub const MAX_VARS: usize = 25;

const LOGODDS_EPS: f64 = 1e-12;

/// A subset S of the variable set N = {0, .., n-1}, encoded as a bit pattern.
///
/// Bit `i` set means variable `i` is present. Bits at positions >= n are
/// always zero. Variables are 0-based internally; the DSL and CLI surface
/// them 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    bits: u32,
    n: u8,
}

impl Coalition {
    pub fn new(bits: u32, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_VARS {
            return Err(Error::Capacity { n, cap: MAX_VARS });
        }
        if n < 32 && bits >> n != 0 {
            return Err(Error::Argument(format!(
                "coalition bits {bits:#b} out of range for n={n}"
            )));
        }
        Ok(Self { bits, n: n as u8 })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    pub fn full(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_VARS {
            return Err(Error::Capacity { n, cap: MAX_VARS });
        }
        Ok(Self {
            bits: (1u32 << n) - 1,
            n: n as u8,
        })
    }

    /// Builds a coalition from 0-based member indices.
    pub fn from_members(members: &[usize], n: usize) -> Result<Self> {
        let mut bits = 0u32;
        for &i in members {
            if i >= n {
                return Err(Error::Argument(format!("member {i} out of range for n={n}")));
            }
            bits |= 1 << i;
        }
        Self::new(bits, n)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn cardinality(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n() && self.bits >> i & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn with(&self, i: usize) -> Self {
        debug_assert!(i < self.n());
        Self {
            bits: self.bits | 1 << i,
            n: self.n,
        }
    }

    pub fn without(&self, i: usize) -> Self {
        Self {
            bits: self.bits & !(1 << i),
            n: self.n,
        }
    }

    pub fn union(&self, other: Coalition) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            bits: self.bits | other.bits,
            n: self.n,
        }
    }

    /// The complement N \ S.
    pub fn complement(&self) -> Self {
        Self {
            bits: !self.bits & ((1u32 << self.n) - 1),
            n: self.n,
        }
    }

    pub fn is_subset_of(&self, other: Coalition) -> bool {
        self.bits & !other.bits == 0
    }

    /// 0-based member indices in ascending order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        let n = self.n();
        (0..n).filter(move |&i| self.bits >> i & 1 == 1)
    }

    /// All 2^|S| subsets of this coalition in strictly increasing
    /// bit-pattern order.
    pub fn subsets(&self) -> SubsetIter {
        SubsetIter {
            positions: self.members().collect(),
            n: self.n,
            next: 0,
            done: false,
        }
    }
}

/// Iterator over subsets of a coalition, ascending by bit pattern.
pub struct SubsetIter {
    positions: Vec<usize>,
    n: u8,
    next: u32,
    done: bool,
}

impl Iterator for SubsetIter {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        if self.done {
            return None;
        }
        // Scatter the counter bits onto the member positions. The scatter
        // is monotone, so counter order equals bit-pattern order.
        let mut bits = 0u32;
        for (k, &pos) in self.positions.iter().enumerate() {
            if self.next >> k & 1 == 1 {
                bits |= 1 << pos;
            }
        }
        if self.next >= (1u32 << self.positions.len()) - 1 {
            self.done = true;
        } else {
            self.next += 1;
        }
        Some(Coalition {
            bits,
            n: self.n,
        })
    }
}

/// A baseline vector with per-variable box bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineVector {
    values: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl BaselineVector {
    pub fn new(values: Vec<f64>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if values.len() != bounds.len() {
            return Err(Error::Dimension {
                expected: values.len(),
                got: bounds.len(),
            });
        }
        for (i, (&v, &(lo, hi))) in values.iter().zip(&bounds).enumerate() {
            if lo > hi {
                return Err(Error::Argument(format!("bounds [{lo}, {hi}] inverted at {i}")));
            }
            if v < lo || v > hi {
                return Err(Error::Argument(format!(
                    "baseline value {v} outside [{lo}, {hi}] at {i}"
                )));
            }
        }
        Ok(Self { values, bounds })
    }

    /// Baseline with bounds [0, 1] everywhere.
    pub fn unit(values: Vec<f64>) -> Result<Self> {
        let bounds = vec![(0.0, 1.0); values.len()];
        Self::new(values, bounds)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Clamps `proposal` into the bounds, preserving them on the result.
    pub fn project(&self, proposal: &[f64]) -> Result<Self> {
        if proposal.len() != self.values.len() {
            return Err(Error::Dimension {
                expected: self.values.len(),
                got: proposal.len(),
            });
        }
        let values = proposal
            .iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| v.clamp(lo, hi))
            .collect();
        Ok(Self {
            values,
            bounds: self.bounds.clone(),
        })
    }
}

/// Masks `x` with coalition `s`: keeps x[i] for members, substitutes the
/// baseline elsewhere.
pub fn mask(x: &[f64], s: Coalition, b: &BaselineVector) -> Result<Vec<f64>> {
    if x.len() != s.n() {
        return Err(Error::Dimension {
            expected: s.n(),
            got: x.len(),
        });
    }
    if b.len() != s.n() {
        return Err(Error::Dimension {
            expected: s.n(),
            got: b.len(),
        });
    }
    Ok(x.iter()
        .zip(b.values())
        .enumerate()
        .map(|(i, (&xi, &bi))| if s.contains(i) { xi } else { bi })
        .collect())
}

/// Output transform applied to the backend's scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    #[serde(rename = "logodds")]
    LogOdds,
}

/// Value-function backend: a parsed expression or an MLP.
#[derive(Debug, Clone)]
pub enum Backend {
    Expr(ExprGraph),
    Mlp(MlpModel),
}

/// Anything that maps coalitions to rewards. Attribution code is written
/// against this trait so tests can plug in raw coalition-value tables.
pub trait CoalitionGame: Sync {
    fn n(&self) -> usize;
    fn value(&self, s: Coalition) -> Result<f64>;
}

/// A game backed by an explicit table of 2^n coalition values.
#[derive(Debug, Clone)]
pub struct TableGame {
    n: usize,
    values: Vec<f64>,
}

impl TableGame {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::Capacity { n, cap: 20 });
        }
        if values.len() != 1 << n {
            return Err(Error::Dimension {
                expected: 1 << n,
                got: values.len(),
            });
        }
        Ok(Self { n, values })
    }
}

impl TableGame {
    /// Random game with coalition values drawn i.i.d. uniform [-1, 1].
    /// Covers arbitrary games in axiom tests, not only factored ones.
    pub fn random(n: usize, seed: u64) -> TableGame {
        use rand::Rng;
        let mut rng = crate::rng::derive_rng(seed, &[0x7ab1e]);
        let values = (0..1usize << n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        TableGame { n, values }
    }
}

impl CoalitionGame for TableGame {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, s: Coalition) -> Result<f64> {
        Ok(self.values[s.bits() as usize])
    }
}

/// A value function v(S) = transform(f(mask(x, S))).
#[derive(Debug)]
pub struct GameSpec {
    backend: Backend,
    x: Vec<f64>,
    baseline: BaselineVector,
    transform: Transform,
    label: usize,
    memo: Option<RwLock<HashMap<u32, f64>>>,
}

impl GameSpec {
    pub fn new(
        backend: Backend,
        x: Vec<f64>,
        baseline: BaselineVector,
        transform: Transform,
        label: Option<usize>,
    ) -> Result<Self> {
        let n = x.len();
        if n == 0 || n > MAX_VARS {
            return Err(Error::Capacity { n, cap: MAX_VARS });
        }
        if baseline.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: baseline.len(),
            });
        }
        match &backend {
            Backend::Expr(g) => {
                if g.arity() > n {
                    return Err(Error::Dimension {
                        expected: g.arity(),
                        got: n,
                    });
                }
            }
            Backend::Mlp(m) => {
                if m.input_dim() != n {
                    return Err(Error::Dimension {
                        expected: m.input_dim(),
                        got: n,
                    });
                }
            }
        }
        Ok(Self {
            backend,
            x,
            baseline,
            transform,
            label: label.unwrap_or(0),
            memo: None,
        })
    }

    /// Enables the coalition-value memo table. Intended for exact
    /// all-subset passes that revisit each v(S) many times.
    pub fn with_memo(mut self) -> Self {
        self.memo = Some(RwLock::new(HashMap::new()));
        self
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn baseline(&self) -> &BaselineVector {
        &self.baseline
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn label(&self) -> usize {
        self.label
    }

    /// Returns a copy of this game with a different baseline vector.
    pub fn with_baseline(&self, baseline: BaselineVector) -> Result<Self> {
        GameSpec::new(
            self.backend.clone(),
            self.x.clone(),
            baseline,
            self.transform,
            Some(self.label),
        )
    }

    /// Returns a copy of this game with a different input sample.
    pub fn with_input(&self, x: Vec<f64>) -> Result<Self> {
        GameSpec::new(
            self.backend.clone(),
            x,
            self.baseline.clone(),
            self.transform,
            Some(self.label),
        )
    }

    fn raw_value(&self, input: &[f64]) -> Result<f64> {
        match &self.backend {
            Backend::Expr(g) => g.eval(input),
            Backend::Mlp(m) => {
                let (logits, _) = m.forward(input)?;
                let label = self.label.min(logits.len() - 1);
                match self.transform {
                    Transform::Identity => Ok(logits[label]),
                    Transform::LogOdds => Ok(MlpModel::softmax(&logits)[label]),
                }
            }
        }
    }

    fn apply_transform(&self, raw: f64) -> f64 {
        match self.transform {
            Transform::Identity => raw,
            Transform::LogOdds => {
                let p = raw.clamp(LOGODDS_EPS, 1.0 - LOGODDS_EPS);
                (p / (1.0 - p)).ln()
            }
        }
    }

    /// Evaluates v(S).
    pub fn evaluate(&self, s: Coalition) -> Result<f64> {
        if s.n() != self.x.len() {
            return Err(Error::Dimension {
                expected: self.x.len(),
                got: s.n(),
            });
        }
        if let Some(memo) = &self.memo {
            if let Some(&v) = memo.read().unwrap().get(&s.bits()) {
                return Ok(v);
            }
        }
        let input = mask(&self.x, s, &self.baseline)?;
        let v = self
            .raw_value(&input)
            .map(|raw| self.apply_transform(raw))
            .map_err(|e| e.at_coalition(s))?;
        if let Some(memo) = &self.memo {
            memo.write().unwrap().insert(s.bits(), v);
        }
        Ok(v)
    }

    /// Evaluates v(S) together with its gradient w.r.t. the baseline
    /// vector: dv/db_j = df/dinput_j * 1[j not in S].
    pub fn value_and_baseline_grad(&self, s: Coalition) -> Result<(f64, Vec<f64>)> {
        let input = mask(&self.x, s, &self.baseline)?;
        let (raw, input_grad) = match &self.backend {
            Backend::Expr(g) => {
                let r = g.grad(&input).map_err(|e| e.at_coalition(s))?;
                let mut full = vec![0.0; self.x.len()];
                full[..r.gradient.len()].copy_from_slice(&r.gradient);
                (r.value, full)
            }
            Backend::Mlp(m) => {
                let label = self.label;
                match self.transform {
                    Transform::Identity => {
                        let (v, g) = m.value_and_input_gradient(&input, GradTarget::Logit(label))?;
                        (v, g)
                    }
                    Transform::LogOdds => {
                        let (p, g) = m.value_and_input_gradient(&input, GradTarget::Prob(label))?;
                        (p, g)
                    }
                }
            }
        };
        let chain = match self.transform {
            Transform::Identity => 1.0,
            Transform::LogOdds => {
                // d/dp log(p/(1-p)); zero once the clamp saturates.
                if raw <= LOGODDS_EPS || raw >= 1.0 - LOGODDS_EPS {
                    0.0
                } else {
                    1.0 / (raw * (1.0 - raw))
                }
            }
        };
        let value = self.apply_transform(raw);
        let grad = input_grad
            .iter()
            .enumerate()
            .map(|(j, &g)| if s.contains(j) { 0.0 } else { g * chain })
            .collect();
        Ok((value, grad))
    }

    /// L1 distance between hidden features of the two masked inputs, with
    /// its gradient w.r.t. the baseline. MLP backends only.
    pub fn feature_l1_and_baseline_grad(
        &self,
        s_with: Coalition,
        s_without: Coalition,
    ) -> Result<(f64, Vec<f64>)> {
        let Backend::Mlp(m) = &self.backend else {
            return Err(Error::Capability("intermediate-feature marginal benefit"));
        };
        let in1 = mask(&self.x, s_with, &self.baseline)?;
        let in2 = mask(&self.x, s_without, &self.baseline)?;
        let (value, g1, g2) = m.feature_l1_diff(&in1, &in2)?;
        let grad = (0..self.x.len())
            .map(|j| {
                let a = if s_with.contains(j) { 0.0 } else { g1[j] };
                let b = if s_without.contains(j) { 0.0 } else { g2[j] };
                a + b
            })
            .collect();
        Ok((value, grad))
    }
}

impl CoalitionGame for GameSpec {
    fn n(&self) -> usize {
        self.x.len()
    }

    fn value(&self, s: Coalition) -> Result<f64> {
        self.evaluate(s)
    }
}

/// On-disk game description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameManifest {
    pub n: usize,
    pub backend: BackendManifest,
    pub x: Vec<f64>,
    pub baseline: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    pub transform: Transform,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendManifest {
    Expr { source: String },
    Mlp { weights: String },
}

impl GameManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: GameManifest = serde_json::from_str(&text)?;
        Ok(manifest)
    }

    /// Builds the GameSpec. Relative MLP weight paths resolve against
    /// `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<GameSpec> {
        if self.x.len() != self.n || self.baseline.len() != self.n || self.bounds.len() != self.n {
            return Err(Error::Config(format!(
                "manifest n={} disagrees with x/baseline/bounds lengths",
                self.n
            )));
        }
        let backend = match &self.backend {
            BackendManifest::Expr { source } => Backend::Expr(ExprGraph::parse(source)?),
            BackendManifest::Mlp { weights } => {
                let p = Path::new(weights);
                let p = if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base_dir.join(p)
                };
                Backend::Mlp(MlpModel::load(&p)?)
            }
        };
        let baseline = BaselineVector::new(self.baseline.clone(), self.bounds.clone())?;
        GameSpec::new(backend, self.x.clone(), baseline, self.transform, self.label)
    }
}
