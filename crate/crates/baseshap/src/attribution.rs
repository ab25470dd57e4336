//! Attribution mathematics: exact and sampled Shapley values,
//! multi-variate interactions, the Shapley interaction index, multi-order
//! components, order spectra, and context saliency.

use crate::error::{Error, Result};
use crate::game::{Coalition, CoalitionGame};
use crate::rng::derive_rng;
use crate::sum::{csum, Compensated};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Context-count cap above which per-order and saliency computations
/// switch from exact enumeration to seeded sampling.
pub const DEFAULT_CONTEXT_CAP: usize = 10_000;

/// Which computation path produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Method {
    Exact,
    Sampled { permutations: usize, seed: u64 },
}

/// Per-variable Shapley attribution of one game.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributionReport {
    /// Shapley values.
    pub phi: Vec<f64>,
    /// Individual benefits u_i = v({i}) - v(empty).
    pub u: Vec<f64>,
    pub v_empty: f64,
    pub v_full: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
}

/// Multi-variate interactions I(S) for coalitions of order >= 2, sorted
/// ascending by bit pattern.
#[derive(Debug, Clone)]
pub struct InteractionTable {
    entries: Vec<(Coalition, f64)>,
}

impl InteractionTable {
    pub fn entries(&self) -> &[(Coalition, f64)] {
        &self.entries
    }

    pub fn get(&self, s: Coalition) -> Option<f64> {
        self.entries
            .binary_search_by_key(&s.bits(), |(c, _)| c.bits())
            .ok()
            .map(|i| self.entries[i].1)
    }
}

/// Normalized distribution of absolute interaction mass across orders.
/// `r[m]` for m >= 2 is the ratio of order-m interactions; `r[1]` is the
/// individual-benefit ratio. `r[0]` is unused and always zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderSpectrum {
    pub r: Vec<f64>,
    pub normalizer: f64,
    /// Set when the normalizer vanished and all ratios were forced to zero.
    pub degenerate: bool,
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut num = 1u64;
    let mut den = 1u64;
    for j in 0..k {
        num *= (n - j) as u64;
        den *= (j + 1) as u64;
        // Keep the intermediate reduced so n <= 25 never overflows.
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    (num / den) as f64
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Evaluates v on every coalition of the game, indexed by bit pattern.
fn value_table(game: &dyn CoalitionGame) -> Result<Vec<f64>> {
    let n = game.n();
    let mut table = Vec::with_capacity(1 << n);
    for bits in 0..(1u32 << n) {
        table.push(game.value(Coalition::new(bits, n)?)?);
    }
    Ok(table)
}

/// Exact Shapley values via the per-order grouping
/// phi_i = (1/n) sum_m E_{|S|=m} [v(S u {i}) - v(S)], which sidesteps
/// factorial weights entirely.
pub fn shapley_exact(game: &dyn CoalitionGame) -> Result<AttributionReport> {
    let n = game.n();
    let values = value_table(game)?;
    let v_empty = values[0];
    let v_full = values[(1usize << n) - 1];
    let mut phi = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for i in 0..n {
        u.push(values[1 << i] - v_empty);
        let mut buckets = vec![Compensated::new(); n];
        let complement = Coalition::full(n)?.without(i);
        for s in complement.subsets() {
            let m = s.cardinality();
            let delta = values[s.with(i).bits() as usize] - values[s.bits() as usize];
            buckets[m].add(delta);
        }
        let phi_i = csum((0..n).map(|m| buckets[m].value() / binom(n - 1, m))) / n as f64;
        phi.push(phi_i);
    }
    Ok(AttributionReport {
        phi,
        u,
        v_empty,
        v_full,
        method: Method::Exact,
        stderr: None,
    })
}

/// Unbiased permutation-sampling estimator of Shapley values. Identical
/// (seed, permutations) reproduce bit-identical reports.
pub fn shapley_sampled(
    game: &dyn CoalitionGame,
    permutations: usize,
    seed: u64,
) -> Result<AttributionReport> {
    if permutations == 0 {
        return Err(Error::Argument("permutations must be >= 1".into()));
    }
    let n = game.n();
    let v_empty = game.value(Coalition::empty(n)?)?;
    let v_full = game.value(Coalition::full(n)?)?;
    let u = (0..n)
        .map(|i| Ok(game.value(Coalition::empty(n)?.with(i))? - v_empty))
        .collect::<Result<Vec<f64>>>()?;

    let mut rng = derive_rng(seed, &[0x5a3d]);
    // Welford accumulators per variable.
    let mut mean = vec![0.0f64; n];
    let mut m2 = vec![0.0f64; n];
    let mut order: Vec<usize> = (0..n).collect();
    for k in 1..=permutations {
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut prefix = Coalition::empty(n)?;
        let mut prev = v_empty;
        for &i in &order {
            prefix = prefix.with(i);
            let cur = game.value(prefix)?;
            let contrib = cur - prev;
            prev = cur;
            let d = contrib - mean[i];
            mean[i] += d / k as f64;
            m2[i] += d * (contrib - mean[i]);
        }
    }
    let stderr = if permutations >= 2 {
        m2.iter()
            .map(|&s| (s / (permutations as f64 * (permutations as f64 - 1.0))).sqrt())
            .collect()
    } else {
        vec![0.0; n]
    };
    Ok(AttributionReport {
        phi: mean,
        u,
        v_empty,
        v_full,
        method: Method::Sampled { permutations, seed },
        stderr: Some(stderr),
    })
}

/// Closed-form multi-variate interaction
/// I(S) = sum_{L subset S} (-1)^{|S|-|L|} v(L). Needs 2^|S| evaluations.
pub fn interaction(game: &dyn CoalitionGame, s: Coalition) -> Result<f64> {
    if s.cardinality() < 2 {
        return Err(Error::Argument(format!(
            "interaction requires |S| >= 2, got {}",
            s.cardinality()
        )));
    }
    let card = s.cardinality();
    let mut acc = Compensated::new();
    for l in s.subsets() {
        let sign = if (card - l.cardinality()) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        acc.add(sign * game.value(l)?);
    }
    Ok(acc.value())
}

/// The recursive definition of I(S), memoized. Exists as an independent
/// oracle for the closed form.
pub fn interaction_recursive(game: &dyn CoalitionGame, s: Coalition) -> Result<f64> {
    if s.cardinality() < 2 {
        return Err(Error::Argument(format!(
            "interaction requires |S| >= 2, got {}",
            s.cardinality()
        )));
    }
    let mut memo = std::collections::HashMap::new();
    interaction_rec(game, s, &mut memo)
}

fn interaction_rec(
    game: &dyn CoalitionGame,
    s: Coalition,
    memo: &mut std::collections::HashMap<u32, f64>,
) -> Result<f64> {
    if let Some(&v) = memo.get(&s.bits()) {
        return Ok(v);
    }
    let n = s.n();
    let v_empty = game.value(Coalition::empty(n)?)?;
    let mut acc = Compensated::new();
    acc.add(game.value(s)?);
    acc.add(-v_empty);
    for i in s.members() {
        let u_i = game.value(Coalition::empty(n)?.with(i))? - v_empty;
        acc.add(-u_i);
    }
    for l in s.subsets() {
        if l.cardinality() >= 2 && l != s {
            acc.add(-interaction_rec(game, l, memo)?);
        }
    }
    let v = acc.value();
    memo.insert(s.bits(), v);
    Ok(v)
}

/// Grabisch-Roubens Shapley interaction index:
/// sum over environments T of p(T) * I(S | env(T)), with
/// p(T) = (n-|S|-|T|)! |T|! / (n-|S|+1)!.
pub fn shapley_interaction_index(game: &dyn CoalitionGame, s: Coalition) -> Result<f64> {
    let n = game.n();
    if s.cardinality() < 1 {
        return Err(Error::Argument("|S| must be >= 1".into()));
    }
    if n > 20 {
        return Err(Error::Capacity { n, cap: 20 });
    }
    let card = s.cardinality();
    let free = n - card;
    let mut acc = Compensated::new();
    for t in s.complement().subsets() {
        // (n-s-t)! t! / (n-s+1)! == 1 / ((n-s+1) * C(n-s, t)).
        let p = 1.0 / ((free + 1) as f64 * binom(free, t.cardinality()));
        let mut inner = Compensated::new();
        for l in s.subsets() {
            let sign = if (card - l.cardinality()) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            inner.add(sign * game.value(l.union(t))?);
        }
        acc.add(p * inner.value());
    }
    Ok(acc.value())
}

/// Multi-order Shapley component phi_i^(m): mean marginal contribution of
/// `i` over contexts of size exactly m. Exact when the context count is at
/// most `cap`, otherwise a seeded uniform sample without replacement.
pub fn shapley_order(
    game: &dyn CoalitionGame,
    i: usize,
    m: usize,
    cap: usize,
    sample: Option<(usize, u64)>,
) -> Result<f64> {
    let n = game.n();
    if i >= n {
        return Err(Error::Argument(format!("variable {i} out of range")));
    }
    if m > n - 1 {
        return Err(Error::Argument(format!("order {m} out of range 0..={}", n - 1)));
    }
    let total = binom(n - 1, m);
    if total <= cap as f64 {
        let complement = Coalition::full(n)?.without(i);
        let mut acc = Compensated::new();
        for s in complement.subsets() {
            if s.cardinality() == m {
                acc.add(game.value(s.with(i))? - game.value(s)?);
            }
        }
        return Ok(acc.value() / total);
    }
    let Some((count, seed)) = sample else {
        return Err(Error::Argument(format!(
            "C({}, {m}) = {total} exceeds cap {cap} and no sample budget was given",
            n - 1
        )));
    };
    let contexts = sample_contexts(n, i, m, count, seed)?;
    let mut acc = Compensated::new();
    for &s in &contexts {
        acc.add(game.value(s.with(i))? - game.value(s)?);
    }
    Ok(acc.value() / contexts.len() as f64)
}

/// Draws `count` distinct size-m subsets of N \ {i}, deterministically.
fn sample_contexts(n: usize, i: usize, m: usize, count: usize, seed: u64) -> Result<Vec<Coalition>> {
    if count == 0 {
        return Err(Error::Argument("sample count must be >= 1".into()));
    }
    let pool: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    let total = binom(pool.len(), m);
    let count = count.min(total as usize);
    let mut rng = derive_rng(seed, &[0xc7e7, i as u64, m as u64]);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(count);
    let mut scratch = pool.clone();
    while out.len() < count {
        // Partial Fisher-Yates: the first m entries are a uniform m-subset.
        for k in 0..m {
            let j = rng.gen_range(k..scratch.len());
            scratch.swap(k, j);
        }
        let s = Coalition::from_members(&scratch[..m], n)?;
        if seen.insert(s.bits()) {
            out.push(s);
        }
    }
    Ok(out)
}

/// Single marginal benefit v(S u {i}) - v(S); `i` must not be in S.
pub fn marginal_benefit(game: &dyn CoalitionGame, i: usize, s: Coalition) -> Result<f64> {
    if s.contains(i) {
        return Err(Error::Argument(format!("variable {i} already in context")));
    }
    Ok(game.value(s.with(i))? - game.value(s)?)
}

/// All interactions I(S) for |S| >= 2, via the signed subset (Moebius)
/// transform of the full value table.
pub fn interaction_table(game: &dyn CoalitionGame, max_order: Option<usize>) -> Result<InteractionTable> {
    let n = game.n();
    if n > 20 {
        return Err(Error::Capacity { n, cap: 20 });
    }
    let table = moebius_table(game)?;
    let cap = max_order.unwrap_or(n);
    let mut entries = Vec::new();
    for bits in 0..(1u32 << n) {
        let order = bits.count_ones() as usize;
        if order >= 2 && order <= cap {
            entries.push((Coalition::new(bits, n)?, table[bits as usize]));
        }
    }
    Ok(InteractionTable { entries })
}

fn moebius_table(game: &dyn CoalitionGame) -> Result<Vec<f64>> {
    let n = game.n();
    let mut table = value_table(game)?;
    for j in 0..n {
        for bits in 0..(1usize << n) {
            if bits >> j & 1 == 1 {
                table[bits] -= table[bits ^ (1 << j)];
            }
        }
    }
    Ok(table)
}

/// Ratios of absolute interaction mass per order. `r[1]` carries the
/// individual-benefit ratio.
pub fn order_spectrum(game: &dyn CoalitionGame) -> Result<OrderSpectrum> {
    let n = game.n();
    if n > 20 {
        return Err(Error::Capacity { n, cap: 20 });
    }
    let table = moebius_table(game)?;
    let mut mass = vec![0.0f64; n + 1];
    for bits in 1..(1usize << n) {
        let order = (bits as u32).count_ones() as usize;
        mass[order] += table[bits].abs();
    }
    // mass[1] is exactly sum_i |u_i| since the transform of a singleton is
    // v({i}) - v(empty).
    let normalizer = csum(mass[1..].iter().copied());
    let mut r = vec![0.0; n + 1];
    let degenerate = normalizer == 0.0;
    if !degenerate {
        for m in 1..=n {
            r[m] = mass[m] / normalizer;
        }
    }
    Ok(OrderSpectrum {
        r,
        normalizer,
        degenerate,
    })
}

/// Context-saliency distribution p(j|i): the fraction of top-ranked
/// contexts (by |marginal benefit of i|) that contain j. Entry `i` of the
/// result is zero. Ties in |delta v| break by ascending bit pattern.
pub fn context_saliency(
    game: &dyn CoalitionGame,
    i: usize,
    top_fraction: f64,
    cap: usize,
    sample: Option<(usize, u64)>,
) -> Result<Vec<f64>> {
    let n = game.n();
    if i >= n {
        return Err(Error::Argument(format!("variable {i} out of range")));
    }
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::Argument(format!(
            "top_fraction must be in (0, 1], got {top_fraction}"
        )));
    }
    let total = 1u64 << (n - 1);
    let contexts: Vec<Coalition> = if total <= cap as u64 {
        Coalition::full(n)?.without(i).subsets().collect()
    } else {
        let Some((count, seed)) = sample else {
            return Err(Error::Argument(format!(
                "{total} contexts exceed cap {cap} and no sample budget was given"
            )));
        };
        sample_any_contexts(n, i, count, seed)?
    };
    let mut scored: Vec<(f64, Coalition)> = contexts
        .iter()
        .map(|&s| Ok((marginal_benefit(game, i, s)?.abs(), s)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| a.1.bits().cmp(&b.1.bits()))
    });
    let k = scored.len();
    let omega = (top_fraction * k as f64).ceil() as usize;
    let omega = omega.clamp(1, k);
    let mut p = vec![0.0; n];
    for (_, s) in &scored[..omega] {
        for j in s.members() {
            p[j] += 1.0;
        }
    }
    for v in &mut p {
        *v /= omega as f64;
    }
    p[i] = 0.0;
    Ok(p)
}

/// Draws `count` distinct contexts S subset N \ {i} of any size.
fn sample_any_contexts(n: usize, i: usize, count: usize, seed: u64) -> Result<Vec<Coalition>> {
    if count == 0 {
        return Err(Error::Argument("sample count must be >= 1".into()));
    }
    let total = 1u64 << (n - 1);
    let count = count.min(total as usize);
    let mut rng = derive_rng(seed, &[0x5a11, i as u64]);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let bits: u32 = rng.gen_range(0..total) as u32;
        // Expand the (n-1)-bit pattern around position i.
        let low = bits & ((1u32 << i) - 1);
        let high = (bits >> i) << (i + 1);
        let full = low | high;
        if seen.insert(full) {
            out.push(Coalition::new(full, n)?);
        }
    }
    out.sort_by_key(|c| c.bits());
    Ok(out)
}
