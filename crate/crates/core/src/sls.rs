//! Stochastic local search over weighted sets of bucket orders.
//!
//! The outer loop mutates the incumbent set of orders, resets the weights to
//! `1/b`, optionally tunes the weights with a randomized inner search, and
//! accepts the candidate when its fitness is not worse than the incumbent's.
//!
//! All randomness comes from a [`ChaCha8Rng`] seeded with
//! [`ChaCha8Rng::seed_from_u64`]. Runs started from the same seed, config and
//! matrix produce identical results. Parallel runs either use distinct seeds
//! or share a seed and take distinct streams via [`stream_rng`].

use num_bigint::BigUint;
use num_traits::Zero;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use thiserror::Error;

use crate::exact::fubini_table;
use crate::model::{bucket_entries, BucketOrder, PairOrderMatrix, WeightedEnsemble};
use crate::objective::weighted_distance;

pub type SolverRng = ChaCha8Rng;

pub fn solver_rng(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SolverRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SlsError {
    #[error("{kind} cannot be applied to {order}")]
    Inapplicable { kind: MutationKind, order: String },
    #[error("ensemble size must be positive")]
    NoMembers,
    #[error("matrix has no items")]
    NoItems,
    #[error("ensemble ranks {ensemble} items but the matrix has {matrix}")]
    DimensionMismatch { ensemble: usize, matrix: usize },
}

/// The neighbourhood moves on a single bucket order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationKind {
    /// Move one bucket to another position.
    BucketInsertion,
    /// Swap two buckets.
    BucketsInterchange,
    /// Reverse a run of at least two consecutive buckets.
    BucketInversion,
    /// Merge two adjacent buckets.
    BucketUnion,
    /// Split a bucket of two or more items into two adjacent buckets.
    BucketDivision,
    /// Move one item into another bucket or into a new singleton bucket.
    ItemInsertion,
    /// Swap one item of a bucket with one item of another bucket.
    ItemInterchange,
}

impl MutationKind {
    pub const ALL: [MutationKind; 7] = [
        MutationKind::BucketInsertion,
        MutationKind::BucketsInterchange,
        MutationKind::BucketInversion,
        MutationKind::BucketUnion,
        MutationKind::BucketDivision,
        MutationKind::ItemInsertion,
        MutationKind::ItemInterchange,
    ];

    pub fn is_applicable(self, order: &BucketOrder) -> bool {
        match self {
            MutationKind::BucketInsertion
            | MutationKind::BucketsInterchange
            | MutationKind::BucketInversion
            | MutationKind::BucketUnion
            | MutationKind::ItemInterchange => order.num_buckets() >= 2,
            MutationKind::BucketDivision => order.buckets().iter().any(|b| b.len() >= 2),
            MutationKind::ItemInsertion => order.n() >= 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MutationKind::BucketInsertion => "bucket insertion",
            MutationKind::BucketsInterchange => "buckets interchange",
            MutationKind::BucketInversion => "bucket inversion",
            MutationKind::BucketUnion => "bucket union",
            MutationKind::BucketDivision => "bucket division",
            MutationKind::ItemInsertion => "item insertion",
            MutationKind::ItemInterchange => "item interchange",
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of one solver run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlsConfig {
    /// Number of bucket orders in the solution.
    pub b: usize,
    /// Keep all weights at `1/b` and skip weight tuning.
    pub equal_weights: bool,
    pub outer_iters: usize,
    /// Weight-tuning moves per evaluated candidate.
    pub tune_iters: usize,
    pub seed: u64,
    /// Stop the outer loop once this many fitness evaluations have been made.
    pub max_evaluations: Option<u64>,
}

impl Default for SlsConfig {
    fn default() -> Self {
        Self {
            b: 1,
            equal_weights: false,
            outer_iters: 10_000,
            tune_iters: 100,
            seed: 0,
            max_evaluations: None,
        }
    }
}

/// Progress of one run. `best[i]` is the incumbent fitness after outer
/// iteration `i`; `best[0]` is the initial solution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlsTrace {
    pub best: Vec<f64>,
    pub accepted: usize,
    pub evaluations: u64,
}

impl SlsTrace {
    /// CSV with header `iteration,best_fitness`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,best_fitness\n");
        for (i, f) in self.best.iter().enumerate() {
            out.push_str(&format!("{i},{f}\n"));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlsOutcome {
    /// Final incumbent, as searched (duplicates not merged).
    pub ensemble: WeightedEnsemble,
    pub fitness: f64,
    pub trace: SlsTrace,
}

/// Uniform integer in `[0, bound)` by rejection on the bit length.
fn uniform_below<R: Rng + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    debug_assert!(!bound.is_zero());
    let bits = bound.bits();
    let words = bits.div_ceil(32) as usize;
    let top_mask = if bits.is_multiple_of(32) { u32::MAX } else { (1u32 << (bits % 32)) - 1 };
    loop {
        let mut digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
        if let Some(top) = digits.last_mut() {
            *top &= top_mask;
        }
        let x = BigUint::from_slice(&digits);
        if &x < bound {
            return x;
        }
    }
}

/// Draws a bucket order uniformly among all `F(n)` of them. `fubini` must
/// hold `F(0..=n)`.
fn uniform_bucket_order<R: Rng + ?Sized>(n: usize, fubini: &[BigUint], rng: &mut R) -> BucketOrder {
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut buckets = Vec::new();
    while !remaining.is_empty() {
        let m = remaining.len();
        // The first bucket has size j in C(m,j) * F(m-j) of the F(m) orders.
        let mut r = uniform_below(&fubini[m], rng);
        let mut choose = BigUint::from(1u32);
        let mut size = m;
        for j in 1..=m {
            choose = choose * BigUint::from(m - j + 1) / BigUint::from(j);
            let block = &choose * &fubini[m - j];
            if r < block {
                size = j;
                break;
            }
            r -= block;
        }
        let picked = index::sample(rng, m, size).into_vec();
        let mut take = vec![false; m];
        picked.iter().for_each(|&i| take[i] = true);
        let (bucket, rest): (Vec<_>, Vec<_>) = remaining.iter().enumerate().partition(|(i, _)| take[*i]);
        buckets.push(bucket.into_iter().map(|(_, &item)| item).collect());
        remaining = rest.into_iter().map(|(_, &item)| item).collect();
    }
    BucketOrder::from_parts(n, buckets)
}

/// `b` bucket orders drawn independently and uniformly, each with weight
/// `1/b`.
pub fn initial_solution<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> WeightedEnsemble {
    assert!(n >= 1 && b >= 1, "initial_solution needs n >= 1 and b >= 1");
    let fubini = fubini_table(n);
    let orders = (0..b).map(|_| uniform_bucket_order(n, &fubini, rng)).collect();
    WeightedEnsemble::from_parts(orders, vec![1.0 / b as f64; b])
}

fn two_distinct<R: Rng + ?Sized>(len: usize, rng: &mut R) -> (usize, usize) {
    let pair = index::sample(rng, len, 2);
    (pair.index(0), pair.index(1))
}

/// Applies one move of the given kind.
pub fn mutate_order<R: Rng + ?Sized>(
    order: &BucketOrder,
    kind: MutationKind,
    rng: &mut R,
) -> Result<BucketOrder, SlsError> {
    if !kind.is_applicable(order) {
        return Err(SlsError::Inapplicable { kind, order: order.to_string() });
    }
    let n = order.n();
    let mut buckets = order.buckets().to_vec();
    let k = buckets.len();
    match kind {
        MutationKind::BucketInsertion => {
            let from = rng.gen_range(0..k);
            let mut to = rng.gen_range(0..k - 1);
            if to >= from {
                to += 1;
            }
            let moved = buckets.remove(from);
            buckets.insert(to, moved);
        }
        MutationKind::BucketsInterchange => {
            let (i, j) = two_distinct(k, rng);
            buckets.swap(i, j);
        }
        MutationKind::BucketInversion => {
            let (i, j) = two_distinct(k, rng);
            buckets[i.min(j)..=i.max(j)].reverse();
        }
        MutationKind::BucketUnion => {
            let i = rng.gen_range(0..k - 1);
            let next = buckets.remove(i + 1);
            buckets[i].extend(next);
        }
        MutationKind::BucketDivision => {
            let splittable: Vec<usize> = (0..k).filter(|&i| buckets[i].len() >= 2).collect();
            let i = splittable[rng.gen_range(0..splittable.len())];
            let items = std::mem::take(&mut buckets[i]);
            let (first, second) = loop {
                let (a, b): (Vec<usize>, Vec<usize>) = items.iter().partition(|_| rng.gen());
                if !a.is_empty() && !b.is_empty() {
                    break (a, b);
                }
            };
            buckets[i] = first;
            buckets.insert(i + 1, second);
        }
        MutationKind::ItemInsertion => {
            let source = rng.gen_range(0..k);
            let slot = rng.gen_range(0..buckets[source].len());
            let item = buckets[source].remove(slot);
            let source_kept = !buckets[source].is_empty();
            if !source_kept {
                buckets.remove(source);
            }
            let len = buckets.len();
            // Existing targets exclude the source bucket; a new singleton may
            // not be put back where the item came from.
            let existing: Vec<usize> = (0..len).filter(|&t| !(source_kept && t == source)).collect();
            let fresh: Vec<usize> = (0..=len).filter(|&p| source_kept || p != source).collect();
            let into_existing = match (existing.is_empty(), fresh.is_empty()) {
                (false, false) => rng.gen(),
                (false, true) => true,
                _ => false,
            };
            if into_existing {
                let t = existing[rng.gen_range(0..existing.len())];
                buckets[t].push(item);
            } else {
                let p = fresh[rng.gen_range(0..fresh.len())];
                buckets.insert(p, vec![item]);
            }
        }
        MutationKind::ItemInterchange => {
            let (i, j) = two_distinct(k, rng);
            let a = rng.gen_range(0..buckets[i].len());
            let b = rng.gen_range(0..buckets[j].len());
            let tmp = buckets[i][a];
            buckets[i][a] = buckets[j][b];
            buckets[j][b] = tmp;
        }
    }
    Ok(BucketOrder::from_parts(n, buckets))
}

/// Mutates a uniformly chosen number `m` in `1..=b` of distinct members,
/// each with a kind drawn uniformly from those applicable to it.
fn mutate_orders<R: Rng + ?Sized>(orders: &[BucketOrder], rng: &mut R) -> Vec<BucketOrder> {
    let b = orders.len();
    let mut out = orders.to_vec();
    let m = rng.gen_range(1..=b);
    for member in index::sample(rng, b, m) {
        let kinds: Vec<MutationKind> =
            MutationKind::ALL.into_iter().filter(|k| k.is_applicable(&out[member])).collect();
        if kinds.is_empty() {
            continue;
        }
        let kind = kinds[rng.gen_range(0..kinds.len())];
        out[member] = mutate_order(&out[member], kind, rng).expect("kind filtered as applicable");
    }
    out
}

/// Mutates some members of the ensemble; weights are carried over.
pub fn mutate_solution<R: Rng + ?Sized>(ensemble: &WeightedEnsemble, rng: &mut R) -> WeightedEnsemble {
    WeightedEnsemble::from_parts(mutate_orders(ensemble.orders(), rng), ensemble.weights().to_vec())
}

fn member_matrices(orders: &[BucketOrder]) -> Vec<Vec<f64>> {
    orders.iter().map(bucket_entries).collect()
}

/// Moves weight `i` to `target` and rescales the others proportionally so
/// the total stays 1. When the others are all zero the remainder is split
/// evenly among them.
fn reweight(weights: &[f64], i: usize, target: f64) -> Vec<f64> {
    let b = weights.len();
    let rest: f64 = weights.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| w).sum();
    let new_rest = 1.0 - target;
    weights
        .iter()
        .enumerate()
        .map(|(j, &w)| {
            if j == i {
                target
            } else if rest > 0.0 {
                w * new_rest / rest
            } else {
                new_rest / (b - 1) as f64
            }
        })
        .collect()
}

fn tune<R: Rng + ?Sized>(
    members: &[Vec<f64>],
    c: &[f64],
    weights: &mut Vec<f64>,
    fitness: &mut f64,
    t2: usize,
    evaluations: &mut u64,
    rng: &mut R,
) {
    let b = weights.len();
    if b < 2 {
        return;
    }
    for _ in 0..t2 {
        let i = rng.gen_range(0..b);
        let r: f64 = rng.gen_range(-0.5..=0.5);
        let candidate = reweight(weights, i, (weights[i] + r).clamp(0.0, 1.0));
        let f = weighted_distance(members, &candidate, c);
        *evaluations += 1;
        if f < *fitness {
            *fitness = f;
            *weights = candidate;
        }
    }
}

/// Randomized coordinate search on the weight simplex. Each of the `t2`
/// moves shifts one weight by a uniform amount in `[-0.5, 0.5]` (clamped to
/// `[0,1]`), rescales the rest, and is kept only on strict improvement.
/// Returns the best fitness and its weights.
pub fn tune_weights<R: Rng + ?Sized>(
    c: &PairOrderMatrix,
    ensemble: &WeightedEnsemble,
    t2: usize,
    rng: &mut R,
) -> Result<(f64, Vec<f64>), SlsError> {
    if ensemble.n() != c.n() {
        return Err(SlsError::DimensionMismatch { ensemble: ensemble.n(), matrix: c.n() });
    }
    let members = member_matrices(ensemble.orders());
    let mut weights = ensemble.weights().to_vec();
    let mut fitness = weighted_distance(&members, &weights, c.as_slice());
    let mut evaluations = 0;
    tune(&members, c.as_slice(), &mut weights, &mut fitness, t2, &mut evaluations, rng);
    Ok((fitness, weights))
}

/// Runs the full search and returns the final incumbent.
pub fn sls_osbop(c: &PairOrderMatrix, config: &SlsConfig) -> Result<SlsOutcome, SlsError> {
    let n = c.n();
    if n == 0 {
        return Err(SlsError::NoItems);
    }
    if config.b == 0 {
        return Err(SlsError::NoMembers);
    }
    let b = config.b;
    let target = c.as_slice();
    let equal = vec![1.0 / b as f64; b];
    let mut rng = solver_rng(config.seed);
    let mut trace = SlsTrace::default();

    let mut orders = initial_solution(n, b, &mut rng).orders().to_vec();
    let members = member_matrices(&orders);
    let mut weights = equal.clone();
    let mut fitness = weighted_distance(&members, &weights, target);
    trace.evaluations += 1;
    if !config.equal_weights {
        tune(
            &members,
            target,
            &mut weights,
            &mut fitness,
            config.tune_iters,
            &mut trace.evaluations,
            &mut rng,
        );
    }
    trace.best.push(fitness);

    for _ in 0..config.outer_iters {
        if config.max_evaluations.is_some_and(|cap| trace.evaluations >= cap) {
            break;
        }
        let candidate = mutate_orders(&orders, &mut rng);
        let members = member_matrices(&candidate);
        let mut cand_weights = equal.clone();
        let mut cand_fitness = weighted_distance(&members, &cand_weights, target);
        trace.evaluations += 1;
        if !config.equal_weights {
            tune(
                &members,
                target,
                &mut cand_weights,
                &mut cand_fitness,
                config.tune_iters,
                &mut trace.evaluations,
                &mut rng,
            );
        }
        if cand_fitness <= fitness {
            orders = candidate;
            weights = cand_weights;
            fitness = cand_fitness;
            trace.accepted += 1;
        }
        trace.best.push(fitness);
    }

    Ok(SlsOutcome { ensemble: WeightedEnsemble::from_parts(orders, weights), fitness, trace })
}
