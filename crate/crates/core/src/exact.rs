//! Exhaustive search over bucket orders.
//!
//! The space of bucket orders over `n` items has Fubini-number size, and the
//! space of unordered sets of `b` distinct orders has `binomial(F(n), b)`
//! members. Both grow quickly, so the solvers refuse to run when the
//! candidate count exceeds a budget.
//!
//! Enumeration order is fixed: set partitions are walked through their
//! restricted-growth strings in lexicographic order, and for each partition
//! the blocks (numbered by first appearance) are laid out in every
//! permutation, lexicographically. Tie lists are reported in this order.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{bucket_entries, BucketOrder, PairOrderMatrix, SquareMatrix};
use crate::objective::weighted_distance;

/// Default limit on the number of candidates an exact search may evaluate.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Two candidates with fitness closer than this are reported as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("search space has {candidates} candidates, budget is {budget}")]
    BudgetExceeded { candidates: BigUint, budget: u64 },
    #[error("only {available} distinct bucket orders exist, cannot choose {b}")]
    TooFewOrders { available: BigUint, b: usize },
    #[error("the no-ties space size is only defined for b = 1 (got b = {0})")]
    StrictEnsemble(usize),
    #[error("item count must be positive")]
    NoItems,
    #[error("ensemble size must be positive")]
    NoMembers,
}

/// Number of ordered set partitions of `n` items,
/// `F(n) = sum_{k=1..n} C(n,k) F(n-k)` with `F(0) = 1`.
pub fn fubini(n: usize) -> BigUint {
    fubini_table(n).pop().expect("table has n + 1 entries")
}

/// `F(0), F(1), ..., F(n)`.
pub fn fubini_table(n: usize) -> Vec<BigUint> {
    let mut table: Vec<BigUint> = vec![BigUint::one()];
    for m in 1..=n {
        let mut total = BigUint::zero();
        let mut choose = BigUint::one();
        for k in 1..=m {
            // C(m, k) from C(m, k - 1).
            choose = choose * BigUint::from(m - k + 1) / BigUint::from(k);
            total += &choose * &table[m - k];
        }
        table.push(total);
    }
    table
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

pub fn binomial(n: &BigUint, k: usize) -> BigUint {
    if BigUint::from(k) > *n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - BigUint::from(i)) / BigUint::from(i + 1);
    }
    acc
}

/// Size of a solution space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceSize {
    pub n: usize,
    pub b: usize,
    pub strict: bool,
    pub count: BigUint,
}

/// `binomial(F(n), b)` sets of distinct bucket orders, or `n!` strict
/// rankings when `strict` is set (only for `b = 1`).
pub fn space_size(n: usize, b: usize, strict: bool) -> Result<SpaceSize, ExactError> {
    if n == 0 {
        return Err(ExactError::NoItems);
    }
    if b == 0 {
        return Err(ExactError::NoMembers);
    }
    let count = if strict {
        if b != 1 {
            return Err(ExactError::StrictEnsemble(b));
        }
        factorial(n)
    } else {
        binomial(&fubini(n), b)
    };
    Ok(SpaceSize { n, b, strict, count })
}

/// One row of the solution-space table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceRow {
    pub n: usize,
    pub b: usize,
    pub count: BigUint,
    /// `n!`, present only for `b = 1`.
    pub strict_count: Option<BigUint>,
}

pub fn space_table(
    ns: impl IntoIterator<Item = usize>,
    bs: impl IntoIterator<Item = usize> + Clone,
) -> Result<Vec<SpaceRow>, ExactError> {
    let mut rows = Vec::new();
    for n in ns {
        for b in bs.clone() {
            let count = space_size(n, b, false)?.count;
            let strict_count = (b == 1).then(|| factorial(n));
            rows.push(SpaceRow { n, b, count, strict_count });
        }
    }
    Ok(rows)
}

/// CSV with header `n,b,count,strict_count`; `strict_count` is empty for
/// `b > 1`.
pub fn space_table_csv(rows: &[SpaceRow]) -> String {
    let mut out = String::from("n,b,count,strict_count\n");
    for row in rows {
        let strict = row.strict_count.as_ref().map(ToString::to_string).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", row.n, row.b, row.count, strict));
    }
    out
}

/// Streams every bucket order over `n` items exactly once.
#[derive(Clone, Debug)]
pub struct BucketOrders {
    n: usize,
    rgs: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    perm: Vec<usize>,
    done: bool,
}

pub fn enumerate_bucket_orders(n: usize) -> BucketOrders {
    let rgs = vec![0; n];
    let mut it = BucketOrders { n, rgs, blocks: Vec::new(), perm: Vec::new(), done: n == 0 };
    it.load_partition();
    it
}

impl BucketOrders {
    fn load_partition(&mut self) {
        let k = self.rgs.iter().max().map_or(0, |m| m + 1);
        self.blocks = vec![Vec::new(); k];
        for (item, &block) in self.rgs.iter().enumerate() {
            self.blocks[block].push(item);
        }
        self.perm = (0..k).collect();
    }

    /// Next restricted-growth string; false when exhausted.
    fn advance_partition(&mut self) -> bool {
        for i in (1..self.n).rev() {
            let prefix_max = self.rgs[..i].iter().copied().max().unwrap_or(0);
            if self.rgs[i] <= prefix_max {
                self.rgs[i] += 1;
                self.rgs[i + 1..].iter_mut().for_each(|x| *x = 0);
                return true;
            }
        }
        false
    }
}

/// Lexicographic successor; false when `perm` was the last permutation.
fn next_permutation(perm: &mut [usize]) -> bool {
    let Some(i) = (1..perm.len()).rev().find(|&i| perm[i - 1] < perm[i]) else {
        return false;
    };
    let j = (i..perm.len()).rev().find(|&j| perm[j] > perm[i - 1]).expect("successor exists");
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

impl Iterator for BucketOrders {
    type Item = BucketOrder;

    fn next(&mut self) -> Option<BucketOrder> {
        if self.done {
            return None;
        }
        let buckets = self.perm.iter().map(|&b| self.blocks[b].clone()).collect();
        let order = BucketOrder::from_parts(self.n, buckets);
        if !next_permutation(&mut self.perm) {
            if self.advance_partition() {
                self.load_partition();
            } else {
                self.done = true;
            }
        }
        Some(order)
    }
}

/// Optimal value and every optimal solution of an exhaustive search.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactResult {
    pub optimum: f64,
    /// Each entry is one optimal set of `b` orders (weights `1/b`), listed in
    /// enumeration order.
    pub solutions: Vec<Vec<BucketOrder>>,
    pub explored: u64,
}

impl ExactResult {
    /// Solutions as sets of canonical order strings.
    pub fn solution_texts(&self) -> Vec<Vec<String>> {
        self.solutions.iter().map(|set| set.iter().map(ToString::to_string).collect()).collect()
    }
}

/// Exhaustive solver with a candidate budget.
#[derive(Clone, Copy, Debug)]
pub struct ExactSearch {
    pub budget: u64,
}

impl Default for ExactSearch {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET }
    }
}

impl ExactSearch {
    pub fn with_budget(budget: u64) -> Self {
        Self { budget }
    }

    /// Minimises the distance between one bucket matrix and `c`.
    pub fn obop(&self, c: &PairOrderMatrix) -> Result<ExactResult, ExactError> {
        self.osbop_equal(c, 1)
    }

    /// Minimises fitness over all sets of `b` distinct orders with weights
    /// `1/b`.
    pub fn osbop_equal(&self, c: &PairOrderMatrix, b: usize) -> Result<ExactResult, ExactError> {
        self.search(c.as_matrix(), b)
    }

    /// Looks for `b` distinct orders whose equal-weight mean equals `target`
    /// entrywise.
    pub fn decompose_equal(
        &self,
        target: &SquareMatrix,
        b: usize,
    ) -> Result<Option<Vec<BucketOrder>>, ExactError> {
        let result = self.search(target, b)?;
        Ok((result.optimum <= 1e-9).then(|| result.solutions[0].clone()))
    }

    fn search(&self, target: &SquareMatrix, b: usize) -> Result<ExactResult, ExactError> {
        let n = target.n();
        if n == 0 {
            return Err(ExactError::NoItems);
        }
        if b == 0 {
            return Err(ExactError::NoMembers);
        }
        let available = fubini(n);
        let candidates = binomial(&available, b);
        if candidates.is_zero() {
            return Err(ExactError::TooFewOrders { available, b });
        }
        if candidates > BigUint::from(self.budget) {
            return Err(ExactError::BudgetExceeded { candidates, budget: self.budget });
        }
        let orders: Vec<BucketOrder> = enumerate_bucket_orders(n).collect();
        let matrices: Vec<Vec<f64>> = orders.iter().map(bucket_entries).collect();
        let weights = vec![1.0 / b as f64; b];
        let c = target.as_slice();

        // Each worker owns the subsets whose smallest index is `first`.
        let per_first: Vec<Tied> = (0..=orders.len() - b)
            .into_par_iter()
            .map(|first| {
                let mut tied = Tied::default();
                let mut idx: Vec<usize> = (first..first + b).collect();
                let mut members: Vec<&[f64]> = Vec::with_capacity(b);
                loop {
                    members.clear();
                    members.extend(idx.iter().map(|&i| matrices[i].as_slice()));
                    tied.offer(weighted_distance(&members, &weights, c), &idx);
                    if !advance_tail(&mut idx, orders.len()) {
                        break;
                    }
                }
                tied
            })
            .collect();

        let optimum = per_first.iter().map(|t| t.best).fold(f64::INFINITY, f64::min);
        let explored = per_first.iter().map(|t| t.explored).sum();
        let solutions = per_first
            .into_iter()
            .flat_map(|t| t.sets)
            .filter(|(f, _)| *f <= optimum + TIE_TOLERANCE)
            .map(|(_, set)| set.into_iter().map(|i| orders[i].clone()).collect())
            .collect();
        debug_assert_eq!(candidates.to_u64(), Some(explored));
        Ok(ExactResult { optimum, solutions, explored })
    }
}

/// Advances a sorted index set to its lexicographic successor without
/// touching position 0.
fn advance_tail(idx: &mut [usize], len: usize) -> bool {
    let b = idx.len();
    for pos in (1..b).rev() {
        if idx[pos] < len - (b - pos) {
            idx[pos] += 1;
            for later in pos + 1..b {
                idx[later] = idx[later - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[derive(Default)]
struct Tied {
    best: f64,
    sets: Vec<(f64, Vec<usize>)>,
    explored: u64,
}

impl Tied {
    fn offer(&mut self, f: f64, idx: &[usize]) {
        if self.explored == 0 || f < self.best {
            self.best = f;
            let cutoff = f + TIE_TOLERANCE;
            self.sets.retain(|(g, _)| *g <= cutoff);
        }
        if f <= self.best + TIE_TOLERANCE {
            self.sets.push((f, idx.to_vec()));
        }
        self.explored += 1;
    }
}

/// [`ExactSearch::obop`] with the default budget.
pub fn exact_obop(c: &PairOrderMatrix) -> Result<ExactResult, ExactError> {
    ExactSearch::default().obop(c)
}

/// [`ExactSearch::osbop_equal`] with the default budget.
pub fn exact_osbop_equal(c: &PairOrderMatrix, b: usize) -> Result<ExactResult, ExactError> {
    ExactSearch::default().osbop_equal(c, b)
}
