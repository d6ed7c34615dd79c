//! Bucket orders with their matrix encodings, plus weighted ensembles of
//! bucket orders.
//!
//! Items are labelled `1..=n` in every textual form. Internally they are
//! stored as zero-based indices, so item label `k` lives at index `k - 1`.
//!
//! The textual notation separates buckets with `|` and items inside a bucket
//! with `,`: `1,3|2,4` ranks items 1 and 3 (tied) ahead of items 2 and 4
//! (tied).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Tolerance used when checking the complementarity and diagonal of pair
/// order matrices, and the unit sum of ensemble weights.
pub const MATRIX_TOLERANCE: f64 = 1e-9;

/// Errors raised when building or validating model values.
///
/// Item labels inside errors are always one-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("bucket order text is empty")]
    EmptyText,
    #[error("empty bucket at position {position}")]
    EmptyBucket { position: usize },
    #[error("invalid item label {0:?}")]
    InvalidLabel(String),
    #[error("item {label} is outside 1..={n}")]
    ItemOutOfRange { label: usize, n: usize },
    #[error("item {label} appears more than once")]
    DuplicateItem { label: usize },
    #[error("item {label} is missing")]
    MissingItem { label: usize },
    #[error("item count must be positive")]
    NoItems,
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("entry ({row},{col}) = {value} is not allowed here")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("diagonal entry ({item},{item}) = {value}, expected 0.5")]
    Diagonal { item: usize, value: f64 },
    #[error("entries ({row},{col}) and ({col},{row}) sum to {sum}, expected 1")]
    Complementarity { row: usize, col: usize, sum: f64 },
    #[error("relation is not transitive on items ({0},{1},{2})")]
    Intransitive(usize, usize, usize),
    #[error("an ensemble needs at least one bucket order")]
    EmptyEnsemble,
    #[error("{orders} bucket orders but {weights} weights")]
    WeightCount { orders: usize, weights: usize },
    #[error("weight {value} at position {index} is outside [0,1]")]
    InvalidWeight { index: usize, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("bucket orders rank {expected} and {found} items")]
    MixedItemCounts { expected: usize, found: usize },
}

/// A complete ranking with ties: an ordered partition of the items into
/// nonempty buckets.
///
/// Buckets are kept sorted internally, so the derived comparison traits
/// are structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BucketOrder {
    n: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketOrder {
    /// Builds a bucket order from zero-based item indices.
    pub fn new(n: usize, buckets: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::NoItems);
        }
        let mut seen = vec![false; n];
        for (position, bucket) in buckets.iter().enumerate() {
            if bucket.is_empty() {
                return Err(ModelError::EmptyBucket { position: position + 1 });
            }
            for &item in bucket {
                if item >= n {
                    return Err(ModelError::ItemOutOfRange { label: item + 1, n });
                }
                if std::mem::replace(&mut seen[item], true) {
                    return Err(ModelError::DuplicateItem { label: item + 1 });
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(ModelError::MissingItem { label: missing + 1 });
        }
        Ok(Self::from_parts(n, buckets))
    }

    /// Caller guarantees the partition is valid; buckets are re-sorted.
    pub(crate) fn from_parts(n: usize, mut buckets: Vec<Vec<usize>>) -> Self {
        for bucket in &mut buckets {
            bucket.sort_unstable();
        }
        debug_assert!(buckets.iter().all(|b| !b.is_empty()));
        debug_assert_eq!(buckets.iter().map(Vec::len).sum::<usize>(), n);
        Self { n, buckets }
    }

    /// Parses the `|`/`,` notation with one-based labels.
    pub fn parse(text: &str, n: usize) -> Result<Self, ModelError> {
        parse_bucket_order(text, n)
    }

    /// All items tied in one bucket.
    pub fn single_bucket(n: usize) -> Self {
        Self::from_parts(n, vec![(0..n).collect()])
    }

    /// The strict chain `1|2|...|n`.
    pub fn identity_chain(n: usize) -> Self {
        Self::from_parts(n, (0..n).map(|i| vec![i]).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Buckets in rank order; each holds sorted zero-based item indices.
    pub fn buckets(&self) -> &[Vec<usize>] {
        &self.buckets
    }

    pub fn num_buckets(&self) -> usize {
        self.buckets.len()
    }

    #[cfg(test)]
    pub(crate) fn into_buckets(self) -> Vec<Vec<usize>> {
        self.buckets
    }

    /// Bucket index of every item.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.n];
        for (k, bucket) in self.buckets.iter().enumerate() {
            for &item in bucket {
                pos[item] = k;
            }
        }
        pos
    }

    /// Canonical textual form, e.g. `1,3|2,4`.
    pub fn format(&self) -> String {
        format_bucket_order(self)
    }

    pub fn to_matrix(&self) -> BucketMatrix {
        to_matrix(self)
    }

    /// Renames items: item `i` becomes item `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length must equal n");
        let buckets = self.buckets.iter().map(|b| b.iter().map(|&i| perm[i]).collect()).collect();
        Self::from_parts(self.n, buckets)
    }
}

impl fmt::Display for BucketOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, bucket) in self.buckets.iter().enumerate() {
            if k > 0 {
                f.write_str("|")?;
            }
            for (j, item) in bucket.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", item + 1)?;
            }
        }
        Ok(())
    }
}

/// Parses a bucket order written as `1,3|2,4` over items `1..=n`.
///
/// Whitespace around labels is ignored. Items inside a bucket may be listed
/// in any order.
pub fn parse_bucket_order(text: &str, n: usize) -> Result<BucketOrder, ModelError> {
    if text.trim().is_empty() {
        return Err(ModelError::EmptyText);
    }
    let mut buckets = Vec::new();
    for (position, chunk) in text.split('|').enumerate() {
        if chunk.trim().is_empty() {
            return Err(ModelError::EmptyBucket { position: position + 1 });
        }
        let mut bucket = Vec::new();
        for token in chunk.split(',') {
            let token = token.trim();
            let label: usize = token.parse().map_err(|_| ModelError::InvalidLabel(token.to_string()))?;
            if label == 0 || label > n {
                return Err(ModelError::ItemOutOfRange { label, n });
            }
            bucket.push(label - 1);
        }
        buckets.push(bucket);
    }
    BucketOrder::new(n, buckets)
}

/// Canonical text: buckets in order, labels ascending within each bucket.
pub fn format_bucket_order(order: &BucketOrder) -> String {
    order.to_string()
}

/// Dense row-major `n x n` matrix of reals.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, ModelError> {
        if data.len() != n * n {
            return Err(ModelError::DimensionMismatch { expected: n * n, found: data.len() });
        }
        Ok(Self { n, data })
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Self { n, data: vec![value; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(ModelError::DimensionMismatch { expected: n, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry at zero-based `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }

    pub fn transpose(&self) -> Self {
        let mut out = self.clone();
        for u in 0..self.n {
            for v in 0..self.n {
                out.set(v, u, self.get(u, v));
            }
        }
        out
    }

    /// Moves row/column `i` to `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length must equal n");
        let mut out = self.clone();
        for u in 0..self.n {
            for v in 0..self.n {
                out.set(perm[u], perm[v], self.get(u, v));
            }
        }
        out
    }

    /// Largest absolute entrywise difference; `None` when dimensions differ.
    pub fn max_abs_diff(&self, other: &SquareMatrix) -> Option<f64> {
        (self.n == other.n)
            .then(|| self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// A matrix with entries in `[0,1]`, a `0.5` diagonal, and
/// `C(u,v) + C(v,u) = 1`, all within [`MATRIX_TOLERANCE`].
#[derive(Clone, Debug, PartialEq)]
pub struct PairOrderMatrix(SquareMatrix);

impl PairOrderMatrix {
    pub fn new(m: SquareMatrix) -> Result<Self, ModelError> {
        check_pair_order(&m, MATRIX_TOLERANCE)?;
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    /// The matrix with every entry `0.5`.
    pub fn uniform(n: usize) -> Self {
        Self(SquareMatrix::filled(n, 0.5))
    }

    pub(crate) fn from_unchecked(m: SquareMatrix) -> Self {
        Self(m)
    }

    pub fn as_matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        Self(self.0.permute(perm))
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }
}

impl std::ops::Deref for PairOrderMatrix {
    type Target = SquareMatrix;

    fn deref(&self) -> &SquareMatrix {
        &self.0
    }
}

pub(crate) fn check_pair_order(m: &SquareMatrix, tol: f64) -> Result<(), ModelError> {
    let n = m.n();
    if n == 0 {
        return Err(ModelError::NoItems);
    }
    for u in 0..n {
        for v in 0..n {
            let x = m.get(u, v);
            if !(0.0..=1.0).contains(&x) {
                return Err(ModelError::InvalidEntry { row: u + 1, col: v + 1, value: x });
            }
        }
        let d = m.get(u, u);
        if (d - 0.5).abs() > tol {
            return Err(ModelError::Diagonal { item: u + 1, value: d });
        }
        for v in u + 1..n {
            let sum = m.get(u, v) + m.get(v, u);
            if (sum - 1.0).abs() > tol {
                return Err(ModelError::Complementarity { row: u + 1, col: v + 1, sum });
            }
        }
    }
    Ok(())
}

/// The `{0, 0.5, 1}` matrix of a bucket order. Always valid by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketMatrix(SquareMatrix);

impl BucketMatrix {
    /// Validates `m` as the matrix of some bucket order.
    pub fn new(m: SquareMatrix) -> Result<Self, ModelError> {
        from_matrix(&m)?;
        Ok(Self(m))
    }

    pub fn as_matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    pub fn to_bucket_order(&self) -> BucketOrder {
        from_matrix(&self.0).expect("bucket matrix is valid by construction")
    }
}

impl std::ops::Deref for BucketMatrix {
    type Target = SquareMatrix;

    fn deref(&self) -> &SquareMatrix {
        &self.0
    }
}

#[inline]
pub(crate) fn precedence(pos_u: usize, pos_v: usize) -> f64 {
    match pos_u.cmp(&pos_v) {
        std::cmp::Ordering::Less => 1.0,
        std::cmp::Ordering::Equal => 0.5,
        std::cmp::Ordering::Greater => 0.0,
    }
}

/// Row-major entries of the bucket matrix of `order`.
pub(crate) fn bucket_entries(order: &BucketOrder) -> Vec<f64> {
    let n = order.n();
    let pos = order.positions();
    let mut data = Vec::with_capacity(n * n);
    for u in 0..n {
        for v in 0..n {
            data.push(precedence(pos[u], pos[v]));
        }
    }
    data
}

pub fn to_matrix(order: &BucketOrder) -> BucketMatrix {
    BucketMatrix(SquareMatrix { n: order.n(), data: bucket_entries(order) })
}

/// Recovers the bucket order encoded by `m`.
///
/// Fails when an entry is not in `{0, 0.5, 1}`, complementarity or the
/// diagonal is off, or the induced relation is not a weak order.
pub fn from_matrix(m: &SquareMatrix) -> Result<BucketOrder, ModelError> {
    let n = m.n();
    check_pair_order(m, 0.0)?;
    for u in 0..n {
        for v in 0..n {
            let x = m.get(u, v);
            if x != 0.0 && x != 0.5 && x != 1.0 {
                return Err(ModelError::InvalidEntry { row: u + 1, col: v + 1, value: x });
            }
        }
    }
    // Items of a weak order share a bucket iff they have the same number of
    // strict predecessors, and that number grows along the order.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        let preds = (0..n).filter(|&u| m.get(u, v) == 1.0).count();
        groups.entry(preds).or_default().push(v);
    }
    let candidate = BucketOrder::from_parts(n, groups.into_values().collect());
    if bucket_entries(&candidate) == m.as_slice() {
        return Ok(candidate);
    }
    Err(find_intransitive_triple(m)
        .map(|(u, v, w)| ModelError::Intransitive(u + 1, v + 1, w + 1))
        .unwrap_or(ModelError::Intransitive(1, 1, 1)))
}

fn find_intransitive_triple(m: &SquareMatrix) -> Option<(usize, usize, usize)> {
    let n = m.n();
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if u == v || v == w || u == w {
                    continue;
                }
                let (uv, vw, uw) = (m.get(u, v), m.get(v, w), m.get(u, w));
                let strict_chain = (uv == 1.0 && vw >= 0.5) || (uv >= 0.5 && vw == 1.0);
                if strict_chain && uw != 1.0 {
                    return Some((u, v, w));
                }
                if uv == 0.5 && vw == 0.5 && uw != 0.5 {
                    return Some((u, v, w));
                }
            }
        }
    }
    None
}

/// `b` bucket orders over the same items with weights on the simplex.
///
/// Duplicate orders are allowed; [`WeightedEnsemble::canonicalize`] merges
/// them.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedEnsemble {
    orders: Vec<BucketOrder>,
    weights: Vec<f64>,
}

impl WeightedEnsemble {
    pub fn new(orders: Vec<BucketOrder>, weights: Vec<f64>) -> Result<Self, ModelError> {
        if orders.is_empty() {
            return Err(ModelError::EmptyEnsemble);
        }
        if orders.len() != weights.len() {
            return Err(ModelError::WeightCount { orders: orders.len(), weights: weights.len() });
        }
        let n = orders[0].n();
        if let Some(other) = orders.iter().find(|o| o.n() != n) {
            return Err(ModelError::MixedItemCounts { expected: n, found: other.n() });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::InvalidWeight { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > MATRIX_TOLERANCE {
            return Err(ModelError::WeightSum(sum));
        }
        Ok(Self { orders, weights })
    }

    /// Every order gets weight `1/b`.
    pub fn equal(orders: Vec<BucketOrder>) -> Result<Self, ModelError> {
        let b = orders.len().max(1);
        let weights = vec![1.0 / b as f64; orders.len()];
        Self::new(orders, weights)
    }

    pub fn single(order: BucketOrder) -> Self {
        Self { orders: vec![order], weights: vec![1.0] }
    }

    pub(crate) fn from_parts(orders: Vec<BucketOrder>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(orders.len(), weights.len());
        Self { orders, weights }
    }

    pub fn n(&self) -> usize {
        self.orders[0].n()
    }

    pub fn b(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[BucketOrder] {
        &self.orders
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BucketOrder, f64)> {
        self.orders.iter().zip(self.weights.iter().copied())
    }

    pub fn aggregate(&self) -> PairOrderMatrix {
        aggregate(self)
    }

    /// Merges duplicate orders by summing their weights, then sorts by weight
    /// descending (ties broken by the canonical order text).
    pub fn canonicalize(&self) -> WeightedEnsemble {
        let mut merged: Vec<(BucketOrder, f64)> = Vec::with_capacity(self.b());
        for (order, w) in self.iter() {
            match merged.iter_mut().find(|(o, _)| o == order) {
                Some(slot) => slot.1 += w,
                None => merged.push((order.clone(), w)),
            }
        }
        merged.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.to_string().cmp(&b.0.to_string()))
        });
        let (orders, weights) = merged.into_iter().unzip();
        Self { orders, weights }
    }

    /// Applies the same relabeling to every order.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        Self { orders: self.orders.iter().map(|o| o.relabel(perm)).collect(), weights: self.weights.clone() }
    }
}

impl fmt::Display for WeightedEnsemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (order, w)) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{w:.4}*{order}")?;
        }
        Ok(())
    }
}

/// Weighted sum of the members' bucket matrices.
pub fn aggregate(ensemble: &WeightedEnsemble) -> PairOrderMatrix {
    let n = ensemble.n();
    let mut data = vec![0.0; n * n];
    for (order, w) in ensemble.iter() {
        let pos = order.positions();
        for u in 0..n {
            let row = &mut data[u * n..(u + 1) * n];
            for v in 0..n {
                row[v] += w * precedence(pos[u], pos[v]);
            }
        }
    }
    PairOrderMatrix::from_unchecked(SquareMatrix { n, data })
}
