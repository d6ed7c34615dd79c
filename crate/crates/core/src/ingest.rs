//! Reading preference data and building pair order matrices from it.
//!
//! Two inputs are supported:
//!
//! * PrefLib election files (`.soc`, `.soi`, `.toc`, `.toi`). The current
//!   layout has `#`-prefixed metadata lines followed by vote lines such as
//!   `3: 1,{2,3}`. The older layout (item count, one `index,name` line per
//!   item, a `voters,sum,unique` summary, then `count,1,{2,3}` lines) is also
//!   accepted.
//! * A matrix CSV: the first line holds `n`, followed by `n` rows of `n`
//!   comma-separated reals.

use log::warn;
use thiserror::Error;

use crate::model::{check_pair_order, ModelError, PairOrderMatrix, SquareMatrix, MATRIX_TOLERANCE};

/// Largest complementarity or diagonal error that [`read_matrix`] repairs.
pub const REPAIR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: multiplicity {value} must be positive")]
    Multiplicity { line: usize, value: i64 },
    #[error("line {line}: item {label} is outside 1..={n}")]
    ItemOutOfRange { line: usize, label: usize, n: usize },
    #[error("line {line}: item {label} is ranked twice")]
    DuplicateItem { line: usize, label: usize },
    #[error("input is empty")]
    Empty,
    #[error("profile has no votes")]
    NoVotes,
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("entry ({row},{col}) = {value} is outside [0,1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("entries ({row},{col}) and ({col},{row}) sum to {sum}, off by more than {REPAIR_TOLERANCE}")]
    Complementarity { row: usize, col: usize, sum: f64 },
    #[error("diagonal entry ({item},{item}) = {value}, expected 0.5")]
    Diagonal { item: usize, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One ballot type: a possibly incomplete ranking with ties, cast
/// `multiplicity` times.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vote {
    pub multiplicity: u64,
    /// Tie groups in rank order, zero-based item indices.
    pub ranking: Vec<Vec<usize>>,
}

impl Vote {
    /// Rank group of every item, `None` when unranked.
    pub fn positions(&self, n: usize) -> Vec<Option<usize>> {
        let mut pos = vec![None; n];
        for (g, group) in self.ranking.iter().enumerate() {
            for &item in group {
                pos[item] = Some(g);
            }
        }
        pos
    }

    pub fn reversed(&self) -> Vote {
        let mut ranking = self.ranking.clone();
        ranking.reverse();
        Vote { multiplicity: self.multiplicity, ranking }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Profile {
    pub n: usize,
    pub votes: Vec<Vote>,
    /// Value of the `FILE NAME` metadata, when present.
    pub file_name: Option<String>,
    /// Declared names of items `1..=n`.
    pub alternatives: Vec<Option<String>>,
    /// Metadata keys that were read but not used.
    pub ignored_metadata: Vec<String>,
}

impl Profile {
    pub fn new(n: usize, votes: Vec<Vote>) -> Self {
        Self { n, votes, alternatives: vec![None; n], ..Default::default() }
    }

    pub fn total_voters(&self) -> u64 {
        self.votes.iter().map(|v| v.multiplicity).sum()
    }
}

fn malformed(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Malformed { line, message: message.into() }
}

/// Parses `1,{2,3},4` into tie groups, checking labels and duplicates.
fn parse_ranking(text: &str, n: usize, line: usize) -> Result<Vec<Vec<usize>>, IngestError> {
    let mut seen = vec![false; n];
    let mut groups = Vec::new();
    let mut push_label = |token: &str, group: &mut Vec<usize>| -> Result<(), IngestError> {
        let token = token.trim();
        let label: usize =
            token.parse().map_err(|_| malformed(line, format!("invalid item label {token:?}")))?;
        if label == 0 || label > n {
            return Err(IngestError::ItemOutOfRange { line, label, n });
        }
        if std::mem::replace(&mut seen[label - 1], true) {
            return Err(IngestError::DuplicateItem { line, label });
        }
        group.push(label - 1);
        Ok(())
    };

    let mut rest = text.trim();
    while !rest.is_empty() {
        let mut group = Vec::new();
        if let Some(open) = rest.strip_prefix('{') {
            let close = open.find('}').ok_or_else(|| malformed(line, "unclosed '{'"))?;
            let inner = &open[..close];
            if inner.trim().is_empty() {
                return Err(malformed(line, "empty tie group"));
            }
            for token in inner.split(',') {
                push_label(token, &mut group)?;
            }
            rest = open[close + 1..].trim_start();
        } else {
            let end = rest.find(',').unwrap_or(rest.len());
            let token = &rest[..end];
            if token.contains('}') || token.contains('{') {
                return Err(malformed(line, "unbalanced braces"));
            }
            push_label(token, &mut group)?;
            rest = &rest[end..];
        }
        groups.push(group);
        if let Some(after) = rest.strip_prefix(',') {
            rest = after.trim_start();
            if rest.is_empty() {
                return Err(malformed(line, "trailing ','"));
            }
        } else if !rest.is_empty() {
            return Err(malformed(line, format!("unexpected text {rest:?}")));
        }
    }
    Ok(groups)
}

fn parse_multiplicity(token: &str, line: usize) -> Result<u64, IngestError> {
    let value: i64 = token
        .trim()
        .parse()
        .map_err(|_| malformed(line, format!("invalid multiplicity {:?}", token.trim())))?;
    if value <= 0 {
        return Err(IngestError::Multiplicity { line, value });
    }
    Ok(value as u64)
}

/// Parses a PrefLib election file.
pub fn parse_preflib(content: &str) -> Result<Profile, IngestError> {
    let first = content.lines().map(str::trim).find(|l| !l.is_empty()).ok_or(IngestError::Empty)?;
    if !first.starts_with('#') && first.parse::<usize>().is_ok() {
        parse_legacy(content)
    } else {
        parse_current(content)
    }
}

fn parse_current(content: &str) -> Result<Profile, IngestError> {
    let mut n: Option<usize> = None;
    let mut names: Vec<(usize, String)> = Vec::new();
    let mut file_name = None;
    let mut ignored = Vec::new();
    let mut raw_votes: Vec<(usize, u64, &str)> = Vec::new();

    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(meta) = text.strip_prefix('#') {
            let (key, value) = match meta.split_once(':') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => (meta.trim(), ""),
            };
            if key == "NUMBER ALTERNATIVES" {
                let count = value
                    .parse()
                    .map_err(|_| malformed(line, format!("invalid alternative count {value:?}")))?;
                n = Some(count);
            } else if let Some(index) = key.strip_prefix("ALTERNATIVE NAME") {
                let index: usize = index
                    .trim()
                    .parse()
                    .map_err(|_| malformed(line, format!("invalid alternative index in {key:?}")))?;
                names.push((index, value.to_string()));
            } else if key == "FILE NAME" {
                file_name = Some(value.to_string());
            } else {
                ignored.push(key.to_string());
            }
            continue;
        }
        let (count, ranking) =
            text.split_once(':').ok_or_else(|| malformed(line, "expected 'multiplicity: ranking'"))?;
        raw_votes.push((line, parse_multiplicity(count, line)?, ranking));
    }

    let n = match n {
        Some(n) => n,
        None => {
            let inferred = infer_item_count(&raw_votes);
            warn!("no NUMBER ALTERNATIVES header; assuming {inferred} items");
            inferred
        }
    };
    if !ignored.is_empty() {
        warn!("ignoring PrefLib metadata: {}", ignored.join(", "));
    }
    let mut votes = Vec::with_capacity(raw_votes.len());
    for (line, multiplicity, ranking) in raw_votes {
        votes.push(Vote { multiplicity, ranking: parse_ranking(ranking, n, line)? });
    }
    let mut alternatives = vec![None; n];
    for (index, name) in names {
        if (1..=n).contains(&index) {
            alternatives[index - 1] = Some(name);
        }
    }
    Ok(Profile { n, votes, file_name, alternatives, ignored_metadata: ignored })
}

fn infer_item_count(raw_votes: &[(usize, u64, &str)]) -> usize {
    raw_votes
        .iter()
        .flat_map(|(_, _, r)| r.split([',', '{', '}']))
        .filter_map(|t| t.trim().parse::<usize>().ok())
        .max()
        .unwrap_or(0)
}

fn parse_legacy(content: &str) -> Result<Profile, IngestError> {
    let mut lines =
        content.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (line, first) = lines.next().ok_or(IngestError::Empty)?;
    let n: usize = first.parse().map_err(|_| malformed(line, "expected item count"))?;
    let mut alternatives = vec![None; n];
    for _ in 0..n {
        let (line, text) = lines.next().ok_or_else(|| malformed(line, "missing item names"))?;
        let (index, name) = text.split_once(',').ok_or_else(|| malformed(line, "expected 'index,name'"))?;
        let index: usize = index.trim().parse().map_err(|_| malformed(line, "invalid item index"))?;
        if index == 0 || index > n {
            return Err(IngestError::ItemOutOfRange { line, label: index, n });
        }
        alternatives[index - 1] = Some(name.trim().to_string());
    }
    let (line, summary) = lines.next().ok_or_else(|| malformed(line, "missing voter summary"))?;
    if summary.split(',').count() != 3 || summary.split(',').any(|t| t.trim().parse::<u64>().is_err()) {
        return Err(malformed(line, "expected 'voters,sum,unique'"));
    }
    let mut votes = Vec::new();
    for (line, text) in lines {
        let (count, ranking) =
            text.split_once(',').ok_or_else(|| malformed(line, "expected 'count,ranking'"))?;
        votes.push(Vote {
            multiplicity: parse_multiplicity(count, line)?,
            ranking: parse_ranking(ranking, n, line)?,
        });
    }
    Ok(Profile { n, votes, file_name: None, alternatives, ignored_metadata: Vec::new() })
}

/// Pairwise precedence matrix of a profile.
///
/// For each pair, only votes ranking both items count: a vote placing `u`
/// ahead scores 1 for `u`, a tie scores 0.5 each. `C(u,v)` is `u`'s
/// multiplicity-weighted score divided by the weighted number of such votes.
/// Pairs no vote compares get 0.5.
pub fn build_matrix(profile: &Profile) -> Result<PairOrderMatrix, IngestError> {
    if profile.votes.is_empty() {
        return Err(IngestError::NoVotes);
    }
    let n = profile.n;
    let mut score = vec![0.0f64; n * n];
    let mut seen = vec![0.0f64; n * n];
    for vote in &profile.votes {
        let m = vote.multiplicity as f64;
        let pos = vote.positions(n);
        for u in 0..n {
            let Some(pu) = pos[u] else { continue };
            for v in u + 1..n {
                let Some(pv) = pos[v] else { continue };
                seen[u * n + v] += m;
                match pu.cmp(&pv) {
                    std::cmp::Ordering::Less => score[u * n + v] += m,
                    std::cmp::Ordering::Greater => score[v * n + u] += m,
                    std::cmp::Ordering::Equal => {
                        score[u * n + v] += m / 2.0;
                        score[v * n + u] += m / 2.0;
                    }
                }
            }
        }
    }
    let mut c = SquareMatrix::filled(n, 0.5);
    for u in 0..n {
        for v in u + 1..n {
            let total = seen[u * n + v];
            if total > 0.0 {
                c.set(u, v, score[u * n + v] / total);
                c.set(v, u, score[v * n + u] / total);
            }
        }
    }
    Ok(PairOrderMatrix::new(c)?)
}

/// Reads a matrix CSV. Complementarity and diagonal errors up to
/// [`REPAIR_TOLERANCE`] are repaired; larger ones are rejected.
pub fn read_matrix(content: &str) -> Result<PairOrderMatrix, IngestError> {
    let mut lines =
        content.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (line, header) = lines.next().ok_or(IngestError::Empty)?;
    let n: usize = header.parse().map_err(|_| malformed(line, "expected the item count"))?;
    if n == 0 {
        return Err(malformed(line, "item count must be positive"));
    }
    let mut rows = Vec::with_capacity(n);
    for (line, text) in lines {
        if rows.len() == n {
            return Err(IngestError::DimensionMismatch { line, expected: n, found: n + 1 });
        }
        let row: Vec<f64> = text
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| malformed(line, format!("invalid number {:?}", t.trim())))
            })
            .collect::<Result<_, _>>()?;
        if row.len() != n {
            return Err(IngestError::DimensionMismatch { line, expected: n, found: row.len() });
        }
        rows.push(row);
    }
    if rows.len() != n {
        return Err(IngestError::DimensionMismatch { line: 0, expected: n, found: rows.len() });
    }
    let mut m = SquareMatrix::from_rows(&rows)?;
    for u in 0..n {
        for v in 0..n {
            let x = m.get(u, v);
            if !(0.0..=1.0).contains(&x) {
                return Err(IngestError::EntryOutOfRange { row: u + 1, col: v + 1, value: x });
            }
        }
        let d = m.get(u, u);
        if (d - 0.5).abs() > REPAIR_TOLERANCE {
            return Err(IngestError::Diagonal { item: u + 1, value: d });
        }
        m.set(u, u, 0.5);
        for v in u + 1..n {
            let (x, y) = (m.get(u, v), m.get(v, u));
            let gap = (x + y - 1.0).abs();
            if gap > REPAIR_TOLERANCE {
                return Err(IngestError::Complementarity { row: u + 1, col: v + 1, sum: x + y });
            }
            if gap > MATRIX_TOLERANCE {
                let fixed = (x + 1.0 - y) / 2.0;
                m.set(u, v, fixed);
                m.set(v, u, 1.0 - fixed);
            }
        }
    }
    check_pair_order(&m, MATRIX_TOLERANCE)?;
    Ok(PairOrderMatrix::new(m)?)
}

/// Writes the matrix CSV with shortest round-trip decimal entries.
pub fn write_matrix(c: &SquareMatrix) -> String {
    let mut out = format!("{}\n", c.n());
    for row in c.rows() {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BucketOrder;
    use crate::samples::{dataset_4_2, food_matrix};

    #[test]
    fn vote_lines() {
        let p = parse_preflib("# NUMBER ALTERNATIVES: 3\n3: 1,{2,3}\n").unwrap();
        assert_eq!(p.n, 3);
        assert_eq!(p.votes, vec![Vote { multiplicity: 3, ranking: vec![vec![0], vec![1, 2]] }]);

        let p = parse_preflib("# NUMBER ALTERNATIVES: 3\n2: 3,1,2\n").unwrap();
        assert_eq!(p.votes[0].multiplicity, 2);
        assert_eq!(p.votes[0].ranking, vec![vec![2], vec![0], vec![1]]);

        let p = parse_preflib("# NUMBER ALTERNATIVES: 3\n1: 2\n").unwrap();
        assert_eq!(p.votes[0].ranking, vec![vec![1]]);
        assert_eq!(p.votes[0].positions(3), vec![None, Some(0), None]);
    }

    #[test]
    fn metadata() {
        let text = "# FILE NAME: 00004-00000002.soc\n# TITLE: x\n# DATA TYPE: soc\n\
                    # NUMBER ALTERNATIVES: 2\n# ALTERNATIVE NAME 1: Alpha\n# ALTERNATIVE NAME 2: Beta\n\
                    5: 1,2\n";
        let p = parse_preflib(text).unwrap();
        assert_eq!(p.file_name.as_deref(), Some("00004-00000002.soc"));
        assert_eq!(p.alternatives, vec![Some("Alpha".into()), Some("Beta".into())]);
        assert_eq!(p.ignored_metadata, vec!["TITLE".to_string(), "DATA TYPE".to_string()]);
        assert_eq!(p.total_voters(), 5);

        let inferred = parse_preflib("1: 3,1\n2: 2\n").unwrap();
        assert_eq!(inferred.n, 3);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let head = "# NUMBER ALTERNATIVES: 3\n";
        let err = |body: &str| parse_preflib(&format!("{head}{body}")).unwrap_err();
        assert!(matches!(err("1: 1,2\n1 1,2\n"), IngestError::Malformed { line: 3, .. }));
        assert_eq!(err("0: 1,2\n"), IngestError::Multiplicity { line: 2, value: 0 });
        assert_eq!(err("-2: 1,2\n"), IngestError::Multiplicity { line: 2, value: -2 });
        assert_eq!(err("1: 1,4\n"), IngestError::ItemOutOfRange { line: 2, label: 4, n: 3 });
        assert_eq!(err("1: 1,{2,1}\n"), IngestError::DuplicateItem { line: 2, label: 1 });
        assert!(matches!(err("1: 1,{2,3\n"), IngestError::Malformed { .. }));
        assert!(matches!(err("1: 1,{}\n"), IngestError::Malformed { .. }));
        assert!(matches!(err("1: 1,2,\n"), IngestError::Malformed { .. }));
        assert!(matches!(err("1: 1,2}\n"), IngestError::Malformed { .. }));
        assert!(matches!(err("x: 1,2\n"), IngestError::Malformed { .. }));
        assert_eq!(parse_preflib("\n  \n"), Err(IngestError::Empty));
    }

    #[test]
    fn legacy_layout() {
        let text = "3\n1,A\n2,B\n3,C\n5,5,2\n3,1,{2,3}\n2,3,1,2\n";
        let p = parse_preflib(text).unwrap();
        assert_eq!(p.n, 3);
        assert_eq!(p.alternatives[2].as_deref(), Some("C"));
        assert_eq!(p.votes.len(), 2);
        assert_eq!(p.votes[0].ranking, vec![vec![0], vec![1, 2]]);
        assert_eq!(p.votes[1].multiplicity, 2);
        assert!(matches!(parse_preflib("3\n1,A\n2,B\n"), Err(IngestError::Malformed { .. })));
        assert!(matches!(
            parse_preflib("2\n1,A\n2,B\nnot a summary\n"),
            Err(IngestError::Malformed { line: 4, .. })
        ));
    }

    #[test]
    fn food_profile_matrix() {
        let text = "# NUMBER ALTERNATIVES: 4\n60: {1,2},{3,4}\n40: {3,4},{1,2}\n";
        let c = build_matrix(&parse_preflib(text).unwrap()).unwrap();
        assert_eq!(c, food_matrix());
    }

    #[test]
    fn single_strict_vote() {
        let p = parse_preflib("# NUMBER ALTERNATIVES: 3\n1: 1,2,3\n").unwrap();
        let c = build_matrix(&p).unwrap();
        assert_eq!(c.as_matrix(), BucketOrder::parse("1|2|3", 3).unwrap().to_matrix().as_matrix());
    }

    /// Independent tally: for each pair, walk the votes and count directly
    /// from the tie groups.
    fn tally(profile: &Profile, u: usize, v: usize) -> f64 {
        let mut won = 0.0;
        let mut total = 0.0;
        for vote in &profile.votes {
            let gu = vote.ranking.iter().position(|g| g.contains(&u));
            let gv = vote.ranking.iter().position(|g| g.contains(&v));
            if let (Some(a), Some(b)) = (gu, gv) {
                let m = vote.multiplicity as f64;
                total += m;
                won += if a < b {
                    m
                } else if a == b {
                    m * 0.5
                } else {
                    0.0
                };
            }
        }
        if total == 0.0 {
            0.5
        } else {
            won / total
        }
    }

    #[test]
    fn incomplete_votes_match_tally() {
        let text = "# NUMBER ALTERNATIVES: 3\n3: 1,2\n2: {2,3}\n1: 3,1,2\n4: 2\n";
        let p = parse_preflib(text).unwrap();
        let c = build_matrix(&p).unwrap();
        for u in 0..3 {
            for v in 0..3 {
                let expected = if u == v { 0.5 } else { tally(&p, u, v) };
                assert!((c.get(u, v) - expected).abs() < 1e-15, "({u},{v})");
            }
        }
        // 1 vs 2: 3 votes 1 ahead, 1 vote 1 ahead -> 4/4.
        assert_eq!(c.get(0, 1), 1.0);
        // 1 vs 3 only compared by the last strict vote: 3 ahead.
        assert_eq!(c.get(0, 2), 0.0);
        // 2 vs 3: tie x2, 3 ahead x1 -> (1 + 0) / 3 for 2.
        assert!((c.get(1, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unobserved_pairs_default_to_half() {
        let p = parse_preflib("# NUMBER ALTERNATIVES: 3\n2: 1,2\n").unwrap();
        let c = build_matrix(&p).unwrap();
        assert_eq!(c.get(0, 2), 0.5);
        assert_eq!(c.get(2, 1), 0.5);
        assert_eq!(build_matrix(&Profile::new(3, vec![])), Err(IngestError::NoVotes));
    }

    #[test]
    fn matrix_csv_roundtrip() {
        let c = dataset_4_2();
        let text = write_matrix(&c);
        assert_eq!(text, "3\n0.5,0.7046,0.4934\n0.2954,0.5,0.379\n0.5066,0.621,0.5\n");
        assert_eq!(read_matrix(&text).unwrap(), c);

        let food = write_matrix(&food_matrix());
        assert!(food.starts_with("4\n"));
        assert_eq!(food.lines().count(), 5);

        let uniform = read_matrix("2\n0.5,0.5\n0.5,0.5\n").unwrap();
        assert_eq!(uniform, PairOrderMatrix::uniform(2));
    }

    #[test]
    fn matrix_csv_errors() {
        assert!(matches!(
            read_matrix("2\n0.5,0.7\n0.4,0.5\n"),
            Err(IngestError::Complementarity { row: 1, col: 2, .. })
        ));
        assert!(matches!(read_matrix("2\n0.5,0.7\n0.3\n"), Err(IngestError::DimensionMismatch { .. })));
        assert!(matches!(read_matrix("2\n0.5,0.7\n"), Err(IngestError::DimensionMismatch { .. })));
        assert!(matches!(read_matrix("1\n0.5\n0.5\n"), Err(IngestError::DimensionMismatch { .. })));
        assert!(matches!(read_matrix("2\n0.5,1.2\n-0.2,0.5\n"), Err(IngestError::EntryOutOfRange { .. })));
        assert!(matches!(read_matrix("2\n0.6,0.5\n0.5,0.5\n"), Err(IngestError::Diagonal { .. })));
        assert!(matches!(read_matrix("2\n0.5,abc\n0.5,0.5\n"), Err(IngestError::Malformed { .. })));
        assert_eq!(read_matrix(""), Err(IngestError::Empty));
    }

    #[test]
    fn small_defects_are_symmetrized() {
        let c = read_matrix("2\n0.5000002,0.7\n0.3000002,0.5\n").unwrap();
        assert_eq!(c.get(0, 0), 0.5);
        assert!((c.get(0, 1) - 0.6999999).abs() < 1e-12);
        assert_eq!(c.get(0, 1) + c.get(1, 0), 1.0);
    }
}
