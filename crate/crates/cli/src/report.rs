//! Report types shared by the commands, and their renderers.
//!
//! JSON and CSV both print floats with the shortest representation that
//! round-trips, so the two formats carry identical values. Text output
//! rounds to four decimals.

use std::fmt::Write as _;

use osbop::{PairOrderMatrix, SquareMatrix, WeightedEnsemble};
use serde::Serialize;

use crate::input::InputInfo;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Member {
    pub order: String,
    pub weight: f64,
}

/// One solution: an ensemble, its fitness against the input and `w1`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Solution {
    /// Seed for heuristic runs, position in the tie list for exact runs.
    pub id: u64,
    pub fitness: f64,
    pub w1: f64,
    pub ensemble: Vec<Member>,
    /// Orders that ended with weight 0.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub degenerate_weights: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted_moves: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<u64>,
}

impl Solution {
    /// Canonicalizes the ensemble and re-evaluates its fitness, so the
    /// report always agrees with what a reader would recompute.
    pub fn new(id: u64, ensemble: &WeightedEnsemble, c: &PairOrderMatrix) -> Self {
        let canonical = ensemble.canonicalize();
        let fitness = osbop::fitness(&canonical, c).expect("ensemble and matrix sizes agree");
        let members: Vec<Member> =
            canonical.iter().map(|(o, w)| Member { order: o.to_string(), weight: w }).collect();
        let degenerate_weights =
            members.iter().filter(|m| m.weight == 0.0).map(|m| m.order.clone()).collect();
        Self {
            id,
            fitness,
            w1: members[0].weight,
            ensemble: members,
            degenerate_weights,
            accepted_moves: None,
            evaluations: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct UtopiaEntry {
    pub b: usize,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Whether the utopian matrix is itself a bucket matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bucket_matrix: Option<bool>,
    /// Whether `b` distinct orders average exactly to the utopian matrix;
    /// absent when the check was over budget.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasible: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ConfigEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tune_iters: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RunReport {
    pub command: &'static str,
    pub input: InputInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigEcho>,
    pub utopia: Vec<UtopiaEntry>,
    /// Exhaustive runs only: candidates evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explored: Option<u64>,
    pub results: Vec<Solution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best: Option<Solution>,
    pub elapsed_seconds: f64,
}

pub fn matrix_rows(m: &SquareMatrix) -> Vec<Vec<f64>> {
    m.rows().map(<[f64]>::to_vec).collect()
}

fn ensemble_text(members: &[Member]) -> String {
    members.iter().map(|m| format!("{:.4}*{}", m.weight, m.order)).collect::<Vec<_>>().join(" + ")
}

impl RunReport {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Text => self.to_text(),
        }
    }

    /// Long format: one row per ensemble member, or per utopia entry when
    /// there are no solutions.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.results.is_empty() {
            out.push_str("b,value,bucket_matrix,feasible,decomposition\n");
            for u in &self.utopia {
                let opt = |x: Option<bool>| x.map(|v| v.to_string()).unwrap_or_default();
                let decomposition = u.decomposition.as_ref().map(|d| d.join(" + ")).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},\"{decomposition}\"",
                    u.b,
                    u.value,
                    opt(u.bucket_matrix),
                    opt(u.feasible)
                );
            }
            return out;
        }
        out.push_str("id,fitness,w1,member,order,weight\n");
        for s in &self.results {
            for (k, m) in s.ensemble.iter().enumerate() {
                let _ =
                    writeln!(out, "{},{},{},{},\"{}\",{}", s.id, s.fitness, s.w1, k + 1, m.order, m.weight);
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "input: {} {} (n = {}", self.input.kind, self.input.source, self.input.n);
        if let Some(v) = self.input.voters {
            let _ = write!(out, ", {v} voters");
        }
        out.push_str(")\n");
        if let Some(variant) = self.variant {
            let _ = write!(out, "problem: {variant}");
            if let Some(b) = self.b {
                let _ = write!(out, ", b = {b}");
            }
            out.push('\n');
        }
        if let Some(c) = &self.config {
            let mut parts = Vec::new();
            if let Some(t1) = c.iters {
                parts.push(format!("t1 = {t1}"));
            }
            if let Some(t2) = c.tune_iters {
                parts.push(format!("t2 = {t2}"));
            }
            if !c.seeds.is_empty() {
                parts.push(format!("seeds = {}", seed_summary(&c.seeds)));
            }
            if let Some(budget) = c.budget {
                parts.push(format!("budget = {budget}"));
            }
            if !parts.is_empty() {
                let _ = writeln!(out, "config: {}", parts.join(", "));
            }
        }
        for u in &self.utopia {
            let _ = write!(out, "utopia b = {}: {:.4}", u.b, u.value);
            if let Some(flag) = u.bucket_matrix {
                let _ = write!(out, ", bucket matrix: {}", if flag { "yes" } else { "no" });
            }
            match (&u.feasible, &u.decomposition) {
                (Some(true), Some(d)) => {
                    let _ = write!(out, ", decomposes as (1/{})*({})", u.b, d.join(" + "));
                }
                (Some(false), _) => out.push_str(", no equal-weight decomposition"),
                _ => {}
            }
            out.push('\n');
            if let Some(m) = &u.matrix {
                for row in m {
                    let cells: Vec<String> = row.iter().map(|x| format!("{x:.4}")).collect();
                    let _ = writeln!(out, "  {}", cells.join("  "));
                }
            }
        }
        if let Some(explored) = self.explored {
            let _ = writeln!(out, "explored: {explored} candidates");
        }
        match self.command {
            "exact" => {
                if let Some(first) = self.results.first() {
                    let _ = writeln!(
                        out,
                        "optimum: {:.4} ({} tied solution{})",
                        first.fitness,
                        self.results.len(),
                        if self.results.len() == 1 { "" } else { "s" }
                    );
                }
                for s in &self.results {
                    let _ = writeln!(out, "  {}", ensemble_text(&s.ensemble));
                }
            }
            _ if !self.results.is_empty() => {
                let _ = writeln!(out, "{:>6}  {:>8}  {:>6}  ensemble", "seed", "fitness", "w1");
                for s in &self.results {
                    let _ = writeln!(
                        out,
                        "{:>6}  {:>8.4}  {:>6.4}  {}",
                        s.id,
                        s.fitness,
                        s.w1,
                        ensemble_text(&s.ensemble)
                    );
                }
            }
            _ => {}
        }
        if let Some(best) = &self.best {
            let _ = writeln!(out, "best: seed {}, fitness {:.4}, w1 {:.4}", best.id, best.fitness, best.w1);
            for m in &best.ensemble {
                let _ = writeln!(out, "  {:.4}  {}", m.weight, m.order);
            }
            if !best.degenerate_weights.is_empty() {
                let _ = writeln!(out, "  zero-weight members: {}", best.degenerate_weights.join(", "));
            }
        }
        let _ = writeln!(out, "elapsed: {:.3}s", self.elapsed_seconds);
        out
    }
}

fn seed_summary(seeds: &[u64]) -> String {
    let contiguous = seeds.windows(2).all(|w| w[1] == w[0] + 1);
    match seeds {
        [one] => one.to_string(),
        [first, .., last] if contiguous => format!("{first}..{last}"),
        _ => seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    }
}
