use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use osbop::exact::{ExactSearch, DEFAULT_BUDGET};
use osbop::{sls_osbop, space_size, utopia, ExactError, PairOrderMatrix, SlsConfig, WeightedEnsemble};
use rayon::prelude::*;

use crate::error::CliError;
use crate::input::InputArgs;
use crate::range::IntRange;
use crate::report::{matrix_rows, ConfigEcho, OutputFormat, RunReport, Solution, UtopiaEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// One bucket order.
    Obop,
    /// `b` distinct bucket orders with weights fixed at `1/b`.
    OsbopE,
    /// `b` bucket orders with tuned weights.
    Osbop,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Obop => "obop",
            Variant::OsbopE => "osbop-e",
            Variant::Osbop => "osbop",
        }
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "osbop")]
    pub variant: Variant,
    /// Number of bucket orders; defaults to 1 for obop and 2 otherwise.
    #[arg(long)]
    pub b: Option<usize>,
    /// Outer iterations (t1).
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    /// Weight-tuning moves per candidate (t2).
    #[arg(long, default_value_t = 100)]
    pub tune_iters: usize,
    /// Seed or inclusive seed range such as `1..20`; repeatable.
    #[arg(long = "seed", value_name = "SEED", default_value = "1")]
    pub seeds: Vec<IntRange>,
    /// Stop a run after this many fitness evaluations.
    #[arg(long)]
    pub max_evaluations: Option<u64>,
    /// Write the per-iteration best fitness of every run to this CSV file.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub out: OutputFormat,
}

#[derive(Args, Debug)]
pub struct ExactArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of equally weighted bucket orders.
    #[arg(long, default_value_t = 1)]
    pub b: usize,
    /// Largest number of candidate sets to enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, value_enum, default_value = "text")]
    pub out: OutputFormat,
}

#[derive(Args, Debug)]
pub struct UtopiaArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Grid resolution; defaults to 1.
    #[arg(long, conflicts_with = "b_range")]
    pub b: Option<usize>,
    /// Inclusive range of resolutions, such as `1..4`.
    #[arg(long)]
    pub b_range: Option<IntRange>,
    /// Candidate budget for the equal-weight decomposition check.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, value_enum, default_value = "text")]
    pub out: OutputFormat,
}

#[derive(Args, Debug)]
pub struct SpaceArgs {
    #[arg(long, default_value = "2..10")]
    pub n_range: IntRange,
    /// Defaults to `1..4`, or to `1` with `--strict`.
    #[arg(long)]
    pub b_range: Option<IntRange>,
    /// Count rankings without ties (permutations) instead of bucket orders.
    #[arg(long)]
    pub strict: bool,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn exact_error(e: ExactError) -> CliError {
    match e {
        ExactError::BudgetExceeded { candidates, budget } => CliError::Budget(format!(
            "exhaustive search needs {candidates} candidates but the budget is {budget}; \
             raise --budget or use `osbop solve --variant osbop-e` for a heuristic answer"
        )),
        other => usage(other.to_string()),
    }
}

fn utopia_entry(c: &PairOrderMatrix, b: usize, with_matrix: bool) -> UtopiaEntry {
    let report = utopia(c, b).expect("pair order matrix entries lie in [0,1]");
    UtopiaEntry {
        b,
        value: report.value,
        matrix: with_matrix.then(|| matrix_rows(&report.matrix)),
        bucket_matrix: with_matrix.then(|| report.is_bucket_matrix()),
        feasible: None,
        decomposition: None,
    }
}

pub fn solve(args: &SolveArgs) -> Result<RunReport, CliError> {
    let b = match (args.variant, args.b) {
        (Variant::Obop, None | Some(1)) => 1,
        (Variant::Obop, Some(b)) => {
            return Err(usage(format!("--variant obop solves for one order, got --b {b}")))
        }
        (_, Some(0)) => return Err(usage("--b must be at least 1")),
        (_, b) => b.unwrap_or(2),
    };
    let mut seeds: Vec<u64> = Vec::new();
    for seed in args.seeds.iter().flat_map(|r| r.iter()) {
        if !seeds.contains(&seed) {
            seeds.push(seed);
        }
    }
    let input = args.input.load()?;
    let c = &input.matrix;
    let start = Instant::now();

    let configs: Vec<SlsConfig> = seeds
        .iter()
        .map(|&seed| SlsConfig {
            b,
            equal_weights: args.variant == Variant::OsbopE,
            outer_iters: args.iters,
            tune_iters: args.tune_iters,
            seed,
            max_evaluations: args.max_evaluations,
        })
        .collect();
    let outcomes = configs
        .par_iter()
        .map(|config| sls_osbop(c, config))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(e.to_string()))?;

    if let Some(path) = &args.trace {
        let mut csv = String::from("seed,iteration,best_fitness\n");
        for (seed, outcome) in seeds.iter().zip(&outcomes) {
            for (i, f) in outcome.trace.best.iter().enumerate() {
                csv.push_str(&format!("{seed},{i},{f}\n"));
            }
        }
        fs::write(path, csv).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }

    let results: Vec<Solution> = seeds
        .iter()
        .zip(&outcomes)
        .map(|(&seed, outcome)| Solution {
            accepted_moves: Some(outcome.trace.accepted),
            evaluations: Some(outcome.trace.evaluations),
            ..Solution::new(seed, &outcome.ensemble, c)
        })
        .collect();
    let best = results.iter().fold(None::<&Solution>, |best, s| match best {
        Some(x) if x.fitness <= s.fitness => Some(x),
        _ => Some(s),
    });

    let mut utopia_entries = vec![utopia_entry(c, 1, false)];
    if b > 1 {
        utopia_entries.push(utopia_entry(c, b, false));
    }
    Ok(RunReport {
        command: "solve",
        variant: Some(args.variant.name()),
        b: Some(b),
        config: Some(ConfigEcho {
            iters: Some(args.iters),
            tune_iters: (args.variant == Variant::Osbop).then_some(args.tune_iters),
            seeds,
            budget: None,
            max_evaluations: args.max_evaluations,
        }),
        utopia: utopia_entries,
        explored: None,
        best: best.cloned(),
        results,
        input: input.info,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn exact(args: &ExactArgs) -> Result<RunReport, CliError> {
    if args.b == 0 {
        return Err(usage("--b must be at least 1"));
    }
    let input = args.input.load()?;
    let c = &input.matrix;
    let start = Instant::now();
    let result = ExactSearch::with_budget(args.budget).osbop_equal(c, args.b).map_err(exact_error)?;
    let results = result
        .solutions
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let e = WeightedEnsemble::equal(set.clone()).expect("tied sets are non-empty");
            Solution::new(i as u64 + 1, &e, c)
        })
        .collect();
    let mut utopia_entries = vec![utopia_entry(c, 1, false)];
    if args.b > 1 {
        utopia_entries.push(utopia_entry(c, args.b, false));
    }
    Ok(RunReport {
        command: "exact",
        variant: Some(if args.b == 1 { Variant::Obop.name() } else { Variant::OsbopE.name() }),
        b: Some(args.b),
        config: Some(ConfigEcho {
            iters: None,
            tune_iters: None,
            seeds: Vec::new(),
            budget: Some(args.budget),
            max_evaluations: None,
        }),
        utopia: utopia_entries,
        explored: Some(result.explored),
        results,
        best: None,
        input: input.info,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn utopia_cmd(args: &UtopiaArgs) -> Result<RunReport, CliError> {
    let bs: Vec<usize> = match (args.b, args.b_range) {
        (Some(b), _) => vec![b],
        (None, Some(r)) => r.usizes().collect(),
        (None, None) => vec![1],
    };
    if bs.contains(&0) {
        return Err(usage("grid resolution b must be at least 1"));
    }
    let input = args.input.load()?;
    let c = &input.matrix;
    let start = Instant::now();
    let search = ExactSearch::with_budget(args.budget);
    let entries = bs
        .iter()
        .map(|&b| {
            let mut entry = utopia_entry(c, b, true);
            let target = utopia(c, b).expect("entries lie in [0,1]").matrix;
            match search.decompose_equal(&target, b) {
                Ok(found) => {
                    entry.feasible = Some(found.is_some());
                    entry.decomposition = found.map(|set| set.iter().map(ToString::to_string).collect());
                }
                Err(ExactError::TooFewOrders { .. }) => entry.feasible = Some(false),
                Err(e) => log::warn!("skipping decomposition check for b = {b}: {e}"),
            }
            entry
        })
        .collect();
    Ok(RunReport {
        command: "utopia",
        variant: None,
        b: None,
        config: None,
        utopia: entries,
        explored: None,
        results: Vec::new(),
        best: None,
        input: input.info,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn space(args: &SpaceArgs) -> Result<String, CliError> {
    let b_range = args.b_range.unwrap_or(if args.strict {
        IntRange { lo: 1, hi: 1 }
    } else {
        IntRange { lo: 1, hi: 4 }
    });
    if args.n_range.lo == 0 || b_range.lo == 0 {
        return Err(usage("n and b start at 1"));
    }
    let mut out = String::from("n,b,count\n");
    for n in args.n_range.usizes() {
        for b in b_range.usizes() {
            let size = space_size(n, b, args.strict).map_err(|e| usage(e.to_string()))?;
            out.push_str(&format!("{n},{b},{}\n", size.count));
        }
    }
    Ok(out)
}
