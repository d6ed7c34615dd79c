//! Acceptance criteria for the solver library.
//!
//! Every criterion is one test that writes a single `PASS`/`FAIL`/`SKIP`
//! line straight to stdout (bypassing the test harness capture), so the
//! verdicts appear in a plain `cargo test` log. Tolerances and time limits
//! are pinned as constants below.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use osbop::exact::{fubini, space_table, ExactSearch};
use osbop::samples::{dataset_4_2, food_matrix};
use osbop::{
    build_matrix, distance, enumerate_bucket_orders, exact_obop, exact_osbop_equal, fitness, from_matrix,
    mutate_order, parse_preflib, round_to_grid, sls_osbop, utopia, BucketOrder, MutationKind,
    PairOrderMatrix, SlsConfig, SquareMatrix, WeightedEnsemble,
};

const VALUE_TOL: f64 = 1e-3;
const UTOPIA_TIME: Duration = Duration::from_millis(1);
const EXACT_OBOP_TIME: Duration = Duration::from_millis(10);
const EXACT_OSBOP_TIME: Duration = Duration::from_secs(1);
const SLS_TIME: Duration = Duration::from_secs(30);
const SLS_TARGET: f64 = 0.1804 + VALUE_TOL;
const SLS_SEEDS: u64 = 20;
const PROPERTY_MATRICES: usize = 200;

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[acceptance] criterion {id} {verdict}: {name} ({detail})");
    let _ = out.flush();
}

fn report_skip(id: u32, name: &str, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[acceptance] criterion {id} SKIP: {name} ({detail})");
    let _ = out.flush();
}

fn order(text: &str, n: usize) -> BucketOrder {
    BucketOrder::parse(text, n).unwrap()
}

fn text_sets(solutions: &[Vec<BucketOrder>]) -> BTreeSet<BTreeSet<String>> {
    solutions.iter().map(|s| s.iter().map(|o| o.to_string()).collect()).collect()
}

fn literal_sets(sets: &[&[&str]]) -> BTreeSet<BTreeSet<String>> {
    sets.iter().map(|s| s.iter().map(|t| t.to_string()).collect()).collect()
}

/// Optimal equal-weight sets printed for dataset 4-2, keyed by `b`.
fn published_sets(b: usize) -> Vec<&'static [&'static str]> {
    match b {
        1 => vec![&["1,2,3"]],
        2 => vec![&["3|1,2", "1|2|3"]],
        3 => vec![&["1,2,3", "1|2,3", "3|1,2"], &["1|2|3", "3|2|1", "1,3|2"], &["1|3|2", "2|3|1", "1,3|2"]],
        4 => vec![
            &["1|2|3", "1|3|2", "3|1|2", "2,3|1"],
            &["1|2|3", "1|2,3", "3|1|2", "3|2|1"],
            &["1|2|3", "1,2,3", "1,3|2", "3|1,2"],
        ],
        _ => unreachable!(),
    }
}

const PUBLISHED_OPTIMA: [f64; 4] = [0.6644, 0.3460, 0.1804, 0.1120];

#[test]
fn criterion_1_utopia_values() {
    let c = dataset_4_2();
    let _ = utopia(&c, 1);
    let start = Instant::now();
    let values: Vec<f64> = (1..=4).map(|b| utopia(&c, b).unwrap().value).collect();
    let elapsed = start.elapsed();
    let values_ok = values.iter().zip(PUBLISHED_OPTIMA).all(|(v, e)| (v - e).abs() <= VALUE_TOL);
    let time_ok = elapsed < UTOPIA_TIME;
    report(
        1,
        "utopia values of 4-2 for b=1..4",
        values_ok && time_ok,
        &format!("got {values:.4?}, tol {VALUE_TOL}, {elapsed:?} < {UTOPIA_TIME:?}"),
    );
    assert!(values_ok, "utopia values {values:?}");
    assert!(time_ok, "took {elapsed:?}");
}

#[test]
fn criterion_2_exact_obop() {
    let c = dataset_4_2();
    let _ = exact_obop(&c);
    let start = Instant::now();
    let r = exact_obop(&c).unwrap();
    let elapsed = start.elapsed();
    let texts = r.solution_texts();
    let ok_value = (r.optimum - 0.6644).abs() <= VALUE_TOL;
    let ok_solution = texts == vec![vec!["1,2,3".to_string()]];
    let ok_time = elapsed < EXACT_OBOP_TIME;
    report(
        2,
        "exact OBOP on 4-2",
        ok_value && ok_solution && ok_time && r.explored == 13,
        &format!("optimum {:.4}, solutions {texts:?}, {} candidates, {elapsed:?}", r.optimum, r.explored),
    );
    assert!(ok_value && ok_solution && ok_time && r.explored == 13);
}

/// Checks the exhaustive equal-weight optima against the published table,
/// value and solution sets both. The sets must match exactly.
#[test]
fn criterion_3_exact_osbop_equal() {
    let c = dataset_4_2();
    let mut failures = Vec::new();
    let mut details = Vec::new();
    let start = Instant::now();
    for b in 2..=4 {
        let r = exact_osbop_equal(&c, b).unwrap();
        let got = text_sets(&r.solutions);
        let expected = literal_sets(&published_sets(b));
        if (r.optimum - PUBLISHED_OPTIMA[b - 1]).abs() > VALUE_TOL {
            failures.push(format!("b={b} optimum {:.4}", r.optimum));
        }
        if got != expected {
            let extra: Vec<_> = got.difference(&expected).collect();
            let missing: Vec<_> = expected.difference(&got).collect();
            failures.push(format!(
                "b={b} has {} tied sets vs {} published; extra {extra:?}; missing {missing:?}",
                got.len(),
                expected.len()
            ));
        }
        details.push(format!("b={b}: {:.4} with {} sets", r.optimum, got.len()));
    }
    let elapsed = start.elapsed();
    if elapsed >= EXACT_OSBOP_TIME {
        failures.push(format!("took {elapsed:?}"));
    }
    report(
        3,
        "exact OSBOP_e on 4-2, values and exact solution sets",
        failures.is_empty(),
        &format!("{}; {elapsed:?}; {}", details.join(", "), failures.join(" | ")),
    );
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn criterion_4_utopian_decomposition() {
    let c = dataset_4_2();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for b in 2..=4 {
        let u = utopia(&c, b).unwrap();
        for set in published_sets(b) {
            let e = WeightedEnsemble::equal(set.iter().map(|t| order(t, 3)).collect()).unwrap();
            worst = worst.max(e.aggregate().max_abs_diff(&u.matrix).unwrap());
            checked += 1;
        }
    }
    let ok = worst <= VALUE_TOL;
    report(
        4,
        "published optimal sets aggregate to U_C^b",
        ok,
        &format!("{checked} sets, max entry gap {worst:.2e}, tol {VALUE_TOL}"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_food_example() {
    let profile = parse_preflib(include_str!("../../core/data/food.toc")).unwrap();
    let built = build_matrix(&profile).unwrap();
    let printed = food_matrix();
    let matrix_ok = built.as_matrix() == printed.as_matrix();

    let r = exact_obop(&printed).unwrap();
    let obop_ok = (r.optimum - 0.8).abs() <= 1e-12 && r.solution_texts() == vec![vec!["1,2,3,4".to_string()]];

    let e = WeightedEnsemble::new(vec![order("1,2|3,4", 4), order("3,4|1,2", 4)], vec![0.6, 0.4]).unwrap();
    let f = fitness(&e, &printed).unwrap();
    let fit_ok = f == 0.0;

    report(
        5,
        "food profile matrix, OBOP optimum, exact two-community fit",
        matrix_ok && obop_ok && fit_ok,
        &format!("matrix exact {matrix_ok}, optimum {} at {:?}, fitness {f}", r.optimum, r.solution_texts()),
    );
    assert!(matrix_ok && obop_ok && fit_ok);
}

#[test]
fn criterion_6_sls_dataset_4_2() {
    let c = dataset_4_2();
    let start = Instant::now();
    let outcomes: Vec<_> = (1..=SLS_SEEDS)
        .into_par_iter()
        .map(|seed| {
            let config = SlsConfig { b: 2, outer_iters: 10_000, tune_iters: 100, seed, ..Default::default() };
            sls_osbop(&c, &config).unwrap()
        })
        .collect();
    let elapsed = start.elapsed();
    let best = outcomes.iter().map(|o| o.fitness).fold(f64::INFINITY, f64::min);
    let monotone = outcomes.iter().all(|o| o.trace.best.windows(2).all(|w| w[1] <= w[0]));
    let consistent = outcomes.iter().all(|o| (fitness(&o.ensemble, &c).unwrap() - o.fitness).abs() <= 1e-9);
    let ok = best <= SLS_TARGET && monotone && consistent && elapsed < SLS_TIME;
    report(
        6,
        "SLS-OSBOP b=2 unequal weights, 20 seeds",
        ok,
        &format!(
            "best {best:.4} <= {SLS_TARGET:.4}, traces non-increasing {monotone}, {elapsed:.2?} < {SLS_TIME:?}"
        ),
    );
    assert!(ok);
}

fn random_pair_order_matrix(n: usize, rng: &mut ChaCha8Rng) -> PairOrderMatrix {
    let mut m = SquareMatrix::filled(n, 0.5);
    for u in 0..n {
        for v in u + 1..n {
            // Mix in exact grid values so bin boundaries get exercised too.
            let x: f64 = if rng.gen_bool(0.2) { rng.gen_range(0..=24) as f64 / 24.0 } else { rng.gen() };
            m.set(u, v, x);
            m.set(v, u, 1.0 - x);
        }
    }
    PairOrderMatrix::new(m).unwrap()
}

#[test]
fn criterion_7_property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures: Vec<String> = Vec::new();
    let mut obop_checks = 0;
    let mut osbop_checks = 0;

    for i in 0..PROPERTY_MATRICES {
        let n = rng.gen_range(1..=4);
        let c = random_pair_order_matrix(n, &mut rng);

        let r = exact_obop(&c).unwrap();
        let u1 = utopia(&c, 1).unwrap().value;
        obop_checks += 1;
        if r.optimum < u1 - 1e-12 {
            failures.push(format!("matrix {i}: OBOP {} below u_C {u1}", r.optimum));
        }

        if n <= 3 {
            for b in 2..=3 {
                if fubini(n) < BigUint::from(b) {
                    continue;
                }
                let r = exact_osbop_equal(&c, b).unwrap();
                let ub = utopia(&c, b).unwrap().value;
                osbop_checks += 1;
                if r.optimum < ub - 1e-12 {
                    failures.push(format!("matrix {i}: OSBOP_e b={b} {} below {ub}", r.optimum));
                }
            }
        }

        for b in 1..=6 {
            for &x in c.as_slice() {
                let y = round_to_grid(x, b).unwrap();
                if (y - x).abs() > 1.0 / (4.0 * b as f64) + 1e-15 {
                    failures.push(format!("round_to_grid({x}, {b}) = {y}"));
                }
            }
        }
    }

    for n in 1..=6 {
        let count = enumerate_bucket_orders(n).count();
        if BigUint::from(count) != fubini(n) {
            failures.push(format!("enumerate({n}) yields {count}"));
        }
        for x in enumerate_bucket_orders(n) {
            if from_matrix(x.to_matrix().as_matrix()).as_ref() != Ok(&x) {
                failures.push(format!("from_matrix(to_matrix({x})) differs"));
            }
        }
    }

    let mut mutations = 0;
    for n in 1..=7 {
        for _ in 0..300 {
            let x = osbop::initial_solution(n, 1, &mut rng).orders()[0].clone();
            for kind in MutationKind::ALL {
                if !kind.is_applicable(&x) {
                    continue;
                }
                let y = mutate_order(&x, kind, &mut rng).unwrap();
                mutations += 1;
                let rebuilt = BucketOrder::new(n, y.buckets().to_vec());
                if rebuilt.as_ref() != Ok(&y) || y == x {
                    failures.push(format!("{kind} on {x} gave {y}"));
                }
            }
        }
    }

    let c = dataset_4_2();
    for b in 1..=3 {
        for equal_weights in [false, true] {
            let config = SlsConfig {
                b,
                equal_weights,
                outer_iters: 300,
                tune_iters: 20,
                seed: 5,
                ..Default::default()
            };
            let a = sls_osbop(&c, &config).unwrap();
            let again = sls_osbop(&c, &config).unwrap();
            if a != again {
                failures.push(format!("sls_osbop not deterministic for b={b} eq={equal_weights}"));
            }
        }
    }

    report(
        7,
        "property suite",
        failures.is_empty(),
        &format!(
            "{PROPERTY_MATRICES} matrices, {obop_checks} OBOP and {osbop_checks} OSBOP_e bound checks, \
             {mutations} mutations, {} violations",
            failures.len()
        ),
    );
    assert!(failures.is_empty(), "{failures:#?}");
}

/// Counts ordered partitions by scanning every block assignment and
/// keeping the surjective ones.
fn brute_force_fubini(n: usize) -> u64 {
    let mut total = 0;
    for k in 1..=n {
        let mut assignment = vec![0usize; n];
        loop {
            let mut used = vec![false; k];
            for &a in &assignment {
                used[a] = true;
            }
            if used.iter().all(|&u| u) {
                total += 1;
            }
            let mut i = 0;
            while i < n {
                assignment[i] += 1;
                if assignment[i] < k {
                    break;
                }
                assignment[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    total
}

#[test]
fn criterion_8_space_table() {
    const FUBINI: [u64; 11] = [1, 1, 3, 13, 75, 541, 4683, 47293, 545835, 7087261, 102247563];
    let mut failures = Vec::new();
    let rows = space_table(2..=10, 1..=4).unwrap();
    if rows.len() != 36 {
        failures.push(format!("{} rows", rows.len()));
    }
    for row in &rows {
        let f = BigUint::from(FUBINI[row.n]);
        // C(F, b) by the falling-factorial product, independent of the library.
        let mut expected = BigUint::from(1u32);
        for j in 0..row.b as u64 {
            expected *= &f - BigUint::from(j);
        }
        for j in 1..=row.b as u64 {
            expected /= BigUint::from(j);
        }
        if row.count != expected {
            failures.push(format!("n={} b={} count {}", row.n, row.b, row.count));
        }
        if row.b == 1 && row.count != fubini(row.n) {
            failures.push(format!("b=1 column differs from fubini({})", row.n));
        }
    }
    for (n, &expected) in FUBINI.iter().enumerate().take(6).skip(1) {
        if brute_force_fubini(n) != expected {
            failures.push(format!("brute force F({n})"));
        }
    }
    let last = rows.iter().find(|r| r.n == 10 && r.b == 4).unwrap();
    let exact_tail = last.count.to_string() == "4554079372163381355979266301290";
    if !exact_tail {
        failures.push(format!("C(F(10),4) = {}", last.count));
    }
    report(
        8,
        "solution-space table n=2..10, b=1..4",
        failures.is_empty(),
        &format!("{} rows, C(F(10),4) exact {exact_tail}, {:?}", rows.len(), failures),
    );
    assert!(failures.is_empty(), "{failures:#?}");
}

/// Looks for PrefLib source files in `OSBOP_PREFLIB_DIR` or in the bundled
/// data directory. PrefLib names files `ED-<dataset>-<instance>.<ext>`.
fn find_preflib(dataset: u32, instance: u32) -> Option<PathBuf> {
    let needle = format!("{dataset:05}-{instance:08}");
    let mut dirs: Vec<PathBuf> = Vec::new();
    if let Ok(dir) = std::env::var("OSBOP_PREFLIB_DIR") {
        dirs.push(dir.into());
    }
    dirs.push(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/preflib"));
    dirs.into_iter().find_map(|dir| {
        std::fs::read_dir(dir)
            .ok()?
            .flatten()
            .map(|e| e.path())
            .find(|p| p.file_name().and_then(|s| s.to_str()).is_some_and(|s| s.contains(&needle)))
    })
}

#[test]
fn criterion_9_preflib_datasets() {
    let cases = [((2, 1), 1.4636, 0.9816), ((2, 2), 1.4303, 1.1754), ((4, 1), 0.5783, 0.4398)];
    let mut missing = Vec::new();
    let mut failures = Vec::new();
    let mut details = Vec::new();
    for ((dataset, instance), obop_value, osbop_value) in cases {
        let Some(path) = find_preflib(dataset, instance) else {
            missing.push(format!("{dataset}-{instance}"));
            continue;
        };
        let profile = parse_preflib(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let c = build_matrix(&profile).unwrap();
        let search = ExactSearch::default();
        let obop = search.obop(&c).unwrap().optimum;
        let osbop = search.osbop_equal(&c, 2).unwrap().optimum;
        details.push(format!("{dataset}-{instance}: {obop:.4}/{osbop:.4}"));
        if (obop - obop_value).abs() > VALUE_TOL || (osbop - osbop_value).abs() > VALUE_TOL {
            failures.push(format!(
                "{dataset}-{instance}: OBOP {obop:.4} vs {obop_value}, OSBOP_e^2 {osbop:.4} vs {osbop_value}"
            ));
        }
    }
    if !missing.is_empty() {
        report_skip(
            9,
            "PrefLib datasets 2-1, 2-2, 4-1",
            &format!("source files not available for {missing:?}; set OSBOP_PREFLIB_DIR"),
        );
        return;
    }
    report(
        9,
        "PrefLib datasets 2-1, 2-2, 4-1",
        failures.is_empty(),
        &format!("{}; tol {VALUE_TOL}", details.join(", ")),
    );
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn distance_sanity_for_reported_values() {
    // The published optima are consistent with the matrix as printed.
    let c = dataset_4_2();
    let all_tied = order("1,2,3", 3).to_matrix();
    assert!((distance(all_tied.as_matrix(), &c).unwrap() - 0.6644).abs() < 1e-12);
}
