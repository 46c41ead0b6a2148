//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! on stderr (visible without `--nocapture`).

use std::io::Write;
use std::process::Command;

use permtest::exact::{class_representatives, full_group_test};
use permtest::group::enumerate;
use permtest::random::{
    coset_scheme_test, draw_transforms, estimate_pvalue, pvalue_with_replacement,
    pvalue_without_replacement, random_test, Population,
};
use permtest::simulation::{run, standard_error, SimulationConfig, SimulationReport};
use permtest::{GroupElement, GroupSpec, RandomDraw, SamplingMode, SamplingPlan, StatisticSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde_json::json;

const N: u64 = 100_000;

fn verdict(id: u32, pass: bool, detail: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} {status}: {detail}");
    assert!(pass, "criterion {id} failed: {detail}");
}

fn simulate(config: serde_json::Value) -> SimulationReport {
    let config: SimulationConfig = config.to_string().parse().expect("valid config");
    run(&config, 0).expect("simulation runs")
}

fn three_se(p: f64, n: u64) -> f64 {
    3.0 * standard_error(p, n)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

#[test]
fn criterion_01_full_group_exact_on_the_grid() {
    let report = simulate(json!({
        "experiment": "type1",
        "null_model": {"kind": "normal", "dimension": 6},
        "test": {"procedure": "full-group", "group": "two-sample:3", "statistic": "diff-sum:n=3", "alpha": 0.25},
        "replications": N, "master_seed": 101
    }));
    let band = three_se(0.25, N);
    let pass = (report.rejection_rate - 0.25).abs() <= band;
    verdict(
        1,
        pass,
        &format!(
            "rate {:.5}, target 0.25 +/- {band:.4}",
            report.rejection_rate
        ),
    );
}

#[test]
fn criterion_02_hoeffding_exact_with_ties() {
    let report = simulate(json!({
        "experiment": "type1",
        "null_model": {"kind": "binary", "dimension": 8, "p": 0.5},
        "test": {"procedure": "hoeffding", "group": "two-sample:4", "statistic": "diff-sum:n=4", "alpha": 0.05},
        "replications": N, "master_seed": 102
    }));
    let pass = (report.rejection_rate - 0.05).abs() <= 0.0021;
    verdict(
        2,
        pass,
        &format!("rate {:.5}, target 0.05 +/- 0.0021", report.rejection_rate),
    );
}

#[test]
fn criterion_03_random_draws_keep_the_level() {
    let mut details = Vec::new();
    let mut pass = true;
    // w counts the identity, so w = 19 gives k' = w and can never reject;
    // w = 20 (the identity plus 19 draws) is the case where the bound binds.
    for (scheme, seed) in [("with-replacement", 103), ("without-replacement", 203)] {
        for w in [19, 20] {
            let report = simulate(json!({
                "experiment": "type1",
                "null_model": {"kind": "normal", "dimension": 8},
                "test": {"procedure": "random", "group": "full-symmetric:8", "statistic": "diff-sum:n=4",
                         "scheme": scheme, "alpha": 0.05, "w": w},
                "replications": N, "master_seed": seed + w
            }));
            pass &= report.rejection_rate <= 0.0521;
            details.push(format!("{scheme} w={w} rate {:.5}", report.rejection_rate));
        }
    }
    verdict(3, pass, &format!("{}, bound 0.0521", details.join(", ")));
}

#[test]
fn criterion_04_class_draws_exact() {
    let report = simulate(json!({
        "experiment": "type1",
        "null_model": {"kind": "normal", "dimension": 6},
        "test": {"procedure": "random", "group": "two-sample:3", "statistic": "diff-sum:n=3",
                 "scheme": "class-without-replacement", "alpha": 0.3, "w": 10},
        "replications": N, "master_seed": 104
    }));
    let pass = (report.rejection_rate - 0.3).abs() <= 0.0043;
    verdict(
        4,
        pass,
        &format!("rate {:.5}, target 0.30 +/- 0.0043", report.rejection_rate),
    );
}

#[test]
fn criterion_05_randomized_test_exact_off_grid() {
    let report = simulate(json!({
        "experiment": "type1",
        "null_model": {"kind": "binary", "dimension": 8, "p": 0.5},
        "test": {"procedure": "randomized", "group": "full-symmetric:8", "statistic": "diff-sum:n=4",
                 "scheme": "with-replacement", "alpha": 0.037, "w": 25},
        "replications": N, "master_seed": 105
    }));
    let pass = (report.rejection_rate - 0.037).abs() <= 0.0018;
    verdict(
        5,
        pass,
        &format!("rate {:.5}, target 0.037 +/- 0.0018", report.rejection_rate),
    );
}

#[test]
fn criterion_06_randomized_pvalue_uniform() {
    let report = simulate(json!({
        "experiment": "pvalue-uniformity",
        "null_model": {"kind": "normal", "dimension": 8},
        "test": {"procedure": "randomized", "group": "full-symmetric:8", "statistic": "diff-sum:n=4",
                 "scheme": "with-replacement", "alpha": 0.05, "w": 19},
        "replications": N, "master_seed": 106
    }));
    let ks = report.ks_distance.expect("uniformity run reports KS");
    verdict(6, ks < 0.006, &format!("KS distance {ks:.5}, bound 0.006"));
}

/// Empirical `P(B <= b)` for `b = 0..=w` from per-replication counts.
fn cdf_of(counts: &[u64], w: usize) -> Vec<f64> {
    let mut hist = vec![0u64; w + 1];
    for &b in counts {
        hist[b as usize] += 1;
    }
    let n = counts.len() as f64;
    let mut acc = 0u64;
    hist.iter()
        .map(|&h| {
            acc += h;
            acc as f64 / n
        })
        .collect()
}

#[test]
fn criterion_07_pvalue_formulas() {
    let stat3 = StatisticSpec::DiffSum { cases: 3 };
    let classes20 = class_representatives(3).unwrap();
    let plan = SamplingPlan::new(SamplingMode::ClassWithoutReplacement, 11);
    let without: Vec<u64> = (0..N)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(107, i);
            let x = normal(&mut rng, 6);
            let draw = draw_transforms(&plan, Population::Classes(&classes20), &mut rng).unwrap();
            let others = RandomDraw::explicit(draw.elements[1..].to_vec());
            estimate_pvalue(&x, &others, stat3).unwrap().b
        })
        .collect();

    let stat2 = StatisticSpec::DiffSum { cases: 2 };
    let classes6 = class_representatives(2).unwrap();
    let plan = SamplingPlan::naive(SamplingMode::ClassWithReplacement, 10);
    let with: Vec<u64> = (0..N)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(207, i);
            let x = normal(&mut rng, 4);
            let draw = draw_transforms(&plan, Population::Classes(&classes6), &mut rng).unwrap();
            estimate_pvalue(&x, &draw, stat2).unwrap().b
        })
        .collect();

    let mut pass = true;
    let mut worst = (0.0f64, 0.0f64);
    for (b, empirical) in cdf_of(&without, 10).into_iter().enumerate() {
        let exact = pvalue_without_replacement(b as u64, 10).unwrap();
        let z = (empirical - exact).abs() / standard_error(exact, N).max(f64::MIN_POSITIVE);
        pass &= z <= 3.0 || (empirical - exact).abs() < 1e-12;
        worst.0 = worst.0.max(if exact == 1.0 { 0.0 } else { z });
    }
    for (b, empirical) in cdf_of(&with, 10).into_iter().enumerate() {
        let exact = pvalue_with_replacement(b as u64, 10, 6).unwrap();
        let z = (empirical - exact).abs() / standard_error(exact, N).max(f64::MIN_POSITIVE);
        pass &= z <= 3.0 || (empirical - exact).abs() < 1e-12;
        worst.1 = worst.1.max(if exact == 1.0 { 0.0 } else { z });
    }
    verdict(
        7,
        pass,
        &format!(
            "max |z| without replacement (m=20, w=10) {:.2}, with replacement (m=6, w=10) {:.2}, bound 3",
            worst.0, worst.1
        ),
    );
}

#[test]
fn criterion_08_naive_pvalue_anti_conservative() {
    let zero = simulate(json!({
        "experiment": "pvalue-uniformity",
        "null_model": {"kind": "normal", "dimension": 20},
        "test": {"procedure": "naive", "group": "full-symmetric:20", "statistic": "diff-sum:n=10",
                 "scheme": "with-replacement", "alpha": 0.001, "w": 25},
        "replications": N, "master_seed": 108
    }));
    let zero_mass = zero.zero_mass.expect("uniformity run reports zero mass");
    let target = 1.0 / 26.0;
    let zero_ok = (zero_mass - target).abs() <= three_se(target, N);

    let bonferroni_n = 10_000;
    let bonf = simulate(json!({
        "experiment": "bonferroni-demo",
        "null_model": {"kind": "normal", "dimension": 12},
        "test": {"procedure": "naive", "group": "full-symmetric:12", "statistic": "diff-sum:n=6",
                 "scheme": "with-replacement", "alpha": 0.05, "w": 99},
        "hypotheses": 100,
        "replications": bonferroni_n, "master_seed": 208
    }));
    let tilde = bonf.control.as_ref().expect("p-tilde arm").rejection_rate;
    let naive_ok = bonf.rejection_rate > 0.3;
    let tilde_ok = tilde <= 0.05 + three_se(0.05, bonferroni_n);
    verdict(
        8,
        zero_ok && naive_ok && tilde_ok,
        &format!(
            "P(p_hat = 0) {zero_mass:.5} vs 1/26 = {target:.5}; naive FWER {:.4} (> 0.3); p_tilde FWER {tilde:.4} (<= 0.05 + 3 SE)",
            bonf.rejection_rate
        ),
    );
}

#[test]
fn criterion_09_balanced_permutations_inflate() {
    let report = simulate(json!({
        "experiment": "balanced-demo",
        "null_model": {"kind": "normal", "dimension": 8},
        "test": {"procedure": "full-group", "statistic": "diff-sum:n=4", "alpha": 0.05},
        "replications": N, "master_seed": 109
    }));
    let control = report.control.as_ref().expect("control arm");
    let inflated = report.excess_p_value < 0.001;
    let controlled = control.rejection_rate <= 0.05 + three_se(0.05, N);

    let exe = env!("CARGO_BIN_EXE_permtest");
    let status = |args: &[&str]| Command::new(exe).args(args).output().unwrap().status.code();
    let balanced_code = status(&["verify-group", "--balanced", "4"]);
    let group_code = status(&["verify-group", "--group", "two-sample:4"]);
    let codes_ok = balanced_code == Some(3) && group_code == Some(0);
    verdict(
        9,
        inflated && controlled && codes_ok && report.axioms.as_ref().is_some_and(|a| !a.is_group),
        &format!(
            "balanced rate {:.5} (one-sided p {:.2e}); control rate {:.5}; verify-group exits {:?} / {:?}",
            report.rejection_rate, report.excess_p_value, control.rejection_rate, balanced_code, group_code
        ),
    );
}

fn random_group(rng: &mut ChaCha8Rng) -> GroupSpec {
    match rng.random_range(0..4) {
        0 => GroupSpec::FullSymmetric(rng.random_range(2..=7)),
        1 => GroupSpec::TwoSample {
            cases: rng.random_range(1..=3),
        },
        2 => GroupSpec::SignFlip(rng.random_range(1..=12)),
        _ => GroupSpec::Cyclic(rng.random_range(2..=40)),
    }
}

fn random_statistic(group: &GroupSpec, rng: &mut ChaCha8Rng) -> StatisticSpec {
    let d = group.dimension();
    match rng.random_range(0..4) {
        0 if d.is_multiple_of(2) => StatisticSpec::DiffSum { cases: d / 2 },
        1 => StatisticSpec::AbsMean,
        2 => StatisticSpec::SumFirst {
            k: rng.random_range(1..=d),
        },
        _ => StatisticSpec::Mean,
    }
}

fn random_data(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if rng.random::<bool>() {
        normal(rng, d)
    } else {
        (0..d)
            .map(|_| f64::from(rng.random_range(-1..=1i8)))
            .collect()
    }
}

/// Permutations fixing the first `fixed` points of `0..d`.
fn pointwise_stabilizer(d: usize, fixed: usize) -> Vec<GroupElement> {
    enumerate(&GroupSpec::FullSymmetric(d - fixed))
        .unwrap()
        .into_iter()
        .map(|g| {
            let GroupElement::Permutation(p) = g else {
                unreachable!()
            };
            let mut full: Vec<usize> = (0..fixed).collect();
            full.extend(p.into_iter().map(|i| i + fixed));
            GroupElement::permutation(full).unwrap()
        })
        .collect()
}

#[test]
fn criterion_10_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let group = random_group(&mut rng);
        let size = group.cardinality().unwrap() as usize;
        assert!(size <= 5040);
        let stat = random_statistic(&group, &mut rng);
        let x = random_data(group.dimension(), &mut rng);
        let alpha = rng.random_range(0.0..0.99);
        let plan = SamplingPlan::new(SamplingMode::WithoutReplacement, size);
        let draw = draw_transforms(&plan, Population::Group(&group), &mut rng).unwrap();
        let random = random_test(&x, &draw, stat, alpha).unwrap();
        let full = full_group_test(&x, &group, stat, alpha).unwrap();
        let same = random.decision == full.decision
            && random.p_value.map(f64::to_bits) == full.p_value.map(f64::to_bits)
            && random.threshold_value.to_bits() == full.threshold_value.to_bits();
        mismatches += usize::from(!same);
    }

    let mut coset_mismatches = 0;
    for i in 0..1000 {
        let subgroup = match i % 4 {
            0 => enumerate(&GroupSpec::Cyclic(rng.random_range(2..=12))).unwrap(),
            1 => enumerate(&GroupSpec::SignFlip(rng.random_range(1..=8))).unwrap(),
            2 => pointwise_stabilizer(6, rng.random_range(0..=4)),
            _ => pointwise_stabilizer(7, 2),
        };
        let d = subgroup[0].dimension();
        let stat = match i % 3 {
            0 => StatisticSpec::SumFirst {
                k: rng.random_range(1..=d),
            },
            1 => StatisticSpec::AbsMean,
            _ => StatisticSpec::Mean,
        };
        let x = random_data(d, &mut rng);
        let alpha = rng.random_range(0.0..0.99);
        let coset = coset_scheme_test(&x, &subgroup, stat, alpha, &mut rng).unwrap();
        let basic =
            full_group_test(&x, &GroupSpec::explicit(subgroup).unwrap(), stat, alpha).unwrap();
        let same = coset.decision == basic.decision
            && coset.p_value.map(f64::to_bits) == basic.p_value.map(f64::to_bits)
            && coset.threshold_value.to_bits() == basic.threshold_value.to_bits();
        coset_mismatches += usize::from(!same);
    }
    verdict(
        10,
        mismatches == 0 && coset_mismatches == 0,
        &format!("{mismatches} random/full mismatches, {coset_mismatches} coset/basic mismatches over 1000 instances each"),
    );
}

#[test]
fn criterion_11_reports_independent_of_thread_count() {
    let configs = [
        json!({"experiment": "type1", "null_model": {"kind": "normal", "dimension": 6},
               "test": {"procedure": "full-group", "group": "two-sample:3", "statistic": "diff-sum:n=3", "alpha": 0.25},
               "replications": 3000, "master_seed": 1, "cutoffs": [0.1, 0.5]}),
        json!({"experiment": "type1", "null_model": {"kind": "binary", "dimension": 8, "p": 0.3},
               "test": {"procedure": "hoeffding", "group": "two-sample:4", "statistic": "diff-sum:n=4", "alpha": 0.05},
               "replications": 3000, "master_seed": 2}),
        json!({"experiment": "type1", "null_model": {"kind": "normal", "dimension": 6},
               "test": {"procedure": "random", "group": "two-sample:3", "statistic": "diff-sum:n=3",
                        "scheme": "class-without-replacement", "alpha": 0.3, "w": 10},
               "replications": 3000, "master_seed": 3}),
        json!({"experiment": "pvalue-uniformity", "null_model": {"kind": "binary", "dimension": 8, "p": 0.5},
               "test": {"procedure": "randomized", "group": "full-symmetric:8", "statistic": "diff-sum:n=4",
                        "scheme": "without-replacement", "alpha": 0.037, "w": 25},
               "replications": 3000, "master_seed": 4}),
        json!({"experiment": "type1", "null_model": {"kind": "custom", "id": "uniform", "dimension": 8},
               "test": {"procedure": "coset", "group": "full-symmetric:8", "statistic": "diff-sum:n=4",
                        "alpha": 0.05, "subset_size": 50},
               "replications": 3000, "master_seed": 5}),
        json!({"experiment": "type1", "null_model": {"kind": "custom", "id": "exponential", "dimension": 5},
               "test": {"procedure": "monte-carlo", "statistic": "mean", "alpha": 0.1, "w": 20},
               "replications": 3000, "master_seed": 6}),
        json!({"experiment": "pvalue-uniformity", "null_model": {"kind": "normal", "dimension": 10},
               "test": {"procedure": "naive", "group": "sign-flip:10", "statistic": "mean",
                        "scheme": "with-replacement", "alpha": 0.05, "w": 25},
               "replications": 3000, "master_seed": 7}),
        json!({"experiment": "balanced-demo", "null_model": {"kind": "normal", "dimension": 8},
               "test": {"procedure": "full-group", "statistic": "diff-sum:n=4", "alpha": 0.05},
               "replications": 3000, "master_seed": 8}),
        json!({"experiment": "bonferroni-demo", "null_model": {"kind": "normal", "dimension": 8},
               "test": {"procedure": "naive-tilde", "group": "full-symmetric:8", "statistic": "diff-sum:n=4",
                        "scheme": "with-replacement", "alpha": 0.05, "w": 19},
               "hypotheses": 10, "replications": 1000, "master_seed": 9}),
    ];
    let mut identical = 0;
    for config in &configs {
        let config: SimulationConfig = config.to_string().parse().unwrap();
        let one = run(&config, 1).unwrap().to_json().unwrap();
        let eight = run(&config, 8).unwrap().to_json().unwrap();
        identical += usize::from(one == eight);
    }
    verdict(
        11,
        identical == configs.len(),
        &format!(
            "{identical} of {} reports byte-identical between 1 and 8 threads",
            configs.len()
        ),
    );
}
