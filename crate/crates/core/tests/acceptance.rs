//! Acceptance suite. Prints one line per criterion and exits non-zero when a
//! binding criterion fails.
//!
//! Run with `cargo test -p sgi-core --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgi_core::density::{emit_density, parse_values};
use sgi_core::index::{self, compute_sgi, effective_fertility, growth_rate, imbalance_condition};
use sgi_core::ingest::{load_bundle, BundleConfig};
use sgi_core::model::{FertilityInputs, MarriageTiming, SexRatioAtBirth, SgiResult};
use sgi_core::oracle_sim::{
    generate_stable_series, required_horizon, run_matching_microsim, stable_cohort_ratio,
    CohortMode,
};
use sgi_core::report::{run_compute, ComputeOptions};
use sgi_core::smam::{compute_smam, AgeGroup, MaritalRow, MaritalStatusTable, Sex};

struct Outcome {
    passed: bool,
    binding: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn binding(passed: bool, detail: String) -> Outcome {
    Outcome {
        passed,
        binding: true,
        detail,
    }
}

fn sr(v: f64) -> SexRatioAtBirth {
    SexRatioAtBirth::new(v).unwrap()
}

fn timing(m: f64, f: f64, a: f64) -> MarriageTiming {
    MarriageTiming::new(m, f, a).unwrap()
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Parameter tuple drawn from the randomized grid.
fn draw(rng: &mut ChaCha8Rng) -> (SexRatioAtBirth, f64, MarriageTiming) {
    let s = sr(rng.random_range(0.7..=1.2));
    let rt = rng.random_range(1.2..=5.0);
    let female = rng.random_range(16.0..=28.0);
    let gap = rng.random_range(-2.0..=10.0);
    let alpha = rng.random_range(0.0..=4.0);
    (s, rt, timing(female + gap, female, alpha))
}

fn oracle_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (s, rt, t) = draw(&mut rng);
        let closed = compute_sgi(s, rt, &t).unwrap().sgi;
        let series = generate_stable_series(s, rt, &t, required_horizon(&t) + 2, 1000.0).unwrap();
        let at_year = t.male_age().max(t.female_age()).ceil() as i64 + 1;
        let oracle = stable_cohort_ratio(&series, &t, at_year).unwrap();
        worst = worst.max(((oracle - closed) / closed).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    binding(
        worst < 1e-9 && elapsed < 60.0,
        format!("10000 tuples, max relative error {worst:.3e}, {elapsed:.2} s"),
    )
}

fn trivial_exactness() -> Outcome {
    let mut failures = Vec::new();
    let one = compute_sgi(sr(1.0), 2.0, &timing(26.0, 21.0, 2.0))
        .unwrap()
        .sgi;
    if one != 1.0 {
        failures.push(format!("S=1, r=2 gave {one}"));
    }
    for s in [0.8, 0.9, 0.95, 1.05] {
        for rt in [1.5, 2.2752, 3.7] {
            let v = compute_sgi(sr(s), rt, &timing(23.0, 23.0, 2.0))
                .unwrap()
                .sgi;
            if v != 1.0 / s {
                failures.push(format!("gap 0, S={s}, r={rt} gave {v}"));
            }
        }
    }
    for (s, t) in [
        (1.0, timing(30.0, 20.0, 3.0)),
        (0.9, timing(26.0, 21.0, 2.0)),
    ] {
        // replacement: r̃ · S/(1+S) = 1
        let n = growth_rate((1.0 + s) / s, sr(s), &t).unwrap().per_year();
        if n.abs() > 1e-15 {
            failures.push(format!("replacement growth rate {n} for S={s}"));
        }
    }
    let detail = if failures.is_empty() {
        "S=1,r=2 -> 1; gap 0 -> 1/S; replacement -> n=0".to_string()
    } else {
        failures.join("; ")
    };
    binding(failures.is_empty(), detail)
}

fn condition_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut check = |s: SexRatioAtBirth, rt: f64, t: &MarriageTiming| {
        let n = growth_rate(rt, s, t).unwrap();
        let cond = imbalance_condition(n, s, t);
        let sgi = compute_sgi(s, rt, t).unwrap().sgi;
        if cond.signum() != (1.0 - sgi).signum() && !(cond == 0.0 && sgi == 1.0) {
            mismatches += 1;
        }
        if (cond == 0.0) != (sgi == 1.0) {
            mismatches += 1;
        }
    };
    for _ in 0..10_000 {
        let (s, rt, t) = draw(&mut rng);
        check(s, rt, &t);
    }
    check(sr(1.0), 2.0, &timing(26.0, 21.0, 2.0));
    check(sr(1.0), 3.1, &timing(24.0, 24.0, 1.0));
    binding(
        mismatches == 0,
        format!("10002 tuples, {mismatches} sign mismatches"),
    )
}

fn fertility_for(target: f64, s: f64, t: &MarriageTiming) -> f64 {
    let k = t.age_gap() / t.generation_length();
    (1.0 + s) / (s * (s * target).powf(1.0 / k))
}

fn microsim_convergence() -> Outcome {
    let t = timing(26.0, 21.0, 2.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for target in [1.1, 1.25, 1.5] {
        let rt = fertility_for(target, 0.9, &t);
        let sgi = compute_sgi(sr(0.9), rt, &t).unwrap().sgi;
        let series = generate_stable_series(sr(0.9), rt, &t, 200, 1000.0).unwrap();
        let out = run_matching_microsim(&series, &t, 50, CohortMode::Fractional).unwrap();
        let err = (out.unmatched_male_share - (1.0 - 1.0 / sgi)).abs();
        ok &= err <= 0.01;
        parts.push(format!("SGI {target}: |err| {err:.2e}"));
    }
    binding(ok, parts.join(", "))
}

fn five_year_table(props: [f64; 7], above: f64) -> MaritalStatusTable {
    let mut rows: Vec<MaritalRow> = props
        .iter()
        .enumerate()
        .map(|(i, p)| MaritalRow {
            age_group: AgeGroup::new(15.0 + 5.0 * i as f64, 20.0 + 5.0 * i as f64).unwrap(),
            total: 1000,
            never_married: (p * 1000.0) as u64,
        })
        .collect();
    rows.push(MaritalRow {
        age_group: AgeGroup::new(50.0, 55.0).unwrap(),
        total: 1000,
        never_married: (above * 1000.0) as u64,
    });
    MaritalStatusTable::new(Sex::Female, rows, 50.0).unwrap()
}

fn tabulate(ages: &[u32], width: u32) -> MaritalStatusTable {
    let mut rows = Vec::new();
    let mut lower = 15;
    while lower < 60 {
        let upper = lower + width;
        let never: u64 = (lower..upper)
            .map(|x| ages.iter().filter(|&&m| m > x).count() as u64)
            .sum();
        rows.push(MaritalRow {
            age_group: AgeGroup::new(lower as f64, upper as f64).unwrap(),
            total: ages.len() as u64 * width as u64,
            never_married: never,
        });
        lower = upper;
    }
    MaritalStatusTable::new(Sex::Male, rows, 50.0).unwrap()
}

fn smam_sanity() -> Outcome {
    let at_twenty =
        compute_smam(&five_year_table([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0)).unwrap();
    let by_fifteen = compute_smam(&five_year_table([0.0; 7], 0.0)).unwrap();

    let support: Vec<u32> = (16..=34).collect();
    let weights = [1, 2, 4, 7, 10, 12, 12, 11, 9, 8, 6, 5, 4, 3, 2, 2, 1, 1, 1];
    let dist = WeightedIndex::new(weights).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ages: Vec<u32> = (0..20_000)
        .map(|_| support[dist.sample(&mut rng)])
        .collect();
    let mean = ages.iter().map(|&a| a as f64).sum::<f64>() / ages.len() as f64;
    let single = (compute_smam(&tabulate(&ages, 1)).unwrap() - mean).abs();
    let five = (compute_smam(&tabulate(&ages, 5)).unwrap() - mean).abs();

    binding(
        at_twenty == 20.0 && by_fifteen == 15.0 && single < 1e-9 && five < 0.1,
        format!(
            "at-20 {at_twenty}, by-15 {by_fifteen}, synthetic |err| single-year {single:.2e}, 5-year {five:.3}"
        ),
    )
}

fn crude_vs_effective() -> Outcome {
    let national = effective_fertility(&FertilityInputs::new(2.4, 0.052).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    for _ in 0..10_000 {
        let s = sr(rng.random_range(0.7..=1.2));
        let f = FertilityInputs::new(rng.random_range(1.2..=5.0), rng.random_range(0.001..=0.3))
            .unwrap();
        let female = rng.random_range(16.0..=28.0);
        let t = timing(
            female + rng.random_range(0.1..=10.0),
            female,
            rng.random_range(0.0..=4.0),
        );
        let crude = index::sgi_value(s, f.tfr(), &t).unwrap();
        let effective = index::sgi_value(s, effective_fertility(&f), &t).unwrap();
        if effective <= crude {
            violations += 1;
        }
    }
    binding(
        violations == 0 && national == 2.2752,
        format!("10000 regions, {violations} violations; 2.4 x (1 - 0.052) = {national}"),
    )
}

fn reproduction() -> Outcome {
    let root = repo_root();
    let notes = root.join("docs/REPRODUCTION.md");
    let bundle = match load_bundle(&BundleConfig::new(root.join("data/india_2011/regions.csv"))) {
        Ok(b) => b,
        Err(e) => {
            return Outcome {
                passed: false,
                binding: false,
                detail: format!("fixture unavailable: {e}"),
            }
        }
    };
    let mut best: Option<(f64, f64, f64)> = None;
    let mut reproduced = None;
    for step in 0..=12 {
        let alpha = 1.0 + 0.25 * step as f64;
        let options = ComputeOptions {
            alpha: Some(alpha),
            national_id: Some("IN".into()),
            ..ComputeOptions::default()
        };
        let report = run_compute(&bundle, &options).unwrap();
        let india = report
            .national
            .as_ref()
            .unwrap()
            .supplied
            .as_ref()
            .unwrap()
            .result
            .sgi;
        let punjab = report
            .per_region
            .iter()
            .find(|r| r.region_id == "PB")
            .unwrap()
            .result
            .sgi;
        let miss = |i: f64, p: f64| (i - 1.11).abs().max((p - 1.33).abs());
        if best.is_none_or(|(_, i, p)| miss(india, punjab) < miss(i, p)) {
            best = Some((alpha, india, punjab));
        }
        if (india - 1.11).abs() <= 0.02 && (punjab - 1.33).abs() <= 0.03 {
            reproduced = Some((alpha, india, punjab));
            break;
        }
    }
    if let Some((alpha, india, punjab)) = reproduced {
        return Outcome {
            passed: true,
            binding: false,
            detail: format!("alpha {alpha}: national {india:.4}, Punjab {punjab:.4}"),
        };
    }
    let (alpha, india, punjab) = best.unwrap();
    let documented = notes.is_file();
    Outcome {
        passed: false,
        binding: !documented,
        detail: format!(
            "NOT REPRODUCED for alpha in [1, 4]; closest alpha {alpha}: national {india:.4} (target 1.11), \
             Punjab {punjab:.4} (target 1.33); divergence {} in docs/REPRODUCTION.md",
            if documented { "documented" } else { "NOT documented" }
        ),
    }
}

fn density_output() -> Outcome {
    let text = std::fs::read_to_string(repo_root().join("data/table2_sgi.csv")).unwrap();
    let values = parse_values(&text).unwrap();
    let d = emit_density(&values, None).unwrap();
    let (mode, integral) = (d.mode(), d.integral());
    binding(
        values.len() == 24 && (1.08..=1.14).contains(&mode) && (integral - 1.0).abs() <= 0.01,
        format!(
            "{} values, mode {mode:.4}, integral {integral:.5}",
            values.len()
        ),
    )
}

fn surplus_arithmetic() -> Outcome {
    let result = SgiResult {
        effective_fertility: 2.2752,
        growth_rate: 0.0,
        sgi: 1.11,
        balanced: false,
        surplus_share_paper: 1.11 - 1.0,
        surplus_share_ratio: 1.0 - 1.0 / 1.11,
        surplus_men: None,
    };
    let men = index::surplus_men(&result, 354_000_000).paper;
    binding(
        (38_900_000..=39_000_000).contains(&men),
        format!("1.11 on 354,000,000 -> {men}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("closed form vs cohort oracle", oracle_identity),
        ("trivial exactness", trivial_exactness),
        ("condition equivalence", condition_equivalence),
        ("microsim convergence", microsim_convergence),
        ("SMAM sanity", smam_sanity),
        ("crude vs effective", crude_vs_effective),
        ("published national and Punjab values", reproduction),
        ("density of published state values", density_output),
        ("surplus count arithmetic", surplus_arithmetic),
    ];
    let mut failed = false;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let status = match (o.passed, o.binding) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (non-binding)",
        };
        println!("criterion {}: {status}: {name}: {}", i + 1, o.detail);
        failed |= !o.passed && o.binding;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
