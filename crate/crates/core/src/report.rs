//! Per-region index tables, the national aggregate, sensitivity comparison
//! and the serialized report files.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::{self, Density, ReferenceLine};
use crate::error::{Error, Result};
use crate::index;
use crate::ingest::{AgeSource, AlphaSource, DatasetBundle};
use crate::model::{
    FertilityInputs, MarriageTiming, SexRatioAtBirth, SgiResult, DEFAULT_BALANCE_TOLERANCE,
};
use crate::oracle_sim::TrajectoryRow;
use crate::smam::DEFAULT_UPPER_LIMIT;

pub const REPORT_COLUMNS: [&str; 10] = [
    "region_id",
    "name",
    "sgi",
    "effective_fertility",
    "growth_rate",
    "surplus_share_paper",
    "surplus_share_ratio",
    "surplus_men_paper",
    "surplus_men_ratio",
    "u5mr_is_proxy",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareConvention {
    Paper,
    Ratio,
    #[default]
    Both,
}

impl fmt::Display for ShareConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShareConvention::Paper => "paper",
            ShareConvention::Ratio => "ratio",
            ShareConvention::Both => "both",
        })
    }
}

impl FromStr for ShareConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(ShareConvention::Paper),
            "ratio" => Ok(ShareConvention::Ratio),
            "both" => Ok(ShareConvention::Both),
            _ => Err(Error::invalid(
                "share_convention",
                format!("unknown value `{s}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeOptions {
    pub alpha: Option<f64>,
    pub upper_limit: f64,
    pub tolerance: f64,
    pub share_convention: ShareConvention,
    pub bandwidth: Option<f64>,
    /// Region row holding published national inputs; kept out of the
    /// per-region table and the aggregate.
    pub national_id: Option<String>,
}

impl Default for ComputeOptions {
    fn default() -> Self {
        ComputeOptions {
            alpha: None,
            upper_limit: DEFAULT_UPPER_LIMIT,
            tolerance: DEFAULT_BALANCE_TOLERANCE,
            share_convention: ShareConvention::Both,
            bandwidth: None,
            national_id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub region_id: String,
    pub name: String,
    pub sex_ratio: f64,
    pub tfr: f64,
    pub u5mr: f64,
    pub u5mr_is_proxy: bool,
    pub male_age: f64,
    pub female_age: f64,
    pub birth_interval: f64,
    pub age_source: AgeSource,
    pub alpha_source: AlphaSource,
    pub male_pop_15_54: Option<u64>,
    pub result: SgiResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    MalePopulation,
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateInputs {
    pub weighting: Weighting,
    pub regions: usize,
    pub sex_ratio: f64,
    pub tfr: f64,
    pub u5mr: f64,
    pub male_age: f64,
    pub female_age: f64,
    pub birth_interval: f64,
    pub male_pop_15_54: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NationalReport {
    pub aggregated_inputs: AggregateInputs,
    /// Index from weighted-average inputs.
    pub aggregated: SgiResult,
    /// Plain mean of the regional indices.
    pub mean_of_regions: f64,
    pub supplied: Option<RegionReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub surplus_men_paper: i64,
    pub surplus_men_ratio: i64,
    pub regions_counted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFailure {
    pub region_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub options: ComputeOptions,
    pub default_alpha: Option<f64>,
    pub global_default_alpha: f64,
    pub vintage: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub per_region: Vec<RegionReport>,
    pub national: Option<NationalReport>,
    pub totals: Totals,
    pub density: Option<Density>,
    pub failures: Vec<RegionFailure>,
    pub warnings: Vec<String>,
    pub provenance: BTreeMap<String, String>,
    pub config_echo: ConfigEcho,
}

fn region_report(
    bundle: &DatasetBundle,
    region_id: &str,
    options: &ComputeOptions,
) -> Result<RegionReport> {
    let (inputs, resolved) = bundle.region_inputs(region_id, options.alpha)?;
    let rt = index::effective_fertility(&inputs.fertility);
    let result =
        index::compute_sgi_with_tolerance(inputs.sex_ratio, rt, &inputs.timing, options.tolerance)?;
    Ok(RegionReport {
        region_id: inputs.region_id,
        name: inputs.name,
        sex_ratio: inputs.sex_ratio.females_per_male(),
        tfr: inputs.fertility.tfr(),
        u5mr: inputs.fertility.u5mr(),
        u5mr_is_proxy: inputs.u5mr_is_proxy,
        male_age: inputs.timing.male_age(),
        female_age: inputs.timing.female_age(),
        birth_interval: inputs.timing.birth_interval(),
        age_source: resolved.ages,
        alpha_source: resolved.alpha,
        male_pop_15_54: inputs.male_pop_15_54,
        result: index::with_surplus(result, inputs.male_pop_15_54),
    })
}

/// Weighted average of regional inputs; male population weights when every
/// region has one, equal weights otherwise.
pub fn aggregate_inputs(regions: &[RegionReport]) -> Result<AggregateInputs> {
    if regions.is_empty() {
        return Err(Error::InsufficientData("no regions to aggregate".into()));
    }
    let pops: Option<Vec<u64>> = regions.iter().map(|r| r.male_pop_15_54).collect();
    let (weights, weighting, total_pop) = match pops {
        Some(p) if p.iter().sum::<u64>() > 0 => (
            p.iter().map(|&x| x as f64).collect::<Vec<_>>(),
            Weighting::MalePopulation,
            Some(p.iter().sum()),
        ),
        _ => (vec![1.0; regions.len()], Weighting::Equal, None),
    };
    let w_sum: f64 = weights.iter().sum();
    let mean = |f: &dyn Fn(&RegionReport) -> f64| {
        regions
            .iter()
            .zip(&weights)
            .map(|(r, w)| f(r) * w)
            .sum::<f64>()
            / w_sum
    };
    Ok(AggregateInputs {
        weighting,
        regions: regions.len(),
        sex_ratio: mean(&|r| r.sex_ratio),
        tfr: mean(&|r| r.tfr),
        u5mr: mean(&|r| r.u5mr),
        male_age: mean(&|r| r.male_age),
        female_age: mean(&|r| r.female_age),
        birth_interval: mean(&|r| r.birth_interval),
        male_pop_15_54: total_pop,
    })
}

fn aggregate_result(inputs: &AggregateInputs, tolerance: f64) -> Result<SgiResult> {
    let s = SexRatioAtBirth::new(inputs.sex_ratio)?;
    let f = FertilityInputs::new(inputs.tfr, inputs.u5mr)?;
    let t = MarriageTiming::new(inputs.male_age, inputs.female_age, inputs.birth_interval)?;
    let r = index::compute_sgi_with_tolerance(s, index::effective_fertility(&f), &t, tolerance)?;
    Ok(index::with_surplus(r, inputs.male_pop_15_54))
}

fn sort_descending(regions: &mut [RegionReport]) {
    regions.sort_by(|a, b| {
        b.result
            .sgi
            .total_cmp(&a.result.sgi)
            .then_with(|| a.region_id.cmp(&b.region_id))
    });
}

/// Compute every region's index, the national figures and the density.
/// Region-level failures are collected in `failures`, not returned early.
pub fn run_compute(bundle: &DatasetBundle, options: &ComputeOptions) -> Result<RunReport> {
    if let Some(id) = &options.national_id {
        if bundle.region(id).is_none() {
            return Err(Error::MissingData {
                region: id.clone(),
                what: "national row named by the options is not in the bundle".into(),
            });
        }
    }
    let mut per_region = Vec::new();
    let mut failures = Vec::new();
    let mut supplied = None;
    for record in &bundle.regions {
        match region_report(bundle, &record.region_id, options) {
            Ok(r) if options.national_id.as_deref() == Some(r.region_id.as_str()) => {
                supplied = Some(r)
            }
            Ok(r) => per_region.push(r),
            Err(e) => failures.push(RegionFailure {
                region_id: record.region_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    sort_descending(&mut per_region);

    let national = if per_region.is_empty() {
        None
    } else {
        let aggregated_inputs = aggregate_inputs(&per_region)?;
        let aggregated = aggregate_result(&aggregated_inputs, options.tolerance)?;
        let mean_of_regions =
            per_region.iter().map(|r| r.result.sgi).sum::<f64>() / per_region.len() as f64;
        Some(NationalReport {
            aggregated_inputs,
            aggregated,
            mean_of_regions,
            supplied: supplied.take(),
        })
    };
    if let Some(s) = supplied {
        // every other region failed; still report the supplied row
        per_region.push(s);
    }

    let counted: Vec<_> = per_region
        .iter()
        .filter_map(|r| r.result.surplus_men)
        .collect();
    let totals = Totals {
        surplus_men_paper: counted.iter().map(|s| s.paper).sum(),
        surplus_men_ratio: counted.iter().map(|s| s.ratio).sum(),
        regions_counted: counted.len(),
    };

    let values: Vec<f64> = per_region.iter().map(|r| r.result.sgi).collect();
    let density = if values.len() >= 2 {
        Some(density::emit_density(&values, options.bandwidth)?)
    } else {
        None
    };

    let mut warnings: Vec<String> = bundle.warnings.iter().map(|w| w.to_string()).collect();
    if per_region
        .iter()
        .any(|r| r.alpha_source == AlphaSource::GlobalDefault)
    {
        warnings.push(format!(
            "birth interval not supplied for some regions; assumed {} years",
            crate::model::DEFAULT_BIRTH_INTERVAL
        ));
    }

    Ok(RunReport {
        per_region,
        national,
        totals,
        density,
        failures,
        warnings,
        provenance: bundle.provenance.clone(),
        config_echo: ConfigEcho {
            options: options.clone(),
            default_alpha: bundle.default_alpha,
            global_default_alpha: crate::model::DEFAULT_BIRTH_INTERVAL,
            vintage: bundle.vintage.clone(),
        },
    })
}

/// Index under crude and effective fertility for one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub region_id: String,
    pub name: String,
    pub u5mr: f64,
    pub age_gap: f64,
    pub sgi_crude: f64,
    pub sgi_effective: f64,
    pub absolute_difference: f64,
    pub relative_difference: f64,
}

pub fn sensitivity_row(
    region_id: &str,
    name: &str,
    sex_ratio: SexRatioAtBirth,
    fertility: &FertilityInputs,
    timing: &MarriageTiming,
) -> Result<SensitivityRow> {
    let crude = index::sgi_value(sex_ratio, fertility.tfr(), timing)?;
    let effective = index::sgi_value(sex_ratio, index::effective_fertility(fertility), timing)?;
    Ok(SensitivityRow {
        region_id: region_id.to_string(),
        name: name.to_string(),
        u5mr: fertility.u5mr(),
        age_gap: timing.age_gap(),
        sgi_crude: crude,
        sgi_effective: effective,
        absolute_difference: effective - crude,
        relative_difference: (effective - crude) / crude,
    })
}

/// Crude-versus-effective comparison for every region in input order.
pub fn run_sensitivity(
    bundle: &DatasetBundle,
    options: &ComputeOptions,
) -> Result<(Vec<SensitivityRow>, Vec<RegionFailure>)> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for record in &bundle.regions {
        let row = bundle
            .region_inputs(&record.region_id, options.alpha)
            .and_then(|(inputs, _)| {
                sensitivity_row(
                    &inputs.region_id,
                    &inputs.name,
                    inputs.sex_ratio,
                    &inputs.fertility,
                    &inputs.timing,
                )
            });
        match row {
            Ok(r) => rows.push(r),
            Err(e) => failures.push(RegionFailure {
                region_id: record.region_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    Ok((rows, failures))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io {
        path: "<memory>".into(),
        source: std::io::Error::other(e),
    };
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        source: std::io::Error::other(e.to_string()),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `report.csv`: one row per region, descending by index.
pub fn report_csv(report: &RunReport) -> Result<String> {
    to_csv_string(
        &REPORT_COLUMNS,
        report.per_region.iter().map(|r| {
            let res = &r.result;
            vec![
                r.region_id.clone(),
                r.name.clone(),
                res.sgi.to_string(),
                res.effective_fertility.to_string(),
                res.growth_rate.to_string(),
                res.surplus_share_paper.to_string(),
                res.surplus_share_ratio.to_string(),
                opt(res.surplus_men.map(|s| s.paper)),
                opt(res.surplus_men.map(|s| s.ratio)),
                r.u5mr_is_proxy.to_string(),
            ]
        }),
    )
}

/// `report.json`: the whole report including configuration and provenance.
pub fn report_json(report: &RunReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// `map.csv`: join-ready table keyed by region id.
pub fn map_csv(report: &RunReport) -> Result<String> {
    let mut rows: Vec<&RegionReport> = report.per_region.iter().collect();
    rows.sort_by(|a, b| a.region_id.cmp(&b.region_id));
    to_csv_string(
        &[
            "region_id",
            "name",
            "sgi",
            "surplus_share_paper",
            "surplus_share_ratio",
        ],
        rows.into_iter().map(|r| {
            vec![
                r.region_id.clone(),
                r.name.clone(),
                r.result.sgi.to_string(),
                r.result.surplus_share_paper.to_string(),
                r.result.surplus_share_ratio.to_string(),
            ]
        }),
    )
}

pub fn density_csv(density: &Density) -> Result<String> {
    to_csv_string(
        &["x", "y"],
        density
            .points
            .iter()
            .map(|p| vec![p.x.to_string(), p.y.to_string()]),
    )
}

pub fn sensitivity_csv(rows: &[SensitivityRow]) -> Result<String> {
    to_csv_string(
        &[
            "region_id",
            "name",
            "u5mr",
            "age_gap",
            "sgi_crude",
            "sgi_effective",
            "absolute_difference",
            "relative_difference",
        ],
        rows.iter().map(|r| {
            vec![
                r.region_id.clone(),
                r.name.clone(),
                r.u5mr.to_string(),
                r.age_gap.to_string(),
                r.sgi_crude.to_string(),
                r.sgi_effective.to_string(),
                r.absolute_difference.to_string(),
                r.relative_difference.to_string(),
            ]
        }),
    )
}

/// Density plot with reference lines at balance and at the national value.
pub fn density_svg(density: &Density, national: Option<f64>) -> String {
    let mut lines = vec![ReferenceLine {
        x: 1.0,
        colour: "green",
        label: "balance (1.0)".into(),
    }];
    if let Some(n) = national {
        lines.push(ReferenceLine {
            x: n,
            colour: "black",
            label: format!("national ({n:.2})"),
        });
    }
    density::render_svg(density, "Surplus Groom Index: kernel density", &lines)
}

/// Headline surplus total under the chosen convention(s).
pub fn headline(report: &RunReport, convention: ShareConvention) -> String {
    let t = &report.totals;
    match convention {
        ShareConvention::Paper => format!("surplus men (sgi - 1): {}", t.surplus_men_paper),
        ShareConvention::Ratio => format!("surplus men (1 - 1/sgi): {}", t.surplus_men_ratio),
        ShareConvention::Both => format!(
            "surplus men (sgi - 1): {}; (1 - 1/sgi): {}",
            t.surplus_men_paper, t.surplus_men_ratio
        ),
    }
}

/// `trajectory.csv` from a microsimulation run.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> Result<String> {
    to_csv_string(
        &[
            "year",
            "male_births",
            "female_births",
            "men_at_marriage",
            "women_at_marriage",
            "matches",
            "unmatched_men",
            "unmatched_women",
        ],
        rows.iter().map(|r| {
            vec![
                r.year.to_string(),
                r.male_births.to_string(),
                r.female_births.to_string(),
                r.men_at_marriage.to_string(),
                r.women_at_marriage.to_string(),
                r.matches.to_string(),
                r.unmatched_men.to_string(),
                r.unmatched_women.to_string(),
            ]
        }),
    )
}
