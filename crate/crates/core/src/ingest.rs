//! Reading and validating the regional input files.
//!
//! Two CSV files with required header rows:
//!
//! ```text
//! regions.csv: region_id,name,srb_value,srb_convention,tfr,u5mr,u5mr_units,
//!              u5mr_is_proxy,male_pop_15_54,a_m,a_f,alpha
//! marital.csv: region_id,sex,age_lower,age_upper,total,never_married
//! ```
//!
//! `a_m`, `a_f` and `alpha` may be blank (or absent from the header). When
//! the ages are blank they are estimated from the region's marital tables.
//! `u5mr_units` is one of `proportion`, `per_1000`, `imr_proportion`,
//! `imr_per_1000`; the `imr_*` units mark the value as an infant-mortality
//! stand-in and force `u5mr_is_proxy`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use csv::{StringRecord, Trim};
use serde::{Deserialize, Serialize};

use crate::error::{CellLocation, Error, Result};
use crate::model::{
    canonicalize_sex_ratio, FertilityInputs, MarriageTiming, MortalityUnits, RegionInputs,
    SexRatioAtBirth, SexRatioConvention, DEFAULT_BIRTH_INTERVAL,
};
use crate::smam::{self, AgeGroup, MaritalRow, MaritalStatusTable, Sex, DEFAULT_UPPER_LIMIT};

/// Sex ratios outside this band draw a warning.
pub const PLAUSIBLE_SEX_RATIO: (f64, f64) = (0.5, 1.5);

const REGION_COLUMNS: [&str; 12] = [
    "region_id",
    "name",
    "srb_value",
    "srb_convention",
    "tfr",
    "u5mr",
    "u5mr_units",
    "u5mr_is_proxy",
    "male_pop_15_54",
    "a_m",
    "a_f",
    "alpha",
];
const OPTIONAL_REGION_COLUMNS: [&str; 3] = ["a_m", "a_f", "alpha"];
const MARITAL_COLUMNS: [&str; 6] = [
    "region_id",
    "sex",
    "age_lower",
    "age_upper",
    "total",
    "never_married",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub location: CellLocation,
    pub message: String,
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MortalitySource {
    UnderFive,
    InfantProxy,
}

/// One parsed row of `regions.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRecord {
    pub region_id: String,
    pub name: String,
    pub sex_ratio: SexRatioAtBirth,
    pub srb_convention: SexRatioConvention,
    pub fertility: FertilityInputs,
    pub mortality_source: MortalitySource,
    pub u5mr_is_proxy: bool,
    pub male_pop_15_54: Option<u64>,
    pub male_age: Option<f64>,
    pub female_age: Option<f64>,
    pub alpha: Option<f64>,
    /// Line in the source file.
    pub line: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionTables {
    pub male: MaritalStatusTable,
    pub female: MaritalStatusTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleConfig {
    pub regions: PathBuf,
    pub marital: Option<PathBuf>,
    pub upper_limit: f64,
    /// Birth interval for regions whose `alpha` cell is blank.
    pub default_alpha: Option<f64>,
    /// Period label per field, e.g. `tfr → 2001-03`.
    pub vintage: BTreeMap<String, String>,
}

impl BundleConfig {
    pub fn new(regions: impl Into<PathBuf>) -> Self {
        BundleConfig {
            regions: regions.into(),
            marital: None,
            upper_limit: DEFAULT_UPPER_LIMIT,
            default_alpha: None,
            vintage: BTreeMap::new(),
        }
    }

    pub fn with_marital(mut self, marital: impl Into<PathBuf>) -> Self {
        self.marital = Some(marital.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetBundle {
    pub regions: Vec<RegionRecord>,
    pub marital_tables: BTreeMap<String, RegionTables>,
    /// `region_id.field` → where the number came from.
    pub provenance: BTreeMap<String, String>,
    pub vintage: BTreeMap<String, String>,
    pub default_alpha: Option<f64>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeSource {
    Supplied,
    Smam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSource {
    Override,
    Region,
    BundleDefault,
    GlobalDefault,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvedTiming {
    pub timing: MarriageTiming,
    pub ages: AgeSource,
    pub alpha: AlphaSource,
}

fn data_err(file: &str, line: u64, column: Option<&str>, message: impl Into<String>) -> Error {
    Error::Data {
        location: CellLocation {
            file: file.to_string(),
            row: line,
            column: column.map(str::to_string),
        },
        message: message.into(),
    }
}

fn csv_err(file: &str, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    data_err(file, line, None, format!("malformed CSV: {err}"))
}

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(
        file: &str,
        header: &StringRecord,
        required: &[&str],
        optional: &[&str],
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, name) in header.iter().enumerate() {
            let name = name.trim().trim_start_matches('\u{feff}').to_string();
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Schema(format!("{file}: duplicate column `{name}`")));
            }
        }
        for col in required {
            if !optional.contains(col) && !index.contains_key(*col) {
                return Err(Error::Schema(format!(
                    "{file}: missing required column `{col}`"
                )));
            }
        }
        Ok(Columns { index })
    }

    fn get<'r>(&self, record: &'r StringRecord, col: &str) -> Option<&'r str> {
        self.index
            .get(col)
            .and_then(|&i| record.get(i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }
}

struct Row<'a> {
    file: &'a str,
    line: u64,
    record: &'a StringRecord,
    columns: &'a Columns,
}

impl Row<'_> {
    fn err(&self, column: &str, message: impl Into<String>) -> Error {
        data_err(self.file, self.line, Some(column), message)
    }

    fn optional(&self, col: &str) -> Option<&str> {
        self.columns.get(self.record, col)
    }

    fn required(&self, col: &str) -> Result<&str> {
        self.optional(col)
            .ok_or_else(|| self.err(col, "required value is blank"))
    }

    fn real(&self, col: &str) -> Result<Option<f64>> {
        self.optional(col)
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(self.err(col, format!("`{v}` is not a finite number"))),
            })
            .transpose()
    }

    fn required_real(&self, col: &str) -> Result<f64> {
        self.required(col)?;
        Ok(self.real(col)?.expect("checked present"))
    }

    fn count(&self, col: &str) -> Result<Option<u64>> {
        self.optional(col)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| self.err(col, format!("`{v}` is not a non-negative integer")))
            })
            .transpose()
    }

    fn boolean(&self, col: &str) -> Result<Option<bool>> {
        self.optional(col)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(self.err(col, format!("`{v}` is not true or false"))),
            })
            .transpose()
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(Trim::All)
        .from_reader(input)
}

fn parse_mortality_units(row: &Row<'_>) -> Result<(MortalityUnits, MortalitySource)> {
    let raw = row.optional("u5mr_units").unwrap_or("proportion");
    match raw.to_ascii_lowercase().as_str() {
        "proportion" => Ok((MortalityUnits::Proportion, MortalitySource::UnderFive)),
        "per_1000" => Ok((MortalityUnits::Per1000, MortalitySource::UnderFive)),
        "imr_proportion" => Ok((MortalityUnits::Proportion, MortalitySource::InfantProxy)),
        "imr_per_1000" => Ok((MortalityUnits::Per1000, MortalitySource::InfantProxy)),
        _ => Err(row.err(
            "u5mr_units",
            format!("unknown units `{raw}` (expected proportion, per_1000, imr_proportion or imr_per_1000)"),
        )),
    }
}

fn parse_region_row(row: &Row<'_>, warnings: &mut Vec<Warning>) -> Result<RegionRecord> {
    let region_id = row.required("region_id")?.to_string();
    let name = row.optional("name").unwrap_or(&region_id).to_string();

    let srb_value = row.required_real("srb_value")?;
    let convention: SexRatioConvention = row
        .required("srb_convention")?
        .parse()
        .map_err(|e: Error| row.err("srb_convention", e.to_string()))?;
    let sex_ratio = canonicalize_sex_ratio(srb_value, convention)
        .map_err(|e| row.err("srb_value", e.to_string()))?;
    let (lo, hi) = PLAUSIBLE_SEX_RATIO;
    if !(lo..=hi).contains(&sex_ratio.females_per_male()) {
        warnings.push(Warning {
            location: CellLocation {
                file: row.file.to_string(),
                row: row.line,
                column: Some("srb_value".into()),
            },
            message: format!(
                "sex ratio {:.4} females per male is outside the plausible range [{lo}, {hi}]",
                sex_ratio.females_per_male()
            ),
        });
    }

    let tfr = row.required_real("tfr")?;
    let mortality = row.required_real("u5mr")?;
    let (units, mortality_source) = parse_mortality_units(row)?;
    let fertility = FertilityInputs::with_units(tfr, mortality, units).map_err(|e| {
        let col = match &e {
            Error::InvalidInput { field, .. } if field == "tfr" => "tfr",
            _ => "u5mr",
        };
        row.err(col, e.to_string())
    })?;

    let declared_proxy = row.boolean("u5mr_is_proxy")?;
    let is_imr = mortality_source == MortalitySource::InfantProxy;
    if is_imr && declared_proxy == Some(false) {
        warnings.push(Warning {
            location: CellLocation {
                file: row.file.to_string(),
                row: row.line,
                column: Some("u5mr_is_proxy".into()),
            },
            message: "infant mortality units imply a proxy; flag set to true".into(),
        });
    }
    let u5mr_is_proxy = is_imr || declared_proxy.unwrap_or(false);

    let male_pop_15_54 = row.count("male_pop_15_54")?;
    let male_age = row.real("a_m")?;
    let female_age = row.real("a_f")?;
    match (male_age, female_age) {
        (Some(_), None) => return Err(row.err("a_f", "a_m is given but a_f is blank")),
        (None, Some(_)) => return Err(row.err("a_m", "a_f is given but a_m is blank")),
        _ => {}
    }
    for (col, v) in [("a_m", male_age), ("a_f", female_age)] {
        if let Some(age) = v {
            if age <= 0.0 {
                return Err(row.err(col, format!("age must be positive, got {age}")));
            }
        }
    }
    let alpha = row.real("alpha")?;
    if let Some(a) = alpha {
        if a < 0.0 {
            return Err(row.err(
                "alpha",
                format!("birth interval must be non-negative, got {a}"),
            ));
        }
    }

    Ok(RegionRecord {
        region_id,
        name,
        sex_ratio,
        srb_convention: convention,
        fertility,
        mortality_source,
        u5mr_is_proxy,
        male_pop_15_54,
        male_age,
        female_age,
        alpha,
        line: row.line,
    })
}

/// Parse `regions.csv` content. `source` names the file in diagnostics.
pub fn parse_regions<R: Read>(input: R, source: &str) -> Result<(Vec<RegionRecord>, Vec<Warning>)> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    let columns = Columns::new(source, &header, &REGION_COLUMNS, &OPTIONAL_REGION_COLUMNS)?;

    let mut regions: Vec<RegionRecord> = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    let mut warnings = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(source, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = Row {
            file: source,
            line,
            record: &record,
            columns: &columns,
        };
        let region = parse_region_row(&row, &mut warnings)?;
        if let Some(first) = seen.insert(region.region_id.clone(), line) {
            return Err(row.err(
                "region_id",
                format!(
                    "duplicate region `{}` (first seen on line {first})",
                    region.region_id
                ),
            ));
        }
        regions.push(region);
    }
    if regions.is_empty() {
        return Err(Error::Schema(format!("{source}: no data rows")));
    }
    Ok((regions, warnings))
}

/// Parse `marital.csv` content into per-region male and female tables.
pub fn parse_marital<R: Read>(
    input: R,
    source: &str,
    upper_limit: f64,
) -> Result<BTreeMap<String, RegionTables>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    let columns = Columns::new(source, &header, &MARITAL_COLUMNS, &[])?;

    // (region, sex) → (first line, rows)
    let mut grouped: BTreeMap<(String, Sex), (u64, Vec<MaritalRow>)> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(source, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = Row {
            file: source,
            line,
            record: &record,
            columns: &columns,
        };
        let region_id = row.required("region_id")?.to_string();
        let sex: Sex = row
            .required("sex")?
            .parse()
            .map_err(|e: Error| row.err("sex", e.to_string()))?;
        let lower = row.required_real("age_lower")?;
        let upper = row.required_real("age_upper")?;
        let age_group =
            AgeGroup::new(lower, upper).map_err(|e| row.err("age_upper", e.to_string()))?;
        let total = row
            .count("total")?
            .ok_or_else(|| row.err("total", "required value is blank"))?;
        let never_married = row
            .count("never_married")?
            .ok_or_else(|| row.err("never_married", "required value is blank"))?;
        if never_married > total {
            return Err(row.err(
                "never_married",
                format!("never_married {never_married} exceeds total {total}"),
            ));
        }
        grouped
            .entry((region_id, sex))
            .or_insert_with(|| (line, Vec::new()))
            .1
            .push(MaritalRow {
                age_group,
                total,
                never_married,
            });
    }

    let mut tables: BTreeMap<
        String,
        (Option<MaritalStatusTable>, Option<MaritalStatusTable>, u64),
    > = BTreeMap::new();
    for ((region_id, sex), (line, rows)) in grouped {
        let table = MaritalStatusTable::new(sex, rows, upper_limit)
            .map_err(|e| data_err(source, line, None, format!("region `{region_id}`: {e}")))?;
        let entry = tables.entry(region_id).or_insert((None, None, line));
        match sex {
            Sex::Male => entry.0 = Some(table),
            Sex::Female => entry.1 = Some(table),
        }
    }
    tables
        .into_iter()
        .map(|(region_id, (male, female, line))| match (male, female) {
            (Some(male), Some(female)) => Ok((region_id, RegionTables { male, female })),
            (None, _) => Err(data_err(
                source,
                line,
                Some("sex"),
                format!("region `{region_id}` has no male rows"),
            )),
            (_, None) => Err(data_err(
                source,
                line,
                Some("sex"),
                format!("region `{region_id}` has no female rows"),
            )),
        })
        .collect()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Load and cross-validate a bundle.
pub fn load_bundle(config: &BundleConfig) -> Result<DatasetBundle> {
    if let Some(a) = config.default_alpha {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::invalid(
                "alpha",
                format!("must be non-negative, got {a}"),
            ));
        }
    }
    let regions_name = display_name(&config.regions);
    let (regions, warnings) = parse_regions(open(&config.regions)?, &regions_name)?;

    let (marital_tables, marital_name) = match &config.marital {
        Some(path) => {
            let name = display_name(path);
            (
                parse_marital(open(path)?, &name, config.upper_limit)?,
                Some(name),
            )
        }
        None => (BTreeMap::new(), None),
    };

    for id in marital_tables.keys() {
        if !regions.iter().any(|r| &r.region_id == id) {
            return Err(Error::Schema(format!(
                "{}: region `{id}` does not appear in {regions_name}",
                marital_name.as_deref().unwrap_or("marital tables")
            )));
        }
    }

    let mut provenance = BTreeMap::new();
    for r in &regions {
        let id = &r.region_id;
        let at = |col: &str| format!("{regions_name} line {} ({col})", r.line);
        if r.male_age.is_none() && !marital_tables.contains_key(id) {
            return Err(Error::MissingData {
                region: id.clone(),
                what: "neither a_m/a_f nor marital tables were supplied".into(),
            });
        }
        provenance.insert(
            format!("{id}.sex_ratio"),
            format!("{} as {}", at("srb_value"), r.srb_convention),
        );
        provenance.insert(format!("{id}.tfr"), at("tfr"));
        provenance.insert(
            format!("{id}.u5mr"),
            match r.mortality_source {
                MortalitySource::UnderFive if r.u5mr_is_proxy => {
                    format!("{}, flagged proxy", at("u5mr"))
                }
                MortalitySource::UnderFive => at("u5mr"),
                MortalitySource::InfantProxy => format!("{}, infant mortality proxy", at("u5mr")),
            },
        );
        if r.male_pop_15_54.is_some() {
            provenance.insert(format!("{id}.male_pop_15_54"), at("male_pop_15_54"));
        }
        let age_source = if r.male_age.is_some() {
            (at("a_m"), at("a_f"))
        } else {
            let file = marital_name.as_deref().unwrap_or("marital tables");
            (
                format!(
                    "SMAM from {file}, male rows, upper limit {}",
                    config.upper_limit
                ),
                format!(
                    "SMAM from {file}, female rows, upper limit {}",
                    config.upper_limit
                ),
            )
        };
        provenance.insert(format!("{id}.a_m"), age_source.0);
        provenance.insert(format!("{id}.a_f"), age_source.1);
        provenance.insert(
            format!("{id}.alpha"),
            match (r.alpha, config.default_alpha) {
                (Some(_), _) => at("alpha"),
                (None, Some(a)) => format!("bundle default {a}"),
                (None, None) => format!("global default {DEFAULT_BIRTH_INTERVAL}"),
            },
        );
    }

    Ok(DatasetBundle {
        regions,
        marital_tables,
        provenance,
        vintage: config.vintage.clone(),
        default_alpha: config.default_alpha,
        warnings,
    })
}

impl DatasetBundle {
    pub fn region(&self, region_id: &str) -> Option<&RegionRecord> {
        self.regions.iter().find(|r| r.region_id == region_id)
    }

    /// Deterministic JSON rendering of the bundle.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Full inputs for one region with its timing resolved.
    pub fn region_inputs(
        &self,
        region_id: &str,
        alpha_override: Option<f64>,
    ) -> Result<(RegionInputs, ResolvedTiming)> {
        let record = self.region(region_id).ok_or_else(|| Error::MissingData {
            region: region_id.to_string(),
            what: "region not in bundle".into(),
        })?;
        let resolved = resolve_timing(self, region_id, alpha_override)?;
        let inputs = RegionInputs {
            region_id: record.region_id.clone(),
            name: record.name.clone(),
            sex_ratio: record.sex_ratio,
            fertility: record.fertility,
            timing: resolved.timing,
            male_pop_15_54: record.male_pop_15_54,
            u5mr_is_proxy: record.u5mr_is_proxy,
        };
        Ok((inputs, resolved))
    }
}

/// Marriage ages from supplied values or SMAM, and the birth interval from
/// the override, the region row, the bundle default or the global default.
pub fn resolve_timing(
    bundle: &DatasetBundle,
    region_id: &str,
    alpha_override: Option<f64>,
) -> Result<ResolvedTiming> {
    let record = bundle.region(region_id).ok_or_else(|| Error::MissingData {
        region: region_id.to_string(),
        what: "region not in bundle".into(),
    })?;
    let (male_age, female_age, ages) = match (record.male_age, record.female_age) {
        (Some(m), Some(f)) => (m, f, AgeSource::Supplied),
        _ => {
            let tables =
                bundle
                    .marital_tables
                    .get(region_id)
                    .ok_or_else(|| Error::MissingData {
                        region: region_id.to_string(),
                        what: "neither a_m/a_f nor marital tables were supplied".into(),
                    })?;
            (
                smam::compute_smam(&tables.male)?,
                smam::compute_smam(&tables.female)?,
                AgeSource::Smam,
            )
        }
    };
    let (birth_interval, alpha) = match (alpha_override, record.alpha, bundle.default_alpha) {
        (Some(a), _, _) => (a, AlphaSource::Override),
        (None, Some(a), _) => (a, AlphaSource::Region),
        (None, None, Some(a)) => (a, AlphaSource::BundleDefault),
        (None, None, None) => (DEFAULT_BIRTH_INTERVAL, AlphaSource::GlobalDefault),
    };
    Ok(ResolvedTiming {
        timing: MarriageTiming::new(male_age, female_age, birth_interval)?,
        ages,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "region_id,name,srb_value,srb_convention,tfr,u5mr,u5mr_units,u5mr_is_proxy,male_pop_15_54,a_m,a_f,alpha\n";

    fn parse(body: &str) -> Result<(Vec<RegionRecord>, Vec<Warning>)> {
        parse_regions(format!("{HEADER}{body}").as_bytes(), "regions.csv")
    }

    #[test]
    fn parses_minimal_rows() {
        let (regions, warnings) = parse(
            "A,Alpha,1.0,females_per_male,2.0,0,proportion,false,1000,26,21,\n\
             B,Beta,118,males_per_100_females,2.4,52,per_1000,,,,,2.5\n",
        )
        .unwrap();
        assert!(warnings.is_empty());
        assert_eq!(regions.len(), 2);
        assert_eq!(regions[0].male_age, Some(26.0));
        assert_eq!(regions[0].alpha, None);
        assert!((regions[1].sex_ratio.females_per_male() - 100.0 / 118.0).abs() < 1e-15);
        assert!((regions[1].fertility.u5mr() - 0.052).abs() < 1e-15);
        assert_eq!(regions[1].male_pop_15_54, None);
        assert_eq!(regions[1].alpha, Some(2.5));
        assert_eq!(regions[1].line, 3);
    }

    #[test]
    fn imr_units_force_proxy() {
        let (regions, warnings) =
            parse("M,Mizoram,970,females_per_1000_males,2.9,21,imr_per_1000,false,,27,23,\n")
                .unwrap();
        assert!(regions[0].u5mr_is_proxy);
        assert_eq!(regions[0].mortality_source, MortalitySource::InfantProxy);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn errors_name_row_and_column() {
        let err =
            parse("A,Alpha,1.0,females_per_male,abc,0,proportion,false,,26,21,\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("regions.csv: row 2, column `tfr`"), "{msg}");

        let err = parse("A,Alpha,1.0,females_per_male,2,0,proportion,maybe,,26,21,\n").unwrap_err();
        assert!(err.to_string().contains("u5mr_is_proxy"), "{err}");

        let err = parse("A,Alpha,-3,females_per_male,2,0,proportion,,,26,21,\n").unwrap_err();
        assert!(err.to_string().contains("srb_value"), "{err}");

        let err = parse("A,Alpha,1,females_per_male,2,1.2,proportion,,,26,21,\n").unwrap_err();
        assert!(err.to_string().contains("column `u5mr`"), "{err}");

        let err = parse("A,Alpha,1,females_per_male,2,0.1,proportion,,-5,26,21,\n").unwrap_err();
        assert!(err.to_string().contains("male_pop_15_54"), "{err}");

        let err = parse("A,Alpha,1,females_per_male,2,0.1,proportion,,,26,,\n").unwrap_err();
        assert!(err.to_string().contains("column `a_f`"), "{err}");
    }

    #[test]
    fn duplicate_region_rejected() {
        let err = parse(
            "A,Alpha,1.0,females_per_male,2.0,0,proportion,false,,26,21,\n\
             A,Again,1.0,females_per_male,2.0,0,proportion,false,,26,21,\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate region `A`"), "{err}");
    }

    #[test]
    fn missing_column_rejected() {
        let err = parse_regions("region_id,name\nA,B\n".as_bytes(), "regions.csv").unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn optional_columns_may_be_absent() {
        let text = "region_id,name,srb_value,srb_convention,tfr,u5mr,u5mr_units,u5mr_is_proxy,male_pop_15_54\n\
                    A,Alpha,0.95,females_per_male,2.1,0.03,proportion,false,10\n";
        let (regions, _) = parse_regions(text.as_bytes(), "regions.csv").unwrap();
        assert_eq!(regions[0].male_age, None);
    }

    #[test]
    fn implausible_ratio_warns() {
        let (_, warnings) =
            parse("A,Alpha,1.7,females_per_male,2.0,0,proportion,false,,26,21,\n").unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].location.column.as_deref(), Some("srb_value"));
    }

    fn marital_text(region: &str, never_20_24: u64) -> String {
        let mut s = String::new();
        for sex in ["male", "female"] {
            for lower in (15..55).step_by(5) {
                let never = match lower {
                    15 => 100,
                    20 => never_20_24,
                    _ => 0,
                };
                s.push_str(&format!(
                    "{region},{sex},{lower},{},100,{never}\n",
                    lower + 5
                ));
            }
        }
        s
    }

    #[test]
    fn marital_tables_group_by_region_and_sex() {
        let text = format!(
            "region_id,sex,age_lower,age_upper,total,never_married\n{}{}",
            marital_text("A", 0),
            marital_text("B", 100)
        );
        let tables = parse_marital(text.as_bytes(), "marital.csv", 50.0).unwrap();
        assert_eq!(tables.len(), 2);
        assert_eq!(smam::compute_smam(&tables["A"].male).unwrap(), 20.0);
        assert_eq!(smam::compute_smam(&tables["B"].female).unwrap(), 25.0);
    }

    #[test]
    fn marital_never_above_total_names_row() {
        let text = "region_id,sex,age_lower,age_upper,total,never_married\nA,male,15,20,10,11\n";
        let err = parse_marital(text.as_bytes(), "marital.csv", 50.0).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("marital.csv: row 2, column `never_married`"),
            "{msg}"
        );
    }

    #[test]
    fn marital_requires_both_sexes() {
        let text = "region_id,sex,age_lower,age_upper,total,never_married\n\
                    A,male,15,50,10,1\nA,male,50,55,10,0\n";
        let err = parse_marital(text.as_bytes(), "marital.csv", 50.0).unwrap_err();
        assert!(err.to_string().contains("no female rows"), "{err}");
    }
}
