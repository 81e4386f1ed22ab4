//! Domain vocabulary shared by every other module.
//!
//! All types validate on construction and are immutable afterwards. The sex
//! ratio at birth is held internally as females per male; other census
//! conventions are converted at the boundary with [`canonicalize_sex_ratio`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marriage-to-first-birth interval used when nothing else is supplied.
pub const DEFAULT_BIRTH_INTERVAL: f64 = 2.0;

/// Half-width of the band around 1 inside which an index counts as balanced.
pub const DEFAULT_BALANCE_TOLERANCE: f64 = 0.005;

/// Females born per male born.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SexRatioAtBirth(f64);

impl SexRatioAtBirth {
    pub fn new(females_per_male: f64) -> Result<Self> {
        if !females_per_male.is_finite() {
            return Err(Error::invalid("sex_ratio", "must be finite"));
        }
        if females_per_male <= 0.0 {
            return Err(Error::invalid(
                "sex_ratio",
                format!("must be positive, got {females_per_male}"),
            ));
        }
        Ok(SexRatioAtBirth(females_per_male))
    }

    pub fn females_per_male(self) -> f64 {
        self.0
    }

    /// Share of births that are female, `S / (1 + S)`.
    pub fn female_share(self) -> f64 {
        self.0 / (1.0 + self.0)
    }

    /// Express this ratio in another convention.
    pub fn to_convention(self, convention: SexRatioConvention) -> f64 {
        match convention {
            SexRatioConvention::FemalesPerMale => self.0,
            SexRatioConvention::FemalesPer1000Males => self.0 * 1000.0,
            SexRatioConvention::MalesPer100Females => 100.0 / self.0,
        }
    }
}

impl TryFrom<f64> for SexRatioAtBirth {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        SexRatioAtBirth::new(value)
    }
}

impl From<SexRatioAtBirth> for f64 {
    fn from(value: SexRatioAtBirth) -> f64 {
        value.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SexRatioConvention {
    FemalesPerMale,
    FemalesPer1000Males,
    MalesPer100Females,
}

impl SexRatioConvention {
    pub const ALL: [SexRatioConvention; 3] = [
        SexRatioConvention::FemalesPerMale,
        SexRatioConvention::FemalesPer1000Males,
        SexRatioConvention::MalesPer100Females,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SexRatioConvention::FemalesPerMale => "females_per_male",
            SexRatioConvention::FemalesPer1000Males => "females_per_1000_males",
            SexRatioConvention::MalesPer100Females => "males_per_100_females",
        }
    }
}

impl fmt::Display for SexRatioConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SexRatioConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SexRatioConvention::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| {
                Error::invalid(
                    "srb_convention",
                    format!(
                        "unknown convention `{s}` (expected females_per_male, \
                         females_per_1000_males or males_per_100_females)"
                    ),
                )
            })
    }
}

/// Convert a sex ratio reported under `convention` into females per male.
pub fn canonicalize_sex_ratio(
    value: f64,
    convention: SexRatioConvention,
) -> Result<SexRatioAtBirth> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::invalid(
            "sex_ratio",
            format!("{convention} value must be positive and finite, got {value}"),
        ));
    }
    let females_per_male = match convention {
        SexRatioConvention::FemalesPerMale => value,
        SexRatioConvention::FemalesPer1000Males => value / 1000.0,
        SexRatioConvention::MalesPer100Females => 100.0 / value,
    };
    SexRatioAtBirth::new(females_per_male)
}

/// How an under-five mortality figure is expressed on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MortalityUnits {
    Proportion,
    Per1000,
}

impl MortalityUnits {
    pub fn to_proportion(self, value: f64) -> f64 {
        match self {
            MortalityUnits::Proportion => value,
            MortalityUnits::Per1000 => value / 1000.0,
        }
    }
}

/// Total fertility and the share of births that die before age five.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFertility")]
pub struct FertilityInputs {
    tfr: f64,
    u5mr: f64,
}

impl FertilityInputs {
    pub fn new(tfr: f64, u5mr: f64) -> Result<Self> {
        if !tfr.is_finite() || tfr <= 0.0 {
            return Err(Error::invalid(
                "tfr",
                format!("must be positive and finite, got {tfr}"),
            ));
        }
        if !u5mr.is_finite() || !(0.0..1.0).contains(&u5mr) {
            return Err(Error::invalid(
                "u5mr",
                format!("must be a proportion in [0, 1), got {u5mr}"),
            ));
        }
        Ok(FertilityInputs { tfr, u5mr })
    }

    pub fn with_units(tfr: f64, mortality: f64, units: MortalityUnits) -> Result<Self> {
        FertilityInputs::new(tfr, units.to_proportion(mortality))
    }

    pub fn tfr(&self) -> f64 {
        self.tfr
    }

    pub fn u5mr(&self) -> f64 {
        self.u5mr
    }
}

/// Mean ages at first marriage and the marriage-to-first-birth interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTiming")]
pub struct MarriageTiming {
    male_age: f64,
    female_age: f64,
    birth_interval: f64,
}

impl MarriageTiming {
    pub fn new(male_age: f64, female_age: f64, birth_interval: f64) -> Result<Self> {
        for (field, v) in [
            ("male_age", male_age),
            ("female_age", female_age),
            ("birth_interval", birth_interval),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        if male_age <= 0.0 {
            return Err(Error::invalid(
                "male_age",
                format!("must be positive, got {male_age}"),
            ));
        }
        if female_age <= 0.0 {
            return Err(Error::invalid(
                "female_age",
                format!("must be positive, got {female_age}"),
            ));
        }
        if birth_interval < 0.0 {
            return Err(Error::invalid(
                "birth_interval",
                format!("must be non-negative, got {birth_interval}"),
            ));
        }
        Ok(MarriageTiming {
            male_age,
            female_age,
            birth_interval,
        })
    }

    pub fn male_age(&self) -> f64 {
        self.male_age
    }

    pub fn female_age(&self) -> f64 {
        self.female_age
    }

    pub fn birth_interval(&self) -> f64 {
        self.birth_interval
    }

    /// Spousal age gap, male minus female. May be negative.
    pub fn age_gap(&self) -> f64 {
        self.male_age - self.female_age
    }

    /// Mean age of mothers at birth, `A_f + α`: the generation length.
    pub fn generation_length(&self) -> f64 {
        self.female_age + self.birth_interval
    }

    pub fn with_birth_interval(self, birth_interval: f64) -> Result<Self> {
        MarriageTiming::new(self.male_age, self.female_age, birth_interval)
    }
}

#[derive(Deserialize)]
struct RawFertility {
    tfr: f64,
    u5mr: f64,
}

impl TryFrom<RawFertility> for FertilityInputs {
    type Error = Error;

    fn try_from(raw: RawFertility) -> Result<Self> {
        FertilityInputs::new(raw.tfr, raw.u5mr)
    }
}

#[derive(Deserialize)]
struct RawTiming {
    male_age: f64,
    female_age: f64,
    birth_interval: f64,
}

impl TryFrom<RawTiming> for MarriageTiming {
    type Error = Error;

    fn try_from(raw: RawTiming) -> Result<Self> {
        MarriageTiming::new(raw.male_age, raw.female_age, raw.birth_interval)
    }
}

/// One region's demographic parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionInputs {
    pub region_id: String,
    pub name: String,
    pub sex_ratio: SexRatioAtBirth,
    pub fertility: FertilityInputs,
    pub timing: MarriageTiming,
    pub male_pop_15_54: Option<u64>,
    pub u5mr_is_proxy: bool,
}

/// Absolute surplus of men under both share conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurplusMen {
    /// `round(pop × (sgi − 1))`
    pub paper: i64,
    /// `round(pop × (1 − 1/sgi))`
    pub ratio: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgiResult {
    pub effective_fertility: f64,
    pub growth_rate: f64,
    pub sgi: f64,
    pub balanced: bool,
    pub surplus_share_paper: f64,
    pub surplus_share_ratio: f64,
    pub surplus_men: Option<SurplusMen>,
}
