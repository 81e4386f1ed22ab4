//! Singulate mean age at marriage from proportions never married by age.
//!
//! Uses the Hajnal discrete procedure. With `p_i` the proportion single in
//! age group `i` of width `w_i`, starting from the table's first lower bound
//! `a0`:
//!
//! ```text
//! SS   = a0 + Σ w_i · p_i          over groups ending at or before ω
//! U(ω) = (p[group ending at ω] + p[group starting at ω]) / 2
//! SMAM = (SS − ω · U(ω)) / (1 − U(ω))
//! ```
//!
//! When everybody eventually marries before ω this is exactly the mean age
//! at first marriage of a stationary population.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_UPPER_LIMIT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Male => "male",
            Sex::Female => "female",
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Sex::Male),
            "female" | "f" => Ok(Sex::Female),
            other => Err(Error::invalid(
                "sex",
                format!("expected male or female, got `{other}`"),
            )),
        }
    }
}

/// Half-open age interval `[lower, upper)` in years.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeGroup {
    pub lower: f64,
    pub upper: f64,
}

impl AgeGroup {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower < 0.0 || upper <= lower {
            return Err(Error::invalid(
                "age_group",
                format!("[{lower}, {upper}) is not a valid age interval"),
            ));
        }
        Ok(AgeGroup { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl fmt::Display for AgeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaritalRow {
    pub age_group: AgeGroup,
    pub total: u64,
    pub never_married: u64,
}

/// Counts by age group and never-married status for one sex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaritalStatusTable {
    sex: Sex,
    rows: Vec<MaritalRow>,
    upper_limit: f64,
}

impl MaritalStatusTable {
    /// Validates and sorts the rows. Groups must be contiguous, start at or
    /// below 15, and include both the group ending at `upper_limit` and the
    /// group starting there.
    pub fn new(sex: Sex, mut rows: Vec<MaritalRow>, upper_limit: f64) -> Result<Self> {
        if !upper_limit.is_finite() || upper_limit <= 15.0 {
            return Err(Error::invalid(
                "upper_limit",
                format!("must exceed 15, got {upper_limit}"),
            ));
        }
        if rows.is_empty() {
            return Err(Error::Schema(format!("{sex} marital table has no rows")));
        }
        for row in &rows {
            if row.never_married > row.total {
                return Err(Error::invalid(
                    "never_married",
                    format!(
                        "{sex} age group {}: never_married {} exceeds total {}",
                        row.age_group, row.never_married, row.total
                    ),
                ));
            }
        }
        rows.sort_by(|a, b| a.age_group.lower.total_cmp(&b.age_group.lower));
        for pair in rows.windows(2) {
            let (a, b) = (pair[0].age_group, pair[1].age_group);
            if a.upper != b.lower {
                return Err(Error::Schema(format!(
                    "{sex} age groups {a} and {b} are not contiguous"
                )));
            }
        }
        let first = rows[0].age_group.lower;
        if first > 15.0 {
            return Err(Error::Schema(format!(
                "{sex} table starts at age {first}; coverage from 15 is required"
            )));
        }
        if !rows.iter().any(|r| r.age_group.upper == upper_limit) {
            return Err(Error::Schema(format!(
                "{sex} table has no age group ending at the upper limit {upper_limit}"
            )));
        }
        if !rows.iter().any(|r| r.age_group.lower == upper_limit) {
            return Err(Error::Schema(format!(
                "{sex} table has no age group starting at the upper limit {upper_limit}"
            )));
        }
        Ok(MaritalStatusTable {
            sex,
            rows,
            upper_limit,
        })
    }

    pub fn sex(&self) -> Sex {
        self.sex
    }

    pub fn rows(&self) -> &[MaritalRow] {
        &self.rows
    }

    pub fn upper_limit(&self) -> f64 {
        self.upper_limit
    }
}

fn proportion(row: &MaritalRow) -> Result<f64> {
    if row.total == 0 {
        return Err(Error::DegenerateCell {
            age_group: row.age_group.to_string(),
        });
    }
    Ok(row.never_married as f64 / row.total as f64)
}

/// Proportion never married in every row of the table.
pub fn proportions_single(table: &MaritalStatusTable) -> Result<Vec<(AgeGroup, f64)>> {
    table
        .rows
        .iter()
        .map(|row| Ok((row.age_group, proportion(row)?)))
        .collect()
}

/// Singulate mean age at marriage in years.
pub fn compute_smam(table: &MaritalStatusTable) -> Result<f64> {
    let omega = table.upper_limit;
    let base = table.rows[0].age_group.lower;

    let mut person_years_single = base;
    let mut at_omega_below = None;
    let mut at_omega_above = None;
    for row in &table.rows {
        let group = row.age_group;
        if group.upper <= omega {
            let p = proportion(row)?;
            person_years_single += group.width() * p;
            if group.upper == omega {
                at_omega_below = Some(p);
            }
        } else if group.lower == omega {
            at_omega_above = Some(proportion(row)?);
        }
    }
    let (below, above) = match (at_omega_below, at_omega_above) {
        (Some(b), Some(a)) => (b, a),
        _ => {
            return Err(Error::Schema(format!(
                "age groups adjacent to the upper limit {omega} are missing"
            )))
        }
    };
    let never_marrying = 0.5 * (below + above);
    if never_marrying >= 1.0 {
        return Err(Error::UndefinedSmam);
    }
    Ok((person_years_single - omega * never_marrying) / (1.0 - never_marrying))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn five_year_table(sex: Sex, props: &[f64], above: f64) -> MaritalStatusTable {
        // 15-19 .. 45-49 then 50-54
        assert_eq!(props.len(), 7);
        let mut rows: Vec<MaritalRow> = props
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let lower = 15.0 + 5.0 * i as f64;
                MaritalRow {
                    age_group: AgeGroup::new(lower, lower + 5.0).unwrap(),
                    total: 1_000_000,
                    never_married: (p * 1_000_000.0).round() as u64,
                }
            })
            .collect();
        rows.push(MaritalRow {
            age_group: AgeGroup::new(50.0, 55.0).unwrap(),
            total: 1_000_000,
            never_married: (above * 1_000_000.0).round() as u64,
        });
        MaritalStatusTable::new(sex, rows, 50.0).unwrap()
    }

    fn row(lower: f64, upper: f64, total: u64, never: u64) -> MaritalRow {
        MaritalRow {
            age_group: AgeGroup::new(lower, upper).unwrap(),
            total,
            never_married: never,
        }
    }

    #[test]
    fn proportions_examples() {
        let mut rows = vec![row(15.0, 20.0, 100, 100), row(20.0, 25.0, 80, 20)];
        for lower in (25..50).step_by(5) {
            rows.push(row(lower as f64, lower as f64 + 5.0, 200, 0));
        }
        rows.push(row(50.0, 55.0, 10, 0));
        let t = MaritalStatusTable::new(Sex::Male, rows, 50.0).unwrap();
        let p = proportions_single(&t).unwrap();
        assert_eq!(p[0].1, 1.0);
        assert_eq!(p[1].1, 0.25);
        assert_eq!(p[6].1, 0.0);
    }

    #[test]
    fn zero_total_is_degenerate() {
        let mut rows = vec![row(15.0, 20.0, 100, 100), row(20.0, 25.0, 0, 0)];
        for lower in (25..55).step_by(5) {
            rows.push(row(lower as f64, lower as f64 + 5.0, 200, 0));
        }
        let t = MaritalStatusTable::new(Sex::Female, rows, 50.0).unwrap();
        match proportions_single(&t).unwrap_err() {
            Error::DegenerateCell { age_group } => assert_eq!(age_group, "[20, 25)"),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            compute_smam(&t),
            Err(Error::DegenerateCell { .. })
        ));
    }

    #[test]
    fn everyone_married_before_fifteen() {
        let t = five_year_table(Sex::Male, &[0.0; 7], 0.0);
        assert_eq!(compute_smam(&t).unwrap(), 15.0);
    }

    #[test]
    fn universal_marriage_at_twenty() {
        let t = five_year_table(Sex::Female, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0);
        assert_eq!(compute_smam(&t).unwrap(), 20.0);
    }

    #[test]
    fn nobody_marries_is_undefined() {
        let t = five_year_table(Sex::Male, &[1.0; 7], 1.0);
        assert!(matches!(compute_smam(&t), Err(Error::UndefinedSmam)));
    }

    #[test]
    fn constant_never_marrying_share_leaves_smam_at_base() {
        // 10% never marry, everyone else married before 15
        let t = five_year_table(Sex::Male, &[0.1; 7], 0.1);
        assert!((compute_smam(&t).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn never_married_above_total_rejected() {
        let rows = vec![row(15.0, 50.0, 10, 11), row(50.0, 55.0, 10, 0)];
        let err = MaritalStatusTable::new(Sex::Male, rows, 50.0).unwrap_err();
        assert!(err.to_string().contains("exceeds total"), "{err}");
    }

    #[test]
    fn schema_gaps_rejected() {
        let gap = vec![
            row(15.0, 20.0, 1, 1),
            row(25.0, 50.0, 1, 0),
            row(50.0, 55.0, 1, 0),
        ];
        assert!(matches!(
            MaritalStatusTable::new(Sex::Male, gap, 50.0),
            Err(Error::Schema(_))
        ));
        let late = vec![row(20.0, 50.0, 1, 1), row(50.0, 55.0, 1, 0)];
        assert!(MaritalStatusTable::new(Sex::Male, late, 50.0).is_err());
        let no_tail = vec![row(15.0, 50.0, 1, 1)];
        assert!(MaritalStatusTable::new(Sex::Male, no_tail, 50.0).is_err());
        let misaligned = vec![row(15.0, 48.0, 1, 1), row(48.0, 53.0, 1, 0)];
        assert!(MaritalStatusTable::new(Sex::Male, misaligned, 50.0).is_err());
    }

    #[test]
    fn rows_are_sorted_on_construction() {
        let rows = vec![row(50.0, 55.0, 10, 0), row(15.0, 50.0, 10, 5)];
        let t = MaritalStatusTable::new(Sex::Female, rows, 50.0).unwrap();
        assert_eq!(t.rows()[0].age_group.lower, 15.0);
        // SS = 15 + 35·0.5, U = 0.25
        let expected = (15.0 + 17.5 - 50.0 * 0.25) / 0.75;
        assert!((compute_smam(&t).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn sex_parses() {
        assert_eq!("Male".parse::<Sex>().unwrap(), Sex::Male);
        assert_eq!("f".parse::<Sex>().unwrap(), Sex::Female);
        assert!("x".parse::<Sex>().is_err());
    }
}
