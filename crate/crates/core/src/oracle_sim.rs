//! Independent checks of the closed-form index.
//!
//! [`generate_stable_series`] builds a birth series that satisfies the
//! female renewal recursion `F_t = r̃ · S/(1+S) · F_{t−(A_f+α)}` by solving
//! for the growth rate numerically. [`stable_cohort_ratio`] then reads the
//! men-to-women ratio at marriage straight off that series, and
//! [`run_matching_microsim`] pairs yearly marriage cohorts one-to-one.
//! Neither path evaluates the index formula.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{MarriageTiming, SexRatioAtBirth};

/// Yearly male and female births starting at `start_year`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CohortSeries {
    start_year: i64,
    male_births: Vec<f64>,
    female_births: Vec<f64>,
}

impl CohortSeries {
    pub fn new(start_year: i64, male_births: Vec<f64>, female_births: Vec<f64>) -> Result<Self> {
        if male_births.len() != female_births.len() {
            return Err(Error::Config(format!(
                "male ({}) and female ({}) birth series differ in length",
                male_births.len(),
                female_births.len()
            )));
        }
        if male_births.is_empty() {
            return Err(Error::Config("birth series is empty".into()));
        }
        if let Some(bad) = male_births
            .iter()
            .chain(&female_births)
            .find(|b| !b.is_finite() || **b <= 0.0)
        {
            return Err(Error::Config(format!(
                "births must be positive and finite, got {bad}"
            )));
        }
        Ok(CohortSeries {
            start_year,
            male_births,
            female_births,
        })
    }

    pub fn start_year(&self) -> i64 {
        self.start_year
    }

    pub fn years(&self) -> usize {
        self.male_births.len()
    }

    pub fn last_year(&self) -> i64 {
        self.start_year + self.years() as i64 - 1
    }

    pub fn male_births(&self) -> &[f64] {
        &self.male_births
    }

    pub fn female_births(&self) -> &[f64] {
        &self.female_births
    }

    /// Male births at a real-valued time, log-linear between yearly points.
    pub fn male_at(&self, time: f64) -> Result<f64> {
        self.interpolate(&self.male_births, time)
    }

    /// Female births at a real-valued time, log-linear between yearly points.
    pub fn female_at(&self, time: f64) -> Result<f64> {
        self.interpolate(&self.female_births, time)
    }

    // Log-linear interpolation reproduces a geometric series exactly.
    fn interpolate(&self, values: &[f64], time: f64) -> Result<f64> {
        let offset = time - self.start_year as f64;
        let last = (values.len() - 1) as f64;
        if !offset.is_finite() || offset < 0.0 || offset > last {
            return Err(Error::Range {
                year: time,
                first: self.start_year,
                last: self.last_year(),
            });
        }
        let lo = offset.floor() as usize;
        let frac = offset - lo as f64;
        if frac == 0.0 {
            return Ok(values[lo]);
        }
        let (a, b) = (values[lo], values[lo + 1]);
        Ok(a * (b / a).powf(frac))
    }
}

/// Growth rate at which the female renewal recursion is stationary:
/// the root of `female_share · r̃ · e^(−n·τ) = 1`, found by bisection.
pub fn renewal_growth_rate(
    sex_ratio: SexRatioAtBirth,
    rt: f64,
    generation_length: f64,
) -> Result<f64> {
    if !rt.is_finite() || rt <= 0.0 {
        return Err(Error::Domain(format!(
            "effective fertility must be positive, got {rt}"
        )));
    }
    if !generation_length.is_finite() || generation_length <= 0.0 {
        return Err(Error::Domain("generation length must be positive".into()));
    }
    let replacement = sex_ratio.female_share() * rt;
    // decreasing in n
    let excess = |n: f64| replacement * (-n * generation_length).exp() - 1.0;

    let (mut lo, mut hi) = (-1.0, 1.0);
    while excess(lo) < 0.0 {
        lo *= 2.0;
        if lo < -1e6 {
            return Err(Error::Domain("renewal rate not bracketed".into()));
        }
    }
    while excess(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Domain("renewal rate not bracketed".into()));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let e = excess(mid);
        if e == 0.0 {
            return Ok(mid);
        }
        if e > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller residual
    Ok(if excess(lo).abs() <= excess(hi).abs() {
        lo
    } else {
        hi
    })
}

/// Years of history needed before every marriage-age and birth lookback exists.
pub fn required_horizon(timing: &MarriageTiming) -> usize {
    (timing.male_age() + timing.female_age() + timing.birth_interval()).ceil() as usize
}

/// Stable birth series `B_t = b0 · e^(n t)`, split by the sex ratio at birth.
pub fn generate_stable_series(
    sex_ratio: SexRatioAtBirth,
    rt: f64,
    timing: &MarriageTiming,
    years: usize,
    b0: f64,
) -> Result<CohortSeries> {
    let needed = required_horizon(timing);
    if years < needed.max(2) {
        return Err(Error::Config(format!(
            "horizon of {years} years is shorter than the {needed} years of lookback required"
        )));
    }
    if !b0.is_finite() || b0 <= 0.0 {
        return Err(Error::Config(format!(
            "initial births must be positive, got {b0}"
        )));
    }
    let n = renewal_growth_rate(sex_ratio, rt, timing.generation_length())?;
    let female_share = sex_ratio.female_share();
    let male_share = 1.0 / (1.0 + sex_ratio.females_per_male());
    let (male, female): (Vec<f64>, Vec<f64>) = (0..years)
        .map(|t| {
            let births = b0 * (n * t as f64).exp();
            (births * male_share, births * female_share)
        })
        .unzip();
    CohortSeries::new(0, male, female)
}

/// Largest relative violation of `F_t = r̃ · S/(1+S) · F_{t−(A_f+α)}` over
/// every year whose lookback lies inside the series.
pub fn max_renewal_residual(
    series: &CohortSeries,
    sex_ratio: SexRatioAtBirth,
    rt: f64,
    timing: &MarriageTiming,
) -> Result<f64> {
    let lag = timing.generation_length();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for (i, &f) in series.female_births.iter().enumerate() {
        let year = series.start_year as f64 + i as f64;
        let mothers = match series.female_at(year - lag) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let predicted = rt * sex_ratio.female_share() * mothers;
        worst = worst.max(((f - predicted) / f).abs());
        checked += 1;
    }
    if checked == 0 {
        return Err(Error::Config(
            "series too short for any renewal lookback".into(),
        ));
    }
    Ok(worst)
}

/// Men reaching marriage age in `at_year` per woman reaching it:
/// `M(at_year − A_m) / F(at_year − A_f)`, at exact real ages.
pub fn stable_cohort_ratio(
    series: &CohortSeries,
    timing: &MarriageTiming,
    at_year: i64,
) -> Result<f64> {
    let t = at_year as f64;
    let men = series.male_at(t - timing.male_age())?;
    let women = series.female_at(t - timing.female_age())?;
    Ok(men / women)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CohortMode {
    /// Real-valued cohort sizes.
    #[default]
    Fractional,
    /// Cohort sizes rounded half-up to whole persons.
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub year: i64,
    pub male_births: f64,
    pub female_births: f64,
    pub men_at_marriage: f64,
    pub women_at_marriage: f64,
    pub matches: f64,
    pub unmatched_men: f64,
    pub unmatched_women: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicrosimOutcome {
    pub unmatched_male_share: f64,
    pub unmatched_female_share: f64,
    /// Years counted toward the shares.
    pub counted_years: usize,
    pub trajectory: Vec<TrajectoryRow>,
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Match each year's men aged `round(A_m)` with women aged `round(A_f)`.
/// Unmatched people leave the market. Shares accumulate over years after
/// the first `burn_in` years of the series.
pub fn run_matching_microsim(
    series: &CohortSeries,
    timing: &MarriageTiming,
    burn_in: usize,
    mode: CohortMode,
) -> Result<MicrosimOutcome> {
    let male_lag = round_half_up(timing.male_age()) as usize;
    let female_lag = round_half_up(timing.female_age()) as usize;
    let lookback = male_lag.max(female_lag);
    let years = series.years();
    if years <= burn_in + lookback {
        return Err(Error::Config(format!(
            "horizon of {years} years does not exceed burn-in {burn_in} plus marriage age {lookback}"
        )));
    }
    let size = |x: f64| match mode {
        CohortMode::Fractional => x,
        CohortMode::Integer => round_half_up(x),
    };

    let mut trajectory = Vec::with_capacity(years - lookback);
    let (mut men_total, mut women_total) = (0.0, 0.0);
    let (mut men_left, mut women_left) = (0.0, 0.0);
    let mut counted_years = 0;
    for i in lookback..years {
        let men = size(series.male_births[i - male_lag]);
        let women = size(series.female_births[i - female_lag]);
        let matches = men.min(women);
        let row = TrajectoryRow {
            year: series.start_year + i as i64,
            male_births: series.male_births[i],
            female_births: series.female_births[i],
            men_at_marriage: men,
            women_at_marriage: women,
            matches,
            unmatched_men: men - matches,
            unmatched_women: women - matches,
        };
        if i >= burn_in {
            men_total += men;
            women_total += women;
            men_left += row.unmatched_men;
            women_left += row.unmatched_women;
            counted_years += 1;
        }
        trajectory.push(row);
    }
    let share = |left: f64, total: f64| if total > 0.0 { left / total } else { 0.0 };
    Ok(MicrosimOutcome {
        unmatched_male_share: share(men_left, men_total),
        unmatched_female_share: share(women_left, women_total),
        counted_years,
        trajectory,
    })
}
