//! Effective fertility, stable growth rate, imbalance condition and the
//! Surplus Groom Index.
//!
//! With `S` females per male at birth, effective fertility `r̃`, mean
//! marriage ages `A_m`, `A_f` and marriage-to-birth interval `α`:
//!
//! ```text
//! r̃   = r · (1 − u)
//! n   = [ln r̃ + ln(S / (1 + S))] / (A_f + α)
//! SGI = (1 / S) · [(1 + S) / (r̃ · S)]^(ΔA / (A_f + α))
//! ```
//!
//! `SGI ≥ 1` exactly when `n · ΔA + ln S ≤ 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    FertilityInputs, MarriageTiming, SexRatioAtBirth, SgiResult, SurplusMen,
    DEFAULT_BALANCE_TOLERANCE,
};

/// Exponential growth rate of a stable population, per year.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct GrowthRate(f64);

impl GrowthRate {
    pub fn new(per_year: f64) -> Result<Self> {
        if !per_year.is_finite() {
            return Err(Error::Domain(format!(
                "growth rate must be finite, got {per_year}"
            )));
        }
        Ok(GrowthRate(per_year))
    }

    pub fn per_year(self) -> f64 {
        self.0
    }
}

/// Births per woman that survive to age five.
pub fn effective_fertility(fertility: &FertilityInputs) -> f64 {
    fertility.tfr() * (1.0 - fertility.u5mr())
}

fn check_inputs(rt: f64, timing: &MarriageTiming) -> Result<()> {
    if !rt.is_finite() || rt <= 0.0 {
        return Err(Error::Domain(format!(
            "effective fertility must be positive and finite, got {rt}"
        )));
    }
    if timing.generation_length() <= 0.0 {
        return Err(Error::Domain(
            "female marriage age plus birth interval must be positive".into(),
        ));
    }
    Ok(())
}

pub fn growth_rate(
    rt: f64,
    sex_ratio: SexRatioAtBirth,
    timing: &MarriageTiming,
) -> Result<GrowthRate> {
    check_inputs(rt, timing)?;
    let n = (rt.ln() + sex_ratio.female_share().ln()) / timing.generation_length();
    GrowthRate::new(n)
}

/// `n · ΔA + ln S`. Non-positive values mean a surplus of grooms.
pub fn imbalance_condition(
    n: GrowthRate,
    sex_ratio: SexRatioAtBirth,
    timing: &MarriageTiming,
) -> f64 {
    n.per_year() * timing.age_gap() + sex_ratio.females_per_male().ln()
}

/// Raw index value in the reciprocal-power form.
pub fn sgi_value(sex_ratio: SexRatioAtBirth, rt: f64, timing: &MarriageTiming) -> Result<f64> {
    check_inputs(rt, timing)?;
    let s = sex_ratio.females_per_male();
    let exponent = timing.age_gap() / timing.generation_length();
    Ok((1.0 / s) * ((1.0 + s) / (rt * s)).powf(exponent))
}

/// Raw index value in the expanded form
/// `(1 + S)^k / (S^(1 + k) · r̃^k)` with `k = ΔA / (A_f + α)`.
pub fn sgi_value_expanded(
    sex_ratio: SexRatioAtBirth,
    rt: f64,
    timing: &MarriageTiming,
) -> Result<f64> {
    check_inputs(rt, timing)?;
    let s = sex_ratio.females_per_male();
    let k = timing.age_gap() / timing.generation_length();
    Ok((1.0 + s).powf(k) / (s.powf(1.0 + k) * rt.powf(k)))
}

pub fn compute_sgi(
    sex_ratio: SexRatioAtBirth,
    rt: f64,
    timing: &MarriageTiming,
) -> Result<SgiResult> {
    compute_sgi_with_tolerance(sex_ratio, rt, timing, DEFAULT_BALANCE_TOLERANCE)
}

pub fn compute_sgi_with_tolerance(
    sex_ratio: SexRatioAtBirth,
    rt: f64,
    timing: &MarriageTiming,
    tolerance: f64,
) -> Result<SgiResult> {
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(Error::invalid(
            "tolerance",
            format!("must be non-negative, got {tolerance}"),
        ));
    }
    let n = growth_rate(rt, sex_ratio, timing)?;
    let sgi = sgi_value(sex_ratio, rt, timing)?;
    if !sgi.is_finite() || sgi <= 0.0 {
        return Err(Error::Domain(format!("index evaluated to {sgi}")));
    }
    Ok(SgiResult {
        effective_fertility: rt,
        growth_rate: n.per_year(),
        sgi,
        balanced: (sgi - 1.0).abs() <= tolerance,
        surplus_share_paper: sgi - 1.0,
        surplus_share_ratio: 1.0 - 1.0 / sgi,
        surplus_men: None,
    })
}

/// Absolute surplus of men in a base population under both share readings.
pub fn surplus_men(result: &SgiResult, male_pop_15_54: u64) -> SurplusMen {
    let pop = male_pop_15_54 as f64;
    SurplusMen {
        paper: (pop * result.surplus_share_paper).round() as i64,
        ratio: (pop * result.surplus_share_ratio).round() as i64,
    }
}

/// Attach surplus counts when a population base is known.
pub fn with_surplus(mut result: SgiResult, male_pop_15_54: Option<u64>) -> SgiResult {
    result.surplus_men = male_pop_15_54.map(|pop| surplus_men(&result, pop));
    result
}
