//! Per-user rate-memory multiplexing-gain curves.
//!
//! All curves are functions of the normalized cache size `x = μ/D`. Corner
//! points are exact rationals; floats appear only when sampling for export.

use std::io::Write;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::model::Variant;
use crate::schemes::rates::half_log;
use crate::{Error, Result};

pub type Q = Ratio<i64>;

fn q(n: i64, d: i64) -> Q {
    Ratio::new(n, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Achievable,
    UpperBound,
}

/// Exact achievable MG of the soft-handoff model.
pub fn s_soft_ach_exact(x: Q) -> Q {
    if x <= q(2, 3) {
        q(2, 3) + q(3, 2) * x
    } else {
        q(1, 1) + x
    }
}

/// Exact upper bound for the soft-handoff model.
pub fn s_soft_ub_exact(x: Q) -> Q {
    (q(2, 3) + q(3, 1) * x).min(q(1, 1) + x)
}

/// Exact achievable MG of the full model.
pub fn s_full_ach_exact(x: Q) -> Q {
    if x <= q(1, 1) {
        q(2, 3) + q(4, 3) * x
    } else {
        q(1, 1) + x
    }
}

/// Exact upper bound for the full model.
pub fn s_full_ub_exact(x: Q) -> Q {
    (q(2, 3) + q(6, 1) * x).min(q(1, 1) + x)
}

fn check_ratio(x: f64) -> Result<()> {
    if x < 0.0 || !x.is_finite() {
        return Err(Error::NegativeRatio(x));
    }
    Ok(())
}

pub fn s_soft_ach(x: f64) -> Result<f64> {
    check_ratio(x)?;
    Ok(if x <= 2.0 / 3.0 {
        2.0 / 3.0 + 1.5 * x
    } else {
        1.0 + x
    })
}

pub fn s_soft_ub(x: f64) -> Result<f64> {
    check_ratio(x)?;
    Ok((2.0 / 3.0 + 3.0 * x).min(1.0 + x))
}

pub fn s_full_ach(x: f64) -> Result<f64> {
    check_ratio(x)?;
    Ok(if x <= 1.0 {
        2.0 / 3.0 + 4.0 / 3.0 * x
    } else {
        1.0 + x
    })
}

pub fn s_full_ub(x: f64) -> Result<f64> {
    check_ratio(x)?;
    Ok((2.0 / 3.0 + 6.0 * x).min(1.0 + x))
}

/// Evaluates the selected curve at `x`.
pub fn evaluate(model: Variant, kind: CurveKind, x: f64) -> Result<f64> {
    match (model, kind) {
        (Variant::SoftHandoff, CurveKind::Achievable) => s_soft_ach(x),
        (Variant::SoftHandoff, CurveKind::UpperBound) => s_soft_ub(x),
        (Variant::Full, CurveKind::Achievable) => s_full_ach(x),
        (Variant::Full, CurveKind::UpperBound) => s_full_ub(x),
    }
}

/// Corner points of the selected curve, ending where its last slope starts.
pub fn breakpoints(model: Variant, kind: CurveKind) -> Vec<(Q, Q)> {
    let xs = match (model, kind) {
        (Variant::SoftHandoff, CurveKind::Achievable) => vec![q(0, 1), q(2, 3)],
        (Variant::SoftHandoff, CurveKind::UpperBound) => vec![q(0, 1), q(1, 6)],
        (Variant::Full, CurveKind::Achievable) => vec![q(0, 1), q(1, 1)],
        (Variant::Full, CurveKind::UpperBound) => vec![q(0, 1), q(1, 15)],
    };
    let f = exact_fn(model, kind);
    xs.into_iter().map(|x| (x, f(x))).collect()
}

fn exact_fn(model: Variant, kind: CurveKind) -> fn(Q) -> Q {
    match (model, kind) {
        (Variant::SoftHandoff, CurveKind::Achievable) => s_soft_ach_exact,
        (Variant::SoftHandoff, CurveKind::UpperBound) => s_soft_ub_exact,
        (Variant::Full, CurveKind::Achievable) => s_full_ach_exact,
        (Variant::Full, CurveKind::UpperBound) => s_full_ub_exact,
    }
}

/// Smallest `x` from which upper bound and achievable curve coincide.
pub fn tightness_start(model: Variant) -> Q {
    match model {
        Variant::SoftHandoff => q(2, 3),
        Variant::Full => q(1, 1),
    }
}

/// Per-user MG of a rate in bits per channel use.
pub fn empirical_mg(rate: f64, power: f64) -> Result<f64> {
    if power <= 0.0 || !power.is_finite() {
        return Err(Error::NonPositivePower(power));
    }
    Ok(rate / half_log(power))
}

/// Converts a raw cache size to the normalized ratio.
pub fn ratio(mu: f64, d: usize) -> f64 {
    mu / d as f64
}

/// One sample of both curves of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub x: f64,
    pub s_ach: f64,
    pub s_ub: f64,
    pub gap: f64,
}

/// Samples of a model's curves on `[0, x_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub model: Variant,
    pub rows: Vec<CurveRow>,
}

/// `n_points` evenly spaced samples on `[0, x_max]` merged with the exact
/// corner points of both curves that fall in range.
pub fn curve(model: Variant, n_points: usize, x_max: f64) -> Result<TradeoffCurve> {
    if n_points < 2 {
        return Err(Error::BadParameter(format!(
            "need at least 2 points, got {n_points}"
        )));
    }
    check_ratio(x_max)?;
    let mut xs: Vec<f64> = (0..n_points)
        .map(|i| x_max * i as f64 / (n_points - 1) as f64)
        .collect();
    for kind in [CurveKind::Achievable, CurveKind::UpperBound] {
        for (x, _) in breakpoints(model, kind) {
            let x = x.to_f64().expect("small rational");
            if x <= x_max {
                xs.push(x);
            }
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let rows = xs
        .into_iter()
        .map(|x| {
            let s_ach = evaluate(model, CurveKind::Achievable, x)?;
            let s_ub = evaluate(model, CurveKind::UpperBound, x)?;
            Ok(CurveRow {
                x,
                s_ach,
                s_ub,
                gap: s_ub - s_ach,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TradeoffCurve { model, rows })
}

impl TradeoffCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,s_ach,s_ub,gap")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.x, r.s_ach, r.s_ub, r.gap)?;
        }
        Ok(())
    }
}
