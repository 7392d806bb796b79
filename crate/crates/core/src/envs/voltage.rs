//! Two-bus voltage arithmetic, barrier functions and the droop law.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const V_REF: f64 = 1.0;
pub const SAFE_LOW: f64 = 0.95;
pub const SAFE_HIGH: f64 = 1.05;
pub const VIOLATION_PENALTY: f64 = -200.0;

const BOWL_SLOPE: f64 = 2.0;
const BOWL_OFFSET: f64 = 0.095;
const BOWL_DENSITY_SCALE: f64 = 0.01;
const BOWL_LIFT: f64 = 0.04;
const BOWL_SIGMA: f64 = 0.1;
const BOWL_KNEE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Barrier {
    L1,
    L2,
    Bowl,
}

impl FromStr for Barrier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Barrier::L1),
            "l2" => Ok(Barrier::L2),
            "bowl" => Ok(Barrier::Bowl),
            _ => Err(Error::UnknownBarrier(s.to_string())),
        }
    }
}

impl fmt::Display for Barrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Barrier::L1 => "l1",
            Barrier::L2 => "l2",
            Barrier::Bowl => "bowl",
        })
    }
}

fn gaussian_density(v: f64, mean: f64, sigma: f64) -> f64 {
    let z = (v - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

pub fn barrier_eval(kind: Barrier, v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!("voltage {v} must be positive")));
    }
    let d = (v - V_REF).abs();
    Ok(match kind {
        Barrier::L1 => d,
        Barrier::L2 => d * d,
        Barrier::Bowl if d > BOWL_KNEE => BOWL_SLOPE * d - BOWL_OFFSET,
        Barrier::Bowl => -BOWL_DENSITY_SCALE * gaussian_density(v, V_REF, BOWL_SIGMA) + BOWL_LIFT,
    })
}

/// Mean barrier over `voltages` plus `alpha` times the mean absolute reactive power.
pub fn reward_eval(kind: Barrier, alpha: f64, voltages: &[f64], q_pv: &[f64]) -> Result<f64> {
    if voltages.is_empty() || q_pv.is_empty() {
        return Err(Error::InvalidArgument("need at least one bus and one PV".into()));
    }
    let mut barrier = 0.0;
    for &v in voltages {
        barrier += barrier_eval(kind, v)?;
    }
    let q: f64 = q_pv.iter().map(|q| q.abs()).sum();
    Ok(-barrier / voltages.len() as f64 - alpha * q / q_pv.len() as f64)
}

/// Downstream voltage `v` with `(v_upstream - v)·v = r·dp + x·dq`, high-voltage root.
pub fn solve_bus_voltage(v_upstream: f64, r: f64, x: f64, dp: f64, dq: f64) -> Result<f64> {
    let k = r * dp + x * dq;
    let discriminant = v_upstream * v_upstream - 4.0 * k;
    if discriminant < 0.0 || !discriminant.is_finite() {
        return Err(Error::VoltageCollapse { discriminant });
    }
    Ok((v_upstream + discriminant.sqrt()) / 2.0)
}

pub fn line_loss(r: f64, dp: f64, dq: f64, v0: f64) -> f64 {
    (dp * dp + dq * dq) / (v0 * v0) * r
}

/// Reactive power that cancels the drop across a line feeding a single bus.
pub fn zero_deviation_q(r: f64, x: f64, p_load: f64, p_pv: f64, q_load: f64) -> f64 {
    r / x * (p_load - p_pv) + q_load
}

pub fn droop_control(v: f64, slope: f64, q_min: f64, q_max: f64) -> f64 {
    (-slope * (v - V_REF)).clamp(q_min, q_max)
}

pub fn in_safe_band(v: f64) -> bool {
    (SAFE_LOW..=SAFE_HIGH).contains(&v)
}
