//! Parameter sweeps over protocol configurations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_report, ProtocolConfig, ProtocolKind, ProtocolReport};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    /// Squeezed ancilla variance.
    #[serde(rename = "V")]
    V,
    #[serde(rename = "kappa")]
    Kappa,
    /// Scale of the feedback gains.
    #[serde(rename = "gain")]
    Gain,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::V => "V",
            SweepParam::Kappa => "kappa",
            SweepParam::Gain => "gain",
        }
    }

    fn set(&self, cfg: &mut ProtocolConfig, value: f64) {
        match self {
            SweepParam::V => cfg.asymmetry_v = value,
            SweepParam::Kappa => cfg.kappa = value,
            SweepParam::Gain => cfg.feedback_gain = value,
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "V" | "v" => Ok(SweepParam::V),
            "kappa" | "k" => Ok(SweepParam::Kappa),
            "gain" | "feedback_gain" | "feedback-gain" => Ok(SweepParam::Gain),
            other => Err(Error::Config(format!(
                "unknown sweep parameter `{other}` (expected V, kappa or gain)"
            ))),
        }
    }
}

/// Inclusive grid `start, start + step, …` up to `stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        SweepRange { start, stop, step }
    }

    /// Grid points. When `step` divides the span, the endpoint is hit exactly.
    pub fn points(&self) -> Result<Vec<f64>> {
        let SweepRange { start, stop, step } = *self;
        if ![start, stop, step].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("sweep bounds must be finite".into()));
        }
        if !(step > 0.0) {
            return Err(Error::Config(format!("sweep step must be positive, got {step}")));
        }
        if stop < start {
            return Err(Error::Config(format!("empty sweep: {start} > {stop}")));
        }
        let span = stop - start;
        let intervals = (span / step + 1e-9).floor();
        if intervals > 1e7 {
            return Err(Error::Config("sweep has too many points".into()));
        }
        let n = intervals as usize;
        let exact = (intervals * step - span).abs() <= 1e-9 * step;
        Ok((0..=n)
            .map(|i| {
                if exact && n > 0 {
                    start + span * i as f64 / n as f64
                } else {
                    start + step * i as f64
                }
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param: SweepParam,
    pub value: f64,
    pub report: ProtocolReport,
}

/// Runs `base` at every grid point of `range`, in order.
pub fn sweep(base: &ProtocolConfig, param: SweepParam, range: SweepRange) -> Result<Vec<SweepPoint>> {
    if base.protocol == ProtocolKind::SqueezePrep {
        return Err(Error::Config("sweeps need a cloning protocol".into()));
    }
    let points = range.points()?;
    points
        .par_iter()
        .map(|&value| {
            let mut cfg = base.clone();
            param.set(&mut cfg, value);
            let mut report = build_report(&cfg, None)?;
            report.trace.clear();
            Ok(SweepPoint { param, value, report })
        })
        .collect()
}
