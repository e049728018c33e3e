use serde::Serialize;
use thiserror::Error;

use super::{MappingProgram, Stage};
use crate::batch;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum EvalError {
    #[error("no case matches input {0}")]
    NoMatchingCase(f64),
    #[error("sqrt of negative value {0}")]
    DomainError(f64),
    #[error("result {0} is not a finite integer")]
    NonFinite(f64),
}

fn apply(stage: &Stage, v: f64) -> Result<f64, EvalError> {
    Ok(match *stage {
        Stage::Const(c) => c,
        Stage::Lin {
            in_lo,
            in_hi,
            out_lo,
            out_hi,
        } => out_lo + (v - in_lo) * (out_hi - out_lo) / (in_hi - in_lo),
        Stage::Sqrt => {
            if v < 0.0 {
                return Err(EvalError::DomainError(v));
            }
            v.sqrt()
        }
        Stage::Sq => v * v,
        Stage::Neg => -v,
        Stage::Clamp { lo, hi } => v.clamp(lo, hi),
    })
}

/// Runs the first matching case's chain without the final rounding.
pub fn eval_real(p: &MappingProgram, x: f64) -> Result<f64, EvalError> {
    let case = p
        .cases()
        .iter()
        .find(|c| c.contains(x))
        .ok_or(EvalError::NoMatchingCase(x))?;
    case.chain.iter().try_fold(x, |v, stage| apply(stage, v))
}

pub fn eval(p: &MappingProgram, x: f64) -> Result<i64, EvalError> {
    let r = eval_real(p, x)?.round();
    if !r.is_finite() || r.abs() >= 9.0e18 {
        return Err(EvalError::NonFinite(r));
    }
    Ok(r as i64)
}

/// Result of sweeping a program over a sampled input domain.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RangeReport {
    pub samples: usize,
    pub min_out: Option<i64>,
    pub max_out: Option<i64>,
    pub uncovered_inputs: Vec<f64>,
    pub domain_errors: Vec<f64>,
}

impl RangeReport {
    pub fn is_clean(&self) -> bool {
        self.uncovered_inputs.is_empty() && self.domain_errors.is_empty()
    }
}

/// Evaluates `p` at `lo, lo + step, ...` up to `hi` inclusive.
///
/// Returns an empty report when `step` is not positive or the domain is
/// inverted.
pub fn check_range(p: &MappingProgram, lo: f64, hi: f64, step: f64) -> RangeReport {
    let usable = step > 0.0 && lo <= hi;
    if !usable {
        return RangeReport::default();
    }
    // Index-based sampling avoids accumulating float drift over long sweeps.
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let results = batch::map_indices(n, |i| {
        let x = lo + i as f64 * step;
        (x, eval(p, x))
    });

    let mut report = RangeReport {
        samples: n,
        ..Default::default()
    };
    for (x, r) in results {
        match r {
            Ok(y) => {
                report.min_out = Some(report.min_out.map_or(y, |m| m.min(y)));
                report.max_out = Some(report.max_out.map_or(y, |m| m.max(y)));
            }
            Err(EvalError::NoMatchingCase(_)) => report.uncovered_inputs.push(x),
            Err(_) => report.domain_errors.push(x),
        }
    }
    report
}
