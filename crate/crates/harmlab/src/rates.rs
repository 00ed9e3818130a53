//! Root-rate analysis of deviation sequences.
//!
//! The asymptotic lim sup / lim inf of `l_m^{1/m}` are replaced by extrema
//! over a trailing window, with a declared decision margin; the window and
//! margin are always reported alongside the estimates.

use serde::Serialize;
use thiserror::Error;

/// Deviations below this are treated as exact zeros (`rate = 0`).
pub const ZERO_TOL: f64 = 1e-12;

/// Default decision margin separating the rate classes from 1.
pub const DEFAULT_MARGIN: f64 = 0.05;

#[derive(Debug, Error)]
pub enum RatesError {
    #[error("window {window} invalid for sequence of length {len} (need 3 <= window <= m_max)")]
    BadWindow { window: usize, len: usize },
    #[error("negative deviation {0} at index {1}")]
    NegativeDeviation(f64, usize),
    #[error("deviation sequence too short: {0}")]
    TooShort(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    HarmonicallyExtendable,
    QuasiharmonicOnly,
    NotQuasiharmonic,
    ExactlyPolynomial,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub deviations: Vec<f64>,
    /// `deviations[m]^(1/m)` for m >= 1; index 0 is null.
    pub root_rates: Vec<Option<f64>>,
    /// True where the deviation was an exact zero by convention.
    pub exact_flags: Vec<bool>,
    pub limsup_estimate: f64,
    pub liminf_estimate: f64,
    pub tail_window: usize,
    pub margin: f64,
    pub classification: Classification,
}

/// Entry m is `deviations[m]^(1/m)` for m >= 1; exact zeros get rate 0.
pub fn root_rates(deviations: &[f64]) -> Result<(Vec<Option<f64>>, Vec<bool>), RatesError> {
    for (i, &d) in deviations.iter().enumerate() {
        if d < 0.0 {
            return Err(RatesError::NegativeDeviation(d, i));
        }
    }
    let mut rates = vec![None; deviations.len()];
    let mut exact = vec![false; deviations.len()];
    for (m, &d) in deviations.iter().enumerate().skip(1) {
        if d < ZERO_TOL {
            rates[m] = Some(0.0);
            exact[m] = true;
        } else {
            rates[m] = Some(d.powf(1.0 / m as f64));
        }
    }
    Ok((rates, exact))
}

/// Classifies a deviation sequence from trailing-window rate extrema.
pub fn classify(deviations: &[f64], window: usize, margin: f64) -> Result<DecayReport, RatesError> {
    if deviations.len() < 2 {
        return Err(RatesError::TooShort(deviations.len()));
    }
    let m_max = deviations.len() - 1;
    if window < 3 || window > m_max {
        return Err(RatesError::BadWindow { window, len: deviations.len() });
    }
    let (rates, exact) = root_rates(deviations)?;
    let tail: Vec<f64> = (m_max - window + 1..=m_max)
        .map(|m| rates[m].expect("m >= 1"))
        .collect();
    let limsup = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let liminf = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let classification = if exact.iter().any(|&e| e) {
        Classification::ExactlyPolynomial
    } else if limsup < 1.0 - margin {
        Classification::HarmonicallyExtendable
    } else if liminf < 1.0 - margin {
        Classification::QuasiharmonicOnly
    } else {
        Classification::NotQuasiharmonic
    };
    Ok(DecayReport {
        deviations: deviations.to_vec(),
        root_rates: rates,
        exact_flags: exact,
        limsup_estimate: limsup,
        liminf_estimate: liminf,
        tail_window: window,
        margin,
        classification,
    })
}

impl DecayReport {
    /// Surrogate for the limit rate `d`: zero for exact polynomials, else
    /// the trailing-window minimum.
    pub fn d_estimate(&self) -> f64 {
        if self.classification == Classification::ExactlyPolynomial {
            0.0
        } else {
            self.liminf_estimate
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Two-column CSV of the root rates.
    pub fn rates_csv(&self) -> String {
        let mut out = String::from("m,root_rate\n");
        for (m, r) in self.root_rates.iter().enumerate() {
            if let Some(r) = r {
                out.push_str(&format!("{m},{r}\n"));
            }
        }
        out
    }
}
