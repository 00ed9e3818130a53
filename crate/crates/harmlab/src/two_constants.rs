//! Empirical probes of the two-constants inequality
//! `|u|_K <= C |u|_E^(1-a-e) |u|_D^(a+e)`.
//!
//! The constant is measured, not proved: a seeded random polynomial
//! ensemble gives `worst_ratio` and a fitted constant with a declared 1.5
//! safety factor, and an adversarial LP sweep lower-bounds the best
//! possible constant by maximizing on K under norm caps on E and D.

use crate::basis::{basis_size, eval_basis_matrix, sup_norm_rows, BasisError, BasisSpec};
use crate::chi::{chi0_at, ChiError, ChiParams};
use crate::geometry::{Point, SampledSet};
use crate::lp::{self, LpError, LpProblem, LpStatus};
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Declared safety factor between the observed worst ratio and the
/// reported constant.
pub const FIT_SAFETY: f64 = 1.5;

#[derive(Debug, Error)]
pub enum TwoConstantsError {
    #[error("invalid exponents: need 0 < alpha < 1 and 0 < eps < 1 - alpha, got alpha={alpha}, eps={eps}")]
    BadExponents { alpha: f64, eps: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Chi(#[from] ChiError),
    #[error("internal: adversarial LP reported {0:?}")]
    UnexpectedStatus(LpStatus),
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoConstantsReport {
    pub alpha: f64,
    pub eps: f64,
    pub degree: usize,
    pub n_samples: usize,
    pub seed: u64,
    /// Max over the ensemble of |u|_K / (|u|_E^(1-a-e) |u|_D^(a+e)).
    pub worst_ratio: f64,
    /// `FIT_SAFETY * worst_ratio` [empirical, not a proved constant].
    pub fitted_c: f64,
    pub samples_tested: usize,
    pub samples_skipped: usize,
    /// True when the sublevel pre-check placed K inside the region where
    /// the field stays below alpha. None when the check was not requested.
    pub k_in_sublevel: Option<bool>,
    pub notes: Vec<String>,
}

fn validate_exponents(alpha: f64, eps: f64) -> Result<(), TwoConstantsError> {
    if !(0.0 < alpha && alpha < 1.0 && 0.0 < eps && eps < 1.0 - alpha) {
        return Err(TwoConstantsError::BadExponents { alpha, eps });
    }
    Ok(())
}

/// Random-ensemble verification. Coefficients are i.i.d. standard normal
/// on basis elements rescaled to unit sup on D, so every degree
/// contributes at a comparable scale and the observed worst ratio is
/// stable under doubling the degree.
#[allow(clippy::too_many_arguments)]
pub fn verify_random(
    e: &SampledSet,
    k: &SampledSet,
    d: &SampledSet,
    alpha: f64,
    eps: f64,
    degree: usize,
    n_samples: usize,
    seed: u64,
    sublevel_check: Option<&ChiParams>,
) -> Result<TwoConstantsReport, TwoConstantsError> {
    validate_exponents(alpha, eps)?;
    if n_samples == 0 {
        return Err(TwoConstantsError::BadParameter("n_samples must be positive".into()));
    }
    let spec = BasisSpec::new(k.dim(), degree)?;
    let n_b = basis_size(&spec);
    let e_rows = eval_basis_matrix(&spec, &e.points);
    let k_rows = eval_basis_matrix(&spec, &k.points);
    let d_rows = eval_basis_matrix(&spec, &d.points);

    // Per-element sup on D, used to normalize the ensemble.
    let mut d_sup = vec![0.0f64; n_b];
    for row in &d_rows {
        for (s, v) in d_sup.iter_mut().zip(row) {
            *s = s.max(v.abs());
        }
    }
    for s in &mut d_sup {
        if *s < 1e-300 {
            *s = 1.0;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_ratio = 0.0f64;
    let mut skipped = 0usize;
    let ex_e = 1.0 - alpha - eps;
    let ex_d = alpha + eps;
    for _ in 0..n_samples {
        let coeffs: Vec<f64> = (0..n_b)
            .map(|j| {
                let g: f64 = rng.sample(StandardNormal);
                g / d_sup[j]
            })
            .collect();
        let norm_e = sup_norm_rows(&coeffs, &e_rows);
        if norm_e < 1e-300 {
            skipped += 1;
            continue;
        }
        let norm_k = sup_norm_rows(&coeffs, &k_rows);
        let norm_d = sup_norm_rows(&coeffs, &d_rows);
        let ratio = norm_k / (norm_e.powf(ex_e) * norm_d.powf(ex_d));
        worst_ratio = worst_ratio.max(ratio);
    }

    let mut notes = vec![
        "fitted_c is empirical: 1.5 x observed worst ratio over the seeded ensemble".into(),
        "polynomial surrogates may understate the worst ratio over all harmonic functions".into(),
    ];
    let k_in_sublevel = match sublevel_check {
        None => None,
        Some(params) => {
            // Probe a decimated subset of K's samples.
            let stride = (k.len() / 24).max(1);
            let probes: Vec<Point> = k.points.iter().copied().step_by(stride).collect();
            let mut inside = true;
            for p in &probes {
                let v = chi0_at(p, e, d, params)?;
                if v.value >= alpha {
                    inside = false;
                    notes.push(format!(
                        "warning: K leaves the sublevel region (field {} >= alpha at ({:?}))",
                        v.value,
                        p.coords()
                    ));
                    break;
                }
            }
            Some(inside)
        }
    };

    Ok(TwoConstantsReport {
        alpha,
        eps,
        degree,
        n_samples,
        seed,
        worst_ratio,
        fitted_c: FIT_SAFETY * worst_ratio,
        samples_tested: n_samples - skipped,
        samples_skipped: skipped,
        k_in_sublevel,
        notes,
    })
}

/// Adversarial sweep outcome.
#[derive(Clone, Debug, Serialize)]
pub struct AdversarialOutcome {
    /// Max over the sweep of |u*|_K / T^(alpha+eps); a lower bound on the
    /// best possible constant.
    pub max_ratio: f64,
    /// (T, implied ratio) per sweep point.
    pub per_t: Vec<(f64, f64)>,
}

/// For each cap T, maximize |u(y)| over y in K's samples subject to
/// |u| <= 1 on E and |u| <= T on D.
pub fn adversarial_search(
    e: &SampledSet,
    k: &SampledSet,
    d: &SampledSet,
    alpha: f64,
    eps: f64,
    degree: usize,
    t_grid: &[f64],
) -> Result<AdversarialOutcome, TwoConstantsError> {
    validate_exponents(alpha, eps)?;
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t >= 1.0) || !t.is_finite()) {
        return Err(TwoConstantsError::BadParameter(
            "t_grid must be nonempty with entries >= 1".into(),
        ));
    }
    let spec = BasisSpec::new(k.dim(), degree)?;
    let e_rows = eval_basis_matrix(&spec, &e.points);
    let k_rows = eval_basis_matrix(&spec, &k.points);
    let d_rows = eval_basis_matrix(&spec, &d.points);
    let ex_d = alpha + eps;

    let mut per_t = Vec::with_capacity(t_grid.len());
    let mut max_ratio = 0.0f64;
    for &t in t_grid {
        let sup_k: Result<Vec<f64>, TwoConstantsError> = k_rows
            .par_iter()
            .map(|obj_row| {
                let mut best = 0.0f64;
                for sign in [1.0f64, -1.0] {
                    let objective: Vec<f64> = obj_row.iter().map(|v| sign * v).collect();
                    let mut problem = LpProblem::new(objective);
                    for row in &e_rows {
                        problem.push_row(row.clone(), 1.0);
                        problem.push_row(row.iter().map(|v| -v).collect(), 1.0);
                    }
                    for row in &d_rows {
                        problem.push_row(row.clone(), t);
                        problem.push_row(row.iter().map(|v| -v).collect(), t);
                    }
                    let sol = lp::solve(&problem)?;
                    match sol.status {
                        LpStatus::Optimal => best = best.max(sol.objective_value),
                        other => return Err(TwoConstantsError::UnexpectedStatus(other)),
                    }
                }
                Ok(best)
            })
            .collect();
        let sup = sup_k?.into_iter().fold(0.0f64, f64::max);
        let ratio = sup / t.powf(ex_d);
        per_t.push((t, ratio));
        max_ratio = max_ratio.max(ratio);
    }
    Ok(AdversarialOutcome { max_ratio, per_t })
}

pub fn report_to_json(report: &TwoConstantsReport) -> String {
    serde_json::to_string_pretty(report).expect("serializable")
}
