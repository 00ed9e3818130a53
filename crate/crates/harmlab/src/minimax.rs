//! Least deviation from harmonic polynomials on a sampled compact set.
//!
//! `best_approx` solves `min t` over coefficients c and t subject to
//! `-t <= f(x_i) - sum_j c_j phi_j(x_i) <= t` at every sample, which is the
//! discretized Chebyshev problem as one dense LP.

use crate::basis::{basis_size, dot, eval_basis, eval_basis_matrix, BasisError, BasisSpec, HarmonicPoly};
use crate::geometry::{Point, SampledSet};
use crate::lp::{self, LpError, LpProblem, LpStatus};
use serde::Serialize;
use thiserror::Error;

/// Deviations below this are flagged as exact representations.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MinimaxError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("target function '{label}' not defined at ({coords:?})")]
    NotDefined { label: String, coords: Vec<f64> },
    #[error("internal: minimax LP reported {0:?}")]
    UnexpectedStatus(LpStatus),
    #[error("dimension mismatch: function is {function}-dimensional, set is {set}-dimensional")]
    Dimension { function: usize, set: usize },
}

/// Pointwise target function for approximation.
#[derive(Clone, Debug)]
pub enum TargetFunction {
    /// A harmonic polynomial itself.
    Harmonic(HarmonicPoly),
    /// `Re 1/(q - z)` for real q; harmonic away from (q, 0). 2D only.
    PoleRe { q: f64 },
    /// `|x_1|`.
    AbsX1,
    /// Values tabulated on specific points; exact-coordinate lookup.
    Table { label: String, points: Vec<Point>, values: Vec<f64> },
    /// `base(x) - p(x)`.
    Offset { base: Box<TargetFunction>, minus: HarmonicPoly },
}

impl TargetFunction {
    pub fn label(&self) -> String {
        match self {
            TargetFunction::Harmonic(p) => format!("harmonic_deg{}", p.max_degree),
            TargetFunction::PoleRe { q } => format!("re_pole_{q}"),
            TargetFunction::AbsX1 => "abs_x1".into(),
            TargetFunction::Table { label, .. } => label.clone(),
            TargetFunction::Offset { base, .. } => format!("{}_offset", base.label()),
        }
    }

    pub fn eval(&self, x: &Point) -> Result<f64, MinimaxError> {
        match self {
            TargetFunction::Harmonic(p) => Ok(p.eval(x)),
            TargetFunction::PoleRe { q } => {
                let dx = q - x.x();
                let dy = -x.y();
                let denom = dx * dx + dy * dy;
                if denom < 1e-300 {
                    return Err(MinimaxError::NotDefined {
                        label: self.label(),
                        coords: x.coords().to_vec(),
                    });
                }
                Ok(dx / denom)
            }
            TargetFunction::AbsX1 => Ok(x.x().abs()),
            TargetFunction::Table { label, points, values } => {
                for (p, v) in points.iter().zip(values) {
                    if p.dist(x) <= 1e-9 {
                        return Ok(*v);
                    }
                }
                Err(MinimaxError::NotDefined { label: label.clone(), coords: x.coords().to_vec() })
            }
            TargetFunction::Offset { base, minus } => Ok(base.eval(x)? - minus.eval(x)),
        }
    }

    /// Builds a table of this function's values on `set`, optionally forcing
    /// zeros at points inside `zero_region`.
    pub fn tabulate_zeroed(
        &self,
        set: &SampledSet,
        zero_region: &crate::geometry::ShapeDescriptor,
        label: impl Into<String>,
    ) -> Result<TargetFunction, MinimaxError> {
        let mut values = Vec::with_capacity(set.len());
        for p in &set.points {
            if zero_region.contains(p, 1e-9) {
                values.push(0.0);
            } else {
                values.push(self.eval(p)?);
            }
        }
        Ok(TargetFunction::Table { label: label.into(), points: set.points.clone(), values })
    }
}

/// Best approximation at one degree: coefficients and the least deviation.
#[derive(Clone, Debug, Serialize)]
pub struct ApproxResult {
    pub degree: usize,
    pub poly: HarmonicPoly,
    pub deviation: f64,
    pub is_exact: bool,
}

/// Solves the discretized minimax problem for `f` on `k` over harmonic
/// polynomials of degree <= `spec.max_degree`.
pub fn best_approx(
    f: &TargetFunction,
    k: &SampledSet,
    spec: &BasisSpec,
) -> Result<ApproxResult, MinimaxError> {
    if spec.dim != k.dim() {
        return Err(MinimaxError::Dimension { function: spec.dim, set: k.dim() });
    }
    let n_b = basis_size(spec);
    let rows = eval_basis_matrix(spec, &k.points);
    let fvals: Result<Vec<f64>, _> = k.points.iter().map(|p| f.eval(p)).collect();
    let fvals = fvals?;

    // Variables: basis coefficients then t; maximize -t.
    let mut objective = vec![0.0; n_b + 1];
    objective[n_b] = -1.0;
    let mut problem = LpProblem::new(objective);
    for (row, &fv) in rows.iter().zip(&fvals) {
        let mut up: Vec<f64> = row.iter().map(|v| -v).collect();
        up.push(-1.0);
        problem.push_row(up, -fv);
        let mut down = row.clone();
        down.push(-1.0);
        problem.push_row(down, fv);
    }
    let solution = lp::solve(&problem)?;
    if solution.status != LpStatus::Optimal {
        return Err(MinimaxError::UnexpectedStatus(solution.status));
    }
    let coeffs = solution.x[..n_b].to_vec();
    let poly = HarmonicPoly::new(*spec, coeffs)?;
    // Report the recomputed residual maximum so the stored deviation matches
    // the polynomial exactly; it agrees with the LP optimum to solver tolerance.
    let deviation = rows
        .iter()
        .zip(&fvals)
        .map(|(row, &fv)| (fv - dot(&poly.coeffs, row)).abs())
        .fold(0.0f64, f64::max);
    let t = -solution.objective_value;
    debug_assert!((deviation - t).abs() <= 1e-7 * (1.0 + t.abs()));
    Ok(ApproxResult { degree: spec.max_degree, poly, deviation, is_exact: deviation < EXACT_TOL })
}

/// Best approximations for every degree `0..=m_max`.
pub fn deviation_sequence(
    f: &TargetFunction,
    k: &SampledSet,
    m_max: usize,
) -> Result<Vec<ApproxResult>, MinimaxError> {
    (0..=m_max)
        .map(|m| best_approx(f, k, &BasisSpec::new(k.dim(), m)?))
        .collect()
}

pub fn results_to_csv(results: &[ApproxResult]) -> String {
    let mut out = String::from("m,deviation\n");
    for r in results {
        out.push_str(&format!("{},{}\n", r.degree, r.deviation));
    }
    out
}

pub fn results_to_json(results: &[ApproxResult]) -> String {
    serde_json::to_string_pretty(results).expect("serializable")
}

/// Evaluate `f - p` pointwise on a set (residual sup).
pub fn residual_sup(
    f: &TargetFunction,
    p: &HarmonicPoly,
    set: &SampledSet,
) -> Result<f64, MinimaxError> {
    let mut sup = 0.0f64;
    for x in &set.points {
        sup = sup.max((f.eval(x)? - p.eval(x)).abs());
    }
    Ok(sup)
}

#[allow(unused)]
fn basis_row(spec: &BasisSpec, p: &Point) -> Vec<f64> {
    eval_basis(spec, p)
}
