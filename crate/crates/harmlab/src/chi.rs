//! The condenser extremal function and its vanishing-parameter limit.
//!
//! For a compact E inside a domain D, the field value at x is the supremum
//! of `alpha * ln|u(x)|` over harmonic u with `sup_E |u| <= 1` and
//! `sup_D |u| <= e^(1/alpha)`, maximized over `0 < alpha < eps` and driven
//! to the limit along a decreasing eps grid. The space of harmonic
//! functions on D is replaced by harmonic polynomials of degree at most N
//! (the surrogate degree); each evaluation is two dense LPs per alpha.

use crate::basis::{eval_basis, eval_basis_matrix, BasisError, BasisSpec};
use crate::geometry::{set_distance, Point, SampledSet};
use crate::lp::{self, LpError, LpProblem, LpStatus};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChiError {
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("point ({coords:?}) lies outside the domain region")]
    OutsideDomain { coords: Vec<f64> },
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("internal LP failure ({0})")]
    Internal(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(
        "monotonicity in eps violated by {violation} (> 10x tolerance); \
         discretization too coarse"
    )]
    Monotonicity { violation: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiParams {
    /// Strictly decreasing values in (0, 1); the last one stands in for the
    /// vanishing limit.
    pub epsilon_grid: Vec<f64>,
    /// Geometric alpha samples per epsilon.
    pub alpha_per_epsilon: usize,
    /// Harmonic-polynomial degree standing in for the full harmonic family.
    pub surrogate_degree: usize,
    pub tolerance: f64,
}

impl Default for ChiParams {
    fn default() -> Self {
        ChiParams {
            epsilon_grid: vec![0.5, 0.3, 0.2, 0.1],
            alpha_per_epsilon: 6,
            surrogate_degree: 8,
            tolerance: 0.02,
        }
    }
}

impl ChiParams {
    pub fn validate(&self) -> Result<(), ChiError> {
        if self.epsilon_grid.is_empty() {
            return Err(ChiError::BadParams("epsilon grid is empty".into()));
        }
        for w in self.epsilon_grid.windows(2) {
            if w[1] >= w[0] {
                return Err(ChiError::BadParams("epsilon grid must strictly decrease".into()));
            }
        }
        if self
            .epsilon_grid
            .iter()
            .any(|&e| !(0.0 < e && e < 1.0) || !e.is_finite())
        {
            return Err(ChiError::BadParams("epsilon values must lie in (0,1)".into()));
        }
        if self.alpha_per_epsilon < 2 {
            return Err(ChiError::BadParams("need at least 2 alpha samples".into()));
        }
        if self.surrogate_degree < 1 {
            return Err(ChiError::BadParams("surrogate degree must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(ChiError::BadParams("tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Geometric alpha grid in (0, eps): from max(eps/64, 1/700) up to
    /// eps(1 - 1/64).
    pub fn alpha_grid(&self, eps: f64) -> Vec<f64> {
        let lo = (eps / 64.0).max(1.0 / 700.0);
        let hi = eps * (1.0 - 1.0 / 64.0);
        let n = self.alpha_per_epsilon;
        if lo >= hi {
            return vec![hi];
        }
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }
}

/// Per-point outcome of the vanishing-eps evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct Chi0Value {
    pub value: f64,
    pub converged: bool,
    /// One entry per epsilon in the grid.
    pub per_eps: Vec<f64>,
}

/// Field of values over a grid of evaluation points.
#[derive(Clone, Debug, Serialize)]
pub struct ChiField {
    pub grid: Vec<Point>,
    /// `chi_eps[i][k]` is the value at grid point i for epsilon_grid[k].
    pub chi_eps: Vec<Vec<f64>>,
    pub chi0: Vec<f64>,
    pub converged: Vec<bool>,
    pub surrogate_degree: usize,
}

/// Direct LP solves stay below this growth cap; beyond it, the extremal
/// value follows from the concave structure (see `log_extremal`). Keeping
/// LP bounds at most this large protects the reduced costs of the unit
/// rows from cancellation noise.
const DIRECT_CAP: f64 = 1e9;

/// Precomputed constraint geometry shared by every alpha at one (E, D).
struct CondenserRows {
    spec: BasisSpec,
    e_rows: Vec<Vec<f64>>,
    d_rows: Vec<Vec<f64>>,
}

/// Growth structure of `M(T) = sup { u(x) : |u|_E <= 1, |u|_D <= T }` in
/// the cap T, established once per evaluation point. M is concave,
/// nondecreasing and piecewise linear in T, so beyond `DIRECT_CAP` it is
/// pinned between two computable envelopes.
enum GrowthRegime {
    /// Some admissible polynomial is bounded on E without being bounded on
    /// x: the no-cap problem is unbounded. `ln_slope` is ln of the gain of
    /// the E-annihilating family normalized on D; `ln_m0` is ln M(DIRECT_CAP).
    Annihilator { ln_slope: f64, ln_m0: f64 },
    /// The E constraints alone pin the value: M saturates at `ln_sat`.
    Saturating { ln_sat: f64 },
}

impl CondenserRows {
    fn build(e: &SampledSet, d: &SampledSet, degree: usize) -> Result<Self, ChiError> {
        if e.dim() != d.dim() {
            return Err(ChiError::BadParams("E and D dimensions differ".into()));
        }
        let spec = BasisSpec::new(e.dim(), degree)?;
        let e_rows = eval_basis_matrix(&spec, &e.points);
        let d_rows = eval_basis_matrix(&spec, &d.points);
        Ok(CondenserRows { spec, e_rows, d_rows })
    }

    /// One directed extremal LP: maximize sign * u(x) subject to
    /// |u| <= e_bound on E samples and (optionally) |u| <= d_bound on D
    /// samples. Returns the objective, or None when unbounded.
    fn directed_lp(
        &self,
        x: &Point,
        sign: f64,
        e_bound: f64,
        d_bound: Option<f64>,
    ) -> Result<Option<f64>, ChiError> {
        let objective: Vec<f64> = eval_basis(&self.spec, x)
            .into_iter()
            .map(|v| sign * v)
            .collect();
        let mut problem = LpProblem::new(objective);
        for row in &self.e_rows {
            problem.push_row(row.clone(), e_bound);
            problem.push_row(row.iter().map(|v| -v).collect(), e_bound);
        }
        if let Some(cap) = d_bound {
            for row in &self.d_rows {
                problem.push_row(row.clone(), cap);
                problem.push_row(row.iter().map(|v| -v).collect(), cap);
            }
        }
        let sol = lp::solve(&problem)?;
        match sol.status {
            LpStatus::Optimal => Ok(Some(sol.objective_value)),
            LpStatus::Unbounded if d_bound.is_none() => Ok(None),
            other => Err(ChiError::Internal(format!(
                "condenser LP returned {other:?}; constraint assembly is broken"
            ))),
        }
    }

    fn growth_regime(&self, x: &Point, sign: f64) -> Result<GrowthRegime, ChiError> {
        match self.directed_lp(x, sign, 1.0, None)? {
            Some(sat) => Ok(GrowthRegime::Saturating { ln_sat: ln_floor(sat) }),
            None => {
                // Unboundedness is certified, so the annihilating family is
                // genuinely present; measure its gain at x.
                let slope = self.directed_lp(x, sign, 0.0, Some(1.0))?.expect("bounded");
                let m0 = self
                    .directed_lp(x, sign, 1.0, Some(DIRECT_CAP))?
                    .expect("bounded");
                Ok(GrowthRegime::Annihilator {
                    ln_slope: ln_floor(slope),
                    ln_m0: ln_floor(m0),
                })
            }
        }
    }

    /// ln M(e^tau) for one direction, exact below DIRECT_CAP and from the
    /// concave envelopes above it (midpoint of lower and upper bound, which
    /// differ by at most ln 2 plus the saturation slack).
    fn log_extremal(
        &self,
        x: &Point,
        sign: f64,
        tau: f64,
        regime: &mut Option<GrowthRegime>,
    ) -> Result<f64, ChiError> {
        if tau <= DIRECT_CAP.ln() {
            let v = self
                .directed_lp(x, sign, 1.0, Some(tau.exp()))?
                .expect("capped problem is bounded");
            return Ok(ln_floor(v));
        }
        if regime.is_none() {
            *regime = Some(self.growth_regime(x, sign)?);
        }
        Ok(match regime.as_ref().expect("set above") {
            GrowthRegime::Saturating { ln_sat } => *ln_sat,
            GrowthRegime::Annihilator { ln_slope, ln_m0 } => {
                let ln_lin = ln_slope + tau;
                let lower = ln_m0.max(ln_lin);
                let upper = log_add_exp(*ln_m0, ln_lin);
                0.5 * (lower + upper)
            }
        })
    }
}

fn ln_floor(v: f64) -> f64 {
    v.max(1e-300).ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// The extremal value at `x` for one eps: max over the alpha grid of
/// `alpha * ln M(alpha)`, floored at zero (u = 1 always attains 0).
pub fn chi_eps_at(
    x: &Point,
    e: &SampledSet,
    d: &SampledSet,
    eps: f64,
    params: &ChiParams,
) -> Result<f64, ChiError> {
    params.validate()?;
    if !(0.0 < eps && eps < 1.0) {
        return Err(ChiError::BadParams(format!("eps {eps} outside (0,1)")));
    }
    check_in_domain(x, d)?;
    let rows = CondenserRows::build(e, d, params.surrogate_degree)?;
    chi_eps_with_rows(x, eps, params, &rows)
}

fn check_in_domain(x: &Point, d: &SampledSet) -> Result<(), ChiError> {
    let slack = d.mesh.max(1e-9);
    if !d.source.contains(x, slack) && set_distance(x, d) > slack {
        return Err(ChiError::OutsideDomain { coords: x.coords().to_vec() });
    }
    Ok(())
}

fn chi_eps_with_rows(
    x: &Point,
    eps: f64,
    params: &ChiParams,
    rows: &CondenserRows,
) -> Result<f64, ChiError> {
    let mut regimes = [None, None];
    chi_eps_cached(x, eps, params, rows, &mut regimes)
}

fn chi_eps_cached(
    x: &Point,
    eps: f64,
    params: &ChiParams,
    rows: &CondenserRows,
    regimes: &mut [Option<GrowthRegime>; 2],
) -> Result<f64, ChiError> {
    let mut best = 0.0f64;
    for alpha in params.alpha_grid(eps) {
        for (k, sign) in [1.0f64, -1.0].into_iter().enumerate() {
            let ln_m = rows.log_extremal(x, sign, 1.0 / alpha, &mut regimes[k])?;
            best = best.max(alpha * ln_m);
        }
    }
    Ok(best)
}

fn chi0_with_rows(
    x: &Point,
    params: &ChiParams,
    rows: &CondenserRows,
) -> Result<Chi0Value, ChiError> {
    let mut per_eps = Vec::with_capacity(params.epsilon_grid.len());
    let mut regimes = [None, None];
    for &eps in &params.epsilon_grid {
        let v = chi_eps_cached(x, eps, params, rows, &mut regimes)?;
        if let Some(&prev) = per_eps.last() {
            let violation = v - prev;
            if violation > 10.0 * params.tolerance {
                return Err(ChiError::Monotonicity { violation });
            }
        }
        per_eps.push(v);
    }
    let n = per_eps.len();
    let value = per_eps[n - 1];
    let converged = n < 2 || (per_eps[n - 2] - value).abs() < params.tolerance;
    Ok(Chi0Value { value, converged, per_eps })
}

/// The vanishing-eps value at one point: the last epsilon-grid value, with
/// a convergence flag from the final two entries.
pub fn chi0_at(
    x: &Point,
    e: &SampledSet,
    d: &SampledSet,
    params: &ChiParams,
) -> Result<Chi0Value, ChiError> {
    params.validate()?;
    check_in_domain(x, d)?;
    let rows = CondenserRows::build(e, d, params.surrogate_degree)?;
    chi0_with_rows(x, params, &rows)
}

/// Evaluates the field over a grid of points, in parallel.
pub fn chi_field(
    grid: &[Point],
    e: &SampledSet,
    d: &SampledSet,
    params: &ChiParams,
) -> Result<ChiField, ChiError> {
    params.validate()?;
    if grid.is_empty() {
        return Err(ChiError::BadParams("empty evaluation grid".into()));
    }
    for x in grid {
        check_in_domain(x, d)?;
    }
    let rows = CondenserRows::build(e, d, params.surrogate_degree)?;
    let values: Result<Vec<Chi0Value>, ChiError> = grid
        .par_iter()
        .map(|x| chi0_with_rows(x, params, &rows))
        .collect();
    let values = values?;
    Ok(ChiField {
        grid: grid.to_vec(),
        chi_eps: values.iter().map(|v| v.per_eps.clone()).collect(),
        chi0: values.iter().map(|v| v.value).collect(),
        converged: values.iter().map(|v| v.converged).collect(),
        surrogate_degree: params.surrogate_degree,
    })
}

/// Grid points where the field is below `alpha`.
#[derive(Clone, Debug, Serialize)]
pub struct Sublevel {
    pub alpha: f64,
    pub points: Vec<Point>,
    pub is_empty: bool,
}

pub fn sublevel(field: &ChiField, alpha: f64) -> Result<Sublevel, ChiError> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(ChiError::BadParams(format!("alpha {alpha} outside (0,1)")));
    }
    let points: Vec<Point> = field
        .grid
        .iter()
        .zip(&field.chi0)
        .filter(|(_, &v)| v < alpha)
        .map(|(p, _)| *p)
        .collect();
    let is_empty = points.is_empty();
    Ok(Sublevel { alpha, points, is_empty })
}

/// Evidence about whether E has vanishing mass in D (field identically 1).
#[derive(Clone, Debug, Serialize)]
pub struct NullChiEvidence {
    pub is_null: bool,
    pub min_chi0: f64,
    pub witness: Option<Point>,
    pub evaluated: usize,
    /// Grid points skipped for sitting within E's mesh of E itself; this
    /// stands in for the upper regularization in the definition, which
    /// lifts values at negligible sets to their neighborhood limit.
    pub excluded_near_e: usize,
}

pub fn is_null_chi(
    e: &SampledSet,
    d: &SampledSet,
    params: &ChiParams,
    grid: &[Point],
) -> Result<NullChiEvidence, ChiError> {
    params.validate()?;
    let exclusion = e.mesh;
    let kept: Vec<Point> = grid
        .iter()
        .copied()
        .filter(|p| set_distance(p, e) > exclusion)
        .collect();
    let excluded_near_e = grid.len() - kept.len();
    if kept.is_empty() {
        // Every grid point sits on E: E fills the domain and trivially has
        // nonvanishing mass.
        return Ok(NullChiEvidence {
            is_null: false,
            min_chi0: 0.0,
            witness: grid.first().copied(),
            evaluated: 0,
            excluded_near_e,
        });
    }
    let field = chi_field(&kept, e, d, params)?;
    let (imin, min_chi0) = field
        .chi0
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |acc, (i, &v)| {
            if v < acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    let is_null = min_chi0 > 1.0 - 2.0 * params.tolerance;
    Ok(NullChiEvidence {
        is_null,
        min_chi0,
        witness: if is_null { None } else { Some(field.grid[imin]) },
        evaluated: kept.len(),
        excluded_near_e,
    })
}

pub fn field_to_csv(field: &ChiField) -> String {
    let dim = field.grid.first().map_or(2, |p| p.dim());
    let mut out = String::from(if dim == 2 { "x,y,chi0\n" } else { "x,y,z,chi0\n" });
    for (p, v) in field.grid.iter().zip(&field.chi0) {
        let coords: Vec<String> = p.coords().iter().map(|c| format!("{c}")).collect();
        out.push_str(&format!("{},{v}\n", coords.join(",")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{grid_in_shape, sample_shape, ShapeDescriptor};

    fn ring_scene(e_mesh: f64, d_mesh: f64) -> (SampledSet, SampledSet) {
        let e = sample_shape(
            &ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 0.5 },
            e_mesh,
        )
        .unwrap();
        let d = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 2.0 },
            d_mesh,
        )
        .unwrap();
        (e, d)
    }

    /// Closed-form reference for the ring condenser: ln(r/a) / ln(R/a)
    /// clamped to [0, 1], from the three-circles inequality.
    fn ring_theta(r: f64) -> f64 {
        (((r / 0.5).ln()) / ((2.0f64 / 0.5).ln())).clamp(0.0, 1.0)
    }

    #[test]
    fn vanishes_on_e_points() {
        let (e, d) = ring_scene(0.1, 0.2);
        let params = ChiParams::default();
        let v = chi0_at(&e.points[0], &e, &d, &params).unwrap();
        assert!(v.value.abs() <= params.tolerance, "value {}", v.value);
    }

    #[test]
    fn bounded_by_one_plus_tolerance() {
        let (e, d) = ring_scene(0.1, 0.2);
        let params = ChiParams::default();
        for p in [Point::d2(1.2, 0.0), Point::d2(0.0, 1.8), Point::d2(-0.9, 0.9)] {
            let v = chi0_at(&p, &e, &d, &params).unwrap();
            assert!(v.value >= -params.tolerance);
            assert!(v.value <= 1.0 + params.tolerance, "value {}", v.value);
        }
    }

    #[test]
    fn ring_value_matches_closed_form_and_refinement() {
        let (e, d) = ring_scene(0.08, 0.16);
        let params = ChiParams::default();
        let x = Point::d2(1.0, 0.0);
        let coarse = chi0_at(&x, &e, &d, &params).unwrap();
        // Closed-form cross-check.
        assert!(
            (coarse.value - ring_theta(1.0)).abs() < 0.07,
            "value {} vs theta {}",
            coarse.value,
            ring_theta(1.0)
        );
        // Refinement oracle: doubled degree, doubled alpha grid, halved mesh.
        let (e2, d2) = ring_scene(0.04, 0.08);
        let refined_params = ChiParams {
            surrogate_degree: params.surrogate_degree * 2,
            alpha_per_epsilon: params.alpha_per_epsilon * 2,
            ..params.clone()
        };
        let fine = chi0_at(&x, &e2, &d2, &refined_params).unwrap();
        assert!(
            (coarse.value - fine.value).abs() < 0.05,
            "coarse {} fine {}",
            coarse.value,
            fine.value
        );
    }

    #[test]
    fn interior_of_e_circle_is_zero() {
        let (e, d) = ring_scene(0.1, 0.2);
        let params = ChiParams::default();
        let v = chi0_at(&Point::d2(0.2, 0.1), &e, &d, &params).unwrap();
        assert!(v.value <= params.tolerance, "value {}", v.value);
    }

    #[test]
    fn eps_monotone_within_tolerance() {
        let (e, d) = ring_scene(0.1, 0.2);
        let params = ChiParams::default();
        for p in [Point::d2(0.8, 0.3), Point::d2(1.5, 0.0)] {
            let v = chi0_at(&p, &e, &d, &params).unwrap();
            for w in v.per_eps.windows(2) {
                assert!(w[1] <= w[0] + params.tolerance, "eps sequence {:?}", v.per_eps);
            }
        }
    }

    #[test]
    fn set_monotonicity_in_e() {
        // Bigger E means more constraints, so the value can only drop.
        let (e_small, d) = ring_scene(0.1, 0.2);
        let e_big = sample_shape(
            &ShapeDescriptor::UnionOf {
                parts: vec![
                    ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 0.5 },
                    ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 0.8 },
                ],
            },
            0.1,
        )
        .unwrap();
        let params = ChiParams::default();
        let x = Point::d2(1.3, 0.2);
        let small = chi0_at(&x, &e_small, &d, &params).unwrap().value;
        let big = chi0_at(&x, &e_big, &d, &params).unwrap().value;
        assert!(big <= small + params.tolerance, "small {small} big {big}");
    }

    #[test]
    fn surrogate_degree_monotonicity() {
        let (e, d) = ring_scene(0.1, 0.2);
        let x = Point::d2(1.0, 0.0);
        let lo = chi0_at(&x, &e, &d, &ChiParams { surrogate_degree: 4, ..Default::default() })
            .unwrap()
            .value;
        let hi = chi0_at(&x, &e, &d, &ChiParams { surrogate_degree: 8, ..Default::default() })
            .unwrap()
            .value;
        assert!(hi >= lo - 0.02, "lo {lo} hi {hi}");
    }

    #[test]
    fn field_sublevel_nested_and_outward() {
        let (e, d) = ring_scene(0.12, 0.25);
        let grid = grid_in_shape(&d.source, 12, 12).unwrap();
        let params = ChiParams { alpha_per_epsilon: 4, ..Default::default() };
        let field = chi_field(&grid, &e, &d, &params).unwrap();
        let s_small = sublevel(&field, 0.2).unwrap();
        let s_big = sublevel(&field, 0.6).unwrap();
        assert!(s_small.points.len() <= s_big.points.len());
        for p in &s_small.points {
            assert!(s_big.points.contains(p));
        }
        // The sublevel boundary radius grows with alpha in the ring scene.
        let max_r = |pts: &[Point]| {
            pts.iter()
                .map(|p| p.dist(&Point::d2(0.0, 0.0)))
                .fold(0.0f64, f64::max)
        };
        assert!(max_r(&s_small.points) <= max_r(&s_big.points) + 1e-12);
    }

    #[test]
    fn null_evidence_for_tiny_finite_set() {
        let e = sample_shape(
            &ShapeDescriptor::FinitePoints {
                points: vec![vec![0.3, 0.0], vec![-0.2, 0.25], vec![0.0, -0.35]],
            },
            0.1,
        )
        .unwrap();
        let d = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 2.0 },
            0.2,
        )
        .unwrap();
        let grid = grid_in_shape(&d.source, 8, 8).unwrap();
        let params = ChiParams { surrogate_degree: 10, ..Default::default() };
        let ev = is_null_chi(&e, &d, &params, &grid).unwrap();
        assert!(ev.min_chi0 > 0.9, "min {}", ev.min_chi0);
        assert!(ev.is_null);
    }

    #[test]
    fn subdisk_is_not_null() {
        let e = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 0.6 },
            0.12,
        )
        .unwrap();
        let d = sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius: 2.0 },
            0.25,
        )
        .unwrap();
        let grid = grid_in_shape(&d.source, 10, 10).unwrap();
        let params = ChiParams { alpha_per_epsilon: 4, ..Default::default() };
        let ev = is_null_chi(&e, &d, &params, &grid).unwrap();
        assert!(!ev.is_null);
        let w = ev.witness.unwrap();
        assert!(ev.min_chi0 < 0.5, "min {} at {:?}", ev.min_chi0, w.coords());
    }

    #[test]
    fn full_domain_e_is_not_null() {
        let (_, d) = ring_scene(0.1, 0.25);
        let e = d.clone();
        let grid = grid_in_shape(&d.source, 8, 8).unwrap();
        let ev = is_null_chi(&e, &d, &ChiParams::default(), &grid).unwrap();
        assert!(!ev.is_null);
    }

    #[test]
    fn parameter_validation() {
        let p = ChiParams { epsilon_grid: vec![0.1, 0.5], ..Default::default() };
        assert!(p.validate().is_err());
        let p = ChiParams { epsilon_grid: vec![], ..Default::default() };
        assert!(p.validate().is_err());
        let p = ChiParams { alpha_per_epsilon: 1, ..Default::default() };
        assert!(p.validate().is_err());
        let (e, d) = ring_scene(0.2, 0.4);
        let far = Point::d2(5.0, 5.0);
        assert!(matches!(
            chi0_at(&far, &e, &d, &ChiParams::default()),
            Err(ChiError::OutsideDomain { .. })
        ));
    }

    #[test]
    fn csv_export_shape() {
        let (e, d) = ring_scene(0.15, 0.3);
        let grid = vec![Point::d2(1.0, 0.0), Point::d2(0.0, 1.0)];
        let params = ChiParams { alpha_per_epsilon: 3, ..Default::default() };
        let field = chi_field(&grid, &e, &d, &params).unwrap();
        let csv = field_to_csv(&field);
        assert!(csv.starts_with("x,y,chi0\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
