//! Bernstein-ratio probes of regularity at a point.
//!
//! The ratio at degree m is the worst-case sup-norm amplification from
//! `E ∩ B(x0, r)` to the ball `B(x0, r)` over harmonic polynomials of
//! degree at most m. Its m-th-root growth diagnoses whether norms on E
//! control norms on the ball with only geometric loss; an unbounded LP
//! means some polynomial annihilates the constraint set outright, which is
//! reported separately with the witness polynomial.

use crate::basis::{eval_basis, eval_basis_matrix, BasisError, BasisSpec, HarmonicPoly};
use crate::geometry::{GeometryError, Point, SampledSet, ShapeDescriptor};
use crate::lp::{self, LpError, LpProblem, LpStatus};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Default decision margin on the ratio growth rate.
pub const DEFAULT_THETA: f64 = 0.1;

#[derive(Debug, Error)]
pub enum RegularityError {
    #[error("E ∩ B(x0, r={0}) contains no samples: no constraint set")]
    EmptyIntersection(f64),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("internal: ratio LP reported {0:?}")]
    UnexpectedStatus(LpStatus),
    #[error("unbounded ratio LP did not produce a ray certificate")]
    MissingWitness,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// One degree's outcome: a finite worst-case ratio, or the annihilation
/// sentinel with the witness polynomial.
#[derive(Clone, Debug)]
pub enum BernsteinOutcome {
    Finite(f64),
    Annihilated { witness: HarmonicPoly, ball_sup: f64, set_sup: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityVerdict {
    RegularEvidence,
    IrregularEvidence,
    DegenerateAnnihilated,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityProfile {
    pub x0: Point,
    pub r: f64,
    /// Ratio per degree m = 1..=m_max; None marks the annihilation sentinel.
    pub ratios: Vec<Option<f64>>,
    pub growth_estimate: f64,
    pub window: usize,
    pub theta: f64,
    pub verdict: RegularityVerdict,
    pub witness: Option<HarmonicPoly>,
}

/// Worst-case ratio `sup_B |P| / sup_{E∩B} |P|` over degree <= m, computed
/// by maximizing |P| at each ball sample subject to |P| <= 1 on the
/// intersection samples.
pub fn bernstein_ratio(
    e: &SampledSet,
    x0: &Point,
    r: f64,
    m: usize,
    ball_mesh: f64,
) -> Result<BernsteinOutcome, RegularityError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(RegularityError::BadParameter(format!("radius {r}")));
    }
    let ball = sample_ball(x0, r, ball_mesh)?;
    let constraint: Vec<Point> = e
        .points
        .iter()
        .copied()
        .filter(|p| p.dist(x0) < r)
        .collect();
    if constraint.is_empty() {
        return Err(RegularityError::EmptyIntersection(r));
    }
    let spec = BasisSpec::new(e.dim(), m)?;
    let rows = eval_basis_matrix(&spec, &constraint);

    let outcomes: Result<Vec<BernsteinOutcome>, RegularityError> = ball
        .points
        .par_iter()
        .map(|y| ratio_at_point(&spec, &rows, y))
        .collect();
    let mut best = 1.0f64;
    for outcome in outcomes? {
        match outcome {
            BernsteinOutcome::Finite(v) => best = best.max(v),
            BernsteinOutcome::Annihilated { witness, ball_sup: _, set_sup } => {
                // Normalize the witness on the ball samples for reporting.
                let ball_sup = witness.sup_norm(&ball);
                let coeffs: Vec<f64> =
                    witness.coeffs.iter().map(|c| c / ball_sup).collect();
                let witness = HarmonicPoly::new(spec, coeffs)?;
                return Ok(BernsteinOutcome::Annihilated {
                    set_sup: set_sup / ball_sup,
                    ball_sup: 1.0,
                    witness,
                });
            }
        }
    }
    Ok(BernsteinOutcome::Finite(best))
}

/// Probe-ball evaluation points: the open-ball lattice anchored at x0.
/// A plain lattice (no boundary ring) keeps the evaluation points
/// commensurate with sample sets drawn on the same pitch, so a covering E
/// contains every probe point and the ratio is exactly one; the lattice
/// still covers the ball within one mesh.
fn sample_ball(x0: &Point, r: f64, mesh: f64) -> Result<SampledSet, RegularityError> {
    let dim = x0.dim();
    let n = (r / mesh).floor() as i64;
    let mut pts = Vec::new();
    let mut idx = vec![-n; dim];
    'outer: loop {
        let coords: Vec<f64> = (0..dim)
            .map(|i| x0.coords()[i] + idx[i] as f64 * mesh)
            .collect();
        let p = Point::from_slice(&coords)?;
        if p.dist(x0) < r {
            pts.push(p);
        }
        for i in 0..dim {
            idx[i] += 1;
            if idx[i] <= n {
                continue 'outer;
            }
            idx[i] = -n;
        }
        break;
    }
    let shape = ShapeDescriptor::Disk { center: x0.coords().to_vec(), radius: r };
    Ok(SampledSet::new("probe_ball", pts, shape, mesh)?)
}

fn ratio_at_point(
    spec: &BasisSpec,
    constraint_rows: &[Vec<f64>],
    y: &Point,
) -> Result<BernsteinOutcome, RegularityError> {
    let mut best = 0.0f64;
    for sign in [1.0f64, -1.0] {
        let objective: Vec<f64> = eval_basis(spec, y).into_iter().map(|v| sign * v).collect();
        let mut problem = LpProblem::new(objective);
        for row in constraint_rows {
            problem.push_row(row.clone(), 1.0);
            problem.push_row(row.iter().map(|v| -v).collect(), 1.0);
        }
        let sol = lp::solve(&problem)?;
        match sol.status {
            LpStatus::Optimal => best = best.max(sol.objective_value),
            LpStatus::Unbounded => {
                let ray = sol.ray.ok_or(RegularityError::MissingWitness)?;
                let witness = HarmonicPoly::new(*spec, ray)?;
                let set_sup = constraint_rows
                    .iter()
                    .map(|row| crate::basis::dot(&witness.coeffs, row).abs())
                    .fold(0.0f64, f64::max);
                return Ok(BernsteinOutcome::Annihilated {
                    ball_sup: witness.eval(y).abs(),
                    set_sup,
                    witness,
                });
            }
            LpStatus::Infeasible => {
                return Err(RegularityError::UnexpectedStatus(LpStatus::Infeasible))
            }
        }
    }
    Ok(BernsteinOutcome::Finite(best))
}

/// Ratio profile over degrees 1..=m_max with a growth verdict.
pub fn regularity_profile(
    e: &SampledSet,
    x0: &Point,
    r: f64,
    m_max: usize,
    window: usize,
    ball_mesh: f64,
    theta: f64,
) -> Result<RegularityProfile, RegularityError> {
    if m_max < 1 {
        return Err(RegularityError::BadParameter("m_max must be >= 1".into()));
    }
    let window = window.clamp(1, m_max);
    let mut ratios: Vec<Option<f64>> = Vec::with_capacity(m_max);
    let mut witness = None;
    for m in 1..=m_max {
        match bernstein_ratio(e, x0, r, m, ball_mesh)? {
            BernsteinOutcome::Finite(v) => ratios.push(Some(v)),
            BernsteinOutcome::Annihilated { witness: w, .. } => {
                ratios.push(None);
                witness = Some(w);
                // Larger degrees contain the same annihilating polynomial.
                break;
            }
        }
    }
    let finite: Vec<(usize, f64)> = ratios
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i + 1, v)))
        .collect();
    let growth_estimate = finite
        .iter()
        .rev()
        .take(window)
        .map(|&(m, v)| v.powf(1.0 / m as f64))
        .fold(1.0f64, f64::max);
    let verdict = if witness.is_some() {
        RegularityVerdict::DegenerateAnnihilated
    } else if growth_estimate <= 1.0 + theta {
        RegularityVerdict::RegularEvidence
    } else {
        RegularityVerdict::IrregularEvidence
    };
    Ok(RegularityProfile {
        x0: *x0,
        r,
        ratios,
        growth_estimate,
        window,
        theta,
        verdict,
        witness,
    })
}

/// Profiles at the radius grid {r, r/2, r/4}.
pub fn regularity_scan(
    e: &SampledSet,
    x0: &Point,
    r: f64,
    m_max: usize,
    window: usize,
    ball_mesh: f64,
    theta: f64,
) -> Result<Vec<RegularityProfile>, RegularityError> {
    [r, r / 2.0, r / 4.0]
        .iter()
        .map(|&ri| regularity_profile(e, x0, ri, m_max, window, ball_mesh, theta))
        .collect()
}

pub fn profile_to_csv(profile: &RegularityProfile) -> String {
    let mut out = String::from("m,rho_m\n");
    for (i, v) in profile.ratios.iter().enumerate() {
        match v {
            Some(v) => out.push_str(&format!("{},{v}\n", i + 1)),
            None => out.push_str(&format!("{},unbounded\n", i + 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_shape;

    fn disk_e(radius: f64, mesh: f64) -> SampledSet {
        sample_shape(
            &ShapeDescriptor::Disk { center: vec![0.0, 0.0], radius },
            mesh,
        )
        .unwrap()
    }

    #[test]
    fn ratio_is_one_when_e_covers_ball() {
        let e = disk_e(1.0, 0.08);
        let out = bernstein_ratio(&e, &Point::d2(0.0, 0.0), 0.4, 3, 0.08).unwrap();
        match out {
            BernsteinOutcome::Finite(v) => {
                assert!((1.0..1.1).contains(&v), "ratio {v}")
            }
            _ => panic!("expected finite ratio"),
        }
    }

    #[test]
    fn segment_is_annihilated() {
        let e = sample_shape(
            &ShapeDescriptor::Segment { a: vec![-1.0, 0.0], b: vec![1.0, 0.0] },
            0.05,
        )
        .unwrap();
        let out = bernstein_ratio(&e, &Point::d2(0.0, 0.0), 0.5, 2, 0.1).unwrap();
        match out {
            BernsteinOutcome::Annihilated { witness, ball_sup, set_sup } => {
                assert!(set_sup < 1e-10, "set sup {set_sup}");
                assert!(ball_sup > 0.1);
                // The witness behaves like a multiple of the conjugate
                // coordinate: zero on the axis, nonzero off it.
                assert!(witness.eval(&Point::d2(0.3, 0.0)).abs() < 1e-9);
                assert!(witness.eval(&Point::d2(0.0, 0.3)).abs() > 1e-6);
            }
            BernsteinOutcome::Finite(v) => panic!("expected sentinel, got {v}"),
        }
    }

    #[test]
    fn single_point_is_annihilated() {
        let e = sample_shape(
            &ShapeDescriptor::FinitePoints { points: vec![vec![0.2, 0.1]] },
            0.1,
        )
        .unwrap();
        let profile =
            regularity_profile(&e, &Point::d2(0.2, 0.1), 0.3, 3, 3, 0.1, DEFAULT_THETA).unwrap();
        assert_eq!(profile.verdict, RegularityVerdict::DegenerateAnnihilated);
        assert!(profile.ratios[0].is_none());
        assert!(profile.witness.is_some());
    }

    #[test]
    fn circle_arc_ratio_matches_refined_oracle() {
        // E = circle of radius r/2 inside the probe ball.
        let e = sample_shape(
            &ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 0.25 },
            0.04,
        )
        .unwrap();
        let coarse = match bernstein_ratio(&e, &Point::d2(0.0, 0.0), 0.5, 5, 0.08).unwrap() {
            BernsteinOutcome::Finite(v) => v,
            _ => panic!("finite expected"),
        };
        let e_fine = sample_shape(
            &ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 0.25 },
            0.02,
        )
        .unwrap();
        let fine = match bernstein_ratio(&e_fine, &Point::d2(0.0, 0.0), 0.5, 5, 0.04).unwrap() {
            BernsteinOutcome::Finite(v) => v,
            _ => panic!("finite expected"),
        };
        assert!(
            (coarse - fine).abs() / fine < 0.1,
            "coarse {coarse} fine {fine}"
        );
        // Closed-form growth scale for the ring: (r / r_E)^m.
        assert!((fine / 2.0f64.powi(5) - 1.0).abs() < 0.3, "fine {fine}");
    }

    #[test]
    fn disk_profile_is_regular_evidence() {
        let e = disk_e(1.0, 0.07);
        let profile =
            regularity_profile(&e, &Point::d2(0.0, 0.0), 0.5, 8, 4, 0.1, DEFAULT_THETA).unwrap();
        assert_eq!(profile.verdict, RegularityVerdict::RegularEvidence);
        assert!(profile.growth_estimate <= 1.1, "growth {}", profile.growth_estimate);
    }

    #[test]
    fn ratios_nondecreasing_in_degree() {
        let e = sample_shape(
            &ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 0.25 },
            0.04,
        )
        .unwrap();
        let mut prev = 0.0;
        for m in 1..=5 {
            let v = match bernstein_ratio(&e, &Point::d2(0.0, 0.0), 0.5, m, 0.1).unwrap() {
                BernsteinOutcome::Finite(v) => v,
                _ => panic!("finite expected"),
            };
            assert!(v >= prev - 1e-9, "m={m}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn ratio_nonincreasing_as_e_grows() {
        let small = sample_shape(
            &ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 0.25 },
            0.05,
        )
        .unwrap();
        let big = sample_shape(
            &ShapeDescriptor::UnionOf {
                parts: vec![
                    ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 0.25 },
                    ShapeDescriptor::Circle { center: vec![0.0, 0.0], radius: 0.4 },
                ],
            },
            0.05,
        )
        .unwrap();
        let x0 = Point::d2(0.0, 0.0);
        let vs = match bernstein_ratio(&small, &x0, 0.5, 4, 0.1).unwrap() {
            BernsteinOutcome::Finite(v) => v,
            _ => panic!(),
        };
        let vb = match bernstein_ratio(&big, &x0, 0.5, 4, 0.1).unwrap() {
            BernsteinOutcome::Finite(v) => v,
            _ => panic!(),
        };
        assert!(vb <= vs + 1e-9, "small {vs} big {vb}");
    }

    #[test]
    fn shrinking_radius_with_covering_e_stays_at_one() {
        let e = disk_e(1.0, 0.06);
        for r in [0.4, 0.2, 0.1] {
            let out = bernstein_ratio(&e, &Point::d2(0.0, 0.0), r, 4, 0.06).unwrap();
            match out {
                BernsteinOutcome::Finite(v) => assert!(v < 1.15, "r={r}: {v}"),
                _ => panic!("finite expected"),
            }
        }
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let e = disk_e(0.2, 0.05);
        let err = bernstein_ratio(&e, &Point::d2(5.0, 5.0), 0.3, 2, 0.1);
        assert!(matches!(err, Err(RegularityError::EmptyIntersection(_))));
    }

    #[test]
    fn scan_covers_radius_grid() {
        let e = disk_e(1.0, 0.08);
        let scan =
            regularity_scan(&e, &Point::d2(0.0, 0.0), 0.4, 4, 3, 0.08, DEFAULT_THETA).unwrap();
        assert_eq!(scan.len(), 3);
        assert!((scan[0].r - 0.4).abs() < 1e-12);
        assert!((scan[2].r - 0.1).abs() < 1e-12);
        for p in &scan {
            assert_eq!(p.verdict, RegularityVerdict::RegularEvidence);
        }
    }

    #[test]
    fn csv_marks_sentinel() {
        let e = sample_shape(
            &ShapeDescriptor::Segment { a: vec![-1.0, 0.0], b: vec![1.0, 0.0] },
            0.05,
        )
        .unwrap();
        let profile =
            regularity_profile(&e, &Point::d2(0.0, 0.0), 0.5, 3, 3, 0.1, DEFAULT_THETA).unwrap();
        let csv = profile_to_csv(&profile);
        assert!(csv.contains("unbounded"));
    }
}
