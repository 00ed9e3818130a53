//! The uniqueness estimate chain: from a deviation sequence on K, through
//! norms of the approximants on the zero set and a neighborhood, to a
//! geometric bound certifying that the function is indistinguishable from
//! zero at desk scale.
//!
//! The chain combines three measured ingredients — the decay rate d of the
//! deviations, the growth base b of approximant norms from K to its
//! δ-neighborhood, and a two-constants constant C on the condenser
//! (E, U_δ) — into the bound `L (d + ε)^{m (1 - 2(α+β))}`. The verdict is
//! evidence, never proof: every inequality is checked on samples and the
//! hypothesis probes (rate class, nonvanishing condenser mass of E,
//! regularity of K) are empirical.

use crate::basis::HarmonicPoly;
use crate::chi::{self, ChiError, ChiParams, NullChiEvidence};
use crate::geometry::{
    delta_neighborhood, grid_in_shape, GeometryError, Point, SampledSet, Scene,
};
use crate::minimax::{deviation_sequence, MinimaxError, TargetFunction};
use crate::rates::{classify, Classification, RatesError};
use crate::regularity::{regularity_profile, RegularityError, RegularityVerdict};
use crate::two_constants::{
    adversarial_search, verify_random, TwoConstantsError, FIT_SAFETY,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UniquenessError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Minimax(#[from] MinimaxError),
    #[error(transparent)]
    Rates(#[from] RatesError),
    #[error(transparent)]
    Chi(#[from] ChiError),
    #[error(transparent)]
    Regularity(#[from] RegularityError),
    #[error(transparent)]
    TwoConstants(#[from] TwoConstantsError),
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessConfig {
    /// Neighborhood size; None reuses the scene's delta.
    pub delta: Option<f64>,
    /// Exponent pair of the two-constants combination; alpha + beta < 1/2.
    pub alpha: f64,
    pub beta: f64,
    /// Rate slack ε with 0 < ε < 1 - d; None picks 0.1 (1 - d).
    pub eps_margin: Option<f64>,
    /// Growth base; must satisfy 1 < b < 1/(d + ε). None picks
    /// 0.998/(d + ε).
    pub b: Option<f64>,
    pub m_max: usize,
    /// Trailing window for the rate estimates.
    pub window: usize,
    /// Decision margin of the rate classification.
    pub margin: f64,
    /// Condenser surrogate degree.
    pub surrogate_degree: usize,
    /// Lattice pitch for neighborhood sampling; None uses 2x K's mesh.
    pub nbhd_mesh: Option<f64>,
    /// Side length of the condenser evidence grid.
    pub grid_n: usize,
    /// Regularity probe: degrees and radius (None: delta).
    pub probe_m_max: usize,
    pub probe_r: Option<f64>,
    /// Two-constants ensemble controls.
    pub tc_samples: usize,
    pub seed: u64,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        UniquenessConfig {
            delta: None,
            alpha: 0.2,
            beta: 0.2,
            eps_margin: None,
            b: None,
            m_max: 16,
            window: 6,
            margin: 0.05,
            surrogate_degree: 8,
            nbhd_mesh: None,
            grid_n: 16,
            probe_m_max: 8,
            probe_r: None,
            tc_samples: 300,
            seed: 7,
        }
    }
}

/// One degree of the chain. Measured quantities are suprema over samples;
/// `norm_u` is the two-constants output of the chain (the certified bound
/// on the neighborhood norm built from d, b, C, M), with the directly
/// measured neighborhood supremum kept alongside.
#[derive(Clone, Debug, Serialize)]
pub struct ChainRecord {
    pub m: usize,
    pub dev_k: f64,
    pub norm_e: f64,
    pub norm_k: f64,
    pub norm_udelta: f64,
    pub norm_u_measured: Option<f64>,
    pub norm_u: Option<f64>,
    pub predicted_bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisChecks {
    pub qh_class: Classification,
    pub e_nonnull_chi: Option<bool>,
    pub k_regular_evidence: Option<RegularityVerdict>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    FIdenticallyZeroEvidence,
    HypothesesNotMet,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub records: Vec<ChainRecord>,
    pub d_estimate: f64,
    pub eps_margin: f64,
    pub b_used: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub c_fitted: Option<f64>,
    pub m_fitted: Option<f64>,
    pub f_sup_k: f64,
    /// First degree with deviation below one.
    pub k0: Option<usize>,
    pub eq4_rate_ok: bool,
    pub eq5_bound_ok: bool,
    pub lemma_violations: usize,
    pub slope_chain: Option<f64>,
    pub slope_predicted: Option<f64>,
    pub hypothesis_checks: HypothesisChecks,
    pub conclusion: Conclusion,
    /// Upper bound on sup_K |f| reported with a positive conclusion.
    pub f_bound_reported: Option<f64>,
    pub k_inside_u: Option<bool>,
    pub null_evidence: Option<NullChiEvidence>,
    pub notes: Vec<String>,
}

fn validate_config(cfg: &UniquenessConfig, scene: &Scene) -> Result<f64, UniquenessError> {
    if !(cfg.alpha > 0.0 && cfg.beta > 0.0 && cfg.alpha + cfg.beta < 0.5) {
        return Err(UniquenessError::BadConfig(format!(
            "need alpha, beta > 0 with alpha + beta < 1/2, got {} + {}",
            cfg.alpha, cfg.beta
        )));
    }
    if cfg.m_max < cfg.window + 2 {
        return Err(UniquenessError::BadConfig(
            "m_max must exceed the rate window by at least 2".into(),
        ));
    }
    let delta = cfg.delta.unwrap_or(scene.delta);
    if !(delta > 0.0 && delta <= scene.delta + 1e-12) {
        return Err(UniquenessError::BadConfig(format!(
            "delta {delta} must lie in (0, scene delta = {}]",
            scene.delta
        )));
    }
    Ok(delta)
}

/// Runs the full chain on a target function over a scene.
pub fn run_pipeline(
    f: &TargetFunction,
    scene: &Scene,
    cfg: &UniquenessConfig,
) -> Result<UniquenessReport, UniquenessError> {
    let delta = validate_config(cfg, scene)?;
    let mut notes: Vec<String> = Vec::new();

    // Deviation sequence and rate classification on K.
    let seq = deviation_sequence(f, &scene.k, cfg.m_max)?;
    let devs: Vec<f64> = seq.iter().map(|r| r.deviation).collect();
    let decay = classify(&devs, cfg.window, cfg.margin)?;
    let d_estimate = decay.d_estimate();
    let qh_class = decay.classification;
    let qh_ok = qh_class != Classification::NotQuasiharmonic && d_estimate < 1.0;

    let mut f_sup_k = 0.0f64;
    for p in &scene.k.points {
        f_sup_k = f_sup_k.max(f.eval(p)?.abs());
    }

    // Measured norms of each approximant.
    let norm_e: Vec<f64> = seq.iter().map(|r| r.poly.sup_norm(&scene.e)).collect();
    let norm_k: Vec<f64> = seq.iter().map(|r| r.poly.sup_norm(&scene.k)).collect();
    let k0 = devs.iter().position(|&d| d < 1.0);

    // Neighborhood of K; the scene's domain already is the δ-neighborhood
    // when delta matches.
    let nbhd_mesh = cfg.nbhd_mesh.unwrap_or(2.0 * scene.k.mesh);
    let u_delta = if (delta - scene.delta).abs() < 1e-12 {
        scene.d.clone()
    } else {
        delta_neighborhood(&scene.k, delta, nbhd_mesh)?
    };
    let norm_udelta: Vec<f64> = seq.iter().map(|r| r.poly.sup_norm(&u_delta)).collect();

    // Rate-slack and growth-base resolution.
    let (eps_margin, b_used) = if d_estimate < 1.0 {
        let eps = cfg.eps_margin.unwrap_or(0.1 * (1.0 - d_estimate));
        if !(eps > 0.0 && eps < 1.0 - d_estimate) {
            return Err(UniquenessError::BadConfig(format!(
                "eps_margin {eps} must lie in (0, 1 - d) with d = {d_estimate}"
            )));
        }
        let b_cap = 1.0 / (d_estimate + eps);
        let b = cfg.b.unwrap_or(0.998 * b_cap);
        if !(b > 1.0) || b >= b_cap {
            return Err(UniquenessError::BadConfig(format!(
                "b {b} must lie in (1, 1/(d + eps) = {b_cap})"
            )));
        }
        (eps, Some(b))
    } else {
        notes.push(format!(
            "rate estimate {d_estimate} is not below one: not quasiharmonic on this evidence"
        ));
        (cfg.eps_margin.unwrap_or(0.1), None)
    };

    // Rate check on the zero set over the trailing window, against the
    // slackened rate cap.
    let window_start = cfg.m_max + 1 - cfg.window;
    let eq4_rate_ok = b_used.is_some()
        && (window_start..=cfg.m_max).all(|m| {
            norm_e[m] <= (d_estimate + eps_margin).powi(m as i32) * (1.0 + 1e-6) + 1e-12
        });

    // Uniform bound on the approximants once the deviations dip below one.
    let eq5_bound_ok = match k0 {
        Some(k0) => (k0..=cfg.m_max).all(|m| norm_k[m] <= 1.0 + f_sup_k + 1e-6 * (1.0 + f_sup_k)),
        None => false,
    };

    // Growth fit from K to the neighborhood.
    let m_fitted = b_used.map(|b| {
        (1..=cfg.m_max)
            .filter(|&m| norm_k[m] > 1e-300)
            .map(|m| norm_udelta[m] / (b.powi(m as i32) * norm_k[m]))
            .fold(1e-12f64, f64::max)
    });

    // Regularity probe at the sample nearest K's centroid.
    let centroid = {
        let mut c = vec![0.0; scene.k.dim()];
        for p in &scene.k.points {
            for (ci, xi) in c.iter_mut().zip(p.coords()) {
                *ci += xi;
            }
        }
        for ci in &mut c {
            *ci /= scene.k.len() as f64;
        }
        Point::from_slice(&c)?
    };
    let x0 = scene
        .k
        .points
        .iter()
        .copied()
        .min_by(|a, b| {
            a.dist(&centroid)
                .partial_cmp(&b.dist(&centroid))
                .expect("finite")
        })
        .expect("nonempty");
    let probe_r = cfg.probe_r.unwrap_or(delta);
    let profile = regularity_profile(
        &scene.k,
        &x0,
        probe_r,
        cfg.probe_m_max,
        cfg.window.min(cfg.probe_m_max),
        scene.k.mesh,
        crate::regularity::DEFAULT_THETA,
    )?;
    let k_regular = profile.verdict;
    let k_regular_ok = k_regular == RegularityVerdict::RegularEvidence;

    // Condenser evidence for E inside the neighborhood.
    let chi_params = ChiParams {
        epsilon_grid: vec![0.3, 0.15],
        surrogate_degree: cfg.surrogate_degree,
        ..Default::default()
    };
    let grid = grid_in_shape(&u_delta.source, cfg.grid_n, cfg.grid_n)?;
    let null_evidence = chi::is_null_chi(&scene.e, &u_delta, &chi_params, &grid)?;
    let e_nonnull = !null_evidence.is_null;
    if !e_nonnull {
        notes.push("E appears polar / negligible-mass on this evidence".into());
    }

    let hypotheses_hold = qh_ok && e_nonnull && k_regular_ok;

    // Two-constants constant on (E, ·, U_δ) with the chain exponents.
    let c_random = verify_random(
        &scene.e,
        &scene.k,
        &u_delta,
        cfg.alpha,
        cfg.beta,
        cfg.m_max,
        cfg.tc_samples,
        cfg.seed,
        None,
    )?;

    // The open set between K and the sublevel region: half-δ neighborhood
    // points where the condenser field stays below alpha.
    let mut u_points: Option<Vec<Point>> = None;
    let mut k_inside_u: Option<bool> = None;
    let mut c_fitted = Some(c_random.fitted_c);
    let mut norm_u_measured: Vec<Option<f64>> = vec![None; cfg.m_max + 1];
    if hypotheses_hold {
        let u_half = delta_neighborhood(&scene.k, delta / 2.0, nbhd_mesh)?;
        let stride = (u_half.len() / 120).max(1);
        let probes: Vec<Point> = u_half.points.iter().copied().step_by(stride).collect();
        let field = chi::chi_field(&probes, &scene.e, &u_delta, &chi_params)?;
        let inside: Vec<Point> = field
            .grid
            .iter()
            .zip(&field.chi0)
            .filter(|(_, &v)| v < cfg.alpha)
            .map(|(p, _)| *p)
            .collect();
        if inside.is_empty() {
            notes.push("sublevel region between K and the neighborhood is empty".into());
        } else {
            // K membership evidence: probe K's own samples.
            let kstride = (scene.k.len() / 32).max(1);
            let kprobes: Vec<Point> =
                scene.k.points.iter().copied().step_by(kstride).collect();
            let kfield = chi::chi_field(&kprobes, &scene.e, &u_delta, &chi_params)?;
            k_inside_u = Some(kfield.chi0.iter().all(|&v| v < cfg.alpha));

            let u_set = SampledSet::new(
                "U",
                inside.clone(),
                u_half.source.clone(),
                nbhd_mesh,
            )?;
            for (m, r) in seq.iter().enumerate() {
                norm_u_measured[m] = Some(r.poly.sup_norm(&u_set));
            }
            let adv_stride = (u_set.len() / 80).max(1);
            let adv_probes = u_set.filter("U_adv", u_set.source.clone(), {
                let picked: Vec<Point> =
                    u_set.points.iter().copied().step_by(adv_stride).collect();
                move |p| picked.iter().any(|q| q == p)
            })?;
            let adv = adversarial_search(
                &scene.e,
                &adv_probes,
                &u_delta,
                cfg.alpha,
                cfg.beta,
                cfg.m_max,
                &[1.0, 10.0, 100.0, 1000.0],
            )?;
            c_fitted = Some(FIT_SAFETY * adv.max_ratio.max(c_random.worst_ratio));
            u_points = Some(inside);
        }
    }

    // Assemble the chain.
    let d_eps = d_estimate + eps_margin;
    let exponent = 1.0 - 2.0 * (cfg.alpha + cfg.beta);
    let mut records = Vec::with_capacity(cfg.m_max + 1);
    let mut lemma_violations = 0usize;
    for m in 0..=cfg.m_max {
        let (norm_u, predicted) = match (b_used, m_fitted, c_fitted) {
            (Some(b), Some(mm), Some(c)) => {
                let eq6_cap = d_eps.powi(m as i32);
                let udelta_cap = mm * b.powi(m as i32) * (1.0 + f_sup_k);
                let chain = c
                    * eq6_cap.powf(1.0 - cfg.alpha - cfg.beta)
                    * udelta_cap.powf(cfg.alpha + cfg.beta);
                let l_const = c * (mm * (1.0 + f_sup_k)).powf(cfg.alpha + cfg.beta);
                let predicted = l_const * d_eps.powf(m as f64 * exponent);
                (Some(chain), Some(predicted))
            }
            _ => (None, None),
        };
        if let (Some(measured), Some(c)) = (norm_u_measured[m], c_fitted) {
            let lemma_bound =
                c * norm_e[m].powf(1.0 - cfg.alpha - cfg.beta) * norm_udelta[m].powf(cfg.alpha + cfg.beta);
            if measured > lemma_bound * 1.05 + 1e-12 {
                lemma_violations += 1;
            }
        }
        records.push(ChainRecord {
            m,
            dev_k: devs[m],
            norm_e: norm_e[m],
            norm_k: norm_k[m],
            norm_udelta: norm_udelta[m],
            norm_u_measured: norm_u_measured[m],
            norm_u,
            predicted_bound: predicted,
        });
    }

    // Log-linear slope of the chain bound from k0 on, against the
    // geometric exponent of the final display.
    let fit_range: Vec<(f64, f64)> = records
        .iter()
        .skip(k0.unwrap_or(0))
        .filter_map(|r| r.norm_u.map(|v| (r.m as f64, v.max(1e-300).ln())))
        .collect();
    let slope_chain = linear_slope(&fit_range);
    let slope_predicted = b_used.map(|_| exponent * d_eps.ln());

    let slope_ok = match (slope_chain, slope_predicted) {
        (Some(s), Some(p)) => s < 0.0 && s <= p + 0.2 * p.abs(),
        _ => false,
    };

    let conclusion = if !hypotheses_hold {
        Conclusion::HypothesesNotMet
    } else if u_points.is_none() {
        Conclusion::Inconclusive
    } else if slope_ok && eq4_rate_ok && eq5_bound_ok && lemma_violations == 0 {
        Conclusion::FIdenticallyZeroEvidence
    } else {
        if !slope_ok {
            notes.push("chain bound does not decay at the predicted geometric rate".into());
        }
        if !eq4_rate_ok {
            notes.push("zero-set norms exceed the slackened rate cap".into());
        }
        if lemma_violations > 0 {
            notes.push(format!(
                "two-constants bound violated at {lemma_violations} degrees"
            ));
        }
        Conclusion::Inconclusive
    };

    let f_bound_reported = if conclusion == Conclusion::FIdenticallyZeroEvidence {
        let last = records.last().expect("nonempty");
        let tail_norm = if k_inside_u == Some(true) {
            last.norm_u_measured.or(last.norm_u)
        } else {
            last.norm_u
        };
        tail_norm.map(|v| v + last.dev_k)
    } else {
        None
    };

    Ok(UniquenessReport {
        records,
        d_estimate,
        eps_margin,
        b_used,
        alpha: cfg.alpha,
        beta: cfg.beta,
        c_fitted,
        m_fitted,
        f_sup_k,
        k0,
        eq4_rate_ok,
        eq5_bound_ok,
        lemma_violations,
        slope_chain,
        slope_predicted,
        hypothesis_checks: HypothesisChecks {
            qh_class,
            e_nonnull_chi: Some(e_nonnull),
            k_regular_evidence: Some(k_regular),
        },
        conclusion,
        f_bound_reported,
        k_inside_u,
        null_evidence: Some(null_evidence),
        notes,
    })
}

fn linear_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Builds the tiny-residual target: the pole function minus its own
/// best approximant at `degree` on K, optionally forced to exact zeros on
/// the zero-set region.
pub fn pole_minus_best(
    q: f64,
    degree: usize,
    scene: &Scene,
    zero_on_e: bool,
) -> Result<(TargetFunction, HarmonicPoly), UniquenessError> {
    let base = TargetFunction::PoleRe { q };
    let spec = crate::basis::BasisSpec::new(scene.k.dim(), degree)
        .map_err(|e| UniquenessError::Minimax(MinimaxError::Basis(e)))?;
    let fit = crate::minimax::best_approx(&base, &scene.k, &spec)?;
    let offset = TargetFunction::Offset { base: Box::new(base), minus: fit.poly.clone() };
    let f = if zero_on_e {
        offset.tabulate_zeroed(&scene.k, &scene.e.source, "pole_residual_zeroed")?
    } else {
        offset
    };
    Ok((f, fit.poly))
}

pub fn chain_to_csv(records: &[ChainRecord]) -> String {
    let mut out = String::from(
        "m,dev_k,norm_e,norm_k,norm_udelta,norm_u_measured,norm_u,predicted_bound\n",
    );
    let cell = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v}"));
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.m,
            r.dev_k,
            r.norm_e,
            r.norm_k,
            r.norm_udelta,
            cell(r.norm_u_measured),
            cell(r.norm_u),
            cell(r.predicted_bound),
        ));
    }
    out
}
