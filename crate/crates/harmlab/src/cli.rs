//! Scenario runner: one function per subcommand, writing CSV/JSON (and
//! optional SVG) artifacts into an output directory. Reruns with the same
//! config reproduce CSV/JSON outputs byte for byte.

use crate::chi;
use crate::geometry::grid_in_shape;
use crate::minimax::{deviation_sequence, results_to_csv, results_to_json};
use crate::rates::classify;
use crate::regularity::{regularity_profile, regularity_scan, profile_to_csv};
use crate::report::{heatmap_svg, semilog_svg, to_pretty_json, write_atomic};
use crate::scenario::{ScenarioConfig, ScenarioError};
use crate::two_constants::{adversarial_search, verify_random};
use crate::uniqueness::{chain_to_csv, run_pipeline, UniquenessConfig};
use serde::Serialize;
use std::path::Path;
use thiserror::Error;

/// CLI failures split by exit code: configuration problems exit 2,
/// numeric failures exit 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("io: {e}"))
    }
}

fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Flags shared by every subcommand.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunFlags {
    /// Double resolutions (halved meshes, doubled surrogate degrees).
    pub refine: bool,
    /// Seed override.
    pub seed: Option<u64>,
    /// SVG override.
    pub svg: Option<bool>,
}

fn load(config: &Path) -> Result<ScenarioConfig, CliError> {
    ScenarioConfig::from_path(config).map_err(CliError::from)
}

fn want_svg(cfg: &ScenarioConfig, flags: &RunFlags) -> bool {
    flags.svg.unwrap_or(cfg.svg)
}

pub fn cmd_approx(config: &Path, out: &Path, flags: &RunFlags) -> Result<(), CliError> {
    let cfg = load(config)?;
    let section = cfg
        .approx
        .as_ref()
        .ok_or(CliError::Config("config is missing the `approx` section".into()))?;
    let k = cfg.require_k(flags.refine)?;
    let f = cfg.build_function(None)?;
    let seq = deviation_sequence(&f, &k, section.m_max).map_err(numeric)?;
    let devs: Vec<f64> = seq.iter().map(|r| r.deviation).collect();
    let report = classify(&devs, section.window, section.margin).map_err(numeric)?;

    write_atomic(&out.join("deviations.csv"), &results_to_csv(&seq))?;
    write_atomic(&out.join("approx_results.json"), &results_to_json(&seq))?;
    write_atomic(&out.join("decay_report.json"), &to_pretty_json(&report))?;
    write_atomic(&out.join("decay_rates.csv"), &report.rates_csv())?;
    if want_svg(&cfg, flags) {
        let pts: Vec<(f64, f64)> = seq.iter().map(|r| (r.degree as f64, r.deviation)).collect();
        let svg = semilog_svg(&format!("{}: least deviations", cfg.label), &[("deviation", pts)]);
        write_atomic(&out.join("deviations.svg"), &svg)?;
    }
    println!(
        "{}: classification {:?} (limsup {:.4}, liminf {:.4})",
        cfg.label, report.classification, report.limsup_estimate, report.liminf_estimate
    );
    Ok(())
}

#[derive(Serialize)]
struct ChiSummary<'a> {
    label: &'a str,
    surrogate_degree: usize,
    evaluated: usize,
    converged: usize,
    #[serde(flatten)]
    verdict: &'a chi::NullChiEvidence,
}

pub fn cmd_chi(config: &Path, out: &Path, flags: &RunFlags) -> Result<(), CliError> {
    let cfg = load(config)?;
    let section = cfg
        .chi
        .as_ref()
        .ok_or(CliError::Config("config is missing the `chi` section".into()))?;
    let e = cfg.require_e(flags.refine)?;
    let d = cfg.require_d(flags.refine)?;
    let params = section.params(flags.refine);
    params.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let grid = grid_in_shape(&d.source, section.grid_nx, section.grid_ny)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let field = chi::chi_field(&grid, &e, &d, &params).map_err(numeric)?;
    let verdict = chi::is_null_chi(&e, &d, &params, &grid).map_err(numeric)?;

    write_atomic(&out.join("chi_field.csv"), &chi::field_to_csv(&field))?;
    let summary = ChiSummary {
        label: &cfg.label,
        surrogate_degree: params.surrogate_degree,
        evaluated: field.grid.len(),
        converged: field.converged.iter().filter(|&&c| c).count(),
        verdict: &verdict,
    };
    write_atomic(&out.join("null_verdict.json"), &to_pretty_json(&summary))?;
    if want_svg(&cfg, flags) {
        let cell = (field.grid[0].dist(&field.grid[1])).max(1e-6);
        let svg = heatmap_svg(&format!("{}: condenser field", cfg.label), &field.grid, &field.chi0, cell);
        write_atomic(&out.join("chi_field.svg"), &svg)?;
    }
    println!(
        "{}: min field value {:.4} over {} points; null evidence: {}",
        cfg.label,
        verdict.min_chi0,
        field.grid.len(),
        verdict.is_null
    );
    Ok(())
}

pub fn cmd_regularity(config: &Path, out: &Path, flags: &RunFlags) -> Result<(), CliError> {
    let cfg = load(config)?;
    let section = cfg
        .regularity
        .as_ref()
        .ok_or(CliError::Config("config is missing the `regularity` section".into()))?;
    let e = cfg.require_e(flags.refine)?;
    let x0 = crate::geometry::Point::from_slice(&section.x0)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let ball_mesh = if flags.refine { section.ball_mesh / 2.0 } else { section.ball_mesh };
    let profiles = if section.scan {
        regularity_scan(&e, &x0, section.r, section.m_max, section.window, ball_mesh, section.theta)
            .map_err(numeric)?
    } else {
        vec![regularity_profile(
            &e,
            &x0,
            section.r,
            section.m_max,
            section.window,
            ball_mesh,
            section.theta,
        )
        .map_err(numeric)?]
    };
    write_atomic(&out.join("regularity.json"), &to_pretty_json(&profiles))?;
    write_atomic(&out.join("regularity.csv"), &profile_to_csv(&profiles[0]))?;
    for p in &profiles {
        println!(
            "{}: r={} verdict {:?} (growth {:.4})",
            cfg.label, p.r, p.verdict, p.growth_estimate
        );
        if let Some(w) = &p.witness {
            println!("  witness coefficients: {:?}", w.coeffs);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TwoConstantsArtifact<'a> {
    label: &'a str,
    report: &'a crate::two_constants::TwoConstantsReport,
    adversarial: &'a crate::two_constants::AdversarialOutcome,
}

pub fn cmd_two_constants(config: &Path, out: &Path, flags: &RunFlags) -> Result<(), CliError> {
    let cfg = load(config)?;
    let section = cfg
        .two_constants
        .as_ref()
        .ok_or(CliError::Config("config is missing the `two_constants` section".into()))?;
    let e = cfg.require_e(flags.refine)?;
    let k = cfg.require_k(flags.refine)?;
    let d = cfg.require_d(flags.refine)?;
    let seed = flags.seed.unwrap_or(cfg.seed);
    let degree = if flags.refine { section.degree * 2 } else { section.degree };
    let chi_params = section.sublevel_check.then(crate::chi::ChiParams::default);
    let report = verify_random(
        &e,
        &k,
        &d,
        section.alpha,
        section.eps,
        degree,
        section.n_samples,
        seed,
        chi_params.as_ref(),
    )
    .map_err(numeric)?;
    let adversarial = adversarial_search(&e, &k, &d, section.alpha, section.eps, degree, &section.t_grid)
        .map_err(numeric)?;
    let artifact = TwoConstantsArtifact { label: &cfg.label, report: &report, adversarial: &adversarial };
    write_atomic(&out.join("two_constants.json"), &to_pretty_json(&artifact))?;
    if section.dump_ratios {
        let mut csv = String::from("t,implied_ratio\n");
        for (t, r) in &adversarial.per_t {
            csv.push_str(&format!("{t},{r}\n"));
        }
        write_atomic(&out.join("adversarial_ratios.csv"), &csv)?;
    }
    println!(
        "{}: worst_ratio {:.4}, fitted_c {:.4}, adversarial {:.4}",
        cfg.label, report.worst_ratio, report.fitted_c, adversarial.max_ratio
    );
    Ok(())
}

pub fn cmd_uniqueness(config: &Path, out: &Path, flags: &RunFlags) -> Result<(), CliError> {
    let cfg = load(config)?;
    let section = cfg
        .uniqueness
        .as_ref()
        .ok_or(CliError::Config("config is missing the `uniqueness` section".into()))?;
    let scene = cfg.build_scene(flags.refine)?;
    let f = cfg.build_function(Some(&scene))?;
    let defaults = UniquenessConfig::default();
    let ucfg = UniquenessConfig {
        delta: None,
        alpha: section.alpha,
        beta: section.beta,
        eps_margin: section.eps_margin,
        b: section.b,
        m_max: section.m_max,
        window: section.window,
        margin: defaults.margin,
        surrogate_degree: {
            let n = section.surrogate_degree.unwrap_or(defaults.surrogate_degree);
            if flags.refine {
                n * 2
            } else {
                n
            }
        },
        nbhd_mesh: section.nbhd_mesh,
        grid_n: section.grid_n.unwrap_or(defaults.grid_n),
        probe_m_max: section.probe_m_max.unwrap_or(defaults.probe_m_max),
        probe_r: section.probe_r,
        tc_samples: section.tc_samples.unwrap_or(defaults.tc_samples),
        seed: flags.seed.unwrap_or(cfg.seed),
    };
    let report = run_pipeline(&f, &scene, &ucfg).map_err(numeric)?;
    write_atomic(&out.join("chain.csv"), &chain_to_csv(&report.records))?;
    write_atomic(&out.join("verdict.json"), &to_pretty_json(&report))?;
    if want_svg(&cfg, flags) {
        let chain: Vec<(f64, f64)> = report
            .records
            .iter()
            .filter_map(|r| r.norm_u.map(|v| (r.m as f64, v)))
            .collect();
        let predicted: Vec<(f64, f64)> = report
            .records
            .iter()
            .filter_map(|r| r.predicted_bound.map(|v| (r.m as f64, v)))
            .collect();
        let measured: Vec<(f64, f64)> = report
            .records
            .iter()
            .filter_map(|r| r.norm_u_measured.map(|v| (r.m as f64, v)))
            .collect();
        let svg = semilog_svg(
            &format!("{}: neighborhood norms", cfg.label),
            &[
                ("chain bound", chain),
                ("predicted", predicted),
                ("measured", measured),
            ],
        );
        write_atomic(&out.join("norm_u.svg"), &svg)?;
    }
    println!("{}: conclusion {:?}", cfg.label, report.conclusion);
    Ok(())
}
