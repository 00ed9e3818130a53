//! Dense linear programming by two-phase simplex with Bland's rule.
//!
//! Problems are stated as `maximize c·x subject to A x <= b` with free
//! variables. The solver runs the textbook two-phase simplex on the
//! standard-form dual `minimize b·y, A^T y = c, y >= 0`: this handles free
//! variables natively (no x = x+ - x- split), and it keeps tableau entries
//! at the scale of the constraint matrix even when bounds span hundreds of
//! orders of magnitude, because the bounds only enter the cost row. The
//! primal point is recovered from the simplex multipliers of the optimal
//! dual basis, so the returned solution is a vertex of the primal
//! polyhedron, and the dual vector is returned as an optimality
//! certificate.

use thiserror::Error;

/// Entries below this are treated as zero when selecting pivots.
pub const PIVOT_TOL: f64 = 1e-10;
/// Relative feasibility tolerance for the returned solution.
pub const FEAS_TOL: f64 = 1e-8;
/// Relative threshold on reduced costs for declaring optimality.
const ENTER_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct LpProblem {
    pub n_vars: usize,
    /// Maximize `objective . x`.
    pub objective: Vec<f64>,
    /// Row-major constraint matrix; `rows[i] . x <= bounds[i]`.
    pub rows: Vec<Vec<f64>>,
    pub bounds: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        LpProblem { n_vars: objective.len(), objective, rows: Vec::new(), bounds: Vec::new() }
    }

    pub fn push_row(&mut self, coeffs: Vec<f64>, bound: f64) {
        debug_assert_eq!(coeffs.len(), self.n_vars);
        self.rows.push(coeffs);
        self.bounds.push(bound);
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.n_vars {
            return Err(LpError::BadProblem("objective length != n_vars".into()));
        }
        if self.rows.len() != self.bounds.len() {
            return Err(LpError::BadProblem("rows/bounds length mismatch".into()));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::BadProblem("non-finite objective entry".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.n_vars {
                return Err(LpError::BadProblem(format!("row {i} has wrong length")));
            }
            if row.iter().any(|v| !v.is_finite()) || !self.bounds[i].is_finite() {
                return Err(LpError::BadProblem(format!("non-finite entry in row {i}")));
            }
        }
        Ok(())
    }

    /// Text rendering of the problem, for debugging dumps.
    pub fn debug_dump(&self) -> String {
        let mut s = format!("maximize {:?}\n", self.objective);
        for (row, b) in self.rows.iter().zip(&self.bounds) {
            s.push_str(&format!("  {row:?} <= {b}\n"));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Dual multipliers, one per row; a feasibility certificate when optimal.
    pub dual: Vec<f64>,
    /// Improving ray when unbounded: `A ray <= 0`, `c . ray > 0`.
    pub ray: Option<Vec<f64>>,
}

impl LpSolution {
    fn empty(status: LpStatus, n_vars: usize, n_rows: usize) -> Self {
        LpSolution {
            status,
            x: vec![0.0; n_vars],
            objective_value: f64::NAN,
            dual: vec![0.0; n_rows],
            ray: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    BadProblem(String),
    #[error("simplex iteration cap {cap} exceeded")]
    IterationLimit { cap: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Solves `maximize c·x s.t. A x <= b` over free variables.
pub fn solve(p: &LpProblem) -> Result<LpSolution, LpError> {
    match solve_inner(p) {
        Err(e) => {
            if let Ok(dir) = std::env::var("HARMLAB_LP_DUMP") {
                let bits = |v: &f64| v.to_bits();
                let payload = serde_json::json!({
                    "objective_bits": p.objective.iter().map(bits).collect::<Vec<u64>>(),
                    "rows_bits": p
                        .rows
                        .iter()
                        .map(|r| r.iter().map(bits).collect::<Vec<u64>>())
                        .collect::<Vec<Vec<u64>>>(),
                    "bounds_bits": p.bounds.iter().map(bits).collect::<Vec<u64>>(),
                    "error": e.to_string(),
                    "bits_hash": bits_hash(p),
                });
                static DUMP_SEQ: std::sync::atomic::AtomicU64 =
                    std::sync::atomic::AtomicU64::new(0);
                let seq = DUMP_SEQ.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let path = format!("{dir}/lp_fail_{}_{seq}.json", std::process::id());
                let _ = std::fs::write(&path, payload.to_string());
            }
            Err(e)
        }
        ok => ok,
    }
}

#[doc(hidden)]
pub fn bits_hash(p: &LpProblem) -> u64 {
    let mut h = 1469598103934665603u64;
    let mut eat = |v: f64| {
        h ^= v.to_bits();
        h = h.wrapping_mul(1099511628211);
    };
    for &v in &p.objective {
        eat(v);
    }
    for row in &p.rows {
        for &v in row {
            eat(v);
        }
    }
    for &v in &p.bounds {
        eat(v);
    }
    h
}

fn solve_inner(p: &LpProblem) -> Result<LpSolution, LpError> {
    p.validate()?;
    let n = p.n_vars;
    let m = p.rows.len();

    if n == 0 {
        let feasible = p.bounds.iter().all(|&b| b >= -FEAS_TOL * (1.0 + b.abs()));
        return Ok(if feasible {
            LpSolution { objective_value: 0.0, ..LpSolution::empty(LpStatus::Optimal, 0, m) }
        } else {
            LpSolution::empty(LpStatus::Infeasible, 0, m)
        });
    }
    if m == 0 {
        return Ok(if p.objective.iter().all(|&c| c == 0.0) {
            LpSolution { objective_value: 0.0, ..LpSolution::empty(LpStatus::Optimal, n, 0) }
        } else {
            let scale = p.objective.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            LpSolution {
                ray: Some(p.objective.iter().map(|c| c / scale).collect()),
                ..LpSolution::empty(LpStatus::Unbounded, n, 0)
            }
        });
    }

    match solve_dual(p)? {
        DualOutcome::Optimal { y, x } => {
            let obj = dot(&p.objective, &x);
            check_primal(p, &x, &y, obj)?;
            Ok(LpSolution { status: LpStatus::Optimal, x, objective_value: obj, dual: y, ray: None })
        }
        DualOutcome::Unbounded => Ok(LpSolution::empty(LpStatus::Infeasible, n, m)),
        DualOutcome::Infeasible { farkas } => {
            if primal_feasible(p)? {
                let ray = verify_ray(p, farkas);
                Ok(LpSolution { ray, ..LpSolution::empty(LpStatus::Unbounded, n, m) })
            } else {
                Ok(LpSolution::empty(LpStatus::Infeasible, n, m))
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_primal(p: &LpProblem, x: &[f64], y: &[f64], obj: f64) -> Result<(), LpError> {
    for (row, &b) in p.rows.iter().zip(&p.bounds) {
        let v = dot(row, x);
        if v - b > 1e-4 * (1.0 + b.abs()) {
            return Err(LpError::Numerical(format!(
                "primal residual {} exceeds tolerance (bound {b})",
                v - b
            )));
        }
    }
    // The certified identity is gap = -x . (A^T y - c); budget the check
    // by that amplification so huge-coefficient optima are not rejected
    // for roundoff in the dual residual.
    let dual_obj = dot(&p.bounds, y);
    let mut amplification = 0.0;
    for i in 0..p.n_vars {
        let mut ri = -p.objective[i];
        for (row, &yj) in p.rows.iter().zip(y) {
            if yj != 0.0 {
                ri += row[i] * yj;
            }
        }
        amplification += x[i].abs() * ri.abs();
    }
    if (obj - dual_obj).abs() > 1e-6 * (1.0 + dual_obj.abs()) + amplification {
        return Err(LpError::Numerical(format!(
            "duality gap {} too large",
            obj - dual_obj
        )));
    }
    Ok(())
}

fn verify_ray(p: &LpProblem, w: Vec<f64>) -> Option<Vec<f64>> {
    let scale = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale <= 0.0 || !scale.is_finite() {
        return None;
    }
    let w: Vec<f64> = w.iter().map(|v| v / scale).collect();
    let row_ok = p.rows.iter().all(|row| {
        let norm: f64 = row.iter().map(|v| v.abs()).sum();
        dot(row, &w) <= 1e-6 * (1.0 + norm)
    });
    if row_ok && dot(&p.objective, &w) > 0.0 {
        Some(w)
    } else {
        None
    }
}

/// Feasibility probe: maximize -t subject to `A x - t <= b`, `-t <= 0`.
/// Always solvable; the primal is feasible iff the optimum is ~0.
fn primal_feasible(p: &LpProblem) -> Result<bool, LpError> {
    let n = p.n_vars;
    let mut objective = vec![0.0; n + 1];
    objective[n] = -1.0;
    let mut probe = LpProblem::new(objective);
    for (row, &b) in p.rows.iter().zip(&p.bounds) {
        let mut coeffs = row.clone();
        coeffs.push(-1.0);
        probe.push_row(coeffs, b);
    }
    let mut tcap = vec![0.0; n + 1];
    tcap[n] = -1.0;
    probe.push_row(tcap, 0.0);
    match solve_dual(&probe)? {
        DualOutcome::Optimal { x, .. } => {
            let t = x[n];
            let scale = p.bounds.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            Ok(t <= FEAS_TOL * scale)
        }
        _ => Err(LpError::Numerical("feasibility probe did not solve".into())),
    }
}

enum DualOutcome {
    Optimal { y: Vec<f64>, x: Vec<f64> },
    /// Dual infeasible; carries the Farkas direction (primal ray candidate).
    Infeasible { farkas: Vec<f64> },
    Unbounded,
}

enum IterExit {
    Optimal,
    Unbounded,
    /// Pivot burst budget exhausted; refactorize and continue.
    Budget,
}

/// Pricing mode carried across pivot bursts: once a degenerate stall flips
/// the solve into Bland's rule it stays there, otherwise refactorization
/// would reset the anti-cycling protection every burst.
#[derive(Default)]
struct PricingState {
    bland_mode: bool,
    degenerate_run: usize,
}

/// Dense tableau for the dual in standard form. Rows are the n dual
/// constraints; columns are m structural variables, n artificials, rhs.
struct Tableau {
    n_rows: usize,
    n_struct: usize,
    width: usize,
    a: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    flip: Vec<f64>,
}

impl Tableau {
    fn build(p: &LpProblem) -> Tableau {
        let n = p.n_vars;
        let m = p.rows.len();
        let width = m + n + 1;
        let mut a = vec![0.0; (n + 1) * width];
        let mut flip = vec![1.0; n];
        for i in 0..n {
            if p.objective[i] < 0.0 {
                flip[i] = -1.0;
            }
            for j in 0..m {
                a[i * width + j] = flip[i] * p.rows[j][i];
            }
            a[i * width + m + i] = 1.0;
            a[i * width + width - 1] = flip[i] * p.objective[i];
        }
        let basis: Vec<usize> = (0..n).map(|i| m + i).collect();
        let mut in_basis = vec![false; m + n];
        for &b in &basis {
            in_basis[b] = true;
        }
        Tableau { n_rows: n, n_struct: m, width, a, basis, in_basis, flip }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.a[r * self.width + self.width - 1]
    }

    #[inline]
    fn cost(&self, c: usize) -> f64 {
        self.a[self.n_rows * self.width + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let piv = self.a[pr * w + pc];
        for c in 0..w {
            self.a[pr * w + c] /= piv;
        }
        for r in 0..=self.n_rows {
            if r == pr {
                continue;
            }
            let factor = self.a[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            for c in 0..w {
                self.a[r * w + c] -= factor * self.a[pr * w + c];
            }
            self.a[r * w + pc] = 0.0;
        }
        self.in_basis[self.basis[pr]] = false;
        self.in_basis[pc] = true;
        self.basis[pr] = pc;
    }

    /// Bland's rule: first eligible entering column, leaving row by minimum
    /// ratio with ties broken by smallest basic index.
    fn iterate(
        &mut self,
        allow_artificial: bool,
        enter_tol: &[f64],
        pivots: &mut usize,
        cap: usize,
        burst: usize,
        pricing: &mut PricingState,
    ) -> Result<IterExit, LpError> {
        let total = self.n_struct + self.n_rows;
        let mut used = 0usize;
        loop {
            if *pivots >= cap {
                return Err(LpError::IterationLimit { cap });
            }
            if used >= burst {
                return Ok(IterExit::Budget);
            }
            // Pricing: Dantzig's rule (most negative scaled reduced cost)
            // keeps the walk short and away from degenerate wandering;
            // after a degenerate stall it falls back to Bland's rule
            // (first eligible index), which cannot cycle. Columns whose
            // ratio test would force a tiny pivot element are screened out
            // while alternatives remain.
            let mut size_screened = vec![false; total];
            let mut null_screened = vec![false; total];
            let (pc, pr) = loop {
                let mut entering = None;
                let mut most_negative = 0.0f64;
                for j in 0..total {
                    if self.in_basis[j] || (!allow_artificial && j >= self.n_struct) {
                        continue;
                    }
                    if null_screened[j] || (!pricing.bland_mode && size_screened[j]) {
                        continue;
                    }
                    let c = self.cost(j);
                    if c < -enter_tol[j] {
                        if pricing.bland_mode {
                            entering = Some(j);
                            break;
                        }
                        let scaled = c / 1.0f64.max(enter_tol[j] / ENTER_TOL);
                        if scaled < most_negative {
                            most_negative = scaled;
                            entering = Some(j);
                        }
                    }
                }
                let Some(pc) = entering else {
                    if !pricing.bland_mode && size_screened.iter().any(|&s| s) {
                        // Only size-screened candidates remain: retry
                        // without the pivot-size screen.
                        pricing.bland_mode = true;
                        continue;
                    }
                    return Ok(IterExit::Optimal);
                };
                match self.ratio_test(pc) {
                    None => {
                        // No usable pivot in the column. A noise-level
                        // reduced cost over a numerically null column is
                        // not an unbounded ray; skip it. A decisively
                        // negative cost is genuine unboundedness.
                        let noise = 1e3 * enter_tol[pc].max(ENTER_TOL);
                        if self.cost(pc) >= -noise {
                            null_screened[pc] = true;
                            continue;
                        }
                        return Ok(IterExit::Unbounded);
                    }
                    Some((pr, piv)) => {
                        if !pricing.bland_mode && piv < 1e-6 {
                            size_screened[pc] = true;
                            continue;
                        }
                        break (pc, pr);
                    }
                }
            };
            self.pivot(pr, pc);
            *pivots += 1;
            used += 1;
            if self.rhs_of_basis(pc) > 0.0 {
                pricing.degenerate_run = 0;
            } else {
                pricing.degenerate_run += 1;
                if pricing.degenerate_run > 4 * self.n_rows + 40 {
                    pricing.bland_mode = true;
                }
            }
        }
    }

    /// Harris-style two-pass ratio test with clamped numerators. Pass 1
    /// relaxes each row's bound by a feasibility allowance delta, so pass 2
    /// may prefer a larger pivot element at the cost of at most delta of
    /// infeasibility per row (reset at the next refactorization).
    /// Numerators are floored at zero: a roundoff-negative basic value over
    /// a tiny pivot would otherwise drive the step length negative and
    /// poison every row it touches. Ties break by smaller basic index.
    /// Returns the leaving row and the pivot magnitude, or None when the
    /// column is unbounded.
    fn ratio_test(&self, pc: usize) -> Option<(usize, f64)> {
        let mut theta_max = f64::INFINITY;
        for r in 0..self.n_rows {
            let a = self.at(r, pc);
            if a > PIVOT_TOL {
                let delta = 1e-12 * (1.0 + self.rhs(r).abs());
                theta_max = theta_max.min((self.rhs(r).max(0.0) + delta) / a);
            }
        }
        if theta_max == f64::INFINITY {
            return None;
        }
        let mut pr = usize::MAX;
        let mut best_piv = 0.0f64;
        for r in 0..self.n_rows {
            let a = self.at(r, pc);
            if a > PIVOT_TOL && self.rhs(r).max(0.0) / a <= theta_max {
                let better = a > best_piv * (1.0 + 1e-12)
                    || (a >= best_piv * (1.0 - 1e-12)
                        && pr != usize::MAX
                        && self.basis[r] < self.basis[pr]);
                if pr == usize::MAX || better {
                    pr = r;
                    best_piv = a;
                }
            }
        }
        Some((pr, best_piv))
    }

    /// Value of the basic variable sitting in `col`, or 0 if not basic.
    fn rhs_of_basis(&self, col: usize) -> f64 {
        for r in 0..self.n_rows {
            if self.basis[r] == col {
                return self.rhs(r);
            }
        }
        0.0
    }

    /// Simplex multipliers read from the artificial columns of the cost row,
    /// mapped back through the row sign flips. With phase cost `g`, the
    /// cost-row entry of artificial i is `g_art(i) - pi_i`.
    fn multipliers(&self, art_cost: f64) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.flip[i] * (art_cost - self.cost(self.n_struct + i)))
            .collect()
    }
}

fn solve_dual(p: &LpProblem) -> Result<DualOutcome, LpError> {
    let n = p.n_vars;
    let m = p.rows.len();
    let mut t = Tableau::build(p);
    let w = t.width;
    let cap = 200 * (n + m) + 10_000;
    let mut pivots = 0usize;

    // Phase 1: minimize the sum of artificials.
    let phase1_obj = run_phase1(&mut t, p, &mut pivots, cap)?;
    let c_scale = p.objective.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if phase1_obj > FEAS_TOL * c_scale {
        // Farkas direction from the phase-1 multipliers (artificial cost 1).
        return Ok(DualOutcome::Infeasible { farkas: t.multipliers(1.0) });
    }
    drive_out_artificials(&mut t, &mut pivots);

    // Phase 2: minimize b . y.
    let g = |j: usize| if j < m { p.bounds[j] } else { 0.0 };
    let mut tol2 = vec![0.0; m + n];
    for (j, tj) in tol2.iter_mut().enumerate() {
        *tj = ENTER_TOL * 1.0f64.max(g(j).abs());
    }

    // Phase 2 with periodic refactorization: the dense tableau accumulates
    // roundoff over rank-one updates, so pivoting runs in short bursts and
    // the tableau is rebuilt from original data between bursts. A claimed
    // optimum is only accepted after the vertex it encodes, re-derived from
    // original data, is primal-feasible.
    const BURST: usize = 32;
    let mut stalled_at = usize::MAX;
    let mut certify_rounds: i32 = 0;
    let mut pricing = PricingState::default();
    let mut best_obj = f64::INFINITY;
    let mut no_progress = 0usize;
    loop {
        if pivots >= cap {
            return Err(LpError::IterationLimit { cap });
        }
        if rebuild_from_basis(&mut t, p)? {
            // A dropped basis column left an artificial carrying weight;
            // restore dual feasibility before resuming phase 2.
            let repaired = run_phase1(&mut t, p, &mut pivots, cap)?;
            if repaired > FEAS_TOL * c_scale {
                return Err(LpError::Numerical(
                    "phase-1 repair after refactorization failed".into(),
                ));
            }
            drive_out_artificials(&mut t, &mut pivots);
        }
        for j in 0..(m + n) {
            let mut red = g(j);
            for r in 0..n {
                red -= g(t.basis[r]) * t.at(r, j);
            }
            t.a[n * w + j] = red;
        }
        let mut obj = 0.0;
        for r in 0..n {
            obj += g(t.basis[r]) * t.rhs(r);
        }
        t.a[n * w + w - 1] = -obj;

        // Track objective progress across rounds; rounds that neither
        // improve the objective nor certify an optimum are stalls feeding
        // the relaxation below.
        if obj < best_obj - 1e-10 * (1.0 + best_obj.abs()) {
            best_obj = obj;
            no_progress = 0;
        } else {
            no_progress += 1;
            if no_progress >= 8 {
                certify_rounds += 1;
                no_progress = 0;
            }
        }

        // Repeated near-optimal rounds relax the entering threshold: the
        // rebuilt cost row carries conditioning-level noise, and chasing
        // reduced costs below that noise floor cannot terminate.
        let relax = 10f64.powi(certify_rounds.min(6));
        let tol_round: Vec<f64> = tol2.iter().map(|t| t * relax).collect();
        if std::env::var("LP_TRACE").is_ok() && pivots % 3200 < 32 {
            eprintln!("p2 round: pivots={pivots} obj={obj:.9e} certify={certify_rounds} bland={} degen={}", pricing.bland_mode, pricing.degenerate_run);
        }
        let pivots_before = pivots;
        match t.iterate(false, &tol_round, &mut pivots, cap, BURST, &mut pricing)? {
            IterExit::Budget => continue,
            IterExit::Unbounded => return Ok(DualOutcome::Unbounded),
            IterExit::Optimal => {}
        }
        // Optimality is certified only by a fresh tableau: if this round
        // pivoted before claiming the optimum, loop so the claim is checked
        // against reduced costs rebuilt from original data.
        if pivots != pivots_before {
            certify_rounds += 1;
            continue;
        }

        let x0 = t.multipliers(0.0);
        let x = vertex_from_basis(p, &t.basis, &x0);
        let worst = p
            .rows
            .iter()
            .zip(&p.bounds)
            .map(|(row, &b)| (dot(row, &x) - b) / (1.0 + b.abs()))
            .fold(0.0f64, f64::max);
        // Accept only a certified optimum: the vertex must be feasible and
        // the refined dual weights must close the duality gap. A feasible
        // vertex with an open gap means the drifted tableau stopped early;
        // the rebuild at the top of the loop restores fresh reduced costs
        // and pivoting resumes.
        if worst <= FEAS_TOL {
            let mut y0 = vec![0.0; m];
            let mut tight = Vec::new();
            for r in 0..n {
                if t.basis[r] < m {
                    y0[t.basis[r]] = t.rhs(r).max(0.0);
                    tight.push(t.basis[r]);
                }
            }
            tight.sort_unstable();
            let y = dual_from_tight_rows(p, &tight, y0);
            return Ok(DualOutcome::Optimal { y, x });
        }
        // Two certified optima with no pivot in between means no further
        // progress is possible. Near-duplicate rows can leave the exact
        // vertex of an optimal basis slightly outside a redundant
        // constraint, and pricing relaxed to the conditioning noise floor
        // cannot see reduced costs below it; accept what the relaxed
        // tolerance can certify, else fail.
        if stalled_at == pivots {
            let x = polish_vertex(p, &t.basis, x);
            let worst = p
                .rows
                .iter()
                .zip(&p.bounds)
                .map(|(row, &b)| (dot(row, &x) - b) / (1.0 + b.abs()))
                .fold(0.0f64, f64::max);
            let allowance = (100.0 * FEAS_TOL).max(10.0 * ENTER_TOL * relax);
            if worst <= allowance {
                let mut y0 = vec![0.0; m];
                let mut tight = Vec::new();
                for r in 0..n {
                    if t.basis[r] < m {
                        y0[t.basis[r]] = t.rhs(r).max(0.0);
                        tight.push(t.basis[r]);
                    }
                }
                tight.sort_unstable();
                let y = dual_from_tight_rows(p, &tight, y0);
                return Ok(DualOutcome::Optimal { y, x });
            }
            return Err(LpError::Numerical(format!(
                "stalled at a vertex with primal residual {worst}"
            )));
        }
        stalled_at = pivots;
    }
}

/// Runs phase-1 simplex (minimize artificial sum) to optimality, pivoting
/// in bursts with refactorization in between; returns the residual
/// artificial sum. The tableau is left with the phase-1 cost row in place
/// so Farkas multipliers can be read on failure.
fn run_phase1(
    t: &mut Tableau,
    p: &LpProblem,
    pivots: &mut usize,
    cap: usize,
) -> Result<f64, LpError> {
    let n = t.n_rows;
    let m = t.n_struct;
    let w = t.width;
    let art_cost = |j: usize| if j >= m { 1.0 } else { 0.0 };
    let tol_base = vec![ENTER_TOL; m + n];
    const BURST: usize = 32;
    let mut first = true;
    let mut pricing = PricingState::default();
    let mut unbounded_exits = 0usize;
    let mut certify_rounds: i32 = 0;
    let mut best_obj = f64::INFINITY;
    let mut no_progress = 0usize;
    loop {
        if *pivots >= cap {
            return Err(LpError::IterationLimit { cap });
        }
        if !first {
            rebuild_from_basis(t, p)?;
        }
        first = false;
        for j in 0..(m + n) {
            let mut red = art_cost(j);
            for r in 0..n {
                red -= art_cost(t.basis[r]) * t.at(r, j);
            }
            t.a[n * w + j] = red;
        }
        let mut obj = 0.0;
        for r in 0..n {
            obj += art_cost(t.basis[r]) * t.rhs(r);
        }
        t.a[n * w + w - 1] = -obj;

        if obj < best_obj - 1e-10 * (1.0 + best_obj.abs()) {
            best_obj = obj;
            no_progress = 0;
        } else {
            no_progress += 1;
            if no_progress >= 8 {
                certify_rounds += 1;
                no_progress = 0;
            }
        }
        let relax = 10f64.powi(certify_rounds.min(6));
        let tol1: Vec<f64> = tol_base.iter().map(|t| t * relax).collect();

        match t.iterate(false, &tol1, pivots, cap, BURST, &mut pricing)? {
            IterExit::Budget => continue,
            IterExit::Unbounded => {
                // The artificial sum is bounded below by zero, so an
                // unbounded exit is conditioning noise; rebuild and retry,
                // settling for the current value if it keeps recurring.
                unbounded_exits += 1;
                if unbounded_exits <= 3 {
                    continue;
                }
            }
            IterExit::Optimal => {}
        }
        let mut value = 0.0;
        for r in 0..n {
            if t.basis[r] >= m {
                value += t.rhs(r).max(0.0);
            }
        }
        return Ok(value);
    }
}

/// Pivots basic artificials out where a usable structural element exists,
/// preferring the largest element for stability. Artificial values at this
/// point are within feasibility tolerance of zero; they are snapped to
/// exact zero first so the pivot cannot inject their residue into other
/// rows through a small pivot element.
fn drive_out_artificials(t: &mut Tableau, pivots: &mut usize) {
    let n = t.n_rows;
    let m = t.n_struct;
    let w = t.width;
    for r in 0..n {
        if t.basis[r] >= m {
            let mut col = None;
            let mut mag = 1e-7;
            for j in 0..m {
                let a = t.at(r, j).abs();
                if !t.in_basis[j] && a > mag {
                    mag = a;
                    col = Some(j);
                }
            }
            if let Some(pc) = col {
                t.a[r * w + w - 1] = 0.0;
                t.pivot(r, pc);
                *pivots += 1;
            }
        }
    }
}

/// The vertex the basis encodes, solved fresh from original data: tight
/// structural rows give `A_j . x = b_j`; artificial slots pin their primal
/// coordinate to zero. Components left free fall back to the tableau
/// multiplier estimate.
fn vertex_from_basis(p: &LpProblem, basis: &[usize], x_fallback: &[f64]) -> Vec<f64> {
    let n = p.n_vars;
    let m = p.rows.len();
    let mut rows = Vec::with_capacity(basis.len());
    let mut rhs = Vec::with_capacity(basis.len());
    for &b in basis {
        if b < m {
            rows.push(p.rows[b].clone());
            rhs.push(p.bounds[b]);
        } else {
            let mut unit = vec![0.0; n];
            unit[b - m] = 1.0;
            rows.push(unit);
            rhs.push(0.0);
        }
    }
    let mut x = solve_rect(rows.clone(), rhs.clone(), x_fallback);
    // Iterative refinement against the original data recovers the digits an
    // ill-conditioned elimination loses.
    let tight_residual = |x: &[f64]| -> Vec<f64> {
        rows.iter()
            .zip(&rhs)
            .map(|(row, &b)| b - dot(row, x))
            .collect()
    };
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut best = sup(&tight_residual(&x));
    for _ in 0..3 {
        if best < 1e-14 {
            break;
        }
        let correction = solve_rect(rows.clone(), tight_residual(&x), &vec![0.0; n]);
        let candidate: Vec<f64> = x.iter().zip(&correction).map(|(xi, ci)| xi + ci).collect();
        let cand_res = sup(&tight_residual(&candidate));
        if cand_res >= best {
            break;
        }
        best = cand_res;
        x = candidate;
    }
    x
}

/// Re-solves the vertex with violated rows appended to the tight system;
/// near-duplicate rows are consistent with the optimal face, so the
/// augmented solve removes the violation when the geometry allows it.
fn polish_vertex(p: &LpProblem, basis: &[usize], x: Vec<f64>) -> Vec<f64> {
    let n = p.n_vars;
    let m = p.rows.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for &b in basis {
        if b < m {
            rows.push(p.rows[b].clone());
            rhs.push(p.bounds[b]);
        } else {
            let mut unit = vec![0.0; n];
            unit[b - m] = 1.0;
            rows.push(unit);
            rhs.push(0.0);
        }
    }
    for (row, &b) in p.rows.iter().zip(&p.bounds) {
        if dot(row, &x) - b > 0.1 * FEAS_TOL * (1.0 + b.abs()) {
            rows.push(row.clone());
            rhs.push(b);
        }
    }
    let candidate = solve_rect(rows, rhs, &x);
    let violation = |x: &[f64]| {
        p.rows
            .iter()
            .zip(&p.bounds)
            .map(|(row, &b)| (dot(row, x) - b) / (1.0 + b.abs()))
            .fold(0.0f64, f64::max)
    };
    if violation(&candidate) < violation(&x) {
        candidate
    } else {
        x
    }
}

/// Dual weights on the tight rows, solved fresh: `A_T^T y_T = c`.
fn dual_from_tight_rows(p: &LpProblem, tight: &[usize], y0: Vec<f64>) -> Vec<f64> {
    let k = tight.len();
    if k == 0 {
        return y0;
    }
    let n = p.n_vars;
    let mut cols: Vec<Vec<f64>> = vec![vec![0.0; k]; n];
    for (ti, &j) in tight.iter().enumerate() {
        for i in 0..n {
            cols[i][ti] = p.rows[j][i];
        }
    }
    let yt0: Vec<f64> = tight.iter().map(|&j| y0[j]).collect();
    let yt1 = solve_rect(cols.clone(), p.objective.clone(), &yt0);
    let residual = |yt: &[f64]| {
        (0..n)
            .map(|i| (dot(&cols[i], yt) - p.objective[i]).abs() / (1.0 + p.objective[i].abs()))
            .fold(0.0f64, f64::max)
    };
    let yt = if residual(&yt1) <= residual(&yt0) { yt1 } else { yt0 };
    let mut y = vec![0.0; p.rows.len()];
    for (ti, &j) in tight.iter().enumerate() {
        y[j] = yt[ti].max(0.0);
    }
    y
}

/// Rebuilds the tableau from original data with the current basis, using
/// greedy full-pivot elimination over the basis columns. Columns that turn
/// out numerically dependent are dropped; their rows keep an artificial
/// basic variable. Returns true when a dropped column left an artificial
/// at a significantly nonzero value, which requires a phase-1 repair pass.
fn rebuild_from_basis(t: &mut Tableau, p: &LpProblem) -> Result<bool, LpError> {
    let targets: Vec<usize> = t.basis.iter().copied().filter(|&b| b < t.n_struct).collect();
    let mut excluded: Vec<usize> = Vec::new();
    'attempt: for _ in 0..=targets.len() {
        let mut fresh = Tableau::build(p);
        let n = fresh.n_rows;
        let scale = fresh
            .a
            .iter()
            .take(n * fresh.width)
            .fold(1e-300f64, |m, v| m.max(v.abs()));
        let mut row_done = vec![false; n];
        let mut remaining: Vec<usize> = targets
            .iter()
            .copied()
            .filter(|c| !excluded.contains(c))
            .collect();
        while !remaining.is_empty() {
            let mut best = (usize::MAX, usize::MAX, 1e-12 * scale);
            for r in 0..n {
                if row_done[r] {
                    continue;
                }
                for (slot, &c) in remaining.iter().enumerate() {
                    let a = fresh.at(r, c).abs();
                    if a > best.2 {
                        best = (r, slot, a);
                    }
                }
            }
            if best.0 == usize::MAX {
                break;
            }
            let (r, slot, _) = best;
            let c = remaining.swap_remove(slot);
            fresh.pivot(r, c);
            row_done[r] = true;
        }
        let rhs_scale = (0..n).fold(1.0f64, |m, r| m.max(fresh.rhs(r).abs()));
        // A negative structural basic value means the drifted tableau
        // walked into an infeasible basis. Whether it matters is measured
        // in objective units (value times its cost): clamping a violation
        // the objective can see lets pricing oscillate between bases
        // forever. Drop the worst offender from the target set and rebuild;
        // the artificial left behind is handled by the phase-1 repair pass.
        let cost_of = |col: usize| {
            if col < fresh.n_struct {
                p.bounds[col].abs().max(1.0)
            } else {
                1.0
            }
        };
        let obj_scale = (0..n).fold(1.0f64, |m, r| {
            m + cost_of(fresh.basis[r]) * fresh.rhs(r).max(0.0)
        });
        let mut worst = (usize::MAX, 1e-6 * obj_scale);
        for r in 0..n {
            let v = fresh.rhs(r);
            if fresh.basis[r] < fresh.n_struct && v < 0.0 {
                let weighted = -v * cost_of(fresh.basis[r]);
                if weighted > worst.1 {
                    worst = (r, weighted);
                }
            }
        }
        if worst.0 != usize::MAX {
            excluded.push(fresh.basis[worst.0]);
            continue 'attempt;
        }
        let _ = rhs_scale;
        let w = fresh.width;
        let mut needs_repair = !excluded.is_empty();
        for r in 0..n {
            let v = fresh.rhs(r);
            if fresh.basis[r] >= fresh.n_struct {
                // Row kept its artificial. Its artificial column is still
                // the unit vector, so the row may be flipped freely to make
                // the basic value nonnegative; the flip is recorded for the
                // multiplier mapping.
                if v < 0.0 {
                    for c in 0..w {
                        fresh.a[r * w + c] = -fresh.a[r * w + c];
                    }
                    fresh.a[r * w + fresh.n_struct + r] = 1.0;
                    fresh.flip[r] = -fresh.flip[r];
                }
                if fresh.rhs(r) > FEAS_TOL * rhs_scale {
                    needs_repair = true;
                }
            } else if v < 0.0 {
                // Objective-invisible noise; clamp. The fresh-data vertex
                // check in solve_dual remains the gate.
                fresh.a[r * w + w - 1] = 0.0;
            }
        }
        *t = fresh;
        return Ok(needs_repair);
    }
    Err(LpError::Numerical("refactorization could not restore a feasible basis".into()))
}

/// Solves `rows . z = rhs` by Gauss-Jordan with full pivoting. Columns that
/// never receive a pivot keep their `fallback` value; rank-deficient rows
/// are skipped (the systems passed here are consistent by construction).
fn solve_rect(mut rows: Vec<Vec<f64>>, mut rhs: Vec<f64>, fallback: &[f64]) -> Vec<f64> {
    let k = rows.len();
    let n = fallback.len();
    debug_assert!(rows.iter().all(|r| r.len() == n));
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(1e-300f64, |m, v| m.max(v.abs()));
    let mut row_used = vec![false; k];
    let mut col_used = vec![false; n];
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut best = (usize::MAX, usize::MAX, 1e-10 * scale);
        for r in 0..k {
            if row_used[r] {
                continue;
            }
            for c in 0..n {
                if !col_used[c] && rows[r][c].abs() > best.2 {
                    best = (r, c, rows[r][c].abs());
                }
            }
        }
        if best.0 == usize::MAX {
            break;
        }
        let (pr, pc, _) = best;
        row_used[pr] = true;
        col_used[pc] = true;
        pivots.push((pr, pc));
        let piv = rows[pr][pc];
        for c in 0..n {
            rows[pr][c] /= piv;
        }
        rhs[pr] /= piv;
        for r in 0..k {
            if r == pr || rows[r][pc] == 0.0 {
                continue;
            }
            let f = rows[r][pc];
            for c in 0..n {
                rows[r][c] -= f * rows[pr][c];
            }
            rhs[r] -= f * rhs[pr];
            rows[r][pc] = 0.0;
        }
    }
    let mut z = fallback.to_vec();
    for &(pr, pc) in &pivots {
        let mut v = rhs[pr];
        for c in 0..n {
            if !col_used[c] {
                v -= rows[pr][c] * fallback[c];
            }
        }
        z[pc] = v;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    #[test]
    fn single_variable_box() {
        let mut p = LpProblem::new(vec![1.0]);
        p.push_row(vec![1.0], 3.0);
        p.push_row(vec![-1.0], 0.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 3.0).abs() < 1e-9);
        assert!((s.objective_value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn binding_diagonal() {
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.push_row(vec![1.0, 0.0], 1.0);
        p.push_row(vec![0.0, 1.0], 1.0);
        p.push_row(vec![1.0, 1.0], 1.5);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.5).abs() < 1e-9);
    }

    #[test]
    fn detects_unbounded_with_ray() {
        let mut p = LpProblem::new(vec![1.0, 0.0]);
        p.push_row(vec![-1.0, 0.0], 0.0);
        p.push_row(vec![0.0, 1.0], 1.0);
        p.push_row(vec![0.0, -1.0], 1.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        let ray = s.ray.expect("ray");
        assert!(dot(&p.objective, &ray) > 0.0);
        for (row, _) in p.rows.iter().zip(&p.bounds) {
            assert!(dot(row, &ray) <= 1e-6);
        }
    }

    #[test]
    fn detects_infeasible() {
        let mut p = LpProblem::new(vec![1.0]);
        p.push_row(vec![1.0], 0.0);
        p.push_row(vec![-1.0], -1.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn free_variables_take_negative_values() {
        let mut p = LpProblem::new(vec![-1.0]);
        p.push_row(vec![-1.0], 2.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] + 2.0).abs() < 1e-9, "x = {}", s.x[0]);
        assert!((s.objective_value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_malformed_input() {
        let mut p = LpProblem::new(vec![1.0, f64::NAN]);
        p.push_row(vec![1.0, 0.0], 1.0);
        assert!(matches!(solve(&p), Err(LpError::BadProblem(_))));
    }

    /// Exhaustive vertex enumeration for small instances: solve every
    /// n-subset of rows, keep feasible solutions, take the best objective.
    fn vertex_enumeration_oracle(p: &LpProblem) -> Option<f64> {
        let n = p.n_vars;
        let m = p.rows.len();
        let mut best: Option<f64> = None;
        let mut subset: Vec<usize> = (0..n).collect();
        loop {
            if let Some(x) = solve_square(p, &subset) {
                let feasible = p
                    .rows
                    .iter()
                    .zip(&p.bounds)
                    .all(|(row, &b)| dot(row, &x) <= b + 1e-7 * (1.0 + b.abs()));
                if feasible {
                    let v = dot(&p.objective, &x);
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
            // Next combination in lexicographic order.
            let mut i = n;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                if subset[i] != i + m - n {
                    subset[i] += 1;
                    for j in (i + 1)..n {
                        subset[j] = subset[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Gaussian elimination with partial pivoting on the chosen tight rows.
    fn solve_square(p: &LpProblem, rows: &[usize]) -> Option<Vec<f64>> {
        let n = p.n_vars;
        let mut a: Vec<Vec<f64>> = rows.iter().map(|&r| p.rows[r].clone()).collect();
        let mut b: Vec<f64> = rows.iter().map(|&r| p.bounds[r]).collect();
        for col in 0..n {
            let (piv, mag) = (col..n)
                .map(|r| (r, a[r][col].abs()))
                .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                .unwrap();
            if mag < 1e-9 {
                return None;
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for r in (col + 1)..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for col in (0..n).rev() {
            let mut v = b[col];
            for c in (col + 1)..n {
                v -= a[col][c] * x[c];
            }
            x[col] = v / a[col][col];
        }
        Some(x)
    }

    fn random_bounded_instance(rng: &mut ChaCha8Rng) -> LpProblem {
        // Box rows on every variable guarantee boundedness; the base point
        // x0 with positive slack guarantees feasibility.
        let n = 5;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let objective: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut p = LpProblem::new(objective);
        for i in 0..n {
            let mut up = vec![0.0; n];
            up[i] = 1.0;
            p.push_row(up, x0[i] + rng.gen_range(0.2..2.0));
            let mut down = vec![0.0; n];
            down[i] = -1.0;
            p.push_row(down, -x0[i] + rng.gen_range(0.2..2.0));
        }
        for _ in 0..2 {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let slack = rng.gen_range(0.1..1.5);
            let b = dot(&row, &x0) + slack;
            p.push_row(row, b);
        }
        p
    }

    #[test]
    fn matches_vertex_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..40 {
            let p = random_bounded_instance(&mut rng);
            let s = solve(&p).unwrap();
            assert_eq!(s.status, LpStatus::Optimal, "trial {trial}");
            let oracle = vertex_enumeration_oracle(&p).expect("bounded feasible");
            assert!(
                (s.objective_value - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()),
                "trial {trial}: simplex {} vs oracle {oracle}",
                s.objective_value
            );
        }
    }

    #[test]
    fn duality_gap_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = random_bounded_instance(&mut rng);
            let s = solve(&p).unwrap();
            let dual_obj = dot(&p.bounds, &s.dual);
            assert!(s.dual.iter().all(|&y| y >= -1e-9));
            assert!(
                (s.objective_value - dual_obj).abs() <= 1e-7 * (1.0 + dual_obj.abs()),
                "gap {}",
                s.objective_value - dual_obj
            );
        }
    }

    #[test]
    fn deterministic_resolve() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let p = random_bounded_instance(&mut rng);
        let a = solve(&p).unwrap();
        let b = solve(&p).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.objective_value, b.objective_value);
    }

    #[test]
    fn feasibility_residual_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let p = random_bounded_instance(&mut rng);
            let s = solve(&p).unwrap();
            for (row, &b) in p.rows.iter().zip(&p.bounds) {
                assert!(dot(row, &s.x) <= b + FEAS_TOL * (1.0 + b.abs()));
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        /// Scaling bounds alone, or the objective alone, scales the optimum
        /// by the same factor and never changes the status.
        #[test]
        fn scaling_equivariance(seed in 0u64..500, lambda in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_bounded_instance(&mut rng);
            let base = solve(&p).unwrap();

            let mut pb = p.clone();
            for b in &mut pb.bounds { *b *= lambda; }
            let sb = solve(&pb).unwrap();
            proptest::prop_assert_eq!(sb.status, base.status);
            proptest::prop_assert!(
                (sb.objective_value - lambda * base.objective_value).abs()
                    <= 1e-6 * (1.0 + base.objective_value.abs() * lambda)
            );

            let mut pc = p.clone();
            for c in &mut pc.objective { *c *= lambda; }
            let sc = solve(&pc).unwrap();
            proptest::prop_assert_eq!(sc.status, base.status);
            proptest::prop_assert!(
                (sc.objective_value - lambda * base.objective_value).abs()
                    <= 1e-6 * (1.0 + base.objective_value.abs() * lambda)
            );
        }
    }
}

#[cfg(test)]
mod replay {
    use super::*;

    /// Replays a dumped instance for offline debugging:
    /// `HARMLAB_LP_REPLAY=<file> cargo test -p harmlab --lib lp::replay -- --ignored --nocapture`
    #[test]
    #[ignore]
    fn replay_dumped_instance() {
        let path = std::env::var("HARMLAB_LP_REPLAY").expect("set HARMLAB_LP_REPLAY");
        let payload: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let from_bits = |v: &serde_json::Value| -> Vec<f64> {
            v.as_array()
                .unwrap()
                .iter()
                .map(|b| f64::from_bits(b.as_u64().unwrap()))
                .collect()
        };
        let objective = from_bits(&payload["objective_bits"]);
        let rows: Vec<Vec<f64>> = payload["rows_bits"]
            .as_array()
            .unwrap()
            .iter()
            .map(from_bits)
            .collect();
        let bounds = from_bits(&payload["bounds_bits"]);
        let mut p = LpProblem::new(objective);
        for (row, b) in rows.into_iter().zip(bounds) {
            p.push_row(row, b);
        }
        println!("replay bits_hash: {} (dumped: {})", bits_hash(&p), payload["bits_hash"]);
        let t0 = std::time::Instant::now();
        match solve(&p) {
            Ok(sol) => println!(
                "solved: status {:?} objective {} in {:?}",
                sol.status,
                sol.objective_value,
                t0.elapsed()
            ),
            Err(e) => println!("failed after {:?}: {e}", t0.elapsed()),
        }
    }
}
