//! Backward solver for BSDEs driven by the Brownian and compensated-default
//! martingales,
//!
//! ```text
//! -dY = g(t, Y, Z, U) dt - Z dW - U dM,    Y_T = xi,
//! ```
//!
//! by least-squares regression Monte Carlo: backward Euler in time with
//! conditional expectations replaced by per-cell polynomial regression on the
//! state (log-prices, regime information, default configuration). The default
//! configuration is a hard regressor cell because Y is discontinuous across a
//! default. One Picard re-substitution of Y into the driver per step reduces
//! the discretization bias of the explicit step.
//!
//! Under partial information the same recursion runs on the innovation
//! increments (W-bar, M-bar) with the filtered coefficients, and the
//! regression state gains the posterior coordinates.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{EngineError, Result};
use crate::filtering::FilterOutput;
use crate::linalg;
use crate::model::ModelSpec;
use crate::paths::PathBundle;
use crate::rng::StreamRng;
use crate::stats;

/// Lower clamp keeping truncated value processes strictly positive.
const Y_FLOOR: f64 = 1e-300;
/// Cells with smaller intensity mass carry no jump information.
const LAMBDA_DT_TINY: f64 = 1e-12;

/// Regression basis: tensor polynomials of the continuous state coordinates
/// up to this total degree, crossed with the categorical cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub degree: usize,
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec { degree: 2 }
    }
}

/// Which filtration the solver works in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoMode {
    /// True coefficients, (W, M) increments, regime visible to the basis.
    Full,
    /// Filtered coefficients, innovation increments, posterior coordinates
    /// in the basis.
    Partial,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub basis: BasisSpec,
    /// Ridge weight relative to the mean diagonal of the normal equations.
    pub ridge_rel: f64,
    pub info: InfoMode,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { basis: BasisSpec::default(), ridge_rel: 1e-8, info: InfoMode::Full }
    }
}

/// Per-path per-step view handed to the driver.
pub struct DriverCtx<'a> {
    pub t: f64,
    pub dt: f64,
    pub cell: usize,
    pub path: usize,
    pub n_assets: usize,
    pub n_defaults: usize,
    pub mu: &'a [f64],
    pub sigma: &'a [f64],
    pub beta: &'a [f64],
    /// Alive-masked intensities (zero after the corresponding default).
    pub lambda: &'a [f64],
}

/// A BSDE driver plus terminal condition.
pub trait Generator {
    /// Driver g(t, Y, Z, U). When `control` is provided and the generator is
    /// an optimizing one, the attained optimizer is written into it.
    fn driver(&self, ctx: &DriverCtx, y: f64, z: &[f64], u: &[f64], control: Option<&mut [f64]>)
        -> f64;

    /// Terminal value xi as a function of the terminal state.
    fn terminal(&self, s_t: &[f64], n_t: &[u8]) -> f64;

    /// Declared upper bound for truncating Y into (0, C]; None disables
    /// truncation.
    fn y_bound(&self) -> Option<f64> {
        None
    }

    /// Declared Lipschitz constant of the driver in (y, z, u), as a bound on
    /// |dg| / (|dy| + sum|dz| + sum|du|).
    fn lipschitz_bound(&self) -> f64;

    /// Number of control components recorded per step (0 = none).
    fn n_controls(&self) -> usize {
        0
    }
}

/// Per-step regression diagnostics.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StepDiag {
    pub step: usize,
    pub r_squared: f64,
    pub max_condition: f64,
    pub max_normal_eq_residual: f64,
    pub fallback_cells: usize,
}

/// Grid-valued solution triple plus optimizer path and diagnostics.
#[derive(Debug, Clone)]
pub struct BsdeSolution {
    pub n_points: usize,
    /// [path][point].
    pub y: Vec<f64>,
    /// [path][cell][asset].
    pub z: Vec<f64>,
    /// [path][cell][default].
    pub u: Vec<f64>,
    /// [path][cell][control], present when the generator records one.
    pub control: Option<Vec<f64>>,
    pub y0: f64,
    pub y0_se: f64,
    pub diagnostics: Vec<StepDiag>,
}

impl BsdeSolution {
    #[inline]
    pub fn y_at(&self, path: usize, point: usize) -> f64 {
        self.y[path * self.n_points + point]
    }

    #[inline]
    pub fn control_at(&self, path: usize, cell: usize, n_controls: usize) -> &[f64] {
        let c = self.control.as_ref().expect("generator records no control");
        let base = (path * (self.n_points - 1) + cell) * n_controls;
        &c[base..base + n_controls]
    }
}

// One regression cell: centered/scaled polynomial features over the paths
// that share a categorical state.
struct FitCell {
    members: Vec<usize>,
    active: Vec<usize>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    factor: Vec<f64>,
    system: Vec<f64>,
    condition: f64,
}

impl FitCell {
    fn mean_only(members: Vec<usize>) -> Self {
        FitCell {
            members,
            active: Vec::new(),
            mean: Vec::new(),
            scale: Vec::new(),
            factor: Vec::new(),
            system: Vec::new(),
            condition: 1.0,
        }
    }

    fn fit(members: Vec<usize>, feats: &[f64], q: usize, ridge_rel: f64, step: usize) -> Result<Self> {
        let count = members.len();
        let mut mean = vec![0.0; q];
        let mut m2 = vec![0.0; q];
        for &p in &members {
            for j in 0..q {
                let v = feats[p * q + j];
                mean[j] += v;
                m2[j] += v * v;
            }
        }
        let cf = count as f64;
        let mut active = Vec::new();
        let mut scale = vec![1.0; q];
        for j in 0..q {
            mean[j] /= cf;
            let var = (m2[j] / cf - mean[j] * mean[j]).max(0.0);
            let sd = var.sqrt();
            if sd > 1e-12 * (1.0 + mean[j].abs()) {
                scale[j] = sd;
                active.push(j);
            }
        }
        let qa = active.len();
        if qa == 0 {
            return Ok(FitCell::mean_only(members));
        }
        let mut gram = vec![0.0; qa * qa];
        for &p in &members {
            for (aj, &j) in active.iter().enumerate() {
                let fj = (feats[p * q + j] - mean[j]) / scale[j];
                for (ak, &k) in active.iter().enumerate().skip(aj) {
                    let fk = (feats[p * q + k] - mean[k]) / scale[k];
                    gram[aj * qa + ak] += fj * fk;
                }
            }
        }
        for aj in 0..qa {
            for ak in 0..aj {
                gram[aj * qa + ak] = gram[ak * qa + aj];
            }
        }
        let trace: f64 = (0..qa).map(|j| gram[j * qa + j]).sum();
        let ridge = ridge_rel * trace / qa as f64;
        for j in 0..qa {
            gram[j * qa + j] += ridge;
        }
        let (lo, hi) = linalg::sym_eigen_range(&gram, qa);
        let system = gram.clone();
        let mut factor = gram;
        linalg::cholesky(&mut factor, qa)
            .map_err(|m| EngineError::Regression { step, message: format!("rank-deficient normal equations (condition {:.3e}): {m}", hi / lo.max(1e-300)) })?;
        Ok(FitCell {
            members,
            active,
            mean,
            scale,
            factor,
            system,
            condition: hi / lo.max(1e-300),
        })
    }

    /// Regresses a per-path target on the cell's features. Returns the
    /// coefficients, the target mean, and the relative normal-equation
    /// residual of the solve.
    fn regress(
        &self,
        feats: &[f64],
        q: usize,
        target: impl Fn(usize) -> f64,
    ) -> (Vec<f64>, f64, f64) {
        let qa = self.active.len();
        let mut t_mean = 0.0;
        for &p in &self.members {
            t_mean += target(p);
        }
        t_mean /= self.members.len() as f64;
        if qa == 0 {
            return (Vec::new(), t_mean, 0.0);
        }
        let mut rhs = vec![0.0; qa];
        for &p in &self.members {
            let tc = target(p) - t_mean;
            for (aj, &j) in self.active.iter().enumerate() {
                rhs[aj] += tc * (feats[p * q + j] - self.mean[j]) / self.scale[j];
            }
        }
        let mut coef = rhs.clone();
        linalg::cholesky_solve(&self.factor, qa, &mut coef);
        // Accuracy of the solve itself (ridge included in the system).
        let mut resid = 0.0f64;
        let mut rhs_norm = 0.0f64;
        for j in 0..qa {
            let mut acc = 0.0;
            for k in 0..qa {
                acc += self.system[j * qa + k] * coef[k];
            }
            resid = resid.max((acc - rhs[j]).abs());
            rhs_norm = rhs_norm.max(rhs[j].abs());
        }
        (coef, t_mean, resid / rhs_norm.max(1e-300))
    }

    #[inline]
    fn predict(&self, feats: &[f64], q: usize, coef: &[f64], t_mean: f64, path: usize) -> f64 {
        let mut acc = t_mean;
        for (aj, &j) in self.active.iter().enumerate() {
            acc += coef[aj] * (feats[path * q + j] - self.mean[j]) / self.scale[j];
        }
        acc
    }
}

fn n_poly_features(d: usize, degree: usize) -> usize {
    match degree {
        0 => 0,
        1 => d,
        _ => d + d * (d + 1) / 2,
    }
}

fn fill_features(coords: &[f64], degree: usize, out: &mut [f64]) {
    let d = coords.len();
    if degree == 0 {
        return;
    }
    out[..d].copy_from_slice(coords);
    if degree >= 2 {
        let mut k = d;
        for a in 0..d {
            for b in a..d {
                out[k] = coords[a] * coords[b];
                k += 1;
            }
        }
    }
}

/// Solves the BSDE on the given path bundle.
///
/// The backward recursion per cell i is
/// `Y_i = E[Y_{i+1} | F_i] + g(t_i, Y, Z, U) dt`,
/// `Z_i = E[(Y_{i+1} - E[Y_{i+1}|F_i]) dW_i | F_i] / dt`,
/// `U_i = E[(Y_{i+1} - E[Y_{i+1}|F_i]) dM_i | F_i] / (lambda_i dt)`,
/// with the conditional expectations replaced by per-cell least squares and
/// the post-default jump integrand set to zero.
pub fn solve_bsde<G: Generator>(
    gen: &G,
    spec: &ModelSpec,
    paths: &PathBundle,
    filter: Option<&FilterOutput>,
    opts: &SolveOptions,
) -> Result<BsdeSolution> {
    let n = paths.n_assets;
    let p = paths.n_defaults;
    let m = paths.n_steps;
    let n_paths = paths.n_paths;
    let dt = paths.grid.dt;
    let n_points = m + 1;

    if opts.info == InfoMode::Partial && filter.is_none() {
        return Err(EngineError::InvalidModel {
            field: "filter",
            message: "partial-information solve requires a filter output".to_string(),
        });
    }
    if let Some(f) = filter {
        if f.n_points != n_points {
            return Err(EngineError::InvalidModel {
                field: "filter",
                message: "filter grid does not match the path bundle".to_string(),
            });
        }
    }

    let n_regimes = spec.n_regimes();
    let regime_cells = if opts.info == InfoMode::Full && spec.regime.is_some() {
        n_regimes
    } else {
        1
    };
    let n_cells = (1usize << p) * regime_cells;
    let d_coords = n + if opts.info == InfoMode::Partial { n_regimes - 1 } else { 0 };
    let q = n_poly_features(d_coords, opts.basis.degree);

    let n_controls = gen.n_controls();
    let mut sol = BsdeSolution {
        n_points,
        y: vec![0.0; n_paths * n_points],
        z: vec![0.0; n_paths * m * n],
        u: vec![0.0; n_paths * m * p],
        control: if n_controls > 0 { Some(vec![0.0; n_paths * m * n_controls]) } else { None },
        y0: 0.0,
        y0_se: 0.0,
        diagnostics: Vec::with_capacity(m),
    };

    // Terminal condition, exact on every path.
    for path in 0..n_paths {
        let v = gen.terminal(paths.s_at(path, m), paths.n_at(path, m));
        if !v.is_finite() {
            return Err(EngineError::NonFinite { context: "terminal condition" });
        }
        sol.y[path * n_points + m] = v;
    }

    // Per-step scratch.
    let mut mu_all = vec![0.0; n_paths * n];
    let mut sigma_all = vec![0.0; n_paths * n * n];
    let mut beta_all = vec![0.0; n_paths * n * p];
    let mut lambda_all = vec![0.0; n_paths * p];
    let mut feats = vec![0.0; n_paths * q.max(1)];
    let mut cell_of = vec![0usize; n_paths];
    let mut coords = vec![0.0; d_coords];
    let mut ey = vec![0.0; n_paths];
    let mut zu_pred = vec![0.0; n_paths];
    let mut level_var = 0.0f64;
    let bound = gen.y_bound();

    for step in (0..m).rev() {
        let t = paths.grid.t[step];

        // Coefficients and basis state at the cell start.
        for path in 0..n_paths {
            let log_s = paths.log_s_at(path, step);
            let regime = paths.regime_at(path, step);
            spec.sigma.eval_into(t, log_s, regime, n, &mut sigma_all[path * n * n..(path + 1) * n * n]);
            spec.beta.eval_into(t, log_s, regime, p, &mut beta_all[path * n * p..(path + 1) * n * p]);
            match opts.info {
                InfoMode::Full => {
                    spec.mu.eval_into(t, log_s, regime, 1, &mut mu_all[path * n..(path + 1) * n]);
                    lambda_all[path * p..(path + 1) * p]
                        .copy_from_slice(paths.lambda_cell_at(path, step));
                }
                InfoMode::Partial => {
                    let f = filter.unwrap();
                    mu_all[path * n..(path + 1) * n]
                        .copy_from_slice(f.mu_tilde_at(path, step, n));
                    lambda_all[path * p..(path + 1) * p]
                        .copy_from_slice(f.lambda_tilde_at(path, step, p));
                }
            }
            coords[..n].copy_from_slice(log_s);
            if opts.info == InfoMode::Partial && n_regimes > 1 {
                let post = filter.unwrap().posterior_at(path, step);
                coords[n..].copy_from_slice(&post[..n_regimes - 1]);
            }
            if q > 0 {
                fill_features(&coords, opts.basis.degree, &mut feats[path * q..(path + 1) * q]);
            }
            let mut c = paths.default_config(path, step);
            if regime_cells > 1 {
                c = c * regime_cells + regime;
            }
            cell_of[path] = c;
        }

        // Group paths by cell (path order preserved, deterministic).
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
        for path in 0..n_paths {
            groups[cell_of[path]].push(path);
        }

        // Fit the conditional-mean regression per cell.
        let mut cells: Vec<FitCell> = Vec::with_capacity(n_cells);
        let mut fallback_cells = 0usize;
        let mut max_condition = 1.0f64;
        for members in groups.into_iter() {
            if members.is_empty() {
                cells.push(FitCell::mean_only(members));
                continue;
            }
            if members.len() < (2 * q).max(q + 2) || q == 0 {
                fallback_cells += 1;
                cells.push(FitCell::mean_only(members));
                continue;
            }
            let cell = FitCell::fit(members, &feats, q, opts.ridge_rel, step)?;
            max_condition = max_condition.max(cell.condition);
            cells.push(cell);
        }

        let y_next_vec: Vec<f64> =
            (0..n_paths).map(|path| sol.y[path * n_points + step + 1]).collect();
        let y_next = |path: usize| y_next_vec[path];

        // Conditional mean of Y_{i+1}.
        let mut max_neq = 0.0f64;
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        for cell in &cells {
            if cell.members.is_empty() {
                continue;
            }
            let (coef, t_mean, neq) = cell.regress(&feats, q, y_next);
            max_neq = max_neq.max(neq);
            let mut cell_ss_res = 0.0;
            for &path in &cell.members {
                let pred = cell.predict(&feats, q, &coef, t_mean, path);
                ey[path] = pred;
                let yv = y_next(path);
                cell_ss_res += (yv - pred) * (yv - pred);
                ss_tot += (yv - t_mean) * (yv - t_mean);
            }
            ss_res += cell_ss_res;
            // Estimation noise of this cell's fitted level enters Y as a
            // common (across paths) error; track its variance contribution
            // to the Y0 estimator.
            let dof = (cell.members.len() as f64 - cell.active.len() as f64 - 1.0).max(1.0);
            let resid_var = cell_ss_res / dof;
            level_var += cell.members.len() as f64 * resid_var / (n_paths as f64 * n_paths as f64);
        }

        // Martingale integrands: centered-target regressions reuse the same
        // normal equations.
        for l in 0..n {
            for cell in &cells {
                if cell.members.is_empty() {
                    continue;
                }
                let target = |path: usize| {
                    let dw = match opts.info {
                        InfoMode::Full => paths.dw(path, step)[l],
                        InfoMode::Partial => filter.unwrap().w_bar_at(path, step, n)[l],
                    };
                    (y_next(path) - ey[path]) * dw
                };
                let (coef, t_mean, neq) = cell.regress(&feats, q, target);
                max_neq = max_neq.max(neq);
                for &path in &cell.members {
                    zu_pred[path] = cell.predict(&feats, q, &coef, t_mean, path);
                }
            }
            for path in 0..n_paths {
                sol.z[(path * m + step) * n + l] = zu_pred[path] / dt;
            }
        }
        for j in 0..p {
            for cell in &cells {
                if cell.members.is_empty() {
                    continue;
                }
                let target = |path: usize| {
                    let dm = match opts.info {
                        InfoMode::Full => {
                            paths.m_at(path, step + 1)[j] - paths.m_at(path, step)[j]
                        }
                        InfoMode::Partial => {
                            let f = filter.unwrap();
                            f.m_bar_at(path, step + 1, p)[j] - f.m_bar_at(path, step, p)[j]
                        }
                    };
                    (y_next(path) - ey[path]) * dm
                };
                let (coef, t_mean, neq) = cell.regress(&feats, q, target);
                max_neq = max_neq.max(neq);
                for &path in &cell.members {
                    zu_pred[path] = cell.predict(&feats, q, &coef, t_mean, path);
                }
            }
            for path in 0..n_paths {
                let mass = lambda_all[path * p + j] * dt;
                sol.u[(path * m + step) * p + j] =
                    if mass < LAMBDA_DT_TINY { 0.0 } else { zu_pred[path] / mass };
            }
        }

        // Explicit driver step with one Picard re-substitution of Y.
        for path in 0..n_paths {
            let ctx = DriverCtx {
                t,
                dt,
                cell: step,
                path,
                n_assets: n,
                n_defaults: p,
                mu: &mu_all[path * n..(path + 1) * n],
                sigma: &sigma_all[path * n * n..(path + 1) * n * n],
                beta: &beta_all[path * n * p..(path + 1) * n * p],
                lambda: &lambda_all[path * p..(path + 1) * p],
            };
            let z = &sol.z[(path * m + step) * n..(path * m + step) * n + n];
            let u = &sol.u[(path * m + step) * p..(path * m + step) * p + p];
            let g1 = gen.driver(&ctx, ey[path], z, u, None);
            let y_mid = ey[path] + g1 * dt;
            let ctrl = sol.control.as_mut().map(|c| {
                let base = (path * m + step) * n_controls;
                &mut c[base..base + n_controls]
            });
            let g2 = gen.driver(&ctx, y_mid, z, u, ctrl);
            let mut y_new = ey[path] + g2 * dt;
            if !y_new.is_finite() {
                return Err(EngineError::NonFinite { context: "driver step" });
            }
            if let Some(c) = bound {
                if y_new.abs() > 10.0 * c {
                    return Err(EngineError::Divergence {
                        step,
                        max_abs: y_new.abs(),
                        bound: c,
                    });
                }
                y_new = y_new.clamp(Y_FLOOR, c);
            }
            sol.y[path * n_points + step] = y_new;
        }

        sol.diagnostics.push(StepDiag {
            step,
            r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
            max_condition,
            max_normal_eq_residual: max_neq,
            fallback_cells,
        });

        if step == 0 {
            // The initial market state is deterministic, but a hidden regime
            // may not be: Y0 is the unconditional value, the mean of the
            // (possibly regime-conditional) time-0 values. Its standard
            // error combines the cross-path spread with the accumulated
            // common-level regression noise of the backward recursion.
            let y0_vals: Vec<f64> = (0..n_paths).map(|p| sol.y[p * n_points]).collect();
            let (m0, se0) = stats::mean_and_se(&y0_vals);
            let targets: Vec<f64> = (0..n_paths).map(y_next).collect();
            let (_, se_t) = stats::mean_and_se(&targets);
            sol.y0 = m0;
            sol.y0_se = (se0.max(se_t).powi(2) + level_var).sqrt();
        }
    }
    sol.diagnostics.reverse();
    Ok(sol)
}

/// Fixed-strategy linear generator: the driver of the linear BSDE whose
/// solution is J^pi_t = E[(X_T^{t,pi})^gamma | F_t],
/// `f = gamma pi'(y mu + sigma z) + gamma(gamma-1)/2 ||pi' sigma||^2 y
///  + sum_j ((1 + pi'beta_j)^gamma - 1) lambda_j (y + u_j)`.
pub struct FixedStrategyPowerGenerator<'a> {
    pub gamma: f64,
    pub controls: crate::paths::Controls<'a>,
    pub n_steps: usize,
    y_bound: f64,
    lipschitz: f64,
}

impl<'a> FixedStrategyPowerGenerator<'a> {
    pub fn new(
        gamma: f64,
        controls: crate::paths::Controls<'a>,
        pi_sup: f64,
        spec: &ModelSpec,
        n_steps: usize,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(EngineError::InvalidModel {
                field: "gamma",
                message: format!("power utility requires gamma in (0,1), got {gamma}"),
            });
        }
        let sups = spec.coeff_sups();
        let y_bound = crate::model::power_value_bound(&sups, pi_sup, gamma, spec.horizon);
        let jump_gain = (1.0 + pi_sup * sups.beta).powf(gamma).max(1.0);
        let l_y = gamma * pi_sup * sups.mu
            + 0.5 * gamma * (1.0 - gamma) * pi_sup * pi_sup * sups.sigma * sups.sigma
            + sups.lambda * jump_gain;
        let l_z = gamma * pi_sup * sups.sigma;
        let l_u = sups.lambda * jump_gain;
        Ok(FixedStrategyPowerGenerator {
            gamma,
            controls,
            n_steps,
            y_bound,
            lipschitz: l_y.max(l_z).max(l_u),
        })
    }
}

impl<'a> Generator for FixedStrategyPowerGenerator<'a> {
    fn driver(
        &self,
        ctx: &DriverCtx,
        y: f64,
        z: &[f64],
        u: &[f64],
        _control: Option<&mut [f64]>,
    ) -> f64 {
        let n = ctx.n_assets;
        let p = ctx.n_defaults;
        let pi = self.controls_at(ctx.path, ctx.cell, n);
        let gamma = self.gamma;
        let mut lin = 0.0;
        for l in 0..n {
            let mut sz = 0.0;
            for c in 0..n {
                sz += ctx.sigma[l * n + c] * z[c];
            }
            lin += pi[l] * (y * ctx.mu[l] + sz);
        }
        let mut quad = 0.0;
        for c in 0..n {
            let mut ps = 0.0;
            for r in 0..n {
                ps += pi[r] * ctx.sigma[r * n + c];
            }
            quad += ps * ps;
        }
        let mut jump = 0.0;
        for j in 0..p {
            if ctx.lambda[j] == 0.0 {
                continue;
            }
            let mut pb = 0.0;
            for l in 0..n {
                pb += pi[l] * ctx.beta[l * p + j];
            }
            let factor = (1.0 + pb).max(0.0).powf(gamma) - 1.0;
            jump += ctx.lambda[j] * factor * (y + u[j]);
        }
        gamma * lin + 0.5 * gamma * (gamma - 1.0) * quad * y + jump
    }

    fn terminal(&self, _s_t: &[f64], _n_t: &[u8]) -> f64 {
        1.0
    }

    fn y_bound(&self) -> Option<f64> {
        Some(self.y_bound)
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }
}

impl<'a> FixedStrategyPowerGenerator<'a> {
    #[inline]
    fn controls_at(&self, path: usize, cell: usize, n: usize) -> &[f64] {
        match &self.controls {
            crate::paths::Controls::Constant(v) => v,
            crate::paths::Controls::PerStep(v) => &v[cell * n..(cell + 1) * n],
            crate::paths::Controls::PerPathStep(v) => {
                let base = (path * self.n_steps + cell) * n;
                &v[base..base + n]
            }
        }
    }
}

/// Solves the linear BSDE for a fixed bounded strategy; the output Y
/// estimates J^pi_t = E[(X_T^{t,pi})^gamma | F_t].
pub fn solve_linear_bsde_for_strategy(
    controls: &crate::paths::Controls,
    pi_sup: f64,
    gamma: f64,
    spec: &ModelSpec,
    paths: &PathBundle,
    opts: &SolveOptions,
) -> Result<BsdeSolution> {
    let gen = FixedStrategyPowerGenerator::new(
        gamma,
        controls.clone(),
        pi_sup,
        spec,
        paths.n_steps,
    )?;
    solve_bsde(&gen, spec, paths, None, opts)
}

/// Samples difference quotients of the driver over the state envelope of the
/// bundle; returns the largest quotient found. Probes both finiteness and the
/// declared Lipschitz bound.
pub fn probe_lipschitz<G: Generator>(
    gen: &G,
    spec: &ModelSpec,
    paths: &PathBundle,
    n_probes: usize,
    seed: u64,
) -> Result<f64> {
    let n = paths.n_assets;
    let p = paths.n_defaults;
    let m = paths.n_steps;
    let mut rng = StreamRng::new(seed, 0xfeed);
    let mut worst = 0.0f64;
    let mut mu = vec![0.0; n];
    let mut sigma = vec![0.0; n * n];
    let mut beta = vec![0.0; n * p];
    let y_hi = gen.y_bound().unwrap_or(2.0);

    for _ in 0..n_probes {
        let path = (rng.next_u64() % paths.n_paths as u64) as usize;
        let cell = (rng.next_u64() % m as u64) as usize;
        let t = paths.grid.t[cell];
        let log_s = paths.log_s_at(path, cell);
        let regime = paths.regime_at(path, cell);
        spec.mu.eval_into(t, log_s, regime, 1, &mut mu);
        spec.sigma.eval_into(t, log_s, regime, n, &mut sigma);
        spec.beta.eval_into(t, log_s, regime, p, &mut beta);
        let lambda = paths.lambda_cell_at(path, cell);
        let ctx = DriverCtx {
            t,
            dt: paths.grid.dt,
            cell,
            path,
            n_assets: n,
            n_defaults: p,
            mu: &mu,
            sigma: &sigma,
            beta: &beta,
            lambda,
        };
        let draw = |rng: &mut StreamRng| {
            let y = Y_FLOOR + rng.uniform() * y_hi;
            let z: Vec<f64> = (0..n).map(|_| -2.0 + 4.0 * rng.uniform()).collect();
            let u: Vec<f64> = (0..p).map(|_| -y + 2.0 * rng.uniform() * y_hi).collect();
            (y, z, u)
        };
        let (y_a, z_a, u_a) = draw(&mut rng);
        let (y_b, z_b, u_b) = draw(&mut rng);
        let g_a = gen.driver(&ctx, y_a, &z_a, &u_a, None);
        let g_b = gen.driver(&ctx, y_b, &z_b, &u_b, None);
        if !g_a.is_finite() || !g_b.is_finite() {
            return Err(EngineError::NonFinite { context: "driver probe" });
        }
        let mut dist = (y_a - y_b).abs();
        for l in 0..n {
            dist += (z_a[l] - z_b[l]).abs();
        }
        for j in 0..p {
            dist += (u_a[j] - u_b[j]).abs();
        }
        if dist > 1e-12 {
            worst = worst.max((g_a - g_b).abs() / dist);
        }
    }
    Ok(worst)
}
