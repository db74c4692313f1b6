//! Path simulation: correlated diffusion, default clocks, regime chain,
//! prices, and wealth processes on a uniform time grid.
//!
//! Defaults use the inverse-exponential clock: draw a unit exponential E per
//! default and trigger at the first cell where the left-point cumulative
//! intensity crosses E; the jump lands at the right endpoint of that cell so
//! strategies sampled at cell starts stay predictable. Prices advance by the
//! exact log-Euler exponential step with multiplicative jump factors, which
//! keeps them positive cell by cell.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{EngineError, Result};
use crate::linalg;
use crate::model::ModelSpec;
use crate::rng::StreamRng;

// Per-path channels: keeping Brownian, default, and regime draws on separate
// streams means e.g. turning intensities on or off never shifts the noise.
const CH_BROWNIAN: u64 = 0;
const CH_DEFAULT: u64 = 1;
const CH_REGIME: u64 = 2;
const CHANNELS: u64 = 4;

#[inline]
pub fn path_stream(seed: u64, path: usize, channel: u64) -> StreamRng {
    StreamRng::new(seed, (path as u64) * CHANNELS + channel)
}

/// Uniform time grid 0 = t_0 < ... < t_m = T.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dt: f64,
    pub t: Vec<f64>,
}

impl Grid {
    pub fn uniform(horizon: f64, m_steps: usize) -> Self {
        let dt = horizon / m_steps as f64;
        let t = (0..=m_steps).map(|i| i as f64 * dt).collect();
        Grid { dt, t }
    }

    pub fn n_steps(&self) -> usize {
        self.t.len() - 1
    }
}

/// Simulated trajectories of (W, N, M, S, regime) for a batch of paths.
///
/// Flat arrays, path-major. Grid-point arrays hold m+1 entries per path,
/// per-cell arrays hold m.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub n_paths: usize,
    pub n_steps: usize,
    pub n_assets: usize,
    pub n_defaults: usize,
    pub grid: Grid,
    pub seed: u64,
    /// Brownian increments, [path][cell][asset].
    pub dw: Vec<f64>,
    /// Default indicators at grid points, [path][point][default].
    pub n_ind: Vec<u8>,
    /// Compensated default martingale at grid points, [path][point][default].
    pub m_comp: Vec<f64>,
    /// Alive-masked intensity sampled at cell starts, [path][cell][default].
    pub lambda_cell: Vec<f64>,
    /// Prices at grid points, [path][point][asset].
    pub s: Vec<f64>,
    /// Log prices at grid points, [path][point][asset].
    pub log_s: Vec<f64>,
    /// Regime at grid points, [path][point]; empty when no regime model.
    pub regime: Vec<u8>,
    /// Cell index of each default, -1 when it never triggers, [path][default].
    pub default_cell: Vec<i64>,
}

impl PathBundle {
    #[inline]
    pub fn dw(&self, path: usize, cell: usize) -> &[f64] {
        let base = (path * self.n_steps + cell) * self.n_assets;
        &self.dw[base..base + self.n_assets]
    }

    #[inline]
    pub fn s_at(&self, path: usize, point: usize) -> &[f64] {
        let base = (path * (self.n_steps + 1) + point) * self.n_assets;
        &self.s[base..base + self.n_assets]
    }

    #[inline]
    pub fn log_s_at(&self, path: usize, point: usize) -> &[f64] {
        let base = (path * (self.n_steps + 1) + point) * self.n_assets;
        &self.log_s[base..base + self.n_assets]
    }

    #[inline]
    pub fn n_at(&self, path: usize, point: usize) -> &[u8] {
        let base = (path * (self.n_steps + 1) + point) * self.n_defaults;
        &self.n_ind[base..base + self.n_defaults]
    }

    #[inline]
    pub fn m_at(&self, path: usize, point: usize) -> &[f64] {
        let base = (path * (self.n_steps + 1) + point) * self.n_defaults;
        &self.m_comp[base..base + self.n_defaults]
    }

    #[inline]
    pub fn lambda_cell_at(&self, path: usize, cell: usize) -> &[f64] {
        let base = (path * self.n_steps + cell) * self.n_defaults;
        &self.lambda_cell[base..base + self.n_defaults]
    }

    #[inline]
    pub fn regime_at(&self, path: usize, point: usize) -> usize {
        if self.regime.is_empty() {
            0
        } else {
            self.regime[path * (self.n_steps + 1) + point] as usize
        }
    }

    /// Default-configuration index at a grid point (bitmask over defaults).
    #[inline]
    pub fn default_config(&self, path: usize, point: usize) -> usize {
        let n = self.n_at(path, point);
        let mut c = 0usize;
        for (j, v) in n.iter().enumerate() {
            if *v != 0 {
                c |= 1 << j;
            }
        }
        c
    }

    /// Coarsens the grid by an integer factor using the same randomness:
    /// grid-point arrays are subsampled, Brownian increments are aggregated,
    /// and the compensator is rebuilt with the coarse left-point rule. Used
    /// for grid-refinement studies under common random numbers.
    pub fn coarsen(&self, factor: usize) -> Result<PathBundle> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(EngineError::InvalidModel {
                field: "coarsen.factor",
                message: format!("{factor} does not divide {} steps", self.n_steps),
            });
        }
        let m = self.n_steps / factor;
        let n = self.n_assets;
        let p = self.n_defaults;
        let grid = Grid::uniform(self.grid.t[self.n_steps], m);
        let mut out = PathBundle {
            n_paths: self.n_paths,
            n_steps: m,
            n_assets: n,
            n_defaults: p,
            grid,
            seed: self.seed,
            dw: vec![0.0; self.n_paths * m * n],
            n_ind: vec![0; self.n_paths * (m + 1) * p],
            m_comp: vec![0.0; self.n_paths * (m + 1) * p],
            lambda_cell: vec![0.0; self.n_paths * m * p],
            s: vec![0.0; self.n_paths * (m + 1) * n],
            log_s: vec![0.0; self.n_paths * (m + 1) * n],
            regime: if self.regime.is_empty() {
                Vec::new()
            } else {
                vec![0; self.n_paths * (m + 1)]
            },
            default_cell: vec![-1; self.n_paths * p],
        };
        for path in 0..self.n_paths {
            for i in 0..=m {
                let fine = i * factor;
                let cb = (path * (m + 1) + i) * n;
                let fb = (path * (self.n_steps + 1) + fine) * n;
                out.s[cb..cb + n].copy_from_slice(&self.s[fb..fb + n]);
                out.log_s[cb..cb + n].copy_from_slice(&self.log_s[fb..fb + n]);
                let cb = (path * (m + 1) + i) * p;
                let fb = (path * (self.n_steps + 1) + fine) * p;
                out.n_ind[cb..cb + p].copy_from_slice(&self.n_ind[fb..fb + p]);
                if !self.regime.is_empty() {
                    out.regime[path * (m + 1) + i] = self.regime[path * (self.n_steps + 1) + fine];
                }
            }
            for i in 0..m {
                let cb = (path * m + i) * n;
                for l in 0..n {
                    let mut acc = 0.0;
                    for f in 0..factor {
                        acc += self.dw[(path * self.n_steps + i * factor + f) * n + l];
                    }
                    out.dw[cb + l] = acc;
                }
                let cb = (path * m + i) * p;
                let fb = (path * self.n_steps + i * factor) * p;
                out.lambda_cell[cb..cb + p].copy_from_slice(&self.lambda_cell[fb..fb + p]);
            }
            for j in 0..p {
                let mut mval = 0.0;
                for i in 0..m {
                    let dn = out.n_ind[(path * (m + 1) + i + 1) * p + j] as f64
                        - out.n_ind[(path * (m + 1) + i) * p + j] as f64;
                    if dn > 0.0 {
                        out.default_cell[path * p + j] = i as i64;
                    }
                    mval += dn - out.lambda_cell[(path * m + i) * p + j] * out.grid.dt;
                    out.m_comp[(path * (m + 1) + i + 1) * p + j] = mval;
                }
            }
        }
        Ok(out)
    }
}

/// Simulates a batch of paths. Identical `(spec, m_steps, n_paths, seed)`
/// give bit-identical output, and path `i` does not depend on `n_paths`.
pub fn simulate_paths(
    spec: &ModelSpec,
    m_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathBundle> {
    spec.validate()?;
    if m_steps < 2 {
        return Err(EngineError::InvalidModel {
            field: "m_steps",
            message: format!("need at least 2 steps, got {m_steps}"),
        });
    }
    if n_paths == 0 {
        return Err(EngineError::InvalidModel {
            field: "n_paths",
            message: "need at least 1 path".to_string(),
        });
    }
    let n = spec.n_assets;
    let p = spec.n_defaults;
    let grid = Grid::uniform(spec.horizon, m_steps);
    let dt = grid.dt;
    let has_regime = spec.regime.is_some();
    let n_regimes = spec.n_regimes();

    let mut bundle = PathBundle {
        n_paths,
        n_steps: m_steps,
        n_assets: n,
        n_defaults: p,
        grid,
        seed,
        dw: vec![0.0; n_paths * m_steps * n],
        n_ind: vec![0; n_paths * (m_steps + 1) * p],
        m_comp: vec![0.0; n_paths * (m_steps + 1) * p],
        lambda_cell: vec![0.0; n_paths * m_steps * p],
        s: vec![0.0; n_paths * (m_steps + 1) * n],
        log_s: vec![0.0; n_paths * (m_steps + 1) * n],
        regime: if has_regime { vec![0; n_paths * (m_steps + 1)] } else { Vec::new() },
        default_cell: vec![-1; n_paths * p],
    };

    let sqrt_dt = dt.sqrt();
    let mut mu = vec![0.0; n];
    let mut sig = vec![0.0; n * n];
    let mut beta = vec![0.0; n * p];
    let mut lam = vec![0.0; p];
    let mut sdw = vec![0.0; n];

    for path in 0..n_paths {
        let mut rng_w = path_stream(seed, path, CH_BROWNIAN);
        let mut rng_d = path_stream(seed, path, CH_DEFAULT);
        let mut rng_r = path_stream(seed, path, CH_REGIME);

        // Regime path at grid points (exact continuous-time chain, sampled
        // at cell starts).
        let regimes_at: Vec<u8> = if has_regime {
            simulate_regime_path(spec, &bundle.grid, n_regimes, &mut rng_r)
        } else {
            Vec::new()
        };
        if has_regime {
            let base = path * (m_steps + 1);
            bundle.regime[base..base + m_steps + 1].copy_from_slice(&regimes_at);
        }

        // Exponential clock levels per default.
        let clocks: Vec<f64> = (0..p).map(|_| rng_d.exponential()).collect();
        let mut cum = vec![0.0; p];
        let mut alive = vec![true; p];

        // Initial state.
        for l in 0..n {
            bundle.log_s[(path * (m_steps + 1)) * n + l] = spec.s0[l].ln();
            bundle.s[(path * (m_steps + 1)) * n + l] = spec.s0[l];
        }

        for i in 0..m_steps {
            let t = bundle.grid.t[i];
            let reg = if has_regime { regimes_at[i] as usize } else { 0 };
            let log_s_base = (path * (m_steps + 1) + i) * n;
            let log_s_now: Vec<f64> = bundle.log_s[log_s_base..log_s_base + n].to_vec();

            spec.mu.eval_into(t, &log_s_now, reg, 1, &mut mu);
            spec.sigma.eval_into(t, &log_s_now, reg, n, &mut sig);
            spec.beta.eval_into(t, &log_s_now, reg, p, &mut beta);
            spec.lambda.eval_into(t, &log_s_now, reg, 1, &mut lam);

            // Brownian increments.
            let dw_base = (path * m_steps + i) * n;
            for l in 0..n {
                bundle.dw[dw_base + l] = sqrt_dt * rng_w.normal();
            }

            // Default clocks: left-point intensity, jump at the right
            // endpoint of the crossing cell.
            let lam_base = (path * m_steps + i) * p;
            let mut defaults_now: Vec<usize> = Vec::new();
            for j in 0..p {
                if lam[j] < 0.0 {
                    return Err(EngineError::Simulation {
                        path,
                        step: i,
                        message: format!("negative intensity {} for default {j}", lam[j]),
                    });
                }
                let eff = if alive[j] { lam[j] } else { 0.0 };
                bundle.lambda_cell[lam_base + j] = eff;
                if alive[j] {
                    cum[j] += eff * dt;
                    if cum[j] >= clocks[j] {
                        alive[j] = false;
                        defaults_now.push(j);
                        bundle.default_cell[path * p + j] = i as i64;
                    }
                }
            }

            // Indicator and compensated-martingale updates.
            let np_base = (path * (m_steps + 1) + i) * p;
            for j in 0..p {
                let dn = if defaults_now.contains(&j) { 1u8 } else { 0u8 };
                bundle.n_ind[np_base + p + j] = bundle.n_ind[np_base + j] + dn;
                bundle.m_comp[np_base + p + j] = bundle.m_comp[np_base + j] + dn as f64
                    - bundle.lambda_cell[lam_base + j] * dt;
            }

            // Exact exponential price step plus multiplicative jump factors.
            linalg::mat_vec(&sig, n, n, &bundle.dw[dw_base..dw_base + n], &mut sdw);
            for l in 0..n {
                let mut var_l = 0.0;
                for k in 0..n {
                    var_l += sig[l * n + k] * sig[l * n + k];
                }
                let mut inc = (mu[l] - 0.5 * var_l) * dt + sdw[l];
                for &j in &defaults_now {
                    inc += (1.0 + beta[l * p + j]).ln();
                }
                let new_log = bundle.log_s[log_s_base + l] + inc;
                if !new_log.is_finite() {
                    return Err(EngineError::Simulation {
                        path,
                        step: i,
                        message: format!("non-finite log price for asset {l}"),
                    });
                }
                bundle.log_s[log_s_base + n + l] = new_log;
                bundle.s[log_s_base + n + l] = new_log.exp();
            }
        }
    }
    Ok(bundle)
}

/// Exact continuous-time Markov chain trajectory read at grid points.
fn simulate_regime_path(
    spec: &ModelSpec,
    grid: &Grid,
    n_regimes: usize,
    rng: &mut StreamRng,
) -> Vec<u8> {
    let reg = spec.regime.as_ref().expect("regime model present");
    let m = grid.n_steps();
    let mut out = vec![0u8; m + 1];

    // Initial state from the prior.
    let u0 = rng.uniform();
    let mut state = n_regimes - 1;
    let mut acc = 0.0;
    for (r, pr) in reg.initial_dist.iter().enumerate() {
        acc += pr;
        if u0 <= acc {
            state = r;
            break;
        }
    }

    let horizon = grid.t[m];
    let mut t = 0.0;
    let mut next_jump = next_holding(reg, state, n_regimes, rng, t);
    for (i, &ti) in grid.t.iter().enumerate() {
        while next_jump <= ti {
            t = next_jump;
            state = jump_target(reg, state, n_regimes, rng);
            next_jump = next_holding(reg, state, n_regimes, rng, t);
        }
        out[i] = state as u8;
        if ti >= horizon {
            break;
        }
    }
    out
}

fn next_holding(
    reg: &crate::model::HiddenRegimeSpec,
    state: usize,
    n_regimes: usize,
    rng: &mut StreamRng,
    now: f64,
) -> f64 {
    let rate = -reg.q_matrix[state * n_regimes + state];
    if rate <= 0.0 {
        f64::INFINITY
    } else {
        now + rng.exponential() / rate
    }
}

fn jump_target(
    reg: &crate::model::HiddenRegimeSpec,
    state: usize,
    n_regimes: usize,
    rng: &mut StreamRng,
) -> usize {
    let rate = -reg.q_matrix[state * n_regimes + state];
    let u = rng.uniform() * rate;
    let mut acc = 0.0;
    let mut target = state;
    for j in 0..n_regimes {
        if j == state {
            continue;
        }
        acc += reg.q_matrix[state * n_regimes + j];
        if u <= acc {
            target = j;
            break;
        }
        target = j; // falls through to the last off-diagonal state
    }
    target
}

/// How the control values are laid out.
#[derive(Debug, Clone)]
pub enum Controls<'a> {
    /// One constant vector of n_assets values.
    Constant(&'a [f64]),
    /// Deterministic per-step values, [cell][asset].
    PerStep(&'a [f64]),
    /// Per-path per-step values, [path][cell][asset]. The caller is
    /// responsible for adaptedness: the cell-i value may only use information
    /// available at t_i.
    PerPathStep(&'a [f64]),
}

impl<'a> Controls<'a> {
    #[inline]
    fn at(&self, path: usize, cell: usize, n_assets: usize, n_steps: usize) -> &[f64] {
        match self {
            Controls::Constant(v) => v,
            Controls::PerStep(v) => &v[cell * n_assets..(cell + 1) * n_assets],
            Controls::PerPathStep(v) => {
                let base = (path * n_steps + cell) * n_assets;
                &v[base..base + n_assets]
            }
        }
    }
}

/// Proportional strategies follow the multiplicative wealth equation and stay
/// nonnegative under admissible controls; amount strategies accumulate
/// arithmetically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Proportional,
    Amount,
}

/// Wealth trajectories for a batch of paths under one strategy process.
#[derive(Debug, Clone)]
pub struct WealthPath {
    pub kind: StrategyKind,
    pub x0: f64,
    /// [path][point].
    pub x: Vec<f64>,
}

impl WealthPath {
    #[inline]
    pub fn at(&self, path: usize, point: usize, n_points: usize) -> f64 {
        self.x[path * n_points + point]
    }

    pub fn terminal(&self, n_steps: usize) -> Vec<f64> {
        (0..self.x.len() / (n_steps + 1))
            .map(|p| self.x[p * (n_steps + 1) + n_steps])
            .collect()
    }
}

/// Rolls wealth forward under the given controls.
///
/// Proportional kind uses the exact product form of the wealth equation (not
/// an Euler scheme), so positivity under admissible controls is exact; a jump
/// factor `1 + pi'beta < 0` at a default is an admissibility error.
pub fn wealth_path(
    spec: &ModelSpec,
    paths: &PathBundle,
    controls: &Controls,
    kind: StrategyKind,
    x0: f64,
) -> Result<WealthPath> {
    let n = paths.n_assets;
    let p = paths.n_defaults;
    let m = paths.n_steps;
    let dt = paths.grid.dt;
    let mut x = vec![0.0; paths.n_paths * (m + 1)];
    let mut mu = vec![0.0; n];
    let mut sig = vec![0.0; n * n];
    let mut beta = vec![0.0; n * p];
    let mut pi_sig = vec![0.0; n];

    for path in 0..paths.n_paths {
        let mut wealth = x0;
        x[path * (m + 1)] = wealth;
        for i in 0..m {
            let t = paths.grid.t[i];
            let reg = paths.regime_at(path, i);
            let log_s = paths.log_s_at(path, i);
            spec.mu.eval_into(t, log_s, reg, 1, &mut mu);
            spec.sigma.eval_into(t, log_s, reg, n, &mut sig);
            spec.beta.eval_into(t, log_s, reg, p, &mut beta);
            let ctrl = controls.at(path, i, n, m);
            let dw = paths.dw(path, i);

            // pi' sigma (row vector).
            for c in 0..n {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += ctrl[r] * sig[r * n + c];
                }
                pi_sig[c] = acc;
            }
            let drift: f64 = (0..n).map(|l| ctrl[l] * mu[l]).sum();
            let diff: f64 = (0..n).map(|c| pi_sig[c] * dw[c]).sum();
            let quad: f64 = (0..n).map(|c| pi_sig[c] * pi_sig[c]).sum();

            match kind {
                StrategyKind::Proportional => {
                    let mut step = ((drift - 0.5 * quad) * dt + diff).exp();
                    for j in 0..p {
                        let dn = paths.n_at(path, i + 1)[j] - paths.n_at(path, i)[j];
                        if dn != 0 {
                            let factor: f64 =
                                1.0 + (0..n).map(|l| ctrl[l] * beta[l * p + j]).sum::<f64>();
                            if factor < 0.0 {
                                return Err(EngineError::Admissibility {
                                    path,
                                    step: i,
                                    value: factor,
                                });
                            }
                            step *= factor;
                        }
                    }
                    wealth *= step;
                }
                StrategyKind::Amount => {
                    let mut inc = drift * dt + diff;
                    for j in 0..p {
                        let dn = (paths.n_at(path, i + 1)[j] - paths.n_at(path, i)[j]) as f64;
                        if dn != 0.0 {
                            inc += (0..n).map(|l| ctrl[l] * beta[l * p + j]).sum::<f64>() * dn;
                        }
                    }
                    wealth += inc;
                }
            }
            if !wealth.is_finite() {
                return Err(EngineError::Simulation {
                    path,
                    step: i,
                    message: "non-finite wealth".to_string(),
                });
            }
            x[path * (m + 1) + i + 1] = wealth;
        }
    }
    Ok(WealthPath { kind, x0, x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoeffField, HiddenRegimeSpec, ModelSpec};
    use crate::stats;

    fn base_spec(lambda: f64) -> ModelSpec {
        ModelSpec::scalar_constant(0.05, 0.2, -0.5, lambda, 1.0)
    }

    #[test]
    fn zero_intensity_means_no_defaults() {
        let spec = base_spec(0.0);
        let b = simulate_paths(&spec, 32, 200, 7).unwrap();
        assert!(b.n_ind.iter().all(|&v| v == 0));
        assert!(b.s.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn default_probability_matches_exponential_law() {
        // P(tau <= T) = 1 - exp(-lambda T) for a constant clock.
        let spec = base_spec(0.5);
        let n_paths = 100_000;
        let b = simulate_paths(&spec, 50, n_paths, 11).unwrap();
        let defaults = (0..n_paths)
            .filter(|&pth| b.n_at(pth, 50)[0] == 1)
            .count() as f64;
        let p_hat = defaults / n_paths as f64;
        let p_true = 1.0 - (-0.5f64).exp();
        let se = (p_true * (1.0 - p_true) / n_paths as f64).sqrt();
        assert!(
            (p_hat - p_true).abs() < 3.0 * se + 0.5 * 0.02, // + O(dt) clock discretization
            "p_hat {p_hat} vs {p_true} (se {se})"
        );
    }

    #[test]
    fn simultaneous_defaults_vanish_with_grid_refinement() {
        let mut spec = base_spec(0.3);
        spec.n_defaults = 2;
        spec.beta = CoeffField::constant(&[-0.4, -0.2]);
        spec.lambda = CoeffField::constant(&[0.3, 0.4]);
        let count_same_cell = |m: usize| -> usize {
            let b = simulate_paths(&spec, m, 20_000, 3).unwrap();
            (0..b.n_paths)
                .filter(|&pth| {
                    let c0 = b.default_cell[pth * 2];
                    let c1 = b.default_cell[pth * 2 + 1];
                    c0 >= 0 && c0 == c1
                })
                .count()
        };
        let coarse = count_same_cell(10);
        let fine = count_same_cell(160);
        assert!(fine < coarse, "coarse {coarse} fine {fine}");
        assert!((fine as f64) < 0.003 * 20_000.0, "fine {fine}");
    }

    #[test]
    fn compensated_martingale_centered_at_horizon() {
        let spec = base_spec(0.4);
        let b = simulate_paths(&spec, 50, 40_000, 23).unwrap();
        let mt: Vec<f64> = (0..b.n_paths).map(|pth| b.m_at(pth, 50)[0]).collect();
        let (mean, se) = stats::mean_and_se(&mt);
        assert!(mean.abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn terminal_log_price_moments_match_diffusion() {
        let spec = ModelSpec::scalar_constant(0.05, 0.2, 0.0, 0.0, 1.0);
        let b = simulate_paths(&spec, 40, 50_000, 5).unwrap();
        let logs: Vec<f64> = (0..b.n_paths).map(|pth| b.log_s_at(pth, 40)[0]).collect();
        let (mean, se) = stats::mean_and_se(&logs);
        let want_mean = 0.05 - 0.5 * 0.04;
        assert!((mean - want_mean).abs() < 3.0 * se, "mean {mean} vs {want_mean}");
        let sd = stats::sample_sd(&logs);
        let var = sd * sd;
        // SE of the sample variance of a normal: var * sqrt(2/(n-1)).
        let var_se = var * (2.0 / (b.n_paths as f64 - 1.0)).sqrt();
        assert!((var - 0.04).abs() < 3.0 * var_se, "var {var}");
    }

    #[test]
    fn seed_determinism_is_bitwise_and_per_path() {
        let spec = base_spec(0.2);
        let a = simulate_paths(&spec, 16, 64, 99).unwrap();
        let b = simulate_paths(&spec, 16, 64, 99).unwrap();
        assert_eq!(a.s, b.s);
        assert_eq!(a.dw, b.dw);
        assert_eq!(a.n_ind, b.n_ind);
        // Path i is invariant to the batch size.
        let c = simulate_paths(&spec, 16, 8, 99).unwrap();
        assert_eq!(&a.dw[..8 * 16], &c.dw[..]);
        let d = simulate_paths(&spec, 16, 64, 100).unwrap();
        assert_ne!(a.dw, d.dw);
    }

    #[test]
    fn zero_strategy_keeps_wealth_constant() {
        let spec = base_spec(0.3);
        let b = simulate_paths(&spec, 20, 100, 1).unwrap();
        let w = wealth_path(&spec, &b, &Controls::Constant(&[0.0]), StrategyKind::Proportional, 1.5)
            .unwrap();
        assert!(w.x.iter().all(|&v| (v - 1.5).abs() < 1e-15));
    }

    #[test]
    fn total_loss_boundary_sends_wealth_to_zero() {
        // pi * beta = -1 exactly: wealth must be exactly zero after default.
        let spec = base_spec(5.0); // high intensity so defaults happen
        let b = simulate_paths(&spec, 20, 500, 2).unwrap();
        let pi = [2.0]; // 2.0 * (-0.5) = -1
        let w = wealth_path(&spec, &b, &Controls::Constant(&pi), StrategyKind::Proportional, 1.0)
            .unwrap();
        let mut saw_default = false;
        for path in 0..b.n_paths {
            if b.default_cell[path] >= 0 {
                saw_default = true;
                let cell = b.default_cell[path] as usize;
                for point in (cell + 1)..=20 {
                    assert_eq!(w.at(path, point, 21), 0.0);
                }
            }
        }
        assert!(saw_default);
    }

    #[test]
    fn inadmissible_jump_factor_is_reported() {
        let spec = base_spec(5.0);
        let b = simulate_paths(&spec, 20, 500, 2).unwrap();
        let pi = [3.0]; // 1 + 3*(-0.5) = -0.5 < 0
        let err = wealth_path(&spec, &b, &Controls::Constant(&pi), StrategyKind::Proportional, 1.0)
            .unwrap_err();
        assert!(matches!(err, EngineError::Admissibility { .. }));
    }

    #[test]
    fn amount_wealth_accumulates_arithmetically() {
        let spec = base_spec(0.0);
        let b = simulate_paths(&spec, 10, 50, 13).unwrap();
        let phi = [1.0];
        let w = wealth_path(&spec, &b, &Controls::Constant(&phi), StrategyKind::Amount, 0.0)
            .unwrap();
        // X_T = mu T + sigma W_T for phi = 1, no defaults.
        for path in 0..b.n_paths {
            let wt: f64 = (0..10).map(|i| b.dw(path, i)[0]).sum();
            let want = 0.05 * 1.0 + 0.2 * wt;
            assert!((w.at(path, 10, 11) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn regime_paths_follow_the_chain_distribution() {
        let mut spec = base_spec(0.1);
        spec.mu = CoeffField::RegimeSwitching { per_regime: vec![vec![0.08], vec![-0.02]] };
        spec.regime = Some(HiddenRegimeSpec {
            n_regimes: 2,
            q_matrix: vec![-1.0, 1.0, 1.0, -1.0],
            initial_dist: vec![1.0, 0.0],
        });
        let b = simulate_paths(&spec, 40, 20_000, 17).unwrap();
        // P(state 1 at T) for a symmetric 2-state chain started in 0:
        // 0.5 (1 - exp(-2 q T)).
        let frac = (0..b.n_paths)
            .filter(|&pth| b.regime_at(pth, 40) == 1)
            .count() as f64
            / b.n_paths as f64;
        let want = 0.5 * (1.0 - (-2.0f64).exp());
        let se = (want * (1.0 - want) / b.n_paths as f64).sqrt();
        assert!((frac - want).abs() < 4.0 * se, "frac {frac} want {want}");
    }

    #[test]
    fn coarsen_preserves_grid_point_data() {
        let spec = base_spec(0.4);
        let fine = simulate_paths(&spec, 40, 300, 31).unwrap();
        let coarse = fine.coarsen(4).unwrap();
        assert_eq!(coarse.n_steps, 10);
        for path in 0..300 {
            for i in 0..=10 {
                assert_eq!(coarse.s_at(path, i), fine.s_at(path, 4 * i));
                assert_eq!(coarse.n_at(path, i), fine.n_at(path, 4 * i));
            }
            let dw_sum: f64 = (0..40).map(|i| fine.dw(path, i)[0]).sum();
            let dw_sum_c: f64 = (0..10).map(|i| coarse.dw(path, i)[0]).sum();
            assert!((dw_sum - dw_sum_c).abs() < 1e-12);
        }
    }
}
