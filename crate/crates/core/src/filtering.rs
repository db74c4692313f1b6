//! Partial-information reduction: a finite-state Markov chain modulates the
//! unobservable drift and intensities, and the filter turns observed prices
//! and defaults into posterior regime probabilities, filtered coefficients
//! (mu~, lambda~, rho~), and the innovation processes (W-bar, M-bar).
//!
//! The filter consumes only the (S, N) columns of the bundle, never the true
//! regime path, so its outputs are measurable with respect to the observation
//! filtration by construction. Likelihood arithmetic runs in log space with a
//! shared shift per step.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{EngineError, Result};
use crate::linalg;
use crate::model::ModelSpec;
use crate::paths::PathBundle;

/// Posterior regime probabilities, filtered coefficients, and innovations.
///
/// Grid-point arrays hold m+1 entries per path; the cell-start value for cell
/// i is the point-i value, which keeps every coefficient predictable.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub n_regimes: usize,
    pub n_points: usize,
    /// [path][point][regime].
    pub posterior: Vec<f64>,
    /// Filtered drift, [path][point][asset].
    pub mu_tilde: Vec<f64>,
    /// Filtered intensity, alive-masked, [path][point][default].
    pub lambda_tilde: Vec<f64>,
    /// Filtered risk premium sigma^{-1} mu~, [path][point][asset].
    pub rho_tilde: Vec<f64>,
    /// Innovation Brownian increments, [path][cell][asset].
    pub w_bar: Vec<f64>,
    /// Innovation compensated-default path at grid points, [path][point][default].
    pub m_bar: Vec<f64>,
    /// Cells where every regime had zero likelihood (kept uniform instead).
    pub degenerate_cells: usize,
}

impl FilterOutput {
    #[inline]
    pub fn posterior_at(&self, path: usize, point: usize) -> &[f64] {
        let base = (path * self.n_points + point) * self.n_regimes;
        &self.posterior[base..base + self.n_regimes]
    }

    #[inline]
    pub fn mu_tilde_at(&self, path: usize, point: usize, n_assets: usize) -> &[f64] {
        let base = (path * self.n_points + point) * n_assets;
        &self.mu_tilde[base..base + n_assets]
    }

    #[inline]
    pub fn lambda_tilde_at(&self, path: usize, point: usize, n_defaults: usize) -> &[f64] {
        let base = (path * self.n_points + point) * n_defaults;
        &self.lambda_tilde[base..base + n_defaults]
    }

    #[inline]
    pub fn rho_tilde_at(&self, path: usize, point: usize, n_assets: usize) -> &[f64] {
        let base = (path * self.n_points + point) * n_assets;
        &self.rho_tilde[base..base + n_assets]
    }

    #[inline]
    pub fn w_bar_at(&self, path: usize, cell: usize, n_assets: usize) -> &[f64] {
        let base = (path * (self.n_points - 1) + cell) * n_assets;
        &self.w_bar[base..base + n_assets]
    }

    #[inline]
    pub fn m_bar_at(&self, path: usize, point: usize, n_defaults: usize) -> &[f64] {
        let base = (path * self.n_points + point) * n_defaults;
        &self.m_bar[base..base + n_defaults]
    }
}

/// Runs the discrete Bayes filter over every path in the bundle.
///
/// Per cell: (i) chain prediction p <- p + Q'p dt; (ii) diffusion correction
/// by the Gaussian likelihood of the observed log-price increment net of
/// jumps; (iii) jump correction lambda_r dt on default cells, exp(-lambda_r dt)
/// otherwise; normalize.
pub fn filter_paths(spec: &ModelSpec, paths: &PathBundle) -> Result<FilterOutput> {
    let reg = spec.regime.as_ref().ok_or(EngineError::InvalidModel {
        field: "model.regime",
        message: "filtering requires a hidden regime model".to_string(),
    })?;
    if spec.sigma.is_regime_dependent() || spec.beta.is_regime_dependent() {
        return Err(EngineError::InvalidModel {
            field: "model.sigma",
            message: "sigma and beta must be observable (not regime-switching) under partial information"
                .to_string(),
        });
    }
    let r = reg.n_regimes;
    let n = paths.n_assets;
    let p = paths.n_defaults;
    let m = paths.n_steps;
    let dt = paths.grid.dt;
    let max_exit = (0..r)
        .map(|i| -reg.q_matrix[i * r + i])
        .fold(0.0f64, f64::max);
    if max_exit * dt > 0.5 {
        return Err(EngineError::Filter {
            step: 0,
            message: format!(
                "grid too coarse for the chain prediction: max exit rate {max_exit} times dt {dt} exceeds 0.5"
            ),
        });
    }

    let n_points = m + 1;
    let mut out = FilterOutput {
        n_regimes: r,
        n_points,
        posterior: vec![0.0; paths.n_paths * n_points * r],
        mu_tilde: vec![0.0; paths.n_paths * n_points * n],
        lambda_tilde: vec![0.0; paths.n_paths * n_points * p],
        rho_tilde: vec![0.0; paths.n_paths * n_points * n],
        w_bar: vec![0.0; paths.n_paths * m * n],
        m_bar: vec![0.0; paths.n_paths * n_points * p],
        degenerate_cells: 0,
    };

    let mut mu_r = vec![0.0; r * n];
    let mut lam_r = vec![0.0; r * p];
    let mut sig = vec![0.0; n * n];
    let mut beta = vec![0.0; n * p];
    let mut post = vec![0.0; r];
    let mut predicted = vec![0.0; r];
    let mut log_w = vec![0.0; r];

    for path in 0..paths.n_paths {
        post.copy_from_slice(&reg.initial_dist);

        for point in 0..n_points {
            let t = paths.grid.t[point];
            let log_s = paths.log_s_at(path, point);
            let n_now = paths.n_at(path, point);

            // Regime-conditional coefficients at this state.
            for reg_i in 0..r {
                spec.mu
                    .eval_into(t, log_s, reg_i, 1, &mut mu_r[reg_i * n..(reg_i + 1) * n]);
                spec.lambda
                    .eval_into(t, log_s, reg_i, 1, &mut lam_r[reg_i * p..(reg_i + 1) * p]);
            }
            spec.sigma.eval_into(t, log_s, 0, n, &mut sig);
            spec.beta.eval_into(t, log_s, 0, p, &mut beta);

            // Record posterior and posterior-weighted coefficients.
            let pb = (path * n_points + point) * r;
            out.posterior[pb..pb + r].copy_from_slice(&post);
            let mb = (path * n_points + point) * n;
            for l in 0..n {
                let mut acc = 0.0;
                for reg_i in 0..r {
                    acc += post[reg_i] * mu_r[reg_i * n + l];
                }
                out.mu_tilde[mb + l] = acc;
            }
            let lb = (path * n_points + point) * p;
            for j in 0..p {
                let mut acc = 0.0;
                for reg_i in 0..r {
                    acc += post[reg_i] * lam_r[reg_i * p + j];
                }
                out.lambda_tilde[lb + j] = if n_now[j] == 0 { acc } else { 0.0 };
            }
            // rho~ = sigma^{-1} mu~ (sigma is observable).
            let mu_t = out.mu_tilde[mb..mb + n].to_vec();
            let rho = linalg::solve_general(sig.clone(), n, mu_t)
                .map_err(|msg| EngineError::Filter { step: point, message: msg })?;
            out.rho_tilde[(path * n_points + point) * n..(path * n_points + point) * n + n]
                .copy_from_slice(&rho);

            if point == m {
                break;
            }

            // Innovation increments for cell `point` from observables:
            // dW-bar = sigma^{-1} (dlogS - jumps + diag(sigma sigma') dt / 2 - mu~ dt).
            let log_next = paths.log_s_at(path, point + 1);
            let n_next = paths.n_at(path, point + 1);
            let mut y = vec![0.0; n];
            for l in 0..n {
                let mut var_l = 0.0;
                for kk in 0..n {
                    var_l += sig[l * n + kk] * sig[l * n + kk];
                }
                let mut jump = 0.0;
                for j in 0..p {
                    if n_next[j] != n_now[j] {
                        jump += (1.0 + beta[l * p + j]).ln();
                    }
                }
                y[l] = log_next[l] - log_s[l] - jump + 0.5 * var_l * dt;
            }
            let mut resid = y.clone();
            for l in 0..n {
                resid[l] -= out.mu_tilde[mb + l] * dt;
            }
            let wb = linalg::solve_general(sig.clone(), n, resid)
                .map_err(|msg| EngineError::Filter { step: point, message: msg })?;
            let wbase = (path * m + point) * n;
            out.w_bar[wbase..wbase + n].copy_from_slice(&wb);
            for j in 0..p {
                let dn = (n_next[j] - n_now[j]) as f64;
                out.m_bar[(path * n_points + point + 1) * p + j] =
                    out.m_bar[(path * n_points + point) * p + j] + dn
                        - out.lambda_tilde[lb + j] * dt;
            }

            // (i) chain prediction.
            for (i, pr) in predicted.iter_mut().enumerate() {
                let mut acc = post[i];
                for s in 0..r {
                    acc += dt * reg.q_matrix[s * r + i] * post[s];
                }
                *pr = acc.max(0.0);
            }

            // (ii)+(iii) observation corrections in log space.
            let mut all_zero = true;
            for reg_i in 0..r {
                let mut ll = if predicted[reg_i] > 0.0 {
                    predicted[reg_i].ln()
                } else {
                    f64::NEG_INFINITY
                };
                // Gaussian increment likelihood (regime-independent terms dropped).
                let mut resid = y.clone();
                for l in 0..n {
                    resid[l] -= mu_r[reg_i * n + l] * dt;
                }
                if n == 1 {
                    ll += -resid[0] * resid[0] / (2.0 * sig[0] * sig[0] * dt);
                } else {
                    let mut cov = linalg::gram(&sig, n);
                    for v in cov.iter_mut() {
                        *v *= dt;
                    }
                    let x = linalg::solve_general(cov, n, resid.clone())
                        .map_err(|msg| EngineError::Filter { step: point, message: msg })?;
                    ll += -0.5 * resid.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
                }
                // Thinned-Poisson jump likelihood on alive defaults.
                for j in 0..p {
                    if n_now[j] != 0 {
                        continue;
                    }
                    let lam = lam_r[reg_i * p + j];
                    if n_next[j] != 0 {
                        ll += if lam > 0.0 { (lam * dt).ln() } else { f64::NEG_INFINITY };
                    } else {
                        ll += -lam * dt;
                    }
                }
                log_w[reg_i] = ll;
                if ll.is_finite() {
                    all_zero = false;
                }
            }
            if all_zero {
                // Uninformative cell: keep the prediction, flag it.
                out.degenerate_cells += 1;
                let total: f64 = predicted.iter().sum();
                if total > 0.0 {
                    for (dst, src) in post.iter_mut().zip(predicted.iter()) {
                        *dst = src / total;
                    }
                }
                continue;
            }
            let shift = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (dst, lw) in post.iter_mut().zip(log_w.iter()) {
                *dst = (lw - shift).exp();
                total += *dst;
            }
            for v in post.iter_mut() {
                *v /= total;
            }
        }
    }
    Ok(out)
}

/// Likelihood-ratio diagnostics: the full-information density L and the
/// filtered density Lambda~ (whose reciprocal is the optional projection of L
/// onto the observation filtration). Both exponentials accumulate in log
/// space with the left-point rule, so positivity is exact.
#[derive(Debug, Clone)]
pub struct MeasureChange {
    /// L at grid points, [path][point].
    pub l: Vec<f64>,
    /// Lambda~ at grid points, [path][point].
    pub lambda_tilde: Vec<f64>,
    pub n_points: usize,
}

impl MeasureChange {
    #[inline]
    pub fn l_at(&self, path: usize, point: usize) -> f64 {
        self.l[path * self.n_points + point]
    }

    #[inline]
    pub fn lambda_tilde_at(&self, path: usize, point: usize) -> f64 {
        self.lambda_tilde[path * self.n_points + point]
    }

    /// xi = E[L | observations] = 1 / Lambda~.
    #[inline]
    pub fn xi_at(&self, path: usize, point: usize) -> f64 {
        1.0 / self.lambda_tilde_at(path, point)
    }
}

pub fn measure_change(
    spec: &ModelSpec,
    paths: &PathBundle,
    filter: &FilterOutput,
) -> Result<MeasureChange> {
    let n = paths.n_assets;
    let m = paths.n_steps;
    let dt = paths.grid.dt;
    let n_points = m + 1;
    let mut out = MeasureChange {
        l: vec![0.0; paths.n_paths * n_points],
        lambda_tilde: vec![0.0; paths.n_paths * n_points],
        n_points,
    };
    for path in 0..paths.n_paths {
        let mut log_l = 0.0;
        let mut log_lt = 0.0;
        out.l[path * n_points] = 1.0;
        out.lambda_tilde[path * n_points] = 1.0;
        for cell in 0..m {
            let t = paths.grid.t[cell];
            let log_s = paths.log_s_at(path, cell);
            let regime = paths.regime_at(path, cell);
            let rho = spec.rho(t, log_s, regime)?;
            let rho_t = filter.rho_tilde_at(path, cell, n);
            let dw = paths.dw(path, cell);
            let mut rho_dw = 0.0;
            let mut rho_sq = 0.0;
            let mut rho_t_dwt = 0.0;
            let mut rho_t_sq = 0.0;
            for l in 0..n {
                rho_dw += rho[l] * dw[l];
                rho_sq += rho[l] * rho[l];
                // dW~ = dW + rho dt.
                rho_t_dwt += rho_t[l] * (dw[l] + rho[l] * dt);
                rho_t_sq += rho_t[l] * rho_t[l];
            }
            log_l += -rho_dw - 0.5 * rho_sq * dt;
            log_lt += rho_t_dwt - 0.5 * rho_t_sq * dt;
            if !log_l.is_finite() || !log_lt.is_finite() {
                return Err(EngineError::NonFinite { context: "measure_change integrand" });
            }
            out.l[path * n_points + cell + 1] = log_l.exp();
            out.lambda_tilde[path * n_points + cell + 1] = log_lt.exp();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoeffField, HiddenRegimeSpec, ModelSpec};
    use crate::paths::simulate_paths;
    use crate::stats;

    fn two_regime_spec() -> ModelSpec {
        let mut spec = ModelSpec::scalar_constant(0.0, 0.2, -0.4, 0.0, 1.0);
        spec.mu = CoeffField::RegimeSwitching { per_regime: vec![vec![0.25], vec![-0.15]] };
        spec.lambda = CoeffField::RegimeSwitching { per_regime: vec![vec![0.1], vec![0.6]] };
        spec.regime = Some(HiddenRegimeSpec {
            n_regimes: 2,
            q_matrix: vec![-0.8, 0.8, 0.8, -0.8],
            initial_dist: vec![0.5, 0.5],
        });
        spec
    }

    #[test]
    fn single_regime_filter_is_degenerate() {
        let mut spec = ModelSpec::scalar_constant(0.05, 0.2, -0.5, 0.3, 1.0);
        spec.regime = Some(HiddenRegimeSpec::single_regime());
        let b = simulate_paths(&spec, 25, 200, 5).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        for path in 0..b.n_paths {
            for point in 0..=25 {
                assert_eq!(f.posterior_at(path, point), &[1.0]);
                assert!((f.mu_tilde_at(path, point, 1)[0] - 0.05).abs() < 1e-15);
                let want_lam = if b.n_at(path, point)[0] == 0 { 0.3 } else { 0.0 };
                assert_eq!(f.lambda_tilde_at(path, point, 1)[0], want_lam);
            }
            // W-bar reproduces the Brownian increments exactly.
            for cell in 0..25 {
                assert!((f.w_bar_at(path, cell, 1)[0] - b.dw(path, cell)[0]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn frozen_chain_with_identical_coefficients_keeps_prior() {
        let mut spec = ModelSpec::scalar_constant(0.05, 0.2, -0.5, 0.2, 1.0);
        spec.mu = CoeffField::RegimeSwitching { per_regime: vec![vec![0.05], vec![0.05]] };
        spec.lambda = CoeffField::RegimeSwitching { per_regime: vec![vec![0.2], vec![0.2]] };
        spec.regime = Some(HiddenRegimeSpec {
            n_regimes: 2,
            q_matrix: vec![0.0, 0.0, 0.0, 0.0],
            initial_dist: vec![0.3, 0.7],
        });
        let b = simulate_paths(&spec, 20, 100, 9).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        for path in 0..b.n_paths {
            for point in 0..=20 {
                let post = f.posterior_at(path, point);
                assert!((post[0] - 0.3).abs() < 1e-12 && (post[1] - 0.7).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn posterior_stays_on_simplex() {
        let spec = two_regime_spec();
        let b = simulate_paths(&spec, 50, 500, 21).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        for path in 0..b.n_paths {
            for point in 0..=50 {
                let post = f.posterior_at(path, point);
                let total: f64 = post.iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
                assert!(post.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
        assert_eq!(f.degenerate_cells, 0);
    }

    #[test]
    fn innovations_are_centered() {
        let spec = two_regime_spec();
        let b = simulate_paths(&spec, 50, 30_000, 33).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        let wbar_t: Vec<f64> = (0..b.n_paths)
            .map(|pth| (0..50).map(|c| f.w_bar_at(pth, c, 1)[0]).sum())
            .collect();
        let (mw, sw) = stats::mean_and_se(&wbar_t);
        assert!(mw.abs() < 3.0 * sw, "W-bar mean {mw}, se {sw}");
        let mbar_t: Vec<f64> = (0..b.n_paths).map(|pth| f.m_bar_at(pth, 50, 1)[0]).collect();
        let (mm, sm) = stats::mean_and_se(&mbar_t);
        assert!(mm.abs() < 3.0 * sm, "M-bar mean {mm}, se {sm}");
    }

    #[test]
    fn realized_quadratic_variation_tracks_time() {
        let spec = two_regime_spec();
        let b = simulate_paths(&spec, 100, 400, 55).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        let mut qvs = Vec::new();
        for path in 0..b.n_paths {
            let qv: f64 = (0..100).map(|c| {
                let w = f.w_bar_at(path, c, 1)[0];
                w * w
            }).sum();
            qvs.push(qv);
        }
        let (mean_qv, _) = stats::mean_and_se(&qvs);
        assert!((mean_qv - 1.0).abs() < 0.05, "qv {mean_qv}");
    }

    #[test]
    fn m_bar_quadratic_variation_matches_the_counting_process() {
        // [M-bar] = N pathwise up to the O(dt) contribution of the
        // absolutely continuous compensator part.
        let spec = two_regime_spec();
        let b = simulate_paths(&spec, 50, 2000, 61).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        for path in 0..b.n_paths {
            let mut qv = 0.0;
            for cell in 0..50 {
                let dm = f.m_bar_at(path, cell + 1, 1)[0] - f.m_bar_at(path, cell, 1)[0];
                qv += dm * dm;
            }
            let n_t = b.n_at(path, 50)[0] as f64;
            assert!((qv - n_t).abs() < 0.1, "path {path}: [M-bar] {qv} vs N_T {n_t}");
        }
    }

    #[test]
    fn filtered_intensity_is_consistent_in_mean() {
        // E[lambda~_t] should match E[lambda_t 1{alive}] by iterated expectations.
        let spec = two_regime_spec();
        let b = simulate_paths(&spec, 40, 20_000, 77).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        for point in [10usize, 25, 39] {
            let filt: Vec<f64> =
                (0..b.n_paths).map(|pth| f.lambda_tilde_at(pth, point, 1)[0]).collect();
            let truth: Vec<f64> = (0..b.n_paths)
                .map(|pth| b.lambda_cell_at(pth, point)[0])
                .collect();
            let (mf, sf) = stats::mean_and_se(&filt);
            let (mt, st) = stats::mean_and_se(&truth);
            let tol = 3.0 * (sf * sf + st * st).sqrt();
            assert!((mf - mt).abs() < tol, "point {point}: {mf} vs {mt} tol {tol}");
        }
    }

    #[test]
    fn measure_change_degenerates_without_risk_premium() {
        let mut spec = ModelSpec::scalar_constant(0.0, 0.2, -0.4, 0.2, 1.0);
        spec.regime = Some(HiddenRegimeSpec::single_regime());
        let b = simulate_paths(&spec, 20, 50, 3).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        let mc = measure_change(&spec, &b, &f).unwrap();
        assert!(mc.l.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(mc.lambda_tilde.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn single_regime_lambda_tilde_inverts_l() {
        let mut spec = ModelSpec::scalar_constant(0.06, 0.25, -0.4, 0.2, 1.0);
        spec.regime = Some(HiddenRegimeSpec::single_regime());
        let b = simulate_paths(&spec, 30, 100, 13).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        let mc = measure_change(&spec, &b, &f).unwrap();
        for path in 0..b.n_paths {
            for point in 0..=30 {
                let prod = mc.l_at(path, point) * mc.lambda_tilde_at(path, point);
                assert!((prod - 1.0).abs() < 1e-12, "xi != L at ({path},{point}): {prod}");
                assert!((mc.xi_at(path, point) - mc.l_at(path, point)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn l_is_a_mean_one_martingale() {
        let spec = two_regime_spec();
        let b = simulate_paths(&spec, 50, 30_000, 91).unwrap();
        let f = filter_paths(&spec, &b).unwrap();
        let mc = measure_change(&spec, &b, &f).unwrap();
        let lt: Vec<f64> = (0..b.n_paths).map(|pth| mc.l_at(pth, 50)).collect();
        let (mean, se) = stats::mean_and_se(&lt);
        assert!((mean - 1.0).abs() < 3.0 * se, "E[L_T] = {mean}, se {se}");
    }

    #[test]
    fn rejects_regime_dependent_sigma() {
        let mut spec = two_regime_spec();
        spec.sigma = CoeffField::RegimeSwitching { per_regime: vec![vec![0.2], vec![0.3]] };
        let b = simulate_paths(&spec, 20, 10, 1).unwrap();
        assert!(filter_paths(&spec, &b).is_err());
    }
}
