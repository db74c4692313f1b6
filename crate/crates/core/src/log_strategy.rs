//! Closed-form log-utility optimal strategy and value, under full information
//! or with filtered coefficients substituted for the unobservable ones.
//!
//! Pre-default and with a jump size beta != 0 the optimizer is
//!
//! ```text
//! pi = mu/(2 sigma^2) - 1/(2 beta) + sqrt((mu beta + sigma^2)^2
//!      + 4 lambda beta^2 sigma^2) / (2 beta sigma^2)
//! ```
//!
//! evaluated here in the rationalized form
//! `pi = mu/(2 s2) + (mu^2 beta + 2 mu s2 + 4 lambda beta s2) / (2 s2 (H + s2))`
//! with `H = hypot(mu beta + s2, 2 sigma beta sqrt(lambda))`, which is the
//! same expression without the cancelling 1/(2 beta) pair and stays finite
//! and continuous through beta -> 0. After the default, or with beta = 0, the
//! optimizer is the Merton ratio mu/sigma^2.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{EngineError, Result};
use crate::filtering::FilterOutput;
use crate::model::ModelSpec;
use crate::paths::PathBundle;
use crate::stats;

const BETA_TINY: f64 = 1e-8;

/// Optimal fraction of wealth for log utility at one (mu, sigma, beta,
/// lambda) state. `pre_default` selects the jump branch; after the default
/// the jump term is gone and the Merton ratio applies.
pub fn log_optimal_strategy(
    mu: f64,
    sigma: f64,
    beta: f64,
    lambda: f64,
    pre_default: bool,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(EngineError::InvalidModel {
            field: "sigma",
            message: format!("must be > 0, got {sigma}"),
        });
    }
    if lambda < 0.0 {
        return Err(EngineError::InvalidModel {
            field: "lambda",
            message: format!("must be >= 0, got {lambda}"),
        });
    }
    let s2 = sigma * sigma;
    if !pre_default || beta.abs() < BETA_TINY {
        return Ok(mu / s2);
    }
    let h = (mu * beta + s2).hypot(2.0 * sigma * beta * lambda.sqrt());
    let num = mu * mu * beta + 2.0 * mu * s2 + 4.0 * lambda * beta * s2;
    Ok(mu / (2.0 * s2) + num / (2.0 * s2 * (h + s2)))
}

/// Default adjustment epsilon = pi0 - pi_hat where pi0 = mu/sigma^2 is the
/// no-default optimizer. Zero after the default or for beta = 0; otherwise
/// `epsilon = -2 lambda beta / (H + sigma^2 + mu beta)`, so it carries the
/// opposite sign of beta.
pub fn log_epsilon(mu: f64, sigma: f64, beta: f64, lambda: f64, pre_default: bool) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(EngineError::InvalidModel {
            field: "sigma",
            message: format!("must be > 0, got {sigma}"),
        });
    }
    if lambda < 0.0 {
        return Err(EngineError::InvalidModel {
            field: "lambda",
            message: format!("must be >= 0, got {lambda}"),
        });
    }
    let s2 = sigma * sigma;
    if !pre_default || beta.abs() < BETA_TINY {
        return Ok(0.0);
    }
    let a = mu * beta + s2;
    let h = a.hypot(2.0 * sigma * beta * lambda.sqrt());
    let denom = h + a;
    if denom > 1e-12 * s2 {
        Ok(-2.0 * lambda * beta / denom)
    } else {
        // lambda = 0 with an inadmissible Merton point: fall back to the
        // difference of the two closed forms.
        Ok(mu / s2 - log_optimal_strategy(mu, sigma, beta, lambda, pre_default)?)
    }
}

/// Pointwise objective f(pi) = pi mu - pi^2 sigma^2/2 + lambda ln(1 + pi beta).
pub fn log_objective(pi: f64, mu: f64, sigma: f64, beta: f64, lambda: f64) -> f64 {
    let base = pi * mu - 0.5 * pi * pi * sigma * sigma;
    if lambda == 0.0 {
        base
    } else {
        base + lambda * (1.0 + pi * beta).ln()
    }
}

/// Analytic derivative f'(pi) = mu - pi sigma^2 + lambda beta / (1 + pi beta).
pub fn log_objective_derivative(pi: f64, mu: f64, sigma: f64, beta: f64, lambda: f64) -> f64 {
    let base = mu - pi * sigma * sigma;
    if lambda == 0.0 {
        base
    } else {
        base + lambda * beta / (1.0 + pi * beta)
    }
}

/// Which coefficients feed the strategy: the true ones or the filter's.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffSource {
    Exact,
    Filtered,
}

/// Optimal log-utility strategy path, default adjustment, and value estimate.
#[derive(Debug, Clone)]
pub struct LogSolution {
    /// [path][point].
    pub pi_hat: Vec<f64>,
    /// [path][point].
    pub epsilon: Vec<f64>,
    pub value: f64,
    pub value_se: f64,
    pub x0: f64,
    pub n_points: usize,
}

impl LogSolution {
    #[inline]
    pub fn pi_at(&self, path: usize, point: usize) -> f64 {
        self.pi_hat[path * self.n_points + point]
    }

    #[inline]
    pub fn eps_at(&self, path: usize, point: usize) -> f64 {
        self.epsilon[path * self.n_points + point]
    }
}

/// Evaluates the optimal strategy pathwise and estimates
/// `V(x) = ln x + E[ integral of (pi mu - |pi sigma|^2/2 + lambda ln(1+pi beta)) dt ]`
/// by the trapezoid rule across the grid and a Monte Carlo average across
/// paths. Stated for the single-asset single-default model.
pub fn log_value(
    spec: &ModelSpec,
    paths: &PathBundle,
    x0: f64,
    source: CoeffSource,
    filter: Option<&FilterOutput>,
) -> Result<LogSolution> {
    if spec.n_assets != 1 || spec.n_defaults != 1 {
        return Err(EngineError::InvalidModel {
            field: "model",
            message: "closed-form log solution requires n_assets = n_defaults = 1".to_string(),
        });
    }
    if !(x0 > 0.0) {
        return Err(EngineError::InvalidModel {
            field: "x0",
            message: format!("must be > 0, got {x0}"),
        });
    }
    if source == CoeffSource::Filtered && filter.is_none() {
        return Err(EngineError::InvalidModel {
            field: "filter",
            message: "coeff_source = filtered requires a filter output".to_string(),
        });
    }
    let m = paths.n_steps;
    let n_points = m + 1;
    let dt = paths.grid.dt;
    let mut pi_hat = vec![0.0; paths.n_paths * n_points];
    let mut epsilon = vec![0.0; paths.n_paths * n_points];
    let mut integrals = Vec::with_capacity(paths.n_paths);
    let mut mu_buf = [0.0];
    let mut sig_buf = [0.0];
    let mut beta_buf = [0.0];
    let mut lam_buf = [0.0];

    for path in 0..paths.n_paths {
        let mut acc = 0.0;
        for point in 0..n_points {
            let t = paths.grid.t[point];
            let log_s = paths.log_s_at(path, point);
            let alive = paths.n_at(path, point)[0] == 0;
            let regime = paths.regime_at(path, point);
            spec.sigma.eval_into(t, log_s, regime, 1, &mut sig_buf);
            spec.beta.eval_into(t, log_s, regime, 1, &mut beta_buf);
            let (mu, lambda) = match source {
                CoeffSource::Exact => {
                    spec.mu.eval_into(t, log_s, regime, 1, &mut mu_buf);
                    spec.lambda.eval_into(t, log_s, regime, 1, &mut lam_buf);
                    (mu_buf[0], if alive { lam_buf[0] } else { 0.0 })
                }
                CoeffSource::Filtered => {
                    let f = filter.unwrap();
                    (f.mu_tilde_at(path, point, 1)[0], f.lambda_tilde_at(path, point, 1)[0])
                }
            };
            let sigma = sig_buf[0];
            let beta = beta_buf[0];
            let pi = log_optimal_strategy(mu, sigma, beta, lambda, alive)?;
            let eps = log_epsilon(mu, sigma, beta, lambda, alive)?;
            pi_hat[path * n_points + point] = pi;
            epsilon[path * n_points + point] = eps;
            let g = log_objective(pi, mu, sigma, beta, lambda);
            let w = if point == 0 || point == m { 0.5 } else { 1.0 };
            acc += w * g;
        }
        integrals.push(acc * dt);
    }
    let (mean, se) = stats::mean_and_se(&integrals);
    Ok(LogSolution {
        pi_hat,
        epsilon,
        value: x0.ln() + mean,
        value_se: se,
        x0,
        n_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HiddenRegimeSpec;
    use crate::oracle;
    use crate::paths::simulate_paths;
    use crate::rng::StreamRng;

    #[test]
    fn no_jump_branch_is_merton() {
        let pi = log_optimal_strategy(0.05, 0.2, 0.0, 0.3, true).unwrap();
        assert!((pi - 1.25).abs() < 1e-15);
        let pi = log_optimal_strategy(0.05, 0.2, -0.5, 0.4, false).unwrap();
        assert!((pi - 1.25).abs() < 1e-15);
    }

    #[test]
    fn zero_intensity_collapses_the_radical() {
        // mu beta + sigma^2 > 0, so the formula reduces to mu/sigma^2.
        let pi = log_optimal_strategy(0.05, 0.2, -0.5, 0.0, true).unwrap();
        assert!((pi - 1.25).abs() < 1e-12, "pi {pi}");
        let eps = log_epsilon(0.05, 0.2, -0.5, 0.0, true).unwrap();
        assert!(eps.abs() < 1e-12);
    }

    #[test]
    fn infeasible_merton_with_zero_intensity_hits_boundary() {
        // mu beta + sigma^2 < 0 and lambda = 0: the formula returns -1/beta.
        let (mu, sigma, beta) = (0.2, 0.1, -0.9);
        assert!(mu * beta + sigma * sigma < 0.0);
        let pi = log_optimal_strategy(mu, sigma, beta, 0.0, true).unwrap();
        assert!((pi - (-1.0 / beta)).abs() < 1e-9, "pi {pi}");
        let eps = log_epsilon(mu, sigma, beta, 0.0, true).unwrap();
        assert!((eps - (mu / (sigma * sigma) - pi)).abs() < 1e-9);
    }

    #[test]
    fn matches_grid_oracle_on_the_benchmark() {
        let (mu, sigma, beta, lambda) = (0.05, 0.2, -0.5, 0.1);
        let pi = log_optimal_strategy(mu, sigma, beta, lambda, true).unwrap();
        let (arg, _) = oracle::grid_argopt(
            |p| oracle::log_objective(p, mu, sigma, beta, lambda),
            -30.0,
            (1.0 / 0.5) * (1.0 - 1e-9),
            1e-9,
        );
        assert!((pi - arg).abs() < 1e-6, "pi {pi} vs oracle {arg}");
        // This particular instance lands exactly at zero.
        assert!(pi.abs() < 1e-12);
    }

    #[test]
    fn branch_is_continuous_through_beta_zero() {
        let base = log_optimal_strategy(0.05, 0.2, 0.0, 0.3, true).unwrap();
        for beta in [1e-6, -1e-6] {
            let pi = log_optimal_strategy(0.05, 0.2, beta, 0.3, true).unwrap();
            assert!((pi - base).abs() < 1e-4, "beta {beta}: {pi} vs {base}");
        }
    }

    #[test]
    fn optimality_and_sign_rule_on_random_draws() {
        let mut rng = StreamRng::new(0x10c, 0);
        for _ in 0..300 {
            let mu = -0.2 + 0.4 * rng.uniform();
            let sigma = 0.1 + 0.4 * rng.uniform();
            let beta = -0.9 + 1.8 * rng.uniform();
            let lambda = 1.0 * rng.uniform();
            let pi = log_optimal_strategy(mu, sigma, beta, lambda, true).unwrap();
            let eps = log_epsilon(mu, sigma, beta, lambda, true).unwrap();
            assert!(1.0 + pi * beta > 0.0, "admissibility: mu {mu} sigma {sigma} beta {beta} lambda {lambda} pi {pi}");
            // Remark-style sign rule.
            if lambda > 0.0 && beta.abs() >= 1e-8 {
                if beta < 0.0 {
                    assert!(eps >= 0.0, "eps {eps} for beta {beta}");
                } else {
                    assert!(eps <= 0.0, "eps {eps} for beta {beta}");
                }
            }
            // First-order condition, scaled.
            let d = log_objective_derivative(pi, mu, sigma, beta, lambda);
            let scale = mu.abs() + sigma * sigma * (1.0 + pi.abs())
                + if lambda > 0.0 { lambda * beta.abs() / (1.0 + pi * beta) } else { 0.0 };
            assert!(d.abs() <= 1e-8 * scale.max(1.0), "foc {d} at scale {scale}");
            // pi0 decomposition.
            assert!((mu / (sigma * sigma) - eps - pi).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(log_optimal_strategy(0.05, 0.0, -0.5, 0.1, true).is_err());
        assert!(log_optimal_strategy(0.05, 0.2, -0.5, -0.1, true).is_err());
    }

    #[test]
    fn value_is_log_x_without_drift_and_jumps() {
        let spec = ModelSpec::scalar_constant(0.0, 0.25, -0.4, 0.0, 1.0);
        let b = simulate_paths(&spec, 20, 500, 3).unwrap();
        let sol = log_value(&spec, &b, 2.0, CoeffSource::Exact, None).unwrap();
        assert!(sol.pi_hat.iter().all(|&v| v.abs() < 1e-14));
        assert!((sol.value - 2.0f64.ln()).abs() < 1e-12);
        assert!(sol.value_se < 1e-12);
    }

    #[test]
    fn value_matches_default_cell_enumeration() {
        let (mu, sigma, beta, lambda) = (0.05, 0.2, -0.5, 0.1);
        let spec = ModelSpec::scalar_constant(mu, sigma, beta, lambda, 1.0);
        let m = 50;
        let b = simulate_paths(&spec, m, 40_000, 17).unwrap();
        let sol = log_value(&spec, &b, 1.0, CoeffSource::Exact, None).unwrap();
        let want = oracle::log_value_cell_enumeration(mu, sigma, beta, lambda, 1.0, m);
        assert!(
            (sol.value - want).abs() < 3.0 * sol.value_se + 1e-12,
            "value {} vs enumeration {want} (se {})",
            sol.value,
            sol.value_se
        );
    }

    #[test]
    fn degenerate_filter_matches_exact_source() {
        let mut spec = ModelSpec::scalar_constant(0.05, 0.2, -0.5, 0.2, 1.0);
        spec.regime = Some(HiddenRegimeSpec::single_regime());
        let b = simulate_paths(&spec, 25, 300, 7).unwrap();
        let f = crate::filtering::filter_paths(&spec, &b).unwrap();
        let exact = log_value(&spec, &b, 1.0, CoeffSource::Exact, None).unwrap();
        let filt = log_value(&spec, &b, 1.0, CoeffSource::Filtered, Some(&f)).unwrap();
        assert!((exact.value - filt.value).abs() < 1e-13);
        for (a, b) in exact.pi_hat.iter().zip(filt.pi_hat.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
