//! Independent oracles for the test suites: closed-form constant-coefficient
//! expectations, dense-grid optimizers, exact-law forward Monte Carlo, a
//! default-cell enumeration for the log-utility value, and a bootstrap
//! particle filter.
//!
//! Nothing in this module touches the solver internals; the forward samplers
//! even carry their own price/wealth arithmetic so a bug in the simulator or
//! the regression solver cannot cancel against a bug here.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg;
use crate::model::ModelSpec;
use crate::paths::PathBundle;
use crate::rng::StreamRng;

/// E[(X_T^pi)^gamma] for constant scalar coefficients, proportional wealth,
/// one default with a constant-intensity exponential clock independent of W:
/// `exp((gamma pi mu + gamma(gamma-1) pi^2 sigma^2 / 2) T) *
///  (exp(-lambda T) + (1 - exp(-lambda T)) (1 + pi beta)^gamma)`.
pub fn power_constant_oracle(
    pi: f64,
    mu: f64,
    sigma: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
    horizon: f64,
) -> f64 {
    debug_assert!(1.0 + pi * beta >= 0.0);
    let diffusion =
        ((gamma * pi * mu + 0.5 * gamma * (gamma - 1.0) * pi * pi * sigma * sigma) * horizon)
            .exp();
    let p_surv = (-lambda * horizon).exp();
    diffusion * (p_surv + (1.0 - p_surv) * (1.0 + pi * beta).powf(gamma))
}

/// E[exp(-gamma X_T^phi)] for constant scalar coefficients and arithmetic
/// (amount) wealth started at zero:
/// `exp((-gamma phi mu + gamma^2 phi^2 sigma^2 / 2) T) *
///  (exp(-lambda T) + (1 - exp(-lambda T)) exp(-gamma phi beta))`.
pub fn exp_constant_oracle(
    phi: f64,
    mu: f64,
    sigma: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
    horizon: f64,
) -> f64 {
    let diffusion =
        ((-gamma * phi * mu + 0.5 * gamma * gamma * phi * phi * sigma * sigma) * horizon).exp();
    let p_surv = (-lambda * horizon).exp();
    diffusion * (p_surv + (1.0 - p_surv) * (-gamma * phi * beta).exp())
}

/// Brute-force maximizer: dense grid (1e5 points) followed by golden-section
/// polish of the best bracket. Non-finite objective values are treated as
/// minus infinity. Returns (argmax, max).
pub fn grid_argopt(objective: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const GRID: usize = 100_000;
    debug_assert!(hi > lo);
    let step = (hi - lo) / GRID as f64;
    let mut best_x = lo;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=GRID {
        let x = if i == GRID { hi } else { lo + i as f64 * step };
        let v = objective(x);
        if v.is_finite() && v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    let a = (best_x - step).max(lo);
    let b = (best_x + step).min(hi);
    let (x, v) = golden_max(&objective, a, b, tol);
    if v >= best_v {
        (x, v)
    } else {
        (best_x, best_v)
    }
}

/// Brute-force minimizer built on [`grid_argopt`].
pub fn grid_argmin(objective: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, v) = grid_argopt(|x| -objective(x), lo, hi, tol);
    (x, -v)
}

fn golden_max(objective: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = objective(c);
    let mut fd = objective(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd || !fd.is_finite() {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = objective(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, objective(x))
}

/// Pointwise log-utility objective
/// `f(pi) = pi mu - pi^2 sigma^2 / 2 + lambda ln(1 + pi beta)`;
/// the intensity term is dropped when lambda = 0 so the boundary point
/// 1 + pi beta = 0 stays finite there.
pub fn log_objective(pi: f64, mu: f64, sigma: f64, beta: f64, lambda: f64) -> f64 {
    let base = pi * mu - 0.5 * pi * pi * sigma * sigma;
    if lambda == 0.0 {
        base
    } else {
        base + lambda * (1.0 + pi * beta).ln()
    }
}

/// Exact-law forward sample of E[(X_T^pi)^gamma] for constant coefficients:
/// X_T^gamma = exp(gamma (pi mu - pi^2 sigma^2/2) T + gamma pi sigma W_T)
/// (1 + pi beta)^(gamma D) with W_T ~ N(0, T) and D ~ Bernoulli(1 - e^{-l T}).
pub fn forward_power_mc(
    pi: f64,
    mu: f64,
    sigma: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
    horizon: f64,
    n_samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = StreamRng::new(seed, 0x0f0f);
    let drift = gamma * (pi * mu - 0.5 * pi * pi * sigma * sigma) * horizon;
    let vol = gamma * pi * sigma * horizon.sqrt();
    let p_def = 1.0 - (-lambda * horizon).exp();
    let jump_pow = (1.0 + pi * beta).powf(gamma);
    let mut xs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z = rng.normal();
        let d = rng.uniform() < p_def;
        let v = (drift + vol * z).exp() * if d { jump_pow } else { 1.0 };
        xs.push(v);
    }
    crate::stats::mean_and_se(&xs)
}

/// Exact-law forward sample of E[exp(-gamma X_T^phi)] for amount wealth.
pub fn forward_exp_mc(
    phi: f64,
    mu: f64,
    sigma: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
    horizon: f64,
    n_samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = StreamRng::new(seed, 0x0e0e);
    let p_def = 1.0 - (-lambda * horizon).exp();
    let mut xs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z = rng.normal();
        let d = rng.uniform() < p_def;
        let x_t = phi * (mu * horizon + sigma * horizon.sqrt() * z + if d { beta } else { 0.0 });
        xs.push((-gamma * x_t).exp());
    }
    crate::stats::mean_and_se(&xs)
}

/// Expected discrete trapezoid integral of the log-utility bracket for the
/// constant-coefficient single-default model, by exact enumeration of the
/// default cell under the left-point clock: P(default in cell i) =
/// e^{-lambda i dt} - e^{-lambda (i+1) dt}, jump at the cell's right endpoint.
/// The optimal controls are found by grid search, independently of any closed
/// form.
pub fn log_value_cell_enumeration(
    mu: f64,
    sigma: f64,
    beta: f64,
    lambda: f64,
    horizon: f64,
    m_steps: usize,
) -> f64 {
    let s2 = sigma * sigma;
    // Pre-default control maximizes the full bracket; the feasible set keeps
    // 1 + pi beta strictly positive.
    let (lo, hi) = if beta > 1e-12 {
        ((-1.0 / beta) * (1.0 - 1e-9) , 60.0)
    } else if beta < -1e-12 {
        (-60.0, (-1.0 / beta) * (1.0 - 1e-9))
    } else {
        (-60.0, 60.0)
    };
    let (_, g_pre) = grid_argopt(|pi| log_objective(pi, mu, sigma, beta, lambda), lo, hi, 1e-10);
    // Post-default the bracket loses the intensity term.
    let g_post = mu * mu / (2.0 * s2);

    let dt = horizon / m_steps as f64;
    // Trapezoid with the integrand switching right after the default cell:
    // grid points 0..=c carry g_pre, points c+1..=m carry g_post.
    let trap = |c_opt: Option<usize>| -> f64 {
        let switch = c_opt.map_or(m_steps + 1, |c| c + 1);
        let mut acc = 0.0;
        for i in 0..=m_steps {
            let g = if i < switch { g_pre } else { g_post };
            let w = if i == 0 || i == m_steps { 0.5 } else { 1.0 };
            acc += w * g;
        }
        acc * dt
    };

    let mut value = (-lambda * horizon).exp() * trap(None);
    for c in 0..m_steps {
        let w = (-lambda * c as f64 * dt).exp() - (-lambda * (c + 1) as f64 * dt).exp();
        value += w * trap(Some(c));
    }
    value
}

/// Bootstrap particle filter estimate of the filtered drift, run on the same
/// observed (S, N) paths the production filter sees. Returns the per-path
/// per-cell drift estimate, [path][cell][asset].
///
/// Particles live on the regime set; propagation uses the first-order cell
/// transition I + Q dt, weights use the cell observation likelihood, and
/// resampling is systematic every step. Deterministic given `pf_seed`.
pub fn particle_filter_mu(
    spec: &ModelSpec,
    paths: &PathBundle,
    n_particles: usize,
    pf_seed: u64,
) -> Vec<f64> {
    let reg = spec.regime.as_ref().expect("regime model required");
    let r = reg.n_regimes;
    let n = paths.n_assets;
    let p = paths.n_defaults;
    let m = paths.n_steps;
    let dt = paths.grid.dt;

    // Row-stochastic one-cell transition.
    let mut trans = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            let v = if i == j { 1.0 + dt * reg.q_matrix[i * r + i] } else { dt * reg.q_matrix[i * r + j] };
            trans[i * r + j] = v.max(0.0);
        }
        let row: f64 = (0..r).map(|j| trans[i * r + j]).sum();
        for j in 0..r {
            trans[i * r + j] /= row;
        }
    }

    let mut mu_by_regime = vec![0.0; r * n];
    let mut lam_by_regime = vec![0.0; r * p];
    let mut sig = vec![0.0; n * n];
    let mut beta = vec![0.0; n * p];
    let mut out = vec![0.0; paths.n_paths * m * n];

    for path in 0..paths.n_paths {
        let mut rng = StreamRng::new(pf_seed, path as u64);
        // Initial particles from the prior.
        let mut states: Vec<usize> = (0..n_particles)
            .map(|_| {
                let u = rng.uniform();
                let mut acc = 0.0;
                let mut s = r - 1;
                for (i, pr) in reg.initial_dist.iter().enumerate() {
                    acc += pr;
                    if u <= acc {
                        s = i;
                        break;
                    }
                }
                s
            })
            .collect();
        let mut weights = vec![1.0 / n_particles as f64; n_particles];
        let mut new_states = vec![0usize; n_particles];

        for cell in 0..m {
            let t = paths.grid.t[cell];
            let log_s = paths.log_s_at(path, cell);
            for reg_i in 0..r {
                spec.mu.eval_into(t, log_s, reg_i, 1, &mut mu_by_regime[reg_i * n..(reg_i + 1) * n]);
                spec.lambda.eval_into(t, log_s, reg_i, 1, &mut lam_by_regime[reg_i * p..(reg_i + 1) * p]);
            }
            spec.sigma.eval_into(t, log_s, 0, n, &mut sig);
            spec.beta.eval_into(t, log_s, 0, p, &mut beta);

            // Estimate before seeing the cell's observation (predictable).
            for l in 0..n {
                let mut acc = 0.0;
                for (w, &s) in weights.iter().zip(states.iter()) {
                    acc += w * mu_by_regime[s * n + l];
                }
                out[(path * m + cell) * n + l] = acc;
            }

            // Propagate.
            for i in 0..n_particles {
                let u = rng.uniform();
                let row = &trans[states[i] * r..(states[i] + 1) * r];
                let mut acc = 0.0;
                let mut next = r - 1;
                for (j, pr) in row.iter().enumerate() {
                    acc += pr;
                    if u <= acc {
                        next = j;
                        break;
                    }
                }
                new_states[i] = next;
            }
            core::mem::swap(&mut states, &mut new_states);

            // Weight by the cell observation likelihood (shared shift keeps
            // the exponentials in range).
            let logliks: Vec<f64> = (0..r)
                .map(|reg_i| {
                    cell_log_likelihood(
                        paths, path, cell, dt,
                        &mu_by_regime[reg_i * n..(reg_i + 1) * n],
                        &sig, &beta,
                        &lam_by_regime[reg_i * p..(reg_i + 1) * p],
                    )
                })
                .collect();
            let shift = logliks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if shift.is_finite() {
                for (w, &s) in weights.iter_mut().zip(states.iter()) {
                    *w *= (logliks[s] - shift).exp();
                }
            }
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                for w in weights.iter_mut() {
                    *w /= total;
                }
            } else {
                for w in weights.iter_mut() {
                    *w = 1.0 / n_particles as f64;
                }
            }

            // Systematic resampling.
            let u0 = rng.uniform() / n_particles as f64;
            let mut cum = 0.0;
            let mut idx = 0usize;
            for i in 0..n_particles {
                let target = u0 + i as f64 / n_particles as f64;
                while cum + weights[idx] < target && idx + 1 < n_particles {
                    cum += weights[idx];
                    idx += 1;
                }
                new_states[i] = states[idx];
            }
            core::mem::swap(&mut states, &mut new_states);
            for w in weights.iter_mut() {
                *w = 1.0 / n_particles as f64;
            }
        }
    }
    out
}

/// Log-likelihood of one cell's observation (log-price increment net of
/// jumps, plus default indicators) under the given regime coefficients.
fn cell_log_likelihood(
    paths: &PathBundle,
    path: usize,
    cell: usize,
    dt: f64,
    mu: &[f64],
    sig: &[f64],
    beta: &[f64],
    lam: &[f64],
) -> f64 {
    let n = paths.n_assets;
    let p = paths.n_defaults;
    let log_now = paths.log_s_at(path, cell);
    let log_next = paths.log_s_at(path, cell + 1);
    let n_now = paths.n_at(path, cell);
    let n_next = paths.n_at(path, cell + 1);

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
        y[l] = log_next[l] - log_now[l] - jump + 0.5 * var_l * dt - mu[l] * dt;
    }
    let mut ll = if n == 1 {
        -y[0] * y[0] / (2.0 * sig[0] * sig[0] * dt)
    } else {
        let mut cov = linalg::gram(sig, n);
        for v in cov.iter_mut() {
            *v *= dt;
        }
        match linalg::solve_general(cov, n, y.clone()) {
            Ok(x) => -0.5 * y.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    for j in 0..p {
        if n_now[j] != 0 {
            continue; // extinguished defaults carry no information
        }
        if n_next[j] != 0 {
            ll += (lam[j] * dt).ln();
        } else {
            ll += -lam[j] * dt;
        }
    }
    ll
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_oracle_trivial_points() {
        assert!((power_constant_oracle(0.0, 0.05, 0.2, -0.5, 0.1, 0.5, 1.0) - 1.0).abs() < 1e-15);
        // lambda = 0 drops the jump factor.
        let v = power_constant_oracle(0.5, 0.05, 0.2, -0.5, 0.0, 0.5, 1.0);
        let want = ((0.5 * 0.5 * 0.05 + 0.5 * 0.5 * (0.5 - 1.0) * 0.25 * 0.04) * 1.0f64).exp();
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn exp_oracle_trivial_points() {
        assert!((exp_constant_oracle(0.0, 0.05, 0.2, 0.4, 0.1, 1.0, 1.0) - 1.0).abs() < 1e-15);
        // lambda = 0, phi = 1, mu = 0.05, sigma = 0.2, gamma = 1 -> e^{-0.03}.
        let v = exp_constant_oracle(1.0, 0.05, 0.2, 0.4, 0.0, 1.0, 1.0);
        assert!((v - (-0.03f64).exp()).abs() < 1e-15);
        // beta = 0 makes the jump factor 1 regardless of lambda.
        let a = exp_constant_oracle(0.7, 0.05, 0.2, 0.0, 0.8, 1.0, 1.0);
        let b = exp_constant_oracle(0.7, 0.05, 0.2, 0.0, 0.0, 1.0, 1.0);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn grid_argopt_parabola() {
        let (x, v) = grid_argopt(|x| -x * x, -1.0, 1.0, 1e-9);
        assert!(x.abs() < 1e-8);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn closed_forms_match_forward_mc() {
        // Oracle self-consistency on a spread of random instances.
        let mut rng = StreamRng::new(0xabcd, 0);
        for trial in 0..20 {
            let mu = -0.1 + 0.3 * rng.uniform();
            let sigma = 0.15 + 0.3 * rng.uniform();
            let beta = -0.6 + 1.2 * rng.uniform();
            let lambda = 0.5 * rng.uniform();
            let gamma = 0.2 + 0.6 * rng.uniform();
            let pi = {
                // keep 1 + pi beta >= 0
                let raw = -0.8 + 1.6 * rng.uniform();
                if 1.0 + raw * beta < 0.05 { 0.3 } else { raw }
            };
            let want = power_constant_oracle(pi, mu, sigma, beta, lambda, gamma, 1.0);
            let (mc, se) = forward_power_mc(pi, mu, sigma, beta, lambda, gamma, 1.0, 200_000, 77 + trial);
            assert!((mc - want).abs() < 3.0 * se + 1e-12, "power trial {trial}: {mc} vs {want} (se {se})");

            let phi = -1.0 + 2.0 * rng.uniform();
            let ge = 0.5 + 1.5 * rng.uniform();
            let want = exp_constant_oracle(phi, mu, sigma, beta, lambda, ge, 1.0);
            let (mc, se) = forward_exp_mc(phi, mu, sigma, beta, lambda, ge, 1.0, 200_000, 177 + trial);
            assert!((mc - want).abs() < 3.0 * se + 1e-12, "exp trial {trial}: {mc} vs {want} (se {se})");
        }
    }

    #[test]
    fn enumeration_value_has_mixture_structure() {
        // With many steps the enumeration approaches the continuous-time
        // mixture integral of pre/post-default bracket levels.
        let (mu, sigma, beta, lambda) = (0.05, 0.2, -0.5, 0.1);
        let v = log_value_cell_enumeration(mu, sigma, beta, lambda, 1.0, 2000);
        let (_, g_pre) = grid_argopt(|pi| log_objective(pi, mu, sigma, beta, lambda), -30.0, 1.9999, 1e-10);
        let g_post = mu * mu / (2.0 * sigma * sigma);
        let surv_int = (1.0 - (-lambda * 1.0f64).exp()) / lambda;
        let want = g_pre * surv_int + g_post * (1.0 - surv_int);
        assert!((v - want).abs() < 1e-3, "{v} vs {want}");
    }
}
