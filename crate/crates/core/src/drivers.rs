//! Optimizing BSDE generators: the pointwise supremum driver of the power
//! problem over strategies bounded by k, the pointwise infimum driver of the
//! exponential problem, their vector forms, and the monotone k-limit report.
//!
//! The scalar optimizers exploit concavity/convexity (guaranteed while the
//! value process stays positive and the jump coefficient lambda (Y+U) keeps
//! its sign) through a safeguarded Newton search on the derivative; when
//! regression noise breaks that structure they fall back to a deterministic
//! dense grid plus golden-section polish.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bsde::{DriverCtx, Generator};
use crate::error::{EngineError, Result};
use crate::model::ModelSpec;
use crate::rng::StreamRng;

/// Strategies are admissible when uniformly bounded by k componentwise; the
/// power problem additionally keeps 1 + pi'beta >= delta at live defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyBound {
    pub k: f64,
}

impl StrategyBound {
    pub fn new(k: f64) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(EngineError::InvalidModel {
                field: "bound.k",
                message: format!("must be finite and >= 0, got {k}"),
            });
        }
        Ok(StrategyBound { k })
    }
}

/// Utility family and risk parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilitySpec {
    pub kind: UtilityKind,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityKind {
    Log,
    Power,
    Exponential,
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            UtilityKind::Log => Ok(()),
            UtilityKind::Power => {
                if self.gamma > 0.0 && self.gamma < 1.0 {
                    Ok(())
                } else {
                    Err(EngineError::InvalidModel {
                        field: "utility.gamma",
                        message: format!("power utility requires gamma in (0,1), got {}", self.gamma),
                    })
                }
            }
            UtilityKind::Exponential => {
                if self.gamma > 0.0 {
                    Ok(())
                } else {
                    Err(EngineError::InvalidModel {
                        field: "utility.gamma",
                        message: format!("exponential utility requires gamma > 0, got {}", self.gamma),
                    })
                }
            }
        }
    }
}

/// Margin keeping (1 + pi beta)^(gamma-1) finite at the constraint.
const JUMP_MARGIN: f64 = 1e-12;
const BETA_TINY: f64 = 1e-14;

/// Maximum of
/// `h(pi) = gamma pi (mu Y + sigma Z) + gamma(gamma-1)/2 pi^2 sigma^2 Y
///        + lambda ((1 + pi beta)^gamma - 1)(Y + U)`
/// over [-k, k] intersected with the jump constraint. Returns (max, argmax),
/// the value re-evaluated at the argmax.
pub fn power_sup(
    y: f64,
    z: f64,
    u: f64,
    mu: f64,
    sigma: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
    k: f64,
) -> (f64, f64) {
    let a_lin = gamma * (mu * y + sigma * z);
    let a_quad = 0.5 * gamma * (gamma - 1.0) * sigma * sigma * y;
    let jump_on = lambda > 0.0 && beta.abs() > BETA_TINY;
    let c_jump = if jump_on { lambda * (y + u) } else { 0.0 };

    let mut lo = -k;
    let mut hi = k;
    if jump_on {
        let edge = (JUMP_MARGIN - 1.0) / beta;
        if beta > 0.0 {
            lo = lo.max(edge);
        } else {
            hi = hi.min(edge);
        }
    }
    if lo >= hi {
        let x = lo.clamp(-k, k);
        return (eval_power_h(x, a_lin, a_quad, c_jump, beta, gamma, jump_on), x);
    }

    let h = |x: f64| eval_power_h(x, a_lin, a_quad, c_jump, beta, gamma, jump_on);
    if !(y > 0.0) || c_jump < 0.0 {
        // Concavity not guaranteed: deterministic grid plus polish.
        return grid_polish(&h, lo, hi, true);
    }
    if !jump_on || c_jump == 0.0 {
        // Pure concave quadratic.
        let x = if a_quad < 0.0 { (-a_lin / (2.0 * a_quad)).clamp(lo, hi) } else { 0.0 };
        return (h(x), x);
    }

    let hp = |x: f64| {
        a_lin + 2.0 * a_quad * x + c_jump * gamma * beta * (1.0 + x * beta).powf(gamma - 1.0)
    };
    let hpp = |x: f64| {
        2.0 * a_quad
            + c_jump * gamma * (gamma - 1.0) * beta * beta * (1.0 + x * beta).powf(gamma - 2.0)
    };
    let x = concave_argmax(&hp, &hpp, lo, hi);
    (h(x), x)
}

#[inline]
fn eval_power_h(
    x: f64,
    a_lin: f64,
    a_quad: f64,
    c_jump: f64,
    beta: f64,
    gamma: f64,
    jump_on: bool,
) -> f64 {
    let mut v = a_lin * x + a_quad * x * x;
    if jump_on && c_jump != 0.0 {
        v += c_jump * ((1.0 + x * beta).max(0.0).powf(gamma) - 1.0);
    }
    v
}

/// Minimum of
/// `g(phi) = gamma^2/2 phi^2 sigma^2 Y - gamma phi (mu Y + sigma Z)
///         - (1 - exp(-gamma phi beta)) lambda (Y + U)`
/// over [-k, k]. Returns (min, argmin).
pub fn exp_inf(
    y: f64,
    z: f64,
    u: f64,
    mu: f64,
    sigma: f64,
    beta: f64,
    lambda: f64,
    gamma: f64,
    k: f64,
) -> (f64, f64) {
    let b_quad = 0.5 * gamma * gamma * sigma * sigma * y;
    let a_lin = gamma * (mu * y + sigma * z);
    let jump_on = lambda > 0.0 && beta.abs() > BETA_TINY;
    let c_jump = if jump_on { lambda * (y + u) } else { 0.0 };
    let g = |x: f64| {
        let mut v = b_quad * x * x - a_lin * x;
        if jump_on && c_jump != 0.0 {
            v -= (1.0 - (-gamma * x * beta).exp()) * c_jump;
        }
        v
    };
    if k == 0.0 {
        return (g(0.0), 0.0);
    }
    if !(y > 0.0) || c_jump < 0.0 {
        let (v, x) = grid_polish(&|x| -g(x), -k, k, true);
        return (-v, x);
    }
    if !jump_on || c_jump == 0.0 {
        let x = if b_quad > 0.0 { (a_lin / (2.0 * b_quad)).clamp(-k, k) } else { 0.0 };
        return (g(x), x);
    }
    // Convex minimization: the negated problem is concave maximization.
    let hp = |x: f64| -(2.0 * b_quad * x - a_lin - c_jump * gamma * beta * (-gamma * x * beta).exp());
    let hpp =
        |x: f64| -(2.0 * b_quad + c_jump * gamma * gamma * beta * beta * (-gamma * x * beta).exp());
    let x = concave_argmax(&hp, &hpp, -k, k);
    (g(x), x)
}

/// Argmax of a strictly concave function on [lo, hi], from its first and
/// second derivatives. Bisection on the derivative sign guarantees bracket
/// progress even when the derivative is nearly singular at a constraint
/// boundary; a Newton candidate is taken instead of the midpoint whenever it
/// lands comfortably inside the bracket, which restores fast convergence on
/// smooth instances.
fn concave_argmax(hp: &impl Fn(f64) -> f64, hpp: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    if hp(lo) <= 0.0 {
        return lo;
    }
    if hp(hi) >= 0.0 {
        return hi;
    }
    let mut a = lo;
    let mut b = hi;
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let d1 = hp(x);
        if d1 > 0.0 {
            a = x;
        } else if d1 < 0.0 {
            b = x;
        } else {
            return x;
        }
        let width = b - a;
        if width <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        let d2 = hpp(x);
        let cand = if d2 < 0.0 { x - d1 / d2 } else { f64::NAN };
        let margin = 0.1 * width;
        x = if cand.is_finite() && cand > a + margin && cand < b - margin {
            cand
        } else {
            0.5 * (a + b)
        };
    }
    0.5 * (a + b)
}

/// Deterministic 2001-point grid plus golden-section polish (maximization).
/// Exact ties resolve to the smallest |x|.
fn grid_polish(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, _maximize: bool) -> (f64, f64) {
    const GRID: usize = 2000;
    let step = (hi - lo) / GRID as f64;
    let mut best_x = lo;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=GRID {
        let x = if i == GRID { hi } else { lo + i as f64 * step };
        let v = f(x);
        if v.is_finite() && (v > best_v || (v == best_v && x.abs() < best_x.abs())) {
            best_v = v;
            best_x = x;
        }
    }
    let mut a = (best_x - step).max(lo);
    let mut b = (best_x + step).min(hi);
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..120 {
        if (b - a).abs() <= 1e-12 * (1.0 + best_x.abs()) {
            break;
        }
        if fc >= fd || !fd.is_finite() {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x);
    if v.is_finite() && v > best_v {
        (v, x)
    } else {
        (best_v, best_x)
    }
}

/// Vector power driver: maximum of the multi-asset multi-default generator
/// over the box [-k, k]^n intersected with the live jump half-spaces, by
/// projected-gradient ascent from multiple starts (the origin and eight
/// deterministic corners), certified by agreement of the two best starts;
/// on disagreement it falls back to a coarse feasible lattice plus polish.
/// Writes the argmax into `pi_out` and returns the maximum. Supports n <= 4.
#[allow(clippy::too_many_arguments)]
pub fn power_sup_vector(
    y: f64,
    z: &[f64],
    u: &[f64],
    mu: &[f64],
    sigma: &[f64],
    beta: &[f64],
    lambda: &[f64],
    gamma: f64,
    k: f64,
    pi_out: &mut [f64],
) -> f64 {
    let n = mu.len();
    let p = lambda.len();
    debug_assert!(n <= 4, "vector optimizer is desk-scale (n <= 4)");

    // sigma z and sigma sigma'.
    let mut sz = vec![0.0; n];
    for l in 0..n {
        for c in 0..n {
            sz[l] += sigma[l * n + c] * z[c];
        }
    }
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                acc += sigma[i * n + c] * sigma[j * n + c];
            }
            gram[i * n + j] = acc;
        }
    }
    let c_jump: Vec<f64> = (0..p).map(|j| lambda[j] * (y + u[j])).collect();
    let jump_on: Vec<bool> = (0..p).map(|j| lambda[j] > 0.0 && c_jump[j] != 0.0).collect();

    let h = |pi: &[f64]| -> f64 {
        let mut lin = 0.0;
        for l in 0..n {
            lin += pi[l] * (y * mu[l] + sz[l]);
        }
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += pi[i] * gram[i * n + j] * pi[j];
            }
        }
        let mut jump = 0.0;
        for j in 0..p {
            if !jump_on[j] {
                continue;
            }
            let mut pb = 0.0;
            for l in 0..n {
                pb += pi[l] * beta[l * p + j];
            }
            jump += c_jump[j] * ((1.0 + pb).max(0.0).powf(gamma) - 1.0);
        }
        gamma * lin + 0.5 * gamma * (gamma - 1.0) * quad * y + jump
    };
    let grad = |pi: &[f64], out: &mut [f64]| {
        for l in 0..n {
            let mut gv = gamma * (y * mu[l] + sz[l]);
            for j in 0..n {
                gv += gamma * (gamma - 1.0) * y * gram[l * n + j] * pi[j];
            }
            out[l] = gv;
        }
        for j in 0..p {
            if !jump_on[j] {
                continue;
            }
            let mut pb = 0.0;
            for l in 0..n {
                pb += pi[l] * beta[l * p + j];
            }
            let w = c_jump[j] * gamma * (1.0 + pb).max(JUMP_MARGIN).powf(gamma - 1.0);
            for l in 0..n {
                out[l] += w * beta[l * p + j];
            }
        }
    };
    let feasible = |pi: &[f64]| -> bool {
        for l in 0..n {
            if pi[l].abs() > k + 1e-15 {
                return false;
            }
        }
        for j in 0..p {
            if lambda[j] > 0.0 {
                let mut pb = 0.0;
                for l in 0..n {
                    pb += pi[l] * beta[l * p + j];
                }
                if 1.0 + pb < JUMP_MARGIN {
                    return false;
                }
            }
        }
        true
    };

    let ascend = |start: &[f64]| -> (f64, Vec<f64>) {
        let mut x = start.to_vec();
        let mut g = vec![0.0; n];
        let mut fx = h(&x);
        let mut t = 1.0;
        for _ in 0..500 {
            grad(&x, &mut g);
            let gsq: f64 = g.iter().map(|v| v * v).sum();
            if gsq.sqrt() < 1e-12 * (1.0 + fx.abs()) {
                break;
            }
            let mut moved = false;
            while t > 1e-16 {
                let xn: Vec<f64> = x
                    .iter()
                    .zip(g.iter())
                    .map(|(xi, gi)| (xi + t * gi).clamp(-k, k))
                    .collect();
                let fn_ = h(&xn);
                if feasible(&xn) && fn_ >= fx + 1e-8 * t * gsq {
                    let delta: f64 = xn
                        .iter()
                        .zip(x.iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    x = xn;
                    fx = fn_;
                    moved = delta > 1e-12 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
                    t = (t * 2.0).min(1e6);
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        (fx, x)
    };

    let pull_feasible = |mut x: Vec<f64>| -> Vec<f64> {
        let mut it = 0;
        while !feasible(&x) && it < 80 {
            for v in x.iter_mut() {
                *v *= 0.5;
            }
            it += 1;
        }
        x
    };

    let mut rng = StreamRng::new(0x5eed_c0de, 0);
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for _ in 0..8 {
        let corner: Vec<f64> =
            (0..n).map(|_| if rng.next_u64() & 1 == 0 { k } else { -k }).collect();
        starts.push(pull_feasible(corner));
    }

    let mut results: Vec<(f64, Vec<f64>)> = starts.iter().map(|s| ascend(s)).collect();
    results.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal).then_with(|| {
            let na = a.1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let nb = b.1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            na.partial_cmp(&nb).unwrap_or(core::cmp::Ordering::Equal)
        })
    });
    let best = results[0].clone();
    let second = results.get(1).cloned().unwrap_or_else(|| best.clone());
    let certified = (best.0 - second.0).abs() <= 1e-6 * (1.0 + best.0.abs());

    let (value, arg) = if certified {
        best
    } else {
        // Coarse feasible lattice, then polish from its best point.
        let mut best_l = best.clone();
        let mut idx = vec![0usize; n];
        loop {
            let pt: Vec<f64> = idx.iter().map(|&i| -k + 2.0 * k * i as f64 / 40.0).collect();
            if feasible(&pt) {
                let v = h(&pt);
                if v > best_l.0 {
                    best_l = (v, pt);
                }
            }
            let mut carry = true;
            for d in idx.iter_mut() {
                *d += 1;
                if *d <= 40 {
                    carry = false;
                    break;
                }
                *d = 0;
            }
            if carry {
                break;
            }
        }
        let polished = ascend(&best_l.1);
        if polished.0 >= best_l.0 {
            polished
        } else {
            best_l
        }
    };
    pi_out.copy_from_slice(&arg);
    value
}

/// Monotone-limit bookkeeping for a family of k-bounded values.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KPoint {
    pub k: f64,
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneDirection {
    NonDecreasing,
    NonIncreasing,
    Unconstrained,
}

/// Limit evidence: the last value, the increment sequence, and whether
/// monotonicity held within solver noise. No extrapolation model is applied;
/// the report only states that increments shrink.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct KLimitReport {
    pub limit: f64,
    pub limit_se: f64,
    pub increments: Vec<f64>,
    pub monotone: bool,
    pub violations: Vec<usize>,
    pub increments_shrink: bool,
}

pub fn k_limit(points: &[KPoint], direction: MonotoneDirection) -> Result<KLimitReport> {
    if points.len() < 3 {
        return Err(EngineError::InvalidModel {
            field: "k_limit",
            message: format!("need at least 3 k values, got {}", points.len()),
        });
    }
    for w in points.windows(2) {
        if !(w[1].k > w[0].k) {
            return Err(EngineError::InvalidModel {
                field: "k_limit",
                message: "k values must be strictly increasing".to_string(),
            });
        }
    }
    let mut increments = Vec::with_capacity(points.len() - 1);
    let mut violations = Vec::new();
    for (i, w) in points.windows(2).enumerate() {
        let inc = w[1].value - w[0].value;
        increments.push(inc);
        let tol = 2.0 * (w[0].se * w[0].se + w[1].se * w[1].se).sqrt();
        let violated = match direction {
            MonotoneDirection::NonDecreasing => inc < -tol,
            MonotoneDirection::NonIncreasing => inc > tol,
            MonotoneDirection::Unconstrained => false,
        };
        if violated {
            violations.push(i);
        }
    }
    let increments_shrink = increments.len() < 2
        || increments.last().unwrap().abs() <= increments.first().unwrap().abs() + 1e-15;
    let last = points.last().unwrap();
    Ok(KLimitReport {
        limit: last.value,
        limit_se: last.se,
        increments,
        monotone: violations.is_empty(),
        violations,
        increments_shrink,
    })
}

/// Esssup generator of the k-bounded power problem.
pub struct PowerSupGenerator {
    pub gamma: f64,
    pub bound: StrategyBound,
    n_assets: usize,
    y_bound: f64,
    lipschitz: f64,
}

impl PowerSupGenerator {
    pub fn new(gamma: f64, bound: StrategyBound, spec: &ModelSpec) -> Result<Self> {
        UtilitySpec { kind: UtilityKind::Power, gamma }.validate()?;
        let sups = spec.coeff_sups();
        let k = bound.k;
        let y_bound = crate::model::power_value_bound(&sups, k, gamma, spec.horizon);
        let jump_gain = (1.0 + k * sups.beta).powf(gamma).max(1.0);
        let l_y = gamma * k * sups.mu
            + 0.5 * gamma * (1.0 - gamma) * k * k * sups.sigma * sups.sigma
            + sups.lambda * jump_gain;
        let l_z = gamma * k * sups.sigma;
        let l_u = sups.lambda * jump_gain;
        Ok(PowerSupGenerator {
            gamma,
            bound,
            n_assets: spec.n_assets,
            y_bound,
            lipschitz: l_y.max(l_z).max(l_u),
        })
    }
}

impl Generator for PowerSupGenerator {
    fn driver(
        &self,
        ctx: &DriverCtx,
        y: f64,
        z: &[f64],
        u: &[f64],
        control: Option<&mut [f64]>,
    ) -> f64 {
        if ctx.n_assets == 1 && ctx.n_defaults == 1 {
            let (v, arg) = power_sup(
                y,
                z[0],
                u[0],
                ctx.mu[0],
                ctx.sigma[0],
                ctx.beta[0],
                ctx.lambda[0],
                self.gamma,
                self.bound.k,
            );
            if let Some(c) = control {
                c[0] = arg;
            }
            v
        } else {
            let mut buf = vec![0.0; ctx.n_assets];
            let v = power_sup_vector(
                y,
                z,
                u,
                ctx.mu,
                ctx.sigma,
                ctx.beta,
                ctx.lambda,
                self.gamma,
                self.bound.k,
                &mut buf,
            );
            if let Some(c) = control {
                c.copy_from_slice(&buf);
            }
            v
        }
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

    fn n_controls(&self) -> usize {
        self.n_assets
    }
}

/// Essinf generator of the k-bounded exponential problem with terminal
/// exp(-gamma zeta).
pub struct ExpInfGenerator<F: Fn(&[f64], &[u8]) -> f64> {
    pub gamma: f64,
    pub bound: StrategyBound,
    claim_payoff: F,
    n_assets: usize,
    y_bound: f64,
    lipschitz: f64,
}

impl<F: Fn(&[f64], &[u8]) -> f64> ExpInfGenerator<F> {
    /// `claim_payoff` maps the terminal state to the liability zeta;
    /// `payoff_lower_bound` is its declared lower bound (used for the value
    /// truncation bound exp(-gamma inf zeta)).
    pub fn new(
        gamma: f64,
        bound: StrategyBound,
        spec: &ModelSpec,
        payoff_lower_bound: f64,
        claim_payoff: F,
    ) -> Result<Self> {
        UtilitySpec { kind: UtilityKind::Exponential, gamma }.validate()?;
        if gamma * (-payoff_lower_bound) > 700.0 {
            return Err(EngineError::Pricing {
                message: format!(
                    "terminal exp(-gamma zeta) overflows: gamma {gamma} with lower bound {payoff_lower_bound}"
                ),
            });
        }
        let sups = spec.coeff_sups();
        let k = bound.k;
        let e_gain = (gamma * k * sups.beta).exp() - 1.0;
        let l_y = 0.5 * gamma * gamma * k * k * sups.sigma * sups.sigma
            + gamma * k * sups.mu
            + sups.lambda * e_gain.max(1.0);
        let l_z = gamma * k * sups.sigma;
        let l_u = sups.lambda * e_gain.max(1.0);
        Ok(ExpInfGenerator {
            gamma,
            bound,
            claim_payoff,
            n_assets: spec.n_assets,
            y_bound: (-gamma * payoff_lower_bound).exp(),
            lipschitz: l_y.max(l_z).max(l_u),
        })
    }
}

impl<F: Fn(&[f64], &[u8]) -> f64> Generator for ExpInfGenerator<F> {
    fn driver(
        &self,
        ctx: &DriverCtx,
        y: f64,
        z: &[f64],
        u: &[f64],
        control: Option<&mut [f64]>,
    ) -> f64 {
        debug_assert!(
            ctx.n_assets == 1 && ctx.n_defaults == 1,
            "exponential driver is implemented for the scalar model"
        );
        let (v, arg) = exp_inf(
            y,
            z[0],
            u[0],
            ctx.mu[0],
            ctx.sigma[0],
            ctx.beta[0],
            ctx.lambda[0],
            self.gamma,
            self.bound.k,
        );
        if let Some(c) = control {
            c[0] = arg;
        }
        v
    }

    fn terminal(&self, s_t: &[f64], n_t: &[u8]) -> f64 {
        (-self.gamma * (self.claim_payoff)(s_t, n_t)).exp()
    }

    fn y_bound(&self) -> Option<f64> {
        Some(self.y_bound)
    }

    fn lipschitz_bound(&self) -> f64 {
        self.lipschitz
    }

    fn n_controls(&self) -> usize {
        self.n_assets
    }
}
