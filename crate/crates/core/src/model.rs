//! Market model: coefficient families, dimensions, bounds, and validation.
//!
//! Prices follow `dS = diag(S)(mu dt + sigma dW + beta dN)` where `N` is a
//! vector of one-jump default indicators with intensities `lambda`. The
//! coefficient maps are named parametric families (constant, regime-switching
//! constant, price-dependent) rather than arbitrary closures, so a model is
//! fully described by plain data and can be validated up front.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{EngineError, Result};
use crate::linalg;

/// Coefficient map `(t, state, regime) -> values` as a named family.
///
/// Shapes are fixed by the slot the field occupies in [`ModelSpec`]:
/// `mu` is `n`, `sigma` is `n x n` (row-major), `beta` is `n x p`,
/// `lambda` is `p`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffField {
    /// Same values at every (t, state, regime).
    Constant { values: Vec<f64> },
    /// One constant block per hidden regime.
    RegimeSwitching { per_regime: Vec<Vec<f64>> },
    /// Price-dependent family: entry (i, j) equals
    /// `base[i,j] * (1 + slope[i,j] * tanh(ln(S_i / ref_price)))`,
    /// bounded because tanh is. Row index i refers to the asset whose price
    /// modulates the row, so this family fits `mu`, `sigma`, and `beta`.
    PriceTanh { base: Vec<f64>, slope: Vec<f64>, ref_price: f64 },
}

impl CoeffField {
    pub fn constant(values: &[f64]) -> Self {
        CoeffField::Constant { values: values.to_vec() }
    }

    /// Evaluates the field into `out` (length rows*cols).
    pub fn eval_into(&self, _t: f64, log_s: &[f64], regime: usize, cols: usize, out: &mut [f64]) {
        match self {
            CoeffField::Constant { values } => out.copy_from_slice(values),
            CoeffField::RegimeSwitching { per_regime } => {
                out.copy_from_slice(&per_regime[regime])
            }
            CoeffField::PriceTanh { base, slope, ref_price } => {
                let log_ref = ref_price.ln();
                for (idx, o) in out.iter_mut().enumerate() {
                    let row = idx / cols;
                    let f = 1.0 + slope[idx] * (log_s[row] - log_ref).tanh();
                    *o = base[idx] * f;
                }
            }
        }
    }

    /// True when the field depends on the hidden regime.
    pub fn is_regime_dependent(&self) -> bool {
        matches!(self, CoeffField::RegimeSwitching { .. })
    }

    /// Supremum of |entry| over states and regimes (used for Lipschitz and
    /// boundedness constants).
    pub fn sup_abs(&self) -> f64 {
        match self {
            CoeffField::Constant { values } => {
                values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
            CoeffField::RegimeSwitching { per_regime } => per_regime
                .iter()
                .flat_map(|v| v.iter())
                .fold(0.0f64, |m, v| m.max(v.abs())),
            CoeffField::PriceTanh { base, slope, .. } => base
                .iter()
                .zip(slope.iter())
                .fold(0.0f64, |m, (b, s)| m.max(b.abs() * (1.0 + s.abs()))),
        }
    }

    fn expected_len(&self, len: usize, n_regimes: usize, field: &'static str) -> Result<()> {
        let ok = match self {
            CoeffField::Constant { values } => values.len() == len,
            CoeffField::RegimeSwitching { per_regime } => {
                per_regime.len() == n_regimes && per_regime.iter().all(|v| v.len() == len)
            }
            CoeffField::PriceTanh { base, slope, .. } => {
                base.len() == len && slope.len() == len
            }
        };
        if ok {
            Ok(())
        } else {
            Err(EngineError::InvalidModel {
                field,
                message: format!("expected {len} entries (and {n_regimes} regime blocks if regime-switching)"),
            })
        }
    }
}

/// Declared uniform-ellipticity window for sigma sigma'.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub sigma2_min: f64,
    pub sigma2_max: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { sigma2_min: 1e-8, sigma2_max: 1e6 }
    }
}

/// Finite-state Markov chain modulating the unobservable coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenRegimeSpec {
    pub n_regimes: usize,
    /// Row-major R x R transition-rate matrix; rows sum to zero.
    pub q_matrix: Vec<f64>,
    pub initial_dist: Vec<f64>,
}

impl HiddenRegimeSpec {
    pub fn single_regime() -> Self {
        HiddenRegimeSpec { n_regimes: 1, q_matrix: vec![0.0], initial_dist: vec![1.0] }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.n_regimes;
        if r == 0 {
            return Err(EngineError::InvalidModel {
                field: "regime.n_regimes",
                message: "must be >= 1".to_string(),
            });
        }
        if self.q_matrix.len() != r * r {
            return Err(EngineError::InvalidModel {
                field: "regime.q_matrix",
                message: format!("expected {r}x{r} entries"),
            });
        }
        for i in 0..r {
            let mut row_sum = 0.0;
            for j in 0..r {
                let q = self.q_matrix[i * r + j];
                if i != j && q < 0.0 {
                    return Err(EngineError::InvalidModel {
                        field: "regime.q_matrix",
                        message: format!("off-diagonal entry ({i},{j}) = {q} is negative"),
                    });
                }
                row_sum += q;
            }
            if row_sum.abs() > 1e-10 {
                return Err(EngineError::InvalidModel {
                    field: "regime.q_matrix",
                    message: format!("row {i} sums to {row_sum}, expected 0"),
                });
            }
        }
        if self.initial_dist.len() != r {
            return Err(EngineError::InvalidModel {
                field: "regime.initial_dist",
                message: format!("expected {r} entries"),
            });
        }
        let mut total = 0.0;
        for (i, p) in self.initial_dist.iter().enumerate() {
            if *p < 0.0 {
                return Err(EngineError::InvalidModel {
                    field: "regime.initial_dist",
                    message: format!("entry {i} = {p} is negative"),
                });
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(EngineError::InvalidModel {
                field: "regime.initial_dist",
                message: format!("sums to {total}, expected 1"),
            });
        }
        Ok(())
    }
}

/// Full market description.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub n_assets: usize,
    pub n_defaults: usize,
    /// Horizon T in years.
    pub horizon: f64,
    /// Initial prices (length n_assets).
    pub s0: Vec<f64>,
    pub mu: CoeffField,
    pub sigma: CoeffField,
    pub beta: CoeffField,
    pub lambda: CoeffField,
    pub regime: Option<HiddenRegimeSpec>,
    pub bounds: Bounds,
}

impl ModelSpec {
    /// Single-asset single-default model with constant coefficients; the
    /// workhorse benchmark configuration.
    pub fn scalar_constant(mu: f64, sigma: f64, beta: f64, lambda: f64, horizon: f64) -> Self {
        ModelSpec {
            n_assets: 1,
            n_defaults: 1,
            horizon,
            s0: vec![1.0],
            mu: CoeffField::constant(&[mu]),
            sigma: CoeffField::constant(&[sigma]),
            beta: CoeffField::constant(&[beta]),
            lambda: CoeffField::constant(&[lambda]),
            regime: None,
            bounds: Bounds::default(),
        }
    }

    pub fn n_regimes(&self) -> usize {
        self.regime.as_ref().map_or(1, |r| r.n_regimes)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_assets;
        let p = self.n_defaults;
        if n == 0 {
            return Err(EngineError::InvalidModel {
                field: "model.n_assets",
                message: "must be >= 1".to_string(),
            });
        }
        if p == 0 {
            return Err(EngineError::InvalidModel {
                field: "model.n_defaults",
                message: "must be >= 1".to_string(),
            });
        }
        if !(self.horizon > 0.0) {
            return Err(EngineError::InvalidModel {
                field: "model.horizon",
                message: format!("must be > 0, got {}", self.horizon),
            });
        }
        if self.s0.len() != n || self.s0.iter().any(|s| !(*s > 0.0)) {
            return Err(EngineError::InvalidModel {
                field: "model.s0",
                message: format!("expected {n} positive entries"),
            });
        }
        if let Some(reg) = &self.regime {
            reg.validate()?;
        }
        let r = self.n_regimes();
        if self.regime.is_none()
            && (self.mu.is_regime_dependent() || self.lambda.is_regime_dependent()
                || self.sigma.is_regime_dependent() || self.beta.is_regime_dependent())
        {
            return Err(EngineError::InvalidModel {
                field: "model.regime",
                message: "regime-switching coefficients require a regime model".to_string(),
            });
        }
        self.mu.expected_len(n, r, "model.mu")?;
        self.sigma.expected_len(n * n, r, "model.sigma")?;
        self.beta.expected_len(n * p, r, "model.beta")?;
        self.lambda.expected_len(p, r, "model.lambda")?;
        if matches!(self.lambda, CoeffField::PriceTanh { .. }) {
            return Err(EngineError::InvalidModel {
                field: "model.lambda",
                message: "price-dependent intensity is not supported".to_string(),
            });
        }
        if !(self.bounds.sigma2_min > 0.0 && self.bounds.sigma2_min < self.bounds.sigma2_max) {
            return Err(EngineError::InvalidModel {
                field: "model.bounds",
                message: "need 0 < sigma2_min < sigma2_max".to_string(),
            });
        }

        // lambda >= 0 in every regime.
        let mut lam = vec![0.0; p];
        let log_s0: Vec<f64> = self.s0.iter().map(|s| s.ln()).collect();
        for reg in 0..r {
            self.lambda.eval_into(0.0, &log_s0, reg, 1, &mut lam);
            for (j, l) in lam.iter().enumerate() {
                if *l < 0.0 || !l.is_finite() {
                    return Err(EngineError::InvalidModel {
                        field: "model.lambda",
                        message: format!("component {j} = {l} in regime {reg}"),
                    });
                }
            }
        }

        // beta > -1 entrywise so prices stay positive through defaults; for
        // the price-dependent family check the envelope of the tanh factor.
        match &self.beta {
            CoeffField::PriceTanh { base, slope, .. } => {
                for (idx, (b, s)) in base.iter().zip(slope.iter()).enumerate() {
                    let lo = (b * (1.0 + s)).min(b * (1.0 - s));
                    if lo <= -1.0 {
                        return Err(EngineError::InvalidModel {
                            field: "model.beta",
                            message: format!("entry {idx} can reach {lo} <= -1"),
                        });
                    }
                }
            }
            _ => {
                let mut b = vec![0.0; n * p];
                for reg in 0..r {
                    self.beta.eval_into(0.0, &log_s0, reg, p, &mut b);
                    for (idx, v) in b.iter().enumerate() {
                        if *v <= -1.0 {
                            return Err(EngineError::InvalidModel {
                                field: "model.beta",
                                message: format!("entry {idx} = {v} <= -1 in regime {reg}"),
                            });
                        }
                    }
                }
            }
        }

        self.check_ellipticity(&log_s0)?;
        Ok(())
    }

    /// Uniform ellipticity check eps I <= sigma sigma' <= K I, by eigenvalue
    /// bounds at a deterministic lattice of sampled log-price states.
    fn check_ellipticity(&self, log_s0: &[f64]) -> Result<()> {
        let n = self.n_assets;
        let mut sig = vec![0.0; n * n];
        let mut log_s = log_s0.to_vec();
        let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0];
        // Lattice over the first min(n, 2) coordinates keeps the sample count
        // small; remaining coordinates move in lockstep with the first.
        for &o0 in &offsets {
            for &o1 in &offsets {
                for (i, ls) in log_s.iter_mut().enumerate() {
                    *ls = log_s0[i] + if i == 1 { o1 } else { o0 };
                }
                for reg in 0..self.n_regimes() {
                    self.sigma.eval_into(0.0, &log_s, reg, n, &mut sig);
                    let g = linalg::gram(&sig, n);
                    let (lo, hi) = linalg::sym_eigen_range(&g, n);
                    if !(lo >= self.bounds.sigma2_min && hi <= self.bounds.sigma2_max) {
                        return Err(EngineError::InvalidModel {
                            field: "model.sigma",
                            message: format!(
                                "sigma sigma' eigenvalues [{lo}, {hi}] leave [{}, {}] at log_s {:?} regime {reg}",
                                self.bounds.sigma2_min, self.bounds.sigma2_max, log_s
                            ),
                        });
                    }
                }
                if n < 2 {
                    break;
                }
            }
        }
        Ok(())
    }

    /// Risk premium theta = sigma' (sigma sigma')^{-1} mu at a given state.
    pub fn risk_premium(&self, t: f64, log_s: &[f64], regime: usize) -> Result<Vec<f64>> {
        let n = self.n_assets;
        let mut mu = vec![0.0; n];
        let mut sig = vec![0.0; n * n];
        self.mu.eval_into(t, log_s, regime, 1, &mut mu);
        self.sigma.eval_into(t, log_s, regime, n, &mut sig);
        let g = linalg::gram(&sig, n);
        let x = linalg::solve_general(g, n, mu)
            .map_err(|m| EngineError::InvalidModel { field: "model.sigma", message: m })?;
        let mut theta = vec![0.0; n];
        for i in 0..n {
            for k in 0..n {
                theta[i] += sig[k * n + i] * x[k];
            }
        }
        Ok(theta)
    }

    /// Market price of diffusion risk rho = sigma^{-1} mu at a given state.
    pub fn rho(&self, t: f64, log_s: &[f64], regime: usize) -> Result<Vec<f64>> {
        let n = self.n_assets;
        let mut mu = vec![0.0; n];
        let mut sig = vec![0.0; n * n];
        self.mu.eval_into(t, log_s, regime, 1, &mut mu);
        self.sigma.eval_into(t, log_s, regime, n, &mut sig);
        linalg::solve_general(sig, n, mu)
            .map_err(|m| EngineError::InvalidModel { field: "model.sigma", message: m })
    }

    /// Supremum bounds of the coefficient maps, used for Lipschitz constants
    /// and the solver's value-process truncation bound.
    pub fn coeff_sups(&self) -> CoeffSups {
        CoeffSups {
            mu: self.mu.sup_abs(),
            sigma: self.sigma.sup_abs() * self.n_assets as f64,
            beta: self.beta.sup_abs(),
            lambda: self.lambda.sup_abs(),
        }
    }
}

/// Upper bounds on coefficient magnitudes.
#[derive(Debug, Clone, Copy)]
pub struct CoeffSups {
    pub mu: f64,
    pub sigma: f64,
    pub beta: f64,
    pub lambda: f64,
}

/// Uniform bound on the value process of the power problem over strategies
/// bounded by k: `(1 + k |beta|)^gamma exp((gamma k |mu| + gamma^2 (k |sigma|)^2 / 2) T)`.
pub fn power_value_bound(sups: &CoeffSups, k: f64, gamma: f64, horizon: f64) -> f64 {
    (1.0 + k * sups.beta).powf(gamma)
        * ((gamma * k * sups.mu + 0.5 * gamma * gamma * (k * sups.sigma) * (k * sups.sigma))
            * horizon)
            .exp()
}
