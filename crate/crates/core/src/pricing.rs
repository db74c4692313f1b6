//! Hodges indifference pricing and the insider information price, built on
//! the k-bounded exponential-utility BSDE values under both filtrations.
//!
//! The buying price for a claim zeta at bound k is
//! `p_k = ln(J^{0,k}(0) / J^{zeta,k}(0)) / gamma`, and the information price
//! is the difference between the partial-information and full-information
//! prices, `d_k = p_bar_k - p_k`. Limits in k are reported as "last value
//! plus shrinking increments", never extrapolated. Claim and no-claim runs
//! share one path bundle (common random numbers), so price differences are
//! resolvable at desk scale.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::bsde::{solve_bsde, BsdeSolution, InfoMode, SolveOptions};
use crate::drivers::{k_limit, ExpInfGenerator, KLimitReport, KPoint, MonotoneDirection, StrategyBound};
use crate::error::{EngineError, Result};
use crate::filtering::FilterOutput;
use crate::model::ModelSpec;
use crate::paths::PathBundle;

/// Claim catalog: terminal liabilities selected by id, all bounded below.
#[derive(Debug, Clone, PartialEq)]
pub enum ClaimSpec {
    Zero,
    Constant { value: f64 },
    /// Pays 1 if the given default has not occurred by T.
    DefaultableBond { default_index: usize },
    /// European put max(strike - S_T, 0) on one asset.
    Put { asset: usize, strike: f64 },
}

impl ClaimSpec {
    pub fn payoff(&self, s_t: &[f64], n_t: &[u8]) -> f64 {
        match self {
            ClaimSpec::Zero => 0.0,
            ClaimSpec::Constant { value } => *value,
            ClaimSpec::DefaultableBond { default_index } => {
                if n_t[*default_index] == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            ClaimSpec::Put { asset, strike } => (strike - s_t[*asset]).max(0.0),
        }
    }

    pub fn lower_bound(&self) -> f64 {
        match self {
            ClaimSpec::Zero | ClaimSpec::DefaultableBond { .. } | ClaimSpec::Put { .. } => 0.0,
            ClaimSpec::Constant { value } => value.min(0.0),
        }
    }

    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        match self {
            ClaimSpec::DefaultableBond { default_index } if *default_index >= spec.n_defaults => {
                Err(EngineError::Pricing {
                    message: format!("claim default index {default_index} out of range"),
                })
            }
            ClaimSpec::Put { asset, strike } => {
                if *asset >= spec.n_assets {
                    Err(EngineError::Pricing { message: format!("claim asset {asset} out of range") })
                } else if !(*strike > 0.0) {
                    Err(EngineError::Pricing { message: format!("put strike must be > 0, got {strike}") })
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValueEstimate {
    pub value: f64,
    pub se: f64,
}

/// Solves the k-bounded exponential BSDE and returns J(0) = Y_0 > 0.
///
/// `info` picks the filtration: full information uses the true coefficients
/// and (W, M); partial information uses the filtered coefficients and the
/// innovations (W-bar, M-bar), with the posterior coordinates as regressors.
pub fn exp_value(
    claim: Option<&ClaimSpec>,
    info: InfoMode,
    bound: StrategyBound,
    gamma: f64,
    spec: &ModelSpec,
    paths: &PathBundle,
    filter: Option<&FilterOutput>,
    opts: &SolveOptions,
) -> Result<(ValueEstimate, BsdeSolution)> {
    if spec.n_assets != 1 || spec.n_defaults != 1 {
        return Err(EngineError::Pricing {
            message: "exponential pricing is implemented for the single-asset single-default model"
                .to_string(),
        });
    }
    if let Some(c) = claim {
        c.validate(spec)?;
    }
    let claim_owned = claim.cloned().unwrap_or(ClaimSpec::Zero);
    let lb = claim_owned.lower_bound();
    let gen = ExpInfGenerator::new(gamma, bound, spec, lb, move |s: &[f64], n: &[u8]| {
        claim_owned.payoff(s, n)
    })?;
    let run_opts = SolveOptions { info, ..opts.clone() };
    let sol = solve_bsde(&gen, spec, paths, filter, &run_opts)?;
    if !(sol.y0 > 0.0) {
        return Err(EngineError::Pricing {
            message: format!("non-positive exponential value J(0) = {}", sol.y0),
        });
    }
    Ok((ValueEstimate { value: sol.y0, se: sol.y0_se }, sol))
}

/// One bound's worth of Hodges data.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HodgesRow {
    pub k: f64,
    pub j_zero: f64,
    pub j_zero_se: f64,
    pub j_claim: f64,
    pub j_claim_se: f64,
    pub price: f64,
    pub price_se: f64,
}

/// Hodges buying prices per bound plus limit evidence.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HodgesReport {
    pub gamma: f64,
    pub rows: Vec<HodgesRow>,
    /// Price limit report (no monotonicity asserted for prices).
    pub price_limit: KLimitReport,
    /// J^{zeta,k} must not increase with k (larger strategy set).
    pub j_claim_limit: KLimitReport,
}

/// Computes p_k = ln(J^{0,k}/J^{zeta,k}) / gamma over a k grid, reusing the
/// same path bundle for the claim and no-claim runs.
#[allow(clippy::too_many_arguments)]
pub fn hodges_price(
    claim: &ClaimSpec,
    info: InfoMode,
    ks: &[f64],
    gamma: f64,
    spec: &ModelSpec,
    paths: &PathBundle,
    filter: Option<&FilterOutput>,
    opts: &SolveOptions,
) -> Result<HodgesReport> {
    if ks.is_empty() {
        return Err(EngineError::Pricing { message: "empty k grid".to_string() });
    }
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let bound = StrategyBound::new(k)?;
        let (j0, _) = exp_value(None, info, bound, gamma, spec, paths, filter, opts)?;
        let (jc, _) = exp_value(Some(claim), info, bound, gamma, spec, paths, filter, opts)?;
        let price = (j0.value / jc.value).ln() / gamma;
        let price_se = ((j0.se / j0.value).powi(2) + (jc.se / jc.value).powi(2)).sqrt() / gamma;
        rows.push(HodgesRow {
            k,
            j_zero: j0.value,
            j_zero_se: j0.se,
            j_claim: jc.value,
            j_claim_se: jc.se,
            price,
            price_se,
        });
    }
    let price_pts: Vec<KPoint> =
        rows.iter().map(|r| KPoint { k: r.k, value: r.price, se: r.price_se }).collect();
    let claim_pts: Vec<KPoint> =
        rows.iter().map(|r| KPoint { k: r.k, value: r.j_claim, se: r.j_claim_se }).collect();
    let (price_limit, j_claim_limit) = if rows.len() >= 3 {
        (
            k_limit(&price_pts, MonotoneDirection::Unconstrained)?,
            k_limit(&claim_pts, MonotoneDirection::NonIncreasing)?,
        )
    } else {
        let last = rows.last().unwrap();
        (
            KLimitReport {
                limit: last.price,
                limit_se: last.price_se,
                increments: Vec::new(),
                monotone: true,
                violations: Vec::new(),
                increments_shrink: true,
            },
            KLimitReport {
                limit: last.j_claim,
                limit_se: last.j_claim_se,
                increments: Vec::new(),
                monotone: true,
                violations: Vec::new(),
                increments_shrink: true,
            },
        )
    };
    Ok(HodgesReport { gamma, rows, price_limit, j_claim_limit })
}

/// All four exponential values and the derived prices at one bound.
#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PriceRow {
    pub k: f64,
    /// Partial information, no claim / with claim.
    pub j_bar_zero: f64,
    pub j_bar_zero_se: f64,
    pub j_bar_claim: f64,
    pub j_bar_claim_se: f64,
    /// Full information, no claim / with claim.
    pub j_zero: f64,
    pub j_zero_se: f64,
    pub j_claim: f64,
    pub j_claim_se: f64,
    /// Partial-information Hodges price p_bar_k.
    pub p_bar: f64,
    pub p_bar_se: f64,
    /// Full-information Hodges price p_k.
    pub p: f64,
    pub p_se: f64,
    /// Information price d_k = p_bar_k - p_k, stored exactly as that
    /// difference.
    pub d: f64,
    pub d_se: f64,
}

#[derive(Debug, Clone, Copy)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RunMeta {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

/// Insider information pricing report.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PriceReport {
    pub gamma: f64,
    pub rows: Vec<PriceRow>,
    pub p_bar_limit: KLimitReport,
    pub p_limit: KLimitReport,
    pub d_limit: KLimitReport,
    pub meta: RunMeta,
}

/// Computes the information price d_k = p_bar_k - p_k over a k grid. The
/// same observation paths feed both information levels, and the claim and
/// no-claim runs share the bundle too.
#[allow(clippy::too_many_arguments)]
pub fn information_price(
    claim: &ClaimSpec,
    ks: &[f64],
    gamma: f64,
    spec: &ModelSpec,
    paths: &PathBundle,
    filter: &FilterOutput,
    opts: &SolveOptions,
) -> Result<PriceReport> {
    if ks.len() < 3 {
        return Err(EngineError::Pricing {
            message: format!("information price needs >= 3 bounds, got {}", ks.len()),
        });
    }
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let bound = StrategyBound::new(k)?;
        let (jb0, _) =
            exp_value(None, InfoMode::Partial, bound, gamma, spec, paths, Some(filter), opts)?;
        let (jbc, _) = exp_value(
            Some(claim),
            InfoMode::Partial,
            bound,
            gamma,
            spec,
            paths,
            Some(filter),
            opts,
        )?;
        let (j0, _) = exp_value(None, InfoMode::Full, bound, gamma, spec, paths, None, opts)?;
        let (jc, _) =
            exp_value(Some(claim), InfoMode::Full, bound, gamma, spec, paths, None, opts)?;
        let p_bar = (jb0.value / jbc.value).ln() / gamma;
        let p_bar_se =
            ((jb0.se / jb0.value).powi(2) + (jbc.se / jbc.value).powi(2)).sqrt() / gamma;
        let p = (j0.value / jc.value).ln() / gamma;
        let p_se = ((j0.se / j0.value).powi(2) + (jc.se / jc.value).powi(2)).sqrt() / gamma;
        rows.push(PriceRow {
            k,
            j_bar_zero: jb0.value,
            j_bar_zero_se: jb0.se,
            j_bar_claim: jbc.value,
            j_bar_claim_se: jbc.se,
            j_zero: j0.value,
            j_zero_se: j0.se,
            j_claim: jc.value,
            j_claim_se: jc.se,
            p_bar,
            p_bar_se,
            p,
            p_se,
            d: p_bar - p,
            d_se: (p_bar_se * p_bar_se + p_se * p_se).sqrt(),
        });
    }
    let pts = |f: &dyn Fn(&PriceRow) -> (f64, f64)| -> Vec<KPoint> {
        rows.iter()
            .map(|r| {
                let (v, se) = f(r);
                KPoint { k: r.k, value: v, se }
            })
            .collect()
    };
    Ok(PriceReport {
        gamma,
        rows: rows.clone(),
        p_bar_limit: k_limit(&pts(&|r| (r.p_bar, r.p_bar_se)), MonotoneDirection::Unconstrained)?,
        p_limit: k_limit(&pts(&|r| (r.p, r.p_se)), MonotoneDirection::Unconstrained)?,
        d_limit: k_limit(&pts(&|r| (r.d, r.d_se)), MonotoneDirection::Unconstrained)?,
        meta: RunMeta { n_paths: paths.n_paths, n_steps: paths.n_steps, seed: paths.seed },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoeffField, HiddenRegimeSpec, ModelSpec};
    use crate::paths::simulate_paths;

    fn benchmark_spec() -> ModelSpec {
        ModelSpec::scalar_constant(0.05, 0.2, -0.5, 0.1, 1.0)
    }

    #[test]
    fn zero_claim_zero_bound_gives_one_exactly() {
        let spec = benchmark_spec();
        let b = simulate_paths(&spec, 20, 2000, 4).unwrap();
        let (v, sol) = exp_value(
            None,
            InfoMode::Full,
            StrategyBound::new(0.0).unwrap(),
            1.0,
            &spec,
            &b,
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!((v.value - 1.0).abs() < 1e-12, "J(0) = {}", v.value);
        assert!(sol.y.iter().all(|&y| (y - 1.0).abs() < 1e-12));
    }

    #[test]
    fn constant_claim_scales_the_value_by_cash_invariance() {
        let spec = benchmark_spec();
        let b = simulate_paths(&spec, 20, 8000, 6).unwrap();
        let gamma = 1.0;
        let bound = StrategyBound::new(1.0).unwrap();
        let (j0, _) = exp_value(None, InfoMode::Full, bound, gamma, &spec, &b, None, &SolveOptions::default()).unwrap();
        let claim = ClaimSpec::Constant { value: 0.7 };
        let (jc, _) = exp_value(Some(&claim), InfoMode::Full, bound, gamma, &spec, &b, None, &SolveOptions::default()).unwrap();
        let want = (-gamma * 0.7f64).exp() * j0.value;
        assert!(
            ((jc.value - want) / want).abs() < 1e-6,
            "J^c {} vs e^(-gc) J^0 {want}",
            jc.value
        );
    }

    #[test]
    fn zero_claim_price_is_exactly_zero() {
        let spec = benchmark_spec();
        let b = simulate_paths(&spec, 20, 5000, 8).unwrap();
        let rep = hodges_price(
            &ClaimSpec::Zero,
            InfoMode::Full,
            &[0.5, 1.0, 2.0],
            1.0,
            &spec,
            &b,
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        for row in &rep.rows {
            assert_eq!(row.price, 0.0, "k {}: price {}", row.k, row.price);
        }
    }

    #[test]
    fn defaultable_bond_price_sits_inside_the_unit_interval() {
        let spec = benchmark_spec();
        let b = simulate_paths(&spec, 25, 10_000, 10).unwrap();
        let rep = hodges_price(
            &ClaimSpec::DefaultableBond { default_index: 0 },
            InfoMode::Full,
            &[0.5, 1.0, 2.0],
            1.0,
            &spec,
            &b,
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        for row in &rep.rows {
            assert!(row.price > 0.0 && row.price < 1.0, "k {}: price {}", row.k, row.price);
        }
        assert!(rep.j_claim_limit.monotone, "J^claim not nonincreasing in k");
    }

    #[test]
    fn single_regime_information_price_vanishes() {
        let mut spec = benchmark_spec();
        spec.regime = Some(HiddenRegimeSpec::single_regime());
        let b = simulate_paths(&spec, 20, 5000, 12).unwrap();
        let f = crate::filtering::filter_paths(&spec, &b).unwrap();
        let rep = information_price(
            &ClaimSpec::DefaultableBond { default_index: 0 },
            &[0.5, 1.0, 2.0],
            1.0,
            &spec,
            &b,
            &f,
            &SolveOptions::default(),
        )
        .unwrap();
        for row in &rep.rows {
            assert!(row.d.abs() < 1e-10, "k {}: d {}", row.k, row.d);
            assert_eq!(row.d, row.p_bar - row.p);
        }
    }

    #[test]
    fn zero_claim_information_price_is_zero_even_across_filtrations() {
        // With zeta = 0 the claim runs coincide with the no-claim runs, so
        // both prices and their difference vanish exactly, even though the
        // two filtrations produce genuinely different values J_bar^0 != J^0.
        let mut spec = benchmark_spec();
        spec.mu = CoeffField::RegimeSwitching { per_regime: vec![vec![0.15], vec![-0.05]] };
        spec.regime = Some(HiddenRegimeSpec {
            n_regimes: 2,
            q_matrix: vec![-0.6, 0.6, 0.6, -0.6],
            initial_dist: vec![0.5, 0.5],
        });
        let b = simulate_paths(&spec, 20, 5000, 14).unwrap();
        let f = crate::filtering::filter_paths(&spec, &b).unwrap();
        let rep = information_price(
            &ClaimSpec::Zero,
            &[0.5, 1.0, 2.0],
            1.0,
            &spec,
            &b,
            &f,
            &SolveOptions::default(),
        )
        .unwrap();
        let mut saw_filtration_gap = false;
        for row in &rep.rows {
            assert_eq!(row.j_bar_zero, row.j_bar_claim);
            assert_eq!(row.j_zero, row.j_claim);
            assert_eq!(row.p_bar, 0.0);
            assert_eq!(row.p, 0.0);
            assert_eq!(row.d, 0.0);
            if (row.j_bar_zero - row.j_zero).abs() > 1e-6 {
                saw_filtration_gap = true;
            }
        }
        assert!(saw_filtration_gap, "expected J_bar^0 != J^0 under the two-regime model");
    }

    #[test]
    fn overflow_prone_claim_is_rejected() {
        let spec = benchmark_spec();
        let b = simulate_paths(&spec, 10, 100, 1).unwrap();
        let claim = ClaimSpec::Constant { value: -1000.0 };
        let err = exp_value(
            Some(&claim),
            InfoMode::Full,
            StrategyBound::new(1.0).unwrap(),
            1.0,
            &spec,
            &b,
            None,
            &SolveOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, EngineError::Pricing { .. }));
    }
}
