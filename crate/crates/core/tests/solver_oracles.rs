//! Cross-checks of the solvers against the independent oracles beyond the
//! acceptance criteria: exponential values vs the constant-strategy closed
//! form, the k-limit behavior on the no-jump (Merton) benchmark, the vector
//! driver end to end, and partial-information degeneracies.

use defport_core::bsde::{
    probe_lipschitz, solve_bsde, InfoMode, SolveOptions,
};
use defport_core::drivers::{
    k_limit, ExpInfGenerator, KPoint, MonotoneDirection, PowerSupGenerator, StrategyBound,
};
use defport_core::filtering::filter_paths;
use defport_core::model::{CoeffField, HiddenRegimeSpec, ModelSpec};
use defport_core::oracle;
use defport_core::paths::simulate_paths;
use defport_core::pricing::{exp_value, ClaimSpec};

#[test]
fn simulated_wealth_moments_match_the_closed_form() {
    // E[(X_T^pi)^gamma] from the simulator + product-form wealth agrees with
    // the constant-coefficient closed form.
    let (mu, sigma, beta, lambda, gamma, pi) = (0.05, 0.2, -0.5, 0.3, 0.5, 0.8);
    let spec = ModelSpec::scalar_constant(mu, sigma, beta, lambda, 1.0);
    let bundle = simulate_paths(&spec, 50, 60_000, 89).unwrap();
    let w = defport_core::paths::wealth_path(
        &spec,
        &bundle,
        &defport_core::paths::Controls::Constant(&[pi]),
        defport_core::paths::StrategyKind::Proportional,
        1.0,
    )
    .unwrap();
    let xs: Vec<f64> = w.terminal(50).iter().map(|x| x.powf(gamma)).collect();
    let (mean, se) = defport_core::stats::mean_and_se(&xs);
    let want = oracle::power_constant_oracle(pi, mu, sigma, beta, lambda, gamma, 1.0);
    // 3 SE plus the O(dt) clock-discretization allowance.
    let tol = 3.0 * se + lambda * lambda * (1.0 / 50.0);
    assert!((mean - want).abs() <= tol, "E[(X_T)^g] {mean} vs oracle {want} (tol {tol})");
}

#[test]
fn exponential_value_matches_constant_strategy_oracle() {
    // J^{0,k}(0) vs the minimum over constant amounts phi in [-k, k] of the
    // closed form; a constant strategy can only do worse than the optimum,
    // so J must sit at or slightly below the oracle.
    let (mu, sigma, beta, lambda, gamma) = (0.05, 0.2, -0.5, 0.1, 1.0);
    let spec = ModelSpec::scalar_constant(mu, sigma, beta, lambda, 1.0);
    let bundle = simulate_paths(&spec, 40, 30_000, 97).unwrap();
    for k in [0.5, 1.0, 2.0] {
        let (v, _) = exp_value(
            None,
            InfoMode::Full,
            StrategyBound::new(k).unwrap(),
            gamma,
            &spec,
            &bundle,
            None,
            &SolveOptions::default(),
        )
        .unwrap();
        let (_, best_const) = oracle::grid_argmin(
            |phi| oracle::exp_constant_oracle(phi, mu, sigma, beta, lambda, gamma, 1.0),
            -k,
            k,
            1e-9,
        );
        assert!(
            v.value <= best_const * 1.02,
            "k {k}: J {} above constant-strategy oracle {best_const} + 2%",
            v.value
        );
        let rel = (v.value - best_const).abs() / best_const;
        assert!(rel <= 0.05, "k {k}: J {} vs oracle {best_const} (rel {rel:.4})", v.value);
    }
}

#[test]
fn merton_benchmark_k_limit_reaches_the_unconstrained_optimum() {
    // No jumps: the optimal strategy is the constant Merton ratio
    // mu / ((1 - gamma) sigma^2) = 2.5, inside [-4, 4]. Small k stay
    // strictly below the unconstrained optimum; the k-limit reaches it.
    let (mu, sigma, gamma) = (0.05, 0.2, 0.5);
    let spec = ModelSpec::scalar_constant(mu, sigma, 0.0, 0.0, 1.0);
    let bundle = simulate_paths(&spec, 40, 30_000, 101).unwrap();
    let (arg_oracle, best) = oracle::grid_argopt(
        |p| oracle::power_constant_oracle(p, mu, sigma, 0.0, 0.0, gamma, 1.0),
        -20.0,
        20.0,
        1e-9,
    );
    assert!((arg_oracle - 2.5).abs() < 1e-6);

    let mut points = Vec::new();
    for k in [0.5, 1.0, 2.0, 4.0] {
        let gen = PowerSupGenerator::new(gamma, StrategyBound::new(k).unwrap(), &spec).unwrap();
        let sol = solve_bsde(&gen, &spec, &bundle, None, &SolveOptions::default()).unwrap();
        points.push(KPoint { k, value: sol.y0, se: sol.y0_se });
        if k < arg_oracle {
            assert!(
                sol.y0 < best - 2.0 * sol.y0_se,
                "k {k} below the argmax must stay below the optimum: {} vs {best}",
                sol.y0
            );
        }
    }
    let report = k_limit(&points, MonotoneDirection::NonDecreasing).unwrap();
    assert!(report.monotone);
    assert!(report.increments_shrink);
    let rel = (report.limit - best).abs() / best;
    assert!(rel <= 0.02, "limit {} vs unconstrained optimum {best} (rel {rel:.4})", report.limit);
}

#[test]
fn vector_power_bsde_beats_the_separable_constant_oracle() {
    // Two independent assets (diagonal sigma), one default hitting asset 1
    // only: for a constant strategy the wealth factorizes, so the best
    // constant value is the product of two one-dimensional oracle maxima.
    // The solver's adapted strategy must match or slightly exceed it.
    let mut spec = ModelSpec::scalar_constant(0.05, 0.2, -0.5, 0.1, 1.0);
    spec.n_assets = 2;
    spec.s0 = vec![1.0, 1.0];
    spec.mu = CoeffField::constant(&[0.05, 0.03]);
    spec.sigma = CoeffField::constant(&[0.2, 0.0, 0.0, 0.25]);
    spec.beta = CoeffField::constant(&[-0.5, 0.0]);
    spec.lambda = CoeffField::constant(&[0.1]);
    spec.validate().unwrap();
    let gamma = 0.5;
    let k = 1.5;
    let bundle = simulate_paths(&spec, 30, 20_000, 113).unwrap();
    let gen = PowerSupGenerator::new(gamma, StrategyBound::new(k).unwrap(), &spec).unwrap();
    let sol = solve_bsde(&gen, &spec, &bundle, None, &SolveOptions::default()).unwrap();

    let (_, best1) = oracle::grid_argopt(
        |p| oracle::power_constant_oracle(p, 0.05, 0.2, -0.5, 0.1, gamma, 1.0),
        -k,
        k.min((1.0 - 1e-12) / 0.5),
        1e-9,
    );
    let (_, best2) = oracle::grid_argopt(
        |p| oracle::power_constant_oracle(p, 0.03, 0.25, 0.0, 0.0, gamma, 1.0),
        -k,
        k,
        1e-9,
    );
    let best_const = best1 * best2;
    assert!(
        sol.y0 >= best_const * (1.0 - 0.01),
        "y0 {} below separable constant oracle {best_const}",
        sol.y0
    );
    assert!(
        sol.y0 <= best_const * (1.0 + 0.02),
        "y0 {} implausibly above constant oracle {best_const}",
        sol.y0
    );
}

#[test]
fn degenerate_filter_partial_solve_matches_full_solve() {
    let mut spec = ModelSpec::scalar_constant(0.05, 0.2, -0.5, 0.2, 1.0);
    spec.regime = Some(HiddenRegimeSpec::single_regime());
    let bundle = simulate_paths(&spec, 25, 10_000, 131).unwrap();
    let filter = filter_paths(&spec, &bundle).unwrap();
    let gen = PowerSupGenerator::new(0.5, StrategyBound::new(2.0).unwrap(), &spec).unwrap();
    let full = solve_bsde(&gen, &spec, &bundle, None, &SolveOptions::default()).unwrap();
    let opts = SolveOptions { info: InfoMode::Partial, ..Default::default() };
    let partial = solve_bsde(&gen, &spec, &bundle, Some(&filter), &opts).unwrap();
    assert!(
        (full.y0 - partial.y0).abs() <= 1e-10 * (1.0 + full.y0.abs()),
        "full {} vs degenerate partial {}",
        full.y0,
        partial.y0
    );
}

#[test]
fn partial_information_value_cannot_exceed_full_information() {
    // Information has nonnegative value for the maximizer: J_bar <= J for
    // the power problem on the same market (within solver noise).
    let mut spec = ModelSpec::scalar_constant(0.0, 0.2, -0.4, 0.0, 1.0);
    spec.mu = CoeffField::RegimeSwitching { per_regime: vec![vec![0.2], vec![-0.1]] };
    spec.lambda = CoeffField::RegimeSwitching { per_regime: vec![vec![0.1], vec![0.5]] };
    spec.regime = Some(HiddenRegimeSpec {
        n_regimes: 2,
        q_matrix: vec![-0.7, 0.7, 0.7, -0.7],
        initial_dist: vec![0.5, 0.5],
    });
    let bundle = simulate_paths(&spec, 40, 20_000, 137).unwrap();
    let filter = filter_paths(&spec, &bundle).unwrap();
    let gen = PowerSupGenerator::new(0.5, StrategyBound::new(2.0).unwrap(), &spec).unwrap();
    let full = solve_bsde(&gen, &spec, &bundle, None, &SolveOptions::default()).unwrap();
    let opts = SolveOptions { info: InfoMode::Partial, ..Default::default() };
    let partial = solve_bsde(&gen, &spec, &bundle, Some(&filter), &opts).unwrap();
    let tol = 3.0 * (full.y0_se.powi(2) + partial.y0_se.powi(2)).sqrt();
    assert!(
        partial.y0 <= full.y0 + tol,
        "partial {} exceeds full {} beyond noise {tol}",
        partial.y0,
        full.y0
    );
}

#[test]
fn optimizing_drivers_respect_declared_lipschitz_bounds() {
    let spec = ModelSpec::scalar_constant(0.05, 0.2, -0.5, 0.3, 1.0);
    let bundle = simulate_paths(&spec, 20, 2000, 139).unwrap();
    let power = PowerSupGenerator::new(0.5, StrategyBound::new(2.0).unwrap(), &spec).unwrap();
    let worst = probe_lipschitz(&power, &spec, &bundle, 20_000, 7).unwrap();
    assert!(worst <= 1.05 * power_lipschitz(&power), "worst {worst}");

    let exp = ExpInfGenerator::new(
        1.0,
        StrategyBound::new(2.0).unwrap(),
        &spec,
        0.0,
        |_s: &[f64], _n: &[u8]| 0.0,
    )
    .unwrap();
    let worst = probe_lipschitz(&exp, &spec, &bundle, 20_000, 11).unwrap();
    assert!(worst <= 1.05 * exp_lipschitz(&exp), "worst {worst}");
}

fn power_lipschitz(g: &PowerSupGenerator) -> f64 {
    use defport_core::bsde::Generator;
    g.lipschitz_bound()
}

fn exp_lipschitz<F: Fn(&[f64], &[u8]) -> f64>(g: &ExpInfGenerator<F>) -> f64 {
    use defport_core::bsde::Generator;
    g.lipschitz_bound()
}

#[test]
fn constant_claim_prices_track_cash_under_partial_information() {
    // Cash invariance holds under the observation filtration too.
    let mut spec = ModelSpec::scalar_constant(0.0, 0.2, -0.4, 0.0, 1.0);
    spec.mu = CoeffField::RegimeSwitching { per_regime: vec![vec![0.15], vec![-0.05]] };
    spec.lambda = CoeffField::RegimeSwitching { per_regime: vec![vec![0.1], vec![0.4]] };
    spec.regime = Some(HiddenRegimeSpec {
        n_regimes: 2,
        q_matrix: vec![-0.6, 0.6, 0.6, -0.6],
        initial_dist: vec![0.5, 0.5],
    });
    let bundle = simulate_paths(&spec, 30, 10_000, 149).unwrap();
    let filter = filter_paths(&spec, &bundle).unwrap();
    let report = defport_core::pricing::hodges_price(
        &ClaimSpec::Constant { value: 0.5 },
        InfoMode::Partial,
        &[1.0],
        1.0,
        &spec,
        &bundle,
        Some(&filter),
        &SolveOptions { info: InfoMode::Partial, ..Default::default() },
    )
    .unwrap();
    let price = report.rows[0].price;
    assert!((price - 0.5).abs() <= 2e-2, "partial-info cash price {price}");
}
