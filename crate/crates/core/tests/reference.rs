//! Frozen values from independent implementations: 30-digit quadrature for the
//! closed-form pieces and a separate floating-point implementation of the trapezoid
//! recursion for the boundary.

use approx::assert_relative_eq;
use retirement_core::boundary::DEFAULT_ROOT_TOL;
use retirement_core::*;

fn model() -> Model {
    Model::new(ModelParams::baseline()).unwrap()
}

#[test]
fn derived_constants() {
    let c = *model().constants();
    assert_relative_eq!(c.theta, 0.2, max_relative = 1e-15);
    assert_relative_eq!(c.kappa, 0.04, max_relative = 1e-14);
    assert_relative_eq!(c.rho, -1.5, max_relative = 1e-15);
    assert_relative_eq!(c.sigma1, 0.025, max_relative = 1e-13);
    assert_relative_eq!(c.mu1, -21.0 / 3200.0, max_relative = 1e-12);
    assert_relative_eq!(c.growth_rate, 1.0 / 180.0, max_relative = 1e-12);
    assert_relative_eq!(c.l_terminal, 2.418193375676675, max_relative = 1e-14);
}

#[test]
fn mortality_growth_and_annuity() {
    let m = model();
    assert_relative_eq!(m.mortality_at(0.004, 10.0), 0.0103674937832594987, max_relative = 1e-14);
    // the rounded figure quoted for age 65
    assert!((m.mortality_at(0.004, 10.0) - 0.0103675).abs() < 5e-8);
    assert_relative_eq!(m.growth_factor(10.0, 0.004), 1.03382894012087254, max_relative = 1e-13);
    assert_relative_eq!(m.q_factor(0.0), 8.24199884910901748, max_relative = 1e-14);
}

#[test]
fn post_retirement_integral() {
    let q = model().q_profile().clone();
    assert_relative_eq!(q.lambda(), -0.0344444444444444444, max_relative = 1e-13);
    let base = 20.8253230553473026;
    assert_relative_eq!(q.integral(0.004).unwrap().value, base, max_relative = 1e-9);
    assert_relative_eq!(q.integral(0.04).unwrap().value, 12.8909459364367650, max_relative = 1e-9);
    // C = gamma / (1 - gamma) K^((1 - gamma) / gamma) I
    let scale = -1.5 * 2f64.powf(-2.0 / 3.0);
    assert_relative_eq!(q.c_integral(0.004).unwrap(), scale * base, max_relative = 1e-9);
    let fast_aging = Model::new(ModelParams { a: 5.0, ..ModelParams::baseline() }).unwrap();
    assert_relative_eq!(
        fast_aging.q_profile().integral(0.004).unwrap().value,
        1.49019139320308914,
        max_relative = 1e-9
    );
    let constant = Model::new(ModelParams { a: 0.0, ..ModelParams::baseline() }).unwrap();
    assert_relative_eq!(
        constant.q_profile().integral(0.004).unwrap().value,
        27.9503105590062112,
        max_relative = 1e-9
    );
}

#[test]
fn trapezoid_boundary_matches_independent_implementation() {
    let m = model();
    // (n, b at xi = T, b at xi = T/2)
    let reference = [
        (50, 2.5004829577218883, 2.487602012830062),
        (100, 2.5006110645502035, 2.487772415073152),
        (200, 2.5006568858955456, 2.487832961993303),
    ];
    for (n, b_end, b_mid) in reference {
        let sol = solve_boundary_with(&m, 0.004, n, DEFAULT_ROOT_TOL, Scheme::Trapezoid).unwrap();
        assert!((sol.b_star[n] - b_end).abs() < 2e-8, "n = {n}: {}", sol.b_star[n]);
        assert!((sol.b_star[n / 2] - b_mid).abs() < 2e-8, "n = {n}: {}", sol.b_star[n / 2]);
    }
}

#[test]
fn schemes_share_a_limit() {
    let m = model();
    // trapezoid at n = 800 from the independent implementation
    let trapezoid_800 = 2.5006790280073776;
    let sol = solve_boundary(&m, 0.004, 200, DEFAULT_ROOT_TOL).unwrap();
    assert!((sol.b_star[200] - trapezoid_800).abs() < 5e-6);
    assert!(sol.b_star[200] > trapezoid_800);
}
