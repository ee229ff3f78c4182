use std::sync::OnceLock;

use proptest::prelude::*;
use retirement_core::boundary::DEFAULT_ROOT_TOL;
use retirement_core::csv_io::{boundary_from_table, boundary_table, policy_from_table, policy_table, CsvTable, PolicyRecord};
use retirement_core::primal::{primal_value_at, reduced_state};
use retirement_core::*;

const M0: f64 = 0.004;

fn model() -> &'static Model {
    static M: OnceLock<Model> = OnceLock::new();
    M.get_or_init(|| Model::new(ModelParams::baseline()).unwrap())
}

fn solution() -> &'static BoundarySolution {
    static S: OnceLock<BoundarySolution> = OnceLock::new();
    S.get_or_init(|| solve_boundary(model(), M0, 100, DEFAULT_ROOT_TOL).unwrap())
}

fn state(t: f64, w: f64, y: f64) -> PrimalState {
    PrimalState {
        t,
        w,
        m: model().mortality_at(M0, t),
        y,
    }
}

#[test]
fn wealth_boundary_matches_value_sweep() {
    let (m, sol) = (model(), solution());
    for t in [0.0, 3.0, 7.5] {
        let y = 1.0;
        let b_hat = wealth_boundary(m, sol, t, model().mortality_at(M0, t), y).unwrap();
        let cell = b_hat / 200.0;
        // first wealth on a sweep at which the value approximation vanishes
        let hit = (0..400)
            .map(|k| 0.5 * b_hat + k as f64 * cell)
            .find(|&w| {
                let s = state(t, w, y);
                let x = reduced_state(m, invert_multiplier(m, sol, &s).unwrap(), y);
                j_hat_on_path(m, sol, 10.0 - t, x).unwrap() <= 1e-10
            })
            .unwrap();
        assert!((hit - b_hat).abs() <= cell, "t = {t}: sweep {hit} vs {b_hat}");
    }
}

#[test]
fn retire_flag_matches_value() {
    let (m, sol) = (model(), solution());
    let b_hat = wealth_boundary(m, sol, 2.0, model().mortality_at(M0, 2.0), 1.0).unwrap();
    for f in [0.3, 0.9, 0.999, 1.001, 1.2, 2.0] {
        let s = state(2.0, f * b_hat, 1.0);
        let pol = feedback_policies(m, sol, &s).unwrap();
        let x = reduced_state(m, pol.z_star, 1.0);
        let stopped = j_hat_on_path(m, sol, 8.0, x).unwrap() <= 1e-10;
        assert_eq!(pol.retire_now, stopped, "w = {f} b_hat");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn duality_sandwich(t in 0.0..9.0f64, frac in 0.05..1.6f64, y in 0.5..2.0f64, scale in 0.1..10.0f64) {
        let (m, sol) = (model(), solution());
        let mort = model().mortality_at(M0, t);
        let w = frac * wealth_boundary(m, sol, t, mort, y).unwrap();
        let s = state(t, w, y);
        let z_star = invert_multiplier(m, sol, &s).unwrap();
        let v = primal_value(m, sol, &s).unwrap();
        let other = primal_value_at(m, sol, &s, z_star * scale).unwrap();
        prop_assert!(v <= other + 1e-9 * v.abs());
    }

    #[test]
    fn value_increasing_in_wealth(t in 0.0..9.0f64, w in 1.0..60.0f64, dw in 0.01..5.0f64) {
        let (m, sol) = (model(), solution());
        let lo = primal_value(m, sol, &state(t, w, 1.0)).unwrap();
        let hi = primal_value(m, sol, &state(t, w + dw, 1.0)).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn boundary_csv_round_trip(level in 0.5..10.0f64, bumps in prop::collection::vec(-1.0..1.0f64, 21)) {
        let mut sol = BoundarySolution::constant(model(), M0, 20, level);
        for (b, d) in sol.b_star.iter_mut().zip(&bumps) {
            *b += d * 1e-3;
        }
        sol.residuals = bumps.iter().map(|d| d * 1e-9).collect();
        let text = boundary_table(&sol).to_csv_string().unwrap();
        let back = boundary_from_table(&CsvTable::parse(&text).unwrap()).unwrap();
        prop_assert_eq!(&back, &sol);
        prop_assert_eq!(boundary_table(&back).to_csv_string().unwrap(), text);
    }

    #[test]
    fn policy_csv_round_trip(rows in prop::collection::vec((finite(), -1e6..1e6f64, any::<bool>()), 1..12)) {
        let records: Vec<PolicyRecord> = rows
            .iter()
            .map(|&(a, b, flag)| PolicyRecord {
                state: PrimalState { t: b.abs() % 10.0, w: b, m: M0, y: 1.0 },
                policy: PolicyOutput { z_star: a, c_star: b, pi_star: -b, retire_now: flag, b_hat: a },
                value: b * 1e-7,
            })
            .collect();
        let text = policy_table("0123456789abcdef", rows[0].2, &records).to_csv_string().unwrap();
        let table = CsvTable::parse(&text).unwrap();
        prop_assert_eq!(table.to_csv_string().unwrap(), text);
        let back = policy_from_table(&table).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (r, o) in back.iter().zip(&records) {
            prop_assert_eq!(r.policy.z_star.to_bits(), o.policy.z_star.to_bits());
            prop_assert_eq!(r.state, o.state);
            prop_assert_eq!(r.policy.retire_now, o.policy.retire_now);
        }
    }
}

fn finite() -> impl Strategy<Value = f64> {
    use prop::num::f64::{NEGATIVE, NORMAL, POSITIVE, SUBNORMAL, ZERO};
    POSITIVE | NEGATIVE | NORMAL | SUBNORMAL | ZERO
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn boundary_invariants_across_parameters(k in 1.3..4.0f64, a in 0.0..0.2f64, m0 in 0.001..0.02f64) {
        let p = ModelParams { k, a, ..ModelParams::baseline() };
        let model = Model::new(p).unwrap();
        let sol = solve_boundary(&model, m0, 40, DEFAULT_ROOT_TOL).unwrap();
        prop_assert_eq!(sol.b_star[0], model.constants().l_terminal);
        // along the mortality path the boundary need not be monotone under strong
        // aging, but stopping only ever happens where the running reward is negative
        let l = model.constants().l_terminal;
        prop_assert!(sol.b_star.iter().all(|&b| b >= l));
        prop_assert!(sol.residuals.iter().all(|r| r.abs() <= 1e-6));
    }
}
