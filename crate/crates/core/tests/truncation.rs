use orlicz_duality::singular::{truncation_study, TruncationScenario};
use orlicz_duality::singular::{CompoundPoissonSpec, DiscreteZSpec};

fn two_atom() -> DiscreteZSpec {
    // Boundary derivative 0.99/4 - 0.02 > 0.
    DiscreteZSpec::new(0.99, vec![0.01]).unwrap()
}

#[test]
fn discrete_tail_values_settle_monotonically() {
    let spec = DiscreteZSpec::new(0.9, vec![0.06, 0.03, 0.01]).unwrap();
    let t = truncation_study(&TruncationScenario::DiscreteZ { spec, y_atoms: 200 }, &[2, 3, 4]).unwrap();
    for r in &t.rows {
        println!("level {} value {:.12} mean {:.3e}", r.level, r.value_dual, r.dual_mean);
        assert!((r.value_primal - r.value_dual).abs() <= 1e-6 * (1.0 + r.value_dual.abs()));
        assert!(r.dual_mean.abs() <= 1e-8, "finite levels stay martingale");
    }
    assert!(t.nonincreasing || t.nondecreasing);
}

#[test]
fn two_atom_limit_has_a_nonzero_mean() {
    let t = truncation_study(&TruncationScenario::DiscreteZ { spec: two_atom(), y_atoms: 200 }, &[2]).unwrap();
    let r = &t.rows[0];
    assert!(r.dual_mean.abs() <= 1e-8);
    let m = t.analytic_mean.expect("closed-form optimum");
    println!("analytic mean {m}");
    assert!((m * two_atom().exp_moment_at_one() - (0.99 / 4.0 - 0.02)).abs() <= 1e-12);
    assert!(m > 1e-3);
}

#[test]
fn compound_poisson_error_shrinks() {
    let spec = CompoundPoissonSpec::new(1.0, 1.0, 1.0).unwrap();
    let t = truncation_study(&TruncationScenario::CompoundPoisson { spec, max_jumps: 10, half_width: 20.0 }, &[2, 4, 8]).unwrap();
    let errs = t.errors().expect("closed-form value");
    println!("errors {errs:?}");
    assert_eq!(t.error_shrinks, Some(true));
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    assert!(t.nondecreasing);
}

#[test]
fn constant_scenario_is_flat() {
    let s = TruncationScenario::Binomial { s0: 1.0, up: 1.2, down: 0.9, p_up: 0.5 };
    let t = truncation_study(&s, &[1, 2, 3]).unwrap();
    let v0 = t.rows[0].value_dual;
    assert!(t.rows.iter().all(|r| (r.value_dual - v0).abs() <= 1e-12));
}
