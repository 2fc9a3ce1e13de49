//! Monte-Carlo privacy audits on two-series, two-slot panels.

use apdp::evaluation::{empirical_dp_check, perturb_periodic, perturb_residual_block, DpCheckOptions, NeighbourKind};
use apdp::{
    decompose_with_periodic, validate_dataset, Decomposition, Error, Interval, LinearQuery, Mechanism, Period,
    PrivacyParams, ReporterConfig,
};

fn base() -> Decomposition {
    let data = validate_dataset(&[vec![0.1, 0.3, 0.2, 0.05], vec![0.7, 0.6, 0.8, 0.9]]).unwrap();
    let z = validate_dataset(&[vec![0.0, 0.0], vec![0.75, 0.75]]).unwrap();
    decompose_with_periodic(&data, &z).unwrap()
}

fn config(mech: Mechanism) -> ReporterConfig {
    ReporterConfig::new(
        LinearQuery::mean(2).unwrap(),
        PrivacyParams::new(1.0, Period::new(2).unwrap()).unwrap(),
        mech,
        Interval::new(0.0, 1.0).unwrap(),
        Interval::new(-0.5, 0.5).unwrap(),
        0,
    )
}

fn options(seed: u64) -> DpCheckOptions {
    DpCheckOptions {
        trials: 100_000,
        seed,
        ..DpCheckOptions::default()
    }
}

#[test]
fn identical_inputs_have_no_leakage() {
    let d = base();
    let r = empirical_dp_check(&config(Mechanism::TheoremOne), &d, &d, NeighbourKind::Definition2, 1.0, &options(1)).unwrap();
    assert!(r.pass);
    assert!(r.max_log_ratio < 0.15, "{r:?}");
}

#[test]
fn check_is_symmetric() {
    let d = base();
    let d2 = perturb_periodic(&d, 0, &[1.0, 1.0]).unwrap();
    let cfg = config(Mechanism::TheoremOne);
    let ab = empirical_dp_check(&cfg, &d, &d2, NeighbourKind::Definition2, 1.0, &options(2)).unwrap();
    let ba = empirical_dp_check(&cfg, &d2, &d, NeighbourKind::Definition2, 1.0, &options(2)).unwrap();
    assert!(ab.pass && ba.pass);
    assert!((ab.max_log_ratio - ba.max_log_ratio).abs() < 0.15, "{ab:?} {ba:?}");
}

#[test]
fn corollary_protects_residual_blocks() {
    let d = base();
    let d4 = perturb_residual_block(&d, 1, 2, &[0.5, -0.5]).unwrap();
    let r = empirical_dp_check(&config(Mechanism::CorollaryOne), &d, &d4, NeighbourKind::Definition4, 1.0, &options(3)).unwrap();
    assert!(r.pass, "{r:?}");
}

/// The periodic-only reporter makes no promise about residual blocks. A
/// residual change after the first period moves later reports
/// deterministically, which the audit must flag.
#[test]
fn theorem_one_does_not_protect_residual_blocks() {
    let d = base();
    let d4 = perturb_residual_block(&d, 1, 2, &[1.0, -1.0]).unwrap();
    let r = empirical_dp_check(&config(Mechanism::TheoremOne), &d, &d4, NeighbourKind::Definition4, 1.0, &options(4)).unwrap();
    assert!(!r.pass, "{r:?}");
    assert!(r.max_log_ratio > 1.0);
}

#[test]
fn neighbour_kind_is_enforced() {
    let d = base();
    let d4 = perturb_residual_block(&d, 1, 2, &[0.5, -0.5]).unwrap();
    let err = empirical_dp_check(&config(Mechanism::TheoremOne), &d, &d4, NeighbourKind::Definition2, 1.0, &options(5)).unwrap_err();
    assert!(matches!(err, Error::NotNeighbours(_)));
}

#[test]
fn deterministic_disjoint_outputs_have_no_comparable_bins() {
    let d = base();
    let d2 = perturb_periodic(&d, 0, &[1.0, 1.0]).unwrap();
    let mut cfg = config(Mechanism::TheoremOne);
    cfg.z_bounds = Interval::new(0.5, 0.5).unwrap();
    let err = empirical_dp_check(&cfg, &d, &d2, NeighbourKind::Definition2, 1.0, &options(6)).unwrap_err();
    assert!(matches!(err, Error::InsufficientCounts { floor: 50 }));
}
