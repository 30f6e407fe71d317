mod common;

use common::small;
use execqvi::artifact::SolveArtifact;
use execqvi::simulate::{SimOptions, Simulator};
use execqvi::{ArtifactError, ModelParams, RecoveryKind, Solver, SolverOptions};

#[test]
fn loaded_policy_drives_identical_paths() {
    let p = ModelParams {
        lambda_l: 10.0,
        l_max: 2.0,
        ..small(RecoveryKind::Strong, 8.0, 0.1)
    };
    let opts = SolverOptions::default();
    let sol = Solver::new(&p, opts.clone()).unwrap().solve().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.qvi");
    SolveArtifact::from_solution(&p, &opts, &sol).save(&path).unwrap();
    let loaded = SolveArtifact::load(&path).unwrap();
    loaded.check_params(&p).unwrap();
    assert_eq!(loaded.policy, sol.policy);

    let rec = SimOptions {
        record_events: true,
        ..SimOptions::default()
    };
    let a = Simulator::new(&p, &sol.disc, &sol.policy, rec).unwrap();
    let b = Simulator::new(&loaded.params, &loaded.disc, &loaded.policy, rec).unwrap();
    for i in 0..4 {
        assert_eq!(a.simulate_path(7, i).events, b.simulate_path(7, i).events);
    }
}

#[test]
fn mismatched_config_is_refused() {
    let p = small(RecoveryKind::Weak, 3.0, 0.01);
    let opts = SolverOptions::default();
    let sol = Solver::new(&p, opts.clone()).unwrap().solve().unwrap();
    let art = SolveArtifact::from_solution(&p, &opts, &sol);
    let other = ModelParams {
        recovery_kind: RecoveryKind::Strong,
        ..p
    };
    match art.check_params(&other) {
        Err(ArtifactError::ParamMismatch { key, .. }) => assert_eq!(key, "recovery_kind"),
        r => panic!("unexpected {r:?}"),
    }
}
