use roughmax_core::lab::{self, Constants, DecayPoint, ExperimentConfig, Status};
use roughmax_core::operator::DyadicOperator;
use roughmax_core::{cz_decompose, Error, KernelSpec};

fn small() -> ExperimentConfig {
    ExperimentConfig { mesh: 7, k_min: 0, k_max: 2, ..ExperimentConfig::default() }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let cfg = ExperimentConfig::default();
    for run in [lab::run_decay, lab::run_orthogonality] {
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.rows_csv(), b.rows_csv());
    }
    let a = lab::run_weak11(&small()).unwrap();
    let b = lab::run_weak11(&small()).unwrap();
    assert_eq!(a.file("weak11.csv"), b.file("weak11.csv"));
    let c = lab::run_weak11(&ExperimentConfig { seed: 2, ..small() }).unwrap();
    assert_ne!(a.file("weak11.csv"), c.file("weak11.csv"));
}

#[test]
fn doubling_input_and_level_doubles_l_exactly() {
    let one = ExperimentConfig::default();
    let two = ExperimentConfig { alpha: 2.0, ..one.clone() };
    let f1 = lab::decay_input(&one);
    let f2 = lab::decay_input(&two);
    assert_eq!(f1.scaled(2.0).max_abs_diff(&f2), 0.0);
    let d1 = cz_decompose(&f1, 1.0, 0).unwrap();
    let d2 = cz_decompose(&f2, 2.0, 0).unwrap();
    let mut op = DyadicOperator::new(one.omega().unwrap(), one.mesh);
    for s in [4, 6] {
        let a = lab::decay_point(&one, &mut op, &d1, s).unwrap();
        let b = lab::decay_point(&two, &mut op, &d2, s).unwrap();
        assert!(a.l > 0.0);
        assert_eq!(2.0 * a.l, b.l, "s = {s}");
    }
}

#[test]
fn fitted_rate_recovers_a_planted_slope() {
    // L(s)² = s²·2^{−δs} gives log₂(L²/s²) = −δs exactly
    let delta = 0.7;
    let pts: Vec<DecayPoint> = [4u32, 6, 8, 10]
        .iter()
        .map(|&s| DecayPoint {
            s,
            l: s as f64 * (-delta * s as f64 / 2.0).exp2(),
            per_shift: [0.0; 4],
            linearized: [true; 4],
        })
        .collect();
    assert!((lab::fit_delta(&pts).unwrap() - delta).abs() < 1e-12);
    assert_eq!(lab::fit_delta(&pts[..1]), None);
}

#[test]
fn overlap_constant_below_one_cell_threshold_gives_no_decay() {
    let cfg = ExperimentConfig::default();
    // threshold C0·2^{2s} = 0.16 < 1: every active cube is already in F¹, so F² = F¹
    let (rows, d) = lab::f_level_decay(&cfg, 0.01).unwrap();
    assert_eq!(d.worst_ratio, 1.0);
    assert!(rows.iter().any(|r| r.check == "f_level_decay_ratio" && r.status == Status::Fail));
    let (rows, d) = lab::f_level_decay(&cfg, cfg.c0).unwrap();
    assert!(d.worst_ratio <= 0.25 && d.nonempty > 0);
    assert!(rows.iter().all(|r| r.passed()));
}

#[test]
fn frozen_constants_are_calibrated_values() {
    let c = Constants::frozen();
    assert_eq!(c.c0, 0.0625);
    let observed = lab::weak11_samples(&ExperimentConfig::default()).unwrap();
    let sup = observed.iter().map(|s| s.ratio).fold(0.0, f64::max);
    assert!(sup <= c.r_max && c.r_max <= 2.0 * sup + 1e-12);
}

#[test]
fn zero_kernel_is_rejected_by_the_weak_sweep() {
    let cfg = ExperimentConfig { kernel: KernelSpec::Zero, ..small() };
    assert_eq!(lab::run_weak11(&cfg).unwrap_err(), Error::ZeroKernel);
}

#[test]
fn decay_needs_three_values_of_s() {
    let cfg = ExperimentConfig { s_list: vec![4, 6], ..ExperimentConfig::default() };
    assert!(matches!(lab::run_decay(&cfg), Err(Error::Config(_))));
}

#[test]
fn unprojected_kernel_makes_cancellation_advisory() {
    let cfg = ExperimentConfig { kernel: KernelSpec::Sign(3), project: false, ..small() };
    let rows = lab::sphere_checks(&cfg).unwrap();
    let r = rows.iter().find(|r| r.check == "cancellation_residual").unwrap();
    assert_eq!(r.status, Status::Advisory);
    assert!(r.value > 1e-6);
}

#[test]
fn verify_writes_its_csv() {
    let dir = std::env::temp_dir().join(format!("roughmax-verify-{}", std::process::id()));
    let cfg = ExperimentConfig { out: dir.clone(), ..ExperimentConfig::default() };
    let rep = lab::run_verify(&cfg).unwrap();
    assert!(rep.passed(), "{}", rep.summary());
    rep.write(&dir).unwrap();
    let body = std::fs::read_to_string(dir.join("verify.csv")).unwrap();
    assert!(body.starts_with("suite,check,value,bound,status\n"));
    assert_eq!(body.lines().count(), rep.rows.len() + 1);
    assert!(std::fs::read_to_string(dir.join("f_levels.csv")).unwrap().starts_with("n,measure\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}
