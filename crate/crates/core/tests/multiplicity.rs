use relosc::model::{preset, Expr, PresetParams, ProblemInstance};
use relosc::multiplicity::{default_grid, find_two_minima, lambda_scan, FindTwoOptions, FindTwoOutcome, ScanOptions};
use relosc::optimizer::{self, MinimizeOptions};
use relosc::path::path_distance;
use relosc::verify::{self, el_residual, NewtonOptions};

fn inst(name: &str) -> ProblemInstance {
    preset(name, &PresetParams::default()).unwrap()
}

fn found(inst: &ProblemInstance, opts: &FindTwoOptions) -> relosc::multiplicity::PairReport {
    match find_two_minima(inst, opts).unwrap() {
        FindTwoOutcome::Found(p) => *p,
        other => panic!("no certified pair: {other:?}"),
    }
}

#[test]
fn uniqueness_controls_never_report_two_global_clusters() {
    for name in ["example-3.1", "example-3.2"] {
        let scan = lambda_scan(&inst(name), &default_grid(), &ScanOptions::default()).unwrap();
        assert!(scan.detected_lambda.is_none(), "{name}: {:?}", scan.detected_lambda);
        assert!(scan.records.iter().all(|r| r.n_global_clusters == 1), "{name}");
    }
}

#[test]
fn detected_pair_is_a_fixed_point_of_minimization() {
    let two = inst("two-minima-symmetric");
    let opts = FindTwoOptions::default();
    let pair = found(&two, &opts);
    let value_tol = optimizer::default_value_tol(pair.pair.0.total());
    assert!(pair.energy_gap <= value_tol);
    assert!(pair.separation >= optimizer::default_dist_tol(&two));
    for m in [&pair.pair.0, &pair.pair.1] {
        assert!(el_residual(&two, pair.lambda, &m.path).unwrap().max_norm <= opts.certify.residual_tol);
        let again = optimizer::minimize(&two, pair.lambda, &m.path, &MinimizeOptions::default()).unwrap();
        assert!(again.converged);
        assert!(path_distance(&again.path, &m.path).unwrap() <= 1e-9);
    }
}

#[test]
fn scaling_perturbation_rescales_the_detected_lambda() {
    let two = inst("two-minima-symmetric");
    let kappa = 4.0;
    let mut scaled = two.clone();
    scaled.perturbation.expr = Expr::Scale { factor: kappa, expr: Box::new(two.perturbation.expr.clone()) };
    scaled.perturbation.delta = two.perturbation.delta.map(|d| d * kappa);
    let base = FindTwoOptions::default();
    let shrunk = FindTwoOptions { grid: base.grid.iter().map(|l| l / kappa).collect(), ..base.clone() };
    let a = found(&two, &base);
    let b = found(&scaled, &shrunk);
    assert!((a.lambda - kappa * b.lambda).abs() <= 1e-12 * a.lambda);
    let (a0, a1) = (&a.pair.0.path, &a.pair.1.path);
    let (b0, b1) = (&b.pair.0.path, &b.pair.1.path);
    let direct = path_distance(a0, b0).unwrap().max(path_distance(a1, b1).unwrap());
    let swapped = path_distance(a0, b1).unwrap().max(path_distance(a1, b0).unwrap());
    assert!(direct.min(swapped) <= 1e-6, "{direct} {swapped}");
}

#[test]
fn minimizers_agree_with_shooting_roots() {
    let two = inst("two-minima-symmetric");
    let pair = found(&two, &FindTwoOptions::default());
    let grid = verify::axis_grid(1, &[-0.5, -0.25, 0.25, 0.5], &[0.0]);
    let report = verify::solve_by_shooting(&two, pair.lambda, &grid, &NewtonOptions::default()).unwrap();
    for m in [&pair.pair.0, &pair.pair.1] {
        let best = report
            .roots
            .iter()
            .map(|r| path_distance(&r.path, &m.path).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 1e-4, "closest shooting root at {best}");
    }
}
