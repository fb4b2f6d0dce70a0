//! Scans of the perturbation strength λ for parameters at which the
//! perturbed action has two distinct global minima, and the range check for
//! instances whose perturbation is flat near the origin.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional;
use crate::hypotheses::{self, SampleSpec, Status};
use crate::model::{Forcing, ProblemInstance};
use crate::optimizer::{self, MinimizeOptions, Minimum, MinimumSummary};
use crate::path::{self, PeriodicPath};
use crate::sampling;
use crate::verify::{self, Certificate, CertifyOptions};

/// `count` points from `lo` to `hi`, logarithmically or linearly spaced.
pub fn lambda_grid(lo: f64, hi: f64, count: usize, log: bool) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return Err(Error::InvalidParameter(format!("bad lambda grid {lo}:{hi}:{count}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let s = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let f = i as f64 / s;
            if log {
                10f64.powf(lo.log10() + f * (hi.log10() - lo.log10()))
            } else {
                lo + f * (hi - lo)
            }
        })
        .collect())
}

/// 25 logarithmically spaced points in `[10⁻², 10²]`.
pub fn default_grid() -> Vec<f64> {
    lambda_grid(1e-2, 1e2, 25, true).expect("static grid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub minimize: MinimizeOptions,
    pub starts: usize,
    /// Relative value tolerance, scaled by `1 + |best|`.
    pub value_rel_tol: f64,
    /// Absolute distance threshold; `None` means `10⁻³·LT`.
    pub dist_tol: Option<f64>,
    pub merge_barrierless: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            minimize: MinimizeOptions::default(),
            starts: 24,
            value_rel_tol: 1e-8,
            dist_tol: None,
            merge_barrierless: true,
        }
    }
}

impl ScanOptions {
    pub fn dist_tol(&self, inst: &ProblemInstance) -> f64 {
        self.dist_tol.unwrap_or_else(|| optimizer::default_dist_tol(inst))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRecord {
    pub lambda: f64,
    pub best_energy: f64,
    pub n_clusters: usize,
    pub n_global_clusters: usize,
    pub all_converged: bool,
    pub unbounded: bool,
    pub representatives: Vec<MinimumSummary>,
    #[serde(skip)]
    pub global_minima: Vec<Minimum>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub lambdas: Vec<f64>,
    pub records: Vec<LambdaRecord>,
    pub detected_lambda: Option<f64>,
    pub detected_index: Option<usize>,
}

impl ScanReport {
    pub fn unbounded_lambda(&self) -> Option<f64> {
        self.records.iter().find(|r| r.unbounded).map(|r| r.lambda)
    }
}

/// Radii `10·2^k`, `k = 0..12`.
pub fn default_radii() -> Vec<f64> {
    (0..13).map(|k| 10.0 * 2f64.powi(k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnboundedStatus {
    Evidence,
    NoEvidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnboundedReport {
    pub lambda: f64,
    pub status: UnboundedStatus,
    /// Lowest energy of a constant path at each radius.
    pub energies: Vec<(f64, f64)>,
    pub best_point: Vec<f64>,
    pub best_energy: f64,
    pub threshold: f64,
}

/// Energies of constant paths of growing norm along coordinate and random
/// directions; evidence of unboundedness iff one drops below `−10⁶`.
pub fn detect_unbounded(inst: &ProblemInstance, lambda: f64, radii: &[f64]) -> Result<UnboundedReport> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("radius schedule must be increasing".into()));
    }
    let threshold = -1e6;
    let mut rng = sampling::rng(0);
    let mut dirs = Vec::new();
    for i in 0..inst.dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; inst.dim];
            e[i] = s;
            dirs.push(e);
        }
    }
    for _ in 0..8 {
        dirs.push(sampling::random_unit(&mut rng, inst.dim));
    }
    let mut energies = Vec::new();
    let mut best = (f64::INFINITY, vec![0.0; inst.dim]);
    for &r in radii {
        let mut level = f64::INFINITY;
        for d in &dirs {
            let x: Vec<f64> = d.iter().map(|v| r * v).collect();
            let e = functional::eval_energy(inst, &PeriodicPath::constant(&x, 4, inst.period)?)?.total(lambda);
            level = level.min(e);
            if e < best.0 {
                best = (e, x);
            }
        }
        energies.push((r, level));
    }
    let status = if best.0 <= threshold { UnboundedStatus::Evidence } else { UnboundedStatus::NoEvidence };
    Ok(UnboundedReport { lambda, status, energies, best_point: best.1, best_energy: best.0, threshold })
}

fn scan_point(inst: &ProblemInstance, lambda: f64, opts: &ScanOptions) -> Result<LambdaRecord> {
    let unbounded = detect_unbounded(inst, lambda, &default_radii())?.status == UnboundedStatus::Evidence;
    if unbounded {
        return Ok(LambdaRecord {
            lambda,
            best_energy: f64::NEG_INFINITY,
            n_clusters: 0,
            n_global_clusters: 0,
            all_converged: false,
            unbounded,
            representatives: vec![],
            global_minima: vec![],
        });
    }
    let results = optimizer::multistart(inst, lambda, &opts.minimize, opts.starts)?;
    let best = results[0].total();
    let value_tol = opts.value_rel_tol * (1.0 + best.abs());
    let mut clusters = optimizer::cluster_minima(&results, value_tol, opts.dist_tol(inst))?;
    if opts.merge_barrierless {
        clusters = optimizer::merge_barrierless(inst, lambda, &results, clusters, value_tol)?;
    }
    let global: Vec<Minimum> = clusters.iter().filter(|c| c.global).map(|c| results[c.representative()].clone()).collect();
    Ok(LambdaRecord {
        lambda,
        best_energy: best,
        n_clusters: clusters.len(),
        n_global_clusters: global.len(),
        all_converged: results.iter().all(|m| m.converged),
        unbounded,
        representatives: global.iter().map(Minimum::summary).collect(),
        global_minima: global,
    })
}

/// Multistart and clustering at every grid λ (concurrently); the report is
/// assembled in grid order.
pub fn lambda_scan(inst: &ProblemInstance, grid: &[f64], opts: &ScanOptions) -> Result<ScanReport> {
    if grid.iter().any(|l| !(*l > 0.0)) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("lambda grid must be positive and increasing".into()));
    }
    let records = grid.par_iter().map(|&l| scan_point(inst, l, opts)).collect::<Result<Vec<_>>>()?;
    let detected_index = records.iter().position(|r| r.n_global_clusters >= 2);
    Ok(ScanReport {
        lambdas: grid.to_vec(),
        detected_lambda: detected_index.map(|i| grid[i]),
        detected_index,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FindTwoOptions {
    pub scan: ScanOptions,
    pub grid: Vec<f64>,
    pub refine_rounds: usize,
    pub certify: CertifyOptions,
}

impl Default for FindTwoOptions {
    fn default() -> Self {
        FindTwoOptions {
            scan: ScanOptions::default(),
            grid: default_grid(),
            refine_rounds: 3,
            certify: CertifyOptions::default(),
        }
    }
}

/// Two certified global minima at the same λ.
#[derive(Clone, Debug, PartialEq)]
pub struct PairReport {
    pub lambda: f64,
    /// Bracket `(λ_lo, λ_hi)` of the first detection after bisection.
    pub onset_bracket: (f64, f64),
    /// Finest-grid minimizers.
    pub pair: (Minimum, Minimum),
    pub certificates: (Certificate, Certificate),
    pub energy_gap: f64,
    pub separation: f64,
    pub scan: ScanReport,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FindTwoOutcome {
    Found(Box<PairReport>),
    NotDetected(ScanReport),
    Unbounded { report: UnboundedReport, scan: ScanReport },
    CertificationFailed { lambda: f64, certificates: Vec<Certificate>, scan: ScanReport },
}

impl FindTwoOutcome {
    pub fn scan(&self) -> &ScanReport {
        match self {
            FindTwoOutcome::Found(p) => &p.scan,
            FindTwoOutcome::NotDetected(s) => s,
            FindTwoOutcome::Unbounded { scan, .. } => scan,
            FindTwoOutcome::CertificationFailed { scan, .. } => scan,
        }
    }
}

/// Scans the default grid, brackets the first detection by bisection, and
/// certifies the two best global representatives at the detected grid λ.
pub fn find_two_minima(inst: &ProblemInstance, opts: &FindTwoOptions) -> Result<FindTwoOutcome> {
    let scan = lambda_scan(inst, &opts.grid, &opts.scan)?;
    if let Some(l) = scan.unbounded_lambda() {
        let report = detect_unbounded(inst, l, &default_radii())?;
        return Ok(FindTwoOutcome::Unbounded { report, scan });
    }
    let Some(idx) = scan.detected_index else {
        return Ok(FindTwoOutcome::NotDetected(scan));
    };
    let lambda = scan.lambdas[idx];
    let mut bracket = (if idx > 0 { scan.lambdas[idx - 1] } else { lambda }, lambda);
    if idx > 0 {
        for _ in 0..opts.refine_rounds {
            let mid = (bracket.0 * bracket.1).sqrt();
            if scan_point(inst, mid, &opts.scan)?.n_global_clusters >= 2 {
                bracket.1 = mid;
            } else {
                bracket.0 = mid;
            }
        }
    }
    let record = &scan.records[idx];
    let (a, b) = (&record.global_minima[0], &record.global_minima[1]);
    let run = |m: &Minimum| {
        if m.converged {
            verify::certify(m, inst, lambda, &opts.certify)
        } else {
            Ok(Certificate::rejected(lambda, format!("representative stopped without converging ({:?})", m.stop)))
        }
    };
    let (ca, cb) = (run(a)?, run(b)?);
    if !(ca.passed && cb.passed) {
        return Ok(FindTwoOutcome::CertificationFailed { lambda, certificates: vec![ca, cb], scan });
    }
    let (fa, fb) = (ca.finest.clone().expect("certified level"), cb.finest.clone().expect("certified level"));
    let energy_gap = (fa.total() - fb.total()).abs();
    let separation = path::path_distance(&fa.path, &fb.path)?;
    Ok(FindTwoOutcome::Found(Box::new(PairReport {
        lambda,
        onset_bracket: bracket,
        pair: (fa, fb),
        certificates: (ca, cb),
        energy_gap,
        separation,
        scan,
    })))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeReport {
    pub lambda: Option<f64>,
    pub minimizer: Option<Minimum>,
    pub certificate: Option<Certificate>,
    /// `min_k |u_k|` of the returned minimizer.
    pub min_norm: f64,
    /// `ρ − LT`
    pub threshold: f64,
    pub zero_path_energy: Option<f64>,
    pub passed: bool,
    pub outcome: FindTwoOutcome,
}

/// Runs [`find_two_minima`] on an instance with a plateau perturbation and
/// returns a certified global minimizer whose range avoids `B̄_{ρ−LT}`.
pub fn range_exclusion_driver(inst: &ProblemInstance, opts: &FindTwoOptions) -> Result<RangeReport> {
    let rho = inst
        .plateau_radius
        .ok_or_else(|| Error::Precondition("instance declares no plateau radius".into()))?;
    let j1 = hypotheses::check_j1(inst, rho, &SampleSpec::for_radius(rho, opts.scan.minimize.seed))?;
    if j1.status != Status::VerifiedOnSamples {
        return Err(Error::Precondition(format!("plateau condition fails: {}", j1.detail)));
    }
    let pot = &inst.potential;
    if pot.mu != 1.0 || pot.omega != Forcing::Zero {
        return Err(Error::Precondition("the range check needs F = |x|^p/p".into()));
    }
    let threshold = rho - inst.lt();
    let outcome = find_two_minima(inst, opts)?;
    let mut report = RangeReport {
        lambda: None,
        minimizer: None,
        certificate: None,
        min_norm: 0.0,
        threshold,
        zero_path_energy: None,
        passed: false,
        outcome,
    };
    if let FindTwoOutcome::Found(pair) = &report.outcome {
        let candidates = [(&pair.pair.0, &pair.certificates.0), (&pair.pair.1, &pair.certificates.1)];
        let best = candidates
            .into_iter()
            .max_by(|x, y| x.0.path.inf_norm().total_cmp(&y.0.path.inf_norm()))
            .expect("two candidates");
        let zero = PeriodicPath::constant(&vec![0.0; inst.dim], best.0.path.len(), inst.period)?;
        report.lambda = Some(pair.lambda);
        report.min_norm = best.0.path.inf_norm();
        report.zero_path_energy = Some(functional::eval_energy(inst, &zero)?.total(pair.lambda));
        report.passed = report.min_norm > threshold;
        report.minimizer = Some(best.0.clone());
        report.certificate = Some(best.1.clone());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, PresetParams};

    fn inst(name: &str) -> ProblemInstance {
        preset(name, &PresetParams::default()).unwrap()
    }

    #[test]
    fn grids() {
        let g = default_grid();
        assert_eq!(g.len(), 25);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[24] - 100.0).abs() < 1e-12 && (g[12] - 1.0).abs() < 1e-14);
        assert_eq!(lambda_grid(1.0, 3.0, 3, false).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(lambda_grid(0.0, 1.0, 3, true).is_err());
    }

    #[test]
    fn unbounded_detection() {
        let r = detect_unbounded(&inst("example-3.3"), 1.0, &default_radii()).unwrap();
        assert_eq!(r.status, UnboundedStatus::Evidence);
        assert!((r.energies[0].1 + 413.0).abs() < 1e-9);
        assert!(r.energies.windows(2).all(|w| w[1].1 < w[0].1));
        for name in ["example-3.2", "two-minima-symmetric"] {
            for lambda in [0.01, 1.0, 100.0] {
                let r = detect_unbounded(&inst(name), lambda, &default_radii()).unwrap();
                assert_eq!(r.status, UnboundedStatus::NoEvidence, "{name} {lambda}");
            }
        }
    }

    #[test]
    fn scan_edge_cases() {
        let ex1 = inst("example-3.1");
        let opts = ScanOptions { starts: 6, ..Default::default() };
        let empty = lambda_scan(&ex1, &[], &opts).unwrap();
        assert!(empty.records.is_empty() && empty.detected_lambda.is_none());
        let r = lambda_scan(&ex1, &[0.5, 1.0, 2.0], &opts).unwrap();
        assert!(r.detected_lambda.is_none());
        assert!(r.records.iter().all(|x| x.n_global_clusters == 1 && x.all_converged));
        assert!(lambda_scan(&ex1, &[1.0, 0.5], &opts).is_err());
    }

    #[test]
    fn driver_preconditions() {
        let ex1 = inst("example-3.1");
        assert!(range_exclusion_driver(&ex1, &FindTwoOptions::default()).is_err());
    }
}
