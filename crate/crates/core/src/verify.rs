//! Certification of minimizers: the discrete Euler–Lagrange residual, grid
//! refinement, and a shooting solver for the first-order system
//! `u' = φ⁻¹(w)`, `w' = ∇F(t,u) + λψ(t)∇G(u)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::Evaluator;
use crate::model::ProblemInstance;
use crate::optimizer::{self, MinimizeOptions, Minimum};
use crate::path::{self, PeriodicPath};
use crate::sampling;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub dim: usize,
    /// Node residuals, flattened node-major.
    pub residuals: Vec<f64>,
    pub max_norm: f64,
    /// `|u₀ − u_N|`, zero by construction of periodic paths.
    pub boundary_position: f64,
    /// `|u'₀ − u'_N|`, zero by construction of periodic paths.
    pub boundary_velocity: f64,
}

impl ResidualReport {
    pub fn node_norms(&self) -> Vec<f64> {
        self.residuals.chunks(self.dim).map(sampling::norm).collect()
    }
}

/// `r_k = [φ(d_k/h) − φ(d_{k−1}/h)]/h − ∇F(t_k,u_k) − λψ(t_k)∇G(u_k)`.
pub fn el_residual(inst: &ProblemInstance, lambda: f64, p: &PeriodicPath) -> Result<ResidualReport> {
    if p.dim() != inst.dim {
        return Err(Error::DimensionMismatch { expected: inst.dim, got: p.dim() });
    }
    if (p.period() - inst.period).abs() > 1e-12 * inst.period {
        return Err(Error::PeriodMismatch(inst.period, p.period()));
    }
    let limit = inst.kinetic.speed_limit();
    for k in 0..p.len() {
        let speed = sampling::norm(&p.increment(k)) / p.step();
        if !(speed < limit) {
            return Err(Error::Infeasible { segment: k, speed, limit });
        }
    }
    let mut residuals = vec![0.0; p.nodes().len()];
    Evaluator::new(inst, p.len(), lambda).residual(p.nodes(), &mut residuals);
    let max_norm = residuals.chunks(inst.dim).map(sampling::norm).fold(0.0, f64::max);
    Ok(ResidualReport { dim: inst.dim, residuals, max_norm, boundary_position: 0.0, boundary_velocity: 0.0 })
}

fn rhs(inst: &ProblemInstance, lambda: f64, t: f64, u: &[f64], w: &[f64], du: &mut [f64], dw: &mut [f64]) {
    inst.kinetic.velocity(w, du);
    dw.iter_mut().for_each(|x| *x = 0.0);
    inst.potential.add_gradient(t, u, 1.0, dw);
    let psi = inst.weight_at(t);
    if lambda != 0.0 && psi != 0.0 {
        inst.perturbation.add_gradient(u, lambda * psi, dw);
    }
}

/// Classical RK4 on `(u, w)` over one period, calling `visit` after each step.
fn integrate<V: FnMut(usize, &[f64], &[f64])>(
    inst: &ProblemInstance,
    lambda: f64,
    u0: &[f64],
    w0: &[f64],
    steps: usize,
    mut visit: V,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if steps < 64 {
        return Err(Error::InvalidParameter(format!("shooting needs at least 64 steps, got {steps}")));
    }
    let n = inst.dim;
    if u0.len() != n || w0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u0.len().min(w0.len()) });
    }
    let h = inst.period / steps as f64;
    let (mut u, mut w) = (u0.to_vec(), w0.to_vec());
    let mut k = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut l = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let (mut us, mut ws) = (vec![0.0; n], vec![0.0; n]);
    for s in 0..steps {
        let t = s as f64 * h;
        rhs(inst, lambda, t, &u, &w, &mut k[0], &mut l[0]);
        for (stage, c) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            for i in 0..n {
                us[i] = u[i] + c * h * k[stage - 1][i];
                ws[i] = w[i] + c * h * l[stage - 1][i];
            }
            rhs(inst, lambda, t + c * h, &us, &ws, &mut k[stage], &mut l[stage]);
        }
        for i in 0..n {
            u[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            w[i] += h / 6.0 * (l[0][i] + 2.0 * l[1][i] + 2.0 * l[2][i] + l[3][i]);
        }
        visit(s + 1, &u, &w);
    }
    Ok((u, w))
}

/// Period map `(u(0), w(0)) ↦ (u(T), w(T))` with `steps ≥ 64` RK4 steps.
pub fn shoot(inst: &ProblemInstance, lambda: f64, u0: &[f64], w0: &[f64], steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    integrate(inst, lambda, u0, w0, steps, |_, _, _| {})
}

/// Position samples of the trajectory at `n_nodes` equally spaced times;
/// `steps` must be a multiple of `n_nodes`.
pub fn trajectory_path(
    inst: &ProblemInstance,
    lambda: f64,
    u0: &[f64],
    w0: &[f64],
    steps: usize,
    n_nodes: usize,
) -> Result<PeriodicPath> {
    if n_nodes < path::MIN_NODES || !steps.is_multiple_of(n_nodes) {
        return Err(Error::InvalidParameter(format!("{n_nodes} nodes do not divide {steps} steps")));
    }
    let stride = steps / n_nodes;
    let mut nodes = u0.to_vec();
    integrate(inst, lambda, u0, w0, steps, |s, u, _| {
        if s % stride == 0 && s < steps {
            nodes.extend_from_slice(u);
        }
    })?;
    PeriodicPath::from_nodes(nodes, inst.dim, inst.period)
}

/// First integral `⟨w, φ⁻¹(w)⟩ − Φ(φ⁻¹(w)) − F(u) − λψ̄G(u)` of
/// autonomous instances.
pub fn first_integral(inst: &ProblemInstance, lambda: f64, u: &[f64], w: &[f64]) -> f64 {
    let psi = inst.weight_integral() / inst.period;
    inst.kinetic.hamiltonian(w) - inst.potential.value(0.0, u) - lambda * psi * inst.perturbation.value(u)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub steps: usize,
    pub defect_tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub max_halvings: usize,
    pub fd_step: f64,
    pub dedup_tol: f64,
    /// Node count of the sampled solution paths.
    pub path_nodes: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            steps: 1024,
            defect_tol: 1e-10,
            max_iter: 60,
            damping: 0.5,
            max_halvings: 40,
            fd_step: 1e-7,
            dedup_tol: 1e-6,
            path_nodes: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingRoot {
    pub u0: Vec<f64>,
    pub w0: Vec<f64>,
    pub defect: f64,
    pub start_index: usize,
    pub path: PeriodicPath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartFailure {
    pub start_index: usize,
    pub defect: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShootingReport {
    pub roots: Vec<ShootingRoot>,
    pub failures: Vec<StartFailure>,
}

fn defect(inst: &ProblemInstance, lambda: f64, z: &[f64], steps: usize) -> Result<Vec<f64>> {
    let n = inst.dim;
    let (u, w) = shoot(inst, lambda, &z[..n], &z[n..], steps)?;
    Ok(u.iter().chain(&w).zip(z).map(|(a, b)| a - b).collect())
}

/// Root and defect norm, or the last defect norm and the failure reason.
type NewtonOutcome = std::result::Result<(Vec<f64>, f64), (f64, String)>;

fn newton(inst: &ProblemInstance, lambda: f64, z0: &[f64], opts: &NewtonOptions) -> Result<NewtonOutcome> {
    let m = z0.len();
    let mut z = z0.to_vec();
    let mut d = defect(inst, lambda, &z, opts.steps)?;
    let mut dn = sampling::norm(&d);
    for _ in 0..opts.max_iter {
        if !dn.is_finite() {
            return Ok(Err((dn, "non-finite defect".into())));
        }
        if dn <= opts.defect_tol {
            return Ok(Ok((z, dn)));
        }
        let mut jac = DMatrix::zeros(m, m);
        for j in 0..m {
            let e = opts.fd_step * (1.0 + z[j].abs());
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += e;
            zm[j] -= e;
            let (dp, dm) = (defect(inst, lambda, &zp, opts.steps)?, defect(inst, lambda, &zm, opts.steps)?);
            for i in 0..m {
                jac[(i, j)] = (dp[i] - dm[i]) / (2.0 * e);
            }
        }
        let Some(delta) = jac.lu().solve(&DVector::from_iterator(m, d.iter().map(|x| -x))) else {
            return Ok(Err((dn, "singular period-map Jacobian".into())));
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = z.iter().zip(delta.iter()).map(|(a, b)| a + alpha * b).collect();
            let dt = defect(inst, lambda, &trial, opts.steps)?;
            let tn = sampling::norm(&dt);
            if tn.is_finite() && tn < dn {
                z = trial;
                d = dt;
                dn = tn;
                accepted = true;
                break;
            }
            alpha *= opts.damping;
        }
        if !accepted {
            return Ok(if dn <= opts.defect_tol { Ok((z, dn)) } else { Err((dn, "damping exhausted".into())) });
        }
    }
    Ok(if dn <= opts.defect_tol { Ok((z, dn)) } else { Err((dn, "iteration limit".into())) })
}

/// Damped Newton on the period-map defect from every initial `(u0, w0)`;
/// converged roots are deduplicated and sampled as paths.
pub fn solve_by_shooting(
    inst: &ProblemInstance,
    lambda: f64,
    init_grid: &[(Vec<f64>, Vec<f64>)],
    opts: &NewtonOptions,
) -> Result<ShootingReport> {
    if init_grid.is_empty() {
        return Err(Error::InvalidParameter("shooting needs at least one initial point".into()));
    }
    let mut roots: Vec<ShootingRoot> = Vec::new();
    let mut failures = Vec::new();
    for (idx, (u0, w0)) in init_grid.iter().enumerate() {
        if u0.len() != inst.dim || w0.len() != inst.dim {
            return Err(Error::DimensionMismatch { expected: inst.dim, got: u0.len().min(w0.len()) });
        }
        let z0: Vec<f64> = u0.iter().chain(w0).copied().collect();
        match newton(inst, lambda, &z0, opts)? {
            Ok((z, defect)) => {
                if roots.iter().any(|r| {
                    let other: Vec<f64> = r.u0.iter().chain(&r.w0).copied().collect();
                    sampling::dist(&other, &z) <= opts.dedup_tol
                }) {
                    continue;
                }
                let (u, w) = z.split_at(inst.dim);
                let path = trajectory_path(inst, lambda, u, w, opts.steps, opts.path_nodes)?;
                roots.push(ShootingRoot { u0: u.to_vec(), w0: w.to_vec(), defect, start_index: idx, path });
            }
            Err((defect, reason)) => failures.push(StartFailure { start_index: idx, defect, reason }),
        }
    }
    Ok(ShootingReport { roots, failures })
}

/// Tensor grid of initial conditions `{u values}ⁿ × {w values}ⁿ`
/// restricted to the first coordinate, other coordinates zero.
pub fn axis_grid(dim: usize, us: &[f64], ws: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut grid = Vec::new();
    for &u in us {
        for &w in ws {
            let mut a = vec![0.0; dim];
            let mut b = vec![0.0; dim];
            a[0] = u;
            b[0] = w;
            grid.push((a, b));
        }
    }
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Number of grids `N, 2N, 4N, …`.
    pub levels: usize,
    pub residual_tol: f64,
    /// Cross-grid distances below this count as zero.
    pub distance_floor: f64,
    pub minimize: MinimizeOptions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { levels: 3, residual_tol: 1e-6, distance_floor: 1e-9, minimize: MinimizeOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub grid_n: usize,
    pub energy: f64,
    pub el_residual: f64,
    pub converged: bool,
    /// Sup-distance to the previous level (the input path for the first).
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lambda: f64,
    pub input_residual: f64,
    pub levels: Vec<LevelRecord>,
    pub finest_residual: f64,
    pub distances_decrease: bool,
    pub passed: bool,
    pub diagnostics: Vec<String>,
    /// Re-solved minimizer on the finest grid.
    #[serde(skip)]
    pub finest: Option<Minimum>,
}

impl Certificate {
    /// A failed certificate for an input that cannot be refined.
    pub fn rejected(lambda: f64, reason: impl Into<String>) -> Self {
        Certificate {
            lambda,
            input_residual: f64::NAN,
            levels: vec![],
            finest_residual: f64::NAN,
            distances_decrease: false,
            passed: false,
            diagnostics: vec![reason.into()],
            finest: None,
        }
    }
}

/// Re-solves from the interpolated minimizer on successively doubled grids
/// and checks the residual at the finest grid and the cross-grid distances.
pub fn certify(min: &Minimum, inst: &ProblemInstance, lambda: f64, opts: &CertifyOptions) -> Result<Certificate> {
    if !min.converged {
        return Err(Error::Precondition("only converged minima can be certified".into()));
    }
    if opts.levels == 0 {
        return Err(Error::InvalidParameter("certification needs at least one level".into()));
    }
    let mut diagnostics = Vec::new();
    let input_residual = el_residual(inst, lambda, &min.path)?.max_norm;
    if input_residual > opts.residual_tol {
        diagnostics.push(format!("input path residual {input_residual:.3e} exceeds {:.1e}", opts.residual_tol));
    }
    let mut levels = Vec::new();
    let mut current = min.path.clone();
    let mut finest = None;
    let mut n = min.path.len();
    for _ in 0..opts.levels {
        let start = current.resample(n)?;
        let m = optimizer::minimize(inst, lambda, &start, &opts.minimize)?;
        let res = el_residual(inst, lambda, &m.path)?.max_norm;
        let distance = path::path_distance(&current, &m.path)?;
        if !m.converged {
            diagnostics.push(format!("re-solve at N={n} stopped without converging ({:?})", m.stop));
        }
        levels.push(LevelRecord { grid_n: n, energy: m.total(), el_residual: res, converged: m.converged, distance });
        current = m.path.clone();
        finest = Some(m);
        n *= 2;
    }
    let finest_residual = levels.last().map(|l| l.el_residual).unwrap_or(f64::INFINITY);
    if finest_residual > opts.residual_tol {
        diagnostics.push(format!("finest residual {finest_residual:.3e} exceeds {:.1e}", opts.residual_tol));
    }
    let distances_decrease = levels.windows(2).all(|w| {
        w[1].distance <= opts.distance_floor || w[1].distance <= w[0].distance + 1e-12
    });
    if !distances_decrease {
        diagnostics.push("cross-grid distances do not decrease".into());
    }
    let passed = diagnostics.is_empty();
    Ok(Certificate {
        lambda,
        input_residual,
        levels,
        finest_residual,
        distances_decrease,
        passed,
        diagnostics,
        finest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional;
    use crate::model::{preset, PresetParams};

    fn inst(name: &str) -> ProblemInstance {
        preset(name, &PresetParams::default()).unwrap()
    }

    #[test]
    fn residual_of_known_solutions_is_zero() {
        let zero = PeriodicPath::constant(&[0.0], 32, 1.0).unwrap();
        assert_eq!(el_residual(&inst("example-3.2"), 1.0, &zero).unwrap().max_norm, 0.0);
        let shifted = PeriodicPath::constant(&[-1.0], 32, 1.0).unwrap();
        assert_eq!(el_residual(&inst("example-3.1"), 1.0, &shifted).unwrap().max_norm, 0.0);
    }

    #[test]
    fn residual_is_scaled_negative_gradient() {
        let two = inst("two-minima-symmetric");
        let p = path::random_feasible(32, 1.0, 1.0, &[0.4], 0.3, 5).unwrap();
        let r = el_residual(&two, 1.7, &p).unwrap();
        let g = functional::gradient(&two, &p, 1.7).unwrap();
        let h = p.step();
        assert!(r.max_norm > 0.0);
        for (ri, gi) in r.residuals.iter().zip(&g) {
            assert!((ri + gi / h).abs() <= 1e-14 * (1.0 + ri.abs()) / h);
        }
    }

    #[test]
    fn boundary_paths_are_rejected() {
        let p = PeriodicPath::from_nodes(vec![0.0, 0.25, 0.0, 0.25], 1, 1.0).unwrap();
        assert!(el_residual(&inst("example-3.2"), 1.0, &p).is_err());
    }

    #[test]
    fn equilibria_are_fixed_points() {
        let (u, w) = shoot(&inst("example-3.2"), 0.7, &[0.0], &[0.0], 128).unwrap();
        assert_eq!((u[0], w[0]), (0.0, 0.0));
        let (u, w) = shoot(&inst("example-3.1"), 1.0, &[-1.0], &[0.0], 128).unwrap();
        assert_eq!((u[0], w[0]), (-1.0, 0.0));
        assert!(shoot(&inst("example-3.1"), 1.0, &[-1.0], &[0.0], 32).is_err());
    }

    #[test]
    fn example_32_has_one_root() {
        let grid = axis_grid(1, &[-2.0, 0.0, 2.0], &[-1.0, 0.0, 1.0]);
        let opts = NewtonOptions { steps: 256, path_nodes: 64, ..Default::default() };
        let rep = solve_by_shooting(&inst("example-3.2"), 1.0, &grid, &opts).unwrap();
        assert_eq!(rep.roots.len(), 1, "{:?}", rep.failures);
        assert!(rep.roots[0].u0[0].abs() < 1e-9 && rep.roots[0].w0[0].abs() < 1e-9);
    }

    #[test]
    fn certify_rest_and_reject_noise() {
        let ex2 = inst("example-3.2");
        let start = PeriodicPath::constant(&[0.0], 16, 1.0).unwrap();
        let opts = CertifyOptions::default();
        let m = optimizer::minimize(&ex2, 1.0, &start, &opts.minimize).unwrap();
        let c = certify(&m, &ex2, 1.0, &opts).unwrap();
        assert!(c.passed, "{:?}", c.diagnostics);
        assert!(c.levels.iter().all(|l| l.distance == 0.0));

        let mut noisy = m.clone();
        let nodes: Vec<f64> = (0..16).map(|k| 1e-2 * ((k * 7 % 5) as f64 - 2.0) / 2.0).collect();
        noisy.path = PeriodicPath::from_nodes(nodes, 1, 1.0).unwrap();
        let c = certify(&noisy, &ex2, 1.0, &opts).unwrap();
        assert!(!c.passed);
        assert!(c.input_residual > 1e-6);
    }

    #[test]
    fn rk4_order_and_drift() {
        let forced = inst("forced-oscillator");
        let (u0, v0) = forced.potential.reference_solution(0.0).unwrap();
        let w0 = forced.kinetic.momentum_vec(&v0);
        let defect = |steps| {
            let (u, w) = shoot(&forced, 0.0, &u0, &w0, steps).unwrap();
            sampling::dist(&u, &u0).hypot(sampling::dist(&w, &w0))
        };
        let ratios: Vec<f64> = [64, 128, 256].iter().map(|&s| defect(s) / defect(2 * s)).collect();
        assert!(ratios.iter().all(|r| (12.0..=20.0).contains(r)), "{ratios:?}");
        let two = inst("two-minima-symmetric");
        let (u, w) = shoot(&two, 2.0, &[0.05], &[0.0], 1024).unwrap();
        let drift = (first_integral(&two, 2.0, &u, &w) - first_integral(&two, 2.0, &[0.05], &[0.0])).abs();
        assert!(drift <= 1e-8);
    }
}
