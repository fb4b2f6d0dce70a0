//! Projected descent on the discrete constraint set, a deterministic
//! multistart portfolio, and clustering of the resulting minima.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{self, EnergyBreakdown, EnergyRecord, Evaluator};
use crate::model::ProblemInstance;
use crate::path::{self, PeriodicPath};
use crate::sampling;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Grid size used for the multistart portfolio.
    pub grid_n: usize,
    pub max_iter: usize,
    /// Stationarity tolerance in residual units; the projected node
    /// gradient must fall below `stationarity_tol·h`.
    pub stationarity_tol: f64,
    /// Relative margin kept from the speed limit.
    pub eps_bd: f64,
    pub backtrack: f64,
    pub sufficient_decrease: f64,
    /// Zeroth-order weight of the Sobolev preconditioner.
    pub precond_shift: f64,
    /// Largest node displacement per step, in units of `LT`.
    pub step_cap: f64,
    pub seed: u64,
    #[serde(default)]
    pub record_trace: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            grid_n: 64,
            max_iter: 20_000,
            stationarity_tol: 1e-8,
            eps_bd: 1e-6,
            backtrack: 0.5,
            sufficient_decrease: 1e-4,
            precond_shift: 1.0,
            step_cap: 1.0,
            seed: 0,
            record_trace: false,
        }
    }
}

impl MinimizeOptions {
    fn validate(&self) -> Result<()> {
        let positive =
            [self.stationarity_tol, self.eps_bd, self.backtrack, self.sufficient_decrease, self.precond_shift, self.step_cap];
        if positive.iter().any(|v| !(*v > 0.0)) || self.backtrack >= 1.0 || self.eps_bd >= 1.0 {
            return Err(Error::InvalidParameter("minimizer tolerances must be positive (and backtrack, eps_bd < 1)".into()));
        }
        if self.grid_n < path::MIN_NODES {
            return Err(Error::InvalidParameter(format!("grid size must be at least {}", path::MIN_NODES)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// No step satisfied the decrease test down to machine precision.
    LineSearchFailure,
}

/// One line of the iteration log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

/// Result of one descent run.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub path: PeriodicPath,
    pub energy: EnergyBreakdown,
    pub lambda: f64,
    pub projected_grad_norm: f64,
    pub grad_tol: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub start_index: usize,
    pub trace: Vec<IterRecord>,
}

impl Minimum {
    pub fn total(&self) -> f64 {
        self.energy.total(self.lambda)
    }

    pub fn summary(&self) -> MinimumSummary {
        MinimumSummary {
            energy: self.energy.record(self.lambda),
            grid_n: self.path.len(),
            projected_grad_norm: self.projected_grad_norm,
            grad_tol: self.grad_tol,
            iterations: self.iterations,
            converged: self.converged,
            stop: self.stop,
            start_index: self.start_index,
            sup_norm: self.path.sup_norm(),
            inf_norm: self.path.inf_norm(),
        }
    }
}

/// Serializable description of a [`Minimum`] (the path goes to CSV).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimumSummary {
    pub energy: EnergyRecord,
    pub grid_n: usize,
    pub projected_grad_norm: f64,
    pub grad_tol: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub start_index: usize,
    pub sup_norm: f64,
    pub inf_norm: f64,
}

/// Solver for the circulant tridiagonal system with diagonal `diag` and
/// off-diagonals `off` (Sherman–Morrison around the Thomas algorithm).
struct CyclicTridiagonal {
    n: usize,
    diag: f64,
    off: f64,
    cprime: Vec<f64>,
    denom: Vec<f64>,
    z: Vec<f64>,
    factor: f64,
    gamma: f64,
}

impl CyclicTridiagonal {
    fn new(n: usize, diag: f64, off: f64) -> Self {
        let gamma = -diag;
        let mut d = vec![diag; n];
        d[0] -= gamma;
        d[n - 1] -= off * off / gamma;
        let mut cprime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = d[0];
        cprime[0] = off / denom[0];
        for i in 1..n {
            denom[i] = d[i] - off * cprime[i - 1];
            cprime[i] = off / denom[i];
        }
        let mut s = CyclicTridiagonal { n, diag, off, cprime, denom, z: vec![0.0; n], factor: 0.0, gamma };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = off;
        let mut z = vec![0.0; n];
        s.thomas(&u, &mut z);
        s.factor = 1.0 + z[0] + off * z[n - 1] / gamma;
        s.z = z;
        s
    }

    fn thomas(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.n;
        out[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            out[i] = (rhs[i] - self.off * out[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            out[i] -= self.cprime[i] * out[i + 1];
        }
    }

    fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        self.thomas(rhs, out);
        let n = self.n;
        let vy = out[0] + self.off * out[n - 1] / self.gamma;
        let c = vy / self.factor;
        for (o, zi) in out.iter_mut().zip(&self.z) {
            *o -= c * zi;
        }
    }
}

/// Sobolev metric `(1/(L·h))·(−Δ_per) + σ·h·I`, applied per component.
struct Preconditioner {
    solver: CyclicTridiagonal,
    dim: usize,
    rhs: Vec<f64>,
    sol: Vec<f64>,
}

impl Preconditioner {
    fn new(n: usize, dim: usize, h: f64, speed_limit: f64, shift: f64) -> Self {
        let stiff = 1.0 / (speed_limit * h);
        Preconditioner {
            solver: CyclicTridiagonal::new(n, 2.0 * stiff + shift * h, -stiff),
            dim,
            rhs: vec![0.0; n],
            sol: vec![0.0; n],
        }
    }

    /// `⟨s, P s⟩`
    fn quadratic_form(&self, s: &[f64]) -> f64 {
        let (dim, n) = (self.dim, self.rhs.len());
        let (diag, off) = (self.solver.diag, self.solver.off);
        let mut acc = 0.0;
        for k in 0..n {
            let next = (k + 1) % n;
            for i in 0..dim {
                let a = s[k * dim + i];
                acc += a * (diag * a + 2.0 * off * s[next * dim + i]);
            }
        }
        acc
    }

    fn apply_inverse(&mut self, g: &[f64], out: &mut [f64]) {
        let dim = self.dim;
        for i in 0..dim {
            for (k, r) in self.rhs.iter_mut().enumerate() {
                *r = g[k * dim + i];
            }
            self.solver.solve(&self.rhs, &mut self.sol);
            for (k, s) in self.sol.iter().enumerate() {
                out[k * dim + i] = *s;
            }
        }
    }
}

fn projected_gradient_norm(inst: &ProblemInstance, x: &[f64], g: &[f64], opts: &MinimizeOptions) -> Result<f64> {
    let raw: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    let p = path::project_feasible(&raw, inst.dim, inst.period, inst.kinetic.speed_limit(), opts.eps_bd)?;
    let dim = inst.dim;
    Ok(x.chunks(dim)
        .zip(p.nodes().chunks(dim))
        .map(|(a, b)| sampling::dist(a, b))
        .fold(0.0, f64::max))
}

/// Preconditioned projected-gradient descent with backtracking on the
/// projection arc. Every iterate lies in the `eps_bd` interior of the
/// discrete constraint set and the energy never increases beyond rounding.
pub fn minimize(inst: &ProblemInstance, lambda: f64, start: &PeriodicPath, opts: &MinimizeOptions) -> Result<Minimum> {
    minimize_indexed(inst, lambda, start, opts, 0)
}

fn minimize_indexed(
    inst: &ProblemInstance,
    lambda: f64,
    start: &PeriodicPath,
    opts: &MinimizeOptions,
    start_index: usize,
) -> Result<Minimum> {
    opts.validate()?;
    if start.dim() != inst.dim {
        return Err(Error::DimensionMismatch { expected: inst.dim, got: start.dim() });
    }
    if (start.period() - inst.period).abs() > 1e-12 * inst.period {
        return Err(Error::PeriodMismatch(inst.period, start.period()));
    }
    let (dim, period, limit) = (inst.dim, inst.period, inst.kinetic.speed_limit());
    let n = start.len();
    let h = period / n as f64;
    let grad_tol = opts.stationarity_tol * h;
    let mut x = path::project_feasible(start.nodes(), dim, period, limit, opts.eps_bd)?.into_nodes();

    let mut eval = Evaluator::new(inst, n, lambda);
    let mut precond = Preconditioner::new(n, dim, h, limit, opts.precond_shift);
    let mut g = vec![0.0; x.len()];
    let mut dir = vec![0.0; x.len()];
    let mut trial_raw = vec![0.0; x.len()];
    let (mut energy, mut magnitude) = eval.energy_and_gradient(&x, &mut g);
    let mut pg = projected_gradient_norm(inst, &x, &g, opts)?;
    let mut trace = Vec::new();
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;
    let mut step = 1.0f64;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    if opts.record_trace {
        trace.push(IterRecord { iter: 0, energy, grad_norm: pg, step: 0.0 });
    }

    while iterations < opts.max_iter {
        if pg <= grad_tol {
            stop = StopReason::Converged;
            break;
        }
        precond.apply_inverse(&g, &mut dir);
        let mut t = match &previous {
            Some((xp, gp)) => {
                let s_k: Vec<f64> = x.iter().zip(xp).map(|(a, b)| a - b).collect();
                let sy: f64 = s_k.iter().zip(g.iter().zip(gp)).map(|(si, (a, b))| si * (a - b)).sum();
                if sy > 0.0 {
                    (precond.quadratic_form(&s_k) / sy).clamp(1e-12, 1e12)
                } else {
                    (2.0 * step).min(1e12)
                }
            }
            None => 1.0,
        };
        let longest = dir.chunks(dim).map(sampling::norm).fold(0.0, f64::max);
        if longest > 0.0 {
            t = t.min(opts.step_cap * inst.lt() / longest);
        }
        let accepted = loop {
            for i in 0..x.len() {
                trial_raw[i] = x[i] - t * dir[i];
            }
            let trial = path::project_feasible(&trial_raw, dim, period, limit, opts.eps_bd)?.into_nodes();
            let slope: f64 = trial.iter().zip(&x).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum();
            if slope < 0.0 {
                let (e_trial, mag_trial) = eval.energy(&trial);
                let noise = 64.0 * f64::EPSILON * magnitude.max(mag_trial);
                let armijo = e_trial <= energy + opts.sufficient_decrease * slope;
                let within_noise = -slope <= noise && e_trial <= energy + noise;
                if armijo || within_noise {
                    break Some(trial);
                }
            }
            t *= opts.backtrack;
            if t < 1e-18 {
                break None;
            }
        };
        let Some(trial) = accepted else {
            stop = StopReason::LineSearchFailure;
            break;
        };
        iterations += 1;
        step = t;
        previous = Some((std::mem::replace(&mut x, trial), g.clone()));
        (energy, magnitude) = eval.energy_and_gradient(&x, &mut g);
        pg = projected_gradient_norm(inst, &x, &g, opts)?;
        if opts.record_trace {
            trace.push(IterRecord { iter: iterations, energy, grad_norm: pg, step: t });
        }
    }
    if stop == StopReason::MaxIterations && pg <= grad_tol {
        stop = StopReason::Converged;
    }
    let path = PeriodicPath::from_nodes(x, dim, period)?;
    let breakdown = functional::eval_energy(inst, &path)?;
    Ok(Minimum {
        path,
        energy: breakdown,
        lambda,
        projected_grad_norm: pg,
        grad_tol,
        iterations,
        converged: stop == StopReason::Converged,
        stop,
        start_index,
        trace,
    })
}

/// Radius of the ball holding the constant starts of the portfolio.
pub fn portfolio_radius(inst: &ProblemInstance, lambda: f64, grid_n: usize) -> Result<f64> {
    let origin = PeriodicPath::constant(&vec![0.0; inst.dim], grid_n, inst.period)?;
    let incumbent = functional::eval_energy(inst, &origin)?.total(lambda);
    let r = if inst.perturbation.delta.is_some() && lambda >= 0.0 {
        functional::action_sublevel_radius(inst, lambda, incumbent)?
    } else {
        4.0 * (inst.lt() + 1.0)
    };
    Ok(r.min(1e6))
}

/// The deterministic start portfolio: constant paths at quasi-random points
/// of the ball, then random feasible perturbations around the same points.
pub fn start_portfolio(inst: &ProblemInstance, lambda: f64, opts: &MinimizeOptions, starts: usize) -> Result<Vec<PeriodicPath>> {
    if starts == 0 {
        return Err(Error::InvalidParameter("at least one start is required".into()));
    }
    let radius = portfolio_radius(inst, lambda, opts.grid_n)?;
    let n_const = (2 * starts).div_ceil(3).max(1);
    let amplitude = 0.25 * radius.min(inst.lt());
    (0..starts)
        .map(|k| {
            let point = sampling::halton_ball((k % n_const) as u64 + 1, inst.dim, radius);
            if k < n_const {
                PeriodicPath::constant(&point, opts.grid_n, inst.period)
            } else {
                path::random_feasible(
                    opts.grid_n,
                    inst.period,
                    inst.kinetic.speed_limit(),
                    &point,
                    amplitude,
                    sampling::substream(opts.seed, k as u64),
                )
            }
        })
        .collect()
}

/// Runs [`minimize`] from every portfolio start (in parallel) and returns
/// the results sorted by energy, ties broken by start index.
pub fn multistart(inst: &ProblemInstance, lambda: f64, opts: &MinimizeOptions, starts: usize) -> Result<Vec<Minimum>> {
    let portfolio = start_portfolio(inst, lambda, opts, starts)?;
    let mut results = portfolio
        .par_iter()
        .enumerate()
        .map(|(k, start)| minimize_indexed(inst, lambda, start, opts, k))
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| a.total().total_cmp(&b.total()).then(a.start_index.cmp(&b.start_index)));
    Ok(results)
}

/// Group of minima joined by single linkage.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Indices into the clustered list; the first one is the representative.
    pub members: Vec<usize>,
    pub best_energy: f64,
    pub global: bool,
}

impl Cluster {
    pub fn representative(&self) -> usize {
        self.members[0]
    }
}

/// Default value tolerance `1e-8·(1 + |best|)`.
pub fn default_value_tol(best: f64) -> f64 {
    1e-8 * (1.0 + best.abs())
}

/// Default distance threshold `1e-3·LT`.
pub fn default_dist_tol(inst: &ProblemInstance) -> f64 {
    1e-3 * inst.lt()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn assemble(results: &[Minimum], uf: &mut UnionFind, value_tol: f64) -> Vec<Cluster> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; results.len()];
    for i in 0..results.len() {
        let r = uf.find(i);
        match root_slot[r] {
            Some(s) => groups[s].push(i),
            None => {
                root_slot[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    let overall = results.iter().map(Minimum::total).fold(f64::INFINITY, f64::min);
    let mut clusters: Vec<Cluster> = groups
        .into_iter()
        .map(|mut members| {
            members.sort_by(|&a, &b| results[a].total().total_cmp(&results[b].total()).then(a.cmp(&b)));
            let best_energy = results[members[0]].total();
            Cluster { members, best_energy, global: best_energy <= overall + value_tol }
        })
        .collect();
    clusters.sort_by(|a, b| a.best_energy.total_cmp(&b.best_energy).then(a.members[0].cmp(&b.members[0])));
    clusters
}

/// Single-linkage clustering under [`path::path_distance`]; a cluster is
/// global when its best value is within `value_tol` of the overall best.
pub fn cluster_minima(results: &[Minimum], value_tol: f64, dist_tol: f64) -> Result<Vec<Cluster>> {
    if results.is_empty() {
        return Err(Error::InvalidParameter("nothing to cluster".into()));
    }
    let mut uf = UnionFind((0..results.len()).collect());
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            if path::path_distance(&results[i].path, &results[j].path)? <= dist_tol {
                uf.union(i, j);
            }
        }
    }
    Ok(assemble(results, &mut uf, value_tol))
}

/// Largest energy along the straight segment between two paths (sampled
/// at nine interior points), which stays inside the convex feasible set.
pub fn segment_barrier(inst: &ProblemInstance, lambda: f64, a: &PeriodicPath, b: &PeriodicPath) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for i in 1..10 {
        let s = i as f64 / 10.0;
        let nodes = a.nodes().iter().zip(b.nodes()).map(|(x, y)| (1.0 - s) * x + s * y).collect();
        let p = PeriodicPath::from_nodes(nodes, a.dim(), a.period())?;
        worst = worst.max(functional::eval_energy(inst, &p)?.total(lambda));
    }
    Ok(worst)
}

/// Joins global clusters whose representatives are not separated by an
/// energy barrier above `value_tol`: such pairs are one flat basin that the
/// first-order solver stopped in at two places.
pub fn merge_barrierless(
    inst: &ProblemInstance,
    lambda: f64,
    results: &[Minimum],
    clusters: Vec<Cluster>,
    value_tol: f64,
) -> Result<Vec<Cluster>> {
    let mut uf = UnionFind((0..results.len()).collect());
    for c in &clusters {
        for &m in &c.members[1..] {
            uf.union(c.members[0], m);
        }
    }
    let global: Vec<usize> = clusters.iter().filter(|c| c.global).map(Cluster::representative).collect();
    for (i, &a) in global.iter().enumerate() {
        for &b in &global[i + 1..] {
            let (pa, pb) = (&results[a], &results[b]);
            if pa.path.len() != pb.path.len() {
                continue;
            }
            let barrier = segment_barrier(inst, lambda, &pa.path, &pb.path)?;
            if barrier <= pa.total().max(pb.total()) + value_tol {
                uf.union(a, b);
            }
        }
    }
    Ok(assemble(results, &mut uf, value_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, PresetParams};

    fn inst(name: &str) -> ProblemInstance {
        preset(name, &PresetParams::default()).unwrap()
    }

    #[test]
    fn cyclic_solver_inverts_the_metric() {
        let n = 9;
        let (diag, off) = (3.5, -1.25);
        let s = CyclicTridiagonal::new(n, diag, off);
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut x = vec![0.0; n];
        s.solve(&rhs, &mut x);
        for i in 0..n {
            let ax = diag * x[i] + off * x[(i + 1) % n] + off * x[(i + n - 1) % n];
            assert!((ax - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn example_32_converges_to_rest() {
        let ex2 = inst("example-3.2");
        let opts = MinimizeOptions { grid_n: 64, ..Default::default() };
        let start = path::random_feasible(64, 1.0, 1.0, &[0.7], 0.3, 3).unwrap();
        let m = minimize(&ex2, 2.0, &start, &opts).unwrap();
        assert!(m.converged, "{:?} {}", m.stop, m.projected_grad_norm);
        assert!(m.path.sup_norm() < 1e-7);
        assert!((m.total() + 1.0).abs() < 1e-8);
    }

    #[test]
    fn example_31_converges_to_shifted_constant() {
        let ex1 = inst("example-3.1");
        let opts = MinimizeOptions::default();
        let start = path::random_feasible(64, 1.0, 1.0, &[0.5], 0.2, 8).unwrap();
        let m = minimize(&ex1, 1.0, &start, &opts).unwrap();
        assert!(m.converged);
        let target = PeriodicPath::constant(&[-1.0], 64, 1.0).unwrap();
        assert!(path::path_distance(&m.path, &target).unwrap() < 1e-7);
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let ex1 = inst("example-3.1");
        let start = PeriodicPath::constant(&[-2.0], 32, 1.0).unwrap();
        let m = minimize(&ex1, 2.0, &start, &MinimizeOptions::default()).unwrap();
        assert!(m.converged);
        assert!(m.iterations <= 1);
    }

    #[test]
    fn energy_trace_is_monotone() {
        let two = inst("two-minima-symmetric");
        let opts = MinimizeOptions { record_trace: true, ..Default::default() };
        let start = path::random_feasible(64, 1.0, 1.0, &[0.9], 0.4, 21).unwrap();
        let m = minimize(&two, 1.5, &start, &opts).unwrap();
        assert!(m.converged);
        for w in m.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-13 * (1.0 + w[0].energy.abs()), "{w:?}");
        }
    }

    #[test]
    fn clustering_rules() {
        let two = inst("two-minima-symmetric");
        let mk = |x: f64, lambda: f64| {
            let path = PeriodicPath::constant(&[x], 16, 1.0).unwrap();
            let energy = functional::eval_energy(&two, &path).unwrap();
            Minimum {
                path,
                energy,
                lambda,
                projected_grad_norm: 0.0,
                grad_tol: 1.0,
                iterations: 0,
                converged: true,
                stop: StopReason::Converged,
                start_index: 0,
                trace: vec![],
            }
        };
        let dup = vec![mk(0.3, 1.0), mk(0.3, 1.0)];
        assert_eq!(cluster_minima(&dup, 1e-8, 0.1).unwrap().len(), 1);
        let pair = vec![mk(0.5, 1.0), mk(-0.5, 1.0)];
        let c = cluster_minima(&pair, 1e-8, 0.1).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| c.global));
        let uneven = vec![mk(0.5, 1.0), mk(0.0, 1.0)];
        let c = cluster_minima(&uneven, 1e-8, 0.1).unwrap();
        assert_eq!(c.iter().filter(|c| c.global).count(), 1);
        assert_eq!(c[0].representative(), 1);
        assert!(cluster_minima(&[], 1e-8, 0.1).is_err());
    }
}
