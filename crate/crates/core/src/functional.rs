//! Discrete action `I_λ(u) = ∫Φ(u') + ∫F(t,u) + λ∫ψG(u)`, its gradient,
//! and the explicit coercivity and sub-level bounds.
//!
//! The kinetic term is exact for piecewise-linear paths; the potential and
//! perturbation terms use the periodic rectangle rule at the nodes, so the
//! gradient is the standard discrete φ-Laplacian stencil.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::path::PeriodicPath;
use crate::sampling::norm;

/// The three parts of the action of one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `∫Φ(u')`
    pub kinetic: f64,
    /// `∫F(t,u)`
    pub potential: f64,
    /// `∫ψG(u)`
    pub perturbation: f64,
}

impl EnergyBreakdown {
    /// `Ψ = kinetic + potential`
    pub fn psi(&self) -> f64 {
        self.kinetic + self.potential
    }

    /// `J = ∫ψG(u)`
    pub fn j(&self) -> f64 {
        self.perturbation
    }

    /// `I_λ = Ψ + λJ`
    pub fn total(&self, lambda: f64) -> f64 {
        self.kinetic + self.potential + lambda * self.perturbation
    }

    pub fn record(&self, lambda: f64) -> EnergyRecord {
        EnergyRecord {
            kinetic: self.kinetic,
            potential: self.potential,
            perturbation: self.perturbation,
            psi: self.psi(),
            j: self.j(),
            lambda,
            total: self.total(lambda),
        }
    }
}

/// Flat serialized form of an [`EnergyBreakdown`] at a given `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub kinetic: f64,
    pub potential: f64,
    pub perturbation: f64,
    pub psi: f64,
    pub j: f64,
    pub lambda: f64,
    pub total: f64,
}

fn check_instance(inst: &ProblemInstance, p: &PeriodicPath) -> Result<()> {
    if p.dim() != inst.dim {
        return Err(Error::DimensionMismatch { expected: inst.dim, got: p.dim() });
    }
    if (p.period() - inst.period).abs() > 1e-12 * inst.period {
        return Err(Error::PeriodMismatch(inst.period, p.period()));
    }
    Ok(())
}

fn check_interior(inst: &ProblemInstance, p: &PeriodicPath) -> Result<()> {
    let h = p.step();
    let limit = inst.kinetic.speed_limit();
    for k in 0..p.len() {
        let speed = norm(&p.increment(k)) / h;
        if !(speed < limit) {
            return Err(Error::Infeasible { segment: k, speed, limit });
        }
    }
    Ok(())
}

/// Evaluates the three parts of the action.
pub fn eval_energy(inst: &ProblemInstance, p: &PeriodicPath) -> Result<EnergyBreakdown> {
    check_instance(inst, p)?;
    check_interior(inst, p)?;
    let h = p.step();
    let mut e = EnergyBreakdown { kinetic: 0.0, potential: 0.0, perturbation: 0.0 };
    let mut v = vec![0.0; p.dim()];
    for k in 0..p.len() {
        let t = p.time(k);
        let (a, b) = (p.node(k), p.node(k + 1));
        for i in 0..v.len() {
            v[i] = (b[i] - a[i]) / h;
        }
        e.kinetic += h * inst.kinetic.lagrangian(&v);
        e.potential += h * inst.potential.value(t, a);
        e.perturbation += h * inst.weight_at(t) * inst.perturbation.value(a);
    }
    Ok(e)
}

/// Node gradient of `I_λ`:
/// `g_k = φ(d_{k−1}/h) − φ(d_k/h) + h·[∇F(t_k,u_k) + λψ(t_k)∇G(u_k)]`.
pub fn gradient(inst: &ProblemInstance, p: &PeriodicPath, lambda: f64) -> Result<Vec<f64>> {
    check_instance(inst, p)?;
    check_interior(inst, p)?;
    let mut g = vec![0.0; p.nodes().len()];
    let mut eval = Evaluator::new(inst, p.len(), lambda);
    eval.energy_and_gradient(p.nodes(), &mut g);
    Ok(g)
}

/// Reusable buffers for evaluating `I_λ` and its gradient on raw node data
/// of a fixed grid. Callers guarantee interior feasibility.
pub(crate) struct Evaluator<'a> {
    inst: &'a ProblemInstance,
    lambda: f64,
    n: usize,
    h: f64,
    momenta: Vec<f64>,
    v: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(inst: &'a ProblemInstance, n: usize, lambda: f64) -> Self {
        Evaluator {
            inst,
            lambda,
            n,
            h: inst.period / n as f64,
            momenta: vec![0.0; n * inst.dim],
            v: vec![0.0; inst.dim],
        }
    }

    /// Returns `(I_λ, Σ|terms|)`; the second value scales rounding noise.
    pub(crate) fn energy(&mut self, nodes: &[f64]) -> (f64, f64) {
        let dim = self.inst.dim;
        let (h, n) = (self.h, self.n);
        let mut total = 0.0;
        let mut magnitude = 0.0;
        for k in 0..n {
            let next = (k + 1) % n;
            let a = &nodes[k * dim..(k + 1) * dim];
            for i in 0..dim {
                self.v[i] = (nodes[next * dim + i] - a[i]) / h;
            }
            let t = k as f64 * h;
            let kin = h * self.inst.kinetic.lagrangian(&self.v);
            let pot = h * self.inst.potential.value(t, a);
            let pert = h * self.lambda * self.inst.weight_at(t) * self.inst.perturbation.value(a);
            total += kin + pot + pert;
            magnitude += kin.abs() + pot.abs() + pert.abs();
        }
        (total, magnitude)
    }

    pub(crate) fn energy_and_gradient(&mut self, nodes: &[f64], grad: &mut [f64]) -> (f64, f64) {
        let dim = self.inst.dim;
        let (h, n) = (self.h, self.n);
        for k in 0..n {
            let next = (k + 1) % n;
            for i in 0..dim {
                self.v[i] = (nodes[next * dim + i] - nodes[k * dim + i]) / h;
            }
            let (v, m) = (&self.v, &mut self.momenta[k * dim..(k + 1) * dim]);
            self.inst.kinetic.momentum(v, m);
        }
        for k in 0..n {
            let prev = (k + n - 1) % n;
            let t = k as f64 * h;
            let a = &nodes[k * dim..(k + 1) * dim];
            let gk = &mut grad[k * dim..(k + 1) * dim];
            for i in 0..dim {
                gk[i] = self.momenta[prev * dim + i] - self.momenta[k * dim + i];
            }
            self.inst.potential.add_gradient(t, a, h, gk);
            let w = self.inst.weight_at(t);
            if self.lambda != 0.0 && w != 0.0 {
                self.inst.perturbation.add_gradient(a, h * self.lambda * w, gk);
            }
        }
        self.energy(nodes)
    }

    /// Discrete Euler–Lagrange residual
    /// `r_k = [φ(d_k/h) − φ(d_{k−1}/h)]/h − ∇F(t_k,u_k) − λψ(t_k)∇G(u_k)`.
    pub(crate) fn residual(&mut self, nodes: &[f64], out: &mut [f64]) {
        let dim = self.inst.dim;
        let (h, n) = (self.h, self.n);
        for k in 0..n {
            let next = (k + 1) % n;
            for i in 0..dim {
                self.v[i] = (nodes[next * dim + i] - nodes[k * dim + i]) / h;
            }
            let (v, m) = (&self.v, &mut self.momenta[k * dim..(k + 1) * dim]);
            self.inst.kinetic.momentum(v, m);
        }
        for k in 0..n {
            let prev = (k + n - 1) % n;
            let t = k as f64 * h;
            let a = &nodes[k * dim..(k + 1) * dim];
            let rk = &mut out[k * dim..(k + 1) * dim];
            for i in 0..dim {
                rk[i] = (self.momenta[k * dim + i] - self.momenta[prev * dim + i]) / h;
            }
            self.inst.potential.add_gradient(t, a, -1.0, rk);
            let w = self.inst.weight_at(t);
            if self.lambda != 0.0 && w != 0.0 {
                self.inst.perturbation.add_gradient(a, -self.lambda * w, rk);
            }
        }
    }
}

/// Lower bound for `J(u) + λΨ(u)` over feasible paths with `max_k|u_k| = S`:
/// `−δ(∫ψ)S + λTγ(max(0, S − LT)) − δ∫ψ + λΦ(0)T`.
pub fn coercivity_lower_bound(inst: &ProblemInstance, lambda: f64, sup_norm: f64) -> Result<f64> {
    let delta = inst
        .perturbation
        .delta
        .ok_or_else(|| Error::Precondition("the coercivity bound needs a declared delta".into()))?;
    if !(lambda > 0.0) || !(sup_norm >= 0.0) {
        return Err(Error::InvalidParameter("coercivity bound needs lambda > 0 and S >= 0".into()));
    }
    let psi = inst.weight_integral();
    let t = inst.period;
    let arg = (sup_norm - inst.lt()).max(0.0);
    Ok(-delta * psi * sup_norm + lambda * t * inst.growth.value(arg) - delta * psi + lambda * inst.rest_action())
}

/// Radius containing every feasible path with `Ψ(u) ≤ r`:
/// `LT + γ⁻¹((r − Φ(0)T)/T)`.
pub fn sublevel_radius(inst: &ProblemInstance, level: f64) -> Result<f64> {
    let t = inst.period;
    let floor = inst.rest_action() + t * inst.growth.value(0.0);
    if !(level >= floor) {
        return Err(Error::Precondition(format!("sub-level {level} is below the floor {floor}: empty set")));
    }
    Ok(inst.lt() + inst.growth.inverse((level - inst.rest_action()) / t)?)
}

/// Radius outside which `I_λ = Ψ + λJ` exceeds `level`, derived from the
/// coercivity bound applied to `J + (1/λ)Ψ`. For `λ = 0` this is the
/// sub-level radius of `Ψ`.
pub fn action_sublevel_radius(inst: &ProblemInstance, lambda: f64, level: f64) -> Result<f64> {
    if lambda == 0.0 {
        return sublevel_radius(inst, level);
    }
    let mu = 1.0 / lambda;
    let bound = |s: f64| coercivity_lower_bound(inst, mu, s).map(|b| lambda * b);
    let mut hi = inst.lt().max(1.0);
    let mut guard = 0;
    // beyond LT the bound is convex, so once it is above the level and rising it stays there
    while !(bound(hi)? > level && bound(2.0 * hi)? > bound(hi)?) {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Precondition("no finite sub-level radius found".into()));
        }
    }
    let mut lo = inst.lt();
    if bound(lo)? > level {
        return Ok(lo);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if bound(mid)? > level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, PresetParams};

    fn inst(name: &str) -> ProblemInstance {
        preset(name, &PresetParams::default()).unwrap()
    }

    #[test]
    fn constant_path_energies() {
        let two = inst("two-minima-symmetric");
        for n in [4, 16, 64] {
            let e = eval_energy(&two, &PeriodicPath::constant(&[1.0], n, 1.0).unwrap()).unwrap();
            assert!((e.kinetic + 1.0).abs() < 1e-14);
            assert!((e.potential - 0.5).abs() < 1e-14);
            assert!((e.perturbation - 0.28125).abs() < 1e-14);
            assert_eq!(e.total(0.0), e.psi());
        }
        let ex2 = inst("example-3.2");
        let e = eval_energy(&ex2, &PeriodicPath::constant(&[0.0], 32, 1.0).unwrap()).unwrap();
        assert_eq!(e.psi(), -1.0);
        assert_eq!(e.j(), 0.0);
        let ex3 = inst("example-3.3");
        let e = eval_energy(&ex3, &PeriodicPath::constant(&[10.0], 32, 1.0).unwrap()).unwrap();
        assert!((e.total(1.0) + 413.0).abs() < 1e-10);
    }

    #[test]
    fn total_is_affine_in_lambda() {
        let two = inst("two-minima-symmetric");
        let p = crate::path::random_feasible(32, 1.0, 1.0, &[0.4], 0.3, 2).unwrap();
        let e = eval_energy(&two, &p).unwrap();
        let (a, b, c) = (e.total(-1.0), e.total(0.5), e.total(2.0));
        assert!(((b - a) / 1.5 - (c - b) / 1.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_segment_rejected() {
        let two = inst("two-minima-symmetric");
        let p = PeriodicPath::from_nodes(vec![0.0, 0.25, 0.0, 0.0], 1, 1.0).unwrap();
        assert!(matches!(eval_energy(&two, &p), Err(Error::Infeasible { segment: 0, .. })));
        assert!(gradient(&two, &p, 1.0).is_err());
    }

    #[test]
    fn gradient_vanishes_on_constant_critical_points() {
        let ex1 = inst("example-3.1");
        for lambda in [0.5, 1.0, 2.0] {
            let p = PeriodicPath::constant(&[-lambda], 16, 1.0).unwrap();
            let g = gradient(&ex1, &p, lambda).unwrap();
            assert!(g.iter().all(|&x| x == 0.0), "{g:?}");
        }
        let ex2 = inst("example-3.2");
        let g = gradient(&ex2, &PeriodicPath::constant(&[0.0], 8, 1.0).unwrap(), 3.0).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coercivity_bound_value() {
        let two = inst("two-minima-symmetric");
        assert!((coercivity_lower_bound(&two, 1.0, 0.0).unwrap() + 2.1).abs() < 1e-14);
        // below LT the growth term is λTγ(0) = 0
        let a = coercivity_lower_bound(&two, 1.0, 0.5).unwrap();
        assert!((a - (-1.1 * 0.5 - 1.1 - 1.0)).abs() < 1e-14);
        let ex3 = inst("example-3.3");
        assert!(coercivity_lower_bound(&ex3, 1.0, 1.0).is_err());
    }

    #[test]
    fn sublevel_radius_values() {
        let two = inst("two-minima-symmetric");
        assert_eq!(sublevel_radius(&two, 0.125 - 1.0).unwrap(), 1.5);
        assert_eq!(sublevel_radius(&two, -1.0).unwrap(), 1.0);
        assert!(sublevel_radius(&two, -1.5).is_err());
    }

    #[test]
    fn action_radius_contains_better_paths() {
        let two = inst("two-minima-symmetric");
        let lambda = 3.0;
        let level = -0.5;
        let r = action_sublevel_radius(&two, lambda, level).unwrap();
        for x in [r * 1.01, r * 2.0, r * 10.0] {
            let p = PeriodicPath::constant(&[x], 8, 1.0).unwrap();
            assert!(eval_energy(&two, &p).unwrap().total(lambda) > level);
        }
    }
}
