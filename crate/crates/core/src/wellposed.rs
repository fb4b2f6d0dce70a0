//! Finite-dimensional laboratory for level-set minimization: `α`, `β`,
//! minimizers of `J` over `Ψ⁻¹(r)` by multiplier bisection, and probes of
//! continuity and well-posedness of `r ↦ x̂_r`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{self, dist, dot, norm};

/// Serde adapter writing infinite values as `"+inf"`/`"-inf"`.
pub mod ext_real {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("+inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "+inf" => Ok(f64::INFINITY),
            Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Text(t) => Err(de::Error::custom(format!("not an extended real: {t}"))),
        }
    }
}

/// `J` and `Ψ` on `Rᵐ` with the multiplier interval `]a, b[` and the box
/// `[−B, B]ᵐ` used for searches.
pub trait ScalarizedProblem: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn j(&self, x: &[f64]) -> f64;
    fn grad_j(&self, x: &[f64]) -> Vec<f64>;
    fn psi(&self, x: &[f64]) -> f64;
    fn grad_psi(&self, x: &[f64]) -> Vec<f64>;
    fn a(&self) -> f64;
    fn b(&self) -> f64;
    fn box_half_width(&self) -> f64;
}

/// Built-in instances with `Ψ = |x|²`, `a = 0`, `b = +∞` in `R²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabProblem {
    /// `J = x₁`
    Quadratic,
    /// `J = −x₁²`, two antipodal level minimizers.
    SymmetricControl,
    /// `J = x₁ − x₂/2 + x₂⁴/4`
    Convex,
    /// `J = Ψ = |x|²`
    SelfLevel,
}

impl LabProblem {
    pub const ALL: [LabProblem; 4] =
        [LabProblem::Quadratic, LabProblem::SymmetricControl, LabProblem::Convex, LabProblem::SelfLevel];

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown lab instance {name:?}")))
    }
}

impl ScalarizedProblem for LabProblem {
    fn name(&self) -> &str {
        match self {
            LabProblem::Quadratic => "quadratic",
            LabProblem::SymmetricControl => "symmetric-control",
            LabProblem::Convex => "convex",
            LabProblem::SelfLevel => "self-level",
        }
    }

    fn dim(&self) -> usize {
        2
    }

    fn j(&self, x: &[f64]) -> f64 {
        match self {
            LabProblem::Quadratic => x[0],
            LabProblem::SymmetricControl => -x[0] * x[0],
            LabProblem::Convex => x[0] - 0.5 * x[1] + 0.25 * x[1].powi(4),
            LabProblem::SelfLevel => dot(x, x),
        }
    }

    fn grad_j(&self, x: &[f64]) -> Vec<f64> {
        match self {
            LabProblem::Quadratic => vec![1.0, 0.0],
            LabProblem::SymmetricControl => vec![-2.0 * x[0], 0.0],
            LabProblem::Convex => vec![1.0, -0.5 + x[1].powi(3)],
            LabProblem::SelfLevel => x.iter().map(|v| 2.0 * v).collect(),
        }
    }

    fn psi(&self, x: &[f64]) -> f64 {
        dot(x, x)
    }

    fn grad_psi(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| 2.0 * v).collect()
    }

    fn a(&self) -> f64 {
        0.0
    }

    fn b(&self) -> f64 {
        f64::INFINITY
    }

    fn box_half_width(&self) -> f64 {
        1e3
    }
}

/// Sampled invariant failures: `a < b` and gradients against central
/// differences.
pub fn check_problem<P: ScalarizedProblem + ?Sized>(prob: &P, seed: u64) -> Vec<String> {
    let mut rng = sampling::rng(seed);
    let m = prob.dim();
    let mut failures = Vec::new();
    if !(prob.a() < prob.b()) {
        failures.push(format!("a = {} is not below b = {}", prob.a(), prob.b()));
    }
    let fd_check = |label: &str, f: &dyn Fn(&[f64]) -> f64, x: &[f64], g: &[f64], failures: &mut Vec<String>| {
        let e = 1e-6;
        for i in 0..m {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += e;
            xm[i] -= e;
            let fd = (f(&xp) - f(&xm)) / (2.0 * e);
            if (fd - g[i]).abs() > 1e-6 * (1.0 + g[i].abs()) {
                failures.push(format!("{label} gradient component {i} at {x:?}: {} vs {fd}", g[i]));
            }
        }
    };
    for _ in 0..100 {
        let x = sampling::random_in_ball(&mut rng, m, 3.0);
        fd_check("J", &|y| prob.j(y), &x, &prob.grad_j(&x), &mut failures);
        fd_check("Psi", &|y| prob.psi(y), &x, &prob.grad_psi(&x), &mut failures);
    }
    failures
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabOptions {
    pub starts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for LabOptions {
    fn default() -> Self {
        LabOptions { starts: 16, max_iter: 20_000, grad_tol: 1e-13, seed: 0 }
    }
}

/// Result of a box-constrained global search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    /// The minimizer sits on the box boundary: on `Rᵐ` the infimum is not
    /// attained (or lies outside the box).
    pub on_boundary: bool,
}

fn box_descent<F, G>(f: &F, grad: &G, x0: Vec<f64>, half: f64, opts: &LabOptions) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let clamp = |x: &mut Vec<f64>| x.iter_mut().for_each(|v| *v = v.clamp(-half, half));
    let mut x = x0;
    clamp(&mut x);
    let mut fx = f(&x);
    let mut g = grad(&x);
    let mut t = 1e-2;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for _ in 0..opts.max_iter {
        let mut pg: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
        clamp(&mut pg);
        let pgn = dist(&pg, &x);
        if pgn <= opts.grad_tol * (1.0 + norm(&x)) {
            break;
        }
        if let Some((xp, gp)) = &prev {
            let s: Vec<f64> = x.iter().zip(xp).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(gp).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            t = if sy > 0.0 { (dot(&s, &s) / sy).clamp(1e-12, 1e12) } else { (2.0 * t).min(1e12) };
        }
        let mut accepted = None;
        while t > 1e-20 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            clamp(&mut y);
            let fy = f(&y);
            let decrease = dot(&g, &x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
            if fy <= fx - 1e-4 * decrease && decrease > 0.0 {
                accepted = Some((y, fy));
                break;
            }
            t *= 0.5;
        }
        let Some((y, fy)) = accepted else { break };
        let gy = grad(&y);
        prev = Some((std::mem::replace(&mut x, y), std::mem::replace(&mut g, gy)));
        fx = fy;
    }
    (x, fx)
}

/// Multistart minimization of `f` over the problem's box.
pub fn box_minimize<P, F, G>(prob: &P, f: F, grad: G, opts: &LabOptions) -> BoxMinimum
where
    P: ScalarizedProblem + ?Sized,
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let half = prob.box_half_width();
    let m = prob.dim();
    let starts = std::iter::once(vec![0.0; m]).chain((1..opts.starts as u64).map(|i| {
        let u = sampling::halton_point(i, m);
        u.iter().map(|v| half * (2.0 * v - 1.0) * 0.5).collect::<Vec<f64>>()
    }));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        let (x, v) = box_descent(&f, &grad, s, half, opts);
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((x, v));
        }
    }
    let (x, value) = best.expect("at least one start");
    let on_boundary = x.iter().any(|v| v.abs() >= half * (1.0 - 1e-9));
    BoxMinimum { x, value, on_boundary }
}

/// Global minimizer of `J + λΨ` over the box.
pub fn scalarized_minimize<P: ScalarizedProblem + ?Sized>(prob: &P, lambda: f64, opts: &LabOptions) -> BoxMinimum {
    box_minimize(
        prob,
        |x| prob.j(x) + lambda * prob.psi(x),
        |x| prob.grad_j(x).iter().zip(prob.grad_psi(x)).map(|(a, b)| a + lambda * b).collect(),
        opts,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaBeta {
    #[serde(with = "ext_real")]
    pub alpha: f64,
    #[serde(with = "ext_real")]
    pub beta: f64,
    #[serde(with = "ext_real")]
    pub inf_psi: f64,
    #[serde(with = "ext_real")]
    pub sup_psi: f64,
    pub m_a_witness: Option<Vec<f64>>,
    pub m_b_witness: Option<Vec<f64>>,
    pub starts: usize,
}

fn endpoint_minimizer<P: ScalarizedProblem + ?Sized>(prob: &P, end: f64, opts: &LabOptions) -> Option<Vec<f64>> {
    if !end.is_finite() {
        return None;
    }
    let m = scalarized_minimize(prob, end, opts);
    (!m.on_boundary).then_some(m.x)
}

/// `α = max{inf Ψ, sup_{M_b} Ψ}`, `β = min{sup Ψ, inf_{M_a} Ψ}` with
/// `inf ∅ = +∞`, `sup ∅ = −∞`; a box-boundary extremum counts as infinite.
pub fn alpha_beta<P: ScalarizedProblem + ?Sized>(prob: &P, opts: &LabOptions) -> AlphaBeta {
    let lo = box_minimize(prob, |x| prob.psi(x), |x| prob.grad_psi(x), opts);
    let hi = box_minimize(prob, |x| -prob.psi(x), |x| prob.grad_psi(x).iter().map(|v| -v).collect(), opts);
    let inf_psi = if lo.on_boundary { f64::NEG_INFINITY } else { lo.value };
    let sup_psi = if hi.on_boundary { f64::INFINITY } else { -hi.value };
    let m_a = endpoint_minimizer(prob, prob.a(), opts);
    let m_b = endpoint_minimizer(prob, prob.b(), opts);
    let inf_ma = m_a.as_ref().map_or(f64::INFINITY, |x| prob.psi(x));
    let sup_mb = m_b.as_ref().map_or(f64::NEG_INFINITY, |x| prob.psi(x));
    AlphaBeta {
        alpha: inf_psi.max(sup_mb),
        beta: sup_psi.min(inf_ma),
        inf_psi,
        sup_psi,
        m_a_witness: m_a,
        m_b_witness: m_b,
        starts: opts.starts,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum LevelOutcome {
    Solved { x: Vec<f64>, lambda: f64, psi: f64, j: f64, bisections: usize },
    /// `Ψ(x̂_λ)` jumps across `r` between two arbitrarily close multipliers.
    Stall { lambda_lo: f64, x_lo: Vec<f64>, lambda_hi: f64, x_hi: Vec<f64> },
}

/// Minimizes `J` on `Ψ⁻¹(r)` by bisection on the multiplier `λ ∈ ]a, b[`.
pub fn level_minimize<P: ScalarizedProblem + ?Sized>(prob: &P, r: f64, opts: &LabOptions) -> Result<LevelOutcome> {
    let ab = alpha_beta(prob, opts);
    if !(ab.alpha < r && r < ab.beta) {
        return Err(Error::Precondition(format!("level {r} outside ]alpha, beta[ = ]{}, {}[", ab.alpha, ab.beta)));
    }
    level_minimize_unchecked(prob, r, opts)
}

fn level_minimize_unchecked<P: ScalarizedProblem + ?Sized>(prob: &P, r: f64, opts: &LabOptions) -> Result<LevelOutcome> {
    let tol = 1e-8 * (1.0 + r.abs());
    let (a, b) = (prob.a(), prob.b());
    let psi_at = |l: f64| {
        let m = scalarized_minimize(prob, l, opts);
        (prob.psi(&m.x), m.x)
    };
    let mut hi = if b.is_finite() { b } else { a.max(0.0) + 1.0 };
    if !b.is_finite() {
        let mut guard = 0;
        while psi_at(hi).0 > r {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::Precondition("no multiplier brings the level below r".into()));
            }
        }
    }
    let mut lo = if a.is_finite() { a + 0.5 * (hi - a) } else { hi - 1.0 };
    let mut guard = 0;
    while psi_at(lo).0 < r {
        hi = lo;
        lo = if a.is_finite() { a + 0.5 * (lo - a) } else { lo - 2.0 * (hi - lo).max(1.0) };
        guard += 1;
        if guard > 200 {
            return Err(Error::Precondition("no multiplier brings the level above r".into()));
        }
    }
    let (mut psi_lo, mut x_lo) = psi_at(lo);
    let (mut psi_hi, mut x_hi) = psi_at(hi);
    let mut bisections = 0;
    loop {
        for (psi, x, l) in [(psi_lo, &x_lo, lo), (psi_hi, &x_hi, hi)] {
            if (psi - r).abs() <= tol {
                return Ok(LevelOutcome::Solved { x: x.clone(), lambda: l, psi, j: prob.j(x), bisections });
            }
        }
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) || bisections > 400 {
            return Ok(LevelOutcome::Stall { lambda_lo: lo, x_lo, lambda_hi: hi, x_hi });
        }
        let mid = 0.5 * (lo + hi);
        let (psi, x) = psi_at(mid);
        if psi >= r {
            (lo, psi_lo, x_lo) = (mid, psi, x);
        } else {
            (hi, psi_hi, x_hi) = (mid, psi, x);
        }
        bisections += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub r: f64,
    pub outcome: LevelOutcome,
    /// `|x̂_{r_i} − x̂_{r_{i−1}}| / |r_i − r_{i−1}|` (absent for the first row).
    pub x_ratio: Option<f64>,
    pub j_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityTable {
    pub rows: Vec<ContinuityRow>,
    pub max_x_ratio: f64,
    pub max_j_ratio: f64,
    pub discontinuity: bool,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return f64::NAN;
    }
    s[s.len() / 2]
}

/// Level minimization along `r_grid` with successive jump ratios; a ratio
/// above `10³×` the median, or a stall, is discontinuity evidence.
pub fn continuity_probe<P: ScalarizedProblem + ?Sized>(prob: &P, r_grid: &[f64], opts: &LabOptions) -> Result<ContinuityTable> {
    if r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("level grid must be increasing".into()));
    }
    let ab = alpha_beta(prob, opts);
    if let Some(r) = r_grid.iter().find(|r| !(ab.alpha < **r && **r < ab.beta)) {
        return Err(Error::Precondition(format!("level {r} outside ]{}, {}[", ab.alpha, ab.beta)));
    }
    let mut rows: Vec<ContinuityRow> = Vec::new();
    let mut stalled = false;
    for &r in r_grid {
        let outcome = level_minimize_unchecked(prob, r, opts)?;
        let (mut x_ratio, mut j_ratio) = (None, None);
        if let (Some(prev), LevelOutcome::Solved { x, j, .. }) = (rows.last(), &outcome) {
            if let LevelOutcome::Solved { x: xp, j: jp, .. } = &prev.outcome {
                let dr = r - prev.r;
                x_ratio = Some(dist(x, xp) / dr);
                j_ratio = Some((j - jp).abs() / dr);
            }
        }
        stalled |= matches!(outcome, LevelOutcome::Stall { .. });
        rows.push(ContinuityRow { r, outcome, x_ratio, j_ratio });
    }
    let xr: Vec<f64> = rows.iter().filter_map(|r| r.x_ratio).collect();
    let jr: Vec<f64> = rows.iter().filter_map(|r| r.j_ratio).collect();
    let max_x_ratio = xr.iter().cloned().fold(0.0, f64::max);
    let max_j_ratio = jr.iter().cloned().fold(0.0, f64::max);
    let jumps = |v: &[f64]| {
        let m = median(v);
        v.iter().any(|x| *x > 1e3 * m.max(f64::MIN_POSITIVE))
    };
    Ok(ContinuityTable { rows, max_x_ratio, max_j_ratio, discontinuity: stalled || jumps(&xr) || jumps(&jr) })
}

fn level_project<P: ScalarizedProblem + ?Sized>(prob: &P, r: f64, x: &mut [f64]) -> bool {
    for _ in 0..100 {
        let e = prob.psi(x) - r;
        if e.abs() <= 1e-14 * (1.0 + r.abs()) {
            return true;
        }
        let n = prob.grad_psi(x);
        let nn = dot(&n, &n);
        if nn == 0.0 {
            return false;
        }
        for (xi, ni) in x.iter_mut().zip(&n) {
            *xi -= e * ni / nn;
        }
    }
    false
}

/// Projected (Riemannian) gradient descent for `J` on `Ψ⁻¹(r)`; returns
/// the iterates.
fn level_descent<P: ScalarizedProblem + ?Sized>(prob: &P, r: f64, x0: Vec<f64>, max_iter: usize) -> Vec<Vec<f64>> {
    let mut x = x0;
    level_project(prob, r, &mut x);
    let mut iterates = vec![x.clone()];
    let mut t = 1e-2;
    for _ in 0..max_iter {
        let g = prob.grad_j(&x);
        let n = prob.grad_psi(&x);
        let nn = dot(&n, &n).max(f64::MIN_POSITIVE);
        let c = dot(&g, &n) / nn;
        let tg: Vec<f64> = g.iter().zip(&n).map(|(a, b)| a - c * b).collect();
        let tn = norm(&tg);
        if tn <= 1e-12 {
            break;
        }
        let fx = prob.j(&x);
        let mut moved = false;
        while t > 1e-18 {
            let mut y: Vec<f64> = x.iter().zip(&tg).map(|(a, b)| a - t * b).collect();
            if level_project(prob, r, &mut y) && prob.j(&y) <= fx - 1e-4 * t * tn * tn {
                x = y;
                t *= 2.0;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
        iterates.push(x.clone());
    }
    iterates
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellposednessReport {
    pub r: f64,
    pub x_hat: Vec<f64>,
    pub j_hat: f64,
    pub eps: Vec<f64>,
    /// Largest distance to `x̂` among the first `ε`-optimal iterates.
    pub max_distance: Vec<f64>,
    pub mean_distance: Vec<f64>,
    pub well_posed: bool,
}

/// Near-optimal points of `J` on `Ψ⁻¹(r)` from random starts, and their
/// distances to the best level minimizer for `ε = 10⁻², …, 10⁻⁶`.
pub fn wellposedness_probe<P: ScalarizedProblem + ?Sized>(prob: &P, r: f64, trial_count: usize, seed: u64) -> Result<WellposednessReport> {
    if trial_count == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    let m = prob.dim();
    let mut rng = sampling::rng(seed);
    let starts: Vec<Vec<f64>> = (0..trial_count.max(8)).map(|_| sampling::random_unit(&mut rng, m)).collect();
    let runs: Vec<Vec<Vec<f64>>> = starts.iter().map(|s| level_descent(prob, r, s.clone(), 10_000)).collect();
    let (x_hat, j_hat) = runs
        .iter()
        .map(|it| it.last().expect("non-empty"))
        .map(|x| (x.clone(), prob.j(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let eps: Vec<f64> = (2..=6).map(|k| 10f64.powi(-k)).collect();
    let mut max_distance = Vec::new();
    let mut mean_distance = Vec::new();
    for &e in &eps {
        let d: Vec<f64> = runs
            .iter()
            .take(trial_count)
            .map(|it| {
                it.iter()
                    .find(|x| prob.j(x) <= j_hat + e)
                    .map_or(f64::INFINITY, |x| dist(x, &x_hat))
            })
            .collect();
        max_distance.push(d.iter().cloned().fold(0.0, f64::max));
        mean_distance.push(d.iter().sum::<f64>() / d.len() as f64);
    }
    let monotone = max_distance.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let shrinking = max_distance.last().copied().unwrap_or(f64::INFINITY) < 0.5 * max_distance[0];
    Ok(WellposednessReport { r, x_hat, j_hat, eps, max_distance, mean_distance, well_posed: monotone && shrinking })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_reals_roundtrip() {
        let ab = AlphaBeta {
            alpha: 0.0,
            beta: f64::INFINITY,
            inf_psi: 0.0,
            sup_psi: f64::INFINITY,
            m_a_witness: None,
            m_b_witness: None,
            starts: 1,
        };
        let s = serde_json::to_string(&ab).unwrap();
        assert!(s.contains("\"+inf\""));
        assert_eq!(serde_json::from_str::<AlphaBeta>(&s).unwrap(), ab);
    }

    #[test]
    fn lab_gradients_match() {
        for p in LabProblem::ALL {
            assert!(check_problem(&p, 1).is_empty(), "{}", p.name());
        }
    }

    #[test]
    fn alpha_beta_cases() {
        let opts = LabOptions::default();
        let q = alpha_beta(&LabProblem::Quadratic, &opts);
        assert!(q.alpha.abs() <= 1e-9);
        assert_eq!(q.beta, f64::INFINITY);
        assert!(q.m_a_witness.is_none());
        let s = alpha_beta(&LabProblem::SelfLevel, &opts);
        assert!(s.beta.abs() <= 1e-12);
        assert!(s.alpha <= s.beta);
    }

    #[test]
    fn level_minimize_quadratic() {
        let opts = LabOptions::default();
        for (r, x0, l) in [(1.0, -1.0, 0.5), (0.25, -0.5, 1.0)] {
            match level_minimize(&LabProblem::Quadratic, r, &opts).unwrap() {
                LevelOutcome::Solved { x, lambda, .. } => {
                    assert!((x[0] - x0).abs() < 1e-6 && x[1].abs() < 1e-6, "{x:?}");
                    assert!((lambda - l).abs() < 1e-6);
                }
                other => panic!("{other:?}"),
            }
        }
        assert!(level_minimize(&LabProblem::Quadratic, -1.0, &opts).is_err());
    }

    #[test]
    fn symmetric_control_stalls_and_is_not_well_posed() {
        let opts = LabOptions::default();
        assert!(matches!(level_minimize(&LabProblem::SymmetricControl, 1.0, &opts).unwrap(), LevelOutcome::Stall { .. }));
        let rep = wellposedness_probe(&LabProblem::SymmetricControl, 1.0, 16, 3).unwrap();
        assert!(!rep.well_posed, "{rep:?}");
        let rep = wellposedness_probe(&LabProblem::Quadratic, 1.0, 16, 3).unwrap();
        assert!(rep.well_posed, "{rep:?}");
    }

    #[test]
    fn continuity_single_point() {
        let t = continuity_probe(&LabProblem::Quadratic, &[1.0], &LabOptions::default()).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].x_ratio.is_none());
    }
}
