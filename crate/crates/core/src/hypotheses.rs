//! Sampled checks of the structural hypotheses on `F` and `G`: the
//! superlinear lower bound (i1), the linear lower bound at infinity (i2),
//! non-attainment of `inf G` (i3), the two-point ball minimum (i4) and the
//! plateau condition (j1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Expr, ProblemInstance};
use crate::sampling::{self, dist, norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    VerifiedOnSamples,
    Falsified,
    /// Not finitely decidable; the instance author's declaration is reported.
    Declared,
}

/// A reproducible counterexample: `relation` was required but the observed
/// `lhs`/`rhs` violate it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub time: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub hypothesis: String,
    pub status: Status,
    pub declared_holds: Option<bool>,
    pub witness: Option<Witness>,
    pub detail: String,
}

impl Verdict {
    fn verified(hypothesis: &str, detail: String) -> Self {
        Verdict { hypothesis: hypothesis.into(), status: Status::VerifiedOnSamples, declared_holds: None, witness: None, detail }
    }

    fn falsified(hypothesis: &str, witness: Witness, detail: String) -> Self {
        Verdict {
            hypothesis: hypothesis.into(),
            status: Status::Falsified,
            declared_holds: None,
            witness: Some(witness),
            detail,
        }
    }

    fn declared(hypothesis: &str, holds: Option<bool>, detail: String) -> Self {
        Verdict { hypothesis: hypothesis.into(), status: Status::Declared, declared_holds: holds, witness: None, detail }
    }

    /// Falsified, or declared not to hold.
    pub fn violated(&self) -> bool {
        self.status == Status::Falsified || (self.status == Status::Declared && self.declared_holds == Some(false))
    }
}

/// Sample design for pointwise checks: radial grids along coordinate and
/// random directions, random draws in the ball, and a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub radius: f64,
    pub radial_points: usize,
    pub directions: usize,
    pub random_points: usize,
    pub times: usize,
    pub seed: u64,
}

impl SampleSpec {
    pub fn for_radius(radius: f64, seed: u64) -> Self {
        SampleSpec { radius, radial_points: 64, directions: 16, random_points: 2000, times: 16, seed }
    }

    fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        let mut rng = sampling::rng(self.seed);
        let dirs = directions(dim, self.directions, &mut rng);
        let mut pts = vec![vec![0.0; dim]];
        for d in &dirs {
            for i in 1..=self.radial_points {
                let r = self.radius * i as f64 / self.radial_points as f64;
                pts.push(d.iter().map(|x| r * x).collect());
            }
        }
        for _ in 0..self.random_points {
            pts.push(sampling::random_in_ball(&mut rng, dim, self.radius));
        }
        pts
    }
}

fn directions<R: rand::Rng>(dim: usize, extra: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            dirs.push(e);
        }
    }
    for _ in 0..extra {
        dirs.push(sampling::random_unit(rng, dim));
    }
    dirs
}

/// (i1): `γ(|x|) ≤ F(t,x)` on the samples.
pub fn check_i1(inst: &ProblemInstance, spec: &SampleSpec) -> Verdict {
    let times: Vec<f64> = if inst.potential.is_time_independent() {
        vec![0.0]
    } else {
        (0..spec.times.max(1)).map(|k| inst.period * k as f64 / spec.times.max(1) as f64).collect()
    };
    let mut worst: Option<Witness> = None;
    let mut count = 0usize;
    for x in spec.points(inst.dim) {
        for &t in &times {
            count += 1;
            let lhs = inst.growth.value(norm(&x));
            let rhs = inst.potential.value(t, &x);
            let excess = lhs - rhs;
            if excess > 1e-12 * (1.0 + rhs.abs()) && worst.as_ref().is_none_or(|w| excess > w.lhs - w.rhs) {
                worst = Some(Witness { point: x.clone(), time: Some(t), lhs, rhs, relation: "gamma(|x|) <= F(t,x)".into() });
            }
        }
    }
    match worst {
        Some(w) => {
            let detail = format!("gamma exceeds F by {:.3e} at |x| = {:.4}", w.lhs - w.rhs, norm(&w.point));
            Verdict::falsified("i1", w, detail)
        }
        None => Verdict::verified("i1", format!("{count} samples up to radius {}", spec.radius)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSchedule {
    pub radii: Vec<f64>,
    pub directions: usize,
    pub seed: u64,
}

impl RadiusSchedule {
    /// Doubling radii `10(LT + 1)·2^k`, `k = 0..12`.
    pub fn doubling(inst: &ProblemInstance, seed: u64) -> Self {
        let base = 10.0 * (inst.lt() + 1.0);
        RadiusSchedule { radii: (0..12).map(|k| base * 2f64.powi(k)).collect(), directions: 64, seed }
    }
}

/// (i2): `liminf G(x)/|x| > −∞`, by sphere minima of `G(x)/|x|` on growing
/// radii and a ratio test for superlinear decrease.
pub fn check_i2(inst: &ProblemInstance, schedule: &RadiusSchedule) -> Verdict {
    let g = &inst.perturbation.expr;
    if schedule.radii.is_empty() || schedule.radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Verdict::declared("i2", None, "radius schedule must be non-empty and increasing".into());
    }
    let mut rng = sampling::rng(schedule.seed);
    let dirs = directions(inst.dim, schedule.directions, &mut rng);
    let minima: Vec<(f64, Vec<f64>)> = schedule
        .radii
        .iter()
        .map(|&r| {
            dirs.iter()
                .map(|d| {
                    let x: Vec<f64> = d.iter().map(|v| r * v).collect();
                    (g.value(&x) / r, x)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap()
        })
        .collect();
    let q: Vec<f64> = minima.iter().map(|m| m.0).collect();
    let (q_last, x_last) = minima.last().cloned().unwrap();
    let tail = &q[q.len().saturating_sub(4)..];
    let superlinear = tail.len() >= 2
        && tail.iter().all(|v| *v < 0.0)
        && tail.windows(2).all(|w| w[1] / w[0] >= 1.5);
    let tol = 1e-9;
    let running_min = q.iter().cloned().fold(f64::INFINITY, f64::min);
    match inst.perturbation.delta {
        _ if superlinear => {
            let bound = -inst.perturbation.delta.unwrap_or(q[0].abs() + 1.0);
            let detail = format!("G(x)/|x| decreases superlinearly: sphere minima {:?}", short(tail));
            Verdict::falsified(
                "i2",
                Witness { point: x_last, time: None, lhs: bound, rhs: q_last, relation: "-delta <= G(x)/|x|".into() },
                detail,
            )
        }
        Some(delta) => {
            let idx = q.iter().position(|v| *v < -delta - tol);
            match idx {
                Some(i) => Verdict::falsified(
                    "i2",
                    Witness {
                        point: minima[i].1.clone(),
                        time: None,
                        lhs: -delta,
                        rhs: q[i],
                        relation: "-delta <= G(x)/|x|".into(),
                    },
                    format!("declared delta = {delta} is violated at radius {}", schedule.radii[i]),
                ),
                None => Verdict::verified(
                    "i2",
                    format!("G(x)/|x| >= {running_min:.6} >= -delta = {} on {} radii", -delta, q.len()),
                ),
            }
        }
        None => Verdict::verified(
            "i2",
            format!("no declared delta; observed G(x)/|x| >= {running_min:.6} without superlinear decrease"),
        ),
    }
}

fn short(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.4e}")).collect()
}

/// Minimum of `f` over the closed ball `B_radius` by quasi-random sampling
/// followed by projected gradient descent from the best `refine` samples.
/// `extra` points inside the ball join the sample set.
pub fn ball_minimize<F, G>(
    f: F,
    grad: G,
    dim: usize,
    radius: f64,
    budget: usize,
    refine: usize,
    extra: &[Vec<f64>],
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let project = |x: &mut Vec<f64>| {
        let n = norm(x);
        if n > radius {
            x.iter_mut().for_each(|v| *v *= radius / n);
        }
    };
    let mut samples: Vec<(f64, Vec<f64>)> = (1..=budget as u64)
        .map(|i| sampling::halton_ball(i, dim, radius))
        .chain(std::iter::once(vec![0.0; dim]))
        .chain(extra.iter().filter(|x| norm(x) <= radius).cloned())
        .map(|x| (f(&x), x))
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = samples[0].clone();
    for (mut fx, mut x) in samples.into_iter().take(refine.max(1)) {
        let mut step = 0.1 * radius.max(1e-3);
        for _ in 0..2000 {
            let g = grad(&x);
            let gn = norm(&g);
            if gn == 0.0 {
                break;
            }
            let mut moved = false;
            while step > 1e-16 * (1.0 + radius) {
                let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b / gn).collect();
                project(&mut y);
                let fy = f(&y);
                if fy < fx {
                    moved = dist(&x, &y) > 0.0;
                    x = y;
                    fx = fy;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if fx < best.0 {
            best = (fx, x);
        }
    }
    (best.1, best.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub radius: f64,
    pub samples: usize,
    pub escape_factors: Vec<f64>,
    pub directions: usize,
    pub seed: u64,
}

impl SearchSpec {
    pub fn default_for(inst: &ProblemInstance, seed: u64) -> Self {
        SearchSpec {
            radius: 2.0 * (inst.lt() + 1.0),
            samples: 2000 * inst.dim,
            escape_factors: vec![2.0, 4.0, 8.0, 16.0, 64.0],
            directions: 32,
            seed,
        }
    }
}

/// (i3): `G` has no global minimum. Evidence is a value outside `B_R` below
/// the refined minimum over `B_R`; otherwise the declaration is reported.
pub fn check_i3(inst: &ProblemInstance, spec: &SearchSpec) -> Verdict {
    let g = &inst.perturbation.expr;
    let (xm, m_r) = ball_minimize(|x| g.value(x), |x| g.gradient(x), inst.dim, spec.radius, spec.samples, 10, &[]);
    let mut rng = sampling::rng(spec.seed);
    let dirs = directions(inst.dim, spec.directions, &mut rng);
    let tol = 1e-9 * (1.0 + m_r.abs());
    for &f in &spec.escape_factors {
        for d in &dirs {
            let x: Vec<f64> = d.iter().map(|v| f * spec.radius * v).collect();
            let gx = g.value(&x);
            if gx < m_r - tol {
                return Verdict::verified(
                    "i3",
                    format!(
                        "G = {gx:.6e} at |x| = {:.3} is below min over B_{:.3} = {m_r:.6e} (attained near {:?})",
                        f * spec.radius,
                        spec.radius,
                        short(&xm)
                    ),
                );
            }
        }
    }
    let holds = inst.perturbation.no_global_min;
    let detail = match holds {
        Some(true) => format!("no escape below {m_r:.6e} found; author declares no global minimum"),
        Some(false) => format!("no escape below {m_r:.6e} found; author declares G attains its minimum"),
        None => format!("no escape below {m_r:.6e} found and no declaration"),
    };
    Verdict::declared("i3", holds, detail)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct I4Certificate {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub c: f64,
    pub inf_f_ball: f64,
    pub inf_f_radius: f64,
    pub f_at_points: (f64, f64),
    pub g_at_points: (f64, f64),
    pub inf_g_ball: f64,
    pub inf_g_point: Vec<f64>,
    pub strict_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub samples_per_dim: usize,
    pub refine: usize,
}

impl Default for BallSpec {
    fn default() -> Self {
        BallSpec { samples_per_dim: 10_000, refine: 10 }
    }
}

fn integral_f_gradient(inst: &ProblemInstance, x: &[f64]) -> Vec<f64> {
    let pot = &inst.potential;
    if pot.is_time_independent() {
        return pot.gradient(0.0, x).into_iter().map(|g| inst.period * g).collect();
    }
    let m = 512;
    let h = inst.period / m as f64;
    let mut out = vec![0.0; x.len()];
    for k in 0..m {
        pot.add_gradient(k as f64 * h, x, h, &mut out);
    }
    out
}

/// (i4): `inf_x ∫F(t,x)dt < max{∫F(t,x₁)dt, ∫F(t,x₂)dt}` and
/// `G(x₁) = G(x₂) = inf_{B_c} G` with `c = LT + γ⁻¹(max{…}/T)`.
pub fn check_i4(inst: &ProblemInstance, x1: &[f64], x2: &[f64], spec: &BallSpec) -> Result<(I4Certificate, Verdict)> {
    if x1.len() != inst.dim || x2.len() != inst.dim {
        return Err(Error::DimensionMismatch { expected: inst.dim, got: x1.len().min(x2.len()) });
    }
    if dist(x1, x2) == 0.0 {
        return Err(Error::Precondition("the two points must differ".into()));
    }
    let t = inst.period;
    let pot = &inst.potential;
    let (f1, f2) = (pot.period_integral(x1), pot.period_integral(x2));
    let fmax = f1.max(f2);
    let c = inst.lt() + inst.growth.inverse(fmax / t)?;

    let origin = vec![0.0; inst.dim];
    let incumbent = f1.min(f2).min(pot.period_integral(&origin));
    let inf_f_radius = inst.growth.inverse(incumbent.max(0.0) / t)?;
    let budget = spec.samples_per_dim * inst.dim;
    let (_, inf_f) = ball_minimize(
        |x| pot.period_integral(x),
        |x| integral_f_gradient(inst, x),
        inst.dim,
        inf_f_radius,
        budget,
        spec.refine,
        &[x1.to_vec(), x2.to_vec()],
    );
    let inf_f = inf_f.min(incumbent);

    let g = &inst.perturbation.expr;
    let (g1, g2) = (g.value(x1), g.value(x2));
    let (gp, inf_g) =
        ball_minimize(|x| g.value(x), |x| g.gradient(x), inst.dim, c, budget, spec.refine, &[x1.to_vec(), x2.to_vec()]);
    let strict_gap = fmax - inf_f;
    let cert = I4Certificate {
        x1: x1.to_vec(),
        x2: x2.to_vec(),
        c,
        inf_f_ball: inf_f,
        inf_f_radius,
        f_at_points: (f1, f2),
        g_at_points: (g1, g2),
        inf_g_ball: inf_g,
        inf_g_point: gp.clone(),
        strict_gap,
    };
    let tol = 1e-9;
    let verdict = if !(strict_gap > tol) {
        Verdict::falsified(
            "i4",
            Witness {
                point: if f1 >= f2 { x1.to_vec() } else { x2.to_vec() },
                time: None,
                lhs: inf_f,
                rhs: fmax,
                relation: "inf_x int F(t,x) < max{int F(t,x1), int F(t,x2)}".into(),
            },
            format!("no point improves on max int F = {fmax:.6e} (found {inf_f:.6e})"),
        )
    } else if let Some((gi, xi)) = [(g1, x1), (g2, x2)].into_iter().find(|(gi, _)| *gi > inf_g + tol) {
        Verdict::falsified(
            "i4",
            Witness { point: gp, time: None, lhs: gi, rhs: inf_g, relation: format!("G({:?}) <= inf over B_c of G", short(xi)) },
            format!("G at a witness point is {gi:.6e} but G reaches {inf_g:.6e} in the ball of radius c = {c:.6}"),
        )
    } else {
        Verdict::verified(
            "i4",
            format!("c = {c:.6}, gap = {strict_gap:.6e}, G(x1) = {g1:.3e}, G(x2) = {g2:.3e}, inf over B_c = {inf_g:.3e}"),
        )
    };
    Ok((cert, verdict))
}

/// (j1): `ρ > LT` and `G` constant on `B_ρ`.
pub fn check_j1(inst: &ProblemInstance, rho: f64, spec: &SampleSpec) -> Result<Verdict> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("plateau radius must be positive, got {rho}")));
    }
    let lt = inst.lt();
    if !(rho > lt) {
        return Ok(Verdict::falsified(
            "j1",
            Witness { point: vec![0.0; inst.dim], time: None, lhs: lt, rhs: rho, relation: "LT < rho".into() },
            format!("rho = {rho} does not exceed LT = {lt}"),
        ));
    }
    let g: &Expr = &inst.perturbation.expr;
    let origin = vec![0.0; inst.dim];
    let g0 = g.value(&origin);
    let inner = SampleSpec { radius: rho * (1.0 - 1e-12), ..spec.clone() };
    for x in inner.points(inst.dim) {
        let gx = g.value(&x);
        if (gx - g0).abs() > 1e-12 {
            return Ok(Verdict::falsified(
                "j1",
                Witness { point: x, time: None, lhs: (gx - g0).abs(), rhs: 1e-12, relation: "|G(x) - G(0)| <= 1e-12".into() },
                format!("G varies on the ball of radius {rho}"),
            ));
        }
        let gn = norm(&g.gradient(&x));
        if gn > 1e-10 {
            return Ok(Verdict::falsified(
                "j1",
                Witness { point: x, time: None, lhs: gn, rhs: 1e-10, relation: "|grad G(x)| <= 1e-10".into() },
                format!("grad G does not vanish on the ball of radius {rho}"),
            ));
        }
    }
    Ok(Verdict::verified("j1", format!("G = {g0} on samples of the ball of radius {rho} > LT = {lt}")))
}

/// All checks with default sampling designs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub instance: String,
    pub seed: u64,
    pub verdicts: Vec<Verdict>,
    pub i4_certificate: Option<I4Certificate>,
}

impl HypothesisReport {
    /// Names of the violated hypotheses among (i1)–(i4).
    pub fn flagged(&self) -> Vec<String> {
        self.verdicts
            .iter()
            .filter(|v| v.hypothesis.starts_with('i') && v.violated())
            .map(|v| v.hypothesis.clone())
            .collect()
    }

    pub fn any_violated(&self) -> bool {
        self.verdicts.iter().any(Verdict::violated)
    }
}

pub fn check_all(inst: &ProblemInstance, seed: u64) -> Result<HypothesisReport> {
    let radius = 4.0 * (inst.lt() + 1.0);
    let mut verdicts = vec![
        check_i1(inst, &SampleSpec::for_radius(radius, seed)),
        check_i2(inst, &RadiusSchedule::doubling(inst, seed)),
        check_i3(inst, &SearchSpec::default_for(inst, seed)),
    ];
    let mut certificate = None;
    match &inst.witnesses {
        Some((x1, x2)) => {
            let (cert, v) = check_i4(inst, x1, x2, &BallSpec::default())?;
            certificate = Some(cert);
            verdicts.push(v);
        }
        None => verdicts.push(Verdict::declared("i4", None, "no witness points supplied".into())),
    }
    if let Some(rho) = inst.plateau_radius {
        verdicts.push(check_j1(inst, rho, &SampleSpec::for_radius(rho, seed))?);
    }
    Ok(HypothesisReport { instance: inst.name.clone(), seed, verdicts, i4_certificate: certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional;
    use crate::model::{preset, GrowthBound, PresetParams};

    fn inst(name: &str) -> ProblemInstance {
        preset(name, &PresetParams::default()).unwrap()
    }

    #[test]
    fn i1_cases() {
        let two = inst("two-minima-symmetric");
        assert_eq!(check_i1(&two, &SampleSpec::for_radius(5.0, 1)).status, Status::VerifiedOnSamples);
        assert_eq!(check_i1(&inst("example-3.3"), &SampleSpec::for_radius(5.0, 1)).status, Status::VerifiedOnSamples);
        let mut steep = two.clone();
        steep.growth = GrowthBound::Power { coef: 1.0, p: 2.0 };
        let v = check_i1(&steep, &SampleSpec::for_radius(2.0, 1));
        assert_eq!(v.status, Status::Falsified);
        let w = v.witness.unwrap();
        assert!((norm(&w.point) - 2.0).abs() < 1e-12);
        assert_eq!((w.lhs, w.rhs), (4.0, 2.0));
    }

    #[test]
    fn i2_cases() {
        let t32 = inst("theorem-3.2");
        assert_eq!(check_i2(&t32, &RadiusSchedule::doubling(&t32, 0)).status, Status::VerifiedOnSamples);
        let two = inst("two-minima-symmetric");
        assert_eq!(check_i2(&two, &RadiusSchedule::doubling(&two, 0)).status, Status::VerifiedOnSamples);
        let ex3 = inst("example-3.3");
        let v = check_i2(&ex3, &RadiusSchedule::doubling(&ex3, 0));
        assert_eq!(v.status, Status::Falsified);
        let w = v.witness.unwrap();
        assert!(inst("example-3.3").perturbation.value(&w.point) / norm(&w.point) < w.lhs);
    }

    #[test]
    fn i3_cases() {
        let spec = |i: &ProblemInstance| SearchSpec::default_for(i, 0);
        let two = inst("two-minima-symmetric");
        assert_eq!(check_i3(&two, &spec(&two)).status, Status::VerifiedOnSamples);
        let ex1 = inst("example-3.1");
        assert_eq!(check_i3(&ex1, &spec(&ex1)).status, Status::VerifiedOnSamples);
        let ex2 = inst("example-3.2");
        let v = check_i3(&ex2, &spec(&ex2));
        assert_eq!(v.status, Status::Declared);
        assert!(v.violated());
    }

    #[test]
    fn i4_cases() {
        let two = inst("two-minima-symmetric");
        let (cert, v) = check_i4(&two, &[0.5], &[-0.5], &BallSpec::default()).unwrap();
        assert_eq!(v.status, Status::VerifiedOnSamples, "{}", v.detail);
        assert_eq!(cert.c, 1.5);
        assert_eq!(cert.inf_f_ball, 0.0);
        let r = functional::sublevel_radius(&two, 0.125 + two.rest_action()).unwrap();
        assert!((r - cert.c).abs() <= 1e-12);

        let t32 = inst("theorem-3.2");
        let (cert, v) = check_i4(&t32, &[0.3], &[-0.3], &BallSpec::default()).unwrap();
        assert_eq!(v.status, Status::VerifiedOnSamples, "{}", v.detail);
        assert!((cert.c - 0.8).abs() < 1e-12);

        let ex1 = inst("example-3.1");
        let (_, v) = check_i4(&ex1, &[0.5], &[-0.5], &BallSpec::default()).unwrap();
        assert_eq!(v.status, Status::Falsified);
        let w = v.witness.unwrap();
        assert!(ex1.perturbation.value(&w.point) < w.lhs - 1e-9);

        assert!(check_i4(&two, &[0.5], &[0.5], &BallSpec::default()).is_err());
    }

    #[test]
    fn j1_cases() {
        let t32 = inst("theorem-3.2");
        let spec = SampleSpec::for_radius(0.8, 0);
        assert_eq!(check_j1(&t32, 0.8, &spec).unwrap().status, Status::VerifiedOnSamples);
        assert_eq!(check_j1(&t32, 0.4, &spec).unwrap().status, Status::Falsified);
        let v = check_j1(&inst("example-3.1"), 2.0, &spec).unwrap();
        assert_eq!(v.status, Status::Falsified);
        assert!(v.witness.is_some());
    }
}
