//! Ingredients of an oscillator system: the relativistic kinetic law, the
//! potential `F`, the growth bound `γ`, the perturbation `G`, the weight `ψ`,
//! and the preset instances built from them.
//!
//! Every map here is a pure function of its arguments; instances are
//! immutable once built and may be shared freely between threads.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{self, dot, norm};

/// Relativistic kinetic law on the velocity ball `B_L`.
///
/// `Φ(v) = −√(L² − |v|²)`, the momentum map `φ(v) = v/√(L² − |v|²)` and its
/// globally defined inverse `φ⁻¹(w) = L·w/√(1 + |w|²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticLaw {
    #[serde(rename = "L")]
    speed_limit: f64,
}

impl KineticLaw {
    pub fn speed_limit(&self) -> f64 {
        self.speed_limit
    }

    /// `Φ(v)`; `+∞` outside the closed ball.
    pub fn lagrangian(&self, v: &[f64]) -> f64 {
        let l2 = self.speed_limit * self.speed_limit;
        let v2 = dot(v, v);
        if v2 > l2 {
            f64::INFINITY
        } else {
            -(l2 - v2).sqrt()
        }
    }

    /// `φ(v)` written into `out`. Only meaningful for `|v| < L`.
    pub fn momentum(&self, v: &[f64], out: &mut [f64]) {
        let s = (self.speed_limit * self.speed_limit - dot(v, v)).sqrt();
        for (o, x) in out.iter_mut().zip(v) {
            *o = x / s;
        }
    }

    /// `φ⁻¹(w)` written into `out`; always strictly inside `B_L`.
    pub fn velocity(&self, w: &[f64], out: &mut [f64]) {
        let s = self.speed_limit / (1.0 + dot(w, w)).sqrt();
        for (o, x) in out.iter_mut().zip(w) {
            *o = x * s;
        }
    }

    pub fn momentum_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.momentum(v, &mut out);
        out
    }

    pub fn velocity_vec(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; w.len()];
        self.velocity(w, &mut out);
        out
    }

    /// Legendre-type energy `⟨w, φ⁻¹(w)⟩ − Φ(φ⁻¹(w))`, conserved together
    /// with the potential terms along autonomous flows.
    pub fn hamiltonian(&self, w: &[f64]) -> f64 {
        let v = self.velocity_vec(w);
        dot(w, &v) - self.lagrangian(&v)
    }

    /// Sampled check of the class-𝒜 properties; returns the first failure.
    pub fn check_sampled<R: Rng>(
        &self,
        dim: usize,
        rng: &mut R,
        samples: usize,
        margin: f64,
    ) -> std::result::Result<(), String> {
        let l = self.speed_limit;
        let zero = vec![0.0; dim];
        if self.momentum_vec(&zero).iter().any(|&x| x != 0.0) {
            return Err("phi(0) != 0".into());
        }
        let phi0 = self.lagrangian(&zero);
        for _ in 0..samples {
            let v = sampling::random_in_ball(rng, dim, l);
            let w = sampling::random_in_ball(rng, dim, l);
            let (pv, pw) = (self.lagrangian(&v), self.lagrangian(&w));
            if pv > 0.0 || pv < phi0 {
                return Err(format!("Phi({v:?}) = {pv} outside [Phi(0), 0]"));
            }
            let gap = sampling::dist(&v, &w);
            if gap >= 1e-3 * l {
                let mid: Vec<f64> = v.iter().zip(&w).map(|(a, b)| 0.5 * (a + b)).collect();
                if self.lagrangian(&mid) >= 0.5 * (pv + pw) - margin * gap * gap {
                    return Err(format!("midpoint convexity fails for {v:?}, {w:?}"));
                }
            }
            let inner: Vec<f64> = v.iter().map(|x| 0.999 * x).collect();
            let back = self.velocity_vec(&self.momentum_vec(&inner));
            if sampling::dist(&back, &inner) > 1e-12 * l {
                return Err(format!("round trip fails at {inner:?}"));
            }
        }
        for _ in 0..100 {
            let dir = sampling::random_unit(rng, dim);
            let mut last = -1.0;
            for i in 0..=100 {
                let v: Vec<f64> = dir.iter().map(|d| d * l * 0.999 * i as f64 / 100.0).collect();
                let m = norm(&self.momentum_vec(&v));
                if m <= last {
                    return Err(format!("|phi| not increasing along {dir:?}"));
                }
                last = m;
            }
        }
        Ok(())
    }
}

/// Canonical relativistic kinetic law with speed limit `l`.
pub fn make_relativistic_kinetic(l: f64) -> Result<KineticLaw> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("speed limit L must be positive, got {l}")));
    }
    Ok(KineticLaw { speed_limit: l })
}

/// Time-dependent part `ω(t)` of the power potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Forcing {
    Zero,
    Constant { value: Vec<f64> },
    /// Forcing chosen so that `u*(t) = a·sin(2π·mode·t/T)` solves the
    /// periodic problem exactly.
    Manufactured { amplitude: Vec<f64>, mode: u32 },
}

/// Power potential `F(t,x) = μ|x|^p/p + ⟨ω(t), x⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub mu: f64,
    pub p: f64,
    pub omega: Forcing,
    #[serde(skip)]
    period: f64,
    #[serde(skip)]
    speed_limit: f64,
}

impl Potential {
    pub fn power(mu: f64, p: f64, omega: Forcing) -> Self {
        Potential { mu, p, omega, period: 1.0, speed_limit: 1.0 }
    }

    pub fn is_time_independent(&self) -> bool {
        !matches!(self.omega, Forcing::Manufactured { .. })
    }

    /// Known exact solution `(u*(t), u*'(t))` for manufactured forcing.
    pub fn reference_solution(&self, t: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.omega {
            Forcing::Manufactured { amplitude, mode } => {
                let k = 2.0 * std::f64::consts::PI * *mode as f64 / self.period;
                let (s, c) = (k * t).sin_cos();
                Some((
                    amplitude.iter().map(|a| a * s).collect(),
                    amplitude.iter().map(|a| a * k * c).collect(),
                ))
            }
            _ => None,
        }
    }

    fn omega_into(&self, t: f64, out: &mut [f64]) {
        match &self.omega {
            Forcing::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            Forcing::Constant { value } => out.copy_from_slice(value),
            Forcing::Manufactured { amplitude, mode } => {
                // ω = (φ(u*'))' − μ|u*|^{p−2}u* with u* ∥ a, so φ(u*') = a·k·c/√(L² − |a|²k²c²).
                let k = 2.0 * std::f64::consts::PI * *mode as f64 / self.period;
                let (s, c) = (k * t).sin_cos();
                let l2 = self.speed_limit * self.speed_limit;
                let a2 = dot(amplitude, amplitude);
                let v2 = a2 * k * k * c * c;
                let dmom = -k * k * s * l2 / (l2 - v2).powf(1.5);
                let u: Vec<f64> = amplitude.iter().map(|a| a * s).collect();
                let un = norm(&u);
                let pow = if un > 0.0 { self.mu * un.powf(self.p - 2.0) } else { 0.0 };
                for ((o, a), ui) in out.iter_mut().zip(amplitude).zip(&u) {
                    *o = a * dmom - pow * ui;
                }
            }
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        let r = norm(x);
        let mut v = self.mu * r.powf(self.p) / self.p;
        match &self.omega {
            Forcing::Zero => {}
            Forcing::Constant { value } => v += dot(value, x),
            Forcing::Manufactured { .. } => {
                let mut w = vec![0.0; x.len()];
                self.omega_into(t, &mut w);
                v += dot(&w, x);
            }
        }
        v
    }

    /// Adds `scale·∇_x F(t,x)` to `out`.
    pub fn add_gradient(&self, t: f64, x: &[f64], scale: f64, out: &mut [f64]) {
        let r = norm(x);
        let pow = if r > 0.0 { self.mu * r.powf(self.p - 2.0) } else { 0.0 };
        for (o, xi) in out.iter_mut().zip(x) {
            *o += scale * pow * xi;
        }
        match &self.omega {
            Forcing::Zero => {}
            Forcing::Constant { value } => {
                for (o, w) in out.iter_mut().zip(value) {
                    *o += scale * w;
                }
            }
            Forcing::Manufactured { .. } => {
                let mut w = vec![0.0; x.len()];
                self.omega_into(t, &mut w);
                for (o, wi) in out.iter_mut().zip(&w) {
                    *o += scale * wi;
                }
            }
        }
    }

    pub fn gradient(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.add_gradient(t, x, 1.0, &mut g);
        g
    }

    /// `∫₀ᵀ F(t,x) dt` for a frozen `x`.
    pub fn period_integral(&self, x: &[f64]) -> f64 {
        if self.is_time_independent() {
            return self.period * self.value(0.0, x);
        }
        let m = 512;
        let h = self.period / m as f64;
        (0..m).map(|k| h * self.value(k as f64 * h, x)).sum()
    }
}

/// Superlinear convex lower growth bound `γ` of hypothesis (i1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GrowthBound {
    /// `γ(s) = coef·s^p`, inverted in closed form.
    Power { coef: f64, p: f64 },
    /// `γ(s) = coef·s^p + slope·s`, inverted by bisection.
    PowerPlusLinear { coef: f64, p: f64, slope: f64 },
}

impl GrowthBound {
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            GrowthBound::Power { coef, p } => coef * s.powf(p),
            GrowthBound::PowerPlusLinear { coef, p, slope } => coef * s.powf(p) + slope * s,
        }
    }

    /// `γ⁻¹(y)` for `y ≥ γ(0)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let floor = self.value(0.0);
        if !(y >= floor) {
            return Err(Error::InvalidParameter(format!("gamma inverse needs y >= {floor}, got {y}")));
        }
        match *self {
            GrowthBound::Power { coef, p } => {
                let q = y / coef;
                Ok(if p == 2.0 { q.sqrt() } else { q.powf(1.0 / p) })
            }
            GrowthBound::PowerPlusLinear { .. } => Ok(self.bisect_inverse(y)),
        }
    }

    fn bisect_inverse(&self, y: f64) -> f64 {
        let mut hi = 1.0;
        while self.value(hi) < y {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (self.value(lo) - y).abs() < (self.value(hi) - y).abs() {
            lo
        } else {
            hi
        }
    }

    /// Pairs `(s, γ(s)/s)` at `s = 2^k` witnessing superlinear growth.
    pub fn superlinear_certificate(&self) -> Vec<(f64, f64)> {
        (0..12).map(|k| {
            let s = 2f64.powi(k);
            (s, self.value(s) / s)
        }).collect()
    }

    pub fn check_sampled<R: Rng>(&self, rng: &mut R, samples: usize) -> std::result::Result<(), String> {
        for _ in 0..samples {
            let a = rng.gen_range(0.0..50.0);
            let b = rng.gen_range(0.0..50.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if hi - lo > 1e-6 {
                if self.value(lo) >= self.value(hi) {
                    return Err(format!("gamma not increasing on [{lo}, {hi}]"));
                }
                let mid = self.value(0.5 * (lo + hi));
                if mid > 0.5 * (self.value(lo) + self.value(hi)) * (1.0 + 1e-14) {
                    return Err(format!("gamma not convex on [{lo}, {hi}]"));
                }
            }
            let inv = self.inverse(self.value(a)).map_err(|e| e.to_string())?;
            if (inv - a).abs() > 1e-10 * a.max(1.0) {
                return Err(format!("gamma inverse round trip fails at {a}: {inv}"));
            }
        }
        let cert = self.superlinear_certificate();
        if cert.windows(2).any(|w| w[1].1 <= w[0].1) {
            return Err("gamma(s)/s not increasing on the certificate schedule".into());
        }
        Ok(())
    }
}

/// Perturbation `G` as an expression over a fixed operator set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Expr {
    Zero,
    Constant { value: f64 },
    /// `⟨z, x⟩`
    Linear { z: Vec<f64> },
    /// `(|x|² − w²)²/(1 + |x|⁴) − s(|x|)` with the escape term
    /// `s(r) = (r − R)³/(1 + (r − R)²)` beyond `R`.
    TwoWell { well: f64, escape_radius: f64 },
    /// `0` on `|x| ≤ R`, `−(|x| − R)³` beyond.
    CubicEscape { radius: f64 },
    /// `0` on `|x| ≤ ρ`, `−u²/(1 + u²)` with `u = |x| − ρ` beyond.
    Plateau { rho: f64 },
    /// `G(x − offset)`
    Shift { offset: Vec<f64>, expr: Box<Expr> },
    Scale { factor: f64, expr: Box<Expr> },
    Sum { terms: Vec<Expr> },
}

fn escape(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0);
    }
    let u2 = u * u;
    let d = 1.0 + u2;
    (u2 * u / d, (u2 * u2 + 3.0 * u2) / (d * d))
}

impl Expr {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Zero => 0.0,
            Expr::Constant { value } => *value,
            Expr::Linear { z } => dot(z, x),
            Expr::TwoWell { well, escape_radius } => {
                let r2 = dot(x, x);
                let q = r2 - well * well;
                q * q / (1.0 + r2 * r2) - escape(r2.sqrt() - escape_radius).0
            }
            Expr::CubicEscape { radius } => {
                let u = norm(x) - radius;
                if u > 0.0 {
                    -u * u * u
                } else {
                    0.0
                }
            }
            Expr::Plateau { rho } => {
                let u = norm(x) - rho;
                if u > 0.0 {
                    -u * u / (1.0 + u * u)
                } else {
                    0.0
                }
            }
            Expr::Shift { offset, expr } => {
                let y: Vec<f64> = x.iter().zip(offset).map(|(a, b)| a - b).collect();
                expr.value(&y)
            }
            Expr::Scale { factor, expr } => factor * expr.value(x),
            Expr::Sum { terms } => terms.iter().map(|t| t.value(x)).sum(),
        }
    }

    /// Adds `scale·∇G(x)` to `out`.
    pub fn add_gradient(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Expr::Zero | Expr::Constant { .. } => {}
            Expr::Linear { z } => {
                for (o, zi) in out.iter_mut().zip(z) {
                    *o += scale * zi;
                }
            }
            Expr::TwoWell { well, escape_radius } => {
                let r2 = dot(x, x);
                let r = r2.sqrt();
                let q = r2 - well * well;
                let d = 1.0 + r2 * r2;
                // d/d(r²) of q²/d, times d(r²)/dx = 2x
                let dq = (2.0 * q * d - q * q * 2.0 * r2) / (d * d);
                let ds = escape(r - escape_radius).1;
                let radial = if r > 0.0 { ds / r } else { 0.0 };
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += scale * (2.0 * dq - radial) * xi;
                }
            }
            Expr::CubicEscape { radius } => {
                let r = norm(x);
                let u = r - radius;
                if u > 0.0 {
                    let c = -3.0 * u * u / r;
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o += scale * c * xi;
                    }
                }
            }
            Expr::Plateau { rho } => {
                let r = norm(x);
                let u = r - rho;
                if u > 0.0 {
                    let d = 1.0 + u * u;
                    let c = -2.0 * u / (d * d * r);
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o += scale * c * xi;
                    }
                }
            }
            Expr::Shift { offset, expr } => {
                let y: Vec<f64> = x.iter().zip(offset).map(|(a, b)| a - b).collect();
                expr.add_gradient(&y, scale, out);
            }
            Expr::Scale { factor, expr } => expr.add_gradient(x, scale * factor, out),
            Expr::Sum { terms } => terms.iter().for_each(|t| t.add_gradient(x, scale, out)),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.add_gradient(x, 1.0, &mut g);
        g
    }

    fn check_dims(&self, dim: usize) -> Result<()> {
        let bad = |got: usize| Err(Error::DimensionMismatch { expected: dim, got });
        match self {
            Expr::Linear { z } if z.len() != dim => bad(z.len()),
            Expr::Shift { offset, .. } if offset.len() != dim => bad(offset.len()),
            Expr::Shift { expr, .. } | Expr::Scale { expr, .. } => expr.check_dims(dim),
            Expr::Sum { terms } => terms.iter().try_for_each(|t| t.check_dims(dim)),
            _ => Ok(()),
        }
    }
}

/// Perturbation `G` together with the author's declarations about it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub expr: Expr,
    /// Declared `δ ≥ 0` with `−δ(|x|+1) ≤ G(x)`; absent when no linear
    /// lower bound exists.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Author's declaration that `G` attains no global minimum.
    #[serde(default)]
    pub no_global_min: Option<bool>,
}

impl Perturbation {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.expr.value(x)
    }

    pub fn add_gradient(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        self.expr.add_gradient(x, scale, out)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.expr.gradient(x)
    }
}

/// Nonnegative time weight `ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Weight {
    Constant { value: f64 },
    /// Samples at `t_j = jT/M`, periodic piecewise-linear in between.
    Table { values: Vec<f64> },
}

impl Weight {
    pub fn value(&self, t: f64, period: f64) -> f64 {
        match self {
            Weight::Constant { value } => *value,
            Weight::Table { values } => {
                let m = values.len();
                let s = (t / period).rem_euclid(1.0) * m as f64;
                let j = (s.floor() as usize).min(m - 1);
                let frac = s - j as f64;
                values[j] * (1.0 - frac) + values[(j + 1) % m] * frac
            }
        }
    }

    pub fn integral(&self, period: f64) -> f64 {
        match self {
            Weight::Constant { value } => value * period,
            Weight::Table { values } => period * values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Weight::Constant { .. })
    }

    fn validate(&self, period: f64) -> Result<()> {
        let samples: &[f64] = match self {
            Weight::Constant { value } => std::slice::from_ref(value),
            Weight::Table { values } => values,
        };
        if samples.is_empty() || samples.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("weight must be finite and nonnegative".into()));
        }
        if !(self.integral(period) > 0.0) {
            return Err(Error::InvalidParameter("weight must not vanish identically".into()));
        }
        Ok(())
    }
}

/// One oscillator system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub name: String,
    pub dim: usize,
    pub period: f64,
    pub kinetic: KineticLaw,
    pub potential: Potential,
    pub growth: GrowthBound,
    pub perturbation: Perturbation,
    pub weight: Weight,
    #[serde(default)]
    pub plateau_radius: Option<f64>,
    /// Default pair of points for the two-point ball-minimum hypothesis.
    #[serde(default)]
    pub witnesses: Option<(Vec<f64>, Vec<f64>)>,
}

impl ProblemInstance {
    /// Assembles and validates an instance.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        period: f64,
        kinetic: KineticLaw,
        mut potential: Potential,
        growth: GrowthBound,
        perturbation: Perturbation,
        weight: Weight,
        plateau_radius: Option<f64>,
        witnesses: Option<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        potential.period = period;
        potential.speed_limit = kinetic.speed_limit();
        let inst = ProblemInstance {
            name: name.into(),
            dim,
            period,
            kinetic,
            potential,
            growth,
            perturbation,
            weight,
            plateau_radius,
            witnesses,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {}", self.period)));
        }
        make_relativistic_kinetic(self.kinetic.speed_limit())?;
        if !(self.potential.p > 1.0) || !(self.potential.mu >= 0.0) {
            return Err(Error::InvalidParameter("power potential needs p > 1 and mu >= 0".into()));
        }
        match &self.potential.omega {
            Forcing::Constant { value } if value.len() != self.dim => {
                return Err(Error::DimensionMismatch { expected: self.dim, got: value.len() })
            }
            Forcing::Manufactured { amplitude, mode } => {
                if amplitude.len() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: amplitude.len() });
                }
                let k = 2.0 * std::f64::consts::PI * *mode as f64 / self.period;
                if norm(amplitude) * k >= self.kinetic.speed_limit() {
                    return Err(Error::InvalidParameter("manufactured solution exceeds the speed limit".into()));
                }
            }
            _ => {}
        }
        match self.growth {
            GrowthBound::Power { coef, p } | GrowthBound::PowerPlusLinear { coef, p, .. }
                if !(coef > 0.0 && p > 1.0) =>
            {
                return Err(Error::InvalidParameter("growth bound needs coef > 0 and p > 1".into()))
            }
            GrowthBound::PowerPlusLinear { slope, .. } if !(slope >= 0.0) => {
                return Err(Error::InvalidParameter("growth slope must be nonnegative".into()))
            }
            _ => {}
        }
        self.perturbation.expr.check_dims(self.dim)?;
        if let Some(d) = self.perturbation.delta {
            if !(d >= 0.0) {
                return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {d}")));
            }
        }
        self.weight.validate(self.period)?;
        if let Some(rho) = self.plateau_radius {
            if !(rho > self.lt()) {
                return Err(Error::InvalidParameter(format!(
                    "plateau radius {rho} must exceed L*T = {}",
                    self.lt()
                )));
            }
        }
        if let Some((a, b)) = &self.witnesses {
            if a.len() != self.dim || b.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: a.len().min(b.len()) });
            }
        }
        Ok(())
    }

    /// `L·T`, the largest oscillation a path of `K` can make.
    pub fn lt(&self) -> f64 {
        self.kinetic.speed_limit() * self.period
    }

    /// `Φ(0)·T`
    pub fn rest_action(&self) -> f64 {
        -self.kinetic.speed_limit() * self.period
    }

    pub fn weight_at(&self, t: f64) -> f64 {
        self.weight.value(t, self.period)
    }

    pub fn weight_integral(&self) -> f64 {
        self.weight.integral(self.period)
    }

    /// True when neither `F` nor `ψ` depends on time.
    pub fn is_autonomous(&self) -> bool {
        self.potential.is_time_independent() && self.weight.is_constant()
    }

    /// Sampled check of every component invariant; returns all failures.
    pub fn sampled_invariant_failures(&self, seed: u64) -> Vec<String> {
        let mut rng = sampling::rng(seed);
        let mut failures = Vec::new();
        let dim = self.dim;
        if let Err(e) = self.kinetic.check_sampled(dim, &mut rng, 1000, 1e-3 / self.kinetic.speed_limit()) {
            failures.push(format!("kinetic: {e}"));
        }
        if let Err(e) = self.growth.check_sampled(&mut rng, 1000) {
            failures.push(format!("growth: {e}"));
        }
        let radius = 10.0 * (self.lt() + 1.0);
        for _ in 0..200 {
            let x = sampling::random_in_ball(&mut rng, dim, radius);
            let t = rng.gen_range(0.0..self.period);
            let gf = self.potential.gradient(t, &x);
            let fd = central_difference(|y| self.potential.value(t, y), &x);
            if rel_err(&gf, &fd) > 1e-6 {
                failures.push(format!("potential gradient mismatch at {x:?}"));
                break;
            }
            let gg = self.perturbation.gradient(&x);
            let fd = central_difference(|y| self.perturbation.value(y), &x);
            if rel_err(&gg, &fd) > 1e-6 {
                failures.push(format!("perturbation gradient mismatch at {x:?}"));
                break;
            }
        }
        if let Some(delta) = self.perturbation.delta {
            for _ in 0..1000 {
                let x = sampling::random_in_ball(&mut rng, dim, radius);
                if self.perturbation.value(&x) < -delta * (norm(&x) + 1.0) - 1e-12 {
                    failures.push(format!("declared delta {delta} violated at {x:?}"));
                    break;
                }
            }
        }
        for k in 0..64 {
            let t = self.period * k as f64 / 64.0;
            if !(self.weight_at(t) >= 0.0) {
                failures.push(format!("weight negative at t = {t}"));
                break;
            }
        }
        failures
    }
}

fn central_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
    let scale = norm(x).max(1.0);
    let eps = 1e-6 * scale;
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + eps;
            let fp = f(&y);
            y[i] = x[i] - eps;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * eps)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = norm(a).max(norm(b)).max(1.0);
    sampling::dist(a, b) / scale
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 7] = [
    "example-3.1",
    "example-3.2",
    "example-3.3",
    "two-minima-symmetric",
    "two-minima-shifted",
    "theorem-3.2",
    "forced-oscillator",
];

/// Tunable parameters of the presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Direction of the linear perturbation in `example-3.1` (default `e₁`).
    #[serde(default)]
    pub z: Option<Vec<f64>>,
}

fn default_dim() -> usize {
    1
}

impl Default for PresetParams {
    fn default() -> Self {
        PresetParams { dim: 1, z: None }
    }
}

fn axis(dim: usize, value: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[0] = value;
    v
}

/// Builds one of the shipped instances.
pub fn preset(name: &str, params: &PresetParams) -> Result<ProblemInstance> {
    let dim = params.dim;
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let unit = make_relativistic_kinetic(1.0)?;
    let half_square = || Potential::power(1.0, 2.0, Forcing::Zero);
    let half_growth = GrowthBound::Power { coef: 0.5, p: 2.0 };
    let one = Weight::Constant { value: 1.0 };
    let pair = |a: f64, b: f64| Some((axis(dim, a), axis(dim, b)));
    match name {
        "example-3.1" => {
            let z = params.z.clone().unwrap_or_else(|| axis(dim, 1.0));
            if z.len() != dim || norm(&z) == 0.0 {
                return Err(Error::InvalidParameter("z must be a nonzero vector of the instance dimension".into()));
            }
            let delta = norm(&z);
            ProblemInstance::new(
                name, dim, 1.0, unit, half_square(), half_growth,
                Perturbation { expr: Expr::Linear { z }, delta: Some(delta), no_global_min: Some(true) },
                one, None, pair(0.5, -0.5),
            )
        }
        "example-3.2" => ProblemInstance::new(
            name, dim, 1.0, unit, half_square(), half_growth,
            Perturbation { expr: Expr::Zero, delta: Some(0.0), no_global_min: Some(false) },
            one, None, pair(0.5, -0.5),
        ),
        "example-3.3" => ProblemInstance::new(
            name, dim, 1.0, unit,
            Potential::power(2.0, 2.0, Forcing::Zero),
            GrowthBound::Power { coef: 1.0, p: 2.0 },
            Perturbation { expr: Expr::CubicEscape { radius: 2.0 }, delta: None, no_global_min: Some(true) },
            one, None, pair(0.5, -0.5),
        ),
        "two-minima-symmetric" => ProblemInstance::new(
            name, dim, 1.0, unit, half_square(), half_growth,
            Perturbation {
                expr: Expr::TwoWell { well: 0.5, escape_radius: 2.0 },
                delta: Some(1.1),
                no_global_min: Some(true),
            },
            one, None, pair(0.5, -0.5),
        ),
        "two-minima-shifted" => ProblemInstance::new(
            name, dim, 1.0, unit, half_square(), half_growth,
            Perturbation {
                expr: Expr::Shift {
                    offset: axis(dim, 0.1),
                    expr: Box::new(Expr::TwoWell { well: 0.5, escape_radius: 2.0 }),
                },
                delta: Some(1.25),
                no_global_min: Some(true),
            },
            one, None, pair(0.6, -0.4),
        ),
        "theorem-3.2" => ProblemInstance::new(
            name, dim, 1.0, make_relativistic_kinetic(0.5)?, half_square(), half_growth,
            Perturbation { expr: Expr::Plateau { rho: 0.8 }, delta: Some(1.0), no_global_min: Some(true) },
            one, Some(0.8), pair(0.3, -0.3),
        ),
        "forced-oscillator" => ProblemInstance::new(
            name, dim, 1.0, unit,
            Potential::power(1.0, 2.0, Forcing::Manufactured { amplitude: axis(dim, 0.1), mode: 1 }),
            half_growth,
            Perturbation { expr: Expr::Zero, delta: Some(0.0), no_global_min: Some(false) },
            one, None, None,
        ),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Kinetic family of an instance file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KineticSpec {
    Relativistic {
        #[serde(rename = "L")]
        l: f64,
    },
}

/// Potential family of an instance file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PotentialSpec {
    Power {
        p: f64,
        #[serde(default = "unit_mu")]
        mu: f64,
        #[serde(default = "zero_forcing")]
        omega: Forcing,
    },
}

fn unit_mu() -> f64 {
    1.0
}

fn zero_forcing() -> Forcing {
    Forcing::Zero
}

/// Instance description file: either a preset reference or a full
/// composition of the built-in families.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub params: Option<PresetParams>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub period: Option<f64>,
    #[serde(default)]
    pub kinetic: Option<KineticSpec>,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub growth: Option<GrowthBound>,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
    #[serde(default)]
    pub weight: Option<Weight>,
    #[serde(default)]
    pub plateau_radius: Option<f64>,
    #[serde(default)]
    pub witnesses: Option<(Vec<f64>, Vec<f64>)>,
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Malformed(format!("instance file line {} column {}: {e}", e.line(), e.column()))
        })
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        if let Some(name) = &self.preset {
            let composed = self.kinetic.is_some()
                || self.potential.is_some()
                || self.growth.is_some()
                || self.perturbation.is_some()
                || self.weight.is_some();
            if composed {
                return Err(Error::Malformed("a preset reference cannot also compose families".into()));
            }
            let params = self.params.clone().unwrap_or_default();
            return preset(name, &params);
        }
        let missing = |what: &str| Error::Malformed(format!("instance file is missing `{what}`"));
        let dim = self.dim.ok_or_else(|| missing("dim"))?;
        let KineticSpec::Relativistic { l } = self.kinetic.clone().ok_or_else(|| missing("kinetic"))?;
        let PotentialSpec::Power { p, mu, omega } = self.potential.clone().ok_or_else(|| missing("potential"))?;
        ProblemInstance::new(
            self.name.clone().unwrap_or_else(|| "custom".into()),
            dim,
            self.period.unwrap_or(1.0),
            make_relativistic_kinetic(l)?,
            Potential::power(mu, p, omega),
            self.growth.clone().ok_or_else(|| missing("growth"))?,
            self.perturbation.clone().ok_or_else(|| missing("perturbation"))?,
            self.weight.clone().unwrap_or(Weight::Constant { value: 1.0 }),
            self.plateau_radius,
            self.witnesses.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relativistic_closed_forms() {
        let law = make_relativistic_kinetic(1.0).unwrap();
        assert_eq!(law.momentum_vec(&[0.0]), vec![0.0]);
        assert_eq!(law.lagrangian(&[0.0]), -1.0);
        let m = law.momentum_vec(&[0.6]);
        assert!((m[0] - 0.75).abs() < 1e-15);
        assert!((law.lagrangian(&[0.6]) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn non_positive_speed_limit_rejected() {
        assert!(make_relativistic_kinetic(0.0).is_err());
        assert!(make_relativistic_kinetic(-1.0).is_err());
        assert!(make_relativistic_kinetic(f64::NAN).is_err());
    }

    #[test]
    fn momentum_inverse() {
        let law = make_relativistic_kinetic(1.0).unwrap();
        assert_eq!(law.velocity_vec(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert!((law.velocity_vec(&[0.75])[0] - 0.6).abs() < 1e-15);
        let v = [0.999];
        let back = law.velocity_vec(&law.momentum_vec(&v));
        assert!((back[0] - v[0]).abs() <= 1e-12);
        let w = [3.0, -4.0];
        let v = law.velocity_vec(&w);
        assert!(norm(&v) < 1.0);
        let w2 = law.momentum_vec(&v);
        assert!(sampling::dist(&w, &w2) < 1e-10);
    }

    #[test]
    fn gamma_inverse_values() {
        let g = GrowthBound::Power { coef: 0.5, p: 2.0 };
        assert_eq!(g.inverse(0.125).unwrap(), 0.5);
        assert_eq!(g.inverse(0.0).unwrap(), 0.0);
        assert!(g.inverse(-1e-3).is_err());
        let cubic = GrowthBound::Power { coef: 1.0 / 3.0, p: 3.0 };
        assert!((cubic.inverse(9.0).unwrap() - 3.0).abs() < 1e-12);
        let mixed = GrowthBound::PowerPlusLinear { coef: 0.5, p: 2.0, slope: 1.0 };
        // s²/2 + s = 4 at s = 2
        let s = mixed.inverse(4.0).unwrap();
        assert!((mixed.value(s) - 4.0).abs() <= 1e-10 * 4.0);
        assert!((s - 2.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_inverse_roundtrip_samples() {
        let mut rng = sampling::rng(11);
        for g in [
            GrowthBound::Power { coef: 0.5, p: 2.0 },
            GrowthBound::Power { coef: 1.0, p: 2.0 },
            GrowthBound::Power { coef: 1.0 / 3.0, p: 3.0 },
            GrowthBound::PowerPlusLinear { coef: 0.5, p: 2.0, slope: 1.0 },
        ] {
            for _ in 0..1000 {
                let s: f64 = rng.gen_range(0.0..20.0);
                let back = g.inverse(g.value(s)).unwrap();
                assert!((back - s).abs() <= 1e-10 * s.max(1.0), "{g:?} {s} {back}");
            }
        }
    }

    #[test]
    fn presets_build_and_pass_sampled_invariants() {
        for name in PRESETS {
            for dim in [1, 2] {
                let inst = preset(name, &PresetParams { dim, z: None }).unwrap();
                let failures = inst.sampled_invariant_failures(3);
                assert!(failures.is_empty(), "{name} (n={dim}): {failures:?}");
            }
        }
    }

    #[test]
    fn preset_contents() {
        let p = preset("example-3.2", &PresetParams::default()).unwrap();
        assert_eq!(p.perturbation.expr, Expr::Zero);
        assert_eq!(p.potential.value(0.0, &[2.0]), 2.0);
        let p = preset("example-3.3", &PresetParams::default()).unwrap();
        assert_eq!(p.perturbation.value(&[10.0]), -512.0);
        assert_eq!(p.perturbation.value(&[1.5]), 0.0);
        let p = preset("two-minima-symmetric", &PresetParams::default()).unwrap();
        assert_eq!(p.perturbation.value(&[0.5]), 0.0);
        assert_eq!(p.perturbation.value(&[-0.5]), 0.0);
        assert_eq!(p.perturbation.value(&[1.0]), 0.28125);
        assert!(matches!(preset("nope", &PresetParams::default()), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn plateau_radius_must_exceed_lt() {
        let mut inst = preset("theorem-3.2", &PresetParams::default()).unwrap();
        inst.plateau_radius = Some(0.5);
        assert!(inst.validate().is_err());
    }

    #[test]
    fn manufactured_forcing_is_consistent() {
        // (φ(u*'))' − ∇F(t,u*) must vanish along the reference solution.
        let inst = preset("forced-oscillator", &PresetParams::default()).unwrap();
        let law = &inst.kinetic;
        let t = 0.37;
        let eps = 1e-5;
        let mom = |s: f64| law.momentum_vec(&inst.potential.reference_solution(s).unwrap().1)[0];
        let dmom = (mom(t + eps) - mom(t - eps)) / (2.0 * eps);
        let u = inst.potential.reference_solution(t).unwrap().0;
        let g = inst.potential.gradient(t, &u)[0];
        assert!((dmom - g).abs() < 1e-8, "{dmom} vs {g}");
    }

    #[test]
    fn instance_file_roundtrip() {
        let text = r#"{
            "name": "custom-two-well", "dim": 1, "period": 1.0,
            "kinetic": {"family": "relativistic", "L": 1.0},
            "potential": {"family": "power", "p": 2.0, "mu": 1.0, "omega": {"kind": "zero"}},
            "growth": {"family": "power", "coef": 0.5, "p": 2.0},
            "perturbation": {"expr": {"op": "two-well", "well": 0.5, "escape_radius": 2.0}, "delta": 1.1},
            "weight": {"kind": "constant", "value": 1.0},
            "witnesses": [[0.5], [-0.5]]
        }"#;
        let inst = InstanceFile::parse(text).unwrap().build().unwrap();
        let reference = preset("two-minima-symmetric", &PresetParams::default()).unwrap();
        assert_eq!(inst.perturbation.expr, reference.perturbation.expr);
        assert_eq!(inst.potential, reference.potential);
        let preset_ref = InstanceFile::parse(r#"{"preset": "example-3.1", "params": {"dim": 2}}"#).unwrap();
        assert_eq!(preset_ref.build().unwrap().dim, 2);
    }

    #[test]
    fn malformed_instance_file_reports_line() {
        let err = InstanceFile::parse("{\n  \"dim\": 1,\n  \"bogus\": 3\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
