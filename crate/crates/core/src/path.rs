//! Periodic piecewise-linear paths: the discrete form of the constraint set
//! `K = {u Lipschitz, |u'| ≤ L, u(0) = u(T)}`.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::sampling::{self, norm};

/// Node values `u_0, …, u_{N−1}` on the uniform grid `t_k = k·T/N`, closed
/// by `u_N = u_0`. Stored row-major, `dim` components per node.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicPath {
    nodes: Vec<f64>,
    dim: usize,
    period: f64,
}

pub const MIN_NODES: usize = 4;
const DYKSTRA_MAX_ITER: usize = 10_000;
const DYKSTRA_TOL: f64 = 1e-12;

impl PeriodicPath {
    /// Wraps node data without any feasibility check.
    pub fn from_nodes(nodes: Vec<f64>, dim: usize, period: f64) -> Result<Self> {
        if dim == 0 || !nodes.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter("node data does not match the dimension".into()));
        }
        if nodes.len() / dim < MIN_NODES {
            return Err(Error::InvalidParameter(format!("a path needs at least {MIN_NODES} nodes")));
        }
        if !(period > 0.0) {
            return Err(Error::InvalidParameter("period must be positive".into()));
        }
        Ok(PeriodicPath { nodes, dim, period })
    }

    pub fn constant(x: &[f64], n_nodes: usize, period: f64) -> Result<Self> {
        let nodes = (0..n_nodes).flat_map(|_| x.iter().copied()).collect();
        Self::from_nodes(nodes, x.len(), period)
    }

    pub fn len(&self) -> usize {
        self.nodes.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn step(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        let k = k % self.len();
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<f64> {
        self.nodes
    }

    /// Increment `u_{k+1} − u_k` with periodic closure.
    pub fn increment(&self, k: usize) -> Vec<f64> {
        let a = self.node(k);
        let b = self.node(k + 1);
        b.iter().zip(a).map(|(x, y)| x - y).collect()
    }

    /// Largest segment speed `|u_{k+1} − u_k|/h`.
    pub fn max_speed(&self) -> f64 {
        (0..self.len()).map(|k| norm(&self.increment(k))).fold(0.0, f64::max) / self.step()
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|k| norm(self.node(k))).fold(0.0, f64::max)
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.len()).map(|k| norm(self.node(k))).fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut m = vec![0.0; self.dim];
        for k in 0..self.len() {
            for (mi, x) in m.iter_mut().zip(self.node(k)) {
                *mi += x / n;
            }
        }
        m
    }

    /// Checks the per-segment speed bound `|u_{k+1} − u_k| ≤ limit·h`.
    pub fn check_speed(&self, limit: f64) -> Result<()> {
        let h = self.step();
        for k in 0..self.len() {
            let speed = norm(&self.increment(k)) / h;
            if !(speed <= limit) {
                return Err(Error::Infeasible { segment: k, speed, limit });
            }
        }
        Ok(())
    }

    /// Value of the piecewise-linear interpolant at time `t` (periodic).
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.len();
        let s = (t / self.period).rem_euclid(1.0) * n as f64;
        let k = (s.floor() as usize).min(n - 1);
        let frac = s - k as f64;
        let a = self.node(k);
        let b = self.node(k + 1);
        a.iter().zip(b).map(|(x, y)| x + frac * (y - x)).collect()
    }

    /// Linear resampling onto `n_nodes` uniform nodes.
    pub fn resample(&self, n_nodes: usize) -> Result<Self> {
        if n_nodes == self.len() {
            return Ok(self.clone());
        }
        let h = self.period / n_nodes as f64;
        let nodes = (0..n_nodes).flat_map(|k| self.eval(k as f64 * h)).collect();
        Self::from_nodes(nodes, self.dim, self.period)
    }

    /// Pointwise negation `u ↦ −u`.
    pub fn negated(&self) -> Self {
        PeriodicPath { nodes: self.nodes.iter().map(|x| -x).collect(), dim: self.dim, period: self.period }
    }

    /// Writes the CSV form: header `t,u_1,…,u_n`, one row per node.
    pub fn write_csv<W: Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let mut out = out;
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("u_{i}")));
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.time(k).to_string()];
            row.extend(self.node(k).iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f), comment)
    }

    /// Reads the CSV form; lines starting with `#` are skipped. The period
    /// is `N·h` with `h` taken from the first two time stamps.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(Error::Malformed("path CSV must start with columns t,u_1,...".into()));
        }
        let dim = headers.len() - 1;
        let mut times = Vec::new();
        let mut nodes = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| Error::Malformed(format!("row {}: {e}", line + 2)))
            };
            times.push(parse(&rec[0])?);
            for i in 1..=dim {
                nodes.push(parse(&rec[i])?);
            }
        }
        if times.len() < 2 {
            return Err(Error::Malformed("path CSV needs at least two rows".into()));
        }
        let period = (times[1] - times[0]) * times.len() as f64;
        Self::from_nodes(nodes, dim, period)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn increments(nodes: &[f64], dim: usize) -> Vec<f64> {
    let n = nodes.len() / dim;
    let mut d = vec![0.0; nodes.len()];
    for k in 0..n {
        let next = (k + 1) % n;
        for i in 0..dim {
            d[k * dim + i] = nodes[next * dim + i] - nodes[k * dim + i];
        }
    }
    d
}

fn clamp_increments(d: &mut [f64], dim: usize, radius: f64) {
    for seg in d.chunks_mut(dim) {
        let r = norm(seg);
        if r > radius {
            let s = radius / r;
            seg.iter_mut().for_each(|x| *x *= s);
        }
    }
}

fn remove_mean(d: &mut [f64], dim: usize) {
    let n = (d.len() / dim) as f64;
    for i in 0..dim {
        let m: f64 = d.iter().skip(i).step_by(dim).sum::<f64>() / n;
        d.iter_mut().skip(i).step_by(dim).for_each(|x| *x -= m);
    }
}

/// Projects raw node data onto the discrete constraint set.
///
/// Increments are projected (Dykstra) onto the intersection of the
/// zero-sum subspace and the product of balls `|d_k| ≤ (1 − eps_bd)·L·h`;
/// nodes are rebuilt from the projected increments and shifted back to the
/// raw mean. Input that already satisfies the bound is returned unchanged.
pub fn project_feasible(raw: &[f64], dim: usize, period: f64, speed_limit: f64, eps_bd: f64) -> Result<PeriodicPath> {
    if !(eps_bd > 0.0 && eps_bd < 1.0) {
        return Err(Error::InvalidParameter(format!("eps_bd must lie in (0,1), got {eps_bd}")));
    }
    let template = PeriodicPath::from_nodes(raw.to_vec(), dim, period)?;
    let n = template.len();
    let radius = (1.0 - eps_bd) * speed_limit * template.step();
    let raw_inc = increments(raw, dim);
    if raw_inc.chunks(dim).all(|seg| norm(seg) <= radius) {
        return Ok(template);
    }

    let mut x = raw_inc;
    let mut p = vec![0.0; x.len()];
    let mut q = vec![0.0; x.len()];
    let mut y = x.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..DYKSTRA_MAX_ITER {
        for i in 0..x.len() {
            y[i] = x[i] + p[i];
        }
        clamp_increments(&mut y, dim, radius);
        for i in 0..x.len() {
            p[i] = x[i] + p[i] - y[i];
        }
        let mut xn: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        remove_mean(&mut xn, dim);
        for i in 0..x.len() {
            q[i] = y[i] + q[i] - xn[i];
        }
        residual = xn.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = xn;
        if residual <= DYKSTRA_TOL {
            break;
        }
    }
    if residual > DYKSTRA_TOL {
        return Err(Error::ProjectionNotConverged { residual });
    }
    // y satisfies the ball bounds exactly; spread its tiny closure defect.
    remove_mean(&mut y, dim);

    let mean_raw = template.mean();
    let mut nodes = vec![0.0; raw.len()];
    for k in 1..n {
        for i in 0..dim {
            nodes[k * dim + i] = nodes[(k - 1) * dim + i] + y[(k - 1) * dim + i];
        }
    }
    let rebuilt = PeriodicPath::from_nodes(nodes, dim, period)?;
    let shift: Vec<f64> = mean_raw.iter().zip(rebuilt.mean()).map(|(a, b)| a - b).collect();
    let nodes = rebuilt
        .into_nodes()
        .chunks(dim)
        .flat_map(|c| c.iter().zip(&shift).map(|(a, s)| a + s).collect::<Vec<_>>())
        .collect();
    PeriodicPath::from_nodes(nodes, dim, period)
}

/// Increment vector of a path (used to compare projections).
pub fn increment_vector(p: &PeriodicPath) -> Vec<f64> {
    increments(p.nodes(), p.dim())
}

/// Deterministic random feasible path around `base`.
///
/// Increments are drawn uniformly in the ball of radius `0.9·L·h`, made
/// zero-sum, projected, and the oscillation is shrunk so that
/// `max_k |u_k − mean| ≤ amplitude`.
pub fn random_feasible(
    n_nodes: usize,
    period: f64,
    speed_limit: f64,
    base: &[f64],
    amplitude: f64,
    seed: u64,
) -> Result<PeriodicPath> {
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidParameter("amplitude must be nonnegative".into()));
    }
    let dim = base.len();
    if amplitude == 0.0 {
        return PeriodicPath::constant(base, n_nodes, period);
    }
    let mut rng = sampling::rng(seed);
    let h = period / n_nodes as f64;
    let mut d: Vec<f64> = (0..n_nodes).flat_map(|_| sampling::random_in_ball(&mut rng, dim, 0.9 * speed_limit * h)).collect();
    remove_mean(&mut d, dim);
    let mut nodes = vec![0.0; n_nodes * dim];
    for k in 1..n_nodes {
        for i in 0..dim {
            nodes[k * dim + i] = nodes[(k - 1) * dim + i] + d[(k - 1) * dim + i];
        }
    }
    // Spread the random walk's start over the cycle so paths are not anchored.
    let offset = rng.gen_range(0..n_nodes);
    nodes.rotate_left(offset * dim);
    let projected = project_feasible(&nodes, dim, period, speed_limit, 0.1)?;
    let mean = projected.mean();
    let spread = (0..n_nodes)
        .map(|k| sampling::dist(projected.node(k), &mean))
        .fold(0.0, f64::max);
    let scale = if spread > amplitude { amplitude / spread } else { 1.0 };
    let nodes = projected
        .nodes()
        .chunks(dim)
        .flat_map(|c| c.iter().zip(&mean).zip(base).map(|((x, m), b)| b + scale * (x - m)).collect::<Vec<_>>())
        .collect();
    PeriodicPath::from_nodes(nodes, dim, period)
}

/// Sup-norm distance at nodes after resampling the coarser path to the
/// finer grid.
pub fn path_distance(p: &PeriodicPath, q: &PeriodicPath) -> Result<f64> {
    if (p.period() - q.period()).abs() > 1e-12 * p.period().max(q.period()) {
        return Err(Error::PeriodMismatch(p.period(), q.period()));
    }
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let n = p.len().max(q.len());
    let a = p.resample(n)?;
    let b = q.resample(n)?;
    Ok((0..n).map(|k| sampling::dist(a.node(k), b.node(k))).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_input_is_unchanged() {
        let p = random_feasible(32, 1.0, 1.0, &[0.3, -0.2], 0.2, 5).unwrap();
        let q = project_feasible(p.nodes(), 2, 1.0, 1.0, 1e-6).unwrap();
        assert_eq!(p, q);
        let c = PeriodicPath::constant(&[1.5], 8, 1.0).unwrap();
        assert_eq!(project_feasible(c.nodes(), 1, 1.0, 1.0, 1e-6).unwrap(), c);
    }

    #[test]
    fn sawtooth_is_clamped() {
        let eps = 1e-6;
        let p = project_feasible(&[0.0, 10.0, 0.0, 10.0], 1, 1.0, 1.0, eps).unwrap();
        let bound = 0.25 * (1.0 - eps);
        let inc = increment_vector(&p);
        assert!(inc.iter().all(|d| d.abs() <= bound + 1e-10), "{inc:?}");
        assert!(inc.iter().sum::<f64>().abs() <= 1e-10);
        // symmetric sawtooth: the projection keeps full-size alternating steps
        assert!(inc.iter().all(|d| (d.abs() - bound).abs() <= 1e-10));
        assert!((p.mean()[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn active_projection_with_nonzero_mean_increment() {
        // a ramp whose closing jump violates the bound
        let raw: Vec<f64> = (0..16).map(|k| 0.05 * k as f64).collect();
        let p = project_feasible(&raw, 1, 1.0, 1.0, 1e-6).unwrap();
        let limit = (1.0 - 1e-6) / 16.0;
        let inc = increment_vector(&p);
        assert!(inc.iter().all(|d| d.abs() <= limit + 1e-10));
        assert!(inc.iter().sum::<f64>().abs() <= 1e-10);
    }

    #[test]
    fn invalid_arguments() {
        assert!(project_feasible(&[0.0; 3], 1, 1.0, 1.0, 1e-6).is_err());
        assert!(project_feasible(&[0.0; 4], 1, 1.0, 1.0, 0.0).is_err());
        assert!(random_feasible(8, 1.0, 1.0, &[0.0], -1.0, 0).is_err());
    }

    #[test]
    fn random_paths_are_deterministic_and_feasible() {
        let a = random_feasible(64, 1.0, 1.0, &[0.0], 0.3, 9).unwrap();
        let b = random_feasible(64, 1.0, 1.0, &[0.0], 0.3, 9).unwrap();
        let c = random_feasible(64, 1.0, 1.0, &[0.0], 0.3, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.max_speed() <= 1.0);
        let z = random_feasible(16, 1.0, 1.0, &[2.0, 1.0], 0.0, 1).unwrap();
        assert_eq!(z, PeriodicPath::constant(&[2.0, 1.0], 16, 1.0).unwrap());
    }

    #[test]
    fn distances() {
        let p = random_feasible(64, 1.0, 1.0, &[0.0], 0.4, 1).unwrap();
        assert_eq!(path_distance(&p, &p).unwrap(), 0.0);
        let a = PeriodicPath::constant(&[1.0, 2.0], 8, 1.0).unwrap();
        let b = PeriodicPath::constant(&[4.0, -2.0], 8, 1.0).unwrap();
        assert_eq!(path_distance(&a, &b).unwrap(), 5.0);
        let fine = p.resample(128).unwrap();
        assert!(path_distance(&p, &fine).unwrap() <= 1e-15);
        let other = PeriodicPath::constant(&[0.0], 8, 2.0).unwrap();
        assert!(matches!(path_distance(&p, &other), Err(Error::PeriodMismatch(..))));
    }

    #[test]
    fn resampled_continuous_path_within_lipschitz_bound() {
        // sample a smooth loop directly at N and 2N
        let loop_at = |n: usize| {
            let nodes = (0..n)
                .map(|k| 0.15 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin())
                .collect();
            PeriodicPath::from_nodes(nodes, 1, 1.0).unwrap()
        };
        let coarse = loop_at(64);
        let fine = loop_at(128);
        assert!(path_distance(&coarse, &fine).unwrap() <= 1.0 / 64.0);
    }

    #[test]
    fn csv_roundtrip() {
        let p = random_feasible(16, 2.0, 1.0, &[0.1, 0.2], 0.5, 4).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf, Some("seed=4")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("t,u_1,u_2"));
        let q = PeriodicPath::read_csv(&buf[..]).unwrap();
        assert_eq!(q.len(), 16);
        assert!((q.period() - 2.0).abs() < 1e-12);
        assert!(path_distance(&p, &q).unwrap() == 0.0);
    }
}
