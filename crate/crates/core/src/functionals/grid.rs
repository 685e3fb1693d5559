use std::sync::Arc;

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};

/// Coordinate map r = phi(xi) with xi sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridMap {
    Uniform,
    /// r = c sinh(xi): spacing ~ c dxi near the origin, ~ r dxi far out.
    Sinh { c: f64 },
}

/// Radial grid on [0, r_max] carrying the trapezoid measure omega r^{N-1} dr.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: Dimension,
    map: GridMap,
    dxi: f64,
    nodes: Vec<f64>,
    jac: Vec<f64>,
    measure: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(dim: Dimension, r_max: f64, m: usize) -> Result<Self> {
        Self::build(dim, GridMap::Uniform, r_max, m)
    }

    pub fn stretched(dim: Dimension, r_max: f64, m: usize, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(NlwError::invalid(format!("stretch parameter must be positive, got {c}")));
        }
        Self::build(dim, GridMap::Sinh { c }, r_max, m)
    }

    fn build(dim: Dimension, map: GridMap, r_max: f64, m: usize) -> Result<Self> {
        if m < 16 {
            return Err(NlwError::invalid(format!("grid needs at least 16 nodes, got {m}")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(NlwError::invalid(format!("r_max must be positive, got {r_max}")));
        }
        let xi_max = match map {
            GridMap::Uniform => r_max,
            GridMap::Sinh { c } => (r_max / c).asinh(),
        };
        let dxi = xi_max / (m - 1) as f64;
        let mut nodes = Vec::with_capacity(m);
        let mut jac = Vec::with_capacity(m);
        for i in 0..m {
            let xi = i as f64 * dxi;
            let (r, j) = match map {
                GridMap::Uniform => (xi, 1.0),
                GridMap::Sinh { c } => (c * xi.sinh(), c * xi.cosh()),
            };
            nodes.push(r);
            jac.push(j);
        }
        nodes[m - 1] = r_max;
        let omega = dim.sphere_area();
        let mut measure: Vec<f64> = nodes
            .iter()
            .zip(&jac)
            .map(|(&r, &j)| omega * dim.radial_weight(r) * j * dxi)
            .collect();
        measure[0] *= 0.5;
        measure[m - 1] *= 0.5;
        Ok(RadialGrid {
            dim,
            map,
            dxi,
            nodes,
            jac,
            measure,
        })
    }

    pub fn into_shared(self) -> Arc<RadialGrid> {
        Arc::new(self)
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn map(&self) -> GridMap {
        self.map
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Trapezoid weights of omega r^{N-1} dr at each node.
    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// Uniform spacing h, if the grid is uniform.
    pub fn spacing(&self) -> Option<f64> {
        match self.map {
            GridMap::Uniform => Some(self.dxi),
            GridMap::Sinh { .. } => None,
        }
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Largest spacing relative to max(1, r): the quantity that controls the
    /// second-order truncation error of scale-invariant integrands.
    pub fn effective_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| (w[1] - w[0]) / w[0].max(1.0))
            .fold(0.0, f64::max)
    }

    /// Number of nodes with 0 < r <= radius.
    pub fn points_within(&self, radius: f64) -> usize {
        self.nodes.iter().filter(|&&r| r > 0.0 && r <= radius).count()
    }

    fn xi_of(&self, r: f64) -> f64 {
        match self.map {
            GridMap::Uniform => r,
            GridMap::Sinh { c } => (r / c).asinh(),
        }
    }

    /// Radial derivative: centered in the interior, zero at the origin,
    /// second-order one-sided at r_max.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let m = self.len();
        assert_eq!(u.len(), m, "field length must match grid");
        let mut du = vec![0.0; m];
        let two_dxi = 2.0 * self.dxi;
        for i in 1..m - 1 {
            du[i] = (u[i + 1] - u[i - 1]) / (two_dxi * self.jac[i]);
        }
        du[m - 1] = (3.0 * u[m - 1] - 4.0 * u[m - 2] + u[m - 3]) / (two_dxi * self.jac[m - 1]);
        du
    }

    /// Sum of measure-weighted samples.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.len(), "field length must match grid");
        self.measure.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Integral of f over a <= r <= b (clamped to the grid), trapezoid in the
    /// grid coordinate with linear interpolation on the partial cells.
    pub fn integrate_range(&self, f: &[f64], a: f64, b: f64) -> f64 {
        assert_eq!(f.len(), self.len(), "field length must match grid");
        let a = a.max(0.0);
        let b = b.min(self.r_max());
        if b <= a {
            return 0.0;
        }
        let omega = self.dim.sphere_area();
        let g = |i: usize| omega * self.dim.radial_weight(self.nodes[i]) * self.jac[i] * f[i];
        let (xa, xb) = (self.xi_of(a) / self.dxi, self.xi_of(b) / self.dxi);
        let m = self.len();
        let ia = (xa.floor() as usize).min(m - 2);
        let ib = (xb.floor() as usize).min(m - 2);
        let lerp = |x: f64, i: usize| {
            let t = x - i as f64;
            (1.0 - t) * g(i) + t * g(i + 1)
        };
        let (ga, gb) = (lerp(xa, ia), lerp(xb, ib));
        if ia == ib {
            return 0.5 * (ga + gb) * (xb - xa) * self.dxi;
        }
        let mut s = 0.5 * (ga + g(ia + 1)) * ((ia + 1) as f64 - xa);
        for i in ia + 1..ib {
            s += 0.5 * (g(i) + g(i + 1));
        }
        s += 0.5 * (g(ib) + gb) * (xb - ib as f64);
        s * self.dxi
    }

    /// Four-point Lagrange interpolation in the grid coordinate; zero beyond r_max.
    pub fn interpolate(&self, u: &[f64], r: f64) -> f64 {
        let m = self.len();
        if r > self.r_max() {
            return 0.0;
        }
        let x = self.xi_of(r.abs()) / self.dxi;
        let i = (x.floor() as isize).clamp(1, m as isize - 3) as usize;
        let t = x - i as f64;
        let (p0, p1, p2, p3) = (u[i - 1], u[i], u[i + 1], u[i + 2]);
        // nodes at -1, 0, 1, 2
        -t * (t - 1.0) * (t - 2.0) / 6.0 * p0 + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * p1
            - (t + 1.0) * t * (t - 2.0) / 2.0 * p2
            + (t + 1.0) * t * (t - 1.0) / 6.0 * p3
    }

    pub fn resample(&self, u: &[f64], target: &RadialGrid) -> Vec<f64> {
        target.nodes.iter().map(|&r| self.interpolate(u, r)).collect()
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        self.dim == other.dim && self.map == other.map && self.nodes.len() == other.nodes.len() && self.dxi == other.dxi
    }
}

/// A pair (u, u_t) sampled on a radial grid at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub grid: Arc<RadialGrid>,
    pub time: f64,
}

impl FieldState {
    pub fn new(grid: Arc<RadialGrid>, u: Vec<f64>, ut: Vec<f64>, time: f64) -> Result<Self> {
        let s = FieldState { u, ut, grid, time };
        s.validate()?;
        Ok(s)
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let m = grid.len();
        FieldState {
            u: vec![0.0; m],
            ut: vec![0.0; m],
            grid,
            time: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.grid.len();
        if self.u.len() != m || self.ut.len() != m {
            return Err(NlwError::GridMismatch(format!(
                "field lengths ({}, {}) do not match grid length {m}",
                self.u.len(),
                self.ut.len()
            )));
        }
        if let Some(node) = self.u.iter().position(|v| !v.is_finite()) {
            return Err(NlwError::NonFinite { node, field: "u" });
        }
        if let Some(node) = self.ut.iter().position(|v| !v.is_finite()) {
            return Err(NlwError::NonFinite { node, field: "ut" });
        }
        if !self.time.is_finite() {
            return Err(NlwError::invalid("state time must be finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> Dimension {
        self.grid.dim()
    }

    pub fn scaled(&self, a: f64) -> FieldState {
        FieldState {
            u: self.u.iter().map(|v| a * v).collect(),
            ut: self.ut.iter().map(|v| a * v).collect(),
            grid: self.grid.clone(),
            time: self.time,
        }
    }

    /// Pointwise sum; the grids must coincide.
    pub fn add(&self, other: &FieldState) -> Result<FieldState> {
        if !self.grid.same_as(&other.grid) {
            return Err(NlwError::GridMismatch("cannot add fields on different grids".into()));
        }
        Ok(FieldState {
            u: self.u.iter().zip(&other.u).map(|(a, b)| a + b).collect(),
            ut: self.ut.iter().zip(&other.ut).map(|(a, b)| a + b).collect(),
            grid: self.grid.clone(),
            time: self.time,
        })
    }

    pub fn sub(&self, other: &FieldState) -> Result<FieldState> {
        self.add(&other.scaled(-1.0))
    }

    /// Time reversal (u, u_t) -> (u, -u_t).
    pub fn reversed(&self) -> FieldState {
        FieldState {
            u: self.u.clone(),
            ut: self.ut.iter().map(|v| -v).collect(),
            grid: self.grid.clone(),
            time: -self.time,
        }
    }

    pub fn resample(&self, target: Arc<RadialGrid>) -> FieldState {
        FieldState {
            u: self.grid.resample(&self.u, &target),
            ut: self.grid.resample(&self.ut, &target),
            grid: target,
            time: self.time,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_starts_at_origin() {
        let g = RadialGrid::uniform(Dimension::THREE, 10.0, 101).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.r_max(), 10.0);
        assert!((g.spacing().unwrap() - 0.1).abs() < 1e-15);
        assert!(RadialGrid::uniform(Dimension::THREE, 10.0, 8).is_err());
    }

    #[test]
    fn measure_integrates_ball_volume() {
        for d in Dimension::ALL {
            let g = RadialGrid::stretched(d, 2.0, 4001, 0.05).unwrap();
            let vol = g.integrate(&vec![1.0; g.len()]);
            let exact = d.sphere_area() * 2f64.powi(d.n() as i32) / d.nf();
            assert!((vol / exact - 1.0).abs() < 1e-5, "{d}: {vol} vs {exact}");
        }
    }

    #[test]
    fn gradient_is_second_order() {
        let err = |m: usize| {
            let g = RadialGrid::uniform(Dimension::FIVE, 3.0, m).unwrap();
            let u: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
            let du = g.gradient(&u);
            g.nodes()
                .iter()
                .zip(&du)
                .map(|(r, d)| (d + 2.0 * r * (-r * r).exp()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(201) / err(401);
        assert!(ratio > 3.5, "ratio {ratio}");
    }

    #[test]
    fn partial_integral_matches_full_and_splits() {
        let g = RadialGrid::stretched(Dimension::FOUR, 50.0, 2001, 0.1).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|r| (-r).exp()).collect();
        let full = g.integrate(&f);
        let whole = g.integrate_range(&f, 0.0, 50.0);
        assert!((whole - full).abs() < 1e-12 * full);
        let split = g.integrate_range(&f, 0.0, 3.3) + g.integrate_range(&f, 3.3, 50.0);
        assert!((split - full).abs() < 1e-12 * full);
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let g = RadialGrid::uniform(Dimension::THREE, 4.0, 41).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|r| r * r * r - r).collect();
        for r in [0.05, 1.234, 3.91] {
            assert!((g.interpolate(&u, r) - (r * r * r - r)).abs() < 1e-12);
        }
    }

    #[test]
    fn state_rejects_nan() {
        let g = RadialGrid::uniform(Dimension::THREE, 1.0, 16).unwrap().into_shared();
        let mut u = vec![0.0; 16];
        u[3] = f64::NAN;
        match FieldState::new(g, u, vec![0.0; 16], 0.0) {
            Err(NlwError::NonFinite { node: 3, field: "u" }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
