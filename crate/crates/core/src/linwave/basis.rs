//! Radial eigenbases of the Laplacian on [0, r_max] for a uniform grid.
//!
//! N = 3: sin(k r)/r, k = n pi / R (Dirichlet), fast sine transform.
//! N = 5: (sin kr - kr cos kr)/r^3, k = n pi / R. These vanish for the
//!        derived field (r^3 u)'/r at R, i.e. 3u + R u_r = 0 at the boundary,
//!        which keeps both synthesis and projection FFT-fast.
//! N = 4: J_1(k r)/(k r), k = j_{1,n} / R (Dirichlet), dense matrices.
//!
//! Every basis has K = m - 2 modes and interpolates on the interior nodes.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use rustdct::{Dct1, DctPlanner, Dst1};

use crate::dimension::Dimension;
use crate::error::{NlwError, Result};
use crate::functionals::RadialGrid;
use crate::linwave::bessel::{j01, j1_zeros, j2};

/// Nodes next to the origin evaluated from stable series instead of the fast transforms.
const NEAR_NODES: usize = 48;
/// Largest grid accepted by the dense N = 4 basis.
pub const MAX_DENSE_NODES: usize = 2048;
const CG_MAX_ITERS: usize = 400;
/// Radius (in grid spacings) below which the normal-equation weight is frozen.
const WEIGHT_FLOOR_NODES: f64 = 4.0;

/// (sin x - x cos x) / x^3
pub(crate) fn g5(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        let mut term = 1.0 / 3.0;
        let mut sum = term;
        for m in 2..12 {
            let mf = m as f64;
            // ratio of consecutive series terms (-1)^{m+1} 2m x^{2m-2} / (2m+1)!
            term *= -x2 * mf / ((mf - 1.0) * (2.0 * mf) * (2.0 * mf + 1.0));
            sum += term;
        }
        sum
    } else {
        (x.sin() - x * x.cos()) / (x * x * x)
    }
}

/// d/dx of g5
pub(crate) fn g5_prime(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        // (-1)^{m+1} 2m (2m-2) x^{2m-3} / (2m+1)!, m >= 2
        let mut term = -x / 15.0;
        let mut sum = term;
        for m in 3..13 {
            let mf = m as f64;
            term *= -x2 * (mf * (mf - 1.0)) / ((mf - 1.0) * (mf - 2.0) * (2.0 * mf) * (2.0 * mf + 1.0));
            sum += term;
        }
        sum
    } else {
        let (s, c) = x.sin_cos();
        (x * x * s - 3.0 * s + 3.0 * x * c) / (x * x * x * x)
    }
}

/// sin(x)/x
fn s0(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// J_1(x)/x and its derivative -J_2(x)/x
fn bessel_mode(x: f64) -> (f64, f64) {
    if x < 1e-3 {
        return (0.5 - x * x / 16.0, -x / 8.0);
    }
    let (_, b) = j01(x);
    (b / x, -j2(x) / x)
}

#[derive(Clone)]
enum Kind {
    Sine {
        dst: Arc<dyn Dst1<f64>>,
        dct: Arc<dyn Dct1<f64>>,
        near_u: Vec<f64>,
        near_du: Vec<f64>,
    },
    Dense {
        phi: DMatrix<f64>,
        dphi: DMatrix<f64>,
        lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    },
}

/// Eigenbasis together with its transform plans.
#[derive(Clone)]
pub struct SpectralBasis {
    dim: Dimension,
    grid: Arc<RadialGrid>,
    h: f64,
    k: Vec<f64>,
    norms: Vec<f64>,
    near: usize,
    kind: Kind,
}

impl std::fmt::Debug for SpectralBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralBasis")
            .field("dim", &self.dim)
            .field("nodes", &self.grid.len())
            .field("r_max", &self.grid.r_max())
            .field("modes", &self.k.len())
            .finish()
    }
}

type CacheKey = (u32, usize, u64);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<SpectralBasis>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<SpectralBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

impl SpectralBasis {
    /// Basis for `grid`, shared through a process-wide cache.
    pub fn shared(grid: &Arc<RadialGrid>) -> Result<Arc<SpectralBasis>> {
        let key = (grid.dim().n(), grid.len(), grid.r_max().to_bits());
        if let Some(b) = cache().read().expect("basis cache poisoned").get(&key) {
            if b.grid.same_as(grid) {
                return Ok(b.clone());
            }
        }
        let built = Arc::new(SpectralBasis::new(grid.clone())?);
        cache()
            .write()
            .expect("basis cache poisoned")
            .insert(key, built.clone());
        Ok(built)
    }

    pub fn new(grid: Arc<RadialGrid>) -> Result<Self> {
        let h = grid
            .spacing()
            .ok_or_else(|| NlwError::invalid("spectral propagation needs a uniform grid"))?;
        let m = grid.len();
        let kk = m - 2;
        let r_max = grid.r_max();
        let dim = grid.dim();
        let near = NEAR_NODES.min(m - 1);
        match dim.n() {
            3 | 5 => {
                let k: Vec<f64> = (1..=kk).map(|n| n as f64 * PI / r_max).collect();
                let norms: Vec<f64> = if dim.n() == 3 {
                    vec![r_max / 2.0; kk]
                } else {
                    k.iter().map(|k| k * k * r_max / 2.0).collect()
                };
                let mut planner = DctPlanner::new();
                let dst = planner.plan_dst1(kk);
                let dct = planner.plan_dct1(m);
                let mut near_u = vec![0.0; near * kk];
                let mut near_du = vec![0.0; near * kk];
                for i in 0..near {
                    let r = grid.nodes()[i];
                    for (j, &kj) in k.iter().enumerate() {
                        let x = kj * r;
                        let (u, du) = if dim.n() == 3 {
                            (kj * s0(x), -kj * kj * x * g5(x))
                        } else {
                            (kj.powi(3) * g5(x), kj.powi(4) * g5_prime(x))
                        };
                        near_u[i * kk + j] = u;
                        near_du[i * kk + j] = du;
                    }
                }
                Ok(SpectralBasis {
                    dim,
                    grid,
                    h,
                    k,
                    norms,
                    near,
                    kind: Kind::Sine {
                        dst,
                        dct,
                        near_u,
                        near_du,
                    },
                })
            }
            4 => {
                if m > MAX_DENSE_NODES {
                    return Err(NlwError::invalid(format!(
                        "the N=4 basis is dense; at most {MAX_DENSE_NODES} nodes, got {m}"
                    )));
                }
                let k: Vec<f64> = j1_zeros(kk).into_iter().map(|z| z / r_max).collect();
                let norms: Vec<f64> = k.iter().map(|&kj| r_max * r_max * j2(kj * r_max).powi(2) / (2.0 * kj * kj)).collect();
                let mut phi = DMatrix::zeros(m, kk);
                let mut dphi = DMatrix::zeros(m, kk);
                for (i, &r) in grid.nodes().iter().enumerate() {
                    for (j, &kj) in k.iter().enumerate() {
                        let (v, dv) = bessel_mode(kj * r);
                        phi[(i, j)] = v;
                        dphi[(i, j)] = kj * dv;
                    }
                }
                let interior = phi.rows(1, kk).into_owned();
                let lu = interior.lu();
                Ok(SpectralBasis {
                    dim,
                    grid,
                    h,
                    k,
                    norms,
                    near,
                    kind: Kind::Dense { phi, dphi, lu },
                })
            }
            n => Err(NlwError::UnsupportedDimension(n)),
        }
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Mode frequencies, strictly increasing.
    pub fn frequencies(&self) -> &[f64] {
        &self.k
    }

    /// Squared mode norms in the weight r^{N-1} (without the sphere area).
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn modes(&self) -> usize {
        self.k.len()
    }

    fn dst(&self, dst: &Arc<dyn Dst1<f64>>, mut x: Vec<f64>) -> Vec<f64> {
        dst.process_dst1(&mut x);
        x
    }

    /// Sum over modes of coef_n k_n^p cos(k_n r_i) at every node.
    fn cos_sum(&self, dct: &Arc<dyn Dct1<f64>>, coef: &[f64], p: i32) -> Vec<f64> {
        let m = self.grid.len();
        let mut x = vec![0.0; m];
        for (j, (&c, &kj)) in coef.iter().zip(&self.k).enumerate() {
            x[j + 1] = c * kj.powi(p);
        }
        dct.process_dct1(&mut x);
        x
    }

    /// Sum over modes of coef_n k_n^p sin(k_n r_i) at every node.
    fn sin_sum(&self, dst: &Arc<dyn Dst1<f64>>, coef: &[f64], p: i32) -> Vec<f64> {
        let m = self.grid.len();
        let s = self.dst(dst, coef.iter().zip(&self.k).map(|(c, k)| c * k.powi(p)).collect());
        let mut out = vec![0.0; m];
        out[1..m - 1].copy_from_slice(&s);
        out
    }

    fn near_block(&self, block: &[f64], coef: &[f64], out: &mut [f64]) {
        let kk = self.k.len();
        for (i, o) in out.iter_mut().enumerate().take(self.near) {
            let row = &block[i * kk..(i + 1) * kk];
            *o = row.iter().zip(coef).map(|(a, b)| a * b).sum();
        }
    }

    /// Field values at every node.
    pub fn synthesize(&self, coef: &[f64]) -> Vec<f64> {
        assert_eq!(coef.len(), self.k.len());
        let r = self.grid.nodes();
        match &self.kind {
            Kind::Sine { dst, dct, near_u, .. } => {
                let s = self.sin_sum(dst, coef, 0);
                let mut u = if self.dim.n() == 3 {
                    s.iter().zip(r).map(|(s, r)| if *r > 0.0 { s / r } else { 0.0 }).collect::<Vec<_>>()
                } else {
                    let c = self.cos_sum(dct, coef, 1);
                    s.iter()
                        .zip(&c)
                        .zip(r)
                        .map(|((s, c), r)| if *r > 0.0 { (s - r * c) / (r * r * r) } else { 0.0 })
                        .collect()
                };
                self.near_block(near_u, coef, &mut u);
                u
            }
            Kind::Dense { phi, .. } => (phi * DVector::from_column_slice(coef)).as_slice().to_vec(),
        }
    }

    /// Radial derivative at every node.
    pub fn synthesize_derivative(&self, coef: &[f64]) -> Vec<f64> {
        assert_eq!(coef.len(), self.k.len());
        let r = self.grid.nodes();
        match &self.kind {
            Kind::Sine { dst, dct, near_du, .. } => {
                let s = self.sin_sum(dst, coef, 0);
                let c = self.cos_sum(dct, coef, 1);
                let mut du: Vec<f64> = if self.dim.n() == 3 {
                    (0..r.len())
                        .map(|i| if r[i] > 0.0 { (r[i] * c[i] - s[i]) / (r[i] * r[i]) } else { 0.0 })
                        .collect()
                } else {
                    let s2 = self.sin_sum(dst, coef, 2);
                    (0..r.len())
                        .map(|i| {
                            let ri = r[i];
                            if ri > 0.0 {
                                (ri * ri * s2[i] - 3.0 * s[i] + 3.0 * ri * c[i]) / ri.powi(4)
                            } else {
                                0.0
                            }
                        })
                        .collect()
                };
                self.near_block(near_du, coef, &mut du);
                du
            }
            Kind::Dense { dphi, .. } => (dphi * DVector::from_column_slice(coef)).as_slice().to_vec(),
        }
    }

    /// Projection <f, psi_n> / <psi_n, psi_n> with trapezoid weights.
    pub fn galerkin(&self, f: &[f64]) -> Vec<f64> {
        let m = self.grid.len();
        assert_eq!(f.len(), m);
        let r = self.grid.nodes();
        match &self.kind {
            Kind::Sine { dst, dct, .. } => {
                let fr: Vec<f64> = (1..m - 1).map(|i| f[i] * r[i]).collect();
                let s = self.dst(dst, fr);
                if self.dim.n() == 3 {
                    s.iter().zip(&self.norms).map(|(s, n)| self.h * s / n).collect()
                } else {
                    let mut x: Vec<f64> = (0..m).map(|i| f[i] * r[i] * r[i]).collect();
                    dct.process_dct1(&mut x);
                    (0..self.k.len())
                        .map(|j| self.h * (s[j] - self.k[j] * x[j + 1]) / self.norms[j])
                        .collect()
                }
            }
            Kind::Dense { phi, .. } => {
                let w: Vec<f64> = (0..m)
                    .map(|i| {
                        let end = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
                        end * self.h * r[i].powi(3) * f[i]
                    })
                    .collect();
                let proj = phi.transpose() * DVector::from_vec(w);
                proj.iter().zip(&self.norms).map(|(p, n)| p / n).collect()
            }
        }
    }

    /// Coefficients interpolating `u` on the interior nodes.
    pub fn analyze(&self, u: &[f64]) -> Vec<f64> {
        let m = self.grid.len();
        assert_eq!(u.len(), m);
        match &self.kind {
            Kind::Sine { .. } if self.dim.n() == 3 => self.galerkin(u),
            Kind::Sine { .. } => self.interpolate_cg(u),
            Kind::Dense { lu, .. } => {
                let rhs = DVector::from_column_slice(&u[1..m - 1]);
                lu.solve(&rhs).map(|v| v.as_slice().to_vec()).unwrap_or_else(|| vec![f64::NAN; m - 2])
            }
        }
    }

    /// sum_i y_i psi_n(r_i) over the interior nodes (transpose of synthesis).
    fn transpose_apply(&self, y: &[f64]) -> Vec<f64> {
        let m = self.grid.len();
        let kk = self.k.len();
        let r = self.grid.nodes();
        let Kind::Sine { dst, dct, near_u, .. } = &self.kind else {
            unreachable!("transpose_apply is only used by the sine bases")
        };
        let far = |i: usize| i >= self.near && i < m - 1;
        let ys: Vec<f64> = (1..m - 1).map(|i| if far(i) { y[i] / r[i].powi(3) } else { 0.0 }).collect();
        let mut out = self.dst(dst, ys);
        let mut yc: Vec<f64> = (0..m).map(|i| if far(i) { y[i] / (r[i] * r[i]) } else { 0.0 }).collect();
        dct.process_dct1(&mut yc);
        for j in 0..kk {
            // interior entries of the type-I cosine transform carry unit weight
            out[j] -= self.k[j] * yc[j + 1];
        }
        for i in 1..self.near.min(m - 1) {
            let row = &near_u[i * kk..(i + 1) * kk];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * y[i];
            }
        }
        out
    }

    /// Exact interior interpolation by preconditioned conjugate gradients on
    /// S^T D S beta = S^T D u. Any positive D gives the same solution; the
    /// weight h max(r, r_c)^4 keeps the system close to the diagonal norms.
    fn interpolate_cg(&self, u: &[f64]) -> Vec<f64> {
        let m = self.grid.len();
        let r = self.grid.nodes();
        let floor = WEIGHT_FLOOR_NODES * self.h;
        let d: Vec<f64> = (0..m)
            .map(|i| if i == 0 || i == m - 1 { 0.0 } else { self.h * r[i].max(floor).powi(4) })
            .collect();
        let apply = |beta: &[f64]| -> Vec<f64> {
            let su = self.synthesize(beta);
            let y: Vec<f64> = su.iter().zip(&d).map(|(a, b)| a * b).collect();
            self.transpose_apply(&y)
        };
        let y: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a * b).collect();
        let rhs = self.transpose_apply(&y);
        let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&self.norms).map(|(a, n)| a / n).collect() };
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

        let mut beta = precond(&rhs);
        let ab = apply(&beta);
        let mut res: Vec<f64> = rhs.iter().zip(&ab).map(|(a, b)| a - b).collect();
        let mut z = precond(&res);
        let mut p = z.clone();
        let mut rz = dot(&res, &z);
        let target = 1e-30 * dot(&rhs, &precond(&rhs)).max(f64::MIN_POSITIVE);
        for _ in 0..CG_MAX_ITERS {
            if rz <= target {
                break;
            }
            let ap = apply(&p);
            let alpha = rz / dot(&p, &ap);
            for j in 0..beta.len() {
                beta[j] += alpha * p[j];
                res[j] -= alpha * ap[j];
            }
            z = precond(&res);
            let rz_new = dot(&res, &z);
            let ratio = rz_new / rz;
            rz = rz_new;
            for j in 0..p.len() {
                p[j] = z[j] + ratio * p[j];
            }
        }
        beta
    }

    /// Mode value and radial derivative at an arbitrary radius.
    pub fn mode_at(&self, j: usize, r: f64) -> (f64, f64) {
        let kj = self.k[j];
        let x = kj * r;
        match self.dim.n() {
            3 => (kj * s0(x), -kj * kj * x * g5(x)),
            5 => (kj.powi(3) * g5(x), kj.powi(4) * g5_prime(x)),
            _ => {
                let (v, dv) = bessel_mode(x);
                (v, kj * dv)
            }
        }
    }

    /// (u(r), u_r(r)) from coefficients; O(K).
    pub fn eval_at(&self, coef: &[f64], r: f64) -> (f64, f64) {
        let mut u = 0.0;
        let mut du = 0.0;
        for (j, c) in coef.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let (v, dv) = self.mode_at(j, r);
            u += c * v;
            du += c * dv;
        }
        (u, du)
    }

    /// Free energy 1/2 (||grad u||^2 + ||u_t||^2) of a coefficient pair.
    pub fn mode_energy(&self, beta: &[f64], gamma: &[f64]) -> f64 {
        let omega = self.dim.sphere_area();
        0.5 * omega
            * self
                .k
                .iter()
                .zip(&self.norms)
                .zip(beta.iter().zip(gamma))
                .map(|((k, n), (b, g))| n * (k * k * b * b + g * g))
                .sum::<f64>()
    }

    /// (||grad u||^2, ||u_t||^2) of a coefficient pair.
    pub fn mode_split(&self, beta: &[f64], gamma: &[f64]) -> (f64, f64) {
        let omega = self.dim.sphere_area();
        let mut grad = 0.0;
        let mut kin = 0.0;
        for ((k, n), (b, g)) in self.k.iter().zip(&self.norms).zip(beta.iter().zip(gamma)) {
            grad += n * k * k * b * b;
            kin += n * g * g;
        }
        (omega * grad, omega * kin)
    }
}
