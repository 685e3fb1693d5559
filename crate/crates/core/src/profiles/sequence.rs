use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{NlwError, Result};
use crate::functionals::{FieldState, RadialGrid};
use crate::groundstate::{soliton_field, SolitonParams, MIN_BUBBLE_POINTS};
use crate::linwave::{SpectralState, WindowRule};

/// n -> coef * n^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Law {
    pub coef: f64,
    pub exponent: f64,
}

impl Law {
    pub fn constant(value: f64) -> Self {
        Law {
            coef: value,
            exponent: 0.0,
        }
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        Law { coef, exponent }
    }

    pub fn at(&self, n: usize) -> f64 {
        self.coef * (n as f64).powf(self.exponent)
    }
}

/// (lambda_n, t_n); translations vanish in radial symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSeq {
    pub scale: Law,
    pub time: Law,
}

impl ParamSeq {
    pub fn core(scale: Law) -> Self {
        ParamSeq {
            scale,
            time: Law::constant(0.0),
        }
    }

    pub fn scale_at(&self, n: usize) -> f64 {
        self.scale.at(n)
    }

    pub fn time_at(&self, n: usize) -> f64 {
        self.time.at(n)
    }
}

#[derive(Debug, Clone)]
pub enum ProfileKind {
    /// Static +-W bubble; the soliton's own scale multiplies lambda_n.
    CoreSoliton(SolitonParams),
    /// Free wave with the given data at time 0, on a uniform profile grid.
    ScatteringLinear(FieldState),
}

#[derive(Debug, Clone)]
pub struct ProfileSpec {
    pub kind: ProfileKind,
    pub params: ParamSeq,
}

impl ProfileSpec {
    pub fn core(soliton: SolitonParams, scale: Law) -> Result<Self> {
        Self::new(ProfileKind::CoreSoliton(soliton), ParamSeq::core(scale))
    }

    pub fn scattering(data: FieldState, params: ParamSeq) -> Result<Self> {
        Self::new(ProfileKind::ScatteringLinear(data), params)
    }

    pub fn new(kind: ProfileKind, params: ParamSeq) -> Result<Self> {
        if !(params.scale.coef > 0.0 && params.scale.coef.is_finite() && params.scale.exponent.is_finite()) {
            return Err(NlwError::invalid("profile scales must be positive"));
        }
        match &kind {
            ProfileKind::CoreSoliton(s) => {
                if params.time.coef != 0.0 {
                    return Err(NlwError::invalid("a core profile has t_n = 0 for every n"));
                }
                if s.boost != 0.0 {
                    return Err(NlwError::invalid("radial profiles carry no boost"));
                }
            }
            ProfileKind::ScatteringLinear(data) => {
                data.validate()?;
                if data.grid.spacing().is_none() {
                    return Err(NlwError::invalid("scattering profiles live on a uniform grid"));
                }
                // |t_n / lambda_n| = |ct / cl| n^{et - el} must diverge
                if params.time.coef == 0.0 || !(params.time.exponent > params.scale.exponent) {
                    return Err(NlwError::invalid("a scattering profile needs |t_n / lambda_n| -> infinity"));
                }
            }
        }
        Ok(ProfileSpec { kind, params })
    }

    pub fn is_core(&self) -> bool {
        matches!(self.kind, ProfileKind::CoreSoliton(_))
    }

    /// U_{L,n}(0) = lambda^{-(N-2)/2} U_L(-t_n/lambda, r/lambda) and its time derivative, on `grid`.
    pub fn component(&self, grid: &Arc<RadialGrid>, n: usize) -> Result<FieldState> {
        let lam = self.params.scale_at(n);
        match &self.kind {
            ProfileKind::CoreSoliton(s) => {
                let p = SolitonParams::radial(s.sign, s.scale * lam)?;
                soliton_field(&p, grid.clone(), MIN_BUBBLE_POINTS)
            }
            ProfileKind::ScatteringLinear(data) => {
                if data.dim() != grid.dim() {
                    return Err(NlwError::GridMismatch(format!(
                        "profile in {} placed on a grid in {}",
                        data.dim(),
                        grid.dim()
                    )));
                }
                let points = grid.points_within(lam);
                if points < MIN_BUBBLE_POINTS {
                    return Err(NlwError::Unresolved {
                        scale: lam,
                        points,
                        required: MIN_BUBBLE_POINTS,
                    });
                }
                let s = -self.params.time_at(n) / lam;
                if s != 0.0 {
                    WindowRule::default().check(data, s)?;
                }
                let spec = SpectralState::from_field(data)?.evolve(s);
                if lam == 1.0 && grid.same_as(&data.grid) {
                    let mut f = spec.to_field();
                    f.time = 0.0;
                    return Ok(f);
                }
                let a = grid.dim().scaling_exponent();
                let edge = data.grid.r_max();
                let (amp, amp_t) = (lam.powf(-a), lam.powf(-a - 1.0));
                let mut u = Vec::with_capacity(grid.len());
                let mut ut = Vec::with_capacity(grid.len());
                for &r in grid.nodes() {
                    let y = r / lam;
                    if y > edge {
                        u.push(0.0);
                        ut.push(0.0);
                    } else {
                        let (v, _, vt) = spec.eval_at(y);
                        u.push(amp * v);
                        ut.push(amp_t * vt);
                    }
                }
                FieldState::new(grid.clone(), u, ut, 0.0)
            }
        }
    }
}

/// One element of a profile sequence with its pieces kept apart.
#[derive(Debug, Clone)]
pub struct SequenceMember {
    pub n: usize,
    pub state: FieldState,
    /// U^j_{L,n}(0) for every profile, in input order.
    pub components: Vec<FieldState>,
    pub radiation: FieldState,
}

pub fn synthesize_sequence(
    specs: &[ProfileSpec],
    grid: &Arc<RadialGrid>,
    n: usize,
    radiation: Option<&FieldState>,
) -> Result<SequenceMember> {
    let radiation = match radiation {
        Some(w) => {
            if !w.grid.same_as(grid) {
                return Err(NlwError::GridMismatch("radiation lives on a different grid".into()));
            }
            let mut w = w.clone();
            w.time = 0.0;
            w
        }
        None => FieldState::zeros(grid.clone()),
    };
    let components = specs.iter().map(|s| s.component(grid, n)).collect::<Result<Vec<_>>>()?;
    let mut state = radiation.clone();
    for c in &components {
        state = state.add(c)?;
    }
    Ok(SequenceMember {
        n,
        state,
        components,
        radiation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDivergence {
    pub j: usize,
    pub k: usize,
    /// (n, lambda_j/lambda_k + lambda_k/lambda_j + |t_j - t_k|/lambda_j)
    pub values: Vec<(usize, f64)>,
    pub orthogonal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityTable {
    pub pairs: Vec<PairDivergence>,
}

impl OrthogonalityTable {
    pub fn all_orthogonal(&self) -> bool {
        self.pairs.iter().all(|p| p.orthogonal)
    }
}

/// Pairwise parameter divergence along `n_range`; a pair counts as orthogonal
/// when its value grows strictly at every step.
pub fn orthogonality_check(specs: &[ProfileSpec], n_range: &[usize]) -> Result<OrthogonalityTable> {
    if specs.len() < 2 {
        return Err(NlwError::invalid("orthogonality needs at least two profiles"));
    }
    if n_range.len() < 2 || n_range.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NlwError::invalid("n_range must hold at least two increasing indices"));
    }
    let mut pairs = Vec::new();
    for j in 0..specs.len() {
        for k in j + 1..specs.len() {
            let (pj, pk) = (&specs[j].params, &specs[k].params);
            let values: Vec<(usize, f64)> = n_range
                .iter()
                .map(|&n| {
                    let (lj, lk) = (pj.scale_at(n), pk.scale_at(n));
                    (n, lj / lk + lk / lj + (pj.time_at(n) - pk.time_at(n)).abs() / lj)
                })
                .collect();
            let orthogonal = values.windows(2).all(|w| w[1].1 > w[0].1 * (1.0 + 1e-9));
            pairs.push(PairDivergence { j, k, values, orthogonal });
        }
    }
    Ok(OrthogonalityTable { pairs })
}
