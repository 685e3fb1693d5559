use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::Result;
use crate::fixtures::Fixtures;
use crate::functionals::{energy, FieldState, RadialGrid};
use crate::groundstate::{ground_state_energy, soliton_field, SolitonParams, Sign};
use crate::nlwsolver::evolve::{evolve, SolverSettings, Termination, Trajectory};

/// Relative band around the threshold counted as the equality case.
pub const THRESHOLD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StaticVerdict {
    ScatterPredicted,
    BlowUpPredicted,
    ThresholdCase,
    OutsideRegime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DynamicVerdict {
    Scattered,
    BlewUp,
    Undecided,
}

/// E(W, 0) and ||grad W||^2 against which data are compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticThresholds {
    pub grad_sq_w: f64,
    pub energy_w: f64,
    pub tol: f64,
}

impl StaticThresholds {
    pub fn new(dim: Dimension, grad_sq_w: f64) -> Self {
        StaticThresholds {
            grad_sq_w,
            energy_w: ground_state_energy(grad_sq_w, dim),
            tol: THRESHOLD_TOL,
        }
    }

    pub fn from_fixtures(fixtures: &Fixtures, dim: Dimension) -> Result<Self> {
        Ok(Self::new(dim, fixtures.grad_sq(dim)?))
    }

    /// Thresholds measured on the grid itself, so that the sampled W sits
    /// exactly on the threshold.
    pub fn calibrated(grid: &std::sync::Arc<RadialGrid>) -> Result<Self> {
        let w = soliton_field(&SolitonParams::radial(Sign::Plus, 1.0)?, grid.clone(), 1)?;
        let rep = energy(&w)?;
        Ok(StaticThresholds {
            grad_sq_w: rep.grad_sq,
            energy_w: rep.energy,
            tol: THRESHOLD_TOL,
        })
    }
}

/// (E - E(W,0), ||grad u0||^2 - ||grad W||^2, ||grad u0||^2 + ||u1||^2 - ||grad W||^2)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub energy: f64,
    pub gradient: f64,
    pub full_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationVerdict {
    pub static_verdict: StaticVerdict,
    pub dynamic_verdict: DynamicVerdict,
    pub margins: Margins,
}

pub fn margins(initial: &FieldState, th: &StaticThresholds) -> Result<Margins> {
    let rep = energy(initial)?;
    Ok(Margins {
        energy: rep.energy - th.energy_w,
        gradient: rep.grad_sq - th.grad_sq_w,
        full_norm: rep.grad_sq + rep.ut_sq - th.grad_sq_w,
    })
}

/// Verdict from the margins alone.
pub fn verdict_from_margins(m: &Margins, th: &StaticThresholds) -> StaticVerdict {
    let near_energy = m.energy.abs() <= th.tol * th.energy_w.abs();
    let near_grad = m.gradient.abs() <= th.tol * th.grad_sq_w;
    if near_energy && near_grad {
        StaticVerdict::ThresholdCase
    } else if m.energy >= 0.0 || near_energy {
        StaticVerdict::OutsideRegime
    } else if m.gradient < 0.0 {
        StaticVerdict::ScatterPredicted
    } else {
        StaticVerdict::BlowUpPredicted
    }
}

pub fn classify_static(initial: &FieldState, th: &StaticThresholds) -> Result<StaticVerdict> {
    Ok(verdict_from_margins(&margins(initial, th)?, th))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub horizon: f64,
    pub max_steps: usize,
    pub max_refinements: u32,
}

impl Default for Budget {
    fn default() -> Self {
        let s = SolverSettings::default();
        Budget {
            horizon: s.horizon,
            max_steps: s.max_steps,
            max_refinements: s.max_refinements,
        }
    }
}

pub fn dynamic_verdict(traj: &Trajectory) -> DynamicVerdict {
    match traj.termination {
        Termination::BlowUpDetected { .. } => DynamicVerdict::BlewUp,
        Termination::ScatterDetected { .. } => DynamicVerdict::Scattered,
        _ => DynamicVerdict::Undecided,
    }
}

/// Static verdict plus the fate of a solver run with scatter detection.
pub fn classify_dynamic(
    initial: &FieldState,
    th: &StaticThresholds,
    budget: &Budget,
    base: &SolverSettings,
) -> Result<(ClassificationVerdict, Trajectory)> {
    let m = margins(initial, th)?;
    let settings = SolverSettings {
        horizon: budget.horizon,
        max_steps: budget.max_steps,
        max_refinements: budget.max_refinements,
        scatter: Some(base.scatter.unwrap_or_default()),
        ..base.clone()
    };
    let traj = evolve(initial, &settings)?;
    Ok((
        ClassificationVerdict {
            static_verdict: verdict_from_margins(&m, th),
            dynamic_verdict: dynamic_verdict(&traj),
            margins: m,
        },
        traj,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th() -> StaticThresholds {
        StaticThresholds::new(Dimension::FIVE, 100.0)
    }

    #[test]
    fn verdict_depends_only_on_margins() {
        let t = th();
        let m = |e: f64, g: f64| Margins {
            energy: e,
            gradient: g,
            full_norm: g,
        };
        assert_eq!(verdict_from_margins(&m(-1.0, -5.0), &t), StaticVerdict::ScatterPredicted);
        assert_eq!(verdict_from_margins(&m(-1.0, 5.0), &t), StaticVerdict::BlowUpPredicted);
        assert_eq!(verdict_from_margins(&m(1e-9, -1e-9), &t), StaticVerdict::ThresholdCase);
        assert_eq!(verdict_from_margins(&m(0.5, -5.0), &t), StaticVerdict::OutsideRegime);
        assert_eq!(verdict_from_margins(&m(1e-9, -5.0), &t), StaticVerdict::OutsideRegime);
    }

    #[test]
    fn energy_threshold_is_a_fifth_for_five_dimensions() {
        assert!((th().energy_w - 20.0).abs() < 1e-12);
    }
}
