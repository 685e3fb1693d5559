use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::Result;
use crate::functionals::energy::{energy, sobolev_constant, EnergyReport};
use crate::functionals::grid::FieldState;

/// f(y) = y/2 - (N-2)/(2N) C_N^{2N/(N-2)} y^{N/(N-2)}; the energy lower bound
/// E(v, 0) >= f(||grad v||^2) given by the sharp Sobolev inequality.
pub fn variational_f(y: f64, dim: Dimension, c_n: f64) -> f64 {
    let n = dim.nf();
    0.5 * y - dim.potential_weight() * c_n.powf(dim.critical_exponent()) * y.powf(n / (n - 2.0))
}

/// Ground-state reference values used by every threshold test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub dim: Dimension,
    /// ||grad W||^2
    pub grad_sq_w: f64,
    /// E(W, 0) = ||grad W||^2 / N
    pub energy_w: f64,
    pub c_n: f64,
    /// Relative discretization slack applied to conclusion margins.
    pub slack: f64,
}

impl Thresholds {
    pub fn new(dim: Dimension, grad_sq_w: f64) -> Result<Self> {
        Ok(Thresholds {
            dim,
            grad_sq_w,
            energy_w: grad_sq_w / dim.nf(),
            c_n: sobolev_constant(dim, grad_sq_w)?,
            slack: 0.0,
        })
    }

    /// Slack c1 h^2 + c2 / r_max^{N-2} for a given grid, with c1 = c2 = 10.
    pub fn with_grid_slack(mut self, grid: &crate::functionals::RadialGrid) -> Self {
        let h = grid.effective_spacing();
        self.slack = 10.0 * h * h + 10.0 / grid.r_max().powi(self.dim.n() as i32 - 2);
        self
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn f(&self, y: f64) -> f64 {
        variational_f(y, self.dim, self.c_n)
    }

    /// Critical point of f.
    pub fn y_c(&self) -> f64 {
        self.c_n.powf(-self.dim.nf())
    }

    /// Positive root of f.
    pub fn y_star(&self) -> f64 {
        (self.dim.nf() / (self.dim.nf() - 2.0)).powf(self.dim.scaling_exponent()) * self.y_c()
    }

    /// Inverse of f on its increasing branch [0, y_c]; `value` is clamped to [0, f(y_c)].
    pub fn f_inverse_increasing(&self, value: f64) -> f64 {
        let yc = self.y_c();
        let target = value.clamp(0.0, self.f(yc));
        let (mut lo, mut hi) = (0.0, yc);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.f(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lemma {
    /// Energy trapping: ||grad v||^2 <= (1 - dbar) G and the coercivity bound.
    GradientTrapping,
    /// ||grad v||^2 <= y* implies E(v, 0) >= 0.
    EnergyNonnegative,
    /// Quantitative positivity away from 0 and y*.
    EnergyCoercive,
    /// ||grad v||^2 <= N E(v, 0) below the ground state.
    GradientByEnergy,
    /// ||grad v||^2 <= G implies ||v||_p^p <= ||grad v||^2.
    PotentialBelowGradient,
    /// Below threshold energy: ||grad u0|| < G iff ||grad u0||^2 + ||u1||^2 < G.
    SubThresholdEquivalence,
    /// Below threshold energy: ||grad u0|| > G iff ||grad u0||^2 + ||u1||^2 > G.
    SuperThresholdEquivalence,
    /// ||grad u0||^2 + (N-2)/2 ||u1||^2 < G under the scattering hypotheses.
    WeightedKineticBound,
}

impl Lemma {
    pub const ALL: [Lemma; 8] = [
        Lemma::GradientTrapping,
        Lemma::EnergyNonnegative,
        Lemma::EnergyCoercive,
        Lemma::GradientByEnergy,
        Lemma::PotentialBelowGradient,
        Lemma::SubThresholdEquivalence,
        Lemma::SuperThresholdEquivalence,
        Lemma::WeightedKineticBound,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Lemma::GradientTrapping => "gradient_trapping",
            Lemma::EnergyNonnegative => "energy_nonnegative",
            Lemma::EnergyCoercive => "energy_coercive",
            Lemma::GradientByEnergy => "gradient_by_energy",
            Lemma::PotentialBelowGradient => "potential_below_gradient",
            Lemma::SubThresholdEquivalence => "subthreshold_equivalence",
            Lemma::SuperThresholdEquivalence => "superthreshold_equivalence",
            Lemma::WeightedKineticBound => "weighted_kinetic_bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NotApplicable,
    Holds,
    Falsified,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::NotApplicable => "not_applicable",
            Verdict::Holds => "holds",
            Verdict::Falsified => "falsified",
        }
    }
}

/// Outcome of one inequality on one state. Margins are in units of ||grad W||^2;
/// positive means satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaOutcome {
    pub lemma: Lemma,
    pub hypothesis_met: bool,
    pub conclusion_met: bool,
    pub hypothesis_margin: f64,
    pub conclusion_margin: f64,
    pub verdict: Verdict,
}

impl LemmaOutcome {
    fn new(lemma: Lemma, hypothesis_margin: f64, strict: bool, conclusion_margin: f64, slack: f64) -> Self {
        let hypothesis_met = if strict { hypothesis_margin > 0.0 } else { hypothesis_margin >= 0.0 };
        let conclusion_met = conclusion_margin >= -slack;
        let verdict = match (hypothesis_met, conclusion_met) {
            (false, _) => Verdict::NotApplicable,
            (true, true) => Verdict::Holds,
            (true, false) => Verdict::Falsified,
        };
        LemmaOutcome {
            lemma,
            hypothesis_met,
            conclusion_met,
            hypothesis_margin,
            conclusion_margin,
            verdict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateReport {
    pub energy: EnergyReport,
    pub outcomes: Vec<LemmaOutcome>,
}

impl PredicateReport {
    pub fn get(&self, lemma: Lemma) -> Option<&LemmaOutcome> {
        self.outcomes.iter().find(|o| o.lemma == lemma)
    }

    pub fn falsifications(&self) -> usize {
        self.outcomes.iter().filter(|o| o.verdict == Verdict::Falsified).count()
    }
}

/// Width of the band used by the quantitative positivity check, as a fraction of G.
pub const COERCIVE_BAND: f64 = 0.05;

/// Static inequalities on v = u0: gradient trapping, nonnegativity and
/// coercivity of E(v, 0), the gradient-by-energy bound and the potential bound.
pub fn check_trapping(state: &FieldState, th: &Thresholds) -> Result<PredicateReport> {
    let rep = energy(state)?;
    Ok(PredicateReport {
        outcomes: trapping_outcomes(&rep, th),
        energy: rep,
    })
}

fn trapping_outcomes(rep: &EnergyReport, th: &Thresholds) -> Vec<LemmaOutcome> {
    let big_g = th.grad_sq_w;
    let n = th.dim.nf();
    let g = rep.grad_sq;
    let p = rep.lp_crit;
    let e0 = rep.static_energy();
    let ystar = th.y_star();
    let mut out = Vec::with_capacity(5);

    // trapping: the largest admissible d0 is 1 - E0/E_W; dbar follows from the
    // monotone branch of f
    {
        let d0 = 1.0 - e0 / th.energy_w;
        let hyp = ((big_g - g) / big_g).min(d0);
        let y_bound = th.f_inverse_increasing((1.0 - d0) * th.energy_w);
        let dbar = 1.0 - y_bound / big_g;
        let c1 = ((1.0 - dbar) * big_g - g) / big_g;
        let coercive = 1.0 - (1.0 - dbar).max(0.0).powf(2.0 / (n - 2.0));
        let c2 = ((g - p) - coercive * g) / big_g;
        out.push(LemmaOutcome::new(Lemma::GradientTrapping, hyp, true, c1.min(c2), th.slack));
    }
    out.push(LemmaOutcome::new(
        Lemma::EnergyNonnegative,
        (ystar - g) / big_g,
        false,
        e0 / big_g,
        th.slack,
    ));
    {
        let eps = COERCIVE_BAND * big_g;
        let hyp = ((g - eps) / big_g).min((ystar - eps - g) / big_g);
        // f is concave, so its minimum over [eps, y* - eps] sits at an endpoint
        let c_eps = th.f(eps).min(th.f(ystar - eps));
        out.push(LemmaOutcome::new(Lemma::EnergyCoercive, hyp, true, (e0 - c_eps) / big_g, th.slack));
    }
    out.push(LemmaOutcome::new(
        Lemma::GradientByEnergy,
        ((big_g - g) / big_g).min((th.energy_w - e0) / big_g),
        false,
        (n * e0 - g) / big_g,
        th.slack,
    ));
    out.push(LemmaOutcome::new(
        Lemma::PotentialBelowGradient,
        (big_g - g) / big_g,
        false,
        (g - p) / big_g,
        th.slack,
    ));
    out
}

/// Signed agreement of two strict inequalities a > 0 and b > 0: positive when
/// both sides agree, by the smaller of the two distances to equality.
fn biconditional_margin(a: f64, b: f64) -> f64 {
    let d = a.abs().min(b.abs());
    if (a > 0.0) == (b > 0.0) {
        d
    } else {
        -d
    }
}

/// Threshold equivalences for (u0, u1) and the weighted kinetic bound. The
/// equivalences only apply when E(u0, u1) < E(W, 0); otherwise they are
/// reported as not applicable.
pub fn check_equivalences(state: &FieldState, th: &Thresholds) -> Result<PredicateReport> {
    let rep = energy(state)?;
    Ok(PredicateReport {
        outcomes: equivalence_outcomes(&rep, th),
        energy: rep,
    })
}

fn equivalence_outcomes(rep: &EnergyReport, th: &Thresholds) -> Vec<LemmaOutcome> {
    let big_g = th.grad_sq_w;
    let g = rep.grad_sq;
    let k = rep.ut_sq;
    let below = (th.energy_w - rep.energy) / big_g;
    let sub = biconditional_margin((big_g - g) / big_g, (big_g - g - k) / big_g);
    let sup = biconditional_margin((g - big_g) / big_g, (g + k - big_g) / big_g);
    let weighted = (big_g - g - th.dim.scaling_exponent() * k) / big_g;
    vec![
        LemmaOutcome::new(Lemma::SubThresholdEquivalence, below, true, sub, th.slack),
        LemmaOutcome::new(Lemma::SuperThresholdEquivalence, below, true, sup, th.slack),
        LemmaOutcome::new(
            Lemma::WeightedKineticBound,
            below.min((big_g - g) / big_g),
            true,
            weighted,
            th.slack,
        ),
    ]
}

/// Both families of checks on one state.
pub fn check_all(state: &FieldState, th: &Thresholds) -> Result<PredicateReport> {
    let rep = energy(state)?;
    let mut outcomes = trapping_outcomes(&rep, th);
    outcomes.extend(equivalence_outcomes(&rep, th));
    Ok(PredicateReport { energy: rep, outcomes })
}

/// Side values of the two threshold equivalences; None when E >= E(W, 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivalenceSides {
    pub gradient_below: bool,
    pub full_below: bool,
    pub gradient_above: bool,
    pub full_above: bool,
}

pub fn equivalence_sides(rep: &EnergyReport, th: &Thresholds) -> Option<EquivalenceSides> {
    if rep.energy >= th.energy_w {
        return None;
    }
    let big_g = th.grad_sq_w;
    let full = rep.grad_sq + rep.ut_sq;
    Some(EquivalenceSides {
        gradient_below: rep.grad_sq < big_g,
        full_below: full < big_g,
        gradient_above: rep.grad_sq > big_g,
        full_above: full > big_g,
    })
}
