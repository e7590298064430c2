//! Dual-mesh budgets: implied dual-mass and vorticity updates per step, and
//! passive tracers carried by the model's dual fluxes.

use crate::operators::OperatorSet;

use super::nonlinear::StepReport;
use super::DualFields;

fn max_abs(x: impl Iterator<Item = f64>) -> f64 {
    x.fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Max-norm residuals of `Phi_bar' - Phi_bar + Dbar2 F_perp = 0` and
/// `Xi_hat' - Xi_hat + Dbar2 Q_perp = 0`, relative to the size of the
/// dual mass and of the absolute vorticity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetResiduals {
    pub dual_mass: f64,
    pub vorticity: f64,
}

pub fn step_budget(
    ops: &OperatorSet,
    f_hat: &[f64],
    before: &DualFields,
    after: &DualFields,
    report: &StepReport,
) -> BudgetResiduals {
    let df = ops.db2.apply(&report.f_perp_hat);
    let dq = ops.db2.apply(&report.q_perp_hat);
    let n = before.phi_bar.len();
    let mass_scale = max_abs(before.phi_bar.iter().copied());
    let vort_scale = max_abs((0..n).map(|j| f_hat[j] + before.xi_hat[j])).max(f64::MIN_POSITIVE);
    BudgetResiduals {
        dual_mass: max_abs((0..n).map(|j| after.phi_bar[j] - before.phi_bar[j] + df[j])) / mass_scale,
        vorticity: max_abs((0..n).map(|j| after.xi_hat[j] - before.xi_hat[j] + dq[j])) / vort_scale,
    }
}

/// A dual-mass-like tracer and a PV-like tracer (dual-mass times PV),
/// advanced with the dual fluxes of every step.
#[derive(Clone, Debug, PartialEq)]
pub struct TracerBudget {
    pub dual_mass: Vec<f64>,
    pub pv_mass: Vec<f64>,
}

/// Maximum differences between tracers and diagnosed fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Consistency {
    /// `max |Phi_bar_tracer - Phi_bar| / max Phi_bar`.
    pub dual_mass: f64,
    /// `max |pi_tracer - pi| / max |pi|` with `pi_tracer` the tracer's
    /// mixing ratio.
    pub pv: f64,
}

impl TracerBudget {
    pub fn new(dual: &DualFields) -> Self {
        TracerBudget {
            dual_mass: dual.phi_bar.clone(),
            pv_mass: dual.phi_bar.iter().zip(&dual.pi).map(|(m, p)| m * p).collect(),
        }
    }

    pub fn advance(&mut self, ops: &OperatorSet, report: &StepReport) {
        let df = ops.db2.apply(&report.f_perp_hat);
        let dq = ops.db2.apply(&report.q_perp_hat);
        for (m, d) in self.dual_mass.iter_mut().zip(&df) {
            *m -= d;
        }
        for (m, d) in self.pv_mass.iter_mut().zip(&dq) {
            *m -= d;
        }
    }

    pub fn consistency(&self, dual: &DualFields) -> Consistency {
        let n = self.dual_mass.len();
        let mass_scale = max_abs(dual.phi_bar.iter().copied());
        let pv_scale = max_abs(dual.pi.iter().copied()).max(f64::MIN_POSITIVE);
        Consistency {
            dual_mass: max_abs((0..n).map(|j| self.dual_mass[j] - dual.phi_bar[j])) / mass_scale,
            pv: max_abs((0..n).map(|j| self.pv_mass[j] / self.dual_mass[j] - dual.pi[j])) / pv_scale,
        }
    }
}
