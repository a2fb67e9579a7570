#[allow(unused_imports)]
use num_traits::Float;

use super::FlowProblem;
use crate::domain::TimeGrid;
use crate::ma_ops::RhoReport;

/// The uniform constants controlling the envelope, computed from the data
/// and the solved `ρ`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstantsLedger {
    pub m_h: f64,
    pub m_f: f64,
    pub b: f64,
    pub m_u: f64,
    pub kappa_h: f64,
    pub kappa_f: f64,
    pub c_h: f64,
    pub c_f: f64,
    pub kappa_u: f64,
    pub c_u: f64,
    pub rho_sup: f64,
    /// `M_h + ĉ_n e^{M_F} ‖g‖_p^{1/n}` with the observed `ĉ_n = ‖ρ‖_∞ / ‖g‖_p^{1/n}`.
    pub kolodziej_bound: f64,
    pub observed_cn: f64,
}

impl ConstantsLedger {
    pub fn from_parts(
        n: usize,
        horizon: f64,
        m_h: f64,
        m_f: f64,
        rho_sup: f64,
        kappa_h: f64,
        c_h: f64,
        kappa_f: f64,
        c_f: f64,
    ) -> Self {
        let nf = n as f64;
        let t = horizon;
        let b = (m_f / nf).exp();
        let m_u = m_h + b * rho_sup;
        let kappa_u = (t + 1.0) * (3.0 * m_u + 2.0 * kappa_h + 2.0 * nf + kappa_f * (t + m_u));
        let c_u = c_h
            + 2.0 * m_h
            + 8.0 * kappa_h
            + (2.0 * kappa_f + 3.0)
                * (m_u + 5.0 * kappa_u + 1.0 + c_f * t * t + 16.0 * kappa_u * kappa_u);
        ConstantsLedger {
            m_h,
            m_f,
            b,
            m_u,
            kappa_h,
            kappa_f,
            c_h,
            c_f,
            kappa_u,
            c_u,
            rho_sup,
            kolodziej_bound: f64::NAN,
            observed_cn: f64::NAN,
        }
    }

    /// Constant of the time-scaling subsolution, `2M_U + 2κ_h + 2n + κ_F(T + M_U)`.
    pub fn time_scale_constant(&self, n: usize, horizon: f64) -> f64 {
        2.0 * self.m_u + 2.0 * self.kappa_h + 2.0 * n as f64 + self.kappa_f * (horizon + self.m_u)
    }

    /// Constant of the semi-concavity average,
    /// `C_h + 1 + 2M_h + 8κ_h + 2κ_F(M_U + 4κ_U + T + C_F T² + 16κ_U²)`.
    pub fn semiconcavity_constant(&self, horizon: f64) -> f64 {
        let t = horizon;
        self.c_h
            + 1.0
            + 2.0 * self.m_h
            + 8.0 * self.kappa_h
            + 2.0
                * self.kappa_f
                * (self.m_u + 4.0 * self.kappa_u + t + self.c_f * t * t + 16.0 * self.kappa_u * self.kappa_u)
    }
}

/// Lateral sampling times: the grid's nodes plus a uniform sample of `[0, T]`.
pub(crate) fn sample_times(problem: &FlowProblem, time: &TimeGrid) -> alloc::vec::Vec<f64> {
    let mut times: alloc::vec::Vec<f64> = time.nodes().to_vec();
    let count = 128;
    for j in 0..=count {
        times.push(problem.horizon * j as f64 / count as f64);
    }
    times
}

pub fn compute_constants(problem: &FlowProblem, time: &TimeGrid, rho: &RhoReport) -> ConstantsLedger {
    let grid = &problem.space;
    let dim = grid.dim();
    let times = sample_times(problem, time);
    let mut m_h: f64 = 0.0;
    for &t in &times {
        for hit in grid.hits() {
            m_h = m_h.max((problem.h.lateral)(t, &hit.point[..dim]).abs());
        }
    }
    for i in 0..grid.len() {
        m_h = m_h.max((problem.h.initial)(grid.point(i)).abs());
    }
    let mut m_f = f64::NEG_INFINITY;
    for &t in &times {
        for i in 0..grid.len() {
            m_f = m_f.max(problem.f.eval(t, grid.point(i), m_h));
        }
    }
    let n = grid.n();
    let mut ledger = ConstantsLedger::from_parts(
        n,
        problem.horizon,
        m_h,
        m_f,
        rho.sup_norm,
        problem.h.kappa_h,
        problem.h.c_h,
        problem.f.kappa_f,
        problem.f.c_f,
    );
    ledger.observed_cn = rho.observed_constant;
    ledger.kolodziej_bound = m_h + rho.observed_constant * m_f.exp() * rho.g_lp_root;
    log::info!(
        "M_U = {:.6} from the solved ρ; Kołodziej form with observed c_n = {:.4} gives {:.6}",
        ledger.m_u,
        ledger.observed_cn,
        ledger.kolodziej_bound
    );
    ledger
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manufactured_disc_constants() {
        let l2 = core::f64::consts::LN_2;
        let l = ConstantsLedger::from_parts(1, 1.0, 2.0 + l2, 0.0, 1.0, l2, 0.0, 0.0, 0.0);
        assert!((l.m_u - 3.693_147_180_559_945).abs() < 1e-12);
        assert_eq!(l.b, 1.0);
        let expected = 2.0 * (3.0 * l.m_u + 2.0 * l2 + 2.0);
        assert!((l.kappa_u - expected).abs() < 1e-12);
        assert!((l.kappa_u - 28.931).abs() < 1e-3);
    }
}
