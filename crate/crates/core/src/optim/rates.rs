use serde::Serialize;

use super::Trace;
use crate::norms::NormKind;

/// Relative slack below which a bound counts as violated.
pub const RATE_TOL: f64 = 1e-9;

/// Slack of one inequality `lhs ≤ rhs` evaluated at every horizon of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    /// `min_T (rhs − lhs)/max(|lhs|, |rhs|)`.
    pub min_rel_slack: f64,
    /// Horizon attaining the minimum.
    pub worst_t: usize,
    /// Relative slack at the last horizon.
    pub final_rel_slack: f64,
    /// Horizons with slack below `-RATE_TOL`.
    pub violations: usize,
    pub horizons: usize,
}

impl BoundCheck {
    fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64, f64)>) -> Self {
        let mut check = BoundCheck {
            min_rel_slack: f64::INFINITY,
            worst_t: 0,
            final_rel_slack: f64::INFINITY,
            violations: 0,
            horizons: 0,
        };
        for (t, lhs, rhs) in pairs {
            let s = rel_slack(lhs, rhs);
            if s < check.min_rel_slack {
                check.min_rel_slack = s;
                check.worst_t = t;
            }
            if s < -RATE_TOL {
                check.violations += 1;
            }
            check.final_rel_slack = s;
            check.horizons += 1;
        }
        check
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

fn rel_slack(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    (rhs - lhs) / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateCheck {
    /// `(1/T)Σ_{t<T} ‖∇f_t‖*² ≤ 2L(f₀−f*)/T`.
    pub smooth: BoundCheck,
    /// `f_T − f* ≤ (1−μ/L)^T (f₀−f*)`.
    pub pl: Option<BoundCheck>,
    /// `f_T − f* ≤ 2LR²/(T+4)` with `R` in the primal norm.
    pub convex: Option<BoundCheck>,
}

impl RateCheck {
    pub fn holds(&self) -> bool {
        self.smooth.holds()
            && self.pl.is_none_or(|c| c.holds())
            && self.convex.is_none_or(|c| c.holds())
    }

    pub fn min_rel_slack(&self) -> f64 {
        [Some(self.smooth), self.pl, self.convex]
            .into_iter()
            .flatten()
            .map(|c| c.min_rel_slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks the deterministic steepest-descent rates against a trace produced
/// with geometry `kind` and constant `l`. `r_euclid` bounds the Euclidean
/// distance from any point of the initial sublevel set to the minimizer; it
/// is converted to the primal norm of `kind`.
pub fn verify_rate_bounds(
    trace: &Trace,
    l: f64,
    mu: Option<f64>,
    f_star: f64,
    r_euclid: Option<f64>,
    kind: &NormKind,
) -> RateCheck {
    let gap0 = trace.f0() - f_star;
    let smooth = BoundCheck::from_pairs(
        trace
            .records
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r.dual_grad_norm * r.dual_grad_norm;
                Some(*acc)
            })
            .enumerate()
            .map(|(i, sum)| {
                let t = (i + 1) as f64;
                (i + 1, sum / t, 2.0 * l * gap0 / t)
            })
            .take(trace.steps()),
    );
    let pl = mu.map(|mu| {
        let q = (1.0 - mu / l).max(0.0);
        BoundCheck::from_pairs(
            trace
                .records
                .iter()
                .map(|r| (r.t, r.f - f_star, q.powi(r.t as i32) * gap0)),
        )
    });
    let convex = r_euclid.map(|r| {
        let r = r * kind.euclidean_ball_radius(trace.x_final.len());
        BoundCheck::from_pairs(trace.records.iter().map(|rec| {
            (
                rec.t,
                rec.f - f_star,
                2.0 * l * r * r / (rec.t as f64 + 4.0),
            )
        }))
    });
    RateCheck { smooth, pl, convex }
}

/// `(1/T)Σ_{t<T} ‖∇f_t‖* ≤ L(f₀−f*)/√T + log(T+1)/(2√T)` at every horizon.
pub fn check_normalized_rate(trace: &Trace, l: f64, f_star: f64) -> BoundCheck {
    let gap0 = trace.f0() - f_star;
    BoundCheck::from_pairs(
        trace
            .records
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r.dual_grad_norm;
                Some(*acc)
            })
            .enumerate()
            .map(|(i, sum)| {
                let t = (i + 1) as f64;
                let rhs = l * gap0 / t.sqrt() + (t + 1.0).ln() / (2.0 * t.sqrt());
                (i + 1, sum / t, rhs)
            })
            .take(trace.steps()),
    )
}

/// Iterations sufficient for soft-normalized descent to reach `‖∇f‖* ≤ eps`.
pub fn relaxed_iteration_bound(gap0: f64, l0: f64, l1: f64, eps: f64) -> f64 {
    18.0 * gap0 * (l0 / (eps * eps)).max(l1 * l1 / l0)
}
