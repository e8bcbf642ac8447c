//! Half-duplex bounds: entropy-leakage constants, the relaxed cut-set
//! outer region, the closed-form listen fraction, the time-sharing inner
//! region and the gap audit.

pub mod chain;
pub mod leakage;

use serde::Serialize;

use crate::error::{CoopError, Result};
use crate::fd::{fd_outer, no_coop_region};
use crate::geometry::{
    check_shifted_frontier_gap, convex_union, critical_directions, make_region, HalfSpace,
    RateRegion,
};
use crate::model::{log2_1p, ChannelGains, ChannelRecord, RatePair};

pub use chain::{hd_chain_audit, ChainAudit, ChainBounds, HdSchedule};
pub use leakage::{entropy_leakage_constants, LeakageConstants, LeakageKind, LeakageMax};

/// Step of the listen-fraction grid used when materializing the outer region.
const GAMMA_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HdOuterParams {
    pub v1: f64,
    pub v2: f64,
    pub v12: f64,
    pub v: f64,
    pub c1: f64,
    pub cmax: f64,
}

impl HdOuterParams {
    /// `cmax / (cmax + c1)`: beyond it only the sum constraint matters.
    pub fn gamma_bar(&self) -> f64 {
        let den = self.cmax + self.c1;
        if den > 0.0 {
            self.cmax / den
        } else {
            0.0
        }
    }

    /// `cmax·c1 / (cmax + c1)`, zero when both vanish.
    pub fn harmonic(&self) -> f64 {
        let den = self.cmax + self.c1;
        if den > 0.0 {
            self.cmax * self.c1 / den
        } else {
            0.0
        }
    }

    /// `(R2 bound, sum bound)` of the slice at listen fraction `gamma`.
    pub fn slice(&self, gamma: f64) -> (f64, f64) {
        (self.v + gamma * self.c1, self.v + (1.0 - gamma) * self.cmax)
    }

    /// The analytic gap bound `v12 + 1`.
    pub fn gap_bound(&self) -> f64 {
        self.v12 + 1.0
    }
}

pub fn hd_outer_params(g: &ChannelGains) -> HdOuterParams {
    let c = entropy_leakage_constants();
    let dir = log2_1p(g.min_sq());
    HdOuterParams {
        v1: c.v1.value,
        v2: c.v2.value,
        v12: c.v12.value,
        v: c.v12.value + dir,
        c1: log2_1p(g.h1_sq() / (1.0 + g.min_sq())),
        cmax: log2_1p(g.max_sq() / (1.0 + g.min_sq())),
    }
}

fn slice_vertices(p: &HdOuterParams, gamma: f64) -> [RatePair; 2] {
    let (a, b) = p.slice(gamma);
    let top = a.min(b);
    [RatePair::new(b - top, top), RatePair::new(b, 0.0)]
}

/// Union of the outer slices for listen fractions up to `gamma_bar`.
pub fn hd_outer(g: &ChannelGains) -> RateRegion {
    hd_outer_from_params(&hd_outer_params(g))
}

pub fn hd_outer_from_params(p: &HdOuterParams) -> RateRegion {
    let bar = p.gamma_bar();
    let steps = (bar / GAMMA_STEP).floor() as usize;
    let mut pts: Vec<RatePair> = (0..=steps)
        .flat_map(|k| slice_vertices(p, k as f64 * GAMMA_STEP))
        .collect();
    pts.extend(slice_vertices(p, bar));
    RateRegion::down_hull(pts)
}

/// The sum-only part `R1 + R2 <= v + cmax·c1/(cmax + c1)`.
pub fn hd_outer_sum_only(g: &ChannelGains) -> RateRegion {
    let p = hd_outer_params(g);
    make_region(&[HalfSpace::sum(p.v + p.harmonic())]).expect("sum bound is valid")
}

/// Closed-form optimal listen fraction for direction `mu`.
pub fn hd_optimal_gamma(p: &HdOuterParams, mu: f64) -> f64 {
    if mu >= 0.5 || (1.0 - 2.0 * mu) * p.c1 - mu * p.cmax <= 0.0 {
        0.0
    } else {
        p.gamma_bar()
    }
}

/// Outer support `p(mu) = max mu·R1 + (1 − mu)·R2`, in closed form.
pub fn hd_weighted_sum(p: &HdOuterParams, mu: f64) -> f64 {
    if mu >= 0.5 {
        return mu * (p.v + p.cmax);
    }
    let g = hd_optimal_gamma(p, mu);
    (1.0 - mu) * p.v + mu * (1.0 - g) * p.cmax + (1.0 - 2.0 * mu) * g * p.c1
}

/// Relay-point rate before clamping; can be negative for tiny gains.
pub fn hd_relay_rate_unclamped(g: &ChannelGains) -> f64 {
    let p = hd_outer_params(g);
    log2_1p(g.min_sq()) - 1.0 + p.harmonic()
}

/// Weak-user rate with the strong user acting as a half-duplex relay.
pub fn hd_relay_rate(g: &ChannelGains) -> f64 {
    hd_relay_rate_unclamped(g).max(0.0)
}

pub fn hd_inner(g: &ChannelGains) -> RateRegion {
    convex_union(
        &[&no_coop_region(g)],
        &[RatePair::new(0.0, hd_relay_rate(g))],
    )
    .expect("nonempty union")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HdGapReport {
    pub channel: ChannelRecord,
    pub params: HdOuterParams,
    pub relay_rate: f64,
    pub gamma_star_mu0: f64,
    /// `max_mu p(mu) − h_inner(mu)`.
    pub gap: f64,
    pub gap_mu: f64,
    pub bound: f64,
    /// Largest deviation of `p(mu)` from the two stated piecewise expressions.
    pub expression_residual: f64,
    /// Literal 1-bit certificate of no-coop against the FD cut-set region,
    /// evaluated when `|h_1|² <= |h_min|²`.
    pub no_coop_1bit: Option<bool>,
}

impl HdGapReport {
    pub fn passed(&self) -> bool {
        self.gap <= self.bound + 1e-6
            && self.expression_residual <= 1e-9
            && self.no_coop_1bit != Some(false)
    }
}

/// `p(mu)` by the stated piecewise expressions, using the unclamped relay point.
fn piecewise_p(p: &HdOuterParams, g: &ChannelGains, mu: f64) -> f64 {
    let r2_nc = log2_1p(g.min_sq());
    if mu >= 0.5 {
        return mu * (p.v + p.cmax);
    }
    let mu0 = if p.cmax + 2.0 * p.c1 > 0.0 {
        p.c1 / (p.cmax + 2.0 * p.c1)
    } else {
        0.0
    };
    if mu >= mu0 {
        (1.0 - mu) * p.v12 + (1.0 - mu) * r2_nc + mu * p.cmax
    } else {
        let r2_hd = r2_nc - 1.0 + p.harmonic();
        (1.0 - mu) * (p.v12 + 1.0) + (1.0 - mu) * r2_hd
    }
}

/// Support gap of the time-sharing inner region against the outer bound.
pub fn hd_gap_report(g: &ChannelGains) -> Result<HdGapReport> {
    let p = hd_outer_params(g);
    let inner = hd_inner(g);
    let mut mus = critical_directions(&[&inner]);
    mus.push(0.5);
    if p.cmax + 2.0 * p.c1 > 0.0 {
        mus.push(p.c1 / (p.cmax + 2.0 * p.c1));
    }
    mus.sort_by(f64::total_cmp);
    mus.dedup();

    let (mut gap, mut gap_mu, mut residual) = (f64::NEG_INFINITY, 0.0, 0.0f64);
    for &mu in &mus {
        let outer = hd_weighted_sum(&p, mu);
        let d = outer - inner.support(mu).0;
        if d > gap {
            gap = d;
            gap_mu = mu;
        }
        residual = residual.max((outer - piecewise_p(&p, g, mu)).abs());
    }

    let no_coop_1bit = (g.h1_sq() <= g.min_sq())
        .then(|| check_shifted_frontier_gap(&no_coop_region(g), &fd_outer(g), 1.0));

    Ok(HdGapReport {
        channel: ChannelRecord::from_gains(g),
        params: p,
        relay_rate: hd_relay_rate(g),
        gamma_star_mu0: hd_optimal_gamma(&p, 0.0),
        gap,
        gap_mu,
        bound: p.gap_bound(),
        expression_residual: residual,
        no_coop_1bit,
    })
}

/// [`hd_gap_report`] that errors when the gap exceeds `v12 + 1` bits.
pub fn hd_gap_audit(g: &ChannelGains) -> Result<HdGapReport> {
    let r = hd_gap_report(g)?;
    if r.gap > r.bound + 1e-6 {
        return Err(CoopError::GapViolation {
            channel: g.describe(),
            gap: r.gap,
            bound: r.bound,
            mu: r.gap_mu,
        });
    }
    if r.expression_residual > 1e-9 {
        return Err(CoopError::CheckFailed(format!(
            "p(mu) deviates from the piecewise expressions by {:.3e}",
            r.expression_residual
        )));
    }
    if r.no_coop_1bit == Some(false) {
        return Err(CoopError::CheckFailed(format!(
            "no-cooperation 1-bit certificate fails for {}",
            g.describe()
        )));
    }
    Ok(r)
}
