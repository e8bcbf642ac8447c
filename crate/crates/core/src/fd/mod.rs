//! Full-duplex bounds: cut-set outer region, regime classification, the
//! delay-free superposition scheme, relay and no-cooperation baselines, and
//! the 2-bit gap audit.

pub mod oracle;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CoopError, Result};
use crate::geometry::{convex_union, make_region, region_gap_detail, HalfSpace, RateRegion};
use crate::model::{log2_1p, ChannelGains, ChannelRecord, RatePair};
use crate::optim::golden_max;

pub use oracle::{gaussian_mi_oracle, LinearGaussianModel};

/// Full-duplex gap claimed for every channel, in bits.
pub const FD_GAP_BOUND: f64 = 2.0;

pub fn no_coop_region(g: &ChannelGains) -> RateRegion {
    make_region(&[
        HalfSpace::r1(log2_1p(g.max_sq())),
        HalfSpace::r2(log2_1p(g.min_sq())),
        HalfSpace::sum(log2_1p(g.max_sq() + g.min_sq())),
    ])
    .expect("pentagon bounds are valid")
}

/// `log2(1 + (|h_max| + |h_min|)²)`, the coherent-combining sum rate.
pub fn ideal_sum_rate(g: &ChannelGains) -> f64 {
    let s = g.max_abs() + g.min_abs();
    log2_1p(s * s)
}

pub fn ideal_coop_region(g: &ChannelGains) -> RateRegion {
    make_region(&[HalfSpace::sum(ideal_sum_rate(g))]).expect("sum bound is valid")
}

/// Cut-set bounds at input correlation `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutsetBounds {
    pub r1: f64,
    pub r2: f64,
    pub sum: f64,
}

pub fn fd_cutset_at_rho(g: &ChannelGains, rho: Complex64) -> Result<CutsetBounds> {
    let r = rho.norm_sqr();
    if !r.is_finite() || r > 1.0 + 1e-12 {
        return Err(CoopError::invalid(format!(
            "correlation must satisfy |rho| <= 1, got {}",
            r.sqrt()
        )));
    }
    let uncorr = (1.0 - r).max(0.0);
    let cross = rho * g.h_max().to_complex() * g.h_min().to_complex().conj();
    Ok(CutsetBounds {
        r1: log2_1p((g.max_sq() + g.h2_sq()) * uncorr),
        r2: log2_1p((g.min_sq() + g.h1_sq()) * uncorr),
        sum: log2_1p((g.max_sq() + g.min_sq() + 2.0 * cross.re).max(0.0)),
    })
}

/// `R2 <= log2(1 + |h_1|² + |h_min|²)`, maximized at `rho = 0`.
pub fn outer_r2_bound(g: &ChannelGains) -> f64 {
    log2_1p(g.h1_sq() + g.min_sq())
}

pub fn fd_outer(g: &ChannelGains) -> RateRegion {
    make_region(&[
        HalfSpace::r2(outer_r2_bound(g)),
        HalfSpace::sum(ideal_sum_rate(g)),
    ])
    .expect("outer bounds are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeTag {
    Regime1,
    Regime2,
    Regime3,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::Regime1 => "regime1",
            RegimeTag::Regime2 => "regime2",
            RegimeTag::Regime3 => "regime3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdRegime {
    pub tag: RegimeTag,
    pub t_low: f64,
    pub t_high: f64,
}

/// `|h_max|² + 2|h_min||h_max|`.
fn t_high(g: &ChannelGains) -> f64 {
    g.max_sq() + 2.0 * g.min_abs() * g.max_abs()
}

pub fn fd_regime(g: &ChannelGains) -> FdRegime {
    let (t_low, t_high) = (g.min_sq(), t_high(g));
    let tag = if g.h1_sq() <= t_low {
        RegimeTag::Regime1
    } else if g.h1_sq() > t_high {
        RegimeTag::Regime2
    } else {
        RegimeTag::Regime3
    };
    FdRegime { tag, t_low, t_high }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdCorner {
    pub t2: f64,
    pub point: RatePair,
}

pub fn fd_corner_v3(g: &ChannelGains) -> FdCorner {
    let s = g.max_abs() + g.min_abs();
    let t2 = log2_1p((g.h1_sq() + g.min_sq()).min(s * s));
    FdCorner {
        t2,
        point: RatePair::new((ideal_sum_rate(g) - t2).max(0.0), t2),
    }
}

/// Destination-side decoding constraints of the superposition scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DestinationBounds {
    pub a: f64,
    pub b2: f64,
    pub b1: f64,
}

/// Constraints for user 1 decoding `b1[t]` then `b2[t+1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelayBounds {
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime3Rates {
    pub delta1: f64,
    pub delta2: f64,
    pub destination: DestinationBounds,
    pub relay: RelayBounds,
    pub r_a: f64,
    pub r_b1: f64,
    pub r_b2: f64,
    pub r1_prime: f64,
    pub r2_prime: f64,
    /// Some stream is limited by decoding at user 1 rather than at the destination.
    pub relay_side_binding: bool,
    /// `|h_min|² <= 1`: `b1` is switched off and `delta2 = 1`.
    pub low_direct_gain_variant: bool,
}

/// Power splits `(delta1, delta2)`; `delta1` is capped at 1 outside its native regime.
pub fn power_splits(g: &ChannelGains) -> (f64, f64) {
    let den = t_high(g);
    let delta1 = if den > 0.0 {
        (g.h1_sq() / den).min(1.0)
    } else {
        0.0
    };
    let delta2 = if g.min_sq() > 1.0 {
        1.0 / g.min_sq()
    } else {
        1.0
    };
    (delta1, delta2)
}

pub fn fd_regime3_rates(g: &ChannelGains) -> Regime3Rates {
    let (delta1, delta2) = power_splits(g);
    let (hmax, hmin, h1) = (g.max_sq(), g.min_sq(), g.h1_sq());
    let low = hmin <= 1.0;

    let destination = DestinationBounds {
        a: log2_1p(hmax + hmin) - log2_1p(hmin + hmax * delta1),
        b2: log2_1p(hmin + hmax * delta1) - log2_1p(hmin),
        b1: if low {
            0.0
        } else {
            log2_1p(hmin) - log2_1p(hmin * delta2)
        },
    };
    let relay = RelayBounds {
        b1: log2_1p(h1) - log2_1p(h1 * delta2),
        b2: log2_1p(h1 * delta2),
    };
    let r_a = destination.a.max(0.0);
    let r_b1 = if low {
        0.0
    } else {
        destination.b1.min(relay.b1).max(0.0)
    };
    let r_b2 = destination.b2.min(relay.b2).max(0.0);
    let relay_side_binding = relay.b2 < destination.b2 || (!low && relay.b1 < destination.b1);

    Regime3Rates {
        delta1,
        delta2,
        destination,
        relay,
        r_a,
        r_b1,
        r_b2,
        r1_prime: r_a,
        r2_prime: r_b1 + r_b2,
        relay_side_binding,
        low_direct_gain_variant: low,
    }
}

/// Log-det re-derivation of every scheme constraint:
/// `(destination a, b2, b1, user-1 b1, b2)`.
pub fn regime3_oracle_bounds(g: &ChannelGains) -> Result<[f64; 5]> {
    let (d1, d2) = power_splits(g);
    let (hmax, hmin, h1) = (g.max_abs(), g.min_abs(), g.h_1().abs());
    // streams: a[t], b2[t], b1[t], b2[t+1]
    let dest = LinearGaussianModel::from_real(
        1,
        4,
        &[
            hmax * (1.0 - d1).sqrt(),
            hmax * d1.sqrt(),
            hmin * (1.0 - d2).sqrt(),
            hmin * d2.sqrt(),
        ],
    )?;
    // streams: b1[t], b2[t+1]
    let user1 = LinearGaussianModel::from_real(1, 2, &[h1 * (1.0 - d2).sqrt(), h1 * d2.sqrt()])?;
    Ok([
        dest.mutual_information(&[0], &[])?,
        dest.mutual_information(&[1], &[0])?,
        dest.mutual_information(&[2], &[0, 1])?,
        user1.mutual_information(&[0], &[])?,
        user1.mutual_information(&[1], &[0])?,
    ])
}

/// Best of direct transmission and decode-forward with coherent combining.
pub fn fd_relay_inner_rate(g: &ChannelGains) -> f64 {
    let direct = log2_1p(g.min_sq());
    let (hmax, hmin, h1) = (g.max_abs(), g.min_abs(), g.h1_sq());
    let df = |rho: f64| {
        log2_1p((1.0 - rho * rho) * h1)
            .min(log2_1p(hmax * hmax + hmin * hmin + 2.0 * rho * hmax * hmin))
    };
    let (_, best) = golden_max(df, 0.0, 1.0, 1e-10);
    direct.max(best)
}

pub fn fd_inner(g: &ChannelGains) -> RateRegion {
    let nc = no_coop_region(g);
    let r3 = fd_regime3_rates(g);
    convex_union(
        &[&nc],
        &[
            RatePair::new(r3.r1_prime, r3.r2_prime),
            RatePair::new(0.0, fd_relay_inner_rate(g)),
        ],
    )
    .expect("nonempty union")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerDelta {
    pub label: String,
    /// Shortfall of the inner bound behind the outer corner, clamped at 0.
    pub value: f64,
    pub bound: f64,
}

impl CornerDelta {
    fn new(label: &str, raw: f64, bound: f64) -> Self {
        CornerDelta {
            label: label.to_string(),
            value: raw.max(0.0),
            bound,
        }
    }

    pub fn within_bound(&self) -> bool {
        self.value <= self.bound + 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub channel: ChannelRecord,
    pub regime: RegimeTag,
    pub corners: Vec<CornerDelta>,
    pub region_gap: f64,
    /// Direction `mu` at which `region_gap` is attained.
    pub gap_mu: f64,
    pub flags: Vec<String>,
}

impl GapReport {
    pub fn corner(&self, label: &str) -> Option<&CornerDelta> {
        self.corners.iter().find(|c| c.label == label)
    }

    pub fn corners_ok(&self) -> bool {
        self.corners.iter().all(CornerDelta::within_bound)
    }
}

/// Region gap plus per-corner deltas; errors if the region gap exceeds 2 bits.
pub fn fd_gap_audit(g: &ChannelGains) -> Result<GapReport> {
    let report = fd_gap_report(g)?;
    if report.region_gap > FD_GAP_BOUND + 1e-9 {
        return Err(CoopError::GapViolation {
            channel: g.describe(),
            gap: report.region_gap,
            bound: FD_GAP_BOUND,
            mu: report.gap_mu,
        });
    }
    Ok(report)
}

/// [`fd_gap_audit`] without the bound assertion.
pub fn fd_gap_report(g: &ChannelGains) -> Result<GapReport> {
    let inner = fd_inner(g);
    let outer = fd_outer(g);
    let (region_gap, gap_mu) = region_gap_detail(&inner, &outer)?;

    let regime = fd_regime(g);
    let corner = fd_corner_v3(g);
    let relay = fd_relay_inner_rate(g);
    let sum = ideal_sum_rate(g);
    let mut corners = vec![
        CornerDelta::new("V1", sum - log2_1p(g.max_sq()), 2.0),
        CornerDelta::new("V5", corner.t2 - relay, 1.0),
    ];
    let mut flags = Vec::new();
    match regime.tag {
        RegimeTag::Regime1 => {
            let nc_r1 = log2_1p(g.max_sq() / (1.0 + g.min_sq()));
            let nc_r2 = log2_1p(g.min_sq());
            corners.push(CornerDelta::new("V3_R1", corner.point.r1 - nc_r1, 1.0));
            corners.push(CornerDelta::new("V3_R2", corner.point.r2 - nc_r2, 1.0));
        }
        RegimeTag::Regime2 => {
            corners.push(CornerDelta::new("V3_R1", corner.point.r1, 1.0));
            corners.push(CornerDelta::new("V3_R2", corner.point.r2 - relay, 1.0));
        }
        RegimeTag::Regime3 => {
            let r3 = fd_regime3_rates(g);
            corners.push(CornerDelta::new(
                "V3_R1",
                corner.point.r1 - r3.r1_prime,
                1.0,
            ));
            corners.push(CornerDelta::new(
                "V3_R2",
                corner.point.r2 - r3.r2_prime,
                2.0,
            ));
            if r3.relay_side_binding {
                flags.push("relay_side_binding".to_string());
            }
            if r3.low_direct_gain_variant {
                flags.push("low_direct_gain_variant".to_string());
            }
        }
    }
    Ok(GapReport {
        channel: ChannelRecord::from_gains(g),
        regime: regime.tag,
        corners,
        region_gap,
        gap_mu,
        flags,
    })
}
