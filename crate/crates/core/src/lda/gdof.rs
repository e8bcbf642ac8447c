//! Generalized degrees-of-freedom corner points and their finite-SNR check.

use serde::{Deserialize, Serialize};

use crate::error::{CoopError, Result};
use crate::fd::{fd_inner, fd_outer};
use crate::geometry::{hausdorff_distance, RateRegion};
use crate::hd::{hd_inner, hd_outer};
use crate::model::{gains_from_exponents, GdofExponents, RatePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DuplexMode {
    Fd,
    Hd,
}

impl DuplexMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DuplexMode::Fd => "fd",
            DuplexMode::Hd => "hd",
        }
    }
}

/// Corner points `V0..V7` of the gDoF regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GdofCorners {
    pub points: [RatePair; 8],
}

impl GdofCorners {
    pub fn v(&self, k: usize) -> RatePair {
        self.points[k]
    }

    pub fn labeled(&self) -> impl Iterator<Item = (String, RatePair)> + '_ {
        self.points
            .iter()
            .enumerate()
            .map(|(k, p)| (format!("V{k}"), *p))
    }

    /// FD: hull of `V0, V1, V3, V5`. HD: hull of `V0, V1, V2, V6`.
    pub fn region(&self, mode: DuplexMode) -> RateRegion {
        let idx: [usize; 4] = match mode {
            DuplexMode::Fd => [0, 1, 3, 5],
            DuplexMode::Hd => [0, 1, 2, 6],
        };
        RateRegion::down_hull(idx.map(|k| self.points[k]))
    }

    /// No-cooperation hull `V0, V1, V2`.
    pub fn no_coop_region(&self) -> RateRegion {
        RateRegion::down_hull([self.points[0], self.points[1], self.points[2]])
    }
}

/// All eight corners; `mode` only matters through [`GdofCorners::region`].
pub fn gdof_corners(e: &GdofExponents) -> Result<GdofCorners> {
    e.validate()?;
    let (bmax, bmin, b1) = (e.beta_max, e.beta_min, e.beta_1);
    let t = b1.max(bmin).min(bmax);
    let (dmax, d1) = (bmax - bmin, b1 - bmin);
    let v6 = if d1 > 0.0 && dmax > 0.0 {
        bmin + dmax * d1 / (dmax + d1)
    } else {
        bmin
    };
    Ok(GdofCorners {
        points: [
            RatePair::ORIGIN,
            RatePair::new(bmax, 0.0),
            RatePair::new(bmax - bmin, bmin),
            RatePair::new(bmax - t, t),
            RatePair::new(0.0, bmax),
            RatePair::new(0.0, t),
            RatePair::new(0.0, v6),
            RatePair::new(0.0, bmin),
        ],
    })
}

/// Normalized finite-SNR regions at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdofSnrPoint {
    pub snr: f64,
    pub inner: RateRegion,
    pub outer: RateRegion,
    /// Hausdorff distance from the normalized inner region to the predicted gDoF region.
    pub inner_distance: f64,
    pub outer_distance: f64,
    /// Normalized weak-user relay corner (`V5` for FD, `V6` for HD).
    pub relay_corner: RatePair,
}

/// Finite-SNR inner and outer regions, normalized by `log2(1 + SNR)`.
pub fn gdof_limit_oracle(
    e: &GdofExponents,
    mode: DuplexMode,
    snr_list: &[f64],
) -> Result<Vec<GdofSnrPoint>> {
    if snr_list.is_empty() {
        return Err(CoopError::invalid("SNR list is empty"));
    }
    if snr_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoopError::invalid("SNR list must be strictly increasing"));
    }
    let predicted = gdof_corners(e)?.region(mode);
    snr_list
        .iter()
        .map(|&snr| {
            let es = e.with_snr(snr)?;
            let g = gains_from_exponents(&es, [0.0; 4])?;
            let scale = 1.0 / es.rate_scale();
            let (inner, outer, relay) = match mode {
                DuplexMode::Fd => (
                    fd_inner(&g),
                    fd_outer(&g),
                    crate::fd::fd_relay_inner_rate(&g),
                ),
                DuplexMode::Hd => (hd_inner(&g), hd_outer(&g), crate::hd::hd_relay_rate(&g)),
            };
            let (inner, outer) = (inner.scaled(scale), outer.scaled(scale));
            Ok(GdofSnrPoint {
                snr,
                inner_distance: hausdorff_distance(&inner, &predicted),
                outer_distance: hausdorff_distance(&outer, &predicted),
                inner,
                outer,
                relay_corner: RatePair::new(0.0, relay * scale),
            })
        })
        .collect()
}
