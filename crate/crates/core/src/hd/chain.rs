//! Pointwise evaluation of the half-duplex cut-set relaxation chain.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{CoopError, Result};
use crate::fd::LinearGaussianModel;
use crate::model::{log2_1p, ChannelGains};

use super::{hd_outer_params, HdOuterParams};

/// Joint listen/transmit schedule with per-state inputs, indexed `2·S1 + S2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HdSchedule {
    pub gamma: [f64; 4],
    pub power1: [f64; 4],
    pub power2: [f64; 4],
    pub rho: [Complex64; 4],
}

impl HdSchedule {
    pub fn new(
        gamma: [f64; 4],
        power1: [f64; 4],
        power2: [f64; 4],
        rho: [Complex64; 4],
    ) -> Result<Self> {
        let s = HdSchedule {
            gamma,
            power1,
            power2,
            rho,
        };
        s.validate()?;
        Ok(s)
    }

    /// Unit power in every state, uncorrelated inputs.
    pub fn unit_power(gamma: [f64; 4]) -> Result<Self> {
        HdSchedule::new(gamma, [1.0; 4], [1.0; 4], [Complex64::new(0.0, 0.0); 4])
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(CoopError::invalid(
                "schedule probabilities must be in [0, 1]",
            ));
        }
        let total: f64 = self.gamma.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CoopError::invalid(format!(
                "schedule probabilities sum to {total}, not 1"
            )));
        }
        for (k, p) in [(1, &self.power1), (2, &self.power2)] {
            if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(CoopError::invalid(format!(
                    "user {k} powers must be finite and >= 0"
                )));
            }
            let avg: f64 = self.gamma.iter().zip(p).map(|(g, x)| g * x).sum();
            if avg > 1.0 + 1e-9 {
                return Err(CoopError::invalid(format!(
                    "user {k} average power {avg} exceeds 1"
                )));
            }
        }
        if self.rho.iter().any(|r| !(r.norm() <= 1.0 + 1e-12)) {
            return Err(CoopError::invalid("per-state correlations need |rho| <= 1"));
        }
        Ok(())
    }
}

/// One step of the chain. `r1` is `None` once the R1 constraint is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainBounds {
    pub r1: Option<f64>,
    pub r2: f64,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainAudit {
    pub a: ChainBounds,
    pub b: ChainBounds,
    pub c: ChainBounds,
    pub d: ChainBounds,
    /// Listen fraction `γ = γ01` used by steps (c) and (d).
    pub gamma: f64,
    pub violations: Vec<String>,
}

impl ChainAudit {
    pub fn ordered(&self) -> bool {
        self.violations.is_empty()
    }
}

fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().map(|&x| phi(x)).sum()
}

/// `(H(S1|S2), H(S2|S1), H(S1,S2))`.
pub fn state_entropies(gamma: &[f64; 4]) -> (f64, f64, f64) {
    let joint = entropy(gamma);
    let s1 = entropy(&[gamma[0] + gamma[1], gamma[2] + gamma[3]]);
    let s2 = entropy(&[gamma[0] + gamma[2], gamma[1] + gamma[3]]);
    (joint - s2, joint - s1, joint)
}

/// Per-state `(I^(1), I^(2), I^(12))` for states `(S1, S2) = (i, j)`.
///
/// Inputs are built from independent unit streams `U`, `W`: the conditioned
/// user sends `√P·U`, the other `√P·(ρU + √(1−|ρ|²)W)`.
pub fn state_informations(
    g: &ChannelGains,
    i: u8,
    j: u8,
    p1: f64,
    p2: f64,
    rho: Complex64,
) -> Result<(f64, f64, f64)> {
    let (s1, s2) = (f64::from(i), f64::from(j));
    let hmax = g.h_max().to_complex() * s1;
    let hmin = g.h_min().to_complex() * s2;
    let h2 = g.h_2().to_complex() * s1 * (1.0 - s2);
    let h1 = g.h_1().to_complex() * s2 * (1.0 - s1);
    let (a1, a2) = (p1.sqrt(), p2.sqrt());
    let zero = Complex64::new(0.0, 0.0);

    let split = |r: Complex64| (r, Complex64::new((1.0 - r.norm_sqr()).max(0.0).sqrt(), 0.0));

    // X2 = a2·U, X1 = a1·(ρU + sW)
    let (r, s) = split(if p2 > 0.0 { rho } else { zero });
    let m1 = LinearGaussianModel::new(DMatrix::from_row_slice(
        2,
        2,
        &[
            hmax * a1 * r + hmin * a2,
            hmax * a1 * s,
            h2 * a1 * r,
            h2 * a1 * s,
        ],
    ));
    let i1 = m1.mutual_information(&[1], &[0])?;

    // X1 = a1·U, X2 = a2·(ρ*U + sW)
    let (r, s) = split(if p1 > 0.0 { rho.conj() } else { zero });
    let m2 = LinearGaussianModel::new(DMatrix::from_row_slice(
        2,
        2,
        &[
            hmax * a1 + hmin * a2 * r,
            hmin * a2 * s,
            h1 * a2 * r,
            h1 * a2 * s,
        ],
    ));
    let i2 = m2.mutual_information(&[1], &[0])?;

    let (r, s) = split(rho);
    let m12 = LinearGaussianModel::new(DMatrix::from_row_slice(
        1,
        2,
        &[hmax * a1 * r + hmin * a2, hmax * a1 * s],
    ));
    let i12 = m12.mutual_information(&[0, 1], &[])?;
    Ok((i1, i2, i12))
}

/// Steps (a)–(d) at the concrete schedule `s`, plus the ordering check.
pub fn hd_chain_audit(g: &ChannelGains, s: &HdSchedule) -> Result<ChainAudit> {
    s.validate()?;
    let params = hd_outer_params(g);
    chain_with_params(g, s, &params)
}

pub(crate) fn chain_with_params(
    g: &ChannelGains,
    s: &HdSchedule,
    p: &HdOuterParams,
) -> Result<ChainAudit> {
    let gm = &s.gamma;
    let (h1, h2, h12) = state_entropies(gm);

    let mut a = [h1, h2, h12];
    for idx in 0..4 {
        let (i, j) = ((idx >> 1) as u8, (idx & 1) as u8);
        let (x1, x2, x12) = state_informations(g, i, j, s.power1[idx], s.power2[idx], s.rho[idx])?;
        a[0] += gm[idx] * x1;
        a[1] += gm[idx] * x2;
        a[2] += gm[idx] * x12;
    }

    let (hmax, hmin) = (g.max_sq(), g.min_sq());
    let (g01, g10, g11) = (gm[1], gm[2], gm[3]);
    let b = [
        h1 + phi(g10) + phi(g11) + g10 * log2_1p(g.h2_sq() + hmax) + g11 * log2_1p(hmax),
        h2 + phi(g01) + phi(g11) + g01 * log2_1p(g.h1_sq() + hmin) + g11 * log2_1p(hmin),
        h12 + phi(g10)
            + phi(g01)
            + phi(g11)
            + g11
            + g01 * log2_1p(hmin)
            + g10 * log2_1p(hmax)
            + g11 * log2_1p(hmax + hmin),
    ];

    let gamma = g01;
    let c = [
        p.v2 + gamma * log2_1p(g.h1_sq() + hmin) + (1.0 - gamma) * log2_1p(hmin),
        p.v12 + gamma * log2_1p(hmin) + (1.0 - gamma) * log2_1p(hmax + hmin),
    ];
    let d = [p.v + gamma * p.c1, p.v + (1.0 - gamma) * p.cmax];

    let tol = 1e-9;
    let mut violations = Vec::new();
    let mut check = |name: &str, lo: f64, hi: f64| {
        if lo > hi + tol {
            violations.push(format!("{name}: {lo:.12} > {hi:.12}"));
        }
    };
    check("R1 (a)<=(b)", a[0], b[0]);
    check("R2 (a)<=(b)", a[1], b[1]);
    check("sum (a)<=(b)", a[2], b[2]);
    check("R2 (b)<=(c)", b[1], c[0]);
    check("sum (b)<=(c)", b[2], c[1]);
    check("R2 (c)<=(d)", c[0], d[0]);
    check("sum (c)<=(d)", c[1], d[1]);

    Ok(ChainAudit {
        a: ChainBounds {
            r1: Some(a[0]),
            r2: a[1],
            sum: a[2],
        },
        b: ChainBounds {
            r1: Some(b[0]),
            r2: b[1],
            sum: b[2],
        },
        c: ChainBounds {
            r1: None,
            r2: c[0],
            sum: c[1],
        },
        d: ChainBounds {
            r1: None,
            r2: d[0],
            sum: d[1],
        },
        gamma,
        violations,
    })
}
