//! Independent numerical re-derivations of the closed-form bounds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::fd::{
    fd_cutset_at_rho, fd_outer, fd_regime3_rates, ideal_sum_rate, outer_r2_bound,
    regime3_oracle_bounds,
};
use crate::hd::{
    entropy_leakage_constants, hd_chain_audit, hd_optimal_gamma, hd_outer_params, hd_weighted_sum,
    HdOuterParams, HdSchedule,
};
use crate::model::ChannelGains;
use crate::optim::golden_max;

use super::sweep::{SweepMode, SweepSpec};

const RHO_STEP: f64 = 1e-4;
const GAMMA_STEP: f64 = 1e-4;
const MU_PROBES: [f64; 10] = [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.49, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditOptions {
    pub channels: usize,
    pub chain_draws: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            channels: 1000,
            chain_draws: 10_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub options: AuditOptions,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl AuditReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn collect(name: &'static str, tolerance: f64, results: Vec<(f64, String)>) -> CheckResult {
    let mut out = CheckResult {
        name,
        cases: results.len(),
        max_error: 0.0,
        tolerance,
        failures: 0,
        first_failure: None,
    };
    for (err, what) in results {
        let bad = !(err <= tolerance);
        if bad {
            out.failures += 1;
            if out.first_failure.is_none() {
                out.first_failure = Some(format!("{what}: error {err:.3e}"));
            }
        }
        if err > out.max_error || err.is_nan() {
            out.max_error = err;
        }
    }
    out
}

/// Largest cut-set R2 and sum bounds over a grid of phase-aligned correlations,
/// compared with the outer-region facets.
pub fn rho_grid_error(g: &ChannelGains) -> Result<f64> {
    let cross = g.h_max().to_complex() * g.h_min().to_complex().conj();
    let steps = (1.0 / RHO_STEP).round() as usize;
    let (mut r2, mut sum) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..=steps {
        let rho = Complex64::from_polar(k as f64 / steps as f64, -cross.arg());
        let b = fd_cutset_at_rho(g, rho)?;
        r2 = r2.max(b.r2);
        sum = sum.max(b.sum);
    }
    // facets read back through the support function: R2 at mu = 0, sum at mu = 1/2
    let outer = fd_outer(g);
    let mut err = (r2.min(sum) - outer.support(0.0).0)
        .abs()
        .max((sum - 2.0 * outer.support(0.5).0).abs())
        .max((r2 - outer_r2_bound(g)).abs())
        .max((sum - ideal_sum_rate(g)).abs());
    // misaligned phases never beat the aligned sum
    for theta in [0.7, 1.9, 3.1] {
        let b = fd_cutset_at_rho(g, Complex64::from_polar(1.0, theta))?;
        err = err.max(b.sum - ideal_sum_rate(g));
    }
    Ok(err)
}

/// Largest deviation between the stated scheme rates and their log-det values.
pub fn regime3_logdet_error(g: &ChannelGains) -> Result<f64> {
    let r = fd_regime3_rates(g);
    let o = regime3_oracle_bounds(g)?;
    let stated = [
        r.destination.a,
        r.destination.b2,
        r.destination.b1,
        r.relay.b1,
        r.relay.b2,
    ];
    Ok(stated
        .iter()
        .zip(o)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max))
}

/// Weighted rate of one outer slice, maximized over its two corners.
fn slice_weighted(p: &HdOuterParams, gamma: f64, mu: f64) -> f64 {
    let a = p.v + gamma * p.c1;
    let b = p.v + (1.0 - gamma) * p.cmax;
    mu * b + ((1.0 - 2.0 * mu) * a.min(b)).max(0.0)
}

/// Grid-plus-refinement maximization over the listen fraction against the
/// closed-form support and optimal listen fraction.
pub fn gamma_grid_error(g: &ChannelGains) -> f64 {
    let p = hd_outer_params(g);
    let mut mus = MU_PROBES.to_vec();
    if p.cmax + 2.0 * p.c1 > 0.0 {
        mus.push(p.c1 / (p.cmax + 2.0 * p.c1));
    }
    let steps = (1.0 / GAMMA_STEP).round() as usize;
    let mut err = 0.0f64;
    for mu in mus {
        let f = |gm: f64| slice_weighted(&p, gm, mu);
        let best = (0..=steps).map(|k| k as f64 / steps as f64).fold(
            (0.0, f64::NEG_INFINITY),
            |acc, gm| {
                let v = f(gm);
                if v > acc.1 {
                    (gm, v)
                } else {
                    acc
                }
            },
        );
        let lo = (best.0 - GAMMA_STEP).max(0.0);
        let hi = (best.0 + GAMMA_STEP).min(1.0);
        let (_, refined) = golden_max(f, lo, hi, 1e-13);
        let grid = refined.max(best.1);
        let closed = hd_weighted_sum(&p, mu);
        let at_star = f(hd_optimal_gamma(&p, mu));
        err = err.max((grid - closed).abs()).max((at_star - closed).abs());
    }
    err
}

fn dirichlet4<R: Rng>(rng: &mut R) -> [f64; 4] {
    let e: [f64; 4] = std::array::from_fn(|_| -(1.0 - rng.random::<f64>()).ln());
    let s: f64 = e.iter().sum();
    if s > 0.0 {
        e.map(|x| x / s)
    } else {
        [0.25; 4]
    }
}

/// A random schedule meeting both average power constraints with equality.
pub fn random_schedule<R: Rng>(rng: &mut R) -> Result<HdSchedule> {
    let gamma = dirichlet4(rng);
    let power = |d: [f64; 4]| -> [f64; 4] {
        std::array::from_fn(|k| if gamma[k] > 0.0 { d[k] / gamma[k] } else { 0.0 })
    };
    let p1 = power(dirichlet4(rng));
    let p2 = power(dirichlet4(rng));
    let rho: [Complex64; 4] = std::array::from_fn(|_| {
        let r = rng.random::<f64>().sqrt();
        Complex64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
    });
    HdSchedule::new(gamma, p1, p2, rho)
}

fn channels(opts: &AuditOptions) -> Result<Vec<ChannelGains>> {
    let spec = SweepSpec {
        mode: SweepMode::Fd,
        count: opts.channels.max(1),
        seed: opts.seed,
        ..SweepSpec::default()
    };
    spec.samples()?.iter().map(|s| s.gains()).collect()
}

fn run_check<F>(gs: &[ChannelGains], f: F) -> Vec<(f64, String)>
where
    F: Fn(&ChannelGains) -> Result<f64> + Sync,
{
    gs.par_iter()
        .map(|g| match f(g) {
            Ok(e) => (e, g.describe()),
            Err(e) => (f64::NAN, format!("{}: {e}", g.describe())),
        })
        .collect()
}

pub fn run_audit(opts: &AuditOptions) -> Result<AuditReport> {
    entropy_leakage_constants();
    let gs = channels(opts)?;

    let rho = collect("rho_grid", 1e-6, run_check(&gs, rho_grid_error));
    let r3 = collect("regime3_logdet", 1e-9, run_check(&gs, regime3_logdet_error));
    let gamma = collect(
        "gamma_grid",
        1e-6,
        run_check(&gs, |g| Ok(gamma_grid_error(g))),
    );

    let chain: Vec<(f64, String)> = (0..opts.chain_draws)
        .into_par_iter()
        .map(|k| {
            let g = &gs[k % gs.len()];
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let outcome = random_schedule(&mut rng).and_then(|s| hd_chain_audit(g, &s));
            match outcome {
                Ok(a) if a.ordered() => (0.0, String::new()),
                Ok(a) => (
                    1.0,
                    format!("draw {k} on {}: {}", g.describe(), a.violations.join("; ")),
                ),
                Err(e) => (f64::NAN, format!("draw {k} on {}: {e}", g.describe())),
            }
        })
        .collect();
    let chain = collect("chain_order", 0.0, chain);

    let checks = vec![rho, r3, gamma, chain];
    let passed = checks.iter().all(CheckResult::passed);
    Ok(AuditReport {
        options: *opts,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_channel_checks() {
        let g = ChannelGains::from_mag_sq(100.0, 4.0, 25.0, 10.0).unwrap();
        assert!(rho_grid_error(&g).unwrap() <= 1e-6);
        assert!(regime3_logdet_error(&g).unwrap() <= 1e-9);
        assert!(gamma_grid_error(&g) <= 1e-6);
    }

    #[test]
    fn random_schedules_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = random_schedule(&mut rng).unwrap();
            let avg: f64 = s.gamma.iter().zip(&s.power1).map(|(g, p)| g * p).sum();
            assert!((avg - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn small_audit_passes() {
        let r = run_audit(&AuditOptions {
            channels: 20,
            chain_draws: 100,
            seed: 5,
        })
        .unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.check("chain_order").unwrap().cases, 100);
    }
}
