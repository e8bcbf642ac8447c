//! Gap-certification sweeps over sampled channels.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoopError, Result};
use crate::fd::{
    fd_cutset_at_rho, fd_gap_report, fd_inner, fd_outer, fd_regime, ideal_coop_region,
    ideal_sum_rate, no_coop_region, RegimeTag, FD_GAP_BOUND,
};
use crate::geometry::{region_gap, RateRegion};
use crate::hd::{entropy_leakage_constants, hd_gap_report, hd_inner, hd_outer, hd_outer_sum_only};
use crate::lda::DuplexMode;
use crate::model::{gains_from_exponents, ChannelGains, GdofExponents};

use super::output::fmt9;

/// Summary threshold for the half-duplex gap.
pub const HD_GAP_THRESHOLD: f64 = 4.8219;
/// Slack on both summary thresholds.
pub const GAP_SLACK: f64 = 1e-6;

const MAX_GRID_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Fd,
    Hd,
    Both,
}

impl SweepMode {
    fn modes(self) -> &'static [DuplexMode] {
        match self {
            SweepMode::Fd => &[DuplexMode::Fd],
            SweepMode::Hd => &[DuplexMode::Hd],
            SweepMode::Both => &[DuplexMode::Fd, DuplexMode::Hd],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Grid,
    Random,
}

/// Closed interval `[lo, hi]`, written as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Interval { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.lo + (self.hi - self.lo) * u
    }

    fn grid(&self, step: f64) -> Vec<f64> {
        let n = ((self.hi - self.lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.lo + k as f64 * step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub sampling: Sampling,
    pub beta_max: Interval,
    pub beta_min: Interval,
    pub beta_1: Interval,
    pub beta_2: Interval,
    pub snr_db: Vec<f64>,
    /// Number of random samples; ignored by grid sampling.
    pub count: usize,
    pub seed: u64,
    /// Exponent spacing for grid sampling.
    pub grid_step: f64,
    pub rows: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let b = Interval::new(0.0, 3.0);
        SweepSpec {
            mode: SweepMode::Both,
            sampling: Sampling::Random,
            beta_max: b,
            beta_min: b,
            beta_1: b,
            beta_2: b,
            snr_db: vec![10.0, 20.0, 30.0, 40.0, 60.0],
            count: 1000,
            seed: 1,
            grid_step: 0.5,
            rows: None,
            summary: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, iv) in [
            ("beta_max", self.beta_max),
            ("beta_min", self.beta_min),
            ("beta_1", self.beta_1),
            ("beta_2", self.beta_2),
        ] {
            if !(0.0 <= iv.lo && iv.lo <= iv.hi && iv.hi <= 8.0) {
                return Err(CoopError::invalid(format!(
                    "{name} interval [{}, {}] must satisfy 0 <= lo <= hi <= 8",
                    iv.lo, iv.hi
                )));
            }
        }
        if self.count == 0 {
            return Err(CoopError::invalid("count must be at least 1"));
        }
        if self.snr_db.is_empty() {
            return Err(CoopError::invalid("snr list is empty"));
        }
        if let Some(s) = self.snr_db.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(CoopError::invalid(format!(
                "snr entries must be > 0 dB, got {s}"
            )));
        }
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return Err(CoopError::invalid(format!(
                "grid_step must be > 0, got {}",
                self.grid_step
            )));
        }
        Ok(())
    }

    pub fn samples(&self) -> Result<Vec<Sample>> {
        self.validate()?;
        match self.sampling {
            Sampling::Random => Ok((0..self.count).map(|i| self.random_sample(i)).collect()),
            Sampling::Grid => self.grid_samples(),
        }
    }

    fn random_sample(&self, idx: usize) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(idx as u64);
        let mut beta = [
            self.beta_max.sample(&mut rng),
            self.beta_min.sample(&mut rng),
            self.beta_1.sample(&mut rng),
            self.beta_2.sample(&mut rng),
        ];
        let phases: [f64; 4] = std::array::from_fn(|_| TAU * rng.random::<f64>());
        // relabel users so the stronger direct link comes first
        let swapped = beta[0] < beta[1];
        if swapped {
            beta = [beta[1], beta[0], beta[3], beta[2]];
        }
        Sample {
            idx,
            snr_db: self.snr_db[idx % self.snr_db.len()],
            beta,
            phases,
            swapped,
        }
    }

    fn grid_samples(&self) -> Result<Vec<Sample>> {
        let axes = [
            self.beta_max.grid(self.grid_step),
            self.beta_min.grid(self.grid_step),
            self.beta_1.grid(self.grid_step),
            self.beta_2.grid(self.grid_step),
        ];
        let total = axes.iter().map(Vec::len).product::<usize>() * self.snr_db.len();
        if total > MAX_GRID_POINTS {
            return Err(CoopError::invalid(format!(
                "grid has {total} points, more than {MAX_GRID_POINTS}"
            )));
        }
        let mut out = Vec::new();
        for &bmax in &axes[0] {
            for &bmin in axes[1].iter().filter(|b| **b <= bmax) {
                for &b1 in &axes[2] {
                    for &b2 in &axes[3] {
                        for &snr_db in &self.snr_db {
                            out.push(Sample {
                                idx: out.len(),
                                snr_db,
                                beta: [bmax, bmin, b1, b2],
                                phases: [0.0; 4],
                                swapped: false,
                            });
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(CoopError::invalid(
                "grid has no point with beta_max >= beta_min",
            ));
        }
        Ok(out)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub idx: usize,
    pub snr_db: f64,
    /// `(beta_max, beta_min, beta_1, beta_2)` after relabeling.
    pub beta: [f64; 4],
    pub phases: [f64; 4],
    pub swapped: bool,
}

impl Sample {
    pub fn exponents(&self) -> Result<GdofExponents> {
        let [bmax, bmin, b1, b2] = self.beta;
        GdofExponents::new(bmax, bmin, b1, b2, db_to_linear(self.snr_db))
    }

    pub fn gains(&self) -> Result<ChannelGains> {
        gains_from_exponents(&self.exponents()?, self.phases)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HdColumns {
    pub c1: f64,
    pub cmax: f64,
    pub v: f64,
    pub gamma_star_mu0: f64,
    pub no_coop_1bit: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sample: Sample,
    pub mode: DuplexMode,
    pub regime: RegimeTag,
    /// NaN when the report could not be produced.
    pub gap_bits: f64,
    /// `V1, V3_R1, V3_R2, V5` shortfalls (FD rows).
    pub deltas: Option<[f64; 4]>,
    pub corner_ok: Option<bool>,
    pub hd: Option<HdColumns>,
    pub flags: Vec<String>,
    pub failures: Vec<String>,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn status(&self) -> String {
        if self.ok() {
            "ok".to_string()
        } else {
            self.failures.join(";")
        }
    }
}

fn nested(inner: &RateRegion, outer: &RateRegion) -> bool {
    region_gap(inner, outer).is_ok()
}

fn fd_row(s: &Sample, g: &ChannelGains, g0: &ChannelGains) -> SweepRow {
    let mut row = SweepRow {
        sample: *s,
        mode: DuplexMode::Fd,
        regime: fd_regime(g).tag,
        gap_bits: f64::NAN,
        deltas: None,
        corner_ok: None,
        hd: None,
        flags: Vec::new(),
        failures: Vec::new(),
    };
    let rep = match fd_gap_report(g) {
        Ok(r) => r,
        Err(e) => {
            row.failures.push(format!("error: {e}"));
            return row;
        }
    };
    row.gap_bits = rep.region_gap;
    let d = |l: &str| rep.corner(l).map_or(f64::NAN, |c| c.value);
    row.deltas = Some([d("V1"), d("V3_R1"), d("V3_R2"), d("V5")]);
    row.corner_ok = Some(rep.corners_ok());
    row.flags = rep.flags.clone();
    if rep.region_gap > FD_GAP_BOUND + GAP_SLACK {
        row.failures.push("fd_gap".into());
    }
    for c in rep.corners.iter().filter(|c| !c.within_bound()) {
        row.failures.push(format!("corner_{}", c.label));
    }
    match fd_gap_report(g0) {
        Ok(r0) if (r0.region_gap - rep.region_gap).abs() <= 1e-12 => {}
        _ => row.failures.push("phase_rerun".into()),
    }
    let cross = g.h_max().to_complex() * g.h_min().to_complex().conj();
    let aligned = Complex64::from_polar(1.0, -cross.arg());
    match fd_cutset_at_rho(g, aligned) {
        Ok(b) if (b.sum - ideal_sum_rate(g)).abs() <= 1e-9 => {}
        _ => row.failures.push("aligned_sum".into()),
    }
    let (nc, inner, outer, ideal) = (
        no_coop_region(g),
        fd_inner(g),
        fd_outer(g),
        ideal_coop_region(g),
    );
    for (name, a, b) in [
        ("nest_nc_inner", &nc, &inner),
        ("nest_inner_outer", &inner, &outer),
        ("nest_outer_ideal", &outer, &ideal),
    ] {
        if !nested(a, b) {
            row.failures.push(name.into());
        }
    }
    row
}

fn hd_row(s: &Sample, g: &ChannelGains, g0: &ChannelGains) -> SweepRow {
    let mut row = SweepRow {
        sample: *s,
        mode: DuplexMode::Hd,
        regime: fd_regime(g).tag,
        gap_bits: f64::NAN,
        deltas: None,
        corner_ok: None,
        hd: None,
        flags: Vec::new(),
        failures: Vec::new(),
    };
    let rep = match hd_gap_report(g) {
        Ok(r) => r,
        Err(e) => {
            row.failures.push(format!("error: {e}"));
            return row;
        }
    };
    row.gap_bits = rep.gap;
    row.hd = Some(HdColumns {
        c1: rep.params.c1,
        cmax: rep.params.cmax,
        v: rep.params.v,
        gamma_star_mu0: rep.gamma_star_mu0,
        no_coop_1bit: rep.no_coop_1bit,
    });
    if rep.gap > rep.bound + GAP_SLACK {
        row.failures.push("hd_gap".into());
    }
    if rep.expression_residual > 1e-9 {
        row.failures.push("expression_residual".into());
    }
    if rep.no_coop_1bit == Some(false) {
        row.failures.push("no_coop_1bit".into());
    }
    match hd_gap_report(g0) {
        Ok(r0) if (r0.gap - rep.gap).abs() <= 1e-12 => {}
        _ => row.failures.push("phase_rerun".into()),
    }
    let outer = hd_outer(g);
    if !nested(&hd_inner(g), &outer) {
        row.failures.push("nest_inner_outer".into());
    }
    if !nested(&hd_outer_sum_only(g), &outer) {
        row.failures.push("nest_hd2_hd1".into());
    }
    row
}

/// Rows for one sample, one per requested duplex mode.
pub fn evaluate_sample(s: &Sample, mode: SweepMode) -> Vec<SweepRow> {
    let gains = s.gains().and_then(|g| Ok((g, g.with_phases([0.0; 4])?)));
    mode.modes()
        .iter()
        .map(|m| match &gains {
            Ok((g, g0)) => match m {
                DuplexMode::Fd => fd_row(s, g, g0),
                DuplexMode::Hd => hd_row(s, g, g0),
            },
            Err(e) => SweepRow {
                sample: *s,
                mode: *m,
                regime: RegimeTag::Regime1,
                gap_bits: f64::NAN,
                deltas: None,
                corner_ok: None,
                hd: None,
                flags: Vec::new(),
                failures: vec![format!("error: {e}")],
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub rows: usize,
    pub max_gap: f64,
    pub argmax_idx: Option<usize>,
    pub threshold: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub mode: SweepMode,
    pub sampling: Sampling,
    pub seed: u64,
    pub samples: usize,
    pub fd: Option<ModeSummary>,
    pub hd: Option<ModeSummary>,
    pub violation_count: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

impl SweepReport {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| !r.ok())
    }
}

fn summarize(rows: &[SweepRow], mode: DuplexMode) -> Option<ModeSummary> {
    let threshold = match mode {
        DuplexMode::Fd => FD_GAP_BOUND,
        DuplexMode::Hd => HD_GAP_THRESHOLD,
    };
    let mut s = ModeSummary {
        rows: 0,
        max_gap: f64::NEG_INFINITY,
        argmax_idx: None,
        threshold,
        violations: 0,
    };
    for r in rows.iter().filter(|r| r.mode == mode) {
        s.rows += 1;
        if !r.ok() {
            s.violations += 1;
        }
        if r.gap_bits > s.max_gap {
            s.max_gap = r.gap_bits;
            s.argmax_idx = Some(r.sample.idx);
        }
    }
    (s.rows > 0).then_some(s)
}

/// Evaluates every sample in parallel; rows come back in sample order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    let samples = spec.samples()?;
    // computed once, before any worker needs it
    entropy_leakage_constants();
    let rows: Vec<SweepRow> = samples
        .par_iter()
        .flat_map_iter(|s| evaluate_sample(s, spec.mode))
        .collect();
    let fd = summarize(&rows, DuplexMode::Fd);
    let hd = summarize(&rows, DuplexMode::Hd);
    let violation_count = rows.iter().filter(|r| !r.ok()).count();
    let within = |m: &Option<ModeSummary>| {
        m.as_ref()
            .is_none_or(|m| m.max_gap <= m.threshold + GAP_SLACK)
    };
    let passed = violation_count == 0 && within(&fd) && within(&hd);
    Ok(SweepReport {
        summary: SweepSummary {
            mode: spec.mode,
            sampling: spec.sampling,
            seed: spec.seed,
            samples: samples.len(),
            fd,
            hd,
            violation_count,
            passed,
        },
        rows,
    })
}

pub const ROW_HEADER: [&str; 23] = [
    "idx",
    "snr_db",
    "bmax",
    "bmin",
    "b1",
    "b2",
    "mode",
    "regime",
    "gap_bits",
    "delta_v1",
    "delta_v3_r1",
    "delta_v3_r2",
    "delta_v5",
    "swapped",
    "phase_max",
    "c1",
    "cmax",
    "v",
    "gamma_star_mu0",
    "no_coop_1bit",
    "corner_ok",
    "flags",
    "status",
];

pub fn write_rows_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ROW_HEADER)?;
    let opt = |x: Option<f64>| x.map(fmt9).unwrap_or_default();
    let optb = |x: Option<bool>| x.map(|b| b.to_string()).unwrap_or_default();
    for r in rows {
        let s = &r.sample;
        let d = r.deltas;
        let h = r.hd;
        out.write_record([
            s.idx.to_string(),
            fmt9(s.snr_db),
            fmt9(s.beta[0]),
            fmt9(s.beta[1]),
            fmt9(s.beta[2]),
            fmt9(s.beta[3]),
            r.mode.as_str().to_string(),
            r.regime.as_str().to_string(),
            fmt9(r.gap_bits),
            opt(d.map(|d| d[0])),
            opt(d.map(|d| d[1])),
            opt(d.map(|d| d[2])),
            opt(d.map(|d| d[3])),
            s.swapped.to_string(),
            fmt9(s.phases[0]),
            opt(h.map(|h| h.c1)),
            opt(h.map(|h| h.cmax)),
            opt(h.map(|h| h.v)),
            opt(h.map(|h| h.gamma_star_mu0)),
            optb(h.and_then(|h| h.no_coop_1bit)),
            optb(r.corner_ok),
            r.flags.join("|"),
            r.status(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::fd_gap_audit;
    use crate::hd::hd_gap_audit;

    fn small(mode: SweepMode, count: usize) -> SweepSpec {
        SweepSpec {
            mode,
            count,
            ..SweepSpec::default()
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = SweepSpec::default();
        assert!(s.validate().is_ok());
        s.beta_1 = Interval::new(1.0, 9.0);
        assert!(s.validate().is_err());
        let s = SweepSpec {
            count: 0,
            ..SweepSpec::default()
        };
        assert!(s.validate().is_err());
        let s = SweepSpec {
            snr_db: vec![10.0, 0.0],
            ..SweepSpec::default()
        };
        assert!(s.validate().is_err());
        let s = SweepSpec {
            beta_min: Interval::new(2.0, 1.0),
            ..SweepSpec::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let s: SweepSpec = serde_json::from_str(r#"{"mode": "fd", "beta_1": [0.5, 1.5]}"#).unwrap();
        assert_eq!(s.mode, SweepMode::Fd);
        assert_eq!(s.beta_1, Interval::new(0.5, 1.5));
        assert_eq!(s.count, 1000);
        assert!(serde_json::from_str::<SweepSpec>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn random_samples_are_ordered_and_reproducible() {
        let spec = small(SweepMode::Both, 50);
        let a = spec.samples().unwrap();
        let b = spec.samples().unwrap();
        assert_eq!(a, b);
        for s in &a {
            assert!(s.beta[0] >= s.beta[1]);
            assert_eq!(s.snr_db, spec.snr_db[s.idx % 5]);
        }
        assert!(a.iter().any(|s| s.swapped));
        let other = SweepSpec { seed: 2, ..spec }.samples().unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn grid_skips_unordered_pairs() {
        let spec = SweepSpec {
            sampling: Sampling::Grid,
            beta_max: Interval::new(0.0, 1.0),
            beta_min: Interval::new(0.0, 1.0),
            beta_1: Interval::point(0.5),
            beta_2: Interval::point(0.0),
            snr_db: vec![20.0],
            ..SweepSpec::default()
        };
        let s = spec.samples().unwrap();
        // (0,0), (0.5,0), (0.5,0.5), (1,0), (1,0.5), (1,1)
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|x| x.beta[0] >= x.beta[1]));
    }

    #[test]
    fn single_channel_matches_direct_audit() {
        let spec = SweepSpec {
            beta_max: Interval::point(2.0),
            beta_min: Interval::point(0.5),
            beta_1: Interval::point(1.5),
            beta_2: Interval::point(1.0),
            snr_db: vec![30.0],
            count: 1,
            ..SweepSpec::default()
        };
        let rep = run_sweep(&spec).unwrap();
        assert_eq!(rep.rows.len(), 2);
        let g = rep.rows[0].sample.gains().unwrap();
        assert_eq!(rep.rows[0].gap_bits, fd_gap_audit(&g).unwrap().region_gap);
        assert_eq!(rep.rows[1].gap_bits, hd_gap_audit(&g).unwrap().gap);
        assert!(rep.summary.passed);
    }

    #[test]
    fn summary_consistent_with_rows() {
        let rep = run_sweep(&small(SweepMode::Both, 40)).unwrap();
        assert_eq!(rep.rows.len(), 80);
        assert_eq!(rep.summary.violation_count, 0);
        for (m, s) in [
            (DuplexMode::Fd, &rep.summary.fd),
            (DuplexMode::Hd, &rep.summary.hd),
        ] {
            let s = s.as_ref().unwrap();
            let max = rep
                .rows
                .iter()
                .filter(|r| r.mode == m)
                .map(|r| r.gap_bits)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(s.max_gap, max);
            let arg = s.argmax_idx.unwrap();
            assert!(rep
                .rows
                .iter()
                .any(|r| r.mode == m && r.sample.idx == arg && r.gap_bits == max));
        }
        for (k, r) in rep.rows.iter().enumerate() {
            assert_eq!(r.sample.idx, k / 2);
        }
    }

    #[test]
    fn csv_layout() {
        let rep = run_sweep(&small(SweepMode::Fd, 3)).unwrap();
        let mut buf = Vec::new();
        write_rows_csv(&rep.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("idx,snr_db,bmax,bmin,b1,b2,mode,regime,gap_bits,delta_v1"));
        assert_eq!(lines.count(), 3);
    }
}
