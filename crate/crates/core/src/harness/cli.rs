//! Argument parsing and subcommand dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::error::{CoopError, Result};
use crate::fd::{
    fd_gap_report, fd_inner, fd_outer, fd_regime3_rates, fd_relay_inner_rate, ideal_coop_region,
    no_coop_region,
};
use crate::geometry::RateRegion;
use crate::hd::{entropy_leakage_constants, hd_gap_report, hd_inner, hd_outer, hd_outer_sum_only};
use crate::lda::{gdof_corners, gdof_limit_oracle, lda_scheme_run, DuplexMode, LdaChannel};
use crate::model::{ChannelGains, ChannelRecord, GdofExponents};

use super::audit::{run_audit, AuditOptions};
use super::output::{emit_json, fmt9, to_rounded_json, write_text};
use super::sweep::{
    db_to_linear, run_sweep, write_rows_csv, Interval, Sampling, SweepMode, SweepSpec,
};

#[derive(Debug, Parser)]
#[command(
    name = "coop2mac",
    version,
    about = "Cooperative two-user MAC bounds and gap certification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropy-leakage constants and their maximizing schedules.
    Constants {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inner and outer regions of one channel.
    Region(RegionArgs),
    /// Gap certification over sampled channels.
    GapSweep(SweepArgs),
    /// Bit-exact run of the deterministic relaying scheme.
    Lda(LdaArgs),
    /// gDoF corner points and finite-SNR trajectories.
    Gdof(GdofArgs),
    /// Oracle-equivalence and chain-ordering checks.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub mode: SweepMode,
    #[arg(long)]
    pub hmax_sq: Option<f64>,
    #[arg(long)]
    pub hmin_sq: Option<f64>,
    #[arg(long)]
    pub h1_sq: Option<f64>,
    #[arg(long)]
    pub h2_sq: Option<f64>,
    #[arg(long)]
    pub snr_db: Option<f64>,
    #[arg(long)]
    pub bmax: Option<f64>,
    #[arg(long)]
    pub bmin: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
    /// Also write region.json and per-region vertex CSVs here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON sweep specification; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<SweepMode>,
    #[arg(long, value_enum)]
    pub sampling: Option<Sampling>,
    /// Exponent range `LO:HI`, or a single value.
    #[arg(long)]
    pub bmax: Option<String>,
    #[arg(long)]
    pub bmin: Option<String>,
    #[arg(long)]
    pub b1: Option<String>,
    #[arg(long)]
    pub b2: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub snr_db: Option<Vec<f64>>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Per-channel CSV.
    #[arg(long)]
    pub rows: Option<PathBuf>,
    /// Summary JSON; also written to stdout.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LdaArgs {
    #[arg(long)]
    pub bmax: u32,
    #[arg(long)]
    pub bmin: u32,
    #[arg(long)]
    pub b1: u32,
    #[arg(long, default_value_t = 100)]
    pub slots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-slot CSV log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GdofArgs {
    #[arg(long)]
    pub bmax: f64,
    #[arg(long)]
    pub bmin: f64,
    #[arg(long)]
    pub b1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub b2: f64,
    #[arg(long, value_enum, default_value = "fd")]
    pub mode: DuplexMode,
    #[arg(long, value_delimiter = ',', default_value = "20,40,60,90,120")]
    pub snr_db: Vec<f64>,
    /// Polyline CSV of predicted and normalized regions.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 1000)]
    pub channels: usize,
    #[arg(long, default_value_t = 10_000)]
    pub chain_draws: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for a failed command: 2 for bad input, 1 otherwise.
pub fn exit_code(e: &CoopError) -> i32 {
    match e {
        CoopError::InvalidParameter(_)
        | CoopError::Precondition(_)
        | CoopError::LengthMismatch { .. }
        | CoopError::Json(_) => 2,
        _ => 1,
    }
}

pub fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Constants { out } => constants(out.as_deref()),
        Command::Region(a) => region(&a),
        Command::GapSweep(a) => gap_sweep(&a),
        Command::Lda(a) => lda(&a),
        Command::Gdof(a) => gdof(&a),
        Command::Audit(a) => audit(&a),
    }
}

fn constants(out: Option<&Path>) -> Result<i32> {
    let c = entropy_leakage_constants();
    let doc = json!({
        "v1": c.v1.value,
        "v2": c.v2.value,
        "v12": c.v12.value,
        "detail": {
            "v1": c.v1,
            "v2": c.v2,
            "v12": c.v12,
        },
    });
    emit_json(&doc, out)?;
    Ok(0)
}

fn region_channel(a: &RegionArgs) -> Result<(ChannelRecord, ChannelGains, bool)> {
    let rec = match (
        a.hmax_sq, a.hmin_sq, a.h1_sq, a.h2_sq, a.snr_db, a.bmax, a.bmin, a.b1,
    ) {
        (Some(h_max_sq), Some(h_min_sq), Some(h_1_sq), Some(h_2_sq), None, None, None, None) => {
            ChannelRecord::Gains {
                h_max_sq,
                h_min_sq,
                h_1_sq,
                h_2_sq,
                phase_max: 0.0,
                phase_min: 0.0,
                phase_1: 0.0,
                phase_2: 0.0,
            }
        }
        (None, None, None, None, Some(db), Some(beta_max), Some(beta_min), Some(beta_1)) => {
            ChannelRecord::Exponents {
                snr: db_to_linear(db),
                beta_max,
                beta_min,
                beta_1,
                beta_2: a.b2.unwrap_or(0.0),
            }
        }
        _ => return Err(CoopError::invalid(
            "give either --hmax-sq --hmin-sq --h1-sq --h2-sq or --snr-db --bmax --bmin --b1 [--b2]",
        )),
    };
    let (g, relabeled) = rec.to_gains()?;
    Ok((rec, g, relabeled))
}

fn write_region_csv(dir: &Path, name: &str, r: &RateRegion) -> Result<()> {
    let mut buf = Vec::new();
    r.write_vertex_csv(&mut buf, fmt9)?;
    write_text(
        &dir.join(format!("{name}.csv")),
        &String::from_utf8_lossy(&buf),
    )
}

fn region(a: &RegionArgs) -> Result<i32> {
    let (rec, g, relabeled) = region_channel(a)?;
    let mut doc = serde_json::Map::new();
    doc.insert("channel".into(), serde_json::to_value(rec)?);
    doc.insert("relabeled".into(), json!(relabeled));
    let mut csvs: Vec<(&str, RateRegion)> = Vec::new();

    if matches!(a.mode, SweepMode::Fd | SweepMode::Both) {
        let (inner, outer) = (fd_inner(&g), fd_outer(&g));
        doc.insert(
            "fd".into(),
            json!({
                "outer": outer,
                "inner": inner,
                "no_coop": no_coop_region(&g),
                "ideal_coop": ideal_coop_region(&g),
                "regime3_rates": fd_regime3_rates(&g),
                "relay_rate": fd_relay_inner_rate(&g),
                "report": fd_gap_report(&g)?,
            }),
        );
        csvs.push(("fd_inner", inner));
        csvs.push(("fd_outer", outer));
    }
    if matches!(a.mode, SweepMode::Hd | SweepMode::Both) {
        let (inner, outer) = (hd_inner(&g), hd_outer(&g));
        doc.insert(
            "hd".into(),
            json!({
                "outer": outer,
                "outer_sum_only": hd_outer_sum_only(&g),
                "inner": inner,
                "report": hd_gap_report(&g)?,
            }),
        );
        csvs.push(("hd_inner", inner));
        csvs.push(("hd_outer", outer));
    }

    let doc = serde_json::Value::Object(doc);
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        write_text(&dir.join("region.json"), &to_rounded_json(&doc)?)?;
        for (name, r) in &csvs {
            write_region_csv(dir, name, r)?;
        }
    }
    emit_json(&doc, None)?;
    Ok(0)
}

fn parse_interval(flag: &str, s: &str) -> Result<Interval> {
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse()
            .map_err(|_| CoopError::invalid(format!("--{flag}: cannot parse {t:?}")))
    };
    match s.split_once(':') {
        Some((lo, hi)) => Ok(Interval::new(num(lo)?, num(hi)?)),
        None => Ok(Interval::point(num(s)?)),
    }
}

pub fn sweep_spec(a: &SweepArgs) -> Result<SweepSpec> {
    let mut spec = match &a.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => SweepSpec::default(),
    };
    if let Some(m) = a.mode {
        spec.mode = m;
    }
    if let Some(s) = a.sampling {
        spec.sampling = s;
    }
    for (flag, arg, slot) in [
        ("bmax", &a.bmax, &mut spec.beta_max),
        ("bmin", &a.bmin, &mut spec.beta_min),
        ("b1", &a.b1, &mut spec.beta_1),
        ("b2", &a.b2, &mut spec.beta_2),
    ] {
        if let Some(s) = arg {
            *slot = parse_interval(flag, s)?;
        }
    }
    if let Some(s) = &a.snr_db {
        spec.snr_db = s.clone();
    }
    if let Some(c) = a.count {
        spec.count = c;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(s) = a.grid_step {
        spec.grid_step = s;
    }
    if a.rows.is_some() {
        spec.rows = a.rows.clone();
    }
    if a.summary.is_some() {
        spec.summary = a.summary.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn gap_sweep(a: &SweepArgs) -> Result<i32> {
    let spec = sweep_spec(a)?;
    let report = run_sweep(&spec)?;
    if let Some(p) = &spec.rows {
        let mut buf = Vec::new();
        write_rows_csv(&report.rows, &mut buf)?;
        write_text(p, &String::from_utf8_lossy(&buf))?;
    }
    if let Some(p) = &spec.summary {
        emit_json(&report.summary, Some(p))?;
    }
    emit_json(&report.summary, None)?;
    if report.summary.passed {
        return Ok(0);
    }
    for r in report.failures().take(20) {
        eprintln!(
            "FAIL idx={} mode={} beta={:?} snr_db={} gap={}: {}",
            r.sample.idx,
            r.mode.as_str(),
            r.sample.beta,
            r.sample.snr_db,
            fmt9(r.gap_bits),
            r.status()
        );
    }
    Ok(1)
}

fn lda(a: &LdaArgs) -> Result<i32> {
    let ch = LdaChannel::new(a.bmax, a.bmin, a.b1)?;
    let run = match lda_scheme_run(&ch, a.slots, a.seed) {
        Ok(r) => r,
        Err(e @ CoopError::DecodeMismatch { .. }) => {
            eprintln!("FAIL {e}");
            return Ok(1);
        }
        Err(e) => return Err(e),
    };
    if let Some(p) = &a.log {
        let mut buf = Vec::new();
        run.log.write_csv(&mut buf)?;
        write_text(p, &String::from_utf8_lossy(&buf))?;
    }
    emit_json(
        &json!({
            "channel": ch,
            "slots": a.slots,
            "seed": a.seed,
            "steady_state": run.steady_state,
            "average": run.average,
            "errors": run.errors,
        }),
        None,
    )?;
    Ok(if run.errors == 0 { 0 } else { 1 })
}

#[derive(Serialize)]
struct TrajectoryPoint {
    snr_db: f64,
    inner_distance: f64,
    outer_distance: f64,
    relay_corner: crate::model::RatePair,
}

fn gdof(a: &GdofArgs) -> Result<i32> {
    let first = a
        .snr_db
        .first()
        .copied()
        .ok_or_else(|| CoopError::invalid("--snr-db list is empty"))?;
    if let Some(s) = a.snr_db.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(CoopError::invalid(format!(
            "snr entries must be > 0 dB, got {s}"
        )));
    }
    let e = GdofExponents::new(a.bmax, a.bmin, a.b1, a.b2, db_to_linear(first))?;
    let corners = gdof_corners(&e)?;
    let predicted = corners.region(a.mode);
    let linear: Vec<f64> = a.snr_db.iter().map(|d| db_to_linear(*d)).collect();
    let points = gdof_limit_oracle(&e, a.mode, &linear)?;

    if let Some(p) = &a.out {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["snr_db", "region", "vertex", "r1", "r2"])?;
        let mut push = |db: String, name: &str, r: &RateRegion| -> Result<()> {
            for (k, v) in r.boundary().iter().enumerate() {
                w.write_record([
                    db.clone(),
                    name.to_string(),
                    k.to_string(),
                    fmt9(v.r1),
                    fmt9(v.r2),
                ])?;
            }
            Ok(())
        };
        push(String::new(), "predicted", &predicted)?;
        for (db, pt) in a.snr_db.iter().zip(&points) {
            push(fmt9(*db), "inner", &pt.inner)?;
            push(fmt9(*db), "outer", &pt.outer)?;
        }
        let buf = w.into_inner().map_err(|e| CoopError::Io(e.into_error()))?;
        write_text(p, &String::from_utf8_lossy(&buf))?;
    }

    let trajectory: Vec<TrajectoryPoint> = a
        .snr_db
        .iter()
        .zip(&points)
        .map(|(db, pt)| TrajectoryPoint {
            snr_db: *db,
            inner_distance: pt.inner_distance,
            outer_distance: pt.outer_distance,
            relay_corner: pt.relay_corner,
        })
        .collect();
    let labeled: serde_json::Map<String, serde_json::Value> =
        corners.labeled().map(|(k, v)| (k, json!(v))).collect();
    emit_json(
        &json!({
            "exponents": {"beta_max": a.bmax, "beta_min": a.bmin, "beta_1": a.b1, "beta_2": a.b2},
            "mode": a.mode,
            "corners": labeled,
            "predicted_vertices": predicted.vertices(),
            "trajectory": trajectory,
        }),
        None,
    )?;
    Ok(0)
}

fn audit(a: &AuditArgs) -> Result<i32> {
    let report = run_audit(&AuditOptions {
        channels: a.channels,
        chain_draws: a.chain_draws,
        seed: a.seed,
    })?;
    emit_json(&report, a.out.as_deref())?;
    if a.out.is_some() {
        emit_json(&report, None)?;
    }
    for c in report.checks.iter().filter(|c| !c.passed()) {
        eprintln!(
            "FAIL {}: {} of {} cases, first: {}",
            c.name,
            c.failures,
            c.cases,
            c.first_failure.as_deref().unwrap_or("-")
        );
    }
    Ok(if report.passed { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("coop2mac").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn interval_syntax() {
        assert_eq!(
            parse_interval("b1", "0.5:2").unwrap(),
            Interval::new(0.5, 2.0)
        );
        assert_eq!(parse_interval("b1", "1.5").unwrap(), Interval::point(1.5));
        assert!(parse_interval("b1", "x:2").is_err());
    }

    #[test]
    fn sweep_flags_override_defaults() {
        let Command::GapSweep(a) = parse(&[
            "gap-sweep",
            "--mode",
            "hd",
            "--b1",
            "0:3",
            "--snr-db",
            "40",
            "--count",
            "7",
        ]) else {
            panic!("wrong subcommand");
        };
        let s = sweep_spec(&a).unwrap();
        assert_eq!(s.mode, SweepMode::Hd);
        assert_eq!(s.snr_db, vec![40.0]);
        assert_eq!(s.count, 7);
        assert_eq!(s.beta_max, Interval::new(0.0, 3.0));
    }

    #[test]
    fn region_needs_one_channel_form() {
        let Command::Region(a) = parse(&["region", "--hmax-sq", "100", "--snr-db", "20"]) else {
            panic!("wrong subcommand");
        };
        assert!(matches!(
            region_channel(&a),
            Err(CoopError::InvalidParameter(_))
        ));
        let Command::Region(a) = parse(&[
            "region", "--snr-db", "20", "--bmax", "0.5", "--bmin", "1", "--b1", "1",
        ]) else {
            panic!("wrong subcommand");
        };
        let (_, g, relabeled) = region_channel(&a).unwrap();
        assert!(relabeled);
        assert!((g.max_sq() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&CoopError::invalid("x")), 2);
        assert_eq!(exit_code(&CoopError::Precondition("x".into())), 2);
        assert_eq!(exit_code(&CoopError::CheckFailed("x".into())), 1);
    }
}
