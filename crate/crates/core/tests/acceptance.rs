//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use coop2mac::fd::{fd_inner, fd_outer};
use coop2mac::harness::{run_audit, run_sweep, AuditOptions, SweepMode, SweepReport, SweepSpec};
use coop2mac::hd::{entropy_leakage_constants, hd_inner, hd_outer, LeakageMax};
use coop2mac::lda::{gdof_corners, gdof_limit_oracle, lda_scheme_run, DuplexMode, LdaChannel};
use coop2mac::{GdofExponents, RatePair};

const BIN: &str = env!("CARGO_BIN_EXE_coop2mac");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn report(id: usize, title: &str, o: &Outcome, elapsed: Duration) -> bool {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!(
        "[{tag}] {id}. {title} ({:.2}s): {}",
        elapsed.as_secs_f64(),
        o.detail
    );
    o.pass
}

fn run_bin(args: &[&str], threads: &str) -> Output {
    Command::new(BIN)
        .args(args)
        .env("COOP2MAC_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn criterion_constants() -> Outcome {
    let start = Instant::now();
    let out = run_bin(&["constants"], "1");
    let cli_time = start.elapsed();
    if !out.status.success() {
        return outcome(false, format!("constants exited with {}", out.status));
    }
    let doc: serde_json::Value = match serde_json::from_slice(&out.stdout) {
        Ok(v) => v,
        Err(e) => return outcome(false, format!("unparsable JSON: {e}")),
    };
    let get = |k: &str| doc[k].as_f64().unwrap_or(f64::NAN);
    let (v1, v2, v12) = (get("v1"), get("v2"), get("v12"));
    let mut ok =
        (v1 - 2.0182).abs() <= 5e-3 && (v2 - 2.0182).abs() <= 5e-3 && (v12 - 3.8218).abs() <= 5e-3;

    let c = entropy_leakage_constants();
    let gap = |m: &LeakageMax| {
        let value = (m.closed_form_value - m.grid_value).abs();
        let arg = m
            .closed_form_argmax
            .iter()
            .zip(&m.argmax)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (value, arg)
    };
    let mut worst = (0.0f64, 0.0f64);
    for m in [&c.v1, &c.v2, &c.v12] {
        let (v, a) = gap(m);
        worst = (worst.0.max(v), worst.1.max(a));
    }
    ok &= worst.0 <= 1e-4 && worst.1 <= 1e-4 && cli_time < Duration::from_secs(10);
    outcome(
        ok,
        format!(
            "v1={v1} v2={v2} v12={v12}; closed form vs grid: value {:.2e}, argmax {:.2e}; cli {:.2}s",
            worst.0,
            worst.1,
            cli_time.as_secs_f64()
        ),
    )
}

fn sweep_report() -> (SweepReport, Duration) {
    let spec = SweepSpec {
        mode: SweepMode::Both,
        count: 10_000,
        seed: 1,
        ..SweepSpec::default()
    };
    let start = Instant::now();
    let rep = run_sweep(&spec).expect("sweep runs");
    (rep, start.elapsed())
}

fn criterion_fd(rep: &SweepReport, time: Duration) -> Outcome {
    let fd = rep.summary.fd.as_ref().expect("fd rows");
    let rows: Vec<_> = rep
        .rows
        .iter()
        .filter(|r| r.mode == DuplexMode::Fd)
        .collect();
    let mut corner_bad = 0;
    let mut per_regime = [0usize; 3];
    for r in &rows {
        let Some([_, r1, r2, v5]) = r.deltas else {
            corner_bad += 1;
            continue;
        };
        let (b1, b2) = match r.regime.as_str() {
            "regime1" => {
                per_regime[0] += 1;
                (1.0, 1.0)
            }
            "regime2" => {
                per_regime[1] += 1;
                (1.0, 1.0)
            }
            _ => {
                per_regime[2] += 1;
                (1.0, 2.0)
            }
        };
        if !(r1 <= b1 + 1e-9 && r2 <= b2 + 1e-9 && v5 <= 1.0 + 1e-9) {
            corner_bad += 1;
        }
    }
    let violations = rows.iter().filter(|r| !r.ok()).count();
    let ok = rows.len() == 10_000
        && fd.max_gap <= 2.000001
        && corner_bad == 0
        && violations == 0
        && time < Duration::from_secs(120);
    outcome(
        ok,
        format!(
            "{} channels (regimes {:?}), max gap {:.9} at idx {:?}, corner failures {corner_bad}, row failures {violations}",
            rows.len(),
            per_regime,
            fd.max_gap,
            fd.argmax_idx
        ),
    )
}

fn criterion_hd(rep: &SweepReport, time: Duration) -> Outcome {
    let hd = rep.summary.hd.as_ref().expect("hd rows");
    let rows: Vec<_> = rep
        .rows
        .iter()
        .filter(|r| r.mode == DuplexMode::Hd)
        .collect();
    let weak: Vec<_> = rows
        .iter()
        .filter_map(|r| r.hd.and_then(|h| h.no_coop_1bit))
        .collect();
    let weak_fail = weak.iter().filter(|b| !**b).count();
    let violations = rows.iter().filter(|r| !r.ok()).count();
    let ok = rows.len() == 10_000
        && hd.max_gap <= 4.8219
        && weak_fail == 0
        && violations == 0
        && time < Duration::from_secs(120);
    outcome(
        ok,
        format!(
            "{} channels, max gap {:.9} at idx {:?}; weak cross link: {} channels, {weak_fail} without the 1-bit certificate; row failures {violations}",
            rows.len(),
            hd.max_gap,
            hd.argmax_idx,
            weak.len()
        ),
    )
}

fn criterion_oracles() -> Outcome {
    let rep = run_audit(&AuditOptions {
        channels: 1000,
        chain_draws: 10_000,
        seed: 1,
    })
    .expect("audit runs");
    let detail = rep
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {}/{} max err {:.2e}",
                c.name,
                c.cases - c.failures,
                c.cases,
                c.max_error
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    let ok = rep.passed
        && rep.check("chain_order").is_some_and(|c| c.cases == 10_000)
        && rep.check("rho_grid").is_some_and(|c| c.cases == 1000);
    outcome(ok, detail)
}

fn criterion_lda() -> Outcome {
    let start = Instant::now();
    let (mut runs, mut bad) = (0, Vec::new());
    for bmax in 1..=8u32 {
        for b1 in 1..=bmax {
            for bmin in 0..b1 {
                let ch = LdaChannel::new(bmax, bmin, b1).expect("valid triple");
                for seed in 0..5u64 {
                    runs += 1;
                    match lda_scheme_run(&ch, 64, seed) {
                        Ok(r)
                            if r.errors == 0
                                && r.steady_state
                                    == RatePair::new((bmax - b1) as f64, b1 as f64) => {}
                        Ok(r) => bad.push(format!(
                            "({bmax},{bmin},{b1}) seed {seed}: {:?}",
                            r.steady_state
                        )),
                        Err(e) => bad.push(format!("({bmax},{bmin},{b1}) seed {seed}: {e}")),
                    }
                }
            }
        }
    }
    let t = start.elapsed();
    outcome(
        bad.is_empty() && t < Duration::from_secs(30),
        format!(
            "{runs} runs, {} mismatches{}",
            bad.len(),
            bad.first()
                .map(|b| format!(", first {b}"))
                .unwrap_or_default()
        ),
    )
}

fn gdof_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for bmax in [1.0, 2.0, 3.0, 4.0, 5.0] {
        for frac in [0.25, 0.5] {
            let bmin = bmax * frac;
            let d = bmax - bmin;
            for b1 in [
                0.5 * bmin,
                bmin + 0.25 * d,
                bmin + 0.5 * d,
                bmin + 0.75 * d,
                1.25 * bmax,
            ] {
                out.push((bmax, bmin, b1));
            }
        }
    }
    out
}

fn criterion_gdof() -> Outcome {
    let grid = gdof_grid();
    let (mut fd_worst, mut hd_worst) = (0.0f64, 0.0f64);
    let mut errors = Vec::new();
    for &(bmax, bmin, b1) in &grid {
        let e = GdofExponents::new(bmax, bmin, b1, 0.0, 1e12).expect("valid exponents");
        for (mode, worst) in [
            (DuplexMode::Fd, &mut fd_worst),
            (DuplexMode::Hd, &mut hd_worst),
        ] {
            match gdof_limit_oracle(&e, mode, &[1e12]) {
                Ok(pts) => {
                    let p = &pts[0];
                    *worst = worst.max(p.inner_distance).max(p.outer_distance);
                }
                Err(err) => errors.push(format!("{:?} {mode:?}: {err}", (bmax, bmin, b1))),
            }
        }
    }

    let mut coincidence_bad = 0;
    let mut coincidence_cases = 0;
    for bmax in [0.5, 1.0, 2.0, 3.5] {
        for frac in [0.0, 0.3, 0.7, 1.0] {
            let bmin = bmax * frac;
            for b1 in [0.0, 0.5 * bmin, bmin, bmax, bmax + 0.5, 2.0 * bmax] {
                let c =
                    gdof_corners(&GdofExponents::new(bmax, bmin, b1, 0.0, 10.0).unwrap()).unwrap();
                if b1 <= bmin {
                    coincidence_cases += 1;
                    if c.v(3) != c.v(2) || c.v(6) != c.v(7) {
                        coincidence_bad += 1;
                    }
                }
                if b1 >= bmax {
                    coincidence_cases += 1;
                    if c.v(3) != c.v(4) {
                        coincidence_bad += 1;
                    }
                }
            }
        }
    }
    let ok = errors.is_empty()
        && fd_worst <= 0.06
        && hd_worst <= 0.13
        && coincidence_bad == 0
        && grid.len() == 50;
    outcome(
        ok,
        format!(
            "{} triples at SNR 1e12: worst FD distance {fd_worst:.4} (<= 0.06), worst HD distance {hd_worst:.4} (<= 0.13); coincidences {}/{coincidence_cases}{}",
            grid.len(),
            coincidence_cases - coincidence_bad,
            errors.first().map(|e| format!("; error {e}")).unwrap_or_default()
        ),
    )
}

fn criterion_inclusions(rep: &SweepReport) -> Outcome {
    let nest_failures = rep
        .rows
        .iter()
        .filter(|r| r.failures.iter().any(|f| f.starts_with("nest_")))
        .count();
    let mut h2_bad = 0;
    let mut h2_cases = 0;
    for r in rep
        .rows
        .iter()
        .filter(|r| r.mode == DuplexMode::Fd)
        .take(1000)
    {
        let g = r.sample.gains().expect("sample gains");
        let base = (fd_inner(&g), fd_outer(&g), hd_inner(&g), hd_outer(&g));
        for k in -3..=3 {
            let scale = 10f64.powi(k);
            let h = g.with_h2_sq(g.h2_sq() * scale).expect("valid h2");
            h2_cases += 1;
            if (fd_inner(&h), fd_outer(&h), hd_inner(&h), hd_outer(&h)) != base {
                h2_bad += 1;
            }
        }
    }
    outcome(
        nest_failures == 0 && h2_bad == 0,
        format!(
            "{} rows checked for nesting, {nest_failures} failures; |h_2|^2 invariance {}/{h2_cases}",
            rep.rows.len(),
            h2_cases - h2_bad
        ),
    )
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .map(|e| {
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        std::fs::read(e.path()).unwrap_or_default(),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn criterion_determinism() -> Outcome {
    let commands: Vec<Vec<&str>> = vec![
        vec!["constants", "--out", "{}/constants.json"],
        vec![
            "region",
            "--mode",
            "both",
            "--hmax-sq",
            "100",
            "--hmin-sq",
            "4",
            "--h1-sq",
            "25",
            "--h2-sq",
            "10",
            "--out-dir",
            "{}/region",
        ],
        vec![
            "gap-sweep",
            "--count",
            "2000",
            "--seed",
            "3",
            "--rows",
            "{}/rows.csv",
            "--summary",
            "{}/summary.json",
        ],
        vec![
            "gap-sweep",
            "--sampling",
            "grid",
            "--mode",
            "hd",
            "--bmax",
            "2",
            "--bmin",
            "0.5",
            "--b1",
            "0:3",
            "--b2",
            "0:1",
            "--snr-db",
            "40",
            "--rows",
            "{}/grid.csv",
        ],
        vec![
            "lda",
            "--bmax",
            "6",
            "--bmin",
            "2",
            "--b1",
            "5",
            "--slots",
            "50",
            "--seed",
            "4",
            "--log",
            "{}/lda.csv",
        ],
        vec![
            "gdof",
            "--bmax",
            "2",
            "--bmin",
            "0.5",
            "--b1",
            "1.5",
            "--mode",
            "hd",
            "--snr-db",
            "20,60,120",
            "--out",
            "{}/gdof.csv",
        ],
        vec![
            "audit",
            "--channels",
            "200",
            "--chain-draws",
            "2000",
            "--seed",
            "2",
            "--out",
            "{}/audit.json",
        ],
    ];
    let mut mismatched = Vec::new();
    for (k, cmd) in commands.iter().enumerate() {
        let mut snapshots = Vec::new();
        for threads in ["1", "8"] {
            let dir = tempfile::tempdir().expect("temp dir");
            let root = dir.path().to_string_lossy().into_owned();
            let args: Vec<String> = cmd.iter().map(|a| a.replace("{}", &root)).collect();
            let argv: Vec<&str> = args.iter().map(String::as_str).collect();
            let out = run_bin(&argv, threads);
            snapshots.push((
                out.status.code(),
                out.stdout,
                read_dir_bytes(dir.path()),
                read_dir_bytes(&dir.path().join("region")),
            ));
        }
        if snapshots[0] != snapshots[1] || snapshots[0].0 != Some(0) {
            mismatched.push(format!("{} (#{k}, exit {:?})", cmd[0], snapshots[0].0));
        }
    }
    outcome(
        mismatched.is_empty(),
        format!(
            "{} commands compared byte-for-byte at 1 and 8 workers{}",
            commands.len(),
            if mismatched.is_empty() {
                String::new()
            } else {
                format!("; differing: {}", mismatched.join(", "))
            }
        ),
    )
}

fn main() {
    let mut all = true;
    let t = Instant::now();
    all &= report(
        1,
        "entropy-leakage constants",
        &criterion_constants(),
        t.elapsed(),
    );

    let (rep, sweep_time) = sweep_report();
    all &= report(
        2,
        "full-duplex 2-bit gap over 10^4 channels",
        &criterion_fd(&rep, sweep_time),
        sweep_time,
    );
    all &= report(
        3,
        "half-duplex 4.82-bit gap over 10^4 channels",
        &criterion_hd(&rep, sweep_time),
        sweep_time,
    );

    let t = Instant::now();
    let o = criterion_oracles();
    all &= report(4, "oracle equivalence", &o, t.elapsed());

    let t = Instant::now();
    let o = criterion_lda();
    all &= report(5, "deterministic scheme exactness", &o, t.elapsed());

    let t = Instant::now();
    let o = criterion_gdof();
    all &= report(
        6,
        "gDoF convergence and corner coincidences",
        &o,
        t.elapsed(),
    );

    let t = Instant::now();
    let o = criterion_inclusions(&rep);
    all &= report(
        7,
        "structural inclusions and |h_2|^2 invariance",
        &o,
        t.elapsed(),
    );

    let t = Instant::now();
    let o = criterion_determinism();
    all &= report(8, "determinism across worker counts", &o, t.elapsed());

    if !all {
        std::process::exit(1);
    }
}
