//! Delay-free relaying over the deterministic channel.
//!
//! In slot `t` user 2 puts fresh `b1[t]` on its top `β_min` levels and
//! `b2[t+1]` on the next `β_1 − β_min` levels, which the destination cannot
//! see. User 1 decodes both from `y1`, and sends fresh `a[t]` on its top
//! `β_max − β_1` levels followed by the `b2[t]` it decoded one slot earlier.
//! The destination reads all three streams from `y3` in the same slot.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CoopError, Result};
use crate::model::RatePair;

use super::{lda_transmit, mask, LdaChannel, LevelVector};

fn shl(x: u64, k: u32) -> u64 {
    if k >= 64 {
        0
    } else {
        x << k
    }
}

fn shr(x: u64, k: u32) -> u64 {
    if k >= 64 {
        0
    } else {
        x >> k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdaSlotRecord {
    pub slot: usize,
    pub a: u64,
    pub b1: u64,
    /// `b2[t]` delivered this slot; `None` while the pipeline fills.
    pub b2: Option<u64>,
    pub y1: LevelVector,
    pub y3: LevelVector,
    pub a_hat: u64,
    pub b1_hat: u64,
    pub b2_hat: Option<u64>,
    /// User 1 recovered `b1[t]` and `b2[t+1]` from `y1`.
    pub relay_ok: bool,
}

impl LdaSlotRecord {
    pub fn a_ok(&self) -> bool {
        self.a == self.a_hat
    }
    pub fn b1_ok(&self) -> bool {
        self.b1 == self.b1_hat
    }
    pub fn b2_ok(&self) -> bool {
        self.b2 == self.b2_hat
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdaBlockLog {
    pub channel: LdaChannel,
    pub widths: [u32; 3],
    pub slots: Vec<LdaSlotRecord>,
}

fn hex(x: u64, width: u32) -> String {
    if width == 0 {
        return String::new();
    }
    format!("{:0w$x}", x, w = width.div_ceil(4) as usize)
}

impl LdaBlockLog {
    /// Per-slot CSV: payloads in hex, received vectors in binary, decode flags.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let [wa, wb1, wb2] = self.widths;
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "slot",
            "a_bits_hex",
            "b1_bits_hex",
            "b2_bits_hex",
            "y1_bits",
            "y3_bits",
            "a_ok",
            "b1_ok",
            "b2_ok",
            "relay_ok",
        ])?;
        for r in &self.slots {
            out.write_record([
                r.slot.to_string(),
                hex(r.a, wa),
                hex(r.b1, wb1),
                r.b2.map(|b| hex(b, wb2)).unwrap_or_default(),
                r.y1.to_string(),
                r.y3.to_string(),
                r.a_ok().to_string(),
                r.b1_ok().to_string(),
                r.b2_ok().to_string(),
                r.relay_ok.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LdaRun {
    /// Decoded bits per slot over slots `2..=T`.
    pub steady_state: RatePair,
    /// Decoded bits per slot over all `T` slots, pipeline fill included.
    pub average: RatePair,
    pub errors: usize,
    pub log: LdaBlockLog,
}

/// Runs the scheme for `num_slots` slots with payloads drawn from `seed`.
pub fn lda_scheme_run(ch: &LdaChannel, num_slots: usize, seed: u64) -> Result<LdaRun> {
    let (bmax, bmin, b1w) = (ch.beta_max, ch.beta_min, ch.beta_1);
    if !(bmin < b1w && b1w <= bmax) {
        return Err(CoopError::Precondition(format!(
            "scheme needs beta_min < beta_1 <= beta_max, got ({bmax}, {bmin}, {b1w})"
        )));
    }
    if num_slots < 2 {
        return Err(CoopError::Precondition(format!(
            "scheme needs at least 2 slots, got {num_slots}"
        )));
    }
    let n = ch.n;
    let (wa, wb1, wb2) = (bmax - b1w, bmin, b1w - bmin);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut slots = Vec::with_capacity(num_slots);
    // b2 scheduled for this slot as sent by user 2, and as decoded by user 1
    let mut b2_sent: Option<u64> = None;
    let mut b2_relay: Option<u64> = None;
    let mut delivered = [[0u64; 2]; 2];

    for t in 1..=num_slots {
        let a = rng.random::<u64>() & mask(wa);
        let b1 = rng.random::<u64>() & mask(wb1);
        let b2_next = rng.random::<u64>() & mask(wb2);

        let x2 = LevelVector::new(shl(b1, n - bmin) | shl(b2_next, n - b1w), n)?;
        let x1 = LevelVector::new(shl(a, b1w) | shl(b2_relay.unwrap_or(0), bmin), n)?;
        let (y1, y3) = lda_transmit(ch, &x1, &x2)?;

        let b1_at_relay = shr(y1.bits, wb2) & mask(wb1);
        let b2_at_relay = y1.bits & mask(wb2);
        let relay_ok = b1_at_relay == b1 && b2_at_relay == b2_next;

        let a_hat = shr(y3.bits, b1w) & mask(wa);
        let b2_hat = b2_sent.map(|_| shr(y3.bits, bmin) & mask(wb2));
        let b1_hat = y3.bits & mask(wb1);

        let rec = LdaSlotRecord {
            slot: t,
            a,
            b1,
            b2: b2_sent,
            y1,
            y3,
            a_hat,
            b1_hat,
            b2_hat,
            relay_ok,
        };
        for (ok, stream) in [
            (relay_ok, "relay"),
            (rec.a_ok(), "a"),
            (rec.b1_ok(), "b1"),
            (rec.b2_ok(), "b2"),
        ] {
            if !ok {
                return Err(CoopError::DecodeMismatch { slot: t, stream });
            }
        }

        let r2_bits = u64::from(wb1) + if rec.b2.is_some() { u64::from(wb2) } else { 0 };
        delivered[0][0] += u64::from(wa);
        delivered[0][1] += r2_bits;
        if t >= 2 {
            delivered[1][0] += u64::from(wa);
            delivered[1][1] += r2_bits;
        }
        slots.push(rec);

        b2_sent = Some(b2_next);
        b2_relay = Some(b2_at_relay);
    }

    let all = num_slots as f64;
    let steady = (num_slots - 1) as f64;
    Ok(LdaRun {
        steady_state: RatePair::new(
            delivered[1][0] as f64 / steady,
            delivered[1][1] as f64 / steady,
        ),
        average: RatePair::new(delivered[0][0] as f64 / all, delivered[0][1] as f64 / all),
        errors: 0,
        log: LdaBlockLog {
            channel: *ch,
            widths: [wa, wb1, wb2],
            slots,
        },
    })
}
