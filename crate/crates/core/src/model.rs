//! Channel parameterization at unit transmit power and unit noise variance.
//!
//! User 1 is always the strong user: `|h_max| >= |h_min|`. `h_1` is the
//! cooperation link from user 2 into user 1 and `h_2` the link from user 1
//! into user 2. Raw measurements in arbitrary order go through
//! [`normalize_gains`].

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CoopError, Result};

/// `log2(1 + x)`, accurate for small `x`.
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// A rate (or gDoF) pair. Serializes as `[r1, r2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub const ORIGIN: RatePair = RatePair { r1: 0.0, r2: 0.0 };

    pub const fn new(r1: f64, r2: f64) -> Self {
        RatePair { r1, r2 }
    }

    /// Checked constructor: both coordinates finite and non-negative.
    pub fn checked(r1: f64, r2: f64) -> Result<Self> {
        if !(r1.is_finite() && r2.is_finite() && r1 >= 0.0 && r2 >= 0.0) {
            return Err(CoopError::invalid(format!(
                "rate pair ({r1}, {r2}) must be finite and non-negative"
            )));
        }
        Ok(RatePair { r1, r2 })
    }

    pub fn weighted(&self, mu: f64) -> f64 {
        mu * self.r1 + (1.0 - mu) * self.r2
    }

    pub fn scaled(&self, k: f64) -> Self {
        RatePair::new(self.r1 * k, self.r2 * k)
    }

    pub fn dist(&self, other: &RatePair) -> f64 {
        (self.r1 - other.r1).hypot(self.r2 - other.r2)
    }
}

impl Serialize for RatePair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.r1, self.r2).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatePair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (r1, r2) = <(f64, f64)>::deserialize(d)?;
        Ok(RatePair { r1, r2 })
    }
}

/// One complex link gain, stored as power ratio and phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub mag_sq: f64,
    pub phase: f64,
}

impl Gain {
    pub fn new(mag_sq: f64, phase: f64) -> Result<Self> {
        if !mag_sq.is_finite() || mag_sq < 0.0 {
            return Err(CoopError::invalid(format!(
                "squared gain magnitude must be finite and >= 0, got {mag_sq}"
            )));
        }
        if !phase.is_finite() {
            return Err(CoopError::invalid("gain phase must be finite"));
        }
        Ok(Gain { mag_sq, phase })
    }

    /// Zero-phase gain. Panics on invalid magnitude; meant for literals.
    pub fn real(mag_sq: f64) -> Self {
        Gain::new(mag_sq, 0.0).expect("valid squared magnitude")
    }

    pub fn abs(&self) -> f64 {
        self.mag_sq.sqrt()
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.abs(), self.phase)
    }
}

/// The four link gains of a normalized channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelGains {
    h_max: Gain,
    h_min: Gain,
    h_1: Gain,
    h_2: Gain,
}

impl ChannelGains {
    /// Requires `|h_max|² >= |h_min|²`; use [`normalize_gains`] otherwise.
    pub fn new(h_max: Gain, h_min: Gain, h_1: Gain, h_2: Gain) -> Result<Self> {
        for g in [h_max, h_min, h_1, h_2] {
            Gain::new(g.mag_sq, g.phase)?;
        }
        if h_max.mag_sq < h_min.mag_sq {
            return Err(CoopError::invalid(format!(
                "|h_max|^2 = {} < |h_min|^2 = {}; normalize first",
                h_max.mag_sq, h_min.mag_sq
            )));
        }
        Ok(ChannelGains {
            h_max,
            h_min,
            h_1,
            h_2,
        })
    }

    /// Zero-phase channel from squared magnitudes.
    pub fn from_mag_sq(max_sq: f64, min_sq: f64, h1_sq: f64, h2_sq: f64) -> Result<Self> {
        ChannelGains::new(
            Gain::new(max_sq, 0.0)?,
            Gain::new(min_sq, 0.0)?,
            Gain::new(h1_sq, 0.0)?,
            Gain::new(h2_sq, 0.0)?,
        )
    }

    pub fn h_max(&self) -> Gain {
        self.h_max
    }
    pub fn h_min(&self) -> Gain {
        self.h_min
    }
    pub fn h_1(&self) -> Gain {
        self.h_1
    }
    pub fn h_2(&self) -> Gain {
        self.h_2
    }

    pub fn max_sq(&self) -> f64 {
        self.h_max.mag_sq
    }
    pub fn min_sq(&self) -> f64 {
        self.h_min.mag_sq
    }
    pub fn h1_sq(&self) -> f64 {
        self.h_1.mag_sq
    }
    pub fn h2_sq(&self) -> f64 {
        self.h_2.mag_sq
    }
    pub fn max_abs(&self) -> f64 {
        self.h_max.abs()
    }
    pub fn min_abs(&self) -> f64 {
        self.h_min.abs()
    }

    /// Same channel with a different weak-to-strong feedback gain `h_2`.
    pub fn with_h2_sq(&self, h2_sq: f64) -> Result<Self> {
        let mut out = *self;
        out.h_2 = Gain::new(h2_sq, self.h_2.phase)?;
        Ok(out)
    }

    /// Same magnitudes, new phases `(max, min, 1, 2)`.
    pub fn with_phases(&self, phases: [f64; 4]) -> Result<Self> {
        ChannelGains::new(
            Gain::new(self.h_max.mag_sq, phases[0])?,
            Gain::new(self.h_min.mag_sq, phases[1])?,
            Gain::new(self.h_1.mag_sq, phases[2])?,
            Gain::new(self.h_2.mag_sq, phases[3])?,
        )
    }

    /// SNR exponents of this channel at reference `snr`.
    pub fn exponents(&self, snr: f64) -> Result<GdofExponents> {
        if !(snr > 1.0 && snr.is_finite()) {
            return Err(CoopError::invalid(format!("snr must exceed 1, got {snr}")));
        }
        let beta = |g: Gain| -> Result<f64> {
            if g.mag_sq <= 0.0 {
                return Err(CoopError::invalid("zero gain has no finite SNR exponent"));
            }
            Ok(g.mag_sq.ln() / snr.ln())
        };
        let e = GdofExponents {
            beta_max: beta(self.h_max)?,
            beta_min: beta(self.h_min)?,
            beta_1: beta(self.h_1)?,
            beta_2: beta(self.h_2)?,
            snr,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn describe(&self) -> String {
        format!(
            "|h_max|^2={:.6e} |h_min|^2={:.6e} |h_1|^2={:.6e} |h_2|^2={:.6e}",
            self.max_sq(),
            self.min_sq(),
            self.h1_sq(),
            self.h2_sq()
        )
    }
}

/// SNR exponents `|h_i|² = snr^{beta_i}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdofExponents {
    pub beta_max: f64,
    pub beta_min: f64,
    pub beta_1: f64,
    pub beta_2: f64,
    /// Linear reference SNR, > 1.
    pub snr: f64,
}

impl GdofExponents {
    pub fn new(beta_max: f64, beta_min: f64, beta_1: f64, beta_2: f64, snr: f64) -> Result<Self> {
        let e = GdofExponents {
            beta_max,
            beta_min,
            beta_1,
            beta_2,
            snr,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.snr.is_finite() && self.snr > 1.0) {
            return Err(CoopError::invalid(format!(
                "snr must be finite and > 1, got {}",
                self.snr
            )));
        }
        for (name, b) in [
            ("beta_max", self.beta_max),
            ("beta_min", self.beta_min),
            ("beta_1", self.beta_1),
            ("beta_2", self.beta_2),
        ] {
            if !b.is_finite() || b < 0.0 {
                return Err(CoopError::invalid(format!(
                    "{name} must be finite and >= 0, got {b}"
                )));
            }
        }
        if self.beta_max < self.beta_min {
            return Err(CoopError::invalid(format!(
                "beta_max = {} < beta_min = {}",
                self.beta_max, self.beta_min
            )));
        }
        Ok(())
    }

    /// `log2(1 + snr)`, the gDoF rate normalization.
    pub fn rate_scale(&self) -> f64 {
        log2_1p(self.snr)
    }

    pub fn with_snr(&self, snr: f64) -> Result<Self> {
        GdofExponents::new(self.beta_max, self.beta_min, self.beta_1, self.beta_2, snr)
    }
}

/// `|h_i|² = snr^{beta_i}` with the given phases `(max, min, 1, 2)`.
pub fn gains_from_exponents(e: &GdofExponents, phases: [f64; 4]) -> Result<ChannelGains> {
    e.validate()?;
    let p = |b: f64| e.snr.powf(b);
    ChannelGains::new(
        Gain::new(p(e.beta_max), phases[0])?,
        Gain::new(p(e.beta_min), phases[1])?,
        Gain::new(p(e.beta_1), phases[2])?,
        Gain::new(p(e.beta_2), phases[3])?,
    )
}

/// Link gains in physical user labels, before ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawGains {
    pub user1_to_dest: Gain,
    pub user2_to_dest: Gain,
    /// Received at user 1, sent by user 2.
    pub user2_to_user1: Gain,
    /// Received at user 2, sent by user 1.
    pub user1_to_user2: Gain,
}

/// Relabel users so the stronger direct link belongs to user 1.
///
/// On a swap both direct gains and both cross gains trade places. Ties keep
/// the original labels.
pub fn normalize_gains(raw: &RawGains) -> Result<(ChannelGains, bool)> {
    if raw.user1_to_dest.mag_sq >= raw.user2_to_dest.mag_sq {
        let g = ChannelGains::new(
            raw.user1_to_dest,
            raw.user2_to_dest,
            raw.user2_to_user1,
            raw.user1_to_user2,
        )?;
        Ok((g, false))
    } else {
        let g = ChannelGains::new(
            raw.user2_to_dest,
            raw.user1_to_dest,
            raw.user1_to_user2,
            raw.user2_to_user1,
        )?;
        Ok((g, true))
    }
}

/// Flat channel description accepted in JSON configs and CSV rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelRecord {
    Gains {
        h_max_sq: f64,
        h_min_sq: f64,
        h_1_sq: f64,
        h_2_sq: f64,
        #[serde(default)]
        phase_max: f64,
        #[serde(default)]
        phase_min: f64,
        #[serde(default)]
        phase_1: f64,
        #[serde(default)]
        phase_2: f64,
    },
    Exponents {
        snr: f64,
        beta_max: f64,
        beta_min: f64,
        beta_1: f64,
        beta_2: f64,
    },
}

impl ChannelRecord {
    pub fn from_gains(g: &ChannelGains) -> Self {
        ChannelRecord::Gains {
            h_max_sq: g.max_sq(),
            h_min_sq: g.min_sq(),
            h_1_sq: g.h1_sq(),
            h_2_sq: g.h2_sq(),
            phase_max: g.h_max().phase,
            phase_min: g.h_min().phase,
            phase_1: g.h_1().phase,
            phase_2: g.h_2().phase,
        }
    }

    /// Resolve to normalized gains; the flag reports a user relabeling.
    pub fn to_gains(&self) -> Result<(ChannelGains, bool)> {
        match *self {
            ChannelRecord::Gains {
                h_max_sq,
                h_min_sq,
                h_1_sq,
                h_2_sq,
                phase_max,
                phase_min,
                phase_1,
                phase_2,
            } => normalize_gains(&RawGains {
                user1_to_dest: Gain::new(h_max_sq, phase_max)?,
                user2_to_dest: Gain::new(h_min_sq, phase_min)?,
                user2_to_user1: Gain::new(h_1_sq, phase_1)?,
                user1_to_user2: Gain::new(h_2_sq, phase_2)?,
            }),
            ChannelRecord::Exponents {
                snr,
                beta_max,
                beta_min,
                beta_1,
                beta_2,
            } => {
                let (bmax, bmin, b1, b2, swapped) = if beta_max >= beta_min {
                    (beta_max, beta_min, beta_1, beta_2, false)
                } else {
                    (beta_min, beta_max, beta_2, beta_1, true)
                };
                let e = GdofExponents::new(bmax, bmin, b1, b2, snr)?;
                Ok((gains_from_exponents(&e, [0.0; 4])?, swapped))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Every row of a CSV whose header names either record form.
    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<Self>> {
        // csv hands untagged enums strings only, so go through JSON numbers
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let mut out = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let mut obj = serde_json::Map::new();
            for (k, v) in headers.iter().zip(row.iter()) {
                let x: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| CoopError::invalid(format!("column {k}: not a number: {v:?}")))?;
                obj.insert(k.trim().to_string(), serde_json::json!(x));
            }
            out.push(serde_json::from_value(serde_json::Value::Object(obj))?);
        }
        Ok(out)
    }
}
