use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Samples per step when building a step envelope.
pub const STEP_SAMPLES: usize = 64;

/// Time-dependent bounds `a(t) ≤ u ≤ b(t)` on solution values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundsEnvelope {
    Constant { a: f64, b: f64 },
    Exponential { a0: f64, b0: f64, l1: f64, n: usize },
    Perturbed { a0: f64, b0: f64, l1: f64, n: usize, eps: f64 },
    /// Step envelope of `base`: on `[kh, (k+1)h)` the min of `a` and max of `b`.
    Piecewise { base: Box<BoundsEnvelope>, step: f64 },
}

fn check_bounds(a0: f64, b0: f64) -> Result<()> {
    if !(a0 <= b0) {
        return Err(Error::InvertedBounds { lo: a0, hi: b0 });
    }
    Ok(())
}

pub fn envelope_constant(a: f64, b: f64) -> Result<BoundsEnvelope> {
    check_bounds(a, b)?;
    Ok(BoundsEnvelope::Constant { a, b })
}

pub fn envelope_exponential(a0: f64, b0: f64, l1: f64, n: usize) -> Result<BoundsEnvelope> {
    check_bounds(a0, b0)?;
    if !(l1 >= 0.0) {
        return Err(Error::InvalidArgument(format!("L1 must be non-negative, got {l1}")));
    }
    Ok(BoundsEnvelope::Exponential { a0, b0, l1, n })
}

pub fn envelope_perturbed(a0: f64, b0: f64, l1: f64, n: usize, eps: f64) -> Result<BoundsEnvelope> {
    envelope_exponential(a0, b0, l1, n)?;
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be non-negative, got {eps}")));
    }
    Ok(BoundsEnvelope::Perturbed { a0, b0, l1, n, eps })
}

pub fn envelope_piecewise(env: &BoundsEnvelope, h: f64) -> Result<BoundsEnvelope> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step width must be positive, got {h}")));
    }
    if matches!(env, BoundsEnvelope::Piecewise { .. }) {
        return Err(Error::InvalidArgument("step envelope of a step envelope".into()));
    }
    Ok(BoundsEnvelope::Piecewise { base: Box::new(env.clone()), step: h })
}

// Lower and upper exponential branches, split on the sign of the initial bound.
fn lower_exp(a0: f64, shift: f64, rate: f64, t: f64) -> f64 {
    if a0 >= 0.0 {
        (a0 - shift) * (-rate * t).exp()
    } else {
        (a0 - shift) * (rate * t).exp()
    }
}

fn upper_exp(b0: f64, shift: f64, rate: f64, t: f64) -> f64 {
    if b0 >= 0.0 {
        (b0 + shift) * (rate * t).exp()
    } else {
        (b0 + shift) * (-rate * t).exp()
    }
}

impl BoundsEnvelope {
    pub fn lower(&self, t: f64) -> f64 {
        match self {
            Self::Constant { a, .. } => *a,
            Self::Exponential { a0, l1, n, .. } => lower_exp(*a0, 0.0, *n as f64 * l1, t),
            Self::Perturbed { a0, l1, n, eps, .. } => lower_exp(*a0, *eps, *n as f64 * l1, t),
            Self::Piecewise { base, step } => step_extrema(base, *step, step_index(t, *step)).0,
        }
    }

    pub fn upper(&self, t: f64) -> f64 {
        match self {
            Self::Constant { b, .. } => *b,
            Self::Exponential { b0, l1, n, .. } => upper_exp(*b0, 0.0, *n as f64 * l1, t),
            Self::Perturbed { b0, l1, n, eps, .. } => upper_exp(*b0, *eps, *n as f64 * l1, t),
            Self::Piecewise { base, step } => step_extrema(base, *step, step_index(t, *step)).1,
        }
    }

    /// `(min a, max b)` over `[t0, t1]`. Step envelopes treat steps as half-open.
    pub fn range(&self, t0: f64, t1: f64) -> (f64, f64) {
        match self {
            Self::Piecewise { base, step } => {
                let k0 = step_index(t0, *step);
                let mut k1 = step_index(t1, *step).max(k0);
                if t1 > t0 && k1 > k0 && (k1 as f64) * step >= t1 {
                    k1 -= 1;
                }
                (k0..=k1).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
                    let (a, b) = step_extrema(base, *step, k);
                    (lo.min(a), hi.max(b))
                })
            }
            // The continuous kinds are monotone in t.
            _ => (
                self.lower(t0).min(self.lower(t1)),
                self.upper(t0).max(self.upper(t1)),
            ),
        }
    }
}

fn step_index(t: f64, h: f64) -> usize {
    (t.max(0.0) / h).floor() as usize
}

fn step_extrema(base: &BoundsEnvelope, h: f64, k: usize) -> (f64, f64) {
    let t0 = k as f64 * h;
    (0..=STEP_SAMPLES).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), j| {
        let t = t0 + h * j as f64 / STEP_SAMPLES as f64;
        (lo.min(base.lower(t)), hi.max(base.upper(t)))
    })
}
