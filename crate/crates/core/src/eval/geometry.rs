//! Ratio of pseudo-anomalies landing in a thin shadow region around a
//! normal manifold versus in the rest of an enclosing ball.
//!
//! The shadow is a box with `alpha` sides of length `2r` and the remaining
//! `d − alpha` sides `w_i`; the ball has radius `r` in `d` dimensions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{EvalError, EvalResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams {
    /// Ambient dimension.
    pub d: usize,
    /// Manifold dimension, `1 ≤ alpha < d`.
    pub alpha: usize,
    pub r: f64,
    /// The `d − alpha` thin widths.
    pub w: Vec<f64>,
}

/// `Γ(1 + d/2)`, by the recurrence `Γ(x+1) = x·Γ(x)` from `Γ(1) = 1` or `Γ(1/2) = √π`.
pub fn gamma_half_integer(d: usize) -> f64 {
    let (mut x, mut g) = if d.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, PI.sqrt())
    };
    let target = 1.0 + d as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the `d`-ball of radius `r`.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    PI.powf(d as f64 / 2.0) * r.powi(d as i32) / gamma_half_integer(d)
}

/// `η = S / (V − S)` with `S = (2r)^alpha · Π w_i` and `V` the ball volume.
pub fn interpolation_ratio(p: &GeometryParams) -> EvalResult<f64> {
    let bad = |m: String| Err(EvalError::InvalidGeometry(m));
    if p.alpha == 0 || p.alpha >= p.d {
        return bad(format!("need 1 <= alpha < d, got alpha={} d={}", p.alpha, p.d));
    }
    if p.w.len() != p.d - p.alpha {
        return bad(format!("expected {} widths, got {}", p.d - p.alpha, p.w.len()));
    }
    if !(p.r > 0.0 && p.r.is_finite()) {
        return bad(format!("radius must be positive, got {}", p.r));
    }
    if let Some(w) = p.w.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return bad(format!("widths must be positive, got {w}"));
    }
    let shadow = (2.0 * p.r).powi(p.alpha as i32) * p.w.iter().product::<f64>();
    let rest = ball_volume(p.d, p.r) - shadow;
    if rest <= 0.0 {
        return bad(format!("shadow volume {shadow} reaches the ball volume"));
    }
    Ok(shadow / rest)
}
