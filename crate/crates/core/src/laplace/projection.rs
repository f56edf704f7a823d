use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Complex number as an explicit (re, im) pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexVal {
    pub re: f64,
    pub im: f64,
}

impl ComplexVal {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }

    pub fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(self.re * c, self.im * c)
    }

    pub fn recip(self) -> Self {
        // scaled to avoid overflow in |z|²
        if self.re.abs() >= self.im.abs() {
            let r = self.im / self.re;
            let d = self.re + self.im * r;
            Self::new(1.0 / d, -r / d)
        } else {
            let r = self.re / self.im;
            let d = self.re * r + self.im;
            Self::new(r / d, -1.0 / d)
        }
    }

    pub fn div(self, o: Self) -> Self {
        self.mul(o.recip())
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Point on the Riemann sphere: longitude θ ∈ (−π, π], latitude φ ∈ (−π/2, π/2).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RiemannCoord {
    pub theta: f64,
    pub phi: f64,
}

/// Clamp applied to the latitude when projecting the origin.
pub const POLE_CLAMP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub coord: RiemannCoord,
    /// Set when the input was the origin and the latitude was clamped off the pole.
    pub degenerate: bool,
}

/// Maps `s` to sphere coordinates: θ = arg s, φ = arcsin((|s|²−1)/(|s|²+1)).
///
/// The latitude is evaluated as `atan((|s| − 1/|s|)/2)`, which is the same
/// angle but keeps full relative precision of |s| for very large or small moduli.
pub fn stereographic_project(s: ComplexVal) -> Result<Projection> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("cannot project non-finite {s:?}")));
    }
    let r = s.abs();
    if r == 0.0 {
        let coord = RiemannCoord { theta: 0.0, phi: -FRAC_PI_2 + POLE_CLAMP };
        return Ok(Projection { coord, degenerate: true });
    }
    let phi = ((r - 1.0 / r) * 0.5).atan();
    Ok(Projection { coord: RiemannCoord { theta: s.im.atan2(s.re), phi }, degenerate: false })
}

/// Inverse map `s = tan(φ/2 + π/4)·e^{iθ}`.
pub fn inverse_stereographic(c: RiemannCoord) -> Result<ComplexVal> {
    if !(c.phi > -FRAC_PI_2 && c.phi < FRAC_PI_2) || !(c.theta.abs() <= PI) {
        return Err(Error::Domain(format!("coordinate {c:?} outside the open box")));
    }
    let r = (0.5 * c.phi + FRAC_PI_4).tan();
    let (sin, cos) = c.theta.sin_cos();
    Ok(ComplexVal::new(r * cos, r * sin))
}
