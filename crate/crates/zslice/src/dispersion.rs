//! Dispersion relations of the two formalisms.
//!
//! The t-formalism frequency is omega = sqrt(k^2 + m^2). The z-formalism
//! wavenumber is lambda = sqrt(kt^2 - kx^2 - ky^2 - m^2), which is real in
//! region P1 (above the mass hyperboloid) and imaginary in P2. The two
//! sign-convention bullets (real lambda positive, imaginary lambda at
//! phase +pi/2) and the i-epsilon rule m^2 -> m^2 - i eps are realized
//! together as the principal square root, whose imaginary part is
//! non-negative on the closed upper half plane.

use crate::{Error, Result};
use num_complex::Complex64;

/// Absolute tolerance for detecting the P1/P2 boundary hyperboloid.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Spatial momentum (kx, ky, kz) of the t-formalism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialMomentum {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
}

impl SpatialMomentum {
    pub fn new(kx: f64, ky: f64, kz: f64) -> Result<Self> {
        if !(kx.is_finite() && ky.is_finite() && kz.is_finite()) {
            return Err(Error::Domain("non-finite momentum component".into()));
        }
        Ok(SpatialMomentum { kx, ky, kz })
    }
}

/// Momentum triple (kx, ky, kt) labeling a z-formalism mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumTriple {
    pub kx: f64,
    pub ky: f64,
    pub kt: f64,
}

impl MomentumTriple {
    pub fn new(kx: f64, ky: f64, kt: f64) -> Result<Self> {
        if !(kx.is_finite() && ky.is_finite() && kt.is_finite()) {
            return Err(Error::Domain("non-finite momentum component".into()));
        }
        Ok(MomentumTriple { kx, ky, kt })
    }

    /// Negation of all three components.
    pub fn negated(&self) -> MomentumTriple {
        MomentumTriple {
            kx: -self.kx,
            ky: -self.ky,
            kt: -self.kt,
        }
    }
}

/// Mass m > 0 together with the i-epsilon regulator eps >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassParam {
    pub m: f64,
    pub eps: f64,
}

impl MassParam {
    pub fn new(m: f64, eps: f64) -> Result<Self> {
        if !(m.is_finite() && eps.is_finite()) {
            return Err(Error::Domain("non-finite mass parameter".into()));
        }
        if m <= 0.0 {
            return Err(Error::Domain(format!("mass must be positive, got {m}")));
        }
        if eps < 0.0 {
            return Err(Error::Domain(format!("eps must be non-negative, got {eps}")));
        }
        Ok(MassParam { m, eps })
    }

    /// Mass without regulator.
    pub fn bare(m: f64) -> Result<Self> {
        MassParam::new(m, 0.0)
    }
}

/// Momentum-space region relative to the hyperboloid kt^2 = kx^2 + ky^2 + m^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// kt^2 > kx^2 + ky^2 + m^2: lambda real.
    P1,
    /// kt^2 < kx^2 + ky^2 + m^2: lambda imaginary.
    P2,
    /// On the hyperboloid within `BOUNDARY_TOL`. Algebra consumers treat
    /// this as P1, matching the inclusive inequality defining P1.
    Boundary,
}

impl Region {
    /// Boundary collapses onto P1 for algebraic rules.
    pub fn effective(&self) -> Region {
        match self {
            Region::Boundary => Region::P1,
            r => *r,
        }
    }
}

/// lambda with its region tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionValue {
    pub lambda: Complex64,
    pub region: Region,
}

/// omega(k) = sqrt(kx^2 + ky^2 + kz^2 + m^2).
pub fn omega(k: SpatialMomentum, m: MassParam) -> f64 {
    (k.kx * k.kx + k.ky * k.ky + k.kz * k.kz + m.m * m.m).sqrt()
}

fn lambda_sq_bare(kp: MomentumTriple, m: MassParam) -> f64 {
    kp.kt * kp.kt - kp.kx * kp.kx - kp.ky * kp.ky - m.m * m.m
}

/// Region classification from the sign of kt^2 - kx^2 - ky^2 - m^2.
pub fn classify_region(kp: MomentumTriple, m: MassParam) -> Region {
    let s = lambda_sq_bare(kp, m);
    if s.abs() <= BOUNDARY_TOL {
        Region::Boundary
    } else if s > 0.0 {
        Region::P1
    } else {
        Region::P2
    }
}

/// lambda = principal sqrt of (kt^2 - kx^2 - ky^2 - m^2 + i eps).
///
/// The principal branch keeps Im(lambda) >= 0: for eps = 0 a positive
/// argument yields the positive real root and a negative argument yields
/// +i sqrt(|argument|).
pub fn lambda_of(kp: MomentumTriple, m: MassParam) -> DispersionValue {
    let region = classify_region(kp, m);
    let arg = Complex64::new(lambda_sq_bare(kp, m), m.eps);
    let lambda = arg.sqrt();
    DispersionValue { lambda, region }
}
