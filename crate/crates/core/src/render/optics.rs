//! Snell refraction and Fresnel transmittance at a single interface.

use nalgebra::Vector3;

use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-6;

/// Outcome of refracting a ray at an interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Refraction {
    Transmitted(Vector3<f64>),
    TotalInternalReflection,
}

impl Refraction {
    pub fn direction(self) -> Option<Vector3<f64>> {
        match self {
            Refraction::Transmitted(d) => Some(d),
            Refraction::TotalInternalReflection => None,
        }
    }
}

fn check_inputs(incident: &Vector3<f64>, normal: &Vector3<f64>, n1: f64, n2: f64) -> Result<()> {
    for (name, v) in [("incident", incident), ("normal", normal)] {
        let len = v.norm();
        if !len.is_finite() || (len - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::invalid(format!(
                "{name} direction must be unit length, got |v| = {len}"
            )));
        }
    }
    if !(n1 > 0.0 && n2 > 0.0) || !n1.is_finite() || !n2.is_finite() {
        return Err(Error::invalid(format!(
            "refractive indices must be positive, got {n1} and {n2}"
        )));
    }
    Ok(())
}

/// Returns the normal flipped to face against `incident` and `cos(theta_i)`.
#[inline]
fn facing(incident: &Vector3<f64>, normal: &Vector3<f64>) -> (Vector3<f64>, f64) {
    let cos_i = -incident.dot(normal);
    if cos_i < 0.0 {
        (-normal, -cos_i)
    } else {
        (*normal, cos_i)
    }
}

/// `sin^2(theta_t)` from Snell's law; above 1 means total internal reflection.
#[inline]
fn sin2_transmitted(cos_i: f64, eta: f64) -> f64 {
    eta * eta * (1.0 - cos_i * cos_i).max(0.0)
}

/// Snell refraction of `incident` crossing from index `n1` into `n2`.
///
/// The normal may face either side of the surface.
pub fn refract_direction(
    incident: &Vector3<f64>,
    normal: &Vector3<f64>,
    n1: f64,
    n2: f64,
) -> Result<Refraction> {
    check_inputs(incident, normal, n1, n2)?;
    Ok(refract_unchecked(incident, normal, n1, n2))
}

#[inline]
pub(crate) fn refract_unchecked(
    incident: &Vector3<f64>,
    normal: &Vector3<f64>,
    n1: f64,
    n2: f64,
) -> Refraction {
    let (n, cos_i) = facing(incident, normal);
    let eta = n1 / n2;
    let sin2_t = sin2_transmitted(cos_i, eta);
    if sin2_t > 1.0 {
        return Refraction::TotalInternalReflection;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let t = eta * incident + (eta * cos_i - cos_t) * n;
    Refraction::Transmitted(t.normalize())
}

/// Unpolarized Fresnel transmittance (mean of the s and p terms).
/// Zero under total internal reflection.
pub fn fresnel_transmittance(
    incident: &Vector3<f64>,
    normal: &Vector3<f64>,
    n1: f64,
    n2: f64,
) -> Result<f64> {
    check_inputs(incident, normal, n1, n2)?;
    Ok(fresnel_unchecked(incident, normal, n1, n2))
}

#[inline]
pub(crate) fn fresnel_unchecked(
    incident: &Vector3<f64>,
    normal: &Vector3<f64>,
    n1: f64,
    n2: f64,
) -> f64 {
    let (_, cos_i) = facing(incident, normal);
    let cos_i = cos_i.min(1.0);
    let sin2_t = sin2_transmitted(cos_i, n1 / n2);
    if sin2_t > 1.0 {
        return 0.0;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let rs = ((n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t)).powi(2);
    let rp = ((n1 * cos_t - n2 * cos_i) / (n1 * cos_t + n2 * cos_i)).powi(2);
    if !rs.is_finite() || !rp.is_finite() {
        // grazing incidence with cos_i = cos_t = 0
        return 0.0;
    }
    (1.0 - 0.5 * (rs + rp)).clamp(0.0, 1.0)
}
