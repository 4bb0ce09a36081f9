//! Bistatic scattering geometry and the closed-form ellipsoid cross section.

use std::f64::consts::PI;

use super::ChannelError;
use crate::hand::Primitive;
use crate::Point3;

/// Projected vectors shorter than this (meters) make the azimuth difference
/// undefined; it is then taken as zero.
pub const ON_AXIS_EPSILON: f64 = 1e-12;

/// Incidence and scattering angles of one primitive, measured against its
/// long axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BistaticGeometry {
    /// Angle between the incident direction and the long axis, radians.
    pub theta_t: f64,
    /// Angle between the scattered direction (towards the primitive, from
    /// the receiver) and the long axis, radians.
    pub theta_r: f64,
    /// Azimuth difference `|φ_r − φ_t|` in the plane normal to the axis.
    pub delta_phi: f64,
    /// Transmitter to primitive-center distance, meters.
    pub range_t: f64,
    /// Receiver to primitive-center distance, meters.
    pub range_r: f64,
    /// Set when transmitter or receiver lies on the long axis, where the
    /// azimuth difference is defined as zero by continuity.
    pub on_axis: bool,
}

fn clamped_acos(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// Computes the bistatic angles of a primitive for the given antennas.
pub fn bistatic_geometry(
    primitive: &Primitive,
    tx: &Point3,
    rx: &Point3,
) -> Result<BistaticGeometry, ChannelError> {
    let center = primitive.center;
    let axis = primitive.axis;
    let to_center_t = center - tx;
    let to_center_r = center - rx;
    let (range_t, range_r) = (to_center_t.norm(), to_center_r.norm());
    if range_t < ON_AXIS_EPSILON {
        return Err(ChannelError::CoincidentPosition("transmitter and primitive center"));
    }
    if range_r < ON_AXIS_EPSILON {
        return Err(ChannelError::CoincidentPosition("receiver and primitive center"));
    }
    let theta_t = clamped_acos(to_center_t.dot(&axis) / range_t);
    let theta_r = clamped_acos(to_center_r.dot(&axis) / range_r);

    // Antenna positions projected onto the plane through the center normal to the axis.
    let projected_t = tx - axis * (tx - center).dot(&axis);
    let projected_r = rx - axis * (rx - center).dot(&axis);
    let a = center - projected_t;
    let b = center - projected_r;
    let (na, nb) = (a.norm(), b.norm());
    let (delta_phi, on_axis) = if na < ON_AXIS_EPSILON || nb < ON_AXIS_EPSILON {
        (0.0, true)
    } else {
        (clamped_acos(a.dot(&b) / (na * nb)), false)
    };

    Ok(BistaticGeometry {
        theta_t,
        theta_r,
        delta_phi,
        range_t,
        range_r,
        on_axis,
    })
}

/// Bistatic radar cross section (m²) of a prolate ellipsoid with long
/// semi-axis `long` and short semi-axes `short`.
///
/// The expression is symmetric in the transmit and receive angles. At the
/// forward-scatter configuration numerator and denominator both vanish;
/// the function returns 0 there.
pub fn ellipsoid_rcs(geometry: &BistaticGeometry, long: f64, short: f64) -> f64 {
    let (st, ct) = geometry.theta_t.sin_cos();
    let (sr, cr) = geometry.theta_r.sin_cos();
    let cd = geometry.delta_phi.cos();

    let lobe = (1.0 + ct * cr) * cd + st * sr;
    let short2 = short * short;
    let long2 = long * long;
    let numerator = 4.0 * PI * short2 * short2 * long2 * lobe * lobe;

    let cos_sum = ct + cr;
    let base = short2 * (st * st + sr * sr + 2.0 * st * sr * cd) + long2 * cos_sum * cos_sum;
    let denominator = base * base;
    if denominator <= f64::MIN_POSITIVE {
        return 0.0;
    }
    numerator / denominator
}
