//! Surface scattering models: evaluation, importance sampling, pdfs.
//!
//! Directions are unit vectors pointing away from the surface; `wi` faces the
//! camera side of the path, `wo` the continuation side. Shading frames are
//! oriented toward the incoming ray, so `wi` always has positive local z.
//! Delta lobes evaluate to zero for explicit direction pairs and report
//! residual pdfs of 1 when sampled; the weighting layer relies on those
//! residuals cancelling between competing techniques.

use std::f64::consts::{FRAC_1_PI, PI};

use rand::Rng;

use crate::color::Rgb;
use crate::math::{vec3, SurfaceFrame, Vector3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bsdf {
    Lambert { albedo: Rgb },
    Mirror { reflectance: Rgb },
    /// Smooth boundary between media. `ior` is the index ratio far/near when
    /// crossing the front face; a shell interior is modelled by a second
    /// boundary carrying the reciprocal ratio.
    Dielectric { ior: f64 },
    /// Phong lobe around the mirror direction with the `(e+2)/2pi` norm, so
    /// directional-hemispherical reflectance peaks at the albedo.
    GlossyPhong { albedo: Rgb, exponent: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct BsdfEval {
    pub f: Rgb,
    pub pdf_fwd: f64,
    pub pdf_rev: f64,
}

impl BsdfEval {
    pub const ZERO: BsdfEval = BsdfEval { f: Rgb::BLACK, pdf_fwd: 0.0, pdf_rev: 0.0 };
}

#[derive(Clone, Copy, Debug)]
pub struct BsdfSample {
    /// World-space continuation direction.
    pub wo: Vector3,
    /// Lobe value; for delta lobes the full reflectance or transmittance.
    /// Zero means the sample fell outside the lobe's support.
    pub f: Rgb,
    pub pdf_fwd: f64,
    pub pdf_rev: f64,
    pub is_delta: bool,
}

/// Mirror reflection in the local frame.
fn mirrored(w: Vector3) -> Vector3 {
    vec3(-w.x, -w.y, w.z)
}

/// Unpolarized Fresnel reflectance at a smooth boundary; `rel_ior` is the
/// transmitted-side index over the incident-side index. Returns 1 beyond the
/// critical angle.
pub fn fresnel_dielectric(cos_i: f64, rel_ior: f64) -> f64 {
    let sin2_t = (1.0 - cos_i * cos_i) / (rel_ior * rel_ior);
    if sin2_t >= 1.0 {
        return 1.0;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let rs = (cos_i - rel_ior * cos_t) / (cos_i + rel_ior * cos_t);
    let rp = (rel_ior * cos_i - cos_t) / (rel_ior * cos_i + cos_t);
    0.5 * (rs * rs + rp * rp)
}

impl Bsdf {
    pub fn is_delta(&self) -> bool {
        matches!(self, Bsdf::Mirror { .. } | Bsdf::Dielectric { .. })
    }

    /// Evaluate an explicit world-space direction pair. Delta lobes are zero
    /// here by convention.
    pub fn eval(&self, frame: &SurfaceFrame, wi: Vector3, wo: Vector3) -> BsdfEval {
        let wi = frame.to_local(wi);
        let wo = frame.to_local(wo);
        if wi.z <= 0.0 || wo.z <= 0.0 {
            return BsdfEval::ZERO;
        }
        match *self {
            Bsdf::Lambert { albedo } => BsdfEval {
                f: albedo * FRAC_1_PI,
                pdf_fwd: wo.z * FRAC_1_PI,
                pdf_rev: wi.z * FRAC_1_PI,
            },
            Bsdf::GlossyPhong { albedo, exponent } => {
                let lobe = mirrored(wi).dot(wo).max(0.0).powf(exponent);
                BsdfEval {
                    f: albedo * ((exponent + 2.0) / (2.0 * PI) * lobe),
                    // The lobe angle is symmetric in wi/wo, so both pdfs agree.
                    pdf_fwd: (exponent + 1.0) / (2.0 * PI) * lobe,
                    pdf_rev: (exponent + 1.0) / (2.0 * PI) * lobe,
                }
            }
            Bsdf::Mirror { .. } | Bsdf::Dielectric { .. } => BsdfEval::ZERO,
        }
    }

    /// Importance-sample a continuation for world-space `wi`. `entering`
    /// tells a dielectric which side of the boundary the ray came from.
    pub fn sample(
        &self,
        frame: &SurfaceFrame,
        wi: Vector3,
        entering: bool,
        rng: &mut impl Rng,
    ) -> BsdfSample {
        let wi = frame.to_local(wi);
        if wi.z <= 0.0 {
            return BsdfSample {
                wo: frame.normal,
                f: Rgb::BLACK,
                pdf_fwd: 1.0,
                pdf_rev: 1.0,
                is_delta: false,
            };
        }
        match *self {
            Bsdf::Lambert { albedo } => {
                let u1: f64 = rng.gen();
                let r = u1.sqrt();
                let phi = 2.0 * PI * rng.gen::<f64>();
                let wo = vec3(r * phi.cos(), r * phi.sin(), (1.0 - u1).sqrt().max(1e-9));
                BsdfSample {
                    wo: frame.to_world(wo),
                    f: albedo * FRAC_1_PI,
                    pdf_fwd: wo.z * FRAC_1_PI,
                    pdf_rev: wi.z * FRAC_1_PI,
                    is_delta: false,
                }
            }
            Bsdf::Mirror { reflectance } => BsdfSample {
                wo: frame.to_world(mirrored(wi)),
                f: reflectance,
                pdf_fwd: 1.0,
                pdf_rev: 1.0,
                is_delta: true,
            },
            Bsdf::Dielectric { ior } => {
                let rel = if entering { ior } else { 1.0 / ior };
                let cos_i = wi.z;
                let reflect = fresnel_dielectric(cos_i, rel);
                // Branch selection probability cancels against the Fresnel
                // factor, which is reciprocal, so the weight stays 1.
                let wo = if rng.gen::<f64>() < reflect {
                    mirrored(wi)
                } else {
                    let eta = 1.0 / rel;
                    let cos_t = (1.0 - eta * eta * (1.0 - cos_i * cos_i)).sqrt();
                    vec3(-wi.x * eta, -wi.y * eta, -cos_t)
                };
                BsdfSample {
                    wo: frame.to_world(wo),
                    f: Rgb::WHITE,
                    pdf_fwd: 1.0,
                    pdf_rev: 1.0,
                    is_delta: true,
                }
            }
            Bsdf::GlossyPhong { albedo, exponent } => {
                let cos_a = rng.gen::<f64>().powf(1.0 / (exponent + 1.0));
                let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
                let phi = 2.0 * PI * rng.gen::<f64>();
                let lobe_frame = SurfaceFrame::from_normal(Vector3::ZERO, mirrored(wi));
                let wo =
                    lobe_frame.to_world(vec3(sin_a * phi.cos(), sin_a * phi.sin(), cos_a));
                let lobe = cos_a.powf(exponent);
                let pdf = (exponent + 1.0) / (2.0 * PI) * lobe;
                let f = if wo.z > 0.0 {
                    albedo * ((exponent + 2.0) / (2.0 * PI) * lobe)
                } else {
                    Rgb::BLACK // below the horizon; caller drops the path
                };
                BsdfSample {
                    wo: frame.to_world(wo),
                    f,
                    pdf_fwd: pdf,
                    pdf_rev: pdf,
                    is_delta: false,
                }
            }
        }
    }
}
