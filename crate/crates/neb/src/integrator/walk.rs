//! Camera path random walk shared by the path tracer and pass 1.
//!
//! The walk maintains the path's segment pdfs in area measure, camera end
//! first. A segment's reverse pdf depends on the lobe at its far vertex and
//! is finalized one bounce late; chains handed out for a specific technique
//! get that last reverse replaced by the variant the technique implies
//! (light-incident for next-event connections, emission density for random
//! hits). Delta lobes store residual 1 in place of a density so that the
//! symbolic delta factors cancel between competing techniques.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::color::Rgb;
use crate::config::RenderConfig;
use crate::math::{Ray, SurfaceFrame};
use crate::mis::{LightPdf, PdfChain, SegmentPdfs};
use crate::scene::bsdf::BsdfEval;
use crate::scene::{solid_angle_to_area_pdf, Intersection, NeeSample, Scene};

/// Depth after which Russian roulette may terminate a walk.
pub(crate) const RR_START_DEPTH: usize = 4;

/// A non-delta vertex with its next-event sample: a path tracer turns this
/// into an immediate contribution, pass 1 into a stored record.
pub(crate) struct NeeSite<'a> {
    pub pixel: u32,
    pub hit: &'a Intersection,
    /// BSDF response between the view direction and the light direction.
    pub eval: BsdfEval,
    pub nee: &'a NeeSample,
    /// Segments up to this vertex; the last reverse already holds the
    /// light-incident variant.
    pub prefix: PdfChain,
    /// Connection segment to the sampled light point.
    pub final_seg: SegmentPdfs,
    pub throughput: Rgb,
    pub prev_dist: f64,
    pub prev_cos: f64,
}

/// The walk ran into an emitting surface.
pub(crate) struct EmitterHit {
    pub pixel: u32,
    /// Full chain; the last reverse holds the emission density toward the
    /// previous vertex.
    pub chain: PdfChain,
    pub light_pdf: LightPdf,
    /// Throughput times emitted radiance.
    pub contribution: Rgb,
    /// Geometric frame of the vertex before the light when that vertex is a
    /// stored-record candidate.
    pub emitter_geo: Option<SurfaceFrame>,
}

pub(crate) trait CameraPathHandler {
    fn nee_site(&mut self, site: NeeSite<'_>);
    fn emitter_hit(&mut self, hit: EmitterHit);
}

/// Sampling state of the segment currently being traced.
enum Pending {
    Camera,
    Delta,
    Smooth(f64),
}

/// Stratified per-(pixel, iteration) inputs for the dimensions that dominate
/// pixel variance: the sub-pixel offset and the first next-event estimate.
pub(crate) struct PixelSample {
    pub jitter: (f64, f64),
    /// Light pick and quad coordinates for the first vertex that runs NEE.
    pub first_nee: (f64, f64, f64),
}

/// A 5-dimensional Halton point over the iteration index, rotated per pixel.
/// Stratifying these dimensions makes the directly lit part of a pixel
/// converge at ~1/n instead of 1/sqrt(n); the remaining dimensions stay
/// plain Monte Carlo.
pub(crate) fn pixel_sample(seed: u64, iteration: u64, px: u32, py: u32) -> PixelSample {
    let rot = |value: f64, salt: u64| {
        let v = value + hash_unit(seed, px, py, salt);
        v - v.floor()
    };
    PixelSample {
        jitter: (rot(radical_inverse_2(iteration), 0), rot(radical_inverse(3, iteration), 1)),
        first_nee: (
            rot(radical_inverse(5, iteration), 2),
            rot(radical_inverse(7, iteration), 3),
            rot(radical_inverse(11, iteration), 4),
        ),
    }
}

fn radical_inverse_2(i: u64) -> f64 {
    (i.reverse_bits() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn radical_inverse(base: u64, mut i: u64) -> f64 {
    let inv_base = 1.0 / base as f64;
    let mut inv = 0.0;
    let mut scale = inv_base;
    while i > 0 {
        inv += (i % base) as f64 * scale;
        i /= base;
        scale *= inv_base;
    }
    inv
}

/// splitmix64 finalizer over the packed inputs, mapped to [0, 1).
fn hash_unit(seed: u64, px: u32, py: u32, salt: u64) -> f64 {
    let mut z = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(((px as u64) << 32) | py as u64)
        .wrapping_add(salt.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn trace_camera_path<H: CameraPathHandler>(
    scene: &Scene,
    config: &RenderConfig,
    px: u32,
    py: u32,
    sample: PixelSample,
    rng: &mut ChaCha8Rng,
    handler: &mut H,
) {
    let pixel = py * config.width + px;
    let mut ray =
        scene.camera.primary_ray(px, py, config.width, config.height, sample.jitter);
    let mut first_nee = Some(sample.first_nee);
    let max_depth = config.max_depth as usize;

    let mut throughput = Rgb::WHITE;
    let mut chain = PdfChain::new();
    let mut pending = Pending::Camera;
    // Geometry of the segment being traced / just traced.
    let mut origin_cos = 1.0;
    let mut prev_dist;
    let mut prev_cos;
    // Frame of the previous vertex, when it can anchor a photon.
    let mut prev_geo: Option<SurfaceFrame> = None;

    while chain.len() < max_depth {
        let Some(hit) = scene.intersect(&ray) else { break };
        let cos_here = hit.frame.cos_theta(ray.dir).abs();
        let (forward, delta) = match pending {
            Pending::Camera => (1.0, false),
            Pending::Delta => (1.0, true),
            Pending::Smooth(pdf) => {
                (solid_angle_to_area_pdf(pdf, hit.distance, cos_here), false)
            }
        };
        prev_dist = hit.distance;
        prev_cos = origin_cos;
        chain.push(SegmentPdfs { forward, reverse: 1.0, delta });
        let l = chain.len();

        if let Some(li) = hit.emitter {
            let radiance = scene.emitted(&hit);
            if !radiance.is_black() {
                let mut em = chain.clone();
                if l >= 2 {
                    let cos_emit = hit.frame.cos_theta(hit.wi).max(0.0);
                    em.segments_mut()[l - 1].reverse = solid_angle_to_area_pdf(
                        scene.emission_pdf_sr(li, cos_emit),
                        prev_dist,
                        prev_cos,
                    );
                }
                handler.emitter_hit(EmitterHit {
                    pixel,
                    chain: em,
                    light_pdf: scene.nee_pdf_for_hit(li),
                    contribution: throughput * radiance,
                    emitter_geo: prev_geo,
                });
            }
        }

        let bsdf = scene.material(hit.material);
        if !bsdf.is_delta() && l < max_depth {
            let nee = match first_nee.take() {
                Some(u) => scene.sample_nee_with(&hit.frame, u),
                None => scene.sample_nee(&hit.frame, rng),
            };
            if let Some(nee) = nee {
                let eval = bsdf.eval(&hit.frame, hit.wi, nee.d);
                let mut prefix = chain.clone();
                prefix.segments_mut()[l - 1].reverse =
                    solid_angle_to_area_pdf(eval.pdf_rev, prev_dist, prev_cos);
                let cos_r = hit.frame.cos_theta(nee.d).max(0.0);
                let final_seg = SegmentPdfs {
                    forward: match nee.light_pdf {
                        LightPdf::Area(_) => {
                            solid_angle_to_area_pdf(eval.pdf_fwd, nee.distance, nee.cos_at_light)
                        }
                        // Nothing BSDF-samples its way onto a point light;
                        // only the residual remains.
                        LightPdf::Delta(_) => 1.0,
                    },
                    reverse: solid_angle_to_area_pdf(nee.emit_pdf_sr, nee.distance, cos_r),
                    delta: false,
                };
                handler.nee_site(NeeSite {
                    pixel,
                    hit: &hit,
                    eval,
                    nee: &nee,
                    prefix,
                    final_seg,
                    throughput,
                    prev_dist,
                    prev_cos,
                });
            }
        }

        if l >= max_depth {
            break;
        }
        let sample = bsdf.sample(&hit.frame, hit.wi, hit.entering, rng);
        if sample.f.is_black() || sample.pdf_fwd <= 0.0 {
            break;
        }
        chain.segments_mut()[l - 1].reverse = if sample.is_delta {
            1.0
        } else {
            solid_angle_to_area_pdf(sample.pdf_rev, prev_dist, prev_cos)
        };
        let cos_o = hit.frame.cos_theta(sample.wo).abs();
        let mut weight =
            if sample.is_delta { sample.f } else { sample.f * (cos_o / sample.pdf_fwd) };
        if l >= RR_START_DEPTH {
            let survive = (throughput * weight).luminance().min(1.0);
            if !(rng.gen::<f64>() < survive) {
                break;
            }
            weight = weight * (1.0 / survive);
        }
        throughput = throughput * weight;
        pending = if sample.is_delta { Pending::Delta } else { Pending::Smooth(sample.pdf_fwd) };
        origin_cos = cos_o;
        prev_geo = if bsdf.is_delta() {
            None
        } else {
            Some(SurfaceFrame::from_normal(hit.frame.position, hit.geo_normal))
        };
        ray = Ray::new(hit.frame.position, sample.wo);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_sequences_start_right() {
        let base2: Vec<f64> = (0..8).map(radical_inverse_2).collect();
        assert_eq!(base2, [0.0, 0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875]);
        let base3: Vec<f64> = (0..6).map(|i| radical_inverse(3, i)).collect();
        let thirds = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0 / 9.0, 4.0 / 9.0, 7.0 / 9.0];
        for (a, b) in base3.iter().zip(thirds) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
        for (i, b) in [0.0, 0.2, 0.4, 0.6, 0.8].into_iter().enumerate() {
            assert!((radical_inverse(5, i as u64) - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sample_fills_every_stratum_once() {
        // A rotated radical-inverse sequence is a shifted lattice: any b^k
        // consecutive iterations cover all b^k strata of that dimension.
        for (px, py) in [(0, 0), (3, 11), (200, 7)] {
            let mut x_bins = [0; 16];
            let mut y_bins = [0; 9];
            let mut pick_bins = [0; 5];
            for i in 0..720 {
                let s = pixel_sample(77, i, px, py);
                let (x, y) = s.jitter;
                for v in [x, y, s.first_nee.0, s.first_nee.1, s.first_nee.2] {
                    assert!((0.0..1.0).contains(&v));
                }
                x_bins[(x * 16.0) as usize] += 1;
                y_bins[(y * 9.0) as usize] += 1;
                pick_bins[(s.first_nee.0 * 5.0) as usize] += 1;
            }
            assert_eq!(x_bins, [45; 16]);
            assert_eq!(y_bins, [80; 9]);
            assert_eq!(pick_bins, [144; 5]);
        }
    }

    #[test]
    fn sample_differs_between_pixels_and_seeds() {
        let at = |seed, px, py| {
            let s = pixel_sample(seed, 0, px, py);
            (s.jitter, s.first_nee)
        };
        let a = at(1, 5, 5);
        assert_ne!(a, at(1, 5, 6));
        assert_ne!(a, at(1, 6, 5));
        assert_ne!(a, at(2, 5, 5));
        assert_eq!(a, at(1, 5, 5));
    }
}
