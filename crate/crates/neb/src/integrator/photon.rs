//! Photon random walks and photon/vertex merging.
//!
//! Photons are transient: each vertex is offered to a visitor which merges
//! it against nearby stored view vertices, then the walk moves on. A merged
//! path is assembled from the view record's segment prefix, a junction
//! segment evaluated from the record's BSDF against the photon's arrival
//! geometry, the photon's own trail (whose segments enter the full path in
//! reverse orientation), and — for backtracked photons — the generating
//! record's connection segment to the light.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::color::Rgb;
use crate::math::{uniform_kernel, Ray, SurfaceFrame, Vector3};
use crate::mis::{
    mis_weights_incremental, LightPdf, MergeContext, SamplerCounts, SegmentPdfs,
};
use crate::scene::{solid_angle_to_area_pdf, Scene};

use super::records::NeeVertexRecord;
use super::walk::RR_START_DEPTH;

/// Static data of one photon path entering every merged chain.
#[derive(Clone, Debug)]
pub(crate) struct PhotonHead {
    /// Light-point density the photon's transport started with.
    pub light_pdf: LightPdf,
    /// Stored-vertex density at the virtual emitter, for the competing
    /// backtracked sampler. Light photons fill this per merge instead.
    pub rho_emitter: f64,
    /// Connection segment from the virtual emitter to the light, with the
    /// forward pdf re-expressed for incidence along the first photon
    /// segment. Absent for photons traced from a light directly.
    pub emitter_seg: Option<SegmentPdfs>,
}

/// One photon segment in full-path orientation: `fwd` is the density of
/// sampling it against the photon's travel direction, `rev` along it. `fwd`
/// and `delta` of the newest segment stay pending until the next bounce
/// fixes the lobe at its origin; a merge substitutes the record's own values
/// there.
#[derive(Clone, Copy, Debug)]
pub(crate) struct TrailSeg {
    pub fwd: f64,
    pub rev: f64,
    pub delta: bool,
}

/// Everything a merge needs about the photon at its current vertex.
pub(crate) struct PhotonVertex<'a> {
    pub head: &'a PhotonHead,
    pub trail: &'a [TrailSeg],
    pub position: Vector3,
    /// Geometric frame at the vertex, for density queries.
    pub geo: SurfaceFrame,
    /// Travel direction the photon arrived along.
    pub travel_dir: Vector3,
    /// Incident flux at this vertex.
    pub flux: Rgb,
    /// |cos| at the previous vertex and length of the arrival segment, for
    /// converting the junction pdf to area measure. `None` when the photon
    /// left a point light one segment ago: the position density toward a
    /// point is a residual.
    pub junction_conv: Option<(f64, f64)>,
}

pub(crate) struct PhotonLaunch {
    pub origin: Vector3,
    pub dir: Vector3,
    /// Directional density the first segment was sampled with.
    pub pdf_dir_sr: f64,
    /// |cos| at the origin, 1 for point lights.
    pub origin_cos: f64,
    pub from_point_light: bool,
    /// Flux carried into the first vertex.
    pub flux: Rgb,
    pub max_segments: usize,
}

/// Traces a photon, calling `visit` at every surface vertex before the next
/// bounce is sampled.
pub(crate) fn walk_photon(
    scene: &Scene,
    head: &PhotonHead,
    launch: PhotonLaunch,
    rng: &mut ChaCha8Rng,
    mut visit: impl FnMut(&PhotonVertex<'_>),
) {
    let mut trail: SmallVec<[TrailSeg; 12]> = SmallVec::new();
    let mut ray = Ray::new(launch.origin, launch.dir);
    let mut flux = launch.flux;
    let mut rr_throughput = Rgb::WHITE;
    let mut pdf_pending = launch.pdf_dir_sr;
    let mut pending_delta = false;
    // |cos| at the origin of the in-flight segment; None for a point light.
    let mut origin_cos = if launch.from_point_light { None } else { Some(launch.origin_cos) };

    while trail.len() < launch.max_segments {
        let Some(hit) = scene.intersect(&ray) else { break };
        let cos_here = hit.frame.cos_theta(ray.dir).abs();
        let rev = if pending_delta {
            1.0
        } else {
            solid_angle_to_area_pdf(pdf_pending, hit.distance, cos_here)
        };
        trail.push(TrailSeg { fwd: f64::NAN, rev, delta: false });
        visit(&PhotonVertex {
            head,
            trail: &trail,
            position: hit.frame.position,
            geo: SurfaceFrame::from_normal(hit.frame.position, hit.geo_normal),
            travel_dir: ray.dir,
            flux,
            junction_conv: origin_cos.map(|c| (c, hit.distance)),
        });

        let bsdf = scene.material(hit.material);
        let sample = bsdf.sample(&hit.frame, hit.wi, hit.entering, rng);
        if sample.f.is_black() || sample.pdf_fwd <= 0.0 {
            break;
        }
        {
            // The bounce pins down the lobe at this vertex, completing the
            // arrival segment.
            let last = trail.last_mut().expect("segment just pushed");
            last.delta = sample.is_delta;
            last.fwd = if sample.is_delta {
                1.0
            } else {
                match origin_cos {
                    Some(c) => solid_angle_to_area_pdf(sample.pdf_rev, hit.distance, c),
                    None => 1.0,
                }
            };
        }
        let cos_o = hit.frame.cos_theta(sample.wo).abs();
        let mut weight =
            if sample.is_delta { sample.f } else { sample.f * (cos_o / sample.pdf_fwd) };
        if trail.len() >= RR_START_DEPTH {
            let survive = (rr_throughput * weight).luminance().min(1.0);
            if !(rng.gen::<f64>() < survive) {
                break;
            }
            weight = weight * (1.0 / survive);
        }
        flux = flux * weight;
        rr_throughput = rr_throughput * weight;
        pdf_pending = sample.pdf_fwd;
        pending_delta = sample.is_delta;
        origin_cos = Some(cos_o);
        ray = Ray::new(hit.frame.position, sample.wo);
    }
}

/// Merge a photon vertex with a stored view vertex: splice the two path
/// halves, weight the combined chain against every competing technique, and
/// return the splat. `None` when the combination is too deep or carries
/// nothing.
pub(crate) fn merge_with_record(
    scene: &Scene,
    rec: &NeeVertexRecord,
    photon: &PhotonVertex<'_>,
    rho_emitter: f64,
    radius: f64,
    counts: &SamplerCounts,
    max_depth: usize,
) -> Option<(u32, Rgb)> {
    let j = rec.k();
    let m = photon.trail.len();
    let backtracked = photon.head.emitter_seg.is_some();
    let l = j + m + backtracked as usize;
    if l > max_depth {
        return None;
    }
    let bsdf = scene.material(rec.material);
    let d_in = -photon.travel_dir;
    let eval = bsdf.eval(&rec.shading, d_in, rec.wi_prev);
    if eval.f.is_black() {
        return None;
    }

    let mut chain = rec.prefix.clone();
    chain.segments_mut()[j - 1].reverse =
        solid_angle_to_area_pdf(eval.pdf_fwd, rec.prev_dist, rec.prev_cos);
    let junction_fwd = match photon.junction_conv {
        Some((cos0, dist)) => solid_angle_to_area_pdf(eval.pdf_rev, dist, cos0),
        None => 1.0,
    };
    chain.push(SegmentPdfs {
        forward: junction_fwd,
        reverse: photon.trail[m - 1].rev,
        delta: false,
    });
    for seg in photon.trail[..m - 1].iter().rev() {
        chain.push(SegmentPdfs { forward: seg.fwd, reverse: seg.rev, delta: seg.delta });
    }
    if let Some(emitter_seg) = photon.head.emitter_seg {
        chain.push(emitter_seg);
    }
    debug_assert_eq!(chain.len(), l);

    let merge = MergeContext {
        radius,
        rho_emitter,
        light_pdf: photon.head.light_pdf,
        n_photons: counts.n_photon,
    };
    let weights = mis_weights_incremental(&chain, &merge, counts);
    let w = if backtracked { weights.neb[j - 1] } else { weights.light_photon[j - 1] };
    if w == 0.0 {
        return None;
    }
    let contribution = rec.throughput * eval.f * photon.flux * (uniform_kernel(radius) * w);
    Some((rec.pixel, contribution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;
    use crate::mis::PdfChain;
    use crate::scene::{Bsdf, Geometry, Pinhole, Shape};
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn two_plane_scene() -> Scene {
        let camera = Pinhole {
            position: vec3(0.0, 2.0, 10.0),
            look_at: Vector3::ZERO,
            up: vec3(0.0, 1.0, 0.0),
            vfov_degrees: 40.0,
            width: 8,
            height: 8,
        };
        let materials = vec![Bsdf::Lambert { albedo: Rgb::splat(0.6) }];
        let mut shapes = Vec::new();
        let mut quad = |corner: Vector3, e1: Vector3, e2: Vector3| {
            let (a, b, c, d) = (corner, corner + e1, corner + e1 + e2, corner + e2);
            for p in [[a, b, c], [a, c, d]] {
                shapes.push(Shape {
                    geometry: Geometry::Triangle { p, normals: None },
                    material: 0,
                    emitter: None,
                });
            }
        };
        quad(vec3(-20.0, 0.0, -20.0), vec3(0.0, 0.0, 40.0), vec3(40.0, 0.0, 0.0));
        quad(vec3(-20.0, 4.0, -20.0), vec3(40.0, 0.0, 0.0), vec3(0.0, 0.0, 40.0));
        Scene::new(camera, materials, shapes, vec![]).unwrap()
    }

    struct Snapshot {
        trail: Vec<TrailSeg>,
        position: Vector3,
        travel_dir: Vector3,
        flux: Rgb,
        junction_conv: Option<(f64, f64)>,
    }

    fn capture_walk(scene: &Scene, head: &PhotonHead, launch: PhotonLaunch) -> Vec<Snapshot> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut visits = Vec::new();
        walk_photon(scene, head, launch, &mut rng, |p| {
            visits.push(Snapshot {
                trail: p.trail.to_vec(),
                position: p.position,
                travel_dir: p.travel_dir,
                flux: p.flux,
                junction_conv: p.junction_conv,
            });
        });
        visits
    }

    fn lp_head() -> PhotonHead {
        PhotonHead {
            light_pdf: LightPdf::Area(2.0),
            rho_emitter: 0.0,
            emitter_seg: None,
        }
    }

    #[test]
    fn walk_pdf_bookkeeping_on_two_bounces() {
        let scene = two_plane_scene();
        let launch = PhotonLaunch {
            origin: vec3(0.3, 2.0, 0.4),
            dir: vec3(0.0, -1.0, 0.0),
            pdf_dir_sr: 0.7,
            origin_cos: 0.9,
            from_point_light: false,
            flux: Rgb::WHITE,
            max_segments: 2,
        };
        let visits = capture_walk(&scene, &lp_head(), launch);
        assert_eq!(visits.len(), 2);

        let v1 = &visits[0];
        assert!((v1.position - vec3(0.3, 0.0, 0.4)).length() < 1e-9);
        assert_eq!(v1.travel_dir, vec3(0.0, -1.0, 0.0));
        assert_eq!(v1.flux, Rgb::WHITE);
        // Travel-direction density: launch pdf converted at distance 2.
        assert!((v1.trail[0].rev - 0.7 / 4.0).abs() < 1e-12);
        let (c, d) = v1.junction_conv.unwrap();
        assert!((c - 0.9).abs() < 1e-12 && (d - 2.0).abs() < 1e-9);

        let v2 = &visits[1];
        let up = v2.travel_dir.y;
        assert!(up > 0.25, "grazing bounce, pick another seed");
        // First segment's forward got pinned by the floor bounce: the pdf of
        // re-sampling the arrival direction (1/pi for a vertical one),
        // converted with the arrival distance and the launch-side cosine.
        assert!((v2.trail[0].fwd - (1.0 / PI) * 0.9 / 4.0).abs() < 1e-12);
        assert!(!v2.trail[0].delta);
        // Second segment travel density: cosine pdf of the sampled bounce
        // converted at the ceiling.
        let dist = v2.position.distance(visits[0].position);
        assert!((dist - 4.0 / up).abs() < 1e-6);
        let want = solid_angle_to_area_pdf(up / PI, dist, up);
        assert!((v2.trail[1].rev - want).abs() < 1e-9 * want);
        let (c2, d2) = v2.junction_conv.unwrap();
        assert!((c2 - up).abs() < 1e-12 && (d2 - dist).abs() < 1e-9);
        // Lambert cosine sampling cancels to a plain albedo factor.
        assert!((v2.flux.g - 0.6).abs() < 1e-12);
    }

    #[test]
    fn point_light_first_segment_has_no_junction_conversion() {
        let scene = two_plane_scene();
        let launch = PhotonLaunch {
            origin: vec3(0.0, 2.0, 0.0),
            dir: vec3(0.0, -1.0, 0.0),
            pdf_dir_sr: 0.25 / PI,
            origin_cos: 1.0,
            from_point_light: true,
            flux: Rgb::splat(3.0),
            max_segments: 2,
        };
        let visits = capture_walk(&scene, &lp_head(), launch);
        assert!(visits[0].junction_conv.is_none());
        // After the first bounce the origin is a surface again.
        if let Some(v2) = visits.get(1) {
            assert!(v2.junction_conv.is_some());
            // The position density of a point cannot be expressed per area:
            // the finalized first forward must stay a residual.
            assert_eq!(v2.trail[0].fwd, 1.0);
        }
    }

    /// Record sitting on material 0 of [`two_plane_scene`].
    fn test_record() -> NeeVertexRecord {
        NeeVertexRecord {
            pixel: 7,
            shading: SurfaceFrame::from_normal(Vector3::ZERO, vec3(0.0, 1.0, 0.0)),
            geo_normal: vec3(0.0, 1.0, 0.0),
            material: 0,
            wi_prev: vec3(0.0, 1.0, 0.0),
            throughput: Rgb::WHITE,
            prefix: PdfChain::from_segments(&[SegmentPdfs::smooth(1.0, 1.0)]),
            prev_dist: 1.0,
            prev_cos: 1.0,
            d: vec3(0.0, 1.0, 0.0),
            nee_dist: 2.0,
            irradiance: Rgb::splat(1.0),
            occluded: false,
            light_pdf: LightPdf::Area(2.0),
            final_seg: SegmentPdfs::smooth(0.5, 0.25),
            f_nee: Rgb::splat(0.6 / PI),
            cos_at_light: 1.0,
            density: 3.0,
        }
    }

    #[test]
    fn merge_respects_the_depth_bound() {
        let scene = two_plane_scene();
        let rec = test_record();
        let head = PhotonHead {
            light_pdf: LightPdf::Area(2.0),
            rho_emitter: 5.0,
            emitter_seg: Some(SegmentPdfs::smooth(0.4, 0.3)),
        };
        let trail = [TrailSeg { fwd: f64::NAN, rev: 0.2, delta: false }];
        let photon = PhotonVertex {
            head: &head,
            trail: &trail,
            position: vec3(0.01, 0.0, 0.0),
            geo: SurfaceFrame::from_normal(vec3(0.01, 0.0, 0.0), vec3(0.0, 1.0, 0.0)),
            travel_dir: vec3(0.0, -1.0, 0.0),
            flux: Rgb::splat(2.0),
            junction_conv: Some((0.8, 1.5)),
        };
        let counts = SamplerCounts { n_nee: 1.0, n_photon: 64.0, n_light_photon: 0.0 };
        // One camera segment + junction + emitter segment: three total.
        assert!(merge_with_record(&scene, &rec, &photon, 5.0, 0.1, &counts, 2).is_none());
        let (pixel, value) =
            merge_with_record(&scene, &rec, &photon, 5.0, 0.1, &counts, 3).expect("in range");
        assert_eq!(pixel, 7);
        assert!(value.is_finite());
        assert!(value.r >= 0.0 && value.g > 0.0);
    }

    #[test]
    fn light_photon_merge_without_emitter_segment() {
        let scene = two_plane_scene();
        let rec = test_record();
        let head = PhotonHead {
            light_pdf: LightPdf::Area(2.0),
            rho_emitter: 0.0,
            emitter_seg: None,
        };
        let trail = [
            TrailSeg { fwd: 0.3, rev: 0.2, delta: false },
            TrailSeg { fwd: f64::NAN, rev: 0.15, delta: false },
        ];
        let photon = PhotonVertex {
            head: &head,
            trail: &trail,
            position: vec3(0.0, 0.0, 0.01),
            geo: SurfaceFrame::from_normal(vec3(0.0, 0.0, 0.01), vec3(0.0, 1.0, 0.0)),
            travel_dir: vec3(0.0, -1.0, 0.0),
            flux: Rgb::splat(0.5),
            junction_conv: Some((0.6, 2.5)),
        };
        let counts = SamplerCounts { n_nee: 1.0, n_photon: 64.0, n_light_photon: 32.0 };
        // One camera segment + junction + one trail segment.
        assert!(merge_with_record(&scene, &rec, &photon, 4.0, 0.1, &counts, 2).is_none());
        let (pixel, value) =
            merge_with_record(&scene, &rec, &photon, 4.0, 0.1, &counts, 3).expect("in range");
        assert_eq!(pixel, 7);
        assert!(value.is_finite() && value.g > 0.0);
    }
}
