//! Three pass renderer that reuses next event connections as photon seeds.
//!
//! Pass 1 traces one camera path per pixel and stores a record at every
//! smooth vertex: the vertex geometry, its next event sample, and the pdf
//! bookkeeping of the camera prefix. Every stored position also counts into
//! the density octree, and BSDF paths that reach a light are parked as
//! emission events instead of being splatted. Pass 2 looks the stored
//! density up for every record, splats the record's own next event
//! estimate, and re-emits the received light as a photon whose first bounce
//! leaves the record's BSDF; each photon vertex merges against nearby
//! records. Light-traced photons, when enabled, join the same merge loop.
//! Pass 3 resolves the parked emission events once densities exist. The
//! octree counters persist across iterations, so densities sharpen as the
//! render runs.

use rayon::prelude::*;

use crate::color::Rgb;
use crate::config::RenderConfig;
use crate::film::FrameBuffer;
use crate::mis::{mis_weights_incremental, MergeContext, SamplerCounts, SegmentPdfs};
use crate::octree::DensityOctree;
use crate::scene::{solid_angle_to_area_pdf, Scene};

use super::photon::{merge_with_record, walk_photon, PhotonHead, PhotonLaunch};
use super::records::{EmissionEvent, NeeVertexRecord, VertexHashGrid, VertexStore};
use super::walk::{pixel_sample, trace_camera_path, CameraPathHandler, EmitterHit, NeeSite};
use super::{
    rng_stream, run_iterations, RenderError, RenderStats, PHASE_CAMERA, PHASE_LIGHT_PHOTON,
    PHASE_RECORD,
};

struct Pass1Collector<'a> {
    octree: &'a DensityOctree,
    count_occluded: bool,
    records: Vec<NeeVertexRecord>,
    events: Vec<EmissionEvent>,
}

impl CameraPathHandler for Pass1Collector<'_> {
    fn nee_site(&mut self, site: NeeSite<'_>) {
        if site.nee.occluded && !self.count_occluded {
            return;
        }
        self.octree.increment(site.hit.frame.position);
        self.records.push(NeeVertexRecord {
            pixel: site.pixel,
            shading: site.hit.frame,
            geo_normal: site.hit.geo_normal,
            material: site.hit.material,
            wi_prev: site.hit.wi,
            throughput: site.throughput,
            prefix: site.prefix,
            prev_dist: site.prev_dist,
            prev_cos: site.prev_cos,
            d: site.nee.d,
            nee_dist: site.nee.distance,
            irradiance: site.nee.irradiance,
            occluded: site.nee.occluded,
            light_pdf: site.nee.light_pdf,
            final_seg: site.final_seg,
            f_nee: site.eval.f,
            cos_at_light: site.nee.cos_at_light,
            density: 0.0,
        });
    }

    fn emitter_hit(&mut self, hit: EmitterHit) {
        self.events.push(EmissionEvent {
            pixel: hit.pixel,
            contribution: hit.contribution,
            chain: hit.chain,
            light_pdf: hit.light_pdf,
            emitter_geo: hit.emitter_geo,
        });
    }
}

pub(crate) struct Pass1Output {
    pub store: VertexStore,
    pub events: Vec<EmissionEvent>,
}

/// Traces the camera paths of one iteration. The records land in a store
/// ordered by pixel regardless of thread count; overflow aborts the
/// iteration with the total demand so the caller can report a usable size.
pub(crate) fn neb_pass1(
    scene: &Scene,
    config: &RenderConfig,
    octree: &DensityOctree,
    iteration: u64,
    capacity: usize,
) -> Result<Pass1Output, RenderError> {
    let npix = config.width as usize * config.height as usize;
    let mut per_pixel: Vec<(Vec<NeeVertexRecord>, Vec<EmissionEvent>)> = (0..npix)
        .into_par_iter()
        .map(|p| {
            let mut rng = rng_stream(config.seed, iteration, p as u64, PHASE_CAMERA);
            let mut collector = Pass1Collector {
                octree,
                count_occluded: config.count_occluded,
                records: Vec::new(),
                events: Vec::new(),
            };
            let (px, py) = (p as u32 % config.width, p as u32 / config.width);
            let sample = pixel_sample(config.seed, iteration, px, py);
            trace_camera_path(scene, config, px, py, sample, &mut rng, &mut collector);
            (collector.records, collector.events)
        })
        .collect();
    let required: usize = per_pixel.iter().map(|(r, _)| r.len()).sum();
    let mut events = Vec::new();
    for (_, e) in &mut per_pixel {
        events.append(e);
    }
    let mut store = VertexStore::with_capacity(capacity);
    store
        .fill(required, per_pixel.into_iter().flat_map(|(r, _)| r))
        .map_err(|needed| RenderError::StoreCapacity {
            required: needed,
            capacity: store.capacity(),
        })?;
    Ok(Pass1Output { store, events })
}

/// Flux re-emitted from a stored vertex: the received differential
/// irradiance spread over the local record density.
pub(crate) fn vertex_flux(irradiance: Rgb, density: f64) -> Rgb {
    irradiance * (1.0 / density)
}

fn merge_films(mut a: FrameBuffer, b: FrameBuffer) -> FrameBuffer {
    a.add_from(&b);
    a
}

/// Per-record work of pass 2 plus the optional light photons.
pub(crate) fn neb_pass2(
    scene: &Scene,
    config: &RenderConfig,
    octree: &DensityOctree,
    store: &mut VertexStore,
    radius: f64,
    iteration: u64,
) -> FrameBuffer {
    if store.is_empty() {
        return FrameBuffer::new(config.width, config.height);
    }
    let densities: Vec<f64> = store
        .records()
        .par_iter()
        .map(|r| octree.get_density_robust(&r.geo_frame()))
        .collect();
    for (r, d) in store.records_mut().iter_mut().zip(densities) {
        r.density = d;
    }
    let records = store.records();
    let grid = VertexHashGrid::build(records, radius);
    let n_lp = config.n_light_photons();
    let counts = SamplerCounts {
        n_nee: 1.0,
        n_photon: records.len() as f64,
        n_light_photon: n_lp as f64,
    };
    let max_depth = config.max_depth as usize;

    let mut film = (0..records.len())
        .into_par_iter()
        .fold(
            || FrameBuffer::new(config.width, config.height),
            |mut film, i| {
                let rec = &records[i];
                splat_nee(&mut film, rec, radius, &counts);
                backtrack_photon(
                    scene, config, rec, i, iteration, &grid, records, &counts, max_depth, &mut film,
                );
                film
            },
        )
        .reduce(|| FrameBuffer::new(config.width, config.height), merge_films);

    if n_lp > 0 && max_depth >= 2 {
        let lp = (0..n_lp)
            .into_par_iter()
            .fold(
                || FrameBuffer::new(config.width, config.height),
                |mut film, p| {
                    light_photon(
                        scene, config, octree, p, n_lp, iteration, &grid, records, &counts,
                        max_depth, &mut film,
                    );
                    film
                },
            )
            .reduce(|| FrameBuffer::new(config.width, config.height), merge_films);
        film.add_from(&lp);
    }
    film
}

fn splat_nee(film: &mut FrameBuffer, rec: &NeeVertexRecord, radius: f64, counts: &SamplerCounts) {
    if rec.occluded || rec.f_nee.is_black() || rec.irradiance.is_black() {
        return;
    }
    let mut chain = rec.prefix.clone();
    chain.push(rec.final_seg);
    let merge = MergeContext {
        radius,
        rho_emitter: rec.density,
        light_pdf: rec.light_pdf,
        n_photons: counts.n_photon,
    };
    let w = mis_weights_incremental(&chain, &merge, counts);
    film.splat(rec.pixel, rec.throughput * rec.f_nee * rec.irradiance * w.nee);
}

#[allow(clippy::too_many_arguments)]
fn backtrack_photon(
    scene: &Scene,
    config: &RenderConfig,
    rec: &NeeVertexRecord,
    index: usize,
    iteration: u64,
    grid: &VertexHashGrid,
    records: &[NeeVertexRecord],
    counts: &SamplerCounts,
    max_depth: usize,
    film: &mut FrameBuffer,
) {
    if rec.occluded || rec.irradiance.is_black() || !(rec.density > 0.0) || max_depth < 3 {
        return;
    }
    let mut rng = rng_stream(config.seed, iteration, index as u64, PHASE_RECORD);
    // First bounce: the light's direction comes in, the record's own BSDF
    // continues. Records only exist on smooth lobes, so `entering` is moot.
    let bsdf = scene.material(rec.material);
    let sample = bsdf.sample(&rec.shading, rec.d, true, &mut rng);
    if sample.f.is_black() || sample.pdf_fwd <= 0.0 {
        return;
    }
    let cos_o = rec.shading.cos_theta(sample.wo).abs();
    let weight = if sample.is_delta { sample.f } else { sample.f * (cos_o / sample.pdf_fwd) };
    let emitter_seg = SegmentPdfs {
        forward: if rec.light_pdf.is_area() {
            solid_angle_to_area_pdf(sample.pdf_rev, rec.nee_dist, rec.cos_at_light)
        } else {
            1.0
        },
        reverse: rec.final_seg.reverse,
        delta: false,
    };
    let head = PhotonHead {
        light_pdf: rec.light_pdf,
        rho_emitter: rec.density,
        emitter_seg: Some(emitter_seg),
    };
    let launch = PhotonLaunch {
        origin: rec.shading.position,
        dir: sample.wo,
        pdf_dir_sr: sample.pdf_fwd,
        origin_cos: cos_o,
        from_point_light: false,
        flux: vertex_flux(rec.irradiance, rec.density) * weight,
        max_segments: max_depth - 2,
    };
    walk_photon(scene, &head, launch, &mut rng, |photon| {
        grid.for_each_in_range(photon.position, |idx| {
            let other = &records[idx as usize];
            let merged = merge_with_record(
                scene,
                other,
                photon,
                photon.head.rho_emitter,
                grid.radius(),
                counts,
                max_depth,
            );
            if let Some((pixel, value)) = merged {
                film.splat(pixel, value);
            }
        });
    });
}

#[allow(clippy::too_many_arguments)]
fn light_photon(
    scene: &Scene,
    config: &RenderConfig,
    octree: &DensityOctree,
    index: usize,
    n_lp: usize,
    iteration: u64,
    grid: &VertexHashGrid,
    records: &[NeeVertexRecord],
    counts: &SamplerCounts,
    max_depth: usize,
    film: &mut FrameBuffer,
) {
    let mut rng = rng_stream(config.seed, iteration, index as u64, PHASE_LIGHT_PHOTON);
    let Some(emission) = scene.sample_photon_emission(n_lp, &mut rng) else { return };
    let head = PhotonHead {
        light_pdf: emission.light_pdf,
        rho_emitter: 0.0,
        emitter_seg: None,
    };
    let launch = PhotonLaunch {
        origin: emission.origin,
        dir: emission.dir,
        pdf_dir_sr: emission.emit_pdf_sr,
        origin_cos: emission.cos_at_light,
        from_point_light: emission.origin_frame.is_none(),
        flux: emission.flux,
        max_segments: max_depth - 1,
    };
    let mut rho_first = 0.0;
    walk_photon(scene, &head, launch, &mut rng, |photon| {
        let first = photon.trail.len() == 1;
        if first {
            rho_first = octree.get_density_robust(&photon.geo);
        }
        grid.for_each_in_range(photon.position, |idx| {
            let rec = &records[idx as usize];
            // The chain's light-adjacent vertex is this merge's record at the
            // first photon vertex and the first photon vertex afterwards.
            let rho = if first { rec.density } else { rho_first };
            let merged =
                merge_with_record(scene, rec, photon, rho, grid.radius(), counts, max_depth);
            if let Some((pixel, value)) = merged {
                film.splat(pixel, value);
            }
        });
    });
}

/// Resolves the parked emission events with the densities of this iteration.
pub(crate) fn neb_pass3(
    config: &RenderConfig,
    octree: &DensityOctree,
    events: &[EmissionEvent],
    radius: f64,
    counts: &SamplerCounts,
) -> FrameBuffer {
    events
        .par_iter()
        .fold(
            || FrameBuffer::new(config.width, config.height),
            |mut film, event| {
                let rho = event
                    .emitter_geo
                    .as_ref()
                    .map_or(0.0, |g| octree.get_density_robust(g));
                let merge = MergeContext {
                    radius,
                    rho_emitter: rho,
                    light_pdf: event.light_pdf,
                    n_photons: counts.n_photon,
                };
                let w = mis_weights_incremental(&event.chain, &merge, counts);
                film.splat(event.pixel, event.contribution * w.random_hit);
                film
            },
        )
        .reduce(|| FrameBuffer::new(config.width, config.height), merge_films)
}

pub(crate) fn render_neb(
    scene: &Scene,
    config: &RenderConfig,
) -> Result<(FrameBuffer, RenderStats), RenderError> {
    let mut film = FrameBuffer::new(config.width, config.height);
    let store_capacity = film.pixel_count() * config.max_depth as usize;
    let radius = config.radius_scale * scene.bounds.diagonal();
    let mut octree =
        DensityOctree::new(scene.bounds.min, scene.bounds.max, config.octree_capacity as usize);
    let stats = run_iterations(&config.budget, |iteration| {
        octree.set_iteration(iteration as u32 + 1);
        let Pass1Output { mut store, events } =
            neb_pass1(scene, config, &octree, iteration, store_capacity)?;
        let pass2 = neb_pass2(scene, config, &octree, &mut store, radius, iteration);
        film.add_from(&pass2);
        let counts = SamplerCounts {
            n_nee: 1.0,
            n_photon: store.len() as f64,
            n_light_photon: config.n_light_photons() as f64,
        };
        let pass3 = neb_pass3(config, &octree, &events, radius, &counts);
        film.add_from(&pass3);
        film.advance_iterations(1);
        Ok(())
    })?;
    Ok((film, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Budget, IntegratorKind};
    use crate::math::{vec3, Vector3};
    use crate::mis::LightPdf;
    use crate::scene::{fixtures, Bsdf, Geometry, Light, Pinhole, Shape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn floor_scene(lights: Vec<Light>) -> Scene {
        let camera = Pinhole {
            position: vec3(0.0, 2.0, 0.0),
            look_at: Vector3::ZERO,
            up: vec3(0.0, 0.0, 1.0),
            vfov_degrees: 40.0,
            width: 8,
            height: 8,
        };
        let materials = vec![Bsdf::Lambert { albedo: Rgb::splat(0.6) }];
        let corner = vec3(-3.0, 0.0, -3.0);
        let (e1, e2) = (vec3(0.0, 0.0, 6.0), vec3(6.0, 0.0, 0.0));
        let (a, b, c, d) = (corner, corner + e1, corner + e1 + e2, corner + e2);
        let shapes = [[a, b, c], [a, c, d]]
            .map(|p| Shape {
                geometry: Geometry::Triangle { p, normals: None },
                material: 0,
                emitter: None,
            })
            .to_vec();
        Scene::new(camera, materials, shapes, lights).unwrap()
    }

    fn point_light() -> Light {
        Light::Point { position: vec3(0.4, 1.8, 0.2), intensity: Rgb::splat(2.0) }
    }

    #[test]
    fn pass1_stores_one_record_per_floor_hit() {
        let scene = floor_scene(vec![point_light()]);
        let config = RenderConfig::new(IntegratorKind::Neb, 8, 8, Budget::Iterations(1));
        let mut octree = DensityOctree::new(scene.bounds.min, scene.bounds.max, 1 << 12);
        octree.set_iteration(1);
        let out = neb_pass1(&scene, &config, &octree, 0, 1024).unwrap();
        // Every camera ray hits the floor once and escapes after the bounce.
        assert_eq!(out.store.len(), 64);
        assert!(out.events.is_empty());
        for (i, rec) in out.store.records().iter().enumerate() {
            assert_eq!(rec.pixel as usize, i, "store must be pixel ordered");
            assert_eq!(rec.k(), 1);
            assert!(!rec.occluded);
            assert!(matches!(rec.light_pdf, LightPdf::Delta(_)));
            assert!(rec.prev_dist > 0.0 && rec.prev_cos > 0.0);
            assert_eq!(rec.throughput, Rgb::WHITE);
            assert!(rec.wi_prev.y > 0.0, "view direction points back up");
        }
    }

    #[test]
    fn pass1_overflow_reports_total_demand() {
        let scene = floor_scene(vec![point_light()]);
        let config = RenderConfig::new(IntegratorKind::Neb, 8, 8, Budget::Iterations(1));
        let mut octree = DensityOctree::new(scene.bounds.min, scene.bounds.max, 1 << 12);
        octree.set_iteration(1);
        let err = neb_pass1(&scene, &config, &octree, 0, 40)
            .err()
            .expect("store sized for 40 records must reject 64");
        match err {
            RenderError::StoreCapacity { required, capacity } => {
                assert_eq!(required, 64);
                assert_eq!(capacity, 40);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn occluded_records_follow_the_flag() {
        // A small panel hovers under the light; floor points in its shadow
        // are camera-visible but cannot see the light.
        let lights = vec![Light::Point {
            position: vec3(0.0, 2.0, 0.0),
            intensity: Rgb::splat(2.0),
        }];
        let camera = Pinhole {
            position: vec3(0.0, 3.0, 0.0),
            look_at: Vector3::ZERO,
            up: vec3(0.0, 0.0, 1.0),
            vfov_degrees: 40.0,
            width: 16,
            height: 16,
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
        quad(vec3(-3.0, 0.0, -3.0), vec3(0.0, 0.0, 6.0), vec3(6.0, 0.0, 0.0));
        quad(vec3(-0.4, 1.0, -0.4), vec3(0.0, 0.0, 0.8), vec3(0.8, 0.0, 0.0));
        let scene = Scene::new(camera, materials, shapes, lights).unwrap();

        let mut config = RenderConfig::new(IntegratorKind::Neb, 16, 16, Budget::Iterations(1));
        let mut octree = DensityOctree::new(scene.bounds.min, scene.bounds.max, 1 << 14);
        octree.set_iteration(1);
        let with = neb_pass1(&scene, &config, &octree, 0, 1 << 14).unwrap();
        let shadowed =
            with.store.records().iter().filter(|r| r.occluded).count();
        assert!(shadowed > 0, "shadow annulus must produce occluded records");

        config.count_occluded = false;
        let mut octree2 = DensityOctree::new(scene.bounds.min, scene.bounds.max, 1 << 14);
        octree2.set_iteration(1);
        let without = neb_pass1(&scene, &config, &octree2, 0, 1 << 14).unwrap();
        assert_eq!(without.store.len(), with.store.len() - shadowed);
        assert!(without.store.records().iter().all(|r| !r.occluded));
    }

    #[test]
    fn reemitted_flux_integrates_received_power() {
        // N records uniform on the unit square have areal density N; the
        // per-record flux dE/rho then sums to the power the square receives,
        // which for a point source is intensity times subtended solid angle.
        let light = vec3(0.5, 0.5, 1.0);
        let intensity = 2.0;
        let n = 10_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut total = 0.0;
        for _ in 0..n {
            let x = vec3(rng.gen::<f64>(), rng.gen::<f64>(), 0.0);
            let delta = light - x;
            let d2 = delta.dot(delta);
            let irradiance = intensity * (delta.z / d2.sqrt()) / d2;
            total += vertex_flux(Rgb::splat(irradiance), n as f64).g;
        }
        // Solid angle of a centered unit square seen from height 1.
        let omega = 4.0 * (0.25f64 / 1.25).asin();
        let want = intensity * omega;
        assert!(
            (total - want).abs() < 0.05 * want,
            "flux {total} vs power {want}"
        );
    }

    #[test]
    fn densities_are_positive_after_pass2() {
        let scene = floor_scene(vec![point_light()]);
        let config = RenderConfig::new(IntegratorKind::Neb, 8, 8, Budget::Iterations(1));
        let mut octree = DensityOctree::new(scene.bounds.min, scene.bounds.max, 1 << 14);
        octree.set_iteration(1);
        let mut out = neb_pass1(&scene, &config, &octree, 0, 1024).unwrap();
        let radius = config.radius_scale * scene.bounds.diagonal();
        let film = neb_pass2(&scene, &config, &octree, &mut out.store, radius, 0);
        // Every record counted itself, so its density query cannot be zero.
        assert!(out.store.records().iter().all(|r| r.density > 0.0));
        assert!(film.data().iter().all(|v| v.is_finite()));
    }

    /// On a scene with no photon-reachable paths the photon passes are inert
    /// and the next event splats must reproduce the path tracer bit for bit:
    /// both integrators share the camera walk and its random streams.
    #[test]
    fn matches_path_tracer_when_only_direct_light_exists() {
        let scene = floor_scene(vec![point_light()]);
        let config = RenderConfig::new(IntegratorKind::Neb, 8, 8, Budget::Iterations(64));
        let (neb_film, _) = render_neb(&scene, &config).unwrap();
        let (pt_film, _) = super::super::pt::render_pt(&scene, &config).unwrap();
        assert_eq!(neb_film.data(), pt_film.data());
    }

    #[test]
    fn one_iteration_of_builtins_is_finite() {
        for name in ["cornell_diffuse", "light_bulb"] {
            let scene = fixtures::builtin(name).unwrap();
            let config =
                RenderConfig::new(IntegratorKind::NebLp, 16, 16, Budget::Iterations(1));
            let (film, stats) = render_neb(&scene, &config).unwrap();
            assert_eq!(stats.iterations, 1);
            assert!(film.data().iter().all(|v| v.is_finite()), "{name}");
            assert!(
                film.data().iter().any(|v| !v.is_black()),
                "{name} rendered all black"
            );
        }
    }
}
