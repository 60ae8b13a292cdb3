//! Baseline unidirectional path tracer: BSDF walks with one next-event
//! estimate per vertex, the two techniques combined by the balance heuristic.

use rayon::prelude::*;

use crate::color::Rgb;
use crate::config::RenderConfig;
use crate::film::FrameBuffer;
use crate::mis::{mis_weights_incremental, MergeContext, SamplerCounts};
use crate::scene::Scene;

use super::walk::{pixel_sample, trace_camera_path, CameraPathHandler, EmitterHit, NeeSite};
use super::{rng_stream, run_iterations, RenderError, RenderStats, PHASE_CAMERA};

struct PtHandler {
    sum: Rgb,
}

impl CameraPathHandler for PtHandler {
    fn nee_site(&mut self, site: NeeSite<'_>) {
        if site.nee.irradiance.is_black() || site.eval.f.is_black() {
            return;
        }
        let mut chain = site.prefix;
        chain.push(site.final_seg);
        let merge = MergeContext::no_photons(site.nee.light_pdf);
        let w = mis_weights_incremental(&chain, &merge, &SamplerCounts::path_tracer());
        self.sum += site.throughput * site.eval.f * site.nee.irradiance * w.nee;
    }

    fn emitter_hit(&mut self, hit: EmitterHit) {
        let merge = MergeContext::no_photons(hit.light_pdf);
        let w = mis_weights_incremental(&hit.chain, &merge, &SamplerCounts::path_tracer());
        self.sum += hit.contribution * w.random_hit;
    }
}

pub(crate) fn render_pt(
    scene: &Scene,
    config: &RenderConfig,
) -> Result<(FrameBuffer, RenderStats), RenderError> {
    let mut film = FrameBuffer::new(config.width, config.height);
    let npix = film.pixel_count();
    let stats = run_iterations(&config.budget, |iteration| {
        let sums: Vec<Rgb> = (0..npix)
            .into_par_iter()
            .map(|p| {
                let mut rng = rng_stream(config.seed, iteration, p as u64, PHASE_CAMERA);
                let mut handler = PtHandler { sum: Rgb::BLACK };
                let (px, py) = (p as u32 % config.width, p as u32 / config.width);
                let sample = pixel_sample(config.seed, iteration, px, py);
                trace_camera_path(scene, config, px, py, sample, &mut rng, &mut handler);
                handler.sum
            })
            .collect();
        for (p, v) in sums.into_iter().enumerate() {
            film.splat(p as u32, v);
        }
        film.advance_iterations(1);
        Ok(())
    })?;
    Ok((film, stats))
}
