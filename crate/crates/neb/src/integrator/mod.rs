//! Rendering entry points and the plumbing shared by the integrators:
//! deterministic random streams, the iteration/time budget loop, and the
//! dispatcher that owns the thread pool.

mod neb;
mod photon;
mod pt;
mod records;
mod walk;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{Budget, IntegratorKind, RenderConfig};
use crate::film::FrameBuffer;
use crate::scene::Scene;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderStats {
    /// Completed accumulation iterations.
    pub iterations: u64,
    /// Wall clock time of the whole render.
    pub seconds: f64,
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(
        "vertex store needs room for {required} records but holds {capacity}; \
         lower the resolution or path depth"
    )]
    StoreCapacity { required: usize, capacity: usize },
    #[error("invalid render configuration: {0}")]
    Config(String),
}

pub(crate) const PHASE_CAMERA: u64 = 0;
pub(crate) const PHASE_RECORD: u64 = 1;
pub(crate) const PHASE_LIGHT_PHOTON: u64 = 2;

/// Deterministic stream for one task (pixel, record or photon index) of one
/// iteration. Streams never overlap and do not depend on thread scheduling.
pub(crate) fn rng_stream(seed: u64, iteration: u64, id: u64, phase: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&iteration.to_le_bytes());
    key[16..24].copy_from_slice(&id.to_le_bytes());
    key[24..32].copy_from_slice(&phase.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Runs `body` once per iteration until the budget is spent. Time budgets
/// always complete the iteration in flight and never run zero iterations.
pub(crate) fn run_iterations(
    budget: &Budget,
    mut body: impl FnMut(u64) -> Result<(), RenderError>,
) -> Result<RenderStats, RenderError> {
    let start = Instant::now();
    let mut iterations = 0u64;
    loop {
        if let Budget::Iterations(n) = *budget {
            if iterations >= n as u64 {
                break;
            }
        }
        body(iterations)?;
        iterations += 1;
        match *budget {
            Budget::Iterations(n) => {
                if iterations >= n as u64 {
                    break;
                }
            }
            Budget::Seconds(s) => {
                if start.elapsed().as_secs_f64() >= s {
                    break;
                }
            }
        }
    }
    Ok(RenderStats { iterations, seconds: start.elapsed().as_secs_f64() })
}

/// Renders `scene` with the configured integrator on a private pool of
/// `config.threads` workers.
pub fn render(
    scene: &Scene,
    config: &RenderConfig,
) -> Result<(FrameBuffer, RenderStats), RenderError> {
    config.validate().map_err(RenderError::Config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| RenderError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match config.integrator {
        IntegratorKind::Pt => pt::render_pt(scene, config),
        IntegratorKind::Neb | IntegratorKind::NebLp => neb::render_neb(scene, config),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_in_every_coordinate() {
        use rand::Rng;
        let base: f64 = rng_stream(1, 2, 3, 0).gen();
        for other in [
            rng_stream(2, 2, 3, 0),
            rng_stream(1, 3, 3, 0),
            rng_stream(1, 2, 4, 0),
            rng_stream(1, 2, 3, 1),
        ] {
            let mut other = other;
            assert_ne!(base.to_bits(), other.gen::<f64>().to_bits());
        }
        let mut again = rng_stream(1, 2, 3, 0);
        assert_eq!(base.to_bits(), again.gen::<f64>().to_bits());
    }

    #[test]
    fn iteration_budget_runs_exactly_n_times() {
        let mut seen = Vec::new();
        let stats = run_iterations(&Budget::Iterations(5), |i| {
            seen.push(i);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        assert_eq!(stats.iterations, 5);
    }

    #[test]
    fn time_budget_completes_at_least_one_iteration() {
        let stats = run_iterations(&Budget::Seconds(1e-9), |_| {
            std::thread::sleep(std::time::Duration::from_millis(2));
            Ok(())
        })
        .unwrap();
        assert_eq!(stats.iterations, 1);
        assert!(stats.seconds >= 0.002);
    }

    #[test]
    fn body_error_aborts_the_loop() {
        let mut calls = 0;
        let err = run_iterations(&Budget::Iterations(10), |_| {
            calls += 1;
            Err(RenderError::StoreCapacity { required: 9, capacity: 1 })
        });
        assert!(matches!(err, Err(RenderError::StoreCapacity { required: 9, capacity: 1 })));
        assert_eq!(calls, 1);
    }
}
