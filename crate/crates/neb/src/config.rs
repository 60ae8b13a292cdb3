//! Render settings shared by the CLI and the library entry points.

use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorKind {
    /// Unidirectional path tracer with next-event estimation.
    Pt,
    /// Next-event backtracking.
    Neb,
    /// Next-event backtracking plus independently traced light photons.
    NebLp,
}

impl IntegratorKind {
    pub fn parse(s: &str) -> Option<IntegratorKind> {
        match s {
            "pt" => Some(IntegratorKind::Pt),
            "neb" => Some(IntegratorKind::Neb),
            "neb+lp" | "neb_lp" => Some(IntegratorKind::NebLp),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IntegratorKind::Pt => "pt",
            IntegratorKind::Neb => "neb",
            IntegratorKind::NebLp => "neb+lp",
        }
    }
}

/// Either a fixed iteration count or a wall-clock budget; never both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Iterations(u32),
    Seconds(f64),
}

#[derive(Debug, Clone)]
pub struct RenderConfig {
    pub integrator: IntegratorKind,
    pub width: u32,
    pub height: u32,
    pub budget: Budget,
    pub seed: u64,
    pub threads: usize,
    pub max_depth: u32,
    /// Merge radius as a fraction of the scene bounding-box diagonal.
    pub radius_scale: f64,
    pub octree_capacity: u32,
    /// Light photons per iteration; defaults to the pixel count.
    pub n_light_photons: Option<usize>,
    /// Whether occluded next-event vertices still enter the density
    /// estimate and the photon normalization count.
    pub count_occluded: bool,
    pub out: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

impl RenderConfig {
    pub fn new(integrator: IntegratorKind, width: u32, height: u32, budget: Budget) -> RenderConfig {
        RenderConfig {
            integrator,
            width,
            height,
            budget,
            seed: 0,
            threads: 1,
            max_depth: 10,
            radius_scale: 2e-3,
            octree_capacity: 1 << 22,
            n_light_photons: None,
            count_occluded: true,
            out: None,
            reference: None,
        }
    }

    pub fn n_light_photons(&self) -> usize {
        match self.integrator {
            IntegratorKind::NebLp => self
                .n_light_photons
                .unwrap_or((self.width * self.height) as usize),
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 {
            return Err("image dimensions must be positive".into());
        }
        match self.budget {
            Budget::Iterations(0) => return Err("iteration count must be positive".into()),
            Budget::Seconds(s) if !(s > 0.0) => {
                return Err("time budget must be positive".into())
            }
            _ => {}
        }
        if self.threads == 0 {
            return Err("thread count must be positive".into());
        }
        if self.max_depth == 0 {
            return Err("max depth must be at least 1".into());
        }
        if !(self.radius_scale > 0.0) {
            return Err("radius scale must be positive".into());
        }
        if self.octree_capacity < 16 {
            return Err("octree capacity too small".into());
        }
        if self.n_light_photons == Some(0) && self.integrator == IntegratorKind::NebLp {
            return Err("light photon count must be positive".into());
        }
        Ok(())
    }
}
