//! CPU physically based renderer built around *next event backtracking*:
//! every next event estimation connection made while path tracing is reused,
//! in a second pass, as the first segment of a photon path. The photon flux
//! is derived from the irradiance the connection delivered and the local
//! density of stored connections, so photon emission concentrates exactly
//! where next event estimation already found light.
//!
//! The crate ships three integrators (`pt`, `neb`, `neb_lp`), a lock free
//! density octree, a small scene format with built-in fixtures, and PFM
//! image I/O. See the `cli` module or the `neb` binary for the front end.

pub mod cli;
pub mod color;
pub mod config;
pub mod film;
pub mod integrator;
pub mod io;
pub mod math;
pub mod mis;
pub mod octree;
pub mod scene;
