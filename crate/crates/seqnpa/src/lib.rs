//! Toolkit for sequential moment (NPA-style) semidefinite relaxations of
//! multipartite nonlocal games played against one-way ordered measurement
//! devices, together with dilated-strategy simulation and a geometric repair
//! pipeline for near-feasible moment matrices.
//!
//! Modules:
//! - [`game`]: k-partite games, file format, exact classical optimum.
//! - [`words`]: reduced measurement words and level schemes.
//! - [`hierarchy`]: moment index, constraint rows, residuals, SDP assembly.
//! - [`sdp`]: standard-form problem, deterministic solver, SDPA interop.
//! - [`strategy`]: dilated strategies with an eps-signaling knob.
//! - [`repair`]: projection + mixing repair of near-feasible matrices.
//! - [`certify`]: flatness reports and solver audits.
//! - [`report`]: run manifests and output plumbing for the CLI.

pub mod certify;
pub mod game;
pub mod hierarchy;
pub mod repair;
pub mod report;
pub mod sdp;
pub mod strategy;
pub mod words;
