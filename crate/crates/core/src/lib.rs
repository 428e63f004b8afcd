//! Core model and pure computation for auditing open government data portals.
//!
//! The crate is organised around the audit pipeline:
//!
//! * [`framework`] holds the weighted checklist (dimensions and sub-dimensions).
//! * [`catalog`] models harvested catalog metadata, draws the 14-slot dataset
//!   sample and runs per-dataset conformance checks.
//! * [`web`] holds the portal-level gates (load time, health, accessibility).
//! * [`scoring`] turns Boolean verdicts into weighted scores and rankings.
//! * [`store`] persists portals and assessments as plain files.
//! * [`report`] renders rankings and comparisons as Markdown, CSV and JSON.
//!
//! Nothing in this crate touches the network; probes live in `oda-probe`.

pub mod catalog;
pub mod evidence;
pub mod exec;
pub mod framework;
pub mod report;
pub mod scoring;
pub mod store;
pub mod web;

pub use framework::{builtin_framework, load_framework, validate_framework, FrameworkSpec, Weight};
pub use scoring::{score_total, PortalScore, Verdict, VerdictSet, VerdictSource, VerdictValue};
