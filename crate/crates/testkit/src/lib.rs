//! Shared test support: fixture portals and independent oracles.

pub mod oracle;
pub mod portal;

pub use portal::{dead_address, FixtureServer, Flavor, PortalFixture};
