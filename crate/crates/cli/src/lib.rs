//! Scenario ingestion, experiment drivers, and result persistence for the
//! `fockmf` binary. The library surface exists so integration and acceptance
//! tests can drive the exact code paths the CLI uses.

pub mod drivers;
pub mod emit;
pub mod scenario;
