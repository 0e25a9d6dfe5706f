//! File formats and report rendering for the `mgc` command line tool.

pub mod report;
pub mod spec;
