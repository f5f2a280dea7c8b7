//! Files, reports and the command line for `raas-core`.

pub mod cli;
pub mod io;
pub mod report;
