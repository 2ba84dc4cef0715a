//! Experiment harness around `retrolab-core`: threaded execution, JSON and
//! CSV file formats, configuration and the `retrolab` command line.

#![warn(missing_docs)]

pub mod cli;
pub mod config;
pub mod formats;
pub mod runner;
