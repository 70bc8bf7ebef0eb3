//! Command-line pipeline and HTTP tutoring service on top of `geotutor`.

pub mod commands;
pub mod config;
pub mod library;
pub mod service;

pub use commands::run;
