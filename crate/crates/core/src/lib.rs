pub mod precision;
pub mod orbit;
pub mod config;
pub mod chop;
pub mod engine;
mod exec;
pub mod survey;
pub mod analytics;
pub mod io;
