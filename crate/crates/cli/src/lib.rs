//! Command implementations behind the `signid` binary.

pub mod app;
pub mod commands;
pub mod input;
