//! Batch front end for baking transfer textures, rendering, Monte Carlo
//! references and reports.

pub mod bench;
pub mod commands;
pub mod config;
pub mod memory;
