pub mod alloc;
pub mod basis;
pub mod cache;
pub mod cli;
pub mod compile;
pub mod config;
pub mod error;
pub mod models;
pub mod oracle;
pub mod propagate;
pub mod sparse;
pub mod structure;
