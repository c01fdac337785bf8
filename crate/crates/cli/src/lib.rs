pub mod commands;
pub mod document;
pub mod mesh;

pub use commands::run;
