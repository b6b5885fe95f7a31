//! Report builders behind the `riemsimplex` binary, exposed as a library so
//! integration tests can drive them without spawning processes.

pub mod commands;
pub mod schema;
