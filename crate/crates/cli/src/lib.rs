//! Library surface of the command-line front end, kept callable so the
//! integration and acceptance suites can drive the commands directly.

pub mod commands;
pub mod formats;
