//! Command-line front end for `statecap`: channel files, the `validate`,
//! `capacity`, `region` and `simulate` subcommands, and run manifests.

pub mod args;
pub mod channel_file;
pub mod commands;
pub mod error;
pub mod manifest;
