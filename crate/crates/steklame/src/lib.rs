//! File formats, run configurations and the command-line front end for
//! [`steklame_core`].
//!
//! - [`format`]: boundary JSON (17 significant digits) and CSV output with a
//!   metadata line.
//! - [`config`]: per-subcommand settings, read from JSON and overridden by flags.
//! - [`init`]: seeded random starting shapes.
//! - [`run`]: the `disk`, `solve`, `converge`, `sweep` and `optimize` commands.

pub use steklame_core as core;

pub mod config;
pub mod error;
pub mod format;
pub mod init;
pub mod run;

pub use error::{CliError, Result};

/// Caps the worker threads used by the dense linear algebra. `0` or `1`
/// runs sequentially.
pub fn set_threads(threads: usize) {
    if threads > 1 {
        // a pool may already exist when called twice; the cap then stays
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        faer::set_global_parallelism(faer::Par::rayon(threads));
    } else {
        faer::set_global_parallelism(faer::Par::Seq);
    }
}
