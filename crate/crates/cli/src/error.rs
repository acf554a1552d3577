use std::path::PathBuf;

/// Errors that stop a whole run (exit status 2). Per-image problems are
/// recorded in the reports instead.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Core(#[from] sgrif::Error),

    #[error("writing report: {0}")]
    Csv(#[from] csv::Error),
}
