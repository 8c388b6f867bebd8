use thiserror::Error;

use crate::landmark::LandmarkError;
use crate::latent::LatentError;
use crate::mad::MadError;
use crate::protocol::ProtocolError;
use crate::raster::RasterError;
use crate::report::ReportError;
use crate::vuln::VulnError;

/// Any failure surfaced by the command-line tools.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Landmark(#[from] LandmarkError),
    #[error(transparent)]
    Latent(#[from] LatentError),
    #[error(transparent)]
    Vuln(#[from] VulnError),
    #[error(transparent)]
    Mad(#[from] MadError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl Error {
    pub fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        Error::Io { path: path.to_string(), source }
    }

    /// 2 for usage errors, 4 for numerical failures, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => EXIT_USAGE,
            Error::Raster(RasterError::Singular(_))
            | Error::Latent(LatentError::NonFinite { .. })
            | Error::Latent(LatentError::Raster(RasterError::Singular(_)))
            | Error::Landmark(LandmarkError::Raster(RasterError::Singular(_))) => EXIT_NUMERICAL,
            _ => EXIT_DATA,
        }
    }
}
