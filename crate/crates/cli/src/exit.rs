//! Exit codes: 0 success, 2 validation, 3 solver non-convergence, 4 I/O.

use std::path::Path;

use wavepeel::Error;

pub const VALIDATION: u8 = 2;
pub const NON_CONVERGENCE: u8 = 3;
pub const IO: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self { code: VALIDATION, message: msg.into() }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self { code: IO, message: format!("{}: {err}", path.display()) }
    }

    pub fn from_core(err: Error, path: &Path) -> Self {
        let mut f = Failure::from(err);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

pub fn code_for(err: &Error) -> u8 {
    match err {
        Error::Convergence(_) | Error::IterationLimit(_) => NON_CONVERGENCE,
        Error::Io(_) => IO,
        Error::Replication { source, .. } => code_for(source),
        _ => VALIDATION,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Self { code: code_for(&err), message: err.to_string() }
    }
}
