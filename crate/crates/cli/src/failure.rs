use std::fmt;
use std::path::Path;

use se2ot::Error;

/// A failed run, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit code 1.
    Usage(String),
    /// Exit code 2.
    Numerical(String),
    /// Exit code 3.
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NonFiniteIterate { .. } | Error::NotConverged { .. } | Error::ZeroMass | Error::EmptyScore => {
                Failure::Numerical(msg)
            }
            Error::Io(_) | Error::Format { .. } => Failure::Io(msg),
            _ => Failure::Usage(msg),
        }
    }
}

/// Attach the offending path to a library error.
pub fn at(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| match Failure::from(e) {
        Failure::Io(m) => Failure::Io(format!("{}: {m}", path.display())),
        other => other,
    }
}
