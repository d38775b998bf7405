//! Errors surfaced to the user, each tied to an exit code.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad flags, unreadable input, unknown names: exit 1.
    Usage(String),
    /// Stiffness, non-finite values or accuracy failures: exit 2.
    Numeric(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => f.write_str(m),
        }
    }
}

/// Attach the name of the module an error came from.
pub trait Qualify<T> {
    fn qualify(self, module: &str) -> Result<T, Failure>;
}

impl<T> Qualify<T> for mcsbi::Result<T> {
    fn qualify(self, module: &str) -> Result<T, Failure> {
        self.map_err(|e| {
            let msg = format!("{module}: {e}");
            if e.is_numeric() {
                Failure::Numeric(msg)
            } else {
                Failure::Usage(msg)
            }
        })
    }
}

pub fn io_failure(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("cannot write {}: {e}", path.display()))
}
