//! Exit codes and the one-line error record.

use std::process::ExitCode;

use pat_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Usage = 2,
    Numerical = 3,
    Io = 4,
}

impl Code {
    fn tag(self) -> &'static str {
        match self {
            Code::Usage => "usage",
            Code::Numerical => "numerical",
            Code::Io => "io",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: Code,
    pub msg: String,
}

impl Failure {
    pub fn new(code: Code, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }

    /// Prints `error[<tag>]: <message>` on one line and returns the exit code.
    pub fn report(&self) -> ExitCode {
        eprintln!("error[{}]: {}", self.code.tag(), self.msg.replace('\n', " "));
        ExitCode::from(self.code as u8)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => Code::Io,
            Error::Format(_) => Code::Usage,
            _ => Code::Numerical,
        };
        Failure::new(code, e.to_string())
    }
}

/// Errors while reading data files: malformed files are I/O failures, not usage.
pub fn data(path: &std::path::Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| match e {
        Error::Format(m) | Error::Resolution(m) => Failure::new(Code::Io, format!("{}: {m}", path.display())),
        Error::Io(io) => Failure::new(Code::Io, format!("{}: {io}", path.display())),
        other => other.into(),
    }
}

pub fn io(path: &std::path::Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::new(Code::Io, format!("{}: {e}", path.display()))
}
