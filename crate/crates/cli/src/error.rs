use std::fmt;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUN: i32 = 3;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl fmt::Display) -> Self {
        Self { code: EXIT_USAGE, message: msg.to_string() }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Self { code: EXIT_DATA, message: msg.to_string() }
    }

    pub fn run(msg: impl fmt::Display) -> Self {
        Self { code: EXIT_RUN, message: msg.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
