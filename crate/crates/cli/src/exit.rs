//! Exit codes: 0 ok, 1 usage, 2 data error, 3 backend or protocol error.

use std::fmt;

/// A bad combination of command-line options that clap cannot express.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<tagsimp::Error>() {
            return if e.is_backend() { 3 } else { 2 };
        }
    }
    2
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn codes() {
        let usage: anyhow::Error = Usage("x".into()).into();
        assert_eq!(exit_code(&usage), 1);
        let data: anyhow::Error = tagsimp::Error::EmptyCorpus.into();
        assert_eq!(exit_code(&data), 2);
        let backend = Err::<(), _>(tagsimp::Error::PeerUnavailable("gone".into()))
            .context("simplifying")
            .unwrap_err();
        assert_eq!(exit_code(&backend), 3);
        let io: anyhow::Error = std::io::Error::other("disk").into();
        assert_eq!(exit_code(&io), 2);
    }
}
