//! Experiment orchestration: configuration, seeded replication runners, CSV
//! emission, and the built-in reproduction recipes.

pub mod config;
pub mod csv;
pub mod recipes;
pub mod runner;

use std::fmt;
use std::io;
use std::path::PathBuf;

use crate::env::EnvError;
use crate::matching::MatchingError;
use crate::policy::PolicyError;

#[derive(Debug)]
pub enum HarnessError {
    Config(String),
    Io { path: PathBuf, source: io::Error },
    Env(EnvError),
    Policy(PolicyError),
    Matching(MatchingError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(msg) => write!(f, "config error: {msg}"),
            HarnessError::Io { path, source } => {
                write!(f, "io error on {}: {source}", path.display())
            }
            HarnessError::Env(e) => write!(f, "instance error: {e}"),
            HarnessError::Policy(e) => write!(f, "policy error: {e}"),
            HarnessError::Matching(e) => write!(f, "matching error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Io { source, .. } => Some(source),
            HarnessError::Env(e) => Some(e),
            HarnessError::Policy(e) => Some(e),
            HarnessError::Matching(e) => Some(e),
            HarnessError::Config(_) => None,
        }
    }
}

impl From<EnvError> for HarnessError {
    fn from(e: EnvError) -> Self {
        HarnessError::Env(e)
    }
}

impl From<PolicyError> for HarnessError {
    fn from(e: PolicyError) -> Self {
        HarnessError::Policy(e)
    }
}

impl From<MatchingError> for HarnessError {
    fn from(e: MatchingError) -> Self {
        HarnessError::Matching(e)
    }
}
