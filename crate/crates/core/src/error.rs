use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state space of {states} states exceeds the cap of {cap}")]
    CapExceeded { states: u128, cap: u64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidArgument(format!($($arg)*))
    };
}
pub(crate) use invalid;

/// Upper bound on the number of states an exact computation may enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateCap(pub u64);

impl StateCap {
    pub const DEFAULT: StateCap = StateCap(1_000_000);
    pub const ENV_VAR: &'static str = "KWM_STATE_CAP";

    /// Reads `KWM_STATE_CAP`, falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(Self::ENV_VAR) {
            Ok(raw) => raw
                .trim()
                .parse::<u64>()
                .map(StateCap)
                .map_err(|_| invalid!("{} must be a positive integer, got {raw:?}", Self::ENV_VAR)),
            Err(_) => Ok(Self::DEFAULT),
        }
    }

    pub fn check(self, states: u128) -> Result<usize> {
        if states > self.0 as u128 {
            Err(Error::CapExceeded { states, cap: self.0 })
        } else {
            Ok(states as usize)
        }
    }
}

impl Default for StateCap {
    fn default() -> Self {
        Self::DEFAULT
    }
}
