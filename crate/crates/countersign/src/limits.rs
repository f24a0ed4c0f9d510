//! Resource caps shared across the crate.
//!
//! Every bound has a default, can be overridden by a `COUNTERSIGN_*`
//! environment variable, and (for the CLI) by a command-line flag.

/// Names of the environment variables consulted by [`Limits::from_env`].
pub mod env_vars {
    pub const MAX_WORLDS: &str = "COUNTERSIGN_MAX_WORLDS";
    pub const MAX_AGENTS: &str = "COUNTERSIGN_MAX_AGENTS";
    pub const RECURSION_LIMIT: &str = "COUNTERSIGN_RECURSION_LIMIT";
    pub const TAUT_LETTERS: &str = "COUNTERSIGN_TAUT_LETTERS";
    pub const SATURATION_BOUND: &str = "COUNTERSIGN_SATURATION_BOUND";
    pub const CHAIN_CAP: &str = "COUNTERSIGN_CHAIN_CAP";
}

/// Caps on model size, evaluation recursion, tautology checking, and
/// saturation effort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of worlds a model may declare.
    pub max_worlds: usize,
    /// Maximum number of agents a model may declare.
    pub max_agents: usize,
    /// Maximum depth of the evaluation recursion.
    pub recursion_limit: u32,
    /// Maximum number of distinct letters in a tautology check.
    pub taut_letters: u32,
    /// Default number of saturation rounds.
    pub saturation_bound: u32,
    /// Maximum length of a single derivation chain in saturation.
    pub chain_cap: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_worlds: 64,
            max_agents: 64,
            recursion_limit: 10_000,
            taut_letters: 20,
            saturation_bound: 6,
            chain_cap: 64,
        }
    }
}

impl Limits {
    /// Defaults, overridden by any `COUNTERSIGN_*` variables that are
    /// set and parse as numbers; unset or malformed variables are ignored.
    pub fn from_env() -> Self {
        fn read<T: std::str::FromStr>(var: &str, default: T) -> T {
            std::env::var(var)
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(default)
        }
        let d = Limits::default();
        Limits {
            max_worlds: read(env_vars::MAX_WORLDS, d.max_worlds),
            max_agents: read(env_vars::MAX_AGENTS, d.max_agents),
            recursion_limit: read(env_vars::RECURSION_LIMIT, d.recursion_limit),
            taut_letters: read(env_vars::TAUT_LETTERS, d.taut_letters),
            saturation_bound: read(env_vars::SATURATION_BOUND, d.saturation_bound),
            chain_cap: read(env_vars::CHAIN_CAP, d.chain_cap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let l = Limits::default();
        assert_eq!(l.max_worlds, 64);
        assert_eq!(l.recursion_limit, 10_000);
        assert_eq!(l.taut_letters, 20);
        assert_eq!(l.saturation_bound, 6);
        assert_eq!(l.chain_cap, 64);
    }
}
