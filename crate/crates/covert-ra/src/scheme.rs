//! Runtime-selectable optimization schemes.
//!
//! Every scheme — the adaptive rotation design and the three non-adaptive
//! baselines — sits behind the [`Scheme`] trait and is looked up by name in
//! a [`SchemeRegistry`], so harness code and the CLI select strategies from
//! configuration strings without knowing the concrete types.

use crate::ao::{run_ao, run_baseline, AOConfig, AOResult, AoError};
use crate::geometry::{ArrayScene, SystemParams};

/// One interchangeable optimization strategy.
pub trait Scheme: Send + Sync {
    /// Registry key, e.g. `"ra"`.
    fn name(&self) -> &'static str;
    /// One-line description for CLI listings.
    fn describe(&self) -> &'static str;
    /// Runs the strategy on one problem instance.
    fn run(
        &self,
        scene: &ArrayScene,
        params: &SystemParams,
        config: &AOConfig,
    ) -> Result<AOResult, AoError>;
}

struct RaScheme;

impl Scheme for RaScheme {
    fn name(&self) -> &'static str {
        "ra"
    }
    fn describe(&self) -> &'static str {
        "alternating beamforming/rotation optimization of all antennas"
    }
    fn run(
        &self,
        scene: &ArrayScene,
        params: &SystemParams,
        config: &AOConfig,
    ) -> Result<AOResult, AoError> {
        let config = AOConfig {
            scheme: "ra".into(),
            ..config.clone()
        };
        Ok(run_ao(scene, params, &config))
    }
}

macro_rules! baseline_scheme {
    ($ty:ident, $name:literal, $desc:literal) => {
        struct $ty;

        impl Scheme for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn describe(&self) -> &'static str {
                $desc
            }
            fn run(
                &self,
                scene: &ArrayScene,
                params: &SystemParams,
                config: &AOConfig,
            ) -> Result<AOResult, AoError> {
                let config = AOConfig {
                    scheme: $name.into(),
                    ..config.clone()
                };
                run_baseline(scene, params, &config)
            }
        }
    };
}

baseline_scheme!(
    FixedScheme,
    "fixed",
    "all boresights fixed at the +z reference orientation"
);
baseline_scheme!(
    RandomScheme,
    "random",
    "seeded uniform boresight draws over the rotational range"
);
baseline_scheme!(
    IsotropicScheme,
    "isotropic",
    "directivity exponent forced to zero, boresights at +z"
);

/// Name-keyed registry of available schemes.
pub struct SchemeRegistry {
    entries: Vec<Box<dyn Scheme>>,
}

impl SchemeRegistry {
    /// Registry with the four built-in schemes.
    pub fn with_builtins() -> Self {
        let mut reg = Self {
            entries: Vec::new(),
        };
        reg.register(Box::new(RaScheme));
        reg.register(Box::new(FixedScheme));
        reg.register(Box::new(RandomScheme));
        reg.register(Box::new(IsotropicScheme));
        reg
    }

    /// Adds a scheme, replacing any existing entry with the same name.
    pub fn register(&mut self, scheme: Box<dyn Scheme>) {
        self.entries.retain(|s| s.name() != scheme.name());
        self.entries.push(scheme);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Scheme> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
