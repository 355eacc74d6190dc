//! Built-in demo scenarios.

use crate::scenario::{Scenario, ScenarioError};

pub struct Demo {
    pub name: &'static str,
    pub toml: &'static str,
}

macro_rules! demo {
    ($name:literal) => {
        Demo { name: $name, toml: include_str!(concat!("../demos/", $name, ".toml")) }
    };
}

pub const DEMOS: &[Demo] = &[
    demo!("classical-broadcast"),
    demo!("classical-bit-analyze"),
    demo!("gbit-opposite-pair"),
    demo!("gbit-adjacent-pair"),
    demo!("gbit-three-vertices"),
    demo!("gbit-covered-segment"),
    demo!("gbit-uncovered-pair"),
    demo!("gbit-universal"),
    demo!("pentagon-vertices"),
    demo!("rebit-hexagon"),
    demo!("rebit-octagon-neighbours"),
];

pub fn find(name: &str) -> Option<&'static Demo> {
    DEMOS.iter().find(|d| d.name == name)
}

impl Demo {
    pub fn scenario(&self) -> Result<Scenario, ScenarioError> {
        Scenario::from_toml(self.toml)
    }
}
