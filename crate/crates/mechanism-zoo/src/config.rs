use std::fmt;
use std::str::FromStr;

use scm_core::NoiseFamily;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZooError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    GlobalMonotone,
    ThresholdFlip,
    SmoothFlip,
    Bridge,
}

impl FamilyTag {
    pub const ALL: [FamilyTag; 4] =
        [FamilyTag::GlobalMonotone, FamilyTag::ThresholdFlip, FamilyTag::SmoothFlip, FamilyTag::Bridge];

    pub fn tag(self) -> &'static str {
        match self {
            FamilyTag::GlobalMonotone => "global_monotone",
            FamilyTag::ThresholdFlip => "threshold_flip",
            FamilyTag::SmoothFlip => "smooth_flip",
            FamilyTag::Bridge => "bridge",
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FamilyTag {
    type Err = ZooError;

    fn from_str(s: &str) -> Result<Self> {
        FamilyTag::ALL.into_iter().find(|t| t.tag() == s).ok_or_else(|| ZooError::UnknownFamily(s.to_string()))
    }
}

/// A mechanism family; `strength` is set exactly for bridge families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismFamily {
    pub tag: FamilyTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
}

impl MechanismFamily {
    pub fn new(tag: FamilyTag, strength: Option<f64>) -> Result<Self> {
        let fam = Self { tag, strength };
        fam.validate()?;
        Ok(fam)
    }

    pub fn global_monotone() -> Self {
        Self { tag: FamilyTag::GlobalMonotone, strength: None }
    }

    pub fn threshold_flip() -> Self {
        Self { tag: FamilyTag::ThresholdFlip, strength: None }
    }

    pub fn smooth_flip() -> Self {
        Self { tag: FamilyTag::SmoothFlip, strength: None }
    }

    pub fn bridge(strength: f64) -> Result<Self> {
        Self::new(FamilyTag::Bridge, Some(strength))
    }

    pub fn validate(&self) -> Result<()> {
        match (self.tag, self.strength) {
            (FamilyTag::Bridge, Some(s)) if (0.0..=1.0).contains(&s) => Ok(()),
            (FamilyTag::Bridge, Some(s)) => Err(ZooError::Config(format!("bridge strength {s} outside [0, 1]"))),
            (FamilyTag::Bridge, None) => Err(ZooError::Config("bridge family needs a strength".into())),
            (_, Some(_)) => Err(ZooError::Config(format!("{} takes no strength", self.tag))),
            (_, None) => Ok(()),
        }
    }

    /// Short label, e.g. `threshold_flip` or `bridge@0.3`.
    pub fn label(&self) -> String {
        match self.strength {
            Some(s) => format!("{}@{}", self.tag, s),
            None => self.tag.to_string(),
        }
    }
}

/// One synthetic benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: MechanismFamily,
    pub noise: NoiseFamily,
    pub d: usize,
    pub n_train: usize,
    pub seed: u64,
    pub n_test: usize,
    pub n_cf: usize,
}

impl SweepConfig {
    /// Config with the standard test and query sizes `max(1000, n/5)` and `max(500, n/10)`.
    pub fn new(family: MechanismFamily, noise: NoiseFamily, d: usize, n_train: usize, seed: u64) -> Result<Self> {
        let cfg =
            Self { family, noise, d, n_train, seed, n_test: (n_train / 5).max(1000), n_cf: (n_train / 10).max(500) };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if self.d < 2 {
            return Err(ZooError::Config(format!("d = {} < 2", self.d)));
        }
        if self.n_train < 100 {
            return Err(ZooError::Config(format!("n_train = {} < 100", self.n_train)));
        }
        if self.n_test == 0 || self.n_cf == 0 {
            return Err(ZooError::Config("empty test or query split".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_rule() {
        let c = SweepConfig::new(MechanismFamily::threshold_flip(), NoiseFamily::Gaussian, 3, 2000, 1).unwrap();
        assert_eq!((c.n_test, c.n_cf), (1000, 500));
        let c = SweepConfig::new(MechanismFamily::threshold_flip(), NoiseFamily::Gaussian, 3, 50_000, 1).unwrap();
        assert_eq!((c.n_test, c.n_cf), (10_000, 5000));
    }

    #[test]
    fn strength_only_for_bridge() {
        assert!(MechanismFamily::new(FamilyTag::Bridge, None).is_err());
        assert!(MechanismFamily::new(FamilyTag::SmoothFlip, Some(0.5)).is_err());
        assert!(MechanismFamily::bridge(1.2).is_err());
        assert_eq!(MechanismFamily::bridge(0.3).unwrap().label(), "bridge@0.3");
        assert!("zigzag".parse::<FamilyTag>().is_err());
    }
}
