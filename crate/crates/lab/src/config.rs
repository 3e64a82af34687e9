use std::fmt;
use std::str::FromStr;

use ftorus_core::lattice::{LengthFunction, Modulus};
use ftorus_core::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Intertwining,
    Rate,
    PsdAudit,
    Isometry,
    RationalFiber,
    Riesz,
    Multiplier,
    SmoothingTail,
    CoveringNet,
    BridgeReach,
    ModelSanity,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 11] = [
        ExperimentId::Intertwining,
        ExperimentId::Rate,
        ExperimentId::PsdAudit,
        ExperimentId::Isometry,
        ExperimentId::RationalFiber,
        ExperimentId::Riesz,
        ExperimentId::Multiplier,
        ExperimentId::SmoothingTail,
        ExperimentId::CoveringNet,
        ExperimentId::BridgeReach,
        ExperimentId::ModelSanity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Intertwining => "intertwining",
            ExperimentId::Rate => "rate",
            ExperimentId::PsdAudit => "psd-audit",
            ExperimentId::Isometry => "isometry",
            ExperimentId::RationalFiber => "rational-fiber",
            ExperimentId::Riesz => "riesz",
            ExperimentId::Multiplier => "multiplier",
            ExperimentId::SmoothingTail => "smoothing-tail",
            ExperimentId::CoveringNet => "covering-net",
            ExperimentId::BridgeReach => "bridge-reach",
            ExperimentId::ModelSanity => "model-sanity",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment id `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiChoice {
    Word,
    Heat,
    NaiveSquare,
}

impl PsiChoice {
    pub fn length(self, modulus: Modulus, d: usize) -> LengthFunction {
        match self {
            PsiChoice::Word => LengthFunction::word(modulus, d),
            PsiChoice::Heat => LengthFunction::heat(modulus, d),
            PsiChoice::NaiveSquare => LengthFunction::naive_square(modulus, d),
        }
    }
}

/// θ = p/m in lowest terms; (0, 1) is the commutative case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Theta {
    pub p: u64,
    pub m: u64,
}

impl Theta {
    pub const ZERO: Theta = Theta { p: 0, m: 1 };

    pub fn is_zero(self) -> bool {
        self.p == 0
    }
}

impl FromStr for Theta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("θ must be `0` or `p/m`, got `{s}`"));
        let (p, m) = match s.trim().split_once('/') {
            Some((p, m)) => (p.trim().parse::<u64>().map_err(|_| bad())?, m.trim().parse::<u64>().map_err(|_| bad())?),
            None => (s.trim().parse::<u64>().map_err(|_| bad())?, 1),
        };
        if m == 0 {
            return Err(bad());
        }
        let g = gcd(p % m, m);
        Ok(Theta { p: (p % m) / g, m: m / g })
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            f.write_str("0")
        } else {
            write!(f, "{}/{}", self.p, self.m)
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub psi: PsiChoice,
    pub theta: Theta,
    pub d: usize,
    /// Coefficient band of samples (net band for covering-net).
    pub band: u64,
    pub amps: Vec<usize>,
    pub ns: Vec<u64>,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub radius: f64,
    pub eps: f64,
    /// Smoothing cutoffs.
    pub ks: Vec<u64>,
    /// Oracle grid per dimension; `None` uses the oracle default.
    pub grid: Option<usize>,
    /// Band of the sampled ball elements in covering-net.
    pub sample_band: u64,
    /// Cap on lattice points enumerated by covering-net.
    pub budget: usize,
}

fn powers(from: u64, to: u64) -> Vec<u64> {
    std::iter::successors(Some(from), |n| Some(n * 2)).take_while(|&n| n <= to).collect()
}

impl ExperimentConfig {
    /// Configuration used by the acceptance suite.
    pub fn defaults(id: ExperimentId, seed: u64) -> Self {
        let base = ExperimentConfig {
            id,
            psi: PsiChoice::Heat,
            theta: Theta::ZERO,
            d: 1,
            band: 2,
            amps: vec![1],
            ns: vec![16],
            samples: 50,
            seed,
            tol: 1e-10,
            radius: 1.0,
            eps: 0.25,
            ks: vec![2],
            grid: None,
            sample_band: 8,
            budget: 100_000,
        };
        match id {
            ExperimentId::Intertwining => ExperimentConfig { band: 4, ns: vec![16, 32], ..base },
            ExperimentId::Rate => ExperimentConfig {
                psi: PsiChoice::Word,
                band: 1,
                ns: powers(16, 1024),
                samples: 1,
                tol: 1e-12,
                ..base
            },
            ExperimentId::PsdAudit => ExperimentConfig { ns: (4..=64).collect(), ..base },
            ExperimentId::Isometry => ExperimentConfig {
                d: 2,
                amps: vec![1, 2],
                ns: powers(16, 256),
                samples: 100,
                tol: 0.05,
                grid: Some(512),
                ..base
            },
            ExperimentId::RationalFiber => ExperimentConfig {
                theta: Theta { p: 1, m: 2 },
                d: 2,
                band: 1,
                ns: powers(4, 128),
                samples: 1,
                tol: 0.05,
                ..base
            },
            ExperimentId::Riesz => ExperimentConfig { band: 3, amps: vec![1, 2], samples: 200, ..base },
            ExperimentId::Multiplier => ExperimentConfig {
                d: 2,
                band: 3,
                amps: vec![2],
                ns: vec![32],
                samples: 100,
                ..base
            },
            ExperimentId::SmoothingTail => ExperimentConfig {
                d: 2,
                band: 8,
                ns: vec![64],
                samples: 200,
                ks: vec![2, 4, 8],
                ..base
            },
            ExperimentId::CoveringNet => ExperimentConfig {
                psi: PsiChoice::Word,
                band: 1,
                ns: vec![64],
                samples: 500,
                ks: vec![1],
                ..base
            },
            ExperimentId::BridgeReach => ExperimentConfig {
                psi: PsiChoice::Word,
                theta: Theta { p: 1, m: 2 },
                d: 2,
                ns: powers(8, 128),
                samples: 20,
                tol: 0.1,
                eps: 0.01,
                ..base
            },
            ExperimentId::ModelSanity => ExperimentConfig { ns: powers(4, 256), tol: 1e-12, ..base },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("{}: {msg}", self.id)));
        if self.ns.is_empty() {
            return bad("empty n schedule".into());
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n schedule {:?} is not strictly increasing", self.ns));
        }
        if !self.theta.is_zero() {
            let admissible: Vec<u64> = ftorus_core::model::admissible_sizes(self.theta.m)
                .take_while(|&s| s <= *self.ns.last().expect("nonempty"))
                .collect();
            if let Some(n) = self.ns.iter().find(|n| !admissible.contains(n)) {
                return bad(format!("n = {n} is not an admissible size for θ = {}", self.theta));
            }
        }
        if self.amps.is_empty() || self.amps.contains(&0) {
            return bad("amplification levels must be positive".into());
        }
        if self.d == 0 || self.d > 2 {
            return bad(format!("d = {} is outside {{1, 2}}", self.d));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("ε = {} must lie in (0, 1)", self.eps));
        }
        if !(self.radius >= 0.0) || !(self.tol >= 0.0) {
            return bad("radius and tolerance must be nonnegative".into());
        }
        Ok(())
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self> {
        if let Some(v) = o.psi {
            self.psi = v;
        }
        if let Some(v) = &o.theta {
            self.theta = v.parse()?;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = &o.$f { self.$f = v.clone(); } )* };
        }
        take!(d, band, amps, ns, samples, tol, radius, eps, ks, sample_band, budget);
        if let Some(g) = o.grid {
            self.grid = Some(g);
        }
        self.validate()?;
        Ok(self)
    }
}

/// Per-run fields a manifest may set; anything absent keeps the default.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub psi: Option<PsiChoice>,
    pub theta: Option<String>,
    pub d: Option<usize>,
    pub band: Option<u64>,
    pub amps: Option<Vec<usize>>,
    pub ns: Option<Vec<u64>>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub radius: Option<f64>,
    pub eps: Option<f64>,
    pub ks: Option<Vec<u64>>,
    pub grid: Option<usize>,
    pub sample_band: Option<u64>,
    pub budget: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for id in ExperimentId::ALL {
            ExperimentConfig::defaults(id, 1).validate().unwrap();
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("nope".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn theta_parsing() {
        assert_eq!("2/4".parse::<Theta>().unwrap(), Theta { p: 1, m: 2 });
        assert_eq!("0".parse::<Theta>().unwrap(), Theta::ZERO);
        assert!("1/0".parse::<Theta>().is_err());
    }

    #[test]
    fn schedule_rules() {
        let cfg = ExperimentConfig::defaults(ExperimentId::Rate, 1);
        let o = Overrides { ns: Some(vec![32, 16]), ..Default::default() };
        assert!(cfg.clone().apply(&o).is_err());
        let fiber = ExperimentConfig::defaults(ExperimentId::RationalFiber, 1);
        let o = Overrides { ns: Some(vec![4, 12]), ..Default::default() };
        assert!(fiber.apply(&o).is_err());
    }
}
