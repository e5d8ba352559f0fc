//! Experiment configuration, read from TOML. Unknown keys are rejected at
//! every level so a typo never silently falls back to a default.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    FillSweep,
    HardSphere,
    Pipeline,
    CoverAudit,
    WhitneyAudit,
}

impl Kind {
    pub const ALL: [Kind; 5] = [Kind::FillSweep, Kind::HardSphere, Kind::Pipeline, Kind::CoverAudit, Kind::WhitneyAudit];

    pub fn name(self) -> &'static str {
        match self {
            Kind::FillSweep => "fill-sweep",
            Kind::HardSphere => "hard-sphere",
            Kind::Pipeline => "pipeline",
            Kind::CoverAudit => "cover-audit",
            Kind::WhitneyAudit => "whitney-audit",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Kind::FillSweep => "minimal fillings of a family of cycles, with a log-log exponent fit",
            Kind::HardSphere => "ambient and horosphere fillings of the hard spheres r = 1, 2, ...",
            Kind::Pipeline => "horosphere fillings of vertex pairs through the cover/nerve pipeline",
            Kind::CoverAudit => "cover invariants, nerve map g and vertex map h0 on one space",
            Kind::WhitneyAudit => "dyadic Whitney decompositions of the cubes [0,L]^(k+1)",
        }
    }

    pub fn params(self) -> &'static str {
        match self {
            Kind::FillSweep => {
                "[fill_sweep]
  family      \"grid-squares\" | \"flat-loops\" | \"random-cycles\"
  sizes       grid-squares: square side lengths, e.g. [2, 3, 4]
  boxes       flat-loops: [[lower...], [upper...]] pairs of level bounds
  count, k, budget   random-cycles: how many, cycle dimension, mass budget (\"p/q\")
  method      \"lp\" (default) | \"oracle\" | \"cone\"
  exponent    optional [lo, hi] the fitted exponent must lie in
  min_r2      optional lower bound on the fit's R^2
  min_span    optional lower bound on max/min input mass
  min_points  optional lower bound on the number of fitted instances
  exact_square  optional; every grid square of side l must fill with mass l^2
  cross_check_oracle  optional; re-solve every instance by exhaustive search and require equal masses"
            }
            Kind::HardSphere => {
                "[hard_sphere]
  radii           e.g. [1, 2, 3, 4]
  max_x_exponent  ambient filling mass must grow at most like r^this
  min_ratio       successive horosphere filling ratios must be at least this and nondecreasing"
            }
            Kind::Pipeline => {
                "[pipeline]   (randomized: needs a seed)
  depths      tree depths to run at; the space's depth is ignored
  pairs       random horosphere vertex pairs per depth
  eps         cover scale (\"p/q\")
  stability   largest allowed ratio between measured constants across depths"
            }
            Kind::CoverAudit => {
                "[cover_audit]
  eps         cover scale (\"p/q\")
  subset      grid: \"side\" (the face x_0 = 0); horosphere: \"level\" (vertices at the space's level)
  max_points  metric size cap"
            }
            Kind::WhitneyAudit => {
                "[whitney_audit]   (no [space] section)
  sides       box side lengths L
  dims        k, for cubes of dimension k+1"
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub kind: Kind,
    pub seed: Option<u64>,
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub output: Output,
    pub fill_sweep: Option<FillSweep>,
    pub hard_sphere: Option<HardSphere>,
    pub pipeline: Option<Pipeline>,
    pub cover_audit: Option<CoverAudit>,
    pub whitney_audit: Option<WhitneyAudit>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceSpec {
    Grid {
        dims: usize,
        side: usize,
    },
    Horosphere {
        n: usize,
        depth: usize,
        #[serde(default = "two")]
        branching: usize,
        c0: Option<String>,
        #[serde(default)]
        slopes: Option<Vec<String>>,
        #[serde(default = "zero")]
        level: String,
    },
}

fn two() -> usize {
    2
}

fn zero() -> String {
    "0".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    #[serde(default = "Caps::default_cells")]
    pub max_cells: usize,
    #[serde(default = "Caps::default_lp")]
    pub max_lp_iters: usize,
    #[serde(default = "Caps::default_time")]
    pub time_budget_s: u64,
}

impl Caps {
    fn default_cells() -> usize {
        5_000_000
    }
    fn default_lp() -> usize {
        50_000
    }
    fn default_time() -> u64 {
        3600
    }
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_cells: Self::default_cells(), max_lp_iters: Self::default_lp(), time_budget_s: Self::default_time() }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Lp,
    Oracle,
    Cone,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    GridSquares,
    FlatLoops,
    RandomCycles,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FillSweep {
    pub family: Family,
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub boxes: Vec<[Vec<i64>; 2]>,
    pub count: Option<usize>,
    pub k: Option<usize>,
    pub budget: Option<String>,
    #[serde(default)]
    pub method: Method,
    pub exponent: Option<[f64; 2]>,
    pub min_r2: Option<f64>,
    pub min_span: Option<f64>,
    pub min_points: Option<usize>,
    #[serde(default)]
    pub exact_square: bool,
    #[serde(default)]
    pub cross_check_oracle: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardSphere {
    pub radii: Vec<usize>,
    pub max_x_exponent: f64,
    pub min_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pipeline {
    pub depths: Vec<usize>,
    pub pairs: usize,
    #[serde(default = "one")]
    pub eps: String,
    pub stability: f64,
}

fn one() -> String {
    "1".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverAudit {
    #[serde(default = "one")]
    pub eps: String,
    pub subset: String,
    #[serde(default = "CoverAudit::default_points")]
    pub max_points: usize,
}

impl CoverAudit {
    fn default_points() -> usize {
        20_000
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhitneyAudit {
    pub sides: Vec<u64>,
    pub dims: Vec<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Schema(String),
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let c: Config = toml::from_str(text).map_err(|e| ConfigError::Schema(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Schema(m));
        if self.caps.max_cells == 0 || self.caps.max_lp_iters == 0 || self.caps.time_budget_s == 0 {
            return bad("caps must be positive".into());
        }
        let section = match self.kind {
            Kind::FillSweep => self.fill_sweep.is_some(),
            Kind::HardSphere => self.hard_sphere.is_some(),
            Kind::Pipeline => self.pipeline.is_some(),
            Kind::CoverAudit => self.cover_audit.is_some(),
            Kind::WhitneyAudit => self.whitney_audit.is_some(),
        };
        if !section {
            return bad(format!("kind {} needs a [{}] section", self.kind.name(), self.kind.name().replace('-', "_")));
        }
        let others = [
            (Kind::FillSweep, self.fill_sweep.is_some()),
            (Kind::HardSphere, self.hard_sphere.is_some()),
            (Kind::Pipeline, self.pipeline.is_some()),
            (Kind::CoverAudit, self.cover_audit.is_some()),
            (Kind::WhitneyAudit, self.whitney_audit.is_some()),
        ];
        if let Some((k, _)) = others.iter().find(|(k, set)| *set && *k != self.kind) {
            return bad(format!("section [{}] does not belong to kind {}", k.name().replace('-', "_"), self.kind.name()));
        }
        if self.kind != Kind::WhitneyAudit && self.space.is_none() {
            return bad(format!("kind {} needs a [space] section", self.kind.name()));
        }
        if self.randomized() && self.seed.is_none() {
            return bad(format!("kind {} is randomized and needs a seed", self.kind.name()));
        }
        if let Some(f) = &self.fill_sweep {
            match f.family {
                Family::GridSquares if f.sizes.is_empty() => return bad("grid-squares needs sizes".into()),
                Family::FlatLoops if f.boxes.is_empty() => return bad("flat-loops needs boxes".into()),
                Family::RandomCycles if f.count.is_none() || f.k.is_none() || f.budget.is_none() => {
                    return bad("random-cycles needs count, k and budget".into())
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn randomized(&self) -> bool {
        match self.kind {
            Kind::Pipeline => true,
            Kind::FillSweep => self.fill_sweep.as_ref().is_some_and(|f| f.family == Family::RandomCycles),
            _ => false,
        }
    }
}
