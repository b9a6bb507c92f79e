//! Scenario files (TOML, or JSON by extension) and the short `--field` /
//! `--bc` argument syntax.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ClassifyOptions, Scenario};
use crate::eigen::EigenResolution;
use crate::error::{Error, Result};
use crate::fields::{BoundaryOp, CompetitionParams, InitialData, InitialShape, PeriodicField, Preset, Problem, Table};
use crate::free_boundary::{CertificateResolution, FrontResolution};
use crate::periodic::MonotoneOptions;
use crate::speed::SemiWaveResolution;

/// A coefficient: an analytic preset or a CSV table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Table { table: PathBuf },
    Preset(Preset),
}

impl FieldSpec {
    /// Table paths are taken relative to `base`.
    pub fn build(&self, period: f64, base: &Path) -> Result<PeriodicField> {
        match self {
            FieldSpec::Preset(p) => PeriodicField::preset(p.clone(), period),
            FieldSpec::Table { table } => PeriodicField::table(Table::from_csv(&base.join(table))?, period),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificateConfig {
    pub delta: f64,
    pub sigma: f64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self { delta: 0.05, sigma: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticalMuConfig {
    pub lo: f64,
    pub hi: f64,
    /// Relative width of the final bracket.
    pub tolerance: f64,
}

impl Default for CriticalMuConfig {
    fn default() -> Self {
        Self {
            lo: 1e-3,
            hi: 1e2,
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Mu,
    S0,
    K,
    H,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Mu => "mu",
            SweepParam::S0 => "s0",
            SweepParam::K => "k",
            SweepParam::H => "h",
        }
    }

    pub fn apply(self, params: &mut CompetitionParams, value: f64) {
        match self {
            SweepParam::Mu => params.mu = value,
            SweepParam::S0 => params.s0 = value,
            SweepParam::K => params.k = value,
            SweepParam::H => params.h = value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// Geometric spacing.
    #[serde(default)]
    pub log: bool,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| {
                let f = i as f64 / (self.n - 1) as f64;
                if self.log {
                    self.lo * (self.hi / self.lo).powf(f)
                } else {
                    self.lo + (self.hi - self.lo) * f
                }
            })
            .collect()
    }
}

/// Largest number of sweep cells.
pub const MAX_CELLS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub x: Axis,
    pub y: Axis,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        for axis in [self.x, self.y] {
            if axis.n == 0 || !(axis.lo.is_finite() && axis.hi.is_finite()) || (axis.log && !(axis.lo > 0.0 && axis.hi > 0.0)) {
                return Err(Error::Config(format!("bad sweep axis for {}", axis.param.name())));
            }
        }
        if self.x.param == self.y.param {
            return Err(Error::Config("sweep axes must vary different parameters".into()));
        }
        if self.x.n * self.y.n > MAX_CELLS {
            return Err(Error::Config(format!(
                "sweep has {} cells; at most {MAX_CELLS} allowed",
                self.x.n * self.y.n
            )));
        }
        Ok(())
    }
}

/// One experiment, as read from disk. Every physical quantity has an explicit
/// key; everything except the problem, coefficients and parameters has a
/// default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub problem: Problem,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Half-line truncation for the single-front problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    pub a: FieldSpec,
    pub b: FieldSpec,
    pub params: CompetitionParams,
    /// Defaults to unit bumps (coupled) or a unit bump and a unit plateau
    /// (single front).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitialData>,
    #[serde(default)]
    pub resolution: FrontResolution,
    #[serde(default = "default_eigen")]
    pub eigen: EigenResolution,
    #[serde(default)]
    pub classify: ClassifyOptions,
    #[serde(default)]
    pub certificate: CertificateConfig,
    #[serde(default)]
    pub critical_mu: CriticalMuConfig,
    #[serde(default)]
    pub semiwave: SemiWaveResolution,
    #[serde(default)]
    pub monotone: MonotoneOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    /// Directory table paths are resolved against; set by [`load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_period() -> f64 {
    1.0
}

fn default_t_end() -> f64 {
    200.0
}

fn default_eigen() -> EigenResolution {
    EigenResolution::new(128, 128)
}

/// Unit bump for `u`; for `v` a unit bump (coupled) or plateau (single).
pub fn default_init(problem: Problem) -> InitialData {
    match problem {
        Problem::Coupled => InitialData::bumps(1.0, 1.0),
        Problem::Single => InitialData {
            u0: InitialShape::Bump { amplitude: 1.0 },
            v0: InitialShape::Plateau {
                amplitude: 1.0,
                width: 1.0,
            },
        },
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a `.json` file as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn init(&self) -> InitialData {
        self.init.clone().unwrap_or_else(|| default_init(self.problem))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0 && self.t_end > 0.0) {
            return Err(Error::Config("period and t_end must be positive".into()));
        }
        self.params.validate()?;
        self.init().validate(&self.params, self.problem)?;
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        Ok(())
    }

    pub fn fields(&self) -> Result<(PeriodicField, PeriodicField)> {
        Ok((self.a.build(self.period, &self.base_dir)?, self.b.build(self.period, &self.base_dir)?))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let (a, b) = self.fields()?;
        let mut sc = Scenario::new(self.problem, a, b, self.params.clone(), self.init());
        sc.t_end = self.t_end;
        sc.resolution = self.resolution;
        sc.length = self.length;
        sc.eigen = self.eigen;
        sc.classify = self.classify;
        Ok(sc)
    }

    pub fn certificate_resolution(&self) -> CertificateResolution {
        CertificateResolution {
            eigen: self.eigen,
            ..CertificateResolution::default()
        }
    }
}

/// `const:v`, `seasonal:mean,amp[,phase]`, `separable:near,far,width,amp`,
/// `sign-changing:kappa,c,p`.
pub fn parse_field(spec: &str) -> Result<Preset> {
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {a:?} in field {spec:?}"))))
            .collect::<Result<_>>()?
    };
    let want = |n: &[usize]| -> Result<()> {
        if n.contains(&nums.len()) {
            Ok(())
        } else {
            Err(Error::Config(format!("field {spec:?} expects {n:?} numbers")))
        }
    };
    match kind {
        "const" | "constant" => {
            want(&[1])?;
            Ok(Preset::Constant { value: nums[0] })
        }
        "seasonal" => {
            want(&[2, 3])?;
            Ok(Preset::Seasonal {
                mean: nums[0],
                amplitude: nums[1],
                phase: nums.get(2).copied().unwrap_or(0.0),
            })
        }
        "separable" => {
            want(&[4])?;
            Ok(Preset::Separable {
                near: nums[0],
                far: nums[1],
                width: nums[2],
                amplitude: nums[3],
            })
        }
        "sign-changing" => {
            want(&[3])?;
            Ok(Preset::SignChanging {
                kappa: nums[0],
                c: nums[1],
                p: nums[2],
            })
        }
        _ => Err(Error::Config(format!("unknown field kind {kind:?}"))),
    }
}

/// `dirichlet`, `neumann` or `robin:alpha`.
pub fn parse_bc(spec: &str) -> Result<BoundaryOp> {
    match spec.split_once(':') {
        None if spec == "dirichlet" => Ok(BoundaryOp::dirichlet()),
        None if spec == "neumann" => Ok(BoundaryOp::neumann()),
        Some(("robin", a)) => {
            let alpha = a.parse::<f64>().map_err(|_| Error::Config(format!("bad robin weight {a:?}")))?;
            BoundaryOp::new(alpha, 1.0 - alpha)
        }
        _ => Err(Error::Config(format!("unknown boundary condition {spec:?}"))),
    }
}
