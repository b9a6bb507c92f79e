//! Time-periodic coefficients, boundary operators and the competition
//! parameter set.
//!
//! A [`PeriodicField`] is a `T`-periodic growth rate `c(t, x)` on
//! `[0, inf) x [0, inf)`. Fields come from a closed set of presets, from a
//! table, or are derived from another field by subtracting a multiple of a
//! periodic profile (this is how the monotone iteration forms `b - h U`).
//!
//! Presets may carry a [`TailSpec`]: the power-law envelopes
//! `c_inf(t) <= liminf c/x^r` and `limsup c/x^r <= c^inf(t)` that define the
//! class of coefficients for which half-line periodic problems are solvable.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodic::PeriodicProfile;

/// Number of equispaced samples on `[0, T]` used for every envelope extremum.
pub const ENVELOPE_SAMPLES: usize = 1024;

/// Accuracy with which a preset's declared `x_tail` reaches its envelopes.
pub const TAIL_ACCURACY: f64 = 1e-6;

/// Robin operator `B[w] = alpha w - beta w_x` at `x = 0`, `alpha + beta = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBoundaryOp", into = "RawBoundaryOp")]
pub struct BoundaryOp {
    alpha: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBoundaryOp {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawBoundaryOp> for BoundaryOp {
    type Error = Error;
    fn try_from(raw: RawBoundaryOp) -> Result<Self> {
        BoundaryOp::new(raw.alpha, raw.beta)
    }
}

impl From<BoundaryOp> for RawBoundaryOp {
    fn from(op: BoundaryOp) -> Self {
        RawBoundaryOp {
            alpha: op.alpha,
            beta: op.beta,
        }
    }
}

impl BoundaryOp {
    /// Validates `alpha, beta >= 0` and `alpha + beta = 1` (to 1e-12). The
    /// stored `beta` is recomputed as `1 - alpha`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0) || (alpha + beta - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "boundary weights must be nonnegative with alpha + beta = 1, got ({alpha}, {beta})"
            )));
        }
        Ok(Self::robin(alpha))
    }

    pub fn dirichlet() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
        }
    }

    pub fn neumann() -> Self {
        Self {
            alpha: 0.0,
            beta: 1.0,
        }
    }

    /// `alpha` is clamped to `[0, 1]`.
    pub fn robin(alpha: f64) -> Self {
        let alpha = alpha.clamp(0.0, 1.0);
        Self {
            alpha,
            beta: 1.0 - alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `alpha w(0) - beta w'(0)`.
    pub fn apply(&self, value: f64, derivative: f64) -> f64 {
        self.alpha * value - self.beta * derivative
    }
}

/// A `T`-periodic function of time of the form `mean + amp sin(2 pi t / T + phase)`
/// or a sampled periodic function with linear interpolation.
#[derive(Clone, Debug, PartialEq)]
pub enum Envelope {
    Sinusoid { mean: f64, amp: f64, phase: f64 },
    Sampled(Arc<Vec<f64>>),
}

impl Envelope {
    pub fn constant(value: f64) -> Self {
        Envelope::Sinusoid {
            mean: value,
            amp: 0.0,
            phase: 0.0,
        }
    }

    pub fn eval(&self, t: f64, period: f64) -> f64 {
        let t = t.rem_euclid(period);
        match self {
            Envelope::Sinusoid { mean, amp, phase } => {
                if *amp == 0.0 {
                    *mean
                } else {
                    mean + amp * (2.0 * PI * t / period + phase).sin()
                }
            }
            Envelope::Sampled(samples) => {
                let n = samples.len();
                let pos = t / period * n as f64;
                let i = (pos.floor() as usize).min(n - 1);
                let frac = pos - i as f64;
                samples[i] * (1.0 - frac) + samples[(i + 1) % n] * frac
            }
        }
    }

    /// Minimum over [`ENVELOPE_SAMPLES`] equispaced points of `[0, T)`.
    pub fn sampled_min(&self, period: f64) -> f64 {
        sample_times(period)
            .map(|t| self.eval(t, period))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sampled_max(&self, period: f64) -> f64 {
        sample_times(period)
            .map(|t| self.eval(t, period))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sampled_mean(&self, period: f64) -> f64 {
        sample_times(period).map(|t| self.eval(t, period)).sum::<f64>() / ENVELOPE_SAMPLES as f64
    }

    fn sample<F: Fn(f64) -> f64>(period: f64, f: F) -> Self {
        Envelope::Sampled(Arc::new(sample_times(period).map(f).collect()))
    }
}

fn sample_times(period: f64) -> impl Iterator<Item = f64> {
    (0..ENVELOPE_SAMPLES).map(move |i| period * i as f64 / ENVELOPE_SAMPLES as f64)
}

/// Tail growth condition: `c(t, x) >= varsigma x^r` on every window `[x_n, m x_n]`
/// with `x_n = seed * m^n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionA {
    pub varsigma: f64,
    pub m: f64,
    pub seed: f64,
}

impl ConditionA {
    pub fn window(&self, n: u32) -> (f64, f64) {
        let x = self.seed * self.m.powi(n as i32);
        (x, self.m * x)
    }
}

/// Power-law tail metadata: membership in the class `C_r(T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TailSpec {
    pub r: f64,
    pub lower: Envelope,
    pub upper: Envelope,
    pub condition_a: ConditionA,
    /// Beyond this abscissa the field sits within [`TAIL_ACCURACY`] of its envelopes.
    pub x_tail: f64,
}

impl TailSpec {
    pub fn validate(&self, period: f64) -> Result<()> {
        if !(self.r > -2.0 && self.r <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tail exponent r = {} outside (-2, 0]",
                self.r
            )));
        }
        if self.lower.sampled_min(period) <= 0.0 {
            return Err(Error::InvalidParameter(
                "lower envelope must be positive".into(),
            ));
        }
        let worst = sample_times(period)
            .map(|t| self.lower.eval(t, period) - self.upper.eval(t, period))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > 1e-12 {
            return Err(Error::InvalidParameter(
                "lower envelope exceeds upper envelope".into(),
            ));
        }
        Ok(())
    }
}

/// The closed set of analytic coefficient presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    /// `value`
    Constant { value: f64 },
    /// `mean + amplitude sin(2 pi t / T + phase)`
    Seasonal {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `a0(x) (1 + amplitude sin(2 pi t / T))` with `a0(x) = far + (near - far) exp(-x / width)`
    Separable {
        near: f64,
        far: f64,
        width: f64,
        amplitude: f64,
    },
    /// `-kappa + c / (1 + x)^p`
    SignChanging { kappa: f64, c: f64, p: f64 },
    /// Pointwise sum of presets.
    Sum { terms: Vec<Preset> },
}

/// Far-field behaviour `c(t, x) ~ (mean + amp sin(..)) x^r`.
#[derive(Clone, Copy, Debug)]
struct FarField {
    r: f64,
    mean: f64,
    amp: f64,
    phase: f64,
}

impl Preset {
    fn eval(&self, t: f64, x: f64, period: f64) -> f64 {
        match self {
            Preset::Constant { value } => *value,
            Preset::Seasonal {
                mean,
                amplitude,
                phase,
            } => mean + amplitude * (2.0 * PI * t / period + phase).sin(),
            Preset::Separable {
                near,
                far,
                width,
                amplitude,
            } => {
                let a0 = far + (near - far) * (-x / width).exp();
                a0 * (1.0 + amplitude * (2.0 * PI * t / period).sin())
            }
            Preset::SignChanging { kappa, c, p } => -kappa + c / (1.0 + x).powf(*p),
            Preset::Sum { terms } => terms.iter().map(|p| p.eval(t, x, period)).sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        match self {
            Preset::Separable { width, .. } if !(*width > 0.0) => bad("separable width must be positive"),
            Preset::SignChanging { p, .. } if !(*p >= 0.0) => bad("sign_changing exponent p must be >= 0"),
            Preset::Sum { terms } if terms.is_empty() => bad("sum needs at least one term"),
            Preset::Sum { terms } => terms.iter().try_for_each(Preset::validate),
            _ => Ok(()),
        }
    }

    fn far_field(&self) -> Option<FarField> {
        let ff = |r, mean, amp, phase| {
            Some(FarField {
                r,
                mean,
                amp,
                phase,
            })
        };
        match self {
            Preset::Constant { value } => ff(0.0, *value, 0.0, 0.0),
            Preset::Seasonal {
                mean,
                amplitude,
                phase,
            } => ff(0.0, *mean, *amplitude, *phase),
            Preset::Separable { far, amplitude, .. } => ff(0.0, *far, far * amplitude, 0.0),
            Preset::SignChanging { kappa, c, p } => {
                if *p == 0.0 {
                    ff(0.0, c - kappa, 0.0, 0.0)
                } else if *kappa != 0.0 {
                    ff(0.0, -kappa, 0.0, 0.0)
                } else if *p < 2.0 {
                    ff(-p, *c, 0.0, 0.0)
                } else {
                    None
                }
            }
            Preset::Sum { terms } => {
                let parts: Vec<FarField> = terms.iter().map(Preset::far_field).collect::<Option<_>>()?;
                let r = parts.iter().map(|f| f.r).fold(f64::NEG_INFINITY, f64::max);
                let (mut mean, mut s, mut c) = (0.0, 0.0, 0.0);
                for f in parts.iter().filter(|f| f.r == r) {
                    mean += f.mean;
                    s += f.amp * f.phase.cos();
                    c += f.amp * f.phase.sin();
                }
                ff(r, mean, s.hypot(c), c.atan2(s))
            }
        }
    }

    /// Abscissa beyond which the preset is within `eps` of its far field
    /// (relative to `x^r`).
    fn x_tail(&self, eps: f64) -> f64 {
        match self {
            Preset::Constant { .. } | Preset::Seasonal { .. } => 0.0,
            Preset::Separable {
                near,
                far,
                width,
                amplitude,
            } => {
                let scale = (near - far).abs() * (1.0 + amplitude.abs());
                if scale <= eps {
                    0.0
                } else {
                    width * (scale / eps).ln()
                }
            }
            Preset::SignChanging { kappa, c, p } => {
                if *p == 0.0 || *c == 0.0 {
                    0.0
                } else if *kappa != 0.0 {
                    ((c.abs() / eps).powf(1.0 / p) - 1.0).max(0.0)
                } else {
                    c.abs() * p / eps
                }
            }
            Preset::Sum { terms } => terms.iter().map(|p| p.x_tail(eps)).fold(0.0, f64::max),
        }
    }

    fn tail(&self, period: f64) -> Option<TailSpec> {
        let far = self.far_field()?;
        if !(far.r > -2.0 && far.r <= 0.0) {
            return None;
        }
        let envelope = Envelope::Sinusoid {
            mean: far.mean,
            amp: far.amp,
            phase: far.phase,
        };
        let low = envelope.sampled_min(period);
        if low <= TAIL_ACCURACY {
            return None;
        }
        let x_tail = self.x_tail(TAIL_ACCURACY);
        Some(TailSpec {
            r: far.r,
            lower: envelope.clone(),
            upper: envelope,
            condition_a: ConditionA {
                varsigma: low - TAIL_ACCURACY,
                m: 2.0,
                seed: x_tail.max(1.0),
            },
            x_tail,
        })
    }
}

/// Rectangular table `values[i][j] = c(times[i], xs[j])` with bilinear
/// interpolation; periodic in `t`, clamped in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Table {
    fn validate(&self, period: f64) -> Result<()> {
        let strictly_increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if self.times.len() < 2 || self.xs.len() < 2 {
            return Err(Error::Config("table needs at least 2 times and 2 abscissae".into()));
        }
        if !strictly_increasing(&self.times) || !strictly_increasing(&self.xs) {
            return Err(Error::Config("table axes must be strictly increasing".into()));
        }
        if self.times[0] < 0.0 || *self.times.last().unwrap() > period + 1e-12 {
            return Err(Error::Config(format!("table times must lie in [0, {period}]")));
        }
        if self.values.len() != self.times.len() || self.values.iter().any(|r| r.len() != self.xs.len()) {
            return Err(Error::Config("table values do not match its axes".into()));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("table contains non-finite values".into()));
        }
        Ok(())
    }

    fn eval(&self, t: f64, x: f64, period: f64) -> f64 {
        let (j0, j1, fx) = bracket_clamped(&self.xs, x);
        // Time axis wraps: the segment after the last sample joins the first one.
        let nt = self.times.len();
        let (i0, i1, ft) = if t < self.times[0] || t >= self.times[nt - 1] {
            let t_last = self.times[nt - 1];
            let gap = self.times[0] + period - t_last;
            let shifted = if t >= t_last { t - t_last } else { t + period - t_last };
            if gap <= 0.0 {
                (nt - 1, nt - 1, 0.0)
            } else {
                (nt - 1, 0, (shifted / gap).clamp(0.0, 1.0))
            }
        } else {
            bracket_clamped(&self.times, t)
        };
        let row = |i: usize| self.values[i][j0] * (1.0 - fx) + self.values[i][j1] * fx;
        row(i0) * (1.0 - ft) + row(i1) * ft
    }

    /// Reads either a long table with header `t,x,value` or a grid whose
    /// header row is a corner label followed by the x values and whose rows
    /// start with the time.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
        let rows: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
        Self::from_records(&rows)
    }

    fn from_records(rows: &[csv::StringRecord]) -> Result<Self> {
        let header = rows.first().ok_or_else(|| Error::Config("empty table".into()))?;
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("not a number in table: {s:?}")))
        };
        let names: Vec<&str> = header.iter().collect();
        if names == ["t", "x", "value"] {
            let mut triples = Vec::with_capacity(rows.len() - 1);
            for rec in &rows[1..] {
                if rec.len() != 3 {
                    return Err(Error::Config("long table rows need 3 columns".into()));
                }
                triples.push((parse(&rec[0])?, parse(&rec[1])?, parse(&rec[2])?));
            }
            let mut times: Vec<f64> = triples.iter().map(|p| p.0).collect();
            let mut xs: Vec<f64> = triples.iter().map(|p| p.1).collect();
            for axis in [&mut times, &mut xs] {
                axis.sort_by(f64::total_cmp);
                axis.dedup();
            }
            let mut values = vec![vec![f64::NAN; xs.len()]; times.len()];
            for (t, x, v) in triples {
                let i = times.partition_point(|&s| s < t);
                let j = xs.partition_point(|&s| s < x);
                values[i][j] = v;
            }
            if values.iter().flatten().any(|v| v.is_nan()) {
                return Err(Error::Config("long table does not cover a full grid".into()));
            }
            Ok(Table { times, xs, values })
        } else {
            let xs = header.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?;
            let mut times = Vec::new();
            let mut values = Vec::new();
            for rec in &rows[1..] {
                let mut it = rec.iter();
                times.push(parse(it.next().unwrap_or(""))?);
                values.push(it.map(parse).collect::<Result<Vec<_>>>()?);
            }
            Ok(Table { times, xs, values })
        }
    }
}

fn bracket_clamped(axis: &[f64], v: f64) -> (usize, usize, f64) {
    let n = axis.len();
    if v <= axis[0] {
        return (0, 0, 0.0);
    }
    if v >= axis[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let j = axis.partition_point(|&a| a <= v) - 1;
    let f = (v - axis[j]) / (axis[j + 1] - axis[j]);
    (j, j + 1, f)
}

type Evaluator = dyn Fn(f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum FieldKind {
    Preset(Preset),
    Table(Arc<Table>),
    /// `base - coef * profile`
    Reduced {
        base: Arc<PeriodicField>,
        coef: f64,
        profile: Arc<PeriodicProfile>,
    },
    Custom(Arc<Evaluator>),
}

/// A `T`-periodic coefficient `c(t, x)`.
#[derive(Clone)]
pub struct PeriodicField {
    period: f64,
    kind: FieldKind,
    tail: Option<TailSpec>,
    /// Hölder exponent of the coefficient; informational only.
    pub holder: f64,
}

impl fmt::Debug for PeriodicField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            FieldKind::Preset(p) => format!("{p:?}"),
            FieldKind::Table(t) => format!("Table({}x{})", t.times.len(), t.xs.len()),
            FieldKind::Reduced { coef, .. } => format!("Reduced(coef = {coef})"),
            FieldKind::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("PeriodicField")
            .field("period", &self.period)
            .field("kind", &kind)
            .field("has_tail", &self.tail.is_some())
            .finish()
    }
}

fn check_period(period: f64) -> Result<()> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
    }
    Ok(())
}

impl PeriodicField {
    pub fn preset(preset: Preset, period: f64) -> Result<Self> {
        check_period(period)?;
        preset.validate()?;
        let tail = preset.tail(period);
        Ok(Self {
            period,
            kind: FieldKind::Preset(preset),
            tail,
            holder: 0.5,
        })
    }

    pub fn constant(value: f64, period: f64) -> Self {
        Self::preset(Preset::Constant { value }, period).expect("constant preset is valid")
    }

    /// `mean + amplitude sin(2 pi t / T)`.
    pub fn seasonal(mean: f64, amplitude: f64, period: f64) -> Self {
        Self::preset(
            Preset::Seasonal {
                mean,
                amplitude,
                phase: 0.0,
            },
            period,
        )
        .expect("seasonal preset is valid")
    }

    /// Tabulated fields never carry tail metadata.
    pub fn table(table: Table, period: f64) -> Result<Self> {
        check_period(period)?;
        table.validate(period)?;
        Ok(Self {
            period,
            kind: FieldKind::Table(Arc::new(table)),
            tail: None,
            holder: 0.5,
        })
    }

    /// Wraps an arbitrary evaluator. The caller guarantees periodicity.
    pub fn custom<F>(period: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        check_period(period)?;
        Ok(Self {
            period,
            kind: FieldKind::Custom(Arc::new(f)),
            tail: None,
            holder: 0.5,
        })
    }

    /// Attaches tail metadata, after validating it.
    pub fn with_tail(mut self, tail: TailSpec) -> Result<Self> {
        tail.validate(self.period)?;
        self.tail = Some(tail);
        Ok(self)
    }

    pub fn without_tail(mut self) -> Self {
        self.tail = None;
        self
    }

    /// `self - coef * profile`, with the profile clamped beyond its domain.
    /// When the base field has an `r = 0` tail, the derived tail uses the
    /// profile's last column as its far field.
    pub fn reduced_by(&self, coef: f64, profile: Arc<PeriodicProfile>) -> Result<Self> {
        if (profile.period() - self.period).abs() > 1e-12 * self.period {
            return Err(Error::PeriodMismatch(self.period, profile.period()));
        }
        let tail = self.tail.as_ref().and_then(|tail| {
            if coef == 0.0 {
                return Some(tail.clone());
            }
            let period = self.period;
            let x_end = profile.grid().length();
            let scale = x_end.powf(tail.r);
            let lower = Envelope::sample(period, |t| {
                tail.lower.eval(t, period) - coef * profile.value_at(t, x_end) / scale
            });
            let upper = Envelope::sample(period, |t| {
                tail.upper.eval(t, period) - coef * profile.value_at(t, x_end) / scale
            });
            let low = lower.sampled_min(period);
            (low > 0.0).then(|| TailSpec {
                r: tail.r,
                lower,
                upper,
                condition_a: ConditionA {
                    varsigma: low * 0.5,
                    ..tail.condition_a
                },
                x_tail: tail.x_tail,
            })
        });
        Ok(Self {
            period: self.period,
            kind: FieldKind::Reduced {
                base: Arc::new(self.clone()),
                coef,
                profile,
            },
            tail,
            holder: self.holder,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn tail(&self) -> Option<&TailSpec> {
        self.tail.as_ref()
    }

    pub fn as_preset(&self) -> Option<&Preset> {
        match &self.kind {
            FieldKind::Preset(p) => Some(p),
            _ => None,
        }
    }

    /// True when the field does not depend on `x`.
    pub fn is_space_independent(&self) -> bool {
        fn preset_flat(p: &Preset) -> bool {
            match p {
                Preset::Constant { .. } | Preset::Seasonal { .. } => true,
                Preset::Separable { near, far, .. } => near == far,
                Preset::SignChanging { c, p, .. } => *c == 0.0 || *p == 0.0,
                Preset::Sum { terms } => terms.iter().all(preset_flat),
            }
        }
        matches!(&self.kind, FieldKind::Preset(p) if preset_flat(p))
    }

    /// Evaluates `c(t, x)`; `t` is reduced modulo the period first.
    #[inline]
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let t = t.rem_euclid(self.period);
        match &self.kind {
            FieldKind::Preset(p) => p.eval(t, x, self.period),
            FieldKind::Table(table) => table.eval(t, x, self.period),
            FieldKind::Reduced {
                base,
                coef,
                profile,
            } => base.eval(t, x) - coef * profile.value_at(t, x),
            FieldKind::Custom(f) => f(t, x),
        }
    }

    /// Sampled `sup |c|` over `[0, T] x [0, x_max]`.
    pub fn sup_abs(&self, x_max: f64) -> f64 {
        let nt = 256;
        let nx = 512;
        let mut sup: f64 = 0.0;
        for i in 0..nt {
            let t = self.period * i as f64 / nt as f64;
            for j in 0..=nx {
                let x = x_max * j as f64 / nx as f64;
                sup = sup.max(self.eval(t, x).abs());
            }
        }
        sup
    }

    /// Sampled `sup c` over `[0, T] x [0, x_max]`.
    pub fn sup(&self, x_max: f64) -> f64 {
        let nt = 256;
        let nx = 512;
        let mut sup = f64::NEG_INFINITY;
        for i in 0..nt {
            let t = self.period * i as f64 / nt as f64;
            for j in 0..=nx {
                sup = sup.max(self.eval(t, x_max * j as f64 / nx as f64));
            }
        }
        sup
    }
}

/// `evaluate_field`: free-function form of [`PeriodicField::eval`].
pub fn evaluate_field(field: &PeriodicField, t: f64, x: f64) -> f64 {
    field.eval(t, x)
}

/// Outcome of the weak-competition check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict3 {
    Holds,
    Fails,
    Undecidable,
}

/// Envelope extrema behind a tail-envelope verdict.
#[derive(Clone, Debug, Serialize)]
pub struct H1Report {
    pub verdict: Verdict3,
    pub min_a_lower: Option<f64>,
    pub max_a_upper: Option<f64>,
    pub min_b_lower: Option<f64>,
    pub max_b_upper: Option<f64>,
    pub note: String,
}

/// Checks the tail-envelope ordering together with the weak-competition inequalities
/// `min b_inf > h max a^inf` and `min a_inf > k max b^inf`.
pub fn check_condition_h1(a: &PeriodicField, b: &PeriodicField, params: &CompetitionParams) -> Result<H1Report> {
    if (a.period() - b.period()).abs() > 1e-12 * a.period().max(b.period()) {
        return Err(Error::PeriodMismatch(a.period(), b.period()));
    }
    let undecidable = |note: &str| H1Report {
        verdict: Verdict3::Undecidable,
        min_a_lower: None,
        max_a_upper: None,
        min_b_lower: None,
        max_b_upper: None,
        note: note.to_string(),
    };
    let (ta, tb) = match (a.tail(), b.tail()) {
        (Some(ta), Some(tb)) => (ta, tb),
        (None, _) => return Ok(undecidable("a carries no tail metadata")),
        (_, None) => return Ok(undecidable("b carries no tail metadata")),
    };
    if ta.r != tb.r {
        return Ok(undecidable("a and b have different tail exponents"));
    }
    let period = a.period();
    let min_a = ta.lower.sampled_min(period);
    let max_a = ta.upper.sampled_max(period);
    let min_b = tb.lower.sampled_min(period);
    let max_b = tb.upper.sampled_max(period);
    let holds = min_b > params.h * max_a && min_a > params.k * max_b;
    Ok(H1Report {
        verdict: if holds { Verdict3::Holds } else { Verdict3::Fails },
        min_a_lower: Some(min_a),
        max_a_upper: Some(max_a),
        min_b_lower: Some(min_b),
        max_b_upper: Some(max_b),
        note: format!(
            "min b_inf = {min_b:.6} vs h max a^inf = {:.6}; min a_inf = {min_a:.6} vs k max b^inf = {:.6}",
            params.h * max_a,
            params.k * max_b
        ),
    })
}

/// Diffusivities, competition rates and free-boundary data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompetitionParams {
    pub d1: f64,
    pub d2: f64,
    pub k: f64,
    pub h: f64,
    pub mu: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub s0: f64,
    pub bc1: BoundaryOp,
    pub bc2: BoundaryOp,
}

fn default_rho() -> f64 {
    1.0
}

impl CompetitionParams {
    /// Dirichlet at zero for both species, `rho = 1`.
    pub fn symmetric(d: f64, k: f64, h: f64, mu: f64, s0: f64) -> Self {
        Self {
            d1: d,
            d2: d,
            k,
            h,
            mu,
            rho: 1.0,
            s0,
            bc1: BoundaryOp::dirichlet(),
            bc2: BoundaryOp::dirichlet(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("d1", self.d1), ("d2", self.d2), ("mu", self.mu), ("s0", self.s0)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("k", self.k), ("h", self.h), ("rho", self.rho)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which free-boundary problem: both species inside the front, or the
/// second species on the whole half line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Coupled,
    Single,
}

/// Named initial shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum InitialShape {
    /// Quadratic vanishing at `s0` and satisfying the Robin condition at 0;
    /// equals `amplitude x (s0 - x) / s0^2` for Dirichlet and
    /// `amplitude (1 - x^2 / s0^2)` for Neumann.
    Bump { amplitude: f64 },
    /// `amplitude (1 - theta exp(-x / width))` with `theta` fixed by the
    /// Robin condition; positive on the whole half line.
    Plateau { amplitude: f64, width: f64 },
    /// Piecewise-linear through `(x, value)` points, zero beyond the last.
    Table { points: Vec<[f64; 2]> },
}

impl InitialShape {
    pub fn eval(&self, x: f64, s0: f64, bc: BoundaryOp) -> f64 {
        let (alpha, beta) = (bc.alpha(), bc.beta());
        match self {
            InitialShape::Bump { amplitude } => {
                if x >= s0 || x < 0.0 {
                    return 0.0;
                }
                amplitude * (s0 - x) * (beta * s0 + (alpha * s0 + beta) * x) / (s0 * s0 * (alpha * s0 + beta))
            }
            InitialShape::Plateau { amplitude, width } => {
                let theta = alpha * width / (alpha * width + beta);
                amplitude * (1.0 - theta * (-x / width).exp())
            }
            InitialShape::Table { points } => {
                if points.is_empty() || x > points[points.len() - 1][0] {
                    return 0.0;
                }
                if x <= points[0][0] {
                    return points[0][1];
                }
                let j = points.partition_point(|p| p[0] <= x) - 1;
                let (p, q) = (points[j], points[(j + 1).min(points.len() - 1)]);
                if q[0] == p[0] {
                    return p[1];
                }
                p[1] + (q[1] - p[1]) * (x - p[0]) / (q[0] - p[0])
            }
        }
    }
}

/// Initial densities `u0` on `[0, s0]` and `v0` on `[0, s0]` (coupled) or
/// `[0, inf)` (single front).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub u0: InitialShape,
    pub v0: InitialShape,
}

impl InitialData {
    pub fn bumps(amp_u: f64, amp_v: f64) -> Self {
        Self {
            u0: InitialShape::Bump { amplitude: amp_u },
            v0: InitialShape::Bump { amplitude: amp_v },
        }
    }

    pub fn u0(&self, x: f64, params: &CompetitionParams) -> f64 {
        self.u0.eval(x, params.s0, params.bc1)
    }

    pub fn v0(&self, x: f64, params: &CompetitionParams) -> f64 {
        self.v0.eval(x, params.s0, params.bc2)
    }

    /// Checks sign, the front condition and boundary compatibility on a
    /// sampling lattice.
    pub fn validate(&self, params: &CompetitionParams, problem: Problem) -> Result<()> {
        let s0 = params.s0;
        let n = 400;
        let h = s0 / n as f64;
        let check = |name: &str, f: &dyn Fn(f64) -> f64, bc: BoundaryOp, vanish_at_front: bool| -> Result<()> {
            let scale = (0..=n).map(|j| f(j as f64 * h).abs()).fold(0.0, f64::max).max(1e-300);
            for j in 1..n {
                let v = f(j as f64 * h);
                if !(v > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be positive on (0, s0); found {v} at x = {}",
                        j as f64 * h
                    )));
                }
            }
            if vanish_at_front && f(s0).abs() > 1e-9 * scale {
                return Err(Error::InvalidParameter(format!("{name}(s0) must vanish, got {}", f(s0))));
            }
            let eps = 1e-5 * s0;
            let deriv = (-3.0 * f(0.0) + 4.0 * f(eps) - f(2.0 * eps)) / (2.0 * eps);
            let b = bc.apply(f(0.0), deriv);
            if b.abs() > 1e-4 * scale.max(scale / s0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} violates the boundary condition at 0: B[{name}](0) = {b:e}"
                )));
            }
            Ok(())
        };
        check("u0", &|x| self.u0(x, params), params.bc1, true)?;
        match problem {
            Problem::Coupled => check("v0", &|x| self.v0(x, params), params.bc2, true),
            Problem::Single => {
                check("v0", &|x| self.v0(x, params), params.bc2, false)?;
                let far = self.v0(10.0 * s0, params);
                if !(far > 0.0) {
                    return Err(Error::InvalidParameter(
                        "v0 must stay positive on the half line for the single-front problem".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// `max(sup u0, sup v0)` sampled on `[0, x_max]`.
    pub fn sup(&self, params: &CompetitionParams, x_max: f64) -> f64 {
        let n = 2000;
        (0..=n)
            .map(|j| {
                let x = x_max * j as f64 / n as f64;
                self.u0(x, params).abs().max(self.v0(x, params).abs())
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_examples() {
        assert_eq!(PeriodicField::constant(1.0, 1.0).eval(0.3, 5.0), 1.0);
        let s = PeriodicField::seasonal(0.0, 1.0, 2.0);
        assert_eq!(s.eval(2.0, 0.0), 0.0);
        let sc = PeriodicField::preset(
            Preset::SignChanging {
                kappa: 1.0,
                c: 2.0,
                p: 1.0,
            },
            1.0,
        )
        .unwrap();
        assert_eq!(sc.eval(0.0, 1.0), 0.0);
        assert!(sc.tail().is_none());
    }

    #[test]
    fn boundary_op_validation() {
        assert!(BoundaryOp::new(0.3, 0.7).is_ok());
        assert!(BoundaryOp::new(0.3, 0.6).is_err());
        assert!(BoundaryOp::new(-0.1, 1.1).is_err());
        let op = BoundaryOp::robin(0.25);
        assert_eq!(op.alpha() + op.beta(), 1.0);
    }

    #[test]
    fn h1_examples() {
        let one = PeriodicField::constant(1.0, 1.0);
        let mut p = CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 1.0);
        assert_eq!(check_condition_h1(&one, &one, &p).unwrap().verdict, Verdict3::Holds);
        p.k = 1.5;
        p.h = 1.5;
        assert_eq!(check_condition_h1(&one, &one, &p).unwrap().verdict, Verdict3::Fails);
        let bare = one.clone().without_tail();
        assert_eq!(check_condition_h1(&one, &bare, &p).unwrap().verdict, Verdict3::Undecidable);
        let other = PeriodicField::constant(1.0, 2.0);
        assert!(matches!(check_condition_h1(&one, &other, &p), Err(Error::PeriodMismatch(..))));
    }

    #[test]
    fn sum_tail_combines_phasors() {
        let f = PeriodicField::preset(
            Preset::Sum {
                terms: vec![
                    Preset::Seasonal {
                        mean: 1.0,
                        amplitude: 0.3,
                        phase: 0.0,
                    },
                    Preset::Seasonal {
                        mean: 0.5,
                        amplitude: 0.4,
                        phase: PI / 2.0,
                    },
                    Preset::SignChanging {
                        kappa: 0.0,
                        c: 1.0,
                        p: 1.0,
                    },
                ],
            },
            1.0,
        )
        .unwrap();
        let tail = f.tail().unwrap();
        assert_eq!(tail.r, 0.0);
        for i in 0..10 {
            let t = i as f64 * 0.1;
            let expect = 1.5 + 0.3 * (2.0 * PI * t).sin() + 0.4 * (2.0 * PI * t).cos();
            assert!((tail.lower.eval(t, 1.0) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let table = Table {
            times: vec![0.0, 0.5],
            xs: vec![0.0, 1.0],
            values: vec![vec![0.0, 1.0], vec![2.0, 3.0]],
        };
        let f = PeriodicField::table(table, 1.0).unwrap();
        assert!(f.tail().is_none());
        assert!((f.eval(0.0, 0.5) - 0.5).abs() < 1e-14);
        assert!((f.eval(0.25, 0.5) - 1.5).abs() < 1e-14);
        // beyond the x range: last column
        assert!((f.eval(0.0, 7.0) - 1.0).abs() < 1e-14);
        // wrap segment between t = 0.5 and t = 1
        assert!((f.eval(0.75, 0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn table_from_records_both_layouts() {
        let rec = |v: &[&str]| csv::StringRecord::from(v.to_vec());
        let long = vec![
            rec(&["t", "x", "value"]),
            rec(&["0", "0", "1"]),
            rec(&["0", "1", "2"]),
            rec(&["0.5", "0", "3"]),
            rec(&["0.5", "1", "4"]),
        ];
        let grid = vec![rec(&["t\\x", "0", "1"]), rec(&["0", "1", "2"]), rec(&["0.5", "3", "4"])];
        assert_eq!(Table::from_records(&long).unwrap(), Table::from_records(&grid).unwrap());
    }

    #[test]
    fn initial_shapes_satisfy_boundary_conditions() {
        for bc in [BoundaryOp::dirichlet(), BoundaryOp::neumann(), BoundaryOp::robin(0.4)] {
            let params = CompetitionParams {
                bc1: bc,
                bc2: bc,
                ..CompetitionParams::symmetric(1.0, 0.5, 0.5, 1.0, 2.0)
            };
            let coupled = InitialData::bumps(1.0, 0.5);
            coupled.validate(&params, Problem::Coupled).unwrap();
            let single = InitialData {
                u0: InitialShape::Bump { amplitude: 1.0 },
                v0: InitialShape::Plateau {
                    amplitude: 1.0,
                    width: 1.0,
                },
            };
            single.validate(&params, Problem::Single).unwrap();
            assert!(coupled.validate(&params, Problem::Single).is_err());
        }
        let b = InitialShape::Bump { amplitude: 1.0 };
        assert!((b.eval(1.0, 4.0, BoundaryOp::dirichlet()) - 3.0 / 16.0).abs() < 1e-15);
        assert!((b.eval(1.0, 4.0, BoundaryOp::neumann()) - 15.0 / 16.0).abs() < 1e-15);
    }
}
