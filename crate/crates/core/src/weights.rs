//! Queue-length weight functions `f` and the node-weight rule.
//!
//! The default `f(x) = log log(x + e)` (natural logarithms) is the function
//! throughput optimality is established for. The other named functions
//! satisfy the same structural conditions and are provided as experimental
//! modes.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use std::f64::consts::E;

/// `log(log(x + e))`, rejecting negative input.
pub fn f_loglog(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeInput(x));
    }
    Ok(loglog(x))
}

#[inline]
fn loglog(x: f64) -> f64 {
    (x + E).ln().ln()
}

type CustomFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A weight function `f: R+ -> R+`.
#[derive(Clone, Default)]
pub enum WeightFunction {
    /// `log log(x + e)`.
    #[default]
    LogLog,
    /// `sqrt(log(x + 1))`.
    SqrtLog,
    /// `eps(x) log(x + 1)` with `eps(x) = 1 / sqrt(1 + log(x + 1))`.
    EpsLog,
    /// `log log log(x + e^e)`.
    LogLogLog,
    /// A caller-supplied function, unvalidated until a validation report passes.
    Custom { name: String, f: CustomFn, validated: bool },
}

impl WeightFunction {
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        WeightFunction::Custom { name: name.into(), f: Arc::new(f), validated: false }
    }

    pub fn id(&self) -> &str {
        match self {
            WeightFunction::LogLog => "loglog",
            WeightFunction::SqrtLog => "sqrtlog",
            WeightFunction::EpsLog => "eps_log",
            WeightFunction::LogLogLog => "logloglog",
            WeightFunction::Custom { name, .. } => name,
        }
    }

    /// Evaluates `f(x)` for `x >= 0`.
    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0, "weight function evaluated at {x}");
        match self {
            WeightFunction::LogLog => loglog(x),
            WeightFunction::SqrtLog => x.ln_1p().sqrt(),
            WeightFunction::EpsLog => {
                let l = x.ln_1p();
                l / (1.0 + l).sqrt()
            }
            WeightFunction::LogLogLog => (x + E.powf(E)).ln().ln().ln(),
            WeightFunction::Custom { f, .. } => f(x),
        }
    }

    /// Named functions are always considered validated.
    pub fn is_validated(&self) -> bool {
        match self {
            WeightFunction::Custom { validated, .. } => *validated,
            _ => true,
        }
    }

    /// Marks a custom function validated when `report` passed.
    pub fn with_report(self, report: &WeightReport) -> Self {
        match self {
            WeightFunction::Custom { name, f, .. } => WeightFunction::Custom { name, f, validated: report.pass },
            other => other,
        }
    }
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WeightFunction({})", self.id())
    }
}

impl FromStr for WeightFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglog" => Ok(WeightFunction::LogLog),
            "sqrtlog" => Ok(WeightFunction::SqrtLog),
            "eps_log" => Ok(WeightFunction::EpsLog),
            "logloglog" => Ok(WeightFunction::LogLogLog),
            other => Err(Error::ConfigInvalid(format!("unknown weight_fn '{other}'"))),
        }
    }
}

impl Serialize for WeightFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for WeightFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How node weights combine local and global queue information.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `W_i = max{f(Q_i), sqrt(f(Q_max))}`.
    #[default]
    WithQmax,
    /// `W_i = f(Q_i)`.
    LocalOnly,
}

/// Node weights for queue snapshot `q` (the caller passes `Q(floor(t))`).
pub fn node_weights(q: &[f64], f: &WeightFunction, mode: WeightMode) -> Result<Vec<f64>> {
    if q.is_empty() {
        return Err(Error::EmptyVector);
    }
    if let Some(&bad) = q.iter().find(|&&x| !(x >= 0.0)) {
        return Err(Error::NegativeInput(bad));
    }
    let local: Vec<f64> = q.iter().map(|&x| f.eval(x)).collect();
    Ok(match mode {
        WeightMode::LocalOnly => local,
        WeightMode::WithQmax => {
            let q_max = q.iter().copied().fold(0.0, f64::max);
            let floor = f.eval(q_max).max(0.0).sqrt();
            local.into_iter().map(|w| w.max(floor)).collect()
        }
    })
}

/// Upper end of the bisection bracket for `f^{-1}`.
pub const INVERSE_UPPER: f64 = 1e15;

/// `f^{-1}(v)` by bisection on `[0, 1e15]` to `1e-12` relative tolerance.
///
/// Returns `None` when `v` lies outside `[f(0), f(1e15)]`.
pub fn inverse(f: &WeightFunction, v: f64) -> Option<f64> {
    let (mut lo, mut hi) = (0.0_f64, INVERSE_UPPER);
    if v < f.eval(lo) || v > f.eval(hi) {
        return None;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if f.eval(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Central-difference derivative with a step relative to `y`.
pub fn derivative(f: &WeightFunction, y: f64) -> f64 {
    let h = 1e-6 * y.max(1e-3);
    (f.eval(y + h) - f.eval(y - h)) / (2.0 * h)
}

/// Trend of `exp(f(x)) f'(f^{-1}(delta f(x)))` along a grid, kept in log form.
#[derive(Debug, Clone, Serialize)]
pub struct TrendReport {
    pub delta: f64,
    /// `log` of the quantity at each grid point; `None` where undefined.
    pub log_values: Vec<Option<f64>>,
    /// Strictly decreasing across the top decade of the grid.
    pub decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightReport {
    pub id: String,
    pub zero_ok: bool,
    pub monotone: bool,
    pub unbounded: bool,
    pub trends: Vec<TrendReport>,
    pub trend_pass: bool,
    pub pass: bool,
    /// Always set: a finite grid cannot certify a limit.
    pub caveat: &'static str,
}

pub const TREND_DELTAS: [f64; 3] = [0.25, 0.5, 0.75];
const MIN_GRID: usize = 8;

/// Numerically screens `f` against the structural conditions on weight functions.
pub fn validate_weight_function(f: &WeightFunction, grid: &[f64]) -> Result<WeightReport> {
    if grid.len() < MIN_GRID {
        return Err(Error::GridTooSmall { got: grid.len(), min: MIN_GRID });
    }
    if grid.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidGrid("grid points must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }

    let zero_ok = f.eval(0.0).abs() <= 1e-12;
    let values: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect();
    let monotone = f.eval(0.0) < values[0] && values.windows(2).all(|w| w[1] > w[0]);
    let unbounded = f.eval(1e12) > f.eval(1e6);

    let top = grid[grid.len() - 1] / 10.0;
    let top_start = grid.iter().position(|&x| x >= top * (1.0 - 1e-12)).unwrap_or(0);

    let trends: Vec<TrendReport> = TREND_DELTAS
        .iter()
        .map(|&delta| {
            let log_values: Vec<Option<f64>> = grid
                .iter()
                .zip(&values)
                .map(|(_, &fx)| {
                    let y = inverse(f, delta * fx)?;
                    let d = derivative(f, y);
                    (d > 0.0 && d.is_finite()).then(|| fx + d.ln())
                })
                .collect();
            let window = &log_values[top_start..];
            let decreasing = window.len() >= 2
                && window.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b < a));
            TrendReport { delta, log_values, decreasing }
        })
        .collect();
    let trend_pass = trends.iter().all(|t| t.decreasing);
    Ok(WeightReport {
        id: f.id().to_string(),
        zero_ok,
        monotone,
        unbounded,
        trend_pass,
        pass: zero_ok && monotone && unbounded && trend_pass,
        trends,
        caveat: "finite-grid trend only; a limit cannot be certified numerically",
    })
}

/// Decade grid `10^lo, ..., 10^hi`.
pub fn decade_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 10f64.powi(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ee_minus_e() -> f64 {
        E.powf(E) - E
    }

    #[test]
    fn loglog_examples() {
        assert_eq!(f_loglog(0.0).unwrap(), 0.0);
        assert!((f_loglog(ee_minus_e()).unwrap() - 1.0).abs() < 1e-12);
        // 30-digit reference value.
        assert!((f_loglog(100.0).unwrap() - 1.532_986_605_780_914).abs() < 1e-13);
        assert_eq!(f_loglog(-1.0), Err(Error::NegativeInput(-1.0)));
    }

    #[test]
    fn node_weight_examples() {
        let f = WeightFunction::LogLog;
        assert_eq!(node_weights(&[0.0, 0.0], &f, WeightMode::WithQmax).unwrap(), vec![0.0, 0.0]);
        let w = node_weights(&[0.0, ee_minus_e()], &f, WeightMode::WithQmax).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);
        let w = node_weights(&[0.0, ee_minus_e()], &f, WeightMode::LocalOnly).unwrap();
        assert!(w[0].abs() < 1e-12 && (w[1] - 1.0).abs() < 1e-12);
        assert_eq!(node_weights(&[], &f, WeightMode::WithQmax), Err(Error::EmptyVector));
    }

    #[test]
    fn named_functions_vanish_at_zero() {
        for f in [WeightFunction::LogLog, WeightFunction::SqrtLog, WeightFunction::EpsLog, WeightFunction::LogLogLog] {
            assert!(f.eval(0.0).abs() < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn inverse_round_trips() {
        let f = WeightFunction::LogLog;
        for x in [0.5, 10.0, 1e6, 1e12] {
            let y = inverse(&f, f.eval(x)).unwrap();
            assert!((y - x).abs() <= 1e-9 * x.max(1.0), "{x} -> {y}");
        }
        assert!(inverse(&f, 100.0).is_none());
    }

    #[test]
    fn plain_log_fails_trend() {
        let f = WeightFunction::custom("log1p", |x: f64| x.ln_1p());
        let r = validate_weight_function(&f, &decade_grid(1, 12)).unwrap();
        assert!(r.zero_ok && r.monotone && r.unbounded);
        assert!(!r.trend_pass && !r.pass);
        let f = f.with_report(&r);
        assert!(!f.is_validated());
    }

    #[test]
    fn identity_is_monotone_but_fails_trend() {
        let f = WeightFunction::custom("identity", |x: f64| x);
        let r = validate_weight_function(&f, &decade_grid(1, 12)).unwrap();
        assert!(r.zero_ok && r.monotone);
        assert!(!r.trend_pass);
    }

    #[test]
    fn loglog_trend_on_short_grid() {
        // For delta = 1/4 the quantity peaks near x = e^81, beyond 1e12.
        let r = validate_weight_function(&WeightFunction::LogLog, &decade_grid(1, 12)).unwrap();
        assert!(r.zero_ok && r.monotone && r.unbounded);
        assert!(!r.trends[0].decreasing);
        assert!(r.trends[1].decreasing && r.trends[2].decreasing);
    }

    #[test]
    fn loglog_trend_passes_past_the_peak() {
        let r = validate_weight_function(&WeightFunction::LogLog, &decade_grid(1, 40)).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn small_grid_is_rejected() {
        assert!(matches!(
            validate_weight_function(&WeightFunction::LogLog, &decade_grid(1, 5)),
            Err(Error::GridTooSmall { got: 5, .. })
        ));
    }

    #[test]
    fn weight_fn_ids_parse() {
        for id in ["loglog", "sqrtlog", "eps_log", "logloglog"] {
            assert_eq!(id.parse::<WeightFunction>().unwrap().id(), id);
        }
        assert!("cubic".parse::<WeightFunction>().is_err());
    }
}
