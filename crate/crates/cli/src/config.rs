// Copyright 2026 The shockhier Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Run configuration: a JSON document validated into [`RunConfig`].
//!
//! Numbers may be JSON numbers or strings holding an integer ratio such as
//! `"9/4"`, which is parsed exactly before conversion to `f64`. The horizon
//! also accepts `"inf"`.

use std::fmt;

use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use serde_json::{json, Value};
use shockhier::{Flux, Horizon, ModelKind, Profile64, RandomProfileModel};

use crate::error::CliError;

/// A number read from the config, exact when it was written as an integer or
/// a ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Number {
    pub value: f64,
    pub exact: Option<Rational64>,
}

impl Number {
    fn from_ratio(r: Rational64) -> Self {
        Number {
            value: r.to_f64().unwrap_or(f64::NAN),
            exact: Some(r),
        }
    }
}

fn parse_number(s: &str) -> Result<Number, String> {
    let s = s.trim();
    match s {
        "inf" | "+inf" | "infinity" => {
            return Ok(Number {
                value: f64::INFINITY,
                exact: None,
            })
        }
        "-inf" | "-infinity" => {
            return Ok(Number {
                value: f64::NEG_INFINITY,
                exact: None,
            })
        }
        _ => {}
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if q == 0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Number::from_ratio(Rational64::new(p, q)));
    }
    if let Ok(i) = s.parse::<i64>() {
        return Ok(Number::from_ratio(Rational64::from_integer(i)));
    }
    s.parse::<f64>()
        .map(|value| Number { value, exact: None })
        .map_err(|_| format!("expected a number or \"p/q\", got {s:?}"))
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Number;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string \"p/q\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Number, E> {
                Ok(Number::from_ratio(Rational64::from_integer(v)))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Number, E> {
                i64::try_from(v)
                    .map(|v| Number::from_ratio(Rational64::from_integer(v)))
                    .map_err(|_| E::custom("integer out of range"))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Number, E> {
                Ok(Number { value: v, exact: None })
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Number, E> {
                parse_number(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    states: Vec<Number>,
    flux_values: Vec<Number>,
    initial: RawInitial,
    seed: Option<u64>,
    horizon: Option<Number>,
    realizations: Option<u64>,
    times: Option<Vec<Number>>,
    x_grid: Option<RawGrid>,
    max_order: Option<usize>,
    coincidence_widths: Option<Vec<Number>>,
    workers: Option<usize>,
    oracle: Option<RawOracle>,
    transport: Option<RawTransport>,
    ledger: Option<RawLedger>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawInitial {
    Deterministic {
        breakpoints: Vec<Number>,
        /// 1-based states.
        pieces: Vec<usize>,
    },
    IidGrid {
        spacing: Number,
        weights: Vec<Number>,
        window: [Number; 2],
    },
    MarkovJump {
        rate: Number,
        initial: Vec<Number>,
        transition: Vec<Vec<Number>>,
        window: [Number; 2],
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGrid {
    Points(Vec<Number>),
    Range { from: Number, to: Number, step: Number },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    points: Option<usize>,
    x_range: Option<[Number; 2]>,
    t_range: Option<[Number; 2]>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransport {
    times: Option<Vec<Number>>,
    x_grid: Option<RawGrid>,
    order: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLedger {
    bumps: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleParams {
    pub points: usize,
    pub x_range: Option<(f64, f64)>,
    pub t_range: Option<(f64, f64)>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportParams {
    pub times: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerParams {
    pub bumps: usize,
    pub seed: u64,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub flux: Flux,
    pub model: RandomProfileModel,
    /// Set when the initial data are deterministic.
    pub profile: Option<Profile64>,
    pub seed: u64,
    pub horizon: Horizon<f64>,
    pub realizations: u64,
    pub times: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub max_order: usize,
    pub coincidence_widths: Option<Vec<f64>>,
    pub workers: usize,
    pub oracle: OracleParams,
    pub transport: TransportParams,
    pub ledger: LedgerParams,
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<u64>,
    pub horizon: Option<String>,
    pub workers: Option<usize>,
    pub points: Option<usize>,
}

fn invalid(field: &str, message: impl fmt::Display) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        kind: None,
        message: message.to_string(),
    }
}

/// Validation error forwarded from a module error, keeping its variant name.
fn rejected<E: fmt::Display + fmt::Debug>(field: &str, err: E) -> CliError {
    let debug = format!("{err:?}");
    let kind: String = debug.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect();
    CliError::Validation {
        field: field.to_string(),
        kind: Some(kind),
        message: err.to_string(),
    }
}

fn finite(field: &str, n: Number) -> Result<f64, CliError> {
    if n.value.is_finite() {
        Ok(n.value)
    } else {
        Err(invalid(field, "expected a finite number"))
    }
}

fn finite_all(field: &str, ns: &[Number]) -> Result<Vec<f64>, CliError> {
    ns.iter().map(|n| finite(field, *n)).collect()
}

fn grid(field: &str, g: &RawGrid) -> Result<Vec<f64>, CliError> {
    let out = match g {
        RawGrid::Points(p) => finite_all(field, p)?,
        RawGrid::Range { from, to, step } => {
            let (a, b, h) = (finite(field, *from)?, finite(field, *to)?, finite(field, *step)?);
            if !(h > 0.0) || !(b >= a) {
                return Err(invalid(field, "range needs from <= to and step > 0"));
            }
            let n = ((b - a) / h + 1e-9).floor() as i64;
            if n > 1_000_000 {
                return Err(invalid(field, "range has too many points"));
            }
            match (from.exact, step.exact) {
                (Some(a), Some(h)) => (0..=n)
                    .map(|i| (a + h * Rational64::from_integer(i)).to_f64().unwrap())
                    .collect(),
                _ => (0..=n).map(|i| a + i as f64 * h).collect(),
            }
        }
    };
    if out.is_empty() || out.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid(field, "grid must be non-empty and strictly increasing"));
    }
    Ok(out)
}

fn pair(field: &str, p: &[Number; 2]) -> Result<(f64, f64), CliError> {
    let (a, b) = (finite(field, p[0])?, finite(field, p[1])?);
    if !(a < b) {
        return Err(invalid(field, "expected [lo, hi] with lo < hi"));
    }
    Ok((a, b))
}

fn parse_horizon(field: &str, n: Number) -> Result<Horizon<f64>, CliError> {
    if n.value == f64::INFINITY {
        Ok(Horizon::Infinite)
    } else if n.value > 0.0 && n.value.is_finite() {
        Ok(Horizon::Finite(n.value))
    } else {
        Err(invalid(field, "horizon must be positive or \"inf\""))
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Schema {
            message: "empty config".into(),
            line: 0,
            column: 0,
        });
    }
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Schema {
        message: e.to_string(),
        line: e.line(),
        column: e.column(),
    })?;

    let states = finite_all("states", &raw.states)?;
    let values = finite_all("flux_values", &raw.flux_values)?;
    let flux = Flux::new(states, values).map_err(|e| rejected("flux", e))?;
    let m = flux.len();
    let seed = overrides.seed.or(raw.seed).unwrap_or(0);

    let (kind, window, profile) = match &raw.initial {
        RawInitial::Deterministic { breakpoints, pieces } => {
            let bps = finite_all("initial.breakpoints", breakpoints)?;
            if pieces.iter().any(|s| *s == 0 || *s > m) {
                return Err(invalid("initial.pieces", format!("states are numbered 1..={m}")));
            }
            let pieces: Vec<usize> = pieces.iter().map(|s| s - 1).collect();
            let p = Profile64::new(bps, pieces, &flux).map_err(|e| rejected("initial", e))?;
            let window = match p.window() {
                Some((a, b)) if a < b => (a, b),
                Some((a, _)) => (a - 0.5, a + 0.5),
                None => (-1.0, 1.0),
            };
            (ModelKind::Deterministic(p.clone()), window, Some(p))
        }
        RawInitial::IidGrid { spacing, weights, window } => (
            ModelKind::IidGrid {
                spacing: finite("initial.spacing", *spacing)?,
                weights: finite_all("initial.weights", weights)?,
            },
            pair("initial.window", window)?,
            None,
        ),
        RawInitial::MarkovJump {
            rate,
            initial,
            transition,
            window,
        } => (
            ModelKind::MarkovJump {
                rate: finite("initial.rate", *rate)?,
                initial: finite_all("initial.initial", initial)?,
                transition: transition
                    .iter()
                    .map(|row| finite_all("initial.transition", row))
                    .collect::<Result<_, _>>()?,
            },
            pair("initial.window", window)?,
            None,
        ),
    };
    let model = RandomProfileModel::new(kind, window, seed, m).map_err(|e| rejected("initial", e))?;

    let horizon = match (&overrides.horizon, raw.horizon) {
        (Some(s), _) => parse_horizon("--horizon", parse_number(s).map_err(|e| invalid("--horizon", e))?)?,
        (None, Some(n)) => parse_horizon("horizon", n)?,
        (None, None) => Horizon::Infinite,
    };
    let realizations = overrides.realizations.or(raw.realizations).unwrap_or(if profile.is_some() { 1 } else { 1000 });
    if realizations == 0 {
        return Err(invalid("realizations", "must be at least 1"));
    }
    let times = match &raw.times {
        Some(t) => finite_all("times", t)?,
        None => match horizon {
            Horizon::Finite(h) => vec![0.0, 0.5 * h, h],
            Horizon::Infinite => vec![0.0, 0.5, 1.0],
        },
    };
    if times.is_empty() || times.iter().any(|t| *t < 0.0 || !horizon.contains(*t)) {
        return Err(invalid("times", "times must be >= 0 and inside the horizon"));
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let x_grid = match &raw.x_grid {
        Some(g) => grid("x_grid", g)?,
        None => {
            let reach = flux.lipschitz() * t_max + 1.0;
            let (a, b) = (window.0 - reach, window.1 + reach);
            (0..=100).map(|i| a + (b - a) * i as f64 / 100.0).collect()
        }
    };
    let max_order = raw.max_order.unwrap_or(2);
    if !(1..=2).contains(&max_order) {
        return Err(invalid("max_order", "must be 1 or 2"));
    }
    let coincidence_widths = match &raw.coincidence_widths {
        Some(w) => {
            let w = finite_all("coincidence_widths", w)?;
            if w.iter().any(|x| !(*x > 0.0)) {
                return Err(invalid("coincidence_widths", "widths must be positive"));
            }
            Some(w)
        }
        None => None,
    };
    let workers = overrides.workers.or(raw.workers).unwrap_or(1);

    let oracle = {
        let o = raw.oracle.as_ref();
        OracleParams {
            points: overrides.points.or(o.and_then(|o| o.points)).unwrap_or(1000),
            x_range: o.and_then(|o| o.x_range.as_ref()).map(|r| pair("oracle.x_range", r)).transpose()?,
            t_range: o.and_then(|o| o.t_range.as_ref()).map(|r| pair("oracle.t_range", r)).transpose()?,
            seed: o.and_then(|o| o.seed).unwrap_or(seed),
        }
    };
    if let Some((a, _)) = oracle.t_range {
        if !(a > 0.0) {
            return Err(invalid("oracle.t_range", "times must be positive"));
        }
    }
    let transport = {
        let t = raw.transport.as_ref();
        let ttimes = match t.and_then(|t| t.times.as_ref()) {
            Some(v) => finite_all("transport.times", v)?,
            None => times.clone(),
        };
        if ttimes.iter().any(|s| *s < 0.0 || !horizon.contains(*s)) {
            return Err(invalid("transport.times", "times must be >= 0 and inside the horizon"));
        }
        let order = t.and_then(|t| t.order).unwrap_or(1);
        if !(1..=2).contains(&order) {
            return Err(invalid("transport.order", "must be 1 or 2"));
        }
        TransportParams {
            times: ttimes,
            x_grid: match t.and_then(|t| t.x_grid.as_ref()) {
                Some(g) => grid("transport.x_grid", g)?,
                None => x_grid.clone(),
            },
            order,
        }
    };
    let ledger = LedgerParams {
        bumps: raw.ledger.as_ref().and_then(|l| l.bumps).unwrap_or(10),
        seed: raw.ledger.as_ref().and_then(|l| l.seed).unwrap_or(seed),
    };

    Ok(RunConfig {
        flux,
        model,
        profile,
        seed,
        horizon,
        realizations,
        times,
        x_grid,
        max_order,
        coincidence_widths,
        workers,
        oracle,
        transport,
        ledger,
    })
}

fn horizon_value(h: Horizon<f64>) -> Value {
    match h {
        Horizon::Finite(t) => json!(t),
        Horizon::Infinite => json!("inf"),
    }
}

impl RunConfig {
    /// Canonical form with every default resolved; keys are sorted, so equal
    /// configs serialize to equal bytes.
    pub fn canonical(&self) -> Value {
        let one_based = |v: &[usize]| v.iter().map(|s| s + 1).collect::<Vec<_>>();
        let initial = match self.model.kind() {
            ModelKind::Deterministic(p) => json!({
                "kind": "deterministic",
                "breakpoints": p.breakpoints(),
                "pieces": one_based(p.pieces()),
            }),
            ModelKind::IidGrid { spacing, weights } => json!({
                "kind": "iid_grid",
                "spacing": spacing,
                "weights": weights,
                "window": [self.model.window().0, self.model.window().1],
            }),
            ModelKind::MarkovJump { rate, initial, transition } => json!({
                "kind": "markov_jump",
                "rate": rate,
                "initial": initial,
                "transition": transition,
                "window": [self.model.window().0, self.model.window().1],
            }),
        };
        json!({
            "states": self.flux.states(),
            "flux_values": self.flux.values(),
            "initial": initial,
            "seed": self.seed,
            "horizon": horizon_value(self.horizon),
            "realizations": self.realizations,
            "times": self.times,
            "x_grid": self.x_grid,
            "max_order": self.max_order,
            "coincidence_widths": self.coincidence_widths,
            "oracle": {
                "points": self.oracle.points,
                "x_range": self.oracle.x_range.map(|r| [r.0, r.1]),
                "t_range": self.oracle.t_range.map(|r| [r.0, r.1]),
                "seed": self.oracle.seed,
            },
            "transport": {
                "times": self.transport.times,
                "x_grid": self.transport.x_grid,
                "order": self.transport.order,
            },
            "ledger": { "bumps": self.ledger.bumps, "seed": self.ledger.seed },
        })
    }
}
