//! Forward steady-state solver for a parallel pipe network with one leak.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::headloss::PipeSet;
use crate::roots;

const BRACKET_DOUBLINGS: usize = 60;
const BISECTION_MAX_ITER: usize = 200;

/// Leak outflow as a function of the head at the leak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LeakFn {
    /// `q = C (h - h_y)^beta` for `h > h_y`.
    PowerLaw {
        #[serde(rename = "C")]
        c: f64,
        beta: f64,
        #[serde(default)]
        h_y: f64,
    },
    /// Pressure independent outflow.
    FixedDemand { q_leak: f64 },
    /// `q = C sqrt(h)`.
    Sqrt {
        #[serde(rename = "C", default = "one")]
        c: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl LeakFn {
    pub fn power_law(c: f64, beta: f64, h_y: f64) -> Self {
        LeakFn::PowerLaw { c, beta, h_y }
    }

    pub fn sqrt() -> Self {
        LeakFn::Sqrt { c: 1.0 }
    }

    pub fn fixed(q_leak: f64) -> Self {
        LeakFn::FixedDemand { q_leak }
    }

    /// Normalizes the shorthand into `(C, beta, h_y)` when pressure dependent.
    pub fn as_power_law(&self) -> Option<(f64, f64, f64)> {
        match *self {
            LeakFn::PowerLaw { c, beta, h_y } => Some((c, beta, h_y)),
            LeakFn::Sqrt { c } => Some((c, 0.5, 0.0)),
            LeakFn::FixedDemand { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.as_power_law() {
            Some((c, beta, h_y)) => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "leak coefficient C must be positive, got {c}"
                    )));
                }
                if !(beta.is_finite() && beta > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "leak exponent beta must be positive, got {beta}"
                    )));
                }
                if !h_y.is_finite() {
                    return Err(Error::InvalidParameter(
                        "leak elevation h_y must be finite".into(),
                    ));
                }
                Ok(())
            }
            None => match *self {
                LeakFn::FixedDemand { q_leak } if q_leak.is_finite() && q_leak >= 0.0 => Ok(()),
                _ => Err(Error::InvalidParameter(
                    "fixed leak demand must be finite and non-negative".into(),
                )),
            },
        }
    }

    /// Leak flow at head `h`. A power law is continued by zero below `h_y`.
    pub fn flow(&self, h: f64) -> f64 {
        match *self {
            LeakFn::FixedDemand { q_leak } => q_leak,
            _ => {
                let (c, beta, h_y) = self.as_power_law().expect("pressure dependent");
                if h > h_y {
                    c * (h - h_y).powf(beta)
                } else {
                    0.0
                }
            }
        }
    }
}

/// The true leak: pipe, relative position along it, and its outflow law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakSpec {
    pub pipe: usize,
    pub x: f64,
    pub leak: LeakFn,
}

impl LeakSpec {
    pub fn new(pipe: usize, x: f64, leak: LeakFn) -> Self {
        LeakSpec { pipe, x, leak }
    }

    pub fn validate(&self, pipes: &PipeSet) -> Result<()> {
        pipes.check_index(self.pipe)?;
        if !(self.x > 0.0 && self.x < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "leak position x must lie in (0, 1), got {}",
                self.x
            )));
        }
        self.leak.validate()
    }
}

/// Sensor readings at the two junctions in one steady state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub h_in: f64,
    pub h_out: f64,
    pub q_in: f64,
    pub q_out: f64,
}

impl DataPoint {
    pub fn new(h_in: f64, h_out: f64, q_in: f64, q_out: f64) -> Self {
        DataPoint {
            h_in,
            h_out,
            q_in,
            q_out,
        }
    }

    pub fn dh(&self) -> f64 {
        self.h_in - self.h_out
    }
}

/// Full solution of the network equations plus the leak law.
#[derive(Debug, Clone, PartialEq)]
pub struct HydraulicState {
    pub h_in: f64,
    pub h_out: f64,
    pub dh: f64,
    pub leak_pipe: usize,
    pub x: f64,
    /// `(pipe, flow)` for every intact pipe, in pipe order.
    pub intact_flows: Vec<(usize, f64)>,
    pub q_in_k: f64,
    pub q_out_k: f64,
    pub h_leak: f64,
    pub q_leak: f64,
}

impl HydraulicState {
    pub fn intact_total(&self) -> f64 {
        self.intact_flows.iter().map(|(_, q)| q).sum()
    }

    pub fn data_point(&self) -> DataPoint {
        let others = self.intact_total();
        DataPoint {
            h_in: self.h_in,
            h_out: self.h_out,
            q_in: self.q_in_k + others,
            q_out: self.q_out_k + others,
        }
    }

    /// Head at relative position `z` along pipe `i`.
    pub fn head_profile(&self, i: usize, z: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::InvalidParameter(format!(
                "relative position z must lie in [0, 1], got {z}"
            )));
        }
        if i != self.leak_pipe {
            if !self.intact_flows.iter().any(|(p, _)| *p == i) {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    n: self.intact_flows.len() + 1,
                });
            }
            return Ok(if z == 1.0 {
                self.h_out
            } else {
                self.h_in - z * self.dh
            });
        }
        Ok(if z <= self.x {
            self.h_in - (z / self.x) * (self.h_in - self.h_leak)
        } else if z == 1.0 {
            self.h_out
        } else {
            self.h_leak - ((z - self.x) / (1.0 - self.x)) * (self.h_leak - self.h_out)
        })
    }
}

/// Solves for the steady state with boundary heads `h_in`, `h_out`.
///
/// The unknown is the head at the leak. Inflow to the leak section minus
/// outflow from it minus leak flow is strictly decreasing in that head, so
/// the root is unique and found by bisection.
pub fn solve_leaky_state(
    pipes: &PipeSet,
    leak: &LeakSpec,
    h_in: f64,
    h_out: f64,
) -> Result<HydraulicState> {
    leak.validate(pipes)?;
    if !(h_in.is_finite() && h_out.is_finite()) {
        return Err(Error::InvalidParameter(
            "boundary heads must be finite".into(),
        ));
    }
    let k = leak.pipe;
    let x = leak.x;
    let u = pipes.pipe(k)?;
    let imbalance =
        |h: f64| u.invert((h_in - h) / x) - u.invert((h - h_out) / (1.0 - x)) - leak.leak.flow(h);

    let h_leak = roots::find_root(
        imbalance,
        h_in.min(h_out),
        h_in.max(h_out),
        0.0,
        BRACKET_DOUBLINGS,
        BISECTION_MAX_ITER,
    )?;

    if let Some((_, _, h_y)) = leak.leak.as_power_law() {
        if h_leak <= h_y {
            return Err(Error::NoRoot(format!(
                "leak head {h_leak} does not exceed leak elevation {h_y}; the leak law cannot be active"
            )));
        }
    }

    let dh = h_in - h_out;
    let q_in_k = u.invert((h_in - h_leak) / x);
    let q_out_k = u.invert((h_leak - h_out) / (1.0 - x));
    let intact_flows = pipes
        .pipes()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(i, p)| (i, p.invert(dh)))
        .collect();
    Ok(HydraulicState {
        h_in,
        h_out,
        dh,
        leak_pipe: k,
        x,
        intact_flows,
        q_in_k,
        q_out_k,
        h_leak,
        q_leak: q_in_k - q_out_k,
    })
}

/// Per-point outcomes of a boundary sweep, in input order.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub results: Vec<Result<HydraulicState>>,
}

impl Sweep {
    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }

    /// Successful points with their index in the boundary list.
    pub fn data_points(&self) -> Vec<(usize, DataPoint)> {
        self.results
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().ok().map(|s| (i, s.data_point())))
            .collect()
    }

    pub fn failures(&self) -> Vec<(usize, &Error)> {
        self.results
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e)))
            .collect()
    }
}

pub fn sweep(pipes: &PipeSet, leak: &LeakSpec, boundary: &[(f64, f64)]) -> Result<Sweep> {
    sweep_with(Execution::default(), pipes, leak, boundary)
}

/// Solves every boundary pair. Fails only when every point fails.
pub fn sweep_with(
    exec: Execution,
    pipes: &PipeSet,
    leak: &LeakSpec,
    boundary: &[(f64, f64)],
) -> Result<Sweep> {
    leak.validate(pipes)?;
    let results = exec.map(boundary, |&(h_in, h_out)| {
        solve_leaky_state(pipes, leak, h_in, h_out)
    });
    if !results.is_empty() && results.iter().all(|r| r.is_err()) {
        return Err(Error::AllPointsFailed(results.len()));
    }
    Ok(Sweep { results })
}
