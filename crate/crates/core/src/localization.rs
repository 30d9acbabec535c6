//! Leak candidates and residuals from a single data point.
//!
//! For a hypothesis "the leak sits in pipe `j` at relative position `x_j`"
//! two residuals are available: the head-space residual `r_j`, which is
//! affine in `x_j`, and the flow-space residual `r̄_j = q_out - q̂_out`.
//! Both vanish for exactly the same hypotheses.

use log::warn;

use crate::error::{Error, Result};
use crate::headloss::PipeSet;
use crate::hydraulics::DataPoint;
use crate::roots;

const HEAD_BRACKET_DOUBLINGS: usize = 80;
const HEAD_BISECTION_MAX_ITER: usize = 400;

/// The unique position in pipe `j` consistent with one data point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakCandidate {
    pub pipe: usize,
    pub x: f64,
    /// `r_j` evaluated at the candidate; zero up to rounding.
    pub residual_check: f64,
}

impl LeakCandidate {
    /// False only for data that no single leak could have produced.
    pub fn in_unit_interval(&self) -> bool {
        self.x > 0.0 && self.x < 1.0
    }
}

/// Which junction sensor is missing from a data point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sensor {
    HIn,
    HOut,
    QIn,
    QOut,
}

/// A data point with exactly one reading missing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialDataPoint {
    pub h_in: Option<f64>,
    pub h_out: Option<f64>,
    pub q_in: Option<f64>,
    pub q_out: Option<f64>,
}

impl PartialDataPoint {
    pub fn new(
        h_in: Option<f64>,
        h_out: Option<f64>,
        q_in: Option<f64>,
        q_out: Option<f64>,
    ) -> Result<Self> {
        let p = PartialDataPoint {
            h_in,
            h_out,
            q_in,
            q_out,
        };
        p.missing()?;
        Ok(p)
    }

    /// Drops one reading from a full data point.
    pub fn without(d: &DataPoint, sensor: Sensor) -> Self {
        let mut p = PartialDataPoint {
            h_in: Some(d.h_in),
            h_out: Some(d.h_out),
            q_in: Some(d.q_in),
            q_out: Some(d.q_out),
        };
        match sensor {
            Sensor::HIn => p.h_in = None,
            Sensor::HOut => p.h_out = None,
            Sensor::QIn => p.q_in = None,
            Sensor::QOut => p.q_out = None,
        }
        p
    }

    pub fn missing(&self) -> Result<Sensor> {
        let slots = [
            (self.h_in, Sensor::HIn),
            (self.h_out, Sensor::HOut),
            (self.q_in, Sensor::QIn),
            (self.q_out, Sensor::QOut),
        ];
        let absent: Vec<Sensor> = slots
            .iter()
            .filter(|(v, _)| v.is_none())
            .map(|(_, s)| *s)
            .collect();
        match absent.as_slice() {
            [s] => Ok(*s),
            _ => Err(Error::InvalidParameter(format!(
                "a partial data point needs exactly one missing reading, found {}",
                absent.len()
            ))),
        }
    }
}

pub(crate) fn check_open_unit(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "hypothesized position must lie in (0, 1), got {x}"
        )))
    }
}

/// Head-space residual `r_j`. Defined for any `x_j`, affine in it.
pub fn residual(pipes: &PipeSet, j: usize, x_j: f64, d: &DataPoint) -> Result<f64> {
    let u = pipes.pipe(j)?;
    let dh = d.dh();
    let g = pipes.admittance_excluding(j, dh)?;
    Ok(dh - x_j * u.evaluate(d.q_in - g) - (1.0 - x_j) * u.evaluate(d.q_out - g))
}

/// Closed-form root of `r_j` in `x_j`.
pub fn candidate_position(pipes: &PipeSet, j: usize, d: &DataPoint) -> Result<f64> {
    let u = pipes.pipe(j)?;
    if d.q_in == d.q_out {
        return Err(Error::NoLeak);
    }
    let dh = d.dh();
    let g = pipes.admittance_excluding(j, dh)?;
    let up = u.evaluate(d.q_in - g);
    let down = u.evaluate(d.q_out - g);
    let denom = up - down;
    if denom == 0.0 {
        return Err(Error::NoLeak);
    }
    let x = (dh - down) / denom;
    if !(x > 0.0 && x < 1.0) {
        warn!("candidate position {x} for pipe {j} lies outside (0, 1); data inconsistent with a single leak");
    }
    Ok(x)
}

pub fn all_candidates(pipes: &PipeSet, d: &DataPoint) -> Result<Vec<LeakCandidate>> {
    (0..pipes.len())
        .map(|j| {
            let x = candidate_position(pipes, j, d)?;
            Ok(LeakCandidate {
                pipe: j,
                x,
                residual_check: residual(pipes, j, x, d)?,
            })
        })
        .collect()
}

/// Outflow predicted from `(dh, q_in)` if the leak were in pipe `j` at `x_j`.
pub fn estimate_outflow(pipes: &PipeSet, j: usize, x_j: f64, dh: f64, q_in: f64) -> Result<f64> {
    check_open_unit(x_j)?;
    let u = pipes.pipe(j)?;
    let g = pipes.admittance_excluding(j, dh)?;
    let head = dh / (1.0 - x_j) - (x_j / (1.0 - x_j)) * u.evaluate(q_in - g);
    Ok(u.invert(head) + g)
}

/// Inflow predicted from `(dh, q_out)`; the mirror of [`estimate_outflow`].
pub fn estimate_inflow(pipes: &PipeSet, j: usize, x_j: f64, dh: f64, q_out: f64) -> Result<f64> {
    check_open_unit(x_j)?;
    let u = pipes.pipe(j)?;
    let g = pipes.admittance_excluding(j, dh)?;
    let head = dh / x_j - ((1.0 - x_j) / x_j) * u.evaluate(q_out - g);
    Ok(u.invert(head) + g)
}

/// Flow-space residual `r̄_j = q_out - q̂_out`.
pub fn residual_bar(pipes: &PipeSet, j: usize, x_j: f64, d: &DataPoint) -> Result<f64> {
    Ok(d.q_out - estimate_outflow(pipes, j, x_j, d.dh(), d.q_in)?)
}

/// Fills in the missing reading so that `r_j` vanishes.
///
/// Missing flows have closed forms. A missing head is found by bisection:
/// `r_j` is increasing and unbounded in `dh`.
pub fn complete_data_point(
    pipes: &PipeSet,
    j: usize,
    x_j: f64,
    p: &PartialDataPoint,
) -> Result<DataPoint> {
    check_open_unit(x_j)?;
    pipes.check_index(j)?;
    let missing = p.missing()?;
    let get = |v: Option<f64>| v.expect("only one reading is missing");
    Ok(match missing {
        Sensor::QOut => {
            let (h_in, h_out, q_in) = (get(p.h_in), get(p.h_out), get(p.q_in));
            let q_out = estimate_outflow(pipes, j, x_j, h_in - h_out, q_in)?;
            DataPoint::new(h_in, h_out, q_in, q_out)
        }
        Sensor::QIn => {
            let (h_in, h_out, q_out) = (get(p.h_in), get(p.h_out), get(p.q_out));
            let q_in = estimate_inflow(pipes, j, x_j, h_in - h_out, q_out)?;
            DataPoint::new(h_in, h_out, q_in, q_out)
        }
        Sensor::HIn => {
            let (h_out, q_in, q_out) = (get(p.h_out), get(p.q_in), get(p.q_out));
            let r = |h_in: f64| {
                residual(pipes, j, x_j, &DataPoint::new(h_in, h_out, q_in, q_out))
                    .expect("index checked")
            };
            let h_in = roots::find_root(
                r,
                h_out - 1.0,
                h_out + 1.0,
                0.0,
                HEAD_BRACKET_DOUBLINGS,
                HEAD_BISECTION_MAX_ITER,
            )?;
            DataPoint::new(h_in, h_out, q_in, q_out)
        }
        Sensor::HOut => {
            let (h_in, q_in, q_out) = (get(p.h_in), get(p.q_in), get(p.q_out));
            let r = |h_out: f64| {
                residual(pipes, j, x_j, &DataPoint::new(h_in, h_out, q_in, q_out))
                    .expect("index checked")
            };
            let h_out = roots::find_root(
                r,
                h_in - 1.0,
                h_in + 1.0,
                0.0,
                HEAD_BRACKET_DOUBLINGS,
                HEAD_BISECTION_MAX_ITER,
            )?;
            DataPoint::new(h_in, h_out, q_in, q_out)
        }
    })
}
