//! First-order behavior of the flow-space residual around a data point.

use crate::error::{Error, Result};
use crate::headloss::PipeSet;
use crate::hydraulics::{DataPoint, LeakSpec};
use crate::localization::{check_open_unit, estimate_outflow};
use crate::roots;

pub const ZERO_HEAD_TOLERANCE: f64 = 1e-12;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_MAX_HALVINGS: usize = 40;
const CONFUSION_TOLERANCE: f64 = 1e-10;
/// Largest move between consecutive curve points, as a fraction of the
/// leak flow. Keeps continuation on the branch through the seed.
const CONTINUATION_RADIUS: f64 = 0.1;

/// Head loss slopes of the pipe sections up- and downstream of a
/// hypothesized leak, weighted by section length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionResistances {
    pub r_in: f64,
    pub r_out: f64,
    /// `U'(0)`, resistance of the intact pipe at rest.
    pub r_0: f64,
}

impl SectionResistances {
    /// `R_in / R_out`, when the downstream section has nonzero resistance.
    pub fn ratio(&self) -> Option<f64> {
        (self.r_out > 0.0).then(|| self.r_in / self.r_out)
    }
}

/// `(R_in, R_out)` for pipe `i` at position `x_i` against data `d`.
fn section_pair(pipes: &PipeSet, i: usize, x_i: f64, d: &DataPoint) -> Result<(f64, f64)> {
    let u = pipes.pipe(i)?;
    let g = pipes.admittance_excluding(i, d.dh())?;
    Ok((
        x_i * u.derivative(d.q_in - g)?,
        (1.0 - x_i) * u.derivative(d.q_out - g)?,
    ))
}

pub fn section_resistances(
    pipes: &PipeSet,
    i: usize,
    x_i: f64,
    d: &DataPoint,
) -> Result<SectionResistances> {
    let (r_in, r_out) = section_pair(pipes, i, x_i, d)?;
    let r_0 = pipes.pipe(i)?.zero_flow_resistance()?;
    Ok(SectionResistances { r_in, r_out, r_0 })
}

/// Partial derivatives of `r̄_i` with `(dh, q_in)` independent and
/// `q_out` following the true leak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualDifferential {
    pub d_dqin: f64,
    pub d_ddh: f64,
}

impl ResidualDifferential {
    /// `dq_in / d(dh)` along which `r̄_i` stays constant to first order.
    pub fn confusion_slope(&self) -> Option<f64> {
        (self.d_dqin != 0.0).then(|| -self.d_ddh / self.d_dqin)
    }
}

/// Evaluated at a point where `r̄_i(x_i) = 0`, i.e. `x_i` is the candidate
/// of pipe `i` for `d`, and `(k, x)` is the true leak.
pub fn residual_differential(
    pipes: &PipeSet,
    i: usize,
    x_i: f64,
    k: usize,
    x: f64,
    d: &DataPoint,
) -> Result<ResidualDifferential> {
    let (rin_i, rout_i) = section_pair(pipes, i, x_i, d)?;
    let (rin_k, rout_k) = section_pair(pipes, k, x, d)?;
    if !(rout_i > 0.0 && rout_k > 0.0) {
        return Err(Error::Precondition(format!(
            "downstream section resistances must be positive (pipe {i}: {rout_i}, pipe {k}: {rout_k})"
        )));
    }
    let gp_i = pipes.admittance_derivative_excluding(i, d.dh())?;
    let gp_k = pipes.admittance_derivative_excluding(k, d.dh())?;
    Ok(ResidualDifferential {
        d_dqin: rin_i / rout_i - rin_k / rout_k,
        d_ddh: (1.0 + gp_k * (rin_k + rout_k)) / rout_k - (1.0 + gp_i * (rin_i + rout_i)) / rout_i,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionPoint {
    pub dh: f64,
    pub q_in: f64,
    /// `|r̄_i|` at the returned inflow.
    pub residual: f64,
    pub converged: bool,
}

/// An inflow trajectory along which pipe `i` at `x_i` stays consistent
/// with the data produced by the true leak.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionFlowCurve {
    pub pipe: usize,
    pub x: f64,
    pub points: Vec<ConfusionPoint>,
}

impl ConfusionFlowCurve {
    pub fn converged(&self) -> impl Iterator<Item = &ConfusionPoint> {
        self.points.iter().filter(|p| p.converged)
    }
}

struct ConfusionEquation<'a> {
    pipes: &'a PipeSet,
    i: usize,
    x_i: f64,
    truth: &'a LeakSpec,
}

impl ConfusionEquation<'_> {
    // q̂_out(k, x, dh, q) - q̂_out(i, x_i, dh, q)
    fn value(&self, dh: f64, q_in: f64) -> f64 {
        let truth_out = estimate_outflow(self.pipes, self.truth.pipe, self.truth.x, dh, q_in)
            .expect("validated");
        let hyp_out = estimate_outflow(self.pipes, self.i, self.x_i, dh, q_in).expect("validated");
        truth_out - hyp_out
    }

    fn outflow_slope(&self, j: usize, x_j: f64, dh: f64, q_in: f64) -> Option<f64> {
        let u = self.pipes.pipe(j).ok()?;
        let g = self.pipes.admittance_excluding(j, dh).ok()?;
        let q_out = estimate_outflow(self.pipes, j, x_j, dh, q_in).ok()?;
        let up = u.derivative(q_in - g).ok()?;
        let down = u.derivative(q_out - g).ok()?;
        let s = -(x_j * up) / ((1.0 - x_j) * down);
        s.is_finite().then_some(s)
    }

    fn slope(&self, dh: f64, q_in: f64) -> Option<f64> {
        let sk = self.outflow_slope(self.truth.pipe, self.truth.x, dh, q_in)?;
        let si = self.outflow_slope(self.i, self.x_i, dh, q_in)?;
        let s = sk - si;
        (s != 0.0).then_some(s)
    }

    fn newton(&self, dh: f64, seed: f64, radius: f64) -> Option<f64> {
        let mut q = seed;
        let mut f = self.value(dh, q);
        for _ in 0..NEWTON_MAX_ITER {
            if f.abs() <= CONFUSION_TOLERANCE {
                break;
            }
            let step = (f / self.slope(dh, q)?).clamp(-radius, radius);
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..NEWTON_MAX_HALVINGS {
                let trial = q - lambda * step;
                let ft = self.value(dh, trial);
                if ft.is_finite() && ft.abs() < f.abs() {
                    q = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (f.abs() <= CONFUSION_TOLERANCE && (q - seed).abs() <= radius).then_some(q)
    }

    fn bisection(&self, dh: f64, seed: f64, radius: f64) -> Option<f64> {
        let f = |q: f64| self.value(dh, q);
        let (lo, hi) = (seed - radius, seed + radius);
        let (flo, fhi) = (f(lo), f(hi));
        if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
            return None;
        }
        Some(roots::bisect(f, lo, hi, flo, fhi, 0.0, 400))
    }
}

/// Traces the confusion flow of pipe `i` across `dh_grid` in the given
/// order, each point seeded by the previous solution.
///
/// Each point must lie within a small radius of its seed, so the curve
/// follows one branch. Points with no root in reach (past a fold of the
/// branch, say) are kept and marked unconverged.
pub fn confusion_flow_curve(
    pipes: &PipeSet,
    i: usize,
    x_i: f64,
    truth: &LeakSpec,
    dh_grid: &[f64],
    seed_q_in: f64,
) -> Result<ConfusionFlowCurve> {
    pipes.check_index(i)?;
    check_open_unit(x_i)?;
    truth.validate(pipes)?;
    let eq = ConfusionEquation {
        pipes,
        i,
        x_i,
        truth,
    };
    let mut seed = seed_q_in;
    let mut points = Vec::with_capacity(dh_grid.len());
    for &dh in dh_grid {
        let leak = estimate_outflow(pipes, truth.pipe, truth.x, dh, seed)
            .map_or(0.0, |q| (seed - q).abs());
        let radius = CONTINUATION_RADIUS
            * if leak > 0.0 {
                leak
            } else {
                seed.abs().max(1.0)
            };
        let solved = eq
            .newton(dh, seed, radius)
            .or_else(|| eq.bisection(dh, seed, radius));
        let q_in = solved.unwrap_or(seed);
        let residual = eq.value(dh, q_in).abs();
        let converged = solved.is_some() && residual <= CONFUSION_TOLERANCE;
        if converged {
            seed = q_in;
        }
        points.push(ConfusionPoint {
            dh,
            q_in,
            residual,
            converged,
        });
    }
    Ok(ConfusionFlowCurve {
        pipe: i,
        x: x_i,
        points,
    })
}

/// Continuation outward from a nominal head loss in both directions.
/// The returned points are sorted by `dh`.
pub fn confusion_flow_curve_from_nominal(
    pipes: &PipeSet,
    i: usize,
    x_i: f64,
    truth: &LeakSpec,
    nominal_dh: f64,
    seed_q_in: f64,
    dh_grid: &[f64],
) -> Result<ConfusionFlowCurve> {
    let mut up: Vec<f64> = dh_grid
        .iter()
        .copied()
        .filter(|&h| h >= nominal_dh)
        .collect();
    let mut down: Vec<f64> = dh_grid
        .iter()
        .copied()
        .filter(|&h| h < nominal_dh)
        .collect();
    up.sort_by(f64::total_cmp);
    down.sort_by(|a, b| b.total_cmp(a));
    let mut curve = confusion_flow_curve(pipes, i, x_i, truth, &up, seed_q_in)?;
    let lower = confusion_flow_curve(pipes, i, x_i, truth, &down, seed_q_in)?;
    curve.points.extend(lower.points);
    curve.points.sort_by(|a, b| a.dh.total_cmp(&b.dh));
    Ok(curve)
}

/// Residual sensitivity to head loss at a zero head loss state of a
/// network whose pipe losses are proportional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroHeadSensitivity {
    /// `d r̄_i / d(dh)`.
    pub sensitivity: f64,
    /// `R_out,i != R_out,k`.
    pub outlet_resistances_differ: bool,
    /// `R_in,i + R_out,i != R_0,i`.
    pub sections_nonlinear: bool,
}

pub fn zero_dh_sensitivity(
    pipes: &PipeSet,
    i: usize,
    k: usize,
    x: f64,
    d: &DataPoint,
) -> Result<ZeroHeadSensitivity> {
    check_open_unit(x)?;
    let ui = pipes.pipe(i)?;
    let uk = pipes.pipe(k)?;
    if i == k {
        return Err(Error::Precondition(
            "hypothesized pipe must differ from the leaking pipe".into(),
        ));
    }
    if d.dh().abs() > ZERO_HEAD_TOLERANCE {
        return Err(Error::Precondition(format!(
            "data point must have zero head loss, got {}",
            d.dh()
        )));
    }
    match ui.proportionality_to(uk) {
        Some(c) if c != 0.0 && c.is_finite() => {}
        _ => {
            return Err(Error::Precondition(format!(
                "head loss of pipe {k} is not a constant multiple of pipe {i}"
            )))
        }
    }
    let r0 = ui.zero_flow_resistance()?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Precondition(format!(
            "pipe {i} has zero resistance at rest"
        )));
    }
    // at zero head loss the intact pipes carry nothing, and the candidate
    // position of every proportional pipe coincides with x
    let (q_in, q_out) = (d.q_in, d.q_out);
    let di_in = ui.derivative(q_in)?;
    let di_out = ui.derivative(q_out)?;
    let rout_i = (1.0 - x) * di_out;
    let rout_k = (1.0 - x) * uk.derivative(q_out)?;
    if !(rout_i > 0.0 && rout_k > 0.0) {
        return Err(Error::Precondition(
            "downstream section resistances must be positive".into(),
        ));
    }
    // R_in + R_out - R_0 written as a sum of slope deviations, exact for linear losses
    let excess = x * (di_in - r0) + (1.0 - x) * (di_out - r0);
    let sensitivity = (1.0 / rout_k - 1.0 / rout_i) * (-excess / r0);
    Ok(ZeroHeadSensitivity {
        sensitivity,
        outlet_resistances_differ: rout_i != rout_k,
        sections_nonlinear: excess != 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmbiguityReason {
    /// Same head loss law: the two pipes are interchangeable.
    Identical,
    /// Both laws linear: candidate positions never move.
    Linear,
}

impl AmbiguityReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            AmbiguityReason::Identical => "identical",
            AmbiguityReason::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InherentAmbiguity {
    pub pipes: (usize, usize),
    pub reason: AmbiguityReason,
}

/// Pipe pairs that no amount of data can tell apart.
pub fn detect_inherent_ambiguity(pipes: &PipeSet) -> Vec<InherentAmbiguity> {
    let p = pipes.pipes();
    let mut out = Vec::new();
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            let reason = if p[a] == p[b] {
                Some(AmbiguityReason::Identical)
            } else if p[a].is_linear() && p[b].is_linear() {
                Some(AmbiguityReason::Linear)
            } else {
                None
            };
            if let Some(reason) = reason {
                out.push(InherentAmbiguity {
                    pipes: (a, b),
                    reason,
                });
            }
        }
    }
    out
}
