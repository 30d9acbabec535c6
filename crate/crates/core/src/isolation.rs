//! Deciding which pipe leaks from several data points.
//!
//! Two procedures are offered. Candidate consistency keeps the pipes whose
//! candidate position does not move between hydraulic states. Leak-law
//! fitting checks, per pipe, whether the apparent leak head and the leak
//! flow follow a power law, which separates pipes with linear losses that
//! consistency alone cannot.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::headloss::PipeSet;
use crate::hydraulics::DataPoint;
use crate::localization::{candidate_position, check_open_unit};
use crate::sensitivity::{detect_inherent_ambiguity, InherentAmbiguity};

pub const DEFAULT_EPS_SPREAD: f64 = 1e-6;
pub const DEFAULT_EPS_FIT: f64 = 1e-6;

/// Candidate positions of one pipe across the data points.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSeries {
    pub pipe: usize,
    pub positions: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl CandidateSeries {
    fn new(pipe: usize, positions: Vec<f64>) -> Self {
        let min = positions.iter().copied().fold(f64::INFINITY, f64::min);
        let max = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = positions.iter().sum::<f64>() / positions.len() as f64;
        CandidateSeries {
            pipe,
            positions,
            min,
            max,
            mean,
        }
    }

    pub fn spread(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AmbiguityNote {
    /// Every pipe's candidate moves between states.
    NoConsistentPipe,
    /// More than one pipe has a constant candidate.
    MultipleConsistent,
    Inherent(InherentAmbiguity),
}

impl AmbiguityNote {
    pub fn describe(&self) -> String {
        match self {
            AmbiguityNote::NoConsistentPipe => "no_consistent_pipe".into(),
            AmbiguityNote::MultipleConsistent => "multiple_consistent".into(),
            AmbiguityNote::Inherent(a) => {
                format!("{}({}-{})", a.reason.as_str(), a.pipes.0 + 1, a.pipes.1 + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Isolated {
        pipe: usize,
        x: f64,
    },
    Ambiguous {
        candidates: Vec<usize>,
        reasons: Vec<AmbiguityNote>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationVerdict {
    pub series: Vec<CandidateSeries>,
    pub eps_spread: f64,
    pub verdict: Verdict,
}

impl IsolationVerdict {
    pub fn plausible(&self) -> Vec<usize> {
        self.series
            .iter()
            .filter(|s| s.spread() <= self.eps_spread)
            .map(|s| s.pipe)
            .collect()
    }
}

pub fn isolate_by_consistency(
    pipes: &PipeSet,
    data: &[DataPoint],
    eps_spread: f64,
) -> Result<IsolationVerdict> {
    isolate_by_consistency_with(Execution::default(), pipes, data, eps_spread)
}

/// The leaking pipe is the one whose candidate stays put, provided exactly
/// one pipe behaves that way.
pub fn isolate_by_consistency_with(
    exec: Execution,
    pipes: &PipeSet,
    data: &[DataPoint],
    eps_spread: f64,
) -> Result<IsolationVerdict> {
    if data.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: data.len(),
        });
    }
    if data.iter().any(|d| d.q_in == d.q_out) {
        return Err(Error::NoLeak);
    }
    let n = pipes.len();
    let per_point: Vec<Result<Vec<f64>>> = exec.map(data, |d| {
        (0..n).map(|j| candidate_position(pipes, j, d)).collect()
    });
    let per_point = per_point.into_iter().collect::<Result<Vec<_>>>()?;
    let series: Vec<CandidateSeries> = (0..n)
        .map(|j| CandidateSeries::new(j, per_point.iter().map(|xs| xs[j]).collect()))
        .collect();

    let plausible: Vec<usize> = series
        .iter()
        .filter(|s| s.spread() <= eps_spread)
        .map(|s| s.pipe)
        .collect();
    let verdict = match plausible.as_slice() {
        [k] => Verdict::Isolated {
            pipe: *k,
            x: series[*k].mean,
        },
        [] => Verdict::Ambiguous {
            candidates: vec![],
            reasons: vec![AmbiguityNote::NoConsistentPipe],
        },
        many => {
            let mut reasons = vec![AmbiguityNote::MultipleConsistent];
            reasons.extend(
                detect_inherent_ambiguity(pipes)
                    .into_iter()
                    .filter(|a| many.contains(&a.pipes.0) && many.contains(&a.pipes.1))
                    .map(AmbiguityNote::Inherent),
            );
            Verdict::Ambiguous {
                candidates: many.to_vec(),
                reasons,
            }
        }
    };
    Ok(IsolationVerdict {
        series,
        eps_spread,
        verdict,
    })
}

/// Head at the leak if it were in pipe `j` at `x_j`, from the upstream section.
pub fn apparent_leak_head(pipes: &PipeSet, j: usize, x_j: f64, d: &DataPoint) -> Result<f64> {
    check_open_unit(x_j)?;
    let u = pipes.pipe(j)?;
    let g = pipes.admittance_excluding(j, d.dh())?;
    Ok(d.h_in - x_j * u.evaluate(d.q_in - g))
}

/// Leak flow seen by every hypothesis alike.
pub fn apparent_leak_flow(d: &DataPoint) -> f64 {
    d.q_in - d.q_out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub c: f64,
    pub beta: f64,
    /// Root mean square misfit of predicted leak flows.
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakFitResult {
    /// Absent when the samples contain a non-positive pressure head.
    pub fit: Option<PowerLawFit>,
    pub negative_head: bool,
    pub accepted: bool,
}

/// Least squares fit of `q = C (h - h_y)^beta` on `(h, q)` samples.
///
/// The fit is linear in log-log space; the misfit is reported in flow
/// units. Any sample with `h <= h_y` means outflow without pressure, and
/// the hypothesis is rejected without fitting.
pub fn fit_leak_function(samples: &[(f64, f64)], h_y: f64, eps_fit: f64) -> Result<LeakFitResult> {
    if samples.len() < 3 {
        return Err(Error::DegenerateSamples(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    let first_q = samples[0].1;
    if samples.iter().all(|&(_, q)| q == first_q) {
        return Err(Error::DegenerateSamples("leak flows are all equal".into()));
    }
    if samples.iter().any(|&(h, _)| h - h_y <= 0.0) {
        return Ok(LeakFitResult {
            fit: None,
            negative_head: true,
            accepted: false,
        });
    }
    if samples.iter().any(|&(_, q)| q <= 0.0) {
        return Err(Error::DegenerateSamples(
            "leak flows must be positive".into(),
        ));
    }
    let n = samples.len() as f64;
    let logs: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(h, q)| ((h - h_y).ln(), q.ln()))
        .collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateSamples(
            "apparent leak heads do not vary".into(),
        ));
    }
    let beta = sxy / sxx;
    let c = (my - beta * mx).exp();
    let sse: f64 = samples
        .iter()
        .map(|&(h, q)| (q - c * (h - h_y).powf(beta)).powi(2))
        .sum();
    let rmse = (sse / n).sqrt();
    Ok(LeakFitResult {
        fit: Some(PowerLawFit { c, beta, rmse }),
        negative_head: false,
        accepted: rmse <= eps_fit,
    })
}

/// Leak law fit for one hypothesized pipe.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeFit {
    pub pipe: usize,
    pub x: f64,
    /// `(h_leak_j, q_leak)` per data point.
    pub samples: Vec<(f64, f64)>,
    pub outcome: Result<LeakFitResult>,
}

impl PipeFit {
    pub fn rmse(&self) -> Option<f64> {
        self.outcome
            .as_ref()
            .ok()
            .and_then(|r| r.fit)
            .map(|f| f.rmse)
    }

    fn rank_key(&self) -> (u8, f64, usize) {
        match &self.outcome {
            Ok(LeakFitResult { fit: Some(f), .. }) => (0, f.rmse, self.pipe),
            Ok(_) => (1, 0.0, self.pipe),
            Err(_) => (2, 0.0, self.pipe),
        }
    }
}

pub fn isolate_by_leak_fit(
    pipes: &PipeSet,
    data: &[DataPoint],
    candidates: &[f64],
    h_y: &[f64],
    eps_fit: f64,
) -> Result<Vec<PipeFit>> {
    isolate_by_leak_fit_with(Execution::default(), pipes, data, candidates, h_y, eps_fit)
}

/// Fits a leak law per pipe with its candidate frozen, best first.
///
/// Successful fits rank by misfit, then negative-head rejections, then
/// pipes whose samples could not be fitted. Ties go to the lower index.
pub fn isolate_by_leak_fit_with(
    exec: Execution,
    pipes: &PipeSet,
    data: &[DataPoint],
    candidates: &[f64],
    h_y: &[f64],
    eps_fit: f64,
) -> Result<Vec<PipeFit>> {
    let n = pipes.len();
    if candidates.len() != n || h_y.len() != n {
        return Err(Error::InvalidParameter(format!(
            "expected {n} candidates and elevations, got {} and {}",
            candidates.len(),
            h_y.len()
        )));
    }
    if data.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: data.len(),
        });
    }
    let mut fits: Vec<PipeFit> = exec.map_range(n, |j| {
        let x = candidates[j];
        let samples: Result<Vec<(f64, f64)>> = data
            .iter()
            .map(|d| Ok((apparent_leak_head(pipes, j, x, d)?, apparent_leak_flow(d))))
            .collect();
        match samples {
            Ok(samples) => {
                let outcome = fit_leak_function(&samples, h_y[j], eps_fit);
                PipeFit {
                    pipe: j,
                    x,
                    samples,
                    outcome,
                }
            }
            Err(e) => PipeFit {
                pipe: j,
                x,
                samples: vec![],
                outcome: Err(e),
            },
        }
    });
    fits.sort_by(|a, b| {
        let (ka, kb) = (a.rank_key(), b.rank_key());
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.cmp(&kb.2))
    });
    Ok(fits)
}
