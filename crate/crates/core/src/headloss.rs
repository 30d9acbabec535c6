//! Pipe head loss laws and the flow admittance of a set of parallel pipes.
//!
//! Every law is odd and strictly increasing on the whole real line, so a
//! pipe carrying reversed flow simply sees a negative head loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// Head loss per unit relative length as a function of pipe flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HeadLoss {
    /// `U(q) = R q`, laminar flow.
    Linear {
        #[serde(rename = "R")]
        r: f64,
    },
    /// `U(q) = c |q| q`.
    SignedQuadratic { c: f64 },
    /// `U(q) = c (q |q| + q)`.
    QuadraticPlusLinear { c: f64 },
    /// `U(q) = c sign(q) |q|^gamma`.
    PowerLaw { c: f64, gamma: f64 },
}

impl HeadLoss {
    pub fn linear(r: f64) -> Self {
        HeadLoss::Linear { r }
    }

    pub fn signed_quadratic(c: f64) -> Self {
        HeadLoss::SignedQuadratic { c }
    }

    pub fn quadratic_plus_linear(c: f64) -> Self {
        HeadLoss::QuadraticPlusLinear { c }
    }

    pub fn power_law(c: f64, gamma: f64) -> Self {
        HeadLoss::PowerLaw { c, gamma }
    }

    /// Checks the parameters give a strictly increasing law.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite and positive, got {v}"
                )))
            }
        };
        match *self {
            HeadLoss::Linear { r } => positive("R", r),
            HeadLoss::SignedQuadratic { c } | HeadLoss::QuadraticPlusLinear { c } => {
                positive("c", c)
            }
            HeadLoss::PowerLaw { c, gamma } => {
                positive("c", c)?;
                positive("gamma", gamma)
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, HeadLoss::Linear { .. })
    }

    pub fn evaluate(&self, q: f64) -> f64 {
        match *self {
            HeadLoss::Linear { r } => r * q,
            HeadLoss::SignedQuadratic { c } => c * q.abs() * q,
            HeadLoss::QuadraticPlusLinear { c } => c * (q * q.abs() + q),
            HeadLoss::PowerLaw { c, gamma } => c * q.signum() * q.abs().powf(gamma) * nonzero(q),
        }
    }

    /// Flow producing head loss `h`. Closed form for every variant.
    pub fn invert(&self, h: f64) -> f64 {
        match *self {
            HeadLoss::Linear { r } => h / r,
            HeadLoss::SignedQuadratic { c } => h.signum() * (h.abs() / c).sqrt() * nonzero(h),
            HeadLoss::QuadraticPlusLinear { c } => {
                // positive root of q^2 + q - |h|/c = 0, written without cancellation
                let s = h.abs() / c;
                let q = 2.0 * s / (1.0 + (1.0 + 4.0 * s).sqrt());
                h.signum() * q * nonzero(h)
            }
            HeadLoss::PowerLaw { c, gamma } => {
                h.signum() * (h.abs() / c).powf(1.0 / gamma) * nonzero(h)
            }
        }
    }

    /// Inverse by bisection, independent of the closed forms.
    ///
    /// The bracket starts at `|q| = 1` and doubles until it straddles the
    /// target head.
    pub fn invert_bracketed(&self, h: f64) -> f64 {
        if h == 0.0 {
            return 0.0;
        }
        let f = |q: f64| self.evaluate(q) - h;
        let mut bound = 1.0_f64;
        while f(bound).signum() == f(-bound).signum() && bound < 1e300 {
            bound *= 2.0;
        }
        let (lo, hi) = (-bound, bound);
        roots::bisect(f, lo, hi, f(lo), f(hi), 0.0, 2200)
    }

    /// `U'(q)`. At `q = 0` a power law with `gamma < 1` has no finite slope.
    pub fn derivative(&self, q: f64) -> Result<f64> {
        Ok(match *self {
            HeadLoss::Linear { r } => r,
            HeadLoss::SignedQuadratic { c } => 2.0 * c * q.abs(),
            HeadLoss::QuadraticPlusLinear { c } => c * (2.0 * q.abs() + 1.0),
            HeadLoss::PowerLaw { c, gamma } => {
                if q == 0.0 {
                    if gamma < 1.0 {
                        return Err(Error::UnboundedDerivative { q });
                    } else if gamma > 1.0 {
                        0.0
                    } else {
                        c
                    }
                } else {
                    c * gamma * q.abs().powf(gamma - 1.0)
                }
            }
        })
    }

    /// Resistance at rest, `U'(0)`.
    pub fn zero_flow_resistance(&self) -> Result<f64> {
        self.derivative(0.0)
    }

    /// If `other = ratio * self` for every flow, returns `ratio`.
    pub fn proportionality_to(&self, other: &HeadLoss) -> Option<f64> {
        match (*self, *other) {
            (HeadLoss::Linear { r: a }, HeadLoss::Linear { r: b }) => Some(b / a),
            (HeadLoss::SignedQuadratic { c: a }, HeadLoss::SignedQuadratic { c: b }) => Some(b / a),
            (HeadLoss::QuadraticPlusLinear { c: a }, HeadLoss::QuadraticPlusLinear { c: b }) => {
                Some(b / a)
            }
            (HeadLoss::PowerLaw { c: a, gamma: ga }, HeadLoss::PowerLaw { c: b, gamma: gb })
                if ga == gb =>
            {
                Some(b / a)
            }
            _ => None,
        }
    }
}

// signum(0.0) is 1.0 in Rust; this zeroes the result at the origin.
#[inline]
fn nonzero(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        1.0
    }
}

/// The `n` parallel pipes between inlet and outlet junctions.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeSet {
    pipes: Vec<HeadLoss>,
    lengths: Option<Vec<f64>>,
}

impl PipeSet {
    pub fn new(pipes: Vec<HeadLoss>) -> Result<Self> {
        if pipes.is_empty() {
            return Err(Error::InvalidParameter(
                "a pipe set needs at least one pipe".into(),
            ));
        }
        for (i, p) in pipes.iter().enumerate() {
            p.validate()
                .map_err(|e| Error::InvalidParameter(format!("pipe {i}: {e}")))?;
        }
        Ok(PipeSet {
            pipes,
            lengths: None,
        })
    }

    pub fn with_lengths(mut self, lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() != self.pipes.len() {
            return Err(Error::InvalidParameter(format!(
                "{} lengths given for {} pipes",
                lengths.len(),
                self.pipes.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "pipe lengths must be positive, got {l}"
            )));
        }
        self.lengths = Some(lengths);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.pipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pipes.is_empty()
    }

    pub fn pipes(&self) -> &[HeadLoss] {
        &self.pipes
    }

    pub fn lengths(&self) -> Option<&[f64]> {
        self.lengths.as_deref()
    }

    pub fn check_index(&self, j: usize) -> Result<()> {
        if j < self.pipes.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: j,
                n: self.pipes.len(),
            })
        }
    }

    pub fn pipe(&self, j: usize) -> Result<&HeadLoss> {
        self.pipes.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            n: self.pipes.len(),
        })
    }

    /// Distance from the inlet of relative position `x` along pipe `j`.
    pub fn absolute_position(&self, j: usize, x: f64) -> Option<f64> {
        self.lengths.as_ref().and_then(|l| l.get(j)).map(|l| x * l)
    }

    /// Total flow through every pipe except `j` at head loss `dh`,
    /// all of them assumed intact.
    pub fn admittance_excluding(&self, j: usize, dh: f64) -> Result<f64> {
        self.check_index(j)?;
        Ok(self
            .pipes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, p)| p.invert(dh))
            .sum())
    }

    /// Slope of [`PipeSet::admittance_excluding`] in `dh`, by the inverse
    /// function rule.
    pub fn admittance_derivative_excluding(&self, j: usize, dh: f64) -> Result<f64> {
        self.check_index(j)?;
        let mut total = 0.0;
        for (i, p) in self.pipes.iter().enumerate().filter(|(i, _)| *i != j) {
            let q = p.invert(dh);
            let slope = p.derivative(q)?;
            if slope == 0.0 || !slope.is_finite() {
                return Err(Error::ZeroDerivative { pipe: i, q });
            }
            total += 1.0 / slope;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn variants() -> Vec<HeadLoss> {
        vec![
            HeadLoss::linear(0.3),
            HeadLoss::signed_quadratic(0.05),
            HeadLoss::quadratic_plus_linear(2.0),
            HeadLoss::power_law(0.7, 1.852),
            HeadLoss::power_law(1.3, 0.6),
            HeadLoss::power_law(2.0, 1.0),
        ]
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(HeadLoss::linear(0.1).evaluate(10.0), 1.0);
        assert!((HeadLoss::signed_quadratic(0.05).evaluate(-2.0) + 0.2).abs() < 1e-15);
        assert_eq!(HeadLoss::quadratic_plus_linear(2.0).evaluate(1.0), 4.0);
    }

    #[test]
    fn invert_examples() {
        assert_eq!(HeadLoss::linear(0.2).invert(1.0), 5.0);
        assert!((HeadLoss::quadratic_plus_linear(2.0).invert(4.0) - 1.0).abs() < 1e-15);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((HeadLoss::quadratic_plus_linear(4.0).invert(4.0) - golden).abs() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        assert!((HeadLoss::signed_quadratic(0.05).derivative(2.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(
            HeadLoss::quadratic_plus_linear(2.0)
                .derivative(0.0)
                .unwrap(),
            2.0
        );
        assert_eq!(
            HeadLoss::signed_quadratic(0.05).derivative(0.0).unwrap(),
            0.0
        );
        assert_eq!(HeadLoss::linear(0.4).derivative(-7.0).unwrap(), 0.4);
    }

    #[test]
    fn power_law_derivative_at_rest() {
        assert!(matches!(
            HeadLoss::power_law(1.0, 0.5).derivative(0.0),
            Err(Error::UnboundedDerivative { .. })
        ));
        assert_eq!(HeadLoss::power_law(1.0, 2.0).derivative(0.0).unwrap(), 0.0);
        assert_eq!(HeadLoss::power_law(3.0, 1.0).derivative(0.0).unwrap(), 3.0);
    }

    #[test]
    fn values_at_origin_are_zero() {
        for u in variants() {
            assert_eq!(u.evaluate(0.0), 0.0, "{u:?}");
            assert_eq!(u.invert(0.0), 0.0, "{u:?}");
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(HeadLoss::linear(0.0).validate().is_err());
        assert!(HeadLoss::signed_quadratic(-1.0).validate().is_err());
        assert!(HeadLoss::power_law(1.0, 0.0).validate().is_err());
        assert!(HeadLoss::power_law(1.0, f64::NAN).validate().is_err());
        assert!(PipeSet::new(vec![]).is_err());
        assert!(PipeSet::new(vec![HeadLoss::linear(1.0)])
            .unwrap()
            .with_lengths(vec![-1.0])
            .is_err());
    }

    #[test]
    fn round_trip_and_monotone_on_grid() {
        for u in variants() {
            let mut prev = f64::NEG_INFINITY;
            for i in -2000..=2000 {
                let q = i as f64 * 0.05;
                let h = u.evaluate(q);
                assert!(h > prev, "{u:?} not increasing at {q}");
                prev = h;
                let back = u.invert(h);
                assert!(
                    (back - q).abs() <= 1e-10 * q.abs().max(1.0),
                    "{u:?} q={q} back={back}"
                );
                assert_eq!(u.evaluate(-q), -h);
            }
        }
    }

    #[test]
    fn closed_form_matches_bracketed_inverse() {
        for u in variants() {
            for h in [-250.0, -3.0, -1e-3, 0.0, 1e-6, 0.4, 4.0, 1234.5] {
                let a = u.invert(h);
                let b = u.invert_bracketed(h);
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "{u:?} h={h}: {a} vs {b}"
                );
                assert!((u.evaluate(b) - h).abs() <= 1e-12 * h.abs().max(1.0));
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        for u in variants() {
            for q in [-40.0, -3.5, -0.7, 0.25, 1.0, 2.0, 17.0] {
                let step = 1e-6 * f64::max(1.0, f64::abs(q));
                let fd = (u.evaluate(q + step) - u.evaluate(q - step)) / (2.0 * step);
                let d = u.derivative(q).unwrap();
                assert!(
                    (d - fd).abs() <= 1e-5 * d.abs().max(1.0),
                    "{u:?} q={q}: {d} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn admittance_examples() {
        let lin = PipeSet::new(vec![
            HeadLoss::linear(0.1),
            HeadLoss::linear(0.2),
            HeadLoss::linear(0.3),
        ])
        .unwrap();
        let g = lin.admittance_excluding(1, 1.0).unwrap();
        assert!((g - (1.0 / 0.1 + 1.0 / 0.3)).abs() < 1e-12);
        assert_eq!(lin.admittance_excluding(0, 0.0).unwrap(), 0.0);
        for dh in [-3.0, 0.0, 2.5] {
            let gp = lin.admittance_derivative_excluding(1, dh).unwrap();
            assert!((gp - 13.333333333333334).abs() < 1e-12);
        }
        assert!(matches!(
            lin.admittance_excluding(3, 1.0),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));

        let ex2 = PipeSet::new(vec![
            HeadLoss::quadratic_plus_linear(2.0),
            HeadLoss::quadratic_plus_linear(4.0),
            HeadLoss::quadratic_plus_linear(6.0),
        ])
        .unwrap();
        // positive roots of 4q^2+4q-4 and 6q^2+6q-4
        let expected = (5f64.sqrt() - 1.0) / 2.0 + (-1.0 + (1.0f64 + 16.0 / 6.0).sqrt()) / 2.0;
        let g = ex2.admittance_excluding(0, 4.0).unwrap();
        assert!((g - expected).abs() < 1e-12);
        assert!((g - 1.0754).abs() < 1e-4);
        let gp = ex2.admittance_derivative_excluding(0, 0.0).unwrap();
        assert!((gp - (0.25 + 1.0 / 6.0)).abs() < 1e-15);

        let single = PipeSet::new(vec![HeadLoss::signed_quadratic(0.1)]).unwrap();
        assert_eq!(single.admittance_excluding(0, 7.0).unwrap(), 0.0);
    }

    #[test]
    fn admittance_slope_fails_at_rest_for_pure_quadratic() {
        let p = PipeSet::new(vec![
            HeadLoss::signed_quadratic(0.05),
            HeadLoss::signed_quadratic(0.1),
        ])
        .unwrap();
        assert!(matches!(
            p.admittance_derivative_excluding(0, 0.0),
            Err(Error::ZeroDerivative { pipe: 1, .. })
        ));
    }

    #[test]
    fn proportionality() {
        let a = HeadLoss::signed_quadratic(0.05);
        assert_eq!(
            a.proportionality_to(&HeadLoss::signed_quadratic(0.1)),
            Some(2.0)
        );
        assert_eq!(
            a.proportionality_to(&HeadLoss::quadratic_plus_linear(0.1)),
            None
        );
        assert_eq!(
            HeadLoss::power_law(1.0, 1.5).proportionality_to(&HeadLoss::power_law(2.0, 1.6)),
            None
        );
    }

    #[test]
    fn serde_shape() {
        let json = r#"[{"type":"linear","R":0.1},{"type":"signed_quadratic","c":0.05},
                       {"type":"quadratic_plus_linear","c":2},{"type":"power_law","c":1,"gamma":1.85}]"#;
        let v: Vec<HeadLoss> = serde_json::from_str(json).unwrap();
        assert_eq!(
            v,
            vec![
                HeadLoss::linear(0.1),
                HeadLoss::signed_quadratic(0.05),
                HeadLoss::quadratic_plus_linear(2.0),
                HeadLoss::power_law(1.0, 1.85),
            ]
        );
        assert!(serde_json::from_str::<HeadLoss>(r#"{"type":"hazen","c":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn admittance_is_odd_and_increasing(
            c in proptest::collection::vec(0.01f64..10.0, 2..6),
            dh in 0.001f64..50.0,
            step in 0.001f64..5.0,
        ) {
            let pipes = PipeSet::new(c.iter().enumerate().map(|(i, &c)| match i % 3 {
                0 => HeadLoss::signed_quadratic(c),
                1 => HeadLoss::quadratic_plus_linear(c),
                _ => HeadLoss::power_law(c, 1.85),
            }).collect()).unwrap();
            for j in 0..pipes.len() {
                let g = pipes.admittance_excluding(j, dh).unwrap();
                let g_neg = pipes.admittance_excluding(j, -dh).unwrap();
                let g_up = pipes.admittance_excluding(j, dh + step).unwrap();
                prop_assert_eq!(g, -g_neg);
                prop_assert!(g_up > g);
                prop_assert!(g > 0.0);
            }
        }
    }
}
