//! Mean–MAD ambiguity sets and concrete members of them.
//!
//! A [`MeanMadSpec`] fixes the mean `mu` and the mean absolute deviation `d`
//! of a non-negative valuation. Nature may choose any distribution with those
//! two moments; the solvers restrict it to the two-point family
//! [`TwoPointDist`], while Monte Carlo checks draw from the wider
//! [`MemberDist`] library (three-point laws and infinite-variance Pareto tails).
//!
//! Two-point laws are stored with both `alpha` and `1 - alpha` so that the
//! extreme adversaries (`1 - alpha` far below machine epsilon) stay exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quadrature::tanh_sinh;

/// Mean `mu > 0` and MAD `d` with `0 < d < 2 mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct MeanMadSpec {
    mu: f64,
    d: f64,
}

#[derive(Deserialize)]
struct RawSpec {
    mu: f64,
    d: f64,
}

impl TryFrom<RawSpec> for MeanMadSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        MeanMadSpec::new(raw.mu, raw.d)
    }
}

impl MeanMadSpec {
    pub fn new(mu: f64, d: f64) -> Result<Self> {
        let ok = mu.is_finite() && d.is_finite() && mu > 0.0 && d > 0.0 && d < 2.0 * mu;
        if !ok {
            return Err(Error::InfeasibleSpec { mu, d });
        }
        Ok(Self { mu, d })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Smallest admissible low-point mass, `d / (2 mu)`; the low point is 0 there.
    pub fn min_alpha(&self) -> f64 {
        self.d / (2.0 * self.mu)
    }

    /// Largest admissible high-point mass, `1 - d / (2 mu)`.
    pub fn max_one_minus_alpha(&self) -> f64 {
        1.0 - self.min_alpha()
    }

    /// `mu - d/2`, the limit of the per-good robust bundling revenue.
    pub fn half_gap(&self) -> f64 {
        self.mu - 0.5 * self.d
    }
}

/// Two-point member: mass `alpha` on `x = mu - d/(2 alpha)`, mass `1 - alpha` on `y = mu + d/(2(1 - alpha))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TwoPointRecord", into = "TwoPointRecord")]
pub struct TwoPointDist {
    spec: MeanMadSpec,
    alpha: f64,
    one_minus_alpha: f64,
    low: f64,
    high: f64,
}

#[derive(Serialize, Deserialize)]
struct TwoPointRecord {
    mu: f64,
    d: f64,
    alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    one_minus_alpha: Option<f64>,
}

impl TryFrom<TwoPointRecord> for TwoPointDist {
    type Error = Error;
    fn try_from(r: TwoPointRecord) -> Result<Self> {
        let spec = MeanMadSpec::new(r.mu, r.d)?;
        match r.one_minus_alpha {
            Some(q) => TwoPointDist::from_one_minus_alpha(spec, q),
            None => make_two_point(spec, r.alpha),
        }
    }
}

impl From<TwoPointDist> for TwoPointRecord {
    fn from(t: TwoPointDist) -> Self {
        TwoPointRecord { mu: t.spec.mu, d: t.spec.d, alpha: t.alpha, one_minus_alpha: Some(t.one_minus_alpha) }
    }
}

/// Builds the two-point member with low-point mass `alpha`.
pub fn make_two_point(spec: MeanMadSpec, alpha: f64) -> Result<TwoPointDist> {
    let lower = spec.min_alpha();
    if !(alpha >= lower && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange { alpha, lower });
    }
    Ok(TwoPointDist::build(spec, alpha, 1.0 - alpha))
}

impl TwoPointDist {
    /// Builds the member from the high-point mass `q = 1 - alpha`, keeping `q` exact.
    pub fn from_one_minus_alpha(spec: MeanMadSpec, q: f64) -> Result<Self> {
        let upper = spec.max_one_minus_alpha();
        if !(q > 0.0 && q <= upper) {
            return Err(Error::AlphaOutOfRange { alpha: 1.0 - q, lower: spec.min_alpha() });
        }
        Ok(Self::build(spec, 1.0 - q, q))
    }

    fn build(spec: MeanMadSpec, alpha: f64, q: f64) -> Self {
        let low = if alpha <= spec.min_alpha() { 0.0 } else { (spec.mu - spec.d / (2.0 * alpha)).max(0.0) };
        let high = spec.mu + spec.d / (2.0 * q);
        Self { spec, alpha, one_minus_alpha: q, low, high }
    }

    pub fn spec(&self) -> MeanMadSpec {
        self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn one_minus_alpha(&self) -> f64 {
        self.one_minus_alpha
    }

    /// Low support point `x`.
    pub fn low(&self) -> f64 {
        self.low
    }

    /// High support point `y`.
    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn mean(&self) -> f64 {
        self.alpha * self.low + self.one_minus_alpha * self.high
    }

    pub fn mad(&self) -> f64 {
        let mean = self.mean();
        self.alpha * (mean - self.low).abs() + self.one_minus_alpha * (self.high - mean).abs()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.alpha * (self.low - mean).powi(2) + self.one_minus_alpha * (self.high - mean).powi(2)
    }
}

/// Finite three-point law (points need not be ordered or distinct).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePoint {
    pub points: [f64; 3],
    pub probs: [f64; 3],
}

/// A distribution offered as a member of a mean–MAD ambiguity set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MemberRecord", into = "MemberRecord")]
pub enum MemberDist {
    TwoPoint(TwoPointDist),
    ThreePoint {
        law: ThreePoint,
        spec: MeanMadSpec,
    },
    /// Pareto with tail index `a` in (1, 2] (infinite variance) and scale `x_m`.
    Pareto {
        a: f64,
        scale: f64,
        spec: MeanMadSpec,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MemberRecord {
    TwoPoint {
        mu: f64,
        d: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        one_minus_alpha: Option<f64>,
    },
    ThreePoint {
        mu: f64,
        d: f64,
        points: [f64; 3],
        probs: [f64; 3],
    },
    Pareto {
        mu: f64,
        d: f64,
        a: f64,
        scale: f64,
    },
}

impl TryFrom<MemberRecord> for MemberDist {
    type Error = Error;
    fn try_from(r: MemberRecord) -> Result<Self> {
        match r {
            MemberRecord::TwoPoint { mu, d, alpha, one_minus_alpha } => {
                let rec = TwoPointRecord { mu, d, alpha, one_minus_alpha };
                Ok(MemberDist::TwoPoint(TwoPointDist::try_from(rec)?))
            }
            MemberRecord::ThreePoint { mu, d, points, probs } => {
                MemberDist::three_point(MeanMadSpec::new(mu, d)?, points, probs)
            }
            MemberRecord::Pareto { mu, d, a, scale } => {
                let spec = MeanMadSpec::new(mu, d)?;
                let member = make_pareto_member(spec, a)?;
                if let MemberDist::Pareto { scale: expected, .. } = member {
                    if (scale - expected).abs() > 1e-12 * expected {
                        return Err(Error::InvalidMember {
                            reason: format!("Pareto scale {scale} inconsistent with mean {mu} and a={a}"),
                        });
                    }
                }
                Ok(MemberDist::Pareto { a, scale, spec })
            }
        }
    }
}

impl From<MemberDist> for MemberRecord {
    fn from(m: MemberDist) -> Self {
        match m {
            MemberDist::TwoPoint(t) => MemberRecord::TwoPoint {
                mu: t.spec.mu,
                d: t.spec.d,
                alpha: t.alpha,
                one_minus_alpha: Some(t.one_minus_alpha),
            },
            MemberDist::ThreePoint { law, spec } => {
                MemberRecord::ThreePoint { mu: spec.mu, d: spec.d, points: law.points, probs: law.probs }
            }
            MemberDist::Pareto { a, scale, spec } => MemberRecord::Pareto { mu: spec.mu, d: spec.d, a, scale },
        }
    }
}

/// MAD of a Pareto law with mean `mu` and tail index `a`: `2 mu (a-1)^(a-1) / a^a`.
pub fn pareto_induced_mad(mu: f64, a: f64) -> f64 {
    let am1 = a - 1.0;
    2.0 * mu * (am1 * am1.ln() - a * a.ln()).exp()
}

/// Builds the Pareto member with mean `spec.mu` and tail index `a`.
///
/// The tail index fixes the MAD, so `spec.d` must match the induced value.
pub fn make_pareto_member(spec: MeanMadSpec, a: f64) -> Result<MemberDist> {
    if !(a > 1.0 && a <= 2.0) {
        return Err(Error::IndexOutOfRange { a });
    }
    let induced = pareto_induced_mad(spec.mu, a);
    if (induced - spec.d).abs() > 1e-9 * induced {
        return Err(Error::MadMismatch { requested: spec.d, induced, a });
    }
    Ok(MemberDist::Pareto { a, scale: spec.mu * (a - 1.0) / a, spec })
}

impl MemberDist {
    /// Three-point law. Only basic validity is checked here; moment membership
    /// is the job of [`verify_membership`].
    pub fn three_point(spec: MeanMadSpec, points: [f64; 3], probs: [f64; 3]) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidMember { reason: format!("points must be finite and >= 0, got {points:?}") });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidMember { reason: format!("probabilities must be >= 0, got {probs:?}") });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMember { reason: format!("probabilities sum to {total}, not 1") });
        }
        Ok(MemberDist::ThreePoint { law: ThreePoint { points, probs }, spec })
    }

    pub fn spec(&self) -> MeanMadSpec {
        match self {
            MemberDist::TwoPoint(t) => t.spec,
            MemberDist::ThreePoint { spec, .. } | MemberDist::Pareto { spec, .. } => *spec,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            MemberDist::TwoPoint(_) => "two_point",
            MemberDist::ThreePoint { .. } => "three_point",
            MemberDist::Pareto { .. } => "pareto",
        }
    }

    /// Mean in closed form.
    pub fn mean(&self) -> f64 {
        match self {
            MemberDist::TwoPoint(t) => t.mean(),
            MemberDist::ThreePoint { law, .. } => law.points.iter().zip(law.probs).map(|(x, p)| x * p).sum(),
            MemberDist::Pareto { a, scale, .. } => a * scale / (a - 1.0),
        }
    }

    /// Mean absolute deviation about the distribution's own mean.
    ///
    /// Closed form for the finite laws. For Pareto it is the quadrature
    /// `2 * int_{x_m}^{mean} F(x) dx`, which uses `E|X - m| = 2 E[(m - X)^+]`
    /// and only touches the bounded lower part of the law.
    pub fn mad(&self) -> f64 {
        match self {
            MemberDist::TwoPoint(t) => t.mad(),
            MemberDist::ThreePoint { law, .. } => {
                let mean = self.mean();
                law.points.iter().zip(law.probs).map(|(x, p)| p * (x - mean).abs()).sum()
            }
            MemberDist::Pareto { a, scale, .. } => {
                let (a, xm) = (*a, *scale);
                let mean = self.mean();
                let cdf = |x: f64| -(a * (xm / x).ln()).exp_m1();
                2.0 * tanh_sinh(cdf, xm, mean, 1e-15, 1e-14).value
            }
        }
    }
}

/// Moment errors of a member against a target ambiguity set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MembershipReport {
    pub mean: f64,
    pub mad: f64,
    pub mean_error: f64,
    pub mad_error: f64,
    pub ok: bool,
}

/// Checks `|mean - mu| <= tol * mu` and `|mad - d| <= tol * d`.
pub fn verify_membership(dist: &MemberDist, spec: MeanMadSpec, tol: f64) -> MembershipReport {
    let mean = dist.mean();
    let mad = dist.mad();
    let mean_error = (mean - spec.mu).abs();
    let mad_error = (mad - spec.d).abs();
    let ok = mean_error <= tol * spec.mu && mad_error <= tol * spec.d;
    MembershipReport { mean, mad, mean_error, mad_error, ok }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mu: f64, d: f64) -> MeanMadSpec {
        MeanMadSpec::new(mu, d).unwrap()
    }

    #[test]
    fn spec_feasibility() {
        assert!(MeanMadSpec::new(1.0, 0.0).is_err());
        assert!(MeanMadSpec::new(1.0, 2.0).is_err());
        assert!(MeanMadSpec::new(-1.0, 0.5).is_err());
        assert!(MeanMadSpec::new(1.0, f64::NAN).is_err());
        assert!(MeanMadSpec::new(1.0, 1.999).is_ok());
    }

    #[test]
    fn two_point_examples() {
        let s = spec(1.0, 0.5);
        let t = make_two_point(s, 0.5).unwrap();
        assert_eq!((t.low(), t.high()), (0.5, 1.5));
        let t = make_two_point(s, 0.25).unwrap();
        assert_eq!(t.low(), 0.0);
        assert!((t.high() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(make_two_point(s, 0.2), Err(Error::AlphaOutOfRange { alpha: 0.2, lower: 0.25 }));
        assert!(make_two_point(s, 1.0).is_err());
    }

    #[test]
    fn tiny_high_mass_is_kept_exactly() {
        let s = spec(1.0, 0.5);
        let t = TwoPointDist::from_one_minus_alpha(s, 1e-300).unwrap();
        assert_eq!(t.one_minus_alpha(), 1e-300);
        assert_eq!(t.alpha(), 1.0);
        assert_eq!(t.low(), 0.75);
        assert!(t.high().is_infinite() || t.high() > 1e299);
    }

    #[test]
    fn three_point_examples() {
        let s = spec(1.0, 0.5);
        let good = MemberDist::three_point(s, [0.0, 1.0, 2.0], [0.25, 0.5, 0.25]).unwrap();
        assert!(verify_membership(&good, s, 1e-9).ok);
        let bad = MemberDist::three_point(s, [0.0, 1.0, 2.0], [0.3, 0.4, 0.3]).unwrap();
        let r = verify_membership(&bad, s, 1e-9);
        assert!(!r.ok);
        assert!((r.mad - 0.6).abs() < 1e-15);
    }

    #[test]
    fn pareto_examples() {
        let m = make_pareto_member(spec(1.0, 0.5), 2.0).unwrap();
        assert_eq!(m, MemberDist::Pareto { a: 2.0, scale: 0.5, spec: spec(1.0, 0.5) });
        let d15 = pareto_induced_mad(1.0, 1.5);
        assert!((d15 - 2.0 * 0.5f64.sqrt() / 1.5f64.powf(1.5)).abs() < 1e-15);
        assert!((d15 - 0.7698).abs() < 1e-4);
        assert!(matches!(make_pareto_member(spec(1.0, 0.3), 2.0), Err(Error::MadMismatch { .. })));
        assert!(matches!(make_pareto_member(spec(1.0, 0.5), 2.5), Err(Error::IndexOutOfRange { .. })));
        let m = make_pareto_member(spec(1.0, d15), 1.5).unwrap();
        assert!(verify_membership(&m, m.spec(), 1e-9).ok);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = spec(1.0, 0.5);
        let members = [
            MemberDist::TwoPoint(TwoPointDist::from_one_minus_alpha(s, 3.7e-200).unwrap()),
            MemberDist::TwoPoint(make_two_point(s, 0.3141592653589793).unwrap()),
            MemberDist::three_point(s, [0.0, 1.0, 2.0], [0.25, 0.5, 0.25]).unwrap(),
            make_pareto_member(spec(1.0, pareto_induced_mad(1.0, 1.5)), 1.5).unwrap(),
        ];
        for m in members {
            let text = serde_json::to_string(&m).unwrap();
            assert!(text.contains(&format!("\"kind\":\"{}\"", m.kind())));
            let back: MemberDist = serde_json::from_str(&text).unwrap();
            assert_eq!(back, m);
        }
        let bad = r#"{"kind":"two_point","mu":1.0,"d":0.5,"alpha":0.1}"#;
        assert!(serde_json::from_str::<MemberDist>(bad).is_err());
    }
}
