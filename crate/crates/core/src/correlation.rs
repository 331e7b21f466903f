//! Isotropic correlation functions ρ(h) and the field variance scale σ².

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{KrigeError, Result};

/// A point in 1, 2 or 3 dimensions with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Location(Vec<f64>);

impl Location {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > 3 {
            return Err(KrigeError::UnsupportedDimension(coords.len()));
        }
        if let Some(axis) = coords.iter().position(|c| !c.is_finite()) {
            return Err(KrigeError::NonFiniteCoordinate { axis });
        }
        Ok(Self(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &Location) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(KrigeError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.distance_unchecked(other))
    }

    pub(crate) fn distance_unchecked(&self, other: &Location) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl TryFrom<Vec<f64>> for Location {
    type Error = KrigeError;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Location::new(coords)
    }
}

impl From<Location> for Vec<f64> {
    fn from(loc: Location) -> Self {
        loc.0
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    WhiteNoise,
    Exponential,
    Gaussian,
    Spherical,
}

impl CorrelationKind {
    pub const ALL: [CorrelationKind; 4] = [
        CorrelationKind::WhiteNoise,
        CorrelationKind::Exponential,
        CorrelationKind::Gaussian,
        CorrelationKind::Spherical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorrelationKind::WhiteNoise => "white_noise",
            CorrelationKind::Exponential => "exponential",
            CorrelationKind::Gaussian => "gaussian",
            CorrelationKind::Spherical => "spherical",
        }
    }

    pub fn needs_range(self) -> bool {
        self != CorrelationKind::WhiteNoise
    }
}

impl fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorrelationKind {
    type Err = KrigeError;

    fn from_str(s: &str) -> Result<Self> {
        CorrelationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| KrigeError::InvalidModel {
                param: "kind",
                reason: format!(
                    "unknown model `{s}` (expected white_noise, exponential, gaussian or spherical)"
                ),
            })
    }
}

/// A stationary correlation model together with the field variance σ².
///
/// The nugget scales the correlation at every nonzero distance by
/// `1 - nugget`; ρ(0) stays exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationModel {
    kind: CorrelationKind,
    range: Option<f64>,
    sigma2: f64,
    nugget: f64,
}

impl CorrelationModel {
    pub fn new(kind: CorrelationKind, range: Option<f64>, sigma2: f64, nugget: f64) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(KrigeError::InvalidModel {
                param: "sigma2",
                reason: format!("must be finite and > 0, got {sigma2}"),
            });
        }
        if !(nugget.is_finite() && (0.0..1.0).contains(&nugget)) {
            return Err(KrigeError::InvalidModel {
                param: "nugget",
                reason: format!("must lie in [0, 1), got {nugget}"),
            });
        }
        let range = match (kind.needs_range(), range) {
            (false, _) => None,
            (true, Some(r)) if r.is_finite() && r > 0.0 => Some(r),
            (true, Some(r)) => {
                return Err(KrigeError::InvalidModel {
                    param: "range",
                    reason: format!("must be finite and > 0, got {r}"),
                })
            }
            (true, None) => {
                return Err(KrigeError::InvalidModel {
                    param: "range",
                    reason: format!("required for the {kind} model"),
                })
            }
        };
        Ok(Self {
            kind,
            range,
            sigma2,
            nugget,
        })
    }

    pub fn white_noise(sigma2: f64) -> Result<Self> {
        Self::new(CorrelationKind::WhiteNoise, None, sigma2, 0.0)
    }

    pub fn kind(&self) -> CorrelationKind {
        self.kind
    }

    pub fn range(&self) -> Option<f64> {
        self.range
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    /// ρ(h) for a distance `h ≥ 0`.
    pub fn at_distance(&self, h: f64) -> f64 {
        if h == 0.0 {
            return 1.0;
        }
        let sill = 1.0 - self.nugget;
        // `range` is always present for the non-white kinds.
        let r = self.range.unwrap_or(1.0);
        match self.kind {
            CorrelationKind::WhiteNoise => 0.0,
            CorrelationKind::Exponential => sill * (-h / r).exp(),
            CorrelationKind::Gaussian => {
                let s = h / r;
                sill * (-s * s).exp()
            }
            CorrelationKind::Spherical => {
                if h >= r {
                    0.0
                } else {
                    let s = h / r;
                    sill * (1.0 - 1.5 * s + 0.5 * s * s * s)
                }
            }
        }
    }
}

/// ρ between two locations.
pub fn correlation(model: &CorrelationModel, a: &Location, b: &Location) -> Result<f64> {
    Ok(model.at_distance(a.distance(b)?))
}

/// The n×n matrix Λ of pairwise correlations. Unit diagonal, exactly symmetric.
pub fn correlation_matrix(model: &CorrelationModel, locs: &[Location]) -> Result<DMatrix<f64>> {
    check_same_dim(locs)?;
    let n = locs.len();
    let mut m = DMatrix::identity(n, n);
    for i in 0..n {
        for l in 0..i {
            let rho = model.at_distance(locs[i].distance_unchecked(&locs[l]));
            m[(i, l)] = rho;
            m[(l, i)] = rho;
        }
    }
    Ok(m)
}

pub(crate) fn check_same_dim(locs: &[Location]) -> Result<()> {
    if let Some(first) = locs.first() {
        if let Some(bad) = locs.iter().find(|l| l.dim() != first.dim()) {
            return Err(KrigeError::DimensionMismatch {
                expected: first.dim(),
                found: bad.dim(),
            });
        }
    }
    Ok(())
}

/// Index pairs of locations at exactly zero distance.
pub fn coincident_pairs(locs: &[Location]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..locs.len() {
        for l in (i + 1)..locs.len() {
            if locs[i].coords() == locs[l].coords() {
                out.push((i, l));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn loc(c: &[f64]) -> Location {
        Location::new(c.to_vec()).unwrap()
    }

    fn model(kind: CorrelationKind, range: f64, nugget: f64) -> CorrelationModel {
        CorrelationModel::new(kind, Some(range), 1.0, nugget).unwrap()
    }

    #[test]
    fn white_noise_values() {
        let m = CorrelationModel::white_noise(1.0).unwrap();
        assert_eq!(correlation(&m, &loc(&[0.3, 0.4]), &loc(&[0.3, 0.4])).unwrap(), 1.0);
        assert_eq!(correlation(&m, &loc(&[0.3, 0.4]), &loc(&[0.3, 0.5])).unwrap(), 0.0);
    }

    #[test]
    fn exponential_at_unit_range() {
        let m = model(CorrelationKind::Exponential, 1.0, 0.0);
        let r = correlation(&m, &loc(&[0.0]), &loc(&[1.0])).unwrap();
        assert!((r - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_with_nugget() {
        let h = 0.3_f64;
        let g = model(CorrelationKind::Gaussian, 0.5, 0.2);
        assert!((g.at_distance(h) - 0.8 * (-(0.6_f64).powi(2)).exp()).abs() < 1e-15);
        let s = model(CorrelationKind::Spherical, 0.5, 0.2);
        assert!((s.at_distance(h) - 0.8 * (1.0 - 0.9 + 0.5 * 0.216)).abs() < 1e-15);
        assert_eq!(s.at_distance(0.5), 0.0);
        assert_eq!(s.at_distance(0.7), 0.0);
        assert_eq!(s.at_distance(0.0), 1.0);
    }

    #[test]
    fn dimension_mismatch_names_both() {
        let m = CorrelationModel::white_noise(1.0).unwrap();
        let err = correlation(&m, &loc(&[0.0, 1.0]), &loc(&[0.0])).unwrap_err();
        assert_eq!(err, KrigeError::DimensionMismatch { expected: 2, found: 1 });
    }

    #[test]
    fn invalid_parameters() {
        use CorrelationKind::*;
        assert!(CorrelationModel::new(Exponential, None, 1.0, 0.0).is_err());
        assert!(CorrelationModel::new(Exponential, Some(0.0), 1.0, 0.0).is_err());
        assert!(CorrelationModel::new(Gaussian, Some(1.0), 0.0, 0.0).is_err());
        assert!(CorrelationModel::new(Spherical, Some(1.0), 1.0, 1.0).is_err());
        assert!(CorrelationModel::new(Spherical, Some(1.0), 1.0, -0.1).is_err());
        assert!(Location::new(vec![]).is_err());
        assert!(Location::new(vec![0.0; 4]).is_err());
        assert!(Location::new(vec![f64::NAN]).is_err());
        assert_eq!("gaussian".parse::<CorrelationKind>().unwrap(), Gaussian);
        assert!("cubic".parse::<CorrelationKind>().is_err());
    }

    #[test]
    fn matrix_examples() {
        let wn = CorrelationModel::white_noise(2.0).unwrap();
        let pts = [loc(&[0.0, 0.0]), loc(&[1.0, 0.0]), loc(&[0.0, 3.0])];
        assert_eq!(correlation_matrix(&wn, &pts).unwrap(), DMatrix::identity(3, 3));

        let e = model(CorrelationKind::Exponential, 1.0, 0.0);
        assert_eq!(correlation_matrix(&e, &pts[..1]).unwrap(), DMatrix::from_element(1, 1, 1.0));

        let ln2 = std::f64::consts::LN_2;
        let m = correlation_matrix(&e, &[loc(&[0.0]), loc(&[ln2])]).unwrap();
        assert!((m[(0, 1)] - 0.5).abs() < 1e-15);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn coincident_detection() {
        let pts = [loc(&[0.0]), loc(&[1.0]), loc(&[0.0])];
        assert_eq!(coincident_pairs(&pts), vec![(0, 2)]);
    }

    fn any_kind() -> impl Strategy<Value = CorrelationKind> {
        prop::sample::select(CorrelationKind::ALL.to_vec())
    }

    fn any_model() -> impl Strategy<Value = CorrelationModel> {
        (any_kind(), 0.05f64..5.0, 0.1f64..10.0, 0.0f64..0.99)
            .prop_map(|(k, r, s, g)| CorrelationModel::new(k, Some(r), s, g).unwrap())
    }

    fn points(n: usize) -> impl Strategy<Value = Vec<Location>> {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), n)
            .prop_map(|v| v.into_iter().map(|c| Location::new(c).unwrap()).collect())
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(m in any_model(), pts in points(2)) {
            let ab = correlation(&m, &pts[0], &pts[1]).unwrap();
            let ba = correlation(&m, &pts[1], &pts[0]).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn monotone_in_distance(m in any_model(), a in 0.0f64..20.0, b in 0.0f64..20.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(m.at_distance(lo) >= m.at_distance(hi));
        }

        #[test]
        fn unit_diagonal_and_translation_invariant(
            m in any_model(),
            pts in points(6),
            shift in prop::collection::vec(-100.0f64..100.0, 2),
        ) {
            let base = correlation_matrix(&m, &pts).unwrap();
            for i in 0..pts.len() {
                prop_assert_eq!(base[(i, i)], 1.0);
            }
            let moved: Vec<Location> = pts
                .iter()
                .map(|p| Location::new(vec![p.coords()[0] + shift[0], p.coords()[1] + shift[1]]).unwrap())
                .collect();
            let shifted = correlation_matrix(&m, &moved).unwrap();
            for (x, y) in base.iter().zip(shifted.iter()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
