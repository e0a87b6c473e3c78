//! Phase-space representation of multimode Gaussian states.
//!
//! Conventions: ħ = 1, `a = (q + ip)/√2`, quadratures ordered
//! `(q1, p1, q2, p2, …)`, vacuum covariance `I/2`. A thermal mode with mean
//! occupation `N` has covariance `(N + 1/2)·I₂`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest tolerated asymmetry of an input covariance before symmetrization.
pub const ASYMMETRY_TOL: f64 = 1e-8;
/// Physicality slack on the smallest symplectic eigenvalue, scaled by
/// `max(1, max|cov|)`.
pub const PHYSICALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeLabel {
    S,
    I,
    I1,
    I2,
    E,
    E1,
    E2,
    Generic(usize),
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::S => write!(f, "S"),
            ModeLabel::I => write!(f, "I"),
            ModeLabel::I1 => write!(f, "I1"),
            ModeLabel::I2 => write!(f, "I2"),
            ModeLabel::E => write!(f, "E"),
            ModeLabel::E1 => write!(f, "E1"),
            ModeLabel::E2 => write!(f, "E2"),
            ModeLabel::Generic(k) => write!(f, "m{k}"),
        }
    }
}

impl FromStr for ModeLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "S" => ModeLabel::S,
            "I" => ModeLabel::I,
            "I1" => ModeLabel::I1,
            "I2" => ModeLabel::I2,
            "E" => ModeLabel::E,
            "E1" => ModeLabel::E1,
            "E2" => ModeLabel::E2,
            other => other
                .strip_prefix('m')
                .and_then(|k| k.parse().ok())
                .map(ModeLabel::Generic)
                .ok_or_else(|| format!("unknown mode label {other:?}"))?,
        })
    }
}

impl Serialize for ModeLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModeLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_distinct(labels: &[ModeLabel]) -> Result<()> {
    for (i, a) in labels.iter().enumerate() {
        if labels[..i].contains(a) {
            return Err(Error::LabelCollision(*a));
        }
    }
    Ok(())
}

/// The symplectic form `Ω` on `n` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    pub n: usize,
    pub matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n: usize) -> Self {
        SymplecticForm {
            n,
            matrix: linalg::omega(n),
        }
    }
}

/// Gaussian state: labelled modes, quadrature means and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    modes: Vec<ModeLabel>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// `nu` ascending, `sw · diag(ν⊗I₂) · swᵀ = cov`.
#[derive(Debug, Clone)]
pub struct WilliamsonDecomposition {
    pub nu: Vec<f64>,
    pub sw: DMatrix<f64>,
}

impl WilliamsonDecomposition {
    pub fn diagonal(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(2 * self.nu.len(), 2 * self.nu.len());
        for (k, &v) in self.nu.iter().enumerate() {
            d[(2 * k, 2 * k)] = v;
            d[(2 * k + 1, 2 * k + 1)] = v;
        }
        d
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.sw * self.diagonal() * self.sw.transpose()
    }
}

impl GaussianState {
    /// Builds a state, symmetrizing `cov` and checking the uncertainty relation.
    pub fn new(modes: Vec<ModeLabel>, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let state = Self::unchecked(modes, mean, cov)?;
        let nu_min = state.symplectic_eigenvalues()?[0];
        let slack = PHYSICALITY_TOL * linalg::max_abs(&state.cov).max(1.0);
        if nu_min < 0.5 - slack {
            return Err(Error::Nonphysical(nu_min));
        }
        Ok(state)
    }

    /// Structural checks only (labels, shapes, symmetry); no physicality test.
    pub(crate) fn unchecked(
        modes: Vec<ModeLabel>,
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    ) -> Result<Self> {
        check_distinct(&modes)?;
        let dim = 2 * modes.len();
        if mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: mean.len(),
            });
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: cov.nrows(),
            });
        }
        let asym = linalg::max_abs(&(&cov - cov.transpose()));
        if asym > ASYMMETRY_TOL * linalg::max_abs(&cov).max(1.0) {
            return Err(Error::Asymmetric(asym));
        }
        Ok(GaussianState {
            modes,
            mean,
            cov: linalg::symmetrize(&cov),
        })
    }

    pub fn vacuum(labels: &[ModeLabel]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::domain("n", 0.0, "n >= 1"));
        }
        let dim = 2 * labels.len();
        Self::unchecked(
            labels.to_vec(),
            DVector::zeros(dim),
            DMatrix::identity(dim, dim) * 0.5,
        )
    }

    pub fn thermal(n_th: f64, label: ModeLabel) -> Result<Self> {
        if !(n_th >= 0.0) || !n_th.is_finite() {
            return Err(Error::domain("N_th", n_th, "N_th >= 0"));
        }
        Self::unchecked(
            vec![label],
            DVector::zeros(2),
            DMatrix::identity(2, 2) * (n_th + 0.5),
        )
    }

    /// Coherent state `D(z)|0⟩` on a single mode.
    pub fn coherent(z: [f64; 2], label: ModeLabel) -> Result<Self> {
        Self::vacuum(&[label])?.displace(label, z)
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn index_of(&self, label: ModeLabel) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| *m == label)
            .ok_or(Error::UnknownLabel(label))
    }

    /// Shifts the mean of `label` by `z = (z_q, z_p)`.
    pub fn displace(&self, label: ModeLabel, z: [f64; 2]) -> Result<Self> {
        let k = self.index_of(label)?;
        let mut out = self.clone();
        out.mean[2 * k] += z[0];
        out.mean[2 * k + 1] += z[1];
        Ok(out)
    }

    pub fn tensor(&self, other: &GaussianState) -> Result<Self> {
        let mut modes = self.modes.clone();
        modes.extend_from_slice(&other.modes);
        check_distinct(&modes)?;
        let (da, db) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(da + db);
        mean.rows_mut(0, da).copy_from(&self.mean);
        mean.rows_mut(da, db).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(da + db, da + db);
        cov.view_mut((0, 0), (da, da)).copy_from(&self.cov);
        cov.view_mut((da, da), (db, db)).copy_from(&other.cov);
        Ok(GaussianState { modes, mean, cov })
    }

    /// Reduced state on `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[ModeLabel]) -> Result<Self> {
        check_distinct(keep)?;
        let idx: Vec<usize> = keep
            .iter()
            .map(|l| self.index_of(*l))
            .collect::<Result<_>>()?;
        let quads: Vec<usize> = idx.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let dim = quads.len();
        let mean = DVector::from_fn(dim, |i, _| self.mean[quads[i]]);
        let cov = DMatrix::from_fn(dim, dim, |i, j| self.cov[(quads[i], quads[j])]);
        Ok(GaussianState {
            modes: keep.to_vec(),
            mean,
            cov,
        })
    }

    /// Same state with modes permuted into `order`.
    pub fn reorder(&self, order: &[ModeLabel]) -> Result<Self> {
        if order.len() != self.modes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.modes.len(),
                found: order.len(),
            });
        }
        self.partial_trace(order)
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::symplectic_spectrum(&self.cov)
    }

    pub fn williamson(&self) -> Result<WilliamsonDecomposition> {
        let (nu, sw) = linalg::symplectic_diagonalize(&self.cov)?;
        let slack = PHYSICALITY_TOL * linalg::max_abs(&self.cov).max(1.0);
        if nu[0] < 0.5 - slack {
            return Err(Error::Nonphysical(nu[0]));
        }
        Ok(WilliamsonDecomposition { nu, sw })
    }

    /// True when every symplectic eigenvalue is within `tol` of 1/2.
    pub fn is_pure(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues()
            .map(|nu| nu.iter().all(|v| (v - 0.5).abs() <= tol))
            .unwrap_or(false)
    }

    /// `⟨a†a⟩` of one mode: `(tr cov + |mean|² − 1)/2`.
    pub fn mean_photon_number(&self, label: ModeLabel) -> Result<f64> {
        let k = self.index_of(label)?;
        let tr = self.cov[(2 * k, 2 * k)] + self.cov[(2 * k + 1, 2 * k + 1)];
        let m2 = self.mean[2 * k].powi(2) + self.mean[2 * k + 1].powi(2);
        Ok((tr + m2 - 1.0) / 2.0)
    }

    pub fn total_photon_number(&self) -> f64 {
        self.modes
            .iter()
            .map(|l| self.mean_photon_number(*l).unwrap_or(0.0))
            .sum()
    }

    /// Transposition of one mode (p → −p), used for the PPT test.
    pub fn partial_transpose(&self, label: ModeLabel) -> Result<Self> {
        let k = self.index_of(label)?;
        let mut out = self.clone();
        let p = 2 * k + 1;
        out.mean[p] = -out.mean[p];
        for j in 0..out.cov.nrows() {
            if j != p {
                out.cov[(p, j)] = -out.cov[(p, j)];
                out.cov[(j, p)] = -out.cov[(j, p)];
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "modes": self.modes,
            "mean": self.mean.iter().collect::<Vec<_>>(),
            "cov": (0..self.cov.nrows())
                .flat_map(|i| (0..self.cov.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| self.cov[(i, j)])
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            modes: Vec<ModeLabel>,
            mean: Vec<f64>,
            cov: Vec<f64>,
        }
        let raw: Raw = serde_json::from_value(value.clone())
            .map_err(|e| Error::Numerical(format!("bad state JSON: {e}")))?;
        let dim = raw.mean.len();
        if raw.cov.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: raw.cov.len(),
            });
        }
        Self::new(
            raw.modes,
            DVector::from_vec(raw.mean),
            DMatrix::from_row_slice(dim, dim, &raw.cov),
        )
    }
}

/// Affine symplectic map `R → S R + d` on an ordered set of labelled modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    modes: Vec<ModeLabel>,
    s: DMatrix<f64>,
    d: DVector<f64>,
}

/// Largest tolerated `|SΩSᵀ − Ω|` for a constructed transform.
pub const SYMPLECTIC_TOL: f64 = 1e-9;

impl SymplecticTransform {
    pub fn new(modes: Vec<ModeLabel>, s: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        check_distinct(&modes)?;
        let dim = 2 * modes.len();
        if s.nrows() != dim || s.ncols() != dim || d.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.nrows(),
            });
        }
        let defect = linalg::symplectic_defect(&s);
        if defect > SYMPLECTIC_TOL * linalg::max_abs(&s).max(1.0).powi(2) {
            return Err(Error::NotSymplectic(defect));
        }
        Ok(SymplecticTransform { modes, s, d })
    }

    pub fn identity(modes: &[ModeLabel]) -> Result<Self> {
        let dim = 2 * modes.len();
        Self::new(
            modes.to_vec(),
            DMatrix::identity(dim, dim),
            DVector::zeros(dim),
        )
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn symplectic_defect(&self) -> f64 {
        linalg::symplectic_defect(&self.s)
    }

    /// Beamsplitter with mode-A transmissivity `cos²θ`:
    /// `(q_A, p_A) → cosθ (q_A, p_A) + sinθ (q_B, p_B)`,
    /// `(q_B, p_B) → −sinθ (q_A, p_A) + cosθ (q_B, p_B)`.
    ///
    /// This is the real orthogonal representative of `e^{iθ(a†b + h.c.)}`;
    /// it differs from it by local phase rotations, which leave every
    /// phase-insensitive output (thermal environments) unchanged.
    pub fn beamsplitter(theta: f64, a: ModeLabel, b: ModeLabel) -> Result<Self> {
        let (c, s) = (theta.cos(), theta.sin());
        let mut m = DMatrix::zeros(4, 4);
        for k in 0..2 {
            m[(k, k)] = c;
            m[(k, k + 2)] = s;
            m[(k + 2, k)] = -s;
            m[(k + 2, k + 2)] = c;
        }
        Self::new(vec![a, b], m, DVector::zeros(4))
    }

    /// Beamsplitter with mode-A transmissivity `kappa`.
    pub fn attenuation_beamsplitter(kappa: f64, a: ModeLabel, b: ModeLabel) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::domain("kappa", kappa, "0 <= kappa <= 1"));
        }
        Self::beamsplitter(kappa.sqrt().acos(), a, b)
    }

    /// Two-mode squeezer `e^{g(a†_A a†_B − a_A a_B)}`; each output mode of
    /// the vacuum carries `sinh²g` photons and the cross block is
    /// `cosh g sinh g · diag(1, −1)`.
    ///
    /// Negative `g` is accepted for building inverses.
    pub fn two_mode_squeeze(g: f64, a: ModeLabel, b: ModeLabel) -> Result<Self> {
        let (c, s) = (g.cosh(), g.sinh());
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = c;
        m[(1, 1)] = c;
        m[(2, 2)] = c;
        m[(3, 3)] = c;
        m[(0, 2)] = s;
        m[(1, 3)] = -s;
        m[(2, 0)] = s;
        m[(3, 1)] = -s;
        Self::new(vec![a, b], m, DVector::zeros(4))
    }

    /// Phase rotation `e^{−iφ a†a}`: `a → e^{−iφ} a`.
    pub fn phase_rotation(phi: f64, a: ModeLabel) -> Result<Self> {
        let (c, s) = (phi.cos(), phi.sin());
        let m = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        Self::new(vec![a], m, DVector::zeros(2))
    }

    pub fn displacement_op(label: ModeLabel, z: [f64; 2]) -> Result<Self> {
        Self::new(
            vec![label],
            DMatrix::identity(2, 2),
            DVector::from_vec(z.to_vec()),
        )
    }

    /// Matrix and displacement of this transform embedded in `order`
    /// (identity on the other modes).
    pub fn embedded(&self, order: &[ModeLabel]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let dim = 2 * order.len();
        let pos: Vec<usize> = self
            .modes
            .iter()
            .map(|l| {
                order
                    .iter()
                    .position(|m| m == l)
                    .ok_or(Error::UnknownLabel(*l))
            })
            .collect::<Result<_>>()?;
        let mut s = DMatrix::identity(dim, dim);
        let mut d = DVector::zeros(dim);
        let quads: Vec<usize> = pos.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        for (i, &qi) in quads.iter().enumerate() {
            for (j, &qj) in quads.iter().enumerate() {
                s[(qi, qj)] = self.s[(i, j)];
            }
            d[qi] = self.d[i];
        }
        Ok((s, d))
    }

    /// `self` followed by `next`, on the union of both mode sets.
    pub fn then(&self, next: &SymplecticTransform) -> Result<Self> {
        let mut modes = self.modes.clone();
        for m in &next.modes {
            if !modes.contains(m) {
                modes.push(*m);
            }
        }
        let (s1, d1) = self.embedded(&modes)?;
        let (s2, d2) = next.embedded(&modes)?;
        Ok(SymplecticTransform {
            modes,
            d: &s2 * d1 + d2,
            s: s2 * s1,
        })
    }

    pub fn inverse(&self) -> Self {
        let s_inv = linalg::symplectic_inverse(&self.s);
        SymplecticTransform {
            modes: self.modes.clone(),
            d: -(&s_inv * &self.d),
            s: s_inv,
        }
    }

    /// `mean → S·mean + d`, `cov → S·cov·Sᵀ`.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        let (s, d) = self.embedded(state.modes())?;
        GaussianState::unchecked(
            state.modes.clone(),
            &s * &state.mean + d,
            &s * &state.cov * s.transpose(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ModeLabel::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn vacuum_and_thermal() {
        let v = GaussianState::vacuum(&[S]).unwrap();
        assert_eq!(v.cov(), &(DMatrix::identity(2, 2) * 0.5));
        assert_eq!(v.mean().norm(), 0.0);
        let v2 = GaussianState::vacuum(&[S, I1]).unwrap();
        assert_eq!(v2.cov(), &(DMatrix::identity(4, 4) * 0.5));
        let v3 = GaussianState::vacuum(&[S, I1, I2]).unwrap();
        for nu in v3.symplectic_eigenvalues().unwrap() {
            assert!(close(nu, 0.5, 1e-12));
        }
        assert_eq!(GaussianState::thermal(0.0, S).unwrap(), v);
        let t1 = GaussianState::thermal(1.0, S).unwrap();
        assert_eq!(t1.cov(), &(DMatrix::identity(2, 2) * 1.5));
        let t3 = GaussianState::thermal(3.0, S).unwrap();
        assert!(close(t3.symplectic_eigenvalues().unwrap()[0], 3.5, 1e-12));
    }

    #[test]
    fn constructor_errors() {
        assert_eq!(
            GaussianState::vacuum(&[S, S]).unwrap_err(),
            Error::LabelCollision(S)
        );
        assert!(matches!(
            GaussianState::thermal(-0.1, S),
            Err(Error::Domain { .. })
        ));
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.5]);
        assert!(matches!(
            GaussianState::new(vec![S], DVector::zeros(2), bad),
            Err(Error::Asymmetric(_))
        ));
        let squeezed_too_much = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.5]));
        assert!(matches!(
            GaussianState::new(vec![S], DVector::zeros(2), squeezed_too_much),
            Err(Error::Nonphysical(_))
        ));
        let v = GaussianState::vacuum(&[S]).unwrap();
        assert_eq!(v.displace(E, [1.0, 0.0]).unwrap_err(), Error::UnknownLabel(E));
    }

    #[test]
    fn displacement_and_energy() {
        let v = GaussianState::vacuum(&[S]).unwrap();
        let d = v.displace(S, [2.0, 0.0]).unwrap();
        assert_eq!(d.mean().as_slice(), &[2.0, 0.0]);
        assert_eq!(d.cov(), v.cov());
        assert!(close(d.mean_photon_number(S).unwrap(), 2.0, 1e-14));
        let t = GaussianState::thermal(1.0, S).unwrap();
        assert_eq!(t.displace(S, [0.0, 0.0]).unwrap(), t);
        let z = [1.2, -0.7];
        let dt = GaussianState::thermal(0.8, S).unwrap().displace(S, z).unwrap();
        let expected = (z[0] * z[0] + z[1] * z[1]) / 2.0 + 0.8;
        assert!(close(dt.mean_photon_number(S).unwrap(), expected, 1e-14));
        assert!(close(v.mean_photon_number(S).unwrap(), 0.0, 1e-15));
    }

    #[test]
    fn beamsplitter_limits() {
        let id = SymplecticTransform::beamsplitter(0.0, S, E).unwrap();
        assert_eq!(id.matrix(), &DMatrix::identity(4, 4));
        let swap = SymplecticTransform::beamsplitter(std::f64::consts::FRAC_PI_2, S, E).unwrap();
        let st = GaussianState::thermal(2.0, S)
            .unwrap()
            .tensor(&GaussianState::thermal(0.3, E).unwrap())
            .unwrap();
        let out = swap.apply(&st).unwrap().partial_trace(&[S]).unwrap();
        assert!(close(out.cov()[(0, 0)], 0.8, 1e-14));
        // transmissivity 1/4 against thermal(N_B)
        let (n_th, n_b) = (1.3, 0.4);
        let bs = SymplecticTransform::attenuation_beamsplitter(0.25, S, E).unwrap();
        let st = GaussianState::thermal(n_th, S)
            .unwrap()
            .tensor(&GaussianState::thermal(n_b, E).unwrap())
            .unwrap();
        let out = bs.apply(&st).unwrap().partial_trace(&[S]).unwrap();
        let expected = 0.25 * n_th + 0.75 * n_b + 0.5;
        assert!(close(out.cov()[(0, 0)], expected, 1e-14));
        assert!(close(out.cov()[(1, 1)], expected, 1e-14));
        assert!(close(out.cov()[(0, 1)], 0.0, 1e-15));
    }

    #[test]
    fn two_mode_squeezer_energy_and_marginal() {
        let g = (2f64.sqrt() + 1.0).ln();
        let tms = SymplecticTransform::two_mode_squeeze(g, S, I).unwrap();
        let out = tms.apply(&GaussianState::vacuum(&[S, I]).unwrap()).unwrap();
        assert!(close(out.mean_photon_number(S).unwrap(), 1.0, 1e-12));
        assert!(close(out.mean_photon_number(I).unwrap(), 1.0, 1e-12));
        let red = out.partial_trace(&[S]).unwrap();
        let th = GaussianState::thermal(g.sinh().powi(2), S).unwrap();
        assert!(linalg::max_abs(&(red.cov() - th.cov())) < 1e-12);
        let cs = g.cosh() * g.sinh();
        assert!(close(out.cov()[(0, 2)], cs, 1e-12));
        assert!(close(out.cov()[(1, 3)], -cs, 1e-12));
        let nu = out.symplectic_eigenvalues().unwrap();
        assert!(close(nu[0], 0.5, 1e-10) && close(nu[1], 0.5, 1e-10));
        let id = SymplecticTransform::two_mode_squeeze(0.0, S, I).unwrap();
        assert_eq!(id.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn trace_recovers_tensor_factor() {
        let a = GaussianState::thermal(0.7, S)
            .unwrap()
            .displace(S, [0.3, 1.0])
            .unwrap();
        let b = GaussianState::thermal(2.0, E).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.partial_trace(&[S]).unwrap(), a);
        assert_eq!(ab.partial_trace(&[E]).unwrap(), b);
        assert!(close(
            ab.total_photon_number(),
            a.total_photon_number() + b.total_photon_number(),
            1e-14
        ));
        assert_eq!(
            a.tensor(&GaussianState::vacuum(&[S]).unwrap()).unwrap_err(),
            Error::LabelCollision(S)
        );
    }

    #[test]
    fn transform_apply_dimension_and_labels() {
        let bs = SymplecticTransform::beamsplitter(0.3, S, E).unwrap();
        let st = GaussianState::vacuum(&[S, I]).unwrap();
        assert_eq!(bs.apply(&st).unwrap_err(), Error::UnknownLabel(E));
        let bad = SymplecticTransform::new(vec![S], DMatrix::identity(4, 4), DVector::zeros(4));
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
        let not_symp = SymplecticTransform::new(
            vec![S],
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0])),
            DVector::zeros(2),
        );
        assert!(matches!(not_symp, Err(Error::NotSymplectic(_))));
    }

    #[test]
    fn json_round_trip() {
        let st = SymplecticTransform::two_mode_squeeze(0.4, S, I)
            .unwrap()
            .apply(&GaussianState::vacuum(&[S, I]).unwrap())
            .unwrap()
            .displace(I, [0.5, -1.0])
            .unwrap();
        let back = GaussianState::from_json(&st.to_json()).unwrap();
        assert!(linalg::max_abs(&(back.cov() - st.cov())) < 1e-15);
        assert_eq!(back.modes(), st.modes());
        assert_eq!("m7".parse::<ModeLabel>().unwrap(), Generic(7));
    }
}
