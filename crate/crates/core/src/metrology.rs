//! Gaussian fidelity and quantum Fisher information for one-parameter
//! state families `κ ↦ ρ_κ`.
//!
//! Two independent QFI routes are provided: the Bures route
//! `𝓕(κ) = −4 ∂²_η √F(ρ_κ, ρ_η)|_{η=κ}` by finite differences of the
//! fidelity, and the symmetric-logarithmic-derivative route, which solves the
//! SLD equation in the Williamson frame of `ρ_κ`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::closed_form::ClosedForm;
use crate::error::{Error, Result};
use crate::linalg::{self, omega};
use crate::symplectic::GaussianState;

/// Symplectic eigenvalues within this distance of 1/2 count as pure modes.
pub const PURITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum QfiMethod {
    FiniteDiffFidelity,
    Sld,
    TwoModeInvariants,
    FockOracle,
    ClosedForm(ClosedForm),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QfiResult {
    pub value: f64,
    pub method: QfiMethod,
    pub step: Option<f64>,
    pub est_error: Option<f64>,
    /// Pure-mode blocks were dropped from the SLD solve.
    pub regularized: bool,
}

impl QfiResult {
    pub fn closed_form(tag: ClosedForm, value: f64) -> Self {
        QfiResult {
            value,
            method: QfiMethod::ClosedForm(tag),
            step: None,
            est_error: None,
            regularized: false,
        }
    }
}

fn same_shape(a: &GaussianState, b: &GaussianState) -> Result<()> {
    if a.n_modes() != b.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: a.n_modes(),
            found: b.n_modes(),
        });
    }
    Ok(())
}

/// `ln F` for the Uhlmann fidelity `F = (tr√(√ρ_a ρ_b √ρ_a))²`.
///
/// Uses `F = e^{−½δᵀ(V_a+V_b)⁻¹δ}/√det(V_a+V_b)` when either state is pure,
/// and otherwise the auxiliary-matrix closed form
/// `√F = ∏ₖ(2xₖ + √(4xₖ² − 1))^{1/2} det(V_a+V_b)^{−1/4} e^{−¼δᵀ(V_a+V_b)⁻¹δ}`
/// with `xₖ` the symplectic eigenvalues of
/// `V_aux = Ωᵀ(V_a+V_b)⁻¹(Ω/4 + V_b Ω V_a)`.
pub fn log_fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    same_shape(a, b)?;
    let n = a.n_modes();
    let sum = a.cov() + b.cov();
    let delta = b.mean() - a.mean();
    let logdet = linalg::logdet_spd(&sum)?;
    let quad = delta.dot(&linalg::solve_spd(&sum, &delta)?);

    if a.is_pure(PURITY_TOL) || b.is_pure(PURITY_TOL) {
        return Ok(-0.5 * quad - 0.5 * logdet);
    }

    let om = omega(n);
    let sum_inv = sum
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular V_a + V_b".into()))?;
    // V_aux is not symmetric in general; its spectrum comes from V_aux·Ω,
    // whose eigenvalues are ±i·xₖ for physical pairs
    let v_aux = om.transpose() * sum_inv * (&om * 0.25 + b.cov() * &om * a.cov());
    let lambdas = (&v_aux * &om).complex_eigenvalues();
    let xs: Vec<f64> = lambdas.iter().filter(|l| l.im > 0.0).map(|l| l.im).collect();
    let imaginary = xs.len() == n && lambdas.iter().all(|l| l.re.abs() <= 1e-8 * l.norm().max(1.0));
    let log_ftot: f64 = if imaginary {
        xs.iter()
            .map(|&x| {
                let r2 = 4.0 * x * x - 1.0;
                // xₖ = 1/2 up to round-off: the square root would amplify eigensolver noise
                let r = if r2 < 1e-12 { 0.0 } else { r2.sqrt() };
                (2.0 * x + r).ln()
            })
            .sum()
    } else {
        // ∏ₖ (2xₖ + √(4xₖ² − 1)) = √∏_λ 2λ(√(1 + 1/(4λ²)) + 1)
        let one = Complex::new(1.0, 0.0);
        0.5 * lambdas
            .iter()
            .map(|&l| {
                let w = (one + (l * l * 4.0).inv()).sqrt() + one;
                (l * w * 2.0).ln().re
            })
            .sum::<f64>()
    };
    // ln F = 2 ln √F
    Ok(log_ftot - 0.5 * logdet - 0.5 * quad)
}

pub fn fidelity(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    Ok(log_fidelity(a, b)?.exp().min(1.0))
}

/// Two-mode symplectic invariants of a state pair:
/// `Δ = det(V_a+V_b)`, `Γ = 16 det(ΩV_aΩV_b − I/4)`,
/// `Λ = 16 det(V_a + iΩ/2) det(V_b + iΩ/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeFidelityInvariants {
    pub delta: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl TwoModeFidelityInvariants {
    pub fn new(a: &GaussianState, b: &GaussianState) -> Result<Self> {
        same_shape(a, b)?;
        if a.n_modes() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: a.n_modes(),
            });
        }
        let om = omega(2);
        let delta = (a.cov() + b.cov()).determinant();
        let gamma = 16.0
            * (&om * a.cov() * &om * b.cov() - DMatrix::identity(4, 4) * 0.25).determinant();
        let half_i_om: DMatrix<Complex<f64>> = om.map(|v| Complex::new(0.0, 0.5 * v));
        let da = (a.cov().map(|v| Complex::new(v, 0.0)) + &half_i_om).determinant();
        let db = (b.cov().map(|v| Complex::new(v, 0.0)) + &half_i_om).determinant();
        let lambda = 16.0 * (da * db).re;
        Ok(TwoModeFidelityInvariants {
            delta,
            gamma,
            lambda: lambda.max(0.0),
        })
    }

    /// `√Γ + √Λ`, which stays ≥ 1 for physical pairs.
    pub fn root_sum(&self) -> f64 {
        self.gamma.max(0.0).sqrt() + self.lambda.sqrt()
    }

    /// Zero-mean fidelity `1/(√Γ + √Λ − √((√Γ + √Λ)² − Δ))`.
    pub fn fidelity(&self) -> f64 {
        let s = self.root_sum();
        1.0 / (s - (s * s - self.delta).max(0.0).sqrt())
    }
}

/// Two-mode fidelity through the Δ, Γ, Λ invariants, including the mean factor.
pub fn fidelity_two_mode(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    let inv = TwoModeFidelityInvariants::new(a, b)?;
    let sum = a.cov() + b.cov();
    let delta = b.mean() - a.mean();
    let quad = delta.dot(&linalg::solve_spd(&sum, &delta)?);
    Ok(inv.fidelity() * (-0.5 * quad).exp())
}

/// Default finite-difference step: 2% of the distance to the nearer end of
/// (0, 1). Smaller steps lose more to round-off in `√F` than they gain in
/// truncation error once the Richardson refinement is applied.
pub fn default_step(kappa: f64) -> f64 {
    0.02 * kappa.min(1.0 - kappa)
}

fn check_stencil(kappa: f64, h: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain("kappa", kappa, "0 < kappa < 1"));
    }
    if !(h > 0.0) || kappa - 2.0 * h <= 0.0 || kappa + 2.0 * h >= 1.0 {
        return Err(Error::StepTooLarge { kappa, step: h });
    }
    Ok(())
}

/// Five-point second derivative from samples at `x-2h, x-h, x, x+h, x+2h`.
fn second_derivative(f: &[f64; 5], h: f64) -> f64 {
    (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h)
}

/// Richardson combination of two O(h⁴) estimates at steps `h` and `h/2`.
fn richardson4(coarse: f64, fine: f64) -> (f64, f64) {
    let r = (16.0 * fine - coarse) / 15.0;
    (r, (r - fine).abs())
}

fn fd_once<F>(family: &F, kappa: f64, h: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<GaussianState>,
{
    check_stencil(kappa, h)?;
    let rho = family(kappa)?;
    let root_fid = |eta: f64| -> Result<f64> { Ok((0.5 * log_fidelity(&rho, &family(eta)?)?).exp()) };
    let mut samples = [[0.0; 5]; 2];
    for (level, step) in [h, 0.5 * h].into_iter().enumerate() {
        for (j, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].into_iter().enumerate() {
            samples[level][j] = root_fid(kappa + off * step)?;
        }
    }
    let coarse = second_derivative(&samples[0], h);
    let fine = second_derivative(&samples[1], 0.5 * h);
    let (d2, err) = richardson4(coarse, fine);
    Ok((-4.0 * d2, 4.0 * err))
}

/// QFI from the second derivative of the root fidelity (5-point stencil at
/// steps `h` and `h/2`, one Richardson refinement). The step is halved up to
/// three times while the error estimate exceeds `1e-7` relative.
pub fn qfi_fd<F>(family: F, kappa: f64, step: Option<f64>) -> Result<QfiResult>
where
    F: Fn(f64) -> Result<GaussianState>,
{
    let mut h = step.unwrap_or_else(|| default_step(kappa));
    let (mut best, mut best_err, mut best_h) = {
        let (v, e) = fd_once(&family, kappa, h)?;
        (v, e, h)
    };
    for _ in 0..3 {
        if best_err <= 1e-7 * best.abs().max(1.0) {
            break;
        }
        h *= 0.5;
        let (v, e) = fd_once(&family, kappa, h)?;
        if e < best_err {
            best = v;
            best_err = e;
            best_h = h;
        }
    }
    if best < -1e-6 * best_err.max(1.0) && best < -best_err {
        return Err(Error::Numerical(format!(
            "negative QFI {best:e} (error estimate {best_err:e})"
        )));
    }
    Ok(QfiResult {
        value: best.max(0.0),
        method: QfiMethod::FiniteDiffFidelity,
        step: Some(best_h),
        est_error: Some(best_err),
        regularized: false,
    })
}

/// First derivatives of mean and covariance by a Richardson-refined 5-point
/// central difference. Returns `(dm, dV, error estimate on dV)`.
pub fn moment_derivatives<F>(
    family: &F,
    kappa: f64,
    h: f64,
) -> Result<(DVector<f64>, DMatrix<f64>, f64)>
where
    F: Fn(f64) -> Result<GaussianState>,
{
    check_stencil(kappa, h)?;
    let first = |step: f64| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let pts: Vec<GaussianState> = [-2.0, -1.0, 1.0, 2.0]
            .iter()
            .map(|o| family(kappa + o * step))
            .collect::<Result<_>>()?;
        let w = [1.0, -8.0, 8.0, -1.0];
        let mut dm = DVector::zeros(pts[0].mean().len());
        let mut dv = DMatrix::zeros(pts[0].cov().nrows(), pts[0].cov().ncols());
        for (p, c) in pts.iter().zip(w) {
            dm += p.mean() * c;
            dv += p.cov() * c;
        }
        let scale = 1.0 / (12.0 * step);
        Ok((dm * scale, dv * scale))
    };
    let (m1, v1) = first(h)?;
    let (m2, v2) = first(0.5 * h)?;
    let dm = (&m2 * 16.0 - m1) / 15.0;
    let dv = (&v2 * 16.0 - v1) / 15.0;
    let err = linalg::max_abs(&(&dv - v2));
    Ok((dm, dv, err))
}

/// Gaussian QFI from moment derivatives at a state with covariance `cov`.
///
/// With `V = S D Sᵀ` and `P = 2 S⁻¹ ∂V S⁻ᵀ` split into 2×2 blocks
/// `P_kl = a I + b J + c Z + d X`, the covariance part is
/// `½ Σ_kl [2(a²+b²)/(μ_kμ_l − 1) + 2(c²+d²)/(μ_kμ_l + 1)]`, `μ = 2ν`.
/// Blocks with `μ_kμ_l − 1 < 1e-8` (two pure modes) have no `(a, b)`
/// component for a family that stays pure there and are dropped.
pub fn qfi_from_moments(
    state: &GaussianState,
    dm: &DVector<f64>,
    dv: &DMatrix<f64>,
) -> Result<(f64, bool)> {
    let w = state.williamson()?;
    let s_inv = linalg::symplectic_inverse(&w.sw);
    let p = &s_inv * dv * s_inv.transpose() * 2.0;
    let n = state.n_modes();
    let mut total = 0.0;
    let mut regularized = false;
    for k in 0..n {
        for l in 0..n {
            let blk = |i: usize, j: usize| p[(2 * k + i, 2 * l + j)];
            let a = 0.5 * (blk(0, 0) + blk(1, 1));
            let b = 0.5 * (blk(0, 1) - blk(1, 0));
            let c = 0.5 * (blk(0, 0) - blk(1, 1));
            let d = 0.5 * (blk(0, 1) + blk(1, 0));
            let mu = 4.0 * w.nu[k] * w.nu[l];
            if mu - 1.0 > 1e-8 {
                total += 2.0 * (a * a + b * b) / (mu - 1.0);
            } else {
                regularized = true;
            }
            total += 2.0 * (c * c + d * d) / (mu + 1.0);
        }
    }
    let cov_term = 0.5 * total;
    let mean_term = dm.dot(&linalg::solve_spd(state.cov(), dm)?);
    Ok((cov_term + mean_term, regularized))
}

/// QFI through the symmetric logarithmic derivative.
pub fn qfi_sld<F>(family: F, kappa: f64, step: Option<f64>) -> Result<QfiResult>
where
    F: Fn(f64) -> Result<GaussianState>,
{
    let h = step.unwrap_or_else(|| default_step(kappa));
    let state = family(kappa)?;
    let (dm, dv, dv_err) = moment_derivatives(&family, kappa, h)?;
    let (value, regularized) = qfi_from_moments(&state, &dm, &dv)?;
    // first-order propagation of the derivative error
    let est = 2.0 * value.abs() * dv_err / linalg::max_abs(&dv).max(1e-300);
    Ok(QfiResult {
        value,
        method: QfiMethod::Sld,
        step: Some(h),
        est_error: Some(est.min(value.abs())),
        regularized,
    })
}

/// QFI of a two-mode zero-mean family through the Δ, Γ, Λ invariants:
/// `(∂²Δ − 2∂²(√Γ+√Λ)) / (√Γ + √Λ − 1)` at `κ' = κ`.
pub fn qfi_two_mode<F>(family: F, kappa: f64, step: Option<f64>) -> Result<QfiResult>
where
    F: Fn(f64) -> Result<GaussianState>,
{
    let h = step.unwrap_or_else(|| default_step(kappa));
    check_stencil(kappa, h)?;
    let rho = family(kappa)?;
    let mut d = [[0.0; 5]; 2];
    let mut s = [[0.0; 5]; 2];
    for (level, st) in [h, 0.5 * h].into_iter().enumerate() {
        for (j, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].into_iter().enumerate() {
            let inv = TwoModeFidelityInvariants::new(&rho, &family(kappa + off * st)?)?;
            d[level][j] = inv.delta;
            s[level][j] = inv.root_sum();
        }
    }
    let (d2, _) = richardson4(second_derivative(&d[0], h), second_derivative(&d[1], 0.5 * h));
    let (s2, _) = richardson4(second_derivative(&s[0], h), second_derivative(&s[1], 0.5 * h));
    let denom = s[1][2] - 1.0;
    if denom <= 1e-12 {
        return Err(Error::Numerical(
            "pure two-mode state: invariant denominator vanishes".into(),
        ));
    }
    Ok(QfiResult {
        value: (d2 - 2.0 * s2) / denom,
        method: QfiMethod::TwoModeInvariants,
        step: Some(h),
        est_error: None,
        regularized: false,
    })
}

/// Which coordinate a QFI value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parametrization {
    Kappa,
    /// `θ = arccos √κ`
    Theta,
    SqrtKappa,
}

/// Multiplicative factors converting QFI in other coordinates to QFI in κ:
/// `𝓕(κ) = 𝓕(θ)/(4κ(1−κ)) = 𝓕(√κ)/(4κ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReparamFactors {
    pub theta: f64,
    pub sqrt_kappa: f64,
}

pub fn reparameterize_qfi(kappa: f64) -> Result<ReparamFactors> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain("kappa", kappa, "0 < kappa < 1"));
    }
    Ok(ReparamFactors {
        theta: 1.0 / (4.0 * kappa * (1.0 - kappa)),
        sqrt_kappa: 1.0 / (4.0 * kappa),
    })
}

/// Converts a QFI value given in `from` coordinates to κ coordinates.
pub fn to_kappa_qfi(value: f64, from: Parametrization, kappa: f64) -> Result<f64> {
    let f = reparameterize_qfi(kappa)?;
    Ok(match from {
        Parametrization::Kappa => value,
        Parametrization::Theta => value * f.theta,
        Parametrization::SqrtKappa => value * f.sqrt_kappa,
    })
}

/// Single-mode Gaussian probe of energy `N_S` with a share `f` in squeezing
/// and the rest in a coherent amplitude, through the thermal attenuator.
pub fn single_mode_gaussian_family(
    n_s: f64,
    f: f64,
    n_b: f64,
) -> impl Fn(f64) -> Result<GaussianState> + Sync + Send {
    let r = (f * n_s).sqrt().asinh();
    let amp = (2.0 * (1.0 - f) * n_s).sqrt();
    move |kappa| crate::channels::squeezed_displaced_receiver(r, amp, kappa, n_b)
}

/// Largest SLD QFI over [`single_mode_gaussian_family`] splits: a 41-point
/// scan of `f ∈ [0, 1]`, refined by golden section around the best node.
/// Returns the optimal split with its QFI.
pub fn best_single_mode_gaussian(n_s: f64, kappa: f64, n_b: f64) -> Result<(f64, QfiResult)> {
    if !(n_s > 0.0) {
        return Err(Error::domain("N_S", n_s, "N_S > 0"));
    }
    let q = |f: f64| qfi_sld(single_mode_gaussian_family(n_s, f, n_b), kappa, None);
    let nodes = 40;
    let mut best = (0.0, q(0.0)?);
    for i in 1..=nodes {
        let f = i as f64 / nodes as f64;
        let v = q(f)?;
        if v.value > best.1.value {
            best = (f, v);
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ((best.0 - 1.0 / nodes as f64).max(0.0), (best.0 + 1.0 / nodes as f64).min(1.0));
    while hi - lo > 1e-7 {
        let (x1, x2) = (hi - inv_phi * (hi - lo), lo + inv_phi * (hi - lo));
        if q(x1)?.value >= q(x2)?.value {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let f = 0.5 * (lo + hi);
    let v = q(f)?;
    Ok(if v.value > best.1.value { (f, v) } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{family, Scheme, SchemeParams};
    use crate::symplectic::ModeLabel::*;

    #[test]
    fn fidelity_basic_values() {
        let v = GaussianState::vacuum(&[S]).unwrap();
        for n in [0.3, 1.0, 4.0] {
            let t = GaussianState::thermal(n, S).unwrap();
            assert!((fidelity(&v, &t).unwrap() - 1.0 / (n + 1.0)).abs() < 1e-13);
        }
        let a = GaussianState::coherent([0.4, -1.0], S).unwrap();
        let b = GaussianState::coherent([1.0, 0.5], S).unwrap();
        let d2: f64 = 0.6f64.powi(2) + 1.5f64.powi(2);
        assert!((fidelity(&a, &b).unwrap() - (-d2 / 2.0).exp()).abs() < 1e-13);
        let t = GaussianState::thermal(0.7, S).unwrap();
        assert!((fidelity(&t, &t).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn single_mode_thermal_pair_matches_invariant_formula() {
        // F = 1/(√(Δ+Λ) − √Λ) with Δ = det(Va+Vb), Λ = 4(det Va − ¼)(det Vb − ¼)
        let (x, y) = (0.9, 2.3);
        let a = GaussianState::thermal(x, S).unwrap();
        let b = GaussianState::thermal(y, S).unwrap();
        let (va, vb) = (x + 0.5, y + 0.5);
        let delta = (va + vb) * (va + vb);
        let lam = 4.0 * (va * va - 0.25) * (vb * vb - 0.25);
        let expected = 1.0 / ((delta + lam).sqrt() - lam.sqrt());
        assert!((fidelity(&a, &b).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn invariants_route_agrees_on_two_mode_pairs() {
        let p = SchemeParams::new(Scheme::Tmss, 0.8, 0.4, 0.3).unwrap();
        let a = p.receiver().unwrap();
        let b = p.at_kappa(0.45).receiver().unwrap();
        let f1 = fidelity(&a, &b).unwrap();
        let f2 = fidelity_two_mode(&a, &b).unwrap();
        assert!((f1 - f2).abs() < 1e-10, "{f1} {f2}");
        let inv = TwoModeFidelityInvariants::new(&a, &b).unwrap();
        assert!(inv.root_sum() >= 1.0);
    }

    #[test]
    fn coherent_table_value() {
        // N_S = 1, N_B = N_th = 0, κ = 1/4 → N_S/κ = 4
        let p = SchemeParams::new(Scheme::CoherentThermal, 1.0, 0.0, 0.25).unwrap();
        let fd = qfi_fd(family(p), 0.25, None).unwrap();
        let sld = qfi_sld(family(p), 0.25, None).unwrap();
        assert!((fd.value - 4.0).abs() / 4.0 < 1e-6, "{fd:?}");
        assert!((sld.value - 4.0).abs() / 4.0 < 1e-6, "{sld:?}");
    }

    #[test]
    fn thermal_only_family() {
        // Eq. first term with N_th = 1, N_B = 0, κ = 1/2: 1/((1.5)(0.5)) = 4/3
        let p = SchemeParams::new(Scheme::CoherentThermal, 1.0, 0.0, 0.5)
            .unwrap()
            .thermal_share(1.0)
            .unwrap();
        let sld = qfi_sld(family(p), 0.5, None).unwrap();
        assert!((sld.value - 4.0 / 3.0).abs() < 1e-8, "{sld:?}");
    }

    #[test]
    fn step_errors() {
        let p = SchemeParams::new(Scheme::Tmss, 1.0, 0.0, 0.5).unwrap();
        assert!(matches!(
            qfi_fd(family(p), 0.05, Some(0.03)),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(matches!(
            qfi_sld(family(p), 0.0, None),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn reparameterization_factors() {
        let f = reparameterize_qfi(0.5).unwrap();
        assert!((f.theta - 1.0).abs() < 1e-15);
        assert!((f.sqrt_kappa - 0.5).abs() < 1e-15);
        assert!((to_kappa_qfi(2.0, Parametrization::Theta, 0.5).unwrap() - 2.0).abs() < 1e-15);
    }
}
