//! Symmetric hypothesis testing between the target-absent (κ = 0) and
//! target-present receiver states: the `s`-overlap `Q_s = tr ρ_A^s ρ_B^{1−s}`,
//! the quantum Chernoff exponent and the error-probability envelopes.
//!
//! Envelopes are reported as `log₁₀` values so that `M ~ 10⁸` copies do not
//! underflow.

use std::f64::consts::LN_10;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::metrology;
use crate::symplectic::GaussianState;

/// Search interval for the Chernoff minimisation.
pub const S_MIN: f64 = 1e-6;
pub const S_MAX: f64 = 1.0 - 1e-6;

/// Tolerance on `2ν − 1` below which a mode counts as pure in `Q_s`.
pub const PURE_SNAP: f64 = 1e-11;

/// `ln((x+1)^p − (x−1)^p)` and `ln((x+1)^p + (x−1)^p)` for `x ≥ 1`, with the
/// difference evaluated through `expm1` to keep precision at small `p`.
///
/// Values within `PURE_SNAP` of 1 are treated as pure: `(x−1)^p` with small
/// `p` would otherwise turn round-off in the Williamson spectrum into
/// percent-level errors.
fn log_diff_sum(x: f64, p: f64) -> (f64, f64) {
    let base = p * (x.max(1.0) + 1.0).ln();
    if x - 1.0 <= PURE_SNAP {
        return (base, base);
    }
    let r = (x - 1.0) / (x + 1.0);
    let rp = p * r.ln();
    (base + (-rp.exp_m1()).ln(), base + rp.exp().ln_1p())
}

/// `Λ_p(x) = ((x+1)^p + (x−1)^p)/((x+1)^p − (x−1)^p)`.
fn lambda_p(x: f64, p: f64) -> f64 {
    let (d, s) = log_diff_sum(x, p);
    (s - d).exp()
}

/// `ln G_p(x)` with `G_p(x) = 2^p/((x+1)^p − (x−1)^p)`.
fn log_g_p(x: f64, p: f64) -> f64 {
    p * std::f64::consts::LN_2 - log_diff_sum(x, p).0
}

/// `ln Q_s` by the Gaussian closed form, in units where the vacuum has unit
/// variance (`σ = 2V`, spectrum `2ν`, mean difference `√2 δ`):
/// `Q_s = 2ⁿ ∏ G_s(α_k) G_{1−s}(β_k) / √det Σ · e^{−½ dᵀΣ⁻¹d}`,
/// `Σ = S_A Λ_s(α) S_Aᵀ + S_B Λ_{1−s}(β) S_Bᵀ`.
pub fn log_s_overlap(a: &GaussianState, b: &GaussianState, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain("s", s, "0 < s < 1"));
    }
    if a.n_modes() != b.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: a.n_modes(),
            found: b.n_modes(),
        });
    }
    let n = a.n_modes();
    let wa = a.williamson()?;
    let wb = b.williamson()?;
    let weighted = |w: &crate::symplectic::WilliamsonDecomposition, p: f64| {
        let mut d = nalgebra::DMatrix::zeros(2 * n, 2 * n);
        for (k, &nu) in w.nu.iter().enumerate() {
            let l = lambda_p(2.0 * nu, p);
            d[(2 * k, 2 * k)] = l;
            d[(2 * k + 1, 2 * k + 1)] = l;
        }
        &w.sw * d * w.sw.transpose()
    };
    let sigma = weighted(&wa, s) + weighted(&wb, 1.0 - s);
    let mut log_q = n as f64 * std::f64::consts::LN_2;
    for (&x, &y) in wa.nu.iter().zip(&wb.nu) {
        log_q += log_g_p(2.0 * x, s) + log_g_p(2.0 * y, 1.0 - s);
    }
    let d = (b.mean() - a.mean()) * std::f64::consts::SQRT_2;
    log_q -= 0.5 * linalg::logdet_spd(&sigma)?;
    log_q -= 0.5 * d.dot(&linalg::solve_spd(&sigma, &d)?);
    Ok(log_q.min(0.0))
}

pub fn s_overlap(a: &GaussianState, b: &GaussianState, s: f64) -> Result<f64> {
    Ok(log_s_overlap(a, b, s)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chernoff {
    /// `𝓒 = −ln min_s Q_s`.
    pub qce: f64,
    pub s_star: f64,
}

/// Golden-section minimisation of `ln Q_s` over `[S_MIN, S_MAX]` to `|Δs| ≤ 1e-6`.
pub fn qce(a: &GaussianState, b: &GaussianState) -> Result<Chernoff> {
    let f = |s: f64| log_s_overlap(a, b, s);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (S_MIN, S_MAX);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > 1e-6 {
        if !(f1.is_finite() && f2.is_finite()) {
            let samples: Vec<String> = [0.1, 0.3, 0.5, 0.7, 0.9]
                .iter()
                .map(|&s| format!("Q({s})={:?}", f(s).map(f64::exp)))
                .collect();
            return Err(Error::Numerical(format!(
                "Chernoff search hit a non-finite overlap; samples {}",
                samples.join(", ")
            )));
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let mut best = (0.5 * (lo + hi), f(0.5 * (lo + hi))?);
    for s in [S_MIN, S_MAX] {
        let v = f(s)?;
        if v < best.1 {
            best = (s, v);
        }
    }
    Ok(Chernoff {
        qce: (-best.1).max(0.0),
        s_star: best.0,
    })
}

/// `½ exp(−(M/2)(π/2 − arccos√κ)² c)` with `c = lim_{κ→0} κ(1−κ)𝓕(κ)`.
pub fn fvg_qfi_bound(m: f64, kappa: f64, coefficient: f64) -> Result<f64> {
    Ok((log10_fvg_qfi_bound(m, kappa, coefficient)? * LN_10).exp())
}

pub fn log10_fvg_qfi_bound(m: f64, kappa: f64, coefficient: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain("kappa", kappa, "0 < kappa < 1"));
    }
    if !(coefficient >= 0.0) {
        return Err(Error::domain("coefficient", coefficient, ">= 0"));
    }
    if !(m >= 0.0) {
        return Err(Error::domain("M", m, "M >= 0"));
    }
    let dtheta = std::f64::consts::FRAC_PI_2 - kappa.sqrt().acos();
    Ok((0.5f64.ln() - 0.5 * m * dtheta * dtheta * coefficient) / LN_10)
}

/// `log₁₀ ½e^{−M𝓒}`.
pub fn log10_chernoff_envelope(m: f64, qce: f64) -> f64 {
    (0.5f64.ln() - m * qce) / LN_10
}

/// The fidelity step of the bound chain for one `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FvgChain {
    /// `log₁₀ ½F^{M/2}`.
    pub log10_fidelity_bound: f64,
    /// `log₁₀ ½e^{−(M/2)(π/2 − arccos√κ)² c}`.
    pub log10_quadratic_bound: f64,
    /// `√F ≤ 1 − c(π/2 − arccos√κ)²/2`, which makes the quadratic bound valid.
    pub premise_holds: bool,
}

pub fn fuchs_van_de_graaf_chain(
    a: &GaussianState,
    b: &GaussianState,
    m: f64,
    kappa: f64,
    coefficient: f64,
) -> Result<FvgChain> {
    let log_f = metrology::log_fidelity(a, b)?;
    let dtheta = std::f64::consts::FRAC_PI_2 - kappa.sqrt().acos();
    let root_f = (0.5 * log_f).exp();
    Ok(FvgChain {
        log10_fidelity_bound: (0.5f64.ln() + 0.5 * m * log_f) / LN_10,
        log10_quadratic_bound: log10_fvg_qfi_bound(m, kappa, coefficient)?,
        premise_holds: root_f <= 1.0 - 0.5 * coefficient * dtheta * dtheta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    pub qce: f64,
    pub s_star: f64,
    /// `(M, log₁₀ ½e^{−M𝓒})`.
    pub p_err_envelope: Vec<(f64, f64)>,
    /// `(M, log₁₀` of the QFI-based bound`)`.
    pub fvg_bound_envelope: Vec<(f64, f64)>,
    pub premise_holds: bool,
}

/// Chernoff exponent between `absent` and `present` plus both envelopes on
/// the grid `ms`.
pub fn detect(
    absent: &GaussianState,
    present: &GaussianState,
    kappa: f64,
    coefficient: f64,
    ms: &[f64],
) -> Result<DetectionResult> {
    let c = qce(absent, present)?;
    let chain = fuchs_van_de_graaf_chain(absent, present, 1.0, kappa, coefficient)?;
    let p_err_envelope = ms.iter().map(|&m| (m, log10_chernoff_envelope(m, c.qce))).collect();
    let fvg_bound_envelope = ms
        .iter()
        .map(|&m| Ok((m, log10_fvg_qfi_bound(m, kappa, coefficient)?)))
        .collect::<Result<_>>()?;
    Ok(DetectionResult {
        qce: c.qce,
        s_star: c.s_star,
        p_err_envelope,
        fvg_bound_envelope,
        premise_holds: chain.premise_holds,
    })
}

/// `lim_{κ→0} κ(1−κ)𝓕(κ)` by evaluating the SLD QFI at `κ₀, κ₀/2, κ₀/4`
/// and extrapolating the quadratic through them to κ = 0.
pub fn limit_coefficient<F>(family: F, kappa0: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<GaussianState>,
{
    let ks = [kappa0, 0.5 * kappa0, 0.25 * kappa0];
    let mut g = [0.0; 3];
    for (gi, &k) in g.iter_mut().zip(&ks) {
        *gi = k * (1.0 - k) * metrology::qfi_sld(&family, k, None)?.value;
    }
    // Neville extrapolation to zero on nodes k, k/2, k/4
    let p01 = 2.0 * g[1] - g[0];
    let p12 = 2.0 * g[2] - g[1];
    Ok((4.0 * p12 - p01) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::ModeLabel::*;

    #[test]
    fn overlap_of_identical_states_is_one() {
        let t = GaussianState::thermal(0.8, S).unwrap().displace(S, [0.3, -0.2]).unwrap();
        for s in [0.1, 0.5, 0.9] {
            assert!((s_overlap(&t, &t, s).unwrap() - 1.0).abs() < 1e-12);
        }
        let c = qce(&t, &t).unwrap();
        assert!(c.qce < 1e-12);
    }

    #[test]
    fn coherent_pair_overlap() {
        // pure states: Q_s = |⟨α|β⟩|² = e^{−|δ|²/2} for every s
        let a = GaussianState::coherent([1.0, 0.0], S).unwrap();
        let v = GaussianState::vacuum(&[S]).unwrap();
        for s in [0.2, 0.5, 0.8] {
            assert!((s_overlap(&a, &v, s).unwrap() - (-0.5f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_thermal_overlap() {
        // ⟨0|ρ_th^{1−s}|0⟩ = (N+1)^{−(1−s)}
        let v = GaussianState::vacuum(&[S]).unwrap();
        let t = GaussianState::thermal(1.5, S).unwrap();
        for s in [0.25, 0.5, 0.75] {
            let q = s_overlap(&v, &t, s).unwrap();
            assert!((q - 2.5f64.powf(-(1.0 - s))).abs() < 1e-12, "{s} {q}");
        }
    }

    #[test]
    fn bound_values() {
        assert!((fvg_qfi_bound(0.0, 0.3, 2.0).unwrap() - 0.5).abs() < 1e-15);
        let b = log10_fvg_qfi_bound(1e6, 1e-4, 1.0).unwrap();
        let dt = std::f64::consts::FRAC_PI_2 - 0.01f64.acos();
        assert!((b - (0.5f64.ln() - 5e5 * dt * dt) / LN_10).abs() < 1e-12);
        assert!(log10_fvg_qfi_bound(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn identical_states_have_flat_envelope() {
        let t = GaussianState::thermal(0.4, S).unwrap();
        let r = detect(&t, &t, 0.1, 0.0, &[1.0, 1e4]).unwrap();
        for (_, v) in &r.p_err_envelope {
            assert!((v - 0.5f64.log10()).abs() < 1e-10);
        }
    }
}
