//! Closed-form QFI expressions for the transmitter families, plus the
//! environment-information bound and the small-κ leading coefficients
//! `lim_{κ→0} κ(1−κ)𝓕(κ)`.

use serde::Serialize;

use crate::channels::{squeezing_for_energy, Scheme, SchemeParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    CoherentThermal,
    Tmss,
    TmssLeading,
    Model1,
    Model1Leading,
    Model2Noiseless,
    Model2Asymptotic,
    EnvBound,
    EnvSaturatingAsymptotic,
    Fock,
    BestGaussianLeading,
}

fn open_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("kappa", kappa, "0 < kappa < 1"))
    }
}

fn nonneg(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(name, v, ">= 0"))
    }
}

/// Coherent/thermal transmitter through the thermal attenuator;
/// `z_sq = ‖z‖²` in quadrature units.
pub fn coherent_thermal(n_th: f64, n_b: f64, kappa: f64, z_sq: f64) -> Result<f64> {
    open_kappa(kappa)?;
    nonneg("N_th", n_th)?;
    nonneg("N_B", n_b)?;
    nonneg("|z|^2", z_sq)?;
    let n_out = (1.0 - kappa) * n_b + kappa * n_th;
    let thermal = if n_th == n_b {
        0.0
    } else {
        (n_th - n_b).powi(2) / ((n_out + 1.0) * n_out)
    };
    let coherent = z_sq / (2.0 * kappa * (2.0 * n_th * kappa + 2.0 * n_b * (1.0 - kappa) + 1.0));
    Ok(thermal + coherent)
}

pub fn tmss(n_s: f64, n_b: f64, kappa: f64) -> Result<f64> {
    open_kappa(kappa)?;
    nonneg("N_S", n_s)?;
    nonneg("N_B", n_b)?;
    let num = n_s * (n_s + 1.0) - kappa * (n_s * n_s - n_b * (2.0 * n_s + 1.0));
    let den = kappa
        * (1.0 - kappa)
        * (1.0 + (1.0 - kappa) * (n_s + n_b + 2.0 * n_s * n_b));
    Ok(num / den)
}

pub fn tmss_leading(n_s: f64, n_b: f64) -> f64 {
    n_s * (n_s + 1.0) / (1.0 + n_b + n_s + 2.0 * n_b * n_s)
}

/// `G₁, G₂` of the circuit model; the QFI is `N_S G₁ / (κ(1−κ) G₂)`.
pub fn model1_g(n_s: f64, n_b: f64, kappa: f64) -> (f64, f64) {
    let g1 = (n_s + 1.0) * (1.0 + n_s + n_s * n_b)
        + kappa * (n_b - n_s) * (1.0 + n_s + n_b + 2.0 * n_s * n_b)
        + kappa * kappa * n_b * (n_s * n_s - n_b * (2.0 * n_s + 1.0));
    let g2 = (n_s + 1.0 + (1.0 - kappa) * n_b * n_s)
        * (2.0 + (2.0 - kappa) * n_s + (1.0 - kappa) * n_b * (2.0 * n_s + 1.0));
    (g1, g2)
}

pub fn model1(n_s: f64, n_b: f64, kappa: f64) -> Result<f64> {
    open_kappa(kappa)?;
    nonneg("N_S", n_s)?;
    nonneg("N_B", n_b)?;
    let (g1, g2) = model1_g(n_s, n_b, kappa);
    Ok(n_s * g1 / (kappa * (1.0 - kappa) * g2))
}

pub fn model1_leading(n_s: f64, n_b: f64) -> f64 {
    n_s * (n_s + 1.0) / (2.0 + n_b + 2.0 * n_s + 2.0 * n_b * n_s)
}

/// Induced-coherence Hamiltonian model at `N_B = 0`: `g²/(2κ(1−κ))`.
pub fn model2_noiseless(n_s: f64, kappa: f64) -> Result<f64> {
    open_kappa(kappa)?;
    nonneg("N_S", n_s)?;
    let g = squeezing_for_energy(n_s);
    Ok(g * g / (2.0 * kappa * (1.0 - kappa)))
}

/// Large-`N_S`, small-κ form `((N_B+2)g − N_B)² / (8κ(1+N_B))`.
pub fn model2_asymptotic(n_s: f64, n_b: f64, kappa: f64) -> Result<f64> {
    open_kappa(kappa)?;
    nonneg("N_S", n_s)?;
    nonneg("N_B", n_b)?;
    Ok(model2_asymptotic_coefficient(n_s, n_b) / kappa)
}

/// `κ·`[`model2_asymptotic`], independent of κ.
pub fn model2_asymptotic_coefficient(n_s: f64, n_b: f64) -> f64 {
    let g = squeezing_for_energy(n_s);
    ((n_b + 2.0) * g - n_b).powi(2) / (8.0 * (1.0 + n_b))
}

/// `(N_S + N_B + 2N_S N_B)/(κ(1−κ))`.
pub fn env_bound(n_s: f64, n_b: f64, kappa: f64) -> Result<f64> {
    open_kappa(kappa)?;
    nonneg("N_S", n_s)?;
    nonneg("N_B", n_b)?;
    Ok((n_s + n_b + 2.0 * n_s * n_b) / (kappa * (1.0 - kappa)))
}

pub fn env_saturating_asymptotic(n_s: f64, n_b: f64, kappa: f64) -> Result<f64> {
    open_kappa(kappa)?;
    nonneg("N_S", n_s)?;
    nonneg("N_B", n_b)?;
    Ok((n_s + n_b + 2.0 * n_s * n_b) / (2.0 * kappa))
}

/// Single-mode Fock transmitter `|N_S⟩`, noiseless.
pub fn fock(n_s: f64, kappa: f64) -> Result<f64> {
    open_kappa(kappa)?;
    nonneg("N_S", n_s)?;
    Ok(n_s / (kappa * (1.0 - kappa)))
}

/// Noiseless closed form where one exists for the point; `None` otherwise.
pub fn closed_form_qfi(p: &SchemeParams) -> Result<Option<(ClosedForm, f64)>> {
    p.validate()?;
    let (n_s, n_b, k) = (p.n_s, p.n_b, p.kappa);
    Ok(match p.scheme {
        Scheme::CoherentThermal if !p.neglect_shadow => {
            let z = p.displacement();
            let z_sq = z[0] * z[0] + z[1] * z[1];
            Some((ClosedForm::CoherentThermal, coherent_thermal(p.n_th, n_b, k, z_sq)?))
        }
        Scheme::CoherentThermal => None,
        Scheme::Tmss => Some((ClosedForm::Tmss, tmss(n_s, n_b, k)?)),
        Scheme::Model1 => Some((ClosedForm::Model1, model1(n_s, n_b, k)?)),
        Scheme::Model2 if n_b == 0.0 => Some((ClosedForm::Model2Noiseless, model2_noiseless(n_s, k)?)),
        Scheme::Model2 | Scheme::EnvSaturating => None,
    })
}

/// Closed-form `lim_{κ→0} κ(1−κ)𝓕(κ)` where the source provides one.
pub fn leading_coefficient(scheme: Scheme, n_s: f64, n_b: f64, n_th: f64) -> Option<f64> {
    match scheme {
        Scheme::CoherentThermal => {
            let z_sq = 2.0 * (n_s - n_th);
            // with N_B = 0 the thermal term also diverges like N_th/κ
            let thermal = if n_b == 0.0 { n_th } else { 0.0 };
            Some(z_sq / (2.0 * (2.0 * n_b + 1.0)) + thermal)
        }
        Scheme::Tmss => Some(tmss_leading(n_s, n_b)),
        Scheme::Model1 => Some(model1_leading(n_s, n_b)),
        Scheme::Model2 if n_b == 0.0 => {
            let g = squeezing_for_energy(n_s);
            Some(g * g / 2.0)
        }
        Scheme::Model2 | Scheme::EnvSaturating => None,
    }
}

/// One row of the noiseless comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub transmitter: &'static str,
    pub entangled: bool,
    pub classical: bool,
    pub gaussian: bool,
    pub formula: &'static str,
    /// `κ(1−κ)𝓕` as κ → 0 (leading order only for the best Gaussian row).
    pub leading: f64,
}

/// Noiseless rows at transmitted intensity `N_S`.
pub fn noiseless_rows(n_s: f64) -> Vec<TableRow> {
    let g = squeezing_for_energy(n_s);
    vec![
        TableRow {
            transmitter: "coherent",
            entangled: false,
            classical: true,
            gaussian: true,
            formula: "N_S/kappa",
            leading: n_s,
        },
        TableRow {
            transmitter: "best_single_mode_gaussian",
            entangled: false,
            classical: false,
            gaussian: true,
            formula: "(N_S-O(kappa))/(kappa(1-kappa))",
            leading: n_s,
        },
        TableRow {
            transmitter: "fock",
            entangled: false,
            classical: false,
            gaussian: false,
            formula: "N_S/(kappa(1-kappa))",
            leading: n_s,
        },
        TableRow {
            transmitter: "tmss",
            entangled: true,
            classical: false,
            gaussian: true,
            formula: "N_S/(kappa(1-kappa))",
            leading: n_s,
        },
        TableRow {
            transmitter: "model2",
            entangled: true,
            classical: false,
            gaussian: true,
            formula: "log(sqrt(N_S+1)+sqrt(N_S))^2/(2kappa(1-kappa))",
            leading: g * g / 2.0,
        },
        TableRow {
            transmitter: "model1",
            entangled: true,
            classical: false,
            gaussian: true,
            formula: "N_S(1+(1-kappa)N_S)/(kappa(1-kappa)(2+(2-kappa)N_S))",
            leading: n_s * (1.0 + n_s) / (2.0 + 2.0 * n_s),
        },
    ]
}

/// Exact noiseless value of a table row at κ.
pub fn noiseless_value(row: &TableRow, n_s: f64, kappa: f64) -> Result<f64> {
    open_kappa(kappa)?;
    let kk = kappa * (1.0 - kappa);
    Ok(match row.transmitter {
        "coherent" => n_s / kappa,
        "model2" => model2_noiseless(n_s, kappa)?,
        "model1" => n_s * (1.0 + (1.0 - kappa) * n_s) / (kk * (2.0 + (2.0 - kappa) * n_s)),
        "best_single_mode_gaussian" => row.leading / kk,
        _ => n_s / kk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_values() {
        assert!((env_bound(1.0, 1.0, 0.5).unwrap() - 16.0).abs() < 1e-14);
        assert!((model1_leading(1.0, 0.0) - 0.5).abs() < 1e-15);
        assert!((tmss_leading(1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((tmss(1.0, 0.0, 0.5).unwrap() - 4.0).abs() < 1e-14);
        assert!((model1(1.0, 0.0, 0.5).unwrap() - 12.0 / 7.0).abs() < 1e-14);
        let l = (1.0 + 2f64.sqrt()).ln();
        assert!((model2_noiseless(1.0, 0.5).unwrap() - l * l / 0.5).abs() < 1e-14);
        assert!((coherent_thermal(0.0, 0.0, 0.25, 2.0).unwrap() - 4.0).abs() < 1e-14);
        assert!((coherent_thermal(1.0, 0.0, 0.5, 0.0).unwrap() - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn tmss_is_fock_value_when_noiseless() {
        for k in [0.1, 0.4, 0.9] {
            for n in [0.5, 2.0, 7.0] {
                let a = tmss(n, 0.0, k).unwrap();
                assert!((a - fock(n, k).unwrap()).abs() < 1e-12 * a);
            }
        }
    }

    #[test]
    fn model1_general_matches_table_row_when_noiseless() {
        let rows = noiseless_rows(1.3);
        let row = rows.iter().find(|r| r.transmitter == "model1").unwrap();
        for k in [0.05, 0.3, 0.77] {
            let a = model1(1.3, 0.0, k).unwrap();
            assert!((a - noiseless_value(row, 1.3, k).unwrap()).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn leading_coefficients_are_small_kappa_limits() {
        let k = 1e-9;
        for (n_s, n_b) in [(1.0, 0.0), (0.3, 2.0), (4.0, 0.5)] {
            let t = tmss(n_s, n_b, k).unwrap() * k * (1.0 - k);
            assert!((t - tmss_leading(n_s, n_b)).abs() < 1e-6);
            let m = model1(n_s, n_b, k).unwrap() * k * (1.0 - k);
            assert!((m - model1_leading(n_s, n_b)).abs() < 1e-6);
        }
        // asymptotic form reduces to the noiseless row at N_B = 0
        let a = model2_asymptotic(3.0, 0.0, 0.1).unwrap();
        let b = model2_noiseless(3.0, 0.1).unwrap() * 0.9;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn coherent_low_order_is_split_independent() {
        let k = 1e-7;
        for n_th in [0.0, 0.4, 1.0] {
            let z_sq = 2.0 * (1.0 - n_th);
            let v = coherent_thermal(n_th, 0.0, k, z_sq).unwrap() * k;
            assert!((v - 1.0).abs() < 1e-5, "{n_th} {v}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(tmss(1.0, 0.0, 0.0).is_err());
        assert!(model1(-1.0, 0.0, 0.5).is_err());
        assert!(env_bound(1.0, 1.0, 1.0).is_err());
    }
}
