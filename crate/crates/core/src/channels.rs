//! Transmitter/receiver schemes as maps `(N_S, N_B, κ, options) → GaussianState`.

use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{QuadraticHamiltonian, Term};
use crate::symplectic::{GaussianState, ModeLabel, SymplecticTransform};

use ModeLabel::*;

/// Auxiliary environment mode used by [`thermal_attenuator`]; never exposed.
const ANCILLA: ModeLabel = ModeLabel::Generic(usize::MAX);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    CoherentThermal,
    Tmss,
    Model1,
    Model2,
    EnvSaturating,
}

impl Scheme {
    pub const ALL_RECEIVERS: [Scheme; 4] =
        [Scheme::CoherentThermal, Scheme::Tmss, Scheme::Model1, Scheme::Model2];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::CoherentThermal => "coherent",
            Scheme::Tmss => "tmss",
            Scheme::Model1 => "model1",
            Scheme::Model2 => "model2",
            Scheme::EnvSaturating => "env_saturating",
        }
    }

    pub fn from_name(s: &str) -> Option<Scheme> {
        match s {
            "coherent" | "coherent_thermal" => Some(Scheme::CoherentThermal),
            "tmss" => Some(Scheme::Tmss),
            "model1" => Some(Scheme::Model1),
            "model2" => Some(Scheme::Model2),
            "env_saturating" => Some(Scheme::EnvSaturating),
            _ => None,
        }
    }

    /// Modes of the register the receiver keeps.
    pub fn output_modes(self) -> &'static [ModeLabel] {
        match self {
            Scheme::CoherentThermal => &[S],
            Scheme::Tmss | Scheme::EnvSaturating => &[S, I],
            Scheme::Model1 | Scheme::Model2 => &[I1, I2],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One point on one transmitter family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub scheme: Scheme,
    pub n_s: f64,
    pub n_b: f64,
    pub kappa: f64,
    /// Thermal share of the transmitted energy (coherent scheme only).
    #[serde(default)]
    pub n_th: f64,
    /// Replace `N_B` by `N_B/(1−κ)` (coherent scheme only).
    #[serde(default)]
    pub neglect_shadow: bool,
}

/// Squeezing parameter giving `sinh²g = N_S`, i.e. `g = log(√(N_S+1) + √N_S)`.
pub fn squeezing_for_energy(n_s: f64) -> f64 {
    n_s.sqrt().asinh()
}

impl SchemeParams {
    pub fn new(scheme: Scheme, n_s: f64, n_b: f64, kappa: f64) -> Result<Self> {
        let p = SchemeParams {
            scheme,
            n_s,
            n_b,
            kappa,
            n_th: 0.0,
            neglect_shadow: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters for a raw squeezing value; `N_S = sinh²g`.
    pub fn with_squeezing(scheme: Scheme, g: f64, n_b: f64, kappa: f64) -> Result<Self> {
        if !(g >= 0.0) {
            return Err(Error::domain("g", g, "g >= 0"));
        }
        Self::new(scheme, g.sinh().powi(2), n_b, kappa)
    }

    pub fn thermal_share(mut self, n_th: f64) -> Result<Self> {
        self.n_th = n_th;
        self.validate()?;
        Ok(self)
    }

    pub fn neglecting_shadow(mut self, on: bool) -> Self {
        self.neglect_shadow = on;
        self
    }

    pub fn at_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_s >= 0.0) || !self.n_s.is_finite() {
            return Err(Error::domain("N_S", self.n_s, "N_S >= 0"));
        }
        if !(self.n_b >= 0.0) || !self.n_b.is_finite() {
            return Err(Error::domain("N_B", self.n_b, "N_B >= 0"));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::domain("kappa", self.kappa, "0 <= kappa <= 1"));
        }
        if !(self.n_th >= 0.0) || self.n_th > self.n_s {
            return Err(Error::domain("N_th", self.n_th, "0 <= N_th <= N_S"));
        }
        Ok(())
    }

    pub fn squeezing(&self) -> f64 {
        squeezing_for_energy(self.n_s)
    }

    /// Coherent amplitude `z = (√(2(N_S − N_th)), 0)`.
    pub fn displacement(&self) -> [f64; 2] {
        [(2.0 * (self.n_s - self.n_th)).sqrt(), 0.0]
    }

    /// Receiver output for the configured scheme. `EnvSaturating` uses
    /// the 50:50 mixer on `I, E`.
    pub fn receiver(&self) -> Result<GaussianState> {
        match self.scheme {
            Scheme::CoherentThermal => coherent_thermal_receiver(self),
            Scheme::Tmss => tmss_receiver(self),
            Scheme::Model1 => model1_receiver(self),
            Scheme::Model2 => model2_receiver(self),
            Scheme::EnvSaturating => env_mixer_state(self, &saturating_mixer()?),
        }
    }
}

/// The κ ↦ receiver-state family through a parameter point.
pub fn family(params: SchemeParams) -> impl Fn(f64) -> Result<GaussianState> + Sync + Send {
    move |kappa| params.at_kappa(kappa).receiver()
}

fn check_kappa_nb(kappa: f64, n_b: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::domain("kappa", kappa, "0 <= kappa <= 1"));
    }
    if !(n_b >= 0.0) || !n_b.is_finite() {
        return Err(Error::domain("N_B", n_b, "N_B >= 0"));
    }
    Ok(())
}

/// Thermal attenuator on `label`: mix with a `thermal(N_B)` environment on a
/// beamsplitter of transmissivity κ, then discard the environment.
pub fn thermal_attenuator(
    state: &GaussianState,
    label: ModeLabel,
    kappa: f64,
    n_b: f64,
) -> Result<GaussianState> {
    check_kappa_nb(kappa, n_b)?;
    state.index_of(label)?;
    let joint = state.tensor(&GaussianState::thermal(n_b, ANCILLA)?)?;
    let bs = SymplecticTransform::attenuation_beamsplitter(kappa, label, ANCILLA)?;
    bs.apply(&joint)?.partial_trace(state.modes())
}

pub fn coherent_thermal_receiver(p: &SchemeParams) -> Result<GaussianState> {
    p.validate()?;
    let tx = GaussianState::thermal(p.n_th, S)?.displace(S, p.displacement())?;
    if !p.neglect_shadow {
        return thermal_attenuator(&tx, S, p.kappa, p.n_b);
    }
    // (1−κ)(N_B/(1−κ) + 1/2) = N_B + (1−κ)/2, finite at κ = 1
    let k = p.kappa;
    let cov = tx.cov() * k + nalgebra::DMatrix::identity(2, 2) * (p.n_b + 0.5 * (1.0 - k));
    GaussianState::new(vec![S], tx.mean() * k.sqrt(), cov)
}

/// Two-mode squeezed vacuum on `(S, I)` with `sinh²g = N_S`.
pub fn tmss(n_s: f64) -> Result<GaussianState> {
    SymplecticTransform::two_mode_squeeze(squeezing_for_energy(n_s), S, I)?
        .apply(&GaussianState::vacuum(&[S, I])?)
}

pub fn tmss_receiver(p: &SchemeParams) -> Result<GaussianState> {
    p.validate()?;
    thermal_attenuator(&tmss(p.n_s)?, S, p.kappa, p.n_b)
}

/// Model 1 before the final trace, on `(S, I1, I2, E)`.
pub fn model1_full(p: &SchemeParams) -> Result<GaussianState> {
    p.validate()?;
    let g = p.squeezing();
    let start = GaussianState::vacuum(&[S, I1, I2])?.tensor(&GaussianState::thermal(p.n_b, E)?)?;
    let circuit = model1_circuit(g, p.kappa)?;
    circuit.apply(&start)
}

/// `TMS(S,I1)`, then the target beamsplitter on `(S,E)`, then `TMS(S,I2)`.
pub fn model1_circuit(g: f64, kappa: f64) -> Result<SymplecticTransform> {
    let order = [S, I1, I2, E];
    let id = SymplecticTransform::identity(&order)?;
    id.then(&SymplecticTransform::two_mode_squeeze(g, S, I1)?)?
        .then(&SymplecticTransform::attenuation_beamsplitter(kappa, S, E)?)?
        .then(&SymplecticTransform::two_mode_squeeze(g, S, I2)?)
}

pub fn model1_receiver(p: &SchemeParams) -> Result<GaussianState> {
    model1_full(p)?.partial_trace(&[I1, I2])
}

/// Passive map taking `thermal ⊗ vacuum` on `(S, E)` to a thermal state of
/// the mode `√κ a†_E − i√(1−κ) a†_S` with vacuum in the orthogonal mode:
/// a beamsplitter at angle `−arcsin√κ` followed by a quarter-turn phase on S.
pub fn model2_environment_rotation(kappa: f64) -> Result<SymplecticTransform> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::domain("kappa", kappa, "0 <= kappa <= 1"));
    }
    SymplecticTransform::beamsplitter(-kappa.sqrt().asin(), S, E)?.then(
        &SymplecticTransform::phase_rotation(std::f64::consts::FRAC_PI_2, S)?,
    )
}

/// Model 2 initial condition on `(S, I1, I2, E)`.
pub fn model2_initial(kappa: f64, n_b: f64) -> Result<GaussianState> {
    check_kappa_nb(kappa, n_b)?;
    let se = GaussianState::thermal(n_b, S)?.tensor(&GaussianState::vacuum(&[E])?)?;
    let se = model2_environment_rotation(kappa)?.apply(&se)?;
    GaussianState::vacuum(&[I1, I2])?
        .tensor(&se)?
        .reorder(&[S, I1, I2, E])
}

/// Model 2 after the Hamiltonian evolution, before the trace.
pub fn model2_full(p: &SchemeParams) -> Result<GaussianState> {
    p.validate()?;
    let h = QuadraticHamiltonian::induced_coherence(p.kappa)?;
    h.flow(p.squeezing())?.apply(&model2_initial(p.kappa, p.n_b)?)
}

pub fn model2_receiver(p: &SchemeParams) -> Result<GaussianState> {
    model2_full(p)?.partial_trace(&[I1, I2])
}

/// `e^{iπ/4(a†_I a_E + h.c.)}` in the real beamsplitter convention.
pub fn saturating_mixer() -> Result<SymplecticTransform> {
    SymplecticTransform::beamsplitter(std::f64::consts::FRAC_PI_4, I, E)
}

/// Random Gaussian unitary on `(I, E)`: unit-time flow of a quadratic
/// Hamiltonian whose couplings (beamsplitter, two-mode and single-mode
/// squeezing, detunings) are uniform with magnitude at most `strength`.
pub fn random_mixer<R: Rng + ?Sized>(rng: &mut R, strength: f64) -> Result<SymplecticTransform> {
    let mut c = || {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * strength
    };
    let terms = vec![
        Term::Passive { a: I, b: E, c: c() },
        Term::Active { a: I, b: E, c: c() },
        Term::Active { a: I, b: I, c: c() },
        Term::Active { a: E, b: E, c: c() },
        Term::Number { a: I, w: c().re },
        Term::Number { a: E, w: c().re },
    ];
    QuadraticHamiltonian::new(vec![I, E], terms)?.flow(1.0)
}

/// Register `(I, S, E)` before the mixer is traced out.
pub fn env_mixer_full(p: &SchemeParams, mixer: &SymplecticTransform) -> Result<GaussianState> {
    p.validate()?;
    if let Some(bad) = mixer.modes().iter().find(|m| **m != I && **m != E) {
        return Err(Error::MixerContract(*bad));
    }
    let start = tmss(p.n_s)?.tensor(&GaussianState::thermal(p.n_b, E)?)?;
    let after_target =
        SymplecticTransform::attenuation_beamsplitter(p.kappa, S, E)?.apply(&start)?;
    mixer.apply(&after_target)
}

/// TMSS probe, thermal attenuator on S, an unparametrised mixer on `(I, E)`,
/// environment discarded. Output on `(S, I)`.
pub fn env_mixer_state(p: &SchemeParams, mixer: &SymplecticTransform) -> Result<GaussianState> {
    env_mixer_full(p, mixer)?.partial_trace(&[S, I])
}

/// Single-mode probe with squeezing `r` (q quadrature squeezed) displaced by
/// `amp` along q, sent through the thermal attenuator.
pub fn squeezed_displaced_receiver(r: f64, amp: f64, kappa: f64, n_b: f64) -> Result<GaussianState> {
    let cov = nalgebra::DMatrix::from_diagonal(&DVector::from_vec(vec![
        0.5 * (-2.0 * r).exp(),
        0.5 * (2.0 * r).exp(),
    ]));
    let tx = GaussianState::new(vec![S], DVector::from_vec(vec![amp, 0.0]), cov)?;
    thermal_attenuator(&tx, S, kappa, n_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn params(scheme: Scheme, n_s: f64, n_b: f64, kappa: f64) -> SchemeParams {
        SchemeParams::new(scheme, n_s, n_b, kappa).unwrap()
    }

    #[test]
    fn attenuator_matches_closed_covariance() {
        let (n_th, n_b, k) = (0.7, 1.9, 0.35);
        let z = [1.1, -0.4];
        let tx = GaussianState::thermal(n_th, S).unwrap().displace(S, z).unwrap();
        let out = thermal_attenuator(&tx, S, k, n_b).unwrap();
        let expected = 0.5 * (2.0 * k * n_th + 2.0 * (1.0 - k) * n_b + 1.0);
        assert!((out.cov()[(0, 0)] - expected).abs() < 1e-14);
        assert!((out.cov()[(1, 1)] - expected).abs() < 1e-14);
        assert!((out.mean()[0] - k.sqrt() * z[0]).abs() < 1e-14);
        assert_eq!(thermal_attenuator(&tx, S, 1.0, n_b).unwrap().cov(), tx.cov());
        let lost = thermal_attenuator(&tx, S, 0.0, n_b).unwrap();
        assert!(max_abs(&(lost.cov() - GaussianState::thermal(n_b, S).unwrap().cov())) < 1e-14);
        assert!(lost.mean().norm() < 1e-15);
        assert!(matches!(
            thermal_attenuator(&tx, S, 1.5, n_b),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            thermal_attenuator(&tx, S, 0.5, -1.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn coherent_receiver_cases() {
        let p = params(Scheme::CoherentThermal, 2.0, 0.0, 0.5);
        let out = p.receiver().unwrap();
        assert!((out.mean()[0] - 0.5f64.sqrt() * 2.0).abs() < 1e-14);
        assert!(max_abs(&(out.cov() - nalgebra::DMatrix::identity(2, 2) * 0.5)) < 1e-15);
        let covs: Vec<_> = [0.1, 0.4, 0.9]
            .iter()
            .map(|&k| {
                params(Scheme::CoherentThermal, 1.0, 0.8, k)
                    .neglecting_shadow(true)
                    .receiver()
                    .unwrap()
                    .cov()
                    .clone()
            })
            .collect();
        assert!(max_abs(&(&covs[0] - &covs[2])) <= 1e-12);
        assert!(max_abs(&(&covs[1] - &covs[2])) <= 1e-12);
        let off = params(Scheme::CoherentThermal, 1.0, 0.8, 0.0).receiver().unwrap();
        assert!(max_abs(&(off.cov() - GaussianState::thermal(0.8, S).unwrap().cov())) < 1e-14);
        assert!(off.mean().norm() < 1e-15);
        let too_hot = params(Scheme::CoherentThermal, 1.0, 0.0, 0.5).thermal_share(2.0);
        assert!(matches!(too_hot, Err(Error::Domain { .. })));
    }

    #[test]
    fn tmss_receiver_limits() {
        let pure = params(Scheme::Tmss, 0.7, 3.0, 1.0).receiver().unwrap();
        for nu in pure.symplectic_eigenvalues().unwrap() {
            assert!((nu - 0.5).abs() < 1e-10);
        }
        let lost = params(Scheme::Tmss, 0.7, 3.0, 0.0).receiver().unwrap();
        let product = GaussianState::thermal(3.0, S)
            .unwrap()
            .tensor(&GaussianState::thermal(0.7, I).unwrap())
            .unwrap();
        assert!(max_abs(&(lost.cov() - product.cov())) < 1e-12);
    }

    #[test]
    fn model_energies_at_zero_reflectivity() {
        for &(n_s, n_b) in &[(0.5, 0.0), (1.0, 1.0), (2.0, 5.0)] {
            for scheme in [Scheme::Model1, Scheme::Model2] {
                let st = params(scheme, n_s, n_b, 0.0).receiver().unwrap();
                let e = st.total_photon_number();
                assert!((e - n_s * (n_b + 2.0)).abs() < 1e-9, "{scheme} {n_s} {n_b}: {e}");
            }
        }
    }

    #[test]
    fn zero_squeezing_gives_vacuum() {
        for scheme in [Scheme::Model1, Scheme::Model2] {
            let st = params(scheme, 0.0, 2.0, 0.4).receiver().unwrap();
            assert!(max_abs(&(st.cov() - nalgebra::DMatrix::identity(4, 4) * 0.5)) < 1e-14);
        }
    }

    #[test]
    fn model2_environment_is_thermal_in_rotated_mode() {
        // moment construction: <a†_j a_k> = N_B conj(w_j) w_k with
        // w_S = −i√(1−κ), w_E = √κ
        let (k, n_b) = (0.3, 1.7);
        let st = model2_initial(k, n_b).unwrap().partial_trace(&[S, E]).unwrap();
        let (ws, we) = (
            num_complex::Complex64::new(0.0, -(1.0 - k).sqrt()),
            num_complex::Complex64::new(k.sqrt(), 0.0),
        );
        let w = [ws, we];
        for j in 0..2 {
            for l in 0..2 {
                let n = w[j].conj() * w[l] * n_b;
                let d = if j == l { 0.5 } else { 0.0 };
                assert!((st.cov()[(2 * j, 2 * l)] - (n.re + d)).abs() < 1e-13);
                assert!((st.cov()[(2 * j + 1, 2 * l + 1)] - (n.re + d)).abs() < 1e-13);
                assert!((st.cov()[(2 * j, 2 * l + 1)] - n.im).abs() < 1e-13);
            }
        }
        let at_zero = model2_initial(0.0, n_b).unwrap();
        assert!((at_zero.mean_photon_number(S).unwrap() - n_b).abs() < 1e-13);
        assert!(at_zero.mean_photon_number(E).unwrap().abs() < 1e-13);
    }

    #[test]
    fn identity_mixer_is_tmss_receiver() {
        let p = params(Scheme::EnvSaturating, 0.8, 1.2, 0.3);
        let id = SymplecticTransform::identity(&[I, E]).unwrap();
        let a = env_mixer_state(&p, &id).unwrap();
        let b = tmss_receiver(&p).unwrap();
        assert!(max_abs(&(a.cov() - b.cov())) < 1e-13);
        let bad = SymplecticTransform::beamsplitter(0.3, S, E).unwrap();
        assert_eq!(env_mixer_state(&p, &bad).unwrap_err(), Error::MixerContract(S));
    }

    #[test]
    fn squeezing_energy_relation() {
        let g = squeezing_for_energy(1.0);
        assert!((g - (2f64.sqrt() + 1.0).ln()).abs() < 1e-15);
        let p = SchemeParams::with_squeezing(Scheme::Tmss, 0.4, 0.0, 0.5).unwrap();
        assert!((p.squeezing() - 0.4).abs() < 1e-14);
    }
}
