//! The acceptance suite behind `gqr verify`. Each criterion reports a
//! pass/fail verdict with its worst observed deviation; tolerances are fixed
//! here and never relaxed. Criteria 5 and 9 are known to fail (see README).

use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use gqr_core::channels::{
    family, random_mixer, squeezing_for_energy, env_mixer_state, Scheme, SchemeParams,
};
use gqr_core::closed_form;
use gqr_core::detection::{log_s_overlap, qce, s_overlap};
use gqr_core::fock::{
    default_oracle_step, fock_build, fock_fidelity, fock_qfi_at, fock_s_overlap,
    env_variance_check, FockOptions, LEAKAGE_BUDGET,
};
use gqr_core::metrology::{fidelity, qfi_fd, qfi_sld};

use crate::reports::{fig2a, fig2b, model1_equivalence, spaced, table1};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(format!("unknown level {s:?} (expected quick or full)")),
        }
    }
}

/// Criteria that fail with the implemented physics; they are reported but
/// not treated as regressions.
pub const KNOWN_RED: [u8; 2] = [5, 9];

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn known_red(&self) -> bool {
        KNOWN_RED.contains(&self.id)
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let red = if !self.pass && self.known_red() { " [known red]" } else { "" };
        format!(
            "{tag} {:>2} {}: {} ({:.1} s){red}",
            self.id, self.title, self.detail, self.seconds
        )
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Tracks the largest deviation and where it occurred.
#[derive(Debug, Default)]
struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn see(&mut self, v: f64, at: impl FnOnce() -> String) {
        if !(v <= self.value) {
            self.value = v;
            self.at = at();
        }
    }

    fn show(&self) -> String {
        format!("{:.2e} at {}", self.value, self.at)
    }
}

fn timed(
    id: u8,
    title: &'static str,
    f: impl FnOnce() -> Result<(bool, String)>,
) -> Outcome {
    let t = Instant::now();
    let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome {
        id,
        title,
        pass,
        detail,
        seconds: t.elapsed().as_secs_f64(),
    }
}

/// `lim κ(1−κ)𝓕` from SLD values at `κ₁ = 1e-3`, `κ₂ = 1e-4`, extrapolated
/// linearly to κ = 0.
fn two_point_leading(p: SchemeParams) -> Result<f64> {
    let g = |k: f64| -> Result<f64> { Ok(k * (1.0 - k) * qfi_sld(family(p), k, None)?.value) };
    let (k1, k2) = (1e-3, 1e-4);
    let (g1, g2) = (g(k1)?, g(k2)?);
    Ok(g2 - k2 * (g1 - g2) / (k1 - k2))
}

pub fn c1_table() -> Outcome {
    timed(1, "noiseless QFI table", || {
        let start = Instant::now();
        let mut worst = Worst::default();
        for n_s in [0.5, 1.0, 2.0] {
            for k in [0.1, 0.3, 0.5, 0.8] {
                let t = table1(n_s, k)?;
                for r in 0..t.rows.len() {
                    let dev = t.num(r, "rel_dev").unwrap_or(f64::NAN);
                    worst.see(dev, || format!("{} N_S={n_s} kappa={k}", t.rows[r][0]));
                }
            }
        }
        let spot = |n_s: f64, k: f64, row: &str| -> Result<f64> {
            let t = table1(n_s, k)?;
            let r = (0..t.rows.len())
                .find(|&r| t.rows[r][0].to_string() == row)
                .ok_or("missing row")?;
            Ok(t.num(r, "qfi_sld").unwrap_or(f64::NAN))
        };
        let l = (1.0 + 2f64.sqrt()).ln();
        let spots = [
            rel(spot(1.0, 0.25, "coherent")?, 4.0),
            rel(spot(1.0, 0.5, "model1")?, 12.0 / 7.0),
            rel(spot(1.0, 0.5, "model2")?, l * l / 0.5),
        ];
        let printed = (l * l / 0.5 - 1.55364).abs() < 5e-6;
        let spot_worst = spots.iter().cloned().fold(0.0, f64::max);
        let secs = start.elapsed().as_secs_f64();
        Ok((
            worst.value <= 1e-5 && spot_worst <= 1e-5 && printed && secs < 10.0,
            format!("worst rel dev {}; spot values {spot_worst:.1e}", worst.show()),
        ))
    })
}

pub fn c2_coherent() -> Outcome {
    timed(2, "coherent/thermal QFI", || {
        let mut worst = Worst::default();
        for n_th in [0.0, 1.0] {
            for n_b in [0.0, 0.5, 2.0] {
                for k in [0.1, 0.5, 0.9] {
                    // ‖z‖² = 2 on top of the thermal share
                    let p = SchemeParams::new(Scheme::CoherentThermal, n_th + 1.0, n_b, k)?.thermal_share(n_th)?;
                    let closed = closed_form::coherent_thermal(n_th, n_b, k, 2.0)?;
                    let fd = qfi_fd(family(p), k, None)?.value;
                    let sld = qfi_sld(family(p), k, None)?.value;
                    worst.see(rel(fd, closed).max(rel(sld, closed)), || {
                        format!("N_th={n_th} N_B={n_b} kappa={k}")
                    });
                }
            }
        }
        let mut drift: f64 = 0.0;
        for n_b in [0.0, 0.5, 2.0] {
            let p = SchemeParams::new(Scheme::CoherentThermal, 1.0, n_b, 0.1)?.neglecting_shadow(true);
            let base = p.receiver()?;
            for k in [0.3, 0.5, 0.9] {
                let v = p.at_kappa(k).receiver()?;
                drift = drift.max((v.cov() - base.cov()).amax());
            }
        }
        Ok((
            worst.value <= 1e-5 && drift <= 1e-12,
            format!("worst rel dev {}; shadow-free covariance drift {drift:.1e}", worst.show()),
        ))
    })
}

pub fn c3_tmss() -> Outcome {
    timed(3, "two-mode squeezed QFI", || {
        let mut worst = Worst::default();
        let mut lead = Worst::default();
        for n_s in [0.5, 1.0, 2.0] {
            for n_b in [0.0, 0.5, 2.0] {
                for k in [0.1, 0.5, 0.9] {
                    let p = SchemeParams::new(Scheme::Tmss, n_s, n_b, k)?;
                    let closed = closed_form::tmss(n_s, n_b, k)?;
                    let fd = qfi_fd(family(p), k, None)?.value;
                    let sld = qfi_sld(family(p), k, None)?.value;
                    worst.see(rel(fd, closed).max(rel(sld, closed)), || {
                        format!("N_S={n_s} N_B={n_b} kappa={k}")
                    });
                }
                let p = SchemeParams::new(Scheme::Tmss, n_s, n_b, 0.5)?;
                let c = two_point_leading(p)?;
                lead.see(rel(c, closed_form::tmss_leading(n_s, n_b)), || format!("N_S={n_s} N_B={n_b}"));
            }
        }
        Ok((
            worst.value <= 1e-5 && lead.value <= 1e-2,
            format!("worst rel dev {}; leading coefficient {}", worst.show(), lead.show()),
        ))
    })
}

pub fn c4_model1() -> Outcome {
    timed(4, "circuit model QFI", || {
        let mut worst = Worst::default();
        let mut lead = Worst::default();
        let mut half = Worst::default();
        for n_s in [0.5, 1.0, 2.0] {
            for n_b in [0.0, 0.5, 2.0] {
                for k in [0.1, 0.3, 0.5, 0.9] {
                    let p = SchemeParams::new(Scheme::Model1, n_s, n_b, k)?;
                    let closed = closed_form::model1(n_s, n_b, k)?;
                    let fd = qfi_fd(family(p), k, None)?.value;
                    let sld = qfi_sld(family(p), k, None)?.value;
                    worst.see(rel(fd, closed).max(rel(sld, closed)), || {
                        format!("N_S={n_s} N_B={n_b} kappa={k}")
                    });
                }
                let p = SchemeParams::new(Scheme::Model1, n_s, n_b, 0.5)?;
                let c = two_point_leading(p)?;
                lead.see(rel(c, closed_form::model1_leading(n_s, n_b)), || format!("N_S={n_s} N_B={n_b}"));
            }
            let k = 1e-4;
            let m1 = qfi_sld(family(SchemeParams::new(Scheme::Model1, n_s, 0.0, k)?), k, None)?.value;
            let tm = qfi_sld(family(SchemeParams::new(Scheme::Tmss, n_s, 0.0, k)?), k, None)?.value;
            half.see(rel(m1 / tm, 0.5), || format!("N_S={n_s}"));
        }
        Ok((
            worst.value <= 1e-5 && lead.value <= 1e-2 && half.value <= 1e-2,
            format!(
                "worst rel dev {}; leading coefficient {}; half of TMSS {}",
                worst.show(),
                lead.show(),
                half.show()
            ),
        ))
    })
}

pub fn c5_model2() -> Outcome {
    timed(5, "Hamiltonian model QFI", || {
        let mut worst = Worst::default();
        for n_s in [0.5, 1.0, 2.0] {
            for k in [0.1, 0.3, 0.5, 0.8] {
                let p = SchemeParams::new(Scheme::Model2, n_s, 0.0, k)?;
                let closed = closed_form::model2_noiseless(n_s, k)?;
                let fd = qfi_fd(family(p), k, None)?.value;
                let sld = qfi_sld(family(p), k, None)?.value;
                worst.see(rel(fd, closed).max(rel(sld, closed)), || format!("N_S={n_s} kappa={k}"));
            }
        }
        let mut ratios = Vec::new();
        for n_b in [2.0, 5.0, 20.0] {
            let k = 1e-4;
            let p = SchemeParams::new(Scheme::Model2, 1e4, n_b, k)?;
            let q = qfi_sld(family(p), k, None)?.value;
            ratios.push(q / closed_form::model2_asymptotic(1e4, n_b, k)?);
        }
        let ratio_ok = ratios.iter().all(|r| (0.98..=1.02).contains(r));
        let n_b = [0.0, 2.0, 5.0, 10.0, 20.0];
        let t = fig2a(1e-3, &spaced(1.0, 100.0, 21, true), &n_b)?;
        let mut violations = Vec::new();
        for r in 0..t.rows.len() {
            let next = r + 1;
            if next < t.rows.len() && t.num(next, "N_S") == t.num(r, "N_S") {
                let (a, b) = (t.num(r, "scaled_qfi").unwrap(), t.num(next, "scaled_qfi").unwrap());
                if !(b > a) {
                    violations.push(format!(
                        "N_S={:.3} N_B {}→{}: {a:.5}→{b:.5}",
                        t.num(r, "N_S").unwrap(),
                        t.num(r, "N_B").unwrap(),
                        t.num(next, "N_B").unwrap()
                    ));
                }
            }
        }
        let r: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
        let first = violations.first().cloned().unwrap_or_default();
        Ok((
            worst.value <= 1e-5 && ratio_ok && violations.is_empty(),
            format!(
                "noiseless worst rel dev {}; asymptotic ratios [{}]; N_B monotonicity violations {} {first}",
                worst.show(),
                r.join(", "),
                violations.len()
            ),
        ))
    })
}

pub fn c6_environment_bound(seed: u64) -> Outcome {
    timed(6, "environment-information bound", || {
        let mut var = Worst::default();
        for n_s in [0.5, 1.0] {
            for n_b in [0.0, 0.5, 1.0] {
                let g = squeezing_for_energy(n_s);
                let v = env_variance_check(g, n_b, 60)?;
                let exact = 4.0 * (n_s + n_b + 2.0 * n_s * n_b);
                var.see(rel(v, exact), || format!("N_S={n_s} N_B={n_b}"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::new();
        for n_s in [0.2, 1.0] {
            for n_b in [0.0, 0.5, 2.0, 10.0, 50.0] {
                for k in [0.1, 0.5] {
                    points.push((n_s, n_b, k));
                }
            }
        }
        let mut ratio = Worst::default();
        for (n_s, n_b, k) in points {
            let bound = closed_form::env_bound(n_s, n_b, k)?;
            let p = SchemeParams::new(Scheme::EnvSaturating, n_s, n_b, k)?;
            for _ in 0..50 {
                let mixer = random_mixer(&mut rng, 1.0)?;
                let q = qfi_sld(|x| env_mixer_state(&p.at_kappa(x), &mixer), k, None)?.value;
                ratio.see(q / bound, || format!("N_S={n_s} N_B={n_b} kappa={k}"));
            }
        }
        let k = 1e-4;
        let p = SchemeParams::new(Scheme::EnvSaturating, 1.0, 100.0, k)?;
        let q = qfi_sld(family(p), k, None)?.value;
        let sat = q / closed_form::env_saturating_asymptotic(1.0, 100.0, k)?;
        Ok((
            var.value <= 1e-6 && ratio.value <= 1.0 + 1e-6 && (0.95..=1.05).contains(&sat),
            format!(
                "variance identity {}; max QFI/bound over 1000 mixers {}; saturating ratio {sat:.4}",
                var.show(),
                ratio.show()
            ),
        ))
    })
}

pub fn c7_energy() -> Outcome {
    timed(7, "idler energy identity", || {
        let mut worst = Worst::default();
        for scheme in [Scheme::Model1, Scheme::Model2] {
            for n_s in [0.5, 1.0, 2.0] {
                for n_b in [0.0, 1.0, 5.0] {
                    let e = SchemeParams::new(scheme, n_s, n_b, 0.0)?.receiver()?.total_photon_number();
                    worst.see((e - n_s * (n_b + 2.0)).abs(), || format!("{scheme} N_S={n_s} N_B={n_b}"));
                }
            }
        }
        Ok((worst.value <= 1e-9, format!("worst abs dev {}", worst.show())))
    })
}

/// Gaussian vs Fock-oracle deviations at one `(scheme, N_S, N_B)` over κ:
/// `(fidelity abs, Q_s abs, QFI rel, max leakage)`.
pub fn oracle_deviations(scheme: Scheme, n_s: f64, n_b: f64, kappas: &[f64]) -> Result<[f64; 4]> {
    let p0 = SchemeParams::new(scheme, n_s, n_b, 0.0)?;
    let opts = FockOptions::default();
    let r0 = fock_build(&p0, opts)?;
    let g0 = p0.receiver()?;
    let mut worst = [0.0f64, 0.0, 0.0, r0.leakage()];
    for &k in kappas {
        let p = p0.at_kappa(k);
        let r = fock_build(&p, opts)?;
        let g = p.receiver()?;
        worst[0] = worst[0].max((fock_fidelity(&r, &r0)? - fidelity(&g, &g0)?).abs());
        for s in [0.3, 0.5, 0.7] {
            worst[1] = worst[1].max((fock_s_overlap(&r, &r0, s)? - s_overlap(&g, &g0, s)?).abs());
        }
        let side = FockOptions {
            cutoff: Some(r.cutoff()),
            cap: Some(r.space().cap()),
            allow_leakage: true,
        };
        let fq = fock_qfi_at(&r, |x| fock_build(&p.at_kappa(x), side), k, default_oracle_step(k))?;
        let gq = qfi_sld(family(p), k, None)?.value;
        worst[2] = worst[2].max(rel(fq.value, gq));
        worst[3] = worst[3].max(fq.est_error.unwrap_or(0.0));
    }
    Ok(worst)
}

pub fn c8_oracle(level: Level) -> Outcome {
    timed(8, "Fock oracle agreement", || {
        let start = Instant::now();
        let schemes: &[Scheme] = match level {
            Level::Full => &Scheme::ALL_RECEIVERS,
            Level::Quick => &[Scheme::CoherentThermal, Scheme::Tmss, Scheme::Model1],
        };
        let mut points = Vec::new();
        for &sc in schemes {
            for n_s in [0.2, 0.5, 1.0] {
                for n_b in [0.0, 0.2, 0.5] {
                    points.push((sc, n_s, n_b));
                }
            }
        }
        let kappas = [0.1, 0.3, 0.5, 0.9];
        let results = points
            .par_iter()
            .map(|&(sc, n_s, n_b)| Ok(((sc, n_s, n_b), oracle_deviations(sc, n_s, n_b, &kappas)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut w: [Worst; 4] = Default::default();
        for ((sc, n_s, n_b), d) in results {
            for (wi, di) in w.iter_mut().zip(d) {
                wi.see(di, || format!("{sc} N_S={n_s} N_B={n_b}"));
            }
        }
        let secs = start.elapsed().as_secs_f64();
        let skipped = if level == Level::Quick { "; model2 skipped" } else { "" };
        Ok((
            w[0].value <= 1e-4 && w[1].value <= 1e-4 && w[2].value <= 1e-3 && w[3].value <= LEAKAGE_BUDGET && secs < 600.0,
            format!(
                "fidelity {}; Q_s {}; QFI rel {}; leakage {}{skipped}",
                w[0].show(),
                w[1].show(),
                w[2].show(),
                w[3].show()
            ),
        ))
    })
}

pub fn c9_detection() -> Outcome {
    timed(9, "detection envelopes", || {
        let (n_b, k) = (20.0, 1e-4);
        let ms: Vec<f64> = (0..=16).map(|i| 10f64.powf(4.0 + i as f64 / 4.0)).collect();
        let t = fig2b(n_b, k, &[1e-2, 1e-1], &ms)?;
        let mut order = Vec::new();
        for n_s in [1e-2, 1e-1] {
            let q = |scheme: Scheme| -> Result<f64> {
                let p = SchemeParams::new(scheme, n_s, n_b, k)?;
                Ok(qce(&p.at_kappa(0.0).receiver()?, &p.receiver()?)?.qce)
            };
            let m2 = q(Scheme::Model2)?;
            for other in [Scheme::CoherentThermal, Scheme::Tmss, Scheme::Model1] {
                let o = q(other)?;
                if !(m2 > o) {
                    order.push(format!("N_S={n_s}: model2 {m2:.3e} <= {other} {o:.3e}"));
                }
            }
        }
        let mut bound_violations = 0;
        let mut chain_violations = 0;
        for r in 0..t.rows.len() {
            let perr = t.num(r, "log10_perr").unwrap();
            if t.num(r, "log10_bound").unwrap() < perr {
                bound_violations += 1;
            }
            if t.num(r, "log10_fidelity_bound").unwrap() < perr - 1e-12 * perr.abs() {
                chain_violations += 1;
            }
        }
        // oracle side of the chain: Q_{1/2} ≤ √F on small instances
        let mut oracle_gap = f64::INFINITY;
        for scheme in [Scheme::Tmss, Scheme::Model1] {
            let p = SchemeParams::new(scheme, 0.2, 0.2, 0.3)?;
            let a = fock_build(&p.at_kappa(0.0), FockOptions::default())?;
            let b = fock_build(&p, FockOptions::default())?;
            let gap = fock_fidelity(&a, &b)?.sqrt() - fock_s_overlap(&a, &b, 0.5)?;
            oracle_gap = oracle_gap.min(gap);
            // and the Gaussian Q_{1/2} ≥ min_s Q_s used to define 𝓒
            let (ga, gb) = (p.at_kappa(0.0).receiver()?, p.receiver()?);
            let c = qce(&ga, &gb)?.qce;
            oracle_gap = oracle_gap.min(log_s_overlap(&ga, &gb, 0.5)? + c + 1e-12);
        }
        Ok((
            order.is_empty() && bound_violations == 0 && chain_violations == 0 && oracle_gap >= -1e-10,
            format!(
                "ordering failures [{}]; bound violations {bound_violations}/{n}; chain violations {chain_violations}/{n}; oracle sqrt(F) - Q_1/2 min {oracle_gap:.2e}",
                order.join("; "),
                n = t.rows.len()
            ),
        ))
    })
}

pub fn c10_equivalence() -> Outcome {
    timed(10, "circuit/Hamiltonian equivalence", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for k in [0.1, 0.5] {
            match model1_equivalence(0.4, k)? {
                Ok((_, eq)) => {
                    let d = &eq.decomposition;
                    let mag = d.coefficient("TMS(I2,E)").hypot(d.coefficient("TMSx(I2,E)"));
                    ok &= mag > 1e-6 && eq.round_trip_error <= 1e-6 && d.residual <= 1e-8;
                    parts.push(format!(
                        "kappa={k}: |TMS(I2,E)| {mag:.4}, round trip {:.1e}, residual {:.1e}",
                        eq.round_trip_error, d.residual
                    ));
                }
                Err(report) => {
                    ok = false;
                    parts.push(format!("kappa={k}: branch failure {}", report.reason));
                }
            }
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Renders the default background-enhancement grid on a 1-worker and a
/// multi-worker pool and compares the bytes.
pub fn c11_determinism() -> Outcome {
    timed(11, "deterministic output", || {
        let render = |workers: usize| -> Result<String> {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
            pool.install(|| {
                let (k, ns, nb) = crate::fig2a_defaults();
                Ok(fig2a(k, &ns, &nb)?.to_csv())
            })
        };
        let (a, b) = (render(1)?, render(4)?);
        Ok((a == b, format!("{} bytes, identical: {}", a.len(), a == b)))
    })
}

pub fn run(level: Level, seed: u64, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let steps: Vec<Box<dyn Fn() -> Outcome>> = vec![
        Box::new(c1_table),
        Box::new(c2_coherent),
        Box::new(c3_tmss),
        Box::new(c4_model1),
        Box::new(c5_model2),
        Box::new(move || c6_environment_bound(seed)),
        Box::new(c7_energy),
        Box::new(move || c8_oracle(level)),
        Box::new(c9_detection),
        Box::new(c10_equivalence),
        Box::new(c11_determinism),
    ];
    steps
        .iter()
        .map(|f| {
            let o = f();
            report(&o);
            o
        })
        .collect()
}
