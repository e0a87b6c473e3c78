//! Config-driven parameter sweeps.
//!
//! A sweep file is a single TOML document:
//!
//! ```toml
//! schemes = ["tmss", "model2"]
//! n_s = [0.1, 1.0]
//! n_b = { start = 0.0, stop = 5.0, num = 6 }
//! kappa = { start = 1e-4, stop = 1e-1, num = 4, log = true }
//! outputs = ["qfi_sld", "closed_form", "qce", "bound"]
//! m = [1e4, 1e6]
//! format = "csv"
//! workers = 4
//! seed = 7
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use gqr_core::channels::{family, random_mixer, env_mixer_state, Scheme, SchemeParams};
use gqr_core::closed_form::{self, closed_form_qfi};
use gqr_core::detection::{fuchs_van_de_graaf_chain, log10_chernoff_envelope, qce};
use gqr_core::metrology::{qfi_fd, qfi_sld};

use crate::output::{Cell, Format, Table};
use crate::reports::{bound_coefficient, spaced};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        num: usize,
        #[serde(default)]
        log: bool,
    },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            &Grid::Range { start, stop, num, log } => spaced(start, stop, num, log),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    QfiFd,
    QfiSld,
    ClosedForm,
    Qce,
    Bound,
    Energy,
    EnvBound,
    EnvRandom,
}

impl Output {
    fn is_qfi(self) -> bool {
        matches!(
            self,
            Output::QfiFd | Output::QfiSld | Output::ClosedForm | Output::Bound | Output::EnvBound | Output::EnvRandom
        )
    }
}

fn default_outputs() -> Vec<Output> {
    vec![Output::QfiSld, Output::ClosedForm]
}

fn default_mixers() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schemes: Vec<String>,
    pub n_s: Grid,
    pub n_b: Grid,
    pub kappa: Grid,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    /// Copy numbers for the detection envelopes.
    #[serde(default)]
    pub m: Vec<f64>,
    #[serde(default)]
    pub format: Format,
    pub workers: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Random `(I, E)` mixers per point for `env_random`.
    #[serde(default = "default_mixers")]
    pub mixers: usize,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        self.schemes
            .iter()
            .map(|s| Scheme::from_name(s).ok_or_else(|| format!("unknown scheme {s:?}").into()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() || self.outputs.is_empty() {
            return Err("schemes and outputs must be nonempty".into());
        }
        self.schemes()?;
        for (name, g) in [("n_s", &self.n_s), ("n_b", &self.n_b), ("kappa", &self.kappa)] {
            let v = g.values();
            if v.is_empty() {
                return Err(format!("grid {name} is empty").into());
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(format!("grid {name} has a negative or non-finite value").into());
            }
        }
        let qfi = self.outputs.iter().any(|o| o.is_qfi());
        for k in self.kappa.values() {
            if qfi && !(k > 0.0 && k < 1.0) {
                return Err(format!("kappa = {k}: QFI outputs need 0 < kappa < 1").into());
            }
            if k > 1.0 {
                return Err(format!("kappa = {k} > 1").into());
            }
        }
        if self.outputs.contains(&Output::Bound) && self.m.is_empty() {
            return Err("output \"bound\" needs a nonempty m grid".into());
        }
        if self.m.iter().any(|&m| !(m >= 0.0)) {
            return Err("m values must be >= 0".into());
        }
        Ok(())
    }
}

fn columns(outputs: &[Output]) -> Vec<&'static str> {
    let mut c = vec!["scheme", "N_S", "N_B", "kappa", "M"];
    for o in outputs {
        c.extend_from_slice(match o {
            Output::QfiFd => &["qfi_fd", "qfi_fd_err"][..],
            Output::QfiSld => &["qfi_sld"][..],
            Output::ClosedForm => &["closed_form", "closed_form_tag"][..],
            Output::Qce => &["qce", "s_star"][..],
            Output::Bound => &["coefficient", "log10_perr", "log10_bound", "log10_fidelity_bound"][..],
            Output::Energy => &["receiver_energy"][..],
            Output::EnvBound => &["env_bound"][..],
            Output::EnvRandom => &["env_random_max_ratio"][..],
        });
    }
    c
}

/// Values for one `(scheme, N_S, N_B, κ)` point; one row per `M` when the
/// bound output is requested, otherwise one row with an empty `M`.
fn point(spec: &SweepSpec, outputs: &[Output], p: SchemeParams, index: u64) -> Result<Vec<Vec<Cell>>> {
    let mut fixed: Vec<Cell> = Vec::new();
    let mut chernoff = None;
    let states = if outputs.contains(&Output::Qce) || outputs.contains(&Output::Bound) {
        Some((p.at_kappa(0.0).receiver()?, p.receiver()?))
    } else {
        None
    };
    let mut per_m: Option<(f64, f64)> = None;
    for o in outputs {
        match o {
            Output::QfiFd => {
                let q = qfi_fd(family(p), p.kappa, None)?;
                fixed.push(q.value.into());
                fixed.push(q.est_error.into());
            }
            Output::QfiSld => fixed.push(qfi_sld(family(p), p.kappa, None)?.value.into()),
            Output::ClosedForm => match closed_form_qfi(&p)? {
                Some((tag, v)) => {
                    fixed.push(v.into());
                    fixed.push(serde_json::to_value(tag)?.as_str().unwrap_or_default().into());
                }
                None => fixed.extend([Cell::Empty, Cell::Empty]),
            },
            Output::Qce => {
                let (a, b) = states.as_ref().expect("states built for qce");
                let c = qce(a, b)?;
                chernoff = Some(c.qce);
                fixed.push(c.qce.into());
                fixed.push(c.s_star.into());
            }
            Output::Bound => {
                let (a, b) = states.as_ref().expect("states built for bounds");
                let c = match chernoff {
                    Some(c) => c,
                    None => qce(a, b)?.qce,
                };
                per_m = Some((bound_coefficient(&p)?, c));
                // placeholders, filled per M below
                fixed.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
            }
            Output::Energy => fixed.push(p.receiver()?.total_photon_number().into()),
            Output::EnvBound => {
                fixed.push(closed_form::env_bound(p.n_s, p.n_b, p.kappa)?.into())
            }
            Output::EnvRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(index));
                let bound = closed_form::env_bound(p.n_s, p.n_b, p.kappa)?;
                let mut worst: f64 = 0.0;
                for _ in 0..spec.mixers {
                    let mixer = random_mixer(&mut rng, 1.0)?;
                    let q = qfi_sld(|k| env_mixer_state(&p.at_kappa(k), &mixer), p.kappa, None)?;
                    worst = worst.max(q.value / bound);
                }
                fixed.push(worst.into());
            }
        }
    }
    let head = |m: Cell| -> Vec<Cell> {
        vec![p.scheme.name().into(), p.n_s.into(), p.n_b.into(), p.kappa.into(), m]
    };
    let Some((coefficient, c)) = per_m else {
        let mut row = head(Cell::Empty);
        row.extend(fixed);
        return Ok(vec![row]);
    };
    let slot = outputs
        .iter()
        .take_while(|o| **o != Output::Bound)
        .map(|o| columns(&[*o]).len() - 5)
        .sum::<usize>();
    let (a, b) = states.as_ref().expect("states built for bounds");
    spec.m
        .iter()
        .map(|&m| {
            let chain = fuchs_van_de_graaf_chain(a, b, m, p.kappa, coefficient)?;
            let mut row = head(m.into());
            let mut vals = fixed.clone();
            vals[slot] = coefficient.into();
            vals[slot + 1] = log10_chernoff_envelope(m, c).into();
            vals[slot + 2] = chain.log10_quadratic_bound.into();
            vals[slot + 3] = chain.log10_fidelity_bound.into();
            row.extend(vals);
            Ok(row)
        })
        .collect()
}

/// Runs the sweep on the current rayon pool; rows are sorted by
/// `(scheme, N_S, N_B, κ, M)` so the output does not depend on scheduling.
pub fn run(spec: &SweepSpec) -> Result<Table> {
    spec.validate()?;
    let mut outputs = spec.outputs.clone();
    outputs.sort();
    outputs.dedup();
    let mut t = Table::new("sweep", &columns(&outputs));
    t.param("schemes", spec.schemes.join(";"))
        .param("seed", spec.seed)
        .param("mixers", spec.mixers);
    let mut params = Vec::new();
    for scheme in spec.schemes()? {
        for s in spec.n_s.values() {
            for b in spec.n_b.values() {
                for k in spec.kappa.values() {
                    params.push(SchemeParams::new(scheme, s, b, k)?);
                }
            }
        }
    }
    let rows = params
        .par_iter()
        .enumerate()
        .map(|(i, p)| point(spec, &outputs, *p, i as u64))
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().flatten().for_each(|r| t.push(r));
    t.sort_by(&["scheme", "N_S", "N_B", "kappa", "M"]);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists_and_ranges() {
        let spec = SweepSpec::from_toml(
            r#"
            schemes = ["tmss"]
            n_s = [1.0]
            n_b = { start = 0.0, stop = 1.0, num = 3 }
            kappa = { start = 1e-3, stop = 1e-1, num = 3, log = true }
            "#,
        )
        .unwrap();
        assert_eq!(spec.n_b.values(), vec![0.0, 0.5, 1.0]);
        let k = spec.kappa.values();
        assert!((k[1] - 1e-2).abs() < 1e-15);
        assert_eq!(spec.outputs, default_outputs());
        spec.validate().unwrap();
    }

    #[test]
    fn rejects_closed_kappa_for_qfi() {
        let spec = SweepSpec::from_toml(
            "schemes = [\"tmss\"]\nn_s = [1.0]\nn_b = [0.0]\nkappa = [0.0]\noutputs = [\"qfi_sld\"]\n",
        )
        .unwrap();
        assert!(spec.validate().is_err());
        let detection = SweepSpec {
            outputs: vec![Output::Qce],
            ..spec
        };
        detection.validate().unwrap();
    }

    #[test]
    fn bound_rows_expand_over_m() {
        let spec = SweepSpec::from_toml(
            "schemes = [\"coherent\", \"tmss\"]\nn_s = [0.1]\nn_b = [1.0]\nkappa = [0.01]\noutputs = [\"bound\", \"qce\"]\nm = [10.0, 0.0]\n",
        )
        .unwrap();
        let t = run(&spec).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.value(0, "scheme"), Some(&Cell::Text("coherent".into())));
        assert_eq!(t.num(0, "M"), Some(0.0));
        let half = 0.5f64.log10();
        assert!((t.num(0, "log10_perr").unwrap() - half).abs() < 1e-12);
        assert!(t.num(1, "log10_perr").unwrap() < half);
    }
}
