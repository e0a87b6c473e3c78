//! Custom circuits for `gqr equiv`, read from a TOML file:
//!
//! ```toml
//! name = "loop"
//! modes = ["S", "I1", "I2", "E"]      # optional, default first appearance
//! diagram = ["TMS(S,I1)", "BS(S,E)"]  # optional, couplings drawn in the circuit
//!
//! [[element]]
//! gate = "tms"          # tms | bs | attenuator | phase
//! modes = ["S", "I1"]
//! param = 0.4
//! ```

use serde::Deserialize;

use gqr_core::equivalence::{circuit_on, circuit_symplectic};
use gqr_core::symplectic::{ModeLabel, SymplecticTransform};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Tms,
    Bs,
    Attenuator,
    Phase,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Element {
    pub gate: Gate,
    pub modes: Vec<ModeLabel>,
    pub param: f64,
}

impl Element {
    pub fn transform(&self) -> Result<SymplecticTransform> {
        let arity = if self.gate == Gate::Phase { 1 } else { 2 };
        if self.modes.len() != arity {
            return Err(format!("{:?} takes {arity} mode(s), got {}", self.gate, self.modes.len()).into());
        }
        let m = &self.modes;
        Ok(match self.gate {
            Gate::Tms => SymplecticTransform::two_mode_squeeze(self.param, m[0], m[1])?,
            Gate::Bs => SymplecticTransform::beamsplitter(self.param, m[0], m[1])?,
            Gate::Attenuator => SymplecticTransform::attenuation_beamsplitter(self.param, m[0], m[1])?,
            Gate::Phase => SymplecticTransform::phase_rotation(self.param, m[0])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub modes: Option<Vec<ModeLabel>>,
    #[serde(default)]
    pub diagram: Vec<String>,
    #[serde(default)]
    pub element: Vec<Element>,
}

fn default_name() -> String {
    "custom".into()
}

impl CircuitSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn transform(&self) -> Result<SymplecticTransform> {
        let elements = self.element.iter().map(Element::transform).collect::<Result<Vec<_>>>()?;
        Ok(match &self.modes {
            Some(order) => circuit_on(order, &elements)?,
            None => circuit_symplectic(&elements)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gqr_core::channels::model1_circuit;

    #[test]
    fn parses_and_composes() {
        let spec = CircuitSpec::from_toml(
            r#"
            modes = ["S", "E"]
            [[element]]
            gate = "bs"
            modes = ["S", "E"]
            param = 0.3
            "#,
        )
        .unwrap();
        assert_eq!(spec.name, "custom");
        let s = spec.transform().unwrap();
        assert_eq!(s.n_modes(), 2);
        assert!(s.symplectic_defect() < 1e-12);
    }

    #[test]
    fn rejects_wrong_arity() {
        let e = Element {
            gate: Gate::Phase,
            modes: vec![ModeLabel::S, ModeLabel::E],
            param: 0.1,
        };
        assert!(e.transform().is_err());
    }

    #[test]
    fn model1_is_reproducible_from_a_file() {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/circuits/model1.toml")).unwrap();
        let spec = CircuitSpec::from_toml(&text).unwrap();
        let (g, k) = (0.4, 0.3);
        let mut spec = spec;
        for e in &mut spec.element {
            e.param = match e.gate {
                Gate::Tms => g,
                _ => k,
            };
        }
        let a = spec.transform().unwrap();
        let b = model1_circuit(g, k).unwrap();
        let (ma, _) = a.embedded(b.modes()).unwrap();
        assert!((ma - b.matrix()).amax() < 1e-12);
    }
}
