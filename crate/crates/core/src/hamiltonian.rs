//! Quadratic bosonic Hamiltonians and their quadrature flows.
//!
//! A Hamiltonian `H = ½ Rᵀ 𝐇 R` (up to a constant) generates the Heisenberg
//! flow `Ṙ = Ω𝐇 R`, so `e^{−itH}` acts on states as the symplectic matrix
//! `exp(t Ω𝐇)`. The same term list is used by the Fock-space oracle, which
//! keeps both pictures on one phase convention.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::symplectic::{ModeLabel, SymplecticTransform};

/// One bilinear term of a quadratic Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    /// `c a†_a a_b + h.c.` with `a ≠ b`.
    Passive {
        a: ModeLabel,
        b: ModeLabel,
        c: Complex64,
    },
    /// `c a†_a a†_b + h.c.`; `a == b` gives single-mode squeezing.
    Active {
        a: ModeLabel,
        b: ModeLabel,
        c: Complex64,
    },
    /// `w a†_a a_a`.
    Number { a: ModeLabel, w: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    modes: Vec<ModeLabel>,
    terms: Vec<Term>,
}

impl QuadraticHamiltonian {
    pub fn new(modes: Vec<ModeLabel>, terms: Vec<Term>) -> Result<Self> {
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::LabelCollision(*m));
            }
        }
        for t in &terms {
            let (a, b) = match *t {
                Term::Passive { a, b, .. } => {
                    if a == b {
                        return Err(Error::LabelCollision(a));
                    }
                    (a, b)
                }
                Term::Active { a, b, .. } => (a, b),
                Term::Number { a, .. } => (a, a),
            };
            for l in [a, b] {
                if !modes.contains(&l) {
                    return Err(Error::UnknownLabel(l));
                }
            }
        }
        Ok(QuadraticHamiltonian { modes, terms })
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    fn idx(&self, l: ModeLabel) -> usize {
        self.modes.iter().position(|m| *m == l).expect("validated")
    }

    /// Symmetric quadrature matrix `𝐇` with `H = ½ Rᵀ 𝐇 R + const`.
    pub fn quadrature_matrix(&self) -> DMatrix<f64> {
        let dim = 2 * self.modes.len();
        let mut h = DMatrix::zeros(dim, dim);
        let mut add = |i: usize, j: usize, v: f64| {
            h[(i, j)] += v;
            if i != j {
                h[(j, i)] += v;
            }
        };
        for t in &self.terms {
            match *t {
                Term::Passive { a, b, c } => {
                    let (qa, pa) = (2 * self.idx(a), 2 * self.idx(a) + 1);
                    let (qb, pb) = (2 * self.idx(b), 2 * self.idx(b) + 1);
                    add(qa, qb, c.re);
                    add(pa, pb, c.re);
                    add(qa, pb, -c.im);
                    add(pa, qb, c.im);
                }
                Term::Active { a, b, c } if a == b => {
                    let (q, p) = (2 * self.idx(a), 2 * self.idx(a) + 1);
                    add(q, q, 2.0 * c.re);
                    add(p, p, -2.0 * c.re);
                    add(q, p, 2.0 * c.im);
                }
                Term::Active { a, b, c } => {
                    let (qa, pa) = (2 * self.idx(a), 2 * self.idx(a) + 1);
                    let (qb, pb) = (2 * self.idx(b), 2 * self.idx(b) + 1);
                    add(qa, qb, c.re);
                    add(pa, pb, -c.re);
                    add(qa, pb, c.im);
                    add(pa, qb, c.im);
                }
                Term::Number { a, w } => {
                    let (q, p) = (2 * self.idx(a), 2 * self.idx(a) + 1);
                    add(q, q, w);
                    add(p, p, w);
                }
            }
        }
        h
    }

    /// Generator `K = Ω𝐇 ∈ sp(2n, ℝ)` of the Heisenberg flow.
    pub fn generator(&self) -> DMatrix<f64> {
        linalg::omega(self.modes.len()) * self.quadrature_matrix()
    }

    /// Symplectic action of `e^{−itH}`.
    pub fn flow(&self, t: f64) -> Result<SymplecticTransform> {
        let s = linalg::expm(&(self.generator() * t));
        let defect = linalg::symplectic_defect(&s);
        if defect > 1e-9 * linalg::max_abs(&s).max(1.0).powi(2) {
            return Err(Error::Numerical(format!(
                "matrix exponential lost symplecticity ({defect:e})"
            )));
        }
        SymplecticTransform::new(self.modes.clone(), s, DVector::zeros(2 * self.modes.len()))
    }

    /// Induced-coherence Hamiltonian on `(S, I1, I2, E)`:
    /// `i[(√κ a†_S − i√(1−κ) a†_E) a†_{I1} + a†_S a†_{I2} − h.c.]`.
    pub fn induced_coherence(kappa: f64) -> Result<Self> {
        use ModeLabel::*;
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::domain("kappa", kappa, "0 <= kappa <= 1"));
        }
        let i = Complex64::i();
        Self::new(
            vec![S, I1, I2, E],
            vec![
                Term::Active {
                    a: S,
                    b: I1,
                    c: i * kappa.sqrt(),
                },
                // i · (−i√(1−κ)) = √(1−κ)
                Term::Active {
                    a: E,
                    b: I1,
                    c: Complex64::new((1.0 - kappa).sqrt(), 0.0),
                },
                Term::Active { a: S, b: I2, c: i },
            ],
        )
    }
}

/// Checks `ΩK` symmetric, i.e. `K ∈ sp(2n, ℝ)`.
pub fn sp_defect(k: &DMatrix<f64>) -> f64 {
    let ok = linalg::omega(k.nrows() / 2) * k;
    linalg::max_abs(&(&ok - ok.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::ModeLabel::*;

    fn h1(terms: Vec<Term>, modes: Vec<ModeLabel>) -> QuadraticHamiltonian {
        QuadraticHamiltonian::new(modes, terms).unwrap()
    }

    #[test]
    fn squeezer_flow_matches_closed_form() {
        let g = 0.37;
        let h = h1(
            vec![Term::Active {
                a: S,
                b: I,
                c: Complex64::i(),
            }],
            vec![S, I],
        );
        let flow = h.flow(g).unwrap();
        let tms = SymplecticTransform::two_mode_squeeze(g, S, I).unwrap();
        assert!(linalg::max_abs(&(flow.matrix() - tms.matrix())) < 1e-13);
    }

    #[test]
    fn passive_flow_matches_beamsplitter() {
        let th = 0.81;
        let h = h1(
            vec![Term::Passive {
                a: S,
                b: E,
                c: Complex64::i(),
            }],
            vec![S, E],
        );
        let bs = SymplecticTransform::beamsplitter(th, S, E).unwrap();
        assert!(linalg::max_abs(&(h.flow(th).unwrap().matrix() - bs.matrix())) < 1e-13);
    }

    #[test]
    fn number_flow_is_phase_rotation() {
        let h = h1(vec![Term::Number { a: S, w: 1.0 }], vec![S]);
        let r = SymplecticTransform::phase_rotation(0.6, S).unwrap();
        assert!(linalg::max_abs(&(h.flow(0.6).unwrap().matrix() - r.matrix())) < 1e-13);
    }

    #[test]
    fn generators_lie_in_sp() {
        let h = QuadraticHamiltonian::induced_coherence(0.3).unwrap();
        assert!(sp_defect(&h.generator()) < 1e-12);
        let sq = h1(
            vec![Term::Active {
                a: S,
                b: S,
                c: Complex64::new(0.2, -0.4),
            }],
            vec![S],
        );
        assert!(sp_defect(&sq.generator()) < 1e-12);
        assert!(h.flow(0.9).unwrap().symplectic_defect() < 1e-9);
    }

    #[test]
    fn rejects_unknown_modes() {
        let r = QuadraticHamiltonian::new(vec![S], vec![Term::Number { a: E, w: 1.0 }]);
        assert_eq!(r.unwrap_err(), Error::UnknownLabel(E));
    }
}
