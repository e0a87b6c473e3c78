//! Circuit ↔ quadratic-Hamiltonian equivalence.
//!
//! A Gaussian circuit is reduced to its symplectic matrix `S`; the principal
//! real logarithm `x = log S` is the generator of a single quadratic
//! Hamiltonian applied for unit time, and its coordinates on a labelled
//! basis of `sp(2n, ℝ)` name the physical couplings it needs. Only the
//! charge-free branch is solved; `charges_used` is always empty.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{QuadraticHamiltonian, Term};
use crate::linalg;
use crate::symplectic::{ModeLabel, SymplecticTransform};

/// Reconstruction tolerance for `exp(x) ≈ S`.
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
/// Largest accepted residual of a basis decomposition.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Ordered product of the elements on the union of their modes, in
/// first-appearance order.
pub fn circuit_symplectic(elements: &[SymplecticTransform]) -> Result<SymplecticTransform> {
    let mut acc: Option<SymplecticTransform> = None;
    for e in elements {
        acc = Some(match acc {
            None => e.clone(),
            Some(a) => a.then(e)?,
        });
    }
    acc.ok_or_else(|| Error::Numerical("empty circuit has no mode set; use SymplecticTransform::identity".into()))
}

/// Same as [`circuit_symplectic`] on a fixed mode order; the empty list gives
/// the identity.
pub fn circuit_on(order: &[ModeLabel], elements: &[SymplecticTransform]) -> Result<SymplecticTransform> {
    let mut acc = SymplecticTransform::identity(order)?;
    for e in elements {
        acc = acc.then(e)?;
    }
    Ok(acc)
}

/// A generator with `exp(x) = S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalGenerator {
    pub modes: Vec<ModeLabel>,
    #[serde(skip)]
    pub x: DMatrix<f64>,
    /// `max|x − P(x)|`, `P` the projection onto `sp(2n, ℝ)`.
    pub projection_defect: f64,
    /// `max|exp(x) − S|`.
    pub reconstruction_error: f64,
}

/// Why no principal generator was returned.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    pub reason: String,
    /// Eigenvalues of `S` as `(re, im)`.
    pub eigenvalues: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GeneratorOutcome {
    Found(PrincipalGenerator),
    BranchFailure(BranchReport),
}

/// Projection onto `sp(2n, ℝ)`: `x ↦ −Ω·sym(Ωx)`.
pub fn project_sp(x: &DMatrix<f64>) -> DMatrix<f64> {
    let om = linalg::omega(x.nrows() / 2);
    -(&om * linalg::symmetrize(&(&om * x)))
}

/// Principal real logarithm of a symplectic matrix, projected into the Lie
/// algebra. Branch problems come back as a report, not an error.
pub fn principal_generator(s: &SymplecticTransform) -> Result<GeneratorOutcome> {
    let m = s.matrix();
    let defect = linalg::symplectic_defect(m);
    if defect > 1e-9 * linalg::max_abs(m).max(1.0).powi(2) {
        return Err(Error::NotSymplectic(defect));
    }
    let report = |reason: String| {
        GeneratorOutcome::BranchFailure(BranchReport {
            reason,
            eigenvalues: m.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect(),
        })
    };
    let x = match linalg::logm(m) {
        Ok(x) => x,
        Err(Error::Branch(msg)) => return Ok(report(msg)),
        Err(e) => return Err(e),
    };
    let p = project_sp(&x);
    let reconstruction_error = linalg::max_abs(&(linalg::expm(&p) - m));
    if reconstruction_error > RECONSTRUCTION_TOL * linalg::max_abs(m).max(1.0) {
        return Ok(report(format!(
            "exp(log S) misses S by {reconstruction_error:e}; charges may be required"
        )));
    }
    Ok(GeneratorOutcome::Found(PrincipalGenerator {
        modes: s.modes().to_vec(),
        projection_defect: linalg::max_abs(&(&x - &p)),
        x: p,
        reconstruction_error,
    }))
}

/// One labelled element of the `sp(2n, ℝ)` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisElement {
    pub label: String,
    pub term: Term,
    pub generator: DMatrix<f64>,
}

/// Labelled basis of `sp(2n, ℝ)`, `n(2n+1)` elements:
///
/// * `BS(a,b)`: `i a†_a a_b + h.c.` and `BSx(a,b)`: `a†_a a_b + h.c.`;
/// * `TMS(a,b)`: `i a†_a a†_b + h.c.` and `TMSx(a,b)`: `a†_a a†_b + h.c.`;
/// * `phase(a)`: `a†_a a_a`;
/// * `SQ(a)`: `i a†_a² + h.c.` and `SQx(a)`: `a†_a² + h.c.`.
///
/// The unprimed couplings are the ones whose unit-time flows are the
/// beamsplitter and two-mode squeezer used throughout the crate.
pub fn sp_basis(modes: &[ModeLabel]) -> Result<Vec<BasisElement>> {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let mut out = Vec::new();
    let mut push = |label: String, term: Term| -> Result<()> {
        let generator = QuadraticHamiltonian::new(modes.to_vec(), vec![term])?.generator();
        out.push(BasisElement {
            label,
            term,
            generator,
        });
        Ok(())
    };
    for (k, &a) in modes.iter().enumerate() {
        for &b in &modes[k + 1..] {
            push(format!("BS({a},{b})"), Term::Passive { a, b, c: i })?;
            push(format!("BSx({a},{b})"), Term::Passive { a, b, c: one })?;
            push(format!("TMS({a},{b})"), Term::Active { a, b, c: i })?;
            push(format!("TMSx({a},{b})"), Term::Active { a, b, c: one })?;
        }
    }
    for &a in modes {
        push(format!("phase({a})"), Term::Number { a, w: 1.0 })?;
        push(format!("SQ({a})"), Term::Active { a, b: a, c: i })?;
        push(format!("SQx({a})"), Term::Active { a, b: a, c: one })?;
    }
    Ok(out)
}

/// Coordinates of a generator on [`sp_basis`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LieBasisDecomposition {
    pub modes: Vec<ModeLabel>,
    pub coefficients: BTreeMap<String, f64>,
    /// Frobenius norm of `x − Σ c_j K_j`.
    pub residual: f64,
    pub charges_used: Vec<String>,
}

impl LieBasisDecomposition {
    pub fn coefficient(&self, label: &str) -> f64 {
        self.coefficients.get(label).copied().unwrap_or(0.0)
    }

    /// Coefficients above `tol`, largest first.
    pub fn significant(&self, tol: f64) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self
            .coefficients
            .iter()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(l, c)| (l.clone(), *c))
            .collect();
        v.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        v
    }

    /// Significant couplings whose family and mode pair are not in `allowed`
    /// (labels compared with the `x` suffix stripped).
    pub fn outside(&self, allowed: &[&str], tol: f64) -> Vec<(String, f64)> {
        self.significant(tol)
            .into_iter()
            .filter(|(l, _)| !allowed.contains(&l.replacen("x(", "(", 1).as_str()))
            .collect()
    }

    /// `Σ c_j K_j`.
    pub fn assemble(&self) -> Result<DMatrix<f64>> {
        let basis = sp_basis(&self.modes)?;
        let d = 2 * self.modes.len();
        Ok(basis
            .iter()
            .fold(DMatrix::zeros(d, d), |acc, b| acc + &b.generator * self.coefficient(&b.label)))
    }

    /// The quadratic Hamiltonian `Σ c_j H_j` whose unit-time flow is
    /// `exp(assemble())`.
    pub fn hamiltonian(&self) -> Result<QuadraticHamiltonian> {
        let basis = sp_basis(&self.modes)?;
        let terms = basis
            .iter()
            .filter(|b| self.coefficient(&b.label) != 0.0)
            .map(|b| scale_term(b.term, self.coefficient(&b.label)))
            .collect();
        QuadraticHamiltonian::new(self.modes.clone(), terms)
    }
}

fn scale_term(t: Term, c: f64) -> Term {
    match t {
        Term::Passive { a, b, c: z } => Term::Passive { a, b, c: z * c },
        Term::Active { a, b, c: z } => Term::Active { a, b, c: z * c },
        Term::Number { a, w } => Term::Number { a, w: w * c },
    }
}

/// Least-squares coordinates of `x` on the labelled basis.
pub fn decompose(modes: &[ModeLabel], x: &DMatrix<f64>) -> Result<LieBasisDecomposition> {
    let d = 2 * modes.len();
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.nrows(),
        });
    }
    let basis = sp_basis(modes)?;
    let a = DMatrix::from_fn(d * d, basis.len(), |r, c| basis[c].generator[r]);
    let rhs = DVector::from_iterator(d * d, x.iter().copied());
    let coeffs = a
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let residual = (&a * &coeffs - rhs).norm();
    Ok(LieBasisDecomposition {
        modes: modes.to_vec(),
        coefficients: basis
            .iter()
            .zip(coeffs.iter())
            .map(|(b, &c)| (b.label.clone(), if c.abs() < 1e-14 { 0.0 } else { c }))
            .collect(),
        residual,
        charges_used: Vec::new(),
    })
}

/// Result of running a whole circuit through the solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equivalence {
    pub generator: PrincipalGenerator,
    pub decomposition: LieBasisDecomposition,
    /// `max|exp(Σ c_j K_j) − S|`.
    pub round_trip_error: f64,
}

/// `principal_generator` followed by `decompose`.
pub fn equivalent_hamiltonian(s: &SymplecticTransform) -> Result<std::result::Result<Equivalence, BranchReport>> {
    match principal_generator(s)? {
        GeneratorOutcome::BranchFailure(r) => Ok(Err(r)),
        GeneratorOutcome::Found(g) => {
            let decomposition = decompose(&g.modes, &g.x)?;
            let round_trip_error = linalg::max_abs(&(linalg::expm(&decomposition.assemble()?) - s.matrix()));
            Ok(Ok(Equivalence {
                generator: g,
                decomposition,
                round_trip_error,
            }))
        }
    }
}

/// Couplings drawn in the optical diagram of the circuit model.
pub const MODEL1_DIAGRAM: [&str; 3] = ["TMS(S,I1)", "TMS(S,I2)", "BS(S,E)"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::model1_circuit;
    use ModeLabel::*;

    const ORDER: [ModeLabel; 4] = [S, I1, I2, E];

    #[test]
    fn basis_has_sp8_dimension_and_rank() {
        let b = sp_basis(&ORDER).unwrap();
        assert_eq!(b.len(), 36);
        let a = DMatrix::from_fn(64, 36, |r, c| b[c].generator[r]);
        assert_eq!(a.rank(1e-10), 36);
        assert!(b.iter().all(|e| crate::hamiltonian::sp_defect(&e.generator) < 1e-14));
    }

    #[test]
    fn empty_and_cancelling_circuits() {
        let id = circuit_on(&ORDER, &[]).unwrap();
        assert_eq!(id.matrix(), &DMatrix::identity(8, 8));
        let c = circuit_on(
            &ORDER,
            &[
                SymplecticTransform::beamsplitter(0.4, S, E).unwrap(),
                SymplecticTransform::beamsplitter(-0.4, S, E).unwrap(),
            ],
        )
        .unwrap();
        assert!(linalg::max_abs(&(c.matrix() - DMatrix::identity(8, 8))) < 1e-15);
        match principal_generator(&c).unwrap() {
            GeneratorOutcome::Found(g) => assert!(linalg::max_abs(&g.x) < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn beamsplitter_has_one_coefficient() {
        let s = circuit_on(&ORDER, &[SymplecticTransform::beamsplitter(0.3, S, E).unwrap()]).unwrap();
        let eq = equivalent_hamiltonian(&s).unwrap().unwrap();
        let sig = eq.decomposition.significant(1e-9);
        assert_eq!(sig.len(), 1);
        assert_eq!(sig[0].0, "BS(S,E)");
        assert!((sig[0].1 - 0.3).abs() < 1e-10);
    }

    #[test]
    fn model2_generator_round_trip() {
        let (g, kappa) = (0.5, 0.3);
        let h = QuadraticHamiltonian::induced_coherence(kappa).unwrap();
        let s = h.flow(g).unwrap();
        let eq = equivalent_hamiltonian(&s).unwrap().unwrap();
        assert!(linalg::max_abs(&(&eq.generator.x - h.generator() * g)) < 1e-6);
        let d = &eq.decomposition;
        assert!((d.coefficient("TMS(S,I1)") - g * kappa.sqrt()).abs() < 1e-9);
        assert!((d.coefficient("TMSx(I1,E)") - g * (1.0 - kappa).sqrt()).abs() < 1e-9);
        assert!((d.coefficient("TMS(S,I2)") - g).abs() < 1e-9);
        assert_eq!(d.significant(1e-9).len(), 3);
    }

    #[test]
    fn model1_needs_environment_idler_squeezing() {
        for kappa in [0.1, 0.5] {
            let s = model1_circuit(0.4, kappa).unwrap();
            let eq = equivalent_hamiltonian(&s).unwrap().unwrap();
            assert!(eq.round_trip_error < 1e-6);
            assert!(eq.decomposition.residual < RESIDUAL_TOL);
            let c = eq.decomposition.coefficient("TMS(I2,E)").abs()
                + eq.decomposition.coefficient("TMSx(I2,E)").abs();
            assert!(c > 1e-6, "kappa {kappa}: {c}");
            assert!(!eq.decomposition.outside(&MODEL1_DIAGRAM, 1e-6).is_empty());
        }
    }

    #[test]
    fn negative_axis_is_reported() {
        // a π phase rotation has eigenvalue −1 with multiplicity two
        let s = SymplecticTransform::phase_rotation(std::f64::consts::PI, S).unwrap();
        match principal_generator(&s).unwrap() {
            GeneratorOutcome::BranchFailure(r) => assert_eq!(r.eigenvalues.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
