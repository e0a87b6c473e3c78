//! Truncated Fock-space oracle.
//!
//! Every scheme is rebuilt here from ladder operators on an
//! occupation-number basis, evolved by exact two-mode block unitaries or a Chebyshev series for
//! `e^{−itH}`, and
//! reduced by an explicit partial trace. Thermal inputs become mixtures over
//! Fock states with geometric weights. Nothing in this module reads a
//! covariance matrix, so agreement with the Gaussian pipeline is a genuine
//! cross-check; the only shared piece is the [`Term`] list, which pins both
//! sides to one phase convention.
//!
//! All passive and squeezing couplings used by the entangled schemes
//! conserve the charge `n_S + n_E − n_I` (summed over idlers), so each thermal
//! trajectory lives in one charge sector and the receiver state is block
//! diagonal. Both facts are used to keep the 4-mode builds small.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channels::{Scheme, SchemeParams};
use crate::error::{Error, Result};
use crate::hamiltonian::{QuadraticHamiltonian, Term};
use crate::metrology::{QfiMethod, QfiResult};
use crate::symplectic::ModeLabel;

use ModeLabel::*;

/// Leakage budget for oracle-grade comparisons.
pub const LEAKAGE_BUDGET: f64 = 1e-6;

/// Thermal weight left out of a mixture; counted as leakage.
const THERMAL_TAIL: f64 = 1e-10;

type Ket = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Occupation-number basis with per-mode cutoff `d` (occupations `0..d`),
/// a cap on the total excitation number and optionally a fixed charge
/// `Σ c_m n_m = q`.
#[derive(Debug, Clone)]
pub struct FockSpace {
    modes: Vec<ModeLabel>,
    cutoff: usize,
    cap: usize,
    basis: Vec<Vec<u16>>,
    index: HashMap<u64, usize>,
}

/// Sparse operator stored by rows.
#[derive(Debug, Clone)]
pub struct SparseOp {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOp {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: &[Complex64]) -> Ket {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, c)| c * v[j]).sum())
            .collect()
    }

    /// Largest absolute row sum, an upper bound on the spectral norm for
    /// Hermitian and anti-Hermitian operators.
    pub fn norm_bound(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, c)| c.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, c)| c * v[j]).sum();
        }
    }

    /// `e^{−itA} v` for Hermitian `A` by a Chebyshev expansion on the
    /// spectral interval `[−R, R]`, `R` the row-sum bound.
    pub fn evolve(&self, t: f64, v: &[Complex64]) -> Ket {
        let r = self.norm_bound();
        if r == 0.0 || t == 0.0 {
            return v.to_vec();
        }
        let j = bessel_sequence(t.abs() * r);
        // (−i·sign t)^k
        let phase = Complex64::new(0.0, -t.signum());
        let mut prev = v.to_vec();
        let mut cur = vec![ZERO; v.len()];
        self.apply_into(v, &mut cur);
        cur.iter_mut().for_each(|c| *c /= r);
        let mut next = vec![ZERO; v.len()];
        let mut out: Ket = v.iter().map(|c| c * j[0]).collect();
        let mut ph = phase;
        for (k, &jk) in j.iter().enumerate().skip(1) {
            let c = ph * (2.0 * jk);
            out.iter_mut().zip(&cur).for_each(|(o, w)| *o += c * w);
            if k + 1 == j.len() {
                break;
            }
            self.apply_into(&cur, &mut next);
            next.iter_mut().zip(&prev).for_each(|(n, p)| *n = *n * (2.0 / r) - p);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
            ph *= phase;
        }
        out
    }

    pub fn scaled(&self, c: Complex64) -> SparseOp {
        SparseOp {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(j, v)| (j, c * v)).collect())
                .collect(),
        }
    }

    fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, Complex64)>) -> Self {
        trip.sort_by_key(|&(i, j, _)| (i, j));
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for (i, j, c) in trip {
            match rows[i].last_mut() {
                Some((jj, cc)) if *jj == j => *cc += c,
                _ => rows[i].push((j, c)),
            }
        }
        SparseOp { rows }
    }

    fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, c)| (i, j, c)))
    }

    /// `A·B` on the same (truncated) basis.
    pub fn compose(&self, b: &SparseOp) -> SparseOp {
        let mut trip = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, ca) in row {
                for &(j, cb) in &b.rows[k] {
                    trip.push((i, j, ca * cb));
                }
            }
        }
        SparseOp::from_triplets(self.dim(), trip)
    }

    /// `ca·A + cb·B`.
    pub fn combine(&self, b: &SparseOp, ca: Complex64, cb: Complex64) -> SparseOp {
        let trip = self
            .triplets()
            .map(|(i, j, c)| (i, j, ca * c))
            .chain(b.triplets().map(|(i, j, c)| (i, j, cb * c)))
            .collect();
        SparseOp::from_triplets(self.dim(), trip)
    }
}

/// `J_0(x), J_1(x), …` up to the order where the terms drop below `1e-18`,
/// by Miller's backward recurrence normalised with `J_0 + 2ΣJ_{2k} = 1`.
fn bessel_sequence(x: f64) -> Vec<f64> {
    let top = (x + 30.0 + 10.0 * x.powf(1.0 / 3.0)).ceil() as usize;
    let top = top + top % 2;
    let mut j = vec![0.0; top + 2];
    j[top] = 1e-300;
    for k in (1..=top).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            j.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    let mut out: Vec<f64> = j[..=top].iter().map(|v| v / norm).collect();
    while out.len() > 1 && (out.len() as f64) > x && out[out.len() - 1].abs() < 1e-18 {
        out.pop();
    }
    out
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// One ladder operator: `(mode index, creation?)`.
type Ladder = (usize, bool);

impl FockSpace {
    /// Full truncated space; `cap` defaults to no restriction beyond the cutoff.
    pub fn new(modes: &[ModeLabel], cutoff: usize, cap: Option<usize>) -> Result<Self> {
        Self::build(modes, cutoff, cap, None)
    }

    /// Charge sector `Σ charges[m]·n_m = q`.
    pub fn sector(
        modes: &[ModeLabel],
        cutoff: usize,
        cap: Option<usize>,
        charges: &[i32],
        q: i32,
    ) -> Result<Self> {
        if charges.len() != modes.len() {
            return Err(Error::DimensionMismatch {
                expected: modes.len(),
                found: charges.len(),
            });
        }
        Self::build(modes, cutoff, cap, Some((charges, q)))
    }

    fn build(
        modes: &[ModeLabel],
        cutoff: usize,
        cap: Option<usize>,
        charge: Option<(&[i32], i32)>,
    ) -> Result<Self> {
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::LabelCollision(*m));
            }
        }
        if cutoff < 2 || cutoff > u16::MAX as usize {
            return Err(Error::domain("cutoff", cutoff as f64, "2 <= cutoff < 65536"));
        }
        if modes.is_empty() || modes.len() > 4 {
            return Err(Error::domain("modes", modes.len() as f64, "1 to 4 modes"));
        }
        let cap = cap.unwrap_or(modes.len() * (cutoff - 1));
        let mut basis = Vec::new();
        let mut cur = vec![0u16; modes.len()];
        enumerate(&mut cur, 0, cutoff, cap, charge, &mut basis);
        let index = basis.iter().enumerate().map(|(i, b)| (key(b), i)).collect();
        Ok(FockSpace {
            modes: modes.to_vec(),
            cutoff,
            cap,
            basis,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn basis(&self) -> &[Vec<u16>] {
        &self.basis
    }

    pub fn position(&self, occupations: &[u16]) -> Option<usize> {
        if occupations.len() != self.modes.len() {
            return None;
        }
        self.index.get(&key(occupations)).copied()
    }

    fn mode_index(&self, l: ModeLabel) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| *m == l)
            .ok_or(Error::UnknownLabel(l))
    }

    pub fn ket(&self, occupations: &[u16]) -> Result<Ket> {
        let i = self.position(occupations).ok_or_else(|| {
            Error::Numerical(format!("occupation {occupations:?} outside the truncated basis"))
        })?;
        let mut v = vec![ZERO; self.dim()];
        v[i] = ONE;
        Ok(v)
    }

    /// Applies a product of ladder operators (rightmost first) to a basis
    /// tuple; `None` if the result is zero or leaves the basis.
    fn ladder(&self, occ: &[u16], ops: &[Ladder]) -> Option<(usize, f64)> {
        let mut n = [0u16; 4];
        let n = &mut n[..occ.len()];
        n.copy_from_slice(occ);
        let mut amp = 1.0;
        for &(m, create) in ops.iter().rev() {
            if create {
                n[m] += 1;
                amp *= (n[m] as f64).sqrt();
            } else {
                if n[m] == 0 {
                    return None;
                }
                amp *= (n[m] as f64).sqrt();
                n[m] -= 1;
            }
        }
        self.position(n).map(|j| (j, amp))
    }

    /// Sparse matrix of `Σ c · (product of ladders)`.
    fn operator(&self, parts: &[(Complex64, Vec<Ladder>)]) -> SparseOp {
        let mut trip = Vec::new();
        for (j, occ) in self.basis.iter().enumerate() {
            for (c, ops) in parts {
                if let Some((i, amp)) = self.ladder(occ, ops) {
                    trip.push((i, j, c * amp));
                }
            }
        }
        SparseOp::from_triplets(self.dim(), trip)
    }

    /// `a_l` or `a†_l`.
    pub fn ladder_op(&self, l: ModeLabel, create: bool) -> Result<SparseOp> {
        let m = self.mode_index(l)?;
        Ok(self.operator(&[(ONE, vec![(m, create)])]))
    }

    /// Hermitian operator of a quadratic Hamiltonian, projected on the basis.
    pub fn hamiltonian(&self, h: &QuadraticHamiltonian) -> Result<SparseOp> {
        let mut parts = Vec::new();
        for t in h.terms() {
            match *t {
                Term::Passive { a, b, c } => {
                    let (a, b) = (self.mode_index(a)?, self.mode_index(b)?);
                    parts.push((c, vec![(a, true), (b, false)]));
                    parts.push((c.conj(), vec![(b, true), (a, false)]));
                }
                Term::Active { a, b, c } => {
                    let (a, b) = (self.mode_index(a)?, self.mode_index(b)?);
                    parts.push((c, vec![(a, true), (b, true)]));
                    parts.push((c.conj(), vec![(b, false), (a, false)]));
                }
                Term::Number { a, w } => {
                    let a = self.mode_index(a)?;
                    parts.push((Complex64::new(w, 0.0), vec![(a, true), (a, false)]));
                }
            }
        }
        Ok(self.operator(&parts))
    }

    /// Generator `α a† − ᾱ a` of the displacement `D(α)` on mode `l`.
    pub fn displacement_generator(&self, l: ModeLabel, alpha: Complex64) -> Result<SparseOp> {
        let m = self.mode_index(l)?;
        Ok(self.operator(&[(alpha, vec![(m, true)]), (-alpha.conj(), vec![(m, false)])]))
    }

    /// `e^{−itH}` applied to `v` for Hermitian `H`.
    pub fn evolve(&self, h: &SparseOp, t: f64, v: &[Complex64]) -> Ket {
        h.evolve(t, v)
    }

    /// Population of basis states from which one more excitation would
    /// leave the basis; the truncation-leakage proxy.
    pub fn boundary_population(&self, v: &[Complex64]) -> f64 {
        self.basis
            .iter()
            .zip(v)
            .filter(|(occ, _)| {
                let total: usize = occ.iter().map(|&n| n as usize).sum();
                total >= self.cap || occ.iter().any(|&n| n as usize + 1 >= self.cutoff)
            })
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }
}

/// Occupations packed 16 bits per mode; cutoffs stay far below 2¹⁶ and
/// spaces have at most four modes.
fn key(occ: &[u16]) -> u64 {
    occ.iter().fold(0u64, |k, &n| (k << 16) | n as u64)
}

fn enumerate(
    cur: &mut Vec<u16>,
    pos: usize,
    d: usize,
    budget: usize,
    charge: Option<(&[i32], i32)>,
    out: &mut Vec<Vec<u16>>,
) {
    let last = cur.len() - 1;
    if pos == last {
        if let Some((c, q)) = charge {
            if c[last] != 0 {
                // the last occupation is fixed by the charge
                let partial: i32 = cur[..last].iter().zip(c).map(|(&n, &w)| n as i32 * w).sum();
                let r = q - partial;
                if r % c[last] == 0 {
                    let n = r / c[last];
                    if n >= 0 && (n as usize) < d && n as usize <= budget {
                        cur[pos] = n as u16;
                        out.push(cur.clone());
                    }
                }
                cur[pos] = 0;
                return;
            }
        }
    }
    if pos == cur.len() {
        let ok = charge.map_or(true, |(c, q)| {
            cur.iter().zip(c).map(|(&n, &w)| n as i32 * w).sum::<i32>() == q
        });
        if ok {
            out.push(cur.clone());
        }
        return;
    }
    for n in 0..d.min(budget + 1) {
        cur[pos] = n as u16;
        enumerate(cur, pos + 1, d, budget - n, charge, out);
    }
    cur[pos] = 0;
}

/// Exact `e^{−itH}` of a two-mode coupling, stored as dense unitaries on
/// the chains it leaves invariant (`n_a + n_b` for passive, `n_a − n_b` for
/// active couplings, spectators fixed).
#[derive(Debug, Clone)]
pub struct BlockGate {
    chains: Vec<(Vec<usize>, Arc<DMatrix<Complex64>>)>,
}

impl BlockGate {
    pub fn apply(&self, v: &[Complex64]) -> Ket {
        let mut out = vec![ZERO; v.len()];
        for (idx, u) in &self.chains {
            for (r, &i) in idx.iter().enumerate() {
                out[i] = idx.iter().enumerate().map(|(c, &j)| u[(r, c)] * v[j]).sum();
            }
        }
        out
    }
}

/// One coupling and duration, with chain unitaries memoised across spaces.
/// A chain is fixed by its conserved value, lowest `n_a` and length.
#[derive(Debug)]
pub struct GateTable {
    a: ModeLabel,
    b: ModeLabel,
    c: Complex64,
    active: bool,
    t: f64,
    cache: Mutex<HashMap<(i32, u16, usize), Arc<DMatrix<Complex64>>>>,
}

impl GateTable {
    pub fn new(term: Term, t: f64) -> Result<Self> {
        let (a, b, c, active) = match term {
            Term::Passive { a, b, c } if a != b => (a, b, c, false),
            Term::Active { a, b, c } if a != b => (a, b, c, true),
            _ => {
                return Err(Error::Numerical(
                    "block gates take one two-mode passive or active term".into(),
                ))
            }
        };
        Ok(Self {
            a,
            b,
            c,
            active,
            t,
            cache: Mutex::new(HashMap::new()),
        })
    }

    fn unitary(&self, conserved: i32, na0: u16, m: usize) -> Arc<DMatrix<Complex64>> {
        let key = (conserved, na0, m);
        if let Some(u) = self.cache.lock().expect("gate cache poisoned").get(&key) {
            return u.clone();
        }
        // a†b or a†b† raises n_a by one along the chain; the phase of c is
        // moved into diag(e^{irφ}) so the eigenproblem is real tridiagonal
        let mut block = DMatrix::<f64>::zeros(m, m);
        for r in 0..m.saturating_sub(1) {
            let na = (na0 as usize + r) as f64;
            let amp = if self.active {
                ((na + 1.0) * (na - conserved as f64 + 1.0)).sqrt()
            } else {
                ((na + 1.0) * (conserved as f64 - na)).sqrt()
            };
            block[(r + 1, r)] = self.c.norm() * amp;
            block[(r, r + 1)] = self.c.norm() * amp;
        }
        let e = SymmetricEigen::new(block);
        let vecs = e.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            m,
            e.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -self.t * l)),
        ));
        let mut u = &vecs * phases * vecs.adjoint();
        let phi = self.c.arg();
        for r in 0..m {
            for col in 0..m {
                u[(r, col)] *= Complex64::from_polar(1.0, phi * (r as f64 - col as f64));
            }
        }
        let u = Arc::new(u);
        self.cache.lock().expect("gate cache poisoned").insert(key, u.clone());
        u
    }

    pub fn gate(&self, space: &FockSpace) -> Result<BlockGate> {
        let (ia, ib) = (space.mode_index(self.a)?, space.mode_index(self.b)?);
        let mut groups: HashMap<(u64, i32), Vec<usize>> = HashMap::new();
        for (i, occ) in space.basis.iter().enumerate() {
            let mut spect = [0u16; 4];
            spect[..occ.len()].copy_from_slice(occ);
            spect[ia] = 0;
            spect[ib] = 0;
            let conserved = if self.active {
                occ[ia] as i32 - occ[ib] as i32
            } else {
                occ[ia] as i32 + occ[ib] as i32
            };
            groups.entry((key(&spect[..occ.len()]), conserved)).or_default().push(i);
        }
        let mut chains = Vec::with_capacity(groups.len());
        for ((_, conserved), mut idx) in groups {
            idx.sort_by_key(|&i| space.basis[i][ia]);
            let na0 = space.basis[idx[0]][ia];
            if idx.iter().enumerate().any(|(r, &i)| space.basis[i][ia] != na0 + r as u16) {
                return Err(Error::Numerical("invariant chain is not contiguous".into()));
            }
            let u = self.unitary(conserved, na0, idx.len());
            chains.push((idx, u));
        }
        Ok(BlockGate { chains })
    }
}

impl FockSpace {
    /// [`BlockGate`] for a single two-mode `Passive` or `Active` term.
    pub fn two_mode_gate(&self, term: Term, t: f64) -> Result<BlockGate> {
        GateTable::new(term, t)?.gate(self)
    }
}

/// A weighted pure state on its own (sector) space.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub weight: f64,
    pub space: Arc<FockSpace>,
    pub ket: Ket,
}

/// `Σ_w w |ψ⟩⟨ψ|` reduced to `keep`. The kept space uses the cutoff and
/// cap of the first trajectory. Missing weight (a truncated thermal tail)
/// and the boundary population of each trajectory add up to the leakage.
pub fn reduce(trajectories: &[Trajectory], keep: &[ModeLabel]) -> Result<FockDensityMatrix> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::Numerical("empty mixture".into()))?;
    let kept_space = FockSpace::new(keep, first.space.cutoff, Some(first.space.cap))?;
    let d = kept_space.dim();
    let partial = trajectories
        .par_iter()
        .map(|t| -> Result<(Vec<(usize, usize, Complex64)>, f64)> {
            let space = &t.space;
            let kept_idx: Vec<usize> = keep.iter().map(|&l| space.mode_index(l)).collect::<Result<_>>()?;
            let traced_idx: Vec<usize> = (0..space.modes.len()).filter(|i| !kept_idx.contains(i)).collect();
            let mut groups: HashMap<u64, Vec<(usize, Complex64)>> = HashMap::new();
            let mut k = Vec::with_capacity(kept_idx.len());
            let mut tr = Vec::with_capacity(traced_idx.len());
            for (occ, &c) in space.basis.iter().zip(&t.ket) {
                if c == ZERO {
                    continue;
                }
                k.clear();
                tr.clear();
                k.extend(kept_idx.iter().map(|&m| occ[m]));
                tr.extend(traced_idx.iter().map(|&m| occ[m]));
                let k = kept_space.position(&k).ok_or_else(|| {
                    Error::Numerical("kept configuration outside the reduced basis".into())
                })?;
                groups.entry(key(&tr)).or_default().push((k, c));
            }
            let mut entries = Vec::new();
            for members in groups.values() {
                for &(ka, va) in members {
                    let wa = va * t.weight;
                    entries.extend(members.iter().map(|&(kb, vb)| (ka, kb, wa * vb.conj())));
                }
            }
            Ok((entries, t.weight * space.boundary_population(&t.ket)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rho = DMatrix::zeros(d, d);
    let mut leakage = 0.0;
    let mut weight = 0.0;
    for ((entries, l), t) in partial.into_iter().zip(trajectories) {
        for (a, b, v) in entries {
            rho[(a, b)] += v;
        }
        leakage += l;
        weight += t.weight;
    }
    Ok(FockDensityMatrix {
        space: kept_space,
        matrix: rho,
        leakage: leakage + (1.0 - weight).max(0.0),
    })
}

/// Reduced density matrix on a truncated basis. `leakage` bounds the
/// probability lost to truncation (boundary population of the pure
/// trajectories plus discarded thermal weight).
#[derive(Debug, Clone)]
pub struct FockDensityMatrix {
    space: FockSpace,
    matrix: DMatrix<Complex64>,
    leakage: f64,
}

/// Connected components of the union of the nonzero patterns.
fn blocks(mats: &[&DMatrix<Complex64>]) -> Vec<Vec<usize>> {
    let n = mats[0].nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for m in mats {
        for j in 0..n {
            for i in 0..n {
                if m[(i, j)] != ZERO {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

fn sub(m: &DMatrix<Complex64>, idx: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn hermitian_eigh(m: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let e = SymmetricEigen::new(h);
    (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
}

/// `f(M)` for a Hermitian block, negative eigenvalues clipped.
fn apply_fn(m: DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let (l, u) = hermitian_eigh(m);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        l.len(),
        l.iter().map(|&x| Complex64::new(f(x.max(0.0)), 0.0)),
    ));
    &u * d * u.adjoint()
}

impl FockDensityMatrix {
    pub fn modes(&self) -> &[ModeLabel] {
        self.space.modes()
    }

    pub fn cutoff(&self) -> usize {
        self.space.cutoff()
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .fold(0.0, |a, c| a.max(c.norm()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = blocks(&[&self.matrix])
            .iter()
            .flat_map(|b| hermitian_eigh(sub(&self.matrix, b)).0)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    fn expect(&self, op: &SparseOp) -> Complex64 {
        // tr(ρ A) = Σ_ij ρ_ji A_ij
        op.triplets().map(|(i, j, c)| self.matrix[(j, i)] * c).sum()
    }

    pub fn mean_photon_number(&self, l: ModeLabel) -> Result<f64> {
        let a = self.space.ladder_op(l, false)?;
        let ad = self.space.ladder_op(l, true)?;
        Ok(self.expect(&ad.compose(&a)).re)
    }

    /// Quadrature mean and covariance in the `(q₁, p₁, …)` ordering with
    /// `a = (q + ip)/√2`.
    pub fn moments(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.space.modes.len();
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let mut quads = Vec::with_capacity(2 * n);
        for &l in &self.space.modes {
            let a = self.space.ladder_op(l, false)?;
            let ad = self.space.ladder_op(l, true)?;
            quads.push(a.combine(&ad, Complex64::new(s2, 0.0), Complex64::new(s2, 0.0)));
            quads.push(a.combine(&ad, Complex64::new(0.0, -s2), Complex64::new(0.0, s2)));
        }
        let mean = DVector::from_iterator(2 * n, quads.iter().map(|q| self.expect(q).re));
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for j in i..2 * n {
                // Re⟨x_i x_j⟩ is the symmetrised product
                let v = self.expect(&quads[i].compose(&quads[j])).re - mean[i] * mean[j];
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok((mean, cov))
    }
}

impl FockDensityMatrix {
    /// Zero-padded copy on a larger truncation of the same modes.
    pub fn embed(&self, cutoff: usize, cap: usize) -> Result<FockDensityMatrix> {
        if cutoff < self.space.cutoff || cap < self.space.cap {
            return Err(Error::domain("cutoff", cutoff as f64, "embedding cannot shrink the basis"));
        }
        let space = FockSpace::new(&self.space.modes, cutoff, Some(cap))?;
        let pos: Vec<usize> = self
            .space
            .basis
            .iter()
            .map(|b| space.position(b).expect("larger truncation contains the smaller"))
            .collect();
        let mut m = DMatrix::zeros(space.dim(), space.dim());
        for (i, &pi) in pos.iter().enumerate() {
            for (j, &pj) in pos.iter().enumerate() {
                m[(pi, pj)] = self.matrix[(i, j)];
            }
        }
        Ok(FockDensityMatrix {
            space,
            matrix: m,
            leakage: self.leakage,
        })
    }
}

/// Brings several oracle states onto one basis, padding the smaller
/// truncations with zeros.
pub fn align(states: &[&FockDensityMatrix]) -> Result<Vec<FockDensityMatrix>> {
    let first = states
        .first()
        .ok_or_else(|| Error::Numerical("no states to align".into()))?;
    for s in states {
        if s.space.modes != first.space.modes {
            return Err(Error::DimensionMismatch {
                expected: first.space.modes.len(),
                found: s.space.modes.len(),
            });
        }
    }
    let cutoff = states.iter().map(|s| s.space.cutoff).max().unwrap_or(first.space.cutoff);
    let cap = states.iter().map(|s| s.space.cap).max().unwrap_or(first.space.cap);
    states
        .iter()
        .map(|s| {
            if s.space.cutoff == cutoff && s.space.cap == cap {
                Ok((*s).clone())
            } else {
                s.embed(cutoff, cap)
            }
        })
        .collect()
}

/// `(tr √(√ρ σ √ρ))²`.
pub fn fock_fidelity(a: &FockDensityMatrix, b: &FockDensityMatrix) -> Result<f64> {
    let ab = align(&[a, b])?;
    let (a, b) = (&ab[0], &ab[1]);
    let mut root = 0.0;
    for idx in blocks(&[&a.matrix, &b.matrix]) {
        let sa = apply_fn(sub(&a.matrix, &idx), f64::sqrt);
        let m = &sa * sub(&b.matrix, &idx) * &sa;
        root += hermitian_eigh(m).0.iter().map(|&l| l.max(0.0).sqrt()).sum::<f64>();
    }
    Ok(root * root)
}

/// `tr ρ^s σ^{1−s}`.
pub fn fock_s_overlap(a: &FockDensityMatrix, b: &FockDensityMatrix, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OverlapExponent(s));
    }
    let ab = align(&[a, b])?;
    let (a, b) = (&ab[0], &ab[1]);
    let mut acc = 0.0;
    for idx in blocks(&[&a.matrix, &b.matrix]) {
        let pa = apply_fn(sub(&a.matrix, &idx), |x| x.powf(s));
        let pb = apply_fn(sub(&b.matrix, &idx), |x| x.powf(1.0 - s));
        acc += (pa * pb).trace().re;
    }
    Ok(acc)
}

/// Default oracle derivative step `10⁻³·min(κ, 1−κ)`.
pub fn default_oracle_step(kappa: f64) -> f64 {
    1e-3 * kappa.min(1.0 - kappa)
}

/// QFI `2 Σ_{ij} |⟨i|∂ρ|j⟩|²/(λ_i + λ_j)` with `∂ρ` from a central
/// difference of oracle builds. `est_error` carries the largest leakage
/// among the builds.
pub fn fock_qfi<F>(family: F, kappa: f64, step: f64) -> Result<QfiResult>
where
    F: Fn(f64) -> Result<FockDensityMatrix> + Sync,
{
    let centre = family(kappa)?;
    fock_qfi_at(&centre, family, kappa, step)
}

/// [`fock_qfi`] reusing an already built `ρ(κ)`.
pub fn fock_qfi_at<F>(centre: &FockDensityMatrix, family: F, kappa: f64, step: f64) -> Result<QfiResult>
where
    F: Fn(f64) -> Result<FockDensityMatrix> + Sync,
{
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::domain("kappa", kappa, "0 < kappa < 1"));
    }
    if !(step > 0.0) || kappa - step <= 0.0 || kappa + step >= 1.0 {
        return Err(Error::StepTooLarge { kappa, step });
    }
    let (lo, hi) = rayon::join(|| family(kappa - step), || family(kappa + step));
    let (lo, hi) = (lo?, hi?);
    let all = align(&[centre, &lo, &hi])?;
    let (centre, lo, hi) = (&all[0], &all[1], &all[2]);
    let d_rho = (&hi.matrix - &lo.matrix) * Complex64::new(0.5 / step, 0.0);
    let mut q = 0.0;
    for idx in blocks(&[&centre.matrix, &lo.matrix, &hi.matrix]) {
        let (lam, u) = hermitian_eigh(sub(&centre.matrix, &idx));
        let dr = u.adjoint() * sub(&d_rho, &idx) * &u;
        for i in 0..lam.len() {
            for j in 0..lam.len() {
                let s = lam[i].max(0.0) + lam[j].max(0.0);
                if s > 1e-12 {
                    q += 2.0 * dr[(i, j)].norm_sqr() / s;
                }
            }
        }
    }
    Ok(QfiResult {
        value: q,
        method: QfiMethod::FockOracle,
        step: Some(step),
        est_error: Some(centre.leakage.max(lo.leakage).max(hi.leakage)),
        regularized: false,
    })
}

/// Truncation options for an oracle build.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FockOptions {
    /// Per-mode dimension; default from [`default_cutoff`].
    pub cutoff: Option<usize>,
    /// Total excitation cap; default from [`default_cap`].
    pub cap: Option<usize>,
    /// Skip the leakage budget check.
    pub allow_leakage: bool,
}

/// `max(20, ⌈10(1 + N_S + N_B)⌉)`.
pub fn default_cutoff(n_s: f64, n_b: f64) -> usize {
    ((10.0 * (1.0 + n_s + n_b)).ceil() as usize).max(20)
}

/// `2(d − 1)` for the four-mode schemes, otherwise no cap beyond the cutoff.
pub fn default_cap(scheme: Scheme, cutoff: usize) -> Option<usize> {
    (build_modes(scheme).len() >= 4).then(|| 2 * (cutoff - 1))
}

/// Geometric weights `N^k/(N+1)^{k+1}`, `k < kmax`, stopping once the
/// remaining tail is below [`THERMAL_TAIL`].
fn thermal_weights(n: f64, kmax: usize) -> Vec<f64> {
    if n == 0.0 {
        return vec![1.0];
    }
    let r = n / (n + 1.0);
    let mut w = Vec::new();
    let mut p = 1.0 / (n + 1.0);
    let mut tail = 1.0;
    while w.len() < kmax {
        w.push(p);
        tail -= p;
        if tail < THERMAL_TAIL {
            break;
        }
        p *= r;
    }
    w
}

fn hamiltonian(modes: &[ModeLabel], terms: Vec<Term>) -> Result<QuadraticHamiltonian> {
    QuadraticHamiltonian::new(modes.to_vec(), terms)
}

fn passive(a: ModeLabel, b: ModeLabel) -> Term {
    Term::Passive {
        a,
        b,
        c: Complex64::i(),
    }
}

fn squeezer(a: ModeLabel, b: ModeLabel) -> Term {
    Term::Active {
        a,
        b,
        c: Complex64::i(),
    }
}

fn build_modes(scheme: Scheme) -> &'static [ModeLabel] {
    match scheme {
        Scheme::CoherentThermal => &[S, E],
        Scheme::Tmss | Scheme::EnvSaturating => &[S, I, E],
        Scheme::Model1 | Scheme::Model2 => &[S, I1, I2, E],
    }
}

/// Charges `+1` on signal and environment, `−1` on idlers; `None` when the
/// scheme breaks the symmetry.
fn charges(scheme: Scheme) -> Option<&'static [i32]> {
    match scheme {
        Scheme::Tmss => Some(&[1, -1, 1]),
        Scheme::Model1 | Scheme::Model2 => Some(&[1, -1, -1, 1]),
        Scheme::CoherentThermal | Scheme::EnvSaturating => None,
    }
}

/// Pure trajectories before the partial trace.
pub fn trajectories(p: &SchemeParams, cutoff: usize, cap: Option<usize>) -> Result<Vec<Trajectory>> {
    p.validate()?;
    let modes = build_modes(p.scheme);
    let space_for = |k: usize| -> Result<FockSpace> {
        match charges(p.scheme) {
            Some(c) => FockSpace::sector(modes, cutoff, cap, c, k as i32),
            None => FockSpace::new(modes, cutoff, cap),
        }
    };
    let g = p.squeezing();
    let theta = p.kappa.sqrt().acos();
    let n_b = if p.scheme == Scheme::CoherentThermal && p.neglect_shadow && p.kappa < 1.0 {
        p.n_b / (1.0 - p.kappa)
    } else {
        p.n_b
    };
    let wb = thermal_weights(n_b, cutoff - 1);
    let ws = if p.scheme == Scheme::CoherentThermal {
        thermal_weights(p.n_th, cutoff - 1)
    } else {
        vec![1.0]
    };
    let seeds: Vec<(usize, usize)> =
        (0..ws.len()).flat_map(|n| (0..wb.len()).map(move |k| (n, k))).collect();
    let tables: Vec<GateTable> = match p.scheme {
        Scheme::CoherentThermal => vec![GateTable::new(passive(S, E), theta)?],
        Scheme::Tmss => vec![GateTable::new(squeezer(S, I), g)?, GateTable::new(passive(S, E), theta)?],
        Scheme::EnvSaturating => vec![
            GateTable::new(squeezer(S, I), g)?,
            GateTable::new(passive(S, E), theta)?,
            GateTable::new(passive(I, E), std::f64::consts::FRAC_PI_4)?,
        ],
        Scheme::Model1 => vec![
            GateTable::new(squeezer(S, I1), g)?,
            GateTable::new(passive(S, E), theta)?,
            GateTable::new(squeezer(S, I2), g)?,
        ],
        // the three couplings do not commute: evolved under the full Hamiltonian
        Scheme::Model2 => Vec::new(),
    };
    // one space per charge sector, shared by the trajectories in it
    let shared_space = charges(p.scheme).is_none();
    let sector = |k: usize| if shared_space { 0 } else { k };
    let mut spaces: HashMap<usize, (Arc<FockSpace>, Vec<BlockGate>)> = HashMap::new();
    for &(_, k) in &seeds {
        if let std::collections::hash_map::Entry::Vacant(e) = spaces.entry(sector(k)) {
            let space = space_for(sector(k))?;
            let gates = tables.iter().map(|t| t.gate(&space)).collect::<Result<_>>()?;
            e.insert((Arc::new(space), gates));
        }
    }
    seeds
        .par_iter()
        .map(|&(n, k)| {
            let (space, gates) = &spaces[&sector(k)];
            let mut ket = seed(p, space, n, k)?;
            for gate in gates {
                ket = gate.apply(&ket);
            }
            if p.scheme == Scheme::Model2 {
                let h = space.hamiltonian(&QuadraticHamiltonian::induced_coherence(p.kappa)?)?;
                ket = space.evolve(&h, g, &ket);
            }
            Ok(Trajectory {
                weight: ws[n] * wb[k],
                space: space.clone(),
                ket,
            })
        })
        .collect()
}

/// Input state with `n` thermal signal photons and `k` thermal background
/// photons, before the scheme's couplings act.
fn seed(p: &SchemeParams, space: &FockSpace, n: usize, k: usize) -> Result<Ket> {
    let k16 = k as u16;
    match p.scheme {
        Scheme::CoherentThermal => {
            let z = p.displacement();
            let alpha = Complex64::new(z[0], z[1]) * std::f64::consts::FRAC_1_SQRT_2;
            // D(α) = e^{−i·(i(αa† − ᾱa))}
            let h = space.displacement_generator(S, alpha)?.scaled(Complex64::i());
            Ok(space.evolve(&h, 1.0, &space.ket(&[n as u16, k16])?))
        }
        Scheme::Tmss | Scheme::EnvSaturating => space.ket(&[0, 0, k16]),
        Scheme::Model1 => space.ket(&[0, 0, 0, k16]),
        Scheme::Model2 => {
            // k photons in the mode created by √κ a†_E − i√(1−κ) a†_S
            let x = Complex64::new(p.kappa.sqrt(), 0.0);
            let y = Complex64::new(0.0, -(1.0 - p.kappa).sqrt());
            let mut v = vec![ZERO; space.dim()];
            for j in 0..=k {
                let occ = [(k - j) as u16, 0, 0, j as u16];
                if let Some(i) = space.position(&occ) {
                    v[i] = binomial(k, j).sqrt() * x.powu(j as u32) * y.powu((k - j) as u32);
                }
            }
            Ok(v)
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Escalation step for a cutoff that failed the leakage budget.
fn grow(cutoff: usize) -> usize {
    (3 * cutoff).div_ceil(2)
}

/// Oracle density matrix of a scheme's receiver register. With no explicit
/// cutoff the default grows by half (up to three times) until the leakage
/// budget is met.
pub fn fock_build(p: &SchemeParams, opts: FockOptions) -> Result<FockDensityMatrix> {
    p.validate()?;
    let mut cutoff = opts.cutoff.unwrap_or_else(|| default_cutoff(p.n_s, p.n_b));
    let retries = if opts.cutoff.is_some() { 0 } else { 3 };
    for attempt in 0..=retries {
        let cap = opts.cap.or_else(|| default_cap(p.scheme, cutoff));
        let traj = trajectories(p, cutoff, cap)?;
        let rho = reduce(&traj, p.scheme.output_modes())?;
        if opts.allow_leakage || rho.leakage <= LEAKAGE_BUDGET {
            return Ok(rho);
        }
        if attempt == retries {
            return Err(Error::CutoffTooSmall {
                leakage: rho.leakage,
                suggested: grow(cutoff),
            });
        }
        cutoff = grow(cutoff);
    }
    unreachable!("loop returns on its last attempt")
}

/// `|n⟩` on `S` through the pure-loss channel of transmissivity κ. The
/// cutoff `n + 2` leaves the boundary empty, so the build has no leakage.
pub fn number_state_loss(n: usize, kappa: f64) -> Result<FockDensityMatrix> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::domain("kappa", kappa, "0 <= kappa <= 1"));
    }
    let space = Arc::new(FockSpace::new(&[S, E], n + 2, None)?);
    let ket = GateTable::new(passive(S, E), kappa.sqrt().acos())?
        .gate(&space)?
        .apply(&space.ket(&[n as u16, 0])?);
    reduce(
        &[Trajectory {
            weight: 1.0,
            space,
            ket,
        }],
        &[S],
    )
}

/// `4 Var(a†_S a_E + h.c.)` in the purification
/// `Σ_k √q_k |ψ_TMSS⟩_{IS} |k⟩_{E₁} |k⟩_{E₂}`. The `E₂` register is carried
/// implicitly: its states are orthonormal and untouched by the operator, so
/// the expectation splits into a `q_k`-weighted sum over `k`.
pub fn env_variance_check(g: f64, n_b: f64, cutoff: usize) -> Result<f64> {
    if !(g >= 0.0) {
        return Err(Error::domain("g", g, "g >= 0"));
    }
    if !(n_b >= 0.0) {
        return Err(Error::domain("N_B", n_b, "N_B >= 0"));
    }
    let space = FockSpace::new(&[I, S, E1], cutoff, None)?;
    let modes = space.modes().to_vec();
    let tms = GateTable::new(squeezer(S, I), g)?.gate(&space)?;
    let a_op = space.hamiltonian(&hamiltonian(
        &modes,
        vec![Term::Passive { a: S, b: E1, c: ONE }],
    )?)?;
    let wb = thermal_weights(n_b, cutoff - 1);
    let mut second = 0.0;
    let mut first = ZERO;
    let mut leakage = (1.0 - wb.iter().sum::<f64>()).max(0.0);
    for (k, &q) in wb.iter().enumerate() {
        let v = tms.apply(&space.ket(&[0, 0, k as u16])?);
        leakage += q * space.boundary_population(&v);
        let av = a_op.apply(&v);
        second += q * norm(&av).powi(2);
        first += v.iter().zip(&av).map(|(x, y)| x.conj() * y).sum::<Complex64>() * q;
    }
    if leakage > LEAKAGE_BUDGET {
        return Err(Error::CutoffTooSmall {
            leakage,
            suggested: grow(cutoff),
        });
    }
    Ok(4.0 * (second - first.norm_sqr()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_respects_cap() {
        let s = FockSpace::new(&[S, I, E], 5, Some(4)).unwrap();
        assert!(s.basis().iter().all(|b| b.iter().map(|&n| n as usize).sum::<usize>() <= 4));
        // compositions of at most 4 into 3 parts: C(7,3) = 35
        assert_eq!(s.dim(), 35);
    }

    #[test]
    fn sector_basis() {
        let s = FockSpace::sector(&[S, I, E], 6, None, &[1, -1, 1], 2).unwrap();
        assert!(s.basis().iter().all(|b| b[0] as i32 - b[1] as i32 + b[2] as i32 == 2));
        assert!(s.position(&[2, 0, 0]).is_some());
        assert!(s.position(&[1, 0, 0]).is_none());
    }

    #[test]
    fn thermal_weights_are_geometric() {
        let w = thermal_weights(0.5, 29);
        assert_eq!(w.len(), 21);
        for (n, &p) in w.iter().enumerate() {
            let expect = (1.0 / 1.5) * (0.5f64 / 1.5).powi(n as i32);
            assert!((p - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn squeezer_schmidt_coefficients() {
        let g = 0.4;
        let space = FockSpace::new(&[S, I], 40, None).unwrap();
        let h = space
            .hamiltonian(&hamiltonian(&[S, I], vec![squeezer(S, I)]).unwrap())
            .unwrap();
        let v = space.evolve(&h, g, &space.ket(&[0, 0]).unwrap());
        for n in 0..6u16 {
            let amp = v[space.position(&[n, n]).unwrap()];
            let expect = g.tanh().powi(n as i32) / g.cosh();
            assert!((amp.norm() - expect).abs() < 1e-12, "{n} {amp}");
        }
    }

    #[test]
    fn bessel_values() {
        let j = bessel_sequence(1.0);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_sequence(50.0);
        assert!((j[0] - 0.055_812_327_669_251_86).abs() < 1e-14);
    }

    #[test]
    fn one_photon_beamsplitter() {
        let space = FockSpace::sector(&[S, E], 3, None, &[1, 1], 1).unwrap();
        let h = space
            .hamiltonian(&hamiltonian(&[S, E], vec![passive(S, E)]).unwrap())
            .unwrap();
        let v = space.evolve(&h, 0.3, &space.ket(&[1, 0]).unwrap());
        let a = v[space.position(&[1, 0]).unwrap()];
        let b = v[space.position(&[0, 1]).unwrap()];
        assert!((a.norm() - 0.3f64.cos()).abs() < 1e-14);
        assert!((b.norm() - 0.3f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn evolution_is_unitary() {
        let space = FockSpace::new(&[S, E], 12, None).unwrap();
        let h = space
            .hamiltonian(&hamiltonian(&[S, E], vec![passive(S, E)]).unwrap())
            .unwrap();
        let w = space.evolve(&h, 0.7, &space.ket(&[3, 1]).unwrap());
        assert!((norm(&w) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn number_state_loss_is_binomial() {
        let rho = number_state_loss(3, 0.4).unwrap();
        for m in 0..=3u16 {
            let i = rho.space().position(&[m]).unwrap();
            let p = binomial(3, m as usize) * 0.4f64.powi(m as i32) * 0.6f64.powi(3 - m as i32);
            assert!((rho.matrix()[(i, i)].re - p).abs() < 1e-14);
        }
        assert_eq!(rho.leakage(), 0.0);
    }

    #[test]
    fn block_gates_match_chebyshev() {
        let modes = [S, I, E];
        let space = FockSpace::new(&modes, 9, Some(14)).unwrap();
        let c = Complex64::from_polar(0.8, 0.9);
        let v: Ket = (0..space.dim())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        for term in [Term::Passive { a: S, b: E, c }, Term::Active { a: S, b: I, c }] {
            let exact = space.two_mode_gate(term, 0.6).unwrap().apply(&v);
            let h = space.hamiltonian(&hamiltonian(&modes, vec![term]).unwrap()).unwrap();
            let cheb = space.evolve(&h, 0.6, &v);
            let err = exact.iter().zip(&cheb).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{term:?}: {err}");
        }
    }

    #[test]
    fn block_split_matches_dense_fidelity() {
        let p = SchemeParams::new(Scheme::Tmss, 0.2, 0.1, 0.3).unwrap();
        let opts = FockOptions {
            cutoff: Some(12),
            cap: None,
            allow_leakage: true,
        };
        let a = fock_build(&p, opts).unwrap();
        let b = fock_build(&p.at_kappa(0.6), opts).unwrap();
        assert!(blocks(&[&a.matrix, &b.matrix]).len() > 1);
        let sa = apply_fn(a.matrix.clone(), f64::sqrt);
        let m = &sa * &b.matrix * &sa;
        let root: f64 = hermitian_eigh(m).0.iter().map(|&l| l.max(0.0).sqrt()).sum();
        let diff = (fock_fidelity(&a, &b).unwrap() - root * root).abs();
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn variance_identity_small_cases() {
        assert!(env_variance_check(0.0, 0.0, 10).unwrap().abs() < 1e-14);
        let g = crate::channels::squeezing_for_energy(1.0);
        assert!((env_variance_check(g, 0.0, 60).unwrap() - 4.0).abs() < 1e-8);
    }
}
