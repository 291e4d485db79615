//! The explicit basis of V₃, its positive-semidefinite variant, coordinates
//! with respect to a basis and sampled membership in the cone S.
//!
//! Elements are indexed by strictly increasing tuples: `a` by pairs, `b` by
//! triples, `c` and `d` by quadruples, which gives
//! `dim V₃ = C(n,2) + C(n,3) + 2·C(n,4)`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{self, Condition, Index4, Tensor4};
use crate::tol;

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// `C(n,2) + C(n,3) + 2·C(n,4)`.
pub fn dim_v3(n: u64) -> u64 {
    binomial(n, 2) + binomial(n, 3) + 2 * binomial(n, 4)
}

/// Nullspace dimension of the linear V₃ conditions, `C(n,2) + 3·C(n,3) + 2·C(n,4)`.
///
/// Every multiset `{i,i,j,k}` with three distinct values carries its own
/// one-dimensional orbit, so there are three of them per triple rather
/// than one. [`dim_v3`] and [`enumerate_basis`] count only the orbit whose
/// repeated index is the largest; [`full_basis`] adds the other two.
pub fn dim_v3_full(n: u64) -> u64 {
    binomial(n, 2) + 3 * binomial(n, 3) + 2 * binomial(n, 4)
}

/// The same dimension through the closed-form polynomial
/// `½ n (n−1) (n²/6 − n/2 + 4/3) = n (n−1) (n² − 3n + 8) / 12`.
pub fn dim_v3_polynomial(n: u64) -> u64 {
    let p = n * n.saturating_sub(1) * (n * n + 8 - 3 * n);
    debug_assert_eq!(p % 12, 0);
    p / 12
}

/// Strictly increasing tuple of indices, stored 0-based and written 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IncreasingTuple(Vec<usize>);

impl IncreasingTuple {
    /// From 1-based values.
    pub fn from_one_based(values: &[usize]) -> Result<Self> {
        if values.contains(&0) {
            return Err(Error::MalformedTuple(format!("{values:?} contains 0 (indices are 1-based)")));
        }
        Self::new(values.iter().map(|v| v - 1).collect())
    }

    /// From 0-based values.
    pub fn new(values: Vec<usize>) -> Result<Self> {
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedTuple(format!(
                "{:?} is not strictly increasing",
                values.iter().map(|v| v + 1).collect::<Vec<_>>()
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|v| v + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All increasing `k`-tuples from `{0, …, n-1}` in lexicographic order.
    pub fn all(n: usize, k: usize) -> Vec<IncreasingTuple> {
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<IncreasingTuple>) {
            if cur.len() == k {
                out.push(IncreasingTuple(cur.clone()));
                return;
            }
            for v in start..n {
                cur.push(v);
                rec(v + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
        out
    }

    fn checked(&self, expected_len: usize, n: usize) -> Result<&[usize]> {
        if self.0.len() != expected_len {
            return Err(Error::MalformedTuple(format!(
                "expected a {expected_len}-tuple, got {:?}",
                self.one_based()
            )));
        }
        if self.0.iter().any(|&v| v >= n) {
            return Err(Error::MalformedTuple(format!(
                "{:?} has an index larger than n = {n}",
                self.one_based()
            )));
        }
        Ok(&self.0)
    }
}

impl TryFrom<Vec<usize>> for IncreasingTuple {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::from_one_based(&v)
    }
}

impl From<IncreasingTuple> for Vec<usize> {
    fn from(t: IncreasingTuple) -> Self {
        t.one_based()
    }
}

impl fmt::Display for IncreasingTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Kind of an element of the entry-table basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    A,
    /// Triple `(p,q,r)` with `r` repeated.
    B,
    /// Triple `(p,q,r)` with `p` repeated.
    B1,
    /// Triple `(p,q,r)` with `q` repeated.
    B2,
    C,
    D,
}

impl BasisKind {
    pub fn tuple_len(&self) -> usize {
        match self {
            BasisKind::A => 2,
            BasisKind::B | BasisKind::B1 | BasisKind::B2 => 3,
            BasisKind::C | BasisKind::D => 4,
        }
    }
}

/// Kind of an element of the positive-semidefinite basis: `a_A`, `e^B`, `e^C`, `ẽ^D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PsdKind {
    #[serde(rename = "a")]
    A,
    #[serde(rename = "eB")]
    EB,
    #[serde(rename = "eB1")]
    EB1,
    #[serde(rename = "eB2")]
    EB2,
    #[serde(rename = "eC")]
    EC,
    #[serde(rename = "eD")]
    ED,
}

impl PsdKind {
    pub fn tuple_len(&self) -> usize {
        match self {
            PsdKind::A => 2,
            PsdKind::EB | PsdKind::EB1 | PsdKind::EB2 => 3,
            PsdKind::EC | PsdKind::ED => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PsdKind::A => "a",
            PsdKind::EB => "eB",
            PsdKind::EB1 => "eB1",
            PsdKind::EB2 => "eB2",
            PsdKind::EC => "eC",
            PsdKind::ED => "eD",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisElement {
    pub kind: BasisKind,
    pub tuple: IncreasingTuple,
    #[serde(flatten)]
    pub tensor: Tensor4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdElement {
    pub kind: PsdKind,
    pub tuple: IncreasingTuple,
    #[serde(flatten)]
    pub tensor: Tensor4,
}

/// Entry table of one basis element, 0-based.
fn entry_table(kind: BasisKind, t: &[usize]) -> Vec<(Index4, f64)> {
    let plus = |idx: &[Index4], v: f64| idx.iter().map(|&i| (i, v)).collect::<Vec<_>>();
    match kind {
        BasisKind::A => {
            let (p, q) = (t[0], t[1]);
            let mut e = plus(&[[p, p, q, q], [q, q, p, p]], 2.0);
            e.extend(plus(&[[p, q, q, p], [p, q, p, q], [q, p, p, q], [q, p, q, p]], -1.0));
            e
        }
        BasisKind::B1 => entry_table(BasisKind::B, &[t[1], t[2], t[0]]),
        BasisKind::B2 => entry_table(BasisKind::B, &[t[0], t[2], t[1]]),
        BasisKind::B => {
            let (p, q, r) = (t[0], t[1], t[2]);
            let mut e = plus(&[[p, q, r, r], [q, p, r, r], [r, r, q, p], [r, r, p, q]], 2.0);
            e.extend(plus(
                &[
                    [r, p, r, q],
                    [r, p, q, r],
                    [r, q, r, p],
                    [r, q, p, r],
                    [q, r, r, p],
                    [q, r, p, r],
                    [p, r, r, q],
                    [p, r, q, r],
                ],
                -1.0,
            ));
            e
        }
        BasisKind::C => {
            let (p, q, r, s) = (t[0], t[1], t[2], t[3]);
            let mut e = plus(
                &[
                    [p, q, r, s],
                    [p, q, s, r],
                    [q, p, r, s],
                    [q, p, s, r],
                    [s, r, q, p],
                    [s, r, p, q],
                    [r, s, q, p],
                    [r, s, p, q],
                ],
                1.0,
            );
            e.extend(plus(
                &[
                    [s, q, p, r],
                    [s, q, r, p],
                    [q, s, p, r],
                    [q, s, r, p],
                    [p, r, s, q],
                    [p, r, q, s],
                    [r, p, s, q],
                    [r, p, q, s],
                ],
                -1.0,
            ));
            e
        }
        BasisKind::D => {
            let (p, q, r, s) = (t[0], t[1], t[2], t[3]);
            let mut e = plus(
                &[
                    [r, q, s, p],
                    [r, q, p, s],
                    [q, r, s, p],
                    [q, r, p, s],
                    [s, p, r, q],
                    [s, p, q, r],
                    [p, s, r, q],
                    [p, s, q, r],
                ],
                1.0,
            );
            e.extend(plus(
                &[
                    [s, q, p, r],
                    [s, q, r, p],
                    [q, s, p, r],
                    [q, s, r, p],
                    [r, p, q, s],
                    [r, p, s, q],
                    [p, r, q, s],
                    [p, r, s, q],
                ],
                -1.0,
            ));
            e
        }
    }
}

pub fn make_basis_element(kind: BasisKind, tuple: &IncreasingTuple, n: usize) -> Result<BasisElement> {
    let t = tuple.checked(kind.tuple_len(), n)?;
    let tensor = Tensor4::from_sparse(n, &entry_table(kind, t))?;
    Ok(BasisElement {
        kind,
        tuple: tuple.clone(),
        tensor,
    })
}

fn a_tensor(p: usize, q: usize, n: usize) -> Result<Tensor4> {
    Tensor4::from_sparse(n, &entry_table(BasisKind::A, &[p.min(q), p.max(q)]))
}

/// `a_A`, `e^B = a_(ι,λ) + a_(κ,λ) + b_B`, `e^C = a_(ι,μ) + a_(κ,λ) + c_C` and
/// `ẽ^D = a_(ι,κ) + a_(λ,μ) + d_D`. `eB1` and `eB2` are `e^B` with the
/// repeated index moved to the first or second position of the triple.
pub fn make_psd_element(kind: PsdKind, tuple: &IncreasingTuple, n: usize) -> Result<PsdElement> {
    let t = tuple.checked(kind.tuple_len(), n)?;
    let tensor = match kind {
        PsdKind::A => a_tensor(t[0], t[1], n)?,
        PsdKind::EB => {
            let b = make_basis_element(BasisKind::B, tuple, n)?.tensor;
            &(&a_tensor(t[0], t[2], n)? + &a_tensor(t[1], t[2], n)?) + &b
        }
        PsdKind::EB1 => {
            let b = make_basis_element(BasisKind::B1, tuple, n)?.tensor;
            &(&a_tensor(t[1], t[0], n)? + &a_tensor(t[2], t[0], n)?) + &b
        }
        PsdKind::EB2 => {
            let b = make_basis_element(BasisKind::B2, tuple, n)?.tensor;
            &(&a_tensor(t[0], t[1], n)? + &a_tensor(t[2], t[1], n)?) + &b
        }
        PsdKind::EC => {
            let c = make_basis_element(BasisKind::C, tuple, n)?.tensor;
            &(&a_tensor(t[0], t[3], n)? + &a_tensor(t[1], t[2], n)?) + &c
        }
        PsdKind::ED => {
            let d = make_basis_element(BasisKind::D, tuple, n)?.tensor;
            &(&a_tensor(t[0], t[1], n)? + &a_tensor(t[2], t[3], n)?) + &d
        }
    };
    Ok(PsdElement {
        kind,
        tuple: tuple.clone(),
        tensor,
    })
}

fn tuples_by_kind(n: usize) -> [(usize, Vec<IncreasingTuple>); 4] {
    [
        (0, IncreasingTuple::all(n, 2)),
        (1, IncreasingTuple::all(n, 3)),
        (2, IncreasingTuple::all(n, 4)),
        (3, IncreasingTuple::all(n, 4)),
    ]
}

/// `{a_A} ∪ {b_B} ∪ {c_C} ∪ {d_D}` in that order, tuples lexicographic.
pub fn enumerate_basis(n: usize) -> Result<Vec<BasisElement>> {
    Tensor4::zeros(n)?;
    let kinds = [BasisKind::A, BasisKind::B, BasisKind::C, BasisKind::D];
    let mut out = Vec::new();
    for (slot, tuples) in tuples_by_kind(n) {
        for t in &tuples {
            out.push(make_basis_element(kinds[slot], t, n)?);
        }
    }
    Ok(out)
}

/// `{a_A} ∪ {e^B} ∪ {e^C} ∪ {ẽ^D}` in that order, tuples lexicographic.
pub fn psd_basis(n: usize) -> Result<Vec<PsdElement>> {
    Tensor4::zeros(n)?;
    let kinds = [PsdKind::A, PsdKind::EB, PsdKind::EC, PsdKind::ED];
    let mut out = Vec::new();
    for (slot, tuples) in tuples_by_kind(n) {
        for t in &tuples {
            out.push(make_psd_element(kinds[slot], t, n)?);
        }
    }
    Ok(out)
}

/// [`enumerate_basis`] followed by the `b1` and `b2` elements of every triple;
/// its length is [`dim_v3_full`] and it spans V₃.
pub fn full_basis(n: usize) -> Result<Vec<BasisElement>> {
    let mut out = enumerate_basis(n)?;
    for kind in [BasisKind::B1, BasisKind::B2] {
        for t in IncreasingTuple::all(n, 3) {
            out.push(make_basis_element(kind, &t, n)?);
        }
    }
    Ok(out)
}

/// [`psd_basis`] followed by the `eB1` and `eB2` elements of every triple.
pub fn full_psd_basis(n: usize) -> Result<Vec<PsdElement>> {
    let mut out = psd_basis(n)?;
    for kind in [PsdKind::EB1, PsdKind::EB2] {
        for t in IncreasingTuple::all(n, 3) {
            out.push(make_psd_element(kind, &t, n)?);
        }
    }
    Ok(out)
}

fn basis_matrix(basis: &[Tensor4], n: usize) -> Result<DMatrix<f64>> {
    for b in basis {
        if b.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.n(),
            });
        }
    }
    let rows = n.pow(4);
    Ok(DMatrix::from_fn(rows, basis.len(), |r, c| basis[c].entries()[r]))
}

/// Numerical rank of the flattened tensors (cutoff relative to the largest singular value).
pub fn flattened_rank(tensors: &[Tensor4]) -> Result<usize> {
    let Some(first) = tensors.first() else {
        return Ok(0);
    };
    let m = basis_matrix(tensors, first.n())?;
    let sv = m.singular_values();
    let cutoff = tol::SVD_CUTOFF * sv.max();
    Ok(sv.iter().filter(|&&s| s > cutoff).count())
}

/// Least-squares coefficients of `t` in `basis` and the Frobenius reconstruction residual.
pub fn coordinates_with_residual(t: &Tensor4, basis: &[Tensor4], tol: f64) -> Result<(Vec<f64>, f64)> {
    let residual = tensor::v3_residual(t);
    if residual > tol {
        return Err(Error::NotInV3 { residual });
    }
    if basis.is_empty() {
        return Ok((Vec::new(), t.frobenius_norm()));
    }
    let m = basis_matrix(basis, t.n())?;
    let svd = m.clone().svd(true, true);
    let cutoff = tol::SVD_CUTOFF * svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank < basis.len() {
        return Err(Error::RankDeficient {
            rank,
            expected: basis.len(),
        });
    }
    let rhs = DVector::from_column_slice(t.entries());
    let coeffs = svd
        .solve(&rhs, cutoff)
        .expect("both singular vector sets were computed");
    let recon = (&m * &coeffs - rhs).norm();
    Ok((coeffs.iter().copied().collect(), recon))
}

/// Coefficients of `t` in `basis`; fails when `t` is not in the span.
pub fn coordinates(t: &Tensor4, basis: &[Tensor4], tol: f64) -> Result<Vec<f64>> {
    let (c, residual) = coordinates_with_residual(t, basis, tol)?;
    if residual > tol {
        return Err(Error::Reconstruction { residual, tol });
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeVerdict {
    InS,
    NotInS,
    /// Part of the format; the deterministic direction plan always decides.
    Inconclusive,
}

/// Reason a tensor is outside S.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConeWitness {
    /// `M(y)` has the eigenvalue `eigenvalue < -tol`.
    Direction { y: Vec<f64>, eigenvalue: f64 },
    /// A linear condition of V₃ fails at the 1-based `index`.
    Constraint {
        condition: Condition,
        index: Index4,
        residual: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeEvidence {
    pub constraint_residual: f64,
    pub psd_min_eig: f64,
    pub verdict: ConeVerdict,
    pub witness: Option<ConeWitness>,
}

impl ConeEvidence {
    pub fn in_s(&self) -> bool {
        self.verdict == ConeVerdict::InS
    }
}

pub fn membership_s(t: &Tensor4, tol: f64) -> ConeEvidence {
    let report = tensor::check_symmetries(t, tol);
    let constraint_residual = report.linear_residual();
    let witness = match report.first_failure() {
        None => None,
        Some(Condition::Psd) => Some(ConeWitness::Direction {
            y: report.psd_direction.clone(),
            eigenvalue: report.psd_min_eig,
        }),
        Some(condition) => {
            let r = match condition {
                Condition::Pair12 => &report.pair12,
                Condition::Pair34 => &report.pair34,
                _ => &report.cyclic,
            };
            Some(ConeWitness::Constraint {
                condition,
                index: r.worst_index,
                residual: r.residual,
            })
        }
    };
    ConeEvidence {
        constraint_residual,
        psd_min_eig: report.psd_min_eig,
        verdict: if witness.is_none() {
            ConeVerdict::InS
        } else {
            ConeVerdict::NotInS
        },
        witness,
    }
}
