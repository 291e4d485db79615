//! Dense order-4 tensors on ℝⁿ, the S₄ index action, the three defining
//! symmetry conditions of V₃ and the orthogonal projection onto V₃.
//!
//! Indices are 0-based in the API and 1-based in every report and file
//! format. Storage is row-major in `(i, j, k, l)` order, and the dimension is
//! capped at [`MAX_DIM`] (`8⁴ = 4096` entries).

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;
use crate::tol;

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

pub type Index4 = [usize; 4];

/// Dense order-4 tensor with `n⁴` finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorJson", into = "TensorJson")]
pub struct Tensor4 {
    n: usize,
    entries: Vec<f64>,
}

/// On-disk tensor layout: `{"n", "entries", "index_base"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorJson {
    pub n: usize,
    pub entries: Vec<f64>,
    #[serde(default = "one_based")]
    pub index_base: u32,
}

fn one_based() -> u32 {
    1
}

impl TryFrom<TensorJson> for Tensor4 {
    type Error = Error;

    fn try_from(value: TensorJson) -> Result<Self> {
        if value.index_base > 1 {
            return Err(Error::IndexBase(value.index_base));
        }
        Tensor4::from_entries(value.n, value.entries)
    }
}

impl From<Tensor4> for TensorJson {
    fn from(t: Tensor4) -> Self {
        TensorJson {
            n: t.n,
            entries: t.entries,
            index_base: 1,
        }
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        Err(Error::UnsupportedDimension(n))
    } else {
        Ok(())
    }
}

#[inline]
fn offset(n: usize, [i, j, k, l]: Index4) -> usize {
    ((i * n + j) * n + k) * n + l
}

/// All index quadruples in row-major order.
pub fn indices(n: usize) -> impl Iterator<Item = Index4> {
    (0..n).flat_map(move |i| {
        (0..n).flat_map(move |j| (0..n).flat_map(move |k| (0..n).map(move |l| [i, j, k, l])))
    })
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            n,
            entries: vec![0.0; n.pow(4)],
        })
    }

    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if entries.len() != n.pow(4) {
            return Err(Error::EntryCount {
                expected: n.pow(4),
                found: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(Index4) -> f64) -> Result<Self> {
        check_dim(n)?;
        let entries = indices(n).map(&mut f).collect();
        Self::from_entries(n, entries)
    }

    /// Tensor with the given 0-based entries set; everything else zero.
    pub fn from_sparse(n: usize, entries: &[(Index4, f64)]) -> Result<Self> {
        let mut t = Self::zeros(n)?;
        for &(idx, v) in entries {
            if idx.iter().any(|&i| i >= n) {
                return Err(Error::MalformedTuple(format!("index {idx:?} out of range for n = {n}")));
            }
            t.entries[offset(n, idx)] = v;
        }
        if t.entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    #[inline]
    pub fn get(&self, idx: Index4) -> f64 {
        self.entries[offset(self.n, idx)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    /// Frobenius distance. Panics if dimensions differ.
    pub fn distance(&self, other: &Tensor4) -> f64 {
        assert_eq!(self.n, other.n, "tensor dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Frobenius inner product. Panics if dimensions differ.
    pub fn dot(&self, other: &Tensor4) -> f64 {
        assert_eq!(self.n, other.n, "tensor dimension mismatch");
        self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum()
    }

    /// `self + c * other`. Panics if dimensions differ.
    pub fn add_scaled(&self, c: f64, other: &Tensor4) -> Tensor4 {
        assert_eq!(self.n, other.n, "tensor dimension mismatch");
        Tensor4 {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    /// Linear combination `Σ cᵢ Tᵢ` of tensors of dimension `n`.
    pub fn linear_combination<'a>(
        n: usize,
        terms: impl IntoIterator<Item = (f64, &'a Tensor4)>,
    ) -> Result<Tensor4> {
        let mut acc = Tensor4::zeros(n)?;
        for (c, t) in terms {
            if t.n != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: t.n,
                });
            }
            for (a, b) in acc.entries.iter_mut().zip(&t.entries) {
                *a += c * b;
            }
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Add for &Tensor4 {
    type Output = Tensor4;
    fn add(self, rhs: &Tensor4) -> Tensor4 {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &Tensor4 {
    type Output = Tensor4;
    fn sub(self, rhs: &Tensor4) -> Tensor4 {
        self.add_scaled(-1.0, rhs)
    }
}

impl Mul<&Tensor4> for f64 {
    type Output = Tensor4;
    fn mul(self, rhs: &Tensor4) -> Tensor4 {
        Tensor4 {
            n: rhs.n,
            entries: rhs.entries.iter().map(|v| self * v).collect(),
        }
    }
}

impl Neg for &Tensor4 {
    type Output = Tensor4;
    fn neg(self) -> Tensor4 {
        -1.0 * self
    }
}

// ---------------------------------------------------------------------------
// S₄ action

/// Permutation of the four tensor slots, stored 0-based as `m ↦ perm[m]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Perm4([usize; 4]);

impl Perm4 {
    pub const IDENTITY: Perm4 = Perm4([0, 1, 2, 3]);

    /// From 0-based images.
    pub fn new(images: [usize; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &m in &images {
            if m > 3 || seen[m] {
                return Err(Error::InvalidPermutation(images));
            }
            seen[m] = true;
        }
        Ok(Perm4(images))
    }

    /// From 1-based images, e.g. `[2, 1, 3, 4]` for the transposition (12).
    pub fn from_one_based(images: [usize; 4]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::InvalidPermutation(images));
        }
        Self::new(images.map(|m| m - 1)).map_err(|_| Error::InvalidPermutation(images))
    }

    pub fn images(&self) -> [usize; 4] {
        self.0
    }

    /// All 24 permutations in lexicographic order of their images.
    pub fn all() -> Vec<Perm4> {
        let mut out = Vec::with_capacity(24);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        if let Ok(p) = Perm4::new([a, b, c, d]) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }

    /// `self ∘ other`, i.e. `m ↦ self(other(m))`.
    pub fn compose(&self, other: &Perm4) -> Perm4 {
        Perm4(other.0.map(|m| self.0[m]))
    }

    /// `(π·α)_m = α_{π(m)}`.
    #[inline]
    pub fn act(&self, alpha: Index4) -> Index4 {
        self.0.map(|m| alpha[m])
    }
}

/// `R_α = T_{π·α}`.
///
/// This is a right action: `permute(&permute(t, σ), τ) == permute(t, &τ.compose(σ))`.
pub fn permute(t: &Tensor4, perm: &Perm4) -> Tensor4 {
    let n = t.n;
    Tensor4 {
        n,
        entries: indices(n).map(|alpha| t.get(perm.act(alpha))).collect(),
    }
}

// ---------------------------------------------------------------------------
// Symmetry conditions

/// The conditions cutting out V₃ and the cone S.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `e_{ijkl} = e_{jikl}`
    Pair12,
    /// `e_{ijkl} = e_{ijlk}`
    Pair34,
    /// `e_{ijkl} + e_{kjli} + e_{ljik} = 0`
    Cyclic,
    /// `M(y)_{ij} = Σ e_{ijkl} y_k y_l` positive semidefinite
    Psd,
}

impl Condition {
    pub fn name(&self) -> &'static str {
        match self {
            Condition::Pair12 => "pair12",
            Condition::Pair34 => "pair34",
            Condition::Cyclic => "cyclic",
            Condition::Psd => "psd",
        }
    }
}

/// Largest violation of one linear condition, with the (1-based) quadruple where it occurs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResidual {
    pub residual: f64,
    pub worst_index: Index4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pair12: bool,
    pub pair34: bool,
    pub cyclic: bool,
    pub psd: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub n: usize,
    pub tol: f64,
    pub pair12: ConditionResidual,
    pub pair34: ConditionResidual,
    pub cyclic: ConditionResidual,
    /// Smallest eigenvalue of `M(y)` over the deterministic direction sample.
    pub psd_min_eig: f64,
    /// Unit direction attaining `psd_min_eig`.
    pub psd_direction: Vec<f64>,
    pub verdict: Verdict,
}

impl SymmetryReport {
    pub fn passes(&self) -> bool {
        let v = &self.verdict;
        v.pair12 && v.pair34 && v.cyclic && v.psd
    }

    /// Whether the three linear conditions hold (membership in V₃).
    pub fn in_v3(&self) -> bool {
        let v = &self.verdict;
        v.pair12 && v.pair34 && v.cyclic
    }

    pub fn linear_residual(&self) -> f64 {
        self.pair12
            .residual
            .max(self.pair34.residual)
            .max(self.cyclic.residual)
    }

    /// First failing condition in the order pair12, pair34, cyclic, psd.
    pub fn first_failure(&self) -> Option<Condition> {
        let v = &self.verdict;
        [
            (v.pair12, Condition::Pair12),
            (v.pair34, Condition::Pair34),
            (v.cyclic, Condition::Cyclic),
            (v.psd, Condition::Psd),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, c)| c)
    }
}

fn max_residual(t: &Tensor4, f: impl Fn(Index4) -> f64) -> ConditionResidual {
    let mut best = ConditionResidual {
        residual: 0.0,
        worst_index: [1, 1, 1, 1],
    };
    for idx in indices(t.n) {
        let r = f(idx).abs();
        if r > best.residual {
            best.residual = r;
            best.worst_index = idx.map(|i| i + 1);
        }
    }
    best
}

pub fn pair12_residual(t: &Tensor4) -> ConditionResidual {
    max_residual(t, |[i, j, k, l]| t.get([i, j, k, l]) - t.get([j, i, k, l]))
}

pub fn pair34_residual(t: &Tensor4) -> ConditionResidual {
    max_residual(t, |[i, j, k, l]| t.get([i, j, k, l]) - t.get([i, j, l, k]))
}

pub fn cyclic_residual(t: &Tensor4) -> ConditionResidual {
    max_residual(t, |[i, j, k, l]| {
        t.get([i, j, k, l]) + t.get([k, j, l, i]) + t.get([l, j, i, k])
    })
}

/// Largest of the three linear-condition residuals.
pub fn v3_residual(t: &Tensor4) -> f64 {
    pair12_residual(t)
        .residual
        .max(pair34_residual(t).residual)
        .max(cyclic_residual(t).residual)
}

/// Deterministic direction sample: `e_i`, normalized `e_i ± e_j`, then
/// [`tol::PSD_RANDOM_DIRECTIONS`] seeded unit vectors.
pub fn psd_directions(n: usize) -> &'static [Vec<f64>] {
    static CACHE: [OnceLock<Vec<Vec<f64>>>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
    assert!((1..=MAX_DIM).contains(&n), "unsupported dimension {n}");
    CACHE[n].get_or_init(|| {
        let mut dirs = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            dirs.push(e);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            for j in (i + 1)..n {
                for sign in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = h;
                    e[j] = sign * h;
                    dirs.push(e);
                }
            }
        }
        let mut rng = sampling::rng(tol::PSD_SEED ^ n as u64);
        for _ in 0..tol::PSD_RANDOM_DIRECTIONS {
            dirs.push(sampling::unit_vec(&mut rng, n));
        }
        dirs
    })
}

/// `M(y)_{ij} = Σ_{k,l} e_{ijkl} y_k y_l`, symmetrized.
pub fn quadratic_form_matrix(t: &Tensor4, y: &[f64]) -> DMatrix<f64> {
    let n = t.n;
    let raw = DMatrix::from_fn(n, n, |i, j| {
        y.iter()
            .enumerate()
            .map(|(k, yk)| {
                let base = offset(n, [i, j, k, 0]);
                let row: f64 = t.entries[base..base + n].iter().zip(y).map(|(e, yl)| e * yl).sum();
                row * yk
            })
            .sum::<f64>()
    });
    (&raw + raw.transpose()) * 0.5
}

/// Smallest eigenvalue of `M(y)` over the direction sample, and the attaining direction.
pub fn psd_min_eigenvalue(t: &Tensor4) -> (f64, Vec<f64>) {
    let mut best = (f64::INFINITY, Vec::new());
    for y in psd_directions(t.n) {
        let m = quadratic_form_matrix(t, y);
        let eig = SymmetricEigen::new(m);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < best.0 {
            best = (min, y.clone());
        }
    }
    best
}

pub fn check_symmetries(t: &Tensor4, tol: f64) -> SymmetryReport {
    let pair12 = pair12_residual(t);
    let pair34 = pair34_residual(t);
    let cyclic = cyclic_residual(t);
    let (psd_min_eig, psd_direction) = psd_min_eigenvalue(t);
    let verdict = Verdict {
        pair12: pair12.residual <= tol,
        pair34: pair34.residual <= tol,
        cyclic: cyclic.residual <= tol,
        psd: psd_min_eig >= -tol,
    };
    SymmetryReport {
        n: t.n,
        tol,
        pair12,
        pair34,
        cyclic,
        psd_min_eig,
        psd_direction,
        verdict,
    }
}

// ---------------------------------------------------------------------------
// Projection onto V₃

/// The constraints only couple entries whose index multisets agree, so the
/// constraint matrix is block diagonal over S₄-orbits of index quadruples.
struct OrbitBlock {
    offsets: Vec<usize>,
    /// Orthonormal nullspace basis of the block, `offsets.len() × rank`.
    null_basis: DMatrix<f64>,
}

struct V3Projector {
    blocks: Vec<OrbitBlock>,
}

fn orbit(multiset: Index4) -> Vec<Index4> {
    let mut members: Vec<Index4> = Perm4::all().iter().map(|p| p.act(multiset)).collect();
    members.sort_unstable();
    members.dedup();
    members
}

impl V3Projector {
    fn build(n: usize) -> Self {
        let mut raw = Vec::new();
        let mut sigma_max: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    for l in k..n {
                        let members = orbit([i, j, k, l]);
                        let local = |idx: Index4| members.binary_search(&idx).expect("orbit is closed");
                        let m = members.len();
                        let mut c = DMatrix::<f64>::zeros(3 * m, m);
                        for (r, &[a, b, cc, d]) in members.iter().enumerate() {
                            c[(3 * r, local([a, b, cc, d]))] += 1.0;
                            c[(3 * r, local([b, a, cc, d]))] -= 1.0;
                            c[(3 * r + 1, local([a, b, cc, d]))] += 1.0;
                            c[(3 * r + 1, local([a, b, d, cc]))] -= 1.0;
                            c[(3 * r + 2, local([a, b, cc, d]))] += 1.0;
                            c[(3 * r + 2, local([cc, b, d, a]))] += 1.0;
                            c[(3 * r + 2, local([d, b, a, cc]))] += 1.0;
                        }
                        let svd = c.svd(false, true);
                        sigma_max = sigma_max.max(svd.singular_values.max());
                        let offsets = members.iter().map(|&idx| offset(n, idx)).collect();
                        raw.push((offsets, svd));
                    }
                }
            }
        }
        let cutoff = tol::SVD_CUTOFF * sigma_max;
        let blocks = raw
            .into_iter()
            .map(|(offsets, svd)| {
                let v_t = svd.v_t.expect("right singular vectors requested");
                let null_rows: Vec<usize> = (0..svd.singular_values.len())
                    .filter(|&r| svd.singular_values[r] <= cutoff)
                    .collect();
                let m = v_t.ncols();
                let null_basis =
                    DMatrix::from_fn(m, null_rows.len(), |row, col| v_t[(null_rows[col], row)]);
                OrbitBlock { offsets, null_basis }
            })
            .collect();
        V3Projector { blocks }
    }

    fn get(n: usize) -> &'static V3Projector {
        static CACHE: [OnceLock<V3Projector>; MAX_DIM + 1] = [const { OnceLock::new() }; MAX_DIM + 1];
        CACHE[n].get_or_init(|| V3Projector::build(n))
    }

    fn rank(&self) -> usize {
        self.blocks.iter().map(|b| b.null_basis.ncols()).sum()
    }
}

/// Orthogonal (Frobenius) projection onto V₃.
pub fn project_v3(t: &Tensor4) -> Tensor4 {
    let proj = V3Projector::get(t.n);
    let mut out = vec![0.0; t.entries.len()];
    for block in &proj.blocks {
        if block.null_basis.ncols() == 0 {
            continue;
        }
        let v = DVector::from_iterator(block.offsets.len(), block.offsets.iter().map(|&o| t.entries[o]));
        let p = &block.null_basis * (block.null_basis.transpose() * v);
        for (&o, val) in block.offsets.iter().zip(p.iter()) {
            out[o] = *val;
        }
    }
    Tensor4 {
        n: t.n,
        entries: out,
    }
}

/// Rank of the V₃ projector, i.e. the dimension of its range.
pub fn projector_rank(n: usize) -> Result<usize> {
    check_dim(n)?;
    Ok(V3Projector::get(n).rank())
}

// ---------------------------------------------------------------------------
// Evaluation

/// `Σ T_{ijkl} a_i b_j c_k d_l`.
pub fn eval_tensor(t: &Tensor4, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<f64> {
    let n = t.n;
    for v in [a, b, c, d] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    Ok(eval_unchecked(t, a, b, c, d))
}

pub(crate) fn eval_unchecked(t: &Tensor4, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    a.iter()
        .enumerate()
        .filter(|(_, ai)| **ai != 0.0)
        .map(|(i, ai)| slot_sum(t, i, b, c, d) * ai)
        .sum()
}

/// `Σ_{j,k,l} T_{ijkl} b_j c_k d_l` for fixed `i`.
fn slot_sum(t: &Tensor4, i: usize, b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    let n = t.n;
    let mut si = 0.0;
    for (j, bj) in b.iter().enumerate() {
        let mut sj = 0.0;
        for (k, ck) in c.iter().enumerate() {
            let base = offset(n, [i, j, k, 0]);
            let sk: f64 = t.entries[base..base + n].iter().zip(d).map(|(e, dl)| e * dl).sum();
            sj += sk * ck;
        }
        si += sj * bj;
    }
    si
}

/// Contraction of slots 2–4: `X_i = Σ_{j,k,l} T_{ijkl} b_j c_k d_l`.
pub(crate) fn contract_last_three(t: &Tensor4, b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    (0..t.n).map(|i| slot_sum(t, i, b, c, d)).collect()
}
