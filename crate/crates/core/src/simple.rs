//! Simple tensors `λ (J_ik J_jl + J_il J_jk)` built from skew matrices,
//! decomposition of V₃ elements into simple components and the simplicity test.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{self, IncreasingTuple, PsdKind};
use crate::error::{Error, Result};
use crate::tensor::{Index4, Tensor4, MAX_DIM};
use crate::tol;

/// How [`SkewMatrix::new`] treats input that is not exactly skew.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SkewPolicy {
    /// Replace `A` by `(A − Aᵀ)/2`.
    Antisymmetrize,
    /// Fail with [`Error::NotSkew`] when `max |A + Aᵀ| > tol`.
    Reject { tol: f64 },
}

/// Real skew-symmetric `n × n` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SkewMatrix(DMatrix<f64>);

impl SkewMatrix {
    pub fn new(m: DMatrix<f64>, policy: SkewPolicy) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 || m.nrows() > MAX_DIM {
            return Err(Error::UnsupportedDimension(m.nrows()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let residual = (&m + m.transpose()).amax();
        match policy {
            SkewPolicy::Reject { tol } if residual > tol => Err(Error::NotSkew { residual }),
            SkewPolicy::Reject { .. } => {
                // exact skewness so downstream identities hold to round-off
                Ok(Self((&m - m.transpose()) * 0.5))
            }
            SkewPolicy::Antisymmetrize => Ok(Self((&m - m.transpose()) * 0.5)),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], policy: SkewPolicy) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), policy)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n), SkewPolicy::Antisymmetrize)
    }

    /// `E_pq − E_qp` (0-based).
    pub fn elementary(n: usize, p: usize, q: usize) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        if p >= n || q >= n || p == q {
            return Err(Error::MalformedTuple(format!("({}, {}) for n = {n}", p + 1, q + 1)));
        }
        m[(p, q)] = 1.0;
        m[(q, p)] = -1.0;
        Self::new(m, SkewPolicy::Antisymmetrize)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn scaled(&self, c: f64) -> SkewMatrix {
        SkewMatrix(&self.0 * c)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `aᵀ J b`.
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let jb = self.apply(b);
        a.iter().zip(jb).map(|(x, y)| x * y).sum()
    }
}

impl TryFrom<Vec<Vec<f64>>> for SkewMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows, SkewPolicy::Reject { tol: tol::DEFAULT_TOL })
    }
}

impl From<SkewMatrix> for Vec<Vec<f64>> {
    fn from(s: SkewMatrix) -> Self {
        s.rows()
    }
}

/// `λ (J_ik J_jl + J_il J_jk)`.
pub fn simple_tensor(j: &SkewMatrix, weight: f64) -> Tensor4 {
    Tensor4::from_fn(j.n(), |[a, b, c, d]| {
        weight * (j.get(a, c) * j.get(b, d) + j.get(a, d) * j.get(b, c))
    })
    .expect("skew matrices have a supported dimension")
}

/// Skew matrix whose simple tensor with weight 1 is the PSD basis element of
/// the given kind and tuple.
pub fn generator_matrix(kind: PsdKind, tuple: &IncreasingTuple, n: usize) -> Result<SkewMatrix> {
    let t = tuple.values();
    if t.len() != kind.tuple_len() || t.iter().any(|&v| v >= n) {
        return Err(Error::MalformedTuple(format!("{tuple} for {} with n = {n}", kind.name())));
    }
    let mut m = DMatrix::zeros(n, n);
    let mut put = |p: usize, q: usize, v: f64| {
        m[(p, q)] = v;
        m[(q, p)] = -v;
    };
    match kind {
        PsdKind::A => put(t[0], t[1], 1.0),
        PsdKind::EB => {
            put(t[0], t[2], 1.0);
            put(t[1], t[2], 1.0);
        }
        PsdKind::EB1 => {
            put(t[1], t[0], 1.0);
            put(t[2], t[0], 1.0);
        }
        PsdKind::EB2 => {
            put(t[0], t[1], 1.0);
            put(t[2], t[1], 1.0);
        }
        PsdKind::EC => {
            put(t[0], t[3], 1.0);
            put(t[1], t[2], 1.0);
        }
        PsdKind::ED => {
            put(t[0], t[1], 1.0);
            put(t[2], t[3], -1.0);
        }
    }
    SkewMatrix::new(m, SkewPolicy::Antisymmetrize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleComponent {
    pub weight: f64,
    pub j: SkewMatrix,
}

impl SimpleComponent {
    pub fn tensor(&self) -> Tensor4 {
        simple_tensor(&self.j, self.weight)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub components: Vec<SimpleComponent>,
    /// Frobenius norm of `T − Σ simple_tensor(J_i, λ_i)`.
    pub residual: f64,
}

/// `Σ simple_tensor(J_i, λ_i)` over the components.
pub fn recompose(n: usize, components: &[SimpleComponent]) -> Result<Tensor4> {
    let mut acc = Tensor4::zeros(n)?;
    for c in components {
        if c.j.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.j.n(),
            });
        }
        acc = &acc + &c.tensor();
    }
    Ok(acc)
}

/// Writes `t ∈ V₃` as a weighted sum of simple tensors, one per nonzero
/// coordinate in the full PSD basis.
pub fn decompose(t: &Tensor4, tol: f64) -> Result<Decomposition> {
    let n = t.n();
    let psd = basis::full_psd_basis(n)?;
    let tensors: Vec<Tensor4> = psd.iter().map(|e| e.tensor.clone()).collect();
    let coeffs = basis::coordinates(t, &tensors, tol)?;
    let mut components = Vec::new();
    for (c, el) in coeffs.into_iter().zip(&psd) {
        if c.abs() <= 1e-2 * tol {
            continue;
        }
        components.push(SimpleComponent {
            weight: c,
            j: generator_matrix(el.kind, &el.tuple, n)?,
        });
    }
    let residual = recompose(n, &components)?.distance(t);
    if residual > tol {
        return Err(Error::Reconstruction { residual, tol });
    }
    Ok(Decomposition { components, residual })
}

/// An entry of `T` that no simple tensor can produce, given the entries
/// already used to fix `J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refutation {
    /// 1-based.
    pub indices: Index4,
    pub observed: f64,
    pub implied: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Simplicity {
    Simple {
        j: SkewMatrix,
        weight: f64,
        residual: f64,
    },
    NotSimple(Refutation),
}

impl Simplicity {
    pub fn is_simple(&self) -> bool {
        matches!(self, Simplicity::Simple { .. })
    }
}

fn one_based(idx: Index4) -> Index4 {
    idx.map(|v| v + 1)
}

fn worst_mismatch(t: &Tensor4, other: &Tensor4) -> (Index4, f64, f64) {
    let (pos, _) = t
        .entries()
        .iter()
        .zip(other.entries())
        .enumerate()
        .map(|(i, (a, b))| (i, (a - b).abs()))
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let n = t.n();
    let idx = [pos / n.pow(3), (pos / n.pow(2)) % n, (pos / n) % n, pos % n];
    (idx, t.entries()[pos], other.entries()[pos])
}

/// Decides whether `t = simple_tensor(J, λ)` for some skew `J` and real `λ`.
///
/// On success `max |J_ij| = 1` and the first nonzero entry of `J` in
/// row-major order is positive; the zero tensor gives `J = 0`, `λ = 0`.
pub fn is_simple(t: &Tensor4, tol: f64) -> Simplicity {
    let n = t.n();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    // m_ab = λ J_ab²
    let m: Vec<f64> = pairs.iter().map(|&(a, b)| t.get([a, a, b, b]) / 2.0).collect();

    let Some(lead) = (0..pairs.len()).reduce(|best, k| if m[k].abs() > m[best].abs() { k } else { best }) else {
        // n = 1: only the zero tensor lives here
        return if t.max_abs() <= tol {
            Simplicity::Simple {
                j: SkewMatrix::zeros(1).expect("n = 1"),
                weight: 0.0,
                residual: t.frobenius_norm(),
            }
        } else {
            let (idx, observed, _) = worst_mismatch(t, &Tensor4::zeros(1).expect("n = 1"));
            Simplicity::NotSimple(Refutation {
                indices: one_based(idx),
                observed,
                implied: 0.0,
                reason: "nonzero entry with n = 1".into(),
            })
        };
    };

    if m[lead].abs() <= tol / 2.0 {
        if t.max_abs() <= tol {
            return Simplicity::Simple {
                j: SkewMatrix::zeros(n).expect("valid n"),
                weight: 0.0,
                residual: t.frobenius_norm(),
            };
        }
        let (idx, observed, _) = worst_mismatch(t, &Tensor4::zeros(n).expect("valid n"));
        return Simplicity::NotSimple(Refutation {
            indices: one_based(idx),
            observed,
            implied: 0.0,
            reason: "every entry T_iikk vanishes, so a simple tensor would be zero".into(),
        });
    }

    let sign = m[lead].signum();
    if let Some(k) = (0..pairs.len()).find(|&k| m[k] * sign < -tol / 2.0) {
        let (a, b) = pairs[k];
        return Simplicity::NotSimple(Refutation {
            indices: one_based([a, a, b, b]),
            observed: 2.0 * m[k],
            implied: 0.0,
            reason: format!(
                "T_iikk = 2λ J_ik² must share the sign of T at {:?}",
                one_based([pairs[lead].0, pairs[lead].0, pairs[lead].1, pairs[lead].1])
            ),
        });
    }

    let weight = m[lead];
    let mag: Vec<f64> = m.iter().map(|&v| (v / weight).max(0.0).sqrt()).collect();
    let active: Vec<bool> = m.iter().map(|v| v.abs() > tol / 2.0).collect();

    // Pairs sharing an index x: T_xxyz = 2λ J_xy J_xz.
    let pair_pos = |a: usize, b: usize| pairs.iter().position(|&p| p == (a.min(b), a.max(b))).expect("pair");
    let oriented = |x: usize, y: usize| if x < y { 1.0 } else { -1.0 };
    let mut signs: Vec<Option<f64>> = vec![None; pairs.len()];
    let mut component = vec![0usize; pairs.len()];
    let mut components = 0;
    for root in 0..pairs.len() {
        if !active[root] || signs[root].is_some() {
            continue;
        }
        signs[root] = Some(1.0);
        component[root] = components;
        components += 1;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(p) = queue.pop_front() {
            let (u, v) = pairs[p];
            for x in [u, v] {
                let y = if x == u { v } else { u };
                for z in 0..n {
                    if z == x || z == y {
                        continue;
                    }
                    let q = pair_pos(x, z);
                    if !active[q] {
                        continue;
                    }
                    let (lo, hi) = if y < z { (y, z) } else { (z, y) };
                    let idx = [x, x, lo, hi];
                    let observed = t.get(idx);
                    let product = observed / (2.0 * weight * oriented(x, y) * oriented(x, z));
                    let implied_mag = 2.0 * weight.abs() * mag[p] * mag[q];
                    if (observed.abs() - implied_mag).abs() > tol {
                        let implied = match signs[q] {
                            Some(sq) => {
                                2.0 * weight
                                    * oriented(x, y)
                                    * oriented(x, z)
                                    * signs[p].unwrap_or(1.0)
                                    * sq
                                    * mag[p]
                                    * mag[q]
                            }
                            None => implied_mag.copysign(if observed == 0.0 { weight } else { observed }),
                        };
                        return Simplicity::NotSimple(Refutation {
                            indices: one_based(idx),
                            observed,
                            implied,
                            reason: "T_iijk = 2λ J_ij J_ik is inconsistent with the magnitudes fixed by T_iijj and T_iikk"
                                .into(),
                        });
                    }
                    let sq = product.signum() * signs[p].expect("assigned before queueing");
                    match signs[q] {
                        None => {
                            signs[q] = Some(sq);
                            component[q] = component[p];
                            queue.push_back(q);
                        }
                        Some(existing) if existing != sq => {
                            let implied = 2.0
                                * weight
                                * oriented(x, y)
                                * oriented(x, z)
                                * signs[p].expect("assigned")
                                * existing
                                * mag[p]
                                * mag[q];
                            return Simplicity::NotSimple(Refutation {
                                indices: one_based(idx),
                                observed,
                                implied,
                                reason: "sign of T_iijk contradicts the signs already fixed for J".into(),
                            });
                        }
                        Some(_) => {}
                    }
                }
            }
        }
    }

    // Components that share no index have an undetermined relative sign.
    let build = |flips: usize| {
        let mut j = DMatrix::zeros(n, n);
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if let Some(s) = signs[k] {
                let comp = component[k];
                let flip = if comp > 0 && (flips >> (comp - 1)) & 1 == 1 { -1.0 } else { 1.0 };
                j[(a, b)] = s * flip * mag[k];
                j[(b, a)] = -s * flip * mag[k];
            }
        }
        SkewMatrix::new(j, SkewPolicy::Antisymmetrize).expect("valid n")
    };
    let mut best: Option<(SkewMatrix, Tensor4, f64)> = None;
    for flips in 0..(1usize << (components - 1)) {
        let j = build(flips);
        let recon = simple_tensor(&j, weight);
        let r = recon.distance(t);
        if best.as_ref().is_none_or(|b| r < b.2) {
            best = Some((j, recon, r));
        }
    }
    let (j, recon, residual) = best.expect("at least one component");
    let (idx, observed, implied) = worst_mismatch(t, &recon);
    if (observed - implied).abs() > tol {
        return Simplicity::NotSimple(Refutation {
            indices: one_based(idx),
            observed,
            implied,
            reason: "entry differs from the only simple tensor compatible with T_iijj and T_iijk".into(),
        });
    }

    // Gauge: the first nonzero entry in row-major order is positive.
    let first = j.matrix().transpose().iter().copied().find(|v| v.abs() > 0.0).unwrap_or(1.0);
    let j = if first < 0.0 { j.scaled(-1.0) } else { j };
    Simplicity::Simple { j, weight, residual }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{make_psd_element, IncreasingTuple};
    use crate::tensor::{check_symmetries, eval_tensor};

    fn tup(v: &[usize]) -> IncreasingTuple {
        IncreasingTuple::from_one_based(v).unwrap()
    }

    #[test]
    fn skew_policies() {
        let rows = vec![vec![0.0, 1.0], vec![0.0, 0.0]];
        assert!(matches!(
            SkewMatrix::from_rows(&rows, SkewPolicy::Reject { tol: 1e-12 }),
            Err(Error::NotSkew { .. })
        ));
        let s = SkewMatrix::from_rows(&rows, SkewPolicy::Antisymmetrize).unwrap();
        assert_eq!(s.rows(), vec![vec![0.0, 0.5], vec![-0.5, 0.0]]);
        assert!(SkewMatrix::from_rows(&[vec![0.0, 1.0]], SkewPolicy::Antisymmetrize).is_err());
    }

    #[test]
    fn canonical_pair_gives_a12() {
        let j = SkewMatrix::elementary(2, 0, 1).unwrap();
        let t = simple_tensor(&j, 1.0);
        assert_eq!(t, basis::enumerate_basis(2).unwrap()[0].tensor);
    }

    #[test]
    fn generators_square_to_the_psd_basis() {
        for n in 2..=6 {
            for el in crate::basis::full_psd_basis(n).unwrap() {
                let j = generator_matrix(el.kind, &el.tuple, n).unwrap();
                assert_eq!(simple_tensor(&j, 1.0), el.tensor, "{}{}", el.kind.name(), el.tuple);
            }
        }
    }

    #[test]
    fn simple_tensors_are_in_s() {
        let mut rng = crate::sampling::rng(3);
        for n in 2..=5 {
            let raw = DMatrix::from_fn(n, n, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let j = SkewMatrix::new(raw, SkewPolicy::Antisymmetrize).unwrap();
            let r = check_symmetries(&simple_tensor(&j, 0.7), 1e-10);
            assert!(r.passes(), "n = {n}: {r:?}");
        }
    }

    #[test]
    fn decompose_counterexample() {
        let a = |p: &[usize]| make_psd_element(PsdKind::A, &tup(p), 3).unwrap().tensor;
        let t = &a(&[1, 2]) + &a(&[1, 3]);
        let d = decompose(&t, 1e-10).unwrap();
        assert_eq!(d.components.len(), 2);
        assert!(d.residual < 1e-12);
        for c in &d.components {
            assert!((c.weight - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decompose_rejects_outside_v3() {
        let t = Tensor4::from_sparse(2, &[([0, 1, 0, 0], 1.0)]).unwrap();
        assert!(matches!(decompose(&t, 1e-10), Err(Error::NotInV3 { .. })));
    }

    #[test]
    fn counterexample_is_refuted_at_1123() {
        let a = |p: &[usize]| make_psd_element(PsdKind::A, &tup(p), 3).unwrap().tensor;
        let t = &a(&[1, 2]) + &a(&[1, 3]);
        match is_simple(&t, 1e-10) {
            Simplicity::NotSimple(r) => {
                assert_eq!(r.indices, [1, 1, 2, 3]);
                assert_eq!(r.observed, 0.0);
                assert!((r.implied.abs() - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert!(check_symmetries(&t, 1e-10).passes());
    }

    #[test]
    fn recovers_simple_tensor_up_to_gauge() {
        let j = SkewMatrix::from_rows(
            &[
                vec![0.0, -0.3, 0.5, 0.1],
                vec![0.3, 0.0, -0.2, 0.4],
                vec![-0.5, 0.2, 0.0, 0.7],
                vec![-0.1, -0.4, -0.7, 0.0],
            ],
            SkewPolicy::Reject { tol: 0.0 },
        )
        .unwrap();
        for w in [2.5, -1.5] {
            let t = simple_tensor(&j, w);
            match is_simple(&t, 1e-10) {
                Simplicity::Simple { j: got, weight, residual } => {
                    assert!(residual < 1e-12);
                    assert!((got.max_abs() - 1.0).abs() < 1e-12);
                    assert!(simple_tensor(&got, weight).distance(&t) < 1e-12);
                    assert!(got.get(0, 1) > 0.0);
                    assert_eq!(weight.signum(), w.signum());
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn disconnected_support_needs_relative_sign() {
        // J = E_12 - E_34 has two components {1,2} and {3,4}
        let j = generator_matrix(PsdKind::ED, &tup(&[1, 2, 3, 4]), 4).unwrap();
        let t = simple_tensor(&j, 1.0);
        match is_simple(&t, 1e-10) {
            Simplicity::Simple { j: got, .. } => assert_eq!(got, j),
            other => panic!("{other:?}"),
        }
        // a_12 + a_34 alone is not simple
        let a = |p: &[usize]| make_psd_element(PsdKind::A, &tup(p), 4).unwrap().tensor;
        assert!(!is_simple(&(&a(&[1, 2]) + &a(&[3, 4])), 1e-10).is_simple());
    }

    #[test]
    fn mixed_signs_are_refuted() {
        let a = |p: &[usize]| make_psd_element(PsdKind::A, &tup(p), 3).unwrap().tensor;
        let t = a(&[1, 2]).add_scaled(-1.0, &a(&[2, 3]));
        match is_simple(&t, 1e-10) {
            Simplicity::NotSimple(r) => assert_eq!(r.indices, [2, 2, 3, 3]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_and_n2() {
        match is_simple(&Tensor4::zeros(3).unwrap(), 1e-10) {
            Simplicity::Simple { weight, j, .. } => {
                assert_eq!(weight, 0.0);
                assert_eq!(j.max_abs(), 0.0);
            }
            other => panic!("{other:?}"),
        }
        let a12 = basis::enumerate_basis(2).unwrap()[0].tensor.clone();
        assert!(is_simple(&(-3.0 * &a12), 1e-10).is_simple());
    }

    #[test]
    fn simple_tensor_evaluates_to_twice_the_bracket_product() {
        let j = SkewMatrix::elementary(3, 0, 2).unwrap();
        let (x, y, z) = ([0.3, -1.0, 2.0], [1.0, 0.5, 0.0], [0.2, 0.2, -0.7]);
        let lhs = eval_tensor(&simple_tensor(&j, 1.5), &x, &y, &z, &z).unwrap();
        let rhs = 2.0 * 1.5 * j.bilinear(&x, &z) * j.bilinear(&y, &z);
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
