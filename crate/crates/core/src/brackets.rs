//! Pointwise evaluation of almost Poisson brackets, conservative-irreversible
//! functions and metriplectic 4-brackets over scalar fields on ℝⁿ.
//!
//! A bracket is evaluated at a point, so every evaluator takes the point
//! explicitly. Fields are cheap to clone (`Arc` inside) and safe to share
//! across threads.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::sampling;
use crate::simple::{simple_tensor, SkewMatrix, SkewPolicy};
use crate::tensor::{self, eval_unchecked, Tensor4};
use crate::tol;

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Number of probe points used when a field is registered.
pub const REGISTRATION_PROBES: usize = 20;

/// Fixed probe points in `[-1, 1]^n` used at registration.
pub fn registration_probes(n: usize) -> Vec<Vec<f64>> {
    sampling::unit_cube_points(n, REGISTRATION_PROBES, 0xB1A5_0000 ^ n as u64)
}

fn check_point(n: usize, x: &[f64]) {
    assert_eq!(x.len(), n, "point has dimension {} but the field lives on ℝ^{n}", x.len());
}

/// Central differences with step `FD_STEP · max(1, |x_i|)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = tol::FD_STEP * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Smooth function `ℝⁿ → ℝ` with an optional analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    n: usize,
    value: ValueFn,
    gradient: Option<GradFn>,
    poly: Option<Poly>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("n", &self.n)
            .field("analytic_gradient", &self.gradient.is_some())
            .field("poly", &self.poly)
            .finish()
    }
}

impl ScalarField {
    /// Registers a field. A supplied gradient is compared against central
    /// differences on the registration probes and rejected when the
    /// relative disagreement exceeds [`tol::GRADIENT_CHECK`].
    pub fn new(
        n: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: Option<GradFn>,
    ) -> Result<Self> {
        let field = Self {
            n,
            value: Arc::new(value),
            gradient,
            poly: None,
        };
        field.validate_gradient(&registration_probes(n))?;
        Ok(field)
    }

    pub fn from_poly(p: Poly) -> Self {
        let (pv, pg) = (p.clone(), p.clone());
        Self {
            n: p.n(),
            value: Arc::new(move |x| pv.value(x)),
            gradient: Some(Arc::new(move |x| pg.gradient(x))),
            poly: Some(p),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_poly(Poly::constant(n, c))
    }

    /// `x_i` (0-based).
    pub fn coordinate(n: usize, i: usize) -> Self {
        Self::from_poly(Poly::var(n, i))
    }

    /// `½ Σ w_i x_i²`.
    pub fn weighted_square_norm(weights: &[f64]) -> Self {
        let n = weights.len();
        let terms = weights.iter().enumerate().map(|(i, &w)| {
            let mut e = vec![0; n];
            e[i] = 2;
            (e, 0.5 * w)
        });
        Self::from_poly(Poly::from_terms(n, terms).expect("exponent lengths match"))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn poly(&self) -> Option<&Poly> {
        self.poly.as_ref()
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        check_point(self.n, x);
        (self.value)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        check_point(self.n, x);
        match &self.gradient {
            Some(g) => g(x),
            None => fd_gradient(&*self.value, x),
        }
    }

    pub fn validate_gradient(&self, probes: &[Vec<f64>]) -> Result<()> {
        let Some(g) = &self.gradient else {
            return Ok(());
        };
        for x in probes {
            let analytic = g(x);
            let fd = fd_gradient(&*self.value, x);
            if analytic.len() != self.n {
                return Err(Error::FieldValidation(format!(
                    "gradient has length {}, expected {}",
                    analytic.len(),
                    self.n
                )));
            }
            let scale = fd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let err = analytic.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if err > tol::GRADIENT_CHECK * scale {
                return Err(Error::FieldValidation(format!(
                    "analytic gradient disagrees with finite differences by {err:.3e} at {x:?}"
                )));
            }
        }
        Ok(())
    }

    fn combine(
        &self,
        other: &ScalarField,
        poly_op: impl Fn(&Poly, &Poly) -> Poly,
        value_op: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad_op: impl Fn(f64, &[f64], f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> ScalarField {
        assert_eq!(self.n, other.n, "fields on different dimensions");
        if let (Some(p), Some(q)) = (&self.poly, &other.poly) {
            return ScalarField::from_poly(poly_op(p, q));
        }
        let (a, b) = (self.clone(), other.clone());
        let (ga, gb) = (self.clone(), other.clone());
        ScalarField {
            n: self.n,
            value: Arc::new(move |x| value_op(a.value(x), b.value(x))),
            gradient: Some(Arc::new(move |x| {
                grad_op(ga.value(x), &ga.gradient(x), gb.value(x), &gb.gradient(x))
            })),
            poly: None,
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.combine(
            other,
            |p, q| p + q,
            |a, b| a + b,
            |_, ga, _, gb| ga.iter().zip(gb).map(|(x, y)| x + y).collect(),
        )
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.combine(
            other,
            |p, q| p - q,
            |a, b| a - b,
            |_, ga, _, gb| ga.iter().zip(gb).map(|(x, y)| x - y).collect(),
        )
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.combine(
            other,
            |p, q| p * q,
            |a, b| a * b,
            |a, ga, b, gb| ga.iter().zip(gb).map(|(x, y)| b * x + a * y).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.mul(&ScalarField::constant(self.n, c))
    }
}

type SkewFn = Arc<dyn Fn(&[f64]) -> SkewMatrix + Send + Sync>;

/// Point-dependent skew matrix `J(x)` defining `{f,g}(x) = ∇f(x)ᵀ J(x) ∇g(x)`.
#[derive(Clone)]
pub struct SkewField {
    n: usize,
    eval: SkewFn,
}

impl fmt::Debug for SkewField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkewField").field("n", &self.n).finish_non_exhaustive()
    }
}

impl SkewField {
    pub fn constant(j: SkewMatrix) -> Self {
        let n = j.n();
        Self {
            n,
            eval: Arc::new(move |_| j.clone()),
        }
    }

    /// `J(x) = [[0, −x₃, x₂], [x₃, 0, −x₁], [−x₂, x₁, 0]]`.
    pub fn rigid_body() -> Self {
        Self {
            n: 3,
            eval: Arc::new(|x| {
                let rows = vec![
                    vec![0.0, -x[2], x[1]],
                    vec![x[2], 0.0, -x[0]],
                    vec![-x[1], x[0], 0.0],
                ];
                SkewMatrix::from_rows(&rows, SkewPolicy::Antisymmetrize).expect("3 × 3")
            }),
        }
    }

    /// Polynomial entries; `P + Pᵀ` must vanish identically.
    pub fn matrix_poly(entries: Vec<Vec<Poly>>) -> Result<Self> {
        let n = entries.len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, p) in row.iter().enumerate() {
                if p.n() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: p.n(),
                    });
                }
                let sym = p + &entries[j][i];
                if !sym.is_zero() {
                    let residual = sym.terms().fold(0.0f64, |m, (_, c)| m.max(c.abs()));
                    return Err(Error::NotSkew { residual });
                }
            }
        }
        Ok(Self {
            n,
            eval: Arc::new(move |x| {
                let rows: Vec<Vec<f64>> = entries
                    .iter()
                    .map(|row| row.iter().map(|p| p.value(x)).collect())
                    .collect();
                SkewMatrix::from_rows(&rows, SkewPolicy::Antisymmetrize).expect("square")
            }),
        })
    }

    pub fn from_fn(
        n: usize,
        f: impl Fn(&[f64]) -> SkewMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        let field = Self { n, eval: Arc::new(f) };
        for x in registration_probes(n) {
            let j = (field.eval)(&x);
            if j.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: j.n(),
                });
            }
        }
        Ok(field)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, x: &[f64]) -> SkewMatrix {
        check_point(self.n, x);
        (self.eval)(x)
    }

    /// `J(x) v`.
    pub fn apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.at(x).apply(v)
    }

    /// `max_{i<j<k} |Σ_l J_il ∂_l J_jk + J_jl ∂_l J_ki + J_kl ∂_l J_ij|`,
    /// derivatives by central differences. Informational only.
    pub fn jacobi_residual(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let j = self.at(x);
        let mut partials = Vec::with_capacity(n);
        let mut probe = x.to_vec();
        for l in 0..n {
            let h = tol::FD_STEP * x[l].abs().max(1.0);
            probe[l] = x[l] + h;
            let up = self.at(&probe);
            probe[l] = x[l] - h;
            let down = self.at(&probe);
            probe[l] = x[l];
            partials.push((up.matrix() - down.matrix()) / (2.0 * h));
        }
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let mut s = 0.0;
                    for (l, d) in partials.iter().enumerate() {
                        s += j.get(a, l) * d[(b, c)] + j.get(b, l) * d[(c, a)] + j.get(c, l) * d[(a, b)];
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
        worst
    }
}

type TensorFn = Arc<dyn Fn(&[f64]) -> Tensor4 + Send + Sync>;

/// Point-dependent 4-tensor `ε(x)`.
#[derive(Clone)]
pub struct TensorField {
    n: usize,
    eval: TensorFn,
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField").field("n", &self.n).finish_non_exhaustive()
    }
}

impl TensorField {
    /// Unvalidated; see [`TensorField::validate_v3`] and
    /// [`TensorField::validate_conservative_irreversible`].
    pub fn from_fn(n: usize, f: impl Fn(&[f64]) -> Tensor4 + Send + Sync + 'static) -> Self {
        Self { n, eval: Arc::new(f) }
    }

    pub fn constant(t: Tensor4) -> Self {
        let n = t.n();
        Self::from_fn(n, move |_| t.clone())
    }

    pub fn zero(n: usize) -> Result<Self> {
        Ok(Self::constant(Tensor4::zeros(n)?))
    }

    /// `x ↦ simple_tensor(J(x), weight)`.
    pub fn simple(j: SkewField, weight: f64) -> Self {
        Self::from_fn(j.n(), move |x| simple_tensor(&j.at(x), weight))
    }

    pub fn sum(n: usize, terms: Vec<TensorField>) -> Result<Self> {
        if let Some(bad) = terms.iter().find(|t| t.n != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.n,
            });
        }
        let zero = Tensor4::zeros(n)?;
        Ok(Self::from_fn(n, move |x| {
            terms.iter().fold(zero.clone(), |acc, t| &acc + &t.at(x))
        }))
    }

    pub fn negated(&self) -> Self {
        let inner = self.clone();
        Self::from_fn(self.n, move |x| -&inner.at(x))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, x: &[f64]) -> Tensor4 {
        check_point(self.n, x);
        (self.eval)(x)
    }

    pub fn validate_v3(&self, probes: &[Vec<f64>], tol: f64) -> Result<()> {
        for x in probes {
            let t = self.at(x);
            if t.n() != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    found: t.n(),
                });
            }
            let residual = tensor::v3_residual(&t);
            if residual > tol {
                return Err(Error::NotInV3 { residual });
            }
        }
        Ok(())
    }

    /// V₃ and sampled S membership at every probe.
    pub fn validate_conservative_irreversible(&self, probes: &[Vec<f64>], tol: f64) -> Result<()> {
        self.validate_v3(probes, tol)?;
        for x in probes {
            let (eig, y) = tensor::psd_min_eigenvalue(&self.at(x));
            if eig < -tol {
                return Err(Error::FieldValidation(format!(
                    "M(y) has eigenvalue {eig:.3e} at x = {x:?}, y = {y:?}"
                )));
            }
        }
        Ok(())
    }

    /// [`TensorField::validate_conservative_irreversible`] on the registration probes.
    pub fn registered(self, tol: f64) -> Result<Self> {
        self.validate_conservative_irreversible(&registration_probes(self.n), tol)?;
        Ok(self)
    }
}

/// Finite sum `((f,g,h,k)) = Σ_i λ_i {f,g}_i {h,k}_i`.
#[derive(Clone, Debug)]
pub struct Metriplectic4Bracket {
    n: usize,
    components: Vec<(ScalarField, SkewField)>,
}

impl Metriplectic4Bracket {
    /// Every `λ_i` must be nonnegative on the registration probes.
    pub fn new(n: usize, components: Vec<(ScalarField, SkewField)>) -> Result<Self> {
        let probes = registration_probes(n);
        for (lambda, j) in &components {
            if lambda.n() != n || j.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: if lambda.n() != n { lambda.n() } else { j.n() },
                });
            }
            for x in &probes {
                let v = lambda.value(x);
                if v < 0.0 {
                    return Err(Error::FieldValidation(format!("λ = {v:.3e} < 0 at {x:?}")));
                }
            }
        }
        Ok(Self { n, components })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[(ScalarField, SkewField)] {
        &self.components
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `∇f(x)ᵀ J(x) ∇g(x)`.
pub fn poisson_eval(j: &SkewField, f: &ScalarField, g: &ScalarField, x: &[f64]) -> Result<f64> {
    for n in [f.n(), g.n(), x.len()] {
        if n != j.n() {
            return Err(Error::DimensionMismatch {
                expected: j.n(),
                found: n,
            });
        }
    }
    Ok(dot(&f.gradient(x), &j.apply(x, &g.gradient(x))))
}

fn bracket(j: &SkewField, f: &ScalarField, g: &ScalarField, x: &[f64]) -> f64 {
    poisson_eval(j, f, g, x).expect("dimensions checked at registration")
}

/// `ε(x)(∇f, ∇g, ∇h, ∇k)`.
pub fn e_eval(
    eps: &TensorField,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    k: &ScalarField,
    x: &[f64],
) -> f64 {
    eval_unchecked(&eps.at(x), &f.gradient(x), &g.gradient(x), &h.gradient(x), &k.gradient(x))
}

/// `E(f,g,h)(x) = ε(x)(∇f, ∇g, ∇h, ∇h)`.
pub fn ci_eval(eps: &TensorField, f: &ScalarField, g: &ScalarField, h: &ScalarField, x: &[f64]) -> f64 {
    let dh = h.gradient(x);
    eval_unchecked(&eps.at(x), &f.gradient(x), &g.gradient(x), &dh, &dh)
}

/// `e(f,g,h,k)` recovered from `E` alone: `½ (E(f,g,h+k) − E(f,g,h) − E(f,g,k))`.
pub fn e_eval_polarized(
    eps: &TensorField,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    k: &ScalarField,
    x: &[f64],
) -> f64 {
    let hk = h.add(k);
    0.5 * (ci_eval(eps, f, g, &hk, x) - ci_eval(eps, f, g, h, x) - ci_eval(eps, f, g, k, x))
}

/// `⟦f,g⟧(x) = E(f,f,g)(x)`.
pub fn sqps_eval(eps: &TensorField, f: &ScalarField, g: &ScalarField, x: &[f64]) -> f64 {
    ci_eval(eps, f, f, g, x)
}

/// `E(f,g,h)` from the SQPS: `½ (⟦f+g,h⟧ − ⟦f,h⟧ − ⟦g,h⟧)`.
pub fn polarize_sqps(eps: &TensorField, f: &ScalarField, g: &ScalarField, h: &ScalarField, x: &[f64]) -> f64 {
    let fg = f.add(g);
    0.5 * (sqps_eval(eps, &fg, h, x) - sqps_eval(eps, f, h, x) - sqps_eval(eps, g, h, x))
}

/// `e(f,g,h,k)` from the SQPS:
/// `¼ (⟦f+g,h+k⟧ + ⟦f,h⟧ + ⟦f,k⟧ + ⟦g,h⟧ + ⟦g,k⟧ − ⟦f+g,h⟧ − ⟦f+g,k⟧ − ⟦f,h+k⟧ − ⟦g,h+k⟧)`.
pub fn e_from_sqps(
    eps: &TensorField,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    k: &ScalarField,
    x: &[f64],
) -> f64 {
    let (fg, hk) = (f.add(g), h.add(k));
    let q = |a: &ScalarField, b: &ScalarField| sqps_eval(eps, a, b, x);
    0.25 * (q(&fg, &hk) + q(f, h) + q(f, k) + q(g, h) + q(g, k) - q(&fg, h) - q(&fg, k) - q(f, &hk) - q(g, &hk))
}

pub fn mp4_eval(
    b: &Metriplectic4Bracket,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    k: &ScalarField,
    x: &[f64],
) -> f64 {
    b.components
        .iter()
        .map(|(lambda, j)| lambda.value(x) * bracket(j, f, g, x) * bracket(j, h, k, x))
        .sum()
}

/// `((f,g,h,k)) + ((f,h,k,g)) + ((f,k,g,h))`. Zero when every `J_i(x)` has rank ≤ 2.
pub fn mp4_cyclic_residual(
    b: &Metriplectic4Bracket,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    k: &ScalarField,
    x: &[f64],
) -> f64 {
    mp4_eval(b, f, g, h, k, x) + mp4_eval(b, f, h, k, g, x) + mp4_eval(b, f, k, g, h, x)
}

/// Tensor field of `(f,g,h,k) ↦ ½ (((f,h,g,k)) + ((f,k,g,h)))`, i.e.
/// `Σ_i simple_tensor(J_i(x), λ_i(x)/2)`.
pub fn symmetrize_mp4(b: &Metriplectic4Bracket) -> TensorField {
    let n = b.n;
    let components = b.components.clone();
    let zero = Tensor4::zeros(n).expect("bracket dimension is valid");
    TensorField::from_fn(n, move |x| {
        components.iter().fold(zero.clone(), |acc, (lambda, j)| {
            acc.add_scaled(0.5 * lambda.value(x), &simple_tensor(&j.at(x), 1.0))
        })
    })
}

/// `½ (((f,h,g,k)) + ((f,k,g,h)))` evaluated directly on the bracket.
pub fn mp4_symmetrized_eval(
    b: &Metriplectic4Bracket,
    f: &ScalarField,
    g: &ScalarField,
    h: &ScalarField,
    k: &ScalarField,
    x: &[f64],
) -> f64 {
    0.5 * (mp4_eval(b, f, h, g, k, x) + mp4_eval(b, f, k, g, h, x))
}

/// Random polynomial field of total degree ≤ 3 with four terms.
pub fn random_poly_field(n: usize, rng: &mut sampling::SeededRng) -> ScalarField {
    ScalarField::from_poly(Poly::random(n, 3, 4, rng))
}

/// Largest residuals of the evaluation-level axioms over a probe set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub probes: usize,
    /// Leibniz rule in each of the four slots of `e`, combined.
    pub leibniz: f64,
    pub pair12: f64,
    pub pair34: f64,
    pub cyclic: f64,
    pub pair_exchange: f64,
    /// `e` against its recovery from `E` by polarization.
    pub polarization: f64,
    /// Smallest `E(s,s,h)` seen; nonnegative for conservative-irreversible fields.
    pub min_entropy_production: f64,
    /// Largest `|E(h,g,h)|`.
    pub max_abs_e_hgh: f64,
}

impl AxiomReport {
    /// Leibniz and polarization to `leibniz_tol`, symmetries and `E(h,g,h)` to
    /// `symmetry_tol`, positivity to `-positivity_tol`.
    pub fn passes(&self, leibniz_tol: f64, symmetry_tol: f64, positivity_tol: f64) -> bool {
        self.leibniz <= leibniz_tol
            && self.polarization <= leibniz_tol
            && self.pair12 <= symmetry_tol
            && self.pair34 <= symmetry_tol
            && self.cyclic <= symmetry_tol
            && self.pair_exchange <= symmetry_tol
            && self.max_abs_e_hgh <= symmetry_tol
            && self.min_entropy_production >= -positivity_tol
    }
}

type SlotFn<'a> = Box<dyn Fn(&ScalarField) -> f64 + 'a>;

/// Evaluates the axioms on `probes` fixed-seed random polynomial fields and
/// points in `[-1, 1]^n`.
pub fn axiom_suite(eps: &TensorField, probes: usize, seed: u64) -> AxiomReport {
    let n = eps.n();
    let mut rng = sampling::rng(seed);
    let mut r = AxiomReport {
        probes,
        min_entropy_production: f64::INFINITY,
        ..Default::default()
    };
    let upd = |slot: &mut f64, v: f64| *slot = slot.max(v.abs());
    for _ in 0..probes {
        let mut field = || random_poly_field(n, &mut rng);
        let (f1, f2, f, g, h, k, s) = (field(), field(), field(), field(), field(), field(), field());
        let x = sampling::uniform_vec(&mut rng, n);
        let e = |a: &ScalarField, b: &ScalarField, c: &ScalarField, d: &ScalarField| e_eval(eps, a, b, c, d, &x);

        let prod = f1.mul(&f2);
        let (v1, v2) = (f1.value(&x), f2.value(&x));
        let slots: [SlotFn; 4] = [
            Box::new(|a| e(a, &g, &h, &k)),
            Box::new(|a| e(&f, a, &h, &k)),
            Box::new(|a| e(&f, &g, a, &k)),
            Box::new(|a| e(&f, &g, &h, a)),
        ];
        for slot in &slots {
            upd(&mut r.leibniz, slot(&prod) - v1 * slot(&f2) - v2 * slot(&f1));
        }
        upd(&mut r.leibniz, ci_eval(eps, &prod, &g, &h, &x) - v1 * ci_eval(eps, &f2, &g, &h, &x) - v2 * ci_eval(eps, &f1, &g, &h, &x));

        let efghk = e(&f, &g, &h, &k);
        upd(&mut r.pair12, efghk - e(&g, &f, &h, &k));
        upd(&mut r.pair34, efghk - e(&f, &g, &k, &h));
        upd(&mut r.cyclic, efghk + e(&h, &g, &k, &f) + e(&k, &g, &f, &h));
        upd(&mut r.pair_exchange, efghk - e(&h, &k, &f, &g));
        upd(&mut r.polarization, efghk - e_eval_polarized(eps, &f, &g, &h, &k, &x));
        r.min_entropy_production = r.min_entropy_production.min(ci_eval(eps, &s, &s, &h, &x));
        upd(&mut r.max_abs_e_hgh, ci_eval(eps, &h, &g, &h, &x));
    }
    if probes == 0 {
        r.min_entropy_production = 0.0;
    }
    r
}

/// One probe of the SQPS identities: three fields, a scalar and a point.
#[derive(Clone, Debug)]
pub struct SqpsProbe {
    pub x: ScalarField,
    pub y: ScalarField,
    pub z: ScalarField,
    pub h: ScalarField,
    pub lambda: f64,
    pub point: Vec<f64>,
}

/// `count` probes from the degree-≤3 polynomial family, points in `[-1, 1]^n`,
/// `λ` uniform in `[-2, 2)`.
pub fn sqps_probes(n: usize, count: usize, seed: u64) -> Vec<SqpsProbe> {
    let mut rng = sampling::rng(seed);
    (0..count)
        .map(|_| SqpsProbe {
            x: random_poly_field(n, &mut rng),
            y: random_poly_field(n, &mut rng),
            z: random_poly_field(n, &mut rng),
            h: random_poly_field(n, &mut rng),
            lambda: 2.0 * rand::Rng::random_range(&mut rng, -1.0..1.0),
            point: sampling::uniform_vec(&mut rng, n),
        })
        .collect()
}

/// Largest residual of each SQPS identity over a probe set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SqpsReport {
    pub probes: usize,
    pub inclusion_exclusion: f64,
    pub generalized_binomial: f64,
    pub product_rule: f64,
    pub translation_invariance: f64,
    pub symmetry: f64,
    /// `½ (⟦f+g,h⟧ − ⟦f,h⟧ − ⟦g,h⟧)` against `E(f,g,h)`.
    pub polarization: f64,
    /// The four-argument SQPS formula against `e(f,g,h,k)`.
    pub four_argument: f64,
    /// Smallest `⟦f,g⟧` seen.
    pub min_value: f64,
}

impl SqpsReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.inclusion_exclusion,
            self.generalized_binomial,
            self.product_rule,
            self.translation_invariance,
            self.symmetry,
            self.polarization,
            self.four_argument,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates, with `δ = ⟦·, h⟧`:
///
/// * `δ(x+y+z) − δ(x+y) − δ(x+z) − δ(y+z) + δ(x) + δ(y) + δ(z) = 0`
/// * `δ(λx+y) = λ²δ(x) + λ(δ(x+y) − δ(x) − δ(y)) + δ(y)`
/// * `δ(xy+λz) = xyδ(x+y) + λxδ(y+z) + λyδ(x+z) + λ(λ−x−y)δ(z) + y(y−x−λ)δ(x) + x(x−y−λ)δ(y)`
/// * `⟦x+h, h⟧ = ⟦x, h⟧` and `⟦x, y⟧ = ⟦y, x⟧`
pub fn check_sqps_identities(eps: &TensorField, probes: &[SqpsProbe]) -> SqpsReport {
    let mut r = SqpsReport {
        probes: probes.len(),
        min_value: if probes.is_empty() { 0.0 } else { f64::INFINITY },
        ..Default::default()
    };
    let upd = |slot: &mut f64, v: f64| *slot = slot.max(v.abs());
    for p in probes {
        let pt = &p.point;
        let n = eps.n();
        let d = |a: &ScalarField| sqps_eval(eps, a, &p.h, pt);
        let (x, y, z, l) = (&p.x, &p.y, &p.z, p.lambda);
        let (xy, xz, yz) = (x.add(y), x.add(z), y.add(z));

        upd(&mut r.inclusion_exclusion, d(&xy.add(z)) - d(&xy) - d(&xz) - d(&yz) + d(x) + d(y) + d(z));

        let lam = ScalarField::constant(n, l);
        let lx_y = lam.mul(x).add(y);
        upd(&mut r.generalized_binomial, d(&lx_y) - (l * l * d(x) + l * (d(&xy) - d(x) - d(y)) + d(y)));

        let (xv, yv) = (x.value(pt), y.value(pt));
        let lhs = d(&x.mul(y).add(&lam.mul(z)));
        let rhs = xv * yv * d(&xy)
            + l * xv * d(&yz)
            + l * yv * d(&xz)
            + l * (l - xv - yv) * d(z)
            + yv * (yv - xv - l) * d(x)
            + xv * (xv - yv - l) * d(y);
        upd(&mut r.product_rule, lhs - rhs);

        upd(&mut r.translation_invariance, sqps_eval(eps, &x.add(&p.h), &p.h, pt) - d(x));
        let sxy = sqps_eval(eps, x, y, pt);
        upd(&mut r.symmetry, sxy - sqps_eval(eps, y, x, pt));
        r.min_value = r.min_value.min(sxy).min(d(x));

        upd(&mut r.polarization, polarize_sqps(eps, x, y, &p.h, pt) - ci_eval(eps, x, y, &p.h, pt));
        upd(&mut r.four_argument, e_from_sqps(eps, x, y, z, &p.h, pt) - e_eval(eps, x, y, z, &p.h, pt));
    }
    r
}
