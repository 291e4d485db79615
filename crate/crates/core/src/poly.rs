//! Sparse multivariate polynomials with exact gradients.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;

use crate::error::{Error, Result};

/// `Σ c_α x^α` over `n` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::monomial(n, vec![0; n], c)
    }

    /// `x_i` (0-based).
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self::monomial(n, e, 1.0)
    }

    pub fn monomial(n: usize, exponents: Vec<u32>, c: f64) -> Self {
        assert_eq!(exponents.len(), n, "exponent vector length");
        let mut p = Self::zero(n);
        p.push(exponents, c);
        p
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: e.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::NonFinite);
            }
            p.push(e, c);
        }
        Ok(p)
    }

    /// Keys are comma-separated exponents, e.g. `"2,0,1"` for `x_1² x_3`.
    pub fn from_exponent_map(n: usize, map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut terms = Vec::with_capacity(map.len());
        for (key, &c) in map {
            let e = key
                .split(',')
                .map(|s| s.trim().parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::SystemSpec(format!("bad exponent key {key:?}")))?;
            terms.push((e, c));
        }
        Self::from_terms(n, terms)
    }

    pub fn to_exponent_map(&self) -> BTreeMap<String, f64> {
        self.terms
            .iter()
            .map(|(e, &c)| {
                let key: Vec<String> = e.iter().map(|v| v.to_string()).collect();
                (key.join(","), c)
            })
            .collect()
    }

    fn push(&mut self, e: Vec<u32>, c: f64) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(e).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, &c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                out.push(d, c * e[i] as f64);
            }
        }
        out
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for (e, &c) in &self.terms {
            for i in 0..self.n {
                if e[i] == 0 {
                    continue;
                }
                let mut term = c * e[i] as f64;
                for (j, (&k, &xj)) in e.iter().zip(x).enumerate() {
                    let k = if j == i { k - 1 } else { k };
                    term *= xj.powi(k as i32);
                }
                g[i] += term;
            }
        }
        g
    }

    pub fn scale(&self, c: f64) -> Poly {
        let mut out = Poly::zero(self.n);
        for (e, &v) in &self.terms {
            out.push(e.clone(), v * c);
        }
        out
    }

    /// Random polynomial of total degree at most `max_degree` with about
    /// `terms` monomials and coefficients uniform in `[-1, 1)`.
    pub fn random(n: usize, max_degree: u32, terms: usize, rng: &mut impl Rng) -> Poly {
        let mut p = Poly::zero(n);
        for _ in 0..terms {
            let deg = rng.random_range(0..=max_degree);
            let mut e = vec![0u32; n];
            for _ in 0..deg {
                e[rng.random_range(0..n)] += 1;
            }
            p.push(e, rng.random_range(-1.0..1.0));
        }
        p
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.n, rhs.n);
        let mut out = self.clone();
        for (e, &c) in &rhs.terms {
            out.push(e.clone(), c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(-1.0)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.n, rhs.n);
        let mut out = Poly::zero(self.n);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &rhs.terms {
                let e = a.iter().zip(b).map(|(x, y)| x + y).collect();
                out.push(e, ca * cb);
            }
        }
        out
    }
}
