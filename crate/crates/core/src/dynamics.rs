//! Irreversible Hamiltonian vector fields `J∇h + E(·,s,h)`, fixed-step RK4
//! trajectories and thermodynamic diagnostics along them.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brackets::{ci_eval, e_eval, poisson_eval, ScalarField, SkewField, TensorField};
use crate::error::{Error, Result};
use crate::sampling;
use crate::tensor::contract_last_three;
use crate::tol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noninteraction {
    /// `{s,h} = 0`.
    Weak,
    /// `J∇s = 0`: the entropy is a Casimir.
    Strong,
}

/// Probe points used to validate noninteraction around an initial state.
pub const NONINTERACTION_PROBES: usize = 100;

#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub n: usize,
    pub poisson: SkewField,
    pub eps: TensorField,
    pub s: ScalarField,
    pub h: ScalarField,
    pub noninteraction: Noninteraction,
}

impl SystemSpec {
    /// Checks dimensions and registers `eps` as conservative-irreversible.
    pub fn new(
        poisson: SkewField,
        eps: TensorField,
        s: ScalarField,
        h: ScalarField,
        noninteraction: Noninteraction,
    ) -> Result<Self> {
        let n = poisson.n();
        for found in [eps.n(), s.n(), h.n()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        let eps = eps.registered(tol::DEFAULT_TOL)?;
        Ok(Self {
            n,
            poisson,
            eps,
            s,
            h,
            noninteraction,
        })
    }

    /// `{s,h}(x)` for weak, `‖J(x)∇s(x)‖∞` for strong.
    pub fn noninteraction_residual(&self, x: &[f64]) -> f64 {
        match self.noninteraction {
            Noninteraction::Weak => poisson_eval(&self.poisson, &self.s, &self.h, x)
                .expect("dimensions checked at construction")
                .abs(),
            Noninteraction::Strong => self
                .poisson
                .apply(x, &self.s.gradient(x))
                .iter()
                .fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// The declared condition at `x0` and at [`NONINTERACTION_PROBES`] points
    /// in the cube of half-width `0.1 · max(1, ‖x0‖∞)` around it.
    pub fn validate_noninteraction(&self, x0: &[f64], tol: f64) -> Result<()> {
        if x0.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x0.len(),
            });
        }
        let radius = 0.1 * x0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let probes = sampling::points_around(x0, radius, NONINTERACTION_PROBES, 0x5EED_0000 ^ self.n as u64);
        for x in std::iter::once(x0.to_vec()).chain(probes) {
            let r = self.noninteraction_residual(&x);
            if r > tol {
                return Err(Error::Noninteraction {
                    t: 0.0,
                    detail: format!("{:?} condition residual {r:.3e} at {x:?}", self.noninteraction),
                });
            }
        }
        Ok(())
    }

    pub fn entropy_rate(&self, x: &[f64]) -> f64 {
        ci_eval(&self.eps, &self.s, &self.s, &self.h, x)
    }

    pub fn sh_bracket(&self, x: &[f64]) -> f64 {
        poisson_eval(&self.poisson, &self.s, &self.h, x).expect("dimensions checked at construction")
    }
}

/// `X_i = Σ_{jkl} ε_ijkl ∂_j s ∂_k h ∂_l h`.
pub fn ci_field(eps: &TensorField, s: &ScalarField, h: &ScalarField, x: &[f64]) -> Vec<f64> {
    let dh = h.gradient(x);
    contract_last_three(&eps.at(x), &s.gradient(x), &dh, &dh)
}

/// `J(x)∇h(x) + X(x)`.
pub fn irr_ham_field(spec: &SystemSpec, x: &[f64]) -> Vec<f64> {
    let ham = spec.poisson.apply(x, &spec.h.gradient(x));
    let ci = ci_field(&spec.eps, &spec.s, &spec.h, x);
    ham.iter().zip(ci).map(|(a, b)| a + b).collect()
}

/// `[f,g]_BE = E(f,s,g)`.
pub fn be_bracket(spec: &SystemSpec, f: &ScalarField, g: &ScalarField, x: &[f64]) -> f64 {
    ci_eval(&spec.eps, f, &spec.s, g, x)
}

/// `[f,g]_M = E(f,g,h)`.
pub fn metriplectic_bracket(spec: &SystemSpec, f: &ScalarField, g: &ScalarField, x: &[f64]) -> f64 {
    e_eval(&spec.eps, f, g, &spec.h, &spec.h, x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub step: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl IntegratorConfig {
    pub fn rk4(step: f64, t_end: f64, record_every: usize) -> Result<Self> {
        let cfg = Self {
            method: Method::Rk4,
            step,
            t_end,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidConfig(format!("step must be positive, got {}", self.step)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidConfig(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.step > self.t_end {
            return Err(Error::InvalidConfig(format!(
                "step {} exceeds t_end {}",
                self.step, self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of RK4 steps; the last one is shortened to land on `t_end`.
    pub fn steps(&self) -> usize {
        let k = (self.t_end / self.step).round();
        if (k * self.step - self.t_end).abs() <= 1e-9 * self.t_end {
            k as usize
        } else {
            (self.t_end / self.step).ceil() as usize
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub h_values: Vec<f64>,
    pub s_values: Vec<f64>,
    pub sh_bracket_values: Vec<f64>,
    pub entropy_rate_values: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    fn record(&mut self, spec: &SystemSpec, t: f64, x: &[f64]) {
        self.times.push(t);
        self.states.push(x.to_vec());
        self.h_values.push(spec.h.value(x));
        self.s_values.push(spec.s.value(x));
        self.sh_bracket_values.push(spec.sh_bracket(x));
        self.entropy_rate_values.push(spec.entropy_rate(x));
    }

    /// Columns `t, x_1..x_n, h, s, entropy_rate, sh_bracket`, 17 significant digits.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let n = self.dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x_{i}")));
        header.extend(["h", "s", "entropy_rate", "sh_bracket"].map(String::from));
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.times[k]];
            row.extend(&self.states[k]);
            row.extend([
                self.h_values[k],
                self.s_values[k],
                self.entropy_rate_values[k],
                self.sh_bracket_values[k],
            ]);
            w.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        let n = cols.len().checked_sub(5).ok_or_else(|| {
            Error::Trajectory(format!("expected at least 5 columns, found {}", cols.len()))
        })?;
        let mut expected = vec!["t".to_string()];
        expected.extend((1..=n).map(|i| format!("x_{i}")));
        expected.extend(["h", "s", "entropy_rate", "sh_bracket"].map(String::from));
        if cols != expected {
            return Err(Error::Trajectory(format!("unexpected header {cols:?}")));
        }
        let mut traj = Trajectory::default();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Trajectory(format!("row {}: {e}", line + 1)))?;
            traj.times.push(vals[0]);
            traj.states.push(vals[1..=n].to_vec());
            traj.h_values.push(vals[n + 1]);
            traj.s_values.push(vals[n + 2]);
            traj.entropy_rate_values.push(vals[n + 3]);
            traj.sh_bracket_values.push(vals[n + 4]);
        }
        if traj.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Trajectory("times are not strictly increasing".into()));
        }
        Ok(traj)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn axpy(x: &[f64], c: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + c * b).collect()
}

fn rk4_step(spec: &SystemSpec, x: &[f64], dt: f64) -> Vec<f64> {
    let k1 = irr_ham_field(spec, x);
    let k2 = irr_ham_field(spec, &axpy(x, dt / 2.0, &k1));
    let k3 = irr_ham_field(spec, &axpy(x, dt / 2.0, &k2));
    let k4 = irr_ham_field(spec, &axpy(x, dt, &k3));
    (0..x.len())
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Classical fixed-step RK4 on [`irr_ham_field`]. Records step 0, every
/// `record_every`-th step and the final step. The declared noninteraction is
/// validated around `x0` first and re-checked at every recorded state.
pub fn integrate(spec: &SystemSpec, x0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    spec.validate_noninteraction(x0, tol::NONINTERACTION_TOL)?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { last_valid_time: 0.0 });
    }
    let steps = cfg.steps();
    let mut traj = Trajectory::default();
    traj.record(spec, 0.0, x0);
    let mut x = x0.to_vec();
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps { cfg.t_end } else { k as f64 * cfg.step };
        let next = rk4_step(spec, &x, t_next - t);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { last_valid_time: t });
        }
        x = next;
        t = t_next;
        if k % cfg.record_every == 0 || k == steps {
            let r = spec.noninteraction_residual(&x);
            if r > tol::NONINTERACTION_TOL {
                return Err(Error::Noninteraction {
                    t,
                    detail: format!("{:?} condition residual {r:.3e} at {x:?}", spec.noninteraction),
                });
            }
            traj.record(spec, t, &x);
        }
    }
    Ok(traj)
}

/// Independent trajectories in parallel; results keep the order of `x0s`.
pub fn integrate_many(spec: &SystemSpec, x0s: &[Vec<f64>], cfg: &IntegratorConfig) -> Vec<Result<Trajectory>> {
    x0s.par_iter().map(|x0| integrate(spec, x0, cfg)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub samples: usize,
    pub t_end: f64,
    pub max_h_drift: f64,
    /// Smallest `s(t_{k+1}) − s(t_k)` between recorded states; 0 with one sample.
    pub min_delta_s: f64,
    pub min_entropy_rate: f64,
    pub max_abs_sh_bracket: f64,
}

pub fn diagnostics(traj: &Trajectory) -> Result<DiagnosticsReport> {
    if traj.is_empty() {
        return Err(Error::Trajectory("empty trajectory".into()));
    }
    let h0 = traj.h_values[0];
    let fold_max = |v: &[f64], f: &dyn Fn(f64) -> f64| v.iter().fold(0.0f64, |m, &x| m.max(f(x)));
    let min_delta_s = traj
        .s_values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
        .unwrap_or(0.0);
    Ok(DiagnosticsReport {
        samples: traj.len(),
        t_end: *traj.times.last().expect("nonempty"),
        max_h_drift: fold_max(&traj.h_values, &|h| (h - h0).abs()),
        min_delta_s,
        min_entropy_rate: traj.entropy_rate_values.iter().copied().fold(f64::INFINITY, f64::min),
        max_abs_sh_bracket: fold_max(&traj.sh_bracket_values, &f64::abs),
    })
}
