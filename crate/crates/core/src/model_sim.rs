// SPDX-License-Identifier: MIT OR Apache-2.0

//! Signal functions, the noise class and AR(1) trajectory generation.
//!
//! Observations follow `y_j = S(x_j) y_{j-1} + xi_j` on the design
//! `x_j = a + (b - a) j / n`, `j = 1..n`, with a known initial value `y_0`.
//! `y[j]` stores `y_j`, so index 0 holds the initial value.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Number of terms kept in the series defining `S_2`.
pub const S2_TERMS: usize = 100_000;

/// The shape of a signal function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalKind {
    /// `S_1(x) = 0.5 cos(2 pi x)`.
    ClosedFormS1,
    /// `S_2(x) = 0.1 + sum_{j=1}^{q} cos(2 pi j x) / (j + 3)^2`.
    ClosedFormS2 {
        #[serde(default = "default_s2_terms")]
        q: usize,
    },
    /// `S(x) = sum_i beta_i phi_i(x)` over the trigonometric basis on `[a, b]`.
    Series { coefficients: Vec<f64> },
    /// Values on a uniform grid covering `[a, b]` (endpoints included),
    /// linearly interpolated.
    Tabulated { values: Vec<f64> },
}

fn default_s2_terms() -> usize {
    S2_TERMS
}

/// Serializable description of the coefficient function `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    #[serde(flatten)]
    pub kind: SignalKind,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    /// Stability margin `eps`: `sup |S| <= 1 - eps`.
    pub stability_eps: f64,
    /// Lipschitz bound `L` on `S'`.
    pub lipschitz_l: f64,
}

fn one() -> f64 {
    1.0
}

impl SignalSpec {
    pub fn s1() -> Self {
        Self { kind: SignalKind::ClosedFormS1, a: 0.0, b: 1.0, stability_eps: 0.5, lipschitz_l: 4.0 }
    }

    pub fn s2() -> Self {
        Self {
            kind: SignalKind::ClosedFormS2 { q: S2_TERMS },
            a: 0.0,
            b: 1.0,
            stability_eps: 0.6,
            lipschitz_l: 12.0,
        }
    }

    /// Finite trigonometric expansion `sum_i beta_i phi_i` on `[0, 1]`.
    pub fn series(coefficients: Vec<f64>, stability_eps: f64, lipschitz_l: f64) -> Self {
        Self { kind: SignalKind::Series { coefficients }, a: 0.0, b: 1.0, stability_eps, lipschitz_l }
    }

    /// Short identifier used in reports.
    pub fn label(&self) -> &'static str {
        match self.kind {
            SignalKind::ClosedFormS1 => "s1",
            SignalKind::ClosedFormS2 { .. } => "s2",
            SignalKind::Series { .. } => "series",
            SignalKind::Tabulated { .. } => "tabulated",
        }
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    /// Builds the evaluator. Checks parameters but not the stability invariant.
    pub fn compile(&self) -> Result<Signal> {
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(Error::Validation(format!("interval [{}, {}] is empty", self.a, self.b)));
        }
        if !(self.stability_eps > 0.0 && self.stability_eps < 1.0) {
            return Err(Error::Validation(format!("stability_eps = {} not in (0, 1)", self.stability_eps)));
        }
        if !(self.lipschitz_l > 0.0) {
            return Err(Error::Validation(format!("lipschitz_l = {} must be positive", self.lipschitz_l)));
        }
        let repr = match &self.kind {
            SignalKind::ClosedFormS1 => Repr::Trig(TrigSeries {
                constant: 0.0,
                cos: vec![0.5],
                sin: Vec::new(),
                phase: Phase::Absolute,
            }),
            SignalKind::ClosedFormS2 { q } => Repr::Trig(TrigSeries {
                constant: 0.1,
                cos: (1..=*q).map(|j| 1.0 / ((j as f64 + 3.0) * (j as f64 + 3.0))).collect(),
                sin: Vec::new(),
                phase: Phase::Absolute,
            }),
            SignalKind::Series { coefficients } => {
                if coefficients.is_empty() {
                    return Err(Error::Validation("series signal needs at least one coefficient".into()));
                }
                Repr::Trig(TrigSeries::from_basis_coefficients(coefficients, self.width()))
            }
            SignalKind::Tabulated { values } => {
                if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation("tabulated signal needs at least two finite values".into()));
                }
                Repr::Table(values.clone())
            }
        };
        Ok(Signal { spec: self.clone(), repr })
    }
}

/// Angle convention of a trigonometric series: either `2 pi f x`
/// (closed-form signals) or `2 pi f (x - a)/(b - a)` (basis expansions).
#[derive(Clone, Copy, Debug, PartialEq)]
enum Phase {
    Absolute,
    Unit,
}

/// `constant + sum_f cos[f-1] cos(2 pi f u) + sin[f-1] sin(2 pi f u)`.
#[derive(Clone, Debug)]
struct TrigSeries {
    constant: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    phase: Phase,
}

const RESYNC_EVERY: usize = 256;

impl TrigSeries {
    fn from_basis_coefficients(beta: &[f64], width: f64) -> Self {
        let freqs = beta.len() / 2;
        let mut cos = vec![0.0; freqs];
        let mut sin = vec![0.0; freqs];
        let amp = (2.0 / width).sqrt();
        let mut constant = 0.0;
        for (idx, &b) in beta.iter().enumerate() {
            let j = idx + 1;
            if j == 1 {
                constant = b / width.sqrt();
            } else if j % 2 == 0 {
                cos[j / 2 - 1] += amp * b;
            } else {
                sin[j / 2 - 1] += amp * b;
            }
        }
        Self { constant, cos, sin, phase: Phase::Unit }
    }

    fn max_freq(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    /// Direct summation at phase variable `u`; the rotation recurrence is
    /// re-seeded from `sin_cos` every few hundred terms.
    fn eval(&self, u: f64) -> f64 {
        let u = u - u.floor();
        let theta = 2.0 * PI * u;
        let (s1, c1) = theta.sin_cos();
        let mut acc = CompensatedSum::with_initial(self.constant);
        let (mut s, mut c) = (0.0_f64, 1.0_f64);
        for f in 1..=self.max_freq() {
            if f % RESYNC_EVERY == 1 {
                let (sf, cf) = (f as f64 * theta).sin_cos();
                s = sf;
                c = cf;
            } else {
                let cn = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = cn;
            }
            let a = self.cos.get(f - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(f - 1).copied().unwrap_or(0.0);
            acc.add(a * c + b * s);
        }
        acc.value()
    }

    /// Values at `u_i = i * step / m` for `i = 0..=m` where `step` is an
    /// integer frequency multiplier (and an integer offset drops out).
    /// Frequencies are folded modulo `m` and one inverse DFT of size `m`
    /// recovers every grid value of the finite sum.
    fn eval_grid_folded(&self, m: usize, step: u64) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        let mut comp = vec![Complex64::new(0.0, 0.0); m];
        for f in 1..=self.max_freq() {
            let a = self.cos.get(f - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(f - 1).copied().unwrap_or(0.0);
            let k = ((f as u64 * step) % m as u64) as usize;
            // Neumaier on each component keeps the folded sums exact to rounding.
            kahan_add(&mut buf[k].re, &mut comp[k].re, a);
            kahan_add(&mut buf[k].im, &mut comp[k].im, -b);
        }
        for (v, c) in buf.iter_mut().zip(&comp) {
            *v += *c;
        }
        let mut planner = FftPlanner::<f64>::new();
        planner.plan_fft_inverse(m).process(&mut buf);
        let mut out: Vec<f64> = buf.iter().map(|v| self.constant + v.re).collect();
        out.push(out[0]);
        out
    }
}

fn kahan_add(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

#[derive(Clone, Debug)]
enum Repr {
    Trig(TrigSeries),
    Table(Vec<f64>),
}

/// A compiled signal ready for evaluation.
#[derive(Clone, Debug)]
pub struct Signal {
    spec: SignalSpec,
    repr: Repr,
}

impl Signal {
    pub fn spec(&self) -> &SignalSpec {
        &self.spec
    }

    pub fn a(&self) -> f64 {
        self.spec.a
    }

    pub fn b(&self) -> f64 {
        self.spec.b
    }

    /// `S(x)`; errors when `x` lies outside `[a, b]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let (a, b) = (self.spec.a, self.spec.b);
        let slack = 1e-12 * (b - a);
        if !(x >= a - slack && x <= b + slack) {
            return Err(Error::Domain(format!("x = {x} outside [{a}, {b}]")));
        }
        Ok(self.eval_unchecked(x.clamp(a, b)))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        let (a, b) = (self.spec.a, self.spec.b);
        match &self.repr {
            Repr::Trig(series) => match series.phase {
                Phase::Absolute => series.eval(x),
                Phase::Unit => series.eval((x - a) / (b - a)),
            },
            Repr::Table(values) => {
                let cells = (values.len() - 1) as f64;
                let pos = ((x - a) / (b - a) * cells).clamp(0.0, cells);
                let i = (pos.floor() as usize).min(values.len() - 2);
                let w = pos - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    /// `S(a + (b - a) i / m)` for `i = 0..=m`.
    pub fn eval_uniform_grid(&self, m: usize) -> Vec<f64> {
        assert!(m >= 1, "grid needs at least one cell");
        let (a, b) = (self.spec.a, self.spec.b);
        if let Repr::Trig(series) = &self.repr {
            let step = match series.phase {
                Phase::Unit => Some(1),
                Phase::Absolute => integer_value(a).and(integer_value(b - a)).filter(|&w| w > 0),
            };
            if let Some(step) = step {
                if series.max_freq() > 64 {
                    return series.eval_grid_folded(m, step as u64);
                }
            }
        }
        (0..=m)
            .map(|i| self.eval_unchecked(a + (b - a) * i as f64 / m as f64))
            .collect()
    }

    /// `S` at the design points `x_0..x_n`.
    pub fn design_values(&self, n: usize) -> Vec<f64> {
        self.eval_uniform_grid(n)
    }

    /// Coefficients `beta_i = (S, phi_i)` in the trigonometric basis on `[a, b]`
    /// for `i = 1..=i_max`, when they are available in closed form.
    pub fn trig_coefficients(&self, i_max: usize) -> Option<Vec<f64>> {
        let Repr::Trig(series) = &self.repr else { return None };
        let width = self.spec.b - self.spec.a;
        let step = match series.phase {
            Phase::Unit => 1,
            Phase::Absolute => {
                integer_value(self.spec.a)?;
                integer_value(width).filter(|&w| w > 0)? as usize
            }
        };
        let mut beta = vec![0.0; i_max];
        if i_max >= 1 {
            beta[0] = series.constant * width.sqrt();
        }
        let amp = (width / 2.0).sqrt();
        for f in 1..=series.max_freq() {
            let j_cos = 2 * f * step;
            let j_sin = j_cos + 1;
            if j_cos > i_max {
                break;
            }
            beta[j_cos - 1] += amp * series.cos.get(f - 1).copied().unwrap_or(0.0);
            if j_sin <= i_max {
                beta[j_sin - 1] += amp * series.sin.get(f - 1).copied().unwrap_or(0.0);
            }
        }
        Some(beta)
    }

    /// Checks `sup |S| <= 1 - eps` on `10 n` dense points and, for non-tabulated
    /// kinds, the Lipschitz bound through grid difference quotients.
    pub fn validate_stability(&self, n: usize) -> Result<()> {
        let m = (10 * n).max(1000);
        let values = self.eval_uniform_grid(m);
        let bound = 1.0 - self.spec.stability_eps;
        let sup = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if sup > bound + 1e-12 {
            return Err(Error::Validation(format!(
                "signal {} is unstable: sup |S| = {sup:.6} exceeds 1 - eps = {bound:.6}",
                self.spec.label()
            )));
        }
        if !matches!(self.repr, Repr::Table(_)) {
            let h = (self.spec.b - self.spec.a) / m as f64;
            let slope = values.windows(2).fold(0.0_f64, |acc, w| acc.max(((w[1] - w[0]) / h).abs()));
            if slope > self.spec.lipschitz_l * (1.0 + 1e-9) {
                return Err(Error::Validation(format!(
                    "signal {} violates |S'| <= L: slope {slope:.6} > {}",
                    self.spec.label(),
                    self.spec.lipschitz_l
                )));
            }
        }
        Ok(())
    }
}

fn integer_value(x: f64) -> Option<i64> {
    (x.fract() == 0.0 && x.abs() < 1e15).then_some(x as i64)
}

/// `S(x)` for a signal description.
pub fn evaluate_signal(spec: &SignalSpec, x: f64) -> Result<f64> {
    spec.compile()?.eval(x)
}

/// Noise laws used for the robust-risk surrogate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
    /// Symmetric Beta(alpha, alpha) law rescaled to `[-radius, radius]`,
    /// with `alpha = (radius^2 - 1)/2` so the variance is one.
    BoundedSymmetric { radius: f64 },
}

/// Noise density from the class with moment parameter `varsigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub family: NoiseFamily,
    pub varsigma: f64,
}

impl NoiseSpec {
    pub fn gaussian() -> Self {
        Self { family: NoiseFamily::Gaussian, varsigma: 2.0 }
    }

    pub fn uniform() -> Self {
        Self { family: NoiseFamily::Uniform, varsigma: 3.0 }
    }

    pub fn bounded_symmetric(radius: f64) -> Self {
        Self { family: NoiseFamily::BoundedSymmetric { radius }, varsigma: radius * radius }
    }

    pub fn label(&self) -> String {
        match self.family {
            NoiseFamily::Gaussian => "gaussian".into(),
            NoiseFamily::Uniform => "uniform".into(),
            NoiseFamily::BoundedSymmetric { radius } => format!("bounded_symmetric({radius})"),
        }
    }

    fn beta_alpha(radius: f64) -> f64 {
        0.5 * (radius * radius - 1.0)
    }

    /// `log E |xi|^{2l}`, computed analytically.
    pub fn log_even_moment(&self, l: u32) -> f64 {
        let l_f = l as f64;
        match self.family {
            NoiseFamily::Gaussian => (1..=l).map(|i| (2.0 * i as f64 - 1.0).ln()).sum(),
            NoiseFamily::Uniform => l_f * 3.0_f64.ln() - (2.0 * l_f + 1.0).ln(),
            NoiseFamily::BoundedSymmetric { radius } => {
                let alpha = Self::beta_alpha(radius);
                2.0 * l_f * radius.ln()
                    + (0..l)
                        .map(|i| ((2 * i + 1) as f64 / (2.0 * alpha + 1.0 + 2.0 * i as f64)).ln())
                        .sum::<f64>()
            }
        }
    }

    pub fn even_moment(&self, l: u32) -> f64 {
        self.log_even_moment(l).exp()
    }

    /// Largest `log( E|xi|^{2l} / (l! varsigma^l) )` over `l = 1..=max_l`;
    /// the law belongs to the class when it is non-positive.
    pub fn moment_class_margin(&self, max_l: u32) -> f64 {
        let mut log_fact = 0.0;
        let mut worst = f64::NEG_INFINITY;
        for l in 1..=max_l {
            log_fact += (l as f64).ln();
            let v = self.log_even_moment(l) - log_fact - l as f64 * self.varsigma.ln();
            worst = worst.max(v);
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        if let NoiseFamily::BoundedSymmetric { radius } = self.family {
            if !(radius > 1.0 && radius.is_finite()) {
                return Err(Error::Validation(format!(
                    "bounded symmetric noise needs radius > 1 for unit variance, got {radius}"
                )));
            }
        }
        if !(self.varsigma >= 1.0) {
            return Err(Error::Validation(format!("varsigma = {} must be >= 1", self.varsigma)));
        }
        if self.moment_class_margin(200) > 1e-12 {
            return Err(Error::Validation(format!(
                "{} noise violates E|xi|^(2l) <= l! varsigma^l with varsigma = {}",
                self.label(),
                self.varsigma
            )));
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<NoiseSampler> {
        self.validate()?;
        Ok(match self.family {
            NoiseFamily::Gaussian => NoiseSampler::Gaussian,
            NoiseFamily::Uniform => NoiseSampler::Uniform(3.0_f64.sqrt()),
            NoiseFamily::BoundedSymmetric { radius } => {
                let alpha = Self::beta_alpha(radius);
                let beta = Beta::new(alpha, alpha)
                    .map_err(|e| Error::Validation(format!("beta law for radius {radius}: {e}")))?;
                NoiseSampler::Beta { beta, radius }
            }
        })
    }
}

/// Draws standardized innovations.
#[derive(Clone, Debug)]
pub enum NoiseSampler {
    Gaussian,
    Uniform(f64),
    Beta { beta: Beta<f64>, radius: f64 },
}

impl NoiseSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::Gaussian => rng.sample(StandardNormal),
            NoiseSampler::Uniform(half) => rng.random_range(-*half..*half),
            NoiseSampler::Beta { beta, radius } => radius * (2.0 * beta.sample(rng) - 1.0),
        }
    }
}

/// Whether innovations are drawn or forced to zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseInjection {
    #[default]
    Random,
    Zero,
}

/// Seed of replication `r` derived from a base seed.
pub fn replication_seed(base_seed: u64, r: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(r.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One simulated path `y_0..y_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub y0: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub seed: u64,
}

impl Trajectory {
    /// Runs the recursion given precomputed `S(x_j)` for `j = 0..=n`.
    pub fn simulate(
        signal_values: &[f64],
        a: f64,
        b: f64,
        y0: f64,
        sampler: &NoiseSampler,
        injection: NoiseInjection,
        seed: u64,
    ) -> Self {
        let n = signal_values.len() - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..=n).map(|j| a + (b - a) * j as f64 / n as f64).collect();
        let mut y = Vec::with_capacity(n + 1);
        y.push(y0);
        let mut prev = y0;
        for &s in &signal_values[1..] {
            let xi = match injection {
                NoiseInjection::Random => sampler.sample(&mut rng),
                NoiseInjection::Zero => 0.0,
            };
            prev = s * prev + xi;
            y.push(prev);
        }
        Self { n, a, b, y0, x, y, seed }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,x_j,y_j\n");
        for (j, (x, y)) in self.x.iter().zip(&self.y).enumerate() {
            let _ = writeln!(out, "{j},{x},{y}");
        }
        out
    }
}

/// Validates the signal and simulates `n` steps with `y_0 = 0`.
pub fn generate_trajectory(spec: &SignalSpec, noise: &NoiseSpec, n: usize, seed: u64) -> Result<Trajectory> {
    generate_trajectory_with(spec, noise, n, seed, 0.0, NoiseInjection::Random)
}

pub fn generate_trajectory_with(
    spec: &SignalSpec,
    noise: &NoiseSpec,
    n: usize,
    seed: u64,
    y0: f64,
    injection: NoiseInjection,
) -> Result<Trajectory> {
    if n < 10 {
        return Err(Error::Config(format!("n = {n} is too small, need n >= 10")));
    }
    let signal = spec.compile()?;
    signal.validate_stability(n)?;
    let sampler = noise.sampler()?;
    let values = signal.design_values(n);
    Ok(Trajectory::simulate(&values, spec.a, spec.b, y0, &sampler, injection, seed))
}
