//! Phase-space symbols `a(x, ξ)` of class S⁰₀,₀, perturbing fields `F`, and
//! the perturbed symbols `a(x + δF(x), ξ)`.
//!
//! Every builtin symbol is a finite sum of separable terms
//! `c(x) · p(ξ)` where `p` is `cos(kξ)`, `sin(kξ)` or `exp(-ξ²/2σ²)`. The
//! separable form is what makes the Weyl kernel exactly representable on a
//! grid (see [`crate::quantize`]), and it also makes seminorm sampling cheap.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Highest derivative order available from the closed-form evaluators.
pub const MAX_ORDER: usize = 12;

/// Spatial coefficient functions `c(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Const { value: f64 },
    /// `amp · cos(freq · x + phase)`
    Cos { amp: f64, freq: f64, phase: f64 },
    /// `amp · exp(-(x - center)² / (2 width²))`
    Gauss { amp: f64, center: f64, width: f64 },
    Sum { parts: Vec<Coefficient> },
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Coefficient::Const { value }
    }

    pub fn cos(amp: f64, freq: f64, phase: f64) -> Self {
        Coefficient::Cos { amp, freq, phase }
    }

    pub fn sin(amp: f64, freq: f64) -> Self {
        Coefficient::Cos { amp, freq, phase: -FRAC_PI_2 }
    }

    pub fn gauss(amp: f64, center: f64, width: f64) -> Self {
        Coefficient::Gauss { amp, center, width }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Coefficient::Const { value } => *value,
            Coefficient::Cos { amp, freq, phase } => amp * (freq * x + phase).cos(),
            Coefficient::Gauss { amp, center, width } => {
                let d = (x - center) / width;
                amp * (-0.5 * d * d).exp()
            }
            Coefficient::Sum { parts } => parts.iter().map(|p| p.value(x)).sum(),
        }
    }

    /// `c ∘ u` as a jet.
    pub fn jet(&self, u: &Jet) -> Jet {
        match self {
            Coefficient::Const { value } => Jet::constant(*value, u.order()),
            Coefficient::Cos { amp, freq, phase } => u.scale(*freq).offset(*phase).cos().scale(*amp),
            Coefficient::Gauss { amp, center, width } => {
                let d = u.offset(-center).scale(1.0 / width);
                (&d * &d).scale(-0.5).exp().scale(*amp)
            }
            Coefficient::Sum { parts } => {
                let mut acc = Jet::constant(0.0, u.order());
                for p in parts {
                    acc = &acc + &p.jet(u);
                }
                acc
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Coefficient::Const { value } => Coefficient::Const { value: value * s },
            Coefficient::Cos { amp, freq, phase } => Coefficient::Cos {
                amp: amp * s,
                freq: *freq,
                phase: *phase,
            },
            Coefficient::Gauss { amp, center, width } => Coefficient::Gauss {
                amp: amp * s,
                center: *center,
                width: *width,
            },
            Coefficient::Sum { parts } => Coefficient::Sum {
                parts: parts.iter().map(|p| p.scaled(s)).collect(),
            },
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Const { value } => write!(f, "{value}"),
            Coefficient::Cos { amp, freq, phase } => write!(f, "{amp}cos({freq}x+{phase})"),
            Coefficient::Gauss { amp, center, width } => write!(f, "{amp}gauss(x;{center},{width})"),
            Coefficient::Sum { parts } => {
                let s: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                write!(f, "({})", s.join("+"))
            }
        }
    }
}

/// The ξ-dependence of a separable term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XiProfile {
    Cos { k: f64 },
    Sin { k: f64 },
    Gauss { sigma: f64 },
}

impl XiProfile {
    pub fn derivative(&self, xi: f64, beta: usize) -> f64 {
        match *self {
            XiProfile::Cos { k } => k.powi(beta as i32) * (k * xi + beta as f64 * FRAC_PI_2).cos(),
            XiProfile::Sin { k } => k.powi(beta as i32) * (k * xi + beta as f64 * FRAC_PI_2).sin(),
            XiProfile::Gauss { sigma } => {
                let u = Jet::variable(xi, beta).scale(1.0 / sigma);
                (&u * &u).scale(-0.5).exp().derivative(beta)
            }
        }
    }
}

/// Decay class of `F''`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// `F'' ≡ 0`.
    Affine,
    /// `|F''(x)| ≤ bound · (1 + x²)^{-(1+μ)/2}`.
    Mu { mu: f64, bound: f64 },
    /// No decay declared.
    None,
}

#[derive(Clone)]
pub enum FieldFamily {
    Affine { slope: f64, offset: f64 },
    Sine { amp: f64 },
    /// `(1 + x²)^{(1-μ)/2}`
    Mu { mu: f64 },
    /// User-supplied evaluator; derivatives by central differences.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for FieldFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldFamily::Affine { slope, offset } => write!(f, "Affine({slope}, {offset})"),
            FieldFamily::Sine { amp } => write!(f, "Sine({amp})"),
            FieldFamily::Mu { mu } => write!(f, "Mu({mu})"),
            FieldFamily::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// The perturbing map `F: ℝ → ℝ` with bounded derivatives of positive order.
#[derive(Debug, Clone)]
pub struct PerturbField {
    family: FieldFamily,
    decay: Decay,
}

/// Named field families available from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BuiltinField {
    /// `F(x) = x + offset`
    Affine { offset: f64 },
    /// `F(x) = slope · x + offset`
    Linear { slope: f64, offset: f64 },
    /// `F(x) ≡ value`
    Constant { value: f64 },
    /// `F(x) = amp · sin x`
    Sine { amp: f64 },
    /// `F(x) = (1 + x²)^{(1-μ)/2}`
    MuFamily { mu: f64 },
}

pub fn builtin_field(kind: BuiltinField) -> Result<PerturbField> {
    match kind {
        BuiltinField::Affine { offset } => Ok(PerturbField::affine(1.0, offset)),
        BuiltinField::Linear { slope, offset } => Ok(PerturbField::affine(slope, offset)),
        BuiltinField::Constant { value } => Ok(PerturbField::affine(0.0, value)),
        BuiltinField::Sine { amp } => Ok(PerturbField::sine(amp)),
        BuiltinField::MuFamily { mu } => PerturbField::mu_family(mu),
    }
}

impl PerturbField {
    pub fn affine(slope: f64, offset: f64) -> Self {
        Self {
            family: FieldFamily::Affine { slope, offset },
            decay: Decay::Affine,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::affine(0.0, value)
    }

    pub fn sine(amp: f64) -> Self {
        Self {
            family: FieldFamily::Sine { amp },
            decay: Decay::None,
        }
    }

    pub fn mu_family(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        // F'' = (1-μ)(1+x²)^{-(3+μ)/2} (1 - μx²), so the weighted second
        // derivative is bounded by |1-μ| max(1, μ).
        let bound = (1.0 - mu).abs() * mu.max(1.0);
        Ok(Self {
            family: FieldFamily::Mu { mu },
            decay: Decay::Mu { mu, bound },
        })
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            family: FieldFamily::Custom {
                name: name.into(),
                f: Arc::new(f),
            },
            decay: Decay::None,
        }
    }

    pub fn family(&self) -> &FieldFamily {
        &self.family
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    /// Declared decay exponent; `None` for affine or undeclared fields.
    pub fn mu(&self) -> Option<f64> {
        match self.decay {
            Decay::Mu { mu, .. } => Some(mu),
            _ => None,
        }
    }

    pub fn uses_finite_differences(&self) -> bool {
        matches!(self.family, FieldFamily::Custom { .. })
    }

    pub fn label(&self) -> String {
        match &self.family {
            FieldFamily::Affine { slope, offset } => format!("affine({slope}x+{offset})"),
            FieldFamily::Sine { amp } => format!("sine({amp})"),
            FieldFamily::Mu { mu } => format!("mu_family({mu})"),
            FieldFamily::Custom { name, .. } => format!("custom({name})"),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.family {
            FieldFamily::Affine { slope, offset } => slope * x + offset,
            FieldFamily::Sine { amp } => amp * x.sin(),
            FieldFamily::Mu { mu } => (1.0 + x * x).powf(0.5 * (1.0 - mu)),
            FieldFamily::Custom { f, .. } => f(x),
        }
    }

    pub fn derivative(&self, x: f64, k: usize) -> Result<f64> {
        Ok(self.jet(&Jet::variable(x, k))?.derivative(k))
    }

    /// `F ∘ u` as a jet.
    pub fn jet(&self, u: &Jet) -> Result<Jet> {
        Ok(match &self.family {
            FieldFamily::Affine { slope, offset } => u.scale(*slope).offset(*offset),
            FieldFamily::Sine { amp } => u.sin().scale(*amp),
            FieldFamily::Mu { mu } => (u * u).offset(1.0).powf(0.5 * (1.0 - mu)),
            FieldFamily::Custom { f, .. } => {
                if u.order() > 2 {
                    return Err(Error::OrderExceeded {
                        alpha: u.order(),
                        beta: 0,
                        max: 2,
                    });
                }
                let x = u.value();
                let outer = [
                    f(x),
                    central_difference(f.as_ref(), x),
                    0.5 * second_difference(f.as_ref(), x),
                ];
                u.compose(&outer[..=u.order()])
            }
        })
    }

    /// Largest ratio `|F''(x)| (1+x²)^{(1+μ)/2} / C_F` over the samples;
    /// values `≤ 1` mean the declared decay holds.
    pub fn decay_ratio(&self, samples: &[f64]) -> Result<f64> {
        let (mu, bound) = match self.decay {
            Decay::Mu { mu, bound } => (mu, bound),
            Decay::Affine => {
                let mut worst: f64 = 0.0;
                for &x in samples {
                    worst = worst.max(self.derivative(x, 2)?.abs());
                }
                return Ok(worst);
            }
            Decay::None => return Err(Error::InvalidParameter("field has no declared decay".into())),
        };
        let mut worst: f64 = 0.0;
        for &x in samples {
            let w = self.derivative(x, 2)?.abs() * (1.0 + x * x).powf(0.5 * (1.0 + mu));
            if bound == 0.0 {
                worst = worst.max(w);
            } else {
                worst = worst.max(w / bound);
            }
        }
        Ok(worst)
    }
}

/// Central difference with a step scaled as `ε^{1/3}`.
pub fn central_difference(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = f64::EPSILON.cbrt() * x.abs().max(1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn second_difference(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = f64::EPSILON.powf(0.25) * x.abs().max(1.0);
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// A coefficient composed with a chain of warps `x ↦ x + δF(x)`.
///
/// Warps are applied in order: the first entry acts on `x` directly.
#[derive(Debug, Clone)]
pub struct SpatialFn {
    pub coeff: Coefficient,
    pub warps: Vec<(PerturbField, f64)>,
}

impl SpatialFn {
    pub fn value(&self, x: f64) -> f64 {
        let mut u = x;
        for (field, delta) in &self.warps {
            u += delta * field.value(u);
        }
        self.coeff.value(u)
    }

    pub fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        let mut u = Jet::variable(x, order);
        for (field, delta) in &self.warps {
            u = &u + &field.jet(&u)?.scale(*delta);
        }
        Ok(self.coeff.jet(&u))
    }

    pub fn uses_finite_differences(&self) -> bool {
        self.warps.iter().any(|(f, _)| f.uses_finite_differences())
    }
}

/// One separable term `c(x) · p(ξ)` after flattening.
#[derive(Debug, Clone)]
pub struct Term {
    pub spatial: SpatialFn,
    pub xi: XiProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    /// Frequency `k` of `cos(kξ)` or `sin(kξ)`; the kernel hop length.
    pub k: f64,
    #[serde(default)]
    pub odd: bool,
    pub coeff: Coefficient,
}

#[derive(Debug, Clone)]
pub enum SymbolFamily {
    /// `Σ c_k(x) cos(kξ)` (or `sin(kξ)` when `odd`).
    TrigPolyXi(Vec<TrigTerm>),
    /// `b(x) · exp(-ξ²/2σ²)`.
    GaussXi { sigma: f64, coeff: Coefficient },
    Sum(Vec<SymbolSpec>),
    Perturbed {
        base: Box<SymbolSpec>,
        field: PerturbField,
        delta: f64,
    },
}

/// A real symbol `a(x, ξ)` with closed-form derivatives.
#[derive(Debug, Clone)]
pub struct SymbolSpec {
    family: SymbolFamily,
    dimension: usize,
}

impl SymbolSpec {
    pub fn new(family: SymbolFamily) -> Self {
        Self { family, dimension: 1 }
    }

    pub fn trig(terms: Vec<TrigTerm>) -> Self {
        Self::new(SymbolFamily::TrigPolyXi(terms))
    }

    /// `c(x) cos(kξ)`
    pub fn cos_xi(k: f64, coeff: Coefficient) -> Self {
        Self::trig(vec![TrigTerm { k, odd: false, coeff }])
    }

    /// The multiplication operator by `V(x)`.
    pub fn potential(coeff: Coefficient) -> Self {
        Self::cos_xi(0.0, coeff)
    }

    pub fn gauss_xi(sigma: f64, coeff: Coefficient) -> Self {
        Self::new(SymbolFamily::GaussXi { sigma, coeff })
    }

    pub fn sum(parts: Vec<SymbolSpec>) -> Self {
        Self::new(SymbolFamily::Sum(parts))
    }

    /// `cos ξ + cos x`, the critical almost-Mathieu model on the hop-1 lattice.
    pub fn harper() -> Self {
        Self::trig(vec![
            TrigTerm {
                k: 1.0,
                odd: false,
                coeff: Coefficient::constant(1.0),
            },
            TrigTerm {
                k: 0.0,
                odd: false,
                coeff: Coefficient::cos(1.0, 1.0, 0.0),
            },
        ])
    }

    pub fn family(&self) -> &SymbolFamily {
        &self.family
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Outermost `(F, δ)` when the symbol was produced by [`perturb`].
    pub fn perturbation(&self) -> Option<(&PerturbField, f64)> {
        match &self.family {
            SymbolFamily::Perturbed { field, delta, .. } => Some((field, *delta)),
            _ => None,
        }
    }

    /// The symbol underneath all outer perturbations.
    pub fn unperturbed(&self) -> &SymbolSpec {
        match &self.family {
            SymbolFamily::Perturbed { base, .. } => base.unperturbed(),
            _ => self,
        }
    }

    pub fn max_order(&self) -> usize {
        if self.uses_finite_differences() {
            2
        } else {
            MAX_ORDER
        }
    }

    pub fn uses_finite_differences(&self) -> bool {
        self.terms().iter().any(|t| t.spatial.uses_finite_differences())
    }

    /// Flatten into separable terms.
    pub fn terms(&self) -> Vec<Term> {
        match &self.family {
            SymbolFamily::TrigPolyXi(list) => list
                .iter()
                .map(|t| Term {
                    spatial: SpatialFn {
                        coeff: t.coeff.clone(),
                        warps: Vec::new(),
                    },
                    xi: if t.odd {
                        XiProfile::Sin { k: t.k }
                    } else {
                        XiProfile::Cos { k: t.k }
                    },
                })
                .collect(),
            SymbolFamily::GaussXi { sigma, coeff } => vec![Term {
                spatial: SpatialFn {
                    coeff: coeff.clone(),
                    warps: Vec::new(),
                },
                xi: XiProfile::Gauss { sigma: *sigma },
            }],
            SymbolFamily::Sum(parts) => parts.iter().flat_map(|p| p.terms()).collect(),
            SymbolFamily::Perturbed { base, field, delta } => base
                .terms()
                .into_iter()
                .map(|mut t| {
                    t.spatial.warps.insert(0, (field.clone(), *delta));
                    t
                })
                .collect(),
        }
    }

    /// `-a`; used to run the upper-edge pipeline on the lower edge.
    pub fn negated(&self) -> Self {
        let family = match &self.family {
            SymbolFamily::TrigPolyXi(list) => SymbolFamily::TrigPolyXi(
                list.iter()
                    .map(|t| TrigTerm {
                        k: t.k,
                        odd: t.odd,
                        coeff: t.coeff.scaled(-1.0),
                    })
                    .collect(),
            ),
            SymbolFamily::GaussXi { sigma, coeff } => SymbolFamily::GaussXi {
                sigma: *sigma,
                coeff: coeff.scaled(-1.0),
            },
            SymbolFamily::Sum(parts) => SymbolFamily::Sum(parts.iter().map(|p| p.negated()).collect()),
            SymbolFamily::Perturbed { base, field, delta } => SymbolFamily::Perturbed {
                base: Box::new(base.negated()),
                field: field.clone(),
                delta: *delta,
            },
        };
        Self {
            family,
            dimension: self.dimension,
        }
    }

    /// `a(x + z0, ξ)`, the symbol of `τ_{-z0} Op(a) τ_{z0}`.
    pub fn translated(&self, z0: f64) -> Self {
        Self::new(SymbolFamily::Perturbed {
            base: Box::new(self.clone()),
            field: PerturbField::constant(z0),
            delta: 1.0,
        })
    }

    pub fn label(&self) -> String {
        match &self.family {
            SymbolFamily::TrigPolyXi(list) => {
                let s: Vec<String> = list
                    .iter()
                    .map(|t| format!("{}*{}({}xi)", t.coeff, if t.odd { "sin" } else { "cos" }, t.k))
                    .collect();
                s.join("+")
            }
            SymbolFamily::GaussXi { sigma, coeff } => format!("{coeff}*gauss(xi;{sigma})"),
            SymbolFamily::Sum(parts) => {
                let s: Vec<String> = parts.iter().map(|p| p.label()).collect();
                s.join("+")
            }
            SymbolFamily::Perturbed { base, field, delta } => {
                format!("[{}][{}]_{}", base.label(), field.label(), delta)
            }
        }
    }
}

/// `∂_x^α ∂_ξ^β a(x, ξ)`.
pub fn eval_symbol(a: &SymbolSpec, x: f64, xi: f64, alpha: usize, beta: usize) -> Result<f64> {
    let max = a.max_order();
    if alpha > max || beta > max {
        return Err(Error::OrderExceeded { alpha, beta, max });
    }
    let mut acc = 0.0;
    for term in a.terms() {
        let dx = term.spatial.jet(x, alpha)?.derivative(alpha);
        if dx == 0.0 {
            continue;
        }
        acc += dx * term.xi.derivative(xi, beta);
    }
    Ok(acc)
}

/// `a[F]_δ(x, ξ) = a(x + δF(x), ξ)`.
pub fn perturb(a: &SymbolSpec, field: &PerturbField, delta: f64) -> Result<SymbolSpec> {
    if !(delta.abs() <= 1.0) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    Ok(SymbolSpec {
        family: SymbolFamily::Perturbed {
            base: Box::new(a.clone()),
            field: field.clone(),
            delta,
        },
        dimension: a.dimension,
    })
}

/// Square sampling window `[-R, R]²` with `points` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub half_extent: f64,
    pub points: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            half_extent: 20.0,
            points: 4001,
        }
    }
}

impl Sampling {
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let step = 2.0 * self.half_extent / (n - 1) as f64;
        (0..n).map(|i| -self.half_extent + i as f64 * step).collect()
    }
}

/// A sampled estimate of `ν_{n,m}(a)`; always a lower bound of the true
/// seminorm since the supremum is taken over finitely many points.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormEstimate {
    pub n: usize,
    pub m: usize,
    pub value: f64,
    pub sampling: Sampling,
    pub finite_difference: bool,
}

/// Sampled sup of every mixed derivative `|∂_x^α ∂_ξ^β a|`, `α ≤ n`, `β ≤ m`.
/// Entry `[α][β]` of the result.
pub fn derivative_sups(a: &SymbolSpec, n: usize, m: usize, sampling: &Sampling) -> Result<Vec<Vec<f64>>> {
    let max = a.max_order();
    if n > max || m > max {
        return Err(Error::OrderExceeded { alpha: n, beta: m, max });
    }
    let nodes = sampling.nodes();
    let terms = a.terms();
    // x_tab[t][i][α], p_tab[t][j][β]
    let x_tab: Vec<Vec<Vec<f64>>> = terms
        .iter()
        .map(|t| {
            nodes
                .par_iter()
                .map(|&x| {
                    let j = t.spatial.jet(x, n)?;
                    Ok((0..=n).map(|k| j.derivative(k)).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<_>>()?;
    let p_tab: Vec<Vec<Vec<f64>>> = terms
        .iter()
        .map(|t| {
            nodes
                .iter()
                .map(|&xi| (0..=m).map(|b| t.xi.derivative(xi, b)).collect())
                .collect()
        })
        .collect();

    let sups = (0..nodes.len())
        .into_par_iter()
        .fold(
            || vec![vec![0.0f64; m + 1]; n + 1],
            |mut acc, i| {
                for j in 0..nodes.len() {
                    for alpha in 0..=n {
                        for beta in 0..=m {
                            let mut v = 0.0;
                            for t in 0..terms.len() {
                                v += x_tab[t][i][alpha] * p_tab[t][j][beta];
                            }
                            let v = v.abs();
                            if v > acc[alpha][beta] {
                                acc[alpha][beta] = v;
                            }
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![vec![0.0f64; m + 1]; n + 1],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x = x.max(y);
                    }
                }
                a
            },
        );
    Ok(sups)
}

pub fn seminorm(a: &SymbolSpec, n: usize, m: usize, sampling: &Sampling) -> Result<SeminormEstimate> {
    let sups = derivative_sups(a, n, m, sampling)?;
    let value = sups.iter().flatten().fold(0.0f64, |acc, &v| acc.max(v));
    Ok(SeminormEstimate {
        n,
        m,
        value,
        sampling: *sampling,
        finite_difference: a.uses_finite_differences(),
    })
}

/// Measured `ν_{n,m}(a[F]_δ) / ν_{n,m}(a)`.
pub fn perturbation_ratio(
    a: &SymbolSpec,
    field: &PerturbField,
    delta: f64,
    n: usize,
    m: usize,
    sampling: &Sampling,
) -> Result<f64> {
    let base = seminorm(a, n, m, sampling)?.value;
    let pert = seminorm(&perturb(a, field, delta)?, n, m, sampling)?.value;
    Ok(if base == 0.0 { 0.0 } else { pert / base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-5;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn gauss_sin() -> SymbolSpec {
        SymbolSpec::gauss_xi(1.0, Coefficient::sin(1.0, 1.0))
    }

    #[test]
    fn constant_symbol_value() {
        let a = SymbolSpec::potential(Coefficient::constant(2.5));
        assert_eq!(eval_symbol(&a, 3.0, -1.0, 0, 0).unwrap(), 2.5);
        assert_eq!(eval_symbol(&a, 3.0, -1.0, 2, 1).unwrap(), 0.0);
    }

    #[test]
    fn cos_xi_second_derivative() {
        let a = SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0));
        assert!((eval_symbol(&a, 0.0, 0.0, 0, 2).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_sin_x_derivative_vanishes_at_half_pi() {
        let a = gauss_sin();
        let v = eval_symbol(&a, PI / 2.0, 1.0, 1, 0).unwrap();
        let oracle = fd(|x| (-0.5f64).exp() * x.sin(), PI / 2.0);
        assert!(v.abs() < 1e-15);
        assert!((v - oracle).abs() < 1e-8);
    }

    #[test]
    fn order_exceeded_is_reported() {
        let a = SymbolSpec::harper();
        assert!(matches!(
            eval_symbol(&a, 0.0, 0.0, MAX_ORDER + 1, 0),
            Err(Error::OrderExceeded { .. })
        ));
    }

    #[test]
    fn seminorm_examples() {
        let s = Sampling {
            half_extent: 20.0,
            points: 801,
        };
        let c = SymbolSpec::potential(Coefficient::constant(5.0));
        assert_eq!(seminorm(&c, 3, 3, &s).unwrap().value, 5.0);
        let cos = SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0));
        assert!((seminorm(&cos, 0, 0, &s).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seminorm_of_gauss_sin_matches_dense_oracle() {
        // Oracle: direct sampled max of |a| and |∂_x a| on [-20, 20]².
        let s = Sampling {
            half_extent: 20.0,
            points: 4001,
        };
        let mut oracle: f64 = 0.0;
        for x in s.nodes() {
            for xi in s.nodes().iter().step_by(40) {
                let g = (-0.5 * xi * xi).exp();
                oracle = oracle.max((g * x.sin()).abs()).max((g * x.cos()).abs());
            }
        }
        let est = seminorm(&gauss_sin(), 1, 0, &s).unwrap().value;
        assert!((est - 1.0).abs() < 1e-6);
        assert!((est - oracle).abs() < 1e-6);
    }

    #[test]
    fn perturb_examples() {
        let a = SymbolSpec::gauss_xi(1.0, Coefficient::cos(1.0, 1.0, 0.0));
        let f = PerturbField::constant(1.0);
        let p = perturb(&a, &f, 0.5).unwrap();
        for &(x, xi) in &[(0.0, 0.0), (1.3, -0.4), (-2.0, 2.0)] {
            let expected = (-0.5f64 * xi * xi).exp() * (x + 0.5f64).cos();
            assert!((eval_symbol(&p, x, xi, 0, 0).unwrap() - expected).abs() < 1e-14);
        }
        let dx = eval_symbol(&p, 0.0, 0.0, 1, 0).unwrap();
        let oracle = fd(|x| (x + 0.5f64).cos(), 0.0);
        assert!((dx - oracle).abs() < 1e-8);

        let cos = SymbolSpec::cos_xi(1.0, Coefficient::constant(1.0));
        let moved = perturb(&cos, &PerturbField::sine(1.0), 0.3).unwrap();
        assert_eq!(
            eval_symbol(&moved, 0.7, 0.2, 0, 0).unwrap(),
            eval_symbol(&cos, 0.7, 0.2, 0, 0).unwrap()
        );
        assert!(matches!(perturb(&cos, &PerturbField::sine(1.0), 1.5), Err(Error::DeltaOutOfRange(_))));
    }

    #[test]
    fn builtin_fields() {
        let f = builtin_field(BuiltinField::MuFamily { mu: 1.0 }).unwrap();
        for x in [-3.0, 0.0, 7.0] {
            assert_eq!(f.value(x), 1.0);
            assert_eq!(f.derivative(x, 1).unwrap(), 0.0);
        }
        let s = builtin_field(BuiltinField::Sine { amp: 1.0 }).unwrap();
        assert!((s.derivative(0.0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(s.derivative(0.0, 2).unwrap().abs() < 1e-15);

        let h = builtin_field(BuiltinField::MuFamily { mu: 0.5 }).unwrap();
        let d = h.derivative(1.0, 1).unwrap();
        let closed = 0.25 * 2.0 * 1.0 * 2f64.powf(-0.75);
        assert!((d - closed).abs() < 1e-14);
        assert!((d - fd(|x| h.value(x), 1.0)).abs() < 1e-8);

        assert!(matches!(
            builtin_field(BuiltinField::MuFamily { mu: 0.0 }),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn mu_family_decay_holds_on_wide_range() {
        let xs: Vec<f64> = (0..=20000).map(|i| -1000.0 + 0.1 * i as f64).collect();
        for mu in [0.5, 1.5, 2.0, 3.0] {
            let f = PerturbField::mu_family(mu).unwrap();
            assert!(f.decay_ratio(&xs).unwrap() <= 1.0 + 1e-12, "mu={mu}");
        }
    }

    #[test]
    fn custom_field_uses_finite_differences() {
        let f = PerturbField::custom("tanh", |x: f64| x.tanh());
        let d1 = f.derivative(0.3, 1).unwrap();
        assert!((d1 - 1.0 / 0.3f64.cosh().powi(2)).abs() < 1e-9);
        assert!(matches!(f.derivative(0.3, 3), Err(Error::OrderExceeded { .. })));
    }
}
