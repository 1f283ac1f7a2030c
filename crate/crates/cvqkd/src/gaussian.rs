//! Exact second-moment algebra for Gaussian optical modes.
//!
//! Quadratures use the convention X1 = (a + a†)/2, X2 = (a − a†)/2i, so the
//! vacuum has variance 1/4 in each quadrature. Every quadrature is kept
//! symbolically as a linear form `mean + Σ cᵢ·Zᵢ` over independent zero-mean
//! Gaussian noise sources Zᵢ owned by a [`NoiseRegistry`]. Variances and
//! covariances are then exact coefficient arithmetic rather than Monte Carlo
//! estimates, and sampling draws one realization per source shared across all
//! forms, so linear relationships between sampled values are exact as well.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Variance of either quadrature of the vacuum state in the X = (a + a†)/2
/// convention. Fixed by the convention, not configurable.
pub const VACUUM_VARIANCE: f64 = 0.25;

/// Opaque handle of a noise source inside one registry.
///
/// Ids are only meaningful for the registry that issued them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceId(u32);

/// Append-only set of independent zero-mean Gaussian noise sources.
#[derive(Debug, Default)]
pub struct NoiseRegistry {
    variances: Vec<f64>,
}

impl NoiseRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a fresh source with the given variance and returns its id.
    pub fn register(&mut self, variance: f64) -> Result<SourceId> {
        if !variance.is_finite() || variance < 0.0 {
            return Err(Error::Domain(format!(
                "noise source variance must be finite and non-negative, got {variance}"
            )));
        }
        let id = SourceId(self.variances.len() as u32);
        self.variances.push(variance);
        Ok(id)
    }

    /// Registers a fresh vacuum-noise source (variance 1/4).
    pub fn register_vacuum(&mut self) -> SourceId {
        let id = SourceId(self.variances.len() as u32);
        self.variances.push(VACUUM_VARIANCE);
        id
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    fn variance_of(&self, id: SourceId) -> Result<f64> {
        self.variances.get(id.0 as usize).copied().ok_or_else(|| {
            Error::Integrity(format!(
                "source id {} is not registered here (registry holds {})",
                id.0,
                self.variances.len()
            ))
        })
    }

    /// Exact variance of a linear form: Σ cᵢ²·var(Zᵢ).
    pub fn variance(&self, form: &LinearForm) -> Result<f64> {
        let mut total = 0.0;
        for (&id, &c) in &form.coeffs {
            total += c * c * self.variance_of(id)?;
        }
        Ok(total)
    }

    /// Exact covariance of two linear forms: Σ cᵢ·dᵢ·var(Zᵢ).
    pub fn covariance(&self, f: &LinearForm, g: &LinearForm) -> Result<f64> {
        let mut total = 0.0;
        for (&id, &c) in &f.coeffs {
            if let Some(&d) = g.coeffs.get(&id) {
                total += c * d * self.variance_of(id)?;
            }
        }
        Ok(total)
    }

    /// Draws one realization of every registered source, in id order.
    ///
    /// Always consumes exactly `len()` values from the generator, so a fixed
    /// seed yields a reproducible stream regardless of which forms are later
    /// evaluated against the draw.
    pub fn sample_all<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.variances
            .iter()
            .map(|&v| {
                let z: f64 = rng.sample(StandardNormal);
                z * v.sqrt()
            })
            .collect()
    }

    /// Samples all given forms against a single shared realization of the
    /// sources, deterministically for a given seed.
    pub fn sample_joint(&self, forms: &[&LinearForm], seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = self.sample_all(&mut rng);
        forms.iter().map(|f| f.evaluate(&values)).collect()
    }
}

/// A Gaussian random variable expressed as `mean + Σ cᵢ·Zᵢ`.
///
/// Zero coefficients are pruned on every operation, so algebraic cancellation
/// (for example displacing by a source and later subtracting it) produces a
/// structurally identical form, not one with dangling zero entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearForm {
    mean: f64,
    coeffs: BTreeMap<SourceId, f64>,
}

impl LinearForm {
    /// The deterministic form with the given mean and no noise content.
    pub fn constant(mean: f64) -> Self {
        Self {
            mean,
            coeffs: BTreeMap::new(),
        }
    }

    /// The form that is exactly one source: `1·Z`.
    pub fn from_source(id: SourceId) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(id, 1.0);
        Self { mean: 0.0, coeffs }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Coefficient of one source (0 when absent).
    pub fn coefficient(&self, id: SourceId) -> f64 {
        self.coeffs.get(&id).copied().unwrap_or(0.0)
    }

    /// Non-zero coefficients in ascending id order.
    pub fn coefficients(&self) -> impl Iterator<Item = (SourceId, f64)> + '_ {
        self.coeffs.iter().map(|(&id, &c)| (id, c))
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Evaluates the form against one realization of the sources, indexed by id.
    pub fn evaluate(&self, values: &[f64]) -> Result<f64> {
        let mut total = self.mean;
        for (&id, &c) in &self.coeffs {
            let v = values.get(id.0 as usize).ok_or_else(|| {
                Error::Integrity(format!(
                    "source id {} has no realization (got {} values)",
                    id.0,
                    values.len()
                ))
            })?;
            total += c * v;
        }
        Ok(total)
    }

    fn prune(mut self) -> Self {
        self.coeffs.retain(|_, c| *c != 0.0);
        self
    }
}

impl From<f64> for LinearForm {
    fn from(mean: f64) -> Self {
        LinearForm::constant(mean)
    }
}

impl From<SourceId> for LinearForm {
    fn from(id: SourceId) -> Self {
        LinearForm::from_source(id)
    }
}

impl From<&LinearForm> for LinearForm {
    fn from(f: &LinearForm) -> Self {
        f.clone()
    }
}

impl Add for &LinearForm {
    type Output = LinearForm;

    fn add(self, rhs: &LinearForm) -> LinearForm {
        let mut coeffs = self.coeffs.clone();
        for (&id, &c) in &rhs.coeffs {
            *coeffs.entry(id).or_insert(0.0) += c;
        }
        LinearForm {
            mean: self.mean + rhs.mean,
            coeffs,
        }
        .prune()
    }
}

impl Sub for &LinearForm {
    type Output = LinearForm;

    fn sub(self, rhs: &LinearForm) -> LinearForm {
        let mut coeffs = self.coeffs.clone();
        for (&id, &c) in &rhs.coeffs {
            *coeffs.entry(id).or_insert(0.0) -= c;
        }
        LinearForm {
            mean: self.mean - rhs.mean,
            coeffs,
        }
        .prune()
    }
}

impl Mul<f64> for &LinearForm {
    type Output = LinearForm;

    fn mul(self, k: f64) -> LinearForm {
        LinearForm {
            mean: self.mean * k,
            coeffs: self.coeffs.iter().map(|(&id, &c)| (id, c * k)).collect(),
        }
        .prune()
    }
}

impl Neg for &LinearForm {
    type Output = LinearForm;

    fn neg(self) -> LinearForm {
        self * -1.0
    }
}

/// One optical mode: a pair of quadrature forms.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub x1: LinearForm,
    pub x2: LinearForm,
}

impl Mode {
    /// Fresh vacuum mode backed by two new independent sources of variance 1/4.
    pub fn vacuum(registry: &mut NoiseRegistry) -> Mode {
        Mode {
            x1: LinearForm::from_source(registry.register_vacuum()),
            x2: LinearForm::from_source(registry.register_vacuum()),
        }
    }

    /// Single-mode squeezing S(r): x1 ↦ e^{−r}·x1, x2 ↦ e^{r}·x2.
    ///
    /// Positive r squeezes x1 and anti-squeezes x2; negative r does the
    /// opposite. Means scale along with the noise coefficients.
    pub fn squeeze(&self, r: f64) -> Mode {
        Mode {
            x1: &self.x1 * (-r).exp(),
            x2: &self.x2 * r.exp(),
        }
    }

    /// Displacement: adds an offset to each quadrature.
    ///
    /// Offsets may be plain numbers or linear forms; displacing by the form
    /// of a registered source injects a random classical displacement, which
    /// is how the masking displacement is modelled.
    pub fn displace(&self, dx1: impl Into<LinearForm>, dx2: impl Into<LinearForm>) -> Mode {
        Mode {
            x1: &self.x1 + &dx1.into(),
            x2: &self.x2 + &dx2.into(),
        }
    }
}

/// Lossless beam splitter with transmittance eta:
/// out1 = √η·a + √(1−η)·b, out2 = √η·b − √(1−η)·a, applied per quadrature.
pub fn beam_splitter(a: &Mode, b: &Mode, eta: f64) -> Result<(Mode, Mode)> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(Error::Domain(format!(
            "beam splitter transmittance must lie in [0, 1], got {eta}"
        )));
    }
    let t = eta.sqrt();
    let s = (1.0 - eta).sqrt();
    let out1 = Mode {
        x1: &(&a.x1 * t) + &(&b.x1 * s),
        x2: &(&a.x2 * t) + &(&b.x2 * s),
    };
    let out2 = Mode {
        x1: &(&b.x1 * t) - &(&a.x1 * s),
        x2: &(&b.x2 * t) - &(&a.x2 * s),
    };
    Ok((out1, out2))
}

/// Weighted sum of modes, per quadrature.
pub fn combine(modes: &[&Mode], weights: &[f64]) -> Result<Mode> {
    if modes.is_empty() {
        return Err(Error::Usage("combine needs at least one mode".into()));
    }
    if modes.len() != weights.len() {
        return Err(Error::Usage(format!(
            "combine got {} modes but {} weights",
            modes.len(),
            weights.len()
        )));
    }
    let mut x1 = LinearForm::constant(0.0);
    let mut x2 = LinearForm::constant(0.0);
    for (m, &w) in modes.iter().zip(weights) {
        x1 = &x1 + &(&m.x1 * w);
        x2 = &x2 + &(&m.x2 * w);
    }
    Ok(Mode { x1, x2 })
}
