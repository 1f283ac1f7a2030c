//! The two-way protocol: the receiver-side party prepares a masked squeezed
//! state, sends it out, the sender displaces both quadratures by the key
//! symbol, and the state returns to be demasked and measured by homodyne
//! detection in the quadrature matching the preparation basis.
//!
//! The same symbolic machinery drives both exact variance propagation and
//! Monte Carlo sessions: each basis gets one quadrature pipeline built once
//! per session; a run draws the basis coin, then one realization of every
//! registered noise source, and evaluates the forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::{intercept_backward, intercept_forward, AttackConfig};
use crate::analysis::fidelity_closed_form;
use crate::error::{Error, Result};
use crate::gaussian::{LinearForm, Mode, NoiseRegistry};

/// Fewest disclosed runs per basis accepted by the fidelity estimator;
/// below this the variance estimates are too noisy to compare against a
/// detection threshold.
pub const MIN_DISCLOSED_PER_BASIS: usize = 30;

/// Preparation basis: which quadrature carries the mask (and is squeezed).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Mask on the first quadrature, squeezing factor +r.
    P,
    /// Mask on the second quadrature, squeezing factor −r.
    PPerp,
}

impl std::fmt::Display for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Basis::P => write!(f, "P"),
            Basis::PPerp => write!(f, "P_perp"),
        }
    }
}

/// Masking variance that makes the two preparation bases produce identical
/// output statistics: Σ² = ¼(e^{2r} − e^{−2r}), so that squeezed noise plus
/// mask equals anti-squeezed noise in each quadrature.
pub fn derive_sigma(r: f64) -> Result<f64> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain(format!(
            "squeezing factor must be positive and finite, got {r}"
        )));
    }
    Ok(0.25 * ((2.0 * r).exp() - (-2.0 * r).exp()))
}

/// Session parameters. `sigma2` is derived from `r` on construction and is
/// what keeps the bases indistinguishable; `sigma_prime2` is the encoding
/// variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolParams {
    pub r: f64,
    pub sigma2: f64,
    pub sigma_prime2: f64,
    pub n_runs: usize,
    pub disclosure_fraction: f64,
}

impl ProtocolParams {
    /// Parameters with the masking variance tied to `r`, 100 000 runs, and
    /// a 0.2 disclosure fraction.
    pub fn new(r: f64, sigma_prime2: f64) -> Result<Self> {
        let sigma2 = derive_sigma(r)?;
        let params = Self {
            r,
            sigma2,
            sigma_prime2,
            n_runs: 100_000,
            disclosure_fraction: 0.2,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_n_runs(mut self, n_runs: usize) -> Result<Self> {
        self.n_runs = n_runs;
        self.validate()?;
        Ok(self)
    }

    pub fn with_disclosure_fraction(mut self, fraction: f64) -> Result<Self> {
        self.disclosure_fraction = fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() || self.r <= 0.0 {
            return Err(Error::Domain(format!(
                "squeezing factor must be positive and finite, got {}",
                self.r
            )));
        }
        if !self.sigma2.is_finite() || self.sigma2 <= 0.0 {
            return Err(Error::Domain(format!(
                "masking variance must be positive and finite, got {}",
                self.sigma2
            )));
        }
        if !self.sigma_prime2.is_finite() || self.sigma_prime2 <= 0.0 {
            return Err(Error::Domain(format!(
                "encoding variance must be positive and finite, got {}",
                self.sigma_prime2
            )));
        }
        if self.n_runs == 0 {
            return Err(Error::Domain("session needs at least one run".into()));
        }
        if !(self.disclosure_fraction > 0.0 && self.disclosure_fraction < 1.0) {
            return Err(Error::Domain(format!(
                "disclosure fraction must lie strictly between 0 and 1, got {}",
                self.disclosure_fraction
            )));
        }
        Ok(())
    }
}

/// Prepares the outgoing mode: fresh vacuum, squeezed along the basis, mask
/// displacement on the basis quadrature.
///
/// The mask may be a plain number (one realization) or the linear form of a
/// registered random source (the ensemble view used for exact variances).
pub fn bob_prepare(
    basis: Basis,
    mask: impl Into<LinearForm>,
    params: &ProtocolParams,
    registry: &mut NoiseRegistry,
) -> Mode {
    let vac = Mode::vacuum(registry);
    match basis {
        Basis::P => vac.squeeze(params.r).displace(mask, 0.0),
        Basis::PPerp => vac.squeeze(-params.r).displace(0.0, mask),
    }
}

/// Encodes a key symbol by displacing both quadratures by the same value,
/// so the symbol survives whichever quadrature the receiver measures.
pub fn alice_encode(m: &Mode, x: impl Into<LinearForm>) -> Mode {
    let x = x.into();
    m.displace(&x, &x)
}

/// Demasks the returned mode and selects the measured quadrature for the
/// given basis. The result is the measurement as a linear form.
pub fn bob_decode(m: &Mode, basis: Basis, mask: impl Into<LinearForm>) -> LinearForm {
    let mask = mask.into();
    match basis {
        Basis::P => &m.x1 - &mask,
        Basis::PPerp => &m.x2 - &mask,
    }
}

/// One protocol round.
#[derive(Clone, Copy, Debug)]
pub struct RunRecord {
    pub basis: Basis,
    /// The mask realization drawn by the preparer.
    pub alpha: f64,
    /// The encoded key symbol.
    pub x: f64,
    /// Homodyne outcome of the demasked basis quadrature.
    pub bob_measurement: f64,
    /// Whether the sender published x for this run.
    pub disclosed: bool,
}

/// Everything a finished session produces.
#[derive(Clone, Debug)]
pub struct SessionResult {
    pub records: Vec<RunRecord>,
    pub empirical_snr: f64,
    pub empirical_fidelity: f64,
    /// Undisclosed key symbols, in run order.
    pub key_alice: Vec<f64>,
    /// The matching measurements.
    pub key_bob: Vec<f64>,
}

/// Runs a full session of `params.n_runs` rounds under the given attack,
/// deterministically for a given seed.
///
/// Stream 0 of the generator drives the per-run draws, stream 1 the
/// disclosure selection, so the two choices cannot alias.
pub fn run_session(
    params: &ProtocolParams,
    attack: &AttackConfig,
    seed: u64,
) -> Result<SessionResult> {
    params.validate()?;
    attack.validate()?;
    let (eta1, eta2) = attack.line_transmittances();

    let mut registry = NoiseRegistry::new();
    let mask = LinearForm::from_source(registry.register(params.sigma2)?);
    let x = LinearForm::from_source(registry.register(params.sigma_prime2)?);

    // One measurement pipeline per basis, registered up front: every run
    // samples all sources, so run i consumes the same draws no matter which
    // basis the coin picks, and an untouched line equals unit transmittances
    // stream-for-stream.
    let mut forms = Vec::with_capacity(2);
    for basis in [Basis::P, Basis::PPerp] {
        let m3 = bob_prepare(basis, &mask, params, &mut registry);
        let (m4, _forward_tap) = intercept_forward(&m3, eta1, &mut registry)?;
        let m5 = alice_encode(&m4, &x);
        let (m6, _backward_tap) = intercept_backward(&m5, eta2, &mut registry)?;
        forms.push(bob_decode(&m6, basis, &mask));
    }

    let n = params.n_runs;
    let n_disclosed = ((params.disclosure_fraction * n as f64).ceil() as usize).min(n);
    let mut selection_rng = ChaCha8Rng::seed_from_u64(seed);
    selection_rng.set_stream(1);
    let mut disclosed = vec![false; n];
    for idx in rand::seq::index::sample(&mut selection_rng, n, n_disclosed) {
        disclosed[idx] = true;
    }

    let mut run_rng = ChaCha8Rng::seed_from_u64(seed);
    run_rng.set_stream(0);
    let mut records = Vec::with_capacity(n);
    for &was_disclosed in disclosed.iter() {
        let basis = if run_rng.random_bool(0.5) {
            Basis::P
        } else {
            Basis::PPerp
        };
        let values = registry.sample_all(&mut run_rng);
        let form = match basis {
            Basis::P => &forms[0],
            Basis::PPerp => &forms[1],
        };
        records.push(RunRecord {
            basis,
            alpha: mask.evaluate(&values)?,
            x: x.evaluate(&values)?,
            bob_measurement: form.evaluate(&values)?,
            disclosed: was_disclosed,
        });
    }

    let empirical_snr = regression_snr(&records)?;
    let empirical_fidelity = estimate_fidelity(&records, params)?;
    let key_alice = records
        .iter()
        .filter(|rec| !rec.disclosed)
        .map(|rec| rec.x)
        .collect();
    let key_bob = records
        .iter()
        .filter(|rec| !rec.disclosed)
        .map(|rec| rec.bob_measurement)
        .collect();

    Ok(SessionResult {
        records,
        empirical_snr,
        empirical_fidelity,
        key_alice,
        key_bob,
    })
}

/// Least-squares signal-to-noise ratio of the undisclosed runs: regress the
/// measurement on the key symbol, then slope²·var(x) over the residual
/// variance.
fn regression_snr(records: &[RunRecord]) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter(|rec| !rec.disclosed)
        .map(|rec| (rec.x, rec.bob_measurement))
        .collect();
    let m = pairs.len();
    if m < 3 {
        return Err(Error::Estimation {
            context: "signal-to-noise regression over undisclosed runs".into(),
            required: 3,
            got: m,
        });
    }
    let mf = m as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / mf;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / mf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (px, py) in &pairs {
        let dx = px - mean_x;
        let dy = py - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Domain(
            "undisclosed key symbols are all identical; cannot regress".into(),
        ));
    }
    let slope = sxy / sxx;
    let residual_ss = syy - slope * sxy;
    let residual_var = residual_ss / (mf - 2.0);
    let var_x = sxx / (mf - 1.0);
    Ok(slope * slope * var_x / residual_var)
}

/// Estimates the detection fidelity from disclosed runs.
///
/// For the basis masking the first quadrature, the residual e^{r}·(y − x) is
/// distributed with exactly the first output variance of the returned state
/// after unsqueezing. The complementary variance belongs to the quadrature
/// that basis never measures; instead, in the mirrored basis the disclosed
/// quantity e^{−r}·(y − x + α) (mask added back in) has variance exactly
/// equal to the second output variance, because the masking variance obeys
/// Σ² = ¼(e^{2r} − e^{−2r}). Both estimators are unbiased for any
/// transmittances, so the fidelity estimate converges to the closed form.
pub fn estimate_fidelity(records: &[RunRecord], params: &ProtocolParams) -> Result<f64> {
    params.validate()?;
    let er = params.r.exp();
    let mut v1_samples = Vec::new();
    let mut v2_samples = Vec::new();
    for rec in records.iter().filter(|rec| rec.disclosed) {
        match rec.basis {
            Basis::P => v1_samples.push(er * (rec.bob_measurement - rec.x)),
            Basis::PPerp => v2_samples.push((rec.bob_measurement - rec.x + rec.alpha) / er),
        }
    }
    let v1 = disclosed_variance(&v1_samples, Basis::P)?;
    let v2 = disclosed_variance(&v2_samples, Basis::PPerp)?;
    fidelity_closed_form(v1, v2)
}

fn disclosed_variance(samples: &[f64], basis: Basis) -> Result<f64> {
    if samples.len() < MIN_DISCLOSED_PER_BASIS {
        return Err(Error::Estimation {
            context: format!("fidelity estimate, disclosed runs in basis {basis}"),
            required: MIN_DISCLOSED_PER_BASIS,
            got: samples.len(),
        });
    }
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    Ok(samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0))
}
