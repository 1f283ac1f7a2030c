//! Closed-form information rates, detection fidelity, security thresholds,
//! and the grid sweeps behind the surface and envelope tables.
//!
//! Everything here is a pure function of the parameters; the Monte Carlo
//! layer cross-checks these forms, and the unit tests additionally pin them
//! to independently computed reference values.

use crate::adversary::eve_max_info;
use crate::error::{Error, Result};
use crate::protocol::{derive_sigma, ProtocolParams};

/// ½·log₂(1 + γ): capacity in bits of a Gaussian channel at signal-to-noise
/// ratio γ.
pub fn shannon_bits(gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::Domain(format!(
            "signal-to-noise ratio must be non-negative, got {gamma}"
        )));
    }
    Ok(0.5 * gamma.ln_1p() / std::f64::consts::LN_2)
}

fn check_eta(name: &str, eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(Error::Domain(format!(
            "{name} must lie in [0, 1], got {eta}"
        )));
    }
    Ok(())
}

/// Honest parties' signal-to-noise ratio: η₂Σ'² over the total demasked
/// noise ¼η₁η₂e^{−2r} + ¼(1−√(η₁η₂))²(e^{2r}−e^{−2r}) + ¼[(1−η₂)+(1−η₁)η₂].
///
/// The middle noise term is the mask residue left by unequal path losses;
/// it vanishes on a lossless line.
pub fn snr_ab(r: f64, sigma_prime2: f64, eta1: f64, eta2: f64) -> Result<f64> {
    let params = ProtocolParams::new(r, sigma_prime2)?;
    check_eta("forward transmittance eta1", eta1)?;
    check_eta("backward transmittance eta2", eta2)?;
    let e2r = (2.0 * r).exp();
    let noise = 0.25 * eta1 * eta2 / e2r
        + (1.0 - (eta1 * eta2).sqrt()).powi(2) * params.sigma2
        + 0.25 * ((1.0 - eta2) + (1.0 - eta1) * eta2);
    Ok(eta2 * sigma_prime2 / noise)
}

/// Mutual information between the honest parties, in bits per run.
pub fn info_ab(r: f64, sigma_prime2: f64, eta1: f64, eta2: f64) -> Result<f64> {
    shannon_bits(snr_ab(r, sigma_prime2, eta1, eta2)?)
}

/// Secret information rate: the honest parties' rate minus the attacker's
/// bound at her optimal mixing weight.
pub fn delta_i(r: f64, sigma_prime2: f64, eta1: f64, eta2: f64) -> Result<f64> {
    let params = ProtocolParams::new(r, sigma_prime2)?;
    check_eta("forward transmittance eta1", eta1)?;
    check_eta("backward transmittance eta2", eta2)?;
    Ok(info_ab(r, sigma_prime2, eta1, eta2)? - eve_max_info(&params, eta1, eta2))
}

/// Relative deviation of a masking variance from the value tied to `r`.
/// Zero when the bases are exactly indistinguishable.
pub fn masking_condition_residual(r: f64, sigma2: f64) -> Result<f64> {
    let derived = derive_sigma(r)?;
    Ok((sigma2 - derived).abs() / derived)
}

/// The two output variances of the returned state after demasking, symbol
/// subtraction, and unsqueezing:
///
/// v1 = ¼η₁η₂ + e^{2r}[(1−√(η₁η₂))²σ² + (√η₂−1)²Σ'² + ¼((1−η₂)+(1−η₁)η₂)]
/// v2 = ¼η₁η₂ + e^{−2r}[(√η₂−1)²Σ'² + ¼((1−η₂)+(1−η₁)η₂)]
///
/// Grouped so a lossless line yields exactly (¼, ¼); the tests check
/// equivalence with the symbolic pipeline.
pub fn output_variances(
    r: f64,
    sigma2: f64,
    sigma_prime2: f64,
    eta1: f64,
    eta2: f64,
) -> Result<(f64, f64)> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain(format!(
            "squeezing factor must be positive and finite, got {r}"
        )));
    }
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::Domain(format!(
            "masking variance must be non-negative and finite, got {sigma2}"
        )));
    }
    if !sigma_prime2.is_finite() || sigma_prime2 <= 0.0 {
        return Err(Error::Domain(format!(
            "encoding variance must be positive and finite, got {sigma_prime2}"
        )));
    }
    check_eta("forward transmittance eta1", eta1)?;
    check_eta("backward transmittance eta2", eta2)?;

    let e2r = (2.0 * r).exp();
    let vacuum_leak = 0.25 * ((1.0 - eta2) + (1.0 - eta1) * eta2);
    let encoding_residue = (eta2.sqrt() - 1.0).powi(2) * sigma_prime2;
    let mask_residue = (1.0 - (eta1 * eta2).sqrt()).powi(2) * sigma2;
    let v1 = 0.25 * eta1 * eta2 + e2r * (mask_residue + encoding_residue + vacuum_leak);
    let v2 = 0.25 * eta1 * eta2 + (encoding_residue + vacuum_leak) / e2r;
    Ok((v1, v2))
}

/// Fidelity of the returned state against the ideal one:
/// 2 / √((4v₁+1)(4v₂+1)). Equals 1 exactly at (¼, ¼); values above 1 signal
/// sub-vacuum inputs outside the protocol's physical regime and are
/// returned unclamped.
pub fn fidelity_closed_form(v1: f64, v2: f64) -> Result<f64> {
    if v1 < 0.0 || v2 < 0.0 || !v1.is_finite() || !v2.is_finite() {
        return Err(Error::Domain(format!(
            "output variances must be non-negative and finite, got ({v1}, {v2})"
        )));
    }
    Ok(2.0 / ((4.0 * v1 + 1.0) * (4.0 * v2 + 1.0)).sqrt())
}

/// Fidelity at given transmittances with the masking variance tied to `r`.
pub fn fidelity_at(r: f64, sigma_prime2: f64, eta1: f64, eta2: f64) -> Result<f64> {
    let sigma2 = derive_sigma(r)?;
    let (v1, v2) = output_variances(r, sigma2, sigma_prime2, eta1, eta2)?;
    fidelity_closed_form(v1, v2)
}

/// One grid point of the rate/fidelity surfaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatePoint {
    pub eta1: f64,
    pub eta2: f64,
    pub i_ab_bits: f64,
    pub i_ae_bits: f64,
    pub delta_i_bits: f64,
    pub fidelity: f64,
}

/// Full (η₁, η₂) grid of rates and fidelity, lexicographic in (η₁, η₂),
/// with η values i/(grid_n−1).
pub fn sweep_rate_grid(r: f64, sigma_prime2: f64, grid_n: usize) -> Result<Vec<RatePoint>> {
    if grid_n < 2 {
        return Err(Error::Domain(format!(
            "grid resolution must be at least 2, got {grid_n}"
        )));
    }
    let params = ProtocolParams::new(r, sigma_prime2)?;
    let step = |i: usize| i as f64 / (grid_n - 1) as f64;
    let mut points = Vec::with_capacity(grid_n * grid_n);
    for i in 0..grid_n {
        let eta1 = step(i);
        for j in 0..grid_n {
            let eta2 = step(j);
            let i_ab_bits = info_ab(r, sigma_prime2, eta1, eta2)?;
            let i_ae_bits = eve_max_info(&params, eta1, eta2);
            let (v1, v2) = output_variances(r, params.sigma2, sigma_prime2, eta1, eta2)?;
            points.push(RatePoint {
                eta1,
                eta2,
                i_ab_bits,
                i_ae_bits,
                delta_i_bits: i_ab_bits - i_ae_bits,
                fidelity: fidelity_closed_form(v1, v2)?,
            });
        }
    }
    Ok(points)
}

/// One bin of the worst-case rate-versus-fidelity envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeBin {
    /// Bin center on the fidelity axis.
    pub fidelity_bin: f64,
    /// Minimum secret rate among all attacks landing in this bin.
    pub delta_i_min_bits: f64,
}

/// Lower envelope of the secret rate over fidelity: evaluates (F, ΔI) on a
/// grid_n × grid_n transmittance grid, bins by F, and keeps the worst ΔI
/// per bin. Empty bins are omitted; bins are returned in ascending F order.
pub fn delta_i_vs_fidelity(
    r: f64,
    sigma_prime2: f64,
    grid_n: usize,
    bins: usize,
) -> Result<Vec<EnvelopeBin>> {
    if grid_n < 50 {
        return Err(Error::Domain(format!(
            "envelope grid resolution must be at least 50, got {grid_n}"
        )));
    }
    if bins < 20 {
        return Err(Error::Domain(format!(
            "envelope needs at least 20 fidelity bins, got {bins}"
        )));
    }
    let points = sweep_rate_grid(r, sigma_prime2, grid_n)?;
    let mut minima: Vec<Option<f64>> = vec![None; bins];
    for p in &points {
        let idx = ((p.fidelity * bins as f64) as usize).min(bins - 1);
        let slot = &mut minima[idx];
        *slot = Some(match *slot {
            Some(cur) => cur.min(p.delta_i_bits),
            None => p.delta_i_bits,
        });
    }
    Ok(minima
        .iter()
        .enumerate()
        .filter_map(|(idx, slot)| {
            slot.map(|delta_i_min_bits| EnvelopeBin {
                fidelity_bin: (idx as f64 + 0.5) / bins as f64,
                delta_i_min_bits,
            })
        })
        .collect())
}

/// Fidelity below which the worst-case secret rate turns negative, read off
/// the envelope by linear interpolation between the bin centers around its
/// sign change.
pub fn critical_fidelity(envelope: &[EnvelopeBin]) -> Result<f64> {
    for pair in envelope.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if lo.delta_i_min_bits <= 0.0 && hi.delta_i_min_bits > 0.0 {
            let t = -lo.delta_i_min_bits / (hi.delta_i_min_bits - lo.delta_i_min_bits);
            return Ok(lo.fidelity_bin + t * (hi.fidelity_bin - lo.fidelity_bin));
        }
    }
    Err(Error::Solver(format!(
        "envelope never crosses zero over {} bins (rate spans {:.4} to {:.4} bits)",
        envelope.len(),
        envelope
            .iter()
            .map(|b| b.delta_i_min_bits)
            .fold(f64::INFINITY, f64::min),
        envelope
            .iter()
            .map(|b| b.delta_i_min_bits)
            .fold(f64::NEG_INFINITY, f64::max),
    )))
}

/// Root of f on [lo, hi] by bisection; f must change sign across the
/// bracket.
fn bisect(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let mut lo = lo;
    let mut hi = hi;
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Solver(format!(
            "no sign change on [{lo}, {hi}]: f({lo}) = {f_lo:.6}, f({hi}) = {f_hi:.6}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest line transmittance at which the secret rate of the symmetric
/// lossy line is still non-negative: the root of η ↦ ΔI(η, η) on [0, 1].
pub fn find_eta_threshold(r: f64, sigma_prime2: f64, tol: f64) -> Result<f64> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::Domain(format!(
            "solver tolerance must be positive, got {tol}"
        )));
    }
    ProtocolParams::new(r, sigma_prime2)?;
    bisect(|eta| delta_i(r, sigma_prime2, eta, eta), 0.0, 1.0, tol)
}

/// Both security thresholds with the settings that produced them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdResult {
    pub eta_star: f64,
    pub f_critical: f64,
    pub grid_resolution: usize,
    pub bins: usize,
    pub tolerance: f64,
}

/// Computes the loss threshold and the critical fidelity in one call.
pub fn thresholds(
    r: f64,
    sigma_prime2: f64,
    grid_n: usize,
    bins: usize,
    tol: f64,
) -> Result<ThresholdResult> {
    let eta_star = find_eta_threshold(r, sigma_prime2, tol)?;
    let envelope = delta_i_vs_fidelity(r, sigma_prime2, grid_n, bins)?;
    let f_critical = critical_fidelity(&envelope)?;
    Ok(ThresholdResult {
        eta_star,
        f_critical,
        grid_resolution: grid_n,
        bins,
        tolerance: tol,
    })
}
