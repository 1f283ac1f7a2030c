//! Beam-splitter eavesdropping on the two-way line.
//!
//! The attacker inserts one beam splitter of transmittance eta1 on the
//! forward path (before the encoder) and one of transmittance eta2 on the
//! backward path (after it), keeps both tapped modes, and measures the
//! quadratures of their combination `backward − k·forward` for a mixing
//! weight k of her choice. This module provides the session interceptors,
//! the closed-form signal-to-noise ratio of the combined tap, the optimal
//! k, and the resulting information bound. Replacing a line of transmittance
//! eta by a tap and a lossless line is the special case eta1 = eta2 = eta.

use crate::error::{Error, Result};
use crate::gaussian::{beam_splitter, Mode, NoiseRegistry};
use crate::protocol::ProtocolParams;

/// How the attacker picks the mixing weight k for `backward − k·forward`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KPolicy {
    /// The closed-form k that maximizes the attacker's signal-to-noise ratio.
    Optimal,
    /// An externally fixed k, for studying suboptimal strategies.
    Fixed(f64),
}

/// Eavesdropping model inserted into a session.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AttackConfig {
    /// Untouched line.
    None,
    /// Independent taps on the forward and backward paths.
    BeamSplitters {
        eta1: f64,
        eta2: f64,
        k_policy: KPolicy,
    },
    /// Line of transmittance eta with the loss replaced by the attacker's
    /// tap and a lossless line; identical to `BeamSplitters` with
    /// eta1 = eta2 = eta in every derived quantity.
    LossyLine { eta: f64 },
}

fn check_transmittance(name: &str, eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(Error::Domain(format!(
            "{name} must lie in [0, 1], got {eta}"
        )));
    }
    Ok(())
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AttackConfig::None => Ok(()),
            AttackConfig::BeamSplitters {
                eta1,
                eta2,
                k_policy,
            } => {
                check_transmittance("forward transmittance eta1", eta1)?;
                check_transmittance("backward transmittance eta2", eta2)?;
                if let KPolicy::Fixed(k) = k_policy {
                    if !k.is_finite() {
                        return Err(Error::Domain(format!(
                            "fixed mixing weight must be finite, got {k}"
                        )));
                    }
                }
                Ok(())
            }
            AttackConfig::LossyLine { eta } => check_transmittance("line transmittance eta", eta),
        }
    }

    /// Effective transmittances of the forward and backward paths.
    /// An untouched line is a lossless one.
    pub fn line_transmittances(&self) -> (f64, f64) {
        match *self {
            AttackConfig::None => (1.0, 1.0),
            AttackConfig::BeamSplitters { eta1, eta2, .. } => (eta1, eta2),
            AttackConfig::LossyLine { eta } => (eta, eta),
        }
    }

    /// The mixing weight this attack actually uses.
    pub fn mixing_weight(&self, r: f64) -> f64 {
        match *self {
            AttackConfig::None => 0.0,
            AttackConfig::BeamSplitters {
                eta1,
                eta2,
                k_policy,
            } => match k_policy {
                KPolicy::Optimal => optimal_k(r, eta1, eta2),
                KPolicy::Fixed(k) => k,
            },
            AttackConfig::LossyLine { eta } => optimal_k(r, eta, eta),
        }
    }

    /// Bits per run the attacker learns about the key under this attack.
    pub fn eve_info_bits(&self, params: &ProtocolParams) -> f64 {
        match *self {
            AttackConfig::None => 0.0,
            _ => {
                let (eta1, eta2) = self.line_transmittances();
                let k = self.mixing_weight(params.r);
                half_log2_1p(eve_snr(params, eta1, eta2, k))
            }
        }
    }
}

/// Taps the forward beam: returns (mode continuing to the encoder, tap kept
/// by the attacker). The tap port mixes in a fresh vacuum.
pub fn intercept_forward(
    m: &Mode,
    eta1: f64,
    registry: &mut NoiseRegistry,
) -> Result<(Mode, Mode)> {
    check_transmittance("forward transmittance eta1", eta1)?;
    let vac = Mode::vacuum(registry);
    beam_splitter(m, &vac, eta1)
}

/// Taps the backward beam: returns (mode continuing to the receiver, tap
/// kept by the attacker).
pub fn intercept_backward(
    m: &Mode,
    eta2: f64,
    registry: &mut NoiseRegistry,
) -> Result<(Mode, Mode)> {
    check_transmittance("backward transmittance eta2", eta2)?;
    let vac = Mode::vacuum(registry);
    beam_splitter(m, &vac, eta2)
}

/// Both tapped modes and the mixing weight combining them.
#[derive(Clone, Debug)]
pub struct EveTap {
    pub forward: Mode,
    pub backward: Mode,
    pub k: f64,
}

impl EveTap {
    /// The mode the attacker measures: backward − k·forward.
    pub fn combined(&self) -> Mode {
        Mode {
            x1: &self.backward.x1 - &(&self.forward.x1 * self.k),
            x2: &self.backward.x2 - &(&self.forward.x2 * self.k),
        }
    }
}

/// Mixing weight maximizing [`eve_snr`] over k at fixed transmittances.
///
/// Stationary point of the quadratic-over-quadratic ratio in k; the tests
/// cross-check it against golden-section maximization.
pub fn optimal_k(r: f64, eta1: f64, eta2: f64) -> f64 {
    let e2r = (2.0 * r).exp();
    (e2r - 1.0) * (eta1 * (1.0 - eta1) * (1.0 - eta2)).sqrt() / (e2r * (1.0 - eta1) + eta1)
}

/// Signal-to-noise ratio of either quadrature of the combined tap
/// backward − k·forward: 4(1−η₂)Σ'² / (μ + ν), with
/// μ = (√(η₁(1−η₂)) − k√(1−η₁))²·e^{2r} and
/// ν = (√((1−η₁)(1−η₂)) + k√η₁)² + η₂.
///
/// The factor 4 expresses the noise in units of the vacuum variance 1/4;
/// the same normalization cancels out of every information quantity.
pub fn eve_snr(params: &ProtocolParams, eta1: f64, eta2: f64, k: f64) -> f64 {
    let e2r = (2.0 * params.r).exp();
    let c_mu = (eta1 * (1.0 - eta2)).sqrt() - k * (1.0 - eta1).sqrt();
    let mu = c_mu * c_mu * e2r;
    let c_nu = ((1.0 - eta1) * (1.0 - eta2)).sqrt() + k * eta1.sqrt();
    let nu = c_nu * c_nu + eta2;
    4.0 * (1.0 - eta2) * params.sigma_prime2 / (mu + nu)
}

/// The attacker's information bound in bits per run, at the optimal k.
pub fn eve_max_info(params: &ProtocolParams, eta1: f64, eta2: f64) -> f64 {
    let k = optimal_k(params.r, eta1, eta2);
    half_log2_1p(eve_snr(params, eta1, eta2, k))
}

/// ½·log₂(1 + γ); ln_1p keeps precision for small γ.
fn half_log2_1p(gamma: f64) -> f64 {
    0.5 * gamma.ln_1p() / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::LinearForm;
    use crate::protocol::derive_sigma;

    fn assert_close(a: f64, b: f64, tol: f64) {
        let scale = a.abs().max(b.abs()).max(1.0);
        assert!(
            (a - b).abs() <= tol * scale,
            "expected {a} ≈ {b} (tol {tol})"
        );
    }

    fn params(r: f64, sigma_prime2: f64) -> ProtocolParams {
        ProtocolParams::new(r, sigma_prime2).unwrap()
    }

    /// Builds the full symbolic tap pipeline for the basis that masks the
    /// first quadrature and returns (combined mode, registry, signal source).
    fn symbolic_pipeline(
        r: f64,
        sigma_prime2: f64,
        eta1: f64,
        eta2: f64,
        k: f64,
    ) -> (Mode, NoiseRegistry, LinearForm) {
        let mut reg = NoiseRegistry::new();
        let mask = LinearForm::from_source(reg.register(derive_sigma(r).unwrap()).unwrap());
        let x = LinearForm::from_source(reg.register(sigma_prime2).unwrap());
        let m3 = Mode::vacuum(&mut reg).squeeze(r).displace(&mask, 0.0);
        let (m4, fwd) = intercept_forward(&m3, eta1, &mut reg).unwrap();
        let m5 = m4.displace(&x, &x);
        let (_m6, bwd) = intercept_backward(&m5, eta2, &mut reg).unwrap();
        let tap = EveTap {
            forward: fwd,
            backward: bwd,
            k,
        };
        (tap.combined(), reg, x)
    }

    /// Signal-to-noise ratio read off a quadrature form: signal is the
    /// squared coefficient of the encoding source times its variance, noise
    /// is everything else.
    fn snr_of_form(form: &LinearForm, reg: &NoiseRegistry, x: &LinearForm) -> f64 {
        let cov = reg.covariance(form, x).unwrap();
        let sig = cov * cov / reg.variance(x).unwrap();
        let noise = reg.variance(form).unwrap() - sig;
        sig / noise
    }

    #[test]
    fn full_transmittance_tap_is_pure_vacuum() {
        let mut reg = NoiseRegistry::new();
        let m = Mode::vacuum(&mut reg).squeeze(2.0);
        let (through, tap) = intercept_forward(&m, 1.0, &mut reg).unwrap();
        assert_eq!(through, m);
        assert_eq!(reg.variance(&tap.x1).unwrap(), 0.25);
        assert_eq!(reg.variance(&tap.x2).unwrap(), 0.25);
        assert_eq!(reg.covariance(&tap.x1, &m.x1).unwrap(), 0.0);
    }

    #[test]
    fn zero_transmittance_hands_the_attacker_the_whole_signal() {
        let mut reg = NoiseRegistry::new();
        let m = Mode::vacuum(&mut reg).squeeze(2.0);
        let (through, tap) = intercept_forward(&m, 0.0, &mut reg).unwrap();
        // the receiver gets a fresh vacuum, the tap is the (sign-flipped) input
        assert_eq!(reg.variance(&through.x1).unwrap(), 0.25);
        assert_eq!(tap.x1, -&m.x1);
        assert_eq!(tap.x2, -&m.x2);
    }

    #[test]
    fn interceptors_reject_out_of_range_transmittance() {
        let mut reg = NoiseRegistry::new();
        let m = Mode::vacuum(&mut reg);
        assert!(intercept_forward(&m, 1.2, &mut reg).is_err());
        assert!(intercept_backward(&m, -0.2, &mut reg).is_err());
    }

    #[test]
    fn forward_tap_expansion_term_by_term() {
        // tap = √η₁·vac − √(1−η₁)·(squeezed input + mask)
        let r = 1.5;
        let eta1 = 0.6;
        let mut reg = NoiseRegistry::new();
        let mask_src = reg.register(derive_sigma(r).unwrap()).unwrap();
        let mask = LinearForm::from_source(mask_src);
        let input = Mode::vacuum(&mut reg);
        let m3 = input.squeeze(r).displace(&mask, 0.0);
        let (_through, tap) = intercept_forward(&m3, eta1, &mut reg).unwrap();

        let t = eta1.sqrt();
        let s = (1.0 - eta1).sqrt();
        let vac_x1 = tap
            .x1
            .coefficients()
            .find(|&(id, _)| id != mask_src && input.x1.coefficient(id) == 0.0)
            .unwrap();
        assert_close(vac_x1.1, t, 1e-15);
        assert_close(tap.x1.coefficient(mask_src), -s, 1e-15);
        // squeezed input coefficient: −√(1−η₁)·e^{−r}
        let in_src = input.x1.coefficients().next().unwrap().0;
        assert_close(tap.x1.coefficient(in_src), -s * (-r).exp(), 1e-15);
        let in2_src = input.x2.coefficients().next().unwrap().0;
        assert_close(tap.x2.coefficient(in2_src), -s * r.exp(), 1e-15);
    }

    #[test]
    fn optimal_k_vanishes_at_the_edges() {
        assert_eq!(optimal_k(3.0, 1.0, 0.5), 0.0);
        assert_eq!(optimal_k(3.0, 0.5, 1.0), 0.0);
    }

    #[test]
    fn optimal_k_frozen_value_and_golden_section_agreement() {
        let k = optimal_k(3.0, 0.5, 0.5);
        assert_close(k, 0.7036099639837969, 1e-12);

        let p = params(3.0, 100.0);
        let snr = |k: f64| eve_snr(&p, 0.5, 0.5, k);
        assert_close(snr(k), 133.5534849597071, 1e-12);

        // golden-section maximization over k
        let golden = golden_max(snr, 0.0, 10.0, 1e-10);
        assert!(
            (golden - k).abs() <= 1e-6,
            "golden-section argmax {golden} vs closed form {k}"
        );
    }

    fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        while hi - lo > tol {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = f(d);
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn optimal_k_beats_random_alternatives() {
        let p = params(3.0, 100.0);
        let (eta1, eta2) = (0.6, 0.7);
        let best = eve_snr(&p, eta1, eta2, optimal_k(p.r, eta1, eta2));
        // deterministic low-discrepancy probe of [0, 10]
        for i in 0..100 {
            let k = 10.0 * ((i as f64 * 0.618_033_988_749_895) % 1.0);
            assert!(
                best >= eve_snr(&p, eta1, eta2, k) - 1e-12,
                "k = {k} beats the closed form"
            );
        }
    }

    #[test]
    fn closed_form_snr_matches_symbolic_pipeline() {
        let p = params(3.0, 100.0);
        for &eta1 in &[0.25, 0.5, 0.9] {
            for &eta2 in &[0.3, 0.8] {
                for &k in &[0.2, optimal_k(p.r, eta1, eta2), 1.7] {
                    let (eve, reg, x) = symbolic_pipeline(p.r, p.sigma_prime2, eta1, eta2, k);
                    let symbolic = snr_of_form(&eve.x1, &reg, &x);
                    let closed = eve_snr(&p, eta1, eta2, k);
                    assert_close(symbolic, closed, 1e-10);
                }
            }
        }
    }

    #[test]
    fn combined_tap_quadratures_share_one_distribution() {
        // with the masking variance tied to the squeezing, both quadratures
        // of the combined tap have the same variance
        let (eve, reg, _) = symbolic_pipeline(3.0, 100.0, 0.7, 0.4, 0.9);
        let v1 = reg.variance(&eve.x1).unwrap();
        let v2 = reg.variance(&eve.x2).unwrap();
        assert_close(v1, v2, 1e-14);
    }

    #[test]
    fn eve_learns_nothing_from_a_lossless_line() {
        let p = params(3.0, 100.0);
        assert_eq!(eve_max_info(&p, 1.0, 1.0), 0.0);
        assert_eq!(eve_snr(&p, 1.0, 1.0, 0.3), 0.0);
    }

    #[test]
    fn eve_info_frozen_value() {
        let p = params(3.0, 100.0);
        assert_close(
            eve_snr(&p, 0.8, 0.8, optimal_k(3.0, 0.8, 0.8)),
            44.688185388203294,
            1e-12,
        );
        assert_close(eve_max_info(&p, 0.8, 0.8), 2.7568746193031153, 1e-12);
    }

    #[test]
    fn eve_info_never_grows_with_backward_transmittance() {
        let p = params(3.0, 100.0);
        let eta1 = 0.7;
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let eta2 = i as f64 / 20.0;
            let info = eve_max_info(&p, eta1, eta2);
            assert!(
                info <= last + 1e-12,
                "info grew from {last} to {info} at eta2 = {eta2}"
            );
            last = info;
        }
    }

    #[test]
    fn lossy_line_equals_symmetric_beam_splitters() {
        let p = params(3.0, 100.0);
        for &eta in &[0.3, 0.7, 0.95] {
            let line = AttackConfig::LossyLine { eta };
            let split = AttackConfig::BeamSplitters {
                eta1: eta,
                eta2: eta,
                k_policy: KPolicy::Optimal,
            };
            assert_close(line.eve_info_bits(&p), split.eve_info_bits(&p), 1e-12);
            assert_eq!(line.line_transmittances(), (eta, eta));
        }
    }

    #[test]
    fn attack_validation() {
        assert!(AttackConfig::None.validate().is_ok());
        assert!(AttackConfig::LossyLine { eta: 0.5 }.validate().is_ok());
        assert!(AttackConfig::LossyLine { eta: 1.5 }.validate().is_err());
        assert!(AttackConfig::BeamSplitters {
            eta1: -0.1,
            eta2: 0.5,
            k_policy: KPolicy::Optimal
        }
        .validate()
        .is_err());
        assert!(AttackConfig::BeamSplitters {
            eta1: 0.5,
            eta2: 0.5,
            k_policy: KPolicy::Fixed(f64::NAN)
        }
        .validate()
        .is_err());
    }
}
