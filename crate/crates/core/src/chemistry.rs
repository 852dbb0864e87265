//! Precipitation and dissolution of a single mineral, and the porosity and
//! aperture changes it causes.

use crate::error::SimError;
use crate::params::ChemistryCoefficients;

/// Lower bound for the porosity after an update.
pub const POROSITY_MIN: f64 = 1e-6;
/// Upper bound for the porosity after an update.
pub const POROSITY_MAX: f64 = 1.0 - 1e-9;
/// Largest sub-step as a fraction of the reaction time scale.
const SUBSTEP_FRACTION: f64 = 0.1;

/// Rate coefficient `A exp(-E / theta)`. Zero for `theta <= 0`, which is the
/// limit of the law as the temperature drops to zero.
pub fn rate_coefficient(theta: f64, chem: &ChemistryCoefficients) -> f64 {
    if theta > 0.0 {
        chem.rate_prefactor * (-chem.activation_energy / theta).exp()
    } else {
        0.0
    }
}

/// Net precipitation rate. With precipitate present it is
/// `lambda (u^2 / u_e^2 - 1)`; without it, `lambda u^2 / u_e^2`.
pub fn reaction_rate(u: f64, w: f64, theta: f64, chem: &ChemistryCoefficients) -> Result<f64, SimError> {
    if !(theta > 0.0) {
        return Err(SimError::InvalidParameter(format!(
            "temperature must be positive, got {theta}"
        )));
    }
    let lambda = rate_coefficient(theta, chem);
    let s = (u / chem.equilibrium_concentration).powi(2);
    Ok(if w > 0.0 { lambda * (s - 1.0) } else { lambda * s })
}

/// Outcome of [`react_cell`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reacted {
    pub solute: f64,
    pub precipitate: f64,
    pub substeps: usize,
}

/// Integrates `du/dt = -r`, `dw/dt = r` over `dt` with explicit sub-steps.
///
/// When the precipitate would become negative inside a sub-step the step is
/// cut at the crossing. With no precipitate and an undersaturated solution the
/// dissolution and precipitation branches point against each other and `w`
/// stays at zero.
pub fn react_cell(u: f64, w: f64, theta: f64, dt: f64, chem: &ChemistryCoefficients) -> Reacted {
    let lambda = rate_coefficient(theta, chem);
    let ue = chem.equilibrium_concentration;
    let (mut u, mut w) = (u, w.max(0.0));
    let mut left = dt;
    let mut substeps = 0;
    if lambda == 0.0 || dt <= 0.0 {
        return Reacted {
            solute: u,
            precipitate: w,
            substeps,
        };
    }
    while left > 0.0 {
        let excess = (u / ue).powi(2) - 1.0;
        let r = if w > 0.0 {
            lambda * excess
        } else {
            (lambda * excess).max(0.0)
        };
        if r == 0.0 {
            break;
        }
        substeps += 1;
        let mut h = left.min(SUBSTEP_FRACTION * ue * ue / (lambda * u.max(ue)));
        if w + r * h < 0.0 {
            h = -w / r;
            u += w;
            w = 0.0;
        } else {
            u -= r * h;
            w += r * h;
        }
        left -= h;
        if left < dt * 1e-15 {
            break;
        }
    }
    Reacted {
        solute: u.max(0.0),
        precipitate: w,
        substeps,
    }
}

/// Applies the invariant `s (1 + eta w) = const` to a porosity or aperture.
fn invariant_update(old: f64, w_old: f64, w_new: f64, eta: f64) -> f64 {
    old * (1.0 + eta * w_old) / (1.0 + eta * w_new)
}

/// New porosity and whether it had to be clamped into
/// `[POROSITY_MIN, POROSITY_MAX]`.
pub fn update_porosity(phi: f64, w_old: f64, w_new: f64, eta: f64) -> (f64, bool) {
    let p = invariant_update(phi, w_old, w_new, eta);
    let c = p.clamp(POROSITY_MIN, POROSITY_MAX);
    (c, c != p)
}

/// New aperture and whether it had to be clamped to zero.
pub fn update_aperture(eps: f64, w_old: f64, w_new: f64, eta: f64) -> (f64, bool) {
    let e = invariant_update(eps, w_old, w_new, eta);
    if e < 0.0 {
        (0.0, true)
    } else {
        (e, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn chem() -> ChemistryCoefficients {
        ChemistryCoefficients::default()
    }

    #[test]
    fn rate_law_examples() {
        let c = chem();
        assert_eq!(reaction_rate(1.0, 0.3, 1.5, &c).unwrap(), 0.0);
        assert_eq!(reaction_rate(0.0, 0.0, 1.5, &c).unwrap(), 0.0);
        assert_abs_diff_eq!(
            reaction_rate(2.0, 0.3, 1.5, &c).unwrap(),
            30.0 * (-8.0f64 / 3.0).exp(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(reaction_rate(2.0, 0.3, 1.5, &c).unwrap(), 2.084504, epsilon = 1e-6);
        assert!(reaction_rate(2.0, 0.3, 0.0, &c).is_err());
        assert!(reaction_rate(2.0, 0.3, -1.0, &c).is_err());
        assert_abs_diff_eq!(rate_coefficient(1.5, &c), 0.694835, epsilon = 1e-6);
        assert_eq!(rate_coefficient(0.0, &c), 0.0);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let r = react_cell(1.0, 0.3, 1.5, 0.1, &chem());
        assert_eq!((r.solute, r.precipitate), (1.0, 0.3));
    }

    #[test]
    fn dissolution_starts_at_rate_lambda() {
        let c = chem();
        let dt = 1e-4;
        let r = react_cell(0.0, 0.3, 1.5, dt, &c);
        let rate = (0.3 - r.precipitate) / dt;
        assert_abs_diff_eq!(rate, 0.694835, epsilon = 1e-6);
    }

    #[test]
    fn precipitate_runs_out_at_the_located_event() {
        let c = chem();
        let dt = 0.02;
        let lambda = rate_coefficient(1.5, &c);
        let w0 = lambda * dt / 2.0;
        // The rate is -lambda (1 - u^2) rather than exactly -lambda, so the
        // crossing is at dt / 2 up to O(u^2).
        let half = react_cell(0.0, w0, 1.5, dt / 2.0, &c);
        assert!(half.precipitate.abs() < 1e-4 * w0);
        let full = react_cell(0.0, w0, 1.5, dt, &c);
        assert_eq!(full.precipitate, 0.0);
        assert_abs_diff_eq!(full.solute, w0, epsilon = 1e-15);
        // Brute force reference with tiny explicit steps.
        let (mut u, mut w) = (0.0f64, w0);
        let n = 200_000;
        for _ in 0..n {
            let r = if w > 0.0 { lambda * (u * u - 1.0) } else { 0.0 };
            let h = dt / n as f64;
            let d = (r * h).max(-w);
            u -= d;
            w += d;
        }
        assert_abs_diff_eq!(u, full.solute, epsilon = 1e-9);
    }

    #[test]
    fn porosity_and_aperture_updates() {
        assert_eq!(update_porosity(0.2, 0.3, 0.3, 0.5), (0.2, false));
        let (p, clamped) = update_porosity(0.2, 0.3, 0.4, 0.5);
        assert_abs_diff_eq!(p, 0.2 * 1.15 / 1.2, epsilon = 1e-15);
        assert!(!clamped);
        assert!(update_aperture(1e-2, 0.3, 0.1, 2.0).0 > 1e-2);
        assert!(update_porosity(0.9, 2.0, 0.0, 0.5).1);
        // Fine-step integration of d phi / dt = -eta d(phi w) / dt.
        let (mut phi, n) = (0.2f64, 100_000);
        let eta = 0.5;
        for k in 0..n {
            let (wa, wb) = (0.3 + 0.1 * k as f64 / n as f64, 0.3 + 0.1 * (k + 1) as f64 / n as f64);
            phi -= eta * phi * (wb - wa) / (1.0 + eta * wb);
        }
        assert_abs_diff_eq!(phi, p, epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn reaction_keeps_precipitate_and_moles(
            u in 0.0f64..4.0,
            w in 0.0f64..2.0,
            theta in -0.5f64..3.0,
            dt in 1e-4f64..0.5,
        ) {
            let r = react_cell(u, w, theta, dt, &chem());
            prop_assert!(r.precipitate >= 0.0);
            prop_assert!(r.solute >= 0.0);
            prop_assert!(((r.solute + r.precipitate) - (u + w)).abs() <= 1e-10 * (1.0 + u + w));
        }

        #[test]
        fn porosity_moves_against_precipitate(phi in 0.01f64..0.9, wa in 0.0f64..2.0, wb in 0.0f64..2.0) {
            let (p, _) = update_porosity(phi, wa, wb, 0.5);
            if wb > wa { prop_assert!(p < phi); }
            if wb < wa { prop_assert!(p > phi); }
        }
    }
}
