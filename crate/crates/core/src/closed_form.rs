//! Exact SDOF responses and the explicit p=3 integrators, used both as the fast path
//! and as oracles for the general pipeline.

use crate::special_functions::{kummer_1f1, KUMMER_REL_TOL};
use crate::Result;

/// The three weighted-form coefficients of the p=3 damped step.
///
/// At c=0 they reduce to (2/(3h)+kh/10, −4/(3h)+2kh/15, 2/(3h)+kh/10).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiCoefficients {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

/// Ξ coefficients: the single interior row of the p=3 system under the e^{ct} weight.
pub fn xi_coefficients(h: f64, c: f64, k: f64) -> Result<XiCoefficients> {
    if c == 0.0 {
        let a = 2.0 / (3.0 * h) + k * h / 10.0;
        return Ok(XiCoefficients { xi1: a, xi2: -4.0 / (3.0 * h) + 2.0 * k * h / 15.0, xi3: a });
    }
    let ch = c * h;
    let f14 = kummer_1f1(1, 4, ch, KUMMER_REL_TOL)?;
    let f24 = kummer_1f1(2, 4, ch, KUMMER_REL_TOL)?;
    let f34 = kummer_1f1(3, 4, ch, KUMMER_REL_TOL)?;
    let f26 = kummer_1f1(2, 6, ch, KUMMER_REL_TOL)?;
    let f36 = kummer_1f1(3, 6, ch, KUMMER_REL_TOL)?;
    let f46 = kummer_1f1(4, 6, ch, KUMMER_REL_TOL)?;
    Ok(XiCoefficients {
        xi1: 2.0 / (3.0 * h) * (2.0 * f14 - f24) + k * h / 10.0 * f26,
        xi2: -4.0 / (3.0 * h) * (f14 - f24 + f34) + 2.0 * k * h / 15.0 * f36,
        xi3: -2.0 / (3.0 * h) * (f24 - 2.0 * f34) + k * h / 10.0 * f46,
    })
}

/// One p=3 undamped step. `force_term` is ∫ f·B_{2,3,h} over the step (time-shifted).
pub fn p3_undamped_step(x: f64, v: f64, h: f64, k: f64, force_term: f64) -> (f64, f64) {
    let kh2 = k * h * h;
    let den = 20.0 + 3.0 * kh2;
    let x1 = (30.0 * h * force_term + (20.0 - 7.0 * kh2) * x + 2.0 * (10.0 - kh2) * h * v) / den;
    let v1 = (60.0 * force_term - 20.0 * k * h * x + (20.0 - 7.0 * kh2) * v) / den;
    (x1, v1)
}

/// One p=3 damped step. `force_term` is ∫ e^{ct} f·B_{2,3,h} over the step.
pub fn p3_damped_step(
    x: f64,
    v: f64,
    h: f64,
    c: f64,
    k: f64,
    force_term: f64,
) -> Result<(f64, f64)> {
    let xi = xi_coefficients(h, c, k)?;
    let u3 = (force_term - (xi.xi1 + xi.xi2) * x - 0.5 * h * xi.xi2 * v) / xi.xi3;
    let x1 = u3;
    let u2 = 0.5 * h * v + x;
    let v1 = 2.0 / h * (u3 - u2);
    Ok((x1, v1))
}

/// Exact underdamped free response and its velocity at time t.
pub fn exact_free_response(c: f64, k: f64, x0: f64, v0: f64, t: f64) -> Result<(f64, f64)> {
    let disc = k - 0.25 * c * c;
    if disc <= 0.0 {
        return Err(crate::Error::InvalidInput(format!(
            "free-response oracle needs underdamping (c < 2√k), got c={c}, k={k}"
        )));
    }
    let wd = disc.sqrt();
    let a = x0;
    let b = (v0 + 0.5 * c * x0) / wd;
    let e = (-0.5 * c * t).exp();
    let (s, co) = (wd * t).sin_cos();
    let x = e * (a * co + b * s);
    let v = e * ((-0.5 * c * a + b * wd) * co + (-0.5 * c * b - a * wd) * s);
    Ok((x, v))
}

/// Exact zero-initial-condition response for the two analytic forcings of the p=3
/// error analysis (k = 1): constant f ≡ 1 with c = 0, and f = e^{−ct}.
pub enum ForcedKind {
    ConstantUndamped,
    ExponentialDecay,
}

pub fn exact_forced_response(c: f64, kind: ForcedKind, t: f64) -> Result<(f64, f64)> {
    match kind {
        ForcedKind::ConstantUndamped => Ok((1.0 - t.cos(), t.sin())),
        ForcedKind::ExponentialDecay => {
            let wd = (1.0 - 0.25 * c * c).sqrt();
            let e = (-c * t).exp();
            let eh = (-0.5 * c * t).exp();
            let (s, co) = (wd * t).sin_cos();
            let x = e - eh * (co - c / (2.0 * wd) * s);
            let v = -c * e
                - eh * (-0.5 * c * (co - c / (2.0 * wd) * s) + (-wd * s - 0.5 * c * co));
            Ok((x, v))
        }
    }
}

/// Mechanical energy ME = ½kx² + ½v².
pub fn mechanical_energy(x: f64, v: f64, k: f64) -> f64 {
    0.5 * k * x * x + 0.5 * v * v
}

/// Modified mechanical energy ME^c = e^{ct}·ME, the damped conservation diagnostic.
pub fn modified_mechanical_energy(x: f64, v: f64, k: f64, c: f64, t: f64) -> f64 {
    (c * t).exp() * mechanical_energy(x, v, k)
}

/// Time-rescaling to the k=1 normal form: a system (k, c) sampled with step h behaves
/// as (1, c/√k) with step h√k, with velocities scaled by √k.
pub fn rescale_to_unit_stiffness(k: f64, c: f64, h: f64) -> (f64, f64) {
    (c / k.sqrt(), h * k.sqrt())
}
