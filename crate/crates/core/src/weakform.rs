//! Step assembly and the step-by-step solver: system matrix, right-hand sides,
//! the three-stage per-step solve, and multi-step trajectories with C¹ gluing.

use crate::bernstein::{eval_basis, exp_weighted_integral, inner_l2c, BernsteinPoly};
use crate::linalg::LuFactors;
use crate::quadrature::{gauss_legendre, integrate_with};
use crate::{Error, Result};

/// Condition-number ceiling for the per-step system factorization.
const COND_LIMIT: f64 = 1e14;

/// A damped oscillator ẍ + cẋ + kx = f with unit mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdofSystem {
    pub c: f64,
    pub k: f64,
}

impl SdofSystem {
    pub fn new(c: f64, k: f64) -> Result<SdofSystem> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidInput(format!("damping must be finite and ≥ 0, got {c}")));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidInput(format!("stiffness must be finite and > 0, got {k}")));
        }
        Ok(SdofSystem { c, k })
    }

    /// Natural period 2π/√k.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.k.sqrt()
    }

    /// Damped angular frequency √(k − (c/2)²), if the system is underdamped.
    pub fn damped_frequency(&self) -> Option<f64> {
        let d = self.k - 0.25 * self.c * self.c;
        (d > 0.0).then(|| d.sqrt())
    }
}

/// Force models. Piecewise variants carry one value per step of length h; the
/// exponential one decays at the system damping rate, so on step j the force is
/// a_j·e^{−c(t−jh)}.
#[derive(Debug, Clone, PartialEq)]
pub enum Excitation {
    Zero,
    Constant(f64),
    PiecewiseConstant { values: Vec<f64> },
    PiecewiseExponential { amplitudes: Vec<f64> },
    /// amplitude · sin(omega·t + phase) in global time.
    Harmonic { amplitude: f64, omega: f64, phase: f64 },
    /// Linear interpolation through (times, values); times strictly increasing.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl Excitation {
    pub fn validate(&self) -> Result<()> {
        match self {
            Excitation::Tabulated { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(Error::InvalidInput(
                        "tabulated force needs equally many times and values (at least 2)".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidInput(
                        "tabulated force times must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn tabulated_eval(times: &[f64], values: &[f64], t: f64) -> f64 {
        // Coverage is checked by the caller; clamp guards roundoff at the ends.
        let n = times.len();
        if t <= times[0] {
            return values[0];
        }
        if t >= times[n - 1] {
            return values[n - 1];
        }
        let idx = times.partition_point(|&s| s <= t);
        let (t0, t1) = (times[idx - 1], times[idx]);
        let w = (t - t0) / (t1 - t0);
        values[idx - 1] * (1.0 - w) + values[idx] * w
    }
}

/// Initial data of one step: index and starting displacement/velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    pub j: usize,
    pub x: f64,
    pub v: f64,
}

/// Interior rows of the weak-form system: the (p−2)×p matrix with entries
/// −⟨Ḃ_i, Ḃ_j⟩_c + k⟨B_i, B_j⟩_c for 2 ≤ i ≤ p−1, 1 ≤ j ≤ p. Row-major.
pub fn assemble_b(p: usize, h: f64, c: f64, k: f64) -> Result<Vec<f64>> {
    assert!(p >= 3, "need p >= 3, got {p}");
    let mut b = vec![0.0; (p - 2) * p];
    let scale = (p as f64 - 1.0) / h;
    for i in 2..=p - 1 {
        for j in 1..=p {
            // Ḃ_{i,p} = ((p−1)/h)(B_{i−1,p−1} − B_{i,p−1}) with out-of-range terms dropped.
            let mut dd = 0.0;
            for (a, sa) in [(i - 1, 1.0), (i, -1.0)] {
                if a < 1 || a > p - 1 {
                    continue;
                }
                for (bb, sb) in [(j - 1, 1.0), (j, -1.0)] {
                    if bb < 1 || bb > p - 1 {
                        continue;
                    }
                    dd += sa * sb * inner_l2c(a, p - 1, bb, p - 1, h, c)?;
                }
            }
            let mass = inner_l2c(i, p, j, p, h, c)?;
            b[(i - 2) * p + (j - 1)] = -scale * scale * dd + k * mass;
        }
    }
    Ok(b)
}

/// Full p×p step system: two initial-condition rows [[1,0,…],[−(p−1)/h,(p−1)/h,0,…]]
/// on top of `assemble_b`. Row-major.
pub fn assemble_bb(p: usize, h: f64, c: f64, k: f64) -> Result<Vec<f64>> {
    assert!(p >= 3, "need p >= 3, got {p}");
    let mut bb = vec![0.0; p * p];
    bb[0] = 1.0;
    bb[p] = -(p as f64 - 1.0) / h;
    bb[p + 1] = (p as f64 - 1.0) / h;
    let b = assemble_b(p, h, c, k)?;
    bb[2 * p..].copy_from_slice(&b);
    Ok(bb)
}

/// Weighted loads ⟨f(·+jh), B_i⟩_c for the interior test functions i = 2..p−1.
pub fn force_vector(
    excitation: &Excitation,
    system: &SdofSystem,
    p: usize,
    h: f64,
    j: usize,
) -> Result<Vec<f64>> {
    assert!(p >= 3, "need p >= 3, got {p}");
    excitation.validate()?;
    let c = system.c;
    let step_value = |values: &[f64]| -> Result<f64> {
        values.get(j).copied().ok_or(Error::ExcitationCoverage {
            step: j,
            t0: j as f64 * h,
            t1: (j + 1) as f64 * h,
        })
    };
    match excitation {
        Excitation::Zero => Ok(vec![0.0; p - 2]),
        Excitation::Constant(a) => {
            (2..=p - 1).map(|i| Ok(a * exp_weighted_integral(i, p, h, c)?)).collect()
        }
        Excitation::PiecewiseConstant { values } => {
            let a = step_value(values)?;
            (2..=p - 1).map(|i| Ok(a * exp_weighted_integral(i, p, h, c)?)).collect()
        }
        Excitation::PiecewiseExponential { amplitudes } => {
            // The e^{ct} weight cancels the decay exactly: each entry is a_j·h/p.
            let a = step_value(amplitudes)?;
            Ok(vec![a * h / p as f64; p - 2])
        }
        Excitation::Harmonic { amplitude, omega, phase } => {
            let f = |t: f64| amplitude * (omega * t + phase).sin();
            quadrature_loads(p, h, c, j, f)
        }
        Excitation::Tabulated { times, values } => {
            let (t0, t1) = (j as f64 * h, (j + 1) as f64 * h);
            let eps = 1e-12 * h;
            if times[0] > t0 + eps || times[times.len() - 1] < t1 - eps {
                return Err(Error::ExcitationCoverage { step: j, t0, t1 });
            }
            let f = |t: f64| Excitation::tabulated_eval(times, values, t);
            quadrature_loads(p, h, c, j, f)
        }
    }
}

fn quadrature_loads<F: Fn(f64) -> f64>(
    p: usize,
    h: f64,
    c: f64,
    j: usize,
    f: F,
) -> Result<Vec<f64>> {
    let n = (p + 8).max(24);
    let (nodes, weights) = gauss_legendre(n);
    let offset = j as f64 * h;
    Ok((2..=p - 1)
        .map(|i| {
            integrate_with(
                |tau| (c * tau).exp() * f(offset + tau) * eval_basis(i, p, h, tau),
                0.0,
                h,
                &nodes,
                &weights,
            )
        })
        .collect())
}

/// Factored step system, built once per (system, p, h) and reused across steps.
pub struct StepSolver {
    p: usize,
    h: f64,
    /// First two columns of the interior block, (p−2)×2 row-major.
    b1: Vec<f64>,
    /// Factorization of the remaining (p−2)×(p−2) block.
    lu: LuFactors,
    system: SdofSystem,
}

impl StepSolver {
    pub fn new(system: &SdofSystem, p: usize, h: f64) -> Result<StepSolver> {
        if p < 3 {
            return Err(Error::InvalidInput(format!("need p >= 3, got {p}")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidInput(format!("need finite h > 0, got {h}")));
        }
        let b = assemble_b(p, h, system.c, system.k)?;
        let m = p - 2;
        let mut b1 = vec![0.0; m * 2];
        let mut b2 = vec![0.0; m * m];
        for r in 0..m {
            b1[r * 2] = b[r * p];
            b1[r * 2 + 1] = b[r * p + 1];
            b2[r * m..(r + 1) * m].copy_from_slice(&b[r * p + 2..(r + 1) * p]);
        }
        let lu = LuFactors::factor(&b2, m, "step system interior block", COND_LIMIT)?;
        Ok(StepSolver { p, h, b1, lu, system: *system })
    }

    pub fn condition_estimate(&self) -> f64 {
        self.lu.cond()
    }

    /// Solve one step: u₁ and u₂ from the initial data, the rest from the interior rows.
    pub fn solve(&self, state: &StepState, excitation: &Excitation) -> Result<Vec<f64>> {
        let (p, h) = (self.p, self.h);
        let u1 = state.x;
        let u2 = h / (p as f64 - 1.0) * state.v + state.x;
        let mut rhs = force_vector(excitation, &self.system, p, h, state.j)?;
        for r in 0..p - 2 {
            rhs[r] -= u1 * self.b1[r * 2] + u2 * self.b1[r * 2 + 1];
        }
        let tail = self.lu.solve(&rhs);
        let mut u = Vec::with_capacity(p);
        u.push(u1);
        u.push(u2);
        u.extend_from_slice(&tail);
        Ok(u)
    }
}

/// One-shot variant of [`StepSolver::solve`].
pub fn solve_step(
    state: &StepState,
    system: &SdofSystem,
    excitation: &Excitation,
    p: usize,
    h: f64,
) -> Result<Vec<f64>> {
    StepSolver::new(system, p, h)?.solve(state, excitation)
}

/// End-of-step displacement and velocity from the coefficient vector.
pub fn step_outputs(u: &[f64], p: usize, h: f64) -> (f64, f64) {
    debug_assert_eq!(u.len(), p);
    let x_end = u[p - 1];
    let v_end = (p as f64 - 1.0) / h * (u[p - 1] - u[p - 2]);
    (x_end, v_end)
}

/// A completed multi-step run: per-step Bernstein coefficients plus the state sequence.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub p: usize,
    pub h: f64,
    pub l: usize,
    /// l rows of p coefficients.
    pub coeffs: Vec<Vec<f64>>,
    /// l+1 entries: the start of every step and the final state.
    pub states: Vec<StepState>,
}

impl Trajectory {
    pub fn final_state(&self) -> StepState {
        *self.states.last().unwrap()
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let j = ((t / self.h).floor() as usize).min(self.l - 1);
        (j, t - j as f64 * self.h)
    }

    /// Displacement at global time t ∈ [0, l·h].
    pub fn eval(&self, t: f64) -> f64 {
        let (j, tau) = self.locate(t);
        BernsteinPoly::new(self.h, self.coeffs[j].clone()).eval(tau)
    }

    /// Velocity at global time t ∈ [0, l·h].
    pub fn eval_deriv(&self, t: f64) -> f64 {
        let (j, tau) = self.locate(t);
        BernsteinPoly::new(self.h, self.coeffs[j].clone()).eval_deriv(tau)
    }
}

/// Run l steps from (x0, v0), reusing one factorization throughout.
pub fn simulate(
    system: &SdofSystem,
    excitation: &Excitation,
    x0: f64,
    v0: f64,
    p: usize,
    h: f64,
    l: usize,
) -> Result<Trajectory> {
    if l < 1 {
        return Err(Error::InvalidInput(format!("need l >= 1 steps, got {l}")));
    }
    if !x0.is_finite() || !v0.is_finite() {
        return Err(Error::InvalidInput(format!("initial data must be finite, got ({x0}, {v0})")));
    }
    let solver = StepSolver::new(system, p, h)?;
    let mut coeffs = Vec::with_capacity(l);
    let mut states = Vec::with_capacity(l + 1);
    let mut state = StepState { j: 0, x: x0, v: v0 };
    states.push(state);
    for j in 0..l {
        let u = solver
            .solve(&state, excitation)
            .map_err(|e| Error::StepFailed { step: j, source: Box::new(e) })?;
        let (x, v) = step_outputs(&u, p, h);
        coeffs.push(u);
        state = StepState { j: j + 1, x, v };
        states.push(state);
    }
    Ok(Trajectory { p, h, l, coeffs, states })
}
