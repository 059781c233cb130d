//! Bernstein-basis algebra on `[0, h]`.
//!
//! Basis functions are indexed 1..=p (basis size p, polynomial degree p-1):
//!
//! ```text
//! B_{i,p,h}(t) = C(p-1, i-1) (t/h)^{i-1} ((h-t)/h)^{p-i},   t in [0, h]
//! ```
//!
//! and 0 outside the interval. Out-of-range indices denote the zero function (the
//! standing convention that keeps the derivative and elevation formulas uniform).
//! Coefficient vectors are stored 0-based; all formulas below are written with the
//! 1-based mathematical index.

use crate::special_functions::{binomial, kummer_1f1, rising_factorial, KUMMER_REL_TOL};
use crate::{Error, Result};

/// Polynomial in the Bernstein basis of size `p` on `[0, h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinPoly {
    pub h: f64,
    pub coeffs: Vec<f64>,
}

impl BernsteinPoly {
    pub fn new(h: f64, coeffs: Vec<f64>) -> Self {
        assert!(h > 0.0 && !coeffs.is_empty());
        BernsteinPoly { h, coeffs }
    }

    /// Basis size p (= degree + 1).
    pub fn p(&self) -> usize {
        self.coeffs.len()
    }

    /// Value at `t` by the de Casteljau convex-combination scheme; 0 outside [0,h].
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.h {
            return 0.0;
        }
        let lambda = t / self.h;
        let mut work = self.coeffs.clone();
        let mut m = work.len();
        while m > 1 {
            for j in 0..m - 1 {
                work[j] = (1.0 - lambda) * work[j] + lambda * work[j + 1];
            }
            m -= 1;
        }
        work[0]
    }

    /// Derivative value at `t`, via the derivative polynomial.
    pub fn eval_deriv(&self, t: f64) -> f64 {
        self.derivative().eval(t)
    }

    /// Same function one basis size up: B_{i,p} = ((p+1-i)/p) B_{i,p+1} + (i/p) B_{i+1,p+1}.
    pub fn elevate_degree(&self) -> BernsteinPoly {
        let p = self.p();
        let pf = p as f64;
        let mut g = vec![0.0; p + 1];
        for j in 1..=p + 1 {
            let mut v = 0.0;
            if j <= p {
                v += self.coeffs[j - 1] * (p + 1 - j) as f64 / pf;
            }
            if j >= 2 {
                v += self.coeffs[j - 2] * (j - 1) as f64 / pf;
            }
            g[j - 1] = v;
        }
        BernsteinPoly::new(self.h, g)
    }

    /// Elevate repeatedly until the basis size reaches `target_p`.
    pub fn elevate_to(&self, target_p: usize) -> BernsteinPoly {
        assert!(target_p >= self.p());
        let mut f = self.clone();
        while f.p() < target_p {
            f = f.elevate_degree();
        }
        f
    }

    /// d/dt in the size-(p-1) basis: Ḃ_{i,p,h} = ((p-1)/h)(B_{i-1,p-1,h} - B_{i,p-1,h}).
    pub fn derivative(&self) -> BernsteinPoly {
        let p = self.p();
        assert!(p >= 2, "derivative needs basis size >= 2");
        let scale = (p - 1) as f64 / self.h;
        let d: Vec<f64> = (0..p - 1)
            .map(|j| scale * (self.coeffs[j + 1] - self.coeffs[j]))
            .collect();
        BernsteinPoly::new(self.h, d)
    }

    /// ∫₀^t of the polynomial, one basis size up; coefficients are (h/p)-scaled
    /// prefix sums, which is the integral lemma applied term by term.
    pub fn antiderivative(&self) -> BernsteinPoly {
        let p = self.p();
        let scale = self.h / p as f64;
        let mut g = vec![0.0; p + 1];
        let mut acc = 0.0;
        for j in 1..=p {
            acc += self.coeffs[j - 1];
            g[j] = scale * acc;
        }
        BernsteinPoly::new(self.h, g)
    }
}

/// B_{i,p,h}(t) for a single basis function; 0 outside [0, h].
pub fn eval_basis(i: usize, p: usize, h: f64, t: f64) -> f64 {
    assert!(1 <= i && i <= p);
    if t < 0.0 || t > h {
        return 0.0;
    }
    let s = t / h;
    let norm = binomial((p - 1) as u64, (i - 1) as i64).expect("p <= 25 keeps binomials exact") as f64;
    norm * s.powi((i - 1) as i32) * (1.0 - s).powi((p - i) as i32)
}

/// The basis function B_{i,p,h} as a coefficient vector.
pub fn basis_poly(i: usize, p: usize, h: f64) -> BernsteinPoly {
    assert!(1 <= i && i <= p);
    let mut c = vec![0.0; p];
    c[i - 1] = 1.0;
    BernsteinPoly::new(h, c)
}

/// ∫₀^t B_{i,p,h} = (h/p) Σ_{j=i+1}^{p+1} B_{j,p+1,h}(t), returned as a polynomial.
pub fn antiderivative_basis(i: usize, p: usize, h: f64) -> BernsteinPoly {
    assert!(1 <= i && i <= p);
    let scale = h / p as f64;
    let mut c = vec![0.0; p + 1];
    for j in i + 1..=p + 1 {
        c[j - 1] = scale;
    }
    BernsteinPoly::new(h, c)
}

/// Product rule: B_{i,p} B_{j,q} = coeff · B_{i+j-1, p+q-1}. Returns (coeff, index, size).
pub fn product_basis(i: usize, p: usize, j: usize, q: usize) -> Result<(f64, usize, usize)> {
    let num = binomial((p - 1) as u64, (i - 1) as i64)? * binomial((q - 1) as u64, (j - 1) as i64)?;
    let den = binomial((p + q - 2) as u64, (i + j - 2) as i64)?;
    Ok((num as f64 / den as f64, i + j - 1, p + q - 1))
}

/// Moment rule: t^q B_{i,p,h} = h^q (i^(q)/p^(q)) B_{i+q, p+q, h}. Returns (coeff, index, size).
pub fn moment(i: usize, p: usize, h: f64, q: usize) -> Result<(f64, usize, usize)> {
    let num = rising_factorial(i as u64, q as u64)?;
    let den = rising_factorial(p as u64, q as u64)?;
    Ok((h.powi(q as i32) * num as f64 / den as f64, i + q, p + q))
}

/// Plain inner product ⟨B_{i,p}, B_{j,q}⟩ on [0,h]:
/// h·C(p-1,i-1)C(q-1,j-1) / ((p+q-1)·C(p+q-2,i+j-2)).
pub fn inner_l20(i: usize, p: usize, j: usize, q: usize, h: f64) -> Result<f64> {
    let num = binomial((p - 1) as u64, (i - 1) as i64)? as f64
        * binomial((q - 1) as u64, (j - 1) as i64)? as f64;
    let den = (p + q - 1) as f64 * binomial((p + q - 2) as u64, (i + j - 2) as i64)? as f64;
    Ok(h * num / den)
}

/// Exponentially weighted product ⟨B_{i,p}, B_{j,q}⟩_c = ∫₀^h e^{ct} B_i B_j
/// = inner_l20 · ₁F₁(i+j-1, p+q, ch).
pub fn inner_l2c(i: usize, p: usize, j: usize, q: usize, h: f64, c: f64) -> Result<f64> {
    let base = inner_l20(i, p, j, q, h)?;
    if c == 0.0 {
        return Ok(base);
    }
    Ok(base * kummer_1f1((i + j - 1) as u32, (p + q) as u32, c * h, KUMMER_REL_TOL)?)
}

/// ∫₀^h e^{ct} B_{i,p,h} dt = (h/p) ₁F₁(i, p+1, ch).
pub fn exp_weighted_integral(i: usize, p: usize, h: f64, c: f64) -> Result<f64> {
    if c == 0.0 {
        return Ok(h / p as f64);
    }
    Ok(h / p as f64 * kummer_1f1(i as u32, (p + 1) as u32, c * h, KUMMER_REL_TOL)?)
}

/// ∫₀^h ∫₀^t e^{cτ} B_{i,p,h}(τ) dτ dt = h² (p-i+1)/(p(p+1)) ₁F₁(i, p+2, ch).
pub fn exp_weighted_double_integral(i: usize, p: usize, h: f64, c: f64) -> Result<f64> {
    let base = h * h * (p - i + 1) as f64 / (p as f64 * (p + 1) as f64);
    if c == 0.0 {
        return Ok(base);
    }
    Ok(base * kummer_1f1(i as u32, (p + 2) as u32, c * h, KUMMER_REL_TOL)?)
}

/// Cap on extra degrees taken by the truncated exponential product.
pub const EXP_TIMES_DEGREE_CAP: usize = 60;

const EXP_TIMES_TOL: f64 = 1e-14;

/// e^{ct} B_{i,p,h} as a truncated series Σ_n ((ch)^n/n!)(i^(n)/p^(n)) B_{i+n,p+n,h},
/// every term elevated to the common final size.
///
/// Truncates once the next coefficient drops below 1e-14 of the accumulated
/// coefficient mass; errors out if that never happens within the degree cap.
pub fn exp_times_bernstein(i: usize, p: usize, h: f64, c: f64) -> Result<BernsteinPoly> {
    assert!(1 <= i && i <= p);
    if c == 0.0 {
        return Ok(basis_poly(i, p, h));
    }
    let ch = c * h;
    // First pass: coefficients a_n and the truncation point.
    let mut terms = vec![1.0f64];
    let mut a = 1.0f64;
    let mut mass = 1.0f64;
    let mut n = 0usize;
    loop {
        let nf = n as f64;
        let next = a * ch / (nf + 1.0) * (i as f64 + nf) / (p as f64 + nf);
        if next.abs() < EXP_TIMES_TOL * mass {
            break;
        }
        if n + 1 > EXP_TIMES_DEGREE_CAP {
            return Err(Error::TruncationFailure { p, ch, cap: EXP_TIMES_DEGREE_CAP });
        }
        a = next;
        mass += a.abs();
        terms.push(a);
        n += 1;
    }
    let final_p = p + terms.len() - 1;
    let mut out = vec![0.0f64; final_p];
    for (n, &a_n) in terms.iter().enumerate() {
        let term = basis_poly(i + n, p + n, h).elevate_to(final_p);
        for (o, t) in out.iter_mut().zip(&term.coeffs) {
            *o += a_n * t;
        }
    }
    Ok(BernsteinPoly::new(h, out))
}

/// e^{ct} f(t) for an arbitrary Bernstein polynomial, term by term over the basis,
/// aligned to one common size.
pub fn exp_times_poly(f: &BernsteinPoly, c: f64) -> Result<BernsteinPoly> {
    if c == 0.0 {
        return Ok(f.clone());
    }
    let p = f.p();
    let mut parts: Vec<(f64, BernsteinPoly)> = Vec::with_capacity(p);
    let mut final_p = p;
    for i in 1..=p {
        if f.coeffs[i - 1] == 0.0 {
            continue;
        }
        let g = exp_times_bernstein(i, p, f.h, c)?;
        final_p = final_p.max(g.p());
        parts.push((f.coeffs[i - 1], g));
    }
    let mut out = vec![0.0f64; final_p];
    for (w, g) in parts {
        let g = g.elevate_to(final_p);
        for (o, t) in out.iter_mut().zip(&g.coeffs) {
            *o += w * t;
        }
    }
    Ok(BernsteinPoly::new(f.h, out))
}
