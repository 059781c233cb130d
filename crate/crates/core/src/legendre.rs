//! Normalized shifted Legendre expansions on `[0, h]`, the Bernstein→Legendre change
//! of basis, tail projections, and the coefficient-decay exponent study.
//!
//! The expansion basis is `ψ_m(t) = √(2m+1) · L_m(2t/h − 1)`, so every `ψ_m` has
//! squared norm `h` on `[0, h]` and `‖f‖² = h · Σ coeffs²`. Because both bases are
//! scale-invariant in `t/h`, the change-of-basis matrix depends on the basis size
//! only, never on `h`.

use crate::bernstein::{inner_l20, BernsteinPoly};
use crate::dd::Dd;
use crate::special_functions::binomial_f64;

/// Expansion over the normalized shifted Legendre basis on [0, h].
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreExpansion {
    pub h: f64,
    /// Entry m = coefficient of ψ_m, m starting at 0.
    pub coeffs: Vec<f64>,
}

impl LegendreExpansion {
    pub fn new(h: f64, coeffs: Vec<f64>) -> Self {
        assert!(h > 0.0);
        LegendreExpansion { h, coeffs }
    }

    /// Squared L² norm on [0, h].
    pub fn norm_sq(&self) -> f64 {
        self.h * self.coeffs.iter().map(|c| c * c).sum::<f64>()
    }

    /// Squared norm of the degree range `[from, ..]`.
    pub fn norm_sq_from(&self, from: usize) -> f64 {
        if from >= self.coeffs.len() {
            return 0.0;
        }
        self.h * self.coeffs[from..].iter().map(|c| c * c).sum::<f64>()
    }

    /// Value at t, summing ψ_m(t) by the Legendre recurrence.
    pub fn eval(&self, t: f64) -> f64 {
        let x = 2.0 * t / self.h - 1.0;
        let mut p0 = 1.0;
        let mut p1 = x;
        let mut s = 0.0;
        for (m, &c) in self.coeffs.iter().enumerate() {
            let pm = match m {
                0 => 1.0,
                1 => x,
                _ => {
                    let j = (m - 1) as f64;
                    let p2 = ((2.0 * j + 1.0) * x * p1 - j * p0) / (j + 1.0);
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            s += c * (2.0 * m as f64 + 1.0).sqrt() * pm;
        }
        s
    }
}

/// Shifted Legendre polynomial L̃_m(x) = L_m(2x−1) on [0, 1] (unnormalized).
pub fn shifted_legendre_eval(m: usize, x: f64) -> f64 {
    let y = 2.0 * x - 1.0;
    let mut p0 = 1.0;
    let mut p1 = y;
    if m == 0 {
        return 1.0;
    }
    for j in 1..m {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * y * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Change-of-basis matrix from a Bernstein basis of size p to normalized shifted
/// Legendre coefficients.
#[derive(Debug, Clone)]
pub struct BernLegMatrix {
    pub p: usize,
    /// Row i-1 holds the Legendre coefficients (m = 0..p-1) of B_{i,p,1}.
    entries: Vec<f64>,
}

impl BernLegMatrix {
    #[inline]
    pub fn entry(&self, i: usize, m: usize) -> f64 {
        self.entries[(i - 1) * self.p + m]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[(i - 1) * self.p..i * self.p]
    }
}

/// Λ⁻¹_{im}(p) = (√(2m+1)/(p+m)) C(p-1,i-1) Σ_q (−1)^{m+q} C(m,q)² / C(p+m-1, i+q-1).
///
/// The alternating sum loses up to ~30 digits to cancellation near m = p-1 for
/// large p; terms are therefore maintained in double-double precision through the
/// exact small-integer ratio recurrence
/// term_{q+1}/term_q = ((m-q)/(q+1))² (i+q)/(p+m-i-q), term_0 = 1/C(p+m-1, i-1).
pub fn bernstein_to_legendre(p: usize) -> BernLegMatrix {
    assert!(p >= 1);
    let mut entries = vec![0.0f64; p * p];
    for i in 1..=p {
        let ci = binomial_f64((p - 1) as u64, (i - 1) as i64);
        for m in 0..p {
            // term_0 = 1/C(p+m-1, i-1) as a dd product of exact integer factors.
            let n = p + m - 1;
            let r = i - 1;
            let mut term = Dd::from(1.0);
            for j in 1..=r {
                term = term.mul_f64(j as f64).div_f64((n - r + j) as f64);
            }
            let mut sum = Dd::ZERO;
            let sign0 = if m % 2 == 0 { 1.0 } else { -1.0 };
            let mut sign = sign0;
            for q in 0..=m {
                sum = sum.add(term.mul_f64(sign));
                sign = -sign;
                if q < m {
                    let num = ((m - q) * (m - q)) as f64 * (i + q) as f64;
                    let den = ((q + 1) * (q + 1)) as f64 * (p + m - i - q) as f64;
                    term = term.mul_f64(num).div_f64(den);
                }
            }
            let scale = (2.0 * m as f64 + 1.0).sqrt() / (p + m) as f64 * ci;
            entries[(i - 1) * p + m] = scale * sum.to_f64();
        }
    }
    BernLegMatrix { p, entries }
}

/// Change of basis for a full polynomial: û_m = Σ_i coeffs_i Λ⁻¹_{im}(p).
pub fn to_legendre(f: &BernsteinPoly) -> LegendreExpansion {
    to_legendre_with(f, &bernstein_to_legendre(f.p()))
}

/// Same, reusing a prebuilt matrix (the study loops convert many polynomials of one size).
pub fn to_legendre_with(f: &BernsteinPoly, lam: &BernLegMatrix) -> LegendreExpansion {
    let p = f.p();
    assert_eq!(lam.p, p);
    let mut out = vec![0.0f64; p];
    for i in 1..=p {
        let w = f.coeffs[i - 1];
        if w == 0.0 {
            continue;
        }
        for (o, l) in out.iter_mut().zip(lam.row(i)) {
            *o += w * l;
        }
    }
    LegendreExpansion::new(f.h, out)
}

/// Orthogonal projection onto the complement of zero-mean polynomials of degree
/// ≤ p−2: zeroes the mean and the degrees 1..p−2, keeps everything from p−1 up.
pub fn tail_projection(f: &LegendreExpansion, p: usize) -> LegendreExpansion {
    let mut coeffs = f.coeffs.clone();
    let cut = (p - 1).min(coeffs.len());
    for c in coeffs.iter_mut().take(cut) {
        *c = 0.0;
    }
    LegendreExpansion::new(f.h, coeffs)
}

/// Coefficient-decay exponent s(p,m) = max_i (log|Λ⁻¹_{im}| − log‖B_{i,p,1} − 1/p‖) / log p,
/// where ‖B − 1/p‖² = ‖B‖² − 1/p² is the homogeneous (mean-removed) norm.
pub fn coefficient_exponent(p: usize, m: usize) -> f64 {
    let lam = bernstein_to_legendre(p);
    let mut best = f64::NEG_INFINITY;
    for i in 1..=p {
        let norm_sq = inner_l20(i, p, i, p, 1.0).unwrap() - 1.0 / (p * p) as f64;
        let s = (lam.entry(i, m).abs().ln() - 0.5 * norm_sq.ln()) / (p as f64).ln();
        best = best.max(s);
    }
    best
}

/// Rows (p, m, s(p,m)) for m ∈ {p−1, p−2, ⌊p/2⌋} over an inclusive p range.
pub fn coefficient_exponent_study(p_min: usize, p_max: usize) -> Vec<(usize, usize, f64)> {
    assert!(3 <= p_min && p_min <= p_max && p_max <= 25);
    let mut rows = Vec::new();
    for p in p_min..=p_max {
        for m in [p - 1, p - 2, p / 2] {
            rows.push((p, m, coefficient_exponent(p, m)));
        }
    }
    rows
}
