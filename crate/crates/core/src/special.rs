//! Spherical Bessel/Hankel radial functions, complex spherical harmonics and
//! the `(n, m)` linear indexing shared by every coefficient vector.
//!
//! Conventions: complex orthonormal harmonics with the Condon–Shortley phase,
//! `θ` is the colatitude measured from +z and `φ` the azimuth from +x.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Spherical-harmonic order `n` and degree `m`, `|m| <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrderDegree {
    pub n: u32,
    pub m: i32,
}

impl OrderDegree {
    pub fn new(n: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > n {
            return Err(invalid(
                "m",
                format!("|m| = {} exceeds order n = {n}", m.abs()),
            ));
        }
        Ok(Self { n, m })
    }

    /// Linear index `n² + n + m`.
    pub fn index(self) -> usize {
        let n = self.n as i64;
        (n * n + n + self.m as i64) as usize
    }

    pub fn from_index(i: usize) -> Self {
        let n = (i as f64).sqrt().floor() as u32;
        // guard against rounding in the square root
        let n = if (n as usize + 1) * (n as usize + 1) <= i {
            n + 1
        } else if (n as usize) * (n as usize) > i {
            n - 1
        } else {
            n
        };
        let m = i as i64 - (n as i64) * (n as i64) - n as i64;
        Self { n, m: m as i32 }
    }

    /// All pairs up to `order` in linear-index order.
    pub fn iter(order: u32) -> impl Iterator<Item = OrderDegree> {
        (0..=order).flat_map(|n| (-(n as i32)..=n as i32).map(move |m| OrderDegree { n, m }))
    }
}

/// Number of coefficients `(N + 1)²` of an order-`N` expansion.
pub fn num_coeffs(order: u32) -> usize {
    let n = order as usize + 1;
    n * n
}

fn check_x(x: f64, allow_zero: bool) -> Result<()> {
    if !x.is_finite() {
        return Err(invalid("x", "argument must be finite"));
    }
    if x < 0.0 || (!allow_zero && x == 0.0) {
        let bound = if allow_zero { ">= 0" } else { "> 0" };
        return Err(invalid("x", format!("argument {x} must be {bound}")));
    }
    Ok(())
}

/// `j_n(x)` for a single order.
pub fn sph_bessel_j(n: u32, x: f64) -> Result<f64> {
    check_x(x, true)?;
    Ok(bessel_j_table(n, x)[n as usize])
}

/// `j_0(x) ..= j_nmax(x)`.
pub fn sph_bessel_j_all(nmax: u32, x: f64) -> Result<Vec<f64>> {
    check_x(x, true)?;
    Ok(bessel_j_table(nmax, x))
}

/// `y_0(x) ..= y_nmax(x)`.
pub fn sph_bessel_y_all(nmax: u32, x: f64) -> Result<Vec<f64>> {
    check_x(x, false)?;
    Ok(bessel_y_table(nmax, x))
}

/// `h_n^(2)(x) = j_n(x) − i·y_n(x)`.
pub fn sph_hankel2(n: u32, x: f64) -> Result<Complex64> {
    check_x(x, false)?;
    Ok(hankel2_table(n, x)[n as usize])
}

/// `h_0^(2)(x) ..= h_nmax^(2)(x)`.
pub fn sph_hankel2_all(nmax: u32, x: f64) -> Result<Vec<Complex64>> {
    check_x(x, false)?;
    Ok(hankel2_table(nmax, x))
}

/// Derivative of `h_n^(2)` with respect to its argument.
pub fn sph_hankel2_deriv(n: u32, x: f64) -> Result<Complex64> {
    check_x(x, false)?;
    Ok(hankel2_deriv_table(n, x)[n as usize])
}

/// Derivatives of `h_0^(2) ..= h_nmax^(2)`.
pub fn sph_hankel2_deriv_all(nmax: u32, x: f64) -> Result<Vec<Complex64>> {
    check_x(x, false)?;
    Ok(hankel2_deriv_table(nmax, x))
}

/// Miller's downward recurrence, normalized with the sum rule
/// `Σ (2n+1) j_n(x)² = 1`. The sign is taken from whichever of `j_0`, `j_1`
/// is larger in magnitude, so zeros of `j_0` do not spoil the scale.
pub(crate) fn bessel_j_table(nmax: u32, x: f64) -> Vec<f64> {
    let nmax = nmax as usize;
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }

    let top = nmax.max(x.ceil() as usize);
    let start = top + 30 + (40.0 * top as f64).sqrt() as usize;

    const BIG: f64 = 1e100;
    let mut above = 0.0; // f_{k+2}
    let mut current = 1.0; // f_{k+1}
    let mut sum = (2 * (start + 1) + 1) as f64 * current * current;
    // descend from start+1 to 0
    for k in (0..=start).rev() {
        let next = (2 * k + 3) as f64 / x * current - above;
        above = current;
        current = next;
        sum += (2 * k + 1) as f64 * current * current;
        if k <= nmax {
            out[k] = current;
        }
        if current.abs() > BIG {
            let s = 1.0 / BIG;
            current *= s;
            above *= s;
            sum *= s * s;
            for v in out.iter_mut().skip(k) {
                *v *= s;
            }
        }
    }

    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let reference_sign = if j0.abs() >= j1.abs() {
        j0.signum() * out[0].signum()
    } else {
        // out[1] exists when nmax >= 1; otherwise recompute from the descent
        // state, which after the loop holds f_1 in `above`.
        let f1 = if nmax >= 1 { out[1] } else { above };
        j1.signum() * f1.signum()
    };
    let scale = reference_sign / sum.sqrt();
    for v in &mut out {
        *v *= scale;
    }
    out
}

pub(crate) fn bessel_y_table(nmax: u32, x: f64) -> Vec<f64> {
    let nmax = nmax as usize;
    let mut out = Vec::with_capacity(nmax + 1);
    let (s, c) = x.sin_cos();
    out.push(-c / x);
    if nmax >= 1 {
        out.push(-c / (x * x) - s / x);
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        out.push(next);
    }
    out
}

pub(crate) fn hankel2_table(nmax: u32, x: f64) -> Vec<Complex64> {
    let j = bessel_j_table(nmax, x);
    let y = bessel_y_table(nmax, x);
    j.into_iter()
        .zip(y)
        .map(|(j, y)| Complex64::new(j, -y))
        .collect()
}

/// `h_n' = h_{n−1} − (n+1)/x · h_n`, with `h_0' = −h_1`.
pub(crate) fn hankel2_deriv_table(nmax: u32, x: f64) -> Vec<Complex64> {
    let h = hankel2_table(nmax + 1, x);
    (0..=nmax as usize)
        .map(|n| {
            if n == 0 {
                -h[1]
            } else {
                h[n - 1] - h[n] * ((n + 1) as f64 / x)
            }
        })
        .collect()
}

/// Fully normalized associated Legendre values
/// `sqrt((2n+1)/(4π) · (n−m)!/(n+m)!) · P_n^m(cos θ)` for `0 <= m <= n <= nmax`,
/// Condon–Shortley phase included. Stored at `n(n+1)/2 + m`.
fn normalized_legendre(nmax: usize, cos_t: f64, sin_t: f64) -> Vec<f64> {
    let tri = |n: usize, m: usize| n * (n + 1) / 2 + m;
    let mut p = vec![0.0; tri(nmax, nmax) + 1];
    p[0] = 0.5 / PI.sqrt();
    for m in 1..=nmax {
        let f = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        p[tri(m, m)] = -f * sin_t * p[tri(m - 1, m - 1)];
    }
    for m in 0..nmax {
        p[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * cos_t * p[tri(m, m)];
    }
    for m in 0..=nmax {
        for n in (m + 2)..=nmax {
            let (nf, mf) = (n as f64, m as f64);
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0).powi(2) - mf * mf) / (4.0 * (nf - 1.0).powi(2) - 1.0)).sqrt();
            p[tri(n, m)] = a * (cos_t * p[tri(n - 1, m)] - b * p[tri(n - 2, m)]);
        }
    }
    p
}

/// `Y_n^m(θ, φ)` for a single `(n, m)`.
pub fn sph_harm(n: u32, m: i32, theta: f64, phi: f64) -> Result<Complex64> {
    let od = OrderDegree::new(n, m)?;
    Ok(sph_harm_all(n, theta, phi)[od.index()])
}

/// All `Y_n^m(θ, φ)` for `n <= nmax`, in linear-index order.
pub fn sph_harm_all(nmax: u32, theta: f64, phi: f64) -> Vec<Complex64> {
    let nmax_us = nmax as usize;
    let (sin_t, cos_t) = theta.sin_cos();
    let p = normalized_legendre(nmax_us, cos_t, sin_t);
    let mut out = vec![Complex64::new(0.0, 0.0); num_coeffs(nmax)];
    for n in 0..=nmax_us {
        let center = n * n + n;
        for m in 0..=n {
            let e = Complex64::from_polar(1.0, m as f64 * phi);
            let y = e * p[n * (n + 1) / 2 + m];
            out[center + m] = y;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[center - m] = y.conj() * sign;
            }
        }
    }
    out
}

/// Legendre polynomials `P_0(x) ..= P_nmax(x)`.
pub fn legendre_all(nmax: u32, x: f64) -> Vec<f64> {
    let nmax = nmax as usize;
    let mut p = Vec::with_capacity(nmax + 1);
    p.push(1.0);
    if nmax >= 1 {
        p.push(x);
    }
    for n in 1..nmax {
        let nf = n as f64;
        p.push(((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0));
    }
    p
}
