//! Free-field point sources and their interior spherical-harmonic expansions
//! about arbitrary origins.
//!
//! Time convention is `e^{+jωt}`, so an outgoing point source is
//! `e^{−jkd}/(4πd)` and radiates through `h_n^(2)`. The re-centered expansion
//! of a source at `s` about origin `o`, valid for `|r − o| < |s − o|`, is
//!
//! ```text
//! G(r, s) = Σ_nm  −jk h_n^(2)(k|s−o|) conj(Y_n^m(ŝ−o)) · j_n(k|r−o|) Y_n^m(r̂−o)
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Position, COINCIDENCE_TOLERANCE};
use crate::special::{bessel_j_table, hankel2_table, num_coeffs, sph_harm_all};

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

/// Wavenumber `k` in rad/m.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Wavenumber(f64);

impl Wavenumber {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid(
                "k",
                format!("wavenumber {k} must be positive and finite"),
            ));
        }
        Ok(Self(k))
    }

    /// `k = 2πf / c`.
    pub fn from_frequency(frequency_hz: f64, speed_of_sound: f64) -> Result<Self> {
        if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
            return Err(invalid(
                "frequency",
                format!("{frequency_hz} Hz must be positive"),
            ));
        }
        if !(speed_of_sound > 0.0 && speed_of_sound.is_finite()) {
            return Err(invalid(
                "speed_of_sound",
                format!("{speed_of_sound} m/s must be positive"),
            ));
        }
        Self::new(2.0 * PI * frequency_hz / speed_of_sound)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Interior expansion coefficients `c_nm` up to `order`, indexed `n² + n + m`,
/// about `origin`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    origin: Position,
    order: u32,
    values: Vec<Complex64>,
}

impl ExpansionCoefficients {
    pub fn new(origin: Position, order: u32, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != num_coeffs(order) {
            return Err(Error::Dimension(format!(
                "order {order} needs {} coefficients, got {}",
                num_coeffs(order),
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(invalid("values", "coefficients must be finite"));
        }
        Ok(Self {
            origin,
            order,
            values,
        })
    }

    pub fn zeros(origin: Position, order: u32) -> Self {
        Self {
            origin,
            order,
            values: vec![Complex64::new(0.0, 0.0); num_coeffs(order)],
        }
    }

    pub fn origin(&self) -> Position {
        self.origin
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            origin: self.origin,
            order: self.order,
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }
}

/// `e^{−jkd} / (4πd)` with `d = |obs − src|`.
pub fn green_free(k: Wavenumber, src: Position, obs: Position) -> Result<Complex64> {
    let d = src.distance(obs);
    if d <= COINCIDENCE_TOLERANCE {
        return Err(Error::Coincident(format!(
            "source and observation point coincide at {src:?}"
        )));
    }
    Ok(green_at_distance(k.value(), d))
}

#[inline]
pub(crate) fn green_at_distance(k: f64, d: f64) -> Complex64 {
    let (s, c) = (k * d).sin_cos();
    Complex64::new(c, -s) / (4.0 * PI * d)
}

/// Re-expands the field of a unit point source at `src` as an interior series
/// about `origin`.
pub fn interior_expansion_point_source(
    k: Wavenumber,
    src: Position,
    origin: Position,
    order: u32,
) -> Result<ExpansionCoefficients> {
    let rel = (src - origin).to_spherical();
    if rel.r <= COINCIDENCE_TOLERANCE {
        return Err(Error::Coincident(format!(
            "source coincides with expansion origin {origin:?}"
        )));
    }
    let kv = k.value();
    let h = hankel2_table(order, kv * rel.r);
    let y = sph_harm_all(order, rel.theta, rel.phi);
    let prefactor = Complex64::new(0.0, -kv);
    let mut values = Vec::with_capacity(y.len());
    for n in 0..=order as usize {
        let radial = prefactor * h[n];
        for yv in &y[n * n..(n + 1) * (n + 1)] {
            values.push(radial * yv.conj());
        }
    }
    ExpansionCoefficients::new(origin, order, values)
}

/// Evaluates `Σ c_nm j_n(k|obs−o|) Y_n^m(obs−o)`. Points outside the region
/// where the expansion converges are evaluated all the same.
pub fn synthesize_from_coefficients(
    coeffs: &ExpansionCoefficients,
    k: Wavenumber,
    obs: Position,
) -> Complex64 {
    let rel = (obs - coeffs.origin).to_spherical();
    let order = coeffs.order;
    let j = bessel_j_table(order, k.value() * rel.r);
    let y = sph_harm_all(order, rel.theta, rel.phi);
    let mut sum = Complex64::new(0.0, 0.0);
    for (n, jn) in j.iter().enumerate().take(order as usize + 1) {
        let block = n * n..(n + 1) * (n + 1);
        let partial: Complex64 = coeffs.values[block.clone()]
            .iter()
            .zip(&y[block])
            .map(|(c, y)| c * y)
            .sum();
        sum += partial * jn;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit, Vector3};
    use proptest::prelude::*;

    fn k1k() -> Wavenumber {
        Wavenumber::from_frequency(1000.0, DEFAULT_SPEED_OF_SOUND).unwrap()
    }

    fn rel_err(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn green_closed_form() {
        let k = Wavenumber::new(1.0).unwrap();
        let g = green_free(k, Position::ORIGIN, Position::new(1.0, 0.0, 0.0)).unwrap();
        assert!((g.re - 0.042_995_1).abs() < 1e-6, "{g}");
        assert!((g.im + 0.066_961_5).abs() < 1e-6, "{g}");
        assert!(green_free(k, Position::ORIGIN, Position::ORIGIN).is_err());
    }

    #[test]
    fn wavenumber_from_frequency() {
        let k = k1k().value();
        assert!((k - 18.318_4).abs() < 1e-3);
        assert!(Wavenumber::from_frequency(0.0, 343.0).is_err());
        assert!(Wavenumber::from_frequency(100.0, -1.0).is_err());
    }

    #[test]
    fn expansion_collapses_at_origin() {
        let k = k1k();
        let origin = Position::new(0.1, -0.2, 0.3);
        let src = Position::new(1.2, 0.5, -0.4);
        let c = interior_expansion_point_source(k, src, origin, 8).unwrap();
        let got = synthesize_from_coefficients(&c, k, origin);
        let expected = green_free(k, src, origin).unwrap();
        assert!(rel_err(got, expected) < 1e-14);
    }

    #[test]
    fn expansion_matches_green_near_origin() {
        let k = k1k();
        let src = Position::from_spherical(2.0, 1.0, 0.3);
        let obs = Position::from_spherical(0.05, 2.0, -1.2);
        let c = interior_expansion_point_source(k, src, Position::ORIGIN, 20).unwrap();
        let got = synthesize_from_coefficients(&c, k, obs);
        let expected = green_free(k, src, obs).unwrap();
        assert!(rel_err(got, expected) < 1e-8);
    }

    #[test]
    fn translation_consistency() {
        let k = k1k();
        let src = Position::new(1.5, 0.4, 0.2);
        let a = Position::new(0.1, 0.0, 0.0);
        let b = Position::new(-0.1, 0.05, 0.0);
        let obs = Position::new(0.0, 0.02, 0.03);
        let ca = interior_expansion_point_source(k, src, a, 25).unwrap();
        let cb = interior_expansion_point_source(k, src, b, 25).unwrap();
        let va = synthesize_from_coefficients(&ca, k, obs);
        let vb = synthesize_from_coefficients(&cb, k, obs);
        assert!(rel_err(va, vb) < 1e-6);
    }

    #[test]
    fn source_at_origin_rejected() {
        let p = Position::new(0.3, 0.3, 0.3);
        assert!(interior_expansion_point_source(k1k(), p, p, 3).is_err());
    }

    #[test]
    fn synthesis_is_linear() {
        let k = k1k();
        let zero = ExpansionCoefficients::zeros(Position::ORIGIN, 6);
        assert_eq!(
            synthesize_from_coefficients(&zero, k, Position::new(0.1, 0.2, 0.0)),
            Complex64::new(0.0, 0.0)
        );
        let c =
            interior_expansion_point_source(k, Position::new(0.0, 2.0, 0.0), Position::ORIGIN, 6)
                .unwrap();
        let alpha = Complex64::new(-0.7, 2.5);
        let obs = Position::new(0.05, -0.1, 0.02);
        let a = synthesize_from_coefficients(&c.scaled(alpha), k, obs);
        let b = synthesize_from_coefficients(&c, k, obs) * alpha;
        assert!(rel_err(a, b) < 1e-14);
    }

    #[test]
    fn truncation_error_decreases_with_order() {
        let k = k1k();
        let src = Position::new(0.0, 0.0, 2.0);
        let obs = Position::new(0.2, 0.1, 0.0);
        let kr = k.value() * obs.norm();
        let exact = green_free(k, src, obs).unwrap();
        let start = kr.ceil() as u32;
        let errors: Vec<f64> = (start..=start + 10)
            .map(|n| {
                let c = interior_expansion_point_source(k, src, Position::ORIGIN, n).unwrap();
                rel_err(synthesize_from_coefficients(&c, k, obs), exact)
            })
            .collect();
        for w in errors.windows(3) {
            // monotone within noise: no error exceeds the one two orders before
            assert!(w[2] <= w[0] * 1.05, "{errors:?}");
        }
        assert!(errors.last().unwrap() < &(errors[0] * 1e-3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn reciprocity_and_modulus(a in prop::array::uniform3(-2.0..2.0f64),
                                   b in prop::array::uniform3(-2.0..2.0f64)) {
            let (a, b) = (Position::from(a), Position::from(b));
            prop_assume!(a.distance(b) > 1e-3);
            let k = k1k();
            let g1 = green_free(k, a, b).unwrap();
            let g2 = green_free(k, b, a).unwrap();
            prop_assert_eq!(g1, g2);
            let d = a.distance(b);
            prop_assert!((g1.norm() - 1.0 / (4.0 * PI * d)).abs() <= 1e-14 / d);
        }

        #[test]
        fn rotation_equivariance(axis in prop::array::uniform3(-1.0..1.0f64), angle in -3.0..3.0f64,
                                 src_dir in prop::array::uniform3(-1.0..1.0f64),
                                 obs in prop::array::uniform3(-0.15..0.15f64)) {
            let axis = Vector3::from(axis);
            let sd = Vector3::from(src_dir);
            prop_assume!(axis.norm() > 0.1 && sd.norm() > 0.1);
            let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
            let src = Position::from(sd.normalize() * 1.7);
            let obs = Position::from(obs);
            let k = k1k();
            let c = interior_expansion_point_source(k, src, Position::ORIGIN, 20).unwrap();
            let cr = interior_expansion_point_source(k, src.rotated(&rot), Position::ORIGIN, 20).unwrap();
            let v = synthesize_from_coefficients(&c, k, obs);
            let vr = synthesize_from_coefficients(&cr, k, obs.rotated(&rot));
            prop_assert!((v - vr).norm() <= 1e-10 * v.norm());
            let g = green_free(k, src, obs).unwrap();
            let gr = green_free(k, src.rotated(&rot), obs.rotated(&rot)).unwrap();
            prop_assert!((g - gr).norm() <= 1e-12 * g.norm());
        }
    }
}
