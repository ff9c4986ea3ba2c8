//! Multizone mode matching.
//!
//! The transfer matrix `C` stacks, zone by zone, the interior expansion
//! coefficients of every loudspeaker about that zone's origin; `b` stacks the
//! primary source's coefficients in the same order. Driving signals minimize
//!
//! ```text
//! ‖C d − b‖² + λ Σ_l σ_l |d_l|²
//! ```
//!
//! with `σ = 1` for the conventional regularizer and `σ_l = 1/|μ_l|`
//! (normalized, floored) for the DoA-distribution-based one, where `μ` is the
//! single-layer potential of the primary field on the loudspeaker positions.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::field::{interior_expansion_point_source, ExpansionCoefficients, Wavenumber};
use crate::geometry::{ArrayGeometry, Position, COINCIDENCE_TOLERANCE};
use crate::special::{hankel2_table, num_coeffs, sph_harm_all};

pub const DEFAULT_LAMBDA_FACTOR: f64 = 1e-3;
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-3;
pub const DEFAULT_DOA_ORDER: u32 = 6;

/// Zone centers `O^(q)` with per-zone truncation orders `N_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSet {
    centers: Vec<Position>,
    orders: Vec<u32>,
}

impl ZoneSet {
    pub fn new(centers: Vec<Position>, orders: Vec<u32>) -> Result<Self> {
        if centers.is_empty() {
            return Err(invalid("zones", "at least one zone is required"));
        }
        if centers.len() != orders.len() {
            return Err(Error::Dimension(format!(
                "{} zone centers but {} orders",
                centers.len(),
                orders.len()
            )));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(invalid("zones", "zone centers must be finite"));
        }
        Ok(Self { centers, orders })
    }

    /// Every zone with the same order.
    pub fn uniform(centers: Vec<Position>, order: u32) -> Result<Self> {
        let orders = vec![order; centers.len()];
        Self::new(centers, orders)
    }

    /// A single zone at the global origin: global mode matching.
    pub fn global(order: u32) -> Self {
        Self {
            centers: vec![Position::ORIGIN],
            orders: vec![order],
        }
    }

    pub fn centers(&self) -> &[Position] {
        &self.centers
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Total row count `Σ_q (N_q + 1)²`.
    pub fn rows(&self) -> usize {
        self.orders.iter().map(|&n| num_coeffs(n)).sum()
    }

    /// Sweet-spot radius `N_q / k` of every zone.
    pub fn sweet_spot_radii(&self, k: Wavenumber) -> Vec<f64> {
        self.orders.iter().map(|&n| n as f64 / k.value()).collect()
    }

    pub fn rotated(&self, rotation: &nalgebra::Rotation3<f64>) -> Self {
        Self {
            centers: self.centers.iter().map(|c| c.rotated(rotation)).collect(),
            orders: self.orders.clone(),
        }
    }

    fn stacked_expansion(&self, k: Wavenumber, src: Position) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.rows());
        for (&center, &order) in self.centers.iter().zip(&self.orders) {
            let c = interior_expansion_point_source(k, src, center, order)?;
            out.extend_from_slice(c.values());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Tikhonov regularization, `λ I`.
    Conventional,
    /// DoA-distribution-based regularization, `λ Σ`.
    Doa,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Conventional, Method::Doa];

    pub fn name(self) -> &'static str {
        match self {
            Method::Conventional => "conventional",
            Method::Doa => "doa",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" | "conv" => Ok(Method::Conventional),
            "doa" => Ok(Method::Doa),
            other => Err(invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Everything a single regularized solve needs.
#[derive(Debug, Clone)]
pub struct SolverInputs {
    pub c: DMatrix<Complex64>,
    pub b: DVector<Complex64>,
    pub lambda: f64,
    /// Diagonal of `Σ`; `None` means identity.
    pub sigma: Option<Vec<f64>>,
}

impl SolverInputs {
    pub fn new(
        c: DMatrix<Complex64>,
        b: DVector<Complex64>,
        lambda: f64,
        sigma: Option<Vec<f64>>,
    ) -> Result<Self> {
        if c.nrows() == 0 || c.ncols() == 0 {
            return Err(Error::Dimension("transfer matrix is empty".into()));
        }
        if b.len() != c.nrows() {
            return Err(Error::Dimension(format!(
                "C has {} rows but b has {} entries",
                c.nrows(),
                b.len()
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(
                "lambda",
                format!("{lambda} must be finite and >= 0"),
            ));
        }
        if let Some(s) = &sigma {
            if s.len() != c.ncols() {
                return Err(Error::Dimension(format!(
                    "C has {} columns but sigma has {} entries",
                    c.ncols(),
                    s.len()
                )));
            }
        }
        Ok(Self {
            c,
            b,
            lambda,
            sigma,
        })
    }

    /// Value of the regularized objective at `d`.
    pub fn objective(&self, d: &DVector<Complex64>) -> f64 {
        let residual = &self.c * d - &self.b;
        let penalty: f64 = match &self.sigma {
            Some(s) => d.iter().zip(s).map(|(v, w)| w * v.norm_sqr()).sum(),
            None => d.norm_squared(),
        };
        residual.norm_squared() + self.lambda * penalty
    }
}

/// Driving signals for the `L` loudspeakers.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingSignals {
    pub values: DVector<Complex64>,
    pub method: Method,
    pub frequency_hz: Option<f64>,
}

impl DrivingSignals {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at_frequency(mut self, frequency_hz: f64) -> Self {
        self.frequency_hz = Some(frequency_hz);
        self
    }

    /// `Σ |d_l|²` over the selected loudspeakers.
    pub fn energy_where(&self, mut select: impl FnMut(usize) -> bool) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(l, _)| select(*l))
            .map(|(_, v)| v.norm_sqr())
            .sum()
    }
}

/// Single-layer potential of the primary field at each loudspeaker.
#[derive(Debug, Clone, PartialEq)]
pub struct DoAWeights {
    pub mu: Vec<Complex64>,
    /// `|μ_l| / max |μ|`, in `(0, 1]` (zero only where `μ_l` vanishes).
    pub normalized: Vec<f64>,
}

/// Loudspeakers closer to a zone center than that zone's sweet-spot radius
/// `N_q / k`; the interior expansion does not converge there.
pub fn validity_warnings(array: &ArrayGeometry, zones: &ZoneSet, k: Wavenumber) -> Vec<String> {
    let mut out = Vec::new();
    for (q, (center, radius)) in zones
        .centers()
        .iter()
        .zip(zones.sweet_spot_radii(k))
        .enumerate()
    {
        for (l, p) in array.positions().iter().enumerate() {
            let d = p.distance(*center);
            if d <= radius {
                out.push(format!(
                    "loudspeaker {l} is {d:.4} m from zone {q}, inside its radius N/k = {radius:.4} m"
                ));
            }
        }
    }
    out
}

/// `C`: row block `q`, column `l` holds the expansion of loudspeaker `l`
/// about `O^(q)`.
pub fn build_transfer_matrix(
    array: &ArrayGeometry,
    zones: &ZoneSet,
    k: Wavenumber,
) -> Result<DMatrix<Complex64>> {
    let columns = Execution::default().map(array.len(), |l| {
        zones.stacked_expansion(k, array.positions()[l])
    });
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = zones.rows();
    Ok(DMatrix::from_fn(rows, array.len(), |i, l| columns[l][i]))
}

/// `b`: stacked expansions of the primary point source about every zone.
pub fn build_primary_vector(
    primary: Position,
    zones: &ZoneSet,
    k: Wavenumber,
) -> Result<DVector<Complex64>> {
    Ok(DVector::from_vec(zones.stacked_expansion(k, primary)?))
}

/// `factor × λ_max(Cᴴ C)`, i.e. `factor × σ_max(C)²`.
pub fn compute_lambda(c: &DMatrix<Complex64>, factor: f64) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::Dimension("transfer matrix is empty".into()));
    }
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(invalid(
            "lambda_factor",
            format!("{factor} must be positive"),
        ));
    }
    let smax = c.singular_values().max();
    Ok(factor * smax * smax)
}

/// Tikhonov solve: `(Cᴴ C + λ I) d = Cᴴ b`.
pub fn solve_conventional(inputs: &SolverInputs) -> Result<DrivingSignals> {
    let penalty = vec![1.0; inputs.c.ncols()];
    let d = solve_regularized(&inputs.c, &inputs.b, inputs.lambda, &penalty)?;
    Ok(DrivingSignals {
        values: d,
        method: Method::Conventional,
        frequency_hz: None,
    })
}

/// `(Cᴴ C + λ Σ) d = Cᴴ b`; with `Σ = I` this is exactly [`solve_conventional`].
pub fn solve_doa(inputs: &SolverInputs) -> Result<DrivingSignals> {
    let sigma = inputs
        .sigma
        .as_ref()
        .ok_or_else(|| invalid("sigma", "DoA solve needs the Σ diagonal"))?;
    if let Some((l, s)) = sigma
        .iter()
        .enumerate()
        .find(|(_, s)| !(**s > 0.0 && s.is_finite()))
    {
        return Err(invalid(
            "sigma",
            format!("entry {l} = {s} must be positive"),
        ));
    }
    let d = solve_regularized(&inputs.c, &inputs.b, inputs.lambda, sigma)?;
    Ok(DrivingSignals {
        values: d,
        method: Method::Doa,
        frequency_hz: None,
    })
}

/// Forms the Hermitian normal matrix and solves it with a Cholesky
/// factorization. With `λ = λ_factor · σ_max²` the system's condition number
/// is at most about `1 / λ_factor`, so squaring `C` costs nothing measurable.
fn solve_regularized(
    c: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    lambda: f64,
    penalty: &[f64],
) -> Result<DVector<Complex64>> {
    let ch = c.adjoint();
    let mut a = &ch * c;
    for (l, p) in penalty.iter().enumerate() {
        a[(l, l)] += lambda * p;
    }
    let rhs = &ch * b;
    let factor = cholesky(a)?;
    Ok(cholesky_solve(&factor, rhs))
}

/// Lower-triangular `L` with `A = L Lᴴ`.
fn cholesky(mut a: DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let tol = scale * n as f64 * f64::EPSILON;
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for p in 0..j {
            diag -= a[(j, p)].norm_sqr();
        }
        if !(diag > tol) {
            return Err(Error::RankDeficient {
                column: j,
                pivot: diag,
            });
        }
        let ljj = diag.sqrt();
        a[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= a[(i, p)] * a[(j, p)].conj();
            }
            a[(i, j)] = s / ljj;
        }
        for i in 0..j {
            a[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(a)
}

fn cholesky_solve(l: &DMatrix<Complex64>, mut x: DVector<Complex64>) -> DVector<Complex64> {
    let n = l.nrows();
    for i in 0..n {
        let mut s = x[i];
        for p in 0..i {
            s -= l[(i, p)] * x[p];
        }
        x[i] = s / l[(i, i)].re;
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for p in (i + 1)..n {
            s -= l[(p, i)].conj() * x[p];
        }
        x[i] = s / l[(i, i)].re;
    }
    x
}

/// Single-layer potential `μ_l = Σ_nm j b_nm / (k R_l² h_n^(2)(k R_l)) Y_n^m(θ_l, φ_l)`
/// of `global_field`, truncated at `order`, with angles and radii taken
/// relative to the field's origin.
pub fn doa_weights(
    global_field: &ExpansionCoefficients,
    array: &ArrayGeometry,
    k: Wavenumber,
    order: u32,
) -> Result<DoAWeights> {
    if global_field.order() < order {
        return Err(invalid(
            "order",
            format!(
                "field has order {} but weights need {order}",
                global_field.order()
            ),
        ));
    }
    let kv = k.value();
    let b = global_field.values();
    let mut mu = Vec::with_capacity(array.len());
    for p in array.positions() {
        let s = (*p - global_field.origin()).to_spherical();
        if s.r <= COINCIDENCE_TOLERANCE {
            return Err(Error::Coincident(
                "loudspeaker at the expansion origin".into(),
            ));
        }
        let h = hankel2_table(order, kv * s.r);
        let y = sph_harm_all(order, s.theta, s.phi);
        let mut sum = Complex64::new(0.0, 0.0);
        for (n, hn) in h.iter().enumerate().take(order as usize + 1) {
            let block = n * n..(n + 1) * (n + 1);
            let partial: Complex64 = b[block.clone()]
                .iter()
                .zip(&y[block])
                .map(|(c, y)| c * y)
                .sum();
            sum += partial / hn;
        }
        mu.push(sum * Complex64::new(0.0, 1.0 / (kv * s.r * s.r)));
    }
    let max = mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::ZeroField);
    }
    let normalized = mu.iter().map(|m| m.norm() / max).collect();
    Ok(DoAWeights { mu, normalized })
}

/// `Σ_ll = 1 / max(normalized_l, floor)`; entries lie in `[1, 1/floor]`.
pub fn build_sigma(weights: &DoAWeights, floor: f64) -> Result<Vec<f64>> {
    if !(floor > 0.0 && floor <= 1.0) {
        return Err(invalid(
            "sigma_floor",
            format!("{floor} must lie in (0, 1]"),
        ));
    }
    Ok(weights
        .normalized
        .iter()
        .map(|w| 1.0 / w.max(floor))
        .collect())
}

/// DoA regularizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoaSettings {
    /// Truncation order of the global expansion feeding `μ`.
    pub order: u32,
    pub sigma_floor: f64,
}

impl Default for DoaSettings {
    fn default() -> Self {
        Self {
            order: DEFAULT_DOA_ORDER,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
        }
    }
}

/// A fixed array, zone set and frequency, with `C` and `λ` computed once and
/// shared by every primary source and method.
#[derive(Debug, Clone)]
pub struct ModeMatcher {
    array: ArrayGeometry,
    zones: ZoneSet,
    k: Wavenumber,
    c: DMatrix<Complex64>,
    lambda: f64,
    doa: DoaSettings,
}

impl ModeMatcher {
    pub fn new(
        array: ArrayGeometry,
        zones: ZoneSet,
        k: Wavenumber,
        lambda_factor: f64,
        doa: DoaSettings,
    ) -> Result<Self> {
        let c = build_transfer_matrix(&array, &zones, k)?;
        let lambda = compute_lambda(&c, lambda_factor)?;
        Ok(Self {
            array,
            zones,
            k,
            c,
            lambda,
            doa,
        })
    }

    pub fn array(&self) -> &ArrayGeometry {
        &self.array
    }

    pub fn zones(&self) -> &ZoneSet {
        &self.zones
    }

    pub fn wavenumber(&self) -> Wavenumber {
        self.k
    }

    pub fn transfer_matrix(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// DoA weights of a primary point source, from its expansion about the
    /// global origin.
    pub fn doa_weights_for(&self, primary: Position) -> Result<DoAWeights> {
        let global =
            interior_expansion_point_source(self.k, primary, Position::ORIGIN, self.doa.order)?;
        doa_weights(&global, &self.array, self.k, self.doa.order)
    }

    pub fn inputs_for(&self, primary: Position, method: Method) -> Result<SolverInputs> {
        let b = build_primary_vector(primary, &self.zones, self.k)?;
        let sigma = match method {
            Method::Conventional => None,
            Method::Doa => Some(build_sigma(
                &self.doa_weights_for(primary)?,
                self.doa.sigma_floor,
            )?),
        };
        SolverInputs::new(self.c.clone(), b, self.lambda, sigma)
    }

    pub fn solve(&self, primary: Position, method: Method) -> Result<DrivingSignals> {
        let inputs = self.inputs_for(primary, method)?;
        match method {
            Method::Conventional => solve_conventional(&inputs),
            Method::Doa => solve_doa(&inputs),
        }
    }
}
