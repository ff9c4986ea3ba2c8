//! Binaural-centered mode matching (BCMM) evaluated at the ears of a
//! rigid-sphere head.
//!
//! Ear signals come from the analytic total field on a sound-hard sphere
//! excited by a point source. The same transfer functions are used for the
//! loudspeakers and for the primary source, so the normalized error compares
//! like with like.

use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::evaluation::ratio_db;
use crate::exec::Execution;
use crate::field::Wavenumber;
use crate::geometry::{ArrayGeometry, Position};
use crate::mode_matching::{DoaSettings, DrivingSignals, Method, ModeMatcher, ZoneSet};
use crate::report::format_float;
use crate::special::{hankel2_deriv_table, hankel2_table, legendre_all};

pub const DEFAULT_HEAD_RADIUS: f64 = 0.0875;
pub const DEFAULT_EAR_ZONE_OFFSET: f64 = 0.0705;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ear {
    Left,
    Right,
}

impl Ear {
    pub const BOTH: [Ear; 2] = [Ear::Left, Ear::Right];

    pub fn label(self) -> &'static str {
        match self {
            Ear::Left => "L",
            Ear::Right => "R",
        }
    }
}

/// Rigid sphere standing in for the listener's head; +x is the look
/// direction and the left ear is on +y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadModel {
    pub center: Position,
    pub radius: f64,
}

impl Default for HeadModel {
    fn default() -> Self {
        Self {
            center: Position::ORIGIN,
            radius: DEFAULT_HEAD_RADIUS,
        }
    }
}

impl HeadModel {
    pub fn new(center: Position, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("head_radius", format!("{radius} must be positive")));
        }
        Ok(Self { center, radius })
    }

    pub fn ear_position(&self, ear: Ear) -> Position {
        let side = match ear {
            Ear::Left => 1.0,
            Ear::Right => -1.0,
        };
        self.center + Position::new(0.0, side * self.radius, 0.0)
    }
}

/// Series truncation used by [`rigid_sphere_pressure`].
pub fn rigid_sphere_order(k: Wavenumber, head: &HeadModel) -> u32 {
    (k.value() * head.radius).ceil() as u32 + 20
}

/// Total (incident plus scattered) pressure at an ear for a unit point source
/// at `src`.
pub fn rigid_sphere_pressure(
    k: Wavenumber,
    head: &HeadModel,
    src: Position,
    ear: Ear,
) -> Result<Complex64> {
    rigid_sphere_pressure_with_order(k, head, src, ear, rigid_sphere_order(k, head))
}

/// As [`rigid_sphere_pressure`] with an explicit truncation order. Using the
/// Wronskian `j_n h_n' − j_n' h_n = −i/x²`, the surface field reduces to
///
/// ```text
/// p = −k / (4π (ka)²) Σ_n (2n+1) P_n(cos γ) h_n^(2)(k r_s) / h_n^(2)'(k a)
/// ```
pub fn rigid_sphere_pressure_with_order(
    k: Wavenumber,
    head: &HeadModel,
    src: Position,
    ear: Ear,
    order: u32,
) -> Result<Complex64> {
    let rel = src - head.center;
    let rs = rel.norm();
    if !(rs > head.radius) {
        return Err(invalid(
            "source",
            format!(
                "source at {rs} m from the head center is not outside radius {}",
                head.radius
            ),
        ));
    }
    let ear_dir = head.ear_position(ear) - head.center;
    let cos_gamma = (rel.dot(ear_dir) / (rs * head.radius)).clamp(-1.0, 1.0);
    let kv = k.value();
    let ka = kv * head.radius;
    let h_src = hankel2_table(order, kv * rs);
    let dh_surface = hankel2_deriv_table(order, ka);
    let p = legendre_all(order, cos_gamma);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..=order as usize {
        sum += h_src[n] / dh_surface[n] * ((2 * n + 1) as f64 * p[n]);
    }
    Ok(sum * (-kv / (4.0 * PI * ka * ka)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinauralMethod {
    /// Global mode matching, one zone at the head center.
    Mm,
    /// BCMM with Tikhonov regularization.
    BcmmConv,
    /// BCMM with DoA-distribution-based regularization.
    BcmmDoa,
}

impl BinauralMethod {
    pub const ALL: [BinauralMethod; 3] = [
        BinauralMethod::Mm,
        BinauralMethod::BcmmConv,
        BinauralMethod::BcmmDoa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinauralMethod::Mm => "MM",
            BinauralMethod::BcmmConv => "BCMM_conv",
            BinauralMethod::BcmmDoa => "BCMM_doa",
        }
    }
}

impl fmt::Display for BinauralMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inputs of the binaural comparison.
#[derive(Debug, Clone)]
pub struct BinauralScenario {
    pub array: ArrayGeometry,
    pub primary: Position,
    pub head: HeadModel,
    /// Ear-zone centers sit at `(0, ±offset, 0)` relative to the head center.
    pub ear_zone_offset: f64,
    /// Truncation order of every zone, including the global MM zone.
    pub order: u32,
    pub lambda_factor: f64,
    pub doa: DoaSettings,
    pub speed_of_sound: f64,
}

impl BinauralScenario {
    pub fn bcmm_zones(&self) -> Result<ZoneSet> {
        let offset = Position::new(0.0, self.ear_zone_offset, 0.0);
        ZoneSet::uniform(
            vec![self.head.center + offset, self.head.center - offset],
            self.order,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ear_zone_offset > 0.0 && self.ear_zone_offset.is_finite()) {
            return Err(invalid("ear_zone_offset", "must be positive"));
        }
        if !(self.primary.distance(self.head.center) > self.head.radius) {
            return Err(invalid(
                "primary",
                "primary source must lie outside the head",
            ));
        }
        if let Some(l) = self
            .array
            .positions()
            .iter()
            .position(|p| !(p.distance(self.head.center) > self.head.radius))
        {
            return Err(invalid(
                "array",
                format!("loudspeaker {l} is inside the head"),
            ));
        }
        if !(self.lambda_factor > 0.0) {
            return Err(invalid("lambda_factor", "must be positive"));
        }
        if !(self.speed_of_sound > 0.0) {
            return Err(invalid("speed_of_sound", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinauralRow {
    pub method: BinauralMethod,
    pub ear: Ear,
    pub frequency_hz: f64,
    pub ne_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinauralFailure {
    pub frequency_hz: f64,
    pub method: BinauralMethod,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinauralReport {
    /// Ordered by method, ear, then frequency.
    pub rows: Vec<BinauralRow>,
    pub failures: Vec<BinauralFailure>,
}

impl BinauralReport {
    pub const CSV_HEADER: &'static str = "method,ear,frequency_hz,ne_db";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * (self.rows.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.method,
                r.ear.label(),
                format_float(r.frequency_hz),
                format_float(r.ne_db)
            );
        }
        out
    }

    /// NE values of one method and ear, in frequency order.
    pub fn series(&self, method: BinauralMethod, ear: Ear) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.ear == ear)
            .map(|r| (r.frequency_hz, r.ne_db))
            .collect()
    }
}

/// `count` logarithmically spaced frequencies from `start` to `stop`.
pub fn log_frequencies(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop >= start && count >= 1) {
        return Err(invalid(
            "frequencies",
            format!("need 0 < start <= stop and count >= 1, got {start}, {stop}, {count}"),
        ));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let ratio = (stop / start).ln();
    Ok((0..count)
        .map(|i| start * (ratio * i as f64 / (count - 1) as f64).exp())
        .collect())
}

/// `10 log10(|p_rep − p_des|² / |p_des|²)`: the one-point NRE.
pub fn normalized_error(p_rep: Complex64, p_des: Complex64) -> Result<f64> {
    ratio_db((p_rep - p_des).norm_sqr(), p_des.norm_sqr())
}

/// Driving signals of every method at one frequency.
pub fn binaural_driving_signals(
    scenario: &BinauralScenario,
    frequency_hz: f64,
) -> Result<Vec<(BinauralMethod, Result<DrivingSignals>)>> {
    let k = Wavenumber::from_frequency(frequency_hz, scenario.speed_of_sound)?;
    let global = ModeMatcher::new(
        scenario.array.clone(),
        ZoneSet::global(scenario.order),
        k,
        scenario.lambda_factor,
        scenario.doa,
    )?;
    let bcmm = ModeMatcher::new(
        scenario.array.clone(),
        scenario.bcmm_zones()?,
        k,
        scenario.lambda_factor,
        scenario.doa,
    )?;
    Ok(BinauralMethod::ALL
        .iter()
        .map(|&m| {
            let d = match m {
                BinauralMethod::Mm => global.solve(scenario.primary, Method::Conventional),
                BinauralMethod::BcmmConv => bcmm.solve(scenario.primary, Method::Conventional),
                BinauralMethod::BcmmDoa => bcmm.solve(scenario.primary, Method::Doa),
            };
            (m, d.map(|d| d.at_frequency(frequency_hz)))
        })
        .collect())
}

pub fn binaural_ne(scenario: &BinauralScenario, frequencies: &[f64]) -> Result<BinauralReport> {
    binaural_ne_with(Execution::default(), scenario, frequencies)
}

pub fn binaural_ne_with(
    exec: Execution,
    scenario: &BinauralScenario,
    frequencies: &[f64],
) -> Result<BinauralReport> {
    scenario.validate()?;
    if frequencies.is_empty() {
        return Err(invalid("frequencies", "at least one frequency is required"));
    }
    for &f in frequencies {
        Wavenumber::from_frequency(f, scenario.speed_of_sound)?;
    }

    type PerFrequency = Vec<(BinauralMethod, Result<[f64; 2]>)>;
    let per_frequency: Vec<Result<PerFrequency>> = exec.map(frequencies.len(), |i| {
        let f = frequencies[i];
        let k = Wavenumber::from_frequency(f, scenario.speed_of_sound)?;
        let head = &scenario.head;
        let mut transfer = [Vec::new(), Vec::new()];
        let mut desired = [Complex64::new(0.0, 0.0); 2];
        for (e, ear) in Ear::BOTH.into_iter().enumerate() {
            transfer[e] = scenario
                .array
                .positions()
                .iter()
                .map(|&p| rigid_sphere_pressure(k, head, p, ear))
                .collect::<Result<Vec<_>>>()?;
            desired[e] = rigid_sphere_pressure(k, head, scenario.primary, ear)?;
        }
        let signals = binaural_driving_signals(scenario, f)?;
        Ok(signals
            .into_iter()
            .map(|(m, d)| {
                let ne = d.and_then(|d| {
                    let mut out = [0.0; 2];
                    for e in 0..2 {
                        let p: Complex64 = transfer[e]
                            .iter()
                            .zip(d.values.iter())
                            .map(|(t, v)| t * v)
                            .sum();
                        out[e] = normalized_error(p, desired[e])?;
                    }
                    Ok(out)
                });
                (m, ne)
            })
            .collect())
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut table = Vec::with_capacity(frequencies.len());
    for (f, result) in frequencies.iter().zip(per_frequency) {
        match result {
            Ok(entries) => table.push((f, entries)),
            Err(error) => {
                for method in BinauralMethod::ALL {
                    failures.push(BinauralFailure {
                        frequency_hz: *f,
                        method,
                        error: error.clone(),
                    });
                }
            }
        }
    }
    for method in BinauralMethod::ALL {
        for (e, ear) in Ear::BOTH.into_iter().enumerate() {
            for (f, entries) in &table {
                let (_, ne) = entries
                    .iter()
                    .find(|(m, _)| *m == method)
                    .expect("every method");
                match ne {
                    Ok(values) => rows.push(BinauralRow {
                        method,
                        ear,
                        frequency_hz: **f,
                        ne_db: values[e],
                    }),
                    Err(error) if e == 0 => failures.push(BinauralFailure {
                        frequency_hz: **f,
                        method,
                        error: error.clone(),
                    }),
                    Err(_) => {}
                }
            }
        }
    }
    Ok(BinauralReport { rows, failures })
}
