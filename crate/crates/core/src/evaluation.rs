//! Reproduction accuracy over spherical regions: ball grids, the normalized
//! reproduction error (NRE) and the primary-direction sweep.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::field::{green_at_distance, green_free, Wavenumber};
use crate::geometry::{ArrayGeometry, Position, COINCIDENCE_TOLERANCE};
use crate::mode_matching::{DoaSettings, DrivingSignals, Method, ModeMatcher, ZoneSet};
use crate::report::format_float;

/// Lower clamp applied to every NRE/NE value.
pub const NRE_FLOOR_DB: f64 = -200.0;
pub const DEFAULT_RADIUS_FACTORS: [f64; 3] = [0.8, 1.0, 1.2];
pub const DEFAULT_GRID_SPACING: f64 = 0.01;
pub const DEFAULT_PRIMARY_DISTANCE: f64 = 2.0;

const CHUNK: usize = 1024;

/// Lattice points `center + spacing·(i, j, k)` inside a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallGrid {
    pub center: Position,
    pub radius: f64,
    pub spacing: f64,
    pub points: Vec<Position>,
}

impl BallGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn ball_grid(center: Position, radius: f64, spacing: f64) -> Result<BallGrid> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("radius", format!("{radius} must be positive")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(invalid("spacing", format!("{spacing} must be positive")));
    }
    let steps = (radius / spacing).floor() as i64;
    let mut points = Vec::new();
    for i in -steps..=steps {
        for j in -steps..=steps {
            for k in -steps..=steps {
                let offset = Position::new(i as f64, j as f64, k as f64) * spacing;
                if offset.norm() <= radius {
                    points.push(center + offset);
                }
            }
        }
    }
    Ok(BallGrid {
        center,
        radius,
        spacing,
        points,
    })
}

/// `p_rep(r) = Σ_l d_l G(r_l, r)` at every point.
pub fn reproduced_pressure(
    array: &ArrayGeometry,
    d: &DrivingSignals,
    k: Wavenumber,
    points: &[Position],
) -> Result<Vec<Complex64>> {
    if d.len() != array.len() {
        return Err(Error::Dimension(format!(
            "{} driving signals for {} loudspeakers",
            d.len(),
            array.len()
        )));
    }
    points
        .iter()
        .map(|&p| {
            array
                .positions()
                .iter()
                .zip(d.values.iter())
                .try_fold(Complex64::new(0.0, 0.0), |acc, (&src, v)| {
                    Ok(acc + green_free(k, src, p)? * v)
                })
        })
        .collect()
}

/// Field of a unit point source at `primary` at every point.
pub fn desired_pressure(
    primary: Position,
    k: Wavenumber,
    points: &[Position],
) -> Result<Vec<Complex64>> {
    points.iter().map(|&p| green_free(k, primary, p)).collect()
}

/// `10 log10(Σ|p_rep − p_des|² / Σ|p_des|²)`, clamped below at
/// [`NRE_FLOOR_DB`]. On a uniform grid the volume element cancels.
pub fn nre(p_rep: &[Complex64], p_des: &[Complex64]) -> Result<f64> {
    if p_rep.len() != p_des.len() || p_rep.is_empty() {
        return Err(Error::Dimension(format!(
            "pressure sequences of length {} and {}",
            p_rep.len(),
            p_des.len()
        )));
    }
    let err: f64 = p_rep
        .iter()
        .zip(p_des)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let des: f64 = p_des.iter().map(|p| p.norm_sqr()).sum();
    ratio_db(err, des)
}

pub(crate) fn ratio_db(err: f64, des: f64) -> Result<f64> {
    if !(des > 0.0) {
        return Err(Error::ZeroReference);
    }
    let db = 10.0 * (err / des).log10();
    Ok(if db.is_nan() {
        NRE_FLOOR_DB
    } else {
        db.max(NRE_FLOOR_DB)
    })
}

/// Direction of a primary source: colatitude and azimuth in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    /// `count` azimuths evenly spaced on the horizontal plane, starting at +x.
    pub fn horizontal(count: usize) -> Vec<Direction> {
        (0..count)
            .map(|i| Direction::new(PI / 2.0, 2.0 * PI * i as f64 / count as f64))
            .collect()
    }

    /// Near-uniform Fibonacci-spiral directions over the whole sphere.
    pub fn sphere(count: usize) -> Vec<Direction> {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                let phi = (golden * i as f64).rem_euclid(2.0 * PI);
                Direction::new(z.clamp(-1.0, 1.0).acos(), phi)
            })
            .collect()
    }

    pub fn point_at(self, distance: f64) -> Position {
        Position::from_spherical(distance, self.theta, self.phi)
    }

    pub fn theta_deg(self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn phi_deg(self) -> f64 {
        self.phi.to_degrees()
    }
}

/// Inputs of the free-field direction sweep.
#[derive(Debug, Clone)]
pub struct SweepScenario {
    pub array: ArrayGeometry,
    pub zones: ZoneSet,
    pub frequency_hz: f64,
    pub speed_of_sound: f64,
    /// Distance of the primary point source from the global origin.
    pub primary_distance: f64,
    pub directions: Vec<Direction>,
    pub lambda_factor: f64,
    pub doa: DoaSettings,
    pub methods: Vec<Method>,
    /// Region radii as multiples of each zone's `N_q / k`.
    pub radius_factors: Vec<f64>,
    pub grid_spacing: f64,
}

impl SweepScenario {
    pub fn wavenumber(&self) -> Result<Wavenumber> {
        Wavenumber::from_frequency(self.frequency_hz, self.speed_of_sound)
    }

    pub fn validate(&self) -> Result<()> {
        self.wavenumber()?;
        if !(self.primary_distance > 0.0 && self.primary_distance.is_finite()) {
            return Err(invalid("primary_distance", "must be positive"));
        }
        if self.directions.is_empty() {
            return Err(invalid("directions", "at least one direction is required"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method is required"));
        }
        if self.radius_factors.is_empty() || self.radius_factors.iter().any(|f| !(*f > 0.0)) {
            return Err(invalid("radius_factors", "factors must be positive"));
        }
        if !(self.lambda_factor > 0.0) {
            return Err(invalid("lambda_factor", "must be positive"));
        }
        if !(self.doa.sigma_floor > 0.0 && self.doa.sigma_floor <= 1.0) {
            return Err(invalid("sigma_floor", "must lie in (0, 1]"));
        }
        if !(self.grid_spacing > 0.0) {
            return Err(invalid("grid_spacing", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub direction: Direction,
    pub radius_factor: f64,
    pub zone_index: usize,
    pub nre_db: f64,
}

/// A `(direction, method)` pair whose solve failed; the sweep carries on.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub direction: Direction,
    pub method: Method,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Ordered by method, direction, radius factor, zone.
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
    pub wavenumber: f64,
    pub lambda: f64,
}

impl SweepReport {
    pub const CSV_HEADER: &'static str = "method,theta_deg,phi_deg,radius_factor,zone_index,nre_db";

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.method,
                format_float(r.direction.theta_deg()),
                format_float(r.direction.phi_deg()),
                format_float(r.radius_factor),
                r.zone_index,
                format_float(r.nre_db)
            );
        }
        out
    }

    /// NRE values of one method/zone/radius factor, in direction order.
    pub fn series(&self, method: Method, zone_index: usize, radius_factor: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| {
                r.method == method && r.zone_index == zone_index && r.radius_factor == radius_factor
            })
            .map(|r| r.nre_db)
            .collect()
    }
}

/// Runs the sweep with the default execution mode.
pub fn direction_sweep(scenario: &SweepScenario) -> Result<SweepReport> {
    direction_sweep_with(Execution::default(), scenario)
}

/// Solves every `(direction, method)` pair, then makes one pass over each
/// zone's grid accumulating error and reference energies for all pairs and
/// radii at once.
pub fn direction_sweep_with(exec: Execution, scenario: &SweepScenario) -> Result<SweepReport> {
    scenario.validate()?;
    let k = scenario.wavenumber()?;
    let matcher = ModeMatcher::new(
        scenario.array.clone(),
        scenario.zones.clone(),
        k,
        scenario.lambda_factor,
        scenario.doa,
    )?;

    let methods = &scenario.methods;
    let primaries: Vec<Position> = scenario
        .directions
        .iter()
        .map(|d| d.point_at(scenario.primary_distance))
        .collect();

    let solved = exec.map(primaries.len() * methods.len(), |i| {
        let (dir, m) = (i / methods.len(), i % methods.len());
        matcher.solve(primaries[dir], methods[m])
    });

    // successful pairs, as (direction index, method index, signals)
    let mut combos = Vec::new();
    let mut failures = Vec::new();
    for (i, result) in solved.into_iter().enumerate() {
        let (dir, m) = (i / methods.len(), i % methods.len());
        match result {
            Ok(d) => combos.push((dir, m, d)),
            Err(error) => failures.push(SweepFailure {
                direction: scenario.directions[dir],
                method: methods[m],
                error,
            }),
        }
    }

    let signals: Vec<&DrivingSignals> = combos.iter().map(|c| &c.2).collect();
    // directions with at least one solution, and each combo's index into them
    let mut active: Vec<Position> = Vec::new();
    let mut active_index = vec![usize::MAX; primaries.len()];
    for &(dir, _, _) in &combos {
        if active_index[dir] == usize::MAX {
            active_index[dir] = active.len();
            active.push(primaries[dir]);
        }
    }
    let combo_dirs: Vec<usize> = combos.iter().map(|c| active_index[c.0]).collect();
    let factors = &scenario.radius_factors;

    // nre[zone][combo][factor]
    let mut nre_table = Vec::with_capacity(scenario.zones.len());
    for (q, (&center, radius)) in scenario
        .zones
        .centers()
        .iter()
        .zip(scenario.zones.sweet_spot_radii(k))
        .enumerate()
    {
        let radii: Vec<f64> = factors.iter().map(|f| f * radius).collect();
        let outer = radii.iter().cloned().fold(0.0, f64::max);
        if !(outer > 0.0) {
            return Err(invalid(
                "zones",
                format!("zone {q} has order 0, so its evaluation region is empty"),
            ));
        }
        let grid = ball_grid(center, outer, scenario.grid_spacing)?;
        let energies = accumulate_energies(
            exec,
            &grid,
            &radii,
            scenario.array.positions(),
            &signals,
            &combo_dirs,
            &active,
            k,
        )?;
        let per_combo = (0..combos.len())
            .map(|c| {
                (0..radii.len())
                    .map(|f| {
                        ratio_db(
                            energies.error[c * radii.len() + f],
                            energies.desired[combo_dirs[c] * radii.len() + f],
                        )
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        nre_table.push(per_combo);
    }

    let mut order: Vec<usize> = (0..combos.len()).collect();
    order.sort_by_key(|&c| (combos[c].1, combos[c].0));
    let mut rows = Vec::with_capacity(order.len() * factors.len() * scenario.zones.len());
    for c in order {
        let (dir, m, _) = &combos[c];
        for (f, &factor) in factors.iter().enumerate() {
            for (q, table) in nre_table.iter().enumerate() {
                rows.push(SweepRow {
                    method: methods[*m],
                    direction: scenario.directions[*dir],
                    radius_factor: factor,
                    zone_index: q,
                    nre_db: table[c][f],
                });
            }
        }
    }

    Ok(SweepReport {
        rows,
        failures,
        wavenumber: k.value(),
        lambda: matcher.lambda(),
    })
}

struct Energies {
    /// `[combo][radius]`
    error: Vec<f64>,
    /// `[direction][radius]`
    desired: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn accumulate_energies(
    exec: Execution,
    grid: &BallGrid,
    radii: &[f64],
    speakers: &[Position],
    signals: &[&DrivingSignals],
    combo_dirs: &[usize],
    primaries: &[Position],
    k: Wavenumber,
) -> Result<Energies> {
    let n_combo = signals.len();
    let n_dir = primaries.len();
    let n_rad = radii.len();
    let kv = k.value();

    // driving signals laid out [speaker][combo], split into re/im
    let mut d_re = vec![0.0; speakers.len() * n_combo];
    let mut d_im = vec![0.0; speakers.len() * n_combo];
    for (c, s) in signals.iter().enumerate() {
        for (l, v) in s.values.iter().enumerate() {
            d_re[l * n_combo + c] = v.re;
            d_im[l * n_combo + c] = v.im;
        }
    }

    let partials = exec.map_chunks(&grid.points, CHUNK, |points| -> Result<Energies> {
        let mut error = vec![0.0; n_combo * n_rad];
        let mut desired = vec![0.0; n_dir * n_rad];
        let mut p_re = vec![0.0; n_combo];
        let mut p_im = vec![0.0; n_combo];
        let mut p_des = vec![Complex64::new(0.0, 0.0); n_dir];
        let mut inside = vec![false; n_rad];
        for &p in points {
            let r = p.distance(grid.center);
            for (flag, radius) in inside.iter_mut().zip(radii) {
                *flag = r <= *radius;
            }
            p_re.iter_mut().for_each(|v| *v = 0.0);
            p_im.iter_mut().for_each(|v| *v = 0.0);
            for (l, &src) in speakers.iter().enumerate() {
                let dist = src.distance(p);
                if dist <= COINCIDENCE_TOLERANCE {
                    return Err(Error::Coincident(format!(
                        "grid point {p:?} coincides with loudspeaker {l}"
                    )));
                }
                let g = green_at_distance(kv, dist);
                let row = l * n_combo..(l + 1) * n_combo;
                for ((pr, pi), (dr, di)) in p_re
                    .iter_mut()
                    .zip(p_im.iter_mut())
                    .zip(d_re[row.clone()].iter().zip(&d_im[row]))
                {
                    *pr += g.re * dr - g.im * di;
                    *pi += g.re * di + g.im * dr;
                }
            }
            for (v, &src) in p_des.iter_mut().zip(primaries) {
                let dist = src.distance(p);
                if dist <= COINCIDENCE_TOLERANCE {
                    return Err(Error::Coincident(format!(
                        "grid point {p:?} coincides with the primary source"
                    )));
                }
                *v = green_at_distance(kv, dist);
            }
            for (f, _) in inside.iter().enumerate().filter(|(_, i)| **i) {
                for (dir, v) in p_des.iter().enumerate() {
                    desired[dir * n_rad + f] += v.norm_sqr();
                }
                for c in 0..n_combo {
                    let diff = Complex64::new(p_re[c], p_im[c]) - p_des[combo_dirs[c]];
                    error[c * n_rad + f] += diff.norm_sqr();
                }
            }
        }
        Ok(Energies { error, desired })
    });

    let mut total = Energies {
        error: vec![0.0; n_combo * n_rad],
        desired: vec![0.0; n_dir * n_rad],
    };
    for part in partials {
        let part = part?;
        total
            .error
            .iter_mut()
            .zip(&part.error)
            .for_each(|(a, b)| *a += b);
        total
            .desired
            .iter_mut()
            .zip(&part.desired)
            .for_each(|(a, b)| *a += b);
    }
    Ok(total)
}

/// NRE of one set of driving signals over a grid, computed point by point.
pub fn grid_nre(
    array: &ArrayGeometry,
    d: &DrivingSignals,
    primary: Position,
    k: Wavenumber,
    grid: &BallGrid,
) -> Result<f64> {
    let p_rep = reproduced_pressure(array, d, k, &grid.points)?;
    let p_des = desired_pressure(primary, k, &grid.points)?;
    nre(&p_rep, &p_des)
}
