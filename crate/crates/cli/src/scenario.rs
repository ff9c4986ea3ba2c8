//! Scenario documents: a versioned JSON file describing one experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mmfield::binaural::{
    log_frequencies, BinauralScenario, HeadModel, DEFAULT_EAR_ZONE_OFFSET, DEFAULT_HEAD_RADIUS,
};
use mmfield::evaluation::{Direction, SweepScenario, DEFAULT_GRID_SPACING, DEFAULT_RADIUS_FACTORS};
use mmfield::field::DEFAULT_SPEED_OF_SOUND;
use mmfield::mode_matching::{
    DoaSettings, Method, DEFAULT_DOA_ORDER, DEFAULT_LAMBDA_FACTOR, DEFAULT_SIGMA_FLOOR,
};
use mmfield::{ArrayGeometry, Position, Wavenumber, ZoneSet};

use crate::CliError;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeometrySpec {
    /// `x y z` point file; relative paths resolve against the scenario file.
    File {
        path: PathBuf,
    },
    Fibonacci {
        count: usize,
        radius: f64,
    },
    /// The bundled 121-point spherical 10-design.
    Tdesign121 {
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub center: [f64; 3],
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DirectionSpec {
    Horizontal {
        count: usize,
    },
    Sphere {
        count: usize,
    },
    /// `[theta_deg, phi_deg]` pairs.
    List {
        degrees: Vec<[f64; 2]>,
    },
}

impl DirectionSpec {
    pub fn directions(&self) -> Vec<Direction> {
        match self {
            DirectionSpec::Horizontal { count } => Direction::horizontal(*count),
            DirectionSpec::Sphere { count } => Direction::sphere(*count),
            DirectionSpec::List { degrees } => degrees
                .iter()
                .map(|[t, p]| Direction::from_degrees(*t, *p))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimarySpec {
    /// Distance of the primary point source from the global origin, meters.
    pub distance: f64,
    pub directions: DirectionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FrequencySpec {
    Log { start: f64, stop: f64, count: usize },
    List { hz: Vec<f64> },
}

impl FrequencySpec {
    pub fn frequencies(&self) -> Result<Vec<f64>, String> {
        match self {
            FrequencySpec::Log { start, stop, count } => {
                log_frequencies(*start, *stop, *count).map_err(|e| e.to_string())
            }
            FrequencySpec::List { hz } => Ok(hz.clone()),
        }
    }
}

impl Default for FrequencySpec {
    fn default() -> Self {
        FrequencySpec::Log {
            start: 100.0,
            stop: 8000.0,
            count: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinauralSpec {
    pub frequencies: FrequencySpec,
    /// Primary direction `[theta_deg, phi_deg]`; frontal by default.
    pub direction_deg: [f64; 2],
    pub head_radius: f64,
    pub ear_zone_offset: f64,
    pub order: u32,
}

impl Default for BinauralSpec {
    fn default() -> Self {
        Self {
            frequencies: FrequencySpec::default(),
            direction_deg: [90.0, 0.0],
            head_radius: DEFAULT_HEAD_RADIUS,
            ear_zone_offset: DEFAULT_EAR_ZONE_OFFSET,
            order: 6,
        }
    }
}

fn default_lambda_factor() -> f64 {
    DEFAULT_LAMBDA_FACTOR
}
fn default_doa_order() -> u32 {
    DEFAULT_DOA_ORDER
}
fn default_sigma_floor() -> f64 {
    DEFAULT_SIGMA_FLOOR
}
fn default_speed_of_sound() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}
fn default_methods() -> Vec<String> {
    Method::ALL.iter().map(|m| m.name().to_string()).collect()
}
fn default_radius_factors() -> Vec<f64> {
    DEFAULT_RADIUS_FACTORS.to_vec()
}
fn default_grid_spacing() -> f64 {
    DEFAULT_GRID_SPACING
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub geometry: GeometrySpec,
    pub zones: Vec<ZoneSpec>,
    pub frequency_hz: f64,
    pub primary: PrimarySpec,
    #[serde(default = "default_lambda_factor")]
    pub lambda_factor: f64,
    #[serde(default = "default_doa_order")]
    pub doa_order: u32,
    #[serde(default = "default_sigma_floor")]
    pub sigma_floor: f64,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_radius_factors")]
    pub radius_factors: Vec<f64>,
    #[serde(default = "default_grid_spacing")]
    pub grid_spacing: f64,
    #[serde(default)]
    pub binaural: BinauralSpec,
    /// Default output directory when `--out` is not given.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line overrides applied on top of the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub frequency_hz: Option<f64>,
    pub lambda_factor: Option<f64>,
    pub sigma_floor: Option<f64>,
    pub speed_of_sound: Option<f64>,
}

/// A scenario that passed validation, with its geometry loaded.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub array: ArrayGeometry,
    pub zones: ZoneSet,
    pub methods: Vec<Method>,
    pub directions: Vec<Direction>,
}

impl Scenario {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let mut s: Scenario = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(vec![format!("scenario: {e}")]))?;
        s.base_dir = base_dir.into();
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(vec![format!("scenario: {}: {e}", path.display())])
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.frequency_hz {
            self.frequency_hz = v;
        }
        if let Some(v) = o.lambda_factor {
            self.lambda_factor = v;
        }
        if let Some(v) = o.sigma_floor {
            self.sigma_floor = v;
        }
        if let Some(v) = o.speed_of_sound {
            self.speed_of_sound = v;
        }
    }

    pub fn doa(&self) -> DoaSettings {
        DoaSettings {
            order: self.doa_order,
            sigma_floor: self.sigma_floor,
        }
    }

    pub fn load_geometry(&self) -> Result<ArrayGeometry, String> {
        let result = match &self.geometry {
            GeometrySpec::File { path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    self.base_dir.join(path)
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| format!("geometry: {}: {e}", full.display()))?;
                ArrayGeometry::parse_point_file(&text).map(|mut g| {
                    g.label = full.display().to_string();
                    g
                })
            }
            GeometrySpec::Fibonacci { count, radius } => ArrayGeometry::fibonacci(*count, *radius),
            GeometrySpec::Tdesign121 { radius } => ArrayGeometry::tdesign121(*radius),
        };
        result.map_err(|e| format!("geometry: {e}"))
    }

    /// Checks every field and loads the geometry. All problems are reported
    /// together, each naming its field.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let mut errors = Vec::new();
        let positive = |v: f64| v > 0.0 && v.is_finite();

        if self.version != SCENARIO_VERSION {
            errors.push(format!(
                "version: unsupported version {} (expected {SCENARIO_VERSION})",
                self.version
            ));
        }
        if !positive(self.frequency_hz) {
            errors.push(format!(
                "frequency_hz: {} must be positive",
                self.frequency_hz
            ));
        }
        if !positive(self.speed_of_sound) {
            errors.push(format!(
                "speed_of_sound: {} must be positive",
                self.speed_of_sound
            ));
        }
        if !positive(self.lambda_factor) {
            errors.push(format!(
                "lambda_factor: {} must be positive",
                self.lambda_factor
            ));
        }
        if !(self.sigma_floor > 0.0 && self.sigma_floor <= 1.0) {
            errors.push(format!(
                "sigma_floor: {} must lie in (0, 1]",
                self.sigma_floor
            ));
        }
        if !positive(self.primary.distance) {
            errors.push(format!(
                "primary.distance: {} must be positive",
                self.primary.distance
            ));
        }
        if !positive(self.grid_spacing) {
            errors.push(format!(
                "grid_spacing: {} must be positive",
                self.grid_spacing
            ));
        }
        if self.radius_factors.is_empty() || !self.radius_factors.iter().all(|f| positive(*f)) {
            errors.push("radius_factors: need one or more positive factors".to_string());
        }
        let directions = self.primary.directions.directions();
        if directions.is_empty() {
            errors.push("primary.directions: no directions".to_string());
        }
        let mut methods = Vec::new();
        if self.methods.is_empty() {
            errors.push("methods: at least one method is required".to_string());
        }
        for m in &self.methods {
            match m.parse::<Method>() {
                Ok(m) if !methods.contains(&m) => methods.push(m),
                Ok(_) => errors.push(format!("methods: `{m}` listed twice")),
                Err(e) => errors.push(format!("methods: {e}")),
            }
        }
        match self.binaural.frequencies.frequencies() {
            Ok(f) if f.is_empty() => errors.push("binaural.frequencies: empty".to_string()),
            Ok(f) => {
                if let Some(bad) = f.iter().find(|f| !positive(**f)) {
                    errors.push(format!("binaural.frequencies: {bad} must be positive"));
                }
            }
            Err(e) => errors.push(format!("binaural.frequencies: {e}")),
        }
        if !positive(self.binaural.head_radius) {
            errors.push(format!(
                "binaural.head_radius: {} must be positive",
                self.binaural.head_radius
            ));
        }
        if !positive(self.binaural.ear_zone_offset) {
            errors.push(format!(
                "binaural.ear_zone_offset: {} must be positive",
                self.binaural.ear_zone_offset
            ));
        }

        let array = match self.load_geometry() {
            Ok(a) => Some(a),
            Err(e) => {
                errors.push(e);
                None
            }
        };

        let zones = ZoneSet::new(
            self.zones
                .iter()
                .map(|z| Position::from(z.center))
                .collect(),
            self.zones.iter().map(|z| z.order).collect(),
        );
        let zones = match zones {
            Ok(z) => Some(z),
            Err(e) => {
                errors.push(format!("zones: {e}"));
                None
            }
        };

        if let (Some(array), Some(zones)) = (&array, &zones) {
            let inner = array
                .positions()
                .iter()
                .map(|p| p.norm())
                .fold(f64::INFINITY, f64::min);
            for (q, c) in zones.centers().iter().enumerate() {
                if c.norm() >= inner {
                    errors.push(format!(
                        "zones[{q}].center: {:.4} m from the origin, not inside the array (innermost loudspeaker at {inner:.4} m)",
                        c.norm()
                    ));
                }
            }
        }

        if !errors.is_empty() {
            return Err(CliError::Validation(errors));
        }
        Ok(Resolved {
            scenario: self.clone(),
            array: array.expect("checked"),
            zones: zones.expect("checked"),
            methods,
            directions,
        })
    }
}

impl Resolved {
    pub fn wavenumber(&self) -> Wavenumber {
        Wavenumber::from_frequency(self.scenario.frequency_hz, self.scenario.speed_of_sound)
            .expect("validated")
    }

    pub fn sweep(&self) -> SweepScenario {
        SweepScenario {
            array: self.array.clone(),
            zones: self.zones.clone(),
            frequency_hz: self.scenario.frequency_hz,
            speed_of_sound: self.scenario.speed_of_sound,
            primary_distance: self.scenario.primary.distance,
            directions: self.directions.clone(),
            lambda_factor: self.scenario.lambda_factor,
            doa: self.scenario.doa(),
            methods: self.methods.clone(),
            radius_factors: self.scenario.radius_factors.clone(),
            grid_spacing: self.scenario.grid_spacing,
        }
    }

    pub fn binaural(&self) -> Result<BinauralScenario, CliError> {
        let b = &self.scenario.binaural;
        let head = HeadModel::new(Position::ORIGIN, b.head_radius)
            .map_err(|e| CliError::Validation(vec![format!("binaural.head_radius: {e}")]))?;
        let [theta, phi] = b.direction_deg;
        let scenario = BinauralScenario {
            array: self.array.clone(),
            primary: Direction::from_degrees(theta, phi).point_at(self.scenario.primary.distance),
            head,
            ear_zone_offset: b.ear_zone_offset,
            order: b.order,
            lambda_factor: self.scenario.lambda_factor,
            doa: self.scenario.doa(),
            speed_of_sound: self.scenario.speed_of_sound,
        };
        scenario
            .validate()
            .map_err(|e| CliError::Validation(vec![format!("binaural: {e}")]))?;
        Ok(scenario)
    }

    pub fn binaural_frequencies(&self) -> Vec<f64> {
        self.scenario
            .binaural
            .frequencies
            .frequencies()
            .expect("validated")
    }
}
