//! Strict JSON scenario configuration.
//!
//! Every section and key is optional except `scenario`; unknown keys are rejected with the
//! nearest known key as a suggestion, and every validation error names the full key path.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Free,
    Harmonic,
    Coherent,
    Anharmonic,
    DoubleWellStationary,
    Instanton,
    TunnelingDynamics,
    Compare,
}

impl Scenario {
    pub const ALL: [(&'static str, Scenario); 8] = [
        ("free", Scenario::Free),
        ("harmonic", Scenario::Harmonic),
        ("coherent", Scenario::Coherent),
        ("anharmonic", Scenario::Anharmonic),
        ("double_well_stationary", Scenario::DoubleWellStationary),
        ("instanton", Scenario::Instanton),
        ("tunneling_dynamics", Scenario::TunnelingDynamics),
        ("compare", Scenario::Compare),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL
            .iter()
            .find(|(_, s)| *s == self)
            .map(|(n, _)| *n)
            .unwrap_or("?")
    }

    /// Potential family the scenario runs in.
    pub fn potential_kind(self) -> PotentialKind {
        match self {
            Scenario::Free => PotentialKind::Free,
            Scenario::Harmonic | Scenario::Coherent => PotentialKind::Harmonic,
            Scenario::Anharmonic | Scenario::Compare => PotentialKind::Quartic,
            Scenario::DoubleWellStationary | Scenario::Instanton | Scenario::TunnelingDynamics => {
                PotentialKind::DoubleWell
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Free,
    Harmonic,
    Quartic,
    DoubleWell,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialConfig {
    pub m: f64,
    pub omega: f64,
    pub lambda: f64,
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketConfig {
    pub center: f64,
    pub momentum: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrigadeSection {
    pub dt: f64,
    pub n_steps: usize,
    pub significance_eps: f64,
    /// Keep every `thin`-th trajectory packet.
    pub thin: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeSection {
    pub t_end: f64,
    pub n_frames: usize,
    pub frames_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumChoice {
    Frozen,
    WithMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TunnelingSection {
    pub instanton_samples: usize,
    pub smoothing_tau: f64,
    pub momentum_mode: MomentumChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub potential: PotentialConfig,
    pub packet: PacketConfig,
    pub brigade: BrigadeSection,
    pub grid: GridSection,
    pub time: TimeSection,
    pub tunneling: TunnelingSection,
    /// Not part of the digest: where results go does not change what they are.
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Defaults for a scenario; `parse_config` overlays the file on top of these.
    pub fn defaults(scenario: Scenario) -> Self {
        let kind = scenario.potential_kind();
        let potential = PotentialConfig {
            m: 1.0,
            omega: 1.0,
            lambda: if kind == PotentialKind::DoubleWell { 1.0 } else { 0.25 },
            f: 1.4,
        };
        let packet = match kind {
            PotentialKind::Quartic => PacketConfig {
                center: 1.5,
                momentum: 0.0,
                gamma_re: 1.0,
                gamma_im: 0.0,
            },
            PotentialKind::Harmonic if scenario == Scenario::Coherent => PacketConfig {
                center: 2.0,
                momentum: 0.0,
                gamma_re: 1.0,
                gamma_im: 0.0,
            },
            _ => PacketConfig {
                center: 0.0,
                momentum: 0.0,
                gamma_re: 1.0,
                gamma_im: 0.0,
            },
        };
        let t_end = match kind {
            // A spreading free packet reaches the default grid edge soon after t = 1.
            PotentialKind::Free => 1.0,
            PotentialKind::Harmonic => 2.0 * std::f64::consts::PI,
            PotentialKind::Quartic => 5.0,
            PotentialKind::DoubleWell => 60.0,
        };
        Self {
            scenario,
            potential,
            packet,
            // Quartic runs cover about one center oscillation with a thinned basis.
            brigade: if kind == PotentialKind::Quartic {
                BrigadeSection {
                    dt: 0.0625,
                    n_steps: 80,
                    significance_eps: 1e-8,
                    thin: 2,
                }
            } else {
                BrigadeSection {
                    dt: 0.05,
                    n_steps: 40,
                    significance_eps: 1e-8,
                    thin: 1,
                }
            },
            grid: GridSection {
                x_min: -12.0,
                x_max: 12.0,
                n_points: 1024,
                dt: 1e-3,
            },
            time: TimeSection {
                t_end,
                n_frames: 50,
                frames_every: 1,
            },
            tunneling: TunnelingSection {
                instanton_samples: 10,
                smoothing_tau: 10.0,
                momentum_mode: MomentumChoice::Frozen,
            },
            output_dir: None,
        }
    }

    /// Canonical JSON of the fully resolved configuration (keys sorted).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&serde_json::to_value(self).expect("config serializes")).expect("value serializes")
    }
}

const TOP_KEYS: &[&str] = &[
    "scenario",
    "potential",
    "packet",
    "brigade",
    "grid",
    "time",
    "tunneling",
    "output",
];
const POTENTIAL_KEYS: &[&str] = &["m", "omega", "lambda", "f"];
const PACKET_KEYS: &[&str] = &["center", "momentum", "gamma_re", "gamma_im"];
const BRIGADE_KEYS: &[&str] = &["dt", "n_steps", "significance_eps", "thin"];
const GRID_KEYS: &[&str] = &["x_min", "x_max", "n_points", "dt"];
const TIME_KEYS: &[&str] = &["t_end", "n_frames", "frames_every"];
const TUNNELING_KEYS: &[&str] = &["instanton_samples", "smoothing_tau", "momentum_mode"];
const OUTPUT_KEYS: &[&str] = &["dir"];

fn suggestion(key: &str, known: &[&str]) -> String {
    known
        .iter()
        .map(|k| (strsim::jaro_winkler(key, k), *k))
        // First of any tied candidates, so suggestions follow declaration order.
        .fold(None, |best: Option<(f64, &str)>, c| match best {
            Some(b) if b.0 >= c.0 => Some(b),
            _ => Some(c),
        })
        .filter(|(score, _)| *score > 0.7)
        .map(|(_, k)| format!("; did you mean \"{k}\"?"))
        .unwrap_or_default()
}

fn check_keys(map: &Map<String, Value>, known: &[&str], prefix: &str) -> Result<(), CliError> {
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            let path = if prefix.is_empty() {
                key.clone()
            } else {
                format!("{prefix}.{key}")
            };
            return Err(CliError::config(
                &path,
                format!("unknown key{}", suggestion(key, known)),
            ));
        }
    }
    Ok(())
}

fn section<'a>(
    root: &'a Map<String, Value>,
    name: &str,
    known: &[&str],
) -> Result<Option<&'a Map<String, Value>>, CliError> {
    match root.get(name) {
        None => Ok(None),
        Some(Value::Object(map)) => {
            check_keys(map, known, name)?;
            Ok(Some(map))
        }
        Some(_) => Err(CliError::config(name, "expected an object")),
    }
}

fn number(map: Option<&Map<String, Value>>, section: &str, key: &str, target: &mut f64) -> Result<(), CliError> {
    if let Some(v) = map.and_then(|m| m.get(key)) {
        *target = v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::config(&format!("{section}.{key}"), "expected a finite number"))?;
    }
    Ok(())
}

fn count(map: Option<&Map<String, Value>>, section: &str, key: &str, target: &mut usize) -> Result<(), CliError> {
    if let Some(v) = map.and_then(|m| m.get(key)) {
        *target = v
            .as_u64()
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| CliError::config(&format!("{section}.{key}"), "expected a non-negative integer"))?;
    }
    Ok(())
}

fn require(ok: bool, path: &str, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, msg))
    }
}

/// Parse and validate a configuration from JSON text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let root = value
        .as_object()
        .ok_or_else(|| CliError::config("(root)", "expected a JSON object"))?;
    check_keys(root, TOP_KEYS, "")?;

    let name = root
        .get("scenario")
        .ok_or_else(|| CliError::config("scenario", "missing required key"))?
        .as_str()
        .ok_or_else(|| CliError::config("scenario", "expected a string"))?;
    let scenario = Scenario::ALL
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            let names: Vec<&str> = Scenario::ALL.iter().map(|(n, _)| *n).collect();
            CliError::config(
                "scenario",
                format!("unknown scenario \"{name}\"{}", suggestion(name, &names)),
            )
        })?;
    let mut cfg = ScenarioConfig::defaults(scenario);

    let pot = section(root, "potential", POTENTIAL_KEYS)?;
    number(pot, "potential", "m", &mut cfg.potential.m)?;
    number(pot, "potential", "omega", &mut cfg.potential.omega)?;
    number(pot, "potential", "lambda", &mut cfg.potential.lambda)?;
    number(pot, "potential", "f", &mut cfg.potential.f)?;

    let packet = section(root, "packet", PACKET_KEYS)?;
    number(packet, "packet", "center", &mut cfg.packet.center)?;
    number(packet, "packet", "momentum", &mut cfg.packet.momentum)?;
    number(packet, "packet", "gamma_re", &mut cfg.packet.gamma_re)?;
    number(packet, "packet", "gamma_im", &mut cfg.packet.gamma_im)?;

    let brigade = section(root, "brigade", BRIGADE_KEYS)?;
    number(brigade, "brigade", "dt", &mut cfg.brigade.dt)?;
    count(brigade, "brigade", "n_steps", &mut cfg.brigade.n_steps)?;
    number(
        brigade,
        "brigade",
        "significance_eps",
        &mut cfg.brigade.significance_eps,
    )?;
    count(brigade, "brigade", "thin", &mut cfg.brigade.thin)?;

    let grid = section(root, "grid", GRID_KEYS)?;
    number(grid, "grid", "x_min", &mut cfg.grid.x_min)?;
    number(grid, "grid", "x_max", &mut cfg.grid.x_max)?;
    count(grid, "grid", "n_points", &mut cfg.grid.n_points)?;
    number(grid, "grid", "dt", &mut cfg.grid.dt)?;

    let time = section(root, "time", TIME_KEYS)?;
    number(time, "time", "t_end", &mut cfg.time.t_end)?;
    count(time, "time", "n_frames", &mut cfg.time.n_frames)?;
    count(time, "time", "frames_every", &mut cfg.time.frames_every)?;

    let tunneling = section(root, "tunneling", TUNNELING_KEYS)?;
    count(
        tunneling,
        "tunneling",
        "instanton_samples",
        &mut cfg.tunneling.instanton_samples,
    )?;
    number(
        tunneling,
        "tunneling",
        "smoothing_tau",
        &mut cfg.tunneling.smoothing_tau,
    )?;
    if let Some(v) = tunneling.and_then(|m| m.get("momentum_mode")) {
        cfg.tunneling.momentum_mode = match v.as_str() {
            Some("frozen") => MomentumChoice::Frozen,
            Some("with_momentum") => MomentumChoice::WithMomentum,
            _ => {
                return Err(CliError::config(
                    "tunneling.momentum_mode",
                    "expected \"frozen\" or \"with_momentum\"",
                ))
            }
        };
    }

    if let Some(out) = section(root, "output", OUTPUT_KEYS)? {
        if let Some(v) = out.get("dir") {
            let dir = v
                .as_str()
                .filter(|s| !s.is_empty())
                .ok_or_else(|| CliError::config("output.dir", "expected a non-empty string"))?;
            cfg.output_dir = Some(PathBuf::from(dir));
        }
    }

    validate(&cfg)?;
    Ok(cfg)
}

/// Read, parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse_config_str(&text)
}

fn validate(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let p = &cfg.potential;
    require(p.m > 0.0, "potential.m", "must be positive")?;
    match cfg.scenario.potential_kind() {
        PotentialKind::Harmonic => require(p.omega > 0.0, "potential.omega", "must be positive")?,
        PotentialKind::Quartic => require(p.lambda > 0.0, "potential.lambda", "must be positive")?,
        PotentialKind::DoubleWell => {
            require(p.lambda > 0.0, "potential.lambda", "must be positive")?;
            require(p.f > 0.0, "potential.f", "must be positive")?;
        }
        PotentialKind::Free => {}
    }
    require(cfg.packet.gamma_re > 0.0, "packet.gamma_re", "must be positive")?;

    let b = &cfg.brigade;
    require(b.dt > 0.0, "brigade.dt", "must be positive")?;
    require(b.n_steps >= 1, "brigade.n_steps", "must be at least 1")?;
    require(
        b.significance_eps > 0.0 && b.significance_eps < 1.0,
        "brigade.significance_eps",
        "must lie in (0, 1)",
    )?;
    require(b.thin >= 1, "brigade.thin", "must be at least 1")?;

    let g = &cfg.grid;
    require(g.x_max > g.x_min, "grid.x_max", "must exceed grid.x_min")?;
    require(g.n_points >= 16, "grid.n_points", "must be at least 16")?;
    require(g.dt > 0.0, "grid.dt", "must be positive")?;

    let t = &cfg.time;
    require(t.t_end > 0.0, "time.t_end", "must be positive")?;
    require(t.n_frames >= 1, "time.n_frames", "must be at least 1")?;
    require(t.frames_every >= 1, "time.frames_every", "must be at least 1")?;

    let tu = &cfg.tunneling;
    require(
        tu.instanton_samples >= 3,
        "tunneling.instanton_samples",
        "must be at least 3",
    )?;
    require(
        tu.smoothing_tau >= 0.0,
        "tunneling.smoothing_tau",
        "must be non-negative",
    )?;
    Ok(())
}
