//! Strict JSON experiment configs.
//!
//! Every document has the shape
//!
//! ```json
//! { "schema_version": 1, "kind": "master", "params": { ... },
//!   "output": "out.csv", "seed": 7, "tolerances": { "trace": 1e-9 } }
//! ```
//!
//! Unknown keys are errors, and parsing reports every problem it finds rather
//! than stopping at the first. All quantities are dimensionless (hbar = 1,
//! lattice constant 1, energies in units of the hopping unless stated).

use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

/// Fock-space dimension cap for exact master-equation and trajectory runs.
pub const MASTER_DIMENSION_CAP: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub schema_version: u64,
    pub kind: Kind,
    pub params: Params,
    pub output: String,
    pub seed: u64,
    pub tolerances: ToleranceOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Collapse,
    Kick,
    Master,
    Trajectories,
    Spdm,
    RatesSweep,
    DampingSweep,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Collapse,
        Kind::Kick,
        Kind::Master,
        Kind::Trajectories,
        Kind::Spdm,
        Kind::RatesSweep,
        Kind::DampingSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Collapse => "collapse",
            Kind::Kick => "kick",
            Kind::Master => "master",
            Kind::Trajectories => "trajectories",
            Kind::Spdm => "spdm",
            Kind::RatesSweep => "rates-sweep",
            Kind::DampingSweep => "damping-sweep",
        }
    }

    fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Optional overrides; `None` keeps each kind's default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ToleranceOverrides {
    pub trace: Option<f64>,
    pub hermiticity: Option<f64>,
    pub positivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Collapse(CollapseParams),
    Kick(KickParams),
    Master(LatticeRunParams),
    Trajectories(LatticeRunParams),
    Spdm(SpdmParams),
    RatesSweep(RatesSweepParams),
    DampingSweep(DampingSweepParams),
}

/// Gaussian wavefunction of width `sigma0` collapsed by a Gaussian of width `l`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseParams {
    pub sigma0: f64,
    pub l: f64,
    /// Grid spans `[-half_width, half_width]`; default `10 (sigma0 + l)`.
    pub half_width: f64,
    pub points: usize,
    /// Write every `stride`-th grid point in each direction.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum KickShape {
    Gaussian { center: f64, spread: f64, samples: usize },
    Uniform { kmax: f64, samples: usize },
}

/// Gaussian wavefunction of width `sigma0` subject to a random momentum kick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KickParams {
    pub sigma0: f64,
    pub half_width: f64,
    pub points: usize,
    pub stride: usize,
    pub spectrum: KickShape,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryName {
    Periodic,
    HardWall,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeParams {
    pub sites: usize,
    pub particles: usize,
    pub hopping: f64,
    pub boundary: BoundaryName,
    /// On-site potential, one entry per site; zero when omitted.
    pub potential: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpSpec {
    SiteLocal,
    ThreePoint,
    Kernel { offsets: Vec<i64>, amplitudes: Vec<f64> },
    /// Momentum kicks; `weights` over the first zone, uniform when omitted.
    Kick { weights: Option<Vec<f64>> },
    /// Fluctuating potential with correlation time `tau_c` and spectrum `S_k`;
    /// fixes the rate to `tau_c / M`.
    Noise { tau_c: f64, spectrum: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Bloch { q: i64 },
    Fock { occupations: Vec<u32> },
    /// Equal-weight superposition of Fock states.
    Superposition { states: Vec<Vec<u32>> },
}

/// Shared by `master` and `trajectories`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeRunParams {
    pub lattice: LatticeParams,
    pub rate: f64,
    pub jumps: JumpSpec,
    pub initial: InitialState,
    pub total_time: f64,
    /// RK4 (or trajectory) step; `None` picks the default for the lattice.
    pub dt: Option<f64>,
    pub snapshot_stride: usize,
    /// `v_cm`, `x_cm`, `n:<site>`, `coherence:<row>:<col>` (Fock indices).
    pub observables: Vec<String>,
    /// Ensemble size; trajectories only.
    pub trajectories: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpdmParams {
    pub window: usize,
    pub hopping: f64,
    /// Potential `curvature * j^2` about the window center (hard wall only).
    pub curvature: f64,
    pub rate: f64,
    pub particles: f64,
    pub boundary: BoundaryName,
    /// Ring runs start from the ground state of a trap with this curvature.
    pub initial_curvature: f64,
    pub total_time: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitCoefficients {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MappingCoefficients {
    pub hopping_prefactor: f64,
    pub hopping_exponent: f64,
    pub hopping_decay: f64,
    pub interaction_prefactor: f64,
    pub interaction_exponent: f64,
}

/// `gamma'(V)` over lattice depths `V` in recoil units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatesSweepParams {
    pub depths: Vec<f64>,
    pub atoms: f64,
    pub sites: f64,
    pub fit: FitCoefficients,
    pub mapping: MappingCoefficients,
}

/// Fitted center-of-mass damping against event rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DampingSweepParams {
    pub sites: usize,
    pub particles: usize,
    pub hopping: f64,
    pub q: i64,
    pub rates: Vec<f64>,
    pub jumps: JumpSpec,
    pub total_time: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
}

impl ExperimentConfig {
    /// The config as JSON with every default filled in.
    pub fn resolved(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Parses and validates a config document, reporting every error found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let value: Value = serde_json::from_str(text).map_err(|e| vec![format!("malformed JSON: {e}")])?;
    let Some(map) = value.as_object() else {
        return Err(vec!["config must be a JSON object".into()]);
    };
    let mut errs = Vec::new();
    let mut top = Reader::new("", map);

    let schema_version = top.u64_req("schema_version", &mut errs);
    if top.has("schema_version") && schema_version != SCHEMA_VERSION {
        errs.push(format!("schema_version {schema_version} is not supported (expected {SCHEMA_VERSION})"));
    }
    let kind_name = top.str_req("kind", &mut errs);
    let kind = Kind::parse(&kind_name);
    if kind.is_none() && top.has("kind") {
        let names: Vec<_> = Kind::ALL.iter().map(|k| k.name()).collect();
        errs.push(format!("kind \"{kind_name}\" is not one of {}", names.join(", ")));
    }
    let default_output = format!("{}.csv", kind.map(Kind::name).unwrap_or("out"));
    let output = top.str_or("output", &default_output, &mut errs);
    let seed = top.u64_or("seed", 0, &mut errs);
    let tolerances = match top.obj("tolerances", &mut errs) {
        Some(mut t) => {
            let tol = ToleranceOverrides {
                trace: t.pos_opt("trace", &mut errs),
                hermiticity: t.pos_opt("hermiticity", &mut errs),
                positivity: t.pos_opt("positivity", &mut errs),
            };
            t.finish(&mut errs);
            tol
        }
        None => ToleranceOverrides::default(),
    };
    let empty = Map::new();
    let mut p = match top.obj("params", &mut errs) {
        Some(p) => p,
        None => {
            if !top.has("params") {
                errs.push("missing key \"params\"".into());
            }
            Reader::new("params", &empty)
        }
    };
    let params = kind.map(|k| parse_params(k, &mut p, &mut errs));
    p.finish(&mut errs);
    top.finish(&mut errs);

    match (errs.is_empty(), kind, params) {
        (true, Some(kind), Some(params)) => Ok(ExperimentConfig {
            schema_version,
            kind,
            params,
            output,
            seed,
            tolerances,
        }),
        _ => Err(errs),
    }
}

fn parse_params(kind: Kind, p: &mut Reader, errs: &mut Vec<String>) -> Params {
    match kind {
        Kind::Collapse => {
            let sigma0 = p.pos_req("sigma0", errs);
            let l = p.pos_req("l", errs);
            Params::Collapse(CollapseParams {
                sigma0,
                l,
                half_width: p.pos_or("half_width", 10.0 * (sigma0 + l), errs),
                points: p.count_or("points", 1024, 3, errs),
                stride: p.count_or("stride", 8, 1, errs),
            })
        }
        Kind::Kick => {
            let sigma0 = p.pos_req("sigma0", errs);
            let half_width = p.pos_or("half_width", 10.0 * sigma0, errs);
            let points = p.count_or("points", 512, 3, errs);
            let stride = p.count_or("stride", 4, 1, errs);
            let spectrum = match p.obj("spectrum", errs) {
                Some(mut s) => {
                    let shape = s.str_or("shape", "gaussian", errs);
                    let out = match shape.as_str() {
                        "gaussian" => KickShape::Gaussian {
                            center: s.f64_or("center", 0.0, errs),
                            spread: s.pos_req("spread", errs),
                            samples: s.count_or("samples", 256, 1, errs),
                        },
                        "uniform" => KickShape::Uniform {
                            kmax: s.pos_req("kmax", errs),
                            samples: s.count_or("samples", 64, 1, errs),
                        },
                        other => {
                            errs.push(format!("params.spectrum.shape \"{other}\" must be gaussian or uniform"));
                            KickShape::Uniform { kmax: 1.0, samples: 1 }
                        }
                    };
                    s.finish(errs);
                    out
                }
                None => {
                    errs.push("missing key \"params.spectrum\"".into());
                    KickShape::Uniform { kmax: 1.0, samples: 1 }
                }
            };
            Params::Kick(KickParams {
                sigma0,
                half_width,
                points,
                stride,
                spectrum,
            })
        }
        Kind::Master | Kind::Trajectories => {
            let run = parse_lattice_run(kind, p, errs);
            if kind == Kind::Master {
                Params::Master(run)
            } else {
                Params::Trajectories(run)
            }
        }
        Kind::Spdm => {
            let curvature = p.nonneg_or("curvature", 0.1, errs);
            let rate = p.nonneg_or("rate", 0.5, errs);
            let window = p.count_or("window", 41, 1, errs);
            if window.is_multiple_of(2) {
                errs.push(format!("params.window must be odd, got {window}"));
            }
            Params::Spdm(SpdmParams {
                window,
                hopping: p.f64_or("hopping", 1.0, errs),
                curvature,
                rate,
                particles: p.pos_or("particles", 1.0, errs),
                boundary: p.boundary_or("boundary", BoundaryName::HardWall, errs),
                initial_curvature: p.nonneg_or("initial_curvature", curvature, errs),
                total_time: p.nonneg_or("total_time", 4.0, errs),
                dt: p.pos_or("dt", 0.005, errs),
                snapshot_stride: p.count_or("snapshot_stride", 20, 1, errs),
            })
        }
        Kind::RatesSweep => {
            let depths = match (p.has("depths"), p.has("depth_range")) {
                (true, true) => {
                    errs.push("params: give either depths or depth_range, not both".into());
                    p.consume("depth_range");
                    p.f64_list_req("depths", errs)
                }
                (_, true) => match p.obj("depth_range", errs) {
                    Some(mut r) => {
                        let from = r.nonneg_req("from", errs);
                        let to = r.nonneg_req("to", errs);
                        let steps = r.count_or("steps", 21, 2, errs).max(2);
                        r.finish(errs);
                        (0..steps)
                            .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
                            .collect()
                    }
                    None => Vec::new(),
                },
                _ => p.f64_list_req("depths", errs),
            };
            if depths.iter().any(|v| !(*v >= 0.0)) {
                errs.push("params.depths must be non-negative".into());
            }
            let d = locev::rates::NHighFit::default();
            let fit = match p.obj("fit", errs) {
                Some(mut f) => {
                    let out = FitCoefficients {
                        c0: f.f64_or("c0", d.c0, errs),
                        c1: f.f64_or("c1", d.c1, errs),
                        c2: f.f64_or("c2", d.c2, errs),
                    };
                    f.finish(errs);
                    out
                }
                None => FitCoefficients { c0: d.c0, c1: d.c1, c2: d.c2 },
            };
            let m = locev::rates::DeepLatticeMapping::default();
            let mut mapping = MappingCoefficients {
                hopping_prefactor: m.hopping_prefactor,
                hopping_exponent: m.hopping_exponent,
                hopping_decay: m.hopping_decay,
                interaction_prefactor: m.interaction_prefactor,
                interaction_exponent: m.interaction_exponent,
            };
            if let Some(mut r) = p.obj("mapping", errs) {
                mapping = MappingCoefficients {
                    hopping_prefactor: r.pos_or("hopping_prefactor", mapping.hopping_prefactor, errs),
                    hopping_exponent: r.f64_or("hopping_exponent", mapping.hopping_exponent, errs),
                    hopping_decay: r.f64_or("hopping_decay", mapping.hopping_decay, errs),
                    interaction_prefactor: r.f64_or("interaction_prefactor", mapping.interaction_prefactor, errs),
                    interaction_exponent: r.f64_or("interaction_exponent", mapping.interaction_exponent, errs),
                };
                r.finish(errs);
            }
            Params::RatesSweep(RatesSweepParams {
                depths,
                atoms: p.nonneg_or("atoms", 80.0, errs),
                sites: p.pos_or("sites", 60.0, errs),
                fit,
                mapping,
            })
        }
        Kind::DampingSweep => {
            let rates = p.f64_list_req("rates", errs);
            if rates.iter().any(|r| !(*r > 0.0)) {
                errs.push("params.rates must be positive".into());
            }
            Params::DampingSweep(DampingSweepParams {
                sites: p.count_or("sites", 6, 2, errs),
                particles: p.count_or("particles", 2, 1, errs),
                hopping: p.f64_or("hopping", 1.0, errs),
                q: p.i64_or("q", 1, errs),
                rates,
                jumps: p.jumps_or("jumps", JumpSpec::SiteLocal, errs),
                total_time: p.pos_or("total_time", 5.0, errs),
                dt: p.pos_or("dt", 0.01, errs),
                snapshot_stride: p.count_or("snapshot_stride", 25, 1, errs),
            })
        }
    }
}

fn parse_lattice_run(kind: Kind, p: &mut Reader, errs: &mut Vec<String>) -> LatticeRunParams {
    let lattice = match p.obj("lattice", errs) {
        Some(mut l) => {
            let sites = l.count_req("sites", 1, errs);
            let out = LatticeParams {
                sites,
                particles: l.count_req("particles", 0, errs),
                hopping: l.f64_or("hopping", 1.0, errs),
                boundary: l.boundary_or("boundary", BoundaryName::Periodic, errs),
                potential: l.f64_list_opt("potential", errs),
            };
            if let Some(v) = &out.potential {
                if v.len() != sites {
                    errs.push(format!("params.lattice.potential has {} entries for {sites} sites", v.len()));
                }
            }
            l.finish(errs);
            out
        }
        None => {
            errs.push("missing key \"params.lattice\"".into());
            LatticeParams {
                sites: 1,
                particles: 0,
                hopping: 1.0,
                boundary: BoundaryName::Periodic,
                potential: None,
            }
        }
    };
    let jumps = p.jumps_or("jumps", JumpSpec::SiteLocal, errs);
    let rate = match &jumps {
        JumpSpec::Noise { tau_c, .. } => {
            if p.has("rate") {
                errs.push("params.rate is fixed by params.jumps.noise and must be omitted".into());
                p.consume("rate");
            }
            tau_c / lattice.sites.max(1) as f64
        }
        _ => p.nonneg_req("rate", errs),
    };
    let initial = match p.take("initial") {
        None => InitialState::Bloch { q: 1 },
        Some(Value::Object(m)) => {
            let mut r = Reader::new("params.initial", m);
            let out = match (r.has("bloch"), r.has("fock"), r.has("superposition")) {
                (true, false, false) => InitialState::Bloch { q: r.i64_or("bloch", 1, errs) },
                (false, true, false) => InitialState::Fock {
                    occupations: r.u32_list("fock", errs),
                },
                (false, false, true) => {
                    let states = match r.take("superposition") {
                        Some(Value::Array(a)) => a
                            .iter()
                            .enumerate()
                            .map(|(i, s)| occupation_list(s, &format!("params.initial.superposition[{i}]"), errs))
                            .collect(),
                        _ => {
                            errs.push("params.initial.superposition must be a list of occupation lists".into());
                            Vec::new()
                        }
                    };
                    InitialState::Superposition { states }
                }
                _ => {
                    errs.push("params.initial needs exactly one of bloch, fock, superposition".into());
                    for k in ["bloch", "fock", "superposition"] {
                        r.consume(k);
                    }
                    InitialState::Bloch { q: 0 }
                }
            };
            r.finish(errs);
            out
        }
        Some(_) => {
            errs.push("params.initial must be an object".into());
            InitialState::Bloch { q: 0 }
        }
    };
    let observables = match p.take("observables") {
        None => vec!["v_cm".to_string(), "x_cm".to_string()],
        Some(Value::Array(a)) => a
            .iter()
            .filter_map(|v| match v.as_str() {
                Some(s) => Some(s.to_string()),
                None => {
                    errs.push("params.observables must be strings".into());
                    None
                }
            })
            .collect(),
        Some(_) => {
            errs.push("params.observables must be a list".into());
            Vec::new()
        }
    };
    for o in &observables {
        if !valid_observable(o) {
            errs.push(format!(
                "params.observables entry \"{o}\" must be v_cm, x_cm, n:<site> or coherence:<row>:<col>"
            ));
        }
    }
    let trajectories = if kind == Kind::Trajectories {
        Some(p.count_or("trajectories", 1000, 1, errs))
    } else {
        None
    };
    LatticeRunParams {
        lattice,
        rate,
        jumps,
        initial,
        total_time: p.nonneg_req("total_time", errs),
        dt: p.pos_opt("dt", errs),
        snapshot_stride: p.count_or("snapshot_stride", 10, 1, errs),
        observables,
        trajectories,
    }
}

fn valid_observable(o: &str) -> bool {
    let parts: Vec<&str> = o.split(':').collect();
    match parts.as_slice() {
        ["v_cm"] | ["x_cm"] => true,
        ["n", s] => s.parse::<usize>().is_ok(),
        ["coherence", a, b] => a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok(),
        _ => false,
    }
}

fn occupation_list(v: &Value, path: &str, errs: &mut Vec<String>) -> Vec<u32> {
    match v.as_array() {
        Some(a) => a
            .iter()
            .filter_map(|x| match x.as_u64().and_then(|n| u32::try_from(n).ok()) {
                Some(n) => Some(n),
                None => {
                    errs.push(format!("{path} must hold non-negative integers"));
                    None
                }
            })
            .collect(),
        None => {
            errs.push(format!("{path} must be a list of occupations"));
            Vec::new()
        }
    }
}

/// Walks one JSON object, remembering which keys were read.
struct Reader<'a> {
    path: String,
    map: &'a Map<String, Value>,
    used: Vec<String>,
}

impl<'a> Reader<'a> {
    fn new(path: &str, map: &'a Map<String, Value>) -> Self {
        Self {
            path: path.to_string(),
            map,
            used: Vec::new(),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn has(&self, k: &str) -> bool {
        self.map.contains_key(k)
    }

    fn consume(&mut self, k: &str) {
        self.used.push(k.to_string());
    }

    fn take(&mut self, k: &str) -> Option<&'a Value> {
        self.consume(k);
        self.map.get(k)
    }

    fn finish(self, errs: &mut Vec<String>) {
        for k in self.map.keys() {
            if !self.used.iter().any(|u| u == k) {
                errs.push(format!("unknown key \"{}\"", self.key(k)));
            }
        }
    }

    fn obj(&mut self, k: &str, errs: &mut Vec<String>) -> Option<Reader<'a>> {
        let path = self.key(k);
        match self.take(k)? {
            Value::Object(m) => Some(Reader::new(&path, m)),
            _ => {
                errs.push(format!("{path} must be an object"));
                None
            }
        }
    }

    fn number(&mut self, k: &str, errs: &mut Vec<String>) -> Option<f64> {
        let path = self.key(k);
        let v = self.take(k)?;
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                errs.push(format!("{path} must be a finite number"));
                None
            }
        }
    }

    fn f64_or(&mut self, k: &str, default: f64, errs: &mut Vec<String>) -> f64 {
        self.number(k, errs).unwrap_or(default)
    }

    fn checked(&mut self, k: &str, errs: &mut Vec<String>, ok: fn(f64) -> bool, what: &str) -> Option<f64> {
        let x = self.number(k, errs)?;
        if !ok(x) {
            errs.push(format!("{} must be {what}, got {x}", self.key(k)));
        }
        Some(x)
    }

    fn missing(&self, k: &str, errs: &mut Vec<String>) {
        if !self.has(k) {
            errs.push(format!("missing key \"{}\"", self.key(k)));
        }
    }

    fn pos_opt(&mut self, k: &str, errs: &mut Vec<String>) -> Option<f64> {
        self.checked(k, errs, |x| x > 0.0, "positive")
    }

    fn pos_or(&mut self, k: &str, default: f64, errs: &mut Vec<String>) -> f64 {
        self.pos_opt(k, errs).unwrap_or(default)
    }

    fn pos_req(&mut self, k: &str, errs: &mut Vec<String>) -> f64 {
        self.missing(k, errs);
        self.pos_or(k, 1.0, errs)
    }

    fn nonneg_or(&mut self, k: &str, default: f64, errs: &mut Vec<String>) -> f64 {
        self.checked(k, errs, |x| x >= 0.0, "non-negative").unwrap_or(default)
    }

    fn nonneg_req(&mut self, k: &str, errs: &mut Vec<String>) -> f64 {
        self.missing(k, errs);
        self.nonneg_or(k, 0.0, errs)
    }

    fn u64_or(&mut self, k: &str, default: u64, errs: &mut Vec<String>) -> u64 {
        let path = self.key(k);
        match self.take(k) {
            None => default,
            Some(v) => v.as_u64().unwrap_or_else(|| {
                errs.push(format!("{path} must be a non-negative integer"));
                default
            }),
        }
    }

    fn u64_req(&mut self, k: &str, errs: &mut Vec<String>) -> u64 {
        self.missing(k, errs);
        self.u64_or(k, 0, errs)
    }

    fn i64_or(&mut self, k: &str, default: i64, errs: &mut Vec<String>) -> i64 {
        let path = self.key(k);
        match self.take(k) {
            None => default,
            Some(v) => v.as_i64().unwrap_or_else(|| {
                errs.push(format!("{path} must be an integer"));
                default
            }),
        }
    }

    fn count_or(&mut self, k: &str, default: usize, min: usize, errs: &mut Vec<String>) -> usize {
        let n = self.u64_or(k, default as u64, errs) as usize;
        if n < min {
            errs.push(format!("{} must be at least {min}, got {n}", self.key(k)));
        }
        n
    }

    fn count_req(&mut self, k: &str, min: usize, errs: &mut Vec<String>) -> usize {
        self.missing(k, errs);
        self.count_or(k, min, min, errs)
    }

    fn str_or(&mut self, k: &str, default: &str, errs: &mut Vec<String>) -> String {
        let path = self.key(k);
        match self.take(k) {
            None => default.to_string(),
            Some(v) => match v.as_str() {
                Some(s) => s.to_string(),
                None => {
                    errs.push(format!("{path} must be a string"));
                    default.to_string()
                }
            },
        }
    }

    fn str_req(&mut self, k: &str, errs: &mut Vec<String>) -> String {
        self.missing(k, errs);
        self.str_or(k, "", errs)
    }

    fn f64_list_opt(&mut self, k: &str, errs: &mut Vec<String>) -> Option<Vec<f64>> {
        let path = self.key(k);
        let v = self.take(k)?;
        match v.as_array() {
            Some(a) => Some(
                a.iter()
                    .map(|x| match x.as_f64() {
                        Some(f) if f.is_finite() => f,
                        _ => {
                            errs.push(format!("{path} must hold finite numbers"));
                            0.0
                        }
                    })
                    .collect(),
            ),
            None => {
                errs.push(format!("{path} must be a list of numbers"));
                None
            }
        }
    }

    fn f64_list_req(&mut self, k: &str, errs: &mut Vec<String>) -> Vec<f64> {
        self.missing(k, errs);
        self.f64_list_opt(k, errs).unwrap_or_default()
    }

    fn u32_list(&mut self, k: &str, errs: &mut Vec<String>) -> Vec<u32> {
        let path = self.key(k);
        match self.take(k) {
            Some(v) => occupation_list(v, &path, errs),
            None => Vec::new(),
        }
    }

    fn boundary_or(&mut self, k: &str, default: BoundaryName, errs: &mut Vec<String>) -> BoundaryName {
        let path = self.key(k);
        match self.take(k) {
            None => default,
            Some(Value::String(s)) if s == "periodic" => BoundaryName::Periodic,
            Some(Value::String(s)) if s == "hard-wall" => BoundaryName::HardWall,
            Some(_) => {
                errs.push(format!("{path} must be \"periodic\" or \"hard-wall\""));
                default
            }
        }
    }

    fn jumps_or(&mut self, k: &str, default: JumpSpec, errs: &mut Vec<String>) -> JumpSpec {
        let path = self.key(k);
        match self.take(k) {
            None => default,
            Some(Value::String(s)) => match s.as_str() {
                "site-local" => JumpSpec::SiteLocal,
                "three-point" => JumpSpec::ThreePoint,
                "kick" => JumpSpec::Kick { weights: None },
                other => {
                    errs.push(format!(
                        "{path} \"{other}\" must be site-local, three-point, kick, or an object with kernel, kick or noise"
                    ));
                    default
                }
            },
            Some(Value::Object(m)) => {
                let mut r = Reader::new(&path, m);
                let out = if r.has("kernel") {
                    let mut kr = r.obj("kernel", errs).unwrap_or_else(|| Reader::new("", &EMPTY));
                    let offsets = kr
                        .f64_list_req("offsets", errs)
                        .iter()
                        .map(|&x| {
                            if x.fract() != 0.0 {
                                errs.push(format!("{path}.kernel.offsets must be integers"));
                            }
                            x as i64
                        })
                        .collect::<Vec<_>>();
                    let amplitudes = kr.f64_list_req("amplitudes", errs);
                    if offsets.len() != amplitudes.len() {
                        errs.push(format!("{path}.kernel offsets and amplitudes differ in length"));
                    }
                    kr.finish(errs);
                    JumpSpec::Kernel { offsets, amplitudes }
                } else if r.has("kick") {
                    let mut kr = r.obj("kick", errs).unwrap_or_else(|| Reader::new("", &EMPTY));
                    let weights = kr.f64_list_opt("weights", errs);
                    kr.finish(errs);
                    JumpSpec::Kick { weights }
                } else if r.has("noise") {
                    let mut nr = r.obj("noise", errs).unwrap_or_else(|| Reader::new("", &EMPTY));
                    let tau_c = nr.nonneg_req("tau_c", errs);
                    let spectrum = nr.f64_list_req("spectrum", errs);
                    nr.finish(errs);
                    JumpSpec::Noise { tau_c, spectrum }
                } else {
                    errs.push(format!("{path} object needs one of kernel, kick, noise"));
                    default
                };
                r.finish(errs);
                out
            }
            Some(_) => {
                errs.push(format!("{path} must be a string or an object"));
                default
            }
        }
    }
}

static EMPTY: std::sync::LazyLock<Map<String, Value>> = std::sync::LazyLock::new(Map::new);
