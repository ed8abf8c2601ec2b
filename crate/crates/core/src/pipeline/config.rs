use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calib::{EfficiencyBudget, GainBranch};
use crate::error::{Error, Result};
use crate::gaussian::{CovarianceUnits, SavGolConfig, ScanConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub center_nm: f64,
    pub half_span_nm: f64,
    pub resolution_nm: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            center_nm: 1560.0,
            half_span_nm: 160.0,
            resolution_nm: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpShapeName {
    Gaussian,
    Sech2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    pub center_nm: f64,
    /// FWHM of the intensity spectrum.
    pub bandwidth_nm: f64,
    pub shape: PumpShapeName,
}

impl Default for PumpSection {
    fn default() -> Self {
        Self {
            center_nm: 780.0,
            bandwidth_nm: 2.0,
            shape: PumpShapeName::Gaussian,
        }
    }
}

/// Δk polynomial in mm⁻¹ of the detunings (rad/ps). When `c20`/`c02` are
/// absent they are tuned (kept equal) so the leading supermode has HG0
/// width `fit_width_nm`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseMatchSection {
    pub length_mm: f64,
    pub c10: f64,
    pub c01: f64,
    pub c11: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c20: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c02: Option<f64>,
    pub fit_width_nm: f64,
    pub c2_search: [f64; 2],
}

impl Default for PhaseMatchSection {
    fn default() -> Self {
        Self {
            length_mm: 15.0,
            c10: 0.1,
            c01: 0.1,
            c11: 0.0,
            c20: None,
            c02: None,
            fit_width_nm: 45.0,
            c2_search: [1e-6, 1e-3],
        }
    }
}

/// Either an explicit `g` or the squeezing of the leading supermode after
/// detection efficiency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpScaleSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    pub target_db: f64,
}

impl Default for PumpScaleSection {
    fn default() -> Self {
        Self {
            g: None,
            target_db: -2.5,
        }
    }
}

/// The source defaults have K ≈ 34; 128 modes keep the discarded tail
/// below 1e-9 where 64 would drop about 0.5% of the norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchmidtSection {
    pub max_modes: usize,
}

impl Default for SchmidtSection {
    fn default() -> Self {
        Self { max_modes: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrexelSection {
    pub span_lo_nm: f64,
    pub span_hi_nm: f64,
    pub bands: usize,
}

impl Default for FrexelSection {
    fn default() -> Self {
        Self {
            span_lo_nm: 1532.0,
            span_hi_nm: 1588.0,
            bands: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSection {
    pub hg_modes: usize,
    pub flat_modes: usize,
    /// HG0 full 1/e width; defaults to the fitted leading-supermode width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hg_width_nm: Option<f64>,
    pub frexel: FrexelSection,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self {
            hg_modes: 21,
            flat_modes: 4,
            hg_width_nm: None,
            frexel: FrexelSection::default(),
        }
    }
}

/// Spectral window applied to the LO shapes. With `fit = true` the window
/// is fitted to the reference clipped-HG singular values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClippingSection {
    pub enabled: bool,
    pub fit: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi_nm: Option<f64>,
    pub threshold: f64,
}

impl Default for ClippingSection {
    fn default() -> Self {
        Self {
            enabled: false,
            fit: true,
            lo_nm: None,
            hi_nm: None,
            threshold: 0.1,
        }
    }
}

/// Detection efficiency: the budget factors, or `eta` directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub eta_pd: f64,
    pub eta_opt: f64,
    pub visibility: f64,
    pub snr_db: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            eta: None,
            eta_pd: 0.85,
            eta_opt: 1.0,
            visibility: 0.77,
            snr_db: 20.0,
        }
    }
}

impl LossSection {
    pub fn budget(&self) -> Result<EfficiencyBudget> {
        EfficiencyBudget::from_measurements(self.eta_pd, self.eta_opt, self.visibility, self.snr_db)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub topologies: Vec<String>,
    /// Supermode feeding each node; identity when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_permutation: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjacency_csv: Option<PathBuf>,
}

impl Default for ClusterSection {
    fn default() -> Self {
        Self {
            topologies: crate::cluster::PRESETS.iter().map(|s| s.to_string()).collect(),
            node_permutation: None,
            adjacency_csv: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub shot_samples_per_point: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            shot_samples_per_point: crate::gaussian::NoiseConfig::default().shot_samples_per_point,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSection {
    pub scan: ScanConfig,
    pub noise: NoiseSection,
    pub sg: SavGolConfig,
    /// Also write every synthetic trace.
    pub write_traces: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PptSection {
    pub tol: f64,
    /// Measured CM to scan instead of the simulated frexel CM.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cm_path: Option<PathBuf>,
    pub cm_units: CovarianceUnits,
}

impl Default for PptSection {
    fn default() -> Self {
        Self {
            tol: crate::entanglement::TOL_PPT,
            cm_path: None,
            cm_units: CovarianceUnits::VacuumHalf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupermodesSection {
    pub cross_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cm_path: Option<PathBuf>,
    pub cm_units: CovarianceUnits,
}

impl Default for SupermodesSection {
    fn default() -> Self {
        Self {
            cross_tol: crate::entanglement::DEFAULT_CROSS_TOL,
            cm_path: None,
            cm_units: CovarianceUnits::VacuumHalf,
        }
    }
}

/// Synthetic gain data used when no data file is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticGain {
    pub eta_psa: f64,
    pub p_min_w: f64,
    pub p_max_w: f64,
    pub points: usize,
    /// Relative (multiplicative) Gaussian noise on the gain.
    pub noise: f64,
}

impl Default for SyntheticGain {
    fn default() -> Self {
        Self {
            eta_psa: crate::calib::ETA_SHG,
            p_min_w: 1e-3,
            p_max_w: 1e-2,
            points: 10,
            noise: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainFitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plus_csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minus_csv: Option<PathBuf>,
    pub synthetic: SyntheticGain,
}

impl Default for GainFitSection {
    fn default() -> Self {
        Self {
            plus_csv: None,
            minus_csv: None,
            synthetic: SyntheticGain::default(),
        }
    }
}

impl GainFitSection {
    pub fn data_path(&self, branch: GainBranch) -> Option<&Path> {
        match branch {
            GainBranch::Plus => self.plus_csv.as_deref(),
            GainBranch::Minus => self.minus_csv.as_deref(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsSection {
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("sqsim-out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        }
    }
}

/// Full experiment description. Every field has a default; the defaults
/// describe the 1560 nm ppKTP waveguide source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// At most i64::MAX so the config survives a TOML round trip.
    pub seed: u64,
    pub grid: GridSection,
    pub pump: PumpSection,
    pub phasematch: PhaseMatchSection,
    pub pump_scale: PumpScaleSection,
    pub schmidt: SchmidtSection,
    pub basis: BasisSection,
    pub clipping: ClippingSection,
    pub loss: LossSection,
    pub cluster: ClusterSection,
    pub trace: TraceSection,
    pub ppt: PptSection,
    pub supermodes: SupermodesSection,
    pub gainfit: GainFitSection,
    pub outputs: OutputsSection,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// Parse a `--set` value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Set `path` (dotted) in `table`, creating intermediate tables.
pub fn set_dotted(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_err(format!("bad key path {path:?}")));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("{path}: {k} is not a table")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parse TOML text and apply `key=value` overrides.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(config_err)?;
        for ov in overrides {
            let (k, v) = ov
                .split_once('=')
                .ok_or_else(|| config_err(format!("override {ov:?} is not key=value")))?;
            set_dotted(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Read a config file. Relative data-file paths are taken relative to
    /// the file's directory; `outputs.dir` stays relative to the working
    /// directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_with_overrides(&text, overrides).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.ppt.cm_path,
            &mut cfg.supermodes.cm_path,
            &mut cfg.cluster.adjacency_csv,
            &mut cfg.gainfit.plus_csv,
            &mut cfg.gainfit.minus_csv,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    pub fn wants(&self, f: OutputFormat) -> bool {
        self.outputs.formats.contains(&f)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(config_err(format!("{field}: {why}")));
        let g = &self.grid;
        if !(g.resolution_nm > 0.0 && g.half_span_nm > g.resolution_nm) {
            return bad("grid", "need 0 < resolution_nm < half_span_nm".into());
        }
        if !(self.pump.center_nm > 0.0 && self.pump.bandwidth_nm > 0.0) {
            return bad("pump", "center_nm and bandwidth_nm must be positive".into());
        }
        let pm = &self.phasematch;
        if !(pm.length_mm > 0.0) {
            return bad("phasematch.length_mm", format!("{} must be positive", pm.length_mm));
        }
        if pm.c20.is_some() != pm.c02.is_some() {
            return bad("phasematch", "give both c20 and c02 or neither".into());
        }
        if !(pm.c2_search[0] > 0.0 && pm.c2_search[1] > pm.c2_search[0]) {
            return bad("phasematch.c2_search", "need 0 < lo < hi".into());
        }
        if let Some(gv) = self.pump_scale.g {
            if !(gv >= 0.0) {
                return bad("pump_scale.g", format!("{gv} must be ≥ 0"));
            }
        } else if !(self.pump_scale.target_db < 0.0) {
            return bad("pump_scale.target_db", "must be negative (squeezing)".into());
        }
        if self.schmidt.max_modes == 0 {
            return bad("schmidt.max_modes", "must be ≥ 1".into());
        }
        let b = &self.basis;
        if b.hg_modes == 0 || b.flat_modes > b.hg_modes {
            return bad("basis", "need hg_modes ≥ 1 and flat_modes ≤ hg_modes".into());
        }
        if b.frexel.bands < 2 || !(b.frexel.span_hi_nm > b.frexel.span_lo_nm) {
            return bad("basis.frexel", "need ≥ 2 bands over an increasing span".into());
        }
        let c = &self.clipping;
        if c.enabled && !c.fit && (c.lo_nm.is_none() || c.hi_nm.is_none()) {
            return bad("clipping", "lo_nm and hi_nm are required when fit = false".into());
        }
        if !(c.threshold > 0.0 && c.threshold < 1.0) {
            return bad("clipping.threshold", format!("{} outside (0, 1)", c.threshold));
        }
        if let Some(eta) = self.loss.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad("loss.eta", format!("{eta} outside (0, 1]"));
            }
        } else {
            self.loss.budget().map_err(|e| config_err(format!("loss: {e}")))?;
        }
        for t in &self.cluster.topologies {
            if t != "custom" && !crate::cluster::PRESETS.contains(&t.as_str()) {
                return Err(Error::UnknownPreset(t.clone()));
            }
            if t == "custom" && self.cluster.adjacency_csv.is_none() {
                return bad("cluster", "topology 'custom' needs adjacency_csv".into());
            }
        }
        self.trace.scan.validate().map_err(|e| config_err(format!("trace.scan: {e}")))?;
        self.trace.sg.validate().map_err(|e| config_err(format!("trace.sg: {e}")))?;
        let s = &self.gainfit.synthetic;
        if !(s.p_min_w > 0.0 && s.p_max_w > s.p_min_w && s.points >= 2 && s.eta_psa >= 0.0 && s.noise >= 0.0) {
            return bad("gainfit.synthetic", "need 0 < p_min_w < p_max_w, points ≥ 2, eta_psa ≥ 0, noise ≥ 0".into());
        }
        if self.outputs.formats.is_empty() {
            return bad("outputs.formats", "at least one of csv, json".into());
        }
        Ok(())
    }
}
