use std::fs::File;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::manifest::{read_manifest, start_clock, verify_manifest, OutputSink, RunManifest, VerifyReport};
use super::model::{build_grid, clipping_window, local_oscillators, SourceModel};
use crate::calib::{fit_gain, gain_model, read_gain_csv, write_gain_csv, GainBranch, GainFit, GainSample, ETA_SHG};
use crate::cluster::{cluster_unitary, nullifier_lo_masks, nullifier_report, AdjacencyMatrix, NullifierReport};
use crate::entanglement::{extract_supermodes, ppt_scan};
use crate::error::{Error, Result};
use crate::gaussian::{
    extract_extrema, form_extrema_db, synth_from_form, to_db, CovarianceMatrix, NoiseConfig, PhaseScanTrace,
};
use crate::linalg::RMatrix;
use crate::modes::io::write_basis_csv;
use crate::modes::{frexel_basis, hermite_gauss_basis, ModeBasis, rank_analysis, CLIPPED_HG_SINGULAR_VALUES};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SqueezingCurves,
    Covariance,
    Ppt,
    Supermodes,
    Cluster,
    Rank,
    GainFit,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::SqueezingCurves,
        Command::Covariance,
        Command::Ppt,
        Command::Supermodes,
        Command::Cluster,
        Command::Rank,
        Command::GainFit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SqueezingCurves => "squeezing-curves",
            Command::Covariance => "covariance",
            Command::Ppt => "ppt",
            Command::Supermodes => "supermodes",
            Command::Cluster => "cluster",
            Command::Rank => "rank",
            Command::GainFit => "gainfit",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Run `cmd`, writing its outputs and `manifest.json` into `out_dir`.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    let started = start_clock();
    let mut sink = OutputSink::create(out_dir, cfg)?;
    match cmd {
        Command::SqueezingCurves => squeezing_curves(cfg, &mut sink)?,
        Command::Covariance => covariance(cfg, &mut sink)?,
        Command::Ppt => ppt(cfg, &mut sink)?,
        Command::Supermodes => supermodes(cfg, &mut sink)?,
        Command::Cluster => cluster(cfg, &mut sink)?,
        Command::Rank => rank(cfg, &mut sink)?,
        Command::GainFit => gainfit(cfg, &mut sink)?,
    }
    sink.finish(cmd.name(), cfg, started)
}

/// Check the files recorded in `out_dir`, then re-run `cmd` into a scratch
/// directory and compare every fresh digest with the recorded one.
pub fn verify_run(cmd: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<VerifyReport> {
    let recorded = read_manifest(out_dir)?;
    let mut report = verify_manifest(out_dir)?;
    let scratch = out_dir.join(format!(".verify-{}", std::process::id()));
    let fresh = run_command(cmd, cfg, &scratch);
    std::fs::remove_dir_all(&scratch)?;
    let fresh = fresh?;
    report.config_changed = fresh.config_sha256 != recorded.config_sha256 || fresh.command != recorded.command;
    for f in &fresh.files {
        match recorded.files.iter().find(|r| r.path == f.path) {
            Some(r) if r.sha256 == f.sha256 => {}
            Some(_) => {
                if !report.mismatched.contains(&f.path) {
                    report.mismatched.push(f.path.clone());
                }
            }
            None => report.missing.push(f.path.clone()),
        }
    }
    for r in &recorded.files {
        if !fresh.files.iter().any(|f| f.path == r.path) && !report.mismatched.contains(&r.path) {
            report.mismatched.push(r.path.clone());
        }
    }
    Ok(report)
}

fn write_matrix(out: &mut Vec<u8>, m: &RMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Per-curve noise seed: distinct for every (basis, mode).
fn curve_seed(seed: u64, basis_tag: u64, mode: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (basis_tag << 32) ^ mode as u64
}

#[derive(Clone, Debug, Serialize)]
pub struct SqueezingRow {
    pub mode: usize,
    pub sq_db: f64,
    pub antisq_db: f64,
    pub sq_db_trace: f64,
    pub antisq_db_trace: f64,
    pub extrema_used: usize,
    /// Norm² of the LO part outside the simulated supermodes.
    pub lo_residual: f64,
}

/// Analytic and trace-extracted squeezing of every LO shape.
pub fn squeezing_rows(
    model: &SourceModel,
    cfg: &ExperimentConfig,
    los: &[crate::modes::SpectralMode],
    basis_tag: u64,
) -> Result<(Vec<SqueezingRow>, Vec<PhaseScanTrace>)> {
    let results = los
        .par_iter()
        .enumerate()
        .map(|(k, lo)| {
            let form = model.homodyne(lo)?;
            let (sq, anti) = form_extrema_db(&form)?;
            let noise = NoiseConfig {
                shot_samples_per_point: cfg.trace.noise.shot_samples_per_point,
                seed: curve_seed(cfg.seed, basis_tag, k),
            };
            let trace = synth_from_form(&form, &cfg.trace.scan, &noise)?;
            let ext = extract_extrema(&trace, &cfg.trace.sg)?;
            Ok((
                SqueezingRow {
                    mode: k,
                    sq_db: sq,
                    antisq_db: anti,
                    sq_db_trace: ext.sq_db,
                    antisq_db_trace: ext.antisq_db,
                    extrema_used: ext.n_extrema_used,
                    lo_residual: form.residual,
                },
                trace,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(results.into_iter().unzip())
}

fn write_rows<T: Serialize>(out: &mut Vec<u8>, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRow {
    mode: usize,
    schmidt_coefficient: f64,
    r: f64,
    sq_db_detected: f64,
    antisq_db_detected: f64,
}

fn spectrum_rows(model: &SourceModel) -> Result<Vec<SpectrumRow>> {
    let n = model.detected.n_modes();
    let m = model.detected.matrix();
    (0..n)
        .map(|k| {
            Ok(SpectrumRow {
                mode: k,
                schmidt_coefficient: model.schmidt.coefficients()[k],
                r: model.spectrum.r[k],
                sq_db_detected: to_db(m[(n + k, n + k)])?,
                antisq_db_detected: to_db(m[(k, k)])?,
            })
        })
        .collect()
}

fn squeezing_curves(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<()> {
    let model = SourceModel::build(cfg)?;
    let hg = model.hg_basis(cfg, cfg.basis.hg_modes)?;
    let flat = model.flat_basis(cfg)?;
    let window = if cfg.clipping.enabled {
        Some(clipping_window(cfg, &model.hg_basis(cfg, cfg.basis.hg_modes.max(CLIPPED_HG_SINGULAR_VALUES.len()))?)?.0)
    } else {
        None
    };
    for (tag, name, basis) in [(1u64, "hg", &hg), (2, "flat", &flat)] {
        let los = local_oscillators(basis, window.as_ref())?;
        let (rows, traces) = squeezing_rows(&model, cfg, &los, tag)?;
        sink.csv(&format!("squeezing_{name}.csv"), |b| write_rows(b, &rows))?;
        if cfg.trace.write_traces {
            for (k, t) in traces.iter().enumerate() {
                sink.csv(&format!("traces/{name}_{k:02}.csv"), |b| t.write_csv(b))?;
            }
        }
    }
    let rows = spectrum_rows(&model)?;
    sink.csv("supermode_spectrum.csv", |b| write_rows(b, &rows))?;
    #[derive(Serialize)]
    struct Out<'a> {
        source: super::model::SourceSummary,
        clip_window_nm: Option<[f64; 2]>,
        flat_half_widths_nm: Vec<f64>,
        hg_width_nm: Option<f64>,
        warnings: &'a [String],
    }
    sink.json(
        "squeezing_curves.json",
        &Out {
            source: model.summary(),
            clip_window_nm: window.map(|w| [w.lo(), w.hi()]),
            flat_half_widths_nm: (0..flat.len())
                .filter_map(|k| flat.convention(&format!("half_width_{k}_nm")))
                .collect(),
            hg_width_nm: hg.convention("width_hg0_nm"),
            warnings: hg.warnings(),
        },
    )
}

/// Simulated detected state in the frexel basis.
pub fn frexel_covariance(cfg: &ExperimentConfig) -> Result<(CovarianceMatrix, ModeBasis, SourceModel)> {
    let model = SourceModel::build(cfg)?;
    let fx = model.frexel_basis(cfg)?;
    let cm = model.project(&fx)?;
    Ok((cm, fx, model))
}

fn covariance(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<()> {
    let (cm, fx, model) = frexel_covariance(cfg)?;
    sink.csv("covariance_frexel.csv", |b| cm.write_csv(b))?;
    sink.csv("xx_block.csv", |b| write_matrix(b, &cm.xx()))?;
    sink.csv("pp_block.csv", |b| write_matrix(b, &cm.pp()))?;
    #[derive(Serialize)]
    struct Out {
        n_modes: usize,
        span_nm: [f64; 2],
        band_width_nm: f64,
        trace: f64,
        xp_norm: f64,
        xp_norm_relative: f64,
        physicality_margin: f64,
        eta: f64,
        schmidt_number: f64,
    }
    sink.json(
        "covariance_report.json",
        &Out {
            n_modes: cm.n_modes(),
            span_nm: [cfg.basis.frexel.span_lo_nm, cfg.basis.frexel.span_hi_nm],
            band_width_nm: fx.convention("band_width_nm").unwrap_or(f64::NAN),
            trace: cm.trace(),
            xp_norm: cm.xp_norm(),
            xp_norm_relative: cm.xp_norm() / cm.trace(),
            physicality_margin: cm.physicality_margin()?,
            eta: model.eta,
            schmidt_number: model.schmidt.schmidt_number(),
        },
    )
}

fn ingest(path: &Path, units: crate::gaussian::CovarianceUnits) -> Result<CovarianceMatrix> {
    CovarianceMatrix::read_csv(File::open(path)?, units)
}

fn ppt(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<()> {
    let (cm, source) = match &cfg.ppt.cm_path {
        Some(p) => (ingest(p, cfg.ppt.cm_units)?, "ingested"),
        None => (frexel_covariance(cfg)?.0, "simulated-frexel"),
    };
    let rep = ppt_scan(&cm, cfg.ppt.tol)?;
    sink.csv("ppt.csv", |b| rep.write_csv(b))?;
    let units = match cfg.ppt.cm_units {
        crate::gaussian::CovarianceUnits::VacuumHalf => "vacuum_half",
        crate::gaussian::CovarianceUnits::ShotNoise => "shot_noise",
    };
    let mut summary: serde_json::Value = serde_json::from_str(&rep.summary_json(Some(units))?)?;
    summary["source"] = serde_json::Value::from(source);
    sink.json("ppt_summary.json", &summary)
}

/// Normalized projection of HG_k onto `basis`, as real coefficients.
fn hg_in_basis(basis: &ModeBasis, width: f64, count: usize) -> Result<Vec<Vec<f64>>> {
    let hg = hermite_gauss_basis(basis.grid(), basis.grid().center(), width, count)?;
    Ok(hg
        .modes()
        .iter()
        .map(|m| {
            let c: Vec<f64> = basis.project(m).iter().map(|z| z.re).collect();
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            c.iter().map(|x| x / n).collect()
        })
        .collect())
}

fn supermodes(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<()> {
    let (cm, fx) = match &cfg.supermodes.cm_path {
        Some(p) => {
            let grid = build_grid(cfg)?;
            let f = &cfg.basis.frexel;
            (ingest(p, cfg.supermodes.cm_units)?, frexel_basis(&grid, (f.span_lo_nm, f.span_hi_nm), f.bands)?)
        }
        None => {
            let (cm, fx, _) = frexel_covariance(cfg)?;
            (cm, fx)
        }
    };
    let rep = extract_supermodes(&cm, &fx, cfg.supermodes.cross_tol)?;
    sink.csv("supermodes.csv", |b| rep.write_csv(b))?;
    sink.csv("eigenmodes.csv", |b| write_basis_csv(&rep.eigenmodes, b))?;
    let width = cfg.basis.hg_width_nm.unwrap_or(cfg.phasematch.fit_width_nm);
    let count = rep.len().min(4);
    let hg = hg_in_basis(&fx, width, count)?;
    let hg_overlaps: Vec<f64> = (0..count)
        .map(|k| (0..fx.len()).map(|j| hg[k][j] * rep.x_vectors[(j, k)]).sum::<f64>().abs())
        .collect();
    #[derive(Serialize)]
    struct Out<'a> {
        n_modes: usize,
        squeezing_db: &'a [f64],
        antisqueezing_db: &'a [f64],
        pair_overlaps: &'a [f64],
        hg_width_nm: f64,
        hg_overlaps: Vec<f64>,
        warnings: &'a [String],
    }
    sink.json(
        "supermodes.json",
        &Out {
            n_modes: rep.len(),
            squeezing_db: &rep.squeezing_db,
            antisqueezing_db: &rep.antisqueezing_db,
            pair_overlaps: &rep.pair_overlaps,
            hg_width_nm: width,
            hg_overlaps,
            warnings: &rep.warnings,
        },
    )
}

#[derive(Serialize)]
struct TopologyReport {
    name: String,
    n_nodes: usize,
    #[serde(flatten)]
    report: NullifierReport,
}

#[derive(Serialize)]
struct NullifierRow {
    node: usize,
    variance: f64,
    shot_ref: f64,
    sq_db: f64,
}

fn cluster(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<()> {
    let model = SourceModel::build(cfg)?;
    let mut reports = Vec::new();
    for name in &cfg.cluster.topologies {
        let v = if name == "custom" {
            let path = cfg.cluster.adjacency_csv.as_ref().expect("validated");
            AdjacencyMatrix::read_csv(File::open(path)?)?
        } else {
            AdjacencyMatrix::preset(name)?
        };
        let n = v.n_nodes();
        let perm = cfg.cluster.node_permutation.as_ref().map(|p| &p[..n.min(p.len())]);
        let rep = nullifier_report(&v, &model.spectrum, None, &vec![model.eta; n], perm)?;
        let u = cluster_unitary(&v, None)?;
        let masks = nullifier_lo_masks(&v, &model.supermodes, &u, perm)?;
        let mask_basis = ModeBasis::orthonormal(format!("{name}-nodes"), masks)?;
        let rows: Vec<NullifierRow> = (0..n)
            .map(|i| NullifierRow {
                node: i,
                variance: rep.variances[i],
                shot_ref: rep.shot_refs[i],
                sq_db: rep.squeezing_db[i],
            })
            .collect();
        sink.csv(&format!("cluster_{name}.csv"), |b| write_rows(b, &rows))?;
        sink.csv(&format!("cluster_{name}_lo.csv"), |b| write_basis_csv(&mask_basis, b))?;
        reports.push(TopologyReport {
            name: name.clone(),
            n_nodes: n,
            report: rep,
        });
    }
    sink.json("cluster.json", &reports)
}

fn rank(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<()> {
    let grid = build_grid(cfg)?;
    let width = cfg.basis.hg_width_nm.unwrap_or(cfg.phasematch.fit_width_nm);
    let count = if cfg.clipping.fit { CLIPPED_HG_SINGULAR_VALUES.len() } else { cfg.basis.hg_modes };
    let hg = hermite_gauss_basis(&grid, grid.center(), width, count)?;
    let (window, fit) = clipping_window(cfg, &hg)?;
    let report = match &fit {
        Some(f) => f.report.clone(),
        None => rank_analysis(&crate::modes::apply_clipping(&hg, &window, false)?, cfg.clipping.threshold)?,
    };
    #[derive(Serialize)]
    struct Row {
        index: usize,
        singular_value: f64,
        reference: Option<f64>,
    }
    let rows: Vec<Row> = report
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| Row {
            index: i,
            singular_value: s,
            reference: CLIPPED_HG_SINGULAR_VALUES.get(i).copied(),
        })
        .collect();
    sink.csv("rank.csv", |b| write_rows(b, &rows))?;
    #[derive(Serialize)]
    struct Out<'a> {
        window_nm: [f64; 2],
        fitted: bool,
        residual: Option<f64>,
        hg_width_nm: f64,
        rank: usize,
        threshold_fraction: f64,
        max_singular_value: f64,
        singular_values: &'a [f64],
    }
    sink.json(
        "rank.json",
        &Out {
            window_nm: [window.lo(), window.hi()],
            fitted: fit.is_some(),
            residual: fit.as_ref().map(|f| f.residual),
            hg_width_nm: width,
            rank: report.rank,
            threshold_fraction: report.threshold_fraction,
            max_singular_value: report.singular_values.first().copied().unwrap_or(0.0),
            singular_values: &report.singular_values,
        },
    )
}

/// Gain samples from the configured file or synthesized (seeded) data.
pub fn gain_samples(cfg: &ExperimentConfig, branch: GainBranch) -> Result<Vec<GainSample>> {
    if let Some(p) = cfg.gainfit.data_path(branch) {
        return read_gain_csv(File::open(p)?);
    }
    let s = &cfg.gainfit.synthetic;
    let stream = match branch {
        GainBranch::Plus => 1,
        GainBranch::Minus => 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let noise = Normal::new(0.0, s.noise).map_err(|e| Error::Config(format!("gainfit.synthetic.noise: {e}")))?;
    Ok((0..s.points)
        .map(|k| {
            let p = s.p_min_w + (s.p_max_w - s.p_min_w) * k as f64 / (s.points - 1) as f64;
            let jitter = if s.noise > 0.0 { 1.0 + noise.sample(&mut rng) } else { 1.0 };
            GainSample {
                power_w: p,
                gain: gain_model(s.eta_psa, p, branch) * jitter,
            }
        })
        .collect())
}

fn gainfit(cfg: &ExperimentConfig, sink: &mut OutputSink) -> Result<()> {
    let mut fits: Vec<GainFit> = Vec::new();
    for (name, branch) in [("plus", GainBranch::Plus), ("minus", GainBranch::Minus)] {
        let samples = gain_samples(cfg, branch)?;
        sink.csv(&format!("gain_{name}.csv"), |b| write_gain_csv(&samples, b))?;
        fits.push(fit_gain(&samples, branch)?);
    }
    #[derive(Serialize)]
    struct Out {
        fits: Vec<GainFit>,
        eta_shg_reference: f64,
        synthetic: bool,
    }
    sink.json(
        "gainfit.json",
        &Out {
            fits,
            eta_shg_reference: ETA_SHG,
            synthetic: cfg.gainfit.plus_csv.is_none() || cfg.gainfit.minus_csv.is_none(),
        },
    )
}
