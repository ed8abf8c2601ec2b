use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{homodyne_form, to_db, CovarianceMatrix, HomodyneForm};
use crate::error::{Error, Result};
use crate::modes::{ModeBasis, SpectralMode};

/// Triangular piezo ramp: `sweeps` alternating up/down ramps over
/// `duration`, each covering `rate * duration / sweeps` radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// rad/s
    pub rate: f64,
    /// s
    pub duration: f64,
    pub samples: usize,
    pub sweeps: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        // 8π of LO phase per ramp: 8 squeezing minima per ramp.
        Self {
            rate: 160.0 * std::f64::consts::PI,
            duration: 0.1,
            samples: 4000,
            sweeps: 2,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 10 {
            return Err(Error::OutOfRange(format!("need at least 10 samples, got {}", self.samples)));
        }
        if self.sweeps == 0 || self.sweeps * 2 > self.samples {
            return Err(Error::OutOfRange(format!("{} sweeps over {} samples", self.sweeps, self.samples)));
        }
        if !(self.rate > 0.0 && self.duration > 0.0) {
            return Err(Error::OutOfRange("scan rate and duration must be positive".into()));
        }
        Ok(())
    }

    /// Phase at every sample and the sample indices where the ramp reverses.
    pub fn phases(&self) -> (Vec<f64>, Vec<usize>) {
        let span = self.rate * self.duration / self.sweeps as f64;
        let last = (self.samples - 1) as f64;
        let phase = (0..self.samples)
            .map(|i| {
                let u = i as f64 / last * self.sweeps as f64;
                let ramp = u.floor().min(self.sweeps as f64 - 1.0);
                let frac = u - ramp;
                if ramp as usize % 2 == 0 {
                    span * frac
                } else {
                    span * (1.0 - frac)
                }
            })
            .collect();
        let vertices = (1..self.sweeps)
            .map(|k| ((k as f64 / self.sweeps as f64) * last).round() as usize)
            .collect();
        (phase, vertices)
    }
}

/// Statistical model of the detected variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Gaussian draws per point; 0 gives the exact variance.
    pub shot_samples_per_point: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            shot_samples_per_point: 10_000,
            seed: 0,
        }
    }
}

/// Homodyne variance recorded while the LO phase is scanned.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseScanTrace {
    pub phase: Vec<f64>,
    /// Relative to the shot-noise reference.
    pub variance_db: Vec<f64>,
    pub noise_seed: u64,
    /// Ramp reversal sample indices.
    pub vertices: Vec<usize>,
}

impl PhaseScanTrace {
    pub fn new(phase: Vec<f64>, variance_db: Vec<f64>, noise_seed: u64, vertices: Vec<usize>) -> Result<Self> {
        if phase.len() != variance_db.len() {
            return Err(Error::DimensionMismatch {
                expected: phase.len(),
                found: variance_db.len(),
            });
        }
        Ok(Self {
            phase,
            variance_db,
            noise_seed,
            vertices,
        })
    }

    pub fn len(&self) -> usize {
        self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["phase", "variance_db"])?;
        for (p, v) in self.phase.iter().zip(&self.variance_db) {
            w.write_record([p.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sample variance of `n` Gaussian draws with true variance `var`.
///
/// Drawn directly from its exact sampling distribution,
/// `var * χ²(n-1) / (n-1)`, with a generator keyed by `(seed, stream)`.
fn sample_variance(var: f64, n: usize, seed: u64, stream: u64) -> f64 {
    if n < 2 {
        return var;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let dof = (n - 1) as f64;
    let chi = ChiSquared::new(dof).expect("positive degrees of freedom");
    var * chi.sample(&mut rng) / dof
}

/// Reference-stream offset for the vacuum (shot-noise) run.
const SHOT_STREAM: u64 = 1 << 40;

/// Synthesize a trace from an analytic homodyne form.
pub fn synth_from_form(form: &HomodyneForm, scan: &ScanConfig, noise: &NoiseConfig) -> Result<PhaseScanTrace> {
    scan.validate()?;
    let (phase, vertices) = scan.phases();
    let n = noise.shot_samples_per_point;
    let seed = noise.seed;
    let shot_ref = if n < 2 {
        0.5
    } else {
        let total: f64 = (0..phase.len())
            .into_par_iter()
            .map(|i| sample_variance(0.5, n, seed, SHOT_STREAM + i as u64))
            .collect::<Vec<_>>()
            .iter()
            .sum();
        total / phase.len() as f64
    };
    let variance_db = phase
        .par_iter()
        .enumerate()
        .map(|(i, &p)| sample_variance(form.variance(p), n, seed, i as u64))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|v| 10.0 * (v / shot_ref).log10())
        .collect();
    PhaseScanTrace::new(phase, variance_db, seed, vertices)
}

/// Phase-scan trace of the homodyne variance for `lo`.
pub fn synth_phase_trace(
    cm: &CovarianceMatrix,
    basis: &ModeBasis,
    lo: &SpectralMode,
    scan: &ScanConfig,
    noise: &NoiseConfig,
) -> Result<PhaseScanTrace> {
    synth_from_form(&homodyne_form(cm, basis, lo)?, scan, noise)
}

/// Savitzky-Golay smoothing parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SavGolConfig {
    pub window: usize,
    pub poly_order: usize,
}

impl Default for SavGolConfig {
    fn default() -> Self {
        Self {
            window: 31,
            poly_order: 3,
        }
    }
}

impl SavGolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window % 2 == 0 || self.window <= self.poly_order {
            return Err(Error::OutOfRange(format!(
                "Savitzky-Golay window {} must be odd and exceed poly order {}",
                self.window, self.poly_order
            )));
        }
        Ok(())
    }
}

/// Least-squares polynomial weights: row `t` (0..window) evaluates the fit
/// of a window at position `t`.
fn savgol_weights(window: usize, order: usize) -> Vec<Vec<f64>> {
    let m = (window / 2) as f64;
    let a = nalgebra::DMatrix::from_fn(window, order + 1, |i, k| ((i as f64 - m) / m).powi(k as i32));
    let ata = a.transpose() * &a;
    let pinv = ata.try_inverse().expect("Vandermonde normal matrix is invertible") * a.transpose();
    (0..window)
        .map(|t| {
            let x = (t as f64 - m) / m;
            (0..window)
                .map(|j| (0..=order).map(|k| x.powi(k as i32) * pinv[(k, j)]).sum())
                .collect()
        })
        .collect()
}

/// Savitzky-Golay filter; the first and last half-windows are evaluated
/// from the polynomial fitted to the first and last full windows.
pub fn savgol_filter(y: &[f64], sg: &SavGolConfig) -> Result<Vec<f64>> {
    sg.validate()?;
    let w = sg.window;
    if y.len() < w {
        return Err(Error::OutOfRange(format!("trace of {} samples is shorter than the window {w}", y.len())));
    }
    let h = w / 2;
    let weights = savgol_weights(w, sg.poly_order);
    let apply = |row: &[f64], start: usize| -> f64 { row.iter().zip(&y[start..start + w]).map(|(c, v)| c * v).sum() };
    let n = y.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i < h {
            apply(&weights[i], 0)
        } else if i >= n - h {
            apply(&weights[w - (n - i)], n - w)
        } else {
            apply(&weights[h], i - h)
        };
        out.push(v);
    }
    Ok(out)
}

/// Squeezing and antisqueezing levels read off a trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremaReport {
    pub sq_db: f64,
    pub antisq_db: f64,
    pub n_minima: usize,
    pub n_maxima: usize,
    pub n_extrema_used: usize,
}

/// At most this many minima (maxima) are averaged.
pub const MAX_EXTREMA: usize = 15;

/// Hysteresis band around the midline, as a fraction of the smoothed range.
const HYSTERESIS: f64 = 0.1;

fn parabolic_peak(y: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= y.len() {
        return y[i];
    }
    let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
    let curv = a - 2.0 * b + c;
    if curv == 0.0 {
        return b;
    }
    b - (c - a).powi(2) / (8.0 * curv)
}

/// Smooth the variance in linear units, find one extremum per excursion
/// beyond a hysteresis band around the midline, drop extrema within half a window of a ramp reversal or the
/// trace ends, refine by parabolic interpolation, then average the deepest
/// minima and highest maxima (up to [`MAX_EXTREMA`] each) in dB.
///
/// Linear variance is a sinusoid in φ that a cubic window follows closely;
/// in dB the squeezed dip is sharp enough for the filter to fill it in.
pub fn extract_extrema(trace: &PhaseScanTrace, sg: &SavGolConfig) -> Result<ExtremaReport> {
    let linear: Vec<f64> = trace.variance_db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
    let y = savgol_filter(&linear, sg)?;
    let guard = sg.window / 2;
    let n = y.len();
    let usable = |i: usize| i >= guard && i + guard < n && trace.vertices.iter().all(|&v| i.abs_diff(v) > guard);
    let (lo, hi) = (0..n)
        .filter(|&i| usable(i))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), i| (a.min(y[i]), b.max(y[i])));
    let mid = 0.5 * (lo + hi);
    let band = HYSTERESIS * (hi - lo);

    #[derive(PartialEq, Clone, Copy)]
    enum State {
        Low,
        High,
        Between,
    }
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    let mut state = State::Between;
    let mut best = 0usize;
    let close = |state: State, best: usize, minima: &mut Vec<f64>, maxima: &mut Vec<f64>| {
        if !usable(best) {
            return;
        }
        match state {
            State::Low => minima.push(parabolic_peak(&y, best)),
            State::High => maxima.push(parabolic_peak(&y, best)),
            State::Between => {}
        }
    };
    for (i, &v) in y.iter().enumerate() {
        let next = if v < mid - band {
            State::Low
        } else if v > mid + band {
            State::High
        } else {
            state
        };
        if next != state {
            close(state, best, &mut minima, &mut maxima);
            state = next;
            best = i;
        } else if (state == State::Low && v < y[best]) || (state == State::High && v > y[best]) {
            best = i;
        }
    }
    close(state, best, &mut minima, &mut maxima);

    if minima.len() < 2 || maxima.len() < 2 {
        return Err(Error::InsufficientExtrema {
            minima: minima.len(),
            maxima: maxima.len(),
        });
    }
    // a smoothed noisy dip can touch zero; such a trace has no dB reading
    if minima.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Numerical("smoothed trace has a non-positive minimum".into()));
    }
    let mut minima: Vec<f64> = minima.iter().map(|m| 10.0 * m.log10()).collect();
    let mut maxima: Vec<f64> = maxima.iter().map(|m| 10.0 * m.log10()).collect();
    minima.sort_by(f64::total_cmp);
    maxima.sort_by(|a, b| b.total_cmp(a));
    let n_minima = minima.len().min(MAX_EXTREMA);
    let n_maxima = maxima.len().min(MAX_EXTREMA);
    Ok(ExtremaReport {
        sq_db: minima[..n_minima].iter().sum::<f64>() / n_minima as f64,
        antisq_db: maxima[..n_maxima].iter().sum::<f64>() / n_maxima as f64,
        n_minima,
        n_maxima,
        n_extrema_used: n_minima + n_maxima,
    })
}

/// Exact extrema of a homodyne form in dB.
pub fn form_extrema_db(form: &HomodyneForm) -> Result<(f64, f64)> {
    Ok((to_db(form.min_variance())?, to_db(form.max_variance())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sinus_form(r: f64, eta: f64) -> HomodyneForm {
        let vx = 0.5 * (eta * (2.0 * r).exp() + 1.0 - eta);
        let vp = 0.5 * (eta * (-2.0 * r).exp() + 1.0 - eta);
        HomodyneForm {
            mean: 0.5 * (vx + vp),
            cos2: 0.5 * (vx - vp),
            sin2: 0.0,
            residual: 0.0,
            orthogonal: false,
        }
    }

    #[test]
    fn ramp_shape() {
        let scan = ScanConfig {
            rate: 1.0,
            duration: 2.0,
            samples: 11,
            sweeps: 2,
        };
        let (p, v) = scan.phases();
        assert_eq!(v, vec![5]);
        assert!((p[5] - 1.0).abs() < 1e-12);
        assert!(p[0].abs() < 1e-12 && p[10].abs() < 1e-12);
    }

    #[test]
    fn savgol_preserves_cubics() {
        let y: Vec<f64> = (0..100).map(|i| {
            let x = i as f64 * 0.1;
            1.0 - 2.0 * x + 0.3 * x * x - 0.05 * x * x * x
        }).collect();
        let s = savgol_filter(&y, &SavGolConfig::default()).unwrap();
        for (a, b) in y.iter().zip(&s) {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn noiseless_sinusoid_exact() {
        let form = sinus_form(0.6, 0.8);
        let scan = ScanConfig {
            rate: 4.0 * std::f64::consts::PI,
            duration: 1.0,
            samples: 80_000,
            sweeps: 2,
        };
        let trace = synth_from_form(&form, &scan, &NoiseConfig { shot_samples_per_point: 0, seed: 0 }).unwrap();
        let rep = extract_extrema(&trace, &SavGolConfig::default()).unwrap();
        let (lo, hi) = form_extrema_db(&form).unwrap();
        assert!((rep.sq_db - lo).abs() < 1e-6, "{} vs {lo}", rep.sq_db);
        assert!((rep.antisq_db - hi).abs() < 1e-6, "{} vs {hi}", rep.antisq_db);
    }

    #[test]
    fn seeded_traces_are_identical() {
        let form = sinus_form(0.29, 1.0);
        let noise = NoiseConfig { shot_samples_per_point: 1000, seed: 7 };
        let a = synth_from_form(&form, &ScanConfig::default(), &noise).unwrap();
        let b = synth_from_form(&form, &ScanConfig::default(), &noise).unwrap();
        assert_eq!(a, b);
        let c = synth_from_form(&form, &ScanConfig::default(), &NoiseConfig { seed: 8, ..noise }).unwrap();
        assert_ne!(a.variance_db, c.variance_db);
    }

    #[test]
    fn recovers_pure_squeezing() {
        let r = 0.25 * 10f64.ln() / 2.0; // -2.5 dB
        let form = sinus_form(r, 1.0);
        let trace = synth_from_form(&form, &ScanConfig::default(), &NoiseConfig::default()).unwrap();
        let rep = extract_extrema(&trace, &SavGolConfig::default()).unwrap();
        assert!((rep.sq_db + 2.5).abs() < 0.1, "{}", rep.sq_db);
    }

    #[test]
    fn flat_trace_reads_zero() {
        let form = sinus_form(0.0, 1.0);
        for seed in 0..5 {
            let trace = synth_from_form(&form, &ScanConfig::default(), &NoiseConfig { seed, ..Default::default() }).unwrap();
            let mean: f64 = trace.variance_db.iter().sum::<f64>() / trace.len() as f64;
            assert!(mean.abs() < 0.01);
            let rep = extract_extrema(&trace, &SavGolConfig::default()).unwrap();
            assert!(rep.sq_db.abs() < 0.1 && rep.antisq_db.abs() < 0.1, "{rep:?}");
        }
    }

    #[test]
    fn too_few_extrema() {
        let form = sinus_form(0.5, 1.0);
        let scan = ScanConfig {
            rate: 1.0,
            duration: 1.0,
            samples: 200,
            sweeps: 1,
        };
        let trace = synth_from_form(&form, &scan, &NoiseConfig { shot_samples_per_point: 0, seed: 0 }).unwrap();
        assert!(matches!(
            extract_extrema(&trace, &SavGolConfig::default()),
            Err(Error::InsufficientExtrema { .. })
        ));
    }

    #[test]
    fn bad_window() {
        assert!(SavGolConfig { window: 30, poly_order: 3 }.validate().is_err());
        assert!(SavGolConfig { window: 3, poly_order: 3 }.validate().is_err());
    }
}
