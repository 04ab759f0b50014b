//! Error metrics, dataset benchmarks, parameter sweeps and the synthetic
//! fixture used when no benchmark data is available.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::format::format_g;
use crate::imaging::{
    load_alpha, load_image, load_trimap, resize_alpha, save_alpha, save_rgb, save_trimap,
    AlphaMatte, Label, RgbImage, Trimap,
};
use crate::pipeline::{prepare_inputs, run_matting, RunConfiguration};
use crate::scalar::Real;

fn check_same<T: Real>(a: &AlphaMatte<T>, b: &AlphaMatte<T>) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            actual: b.dims(),
        });
    }
    Ok(())
}

/// Mean squared error over all pixels.
pub fn mse<T: Real>(mask: &AlphaMatte<T>, gt: &AlphaMatte<T>) -> Result<T> {
    check_same(mask, gt)?;
    let n = T::lit(mask.values().len() as f64);
    let s: T = mask
        .values()
        .iter()
        .zip(gt.values())
        .map(|(&m, &g)| (m - g) * (m - g))
        .sum();
    Ok(s / n)
}

/// Sum of absolute differences over all pixels.
pub fn sad<T: Real>(mask: &AlphaMatte<T>, gt: &AlphaMatte<T>) -> Result<T> {
    check_same(mask, gt)?;
    Ok(mask
        .values()
        .iter()
        .zip(gt.values())
        .map(|(&m, &g)| (m - g).abs())
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub image_id: String,
    pub method: String,
    pub mse: f64,
    pub sad: f64,
    pub iterations: usize,
    pub wall_seconds: f64,
}

impl MetricRecord {
    pub fn is_failure(&self) -> bool {
        self.mse.is_nan()
    }

    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}\n",
            self.image_id,
            self.method,
            format_g(self.mse),
            format_g(self.sad),
            self.iterations,
            format_g(self.wall_seconds)
        )
    }
}

pub const METRICS_HEADER: &str = "image_id,method,mse,sad,iterations,wall_seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    /// One record per scored (or failed) image, ordered by image id.
    pub records: Vec<MetricRecord>,
    /// Images without ground truth.
    pub skipped: Vec<String>,
    pub method: String,
}

impl BenchmarkReport {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.is_failure()).count()
    }

    fn scored(&self) -> impl Iterator<Item = &MetricRecord> {
        self.records.iter().filter(|r| !r.is_failure())
    }

    pub fn average_mse(&self) -> f64 {
        mean(self.scored().map(|r| r.mse))
    }

    pub fn average_sad(&self) -> f64 {
        mean(self.scored().map(|r| r.sad))
    }

    /// Header, one row per record, then an `average` row when non-empty.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{METRICS_HEADER}\n");
        for r in &self.records {
            out.push_str(&r.csv_row());
        }
        if !self.records.is_empty() {
            let iters = mean(self.scored().map(|r| r.iterations as f64));
            out.push_str(&format!(
                "average,{},{},{},{},{}\n",
                self.method,
                format_g(self.average_mse()),
                format_g(self.average_sad()),
                format_g(iters),
                format_g(mean(self.scored().map(|r| r.wall_seconds)))
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_csv())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Files of one benchmark image under the dataset layout
/// `<root>/{input,trimap,gt}/<name>.png`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub name: String,
    pub image: PathBuf,
    pub trimap: PathBuf,
    pub gt: PathBuf,
}

fn is_raster(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
        Some(ref e) if e == "png" || e == "ppm"
    )
}

fn find_sibling(dir: &Path, stem: &str) -> PathBuf {
    for ext in ["png", "ppm"] {
        let p = dir.join(format!("{stem}.{ext}"));
        if p.exists() {
            return p;
        }
    }
    dir.join(format!("{stem}.png"))
}

/// Lists dataset images in lexicographic order of their names.
pub fn list_dataset(root: impl AsRef<Path>) -> Result<Vec<DatasetEntry>> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root not found"),
        ));
    }
    let input = root.join("input");
    if !input.is_dir() {
        return Ok(Vec::new());
    }
    let mut entries = Vec::new();
    let listing = std::fs::read_dir(&input).map_err(|e| Error::io(&input, e))?;
    for item in listing {
        let path = item.map_err(|e| Error::io(&input, e))?.path();
        if !path.is_file() || !is_raster(&path) {
            continue;
        }
        let Some(name) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        entries.push(DatasetEntry {
            name: name.to_string(),
            trimap: find_sibling(&root.join("trimap"), name),
            gt: find_sibling(&root.join("gt"), name),
            image: path.clone(),
        });
    }
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(entries)
}

fn score_entry(entry: &DatasetEntry, config: &RunConfiguration) -> Result<MetricRecord> {
    let started = Instant::now();
    let img = load_image::<f64>(&entry.image)?;
    let tri = load_trimap(&entry.trimap)?;
    let gt = load_alpha::<f64>(&entry.gt)?;
    if config.resize.is_none() && (img.dims() != tri.dims() || img.dims() != gt.dims()) {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: if img.dims() != tri.dims() { tri.dims() } else { gt.dims() },
        });
    }
    let (img, tri) = prepare_inputs(img, tri, config.resize)?;
    let gt = match config.resize {
        Some((h, w)) => resize_alpha(&gt, h, w)?,
        None => gt,
    };
    let outcome = run_matting(&img, &tri, config)?;
    Ok(MetricRecord {
        image_id: entry.name.clone(),
        method: config.modeler.summary(),
        mse: mse(&outcome.alpha, &gt)?,
        sad: sad(&outcome.alpha, &gt)?,
        iterations: outcome.trace.iterations_run,
        wall_seconds: if config.timing {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        },
    })
}

/// Mattes and scores every dataset image.
///
/// With `config.workers > 1` images are processed concurrently (each run
/// single-threaded); records are always ordered by image id. Missing
/// ground truth skips the image with a warning; any other per-image error
/// yields a NaN record.
pub fn run_benchmark(root: impl AsRef<Path>, config: &RunConfiguration) -> Result<BenchmarkReport> {
    config.validate()?;
    let entries = list_dataset(root)?;
    let method = config.modeler.summary();
    let mut skipped = Vec::new();
    let mut todo = Vec::new();
    for e in entries {
        if e.gt.exists() {
            todo.push(e);
        } else {
            eprintln!("warning: no ground truth for '{}', skipped", e.name);
            skipped.push(e.name);
        }
    }

    let run_one = |entry: &DatasetEntry, cfg: &RunConfiguration| match score_entry(entry, cfg) {
        Ok(r) => r,
        Err(err) => {
            eprintln!("error: {}: {err}", entry.name);
            MetricRecord {
                image_id: entry.name.clone(),
                method: method.clone(),
                mse: f64::NAN,
                sad: f64::NAN,
                iterations: 0,
                wall_seconds: 0.0,
            }
        }
    };

    let workers = config.workers.min(todo.len()).max(1);
    let records = if workers == 1 {
        todo.iter().map(|e| run_one(e, config)).collect()
    } else {
        let inner = RunConfiguration {
            workers: 1,
            ..config.clone()
        };
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<MetricRecord>>> = Mutex::new(vec![None; todo.len()]);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= todo.len() {
                        break;
                    }
                    let rec = run_one(&todo[i], &inner);
                    slots.lock().expect("slot lock")[i] = Some(rec);
                });
            }
        });
        slots
            .into_inner()
            .expect("slot lock")
            .into_iter()
            .map(|r| r.expect("every image processed"))
            .collect()
    };
    Ok(BenchmarkReport {
        records,
        skipped,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Iterations,
    Stride,
    /// Window side length; the patch holds its square.
    PatchSize,
    DimsSchedule,
}

impl SweepAxis {
    fn key(self) -> &'static str {
        match self {
            SweepAxis::Iterations => "iters",
            SweepAxis::Stride => "stride",
            SweepAxis::PatchSize => "window",
            SweepAxis::DimsSchedule => "dims",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Iterations => "iterations",
            SweepAxis::Stride => "stride",
            SweepAxis::PatchSize => "patch-size",
            SweepAxis::DimsSchedule => "dims",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iterations" | "iters" => Ok(SweepAxis::Iterations),
            "stride" => Ok(SweepAxis::Stride),
            "patch-size" | "patch_size" | "window" => Ok(SweepAxis::PatchSize),
            "dims" | "dims-schedule" | "schedule" => Ok(SweepAxis::DimsSchedule),
            other => Err(Error::invalid(format!("unknown sweep axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
    pub base: RunConfiguration,
}

impl SweepSpec {
    /// Configuration for one axis value, validated.
    pub fn config_for(&self, value: &str) -> Result<RunConfiguration> {
        let mut cfg = self.base.clone();
        cfg.set(self.axis.key(), value)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: String,
    pub avg_mse: f64,
    pub avg_sad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub failures: usize,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis_value,avg_mse,avg_sad\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                r.axis_value,
                format_g(r.avg_mse),
                format_g(r.avg_sad)
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_csv())
    }
}

/// One benchmark per axis value.
pub fn run_sweep(spec: &SweepSpec, root: impl AsRef<Path>) -> Result<SweepReport> {
    if spec.values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let configs: Vec<RunConfiguration> = spec
        .values
        .iter()
        .map(|v| spec.config_for(v))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(configs.len());
    let mut failures = 0;
    for (value, cfg) in spec.values.iter().zip(&configs) {
        let report = run_benchmark(root.as_ref(), cfg)?;
        failures += report.failures();
        rows.push(SweepRow {
            axis_value: value.trim().to_string(),
            avg_mse: report.average_mse(),
            avg_sad: report.average_sad(),
        });
    }
    Ok(SweepReport { rows, failures })
}

/// Composited test image with known layers and exact ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticCase<T> {
    pub image: RgbImage<T>,
    pub trimap: Trimap,
    pub alpha: AlphaMatte<T>,
    pub foreground: RgbImage<T>,
    pub background: RgbImage<T>,
}

/// `α F + (1 − α) B` per pixel.
pub fn composite_pixel<T: Real>(alpha: T, f: [T; 3], b: [T; 3]) -> [T; 3] {
    let keep = T::one() - alpha;
    [
        alpha * f[0] + keep * b[0],
        alpha * f[1] + keep * b[1],
        alpha * f[2] + keep * b[2],
    ]
}

const TRIMAP_EROSION: usize = 3;

struct Texture {
    base: [f64; 3],
    freq: [(f64, f64); 3],
    phase: [f64; 3],
    amp: f64,
}

impl Texture {
    fn random(rng: &mut ChaCha8Rng, base: [f64; 3]) -> Self {
        let mut freq = [(0.0, 0.0); 3];
        let mut phase = [0.0; 3];
        for ch in 0..3 {
            freq[ch] = (rng.gen_range(0.05..0.25), rng.gen_range(0.05..0.25));
            phase[ch] = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        Self {
            base,
            freq,
            phase,
            amp: 0.08,
        }
    }

    fn at(&self, r: usize, c: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        for ch in 0..3 {
            let (fr, fc) = self.freq[ch];
            out[ch] = self.base[ch] + self.amp * (fr * r as f64 + fc * c as f64 + self.phase[ch]).sin();
        }
        out
    }
}

fn erode(mask: &[bool], h: usize, w: usize, radius: usize) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    for r in 0..h {
        for c in 0..w {
            let (r0, r1) = (r.saturating_sub(radius), (r + radius).min(h - 1));
            let (c0, c1) = (c.saturating_sub(radius), (c + radius).min(w - 1));
            out[r * w + c] = (r0..=r1).all(|rr| (c0..=c1).all(|cc| mask[rr * w + cc]));
        }
    }
    out
}

/// Feathered disk (radius `0.3·min(h, w)`, 2-pixel linear edge) over two
/// smoothly textured color fields. The trimap keeps the thresholded
/// regions eroded by 3 pixels; the ring between is unknown.
pub fn make_synthetic_case<T: Real>(seed: u64, h: usize, w: usize) -> Result<SyntheticCase<T>> {
    if h < 16 || w < 16 {
        return Err(Error::invalid("synthetic case needs h, w >= 16"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fg_tex = Texture::random(&mut rng, [0.8, 0.45, 0.2]);
    let bg_tex = Texture::random(&mut rng, [0.15, 0.35, 0.75]);
    let radius = 0.3 * h.min(w) as f64;
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let alpha_at = |r: usize, c: usize| {
        let d = ((r as f64 - cy).powi(2) + (c as f64 - cx).powi(2)).sqrt();
        ((radius + 1.0 - d) / 2.0).clamp(0.0, 1.0)
    };
    let lit3 = |v: [f64; 3]| [T::lit(v[0]), T::lit(v[1]), T::lit(v[2])];
    let foreground = RgbImage::from_fn(h, w, |r, c| lit3(fg_tex.at(r, c)));
    let background = RgbImage::from_fn(h, w, |r, c| lit3(bg_tex.at(r, c)));
    let alpha = AlphaMatte::from_fn(h, w, |r, c| T::lit(alpha_at(r, c)));
    let image = RgbImage::from_fn(h, w, |r, c| {
        composite_pixel(alpha.at(r, c), foreground.at(r, c), background.at(r, c))
    });

    let inside: Vec<bool> = alpha.values().iter().map(|&a| a >= T::lit(0.5)).collect();
    let outside: Vec<bool> = inside.iter().map(|&b| !b).collect();
    let fg = erode(&inside, h, w, TRIMAP_EROSION);
    let bg = erode(&outside, h, w, TRIMAP_EROSION);
    let trimap = Trimap::from_fn(h, w, |r, c| {
        let i = r * w + c;
        let a = alpha.values()[i];
        if fg[i] && a == T::one() {
            Label::Foreground
        } else if bg[i] && a == T::zero() {
            Label::Background
        } else {
            Label::Unknown
        }
    });
    Ok(SyntheticCase {
        image,
        trimap,
        alpha,
        foreground,
        background,
    })
}

/// Baseline matte: trimap values where known, 0.5 elsewhere.
pub fn naive_matte<T: Real>(trimap: &Trimap) -> AlphaMatte<T> {
    let (h, w) = trimap.dims();
    let labels = trimap.labels();
    AlphaMatte::from_fn(h, w, |r, c| labels[r * w + c].target().unwrap_or(T::lit(0.5)))
}

/// Writes synthetic cases in the dataset layout; names are `synthNN`.
pub fn write_synthetic_dataset(
    root: impl AsRef<Path>,
    seeds: &[u64],
    h: usize,
    w: usize,
) -> Result<Vec<String>> {
    let root = root.as_ref();
    for sub in ["input", "trimap", "gt"] {
        let dir = root.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut names = Vec::new();
    for (i, &seed) in seeds.iter().enumerate() {
        let case = make_synthetic_case::<f64>(seed, h, w)?;
        let name = format!("synth{i:02}");
        save_rgb(&case.image, root.join("input").join(format!("{name}.png")))?;
        save_trimap(&case.trimap, root.join("trimap").join(format!("{name}.png")))?;
        save_alpha(&case.alpha, root.join("gt").join(format!("{name}.png")))?;
        names.push(name);
    }
    Ok(names)
}
