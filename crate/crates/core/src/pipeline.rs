//! End-to-end matting run and its flat `key = value` configuration.
//!
//! Steps: windows → part modeling → whole alignment → trimap prior →
//! accelerated solve → emit (uncovered pixels filled from the nearest
//! patch center, labeled pixels overwritten with their trimap value).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::alignment::{
    apply_trimap_prior, assemble_alignment, AlignmentMatrix, AssemblyDiagnostics,
};
use crate::error::{Error, Result};
use crate::imaging::{
    load_image, load_trimap, resize_image, resize_trimap, AlphaMatte, RgbImage, Trimap,
};
use crate::modelers::{DimSchedule, Method, ModelerConfig};
use crate::patching::extract_patches;
use crate::scalar::Real;
use crate::solver::{nesterov_solve, SolverConfig, SolverTrace};

/// Default working resolution (height, width).
pub const WORKING_RESOLUTION: (usize, usize) = (120, 160);

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfiguration {
    pub modeler: ModelerConfig,
    pub window: usize,
    pub stride: usize,
    pub lambda: f64,
    pub solver: SolverConfig,
    /// Resampling target applied by loaders; the solver itself never resizes.
    pub resize: Option<(usize, usize)>,
    pub workers: usize,
    /// Record wall-clock seconds in metric rows (off gives reproducible CSVs).
    pub timing: bool,
    pub out: Option<PathBuf>,
}

impl Default for RunConfiguration {
    fn default() -> Self {
        Self {
            modeler: ModelerConfig::default(),
            window: 3,
            stride: 1,
            lambda: 100.0,
            solver: SolverConfig::default(),
            resize: Some(WORKING_RESOLUTION),
            workers: 1,
            timing: true,
            out: None,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::invalid(format!("expected boolean, got '{v}'"))),
    }
}

fn parse_num<N: std::str::FromStr>(key: &str, v: &str) -> Result<N> {
    v.parse()
        .map_err(|_| Error::invalid(format!("bad value '{v}' for {key}")))
}

/// Parses `HxW` (or `none`).
pub fn parse_resize(v: &str) -> Result<Option<(usize, usize)>> {
    if v.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let (h, w) = v
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::invalid(format!("resize must be HxW or none, got '{v}'")))?;
    let h: usize = parse_num("resize", h.trim())?;
    let w: usize = parse_num("resize", w.trim())?;
    if h == 0 || w == 0 {
        return Err(Error::invalid("resize dimensions must be >= 1"));
    }
    Ok(Some((h, w)))
}

impl RunConfiguration {
    pub fn for_method(method: Method) -> Self {
        Self {
            modeler: ModelerConfig::for_method(method),
            ..Default::default()
        }
    }

    /// Applies one `key = value` setting. Setting `method` resets `dims`
    /// to that method's default.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "method" => {
                let m: Method = v.parse()?;
                self.modeler.method = m;
                self.modeler.dims = m.default_dims();
            }
            "dims" => self.modeler.dims = v.parse::<DimSchedule>()?,
            "k" => self.modeler.k = parse_num("k", v)?,
            "lle_reg" => self.modeler.lle_reg = parse_num("lle_reg", v)?,
            "le_sigma" => self.modeler.le_sigma = v.parse()?,
            "window" => self.window = parse_num("window", v)?,
            "stride" => self.stride = parse_num("stride", v)?,
            "lambda" => self.lambda = parse_num("lambda", v)?,
            "iters" => self.solver.max_iters = parse_num("iters", v)?,
            "c0" => self.solver.c0 = parse_num("c0", v)?,
            "c_growth" => self.solver.c_growth = parse_num("c_growth", v)?,
            "tol" => self.solver.tol = parse_num("tol", v)?,
            "monotone" => self.solver.monotone = parse_bool(v)?,
            "init" => self.solver.init = v.parse()?,
            "resize" => self.resize = parse_resize(v)?,
            "workers" => self.workers = parse_num("workers", v)?,
            "timing" => self.timing = parse_bool(v)?,
            "out" => self.out = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            other => return Err(Error::invalid(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses the flat text format on top of the defaults. Blank lines and
    /// `#` comments are ignored; `method` is applied before other keys.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                message: format!("expected key = value, got '{line}'"),
            })?;
            entries.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        entries.sort_by_key(|(_, k, _)| k != "method");
        let mut cfg = Self::default();
        for (line, k, v) in entries {
            cfg.set(&k, &v).map_err(|e| Error::Config {
                line,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let m = &self.modeler;
        let sv = &self.solver;
        let _ = writeln!(s, "method = {}", m.method);
        let _ = writeln!(s, "dims = {}", m.dims);
        let _ = writeln!(s, "k = {}", m.k);
        let _ = writeln!(s, "lle_reg = {}", m.lle_reg);
        let _ = writeln!(s, "le_sigma = {}", m.le_sigma);
        let _ = writeln!(s, "window = {}", self.window);
        let _ = writeln!(s, "stride = {}", self.stride);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "iters = {}", sv.max_iters);
        let _ = writeln!(s, "c0 = {}", sv.c0);
        let _ = writeln!(s, "c_growth = {}", sv.c_growth);
        let _ = writeln!(s, "tol = {}", sv.tol);
        let _ = writeln!(s, "monotone = {}", sv.monotone);
        let _ = writeln!(s, "init = {}", sv.init);
        match self.resize {
            Some((h, w)) => {
                let _ = writeln!(s, "resize = {h}x{w}");
            }
            None => s.push_str("resize = none\n"),
        }
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "timing = {}", self.timing);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if self.stride < 1 {
            return Err(Error::invalid("stride must be >= 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda must be > 0"));
        }
        if self.workers < 1 {
            return Err(Error::invalid("workers must be >= 1"));
        }
        self.modeler.validate(self.window * self.window)?;
        self.solver.validate()
    }

    /// Solver settings with the run's worker count applied.
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            workers: self.workers,
            ..self.solver.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatteOutcome<T> {
    pub alpha: AlphaMatte<T>,
    pub trace: SolverTrace,
    pub diagnostics: AssemblyDiagnostics,
    /// No labeled pixel was present; the result is not anchored by the prior.
    pub unconstrained: bool,
    pub matrix: AlignmentMatrix<T>,
}

/// Runs the full pipeline on an image and trimap of equal size.
pub fn run_matting<T: Real>(
    img: &RgbImage<T>,
    trimap: &Trimap,
    config: &RunConfiguration,
) -> Result<MatteOutcome<T>> {
    config.validate()?;
    if img.dims() != trimap.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: trimap.dims(),
        });
    }
    let patches = extract_patches(img, config.window, config.stride)?;
    let (matrix, diagnostics) = assemble_alignment(&patches, &config.modeler, config.workers)?;
    let problem = apply_trimap_prior(&matrix, trimap, T::lit(config.lambda))?;
    let unconstrained = problem.is_unconstrained();
    let (mut values, trace) = nesterov_solve(&problem, &config.solver_config())?;

    if config.stride > 1 {
        let covered = patches.covered();
        if covered.iter().any(|c| !c) {
            let nearest = patches.nearest_center();
            let solved = values.clone();
            for (i, v) in values.iter_mut().enumerate() {
                if !covered[i] {
                    *v = solved[nearest[i]];
                }
            }
        }
    }

    let (h, w) = img.dims();
    let mut alpha = AlphaMatte::new(h, w, values)?;
    alpha.overwrite_known(trimap);
    Ok(MatteOutcome {
        alpha,
        trace,
        diagnostics,
        unconstrained,
        matrix,
    })
}

/// Applies the configured working resolution to an image/trimap pair.
pub fn prepare_inputs<T: Real>(
    img: RgbImage<T>,
    trimap: Trimap,
    resize: Option<(usize, usize)>,
) -> Result<(RgbImage<T>, Trimap)> {
    match resize {
        None => Ok((img, trimap)),
        Some((h, w)) => Ok((resize_image(&img, h, w)?, resize_trimap(&trimap, h, w)?)),
    }
}

/// Loads an image/trimap pair from disk and resizes per `resize`.
pub fn load_inputs<T: Real>(
    image: impl AsRef<Path>,
    trimap: impl AsRef<Path>,
    resize: Option<(usize, usize)>,
) -> Result<(RgbImage<T>, Trimap)> {
    let img = load_image(image)?;
    let tri = load_trimap(trimap)?;
    if resize.is_none() && img.dims() != tri.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: tri.dims(),
        });
    }
    prepare_inputs(img, tri, resize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Label;

    #[test]
    fn config_round_trip() {
        let mut cfg = RunConfiguration::for_method(Method::Le);
        cfg.lambda = 12.5;
        cfg.resize = None;
        cfg.solver.tol = 1e-10;
        cfg.out = Some(PathBuf::from("out/alpha.png"));
        let back = RunConfiguration::parse(&cfg.serialize()).unwrap();
        assert_eq!(back, cfg);
        let d = RunConfiguration::default();
        assert_eq!(RunConfiguration::parse(&d.serialize()).unwrap(), d);
    }

    #[test]
    fn method_applies_before_dims() {
        let cfg = RunConfiguration::parse("dims = 3-4-2\nmethod = casiso\n").unwrap();
        assert_eq!(cfg.modeler.dims, DimSchedule::cascade(4, 2));
    }

    #[test]
    fn config_errors_carry_line() {
        let err = RunConfiguration::parse("# header\nwindow = 3\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
        assert!(RunConfiguration::parse("window 3").is_err());
        assert!(RunConfiguration::parse("window = 4").is_err());
        assert!(parse_resize("12x0").is_err());
        assert_eq!(parse_resize("120x160").unwrap(), Some((120, 160)));
    }

    #[test]
    fn fully_known_trimap_is_reproduced() {
        let img = RgbImage::from_fn(6, 6, |r, c| [r as f64 / 6.0, c as f64 / 6.0, 0.3]);
        let tri = Trimap::from_fn(6, 6, |r, c| {
            if (r + c) % 3 == 0 {
                Label::Foreground
            } else {
                Label::Background
            }
        });
        let cfg = RunConfiguration {
            resize: None,
            ..RunConfiguration::for_method(Method::Isomap)
        };
        let out = run_matting(&img, &tri, &cfg).unwrap();
        for (v, l) in out.alpha.values().iter().zip(tri.labels()) {
            assert_eq!(Some(*v), l.target::<f64>());
        }
    }

    #[test]
    fn size_mismatch_rejected() {
        let img = RgbImage::from_fn(6, 6, |_, _| [0.5; 3]);
        let tri = Trimap::from_fn(5, 6, |_, _| Label::Unknown);
        assert!(run_matting(&img, &tri, &RunConfiguration::default()).is_err());
    }
}
