//! Alpha matting by part modeling and whole alignment.
//!
//! Every window of the image is modeled as a low-dimensional point set in
//! color space. The local models are aligned into one global sparse
//! quadratic form, the trimap adds a soft prior, and an accelerated
//! projected gradient method recovers the matte in `[0, 1]`.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the bottom pin common choices.

pub mod alignment;
pub mod compositing;
pub mod error;
pub mod evaluation;
pub mod format;
pub mod imaging;
pub mod linalg;
pub mod modelers;
pub mod patching;
pub mod pipeline;
pub mod scalar;
pub mod solver;
pub mod sparse;

pub use alignment::{
    apply_trimap_prior, assemble_alignment, AlignmentMatrix, AssemblyDiagnostics, QuadraticProblem,
};
pub use compositing::{composite, extract_foreground, save_rgba, RgbaImage};
pub use error::{Error, Result};
pub use evaluation::{
    make_synthetic_case, mse, naive_matte, run_benchmark, run_sweep, sad, write_synthetic_dataset,
    BenchmarkReport, MetricRecord, SweepAxis, SweepReport, SweepSpec, SyntheticCase,
};
pub use imaging::{
    load_alpha, load_image, load_trimap, resize_alpha, resize_image, resize_trimap, save_alpha,
    save_rgb, save_trimap, AlphaMatte, Label, RgbImage, Trimap,
};
pub use modelers::{local_energy, DimSchedule, Method, ModelerConfig, SigmaRule};
pub use patching::{extract_patches, Patch, PatchSet};
pub use pipeline::{load_inputs, prepare_inputs, run_matting, MatteOutcome, RunConfiguration};
pub use scalar::Real;
pub use solver::{nesterov_solve, InitMode, SolverConfig, SolverTrace};
pub use sparse::{CsrMatrix, SparseAccumulator};

pub type RgbImageF64 = RgbImage<f64>;
pub type RgbImageF32 = RgbImage<f32>;
pub type AlphaMatteF64 = AlphaMatte<f64>;
pub type AlphaMatteF32 = AlphaMatte<f32>;
pub type CsrMatrixF64 = CsrMatrix<f64>;
pub type CsrMatrixF32 = CsrMatrix<f32>;
pub type QuadraticProblemF64 = QuadraticProblem<f64>;
pub type QuadraticProblemF32 = QuadraticProblem<f32>;
