//! Wavelet denoising by iterative threshold peeling.
//!
//! Coefficients are modelled as generalized Gaussian. A threshold sequence
//! `T_{k+1} = F σ_k`, where `σ_k²` is the energy of the coefficients below
//! `T_k`, either collapses to zero or settles at a fixed point depending on
//! whether `F` exceeds a shape-dependent critical constant.
//!
//! - [`specfun`]: log-gamma and regularized incomplete gamma.
//! - [`ggd`]: the coefficient law, sampling and moment-based estimation.
//! - [`detmap`]: the large-sample threshold map and its critical constant.
//! - [`peeling`]: the data-driven iteration and the threshold catalog.
//! - [`wavelet`]: periodized orthogonal DWT.
//! - [`benchlab`]: benchmark signals, baselines and Monte Carlo harnesses.

pub mod benchlab;
pub mod detmap;
pub mod error;
pub mod ggd;
pub mod io;
pub mod numeric;
pub mod peeling;
pub mod rng;
pub mod specfun;
pub mod wavelet;

pub use detmap::{critical_constant, fm_bound, CriticalSolution, ReducedMap, Regime};
pub use error::{Error, Result};
pub use ggd::{estimate_params, GgdParams};
pub use peeling::{
    run_peeling, threshold_catalog, PeelingConfig, PeelingTrace, StopRule, ThresholdCatalog, ThresholdKind,
    ThresholdMode,
};
pub use wavelet::{dwt, idwt, FilterPair, WaveletCoeffs};
