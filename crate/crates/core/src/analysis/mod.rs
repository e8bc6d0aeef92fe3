//! Evaluation: rate arithmetic, quality metrics, sweeps, MTF, median
//! filtering and synthetic scenes.

mod median;
mod metrics;
mod mtf;
mod rates;
mod scenes;
mod sweep;

pub use median::median_filter_3d;
pub use metrics::{mse, psnr, ssim, ssim_with_peak};
pub use mtf::{michelson_contrast, mtf_curve, MtfCurve, MTF_CEILING};
pub use rates::{
    compression_factor, fps_at, measurement_rate, rate_report, rounded_display, RateReport,
    REPORT_MEGAPIXELS,
};
pub use scenes::{make_chart, make_moving_scene, ChartKind, MovingObject};
pub use sweep::{
    compression_sweep, make_patterns, noise_sweep, run_point, SweepAxis, SweepConfig, SweepPoint,
    SweepResult,
};
