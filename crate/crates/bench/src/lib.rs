//! Fixtures shared by the benchmarks.

use fpcam_core::analysis::{make_chart, ChartKind};
use fpcam_core::{
    build_map, random_binary_sequence, simulate_capture, stack, GeometryConfig, NoiseSpec,
    OpticsConfig, Scene, StackedSystem,
};

/// Noiseless random-binary system over a chart scene, sensor `k`×`k` with
/// `b`×`b` blocks and `t` measurements.
pub fn chart_system(k: usize, b: usize, t: usize, optics: OpticsConfig) -> StackedSystem {
    let g = GeometryConfig::tiled(k, k, b, b);
    let map = build_map(&g, &optics).expect("map");
    let patterns = random_binary_sequence(&g, t, 0.5, 1).expect("patterns");
    let scene = make_chart(&g, ChartKind::UsafLike).expect("scene");
    let captures = simulate_capture(&map, &patterns, Scene::Static(&scene), &NoiseSpec::none()).expect("capture");
    stack(&g, map, patterns, captures).expect("stack")
}

pub fn blurred() -> OpticsConfig {
    OpticsConfig {
        objective_blur_sigma: 0.7,
        relay_blur_sigma: 0.5,
        misalignment_shift: (1, -1),
    }
}
