use crate::model::TimeGrid;

/// Composite trapezoid weights for the nodes of `grid`.
pub fn trapezoid_weights(grid: &TimeGrid) -> Vec<f64> {
    let h = grid.step();
    let mut w = vec![h; grid.node_count()];
    w[0] = 0.5 * h;
    w[grid.steps()] = 0.5 * h;
    w
}

/// Composite trapezoid rule for node samples.
pub fn trapezoid(samples: &[f64], grid: &TimeGrid) -> f64 {
    assert_eq!(samples.len(), grid.node_count(), "samples must lie on the grid nodes");
    let h = grid.step();
    let inner: f64 = samples[1..samples.len() - 1].iter().sum();
    h * (inner + 0.5 * (samples[0] + samples[samples.len() - 1]))
}
