use crate::data::LocalDataset;
use crate::error::{FlError, Result};
use crate::model::{predict_with, ModelParams, Workspace};

/// Fraction of rows whose argmax prediction equals the label.
pub fn evaluate(params: &ModelParams, test: &LocalDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    test.check_shape(params.arch().input_width(), params.arch().classes())?;
    let mut ws = Workspace::new(params.arch());
    let correct = test
        .iter()
        .filter(|(x, y)| predict_with(params, x, &mut ws) == *y)
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Mean cross-entropy over the dataset.
pub fn mean_loss(params: &ModelParams, data: &LocalDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(FlError::EmptyDataset);
    }
    data.check_shape(params.arch().input_width(), params.arch().classes())?;
    let mut ws = Workspace::new(params.arch());
    let total: f64 = data
        .iter()
        .map(|(x, y)| {
            crate::model::forward(params.values(), params.arch(), x, &mut ws);
            -ws.output()[y].max(f64::MIN_POSITIVE).ln()
        })
        .sum();
    Ok(total / data.len() as f64)
}
