use super::WindowError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFn {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

/// Folds `field` over `items` in order. `Avg`, `Min` and `Max` are undefined
/// on an empty window.
pub fn aggregate<T>(items: &[T], f: AggFn, field: impl Fn(&T) -> f64) -> Result<f64, WindowError> {
    if items.is_empty() {
        return match f {
            AggFn::Count => Ok(0.0),
            AggFn::Sum => Ok(0.0),
            AggFn::Avg | AggFn::Min | AggFn::Max => Err(WindowError::EmptyWindow),
        };
    }
    let values = items.iter().map(field);
    Ok(match f {
        AggFn::Count => items.len() as f64,
        AggFn::Sum => values.sum(),
        AggFn::Avg => values.sum::<f64>() / items.len() as f64,
        AggFn::Min => values.fold(f64::INFINITY, f64::min),
        AggFn::Max => values.fold(f64::NEG_INFINITY, f64::max),
    })
}
