//! Pre-processing routines applied by parties (and the aggregator's hold-out).

use super::spec::RoutineSpec;
use super::{Dataset, FlError};

pub const MINMAX_V1: &str = "minmax_v1";
pub const REORDER_V1: &str = "reorder_v1";

fn permutation(routine: &RoutineSpec, d: usize) -> Result<Vec<usize>, FlError> {
    let perm: Vec<usize> = routine
        .params
        .get("permutation")
        .and_then(|p| serde_json::from_value(p.clone()).ok())
        .ok_or_else(|| FlError::Config("reorder_v1 needs a `permutation` list of column indices".into()))?;
    let mut seen = vec![false; d];
    let bijective = perm.len() == d && perm.iter().all(|&i| i < d && !std::mem::replace(&mut seen[i], true));
    if !bijective {
        return Err(FlError::Config(format!("permutation {perm:?} is not a bijection on {d} columns")));
    }
    Ok(perm)
}

/// Checks ids and parameters without touching data.
pub fn validate_routines(routines: &[RoutineSpec], d: usize) -> Result<(), FlError> {
    for r in routines {
        match r.id.as_str() {
            MINMAX_V1 => {}
            REORDER_V1 => {
                permutation(r, d)?;
            }
            other => return Err(FlError::UnknownRoutine(other.to_owned())),
        }
    }
    Ok(())
}

fn minmax(data: &Dataset) -> Dataset {
    let (rows, cols) = (data.rows(), data.cols());
    let mut out = data.features().to_vec();
    for c in 0..cols {
        let (lo, hi) = (0..rows).map(|r| data.get(r, c)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        let span = hi - lo;
        for r in 0..rows {
            let v = data.get(r, c);
            out[r * cols + c] = if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
        }
    }
    data.with_features(out, cols)
}

fn reorder(data: &Dataset, perm: &[usize]) -> Dataset {
    let cols = data.cols();
    let mut out = Vec::with_capacity(data.features().len());
    for r in 0..data.rows() {
        let row = data.row(r);
        out.extend(perm.iter().map(|&src| row[src]));
    }
    data.with_features(out, cols)
}

/// Applies `routines` in order. Row count is unchanged.
pub fn preprocess(data: &Dataset, routines: &[RoutineSpec]) -> Result<Dataset, FlError> {
    validate_routines(routines, data.cols())?;
    let mut current = data.clone();
    for r in routines {
        current = match r.id.as_str() {
            MINMAX_V1 => minmax(&current),
            REORDER_V1 => reorder(&current, &permutation(r, current.cols())?),
            other => return Err(FlError::UnknownRoutine(other.to_owned())),
        };
    }
    Ok(current)
}
