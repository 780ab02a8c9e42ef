//! Post-processing routines for the final model.

use super::model::ModelWeights;
use super::spec::RoutineSpec;
use super::FlError;

pub const IDENTITY_V1: &str = "identity_v1";
pub const CLIP_WEIGHTS_V1: &str = "clip_weights_v1";

fn clip_bound(routine: &RoutineSpec) -> Result<f64, FlError> {
    match routine.params.get("c").and_then(|v| v.as_f64()) {
        Some(c) if c.is_finite() && c >= 0.0 => Ok(c),
        _ => Err(FlError::Config("clip_weights_v1 needs a non-negative finite `c`".into())),
    }
}

pub fn validate(routine: &RoutineSpec) -> Result<(), FlError> {
    match routine.id.as_str() {
        IDENTITY_V1 => Ok(()),
        CLIP_WEIGHTS_V1 => clip_bound(routine).map(|_| ()),
        other => Err(FlError::UnknownRoutine(other.to_owned())),
    }
}

/// Applies a post-processing routine to the final model.
pub fn postprocess(model: &ModelWeights, routine: &RoutineSpec) -> Result<ModelWeights, FlError> {
    match routine.id.as_str() {
        IDENTITY_V1 => Ok(model.clone()),
        CLIP_WEIGHTS_V1 => {
            let c = clip_bound(routine)?;
            let mut out = model.clone();
            out.w.iter_mut().for_each(|w| *w = w.clamp(-c, c));
            Ok(out)
        }
        other => Err(FlError::UnknownRoutine(other.to_owned())),
    }
}
