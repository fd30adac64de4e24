use std::collections::BTreeSet;

use super::MonitorSignal;

pub const UNKNOWN_ENTITY: &str = "unknown_entity";

/// Fires when any observed label is outside `known` or was classified with
/// confidence below `threshold_c`. The score is 1 when fired, else 0.
pub fn unknown_entity_check(
    episode: usize,
    observed: &[(String, f64)],
    known: &BTreeSet<String>,
    threshold_c: f64,
) -> MonitorSignal {
    let fired = observed
        .iter()
        .any(|(label, conf)| !known.contains(label) || *conf < threshold_c);
    MonitorSignal {
        monitor: UNKNOWN_ENTITY.into(),
        episode,
        score: if fired { 1.0 } else { 0.0 },
        fired,
    }
}
