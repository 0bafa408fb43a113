use crate::model::State;
use crate::rare_event::{ReactionCoordinate, StoppedRun};

/// Interpolated states where the stored path crosses `level`.
///
/// A crossing is counted between consecutive stored states whose levels lie
/// strictly on opposite sides of `level`, or move from strictly one side onto
/// it. The returned state is the linear interpolation at the crossing, so for
/// the mean magnetization its level equals `level` up to rounding.
pub fn crossing_positions(rc: &ReactionCoordinate, run: &StoppedRun, level: f64) -> Vec<State> {
    let path: Vec<&[f64]> = run.path().map(|(_, x)| x).collect();
    let mut out = Vec::new();
    for w in path.windows(2) {
        let (a, b) = (rc.evaluate(w[0]), rc.evaluate(w[1]));
        let crosses = (a < level && b >= level) || (a > level && b <= level);
        if crosses {
            let t = (level - a) / (b - a);
            out.push(State::new(w[0].iter().zip(w[1]).map(|(u, v)| u + t * (v - u)).collect()));
        }
    }
    out
}
