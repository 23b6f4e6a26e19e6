//! The pure decision core of one scheduling iteration.

use serde::{Deserialize, Serialize};

use crate::agents::CriticVerdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    Anomaly,
    Completion,
    Stagnation,
}

/// Best progress seen under the current goal and ticks since it improved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StallTracker {
    pub t_stag: u64,
    pub v_max: f64,
}

impl Default for StallTracker {
    fn default() -> Self {
        StallTracker {
            t_stag: 0,
            v_max: f64::NEG_INFINITY,
        }
    }
}

impl StallTracker {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Update `tracker` with a progress value (`None` for an anomaly verdict)
/// and report which trigger fires, in priority order anomaly > completion >
/// stagnation. Anomalies carry no value and leave the tracker untouched.
pub fn classify_value(
    value: Option<f64>,
    tau_succ: f64,
    n_stag: u64,
    tracker: &mut StallTracker,
) -> Option<TriggerKind> {
    let Some(v) = value else {
        return Some(TriggerKind::Anomaly);
    };
    if v > tracker.v_max {
        tracker.t_stag = 0;
        tracker.v_max = v;
    } else {
        tracker.t_stag += 1;
    }
    if v > tau_succ {
        Some(TriggerKind::Completion)
    } else if tracker.t_stag >= n_stag {
        Some(TriggerKind::Stagnation)
    } else {
        None
    }
}

/// [`classify_value`] on the dequantized verdict.
pub fn classify_trigger(
    verdict: &CriticVerdict,
    tau_succ: f64,
    n_stag: u64,
    tracker: &mut StallTracker,
) -> Option<TriggerKind> {
    classify_value(verdict.value(), tau_succ, n_stag, tracker)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critic_train::{quantize, ValueToken};

    fn v(x: f64) -> CriticVerdict {
        CriticVerdict {
            output: ValueToken::Progress(quantize(x).unwrap()),
            evaluated_at_tick: 0,
        }
    }

    const ANOMALY: CriticVerdict = CriticVerdict {
        output: ValueToken::Anomaly,
        evaluated_at_tick: 0,
    };

    #[test]
    fn threshold_is_strict() {
        let mut t = StallTracker::default();
        assert_eq!(classify_value(Some(-0.040), -0.041, 180, &mut t), Some(TriggerKind::Completion));
        let mut t = StallTracker::default();
        assert_eq!(classify_value(Some(-0.042), -0.041, 180, &mut t), None);
        let mut t = StallTracker::default();
        assert_eq!(classify_trigger(&v(-0.04), -0.041, 180, &mut t), Some(TriggerKind::Completion));
        let mut t = StallTracker::default();
        assert_eq!(classify_trigger(&v(-0.05), -0.041, 180, &mut t), None);
    }

    #[test]
    fn anomaly_freezes_tracking() {
        let mut t = StallTracker::default();
        classify_trigger(&v(-0.5), -0.041, 3, &mut t);
        let before = t;
        assert_eq!(classify_trigger(&ANOMALY, -0.041, 3, &mut t), Some(TriggerKind::Anomaly));
        assert_eq!(t, before);
    }

    #[test]
    fn flat_stream_stalls_after_n() {
        for n in [1u64, 2, 180] {
            let mut t = StallTracker::default();
            let mut fired = None;
            for tick in 0..400u64 {
                if classify_trigger(&v(-0.5), -0.041, n, &mut t).is_some() {
                    fired = Some(tick);
                    break;
                }
            }
            assert_eq!(fired, Some(n));
        }
    }
}
