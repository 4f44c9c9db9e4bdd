use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::protocol::{quantize6, DeviceId, SensorFrame, SensorPacket};

/// Per-device packet loss, timestamp jitter and adjacent-pair reordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportModel {
    pub drop_prob: f64,
    pub jitter_ms_sd: f64,
    /// Probability that a packet swaps places with its successor.
    pub reorder_prob: f64,
    pub seed: u64,
}

impl Default for TransportModel {
    fn default() -> Self {
        Self { drop_prob: 0.0, jitter_ms_sd: 0.0, reorder_prob: 0.0, seed: 0 }
    }
}

impl TransportModel {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, p) in [("drop_prob", self.drop_prob), ("reorder_prob", self.reorder_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::BadProfile(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !(self.jitter_ms_sd >= 0.0) || !self.jitter_ms_sd.is_finite() {
            return Err(SimError::BadProfile(format!("jitter_ms_sd = {}", self.jitter_ms_sd)));
        }
        Ok(())
    }
}

/// Split frames into one packet stream per device (indexed by
/// [`DeviceId::index`]), in arrival order. Sequence numbers are frame indices.
pub fn emit_packets(frames: &[SensorFrame], model: &TransportModel) -> Result<Vec<Vec<SensorPacket>>, SimError> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let jitter = Normal::new(0.0, model.jitter_ms_sd).expect("validated sd");
    let mut streams: Vec<Vec<SensorPacket>> = (0..4).map(|_| Vec::with_capacity(frames.len())).collect();
    for f in frames {
        for d in DeviceId::ALL {
            let Some(r) = f.slot(d) else { continue };
            if model.drop_prob > 0.0 && rng.random::<f64>() < model.drop_prob {
                continue;
            }
            let mut t_ms = f.t_ms;
            if model.jitter_ms_sd > 0.0 {
                t_ms = quantize6((t_ms + jitter.sample(&mut rng)).max(0.0));
            }
            streams[d.index()].push(SensorPacket { device: d, seq: f.frame_index, t_ms, imu: r.imu, payload: r.payload });
        }
    }
    if model.reorder_prob > 0.0 {
        for s in &mut streams {
            let mut i = 0;
            while i + 1 < s.len() {
                if rng.random::<f64>() < model.reorder_prob {
                    s.swap(i, i + 1);
                    i += 2;
                } else {
                    i += 1;
                }
            }
        }
    }
    Ok(streams)
}
