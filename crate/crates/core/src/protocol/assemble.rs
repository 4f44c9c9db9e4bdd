use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::{grid_time_ms, DeviceId, ProtocolError, Reading, SensorFrame, SensorPacket};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssemblerConfig {
    pub rate_hz: f64,
    /// A device silent this long relative to the others no longer holds
    /// frames back; its slots are emitted as gaps.
    pub gap_timeout_ms: f64,
    /// Packets held per device and re-sorted by `seq` before placement.
    pub reorder_window: usize,
}

impl Default for AssemblerConfig {
    fn default() -> Self {
        Self { rate_hz: 130.0, gap_timeout_ms: 50.0, reorder_window: 10 }
    }
}

impl AssemblerConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.rate_hz > 0.0 && self.rate_hz <= 1000.0) {
            return Err(ProtocolError::BadConfig(format!("rate_hz = {} outside (0, 1000]", self.rate_hz)));
        }
        if !(self.gap_timeout_ms > 0.0) {
            return Err(ProtocolError::BadConfig(format!("gap_timeout_ms = {}", self.gap_timeout_ms)));
        }
        if self.reorder_window == 0 {
            return Err(ProtocolError::BadConfig("reorder_window must be at least 1".into()));
        }
        Ok(())
    }

    pub fn period_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyStats {
    pub packets: u64,
    pub frames: u64,
    /// Emitted frames with the device's slot empty, per device in
    /// [`DeviceId::ALL`] order.
    pub gaps: [u64; 4],
    /// Packets that arrived after their grid instant had been emitted.
    pub late_dropped: u64,
    /// Packets that lost their slot to one nearer the grid instant.
    pub superseded: u64,
}

struct Held(SensorPacket);

impl Held {
    fn key(&self) -> (u64, f64) {
        (self.0.seq, self.0.t_ms)
    }
}

impl PartialEq for Held {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Held {}
impl PartialOrd for Held {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Held {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.cmp(&b.0).then(a.1.total_cmp(&b.1))
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    dist: f64,
    seq: u64,
    reading: Reading,
}

/// Streaming frame assembler for up to four producers feeding one consumer.
///
/// Frames are emitted once every live device has delivered a packet past the
/// frame's half-period window. Slot placement does not depend on arrival
/// order, so any delivery order yields the same frames as long as no packet
/// arrives after its frame was emitted.
pub struct FrameAssembler {
    cfg: AssemblerConfig,
    period: f64,
    held: [BinaryHeap<Reverse<Held>>; 4],
    slots: BTreeMap<u64, [Option<Candidate>; 4]>,
    released: [Option<f64>; 4],
    heard: [Option<f64>; 4],
    next: u64,
    stats: AssemblyStats,
}

impl FrameAssembler {
    pub fn new(cfg: AssemblerConfig) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            period: cfg.period_ms(),
            held: Default::default(),
            slots: BTreeMap::new(),
            released: [None; 4],
            heard: [None; 4],
            next: 0,
            stats: AssemblyStats::default(),
        })
    }

    pub fn stats(&self) -> &AssemblyStats {
        &self.stats
    }

    /// Accept one packet; frames that became final are appended to `out`.
    pub fn push(&mut self, p: SensorPacket, out: &mut Vec<SensorFrame>) {
        let d = p.device.index();
        self.stats.packets += 1;
        self.heard[d] = Some(self.heard[d].map_or(p.t_ms, |h| h.max(p.t_ms)));
        self.held[d].push(Reverse(Held(p)));
        while self.held[d].len() > self.cfg.reorder_window {
            let Reverse(Held(p)) = self.held[d].pop().expect("non-empty heap");
            self.place(p);
        }
        self.emit_ready(out);
    }

    /// Release everything still held and emit all remaining frames.
    pub fn finish(mut self, out: &mut Vec<SensorFrame>) -> AssemblyStats {
        for d in 0..4 {
            while let Some(Reverse(Held(p))) = self.held[d].pop() {
                self.place(p);
            }
        }
        while let Some((i, slots)) = self.slots.pop_first() {
            self.emit(i, slots, out);
        }
        self.stats
    }

    fn place(&mut self, p: SensorPacket) {
        let d = p.device.index();
        self.released[d] = Some(self.released[d].map_or(p.t_ms, |r| r.max(p.t_ms)));
        let i = (p.t_ms / self.period).round().max(0.0) as u64;
        if i < self.next {
            self.stats.late_dropped += 1;
            return;
        }
        let dist = (p.t_ms - i as f64 * self.period).abs();
        let cand = Candidate { dist, seq: p.seq, reading: p.reading() };
        let slot = &mut self.slots.entry(i).or_insert([None; 4])[d];
        match slot {
            Some(c) if (c.dist, c.seq) <= (dist, p.seq) => self.stats.superseded += 1,
            Some(_) => {
                self.stats.superseded += 1;
                *slot = Some(cand);
            }
            None => *slot = Some(cand),
        }
    }

    fn stale(&self, d: usize) -> bool {
        let lead = self.heard.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        lead - self.heard[d].unwrap_or(0.0) > self.cfg.gap_timeout_ms
    }

    fn ready(&self, i: u64) -> bool {
        let edge = i as f64 * self.period + self.period / 2.0;
        (0..4).all(|d| self.stale(d) || self.released[d].is_some_and(|r| r > edge))
    }

    fn emit_ready(&mut self, out: &mut Vec<SensorFrame>) {
        // a silent device's held packets would otherwise go stale behind the frontier
        for d in 0..4 {
            if !self.held[d].is_empty() && self.stale(d) {
                while let Some(Reverse(Held(p))) = self.held[d].pop() {
                    self.place(p);
                }
            }
        }
        while let Some((&i, _)) = self.slots.first_key_value() {
            if !self.ready(i) {
                break;
            }
            let (i, slots) = self.slots.pop_first().expect("non-empty map");
            self.emit(i, slots, out);
        }
    }

    fn emit(&mut self, i: u64, slots: [Option<Candidate>; 4], out: &mut Vec<SensorFrame>) {
        self.next = i + 1;
        let slots = slots.map(|c| c.map(|c| c.reading));
        for d in DeviceId::ALL {
            if slots[d.index()].is_none() {
                self.stats.gaps[d.index()] += 1;
            }
        }
        self.stats.frames += 1;
        out.push(SensorFrame { frame_index: i, t_ms: grid_time_ms(i, self.cfg.rate_hz), slots });
    }
}

/// Assemble complete recordings. Streams are interleaved by timestamp, each
/// consumed in its own delivery order, and fed through [`FrameAssembler`].
pub fn assemble_frames(
    streams: &[Vec<SensorPacket>],
    cfg: &AssemblerConfig,
) -> Result<(Vec<SensorFrame>, AssemblyStats), ProtocolError> {
    if streams.iter().all(Vec::is_empty) {
        return Err(ProtocolError::EmptyInput);
    }
    let mut asm = FrameAssembler::new(*cfg)?;
    let total: usize = streams.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(total / streams.len().max(1) + 1);
    let mut heads = vec![0usize; streams.len()];
    loop {
        let next = (0..streams.len())
            .filter(|&s| heads[s] < streams[s].len())
            .min_by(|&a, &b| streams[a][heads[a]].t_ms.total_cmp(&streams[b][heads[b]].t_ms));
        let Some(s) = next else { break };
        asm.push(streams[s][heads[s]], &mut out);
        heads[s] += 1;
    }
    let stats = asm.finish(&mut out);
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{ImuSample, Payload};

    fn packet(device: DeviceId, seq: u64, t_ms: f64) -> SensorPacket {
        let payload = if device.is_crutch() {
            Payload::Crutch { load_raw: seq as i32, force_n: None }
        } else {
            Payload::Insole { fsr_raw: [seq as u16, 0, 0] }
        };
        SensorPacket { device, seq, t_ms, imu: ImuSample::identity(), payload }
    }

    fn streams(n: u64, rate: f64) -> Vec<Vec<SensorPacket>> {
        DeviceId::ALL
            .iter()
            .map(|&d| (0..n).map(|i| packet(d, i, grid_time_ms(i, rate))).collect())
            .collect()
    }

    #[test]
    fn aligned_streams() {
        let (frames, stats) = assemble_frames(&streams(100, 130.0), &AssemblerConfig::default()).unwrap();
        assert_eq!(frames.len(), 100);
        assert!(frames.iter().all(|f| f.gap_mask().is_empty()));
        assert!(frames.iter().enumerate().all(|(i, f)| f.frame_index == i as u64));
        assert_eq!(stats.gaps, [0; 4]);
        assert_eq!(stats.late_dropped, 0);
    }

    #[test]
    fn two_hundred_ms_gap() {
        let mut s = streams(200, 130.0);
        s[2].retain(|p| !(p.t_ms >= 500.0 && p.t_ms < 700.0));
        assert_eq!(200 - s[2].len(), 26);
        let (frames, stats) = assemble_frames(&s, &AssemblerConfig::default()).unwrap();
        assert_eq!(frames.len(), 200);
        let gapped = frames.iter().filter(|f| f.gap_mask().contains(DeviceId::InsoleLeft)).count();
        assert_eq!(gapped, 26);
        assert_eq!(stats.gaps, [0, 0, 26, 0]);
    }

    #[test]
    fn reorder_inside_window() {
        let base = streams(50, 130.0);
        let mut swapped = base.clone();
        swapped[1].swap(1, 2);
        swapped[3].swap(10, 11);
        swapped[3].swap(30, 33);
        let cfg = AssemblerConfig::default();
        assert_eq!(assemble_frames(&base, &cfg).unwrap().0, assemble_frames(&swapped, &cfg).unwrap().0);
    }

    #[test]
    fn nearest_packet_wins() {
        let mut s = streams(10, 100.0);
        // an extra, later packet 2 ms from instant 5 loses to the exact one
        s[0].insert(6, packet(DeviceId::CrutchLeft, 100, 52.0));
        let (frames, stats) = assemble_frames(&s, &AssemblerConfig { rate_hz: 100.0, ..Default::default() }).unwrap();
        assert_eq!(frames[5].slot(DeviceId::CrutchLeft).unwrap().payload.load_raw(), Some(5));
        assert_eq!(stats.superseded, 1);
    }

    #[test]
    fn jittered_packets_snap_to_grid() {
        let mut s = streams(40, 130.0);
        for (k, p) in s[1].iter_mut().enumerate() {
            p.t_ms = (p.t_ms + if k % 2 == 0 { 2.5 } else { -2.5 }).max(0.0);
        }
        let (frames, _) = assemble_frames(&s, &AssemblerConfig::default()).unwrap();
        assert_eq!(frames.len(), 40);
        assert!(frames.iter().all(|f| f.is_complete()));
    }

    #[test]
    fn all_gap_instants_are_skipped_and_grid_is_exact() {
        let mut s = streams(30, 130.0);
        for st in &mut s {
            st.retain(|p| p.seq < 10 || p.seq >= 20);
        }
        let (frames, _) = assemble_frames(&s, &AssemblerConfig::default()).unwrap();
        assert_eq!(frames.len(), 20);
        assert_eq!(frames[10].frame_index, 20);
        assert_eq!(frames[10].t_ms, grid_time_ms(20, 130.0));
    }

    #[test]
    fn empty_and_bad_rate() {
        assert!(matches!(assemble_frames(&[vec![], vec![]], &AssemblerConfig::default()), Err(ProtocolError::EmptyInput)));
        let cfg = AssemblerConfig { rate_hz: 1500.0, ..Default::default() };
        assert!(matches!(assemble_frames(&streams(2, 130.0), &cfg), Err(ProtocolError::BadConfig(_))));
    }

    #[test]
    fn streaming_emits_before_finish() {
        let s = streams(100, 130.0);
        let mut asm = FrameAssembler::new(AssemblerConfig::default()).unwrap();
        let mut out = Vec::new();
        for i in 0..100 {
            for st in &s {
                asm.push(st[i], &mut out);
            }
        }
        let early = out.len();
        assert!(early >= 85, "only {early} frames emitted while streaming");
        asm.finish(&mut out);
        assert_eq!(out.len(), 100);
    }

    #[test]
    fn silent_device_does_not_stall_stream() {
        let s = streams(100, 130.0);
        let mut asm = FrameAssembler::new(AssemblerConfig::default()).unwrap();
        let mut out = Vec::new();
        for i in 0..100 {
            for st in &s[..3] {
                asm.push(st[i], &mut out);
            }
        }
        assert!(out.len() >= 80);
        assert!(out.iter().all(|f| f.gap_mask().contains(DeviceId::InsoleRight)));
    }
}
