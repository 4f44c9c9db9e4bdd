//! High-level exoskeleton controllers.
//!
//! Three controllers share one state machine:
//!
//! * [`basic_step`] triggers a step when the committed phase enters the
//!   trigger phase and re-arms when the completion phase commits.
//! * [`safe_step`] gates each trigger on [`safety_check`]; a failed check
//!   holds the trigger pending (`Armed`) until a later frame passes.
//! * [`adaptive_multiplier`] scales the joint controller's assistance from
//!   crutch load and inclination.
//!
//! The lower-level joint controller is not modelled; commands are the
//! boundary.

mod log;
mod safety;

pub use log::{read_command_log, write_command_log};
pub use safety::{safety_check, SafetyConfig, SafetyHistory, SafetyRecord};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biomech::GrfVector;
use crate::fuzzy::{GaitPhase, PhaseEstimate, Side};
use crate::protocol::SensorFrame;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("safety history spans {have_ms} ms, need {need_ms} ms")]
    InsufficientHistory { have_ms: f64, need_ms: f64 },
    #[error("bad controller config: {0}")]
    BadConfig(String),
    #[error("command log: {0}")]
    Csv(#[from] csv::Error),
    #[error("command log line {line}: {msg}")]
    LogParse { line: u64, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CommandKind {
    TriggerStep(Side),
    Halt,
    SetAssistMultiplier(f64),
    NoOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    pub kind: CommandKind,
    pub t_ms: f64,
}

impl ControlCommand {
    pub fn noop(t_ms: f64) -> Self {
        Self { kind: CommandKind::NoOp, t_ms }
    }

    pub fn is_trigger(&self) -> bool {
        matches!(self.kind, CommandKind::TriggerStep(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Idle,
    /// A trigger is pending on a passing safety check.
    Armed,
    Executing(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub mode: Mode,
    pub last_step_t_ms: Option<f64>,
    pub last_safety: Option<SafetyRecord>,
    /// Last committed (non-`Unknown`) phase.
    pub committed: GaitPhase,
}

impl Default for ControllerState {
    fn default() -> Self {
        Self { mode: Mode::Idle, last_step_t_ms: None, last_safety: None, committed: GaitPhase::Unknown }
    }
}

/// Phases that drive the step state machine. The classifier's phases refer
/// to `side`; entering `trigger_phase` means that leg is about to swing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub trigger_phase: GaitPhase,
    pub completion_phase: GaitPhase,
    pub side: Side,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self { trigger_phase: GaitPhase::TerminalStance, completion_phase: GaitPhase::TerminalSwing, side: Side::Right }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        if self.trigger_phase == GaitPhase::Unknown || self.completion_phase == GaitPhase::Unknown {
            return Err(ControlError::BadConfig("trigger and completion phases must be estimable".into()));
        }
        if self.trigger_phase == self.completion_phase {
            return Err(ControlError::BadConfig("trigger and completion phases must differ".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssistConfig {
    pub g0: f64,
    /// Multiplier change per unit of `F / f_ref_n`.
    pub k_f: f64,
    pub f_ref_n: f64,
    pub g_min: f64,
    pub g_max: f64,
    /// Multiplier change per degree of mean crutch inclination above
    /// nominal, in hundredths. Positive gain lowers assistance as the
    /// crutches lean further from vertical.
    pub incl_speed_gain: f64,
    pub nominal_inclination_deg: f64,
}

impl Default for AssistConfig {
    fn default() -> Self {
        Self {
            g0: 1.0,
            k_f: 0.5,
            f_ref_n: 150.0,
            g_min: 0.5,
            g_max: 2.0,
            incl_speed_gain: 1.0,
            nominal_inclination_deg: 15.0,
        }
    }
}

impl AssistConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.g_min <= self.g0 && self.g0 <= self.g_max) {
            return Err(ControlError::BadConfig(format!(
                "need g_min <= g0 <= g_max, got {} {} {}",
                self.g_min, self.g0, self.g_max
            )));
        }
        if !(self.f_ref_n > 0.0) {
            return Err(ControlError::BadConfig(format!("f_ref_n = {}", self.f_ref_n)));
        }
        if !self.k_f.is_finite() || !self.incl_speed_gain.is_finite() || !self.nominal_inclination_deg.is_finite() {
            return Err(ControlError::BadConfig("non-finite assist gain".into()));
        }
        Ok(())
    }
}

/// All controller settings, as read from a JSON config.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub step: StepConfig,
    pub safety: SafetyConfig,
    pub assist: AssistConfig,
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        self.step.validate()?;
        self.safety.validate()?;
        self.assist.validate()
    }
}

/// Whether this estimate commits a change into the trigger phase, and the
/// state with the committed phase updated. `None` for `Unknown`.
fn advance<T>(est: &PhaseEstimate<T>, state: &ControllerState, cfg: &StepConfig) -> Option<(bool, ControllerState)> {
    if est.selected == GaitPhase::Unknown {
        return None;
    }
    let entered = est.selected == cfg.trigger_phase && state.committed != cfg.trigger_phase;
    let mut next = *state;
    next.committed = est.selected;
    if est.selected == cfg.completion_phase && matches!(state.mode, Mode::Executing(_)) {
        next.mode = Mode::Idle;
    }
    Some((entered, next))
}

/// Trigger a step on entry into the trigger phase.
pub fn basic_step<T>(
    est: &PhaseEstimate<T>,
    t_ms: f64,
    state: &ControllerState,
    cfg: &StepConfig,
) -> (ControlCommand, ControllerState) {
    let Some((entered, mut next)) = advance(est, state, cfg) else {
        return (ControlCommand::noop(t_ms), *state);
    };
    if entered && next.mode == Mode::Idle {
        next.mode = Mode::Executing(cfg.side);
        next.last_step_t_ms = Some(t_ms);
        return (ControlCommand { kind: CommandKind::TriggerStep(cfg.side), t_ms }, next);
    }
    (ControlCommand::noop(t_ms), next)
}

/// [`basic_step`] gated by [`safety_check`]. The check runs only when a
/// trigger is due; on error the state is left unchanged so the caller can
/// retry on the next frame.
#[allow(clippy::too_many_arguments)]
pub fn safe_step<T>(
    est: &PhaseEstimate<T>,
    frame: &SensorFrame,
    grf: [&GrfVector; 2],
    history: &SafetyHistory,
    state: &ControllerState,
    step: &StepConfig,
    safety: &SafetyConfig,
) -> Result<(ControlCommand, ControllerState), ControlError> {
    let t_ms = frame.t_ms;
    let Some((entered, mut next)) = advance(est, state, step) else {
        return Ok((ControlCommand::noop(t_ms), *state));
    };
    let due = (entered && next.mode == Mode::Idle) || next.mode == Mode::Armed;
    if !due {
        return Ok((ControlCommand::noop(t_ms), next));
    }
    let record = safety_check(frame, grf[0], grf[1], history, safety)?;
    next.last_safety = Some(record);
    if record.pass() {
        next.mode = Mode::Executing(step.side);
        next.last_step_t_ms = Some(t_ms);
        Ok((ControlCommand { kind: CommandKind::TriggerStep(step.side), t_ms }, next))
    } else {
        next.mode = Mode::Armed;
        Ok((ControlCommand::noop(t_ms), next))
    }
}

/// Assistance multiplier from the larger crutch load and the mean crutch
/// inclination.
pub fn adaptive_multiplier(grf_l: &GrfVector, grf_r: &GrfVector, t_ms: f64, cfg: &AssistConfig) -> ControlCommand {
    let force = grf_l.f_axial.max(grf_r.f_axial);
    let incl = (grf_l.inclination_deg + grf_r.inclination_deg) / 2.0;
    let m = cfg.g0 + cfg.k_f * (force / cfg.f_ref_n - 1.0)
        - cfg.incl_speed_gain * (incl - cfg.nominal_inclination_deg) * 0.01;
    let m = if m.is_nan() { cfg.g0 } else { m.clamp(cfg.g_min, cfg.g_max) };
    ControlCommand { kind: CommandKind::SetAssistMultiplier(m), t_ms }
}

/// Safety-gated step controller with its own history, for streaming use.
#[derive(Debug, Clone)]
pub struct SafeController {
    pub config: ControlConfig,
    pub state: ControllerState,
    pub history: SafetyHistory,
}

impl SafeController {
    pub fn new(config: ControlConfig) -> Result<Self, ControlError> {
        config.validate()?;
        Ok(Self { config, state: ControllerState::default(), history: SafetyHistory::new(config.safety.history_ms) })
    }

    /// Record the frame and step the machine. Insufficient history yields
    /// `NoOp` with the trigger still pending.
    pub fn push<T>(&mut self, est: &PhaseEstimate<T>, frame: &SensorFrame, grf: [&GrfVector; 2]) -> ControlCommand {
        self.history.push(frame);
        match safe_step(est, frame, grf, &self.history, &self.state, &self.config.step, &self.config.safety) {
            Ok((cmd, next)) => {
                self.state = next;
                cmd
            }
            Err(_) => ControlCommand::noop(frame.t_ms),
        }
    }
}
