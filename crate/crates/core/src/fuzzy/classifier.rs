use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    evaluate_rules, grades, normalize, FuzzyError, GaitPhase, MembershipParams, PhaseGrades, Rule, RuleTable, Side,
    DEFAULT_CONTACT_EPSILON,
};
use crate::scalar::Real;

fn default_k() -> usize {
    3
}
fn default_scale() -> f64 {
    100.0
}
fn default_epsilon() -> f64 {
    DEFAULT_CONTACT_EPSILON
}
fn default_side() -> Side {
    Side::Right
}

/// Classifier configuration, loadable from JSON as
/// `{"s", "f0", "k", "rules", "input_scale"?, "contact_epsilon"?, "side"?}`.
///
/// `input_scale` multiplies the normalised readings before the membership
/// function; the default of 100 reads them as percentages of the total load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub s: f64,
    pub f0: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    pub rules: Vec<Rule>,
    #[serde(default = "default_scale")]
    pub input_scale: f64,
    #[serde(default = "default_epsilon")]
    pub contact_epsilon: f64,
    #[serde(default = "default_side")]
    pub side: Side,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        let p = MembershipParams::<f64>::default();
        let t = RuleTable::table_i();
        Self {
            s: p.s,
            f0: p.f0,
            k: default_k(),
            rules: t.rules,
            input_scale: default_scale(),
            contact_epsilon: DEFAULT_CONTACT_EPSILON,
            side: t.side,
        }
    }
}

impl ClassifierConfig {
    pub fn with_table(table: RuleTable) -> Self {
        Self { rules: table.rules, side: table.side, ..Self::default() }
    }

    pub fn table(&self) -> RuleTable {
        RuleTable { side: self.side, rules: self.rules.clone() }
    }

    /// Membership parameters acting on sum-normalised readings.
    pub fn effective_params<T: Real>(&self) -> MembershipParams<T> {
        MembershipParams { s: T::lit(self.s), f0: T::lit(self.f0) }.rescaled(T::lit(self.input_scale))
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        MembershipParams::new(self.s, self.f0)?;
        if !(0.0..=1.0).contains(&self.f0) {
            return Err(FuzzyError::InvalidConfig(format!("f0 = {} outside [0, 1]", self.f0)));
        }
        if self.k == 0 {
            return Err(FuzzyError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.input_scale > 0.0) || !self.input_scale.is_finite() {
            return Err(FuzzyError::InvalidConfig(format!("input_scale = {}", self.input_scale)));
        }
        if !(self.contact_epsilon >= 0.0) {
            return Err(FuzzyError::InvalidConfig(format!("contact_epsilon = {}", self.contact_epsilon)));
        }
        self.table().validate()
    }

    pub fn from_json(text: &str) -> Result<Self, FuzzyError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| FuzzyError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FuzzyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| FuzzyError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

/// Hysteresis state carried between frames of one stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SmoothingState {
    pub committed: Option<GaitPhase>,
    pub candidate: Option<GaitPhase>,
    pub run: usize,
    pub frame_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate<T> {
    pub grades: PhaseGrades<T>,
    pub selected: GaitPhase,
    /// Phase with the highest grade this frame, before hysteresis.
    pub raw_argmax: GaitPhase,
    pub frame_index: u64,
}

fn argmax<T: Real>(g: &PhaseGrades<T>, prefer: Option<GaitPhase>) -> GaitPhase {
    let best = g.max();
    if let Some(p) = prefer {
        if g.get(p) == best {
            return p;
        }
    }
    g.iter().find(|(_, v)| *v == best).map_or(GaitPhase::Unknown, |(p, _)| p)
}

/// Classify one frame of raw readings `[LH, L5M, L1M, RH, R5M, R1M]`.
///
/// A phase change is committed once `k` consecutive frames agree; until the
/// first commit, and on airborne frames (which also reset the state), the
/// selection is `Unknown`. Negative readings are treated like airborne frames.
pub fn classify<T: Real>(
    raw: &[T; 6],
    state: SmoothingState,
    config: &ClassifierConfig,
) -> (PhaseEstimate<T>, SmoothingState) {
    classify_with(raw, state, config, &config.table())
}

fn classify_with<T: Real>(
    raw: &[T; 6],
    state: SmoothingState,
    config: &ClassifierConfig,
    table: &RuleTable,
) -> (PhaseEstimate<T>, SmoothingState) {
    let frame_index = state.frame_index;
    let unknown = |next: SmoothingState| {
        let est = PhaseEstimate {
            grades: PhaseGrades([T::zero(); 8]),
            selected: GaitPhase::Unknown,
            raw_argmax: GaitPhase::Unknown,
            frame_index,
        };
        (est, next)
    };
    let reset = SmoothingState { frame_index: frame_index + 1, ..SmoothingState::default() };
    let Ok(n) = normalize(raw, T::lit(config.contact_epsilon)) else {
        return unknown(reset);
    };
    let Ok(g) = grades(&n, &config.effective_params()) else {
        return unknown(reset);
    };
    let pg = evaluate_rules(&g, table);
    let top = argmax(&pg, state.committed);

    let mut next = SmoothingState { frame_index: frame_index + 1, ..state };
    if Some(top) == state.committed {
        next.candidate = None;
        next.run = 0;
    } else {
        if Some(top) == state.candidate {
            next.run += 1;
        } else {
            next.candidate = Some(top);
            next.run = 1;
        }
        if next.run >= config.k {
            next.committed = Some(top);
            next.candidate = None;
            next.run = 0;
        }
    }
    let est = PhaseEstimate {
        grades: pg,
        selected: next.committed.unwrap_or(GaitPhase::Unknown),
        raw_argmax: top,
        frame_index,
    };
    (est, next)
}

/// One stream's classifier: a config plus its running state.
#[derive(Debug, Clone)]
pub struct PhaseClassifier {
    config: ClassifierConfig,
    table: RuleTable,
    state: SmoothingState,
}

impl PhaseClassifier {
    pub fn new(config: ClassifierConfig) -> Result<Self, FuzzyError> {
        config.validate()?;
        let table = config.table();
        Ok(Self { config, table, state: SmoothingState::default() })
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn state(&self) -> SmoothingState {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = SmoothingState::default();
    }

    /// Same result as [`classify`], without rebuilding the rule table per frame.
    pub fn push<T: Real>(&mut self, raw: &[T; 6]) -> PhaseEstimate<T> {
        let (est, next) = classify_with(raw, self.state, &self.config, &self.table);
        self.state = next;
        est
    }
}
