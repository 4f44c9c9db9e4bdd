use serde::{Deserialize, Serialize};

use super::{FuzzyError, GaitPhase, LinguisticGrades, Side};
use crate::scalar::Real;

/// A rule literal: the sensor must read `High` or `Low`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(alias = "high", alias = "HIGH")]
    High,
    #[serde(alias = "low", alias = "LOW")]
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub phase: GaitPhase,
    /// Literals over `[LH, L5M, L1M, RH, R5M, R1M]`.
    pub literals: [Level; 6],
}

/// Eight rules, one per phase, whose outcomes refer to `side`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleTable {
    pub side: Side,
    pub rules: Vec<Rule>,
}

use Level::{High as H, Low as L};

const TABLE_I: [[Level; 6]; 8] = [
    [L, H, H, H, L, H],
    [L, L, H, H, H, L],
    [L, L, L, H, H, H],
    [H, L, L, L, H, H],
    [H, L, L, L, L, H],
    [H, H, H, L, H, L],
    [H, H, H, L, L, L],
    [L, H, H, L, L, L],
];

impl RuleTable {
    /// The published right-foot rule table, verbatim.
    pub fn table_i() -> Self {
        Self {
            side: Side::Right,
            rules: GaitPhase::ALL
                .iter()
                .zip(TABLE_I)
                .map(|(&phase, literals)| Rule { phase, literals })
                .collect(),
        }
    }

    /// Table I with the heel-strike row taken from the worked example in the
    /// text, which reads `R1M` as `Low`.
    pub fn eq5_variant() -> Self {
        let mut t = Self::table_i();
        t.rules[0].literals[5] = L;
        t
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        if self.rules.len() != 8 {
            return Err(FuzzyError::InvalidTable(format!("expected 8 rules, found {}", self.rules.len())));
        }
        for phase in GaitPhase::ALL {
            let n = self.rules.iter().filter(|r| r.phase == phase).count();
            if n != 1 {
                return Err(FuzzyError::InvalidTable(format!("{n} rules for phase {phase}")));
            }
        }
        for (i, a) in self.rules.iter().enumerate() {
            if let Some(b) = self.rules[i + 1..].iter().find(|b| b.literals == a.literals) {
                return Err(FuzzyError::InvalidTable(format!(
                    "{} and {} share the same literal pattern",
                    a.phase, b.phase
                )));
            }
        }
        Ok(())
    }

    pub fn rule(&self, phase: GaitPhase) -> Option<&Rule> {
        self.rules.iter().find(|r| r.phase == phase)
    }
}

/// Membership grade per phase, indexed in row order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrades<T>(pub [T; 8]);

impl<T: Real> PhaseGrades<T> {
    pub fn get(&self, phase: GaitPhase) -> T {
        phase.index().map_or(T::zero(), |i| self.0[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (GaitPhase, T)> + '_ {
        GaitPhase::ALL.iter().copied().zip(self.0.iter().copied())
    }

    pub fn max(&self) -> T {
        self.0.iter().copied().fold(T::neg_infinity(), T::max)
    }
}

/// Grade of each rule: the minimum over its six literals.
pub fn evaluate_rules<T: Real>(g: &LinguisticGrades<T>, table: &RuleTable) -> PhaseGrades<T> {
    let mut out = [T::zero(); 8];
    for rule in &table.rules {
        let Some(slot) = rule.phase.index() else { continue };
        out[slot] = rule
            .literals
            .iter()
            .enumerate()
            .map(|(i, lit)| match lit {
                Level::High => g.high[i],
                Level::Low => g.low[i],
            })
            .fold(T::infinity(), T::min);
    }
    PhaseGrades(out)
}

/// Swap the left- and right-foot columns, so outcomes refer to the other foot.
pub fn mirror_rules(table: &RuleTable) -> RuleTable {
    RuleTable {
        side: table.side.other(),
        rules: table
            .rules
            .iter()
            .map(|r| {
                let l = r.literals;
                Rule { phase: r.phase, literals: [l[3], l[4], l[5], l[0], l[1], l[2]] }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crisp(levels: [Level; 6]) -> LinguisticGrades<f64> {
        LinguisticGrades::from_high(levels.map(|l| if l == H { 1.0 } else { 0.0 }))
    }

    #[test]
    fn table_i_is_valid() {
        RuleTable::table_i().validate().unwrap();
        RuleTable::eq5_variant().validate().unwrap();
    }

    #[test]
    fn validation_catches_duplicates() {
        let mut t = RuleTable::table_i();
        t.rules[1].literals = t.rules[0].literals;
        assert!(t.validate().is_err());
        let mut t = RuleTable::table_i();
        t.rules[1].phase = GaitPhase::HeelStrike;
        assert!(t.validate().is_err());
        let mut t = RuleTable::table_i();
        t.rules.pop();
        assert!(t.validate().is_err());
    }

    #[test]
    fn crisp_heel_strike_row() {
        let t = RuleTable::table_i();
        let out = evaluate_rules(&crisp([L, H, H, H, L, H]), &t);
        assert_eq!(out.get(GaitPhase::HeelStrike), 1.0);
        assert!(out.iter().filter(|(p, _)| *p != GaitPhase::HeelStrike).all(|(_, g)| g < 1.0));
    }

    #[test]
    fn crisp_mid_stance_row() {
        let out = evaluate_rules(&crisp([L, L, L, H, H, H]), &RuleTable::table_i());
        assert_eq!(out.get(GaitPhase::MidStance), 1.0);
    }

    #[test]
    fn every_row_selects_itself_when_crisp() {
        let t = RuleTable::table_i();
        for rule in &t.rules {
            let out = evaluate_rules(&crisp(rule.literals), &t);
            for (p, g) in out.iter() {
                assert_eq!(g, if p == rule.phase { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn uniform_half_grades_tie() {
        let out = evaluate_rules(&LinguisticGrades::from_high([0.5; 6]), &RuleTable::table_i());
        assert!(out.0.iter().all(|g| *g == 0.5));
    }

    #[test]
    fn mirror_is_involution_and_swaps_columns() {
        let t = RuleTable::table_i();
        let m = mirror_rules(&t);
        assert_eq!(m.side, Side::Left);
        assert_eq!(mirror_rules(&m), t);
        assert_eq!(m.rule(GaitPhase::HeelStrike).unwrap().literals, [H, L, H, L, H, H]);
        m.validate().unwrap();
    }

    #[test]
    fn mirrored_table_reads_swapped_feet() {
        let t = RuleTable::table_i();
        let m = mirror_rules(&t);
        let g = [0.1, 0.9, 0.8, 0.95, 0.05, 0.7];
        let swapped = [g[3], g[4], g[5], g[0], g[1], g[2]];
        let a = evaluate_rules(&LinguisticGrades::from_high(g), &t);
        let b = evaluate_rules(&LinguisticGrades::from_high(swapped), &m);
        assert_eq!(a, b);
    }

    #[test]
    fn eq5_differs_only_in_r1m_of_heel_strike() {
        let (a, b) = (RuleTable::table_i(), RuleTable::eq5_variant());
        assert_eq!(a.rules[1..], b.rules[1..]);
        assert_eq!(a.rules[0].literals[..5], b.rules[0].literals[..5]);
        assert_eq!((a.rules[0].literals[5], b.rules[0].literals[5]), (H, L));
    }

    #[test]
    fn config_json_literals() {
        let r: Rule = serde_json::from_str(r#"{"phase":"MidStance","literals":["Low","low","LOW","High","high","HIGH"]}"#).unwrap();
        assert_eq!(r.literals, [L, L, L, H, H, H]);
    }
}
