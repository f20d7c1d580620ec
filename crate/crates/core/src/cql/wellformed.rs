use super::resolve::{ROp, TypedProgram};
use serde::Serialize;

/// Statement-shape classes of valid programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PatternClass {
    /// Slices, roll-ups and level Dices.
    P1,
    /// As P1, plus drill-downs.
    P2,
    /// A P2 prefix followed by measure Dices only.
    P3,
    Invalid,
}

impl PatternClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternClass::P1 => "P1",
            PatternClass::P2 => "P2",
            PatternClass::P3 => "P3",
            PatternClass::Invalid => "INVALID",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WfCondition {
    /// More than one Slice over the same dimension or measure.
    RepeatedSlice,
    /// DrillDown with no earlier RollUp on its dimension.
    DrillDownWithoutRollUp,
    /// Measure Dice followed by a RollUp or DrillDown.
    MeasureDiceBeforeNavigation,
}

impl WfCondition {
    pub fn label(self) -> &'static str {
        match self {
            WfCondition::RepeatedSlice => "(i)",
            WfCondition::DrillDownWithoutRollUp => "(ii)",
            WfCondition::MeasureDiceBeforeNavigation => "(iii)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WfViolation {
    pub condition: WfCondition,
    /// 0-based statement index.
    pub statement: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WfReport {
    pub violations: Vec<WfViolation>,
    pub class: PatternClass,
}

impl WfReport {
    pub fn well_formed(&self) -> bool {
        self.violations.is_empty() && self.class != PatternClass::Invalid
    }
}

fn violations(p: &TypedProgram) -> Vec<WfViolation> {
    let ops: Vec<&ROp> = p.ops().collect();
    let mut out = Vec::new();
    for (i, op) in ops.iter().enumerate() {
        let earlier = &ops[..i];
        match op {
            ROp::SliceDim { dim } if earlier.iter().any(|o| matches!(o, ROp::SliceDim { dim: d } if d == dim)) => {
                out.push(WfViolation {
                    condition: WfCondition::RepeatedSlice,
                    statement: i,
                    message: "dimension sliced twice".into(),
                });
            }
            ROp::SliceMeasure { measure } if earlier.iter().any(|o| matches!(o, ROp::SliceMeasure { measure: m } if m == measure)) => {
                out.push(WfViolation {
                    condition: WfCondition::RepeatedSlice,
                    statement: i,
                    message: "measure sliced twice".into(),
                });
            }
            ROp::DrillDown { dim, .. } if !earlier.iter().any(|o| matches!(o, ROp::RollUp { dim: d, .. } if d == dim)) => {
                out.push(WfViolation {
                    condition: WfCondition::DrillDownWithoutRollUp,
                    statement: i,
                    message: "drill-down without an earlier roll-up on the same dimension".into(),
                });
            }
            op if op.is_measure_dice() && ops[i + 1..].iter().any(|o| o.is_navigation()) => {
                out.push(WfViolation {
                    condition: WfCondition::MeasureDiceBeforeNavigation,
                    statement: i,
                    message: "measure Dice followed by a roll-up or drill-down".into(),
                });
            }
            _ => {}
        }
    }
    out
}

/// Shape class of the statement sequence alone.
fn shape(p: &TypedProgram) -> PatternClass {
    let mut seen_dd = false;
    let mut in_tail = false;
    for op in p.ops() {
        if op.is_slice() {
            continue;
        }
        if op.is_measure_dice() {
            in_tail = true;
            continue;
        }
        if in_tail {
            return PatternClass::Invalid;
        }
        if matches!(op, ROp::DrillDown { .. }) {
            seen_dd = true;
        }
    }
    match (in_tail, seen_dd) {
        (true, _) => PatternClass::P3,
        (false, true) => PatternClass::P2,
        (false, false) => PatternClass::P1,
    }
}

pub(super) fn classify(p: &TypedProgram) -> PatternClass {
    if violations(p).is_empty() {
        shape(p)
    } else {
        PatternClass::Invalid
    }
}

/// Checks the three well-formedness conditions and classifies the program.
pub fn check_well_formed(p: &TypedProgram) -> WfReport {
    let violations = violations(p);
    let class = if violations.is_empty() { shape(p) } else { PatternClass::Invalid };
    WfReport { violations, class }
}
