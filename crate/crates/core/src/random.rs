//! Random well-formed programs over a cube, for property and equivalence
//! testing. Conditions use attribute values that occur in the instance so
//! that Dices keep some cells and drop others.

use crate::cql::{check_well_formed, resolve, CmpOp, Cond, Literal, Op, Operand, Program, TypedProgram};
use crate::instance::CubeInstance;
use crate::model::{CubeSchema, ValueDomain, ALL_LEVEL};
use rand::seq::IndexedRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    /// Upper bound on the number of statements.
    pub max_len: usize,
    /// Chance that a level Dice gets a second atom.
    pub compound: f64,
    /// Chance of trying a measure Dice at each step.
    pub measure_dice: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_len: 8, compound: 0.3, measure_dice: 0.1 }
    }
}

const OPS: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

/// Resolves and checks a candidate; `None` when it is rejected.
pub fn accept(ops: &[Op], s: &CubeSchema) -> Option<TypedProgram> {
    let tp = resolve(&Program::chain(&s.name, ops.to_vec()), s).ok()?;
    check_well_formed(&tp).well_formed().then_some(tp)
}

fn literal_of(v: &crate::rdf::Literal, domain: ValueDomain) -> Literal {
    match domain {
        ValueDomain::Integer => v.lexical.trim().parse().map(Literal::Int).unwrap_or_else(|_| Literal::Dec(v.lexical.clone())),
        ValueDomain::Decimal => Literal::Dec(v.lexical.clone()),
        ValueDomain::String | ValueDomain::Date => Literal::Str { value: v.lexical.clone(), lang: v.lang.clone() },
    }
}

fn level_atom<R: Rng>(cube: &CubeInstance, tp: &TypedProgram, rng: &mut R) -> Option<Cond> {
    let s = &cube.schema;
    let open: Vec<(usize, &str)> = tp
        .result()
        .levels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.as_ref().filter(|l| !l.is_all()).map(|l| (i, l.level.as_str())))
        .collect();
    let (d, level) = *open.choose(rng)?;
    let dim = &s.dimensions[d];
    let l = dim.level(level)?;
    let attr = l.attributes.choose(rng)?;
    let member = cube.dimensions.members_of(&l.iri).choose(rng)?;
    let value = cube.dimensions.attribute(member, &attr.iri)?;
    let lhs = Operand::Attribute { dimension: dim.name.clone(), level: l.name.clone(), attribute: attr.name.clone() };
    Some(Cond::Cmp(*OPS.choose(rng)?, lhs, Operand::Literal(literal_of(value, attr.domain))))
}

fn measure_atom<R: Rng>(cube: &CubeInstance, tp: &TypedProgram, rng: &mut R) -> Option<Cond> {
    let s = &cube.schema;
    let live: Vec<usize> = (0..s.measures.len()).filter(|j| tp.result().measures[*j]).collect();
    let j = *live.choose(rng)?;
    let obs = cube.observations.rows.choose(rng)?;
    // Scaled so the threshold lands inside the range of group aggregates.
    let t = (obs.measures[j] * rng.random_range(0.5..4.0)).round() as i64;
    Some(Cond::Cmp(*OPS[2..].choose(rng)?, Operand::Measure(s.measures[j].name.clone()), Operand::Literal(Literal::Int(t))))
}

fn candidate<R: Rng>(cube: &CubeInstance, tp: &TypedProgram, cfg: &GenConfig, rng: &mut R) -> Option<Op> {
    let s = &cube.schema;
    let cur = tp.result();
    if rng.random_bool(cfg.measure_dice) {
        return measure_atom(cube, tp, rng).map(|condition| Op::Dice { condition });
    }
    match rng.random_range(0..10) {
        0..=3 => {
            let d = rng.random_range(0..s.dimensions.len());
            let here = cur.levels[d].as_ref()?;
            let dim = &s.dimensions[d];
            let up = rng.random_bool(0.7);
            let targets: Vec<&str> = dim
                .levels
                .iter()
                .map(|l| l.name.as_str())
                .filter(|l| *l != here.level && *l != ALL_LEVEL)
                .filter(|l| if up { dim.reaches(&here.level, l) } else { dim.reaches(l, &here.level) })
                .collect();
            let level = targets.choose(rng)?.to_string();
            let dimension = dim.name.clone();
            Some(if up { Op::RollUp { dimension, level } } else { Op::DrillDown { dimension, level } })
        }
        4..=6 => {
            let mut c = level_atom(cube, tp, rng)?;
            if rng.random_bool(cfg.compound) {
                if let Some(b) = level_atom(cube, tp, rng) {
                    c = if rng.random_bool(0.5) { Cond::and(c, b) } else { Cond::or(c, b) };
                }
            }
            if rng.random_bool(0.1) {
                c = Cond::Not(Box::new(c));
            }
            Some(Op::Dice { condition: c })
        }
        7 | 8 => {
            let live: Vec<usize> = (0..s.dimensions.len()).filter(|d| cur.levels[*d].is_some()).collect();
            Some(Op::Slice { target: s.dimensions[*live.choose(rng)?].name.clone() })
        }
        _ => {
            // Keep at least one measure.
            let live: Vec<usize> = (0..s.measures.len()).filter(|j| cur.measures[*j]).collect();
            if live.len() < 2 {
                return None;
            }
            Some(Op::Slice { target: s.measures[*live.choose(rng)?].name.clone() })
        }
    }
}

/// A random program of at most `cfg.max_len` statements that resolves and
/// is well formed.
pub fn random_program<R: Rng>(cube: &CubeInstance, cfg: &GenConfig, rng: &mut R) -> TypedProgram {
    let s = &cube.schema;
    let target = rng.random_range(0..=cfg.max_len);
    let mut ops: Vec<Op> = Vec::new();
    let mut tp = accept(&ops, s).expect("the empty program is well formed");
    let mut tries = 0;
    while ops.len() < target && tries < 20 * (target + 1) {
        tries += 1;
        let Some(op) = candidate(cube, &tp, cfg, rng) else { continue };
        ops.push(op);
        match accept(&ops, s) {
            Some(next) => tp = next,
            None => {
                ops.pop();
            }
        }
    }
    tp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::asylum_cube;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn programs_are_well_formed_and_varied() {
        let cube = asylum_cube(true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut kinds = std::collections::BTreeSet::new();
        for _ in 0..200 {
            let tp = random_program(&cube, &GenConfig::default(), &mut rng);
            assert!(check_well_formed(&tp).well_formed());
            for op in tp.program.ops() {
                kinds.insert(op.keyword());
            }
        }
        assert_eq!(kinds.len(), 4, "{kinds:?}");
    }

    #[test]
    fn same_seed_same_program() {
        let cube = asylum_cube(true);
        let a = random_program(&cube, &GenConfig::default(), &mut ChaCha8Rng::seed_from_u64(9));
        let b = random_program(&cube, &GenConfig::default(), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.program, b.program);
    }
}
