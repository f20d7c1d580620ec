//! Metamorphic checks of the simplifier and the operator laws it relies on,
//! all decided by the reference evaluator.

use crate::cql::{Op, TypedProgram};
use crate::instance::CubeInstance;
use crate::model::ALL_LEVEL;
use crate::oracle::eval;
use crate::random::accept;
use crate::simplify::simplify;
use crate::table::{ResultTable, DEFAULT_TOLERANCE};
use rand::seq::IndexedRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    Idempotence,
    SizeMonotone,
    SimplifyPreserves,
    Commutation,
    Composition,
    Identity,
    SliceAbsorption,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::Idempotence,
        Check::SizeMonotone,
        Check::SimplifyPreserves,
        Check::Commutation,
        Check::Composition,
        Check::Identity,
        Check::SliceAbsorption,
    ];
}

/// Outcome of the checks on one program. A check that found nothing to
/// exercise (e.g. no adjacent roll-ups to swap) is not listed in `ran`.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub ran: Vec<Check>,
    pub failures: Vec<(Check, String)>,
}

impl Outcome {
    fn record(&mut self, c: Check, r: Result<(), String>) {
        self.ran.push(c);
        if let Err(e) = r {
            self.failures.push((c, e));
        }
    }
}

fn run(cube: &CubeInstance, tp: &TypedProgram) -> Result<ResultTable, String> {
    eval(tp, cube).map_err(|e| e.to_string())
}

fn same(cube: &CubeInstance, a: &TypedProgram, b: &TypedProgram) -> Result<(), String> {
    let (ta, tb) = (run(cube, a)?, run(cube, b)?);
    ta.compare(&tb, DEFAULT_TOLERANCE).map_err(|e| format!("{e:?}\n--- left\n{}--- right\n{}", a.program, b.program))
}

fn nav(op: &Op) -> Option<&str> {
    match op {
        Op::RollUp { dimension, .. } | Op::DrillDown { dimension, .. } => Some(dimension),
        _ => None,
    }
}

/// Moves from the current level of dimension `d` to `level`, as one
/// statement; nothing when already there.
fn single_move(cube: &CubeInstance, from: &str, d: usize, level: &str) -> Vec<Op> {
    let dim = &cube.schema.dimensions[d];
    let dimension = dim.name.clone();
    let level = level.to_string();
    if from == level {
        vec![]
    } else if dim.reaches(from, &level) {
        vec![Op::RollUp { dimension, level }]
    } else {
        vec![Op::DrillDown { dimension, level }]
    }
}

/// A random walk of 2 or 3 navigations on dimension `d` starting at `from`.
fn random_run<R: Rng>(cube: &CubeInstance, d: usize, from: &str, rng: &mut R) -> (Vec<Op>, String) {
    let dim = &cube.schema.dimensions[d];
    let mut cur = from.to_string();
    let mut ops = Vec::new();
    for _ in 0..rng.random_range(2..=3) {
        let opts: Vec<&str> = dim.levels.iter().map(|l| l.name.as_str()).filter(|l| *l != cur && *l != ALL_LEVEL).collect();
        let Some(next) = opts.choose(rng) else { break };
        let up = dim.reaches(&cur, next);
        if !up && !dim.reaches(next, &cur) {
            continue;
        }
        let (dimension, level) = (dim.name.clone(), next.to_string());
        ops.push(if up { Op::RollUp { dimension, level } } else { Op::DrillDown { dimension, level } });
        cur = next.to_string();
    }
    (ops, cur)
}

/// Runs every check on `tp`. Random choices (which dimension, where to
/// insert) come from `rng`.
pub fn check_program<R: Rng>(cube: &CubeInstance, tp: &TypedProgram, rng: &mut R) -> Outcome {
    let s = &cube.schema;
    let mut out = Outcome::default();
    let simplified = match simplify(tp, s) {
        Ok(x) => x.program,
        Err(e) => {
            out.record(Check::SimplifyPreserves, Err(e.to_string()));
            return out;
        }
    };
    out.record(
        Check::Idempotence,
        match simplify(&simplified, s) {
            Ok(again) if again.program.program == simplified.program => Ok(()),
            Ok(again) => Err(format!("second pass changed\n{}into\n{}", simplified.program, again.program.program)),
            Err(e) => Err(e.to_string()),
        },
    );
    out.record(
        Check::SizeMonotone,
        if simplified.len() <= tp.len() { Ok(()) } else { Err(format!("{} > {}", simplified.len(), tp.len())) },
    );
    out.record(Check::SimplifyPreserves, same(cube, tp, &simplified));

    let ops = tp.program.ops();

    // Swap every adjacent pair of navigations on different dimensions.
    let mut swapped = false;
    for i in 1..ops.len() {
        if let (Some(a), Some(b)) = (nav(&ops[i - 1]), nav(&ops[i])) {
            if a != b {
                let mut o = ops.clone();
                o.swap(i - 1, i);
                if let Some(t) = accept(&o, s) {
                    if !swapped {
                        out.ran.push(Check::Commutation);
                        swapped = true;
                    }
                    if let Err(e) = same(cube, tp, &t) {
                        out.failures.push((Check::Commutation, e));
                    }
                }
            }
        }
    }

    let end = tp.result();
    let live: Vec<usize> = (0..s.dimensions.len()).filter(|d| end.levels[*d].is_some()).collect();
    if let Some(&d) = live.choose(rng) {
        let from = end.levels[d].as_ref().expect("live dimension").level.clone();
        // A navigation run ending at L against one move to L.
        let (run_ops, to) = random_run(cube, d, &from, rng);
        let mut a = ops.clone();
        a.extend(run_ops.iter().cloned());
        let mut b = ops.clone();
        b.extend(single_move(cube, &from, d, &to));
        if let (Some(ta), Some(tb)) = (accept(&a, s), accept(&b, s)) {
            out.record(Check::Composition, same(cube, &ta, &tb));
        }
        // The run followed by a Slice against the Slice alone.
        let slice = Op::Slice { target: s.dimensions[d].name.clone() };
        a.push(slice.clone());
        let mut b = ops.clone();
        b.push(slice);
        if let (Some(ta), Some(tb)) = (accept(&a, s), accept(&b, s)) {
            out.record(Check::SliceAbsorption, same(cube, &ta, &tb));
        }
    }

    // A roll-up from a level to itself, inserted at a random position.
    let at = rng.random_range(0..=ops.len());
    let before = if at == 0 { &tp.initial } else { &tp.statements[at - 1].after };
    let open: Vec<usize> = (0..s.dimensions.len()).filter(|d| before.levels[*d].is_some()).collect();
    if let Some(&d) = open.choose(rng) {
        let level = before.levels[d].as_ref().expect("open dimension").level.clone();
        let mut o = ops.clone();
        o.insert(at, Op::RollUp { dimension: s.dimensions[d].name.clone(), level });
        if let Some(t) = accept(&o, s) {
            out.record(Check::Identity, same(cube, tp, &t));
        }
    }
    out
}
