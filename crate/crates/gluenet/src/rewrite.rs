//! Sequent rewriting with linking transport.
//!
//! Steps cover the four weak distributivity laws, associativity and symmetry
//! of both connectives, the mix step turning a tensor into a par, and a join
//! step materializing the par that a comma already denotes. Every applied
//! step records the induced permutation of literal occurrences so linkings,
//! cycles, and witnesses can be carried across.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::{Formula, LinComb, Sequent};
use crate::proofnet::{
    find_minimal_cycle, NetError, StructureGraph, SwitchingCycle, DEFAULT_PAR_BOUND,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "wLL")]
    WLl,
    #[serde(rename = "wLR")]
    WLr,
    #[serde(rename = "wRL")]
    WRl,
    #[serde(rename = "wRR")]
    WRr,
    #[serde(rename = "assocL")]
    AssocL,
    #[serde(rename = "assocR")]
    AssocR,
    #[serde(rename = "sym")]
    Sym,
    #[serde(rename = "mix")]
    Mix,
    #[serde(rename = "join")]
    Join,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Rule::WLl => "wLL",
            Rule::WLr => "wLR",
            Rule::WRl => "wRL",
            Rule::WRr => "wRR",
            Rule::AssocL => "assocL",
            Rule::AssocR => "assocR",
            Rule::Sym => "sym",
            Rule::Mix => "mix",
            Rule::Join => "join",
        };
        write!(f, "{name}")
    }
}

/// A position in the sequent's formula forest: formula index plus child
/// steps (0 left, 1 right). Serialized flat as `[formula, step, ...]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPath {
    pub formula: usize,
    pub inner: Vec<u8>,
}

impl StepPath {
    pub fn new(formula: usize, inner: Vec<u8>) -> StepPath {
        StepPath { formula, inner }
    }

    pub fn flat(&self) -> Vec<usize> {
        let mut out = vec![self.formula];
        out.extend(self.inner.iter().map(|&s| s as usize));
        out
    }
}

impl Serialize for StepPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.flat().serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<StepPath, D::Error> {
        let flat: Vec<usize> = Vec::deserialize(d)?;
        if flat.is_empty() {
            return Err(serde::de::Error::custom("path needs a formula index"));
        }
        Ok(StepPath {
            formula: flat[0],
            inner: flat[1..].iter().map(|&s| s as u8).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteStep {
    pub rule: Rule,
    pub path: StepPath,
}

impl RewriteStep {
    pub fn new(rule: Rule, formula: usize, inner: Vec<u8>) -> RewriteStep {
        RewriteStep {
            rule,
            path: StepPath::new(formula, inner),
        }
    }
}

/// An applied step together with its occurrence permutation
/// (`occ_map[old] = new`, 1-based with a dummy slot 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub step: RewriteStep,
    pub occ_map: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteTrace {
    pub steps: Vec<TraceStep>,
}

impl RewriteTrace {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// The composed occurrence permutation of the whole trace.
    pub fn total_map(&self, literal_count: usize) -> Vec<u32> {
        let mut map: Vec<u32> = (0..=literal_count as u32).collect();
        for step in &self.steps {
            for slot in map.iter_mut().skip(1) {
                *slot = step.occ_map[*slot as usize];
            }
        }
        map
    }

    /// Re-applies the recorded steps to a combination over the original
    /// sequent; the result must match what the trace was recorded from.
    pub fn replay(&self, original: &LinComb) -> Result<LinComb, RewriteError> {
        let mut cur = original.clone();
        for step in &self.steps {
            let (next, map) = apply_step(&cur, &step.step)?;
            if map != step.occ_map {
                return Err(RewriteError::ReplayDiverged);
            }
            cur = next;
        }
        Ok(cur)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RewriteError {
    BadPath(StepPath),
    PatternMismatch { rule: Rule, found: String },
    ReplayDiverged,
    NotMdnf,
    NotSingleTerm,
    Net(NetError),
    StepLimit(String),
}

impl fmt::Display for RewriteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewriteError::BadPath(p) => write!(f, "no subformula at path {:?}", p.flat()),
            RewriteError::PatternMismatch { rule, found } => {
                write!(f, "rule {rule} does not match subformula {found}")
            }
            RewriteError::ReplayDiverged => write!(f, "trace replay diverged from its record"),
            RewriteError::NotMdnf => write!(f, "input must be in disjunctive normal form"),
            RewriteError::NotSingleTerm => write!(f, "input must have exactly one term"),
            RewriteError::Net(e) => write!(f, "{e}"),
            RewriteError::StepLimit(what) => {
                write!(f, "rewrite failed to terminate within its step budget: {what}")
            }
        }
    }
}

impl std::error::Error for RewriteError {}

impl From<NetError> for RewriteError {
    fn from(e: NetError) -> RewriteError {
        RewriteError::Net(e)
    }
}

/// The occurrence span `[start, end)` (1-based) of the subformula at `path`
/// within the whole sequent.
fn occurrence_span(sequent: &Sequent, path: &StepPath) -> Result<(u32, u32), RewriteError> {
    let mut start = 1u32;
    for f in sequent.formulas().iter().take(path.formula) {
        start += f.literal_count() as u32;
    }
    let mut cur = sequent
        .formulas()
        .get(path.formula)
        .ok_or_else(|| RewriteError::BadPath(path.clone()))?;
    for &step in &path.inner {
        match cur {
            Formula::Tensor(l, r) | Formula::Par(l, r) => {
                if step == 0 {
                    cur = l;
                } else {
                    start += l.literal_count() as u32;
                    cur = r;
                }
            }
            Formula::Lit { .. } => return Err(RewriteError::BadPath(path.clone())),
        }
    }
    Ok((start, start + cur.literal_count() as u32))
}

fn identity_map(total: usize) -> Vec<u32> {
    (0..=total as u32).collect()
}

/// Swaps two adjacent occurrence ranges `[s, s+a)` and `[s+a, s+a+b)`.
fn swap_ranges(total: usize, s: u32, a: u32, b: u32) -> Vec<u32> {
    let mut map = identity_map(total);
    for o in s..s + a {
        map[o as usize] = o + b;
    }
    for o in s + a..s + a + b {
        map[o as usize] = o - a;
    }
    map
}

/// Applies one rewrite step to a sequent, returning the new sequent and the
/// occurrence permutation.
pub fn apply_step_sequent(
    sequent: &Sequent,
    step: &RewriteStep,
) -> Result<(Sequent, Vec<u32>), RewriteError> {
    let total = sequent.literal_count();
    if step.rule == Rule::Join {
        let k = step.path.formula;
        if !step.path.inner.is_empty() || k + 1 >= sequent.formulas().len() {
            return Err(RewriteError::BadPath(step.path.clone()));
        }
        let mut formulas = sequent.formulas().to_vec();
        let right = formulas.remove(k + 1);
        let left = std::mem::replace(&mut formulas[k], Formula::lit("x", crate::logic::Polarity::Pos));
        formulas[k] = Formula::par(left, right);
        let joined = Sequent::new(formulas).expect("nonempty");
        return Ok((joined, identity_map(total)));
    }

    let formula = sequent
        .formulas()
        .get(step.path.formula)
        .ok_or_else(|| RewriteError::BadPath(step.path.clone()))?;
    let target = formula
        .subformula(&step.path.inner)
        .ok_or_else(|| RewriteError::BadPath(step.path.clone()))?;
    let mismatch = |found: &Formula| RewriteError::PatternMismatch {
        rule: step.rule,
        found: found.to_string(),
    };

    let (replacement, occ_map) = match step.rule {
        Rule::WLl | Rule::WLr => {
            // X * (Y | Z)
            let Formula::Tensor(x, yz) = target else {
                return Err(mismatch(target));
            };
            let Formula::Par(y, z) = &**yz else {
                return Err(mismatch(target));
            };
            if step.rule == Rule::WLl {
                // -> (X * Y) | Z, literal order unchanged.
                (
                    Formula::par(Formula::tensor((**x).clone(), (**y).clone()), (**z).clone()),
                    identity_map(total),
                )
            } else {
                // -> (X * Z) | Y, swapping the Y and Z ranges.
                let (span_start, _) = occurrence_span(sequent, &step.path)?;
                let xs = x.literal_count() as u32;
                let ys = y.literal_count() as u32;
                let zs = z.literal_count() as u32;
                (
                    Formula::par(Formula::tensor((**x).clone(), (**z).clone()), (**y).clone()),
                    swap_ranges(total, span_start + xs, ys, zs),
                )
            }
        }
        Rule::WRl | Rule::WRr => {
            // (X | Y) * Z
            let Formula::Tensor(xy, z) = target else {
                return Err(mismatch(target));
            };
            let Formula::Par(x, y) = &**xy else {
                return Err(mismatch(target));
            };
            if step.rule == Rule::WRr {
                // -> X | (Y * Z), literal order unchanged.
                (
                    Formula::par((**x).clone(), Formula::tensor((**y).clone(), (**z).clone())),
                    identity_map(total),
                )
            } else {
                // -> Y | (X * Z), swapping the X and Y ranges.
                let (span_start, _) = occurrence_span(sequent, &step.path)?;
                let xs = x.literal_count() as u32;
                let ys = y.literal_count() as u32;
                (
                    Formula::par((**y).clone(), Formula::tensor((**x).clone(), (**z).clone())),
                    swap_ranges(total, span_start, xs, ys),
                )
            }
        }
        Rule::AssocL => match target {
            Formula::Tensor(x, yz) => {
                let Formula::Tensor(y, z) = &**yz else {
                    return Err(mismatch(target));
                };
                (
                    Formula::tensor(Formula::tensor((**x).clone(), (**y).clone()), (**z).clone()),
                    identity_map(total),
                )
            }
            Formula::Par(x, yz) => {
                let Formula::Par(y, z) = &**yz else {
                    return Err(mismatch(target));
                };
                (
                    Formula::par(Formula::par((**x).clone(), (**y).clone()), (**z).clone()),
                    identity_map(total),
                )
            }
            _ => return Err(mismatch(target)),
        },
        Rule::AssocR => match target {
            Formula::Tensor(xy, z) => {
                let Formula::Tensor(x, y) = &**xy else {
                    return Err(mismatch(target));
                };
                (
                    Formula::tensor((**x).clone(), Formula::tensor((**y).clone(), (**z).clone())),
                    identity_map(total),
                )
            }
            Formula::Par(xy, z) => {
                let Formula::Par(x, y) = &**xy else {
                    return Err(mismatch(target));
                };
                (
                    Formula::par((**x).clone(), Formula::par((**y).clone(), (**z).clone())),
                    identity_map(total),
                )
            }
            _ => return Err(mismatch(target)),
        },
        Rule::Sym => {
            let (l, r, tensor) = match target {
                Formula::Tensor(l, r) => (l, r, true),
                Formula::Par(l, r) => (l, r, false),
                _ => return Err(mismatch(target)),
            };
            let (span_start, _) = occurrence_span(sequent, &step.path)?;
            let ls = l.literal_count() as u32;
            let rs = r.literal_count() as u32;
            let swapped = if tensor {
                Formula::tensor((**r).clone(), (**l).clone())
            } else {
                Formula::par((**r).clone(), (**l).clone())
            };
            (swapped, swap_ranges(total, span_start, ls, rs))
        }
        Rule::Mix => {
            let Formula::Tensor(l, r) = target else {
                return Err(mismatch(target));
            };
            (
                Formula::par((**l).clone(), (**r).clone()),
                identity_map(total),
            )
        }
        Rule::Join => unreachable!(),
    };

    let new_formula = formula
        .replace_at(&step.path.inner, replacement)
        .ok_or_else(|| RewriteError::BadPath(step.path.clone()))?;
    let mut formulas = sequent.formulas().to_vec();
    formulas[step.path.formula] = new_formula;
    Ok((Sequent::new(formulas).expect("nonempty"), occ_map))
}

/// Applies one step to a combination, transporting every linking.
pub fn apply_step(
    comb: &LinComb,
    step: &RewriteStep,
) -> Result<(LinComb, Vec<u32>), RewriteError> {
    let (sequent, map) = apply_step_sequent(&comb.sequent, step)?;
    Ok((comb.transported(sequent, &map), map))
}

/// Driver state shared by the normalization algorithms: a combination, the
/// accumulated trace, and optionally a cycle carried along.
struct Driver {
    comb: LinComb,
    trace: RewriteTrace,
    cycle: Option<SwitchingCycle>,
}

impl Driver {
    fn new(comb: LinComb, cycle: Option<SwitchingCycle>) -> Driver {
        Driver {
            comb,
            trace: RewriteTrace::default(),
            cycle,
        }
    }

    fn apply(&mut self, step: RewriteStep) -> Result<(), RewriteError> {
        let (next, map) = apply_step(&self.comb, &step)?;
        if let Some(cycle) = &mut self.cycle {
            *cycle = cycle.transport(&map);
        }
        self.trace.steps.push(TraceStep { step, occ_map: map });
        self.comb = next;
        Ok(())
    }
}

/// Positions of all subformulas in preorder (node before children, left
/// before right), paired with a clone of the subformula.
fn preorder_positions(sequent: &Sequent) -> Vec<(StepPath, Formula)> {
    fn walk(f: &Formula, formula: usize, path: Vec<u8>, out: &mut Vec<(StepPath, Formula)>) {
        out.push((StepPath::new(formula, path.clone()), f.clone()));
        if let Formula::Tensor(l, r) | Formula::Par(l, r) = f {
            let mut lp = path.clone();
            lp.push(0);
            walk(l, formula, lp, out);
            let mut rp = path;
            rp.push(1);
            walk(r, formula, rp, out);
        }
    }
    let mut out = Vec::new();
    for (k, f) in sequent.formulas().iter().enumerate() {
        walk(f, k, vec![], &mut out);
    }
    out
}

/// Positions of every tensor connective, in preorder.
pub fn preorder_tensor_positions(sequent: &Sequent) -> Vec<StepPath> {
    preorder_positions(sequent)
        .into_iter()
        .filter(|(_, f)| matches!(f, Formula::Tensor(..)))
        .map(|(p, _)| p)
        .collect()
}

fn is_tensor_over_par(f: &Formula) -> bool {
    matches!(f, Formula::Tensor(_, r) if matches!(**r, Formula::Par(..)))
}

fn is_par_under_tensor(f: &Formula) -> bool {
    matches!(f, Formula::Tensor(l, _) if matches!(**l, Formula::Par(..)))
}

/// Rewrites a combination into disjunctive normal form: the leftmost
/// outermost `X*(Y|Z)` becomes `(X*Y)|Z`, then the leftmost outermost
/// `(X|Y)*Z` becomes `X|(Y*Z)`, until no tensor sits above a par. Literal
/// order, tensor count, and par count are all preserved.
pub fn normalize_mdnf(comb: &LinComb) -> Result<(LinComb, RewriteTrace), RewriteError> {
    let (tensors, pars) = comb.sequent.connective_counts();
    let budget = tensors * pars + 1;
    let mut driver = Driver::new(comb.clone(), None);
    for _ in 0..=budget {
        if driver.comb.sequent.is_mdnf() {
            return Ok((driver.comb, driver.trace));
        }
        let positions = preorder_positions(&driver.comb.sequent);
        let step = positions
            .iter()
            .find(|(_, f)| is_tensor_over_par(f))
            .map(|(p, _)| RewriteStep::new(Rule::WLl, p.formula, p.inner.clone()))
            .or_else(|| {
                positions
                    .iter()
                    .find(|(_, f)| is_par_under_tensor(f))
                    .map(|(p, _)| RewriteStep::new(Rule::WRr, p.formula, p.inner.clone()))
            })
            .ok_or_else(|| RewriteError::StepLimit("no matching position but not normal".into()))?;
        driver.apply(step)?;
    }
    Err(RewriteError::StepLimit(format!(
        "normal form not reached in {budget} steps"
    )))
}

/// The edges (as ordered vertex pairs) crossed by a cycle's tree segments.
fn cycle_edges(
    graph: &StructureGraph,
    cycle: &SwitchingCycle,
) -> Result<Vec<(usize, usize)>, NetError> {
    let mut edges = Vec::new();
    for segment in cycle.segment_vertices(graph)? {
        for pair in segment.windows(2) {
            edges.push((pair[0], pair[1]));
        }
    }
    Ok(edges)
}

/// Rewrites a cyclic combination so the carried cycle passes through no par
/// vertex, choosing the weak distributivity rule by which argument of the
/// par the cycle uses.
pub fn normalize_preserving_cycle(
    comb: &LinComb,
    cycle: &SwitchingCycle,
) -> Result<(LinComb, SwitchingCycle, RewriteTrace), RewriteError> {
    let (tensors, pars) = comb.sequent.connective_counts();
    let budget = 4 * (tensors + pars + 1) * (tensors + pars + 1) + 16;
    let mut driver = Driver::new(comb.clone(), Some(cycle.clone()));
    for _ in 0..=budget {
        let graph = StructureGraph::of_sequent(&driver.comb.sequent);
        let cur_cycle = driver.cycle.clone().expect("cycle carried");
        if cur_cycle.par_vertices(&graph)?.is_empty() {
            return Ok((driver.comb, cur_cycle, driver.trace));
        }
        let edges = cycle_edges(&graph, &cur_cycle)?;
        let on_cycle = |a: usize, b: usize| {
            edges
                .iter()
                .any(|&(x, y)| (x, y) == (a, b) || (y, x) == (a, b))
        };
        // The vertex the cycle continues to from `par`, other than `tensor`.
        let next_after = |tensor: usize, par: usize| -> Option<usize> {
            for &(x, y) in &edges {
                if x == par && y != tensor {
                    return Some(y);
                }
                if y == par && x != tensor {
                    return Some(x);
                }
            }
            None
        };

        let positions = preorder_positions(&driver.comb.sequent);
        let mut chosen: Option<RewriteStep> = None;
        // Tensors whose right argument is a par with the connecting edge on
        // the cycle come first, mirroring the search order of the procedure.
        for (p, f) in &positions {
            if !matches!(f, Formula::Tensor(_, r) if matches!(**r, Formula::Par(..))) {
                continue;
            }
            let tensor_id = node_at(&graph, p);
            let (_, par_id) = graph_children(&graph, tensor_id);
            if !on_cycle(tensor_id, par_id) {
                continue;
            }
            let Some(next) = next_after(tensor_id, par_id) else {
                continue;
            };
            let (y_id, _z_id) = graph_children(&graph, par_id);
            let rule = if next == y_id { Rule::WLl } else { Rule::WLr };
            chosen = Some(RewriteStep::new(rule, p.formula, p.inner.clone()));
            break;
        }
        if chosen.is_none() {
            for (p, f) in &positions {
                if !matches!(f, Formula::Tensor(l, _) if matches!(**l, Formula::Par(..))) {
                    continue;
                }
                let tensor_id = node_at(&graph, p);
                let (par_id, _) = graph_children(&graph, tensor_id);
                if !on_cycle(tensor_id, par_id) {
                    continue;
                }
                let Some(next) = next_after(tensor_id, par_id) else {
                    continue;
                };
                let (x_id, _y_id) = graph_children(&graph, par_id);
                let rule = if next == x_id { Rule::WRl } else { Rule::WRr };
                chosen = Some(RewriteStep::new(rule, p.formula, p.inner.clone()));
                break;
            }
        }
        let step = chosen.ok_or_else(|| {
            RewriteError::StepLimit("cycle crosses a par but no rewrite position matches".into())
        })?;
        driver.apply(step)?;
    }
    Err(RewriteError::StepLimit(format!(
        "cycle not freed of pars in {budget} steps"
    )))
}

/// Resolves a preorder position to its node id in the structure graph.
fn node_at(graph: &StructureGraph, path: &StepPath) -> usize {
    graph
        .node_by_path(path.formula, &path.inner)
        .expect("position exists in the graph")
}

fn graph_children(graph: &StructureGraph, id: usize) -> (usize, usize) {
    graph.children_of(id).expect("connective node")
}

/// Reorders the maximal same-connective subtree at `base` so its chunks
/// (maximal subtrees not using that connective) appear in `target` order,
/// where `target` is a permutation of the current chunk positions. Leaves
/// the subtree as a right comb.
fn reorder_chunks(
    driver: &mut Driver,
    formula: usize,
    base: Vec<u8>,
    tensor: bool,
    target: &[usize],
) -> Result<(), RewriteError> {
    let chunk_count = target.len();
    if chunk_count <= 1 {
        return Ok(());
    }
    let same = |f: &Formula| -> bool {
        match f {
            Formula::Tensor(..) => tensor,
            Formula::Par(..) => !tensor,
            Formula::Lit { .. } => false,
        }
    };
    // Right-comb normalization: rotate while some spine node has a
    // same-connective left child.
    loop {
        let root = driver
            .comb
            .sequent
            .formulas()
            .get(formula)
            .and_then(|f| f.subformula(&base))
            .ok_or_else(|| RewriteError::BadPath(StepPath::new(formula, base.clone())))?;
        let mut rotate_at: Option<Vec<u8>> = None;
        let mut cursor = root;
        let mut path = base.clone();
        loop {
            let (l, r) = match cursor {
                Formula::Tensor(l, r) | Formula::Par(l, r) => (l, r),
                Formula::Lit { .. } => break,
            };
            if !same(cursor) {
                break;
            }
            if same(l) {
                rotate_at = Some(path.clone());
                break;
            }
            path.push(1);
            cursor = r;
        }
        match rotate_at {
            Some(at) => driver.apply(RewriteStep::new(Rule::AssocR, formula, at))?,
            None => break,
        }
    }
    // Selection sort over the comb with adjacent swaps.
    let mut order: Vec<usize> = (0..chunk_count).collect();
    for slot in 0..chunk_count {
        let want = target[slot];
        let mut at = order.iter().position(|&c| c == want).expect("chunk present");
        while at > slot {
            // Swap chunks at positions at-1 and at.
            let q = at - 1;
            let mut node_path = base.clone();
            node_path.extend(std::iter::repeat(1u8).take(q));
            if q + 2 == chunk_count {
                driver.apply(RewriteStep::new(Rule::Sym, formula, node_path))?;
            } else {
                driver.apply(RewriteStep::new(Rule::AssocL, formula, node_path.clone()))?;
                let mut left = node_path.clone();
                left.push(0);
                driver.apply(RewriteStep::new(Rule::Sym, formula, left))?;
                driver.apply(RewriteStep::new(Rule::AssocR, formula, node_path))?;
            }
            order.swap(q, at);
            at = q;
        }
    }
    Ok(())
}

/// The outcome of the mix-mode normalization: a single par of one-literal
/// blocks followed by two-literal tensor blocks, the carried cycle passing
/// through exactly the tensor blocks.
pub struct MixNormalForm {
    pub comb: LinComb,
    pub cycle: SwitchingCycle,
    pub trace: RewriteTrace,
    /// Number of leading one-literal blocks.
    pub gamma_blocks: usize,
    /// Number of trailing two-literal tensor blocks.
    pub delta_blocks: usize,
}

/// Rewrites a cyclic single-term disjunctive-normal-form combination so the
/// sequent keeps only the tensors the cycle passes through: every cycle
/// block is reordered to start with its two cycle literals, every other
/// tensor becomes a par via mix, and the one-literal blocks are moved in
/// front of the surviving two-literal blocks.
pub fn mix_normal_form(comb: &LinComb) -> Result<MixNormalForm, RewriteError> {
    if !comb.sequent.is_mdnf() {
        return Err(RewriteError::NotMdnf);
    }
    if comb.terms().len() != 1 {
        return Err(RewriteError::NotSingleTerm);
    }
    let linking = comb.terms()[0].1.clone();
    let cycle = find_minimal_cycle(&comb.sequent, &linking, DEFAULT_PAR_BOUND)?;
    let mut driver = Driver::new(comb.clone(), Some(cycle));

    // Commas become explicit pars so blocks can move across formulas.
    while driver.comb.sequent.formulas().len() > 1 {
        driver.apply(RewriteStep::new(Rule::Join, 0, vec![]))?;
    }

    // Orient the cycle: anchor at the leftmost block it passes through, with
    // the lower-numbered literal of that block as the entry.
    let orient = |driver: &Driver| -> Result<Vec<(u32, u32)>, RewriteError> {
        let cycle = driver.cycle.clone().expect("cycle carried");
        let block_of = driver
            .comb
            .sequent
            .block_of_occurrence()
            .map_err(|_| RewriteError::NotMdnf)?;
        let links = cycle.links.clone();
        if links.len() == 1 {
            let (p, n) = links[0];
            return Ok(vec![(p.min(n), p.max(n))]);
        }
        // Per cycle block: entry (arriving link endpoint) and exit
        // (departing endpoint) under the traversal direction.
        let anchor_block = links
            .iter()
            .flat_map(|&(a, b)| [block_of[a as usize], block_of[b as usize]])
            .min()
            .expect("cycle has blocks");
        // Entries per block in traversal order: block of links[k].1 hosts
        // entry links[k].1 and exit links[k+1].0.
        let m = links.len();
        let mut entries = Vec::with_capacity(m);
        for k in 0..m {
            let entry = links[k].1;
            let exit = links[(k + 1) % m].0;
            debug_assert_eq!(block_of[entry as usize], block_of[exit as usize]);
            entries.push((block_of[entry as usize], entry, exit));
        }
        let pos = entries
            .iter()
            .position(|&(b, _, _)| b == anchor_block)
            .expect("anchor on cycle");
        let (_, entry, exit) = entries[pos];
        let forward = entry < exit;
        let mut oriented = Vec::with_capacity(m);
        for k in 0..m {
            let at = if forward {
                (pos + k) % m
            } else {
                (pos + m - k) % m
            };
            let (b, entry, exit) = entries[at];
            let _ = b;
            if forward {
                oriented.push((entry, exit));
            } else {
                oriented.push((exit, entry));
            }
        }
        Ok(oriented)
    };

    // Reorder every cycle block so the entry and exit literals come first.
    // `oriented[k] = (first, second)` per cycle block in traversal order.
    let oriented = orient(&driver)?;
    for k in 0..oriented.len() {
        // Recompute positions each round: earlier reorders permute literals.
        let oriented_now = orient(&driver)?;
        let (first, second) = oriented_now[k];
        let sequent = &driver.comb.sequent;
        let blocks = sequent.blocks().map_err(|_| RewriteError::NotMdnf)?;
        let block_of = sequent.block_of_occurrence().map_err(|_| RewriteError::NotMdnf)?;
        let b = block_of[first as usize];
        let occs = &blocks[b];
        if occs.len() <= 1 {
            continue;
        }
        let chunk_of = |occ: u32| occs.iter().position(|&o| o == occ).expect("occ in block");
        let mut target = vec![chunk_of(first)];
        if second != first {
            target.push(chunk_of(second));
        }
        for c in 0..occs.len() {
            if !target.contains(&c) {
                target.push(c);
            }
        }
        let base = block_base_path(sequent, b)?;
        reorder_chunks(&mut driver, 0, base, true, &target)?;
        // Group the leading pair when spectators follow:
        // X * (Y * rest) -> (X * Y) * rest.
        if occs.len() > 2 {
            let base = block_base_path(&driver.comb.sequent, b)?;
            driver.apply(RewriteStep::new(Rule::AssocL, 0, base))?;
        }
    }

    // Mix every tensor that is not a protected cycle pair.
    let protected: Vec<(u32, u32)> = orient(&driver)?;
    loop {
        let positions = preorder_positions(&driver.comb.sequent);
        let sequent = driver.comb.sequent.clone();
        let target = positions.iter().find(|(p, f)| {
            if !matches!(f, Formula::Tensor(..)) {
                return false;
            }
            // A protected tensor joins exactly the two cycle literals.
            let (start, end) = match occurrence_span(&sequent, p) {
                Ok(span) => span,
                Err(_) => return false,
            };
            if end - start == 2 {
                let pair = (start, start + 1);
                !protected
                    .iter()
                    .any(|&(a, b)| (a.min(b), a.max(b)) == pair)
            } else {
                true
            }
        });
        match target {
            Some((p, _)) => {
                driver.apply(RewriteStep::new(Rule::Mix, p.formula, p.inner.clone()))?
            }
            None => break,
        }
    }

    // Move one-literal blocks before the surviving two-literal blocks.
    {
        let sequent = &driver.comb.sequent;
        let blocks = sequent.blocks().map_err(|_| RewriteError::NotMdnf)?;
        let mut target: Vec<usize> = (0..blocks.len())
            .filter(|&b| blocks[b].len() == 1)
            .collect();
        target.extend((0..blocks.len()).filter(|&b| blocks[b].len() == 2));
        if blocks.iter().any(|b| b.len() > 2) {
            return Err(RewriteError::StepLimit(
                "a block wider than two literals survived mixing".into(),
            ));
        }
        reorder_chunks(&mut driver, 0, vec![], false, &target)?;
    }

    let blocks = driver.comb.sequent.blocks().map_err(|_| RewriteError::NotMdnf)?;
    let gamma_blocks = blocks.iter().filter(|b| b.len() == 1).count();
    let delta_blocks = blocks.len() - gamma_blocks;
    Ok(MixNormalForm {
        cycle: driver.cycle.clone().expect("cycle carried"),
        comb: driver.comb,
        trace: driver.trace,
        gamma_blocks,
        delta_blocks,
    })
}

/// The subtree position of block `b` (0-based) inside the single formula of
/// a joined disjunctive-normal-form sequent.
fn block_base_path(sequent: &Sequent, b: usize) -> Result<Vec<u8>, RewriteError> {
    fn walk(f: &Formula, path: Vec<u8>, acc: &mut Vec<Vec<u8>>) {
        match f {
            Formula::Par(l, r) => {
                let mut lp = path.clone();
                lp.push(0);
                walk(l, lp, acc);
                let mut rp = path;
                rp.push(1);
                walk(r, rp, acc);
            }
            _ => acc.push(path),
        }
    }
    let formula = sequent.formulas().first().ok_or(RewriteError::NotMdnf)?;
    let mut acc = Vec::new();
    walk(formula, vec![], &mut acc);
    acc.into_iter().nth(b).ok_or(RewriteError::NotMdnf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{enumerate_linkings, parse_sequent, LinComb, Linking};
    use crate::proofnet::{is_mix_net, is_mll_net};
    use crate::semiring::Semiring;

    fn comb(text: &str, pairs: &[(u32, u32)]) -> LinComb {
        let s = parse_sequent(text).unwrap();
        let l = Linking::new(&s, pairs.to_vec()).unwrap();
        LinComb::single(Semiring::Nat, s, l)
    }

    fn sequent_only(text: &str) -> LinComb {
        let s = parse_sequent(text).unwrap();
        LinComb::new(Semiring::Nat, s, vec![]).unwrap()
    }

    #[test]
    fn wll_at_root_keeps_occurrence_order() {
        let c = sequent_only("a*(b|c)");
        let step = RewriteStep::new(Rule::WLl, 0, vec![]);
        let (out, map) = apply_step(&c, &step).unwrap();
        assert_eq!(out.sequent.to_string(), "a*b|c");
        assert_eq!(map, vec![0, 1, 2, 3]);
    }

    #[test]
    fn mix_at_root_turns_tensor_into_par() {
        let c = sequent_only("a*b");
        let (out, map) = apply_step(&c, &RewriteStep::new(Rule::Mix, 0, vec![])).unwrap();
        assert_eq!(out.sequent.to_string(), "a|b");
        assert_eq!(map, vec![0, 1, 2]);
    }

    #[test]
    fn sym_at_root_swaps_the_two_occurrences() {
        let c = sequent_only("a*b");
        let (out, map) = apply_step(&c, &RewriteStep::new(Rule::Sym, 0, vec![])).unwrap();
        assert_eq!(out.sequent.to_string(), "b*a");
        assert_eq!(map, vec![0, 2, 1]);
    }

    #[test]
    fn wlr_swaps_the_right_pair_of_ranges() {
        let c = sequent_only("a*((b*c)|d)");
        let (out, map) = apply_step(&c, &RewriteStep::new(Rule::WLr, 0, vec![])).unwrap();
        assert_eq!(out.sequent.to_string(), "a*d|b*c");
        assert_eq!(map, vec![0, 1, 3, 4, 2]);
    }

    #[test]
    fn pattern_mismatch_is_reported() {
        let c = sequent_only("a|b");
        assert!(matches!(
            apply_step(&c, &RewriteStep::new(Rule::WLl, 0, vec![])),
            Err(RewriteError::PatternMismatch { .. })
        ));
        assert!(matches!(
            apply_step(&c, &RewriteStep::new(Rule::Mix, 0, vec![0, 0])),
            Err(RewriteError::BadPath(_))
        ));
    }

    #[test]
    fn normalize_single_distribution() {
        // Atom `a` is unlinkable here, so use a linking-free combination.
        let c = sequent_only("a*(b|~b)");
        let (out, trace) = normalize_mdnf(&c).unwrap();
        assert_eq!(out.sequent.to_string(), "a*b|~b");
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.steps[0].step.rule, Rule::WLl);
    }

    #[test]
    fn normalize_uses_wrr_for_par_on_the_left() {
        let c = sequent_only("(a|b)*~c");
        let (out, trace) = normalize_mdnf(&c).unwrap();
        assert_eq!(out.sequent.to_string(), "a|b*~c");
        assert_eq!(trace.steps[0].step.rule, Rule::WRr);
    }

    #[test]
    fn normalize_is_identity_on_normal_forms() {
        let c = comb("(a*~a)|(a*~a)", &[(1, 2), (3, 4)]);
        let (out, trace) = normalize_mdnf(&c).unwrap();
        assert_eq!(out, c);
        assert!(trace.is_empty());
    }

    #[test]
    fn normalize_preserves_counts_and_terminates_in_budget() {
        for text in [
            "a*(b|(c*(d|e)))",
            "((a|b)*(c|d))*(e|f)",
            "(a|(b*(c|d)))*e",
            "~(a*(b|c))*(d|~e)",
        ] {
            let c = sequent_only(text);
            let (tensors, pars) = c.sequent.connective_counts();
            let (out, trace) = normalize_mdnf(&c).unwrap();
            assert!(out.sequent.is_mdnf(), "{text}");
            assert_eq!(out.sequent.connective_counts(), (tensors, pars));
            assert_eq!(out.sequent.literal_count(), c.sequent.literal_count());
            assert!(trace.len() <= tensors * pars, "{text}: {}", trace.len());
            // Literal multiset is preserved.
            let mut before: Vec<String> = c
                .sequent
                .occurrences()
                .iter()
                .map(|o| format!("{:?}{}", o.polarity, o.atom))
                .collect();
            let mut after: Vec<String> = out
                .sequent
                .occurrences()
                .iter()
                .map(|o| format!("{:?}{}", o.polarity, o.atom))
                .collect();
            before.sort();
            after.sort();
            assert_eq!(before, after);
        }
    }

    #[test]
    fn trace_replays_exactly() {
        let c = sequent_only("(a|(b*(c|d)))*e");
        let (out, trace) = normalize_mdnf(&c).unwrap();
        assert_eq!(trace.replay(&c).unwrap(), out);
    }

    #[test]
    fn transported_linkings_stay_valid() {
        let s = parse_sequent("(a*(~a|a))*~a").unwrap();
        for l in enumerate_linkings(&s, 8).unwrap().linkings {
            let c = LinComb::single(Semiring::Nat, s.clone(), l);
            let (out, _) = normalize_mdnf(&c).unwrap();
            for (_, linking) in out.terms() {
                assert!(Linking::new(&out.sequent, linking.pairs().to_vec()).is_ok());
            }
        }
    }

    #[test]
    fn preserving_cycle_leaves_tensor_only_cycles_alone() {
        let c = comb("a*~a", &[(1, 2)]);
        let cycle = find_minimal_cycle(&c.sequent, &c.terms()[0].1, DEFAULT_PAR_BOUND).unwrap();
        let (out, cycle2, trace) = normalize_preserving_cycle(&c, &cycle).unwrap();
        assert_eq!(out, c);
        assert_eq!(cycle2, cycle);
        assert!(trace.is_empty());
    }

    #[test]
    fn one_wll_step_frees_the_inner_par_cycle() {
        let c = comb("a*((~a*a)|~a)", &[(1, 2), (3, 4)]);
        let cycle = find_minimal_cycle(&c.sequent, &c.terms()[0].1, DEFAULT_PAR_BOUND).unwrap();
        let (out, cycle2, trace) = normalize_preserving_cycle(&c, &cycle).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.steps[0].step.rule, Rule::WLl);
        let graph = StructureGraph::of_sequent(&out.sequent);
        assert!(cycle2.par_vertices(&graph).unwrap().is_empty());
        // The transported cycle matches a fresh minimal-cycle search.
        let fresh = find_minimal_cycle(&out.sequent, &out.terms()[0].1, DEFAULT_PAR_BOUND).unwrap();
        assert_eq!(cycle2.sorted_pairs(), fresh.sorted_pairs());
    }

    #[test]
    fn freed_cycle_survives_normalization() {
        // A cyclic chain wrapped in structure that normalization unfolds.
        let c = comb("(a*~a)|((a*~a)|(a*~a))", &[(1, 6), (3, 2), (5, 4)]);
        let cycle = find_minimal_cycle(&c.sequent, &c.terms()[0].1, DEFAULT_PAR_BOUND).unwrap();
        let (mid, cycle2, _) = normalize_preserving_cycle(&c, &cycle).unwrap();
        let (out, trace) = normalize_mdnf(&mid).unwrap();
        let map = trace.total_map(out.sequent.literal_count());
        let cycle3 = cycle2.transport(&map);
        let graph = StructureGraph::of_sequent(&out.sequent);
        assert!(cycle3.par_vertices(&graph).unwrap().is_empty());
        assert!(!is_mix_net(&out.sequent, &out.terms()[0].1, DEFAULT_PAR_BOUND).unwrap());
    }

    #[test]
    fn single_steps_preserve_correctness_forward() {
        // Weak distributivity preserves plain correctness; every rule
        // preserves correctness with Mix.
        let cases = [
            ("a*(b|~b), ~a", vec![(1, 4), (2, 3)], RewriteStep::new(Rule::WLl, 0, vec![])),
            ("a*(b|~b), ~a", vec![(1, 4), (2, 3)], RewriteStep::new(Rule::WLr, 0, vec![])),
            ("(a|b)*~b, ~a", vec![(1, 4), (2, 3)], RewriteStep::new(Rule::WRr, 0, vec![])),
            ("(a|b)*~b, ~a", vec![(1, 4), (2, 3)], RewriteStep::new(Rule::WRl, 0, vec![])),
        ];
        for (text, pairs, step) in cases {
            let c = comb(text, &pairs);
            let before_mll = is_mll_net(&c.sequent, &c.terms()[0].1, DEFAULT_PAR_BOUND).unwrap();
            let before_mix = is_mix_net(&c.sequent, &c.terms()[0].1, DEFAULT_PAR_BOUND).unwrap();
            let (out, _) = apply_step(&c, &step).unwrap();
            let after_mll = is_mll_net(&out.sequent, &out.terms()[0].1, DEFAULT_PAR_BOUND).unwrap();
            let after_mix = is_mix_net(&out.sequent, &out.terms()[0].1, DEFAULT_PAR_BOUND).unwrap();
            if before_mll {
                assert!(after_mll, "{text} {:?}", step);
            }
            if before_mix {
                assert!(after_mix, "{text} {:?}", step);
            }
        }
    }

    #[test]
    fn mix_form_keeps_a_bare_cyclic_pair() {
        let c = comb("a*~a", &[(1, 2)]);
        let out = mix_normal_form(&c).unwrap();
        assert_eq!(out.comb.sequent.to_string(), "a*~a");
        assert_eq!(out.gamma_blocks, 0);
        assert_eq!(out.delta_blocks, 1);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn mix_form_splits_spectators_into_leading_singletons() {
        // Three cyclic blocks, each carrying one spectator literal.
        let text = "(a*~a*b)|(a*~a*~b)|(a*~a*b)|~b|b|~b";
        let s = parse_sequent(text).unwrap();
        // Occurrences: 1:a 2:~a 3:b | 4:a 5:~a 6:~b | 7:a 8:~a 9:b | 10:~b
        // 11:b 12:~b. Spectator links hang off the cycle without shortcuts.
        let l = Linking::new(&s, vec![(1, 5), (4, 8), (7, 2), (3, 10), (9, 12), (11, 6)]).unwrap();
        let c = LinComb::single(Semiring::Nat, s, l);
        let out = mix_normal_form(&c).unwrap();
        let blocks = out.comb.sequent.blocks().unwrap();
        assert_eq!(out.gamma_blocks + out.delta_blocks, blocks.len());
        assert_eq!(out.delta_blocks, 3);
        for (b, occs) in blocks.iter().enumerate() {
            if b < out.gamma_blocks {
                assert_eq!(occs.len(), 1);
            } else {
                assert_eq!(occs.len(), 2);
            }
        }
        // The carried cycle passes through exactly the two-literal blocks.
        let block_of = out.comb.sequent.block_of_occurrence().unwrap();
        let mut touched: Vec<usize> = out
            .cycle
            .links
            .iter()
            .flat_map(|&(a, b)| [block_of[a as usize], block_of[b as usize]])
            .collect();
        touched.sort();
        touched.dedup();
        let expected: Vec<usize> =
            (out.gamma_blocks..out.gamma_blocks + out.delta_blocks).collect();
        assert_eq!(touched, expected);
        // Each delta block is internally linked across the cycle, and the
        // structure is still cyclic.
        assert!(!is_mix_net(&out.comb.sequent, &out.comb.terms()[0].1, DEFAULT_PAR_BOUND).unwrap());
        // Trace replays.
        assert_eq!(out.trace.replay(&c).unwrap(), out.comb);
    }

    #[test]
    fn mix_form_reaches_the_regular_shape() {
        // Two-block cycle with a spectator pair elsewhere.
        let c = comb("(a*~a)|(a*~a)|b|~b", &[(1, 4), (3, 2), (5, 6)]);
        let out = mix_normal_form(&c).unwrap();
        assert_eq!(out.gamma_blocks, 2);
        assert_eq!(out.delta_blocks, 2);
        let printed = out.comb.sequent.to_string();
        assert!(printed.contains('*'), "{printed}");
    }
}
