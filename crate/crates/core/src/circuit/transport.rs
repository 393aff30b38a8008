use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::exact::Scalar;
use crate::rng;

use super::copenhagen::{joint_distribution_with, OutcomeTable};
use super::model::{conditional, ExactModel, FloatModel, JointModel};
use super::{path_label, port_label, Arm, CircuitError, DetectorOutcome, ElementKind, OpticalCircuit, Result};

/// Hidden variables of one pair at preparation: the joint path label and a
/// coordinate in [0, 1) inside each arm's label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hidden {
    pub labels: [usize; 2],
    pub coords: [f64; 2],
}

/// `(layer, label)`: layer 0 holds the starting path.
pub type RecordEntry = (u32, String);

/// The actual configuration while it moves through the circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathConfiguration {
    pub actual: [usize; 2],
    pub coords: [f64; 2],
    /// Whether each arm's label currently names a beam-splitter port.
    pub ported: [bool; 2],
    pub records: [Vec<RecordEntry>; 2],
}

impl PathConfiguration {
    fn start(h: &Hidden) -> Self {
        PathConfiguration {
            actual: h.labels,
            coords: h.coords,
            ported: [false; 2],
            records: [vec![(0, path_label(h.labels[0]))], vec![(0, path_label(h.labels[1]))]],
        }
    }

    /// The record of `arm` up to, but excluding, its detection.
    pub fn pre_detection(&self, arm: Arm) -> &[RecordEntry] {
        let r = &self.records[arm.index()];
        &r[..r.len().saturating_sub(1)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    pub initial: Hidden,
    pub outcome: DetectorOutcome,
    pub config: PathConfiguration,
}

/// Position of `(label, x)` on the arm's line: cumulative conditional
/// probability of the labels above it plus x times its own probability.
pub fn global_coordinate<S: Scalar>(cond: &[S; 2], order: [usize; 2], label: usize, x: S) -> S {
    let mut acc = S::zero();
    for k in order {
        if k == label {
            return acc + x * cond[k].clone();
        }
        acc = acc + cond[k].clone();
    }
    unreachable!("label {label} is not in the order {order:?}")
}

/// Inverse of [`global_coordinate`]: the label whose interval holds `c`
/// and the coordinate inside it. Labels of zero probability own no interval.
pub fn locate<S: Scalar>(cond: &[S; 2], order: [usize; 2], c: S) -> Result<(usize, S)> {
    let mut acc = S::zero();
    let mut last = None;
    for k in order {
        let p = cond[k].clone();
        if p.is_negligible() {
            continue;
        }
        let end = acc.clone() + p.clone();
        if c < end {
            return Ok((k, (c - acc) / p));
        }
        last = Some((k, acc.clone(), p));
        acc = end;
    }
    // only reachable through float round-off at the top of the line
    match last {
        Some((k, start, p)) if !S::is_exact() => Ok((k, (c - start) / p)),
        _ => Err(CircuitError::Inconsistent(format!("coordinate {c} lies outside every label"))),
    }
}

fn order_of(circuit: &OpticalCircuit, arm: Arm, ported: bool) -> [usize; 2] {
    let g = circuit.geometry(arm);
    if ported {
        g.port_order
    } else {
        g.path_order
    }
}

fn below_one(x: f64) -> f64 {
    if x >= 1.0 {
        f64::from_bits(1.0f64.to_bits() - 1)
    } else {
        x.max(0.0)
    }
}

fn check_hidden(h: &Hidden) -> Result<()> {
    for &x in &h.coords {
        if !(0.0..1.0).contains(&x) {
            return Err(CircuitError::BadCoordinate(x));
        }
    }
    if h.labels.iter().any(|&l| l > 1) {
        return Err(CircuitError::InvalidCircuit(format!("labels {:?} out of range", h.labels)));
    }
    Ok(())
}

fn f64_pair<S: Scalar>(c: &[S; 2]) -> [f64; 2] {
    [c[0].to_f64(), c[1].to_f64()]
}

/// Carries one hidden configuration through the circuit using `M` for the
/// joint state. At a beam splitter the acting particle keeps its global
/// coordinate; its label and in-label coordinate are re-read from the
/// conditional distribution after the element, given the other particle's
/// current label. A detection reads off the actual label and conditions
/// the joint state on it.
pub fn bohmian_transport_with<M: JointModel>(circuit: &OpticalCircuit, hidden: &Hidden) -> Result<TransportResult> {
    check_hidden(hidden)?;
    let mut model = M::initial();
    if model.weight_of(hidden.labels).is_negligible() {
        return Err(CircuitError::ImpossibleConfiguration { labels: hidden.labels });
    }
    let mut cfg = PathConfiguration::start(hidden);
    let mut seen = [String::new(), String::new()];
    for e in circuit.elements() {
        let (a, ai) = (e.arm, e.arm.index());
        let other = cfg.actual[e.arm.other().index()];
        let cond = conditional(&model, a, other)?;
        if cond[cfg.actual[ai]].is_negligible() {
            return Err(CircuitError::Inconsistent(format!(
                "{a:?} label {} has zero conditional probability before layer {}",
                cfg.actual[ai], e.layer
            )));
        }
        match &e.kind {
            ElementKind::BeamSplitter(bs) => {
                let c = global_coordinate(
                    &f64_pair(&cond),
                    order_of(circuit, a, cfg.ported[ai]),
                    cfg.actual[ai],
                    cfg.coords[ai],
                );
                model.apply(a, bs)?;
                let after = conditional(&model, a, other)?;
                let masked = [0, 1].map(|k| if after[k].is_negligible() { 0.0 } else { after[k].to_f64() });
                let (k, x) = locate(&masked, order_of(circuit, a, true), c)?;
                cfg.actual[ai] = k;
                cfg.coords[ai] = below_one(x);
                cfg.ported[ai] = true;
                cfg.records[ai].push((e.layer, port_label(k)));
            }
            _ => {
                let name = circuit.outcome_names(a)[cfg.actual[ai]].clone();
                model.condition(a, cfg.actual[ai])?;
                cfg.records[ai].push((e.layer, name.clone()));
                seen[ai] = name;
            }
        }
        if model.weight_of(cfg.actual).is_negligible() {
            return Err(CircuitError::Inconsistent(format!(
                "actual configuration {:?} lost its weight at layer {}",
                cfg.actual, e.layer
            )));
        }
    }
    let [left, right] = seen;
    Ok(TransportResult {
        initial: *hidden,
        outcome: DetectorOutcome { left, right },
        config: cfg,
    })
}

/// Transport with exact weights when every splitter allows it, floats otherwise.
pub fn bohmian_transport(circuit: &OpticalCircuit, hidden: &Hidden) -> Result<TransportResult> {
    if circuit.is_exact() {
        bohmian_transport_with::<ExactModel>(circuit, hidden)
    } else {
        bohmian_transport_with::<FloatModel>(circuit, hidden)
    }
}

/// Everything the transport reads from the joint state at one element,
/// for one history of detected labels.
#[derive(Clone, Debug)]
struct PlanStep {
    /// Conditional label distribution of the acting arm before the element,
    /// by the other arm's label; `None` where it is undefined.
    before: [Option<[f64; 2]>; 2],
    /// Zero-probability flags of `before`, judged by the model.
    before_zero: [[bool; 2]; 2],
    /// Beam splitters only: the conditional after the element, zero entries
    /// masked.
    after: [Option<[f64; 2]>; 2],
    /// Joint labels without weight after the element; for a detector, by
    /// detected label.
    dead: [[bool; 4]; 2],
    /// Detectors only: whether conditioning on each label is possible.
    detectable: [bool; 2],
}

/// The transport of one circuit with every state-dependent quantity
/// precomputed. The joint state only changes through beam splitters and
/// detections, so it is fixed by the element index and the detected labels
/// so far.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    circuit: OpticalCircuit,
    initial_dead: [bool; 4],
    steps: std::collections::HashMap<(usize, Vec<usize>), PlanStep>,
}

fn dead_of<M: JointModel>(m: &M) -> [bool; 4] {
    [0, 1, 2, 3].map(|i| m.weight(i / 2, i % 2).is_negligible())
}

fn flags<S: Scalar>(c: &Result<[S; 2]>) -> (Option<[f64; 2]>, [bool; 2]) {
    match c {
        Ok(c) => (Some(f64_pair(c)), [c[0].is_negligible(), c[1].is_negligible()]),
        Err(_) => (None, [true, true]),
    }
}

impl TransportPlan {
    /// Builds the plan with exact weights when every splitter allows it.
    pub fn new(circuit: &OpticalCircuit) -> Result<Self> {
        if circuit.is_exact() {
            Self::with_model::<ExactModel>(circuit)
        } else {
            Self::with_model::<FloatModel>(circuit)
        }
    }

    pub fn with_model<M: JointModel>(circuit: &OpticalCircuit) -> Result<Self> {
        let start = M::initial();
        let mut plan = TransportPlan {
            circuit: circuit.clone(),
            initial_dead: dead_of(&start),
            steps: std::collections::HashMap::new(),
        };
        let mut frontier = vec![(Vec::new(), start)];
        for (i, e) in circuit.elements().iter().enumerate() {
            let mut next = Vec::new();
            for (history, model) in frontier {
                let a = e.arm;
                let conds = [0, 1].map(|o| conditional(&model, a, o));
                let (b0, z0) = flags(&conds[0]);
                let (b1, z1) = flags(&conds[1]);
                let mut step = PlanStep {
                    before: [b0, b1],
                    before_zero: [z0, z1],
                    after: [None, None],
                    dead: [[true; 4]; 2],
                    detectable: [false; 2],
                };
                match &e.kind {
                    ElementKind::BeamSplitter(bs) => {
                        let mut m = model.clone();
                        m.apply(a, bs)?;
                        step.after = [0, 1].map(|o| {
                            conditional(&m, a, o)
                                .ok()
                                .map(|c| [0, 1].map(|k| if c[k].is_negligible() { 0.0 } else { c[k].to_f64() }))
                        });
                        step.dead = [dead_of(&m); 2];
                        next.push((history.clone(), m));
                    }
                    _ => {
                        for label in 0..2 {
                            let mut m = model.clone();
                            if m.condition(a, label).is_ok() {
                                step.detectable[label] = true;
                                step.dead[label] = dead_of(&m);
                                let mut h = history.clone();
                                h.push(label);
                                next.push((h, m));
                            }
                        }
                    }
                }
                plan.steps.insert((i, history), step);
            }
            frontier = next;
        }
        Ok(plan)
    }

    /// Same result as [`bohmian_transport`], without touching the joint
    /// state.
    pub fn transport(&self, hidden: &Hidden) -> Result<TransportResult> {
        check_hidden(hidden)?;
        let joint = |l: [usize; 2]| l[0] * 2 + l[1];
        if self.initial_dead[joint(hidden.labels)] {
            return Err(CircuitError::ImpossibleConfiguration { labels: hidden.labels });
        }
        let circuit = &self.circuit;
        let mut cfg = PathConfiguration::start(hidden);
        let mut seen = [String::new(), String::new()];
        let mut history = Vec::new();
        for (i, e) in circuit.elements().iter().enumerate() {
            let (a, ai) = (e.arm, e.arm.index());
            let other = cfg.actual[e.arm.other().index()];
            let step = self
                .steps
                .get(&(i, history.clone()))
                .ok_or_else(|| CircuitError::Inconsistent(format!("no joint state for detections {history:?}")))?;
            let undefined = || CircuitError::Inconsistent(format!("{a:?} conditional given other label {other} is undefined"));
            let cond = step.before[other].ok_or_else(undefined)?;
            if step.before_zero[other][cfg.actual[ai]] {
                return Err(CircuitError::Inconsistent(format!(
                    "{a:?} label {} has zero conditional probability before layer {}",
                    cfg.actual[ai], e.layer
                )));
            }
            let dead = match &e.kind {
                ElementKind::BeamSplitter(_) => {
                    let c = global_coordinate(&cond, order_of(circuit, a, cfg.ported[ai]), cfg.actual[ai], cfg.coords[ai]);
                    let after = step.after[other].ok_or_else(undefined)?;
                    let (k, x) = locate(&after, order_of(circuit, a, true), c)?;
                    cfg.actual[ai] = k;
                    cfg.coords[ai] = below_one(x);
                    cfg.ported[ai] = true;
                    cfg.records[ai].push((e.layer, port_label(k)));
                    step.dead[0]
                }
                _ => {
                    let label = cfg.actual[ai];
                    if !step.detectable[label] {
                        return Err(CircuitError::Inconsistent(format!("cannot detect {a:?} label {label}")));
                    }
                    let name = circuit.outcome_names(a)[label].clone();
                    cfg.records[ai].push((e.layer, name.clone()));
                    seen[ai] = name;
                    history.push(label);
                    step.dead[label]
                }
            };
            if dead[joint(cfg.actual)] {
                return Err(CircuitError::Inconsistent(format!(
                    "actual configuration {:?} lost its weight at layer {}",
                    cfg.actual, e.layer
                )));
            }
        }
        let [left, right] = seen;
        Ok(TransportResult {
            initial: *hidden,
            outcome: DetectorOutcome { left, right },
            config: cfg,
        })
    }
}

/// `n` equilibrium draws: the joint label from the pair state's Born
/// weights, coordinates uniform. Draw `i` uses stream `(seed, i)`.
pub fn sample_hidden(n: usize, seed: u64) -> Vec<Hidden> {
    let model = FloatModel::initial();
    let weights: Vec<([usize; 2], f64)> = (0..4).map(|i| ([i / 2, i % 2], model.weight(i / 2, i % 2))).collect();
    (0..n)
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let u: f64 = r.gen();
            let mut acc = 0.0;
            let mut labels = weights.iter().rev().find(|(_, w)| *w > 0.0).unwrap().0;
            for (l, w) in &weights {
                acc += w;
                if *w > 0.0 && u < acc {
                    labels = *l;
                    break;
                }
            }
            Hidden {
                labels,
                coords: [r.gen(), r.gen()],
            }
        })
        .collect()
}

pub fn sample_transport(circuit: &OpticalCircuit, hidden: &[Hidden]) -> Result<Vec<TransportResult>> {
    let plan = TransportPlan::new(circuit)?;
    hidden.par_iter().map(|h| plan.transport(h)).collect()
}

/// A rectangle of initial coordinates for one initial joint label, on which
/// the transport acts identically. Current coordinates are affine in the
/// initial ones: `x = α·x0 + β` per arm.
#[derive(Clone, Debug)]
pub struct Cell<M: JointModel> {
    pub initial: [usize; 2],
    /// Born weight of the initial joint label.
    pub weight: M::S,
    /// `[lo, hi)` of the initial coordinate, per arm.
    pub x0: [[M::S; 2]; 2],
    /// `[α, β]` per arm.
    pub map: [[M::S; 2]; 2],
    pub labels: [usize; 2],
    pub ported: [bool; 2],
    pub records: [Vec<RecordEntry>; 2],
    pub outcome: [Option<String>; 2],
    model: M,
}

impl<M: JointModel> Cell<M> {
    /// Probability of the cell: label weight times the rectangle's area.
    pub fn measure(&self) -> M::S {
        let len = |a: usize| self.x0[a][1].clone() - self.x0[a][0].clone();
        self.weight.clone() * len(0) * len(1)
    }

    pub fn contains(&self, h: &Hidden) -> bool {
        h.labels == self.initial
            && (0..2).all(|a| self.x0[a][0].to_f64() <= h.coords[a] && h.coords[a] < self.x0[a][1].to_f64())
    }

    pub fn detector_outcome(&self) -> Option<DetectorOutcome> {
        match &self.outcome {
            [Some(l), Some(r)] => Some(DetectorOutcome::new(l, r)),
            _ => None,
        }
    }
}

/// Transported versus Born joint-label weights after one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerCheck<S> {
    pub layer: u32,
    pub transported: [[S; 2]; 2],
    pub born: [[S; 2]; 2],
}

impl<S: Scalar> LayerCheck<S> {
    pub fn agrees(&self) -> bool {
        (0..2).all(|l| (0..2).all(|r| (self.transported[l][r].clone() - self.born[l][r].clone()).is_negligible()))
    }
}

#[derive(Clone, Debug)]
pub struct EnumerationReport<M: JointModel> {
    pub layers: Vec<LayerCheck<M::S>>,
    pub outcomes: OutcomeTable<M::S>,
    pub copenhagen: OutcomeTable<M::S>,
    pub cells: Vec<Cell<M>>,
}

impl<M: JointModel> EnumerationReport<M> {
    pub fn layers_agree(&self) -> bool {
        self.layers.iter().all(LayerCheck::agrees)
    }

    pub fn outcomes_agree(&self) -> bool {
        self.outcomes.entries.len() == self.copenhagen.entries.len()
            && self
                .outcomes
                .entries
                .iter()
                .zip(&self.copenhagen.entries)
                .all(|((o1, p), (o2, q))| o1 == o2 && (p.clone() - q.clone()).is_negligible())
    }
}

fn label_weights<M: JointModel>(cells: &[Cell<M>]) -> [[M::S; 2]; 2] {
    let mut w = [[M::S::zero(), M::S::zero()], [M::S::zero(), M::S::zero()]];
    for c in cells {
        let [l, r] = c.labels;
        w[l][r] = w[l][r].clone() + c.measure();
    }
    w
}

fn born_weights<M: JointModel>(m: &M) -> [[M::S; 2]; 2] {
    [[m.weight(0, 0), m.weight(0, 1)], [m.weight(1, 0), m.weight(1, 1)]]
}

/// Pushes the whole equilibrium ensemble through the circuit at once. The
/// ensemble is a finite set of cells, split wherever a beam splitter sends
/// part of a cell to a different output; after every layer the transported
/// label weights are compared with the Born weights of the evolved
/// (unmeasured) pair state, and the final outcome weights with the
/// statevector prediction.
pub fn enumerate_transport<M: JointModel>(circuit: &OpticalCircuit) -> Result<EnumerationReport<M>> {
    let zero = M::S::zero;
    let one = M::S::one;
    let start = M::initial();
    let mut cells: Vec<Cell<M>> = Vec::new();
    for l in 0..2 {
        for r in 0..2 {
            let w = start.weight(l, r);
            if w.is_negligible() {
                continue;
            }
            cells.push(Cell {
                initial: [l, r],
                weight: w,
                x0: [[zero(), one()], [zero(), one()]],
                map: [[one(), zero()], [one(), zero()]],
                labels: [l, r],
                ported: [false; 2],
                records: [vec![(0, path_label(l))], vec![(0, path_label(r))]],
                outcome: [None, None],
                model: start.clone(),
            });
        }
    }
    let mut reference = start.clone();
    let mut layers = vec![LayerCheck {
        layer: 0,
        transported: label_weights(&cells),
        born: born_weights(&reference),
    }];

    for e in circuit.elements() {
        let (a, ai) = (e.arm, e.arm.index());
        let mut next = Vec::with_capacity(cells.len() * 2);
        for cell in cells {
            let other = cell.labels[e.arm.other().index()];
            let cond = conditional(&cell.model, a, other)?;
            let p = cond[cell.labels[ai]].clone();
            if p.is_negligible() {
                return Err(CircuitError::Inconsistent(format!(
                    "cell {:?} has zero conditional weight at layer {}",
                    cell.labels, e.layer
                )));
            }
            match &e.kind {
                ElementKind::BeamSplitter(bs) => {
                    let order = order_of(circuit, a, cell.ported[ai]);
                    let base = global_coordinate(&cond, order, cell.labels[ai], M::S::zero());
                    let [alpha, beta] = cell.map[ai].clone();
                    // c(x0) = base + p·(α·x0 + β) = slope·x0 + offset
                    let slope = p.clone() * alpha;
                    let offset = base + p * beta;
                    let mut model = cell.model.clone();
                    model.apply(a, bs)?;
                    let after = conditional(&model, a, other)?;
                    let mut acc = M::S::zero();
                    for k in order_of(circuit, a, true) {
                        let q = after[k].clone();
                        if q.is_negligible() {
                            continue;
                        }
                        let (c_lo, c_hi) = (acc.clone(), acc.clone() + q.clone());
                        acc = c_hi.clone();
                        let x_of = |c: M::S| (c - offset.clone()) / slope.clone();
                        let lo = max_s(cell.x0[ai][0].clone(), x_of(c_lo.clone()));
                        let hi = min_s(cell.x0[ai][1].clone(), x_of(c_hi));
                        if !(lo < hi) {
                            continue;
                        }
                        let mut piece = cell.clone();
                        piece.x0[ai] = [lo, hi];
                        piece.map[ai] = [slope.clone() / q.clone(), (offset.clone() - c_lo) / q];
                        piece.labels[ai] = k;
                        piece.ported[ai] = true;
                        piece.records[ai].push((e.layer, port_label(k)));
                        piece.model = model.clone();
                        next.push(piece);
                    }
                }
                _ => {
                    let mut cell = cell;
                    let name = circuit.outcome_names(a)[cell.labels[ai]].clone();
                    cell.model.condition(a, cell.labels[ai])?;
                    cell.records[ai].push((e.layer, name.clone()));
                    cell.outcome[ai] = Some(name);
                    next.push(cell);
                }
            }
        }
        cells = next;
        if let ElementKind::BeamSplitter(bs) = &e.kind {
            reference.apply(a, bs)?;
        }
        layers.push(LayerCheck {
            layer: e.layer,
            transported: label_weights(&cells),
            born: born_weights(&reference),
        });
    }

    let copenhagen = joint_distribution_with::<M>(circuit)?;
    let mut entries: Vec<(DetectorOutcome, M::S)> =
        copenhagen.entries.iter().map(|(o, _)| (o.clone(), M::S::zero())).collect();
    for c in &cells {
        let o = c
            .detector_outcome()
            .ok_or_else(|| CircuitError::Inconsistent("cell left the circuit undetected".into()))?;
        let slot = entries
            .iter_mut()
            .find(|(k, _)| *k == o)
            .ok_or_else(|| CircuitError::Inconsistent(format!("unexpected outcome {o}")))?;
        slot.1 = slot.1.clone() + c.measure();
    }
    Ok(EnumerationReport {
        layers,
        outcomes: OutcomeTable { entries },
        copenhagen,
        cells,
    })
}

fn max_s<S: Scalar>(a: S, b: S) -> S {
    if a < b {
        b
    } else {
        a
    }
}

fn min_s<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}
