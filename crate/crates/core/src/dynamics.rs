//! The two scanning constructions: deterministic replays of a lazily
//! generated point configuration, with adaptive spatial windows, stopping
//! rules, coupled runs on shared configurations, and an independent replay
//! checker.
//!
//! "Scan from infection": a point `(x, s, r, w)` fires at its own time `s`
//! iff `x` is infected with some type `i` by time `s` and `w <= beta_i`.
//!
//! "Scan from zero": a point located where the first infection arrives at
//! time `t` with type `i` fires at `t + s` iff `w <= beta_i`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::coverage::{EventLog, GeneralizedInitialConfig, InfectionStatus};
use crate::error::{Error, Result};
use crate::geom::{Ball, Point};
use crate::pointproc::{window_stream, PointStore, PoissonPoint, WindowPolicy};
use crate::rho::RadiusDistribution;
use crate::scalar::{FiniteOrd, Scalar};

/// Which of the two couplable constructions to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Construction {
    FromInfection,
    FromZero,
}

/// Monotone map applied to every sampled radius at firing time, so coupled
/// runs share the raw radius marks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusTransform<S: Scalar> {
    /// `r -> r / (1 + r)`: strictly increasing onto (0, 1).
    Ratio,
    /// `r -> factor * r` with `factor > 0`.
    Scale { factor: S },
    /// `r -> min(r, max)` with `max > 0`.
    Cap { max: S },
}

impl<S: Scalar> RadiusTransform<S> {
    pub fn apply(&self, r: S) -> S {
        match self {
            RadiusTransform::Ratio => r / (S::one() + r),
            RadiusTransform::Scale { factor } => *factor * r,
            RadiusTransform::Cap { max } => r.min(*max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            RadiusTransform::Ratio => true,
            RadiusTransform::Scale { factor } => *factor > S::zero(),
            RadiusTransform::Cap { max } => *max > S::zero(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec("radius transform parameter must be > 0".into()))
        }
    }
}

pub const DEFAULT_RADIUS_CAP: f64 = 1e4;

/// When to stop a run: always at `t_max`; optionally once the infected
/// extent exceeds `r_stop`. `r_cap` is the hard window-generation guard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StopRule<S: Scalar> {
    pub t_max: S,
    pub r_stop: Option<S>,
    pub r_cap: S,
    /// Reference radius for the per-type reach checkpoints `k * R / 10`;
    /// defaults to `r_stop`.
    pub reach_ref: Option<S>,
}

impl<S: Scalar> StopRule<S> {
    pub fn until(t_max: S) -> Self {
        StopRule {
            t_max,
            r_stop: None,
            r_cap: S::from_f64(DEFAULT_RADIUS_CAP),
            reach_ref: None,
        }
    }

    pub fn with_r_stop(t_max: S, r_stop: S) -> Self {
        StopRule {
            t_max,
            r_stop: Some(r_stop),
            r_cap: S::from_f64(DEFAULT_RADIUS_CAP),
            reach_ref: None,
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunSpec<S: Scalar> {
    pub config: GeneralizedInitialConfig<S>,
    pub rho: RadiusDistribution<S>,
    /// Growth rate per type, index 0 is type 1.
    pub betas: Vec<S>,
    pub master_seed: u64,
    pub stop: StopRule<S>,
    pub construction: Construction,
    pub transform: Option<RadiusTransform<S>>,
    /// Strength truncation of the sampled windows; defaults to `max(betas)`,
    /// which is exact. Raising it must not change any result.
    pub strength_cap: Option<S>,
    /// Samples per outburst for the effectiveness diagnostic; 0 disables it.
    pub effectiveness_samples: usize,
}

impl<S: Scalar> RunSpec<S> {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.rho.validate()?;
        if self.betas.len() != self.config.types as usize {
            return Err(Error::InvalidSpec(format!(
                "{} betas for {} types",
                self.betas.len(),
                self.config.types
            )));
        }
        if self.betas.iter().any(|b| !(*b > S::zero()) || !b.is_finite()) {
            return Err(Error::InvalidSpec("betas must be positive and finite".into()));
        }
        if !(self.stop.t_max > S::zero()) {
            return Err(Error::InvalidSpec("t_max must be > 0".into()));
        }
        if let Some(r) = self.stop.r_stop {
            if !(r > S::zero()) {
                return Err(Error::InvalidSpec("r_stop must be > 0".into()));
            }
        }
        if !(self.stop.r_cap > S::zero()) {
            return Err(Error::InvalidSpec("r_cap must be > 0".into()));
        }
        if let Some(t) = &self.transform {
            t.validate()?;
        }
        if let Some(cap) = self.strength_cap {
            if cap < self.max_beta() {
                return Err(Error::InvalidSpec(
                    "strength_cap below max beta would drop firing points".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn max_beta(&self) -> S {
        self.betas.iter().fold(S::zero(), |a, &b| a.max(b))
    }

    pub fn min_beta(&self) -> S {
        self.betas.iter().fold(S::infinity(), |a, &b| a.min(b))
    }

    pub fn effective_strength_cap(&self) -> S {
        self.strength_cap.unwrap_or_else(|| self.max_beta())
    }

    fn apply_transform(&self, r: S) -> S {
        match &self.transform {
            Some(t) => t.apply(r),
            None => r,
        }
    }

    /// Grid cell size for this run's coverage index: the median effective
    /// outburst radius.
    fn cell_size(&self) -> S {
        self.apply_transform(self.rho.quantile(S::from_f64(0.5)))
            .max(S::from_f64(1e-9))
    }

    pub fn window_policy(&self) -> WindowPolicy<S> {
        WindowPolicy::for_run(
            self.config.dimension,
            &self.rho,
            self.stop.t_max,
            self.effective_strength_cap(),
            self.stop.r_cap,
            self.master_seed,
        )
    }
}

/// A point together with the time it fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FiredPoint<S: Scalar> {
    pub point: PoissonPoint<S>,
    pub firing_time: S,
}

/// Per-run summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunStats<S: Scalar> {
    /// `reach_times[type-1][k-1]`: first time the type's own events touch
    /// the sphere of radius `k * reach_ref / 10`.
    pub reach_times: Vec<Vec<Option<S>>>,
    pub reach_ref: Option<S>,
    /// Per-type count of sampled-effective outbursts, when the diagnostic
    /// is enabled.
    pub effective_count: Option<Vec<u64>>,
    pub final_extent: S,
    pub horizon: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<S: Scalar> {
    pub log: EventLog<S>,
    pub fired: Vec<FiredPoint<S>>,
    pub stats: RunStats<S>,
}

impl<S: Scalar> PartialEq for EventLog<S> {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.horizon == other.horizon
            && self.events() == other.events()
    }
}

// ---------------------------------------------------------------------------
// Point sources

/// What the engines consume: batches of time-sorted points, optionally
/// extensible outward when the infected extent grows.
pub trait PointSource<S: Scalar> {
    fn batch_count(&self) -> usize;
    fn batch_len(&self, b: usize) -> usize;
    fn time(&self, b: usize, i: usize) -> S;
    fn strength(&self, b: usize, i: usize) -> S;
    fn radius(&self, b: usize, i: usize) -> S;
    fn id(&self, b: usize, i: usize) -> u64;
    fn position(&self, b: usize, i: usize) -> Point<S>;
    fn point(&self, b: usize, i: usize) -> PoissonPoint<S> {
        PoissonPoint {
            id: self.id(b, i),
            position: self.position(b, i),
            time: self.time(b, i),
            radius: self.radius(b, i),
            strength: self.strength(b, i),
        }
    }
    /// Extend coverage to `radius`; returns indices of new batches.
    fn ensure_radius(&mut self, radius: S) -> Result<std::ops::Range<usize>>;
}

struct StoreSource<'a, S: Scalar>(&'a mut PointStore<S>);

impl<'a, S: Scalar> PointSource<S> for StoreSource<'a, S> {
    fn batch_count(&self) -> usize {
        self.0.batches().len()
    }
    fn batch_len(&self, b: usize) -> usize {
        self.0.batches()[b].len()
    }
    fn time(&self, b: usize, i: usize) -> S {
        self.0.batches()[b].times[i]
    }
    fn strength(&self, b: usize, i: usize) -> S {
        self.0.batches()[b].strengths[i]
    }
    fn radius(&self, b: usize, i: usize) -> S {
        self.0.batches()[b].radii[i]
    }
    fn id(&self, b: usize, i: usize) -> u64 {
        self.0.batches()[b].id(i)
    }
    fn position(&self, b: usize, i: usize) -> Point<S> {
        self.0.batches()[b].position(i)
    }
    fn ensure_radius(&mut self, radius: S) -> Result<std::ops::Range<usize>> {
        self.0.ensure_radius(radius)
    }
}

/// An explicitly injected configuration (hand-built tests, constructive
/// replays). One batch, sorted by time, never extended.
pub struct ExplicitSource<S: Scalar> {
    points: Vec<PoissonPoint<S>>,
}

impl<S: Scalar> ExplicitSource<S> {
    pub fn new(mut points: Vec<PoissonPoint<S>>) -> Result<Self> {
        let mut ids: Vec<u64> = points.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != points.len() {
            return Err(Error::InvalidSpec("explicit points must have unique ids".into()));
        }
        for p in &points {
            if !(p.radius > S::zero()) || !(p.strength >= S::zero()) || !(p.time >= S::zero()) {
                return Err(Error::InvalidSpec(format!("invalid marks on point {}", p.id)));
            }
        }
        points.sort_by(|a, b| {
            a.time
                .partial_cmp(&b.time)
                .expect("finite times")
                .then(a.id.cmp(&b.id))
        });
        Ok(ExplicitSource { points })
    }
}

impl<S: Scalar> PointSource<S> for ExplicitSource<S> {
    fn batch_count(&self) -> usize {
        1
    }
    fn batch_len(&self, _b: usize) -> usize {
        self.points.len()
    }
    fn time(&self, _b: usize, i: usize) -> S {
        self.points[i].time
    }
    fn strength(&self, _b: usize, i: usize) -> S {
        self.points[i].strength
    }
    fn radius(&self, _b: usize, i: usize) -> S {
        self.points[i].radius
    }
    fn id(&self, _b: usize, i: usize) -> u64 {
        self.points[i].id
    }
    fn position(&self, _b: usize, i: usize) -> Point<S> {
        self.points[i].position.clone()
    }
    fn ensure_radius(&mut self, _radius: S) -> Result<std::ops::Range<usize>> {
        Ok(0..0)
    }
}

// ---------------------------------------------------------------------------
// The engines

#[derive(Debug, Clone, Copy, PartialEq)]
struct TaskKey<S: Scalar> {
    time: FiniteOrd<S>,
    rank: u8,
    id: u64,
}

impl<S: Scalar> Eq for TaskKey<S> {}
impl<S: Scalar> PartialOrd for TaskKey<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for TaskKey<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want the earliest task
        (other.time, other.rank, other.id).cmp(&(self.time, self.rank, self.id))
    }
}

#[derive(Debug, Clone, Copy)]
enum Task {
    Activate { piece: usize },
    /// fromInfection: scan the point at its own time mark.
    Scan { batch: u32, idx: u32 },
    /// fromZero: a scheduled firing with the type fixed at first infection.
    Fire { batch: u32, idx: u32, kind: u8 },
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry<S: Scalar> {
    key: TaskKey<S>,
    task: Task,
}

impl<S: Scalar> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<S: Scalar> Eq for HeapEntry<S> {}
impl<S: Scalar> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for HeapEntry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

struct ReachTracker<S: Scalar> {
    reference: Option<S>,
    extent: Vec<S>,
    times: Vec<Vec<Option<S>>>,
}

impl<S: Scalar> ReachTracker<S> {
    fn new(types: u8, reference: Option<S>) -> Self {
        ReachTracker {
            reference,
            extent: vec![S::zero(); types as usize],
            times: vec![vec![None; 10]; types as usize],
        }
    }

    fn update(&mut self, kind: u8, bound: S, t: S) {
        let k = (kind - 1) as usize;
        if bound <= self.extent[k] {
            return;
        }
        self.extent[k] = bound;
        if let Some(reference) = self.reference {
            for step in 1..=10usize {
                let threshold = reference * S::from_f64(step as f64) / S::from_f64(10.0);
                if self.times[k][step - 1].is_none() && bound >= threshold {
                    self.times[k][step - 1] = Some(t);
                }
            }
        }
    }
}

struct Params<'a, S: Scalar> {
    betas: &'a [S],
    transform: Option<&'a RadiusTransform<S>>,
    t_max: S,
    r_stop: Option<S>,
    reach_ref: Option<S>,
    eff_samples: usize,
    master_seed: u64,
    margin: S,
}

impl<'a, S: Scalar> Params<'a, S> {
    fn from_spec(spec: &'a RunSpec<S>, margin: S) -> Self {
        Params {
            betas: &spec.betas,
            transform: spec.transform.as_ref(),
            t_max: spec.stop.t_max,
            r_stop: spec.stop.r_stop,
            reach_ref: spec.stop.reach_ref.or(spec.stop.r_stop),
            eff_samples: spec.effectiveness_samples,
            master_seed: spec.master_seed,
            margin,
        }
    }

    fn max_beta(&self) -> S {
        self.betas.iter().fold(S::zero(), |a, &b| a.max(b))
    }

    fn apply_transform(&self, r: S) -> S {
        match self.transform {
            Some(t) => t.apply(r),
            None => r,
        }
    }
}

/// Tag mixed into the master seed to derive diagnostic streams that cannot
/// collide with window streams.
const EFFECTIVENESS_SEED_TAG: u64 = 0x1b9f_52d1_77ce_4aa1;

struct Engine<'a, S: Scalar, P: PointSource<S>> {
    params: Params<'a, S>,
    source: P,
    log: EventLog<S>,
    fired: Vec<FiredPoint<S>>,
    reach: ReachTracker<S>,
    eff_count: Option<Vec<u64>>,
    heap: BinaryHeap<HeapEntry<S>>,
    stop_at: Option<S>,
}

impl<'a, S: Scalar, P: PointSource<S>> Engine<'a, S, P> {
    fn new(params: Params<'a, S>, log: EventLog<S>, source: P) -> Self {
        let types = log.config.types;
        let eff_count = (params.eff_samples > 0).then(|| vec![0u64; types as usize]);
        let reach = ReachTracker::new(types, params.reach_ref);
        Engine {
            params,
            source,
            log,
            fired: Vec::new(),
            reach,
            eff_count,
            heap: BinaryHeap::new(),
            stop_at: None,
        }
    }

    fn time_limit(&self) -> S {
        self.stop_at.unwrap_or(self.params.t_max)
    }

    fn schedule_activations(&mut self, t_from: S) -> Result<()> {
        let already: Vec<usize> = self
            .log
            .events()
            .iter()
            .filter_map(|e| match e.what {
                crate::coverage::EventKind::InitialRegion { piece } => Some(piece),
                _ => None,
            })
            .collect();
        for (j, piece) in self.log.config.pieces.iter().enumerate() {
            let Some(t) = piece.time.finite() else { continue };
            if already.contains(&j) {
                continue;
            }
            if t < t_from {
                return Err(Error::InvalidSpec(format!(
                    "piece {j} activates at {t}, before the resume time {t_from}, \
                     but the log has no activation event for it"
                )));
            }
            self.heap.push(HeapEntry {
                key: TaskKey { time: FiniteOrd(t), rank: 0, id: j as u64 },
                task: Task::Activate { piece: j },
            });
        }
        Ok(())
    }

    /// Reach bookkeeping, stop detection and window extension after the
    /// event at time `t` was inserted.
    fn after_event(&mut self, kind: u8, bound: S, t: S) -> Result<std::ops::Range<usize>> {
        self.reach.update(kind, bound, t);
        if self.stop_at.is_none() {
            if let Some(r_stop) = self.params.r_stop {
                if self.log.extent_radius_at(t) > r_stop {
                    self.stop_at = Some(t);
                }
            }
        }
        if self.stop_at.is_some() {
            return Ok(0..0);
        }
        let needed = self.log.extent_radius_at(t) + self.params.margin;
        self.source.ensure_radius(needed)
    }

    fn fire(&mut self, batch: u32, idx: u32, kind: u8, t: S) -> Result<std::ops::Range<usize>> {
        let (b, i) = (batch as usize, idx as usize);
        let position = self.source.position(b, i);
        let radius = self.params.apply_transform(self.source.radius(b, i));
        let ball = Ball::new(position, radius);
        let bound = ball.bounding_radius();
        let event_id =
            self.log
                .insert_outburst(ball.clone(), t, kind, Some(self.source.id(b, i)))?;
        if let Some(counts) = self.eff_count.as_mut() {
            let mut rng = window_stream(self.params.master_seed ^ EFFECTIVENESS_SEED_TAG, event_id);
            let eff = self.log.effectiveness(&ball, t, self.params.eff_samples, &mut rng)?;
            if eff.effective {
                counts[(kind - 1) as usize] += 1;
            }
        }
        self.fired.push(FiredPoint {
            point: self.source.point(b, i),
            firing_time: t,
        });
        self.after_event(kind, bound, t)
    }

    fn activate(&mut self, piece: usize, t: S) -> Result<std::ops::Range<usize>> {
        self.log.insert_activation(piece, t)?;
        let p = &self.log.config.pieces[piece];
        let bound = p.region.bounding_radius();
        self.after_event(p.kind, bound, t)
    }

    fn finish(mut self) -> RunResult<S> {
        let horizon = self.time_limit();
        self.log.set_horizon(horizon);
        let final_extent = self.log.extent_radius_at(horizon);
        RunResult {
            log: self.log,
            fired: self.fired,
            stats: RunStats {
                reach_times: self.reach.times,
                reach_ref: self.reach.reference,
                effective_count: self.eff_count,
                final_extent,
                horizon,
            },
        }
    }
}

/// First index of the batch with time >= `t`.
fn lower_bound_time<S: Scalar, P: PointSource<S>>(src: &P, b: usize, t: S) -> usize {
    let mut lo = 0usize;
    let mut hi = src.batch_len(b);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if src.time(b, mid) < t {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

// --- scan from time of infection -------------------------------------------

fn engine_from_infection<S: Scalar, P: PointSource<S>>(
    params: Params<'_, S>,
    log: EventLog<S>,
    mut source: P,
    t_from: S,
) -> Result<RunResult<S>> {
    let margin = params.margin;
    source.ensure_radius(log.extent_radius_at(t_from) + margin)?;
    let max_beta = params.max_beta();
    let mut eng = Engine::new(params, log, source);
    eng.schedule_activations(t_from)?;
    for b in 0..eng.source.batch_count() {
        let start = lower_bound_time(&eng.source, b, t_from);
        push_next_scan(&mut eng, b, start, max_beta);
    }
    while let Some(HeapEntry { key, task }) = eng.heap.pop() {
        let t = key.time.0;
        if t > eng.time_limit() {
            break;
        }
        match task {
            Task::Activate { piece } => {
                let added = eng.activate(piece, t)?;
                enqueue_new_batches_scan(&mut eng, added, t, max_beta);
            }
            Task::Scan { batch, idx } => {
                let (b, i) = (batch as usize, idx as usize);
                let fired = if eng.source.strength(b, i) <= max_beta {
                    let x = eng.source.position(b, i);
                    match eng.log.status_unchecked(&x, t, false, None) {
                        InfectionStatus::Infected { kind, .. }
                            if eng.source.strength(b, i) <= eng.params.betas[(kind - 1) as usize] =>
                        {
                            Some(kind)
                        }
                        _ => None,
                    }
                } else {
                    None
                };
                if let Some(kind) = fired {
                    let added = eng.fire(batch, idx, kind, t)?;
                    enqueue_new_batches_scan(&mut eng, added, t, max_beta);
                }
                push_next_scan(&mut eng, b, i + 1, max_beta);
            }
            Task::Fire { .. } => unreachable!("fromInfection schedules no Fire tasks"),
        }
    }
    Ok(eng.finish())
}

fn push_next_scan<S: Scalar, P: PointSource<S>>(
    eng: &mut Engine<'_, S, P>,
    b: usize,
    mut i: usize,
    max_beta: S,
) {
    // skip points that can never fire: strength above every rate
    while i < eng.source.batch_len(b) && eng.source.strength(b, i) > max_beta {
        i += 1;
    }
    if i < eng.source.batch_len(b) {
        eng.heap.push(HeapEntry {
            key: TaskKey {
                time: FiniteOrd(eng.source.time(b, i)),
                rank: 1,
                id: eng.source.id(b, i),
            },
            task: Task::Scan { batch: b as u32, idx: i as u32 },
        });
    }
}

fn enqueue_new_batches_scan<S: Scalar, P: PointSource<S>>(
    eng: &mut Engine<'_, S, P>,
    added: std::ops::Range<usize>,
    t_now: S,
    max_beta: S,
) {
    for b in added {
        // points of a fresh shell dated before now cannot have fired: their
        // position was outside every earlier window, hence uninfected
        let start = lower_bound_time(&eng.source, b, t_now);
        push_next_scan(eng, b, start, max_beta);
    }
}

// --- scan from time zero ----------------------------------------------------

const GRID_DIM: usize = 4;

struct PointGrid<S: Scalar> {
    cell: S,
    bucketed: bool,
    buckets: HashMap<[i64; GRID_DIM], Vec<(u32, u32)>>,
}

impl<S: Scalar> PointGrid<S> {
    fn new(cell: S, dim: usize) -> Self {
        PointGrid {
            cell,
            bucketed: dim <= GRID_DIM && cell > S::zero(),
            buckets: HashMap::new(),
        }
    }

    fn key(&self, coords: &[S]) -> [i64; GRID_DIM] {
        let mut k = [0i64; GRID_DIM];
        if self.bucketed {
            for (i, &c) in coords.iter().enumerate().take(GRID_DIM) {
                k[i] = (c / self.cell).floor().to_f64() as i64;
            }
        }
        k
    }

    fn insert(&mut self, coords: &[S], handle: (u32, u32)) {
        let key = self.key(coords);
        self.buckets.entry(key).or_default().push(handle);
    }

    /// Visit and remove every stored handle whose cell intersects the ball's
    /// bounding box; `take` decides removal.
    fn drain_near<F: FnMut((u32, u32)) -> bool>(&mut self, ball: &Ball<S>, mut take: F) {
        if !self.bucketed {
            if let Some(v) = self.buckets.get_mut(&[0i64; GRID_DIM]) {
                v.retain(|&h| !take(h));
            }
            return;
        }
        let dim = ball.dim().min(GRID_DIM);
        let mut lo = [0i64; GRID_DIM];
        let mut hi = [0i64; GRID_DIM];
        for i in 0..dim {
            let c = ball.center.coords[i];
            lo[i] = ((c - ball.radius) / self.cell).floor().to_f64() as i64;
            hi[i] = ((c + ball.radius) / self.cell).floor().to_f64() as i64;
        }
        let mut key = lo;
        loop {
            if let Some(v) = self.buckets.get_mut(&key) {
                v.retain(|&h| !take(h));
            }
            let mut i = 0;
            loop {
                if i == dim {
                    return;
                }
                key[i] += 1;
                if key[i] <= hi[i] {
                    break;
                }
                key[i] = lo[i];
                i += 1;
            }
        }
    }
}

fn engine_from_zero<S: Scalar, P: PointSource<S>>(
    params: Params<'_, S>,
    log: EventLog<S>,
    mut source: P,
    cell: S,
) -> Result<RunResult<S>> {
    let margin = params.margin;
    source.ensure_radius(log.config.bounding_radius() + margin)?;
    let max_beta = params.max_beta();
    let dim = log.config.dimension;
    let mut eng = Engine::new(params, log, source);
    eng.schedule_activations(S::zero())?;
    let mut grid = PointGrid::new(cell, dim);
    let mut flipped: Vec<Vec<bool>> = Vec::new();
    let mut piece_members: Vec<Vec<(u32, u32)>> = vec![Vec::new(); eng.log.config.pieces.len()];
    let all = 0..eng.source.batch_count();
    ingest_batches_zero(&mut eng, all, S::zero(), max_beta, &mut grid, &mut flipped, &mut piece_members)?;
    while let Some(HeapEntry { key, task }) = eng.heap.pop() {
        let t = key.time.0;
        if t > eng.time_limit() {
            break;
        }
        match task {
            Task::Activate { piece } => {
                let added = eng.activate(piece, t)?;
                let members = std::mem::take(&mut piece_members[piece]);
                let kind = eng.log.config.pieces[piece].kind;
                for (b, i) in members {
                    flipped[b as usize][i as usize] = true;
                    schedule_fire(&mut eng, b, i, kind, t);
                }
                ingest_batches_zero(&mut eng, added, t, max_beta, &mut grid, &mut flipped, &mut piece_members)?;
            }
            Task::Fire { batch, idx, kind } => {
                let added = eng.fire(batch, idx, kind, t)?;
                let ball = eng
                    .log
                    .events()
                    .last()
                    .and_then(|e| e.outburst_ball())
                    .expect("just inserted an outburst")
                    .clone();
                let mut newly: Vec<(u32, u32)> = Vec::new();
                grid.drain_near(&ball, |(b, i)| {
                    let (bu, iu) = (b as usize, i as usize);
                    if flipped[bu][iu] {
                        return true; // stale entry, drop it
                    }
                    let pos = eng.source.position(bu, iu);
                    if ball.contains(&pos) {
                        flipped[bu][iu] = true;
                        newly.push((b, i));
                        true
                    } else {
                        false
                    }
                });
                for (b, i) in newly {
                    schedule_fire(&mut eng, b, i, kind, t);
                }
                ingest_batches_zero(&mut eng, added, t, max_beta, &mut grid, &mut flipped, &mut piece_members)?;
            }
            Task::Scan { .. } => unreachable!("fromZero schedules no Scan tasks"),
        }
    }
    Ok(eng.finish())
}

/// Schedule the firing of a point first infected at `since` with type
/// `kind`, if its strength allows and the firing lands within the horizon.
fn schedule_fire<S: Scalar, P: PointSource<S>>(
    eng: &mut Engine<'_, S, P>,
    b: u32,
    i: u32,
    kind: u8,
    since: S,
) {
    let (bu, iu) = (b as usize, i as usize);
    if eng.source.strength(bu, iu) > eng.params.betas[(kind - 1) as usize] {
        return;
    }
    let fire_at = since + eng.source.time(bu, iu);
    if fire_at > eng.params.t_max {
        return;
    }
    eng.heap.push(HeapEntry {
        key: TaskKey {
            time: FiniteOrd(fire_at),
            rank: 1,
            id: eng.source.id(bu, iu),
        },
        task: Task::Fire { batch: b, idx: i, kind },
    });
}

/// Classify the points of new batches: members of an initial piece wait for
/// its activation; points in already-infected space schedule immediately;
/// the rest go to the spatial grid to await coverage.
fn ingest_batches_zero<S: Scalar, P: PointSource<S>>(
    eng: &mut Engine<'_, S, P>,
    added: std::ops::Range<usize>,
    t_now: S,
    max_beta: S,
    grid: &mut PointGrid<S>,
    flipped: &mut Vec<Vec<bool>>,
    piece_members: &mut [Vec<(u32, u32)>],
) -> Result<()> {
    for b in added {
        debug_assert_eq!(flipped.len(), b);
        flipped.push(vec![false; eng.source.batch_len(b)]);
        for i in 0..eng.source.batch_len(b) {
            if eng.source.strength(b, i) > max_beta {
                flipped[b][i] = true; // can never fire
                continue;
            }
            let x = eng.source.position(b, i);
            if let Some(j) = eng.log.config.piece_containing(&x) {
                match eng.log.config.pieces[j].time {
                    crate::coverage::ActivationTime::Never => {
                        flipped[b][i] = true;
                    }
                    crate::coverage::ActivationTime::At(t0) => {
                        if t0 <= t_now && eng.log.events().iter().any(|e| {
                            matches!(e.what, crate::coverage::EventKind::InitialRegion { piece } if piece == j)
                        }) {
                            flipped[b][i] = true;
                            schedule_fire(eng, b as u32, i as u32, eng.log.config.pieces[j].kind, t0);
                        } else {
                            piece_members[j].push((b as u32, i as u32));
                        }
                    }
                }
            } else {
                match eng.log.status_unchecked(&x, t_now, false, None) {
                    InfectionStatus::Infected { kind, since } => {
                        debug_assert!(since + S::EPS_GEO >= t_now || t_now == S::zero());
                        flipped[b][i] = true;
                        schedule_fire(eng, b as u32, i as u32, kind, since);
                    }
                    _ => grid.insert(&x.coords, (b as u32, i as u32)),
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Public entry points

/// Run the spec against its own lazily sampled point process.
pub fn run<S: Scalar>(spec: &RunSpec<S>) -> Result<RunResult<S>> {
    spec.validate()?;
    let mut store = PointStore::new(spec.window_policy(), spec.rho.clone());
    run_with_store(spec, &mut store)
}

/// Run against a shared store (coupled replays). The store's policy must
/// dominate the spec: same seed, same law, caps at least as large.
pub fn run_with_store<S: Scalar>(
    spec: &RunSpec<S>,
    store: &mut PointStore<S>,
) -> Result<RunResult<S>> {
    spec.validate()?;
    let p = &store.policy;
    if p.dim != spec.config.dimension
        || p.master_seed != spec.master_seed
        || store.rho != spec.rho
        || p.time_cap < spec.stop.t_max
        || p.strength_cap < spec.effective_strength_cap()
    {
        return Err(Error::InvalidSpec(
            "point store policy does not cover this run".into(),
        ));
    }
    let margin = p.shell_width;
    let cell = spec.cell_size();
    let log = EventLog::new(spec.config.clone(), cell)?;
    let params = Params::from_spec(spec, margin);
    match spec.construction {
        Construction::FromInfection => {
            engine_from_infection(params, log, StoreSource(store), S::zero())
        }
        Construction::FromZero => engine_from_zero(params, log, StoreSource(store), cell),
    }
}

/// Run against an explicitly injected point configuration.
pub fn run_explicit<S: Scalar>(
    spec: &RunSpec<S>,
    points: Vec<PoissonPoint<S>>,
) -> Result<RunResult<S>> {
    spec.validate()?;
    let cell = spec.cell_size();
    let log = EventLog::new(spec.config.clone(), cell)?;
    let params = Params::from_spec(spec, S::zero());
    let source = ExplicitSource::new(points)?;
    match spec.construction {
        Construction::FromInfection => engine_from_infection(params, log, source, S::zero()),
        Construction::FromZero => engine_from_zero(params, log, source, cell),
    }
}

/// Continue an existing evolution from `t_from` to `t_to` with injected
/// points, scanning from time of infection. Used by the constructive
/// growth-along-a-set replays.
pub fn continue_from_infection<S: Scalar>(
    log: EventLog<S>,
    betas: &[S],
    t_from: S,
    t_to: S,
    points: Vec<PoissonPoint<S>>,
) -> Result<EventLog<S>> {
    if betas.len() != log.config.types as usize {
        return Err(Error::InvalidSpec("one beta per type".into()));
    }
    let params = Params {
        betas,
        transform: None,
        t_max: t_to,
        r_stop: None,
        reach_ref: None,
        eff_samples: 0,
        master_seed: 0,
        margin: S::zero(),
    };
    let source = ExplicitSource::new(points)?;
    let result = engine_from_infection(params, log, source, t_from)?;
    Ok(result.log)
}

/// Replay every firing decision of the log from the scanning rule alone,
/// using only status queries; any divergence is reported. An empty report is
/// the executable statement that the run followed the construction.
pub fn verify_log<S: Scalar>(
    log: &EventLog<S>,
    spec: &RunSpec<S>,
    points: &[PoissonPoint<S>],
) -> Vec<String> {
    let mut report = Vec::new();
    let events = log.events();
    for w in events.windows(2) {
        if (w[1].time, w[1].event_id) < (w[0].time, w[0].event_id) {
            report.push(format!(
                "event order violated between ids {} and {}",
                w[0].event_id, w[1].event_id
            ));
        }
    }
    for (i, e) in events.iter().enumerate() {
        if e.event_id != i as u64 {
            report.push(format!("event id {} at position {i}", e.event_id));
        }
        if e.time > log.horizon {
            report.push(format!("event {} after the horizon", e.event_id));
        }
    }
    // activations: exactly the finite-time pieces up to the horizon
    for (j, piece) in log.config.pieces.iter().enumerate() {
        let acts: Vec<&crate::coverage::CoverageEvent<S>> = events
            .iter()
            .filter(|e| {
                matches!(e.what, crate::coverage::EventKind::InitialRegion { piece: p } if p == j)
            })
            .collect();
        match piece.time.finite() {
            Some(t) if t <= log.horizon => {
                if acts.len() != 1 {
                    report.push(format!("piece {j}: {} activation events", acts.len()));
                } else if acts[0].time != t || acts[0].kind != piece.kind {
                    report.push(format!("piece {j}: activation event mismatch"));
                }
            }
            _ => {
                if !acts.is_empty() {
                    report.push(format!("piece {j}: unexpected activation"));
                }
            }
        }
    }
    // outburst events must be caused by known points, one event per point
    let mut by_cause: HashMap<u64, &crate::coverage::CoverageEvent<S>> = HashMap::new();
    for e in events {
        if let crate::coverage::EventKind::Outburst { cause, .. } = &e.what {
            match cause {
                None => report.push(format!("outburst {} has no cause point", e.event_id)),
                Some(id) => {
                    if by_cause.insert(*id, e).is_some() {
                        report.push(format!("point {id} fired more than one outburst"));
                    }
                }
            }
        }
    }
    let known: std::collections::HashSet<u64> = points.iter().map(|p| p.id).collect();
    for id in by_cause.keys() {
        if !known.contains(id) {
            report.push(format!("outburst cause {id} is not a generated point"));
        }
    }
    // the scanning rule, point by point
    for p in points {
        let fired = by_cause.get(&p.id).copied();
        let exclude = fired.map(|e| e.event_id);
        let expected: Option<(S, u8)> = match spec.construction {
            Construction::FromInfection => {
                match log.status_unchecked(&p.position, p.time, false, exclude) {
                    InfectionStatus::Infected { kind, .. }
                        if p.strength <= spec.betas[(kind - 1) as usize]
                            && p.time <= log.horizon =>
                    {
                        Some((p.time, kind))
                    }
                    _ => None,
                }
            }
            Construction::FromZero => {
                match log.status_unchecked(&p.position, log.horizon, false, exclude) {
                    InfectionStatus::Infected { kind, since }
                        if p.strength <= spec.betas[(kind - 1) as usize]
                            && since + p.time <= log.horizon =>
                    {
                        Some((since + p.time, kind))
                    }
                    _ => None,
                }
            }
        };
        match (expected, fired) {
            (None, None) => {}
            (Some((t, kind)), Some(e)) => {
                if e.time != t {
                    report.push(format!(
                        "point {}: fired at {} instead of {t}",
                        p.id, e.time
                    ));
                }
                if e.kind != kind {
                    report.push(format!(
                        "point {}: fired type {} instead of {kind}",
                        p.id, e.kind
                    ));
                }
                if let crate::coverage::EventKind::Outburst { ball, .. } = &e.what {
                    let want = spec
                        .transform
                        .as_ref()
                        .map(|tr| tr.apply(p.radius))
                        .unwrap_or(p.radius);
                    if ball.radius != want || ball.center != p.position {
                        report.push(format!("point {}: outburst ball mismatch", p.id));
                    }
                }
                if p.strength > spec.betas[(kind - 1) as usize] {
                    report.push(format!("point {}: strength above its rate", p.id));
                }
            }
            (Some((t, _)), None) => {
                report.push(format!("point {} should have fired at {t}", p.id));
            }
            (None, Some(e)) => {
                report.push(format!(
                    "point {} fired at {} but the rule says it must not",
                    p.id, e.time
                ));
            }
        }
    }
    report
}

/// Run several specs against one shared point configuration. All specs must
/// agree on dimension, radius law and master seed; the union of explored
/// windows is generated once, so a point existing in one run exists in all.
pub fn run_coupled<S: Scalar>(
    specs: &[RunSpec<S>],
) -> Result<(Vec<RunResult<S>>, PointStore<S>)> {
    let first = specs
        .first()
        .ok_or(Error::EmptyInput("run_coupled needs at least one spec"))?;
    for s in specs {
        s.validate()?;
        if s.config.dimension != first.config.dimension
            || s.rho != first.rho
            || s.master_seed != first.master_seed
        {
            return Err(Error::InvalidSpec(
                "coupled specs must share dimension, radius law and master seed".into(),
            ));
        }
    }
    let time_cap = specs
        .iter()
        .map(|s| s.stop.t_max)
        .fold(S::zero(), |a, b| a.max(b));
    let strength_cap = specs
        .iter()
        .map(|s| s.effective_strength_cap())
        .fold(S::zero(), |a, b| a.max(b));
    let r_cap = specs
        .iter()
        .map(|s| s.stop.r_cap)
        .fold(S::zero(), |a, b| a.max(b));
    let policy = WindowPolicy::for_run(
        first.config.dimension,
        &first.rho,
        time_cap,
        strength_cap,
        r_cap,
        first.master_seed,
    );
    let mut store = PointStore::new(policy, first.rho.clone());
    let mut results = Vec::with_capacity(specs.len());
    for spec in specs {
        results.push(run_with_store(spec, &mut store)?);
    }
    Ok((results, store))
}
