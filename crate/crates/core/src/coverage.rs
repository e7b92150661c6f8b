//! The first-coverage index: given the initial configuration and a
//! chronological log of outburst events, answer exact infection-status
//! queries for any point and time.
//!
//! Precedence rule: a point inside the initial configuration follows its
//! piece exclusively (outbursts never infect those points); any other point
//! is determined by the earliest outburst ball covering it.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Ball, Point, Region};
use crate::pointproc::sample_ball;
use crate::scalar::Scalar;

/// Activation time of an initial piece: a finite delay or never (immune).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActivationTime<S: Scalar> {
    At(S),
    Never,
}

impl<S: Scalar> ActivationTime<S> {
    pub fn finite(&self) -> Option<S> {
        match self {
            ActivationTime::At(t) => Some(*t),
            ActivationTime::Never => None,
        }
    }

    pub fn is_immune(&self) -> bool {
        matches!(self, ActivationTime::Never)
    }
}

impl<S: Scalar> Serialize for ActivationTime<S> {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        match self {
            ActivationTime::At(t) => t.serialize(s),
            ActivationTime::Never => s.serialize_str("inf"),
        }
    }
}

impl<'de, S: Scalar> Deserialize<'de> for ActivationTime<S> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<S> {
            Num(S),
            Text(String),
        }
        match Raw::<S>::deserialize(d)? {
            Raw::Num(t) => Ok(ActivationTime::At(t)),
            Raw::Text(s) if s == "inf" => Ok(ActivationTime::Never),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// One piece of the generalized initial configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ConfigPiece<S: Scalar> {
    #[serde(rename = "shape")]
    pub region: Region<S>,
    #[serde(rename = "type")]
    pub kind: u8,
    pub time: ActivationTime<S>,
}

/// Disjoint bounded regions, each with a type and an activation time in
/// `[0, inf]`; `inf` marks an immune region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GeneralizedInitialConfig<S: Scalar> {
    pub dimension: usize,
    pub types: u8,
    pub pieces: Vec<ConfigPiece<S>>,
}

impl<S: Scalar> GeneralizedInitialConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidSpec("dimension must be >= 1".into()));
        }
        if self.types == 0 || self.types > 8 {
            return Err(Error::InvalidSpec("number of types must be in 1..=8".into()));
        }
        if self.pieces.is_empty() {
            return Err(Error::InvalidSpec("configuration needs at least one piece".into()));
        }
        let mut any_live = false;
        for (i, p) in self.pieces.iter().enumerate() {
            if p.region.dim() != self.dimension {
                return Err(Error::DimensionMismatch {
                    expected: self.dimension,
                    got: p.region.dim(),
                });
            }
            match p.time {
                ActivationTime::At(t) => {
                    if !(t >= S::zero()) || !t.is_finite() {
                        return Err(Error::InvalidSpec(format!(
                            "piece {i} has an invalid activation time"
                        )));
                    }
                    if p.kind == 0 || p.kind > self.types {
                        return Err(Error::InvalidSpec(format!(
                            "piece {i} has type {} outside 1..={}",
                            p.kind, self.types
                        )));
                    }
                    if p.region.volume() > S::zero() {
                        any_live = true;
                    }
                }
                ActivationTime::Never => {
                    if p.kind > self.types {
                        return Err(Error::InvalidSpec(format!(
                            "immune piece {i} has type {} outside 0..={}",
                            p.kind, self.types
                        )));
                    }
                }
            }
        }
        if !any_live {
            return Err(Error::InvalidSpec(
                "configuration needs a piece with finite time and positive volume".into(),
            ));
        }
        for i in 0..self.pieces.len() {
            for j in i + 1..self.pieces.len() {
                if self.pieces[i].region.intersects(&self.pieces[j].region) {
                    return Err(Error::InvalidSpec(format!(
                        "pieces {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Index of the piece containing `x`, if any (pieces are disjoint).
    pub fn piece_containing(&self, x: &Point<S>) -> Option<usize> {
        self.pieces.iter().position(|p| p.region.contains(x))
    }

    /// Smallest origin-centered ball radius containing every piece.
    pub fn bounding_radius(&self) -> S {
        self.pieces
            .iter()
            .map(|p| p.region.bounding_radius())
            .fold(S::zero(), |a, b| a.max(b))
    }
}

/// Infection status of a single point at a single time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum InfectionStatus<S: Scalar> {
    Uninfected,
    Immune,
    Infected { kind: u8, since: S },
}

impl<S: Scalar> InfectionStatus<S> {
    pub fn infected_kind(&self) -> Option<u8> {
        match self {
            InfectionStatus::Infected { kind, .. } => Some(*kind),
            _ => None,
        }
    }

    pub fn is_infected(&self) -> bool {
        matches!(self, InfectionStatus::Infected { .. })
    }
}

/// What happened at one moment of the evolution.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind<S: Scalar> {
    /// Activation of initial piece `piece` (finite-time pieces only).
    InitialRegion { piece: usize },
    /// A ball-shaped outburst transmitting `kind`.
    Outburst { ball: Ball<S>, cause: Option<u64> },
}

/// A chronologically ordered infection event.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageEvent<S: Scalar> {
    pub event_id: u64,
    pub time: S,
    pub kind: u8,
    pub what: EventKind<S>,
}

impl<S: Scalar> CoverageEvent<S> {
    pub fn outburst_ball(&self) -> Option<&Ball<S>> {
        match &self.what {
            EventKind::Outburst { ball, .. } => Some(ball),
            EventKind::InitialRegion { .. } => None,
        }
    }

    fn bounding_radius(&self, config: &GeneralizedInitialConfig<S>) -> S {
        match &self.what {
            EventKind::Outburst { ball, .. } => ball.bounding_radius(),
            EventKind::InitialRegion { piece } => config.pieces[*piece].region.bounding_radius(),
        }
    }
}

/// Result of the sampled outburst-effectiveness diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Effectiveness<S: Scalar> {
    pub effective: bool,
    pub new_fraction: S,
}

const GRID_DIM: usize = 4;
/// Balls touching more cells than this go to the unbucketed overflow list.
const MAX_CELLS_PER_BALL: usize = 4096;

#[derive(Debug, Clone)]
struct GridIndex<S: Scalar> {
    cell: S,
    buckets: HashMap<[i64; GRID_DIM], Vec<u32>>,
    oversized: Vec<u32>,
    bucketed: bool,
}

impl<S: Scalar> GridIndex<S> {
    fn new(cell: S, dim: usize) -> Self {
        GridIndex {
            cell,
            buckets: HashMap::new(),
            oversized: Vec::new(),
            bucketed: dim <= GRID_DIM && cell > S::zero(),
        }
    }

    fn key(&self, x: &[S]) -> [i64; GRID_DIM] {
        let mut k = [0i64; GRID_DIM];
        for (i, &c) in x.iter().enumerate().take(GRID_DIM) {
            k[i] = (c / self.cell).floor().to_f64() as i64;
        }
        k
    }

    fn insert(&mut self, idx: u32, ball: &Ball<S>) {
        if !self.bucketed {
            self.oversized.push(idx);
            return;
        }
        let dim = ball.dim();
        let mut lo = [0i64; GRID_DIM];
        let mut hi = [0i64; GRID_DIM];
        let mut count: usize = 1;
        for i in 0..dim {
            let c = ball.center.coords[i];
            lo[i] = ((c - ball.radius) / self.cell).floor().to_f64() as i64;
            hi[i] = ((c + ball.radius) / self.cell).floor().to_f64() as i64;
            count = count.saturating_mul((hi[i] - lo[i] + 1) as usize);
            if count > MAX_CELLS_PER_BALL {
                self.oversized.push(idx);
                return;
            }
        }
        let mut key = lo;
        loop {
            self.buckets.entry(key).or_default().push(idx);
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

    fn bucket(&self, x: &[S]) -> Option<&[u32]> {
        if !self.bucketed {
            return None;
        }
        self.buckets.get(&self.key(x)).map(|v| v.as_slice())
    }
}

/// The event log: a sufficient statistic for the whole infection evolution.
///
/// Append-only; queries between insertions see the evolution so far. The
/// spatial grid only prunes non-covering events, so acceleration never
/// changes an answer.
#[derive(Debug, Clone)]
pub struct EventLog<S: Scalar> {
    pub config: GeneralizedInitialConfig<S>,
    events: Vec<CoverageEvent<S>>,
    pub horizon: S,
    index: GridIndex<S>,
    /// Running max of event bounding radii, aligned with `events`.
    extent_prefix: Vec<S>,
    config_extent: S,
}

impl<S: Scalar> EventLog<S> {
    /// `cell_size` tunes the spatial index only; any positive value gives
    /// identical answers. Pass the median outburst radius when known.
    pub fn new(config: GeneralizedInitialConfig<S>, cell_size: S) -> Result<Self> {
        config.validate()?;
        let config_extent = config.bounding_radius();
        let dim = config.dimension;
        Ok(EventLog {
            config,
            events: Vec::new(),
            horizon: S::zero(),
            index: GridIndex::new(cell_size, dim),
            extent_prefix: Vec::new(),
            config_extent,
        })
    }

    pub fn events(&self) -> &[CoverageEvent<S>] {
        &self.events
    }

    pub fn last_event_time(&self) -> Option<S> {
        self.events.last().map(|e| e.time)
    }

    pub fn set_horizon(&mut self, t: S) {
        self.horizon = t;
    }

    fn push_event(&mut self, ev: CoverageEvent<S>) {
        let bound = ev.bounding_radius(&self.config);
        let prev = self.extent_prefix.last().copied().unwrap_or(S::zero());
        self.extent_prefix.push(prev.max(bound));
        if let EventKind::Outburst { ball, .. } = &ev.what {
            self.index.insert(self.events.len() as u32, ball);
        }
        if ev.time > self.horizon {
            self.horizon = ev.time;
        }
        self.events.push(ev);
    }

    /// Append an activation event for a finite-time piece.
    pub fn insert_activation(&mut self, piece: usize, time: S) -> Result<u64> {
        let p = self
            .config
            .pieces
            .get(piece)
            .ok_or_else(|| Error::InvalidInput(format!("no piece {piece}")))?;
        if p.time.finite() != Some(time) {
            return Err(Error::InvalidInput(format!(
                "piece {piece} does not activate at {time}"
            )));
        }
        self.check_order(time)?;
        let id = self.events.len() as u64;
        self.push_event(CoverageEvent {
            event_id: id,
            time,
            kind: p.kind,
            what: EventKind::InitialRegion { piece },
        });
        Ok(id)
    }

    /// Append an outburst event. Out-of-order insertion is an error;
    /// inserting a fully redundant event changes no status answer.
    pub fn insert_outburst(
        &mut self,
        ball: Ball<S>,
        time: S,
        kind: u8,
        cause: Option<u64>,
    ) -> Result<u64> {
        if ball.dim() != self.config.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.config.dimension,
                got: ball.dim(),
            });
        }
        if kind == 0 || kind > self.config.types {
            return Err(Error::InvalidInput(format!("outburst type {kind} out of range")));
        }
        self.check_order(time)?;
        let id = self.events.len() as u64;
        self.push_event(CoverageEvent {
            event_id: id,
            time,
            kind,
            what: EventKind::Outburst { ball, cause },
        });
        Ok(id)
    }

    fn check_order(&self, time: S) -> Result<()> {
        if let Some(last) = self.last_event_time() {
            if time < last {
                return Err(Error::OutOfOrder {
                    time: time.to_f64(),
                    tail: last.to_f64(),
                });
            }
        }
        if time < S::zero() {
            return Err(Error::InvalidInput("negative event time".into()));
        }
        Ok(())
    }

    /// Earliest outburst event covering `x`, optionally skipping one event id.
    fn earliest_cover(&self, x: &Point<S>, exclude: Option<u64>) -> Option<&CoverageEvent<S>> {
        let scan = |list: &[u32]| -> Option<u32> {
            for &idx in list {
                if exclude == Some(idx as u64) {
                    continue;
                }
                let ev = &self.events[idx as usize];
                if let EventKind::Outburst { ball, .. } = &ev.what {
                    if ball.contains(x) {
                        return Some(idx);
                    }
                }
            }
            None
        };
        // an unbucketed index keeps every event in the oversized list
        let bucket_hit = self.index.bucket(&x.coords).and_then(scan);
        let oversized_hit = scan(&self.index.oversized);
        let best = match (bucket_hit, oversized_hit) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        best.map(|i| &self.events[i as usize])
    }

    /// Status of `x` at time `t`; errors when `t` exceeds the horizon.
    pub fn status(&self, x: &Point<S>, t: S) -> Result<InfectionStatus<S>> {
        if t > self.horizon {
            return Err(Error::BeyondHorizon {
                query: t.to_f64(),
                horizon: self.horizon.to_f64(),
            });
        }
        Ok(self.status_unchecked(x, t, false, None))
    }

    /// Like [`status`](Self::status) but with strict time semantics
    /// (events exactly at `t` are not yet visible) — the state "just before".
    pub fn status_before(&self, x: &Point<S>, t: S) -> InfectionStatus<S> {
        self.status_unchecked(x, t, true, None)
    }

    pub(crate) fn status_unchecked(
        &self,
        x: &Point<S>,
        t: S,
        strict: bool,
        exclude_event: Option<u64>,
    ) -> InfectionStatus<S> {
        let before = |time: S| if strict { time < t } else { time <= t };
        if let Some(j) = self.config.piece_containing(x) {
            let p = &self.config.pieces[j];
            return match p.time {
                ActivationTime::Never => InfectionStatus::Immune,
                ActivationTime::At(t0) => {
                    if before(t0) {
                        InfectionStatus::Infected { kind: p.kind, since: t0 }
                    } else {
                        InfectionStatus::Uninfected
                    }
                }
            };
        }
        match self.earliest_cover(x, exclude_event) {
            Some(ev) if before(ev.time) => InfectionStatus::Infected {
                kind: ev.kind,
                since: ev.time,
            },
            _ => InfectionStatus::Uninfected,
        }
    }

    /// Whether `x` would still be infectable just before `t`: uninfected and
    /// outside the initial configuration.
    pub fn infectable_before(&self, x: &Point<S>, t: S) -> bool {
        if self.config.piece_containing(x).is_some() {
            return false;
        }
        !self.status_before(x, t).is_infected()
    }

    /// Monte Carlo effectiveness of a candidate outburst ball at time `t`:
    /// effective iff some sample point would be newly infected. One-sided —
    /// a barely-effective ball may be misreported as ineffective.
    pub fn effectiveness<R: Rng + ?Sized>(
        &self,
        ball: &Ball<S>,
        t: S,
        n_samples: usize,
        rng: &mut R,
    ) -> Result<Effectiveness<S>> {
        if n_samples == 0 {
            return Err(Error::InvalidInput("effectiveness needs n_samples > 0".into()));
        }
        let mut new = 0usize;
        for _ in 0..n_samples {
            let x = sample_ball(rng, &ball.center, ball.radius);
            if self.infectable_before(&x, t) {
                new += 1;
            }
        }
        Ok(Effectiveness {
            effective: new > 0,
            new_fraction: S::from_f64(new as f64 / n_samples as f64),
        })
    }

    /// Radius of the smallest origin-centered ball containing every event
    /// ball with time <= `t` and every config piece. Exact outer bound,
    /// monotone in `t`.
    pub fn extent_radius_at(&self, t: S) -> S {
        let n = self.events.partition_point(|e| e.time <= t);
        let ev = if n == 0 {
            S::zero()
        } else {
            self.extent_prefix[n - 1]
        };
        self.config_extent.max(ev)
    }

    pub fn infected_extent(&self, t: S) -> Result<Ball<S>> {
        if t > self.horizon {
            return Err(Error::BeyondHorizon {
                query: t.to_f64(),
                horizon: self.horizon.to_f64(),
            });
        }
        Ok(Ball::new(
            Point::origin(self.config.dimension),
            self.extent_radius_at(t),
        ))
    }

    /// Reference linear-scan status: same semantics, no index. The oracle the
    /// accelerated path must agree with exactly.
    pub fn status_linear_scan(&self, x: &Point<S>, t: S) -> InfectionStatus<S> {
        if let Some(j) = self.config.piece_containing(x) {
            let p = &self.config.pieces[j];
            return match p.time {
                ActivationTime::Never => InfectionStatus::Immune,
                ActivationTime::At(t0) => {
                    if t0 <= t {
                        InfectionStatus::Infected { kind: p.kind, since: t0 }
                    } else {
                        InfectionStatus::Uninfected
                    }
                }
            };
        }
        for ev in &self.events {
            if let EventKind::Outburst { ball, .. } = &ev.what {
                if ball.contains(x) {
                    return if ev.time <= t {
                        InfectionStatus::Infected { kind: ev.kind, since: ev.time }
                    } else {
                        InfectionStatus::Uninfected
                    };
                }
            }
        }
        InfectionStatus::Uninfected
    }
}

// ---------------------------------------------------------------------------
// JSONL serialization: config header line, then one event per line.

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct HeaderLine<S: Scalar> {
    dimension: usize,
    types: u8,
    horizon: S,
    pieces: Vec<ConfigPiece<S>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(rename_all = "camelCase")]
struct EventLine<S: Scalar> {
    event_id: u64,
    time: S,
    kind: EventLineKind,
    #[serde(rename = "type")]
    infection_type: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    piece: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    center: Option<Vec<S>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    radius: Option<S>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cause_point_id: Option<u64>,
}

#[derive(Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum EventLineKind {
    Initial,
    Outburst,
}

impl<S: Scalar> EventLog<S> {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = HeaderLine {
            dimension: self.config.dimension,
            types: self.config.types,
            horizon: self.horizon,
            pieces: self.config.pieces.clone(),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for ev in &self.events {
            let line = match &ev.what {
                EventKind::InitialRegion { piece } => EventLine {
                    event_id: ev.event_id,
                    time: ev.time,
                    kind: EventLineKind::Initial,
                    infection_type: ev.kind,
                    piece: Some(*piece),
                    center: None,
                    radius: None,
                    cause_point_id: None,
                },
                EventKind::Outburst { ball, cause } => EventLine {
                    event_id: ev.event_id,
                    time: ev.time,
                    kind: EventLineKind::Outburst,
                    infection_type: ev.kind,
                    piece: None,
                    center: Some(ball.center.coords.clone()),
                    radius: Some(ball.radius),
                    cause_point_id: *cause,
                },
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header: HeaderLine<S> = serde_json::from_str(
            &lines
                .next()
                .ok_or(Error::EmptyInput("empty event log file"))??,
        )?;
        let mut parsed: Vec<EventLine<S>> = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            parsed.push(serde_json::from_str(&line)?);
        }
        let mut radii: Vec<S> = parsed.iter().filter_map(|l| l.radius).collect();
        radii.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
        let cell = if radii.is_empty() {
            S::one()
        } else {
            radii[radii.len() / 2]
        };
        let config = GeneralizedInitialConfig {
            dimension: header.dimension,
            types: header.types,
            pieces: header.pieces,
        };
        let mut log = EventLog::new(config, cell)?;
        for l in parsed {
            match l.kind {
                EventLineKind::Initial => {
                    let piece = l
                        .piece
                        .ok_or_else(|| Error::InvalidInput("initial event without piece".into()))?;
                    log.insert_activation(piece, l.time)?;
                }
                EventLineKind::Outburst => {
                    let center = l
                        .center
                        .ok_or_else(|| Error::InvalidInput("outburst without center".into()))?;
                    let radius = l
                        .radius
                        .ok_or_else(|| Error::InvalidInput("outburst without radius".into()))?;
                    log.insert_outburst(
                        Ball::new(Point::new(center), radius),
                        l.time,
                        l.infection_type,
                        l.cause_point_id,
                    )?;
                }
            }
        }
        log.horizon = header.horizon;
        Ok(log)
    }
}

impl<S: Scalar> fmt::Display for InfectionStatus<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfectionStatus::Uninfected => write!(f, "uninfected"),
            InfectionStatus::Immune => write!(f, "immune"),
            InfectionStatus::Infected { kind, since } => {
                write!(f, "infected(type {kind}, since {since})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p2(x: f64, y: f64) -> Point<f64> {
        Point::new(vec![x, y])
    }

    fn one_ball_config(types: u8) -> GeneralizedInitialConfig<f64> {
        GeneralizedInitialConfig {
            dimension: 2,
            types,
            pieces: vec![ConfigPiece {
                region: Region::ball(p2(0.0, 0.0), 1.0),
                kind: 1,
                time: ActivationTime::At(0.0),
            }],
        }
    }

    #[test]
    fn status_inside_initial_piece() {
        let mut log = EventLog::new(one_ball_config(1), 1.0).unwrap();
        log.insert_activation(0, 0.0).unwrap();
        log.set_horizon(10.0);
        assert_eq!(
            log.status(&p2(0.5, 0.0), 0.0).unwrap(),
            InfectionStatus::Infected { kind: 1, since: 0.0 }
        );
    }

    #[test]
    fn status_flips_at_outburst_time() {
        let mut log = EventLog::new(one_ball_config(1), 1.0).unwrap();
        log.insert_activation(0, 0.0).unwrap();
        log.insert_outburst(Ball::new(p2(2.0, 0.0), 1.5), 3.0, 1, None)
            .unwrap();
        log.set_horizon(10.0);
        let x = p2(2.5, 0.0);
        assert_eq!(log.status(&x, 2.0).unwrap(), InfectionStatus::Uninfected);
        assert_eq!(
            log.status(&x, 3.0).unwrap(),
            InfectionStatus::Infected { kind: 1, since: 3.0 }
        );
        // strict variant: not yet visible exactly at its own time
        assert_eq!(log.status_before(&x, 3.0), InfectionStatus::Uninfected);
    }

    #[test]
    fn outbursts_never_infect_initial_pieces() {
        let mut config = one_ball_config(2);
        config.pieces[0].time = ActivationTime::At(5.0);
        let mut log = EventLog::new(config, 1.0).unwrap();
        log.insert_outburst(Ball::new(p2(0.0, 0.0), 3.0), 2.0, 2, None)
            .unwrap();
        log.set_horizon(10.0);
        let x = p2(0.5, 0.0); // inside the delayed piece, covered at t=2
        assert_eq!(log.status(&x, 3.0).unwrap(), InfectionStatus::Uninfected);
        assert_eq!(
            log.status(&x, 5.0).unwrap(),
            InfectionStatus::Infected { kind: 1, since: 5.0 }
        );
        // outside the piece the outburst does infect
        let y = p2(2.5, 0.0);
        assert_eq!(
            log.status(&y, 3.0).unwrap(),
            InfectionStatus::Infected { kind: 2, since: 2.0 }
        );
    }

    #[test]
    fn immune_pieces_stay_immune() {
        let config = GeneralizedInitialConfig {
            dimension: 2,
            types: 1,
            pieces: vec![
                ConfigPiece {
                    region: Region::ball(p2(0.0, 0.0), 1.0),
                    kind: 1,
                    time: ActivationTime::At(0.0),
                },
                ConfigPiece {
                    region: Region::ball(p2(3.0, 0.0), 1.0),
                    kind: 0,
                    time: ActivationTime::Never,
                },
            ],
        };
        let mut log = EventLog::new(config, 1.0).unwrap();
        log.insert_activation(0, 0.0).unwrap();
        log.insert_outburst(Ball::new(p2(2.0, 0.0), 2.0), 1.0, 1, None)
            .unwrap();
        log.set_horizon(100.0);
        assert_eq!(log.status(&p2(3.0, 0.0), 50.0).unwrap(), InfectionStatus::Immune);
    }

    #[test]
    fn earliest_event_wins_and_redundant_insert_is_noop() {
        let mut log = EventLog::new(one_ball_config(2), 1.0).unwrap();
        log.insert_activation(0, 0.0).unwrap();
        log.insert_outburst(Ball::new(p2(2.0, 0.0), 1.0), 1.0, 1, None)
            .unwrap();
        log.set_horizon(10.0);
        let x = p2(2.5, 0.0);
        let before = log.status(&x, 5.0).unwrap();
        // identical ball, later time, other type: changes nothing
        let mut log2 = log.clone();
        log2.insert_outburst(Ball::new(p2(2.0, 0.0), 1.0), 4.0, 2, None)
            .unwrap();
        assert_eq!(log2.status(&x, 5.0).unwrap(), before);
        assert_eq!(log2.status(&x, 0.5).unwrap(), InfectionStatus::Uninfected);
    }

    #[test]
    fn out_of_order_insert_is_rejected() {
        let mut log = EventLog::new(one_ball_config(1), 1.0).unwrap();
        log.insert_outburst(Ball::new(p2(0.0, 0.0), 1.0), 2.0, 1, None)
            .unwrap();
        let err = log
            .insert_outburst(Ball::new(p2(0.0, 0.0), 1.0), 1.0, 1, None)
            .unwrap_err();
        assert!(matches!(err, Error::OutOfOrder { .. }));
    }

    #[test]
    fn beyond_horizon_is_an_error() {
        let mut log = EventLog::new(one_ball_config(1), 1.0).unwrap();
        log.set_horizon(1.0);
        assert!(log.status(&p2(0.0, 0.0), 2.0).is_err());
    }

    #[test]
    fn extent_examples() {
        let mut log = EventLog::new(one_ball_config(1), 1.0).unwrap();
        log.set_horizon(10.0);
        assert_eq!(log.infected_extent(0.0).unwrap().radius, 1.0);
        log.insert_outburst(Ball::new(p2(3.0, 0.0), 1.0), 2.0, 1, None)
            .unwrap();
        log.set_horizon(10.0);
        assert_eq!(log.infected_extent(1.0).unwrap().radius, 1.0);
        assert_eq!(log.infected_extent(2.0).unwrap().radius, 4.0);
    }

    #[test]
    fn effectiveness_lens_example() {
        // unit ball at origin infected; candidate ball at distance 1:
        // new fraction = 1 - lens_area / pi with
        // lens = 2 acos(1/2) - (1/2) sqrt(3)
        let mut log = EventLog::new(one_ball_config(1), 1.0).unwrap();
        log.insert_activation(0, 0.0).unwrap();
        log.set_horizon(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ball = Ball::new(p2(1.0, 0.0), 1.0);
        let eff = log.effectiveness(&ball, 5.0, 4096, &mut rng).unwrap();
        let lens = 2.0 * (0.5f64).acos() - 0.5 * 3.0f64.sqrt();
        let expect = 1.0 - lens / std::f64::consts::PI;
        assert!(eff.effective);
        assert!((eff.new_fraction - expect).abs() < 0.05);

        // fully covered candidate is ineffective
        let eff = log
            .effectiveness(&Ball::new(p2(0.0, 0.0), 0.5), 5.0, 512, &mut rng)
            .unwrap();
        assert!(!eff.effective);
        assert_eq!(eff.new_fraction, 0.0);

        // disjoint candidate is fully new
        let eff = log
            .effectiveness(&Ball::new(p2(5.0, 0.0), 0.5), 5.0, 512, &mut rng)
            .unwrap();
        assert!(eff.effective);
        assert_eq!(eff.new_fraction, 1.0);
    }

    #[test]
    fn grid_agrees_with_linear_scan() {
        let mut log = EventLog::new(one_ball_config(2), 0.7).unwrap();
        log.insert_activation(0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = 0.1;
        for k in 0..300 {
            let x = rng.gen_range(-6.0..6.0);
            let y = rng.gen_range(-6.0..6.0);
            let r = rng.gen_range(0.2..1.8);
            log.insert_outburst(Ball::new(p2(x, y), r), t, 1 + (k % 2) as u8, None)
                .unwrap();
            t += rng.gen_range(0.0..0.05);
        }
        log.set_horizon(t + 1.0);
        for _ in 0..5000 {
            let x = p2(rng.gen_range(-7.0..7.0), rng.gen_range(-7.0..7.0));
            let q = rng.gen_range(0.0..t);
            assert_eq!(log.status(&x, q).unwrap(), log.status_linear_scan(&x, q));
        }
    }

    #[test]
    fn monotone_and_disjoint_in_time() {
        let mut log = EventLog::new(one_ball_config(2), 1.0).unwrap();
        log.insert_activation(0, 0.0).unwrap();
        log.insert_outburst(Ball::new(p2(1.5, 0.0), 1.0), 1.0, 2, None)
            .unwrap();
        log.set_horizon(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let x = p2(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let t1 = rng.gen_range(0.0..5.0);
            let t2 = t1 + rng.gen_range(0.0..5.0);
            let s1 = log.status(&x, t1).unwrap();
            let s2 = log.status(&x, t2).unwrap();
            if let InfectionStatus::Infected { kind, since } = s1 {
                assert_eq!(s2, InfectionStatus::Infected { kind, since });
            }
            if s1 == InfectionStatus::Immune {
                assert_eq!(s2, InfectionStatus::Immune);
            }
        }
    }

    #[test]
    fn jsonl_round_trip_is_bit_exact() {
        let config = GeneralizedInitialConfig {
            dimension: 2,
            types: 2,
            pieces: vec![
                ConfigPiece {
                    region: Region::ball(p2(0.0, 0.0), 1.0),
                    kind: 1,
                    time: ActivationTime::At(0.0),
                },
                ConfigPiece {
                    region: Region::ball(p2(4.0, 0.0), 0.5),
                    kind: 0,
                    time: ActivationTime::Never,
                },
            ],
        };
        let mut log = EventLog::new(config, 1.0).unwrap();
        log.insert_activation(0, 0.0).unwrap();
        log.insert_outburst(
            Ball::new(p2(0.1234567890123, -2.0 / 3.0), 1.0000000001),
            0.3333333333333333,
            2,
            Some(17),
        )
        .unwrap();
        log.set_horizon(7.25);
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let back = EventLog::read_jsonl(buf.as_slice()).unwrap();
        let mut buf2 = Vec::new();
        back.write_jsonl(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(back.horizon, log.horizon);
        assert_eq!(back.events(), log.events());
        assert_eq!(back.config, log.config);
    }
}
