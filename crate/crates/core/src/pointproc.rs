//! Reproducible sampling of the marked point process with intensity
//! (Lebesgue in space) x (Lebesgue in time) x (radius law) x (Lebesgue in
//! strength) over bounded space-time-strength windows.
//!
//! Points of a window are generated as a ladder in the strength coordinate:
//! strengths arrive in increasing order with exponential gaps of rate
//! `volume * duration`, and each strength level draws its position, time and
//! radius marks. Raising the strength cap therefore extends the point list
//! without disturbing the existing prefix, which is what makes strength
//! truncation exact and coupled replays possible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Ball, Point};
use crate::rho::RadiusDistribution;
use crate::scalar::Scalar;

/// A marked point: position, time, radius and strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PoissonPoint<S: Scalar> {
    pub id: u64,
    pub position: Point<S>,
    pub time: S,
    pub radius: S,
    pub strength: S,
}

/// Spatial shapes windows can take; each samples uniformly in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowShape<S: Scalar> {
    Ball(Ball<S>),
    Annulus { center: Point<S>, inner: S, outer: S },
    Box(Aabb<S>),
}

impl<S: Scalar> WindowShape<S> {
    pub fn dim(&self) -> usize {
        match self {
            WindowShape::Ball(b) => b.dim(),
            WindowShape::Annulus { center, .. } => center.dim(),
            WindowShape::Box(b) => b.dim(),
        }
    }

    pub fn volume(&self) -> S {
        match self {
            WindowShape::Ball(b) => b.volume(),
            WindowShape::Annulus { center, inner, outer } => {
                let d = center.dim() as i32;
                crate::geom::unit_ball_volume::<S>(center.dim())
                    * (outer.powi(d) - inner.powi(d))
            }
            WindowShape::Box(b) => b.volume(),
        }
    }

    pub fn contains(&self, x: &Point<S>) -> bool {
        match self {
            WindowShape::Ball(b) => b.contains(x),
            WindowShape::Annulus { center, inner, outer } => {
                let d = center.dist(x);
                d >= *inner - S::EPS_GEO && d <= *outer + S::EPS_GEO
            }
            WindowShape::Box(b) => b.contains(x),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point<S> {
        match self {
            WindowShape::Ball(b) => {
                sample_annulus(rng, &b.center, S::zero(), b.radius)
            }
            WindowShape::Annulus { center, inner, outer } => {
                sample_annulus(rng, center, *inner, *outer)
            }
            WindowShape::Box(b) => Point::new(
                (0..b.dim())
                    .map(|i| {
                        b.lo.coords[i] + S::unit(rng) * (b.hi.coords[i] - b.lo.coords[i])
                    })
                    .collect(),
            ),
        }
    }
}

/// Uniform point of the closed ball `B(center, radius)`.
pub fn sample_ball<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    center: &Point<S>,
    radius: S,
) -> Point<S> {
    sample_annulus(rng, center, S::zero(), radius)
}

/// Uniform point of the annulus `inner <= |x - center| <= outer`: a radius by
/// inverse CDF of `r^d`, a direction from normalized Gaussians.
fn sample_annulus<S: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    center: &Point<S>,
    inner: S,
    outer: S,
) -> Point<S> {
    let d = center.dim();
    let di = d as i32;
    let u = S::unit(rng);
    let radius = (inner.powi(di) + u * (outer.powi(di) - inner.powi(di)))
        .powf(S::one() / S::from_f64(d as f64));
    loop {
        let dir: Vec<S> = (0..d).map(|_| gaussian(rng)).collect();
        let norm = dir.iter().fold(S::zero(), |a, &g| a + g * g).sqrt();
        if norm > S::from_f64(1e-30) {
            return Point::new(
                (0..d)
                    .map(|i| center.coords[i] + radius * dir[i] / norm)
                    .collect(),
            );
        }
    }
}

/// Box-Muller; one Gaussian per call (the sine twin is discarded to keep the
/// draw count per point fixed and simple).
fn gaussian<S: Scalar, R: Rng + ?Sized>(rng: &mut R) -> S {
    let u1 = S::unit_open(rng);
    let u2 = S::unit(rng);
    let two = S::from_f64(2.0);
    (-two * u1.ln()).sqrt() * (S::from_f64(std::f64::consts::TAU) * u2).cos()
}

/// A bounded slab of the marked space: spatial shape x time range x strength
/// range `[0, strength_cap]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Window<S: Scalar> {
    pub spatial: WindowShape<S>,
    pub t0: S,
    pub t1: S,
    pub strength_cap: S,
}

impl<S: Scalar> Window<S> {
    pub fn validate(&self) -> Result<()> {
        if self.t0 > self.t1 {
            return Err(Error::InvalidInput("window has t0 > t1".into()));
        }
        if self.strength_cap < S::zero() {
            return Err(Error::InvalidInput("window strength cap < 0".into()));
        }
        if !self.spatial.volume().is_finite() || self.spatial.volume() < S::zero() {
            return Err(Error::InvalidInput("window volume must be finite".into()));
        }
        Ok(())
    }
}

/// Derive the per-window random stream from `(master_seed, window_index)`.
///
/// SplitMix64 expansion of the pair into a 32-byte ChaCha8 seed; fixed for
/// reproducibility, independent of the order windows are explored in.
pub fn window_stream(master_seed: u64, window_index: u64) -> ChaCha8Rng {
    fn splitmix(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut state = master_seed ^ window_index.wrapping_mul(0xA24B_AED4_963E_E407);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Points of one window in struct-of-arrays layout, sorted by time.
///
/// `seq` is the ladder index of each point; `(window_index << 32) | seq` is
/// the globally unique point id.
#[derive(Debug, Clone)]
pub struct PointBatch<S: Scalar> {
    pub window_index: u64,
    pub dim: usize,
    pub seq: Vec<u32>,
    pub coords: Vec<S>,
    pub times: Vec<S>,
    pub radii: Vec<S>,
    pub strengths: Vec<S>,
}

impl<S: Scalar> PointBatch<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn position(&self, i: usize) -> Point<S> {
        Point::new(self.coords[i * self.dim..(i + 1) * self.dim].to_vec())
    }

    pub fn coord_slice(&self, i: usize) -> &[S] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn id(&self, i: usize) -> u64 {
        (self.window_index << 32) | self.seq[i] as u64
    }

    pub fn point(&self, i: usize) -> PoissonPoint<S> {
        PoissonPoint {
            id: self.id(i),
            position: self.position(i),
            time: self.times[i],
            radius: self.radii[i],
            strength: self.strengths[i],
        }
    }
}

/// Sample every point of the window, sorted by time. Deterministic in
/// `(master_seed, window_index)`; a window with a higher strength cap yields
/// this point list as a prefix (in ladder order).
pub fn sample_window<S: Scalar>(
    window: &Window<S>,
    rho: &RadiusDistribution<S>,
    master_seed: u64,
    window_index: u64,
) -> Result<PointBatch<S>> {
    window.validate()?;
    let dim = window.spatial.dim();
    let mut batch = PointBatch {
        window_index,
        dim,
        seq: Vec::new(),
        coords: Vec::new(),
        times: Vec::new(),
        radii: Vec::new(),
        strengths: Vec::new(),
    };
    let rate = window.spatial.volume() * (window.t1 - window.t0);
    if rate <= S::zero() || window.strength_cap <= S::zero() {
        return Ok(batch);
    }
    let mut rng = window_stream(master_seed, window_index);
    let mut strength = S::zero();
    let mut seq: u32 = 0;
    loop {
        strength = strength - S::unit_open(&mut rng).ln() / rate;
        if strength > window.strength_cap || !strength.is_finite() {
            break;
        }
        let pos = window.spatial.sample(&mut rng);
        let time = window.t0 + S::unit(&mut rng) * (window.t1 - window.t0);
        let radius = rho.sample(&mut rng);
        batch.seq.push(seq);
        batch.coords.extend_from_slice(&pos.coords);
        batch.times.push(time);
        batch.radii.push(radius);
        batch.strengths.push(strength);
        seq = seq.checked_add(1).ok_or_else(|| {
            Error::InvalidInput("window produced more than 2^32 points".into())
        })?;
    }
    sort_batch_by_time(&mut batch);
    Ok(batch)
}

fn sort_batch_by_time<S: Scalar>(batch: &mut PointBatch<S>) {
    let n = batch.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        batch.times[a]
            .partial_cmp(&batch.times[b])
            .expect("finite times")
            .then(batch.seq[a].cmp(&batch.seq[b]))
    });
    let dim = batch.dim;
    let mut coords = Vec::with_capacity(n * dim);
    for &i in &order {
        coords.extend_from_slice(&batch.coords[i * dim..(i + 1) * dim]);
    }
    batch.coords = coords;
    batch.seq = order.iter().map(|&i| batch.seq[i]).collect();
    batch.times = order.iter().map(|&i| batch.times[i]).collect();
    batch.radii = order.iter().map(|&i| batch.radii[i]).collect();
    batch.strengths = order.iter().map(|&i| batch.strengths[i]).collect();
}

/// The adaptive window layout of a run: origin-centered shells of fixed
/// width, full time range, one strength cap.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPolicy<S: Scalar> {
    pub dim: usize,
    pub shell_width: S,
    pub time_cap: S,
    pub strength_cap: S,
    /// Hard cap on the outermost shell radius; breaching it is an explicit
    /// resource error, never a silent truncation.
    pub radius_cap: S,
    pub master_seed: u64,
}

impl<S: Scalar> WindowPolicy<S> {
    /// Lookahead margin and shell width from the radius law:
    /// `max(4 * smallest support point, 99.9%-quantile truncated at the cap)`.
    pub fn for_run(
        dim: usize,
        rho: &RadiusDistribution<S>,
        time_cap: S,
        strength_cap: S,
        radius_cap: S,
        master_seed: u64,
    ) -> Self {
        let support = rho.min_support_above(S::zero()).unwrap_or(S::zero());
        let q = rho.quantile(S::from_f64(0.999)).min(radius_cap);
        let shell_width = (S::from_f64(4.0) * support).max(q);
        WindowPolicy {
            dim,
            shell_width,
            time_cap,
            strength_cap,
            radius_cap,
            master_seed,
        }
    }

    pub fn window(&self, index: u64) -> Window<S> {
        let w = self.shell_width;
        Window {
            spatial: WindowShape::Annulus {
                center: Point::origin(self.dim),
                inner: S::from_f64(index as f64) * w,
                outer: S::from_f64((index + 1) as f64) * w,
            },
            t0: S::zero(),
            t1: self.time_cap,
            strength_cap: self.strength_cap,
        }
    }
}

/// Lazily generated shells shared by one run or by coupled runs.
#[derive(Debug)]
pub struct PointStore<S: Scalar> {
    pub policy: WindowPolicy<S>,
    pub rho: RadiusDistribution<S>,
    batches: Vec<PointBatch<S>>,
}

impl<S: Scalar> PointStore<S> {
    pub fn new(policy: WindowPolicy<S>, rho: RadiusDistribution<S>) -> Self {
        PointStore {
            policy,
            rho,
            batches: Vec::new(),
        }
    }

    pub fn batches(&self) -> &[PointBatch<S>] {
        &self.batches
    }

    /// Radius covered by the shells generated so far.
    pub fn covered_radius(&self) -> S {
        S::from_f64(self.batches.len() as f64) * self.policy.shell_width
    }

    /// Generate shells until the covered radius is at least `radius`;
    /// returns the indices of the newly generated batches.
    pub fn ensure_radius(&mut self, radius: S) -> Result<std::ops::Range<usize>> {
        let first = self.batches.len();
        if radius > self.policy.radius_cap {
            return Err(Error::WindowCapExceeded {
                needed: radius.to_f64(),
                cap: self.policy.radius_cap.to_f64(),
            });
        }
        while self.covered_radius() < radius {
            let index = self.batches.len() as u64;
            let window = self.policy.window(index);
            let batch = sample_window(&window, &self.rho, self.policy.master_seed, index)?;
            self.batches.push(batch);
        }
        Ok(first..self.batches.len())
    }

    /// Every generated point, materialized (for replay verification).
    pub fn all_points(&self) -> Vec<PoissonPoint<S>> {
        let mut out = Vec::new();
        for b in &self.batches {
            for i in 0..b.len() {
                out.push(b.point(i));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_window(t1: f64, cap: f64) -> Window<f64> {
        Window {
            spatial: WindowShape::Box(Aabb::new(
                Point::new(vec![0.0, 0.0]),
                Point::new(vec![1.0, 1.0]),
            )),
            t0: 0.0,
            t1,
            strength_cap: cap,
        }
    }

    fn rho_unit() -> RadiusDistribution<f64> {
        RadiusDistribution::Deterministic { value: 1.0 }
    }

    #[test]
    fn empirical_mean_count_matches_intensity() {
        // vol * dt * cap = 1 * 10 * 2 = 20; mean of 1000 seeds within 3 sigma
        let w = unit_square_window(10.0, 2.0);
        let mut total = 0usize;
        let n = 1000;
        for seed in 0..n {
            total += sample_window(&w, &rho_unit(), seed, 0).unwrap().len();
        }
        let mean = total as f64 / n as f64;
        let sigma = (20.0f64 / n as f64).sqrt();
        assert!((mean - 20.0).abs() <= 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn zero_measure_windows_are_empty() {
        let w = unit_square_window(0.0, 2.0);
        assert!(sample_window(&w, &rho_unit(), 1, 0).unwrap().is_empty());
        let w = Window { t0: 5.0, t1: 5.0, ..unit_square_window(10.0, 2.0) };
        assert!(sample_window(&w, &rho_unit(), 1, 0).unwrap().is_empty());
        let w = unit_square_window(10.0, 0.0);
        assert!(sample_window(&w, &rho_unit(), 1, 0).unwrap().is_empty());
    }

    #[test]
    fn deterministic_bit_for_bit() {
        let w = unit_square_window(10.0, 2.0);
        let a = sample_window(&w, &rho_unit(), 99, 7).unwrap();
        let b = sample_window(&w, &rho_unit(), 99, 7).unwrap();
        assert_eq!(a.times, b.times);
        assert_eq!(a.coords, b.coords);
        assert_eq!(a.strengths, b.strengths);
        assert_eq!(a.seq, b.seq);
        let c = sample_window(&w, &rho_unit(), 100, 7).unwrap();
        assert_ne!(a.times, c.times);
    }

    #[test]
    fn raising_the_cap_extends_the_prefix() {
        let w1 = unit_square_window(10.0, 1.0);
        let w2 = unit_square_window(10.0, 3.0);
        let a = sample_window(&w1, &rho_unit(), 5, 3).unwrap();
        let b = sample_window(&w2, &rho_unit(), 5, 3).unwrap();
        assert!(b.len() > a.len());
        // identify by ladder seq: every point of the small cap exists
        // unchanged in the large cap
        for i in 0..a.len() {
            let j = b.seq.iter().position(|&s| s == a.seq[i]).unwrap();
            assert_eq!(a.times[i], b.times[j]);
            assert_eq!(a.strengths[i], b.strengths[j]);
            assert_eq!(a.coord_slice(i), b.coord_slice(j));
            assert_eq!(a.radii[i], b.radii[j]);
        }
    }

    #[test]
    fn batch_sorted_by_time_with_unique_ids() {
        let w = unit_square_window(10.0, 2.0);
        let b = sample_window(&w, &rho_unit(), 11, 4).unwrap();
        for i in 1..b.len() {
            assert!(b.times[i - 1] <= b.times[i]);
        }
        let mut ids: Vec<u64> = (0..b.len()).map(|i| b.id(i)).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), b.len());
        assert!(ids.iter().all(|id| id >> 32 == 4));
    }

    #[test]
    fn marks_are_uniform_where_they_should_be() {
        let w = unit_square_window(10.0, 2.0);
        let mut times = Vec::new();
        let mut xs = Vec::new();
        for seed in 0..200 {
            let b = sample_window(&w, &rho_unit(), seed, 0).unwrap();
            for i in 0..b.len() {
                times.push(b.times[i]);
                xs.push(b.coord_slice(i)[0]);
                assert!(b.strengths[i] <= 2.0 && b.strengths[i] > 0.0);
            }
        }
        let mean_t = times.iter().sum::<f64>() / times.len() as f64;
        let mean_x = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean_t - 5.0).abs() < 0.2, "mean time {mean_t}");
        assert!((mean_x - 0.5).abs() < 0.02, "mean x {mean_x}");
    }

    #[test]
    fn annulus_sampling_stays_in_annulus() {
        let shape = WindowShape::Annulus {
            center: Point::new(vec![1.0, -2.0, 0.5]),
            inner: 2.0,
            outer: 4.0,
        };
        let mut rng = window_stream(3, 9);
        let c = Point::new(vec![1.0, -2.0, 0.5]);
        for _ in 0..500 {
            let p = shape.sample(&mut rng);
            let d = p.dist(&c);
            assert!(d >= 2.0 - 1e-9 && d <= 4.0 + 1e-9);
        }
    }

    #[test]
    fn store_shells_tile_space_and_respect_cap() {
        let policy = WindowPolicy::for_run(2, &rho_unit(), 5.0, 1.0, 20.0, 77);
        assert_eq!(policy.shell_width, 4.0); // 4 * support point of det(1)
        let mut store = PointStore::new(policy, rho_unit());
        let added = store.ensure_radius(7.0).unwrap();
        assert_eq!(added, 0..2);
        assert!(store.covered_radius() >= 7.0);
        // idempotent
        let added = store.ensure_radius(7.0).unwrap();
        assert!(added.is_empty());
        let err = store.ensure_radius(25.0).unwrap_err();
        assert!(err.is_resource());
    }
}
