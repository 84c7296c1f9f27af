//! Segment schedules for the method of steps.
//!
//! The domain `[t0, T]` is cut into left-open segments at every point where a
//! delayed argument `t - tau_i` crosses an earlier segment boundary. Two
//! constructions cover all delay sets:
//!
//! * [`SegmentSchedule::commensurate`]: every delay is an exact rational, the
//!   grid is the uniform multiples of their rational gcd `alpha`, and each
//!   delayed term aligns exactly with an earlier segment (shift distance 0)
//! * [`SegmentSchedule::sigma_grid`]: float delays; the grid is every sum
//!   `t0 + K_1 tau_1 + ... + K_r tau_r` below `T`, found by a smallest-first
//!   frontier expansion, and delayed terms carry a float shift distance
//!
//! Either way the delayed image of a segment never straddles a grid point:
//! an interior crossing at `g` would force `g + tau_i` to be a grid point
//! inside the segment, contradicting how the grid was built. Each (segment,
//! delay) pair therefore has exactly one source, recorded in the schedule.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{Error, Result};

/// Hard ceiling on the number of segments a schedule may produce.
/// Overridable per call; the CLI wires `DDE_DTM_SEGMENT_CAP` to it.
pub const DEFAULT_SEGMENT_CAP: usize = 10_000;

/// Reduced fraction with positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(Ratio<i64>);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::ModelInvariant("rational with zero denominator".into()));
        }
        Ok(Self(Ratio::new(numer, denom)))
    }

    pub fn from_integer(n: i64) -> Self {
        Self(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    pub fn is_positive(&self) -> bool {
        self.numer() > 0
    }

    fn times(&self, k: i64) -> Self {
        Self(self.0 * Ratio::from_integer(k))
    }

    /// `self / other` if the quotient is an integer.
    fn exact_multiple_of(&self, other: &Self) -> Option<i64> {
        let q = self.0 / other.0;
        q.is_integer().then(|| q.to_integer())
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

/// Largest rational dividing every entry exactly: numerator gcd over
/// denominator lcm after bringing all entries to a common denominator.
/// `None` for an empty list.
pub fn rational_gcd(delays: &[Rational]) -> Option<Rational> {
    delays.iter().copied().reduce(|a, b| {
        let n = (a.numer() * b.denom()).gcd(&(b.numer() * a.denom()));
        Rational(Ratio::new(n, a.denom() * b.denom()))
    })
}

/// Where a delayed term reads from, for one (segment, delay) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelaySource {
    /// The whole delayed image lies at or before `t0`.
    History,
    /// The delayed image lies in segment `index` (1-based); `shift` is the
    /// distance between the reading segment's center minus the delay and the
    /// source segment's center. Exactly zero in commensurate mode.
    Segment { index: usize, shift: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleMode {
    /// `alpha` is `None` only for delay-free models.
    Commensurate { alpha: Option<Rational>, multipliers: Vec<i64> },
    SigmaGrid,
}

/// Result of [`SegmentSchedule::locate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Located {
    History,
    /// 1-based segment index.
    Segment(usize),
}

/// Partition of `[t0, T]` with, per segment and delay, the source the delayed
/// term must be read from.
///
/// Grid points are `sigma_0 = t0 < sigma_1 < ... < sigma_K < T`; segment `j`
/// (1-based) is `(sigma_{j-1}, sigma_j]`, the last one `(sigma_K, T]`, so a
/// schedule has `K + 1 = grid.len()` segments.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSchedule {
    mode: ScheduleMode,
    t0: f64,
    terminal: f64,
    grid: Vec<f64>,
    delays: Vec<f64>,
    sources: Vec<Vec<DelaySource>>,
    warnings: Vec<String>,
}

impl SegmentSchedule {
    /// Builds the uniform grid of multiples of the delays' rational gcd.
    pub fn commensurate(t0: f64, terminal: f64, delays: &[Rational]) -> Result<Self> {
        Self::commensurate_with_cap(t0, terminal, delays, DEFAULT_SEGMENT_CAP)
    }

    pub fn commensurate_with_cap(
        t0: f64,
        terminal: f64,
        delays: &[Rational],
        cap: usize,
    ) -> Result<Self> {
        check_domain(t0, terminal)?;
        if let Some(tau) = delays.iter().find(|tau| !tau.is_positive()) {
            return Err(Error::ModelInvariant(format!("delay {tau} is not positive")));
        }

        let eps = dedupe_eps(t0, terminal);
        let alpha = rational_gcd(delays);
        let mut grid = vec![t0];
        if let Some(alpha) = &alpha {
            let alpha_f = alpha.to_f64();
            let mut j = 1i64;
            loop {
                let point = t0 + alpha.times(j).to_f64();
                if point >= terminal || terminal - point <= eps {
                    break;
                }
                if grid.len() == cap {
                    let needed = ((terminal - t0) / alpha_f).ceil() as usize;
                    return Err(Error::TooManySegments { needed, cap });
                }
                grid.push(point);
                j += 1;
            }
        }

        let multipliers = match &alpha {
            Some(alpha) => delays
                .iter()
                .map(|tau| {
                    tau.exact_multiple_of(alpha)
                        .expect("gcd divides every delay exactly")
                })
                .collect(),
            None => Vec::new(),
        };

        // Segment j reads delay i from segment j - k_i, or history when that
        // index falls before segment 1. Exact: no float geometry involved.
        let segments = grid.len();
        let sources = (1..=segments)
            .map(|j| {
                multipliers
                    .iter()
                    .map(|k| {
                        let l = j as i64 - k;
                        if l >= 1 {
                            DelaySource::Segment { index: l as usize, shift: 0.0 }
                        } else {
                            DelaySource::History
                        }
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            mode: ScheduleMode::Commensurate { alpha, multipliers },
            t0,
            terminal,
            grid,
            delays: delays.iter().map(Rational::to_f64).collect(),
            sources,
            warnings: Vec::new(),
        })
    }

    /// Builds the grid of all delay-sum points `t0 + sum K_i tau_i < T` by a
    /// smallest-first frontier expansion with duplicate merging.
    pub fn sigma_grid(t0: f64, terminal: f64, delays: &[f64]) -> Result<Self> {
        Self::sigma_grid_with_cap(t0, terminal, delays, DEFAULT_SEGMENT_CAP)
    }

    pub fn sigma_grid_with_cap(
        t0: f64,
        terminal: f64,
        delays: &[f64],
        cap: usize,
    ) -> Result<Self> {
        check_domain(t0, terminal)?;
        if let Some(tau) = delays.iter().find(|tau| !(**tau > 0.0) || !tau.is_finite()) {
            return Err(Error::ModelInvariant(format!("delay {tau} is not positive")));
        }

        let eps = dedupe_eps(t0, terminal);
        let mut grid: Vec<f64> = Vec::new();
        let mut heap: BinaryHeap<Reverse<Ordered>> = BinaryHeap::new();
        heap.push(Reverse(Ordered(t0)));
        while let Some(Reverse(Ordered(point))) = heap.pop() {
            if point >= terminal || terminal - point <= eps {
                break;
            }
            // Ascending pops: a near-duplicate merges into the smaller kept
            // representative, and its offspring would duplicate the kept
            // point's offspring, so it is dropped without expansion.
            if let Some(last) = grid.last() {
                if point - last <= eps {
                    continue;
                }
            }
            if grid.len() == cap {
                return Err(Error::TooManySegments { needed: cap + 1, cap });
            }
            grid.push(point);
            for tau in delays {
                let child = point + tau;
                if child < terminal {
                    heap.push(Reverse(Ordered(child)));
                }
            }
        }

        let mut schedule = Self {
            mode: ScheduleMode::SigmaGrid,
            t0,
            terminal,
            grid,
            delays: delays.to_vec(),
            sources: Vec::new(),
            warnings: Vec::new(),
        };
        schedule.sources = schedule.geometric_sources()?;
        if !delays.is_empty() && schedule.ratios_look_rational() {
            schedule.warnings.push(
                "delay ratios are rational to within 1e-12; write the delays as \
                 fractions p/q to get exact commensurate scheduling"
                    .into(),
            );
        }
        Ok(schedule)
    }

    /// Source lookup by midpoint, validated against both segment endpoints.
    fn geometric_sources(&self) -> Result<Vec<Vec<DelaySource>>> {
        let eps = self.dedupe_eps();
        (1..=self.segment_count())
            .map(|j| {
                let (left, right) = self.interval(j);
                let mid = 0.5 * (left + right);
                self.delays
                    .iter()
                    .map(|tau| {
                        let straddle = || {
                            Error::ModelInvariant(format!(
                                "delayed image of segment {j} (delay {tau}) straddles a grid point"
                            ))
                        };
                        if mid - tau <= self.t0 {
                            if right - tau > self.t0 + eps {
                                return Err(straddle());
                            }
                            return Ok(DelaySource::History);
                        }
                        match self.locate(mid - tau)? {
                            Located::History => Ok(DelaySource::History),
                            Located::Segment(l) => {
                                let (src_left, src_right) = self.interval(l);
                                if left - tau < src_left - eps || right - tau > src_right + eps {
                                    return Err(straddle());
                                }
                                Ok(DelaySource::Segment { index: l, shift: left - src_left - tau })
                            }
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// True when every pairwise delay ratio is within 1e-12 of a fraction
    /// with denominator at most 64.
    fn ratios_look_rational(&self) -> bool {
        self.delays.iter().enumerate().all(|(i, a)| {
            self.delays.iter().skip(i + 1).all(|b| {
                let ratio = a / b;
                (1..=64).any(|q| {
                    let p = (ratio * q as f64).round();
                    (ratio - p / q as f64).abs() <= 1e-12 * ratio.abs().max(1.0)
                })
            })
        })
    }

    pub fn mode(&self) -> &ScheduleMode {
        &self.mode
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Right end of the domain (`T`). Not a grid point.
    pub fn terminal(&self) -> f64 {
        self.terminal
    }

    /// `sigma_0 ..= sigma_K`, all strictly below `T`.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn segment_count(&self) -> usize {
        self.grid.len()
    }

    /// `(sigma_{j-1}, sigma_j]` for 1-based `j`; the last segment ends at `T`.
    pub fn interval(&self, j: usize) -> (f64, f64) {
        let right = self.grid.get(j).copied().unwrap_or(self.terminal);
        (self.grid[j - 1], right)
    }

    /// Expansion center of segment `j`: its left endpoint.
    pub fn center(&self, j: usize) -> f64 {
        self.grid[j - 1]
    }

    /// Source for 1-based segment `j` and 1-based delay `i`.
    pub fn source(&self, j: usize, i: usize) -> DelaySource {
        self.sources[j - 1][i - 1]
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Length of the history interval before `t0` (the largest delay).
    pub fn history_span(&self) -> f64 {
        self.delays.iter().copied().fold(0.0, f64::max)
    }

    fn dedupe_eps(&self) -> f64 {
        dedupe_eps(self.t0, self.terminal)
    }

    /// Maps `t` to the segment whose half-open interval contains it, with
    /// `t <= t0` (and the history span before it) mapping to history. Points
    /// within the dedupe tolerance of a grid point count as that grid point,
    /// which keeps the left-open convention stable under rounding.
    pub fn locate(&self, t: f64) -> Result<Located> {
        let eps = self.dedupe_eps();
        let lo = self.t0 - self.history_span();
        if t < lo - eps || t > self.terminal + eps {
            return Err(Error::OutOfDomain { t, lo, hi: self.terminal });
        }
        let idx = self.grid.partition_point(|g| *g < t);
        if idx > 0 && (t - self.grid[idx - 1]).abs() <= eps {
            return Ok(boundary_segment(idx - 1));
        }
        if idx < self.grid.len() && (self.grid[idx] - t).abs() <= eps {
            return Ok(boundary_segment(idx));
        }
        if t <= self.t0 {
            return Ok(Located::History);
        }
        Ok(Located::Segment(idx))
    }
}

/// Grid point `sigma_m` belongs to segment `m`, except `sigma_0 = t0` which
/// is the top of the history interval.
fn boundary_segment(m: usize) -> Located {
    if m == 0 {
        Located::History
    } else {
        Located::Segment(m)
    }
}

fn check_domain(t0: f64, terminal: f64) -> Result<()> {
    if !(terminal > t0) || !t0.is_finite() || !terminal.is_finite() {
        return Err(Error::ModelInvariant(format!(
            "domain end {terminal} must exceed start {t0}"
        )));
    }
    Ok(())
}

/// Merge tolerance for grid points, scaled to the domain length.
fn dedupe_eps(t0: f64, terminal: f64) -> f64 {
    1e-9 * (terminal - t0).abs().max(1.0)
}

/// f64 ordered by total order; grid points are finite by construction.
#[derive(PartialEq)]
struct Ordered(f64);

impl Eq for Ordered {}

impl PartialOrd for Ordered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn rational_reduces_and_normalizes_sign() {
        let r = rat(6, -4);
        assert_eq!((r.numer(), r.denom()), (-3, 2));
        assert_eq!(rat(3, 2).to_string(), "3/2");
        assert_eq!(Rational::from_integer(4).to_string(), "4");
        assert!(Rational::new(1, 0).is_err());
    }

    #[test]
    fn rational_gcd_fixtures() {
        assert_eq!(rational_gcd(&[rat(3, 10), rat(1, 5)]), Some(rat(1, 10)));
        assert_eq!(rational_gcd(&[rat(1, 1), rat(3, 2)]), Some(rat(1, 2)));
        assert_eq!(rational_gcd(&[rat(2, 1), rat(1, 1)]), Some(rat(1, 1)));
        assert_eq!(rational_gcd(&[]), None);
    }

    #[test]
    fn single_delay_grid_has_uniform_width() {
        let s = SegmentSchedule::commensurate(0.0, 0.5, &[rat(1, 10)]).unwrap();
        assert_eq!(s.segment_count(), 5);
        let expect = [0.0, 0.1, 0.2, 0.30000000000000004, 0.4];
        for (g, e) in s.grid().iter().zip(expect) {
            assert_relative_eq!(*g, e, epsilon = 1e-15);
        }
        assert_eq!(s.source(1, 1), DelaySource::History);
        for j in 2..=5 {
            assert_eq!(s.source(j, 1), DelaySource::Segment { index: j - 1, shift: 0.0 });
        }
    }

    #[test]
    fn terminal_on_a_grid_multiple_is_excluded() {
        // T = t0 + 2 alpha: the point at T itself is not a grid point.
        let s = SegmentSchedule::commensurate(0.0, 2.0, &[rat(1, 1)]).unwrap();
        assert_eq!(s.grid(), &[0.0, 1.0]);
        assert_eq!(s.interval(2), (1.0, 2.0));
    }

    #[test]
    fn two_rational_delays_share_the_gcd_grid() {
        // delays 1 and 3/2 on [0, 3]: alpha = 1/2, K = 5, six segments.
        let s = SegmentSchedule::commensurate(0.0, 3.0, &[rat(1, 1), rat(3, 2)]).unwrap();
        match s.mode() {
            ScheduleMode::Commensurate { alpha, multipliers } => {
                assert_eq!(*alpha, Some(rat(1, 2)));
                assert_eq!(multipliers, &[2, 3]);
            }
            other => panic!("unexpected mode {other:?}"),
        }
        assert_eq!(s.segment_count(), 6);
        assert_eq!(s.grid().len() - 1, 5);
        let hist = DelaySource::History;
        let seg = |l| DelaySource::Segment { index: l, shift: 0.0 };
        let expect = [
            [hist, hist],
            [hist, hist],
            [seg(1), hist],
            [seg(2), seg(1)],
            [seg(3), seg(2)],
            [seg(4), seg(3)],
        ];
        for (j, row) in expect.iter().enumerate() {
            assert_eq!(s.source(j + 1, 1), row[0], "segment {} delay 1", j + 1);
            assert_eq!(s.source(j + 1, 2), row[1], "segment {} delay 2", j + 1);
        }
    }

    #[test]
    fn neutral_fixture_schedule() {
        let s = SegmentSchedule::commensurate(0.0, 2.0, &[rat(2, 1), rat(1, 1)]).unwrap();
        assert_eq!(s.segment_count(), 2);
        assert_eq!(s.source(1, 1), DelaySource::History);
        assert_eq!(s.source(1, 2), DelaySource::History);
        assert_eq!(s.source(2, 1), DelaySource::History);
        assert_eq!(s.source(2, 2), DelaySource::Segment { index: 1, shift: 0.0 });
    }

    #[test]
    fn delay_free_model_gets_one_segment() {
        let s = SegmentSchedule::commensurate(-1.0, 4.0, &[]).unwrap();
        assert_eq!(s.segment_count(), 1);
        assert_eq!(s.interval(1), (-1.0, 4.0));
        assert_eq!(s.history_span(), 0.0);
    }

    #[test]
    fn sigma_grid_enumerates_delay_sums() {
        // delays 3 and pi on [0, 9]: sums 0, 3, pi, 6, 3+pi, 2pi below 9.
        let s = SegmentSchedule::sigma_grid(0.0, 9.0, &[3.0, PI]).unwrap();
        let expect = [0.0, 3.0, PI, 6.0, 3.0 + PI, 2.0 * PI];
        assert_eq!(s.grid().len(), 6);
        for (g, e) in s.grid().iter().zip(expect) {
            assert!((g - e).abs() <= 1e-12, "{g} vs {e}");
        }
        assert_eq!(s.interval(3), (PI, 6.0));
    }

    #[test]
    fn sigma_grid_sources_carry_shift_distances() {
        let s = SegmentSchedule::sigma_grid(0.0, 9.0, &[3.0, PI]).unwrap();
        let src = |j, i| s.source(j, i);
        assert_eq!(src(1, 1), DelaySource::History);
        assert_eq!(src(1, 2), DelaySource::History);
        assert_eq!(src(2, 1), DelaySource::Segment { index: 1, shift: 0.0 });
        assert_eq!(src(2, 2), DelaySource::History);
        match src(3, 1) {
            DelaySource::Segment { index: 1, shift } => {
                assert_relative_eq!(shift, PI - 3.0, epsilon = 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(src(3, 2), DelaySource::Segment { index: 1, shift: 0.0 });
        assert_eq!(src(4, 1), DelaySource::Segment { index: 2, shift: 0.0 });
        match src(4, 2) {
            DelaySource::Segment { index: 1, shift } => {
                assert_relative_eq!(shift, 6.0 - PI, epsilon = 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(src(5, 1), DelaySource::Segment { index: 3, shift: 0.0 });
        assert_eq!(src(5, 2), DelaySource::Segment { index: 2, shift: 0.0 });
        match src(6, 1) {
            DelaySource::Segment { index: 3, shift } => {
                assert_relative_eq!(shift, PI - 3.0, epsilon = 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(src(6, 2), DelaySource::Segment { index: 3, shift: 0.0 });
    }

    #[test]
    fn sigma_grid_merges_near_duplicates_keeping_the_smaller() {
        let tau = 0.1;
        let s = SegmentSchedule::sigma_grid(0.0, 1.05, &[tau, 2.0 * tau]).unwrap();
        // 0.1+0.1 and 0.2 merge; grid is the multiples of 0.1 below 1.05.
        assert_eq!(s.segment_count(), 11);
        for (j, g) in s.grid().iter().enumerate() {
            assert_relative_eq!(*g, j as f64 * tau, epsilon = 1e-9);
        }
        assert!(!s.warnings().is_empty(), "commensurate-looking floats warn");
    }

    #[test]
    fn irrational_ratio_does_not_warn() {
        let s = SegmentSchedule::sigma_grid(0.0, 9.0, &[3.0, PI]).unwrap();
        assert!(s.warnings().is_empty());
    }

    #[test]
    fn locate_follows_the_half_open_convention() {
        let s = SegmentSchedule::commensurate(0.0, 0.5, &[rat(1, 10)]).unwrap();
        assert_eq!(s.locate(0.0).unwrap(), Located::History);
        assert_eq!(s.locate(-0.05).unwrap(), Located::History);
        assert_eq!(s.locate(0.05).unwrap(), Located::Segment(1));
        assert_eq!(s.locate(0.1).unwrap(), Located::Segment(1));
        assert_eq!(s.locate(0.1 + 1e-12).unwrap(), Located::Segment(1));
        assert_eq!(s.locate(0.1 + 1e-3).unwrap(), Located::Segment(2));
        assert_eq!(s.locate(0.5).unwrap(), Located::Segment(5));
        assert!(matches!(s.locate(0.7), Err(Error::OutOfDomain { .. })));
        assert!(matches!(s.locate(-0.2), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn segment_cap_is_enforced() {
        let err = SegmentSchedule::commensurate_with_cap(0.0, 1.0, &[rat(1, 100)], 50);
        assert!(matches!(err, Err(Error::TooManySegments { cap: 50, .. })));
        let err = SegmentSchedule::sigma_grid_with_cap(0.0, 1.0, &[0.01], 50);
        assert!(matches!(err, Err(Error::TooManySegments { cap: 50, .. })));
    }

    #[test]
    fn sigma_grid_matches_brute_force_enumeration() {
        // Independent oracle: enumerate tuples (k1, k2) directly.
        let cases: &[(f64, f64, f64)] = &[
            (1.0, PI / 3.0, 4.0),
            (0.7, 1.9, 6.0),
            (2.0, 3.0, 11.0),
            (0.31, 0.45, 2.3),
        ];
        for &(a, b, t_end) in cases {
            let mut expect: Vec<f64> = Vec::new();
            let mut k1 = 0;
            while k1 as f64 * a < t_end {
                let mut k2 = 0;
                loop {
                    let v = k1 as f64 * a + k2 as f64 * b;
                    if v >= t_end {
                        break;
                    }
                    expect.push(v);
                    k2 += 1;
                }
                k1 += 1;
            }
            expect.sort_by(f64::total_cmp);
            expect.dedup_by(|x, y| *x - *y <= 1e-9 * t_end.max(1.0));
            let s = SegmentSchedule::sigma_grid(0.0, t_end, &[a, b]).unwrap();
            assert_eq!(s.grid().len(), expect.len(), "delays {a}, {b}");
            for (g, e) in s.grid().iter().zip(&expect) {
                assert_relative_eq!(*g, *e, epsilon = 1e-9);
            }
        }
    }
}
