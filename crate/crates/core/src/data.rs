//! Comparison records, the per-pair time index, time encodings and
//! connectivity diagnostics.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{KrcError, Result};
use crate::kernel::{check_bandwidth, Kernel};

/// Game-day stamp for the multi-season encoding. Both fields are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeasonDay {
    pub season: u32,
    pub day: u32,
}

/// One binary comparison, stored with `item_i < item_j`.
///
/// `outcome == 1` means `item_j` was preferred over `item_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRecord {
    item_i: usize,
    item_j: usize,
    time: f64,
    j_preferred: bool,
    stamp: Option<SeasonDay>,
}

impl ComparisonRecord {
    /// Builds a canonical record. `(i, j, t, y)` and `(j, i, t, 1 - y)` give
    /// the same record.
    pub fn new(item_i: usize, item_j: usize, time: f64, outcome: u8) -> Result<Self> {
        let j_preferred = match outcome {
            0 => false,
            1 => true,
            other => return Err(KrcError::InvalidOutcome(other.to_string())),
        };
        Self::from_bool(item_i, item_j, time, j_preferred)
    }

    pub fn from_bool(item_i: usize, item_j: usize, time: f64, j_preferred: bool) -> Result<Self> {
        if item_i == item_j {
            return Err(KrcError::SelfComparison(item_i));
        }
        if !time.is_finite() {
            return Err(KrcError::NonFiniteTime(time));
        }
        let (item_i, item_j, j_preferred) = if item_i < item_j {
            (item_i, item_j, j_preferred)
        } else {
            (item_j, item_i, !j_preferred)
        };
        Ok(Self {
            item_i,
            item_j,
            time,
            j_preferred,
            stamp: None,
        })
    }

    /// Record where `winner` beat `loser`.
    pub fn win(winner: usize, loser: usize, time: f64) -> Result<Self> {
        Self::from_bool(loser, winner, time, true)
    }

    pub fn item_i(&self) -> usize {
        self.item_i
    }

    pub fn item_j(&self) -> usize {
        self.item_j
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn outcome(&self) -> u8 {
        u8::from(self.j_preferred)
    }

    pub fn j_preferred(&self) -> bool {
        self.j_preferred
    }

    pub fn winner(&self) -> usize {
        if self.j_preferred {
            self.item_j
        } else {
            self.item_i
        }
    }

    pub fn loser(&self) -> usize {
        if self.j_preferred {
            self.item_i
        } else {
            self.item_j
        }
    }

    pub fn stamp(&self) -> Option<SeasonDay> {
        self.stamp
    }

    pub fn with_stamp(mut self, stamp: SeasonDay) -> Self {
        self.stamp = Some(stamp);
        self
    }

    fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }
}

/// Time-sorted observations of one unordered pair `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSeries {
    pub i: usize,
    pub j: usize,
    pub times: Vec<f64>,
    /// `true` where item `j` was preferred.
    pub outcomes: Vec<bool>,
}

impl PairSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Times `j` was preferred.
    pub fn j_wins(&self) -> usize {
        self.outcomes.iter().filter(|&&y| y).count()
    }

    /// `(Σ y K_h, Σ K_h)` at time `t`. `h` must already be validated.
    pub fn kernel_sums(&self, kernel: &Kernel, t: f64, h: f64) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&tk, &y) in self.times.iter().zip(&self.outcomes) {
            let w = kernel.density((t - tk) / h);
            den += w;
            if y {
                num += w;
            }
        }
        (num, den)
    }

    /// `Σ K_h²` at time `t`.
    pub fn kernel_square_sum(&self, kernel: &Kernel, t: f64, h: f64) -> f64 {
        self.times
            .iter()
            .map(|&tk| {
                let w = kernel.density((t - tk) / h);
                w * w
            })
            .sum()
    }
}

/// How the time column is interpreted.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeEncoding {
    /// Times are taken as given; with `rescale` they are mapped linearly
    /// onto `[0, 1]`.
    UnitInterval { rescale: bool },
    /// Game day `k` of season `l` maps to `l - 1 + k / (N_l + 1)`, where
    /// `N_l` is the number of game days of season `l`. Counts are derived
    /// from the distinct days present unless supplied explicitly.
    SeasonDay { season_day_counts: Option<Vec<usize>> },
}

impl Default for TimeEncoding {
    fn default() -> Self {
        TimeEncoding::UnitInterval { rescale: false }
    }
}

impl TimeEncoding {
    pub fn is_season_day(&self) -> bool {
        matches!(self, TimeEncoding::SeasonDay { .. })
    }
}

/// `l - 1 + k / (N_l + 1)` for game day `k` of season `l` (both 1-based).
pub fn season_day_time(season: u32, k: usize, days_in_season: usize) -> f64 {
    f64::from(season) - 1.0 + k as f64 / (days_in_season as f64 + 1.0)
}

/// Label handling during ingestion.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum RosterPolicy {
    /// Unseen labels get the next free index.
    #[default]
    Open,
    /// Only labels from the declared roster are accepted, indexed in roster
    /// order.
    Strict(Vec<String>),
}

#[derive(Debug, Clone, Copy)]
enum RawTime {
    Direct(f64),
    SeasonDay(SeasonDay),
}

/// Accumulates labelled rows and produces an indexed dataset.
#[derive(Debug, Clone, Default)]
pub struct DatasetBuilder {
    policy: RosterPolicy,
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
    rows: Vec<(RawTime, usize, usize, bool)>,
}

impl DatasetBuilder {
    pub fn new(policy: RosterPolicy) -> Self {
        let mut builder = Self {
            policy,
            ..Self::default()
        };
        if let RosterPolicy::Strict(roster) = &builder.policy {
            for label in roster.clone() {
                builder.intern(&label);
            }
        }
        builder
    }

    fn intern(&mut self, label: &str) -> usize {
        if let Some(&idx) = self.index.get(label) {
            return idx;
        }
        let idx = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), idx);
        idx
    }

    fn resolve(&mut self, label: &str) -> Result<usize> {
        match &self.policy {
            RosterPolicy::Open => Ok(self.intern(label)),
            RosterPolicy::Strict(_) => self
                .index
                .get(label)
                .copied()
                .ok_or_else(|| KrcError::UnknownLabel(label.to_string())),
        }
    }

    fn push_raw(&mut self, time: RawTime, label_i: &str, label_j: &str, outcome: u8) -> Result<()> {
        let j_preferred = match outcome {
            0 => false,
            1 => true,
            other => return Err(KrcError::InvalidOutcome(other.to_string())),
        };
        if label_i == label_j {
            let idx = self.resolve(label_i)?;
            return Err(KrcError::SelfComparison(idx));
        }
        if let RawTime::Direct(t) = time {
            if !t.is_finite() {
                return Err(KrcError::NonFiniteTime(t));
            }
        }
        let i = self.resolve(label_i)?;
        let j = self.resolve(label_j)?;
        self.rows.push((time, i, j, j_preferred));
        Ok(())
    }

    /// Adds a row with an explicit timestamp.
    pub fn push(&mut self, time: f64, label_i: &str, label_j: &str, outcome: u8) -> Result<()> {
        self.push_raw(RawTime::Direct(time), label_i, label_j, outcome)
    }

    /// Adds a row stamped with a season and game day.
    pub fn push_season_day(
        &mut self,
        season: u32,
        day: u32,
        label_i: &str,
        label_j: &str,
        outcome: u8,
    ) -> Result<()> {
        if season == 0 || day == 0 {
            return Err(KrcError::InvalidConfig(
                "season and day numbers are 1-based".into(),
            ));
        }
        self.push_raw(
            RawTime::SeasonDay(SeasonDay { season, day }),
            label_i,
            label_j,
            outcome,
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn build(self, encoding: &TimeEncoding) -> Result<ComparisonDataset> {
        if self.rows.is_empty() {
            return Err(KrcError::EmptyDataset);
        }
        let times = resolve_times(&self.rows, encoding)?;
        let mut records = Vec::with_capacity(self.rows.len());
        for (&(raw, i, j, y), t) in self.rows.iter().zip(times) {
            let mut record = ComparisonRecord::from_bool(i, j, t, y)?;
            if let RawTime::SeasonDay(stamp) = raw {
                record = record.with_stamp(stamp);
            }
            records.push(record);
        }
        let n = self.labels.len();
        let mut dataset = ComparisonDataset::from_records(n, records)?;
        dataset.labels = self.labels;
        dataset.encoding = encoding.clone();
        Ok(dataset)
    }
}

fn resolve_times(rows: &[(RawTime, usize, usize, bool)], encoding: &TimeEncoding) -> Result<Vec<f64>> {
    match encoding {
        TimeEncoding::UnitInterval { .. } => {
            let mut times = Vec::with_capacity(rows.len());
            for (raw, ..) in rows {
                match raw {
                    RawTime::Direct(t) => times.push(*t),
                    RawTime::SeasonDay(_) => {
                        return Err(KrcError::InvalidConfig(
                            "season/day rows require the season-day encoding".into(),
                        ))
                    }
                }
            }
            if matches!(encoding, TimeEncoding::UnitInterval { rescale: true }) {
                rescale_unit(&mut times);
            }
            Ok(times)
        }
        TimeEncoding::SeasonDay { season_day_counts } => {
            // Distinct game days per season, sorted; the k-th is day rank k.
            let mut days: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
            for (raw, ..) in rows {
                match raw {
                    RawTime::SeasonDay(sd) => days.entry(sd.season).or_default().push(sd.day),
                    RawTime::Direct(_) => {
                        return Err(KrcError::InvalidConfig(
                            "season-day encoding requires season/day rows".into(),
                        ))
                    }
                }
            }
            for list in days.values_mut() {
                list.sort_unstable();
                list.dedup();
            }
            let mut times = Vec::with_capacity(rows.len());
            for (raw, ..) in rows {
                let RawTime::SeasonDay(sd) = raw else { unreachable!() };
                let list = &days[&sd.season];
                let (k, count) = match season_day_counts {
                    // Explicit counts: the day column is already the game-day index.
                    Some(counts) => {
                        let count = *counts.get(sd.season as usize - 1).ok_or_else(|| {
                            KrcError::InvalidConfig(alloc::format!(
                                "no game-day count for season {}",
                                sd.season
                            ))
                        })?;
                        if sd.day as usize > count {
                            return Err(KrcError::InvalidConfig(alloc::format!(
                                "day {} exceeds the {count} game days of season {}",
                                sd.day,
                                sd.season
                            )));
                        }
                        (sd.day as usize, count)
                    }
                    None => {
                        let rank = list.binary_search(&sd.day).expect("day was indexed") + 1;
                        (rank, list.len())
                    }
                };
                times.push(season_day_time(sd.season, k, count));
            }
            Ok(times)
        }
    }
}

fn rescale_unit(times: &mut [f64]) {
    let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for t in times.iter_mut() {
        *t = if span > 0.0 { (*t - lo) / span } else { 0.0 };
    }
}

/// Immutable, indexed collection of comparisons among `n` items.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonDataset {
    n: usize,
    records: Vec<ComparisonRecord>,
    pairs: Vec<PairSeries>,
    labels: Vec<String>,
    encoding: TimeEncoding,
}

impl ComparisonDataset {
    /// Indexes `records` over items `0..n`. Labels default to the indices.
    pub fn from_records(n: usize, records: Vec<ComparisonRecord>) -> Result<Self> {
        let mut buckets: BTreeMap<(usize, usize), Vec<(f64, bool)>> = BTreeMap::new();
        for r in &records {
            if r.item_j >= n {
                return Err(KrcError::UnknownItem { item: r.item_j, n });
            }
            buckets
                .entry((r.item_i, r.item_j))
                .or_default()
                .push((r.time, r.j_preferred));
        }
        let pairs = buckets
            .into_iter()
            .map(|((i, j), mut obs)| {
                obs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (times, outcomes) = obs.into_iter().unzip();
                PairSeries {
                    i,
                    j,
                    times,
                    outcomes,
                }
            })
            .collect();
        Ok(Self {
            n,
            records,
            pairs,
            labels: (0..n).map(|i| i.to_string()).collect(),
            encoding: TimeEncoding::default(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(KrcError::DimensionMismatch {
                expected: self.n,
                got: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ComparisonRecord] {
        &self.records
    }

    /// Observed pairs in `(i, j)` order.
    pub fn pairs(&self) -> &[PairSeries] {
        &self.pairs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, item: usize) -> &str {
        &self.labels[item]
    }

    pub fn item_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn encoding(&self) -> &TimeEncoding {
        &self.encoding
    }

    pub fn pair(&self, a: usize, b: usize) -> Option<&PairSeries> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pairs
            .binary_search_by(|p| (p.i, p.j).cmp(&key))
            .ok()
            .map(|idx| &self.pairs[idx])
    }

    /// `M_ij`, the number of comparisons between `a` and `b`.
    pub fn count(&self, a: usize, b: usize) -> usize {
        self.pair(a, b).map_or(0, PairSeries::len)
    }

    /// `M = min |T_ij|` over all `n (n - 1) / 2` pairs.
    pub fn min_pair_count(&self) -> usize {
        let all = self.n * self.n.saturating_sub(1) / 2;
        if self.pairs.len() < all {
            0
        } else {
            self.pairs.iter().map(PairSeries::len).min().unwrap_or(0)
        }
    }

    /// `(min, max)` of the record times.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        let mut it = self.records.iter().map(|r| r.time);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), t| (lo.min(t), hi.max(t))))
    }

    /// `wins[i]`, total comparisons won by each item.
    pub fn win_totals(&self) -> Vec<usize> {
        let mut wins = vec![0; self.n];
        for r in &self.records {
            wins[r.winner()] += 1;
        }
        wins
    }

    /// Dataset restricted to records strictly before `t`, same roster.
    pub fn before(&self, t: f64) -> Self {
        self.filtered(|r| r.time < t)
    }

    pub fn filtered(&self, keep: impl Fn(&ComparisonRecord) -> bool) -> Self {
        let records: Vec<_> = self.records.iter().copied().filter(|r| keep(r)).collect();
        let mut out = Self::from_records(self.n, records).expect("roster unchanged");
        out.labels.clone_from(&self.labels);
        out.encoding = self.encoding.clone();
        out
    }

    /// Relabels item `k` as `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(KrcError::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        let mut records = Vec::with_capacity(self.records.len());
        for r in &self.records {
            let mut moved = ComparisonRecord::from_bool(perm[r.item_i], perm[r.item_j], r.time, r.j_preferred)?;
            moved.stamp = r.stamp;
            records.push(moved);
        }
        let mut out = Self::from_records(self.n, records)?;
        let mut labels = vec![String::new(); self.n];
        for (k, &p) in perm.iter().enumerate() {
            labels[p].clone_from(&self.labels[k]);
        }
        out.labels = labels;
        out.encoding = self.encoding.clone();
        Ok(out)
    }

    /// Copy with every record time replaced by `map(time)`.
    pub fn retimed(&self, map: impl Fn(f64) -> f64) -> Result<Self> {
        let records = self
            .records
            .iter()
            .map(|r| {
                let t = map(r.time);
                if t.is_finite() {
                    Ok(r.with_time(t))
                } else {
                    Err(KrcError::NonFiniteTime(t))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Self::from_records(self.n, records)?;
        out.labels.clone_from(&self.labels);
        out.encoding = self.encoding.clone();
        Ok(out)
    }
}

/// One strongly connected component of the comparison graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub members: Vec<usize>,
    /// No transition leaves the component (it absorbs the chain).
    pub is_sink: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub strongly_connected: bool,
    pub components: Vec<Component>,
}

impl ConnectivityReport {
    pub fn sinks(&self) -> impl Iterator<Item = &Component> {
        self.components.iter().filter(|c| c.is_sink)
    }
}

/// Strong connectivity of the directed graph with an edge `i -> j` whenever
/// the unregularized kernel transition probability `P_ij(t)` is positive.
pub fn check_strong_connectivity(
    dataset: &ComparisonDataset,
    t: f64,
    h: f64,
    kernel: &Kernel,
) -> Result<ConnectivityReport> {
    if dataset.n() < 2 {
        return Err(KrcError::TooFewItems(dataset.n()));
    }
    check_bandwidth(h)?;
    let mut adjacency = vec![Vec::new(); dataset.n()];
    for pair in dataset.pairs() {
        let (num, den) = pair.kernel_sums(kernel, t, h);
        if den > 0.0 {
            let frac = num / den;
            if frac > 0.0 {
                adjacency[pair.i].push(pair.j);
            }
            if 1.0 - frac > 0.0 {
                adjacency[pair.j].push(pair.i);
            }
        }
    }
    Ok(connectivity_from_adjacency(&adjacency))
}

/// Same report for the time-pooled graph (`i -> j` iff `j` ever beat `i`).
pub fn pooled_connectivity(dataset: &ComparisonDataset) -> ConnectivityReport {
    let mut adjacency = vec![Vec::new(); dataset.n()];
    for pair in dataset.pairs() {
        let j_wins = pair.j_wins();
        if j_wins > 0 {
            adjacency[pair.i].push(pair.j);
        }
        if j_wins < pair.len() {
            adjacency[pair.j].push(pair.i);
        }
    }
    connectivity_from_adjacency(&adjacency)
}

pub fn connectivity_from_adjacency(adjacency: &[Vec<usize>]) -> ConnectivityReport {
    let comp_of = strongly_connected_components(adjacency);
    let count = comp_of.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); count];
    for (v, &c) in comp_of.iter().enumerate() {
        members[c].push(v);
    }
    let mut leaves = vec![false; count];
    for (v, out) in adjacency.iter().enumerate() {
        for &w in out {
            if comp_of[v] != comp_of[w] {
                leaves[comp_of[v]] = true;
            }
        }
    }
    let components = members
        .into_iter()
        .zip(leaves)
        .map(|(members, leaves)| Component {
            members,
            is_sink: !leaves,
        })
        .collect::<Vec<_>>();
    ConnectivityReport {
        strongly_connected: components.len() == 1,
        components,
    }
}

/// Iterative Tarjan; returns the component id of every vertex.
pub fn strongly_connected_components(adjacency: &[Vec<usize>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = adjacency.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    // (vertex, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adjacency[v].get(*pos) {
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ComparisonDataset {
        let mut b = DatasetBuilder::new(RosterPolicy::Open);
        b.push(0.1, "A", "B", 1).unwrap();
        b.push(0.2, "A", "B", 0).unwrap();
        b.push(0.3, "B", "C", 1).unwrap();
        b.build(&TimeEncoding::default()).unwrap()
    }

    #[test]
    fn counts_pairs() {
        let d = toy();
        assert_eq!(d.n(), 3);
        assert_eq!(d.count(0, 1), 2);
        assert_eq!(d.count(1, 0), 2);
        assert_eq!(d.count(1, 2), 1);
        assert_eq!(d.count(0, 2), 0);
        assert_eq!(d.min_pair_count(), 0);
        for p in d.pairs() {
            let ones = p.j_wins();
            assert_eq!(ones + (p.len() - ones), d.count(p.i, p.j));
        }
    }

    #[test]
    fn rejects_self_comparison() {
        let mut b = DatasetBuilder::new(RosterPolicy::Open);
        assert!(matches!(b.push(0.1, "A", "A", 1), Err(KrcError::SelfComparison(_))));
        assert!(matches!(
            ComparisonRecord::new(2, 2, 0.0, 1),
            Err(KrcError::SelfComparison(2))
        ));
    }

    #[test]
    fn rejects_bad_outcomes_and_empty() {
        assert!(matches!(ComparisonRecord::new(0, 1, 0.0, 2), Err(KrcError::InvalidOutcome(_))));
        assert!(matches!(
            DatasetBuilder::new(RosterPolicy::Open).build(&TimeEncoding::default()),
            Err(KrcError::EmptyDataset)
        ));
        assert!(ComparisonRecord::new(0, 1, f64::NAN, 1).is_err());
    }

    #[test]
    fn canonical_form_flips_outcome() {
        let a = ComparisonRecord::new(3, 1, 0.5, 1).unwrap();
        let b = ComparisonRecord::new(1, 3, 0.5, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.item_i(), 1);
        assert_eq!(a.winner(), 1);
        assert_eq!(a.loser(), 3);
    }

    #[test]
    fn strict_roster() {
        let roster = vec!["A".to_string(), "B".to_string()];
        let mut b = DatasetBuilder::new(RosterPolicy::Strict(roster));
        b.push(0.0, "B", "A", 1).unwrap();
        assert!(matches!(b.push(0.0, "A", "Z", 1), Err(KrcError::UnknownLabel(_))));
        let d = b.build(&TimeEncoding::default()).unwrap();
        assert_eq!(d.label(0), "A");
        // B -> A with A preferred: canonical (0, 1) with item 1 (B) losing
        assert_eq!(d.records()[0].winner(), 0);
    }

    #[test]
    fn season_day_encoding() {
        assert_eq!(season_day_time(1, 1, 3), 0.25);
        let mut b = DatasetBuilder::new(RosterPolicy::Open);
        b.push_season_day(1, 1, "A", "B", 1).unwrap();
        b.push_season_day(1, 2, "A", "B", 1).unwrap();
        b.push_season_day(1, 3, "A", "B", 1).unwrap();
        b.push_season_day(2, 5, "A", "B", 0).unwrap();
        b.push_season_day(2, 9, "A", "B", 0).unwrap();
        let d = b
            .build(&TimeEncoding::SeasonDay {
                season_day_counts: None,
            })
            .unwrap();
        let times: Vec<f64> = d.records().iter().map(|r| r.time()).collect();
        assert_eq!(times[0], 0.25);
        assert_eq!(times[2], 0.75);
        // Season 2 has two distinct days: ranks 1 and 2 of 2.
        assert!((times[3] - (1.0 + 1.0 / 3.0)).abs() < 1e-15);
        assert!((times[4] - (1.0 + 2.0 / 3.0)).abs() < 1e-15);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(d.records()[3].stamp(), Some(SeasonDay { season: 2, day: 5 }));
    }

    #[test]
    fn explicit_season_counts() {
        let mut b = DatasetBuilder::new(RosterPolicy::Open);
        b.push_season_day(1, 1, "A", "B", 1).unwrap();
        let enc = TimeEncoding::SeasonDay {
            season_day_counts: Some(vec![3]),
        };
        let d = b.clone().build(&enc).unwrap();
        assert_eq!(d.records()[0].time(), 0.25);
        let enc = TimeEncoding::SeasonDay {
            season_day_counts: Some(vec![]),
        };
        assert!(b.build(&enc).is_err());
    }

    #[test]
    fn unit_rescale() {
        let mut b = DatasetBuilder::new(RosterPolicy::Open);
        b.push(10.0, "A", "B", 1).unwrap();
        b.push(20.0, "A", "B", 1).unwrap();
        b.push(15.0, "B", "C", 0).unwrap();
        let d = b.build(&TimeEncoding::UnitInterval { rescale: true }).unwrap();
        let times: Vec<f64> = d.records().iter().map(|r| r.time()).collect();
        assert_eq!(times, vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn two_cycle_is_connected() {
        let records = vec![
            ComparisonRecord::win(0, 1, 0.5).unwrap(),
            ComparisonRecord::win(1, 0, 0.5).unwrap(),
        ];
        let d = ComparisonDataset::from_records(2, records).unwrap();
        let report = check_strong_connectivity(&d, 0.5, 0.1, &Kernel::gaussian()).unwrap();
        assert!(report.strongly_connected);
    }

    #[test]
    fn unbeaten_item_is_a_sink() {
        // C (2) beats A and B; A and B split.
        let records = vec![
            ComparisonRecord::win(0, 1, 0.5).unwrap(),
            ComparisonRecord::win(1, 0, 0.5).unwrap(),
            ComparisonRecord::win(2, 0, 0.5).unwrap(),
            ComparisonRecord::win(2, 1, 0.5).unwrap(),
        ];
        let d = ComparisonDataset::from_records(3, records).unwrap();
        let report = check_strong_connectivity(&d, 0.5, 0.1, &Kernel::gaussian()).unwrap();
        assert!(!report.strongly_connected);
        let sinks: Vec<_> = report.sinks().collect();
        assert_eq!(sinks.len(), 1);
        assert_eq!(sinks[0].members, vec![2]);
    }

    #[test]
    fn empty_edges_disconnected() {
        let records = vec![ComparisonRecord::win(0, 1, 0.0).unwrap()];
        let d = ComparisonDataset::from_records(3, records).unwrap();
        // boxcar far from the only comparison: no edges at all
        let report = check_strong_connectivity(&d, 5.0, 0.1, &Kernel::boxcar()).unwrap();
        assert!(!report.strongly_connected);
        assert_eq!(report.components.len(), 3);
        let single = ComparisonDataset::from_records(1, vec![]).unwrap();
        assert!(check_strong_connectivity(&single, 0.0, 0.1, &Kernel::boxcar()).is_err());
    }

    #[test]
    fn before_is_strict() {
        let d = toy();
        let early = d.before(0.2);
        assert_eq!(early.len(), 1);
        assert_eq!(early.n(), 3);
        assert_eq!(early.labels(), d.labels());
    }

    #[test]
    fn permutation_relabels() {
        let d = toy();
        let p = d.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.count(2, 0), 2);
        assert_eq!(p.label(2), "A");
        assert_eq!(p.count(0, 1), 1);
    }
}
