//! Linear assignment and the two-round parallel matching mechanism.
//!
//! `hungarian_solve` finds a minimum-cost assignment over the non-forbidden
//! entries of a cost matrix, maximizing cardinality first and breaking cost
//! ties toward the lexicographically smallest pair list. `topic_match` runs
//! appearance-based and motion-based assignment in parallel and resolves
//! conflicting matches by each tracklet's motion level. `baseline_match`
//! provides the single-feature and serial association paradigms for
//! comparison.

use crate::error::{Error, Result};

/// Rectangular cost table with forbidden-pair markers.
///
/// Rows index tracklets, columns index detections. Costs must be finite and
/// non-negative; forbidden entries can never be selected by a solver.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>, // f64::INFINITY encodes FORBIDDEN
}

impl CostMatrix {
    /// All-forbidden matrix of the given shape.
    pub fn forbidden(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![f64::INFINITY; rows * cols],
        }
    }

    /// Matrix with every entry set to `value`.
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(value.is_finite() && value >= 0.0, "invalid cost {value}");
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from row-major data; `None` marks a forbidden pair.
    pub fn from_rows(rows: Vec<Vec<Option<f64>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = CostMatrix::forbidden(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged cost matrix");
            for (j, cell) in row.iter().enumerate() {
                if let Some(v) = cell {
                    m.set(i, j, *v);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, i: usize, j: usize, cost: f64) {
        assert!(
            cost.is_finite() && cost >= 0.0,
            "cost must be finite and non-negative, got {cost}"
        );
        self.data[i * self.cols + j] = cost;
    }

    pub fn set_forbidden(&mut self, i: usize, j: usize) {
        self.data[i * self.cols + j] = f64::INFINITY;
    }

    /// Cost of entry (i, j), or `None` when forbidden.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.data[i * self.cols + j];
        v.is_finite().then_some(v)
    }

    pub fn is_forbidden(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j].is_infinite()
    }

    fn same_shape(&self, other: &CostMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    fn shape_error(&self, other: &CostMatrix) -> Error {
        Error::ShapeMismatch {
            a_rows: self.rows,
            a_cols: self.cols,
            b_rows: other.rows,
            b_cols: other.cols,
        }
    }
}

/// A valid partial assignment between tracklets and detections.
///
/// `pairs` is sorted by tracklet index; together with the unmatched sets it
/// partitions both index ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchSet {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_tracklets: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl MatchSet {
    /// Builds the partition from accepted pairs and the two index ranges.
    fn from_pairs(mut pairs: Vec<(usize, usize)>, n_tracklets: usize, n_detections: usize) -> Self {
        pairs.sort_unstable();
        let mut t_used = vec![false; n_tracklets];
        let mut d_used = vec![false; n_detections];
        for &(i, j) in &pairs {
            debug_assert!(!t_used[i] && !d_used[j], "pair list is not an assignment");
            t_used[i] = true;
            d_used[j] = true;
        }
        MatchSet {
            pairs,
            unmatched_tracklets: (0..n_tracklets).filter(|&i| !t_used[i]).collect(),
            unmatched_detections: (0..n_detections).filter(|&j| !d_used[j]).collect(),
        }
    }

    pub fn empty(n_tracklets: usize, n_detections: usize) -> Self {
        Self::from_pairs(Vec::new(), n_tracklets, n_detections)
    }

    /// Total cost of the selected pairs under `cost`, summed in pair order.
    pub fn total_cost(&self, cost: &CostMatrix) -> f64 {
        self.pairs
            .iter()
            .map(|&(i, j)| cost.get(i, j).expect("matched pair must not be forbidden"))
            .sum()
    }
}

/// Square view used by the solver: real entries plus BIG-valued padding for
/// forbidden pairs and dummy rows/columns.
struct Padded {
    dim: usize,
    big: f64,
    cost: Vec<f64>,
}

impl Padded {
    fn new(m: &CostMatrix) -> Self {
        let dim = m.rows.max(m.cols);
        // Any value strictly above the sum of all finite entries makes the
        // solver maximize real-pair cardinality before minimizing cost.
        let big = m.data.iter().filter(|v| v.is_finite()).sum::<f64>() + 1.0;
        let mut cost = vec![big; dim * dim];
        for i in 0..m.rows {
            for j in 0..m.cols {
                if let Some(v) = m.get(i, j) {
                    cost[i * dim + j] = v;
                }
            }
        }
        Padded { dim, big, cost }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.dim + j]
    }
}

/// Shortest-augmenting-path assignment on the padded square matrix.
/// Returns (row -> col matching, row potentials, col potentials).
fn solve_padded(p: &Padded) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = p.dim;
    // 1-indexed working arrays, classic formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_row = vec![0usize; n + 1]; // row matched to col, 0 = none
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        col_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = p.at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_col = vec![usize::MAX; n];
    for j in 1..=n {
        row_col[col_row[j] - 1] = j - 1;
    }
    let u_out: Vec<f64> = (1..=n).map(|i| u[i]).collect();
    let v_out: Vec<f64> = (1..=n).map(|j| v[j]).collect();
    (row_col, u_out, v_out)
}

/// Rewrites an optimal matching into the lexicographically smallest optimal
/// one. All perfect matchings over the tight edges of the optimal potentials
/// have the same (optimal) total, so the canonical matching is found by
/// greedily forcing, row by row, the smallest tight column that still leaves
/// the rest of the tight graph perfectly matchable.
fn canonicalize(p: &Padded, row_col: &mut [usize], u: &[f64], v: &[f64]) {
    let n = p.dim;
    let tol = 1e-9 * (1.0 + p.big.abs());
    let tight = |i: usize, j: usize| (p.at(i, j) - u[i] - v[j]).abs() <= tol;

    let mut col_row: Vec<Option<usize>> = vec![None; n];
    for (i, &j) in row_col.iter().enumerate() {
        col_row[j] = Some(i);
    }
    let mut locked = vec![false; n];

    fn augment(
        r: usize,
        tight: &dyn Fn(usize, usize) -> bool,
        row_col: &mut [usize],
        col_row: &mut [Option<usize>],
        locked: &[bool],
        visited: &mut [bool],
    ) -> bool {
        for j in 0..col_row.len() {
            if locked[j] || visited[j] || !tight(r, j) {
                continue;
            }
            visited[j] = true;
            let occupant = col_row[j];
            let free = match occupant {
                None => true,
                Some(r2) => augment(r2, tight, row_col, col_row, locked, visited),
            };
            if free {
                row_col[r] = j;
                col_row[j] = Some(r);
                return true;
            }
        }
        false
    }

    for i in 0..n {
        let jcur = row_col[i];
        for j in 0..jcur {
            if locked[j] || !tight(i, j) {
                continue;
            }
            let displaced = col_row[j].expect("matching is perfect");
            // Tentatively take (i, j); the displaced row must re-match within
            // the tight graph, with jcur now free.
            row_col[i] = j;
            col_row[j] = Some(i);
            col_row[jcur] = None;
            let mut visited = vec![false; n];
            visited[j] = true;
            if augment(displaced, &tight, row_col, &mut col_row, &locked, &mut visited) {
                break;
            }
            // Revert.
            row_col[i] = jcur;
            col_row[jcur] = Some(i);
            col_row[j] = Some(displaced);
            row_col[displaced] = j;
        }
        locked[row_col[i]] = true;
    }
}

/// Minimum-cost assignment over non-forbidden entries.
///
/// Maximizes cardinality first, then minimizes total cost; equal-cost optima
/// resolve to the lowest (tracklet, detection) pair list lexicographically.
/// Empty matrices yield an empty match set.
pub fn hungarian_solve(cost: &CostMatrix) -> MatchSet {
    if cost.rows == 0 || cost.cols == 0 {
        return MatchSet::empty(cost.rows, cost.cols);
    }
    let padded = Padded::new(cost);
    let (mut row_col, u, v) = solve_padded(&padded);
    canonicalize(&padded, &mut row_col, &u, &v);

    let mut pairs = Vec::new();
    for i in 0..cost.rows {
        let j = row_col[i];
        if j < cost.cols && !cost.is_forbidden(i, j) {
            pairs.push((i, j));
        }
    }
    MatchSet::from_pairs(pairs, cost.rows, cost.cols)
}

/// How a conflicted match was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Appearance,
    Motion,
}

/// One conflict between candidate pairs, keyed by the tracklet whose motion
/// level decides it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictRecord {
    /// Deciding tracklet: the conflicted tracklet itself, or, for a
    /// detection-side collision between two tracklets, the one holding the
    /// motion pair (its motion level is what the threshold judges).
    pub tracklet: usize,
    pub appearance_pair: Option<(usize, usize)>,
    pub motion_pair: Option<(usize, usize)>,
    pub resolution: Resolution,
}

/// Result of the two-round parallel matching.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicOutcome {
    pub matches: MatchSet,
    /// Conflicts resolved through the motion-level rule.
    pub conflicts: Vec<ConflictRecord>,
    /// Distinct candidate pairs proposed by the two pre-matching rounds.
    pub candidate_pairs: usize,
    /// Candidate pairs that participated in at least one conflict.
    pub conflicted_pairs: usize,
}

impl TopicOutcome {
    pub fn appearance_resolutions(&self) -> usize {
        self.conflicts
            .iter()
            .filter(|c| c.resolution == Resolution::Appearance)
            .count()
    }

    pub fn motion_resolutions(&self) -> usize {
        self.conflicts
            .iter()
            .filter(|c| c.resolution == Resolution::Motion)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Candidate {
    tracklet: usize,
    detection: usize,
    from_appearance: bool,
}

/// Two-round parallel matching.
///
/// Round one solves the appearance and motion cost matrices independently.
/// Pairs found by both metrics are accepted outright; pairs found by exactly
/// one metric and free of any endpoint contention are accepted as the union
/// behavior of the parallel paradigm. Round two walks the remaining
/// conflicts in ascending tracklet order: a conflict resolves to its
/// appearance pair when the deciding tracklet's motion level reaches `alpha`
/// (always at `alpha` = 0, never at `alpha` = 1), and to its motion pair
/// otherwise; each acceptance invalidates every other candidate touching the
/// accepted tracklet or detection.
pub fn topic_match(
    motion_levels: &[f64],
    a_cost: &CostMatrix,
    m_cost: &CostMatrix,
    alpha: f64,
) -> Result<TopicOutcome> {
    if !a_cost.same_shape(m_cost) {
        return Err(a_cost.shape_error(m_cost));
    }
    if motion_levels.len() != a_cost.rows() {
        return Err(Error::ShapeMismatch {
            a_rows: motion_levels.len(),
            a_cols: 0,
            b_rows: a_cost.rows(),
            b_cols: a_cost.cols(),
        });
    }
    let (n, m) = (a_cost.rows(), a_cost.cols());
    let match_a = hungarian_solve(a_cost);
    let match_m = hungarian_solve(m_cost);
    let outcome = resolve_parallel(motion_levels, &match_a, &match_m, alpha, n, m);
    Ok(outcome)
}

fn resolve_parallel(
    motion_levels: &[f64],
    match_a: &MatchSet,
    match_m: &MatchSet,
    alpha: f64,
    n: usize,
    m: usize,
) -> TopicOutcome {
    let a_set: std::collections::BTreeSet<(usize, usize)> =
        match_a.pairs.iter().copied().collect();
    let m_set: std::collections::BTreeSet<(usize, usize)> =
        match_m.pairs.iter().copied().collect();

    let mut accepted: Vec<(usize, usize)> = a_set.intersection(&m_set).copied().collect();

    let mut live: Vec<Candidate> = Vec::new();
    for &(i, j) in a_set.difference(&m_set) {
        live.push(Candidate {
            tracklet: i,
            detection: j,
            from_appearance: true,
        });
    }
    for &(i, j) in m_set.difference(&a_set) {
        live.push(Candidate {
            tracklet: i,
            detection: j,
            from_appearance: false,
        });
    }
    live.sort_unstable_by_key(|c| (c.tracklet, c.detection, !c.from_appearance));

    let (candidate_pairs, conflicted_pairs) = candidate_conflict_counts(match_a, match_m);

    let mut conflicts: Vec<ConflictRecord> = Vec::new();
    loop {
        // Accept candidates free of endpoint contention (union behavior).
        let mut i = 0;
        while i < live.len() {
            let c = live[i];
            let contended = live.iter().any(|o| {
                (o.tracklet, o.detection, o.from_appearance)
                    != (c.tracklet, c.detection, c.from_appearance)
                    && (o.tracklet == c.tracklet || o.detection == c.detection)
            });
            if contended {
                i += 1;
            } else {
                accepted.push((c.tracklet, c.detection));
                live.swap_remove(i);
            }
        }
        if live.is_empty() {
            break;
        }

        // Every remaining candidate conflicts with another; pick the
        // lowest-keyed conflict (tracklet-side before detection-side on
        // ties). The deciding level belongs to the motion pair's tracklet.
        let record = next_conflict(&live);
        let level = motion_levels[record.0];
        let pick_appearance = alpha < 1.0 && level >= alpha;
        let chosen = if pick_appearance {
            record.1.expect("appearance side present")
        } else {
            record.2.expect("motion side present")
        };
        conflicts.push(ConflictRecord {
            tracklet: record.0,
            appearance_pair: record.1,
            motion_pair: record.2,
            resolution: if pick_appearance {
                Resolution::Appearance
            } else {
                Resolution::Motion
            },
        });
        accepted.push(chosen);
        live.retain(|c| c.tracklet != chosen.0 && c.detection != chosen.1);
    }

    TopicOutcome {
        matches: MatchSet::from_pairs(accepted, n, m),
        conflicts,
        candidate_pairs,
        conflicted_pairs,
    }
}

/// Finds the next conflict to resolve: (deciding tracklet, appearance pair,
/// motion pair). Both sides are guaranteed present. Conflicts are ordered by
/// the lower involved tracklet (tracklet-side collisions first on ties); the
/// deciding tracklet is the one whose motion claim is being judged: the
/// shared tracklet for a tracklet-side conflict, the motion pair's tracklet
/// for a detection-side one.
fn next_conflict(live: &[Candidate]) -> (usize, Option<(usize, usize)>, Option<(usize, usize)>) {
    let mut best: Option<(usize, u8, usize, (usize, usize), (usize, usize))> = None;
    for a in live.iter().filter(|c| c.from_appearance) {
        for m in live.iter().filter(|c| !c.from_appearance) {
            let key = if a.tracklet == m.tracklet {
                Some((a.tracklet, 0u8, 0usize))
            } else if a.detection == m.detection {
                Some((a.tracklet.min(m.tracklet), 1u8, a.detection))
            } else {
                None
            };
            if let Some((k, kind, det)) = key {
                let entry = (
                    k,
                    kind,
                    det,
                    (a.tracklet, a.detection),
                    (m.tracklet, m.detection),
                );
                if best.is_none() || entry < best.unwrap() {
                    best = Some(entry);
                }
            }
        }
    }
    let (_, _, _, app, mot) = best.expect("live candidates must contain a conflict");
    (mot.0, Some(app), Some(mot))
}

fn candidate_conflict_counts(match_a: &MatchSet, match_m: &MatchSet) -> (usize, usize) {
    let union: std::collections::BTreeSet<(usize, usize)> = match_a
        .pairs
        .iter()
        .chain(match_m.pairs.iter())
        .copied()
        .collect();
    let conflicted = union
        .iter()
        .filter(|&&(i, j)| {
            union
                .iter()
                .any(|&(i2, j2)| (i2, j2) != (i, j) && (i2 == i || j2 == j))
        })
        .count();
    (union.len(), conflicted)
}

/// Fraction of candidate pairs (union of both pre-matchings) that participate
/// in a conflict. Zero when the match sets agree or are empty.
pub fn conflict_rate(match_a: &MatchSet, match_m: &MatchSet) -> f64 {
    let (total, conflicted) = candidate_conflict_counts(match_a, match_m);
    if total == 0 {
        0.0
    } else {
        conflicted as f64 / total as f64
    }
}

/// Association paradigm selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Paradigm {
    Topic,
    MotionOnly,
    AppearanceOnly,
    SerialMotionPrimary,
    SerialAppearancePrimary,
}

impl Paradigm {
    pub fn uses_appearance(self) -> bool {
        !matches!(self, Paradigm::MotionOnly)
    }

    pub fn uses_motion(self) -> bool {
        !matches!(self, Paradigm::AppearanceOnly)
    }

    pub fn name(self) -> &'static str {
        match self {
            Paradigm::Topic => "topic",
            Paradigm::MotionOnly => "motion_only",
            Paradigm::AppearanceOnly => "appearance_only",
            Paradigm::SerialMotionPrimary => "serial_motion_primary",
            Paradigm::SerialAppearancePrimary => "serial_appearance_primary",
        }
    }

    /// Accepts both snake_case tokens and the CamelCase variant names.
    pub fn parse(s: &str) -> Option<Paradigm> {
        match s {
            "topic" | "Topic" => Some(Paradigm::Topic),
            "motion_only" | "MotionOnly" => Some(Paradigm::MotionOnly),
            "appearance_only" | "AppearanceOnly" => Some(Paradigm::AppearanceOnly),
            "serial_motion_primary" | "SerialMotionPrimary" => Some(Paradigm::SerialMotionPrimary),
            "serial_appearance_primary" | "SerialAppearancePrimary" => {
                Some(Paradigm::SerialAppearancePrimary)
            }
            _ => None,
        }
    }
}

/// Single-feature and serial association baselines.
///
/// Single-feature paradigms solve the corresponding matrix directly. Serial
/// paradigms first forbid, in the primary matrix, every pair whose
/// secondary-feature cost exceeds `filter_gate` (forbidden secondary entries
/// count as infinite cost), then solve the primary matrix.
pub fn baseline_match(
    paradigm: Paradigm,
    a_cost: Option<&CostMatrix>,
    m_cost: Option<&CostMatrix>,
    filter_gate: f64,
) -> Result<MatchSet> {
    fn need<'a>(
        m: Option<&'a CostMatrix>,
        paradigm: Paradigm,
        which: &str,
    ) -> Result<&'a CostMatrix> {
        m.ok_or_else(|| Error::InvalidScenario {
            reason: format!("paradigm {} requires the {which} cost matrix", paradigm.name()),
        })
    }
    match paradigm {
        Paradigm::MotionOnly => Ok(hungarian_solve(need(m_cost, paradigm, "motion")?)),
        Paradigm::AppearanceOnly => Ok(hungarian_solve(need(a_cost, paradigm, "appearance")?)),
        Paradigm::SerialMotionPrimary => {
            let primary = need(m_cost, paradigm, "motion")?;
            let secondary = need(a_cost, paradigm, "appearance")?;
            Ok(hungarian_solve(&serial_filter(primary, secondary, filter_gate)?))
        }
        Paradigm::SerialAppearancePrimary => {
            let primary = need(a_cost, paradigm, "appearance")?;
            let secondary = need(m_cost, paradigm, "motion")?;
            Ok(hungarian_solve(&serial_filter(primary, secondary, filter_gate)?))
        }
        Paradigm::Topic => Err(Error::InvalidScenario {
            reason: "topic paradigm is handled by topic_match".into(),
        }),
    }
}

fn serial_filter(
    primary: &CostMatrix,
    secondary: &CostMatrix,
    filter_gate: f64,
) -> Result<CostMatrix> {
    if !primary.same_shape(secondary) {
        return Err(primary.shape_error(secondary));
    }
    let mut filtered = primary.clone();
    for i in 0..primary.rows() {
        for j in 0..primary.cols() {
            let sec = secondary.get(i, j).unwrap_or(f64::INFINITY);
            if sec > filter_gate {
                filtered.set_forbidden(i, j);
            }
        }
    }
    Ok(filtered)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> CostMatrix {
        CostMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Some(v)).collect())
                .collect(),
        )
    }

    #[test]
    fn hungarian_diagonal_optimum() {
        let m = mat(&[&[0.0, 9.0], &[9.0, 0.0]]);
        assert_eq!(hungarian_solve(&m).pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn hungarian_total_two() {
        let m = mat(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let sol = hungarian_solve(&m);
        assert_eq!(sol.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(sol.total_cost(&m), 2.0);
    }

    #[test]
    fn hungarian_rectangular() {
        let m = mat(&[&[5.0, 1.0, 9.0], &[1.0, 5.0, 9.0]]);
        let sol = hungarian_solve(&m);
        assert_eq!(sol.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(sol.unmatched_detections, vec![2]);
        assert!(sol.unmatched_tracklets.is_empty());
    }

    #[test]
    fn hungarian_empty() {
        let sol = hungarian_solve(&CostMatrix::forbidden(0, 3));
        assert!(sol.pairs.is_empty());
        assert_eq!(sol.unmatched_detections, vec![0, 1, 2]);
    }

    #[test]
    fn hungarian_all_forbidden() {
        let sol = hungarian_solve(&CostMatrix::forbidden(2, 2));
        assert!(sol.pairs.is_empty());
        assert_eq!(sol.unmatched_tracklets, vec![0, 1]);
        assert_eq!(sol.unmatched_detections, vec![0, 1]);
    }

    #[test]
    fn hungarian_prefers_cardinality_over_cost() {
        // Matching both rows costs 10; leaving row 1 unmatched would cost 0.1.
        let mut m = CostMatrix::forbidden(2, 2);
        m.set(0, 0, 0.1);
        m.set(0, 1, 5.0);
        m.set(1, 0, 5.0);
        let sol = hungarian_solve(&m);
        assert_eq!(sol.pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn hungarian_lexicographic_ties() {
        // All-equal costs: every permutation is optimal; expect the diagonal.
        let m = CostMatrix::filled(3, 3, 0.5);
        assert_eq!(hungarian_solve(&m).pairs, vec![(0, 0), (1, 1), (2, 2)]);

        // Two optimal solutions of total 1: {(0,0),(1,1)} and {(0,1),(1,0)}.
        let m = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(hungarian_solve(&m).pairs, vec![(0, 0), (1, 1)]);
        let m = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        // Lexicographic preference picks (0,0)+(1,1) over (0,1)+(1,0): both
        // total 2? No: (0,0)+(1,1) totals 2, (0,1)+(1,0) totals 0 -> optimum.
        assert_eq!(hungarian_solve(&m).pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn topic_agreement_passthrough() {
        let a = mat(&[&[0.0, 9.0], &[9.0, 0.0]]);
        let out = topic_match(&[0.5, 0.5], &a, &a, 0.5).unwrap();
        assert_eq!(out.matches.pairs, vec![(0, 0), (1, 1)]);
        assert!(out.conflicts.is_empty());
        assert_eq!(out.conflicted_pairs, 0);
    }

    #[test]
    fn topic_spec_trace() {
        // Appearance prefers the diagonal, motion the anti-diagonal.
        let a = mat(&[&[0.0, 9.0], &[9.0, 0.0]]);
        let m = mat(&[&[9.0, 0.0], &[0.0, 9.0]]);
        let out = topic_match(&[0.9, 0.1], &a, &m, 0.5).unwrap();
        assert_eq!(out.matches.pairs, vec![(0, 0), (1, 1)]);
        // Tracklet 0's conflict is the only one resolved through the rule;
        // tracklet 1's motion pair was displaced and its appearance pair
        // survives as a singleton.
        assert_eq!(out.conflicts.len(), 1);
        assert_eq!(out.conflicts[0].tracklet, 0);
        assert_eq!(out.conflicts[0].resolution, Resolution::Appearance);
        assert!(out.matches.unmatched_tracklets.is_empty());
        assert!(out.matches.unmatched_detections.is_empty());
    }

    #[test]
    fn topic_alpha_degeneracy() {
        let a = mat(&[&[0.0, 9.0], &[9.0, 0.0]]);
        let m = mat(&[&[9.0, 0.0], &[0.0, 9.0]]);
        for levels in [[0.0, 0.0], [1.0, 1.0], [0.3, 0.8]] {
            let out0 = topic_match(&levels, &a, &m, 0.0).unwrap();
            assert_eq!(out0.motion_resolutions(), 0);
            assert_eq!(out0.appearance_resolutions(), out0.conflicts.len());
            let out1 = topic_match(&levels, &a, &m, 1.0).unwrap();
            assert_eq!(out1.appearance_resolutions(), 0);
            assert_eq!(out1.motion_resolutions(), out1.conflicts.len());
        }
    }

    #[test]
    fn topic_shape_mismatch() {
        let a = mat(&[&[0.0, 9.0], &[9.0, 0.0]]);
        let m = mat(&[&[0.0]]);
        assert!(topic_match(&[0.5, 0.5], &a, &m, 0.5).is_err());
    }

    #[test]
    fn topic_detection_side_conflict() {
        // Tracklet 0 matched by appearance only, tracklet 1 by motion only,
        // both to detection 0. The motion claimant's level decides.
        let mut a = CostMatrix::forbidden(2, 1);
        a.set(0, 0, 0.1);
        let mut m = CostMatrix::forbidden(2, 1);
        m.set(1, 0, 0.1);
        // Motion tracklet moving fast (level 0.9): its motion claim is not
        // trusted, the appearance pair takes the detection.
        let out = topic_match(&[0.0, 0.9], &a, &m, 0.5).unwrap();
        assert_eq!(out.matches.pairs, vec![(0, 0)]);
        assert_eq!(out.conflicts[0].tracklet, 1);
        // Motion tracklet nearly static (level 0.1): motion wins.
        let out = topic_match(&[0.9, 0.1], &a, &m, 0.5).unwrap();
        assert_eq!(out.matches.pairs, vec![(1, 0)]);
    }

    #[test]
    fn conflict_rate_cases() {
        let ms = |pairs: Vec<(usize, usize)>, n, m| MatchSet::from_pairs(pairs, n, m);
        // Identical match sets: zero.
        let a = ms(vec![(0, 0), (1, 1)], 2, 2);
        assert_eq!(conflict_rate(&a, &a.clone()), 0.0);
        // Fully swapped: every pair conflicted.
        let b = ms(vec![(0, 1), (1, 0)], 2, 2);
        assert_eq!(conflict_rate(&a, &b), 1.0);
        // Two of three distinct pairs conflicted.
        let c = ms(vec![(0, 0), (1, 2)], 2, 3);
        let d = ms(vec![(0, 0), (1, 1)], 2, 3);
        assert!((conflict_rate(&d, &c) - 2.0 / 3.0).abs() < 1e-12);
        // Empty.
        let e = ms(vec![], 0, 0);
        assert_eq!(conflict_rate(&e, &e.clone()), 0.0);
    }

    #[test]
    fn baseline_motion_only_equals_hungarian() {
        let m = mat(&[&[0.2, 0.9], &[0.8, 0.1]]);
        let sol = baseline_match(Paradigm::MotionOnly, None, Some(&m), 0.5).unwrap();
        assert_eq!(sol, hungarian_solve(&m));
    }

    #[test]
    fn baseline_serial_vacuous_gate() {
        let a = mat(&[&[0.2, 0.9], &[0.8, 0.1]]);
        let m = mat(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let serial =
            baseline_match(Paradigm::SerialAppearancePrimary, Some(&a), Some(&m), f64::INFINITY)
                .unwrap();
        let single = baseline_match(Paradigm::AppearanceOnly, Some(&a), None, 0.0).unwrap();
        assert_eq!(serial, single);
    }

    #[test]
    fn baseline_serial_filters() {
        let a = mat(&[&[0.1, 0.2], &[0.2, 0.1]]);
        let mut m = CostMatrix::filled(2, 2, 0.9);
        m.set(0, 1, 0.1);
        m.set(1, 0, 0.1);
        // Appearance primary, motion secondary with gate 0.5: the diagonal is
        // filtered away, forcing the anti-diagonal.
        let sol = baseline_match(Paradigm::SerialAppearancePrimary, Some(&a), Some(&m), 0.5)
            .unwrap();
        assert_eq!(sol.pairs, vec![(0, 1), (1, 0)]);
    }
}
