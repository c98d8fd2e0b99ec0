//! The statistic `tau` on down-skip-free strings and its combinatorics.
//!
//! A string `a_1 .. a_n` over the naturals is down-skip-free when no step
//! drops by more than one. Its zero-adjusted increments are
//!
//! ```text
//! i_j = a_{j+1} - a_j + (1 - [a_j == 0]),   j = 1 .. n-1
//! ```
//!
//! i.e. the number of arrivals during the `(j+1)`-st service. `tau` keeps the
//! length, the initial symbol, the number of zeros and the multiset of
//! increments. Two strings are `tau`-equivalent when these agree; they then
//! have the same likelihood under every homogeneous delta matrix.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default bound on the string length accepted by [`count_tau_class`].
pub const DEFAULT_CLASS_LENGTH_BOUND: usize = 10;

/// A non-empty down-skip-free string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DssString(Vec<u64>);

impl DssString {
    pub fn new(symbols: Vec<u64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyInput("down-skip-free string"));
        }
        if let Some(p) = first_down_skip(&symbols) {
            return Err(Error::NotDownSkipFree { position: p, from: symbols[p], to: symbols[p + 1] });
        }
        Ok(Self(symbols))
    }

    pub fn symbols(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> u64 {
        self.0[0]
    }

    pub fn last(&self) -> u64 {
        self.0[self.0.len() - 1]
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }

    /// Concatenation, if it stays down-skip-free.
    pub fn concat(&self, other: &DssString) -> Option<DssString> {
        if self.last() > other.first() + 1 {
            return None;
        }
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Some(DssString(v))
    }

    /// Zero-adjusted increments in order of occurrence.
    pub fn increments(&self) -> Vec<u64> {
        increments(&self.0)
    }

    pub fn tau(&self) -> TauSummary {
        tau(self)
    }
}

impl fmt::Display for DssString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
        } else {
            for (i, s) in self.0.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{s}")?;
            }
        }
        Ok(())
    }
}

/// Accepts either a run of single digits (`100234543`) or comma-separated
/// naturals (`10,11,12`).
impl FromStr for DssString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let symbols = if s.contains(',') {
            s.split(',')
                .map(|p| p.trim().parse::<u64>().map_err(|_| Error::InvalidParameter(format!("bad symbol {p:?}"))))
                .collect::<Result<Vec<_>>>()?
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10).map(u64::from).ok_or_else(|| Error::InvalidParameter(format!("bad symbol {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        DssString::new(symbols)
    }
}

fn first_down_skip(symbols: &[u64]) -> Option<usize> {
    symbols.windows(2).position(|w| w[0] > w[1] + 1)
}

/// True iff no step of `symbols` drops by more than one.
pub fn is_down_skip_free(symbols: &[u64]) -> Result<bool> {
    if symbols.is_empty() {
        return Err(Error::EmptyInput("symbol sequence"));
    }
    Ok(first_down_skip(symbols).is_none())
}

/// Zero-adjusted increment of the step `from -> to`. Requires `to + 1 >= from`.
#[inline]
pub fn zero_adjusted_increment(from: u64, to: u64) -> u64 {
    to + u64::from(from > 0) - from
}

pub(crate) fn increments(symbols: &[u64]) -> Vec<u64> {
    symbols.windows(2).map(|w| zero_adjusted_increment(w[0], w[1])).collect()
}

/// Value of the statistic `tau` on one string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TauSummary {
    pub length: usize,
    pub initial: u64,
    pub zero_count: usize,
    /// `increments[r]` is the number of increments equal to `r`; no
    /// trailing zeros, so equal multisets compare equal.
    increments: Vec<usize>,
}

impl TauSummary {
    pub fn increment_count(&self, r: u64) -> usize {
        usize::try_from(r).ok().and_then(|r| self.increments.get(r)).copied().unwrap_or(0)
    }

    /// Non-zero increment counts as `(r, count)`.
    pub fn increment_counts(&self) -> impl Iterator<Item = (u64, usize)> + '_ {
        self.increments.iter().enumerate().filter(|(_, &c)| c > 0).map(|(r, &c)| (r as u64, c))
    }

    pub fn increments_map(&self) -> BTreeMap<u64, usize> {
        self.increment_counts().collect()
    }

    pub fn total_increments(&self) -> usize {
        self.increments.iter().sum()
    }

    /// `tau` without the zero count.
    pub fn tilde(&self) -> (u64, &[usize]) {
        (self.initial, &self.increments)
    }
}

/// Computes `tau` of a down-skip-free string.
pub fn tau(s: &DssString) -> TauSummary {
    let symbols = s.symbols();
    let mut counts: Vec<usize> = Vec::new();
    for w in symbols.windows(2) {
        let r = zero_adjusted_increment(w[0], w[1]) as usize;
        if r >= counts.len() {
            counts.resize(r + 1, 0);
        }
        counts[r] += 1;
    }
    TauSummary {
        length: symbols.len(),
        initial: symbols[0],
        zero_count: symbols.iter().filter(|&&a| a == 0).count(),
        increments: counts,
    }
}

/// `tau`-equivalence; strings of different length are never equivalent.
pub fn tau_equiv(x: &DssString, y: &DssString) -> bool {
    x.len() == y.len() && tau(x) == tau(y)
}

/// Equivalence under `tau` stripped of the zero count.
pub fn tau_tilde_equiv(x: &DssString, y: &DssString) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let (tx, ty) = (tau(x), tau(y));
    tx.tilde() == ty.tilde()
}

/// Initial symbol and transition counts `t_rs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransitionCounts {
    pub initial: u64,
    pub length: usize,
    pub counts: BTreeMap<(u64, u64), usize>,
}

pub fn transition_counts(s: &DssString) -> TransitionCounts {
    let mut counts = BTreeMap::new();
    for w in s.symbols().windows(2) {
        *counts.entry((w[0], w[1])).or_insert(0) += 1;
    }
    TransitionCounts { initial: s.first(), length: s.len(), counts }
}

pub fn t_equiv(x: &DssString, y: &DssString) -> bool {
    transition_counts(x) == transition_counts(y)
}

/// Checks both clauses of the terminal-state lemma on a `tau`-equivalent
/// pair: terminal symbols are jointly in `{0, 1}` or jointly equal.
pub fn check_terminal_lemma(x: &DssString, y: &DssString) -> Result<bool> {
    if !tau_equiv(x, y) {
        return Err(Error::InvalidParameter(format!("{x} and {y} are not tau-equivalent")));
    }
    let (a, b) = (x.last(), y.last());
    let low = |v: u64| v <= 1;
    let clause_i = low(a) == low(b);
    let clause_ii = (a <= 1 || a == b) && (b <= 1 || a == b);
    Ok(clause_i && clause_ii)
}

/// Closure of `tau`-classes under concatenation: with `a ~ b`, `x ~ y` and both
/// `ax`, `by` down-skip-free, returns whether `ax ~ by`.
pub fn check_s_structure(a: &DssString, b: &DssString, x: &DssString, y: &DssString) -> Result<bool> {
    if !tau_equiv(a, b) || !tau_equiv(x, y) {
        return Err(Error::InvalidParameter("pieces are not pairwise tau-equivalent".into()));
    }
    match (a.concat(x), b.concat(y)) {
        (Some(ax), Some(by)) => Ok(tau_equiv(&ax, &by)),
        _ => Err(Error::InvalidParameter("concatenation leaves the down-skip-free space".into())),
    }
}

/// Departure and arrival counts over the observation window of two strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowComparison {
    pub departures: [usize; 2],
    pub arrivals: [u64; 2],
}

impl FlowComparison {
    pub fn departures_equal(&self) -> bool {
        self.departures[0] == self.departures[1]
    }

    pub fn arrivals_equal(&self) -> bool {
        self.arrivals[0] == self.arrivals[1]
    }
}

/// Customers arriving between the first and last observed departure: every
/// increment counts arrivals during a service, and each service started from
/// an empty system adds the arrival that opened it.
pub fn arrivals_in_window(s: &DssString) -> u64 {
    let symbols = s.symbols();
    let increments: u64 = increments(symbols).iter().sum();
    let idle_starts = symbols[..symbols.len() - 1].iter().filter(|&&a| a == 0).count() as u64;
    increments + idle_starts
}

pub fn departures_invariant_check(x: &DssString, y: &DssString) -> Result<FlowComparison> {
    if !tau_equiv(x, y) {
        return Err(Error::InvalidParameter(format!("{x} and {y} are not tau-equivalent")));
    }
    Ok(FlowComparison {
        departures: [x.len() - 1, y.len() - 1],
        arrivals: [arrivals_in_window(x), arrivals_in_window(y)],
    })
}

/// Rewrites that preserve `tau`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transformation {
    /// Swap the adjacent blocks `s[start..mid]` and `s[mid..end]`. Both blocks
    /// must begin with the same symbol and end with the same symbol, or one
    /// must end in 0 and the other in 1.
    SwitchBlocks { start: usize, mid: usize, end: usize },
    /// Reorder the increments `i[start..start + perm.len()]`, all of which must
    /// be positive, so that position `k` receives `i[start + perm[k]]`.
    PermuteIncrements { start: usize, perm: Vec<usize> },
}

fn apply_one(symbols: &[u64], t: &Transformation) -> Result<Vec<u64>> {
    match t {
        Transformation::SwitchBlocks { start, mid, end } => {
            let (start, mid, end) = (*start, *mid, *end);
            if !(start < mid && mid < end && end <= symbols.len()) {
                return Err(Error::InvalidTransformation(format!(
                    "block bounds {start}..{mid}..{end} invalid for length {}",
                    symbols.len()
                )));
            }
            if symbols[start] != symbols[mid] {
                return Err(Error::InvalidTransformation("blocks start with different symbols".into()));
            }
            let (e1, e2) = (symbols[mid - 1], symbols[end - 1]);
            if !(e1 == e2 || (e1 <= 1 && e2 <= 1)) {
                return Err(Error::InvalidTransformation(format!("block endings {e1} and {e2} are incompatible")));
            }
            let mut out = Vec::with_capacity(symbols.len());
            out.extend_from_slice(&symbols[..start]);
            out.extend_from_slice(&symbols[mid..end]);
            out.extend_from_slice(&symbols[start..mid]);
            out.extend_from_slice(&symbols[end..]);
            Ok(out)
        }
        Transformation::PermuteIncrements { start, perm } => {
            let inc = increments(symbols);
            let (start, k) = (*start, perm.len());
            if start + k > inc.len() {
                return Err(Error::InvalidTransformation(format!(
                    "increment run {start}..{} exceeds {} increments",
                    start + k,
                    inc.len()
                )));
            }
            let mut seen = vec![false; k];
            for &p in perm {
                if p >= k || std::mem::replace(&mut seen[p], true) {
                    return Err(Error::InvalidTransformation(format!("{perm:?} is not a permutation")));
                }
            }
            let run = &inc[start..start + k];
            if run.contains(&0) {
                return Err(Error::InvalidTransformation("increment run contains a zero increment".into()));
            }
            let mut out = symbols.to_vec();
            for (offset, &p) in perm.iter().enumerate() {
                let j = start + offset;
                let from = out[j];
                // from + r - 1 (or r from an empty system) stays >= 0 for r >= 1
                out[j + 1] = from + run[p] - u64::from(from > 0);
            }
            Ok(out)
        }
    }
}

/// Applies the rewrites in order; every intermediate must stay down-skip-free.
pub fn apply_transformations(s: &DssString, spec: &[Transformation]) -> Result<DssString> {
    let mut symbols = s.symbols().to_vec();
    for t in spec {
        symbols = apply_one(&symbols, t)?;
        if first_down_skip(&symbols).is_some() {
            return Err(Error::InvalidTransformation(format!("{t:?} leaves the down-skip-free space")));
        }
    }
    Ok(DssString(symbols))
}

/// Every single rewrite applicable to `s`. Increment permutations are
/// generated as adjacent transpositions, which generate all permutations of
/// a positive run.
pub fn admissible_transformations(s: &DssString) -> Vec<Transformation> {
    let symbols = s.symbols();
    let n = symbols.len();
    let mut out = Vec::new();
    for start in 0..n {
        for mid in start + 1..n {
            if symbols[mid] != symbols[start] {
                continue;
            }
            for end in mid + 1..=n {
                let t = Transformation::SwitchBlocks { start, mid, end };
                if apply_transformations(s, std::slice::from_ref(&t)).is_ok() {
                    out.push(t);
                }
            }
        }
    }
    let inc = s.increments();
    for start in 0..inc.len().saturating_sub(1) {
        if inc[start] > 0 && inc[start + 1] > 0 && inc[start] != inc[start + 1] {
            out.push(Transformation::PermuteIncrements { start, perm: vec![1, 0] });
        }
    }
    out
}

/// All strings reachable from `s` by repeated admissible rewrites (including `s`).
pub fn transformation_orbit(s: &DssString) -> BTreeSet<DssString> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(s.clone());
    queue.push_back(s.clone());
    while let Some(cur) = queue.pop_front() {
        for t in admissible_transformations(&cur) {
            let next = apply_transformations(&cur, std::slice::from_ref(&t)).expect("admissible rewrite");
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Exact size of the `tau`-class of `s` among strings with symbols `<= max_state`.
///
/// Depth-first search from the initial symbol, spending the increment
/// multiset and the zero budget of `s`.
pub fn count_tau_class(s: &DssString, max_state: u64) -> Result<u64> {
    count_tau_class_bounded(s, max_state, DEFAULT_CLASS_LENGTH_BOUND)
}

pub fn count_tau_class_bounded(s: &DssString, max_state: u64, length_bound: usize) -> Result<u64> {
    if s.len() > length_bound {
        return Err(Error::InvalidParameter(format!(
            "string length {} exceeds the exhaustive bound {length_bound}",
            s.len()
        )));
    }
    if s.symbols().iter().any(|&a| a > max_state) {
        return Err(Error::InvalidParameter(format!("{s} has symbols above max_state {max_state}")));
    }
    let target = tau(s);
    let mut remaining: Vec<usize> = (0..=max_state + 1).map(|r| target.increment_count(r)).collect();
    if target.total_increments() != remaining.iter().sum::<usize>() {
        // an increment larger than max_state + 1 cannot occur below max_state
        return Ok(0);
    }

    struct Search<'a> {
        remaining: &'a mut Vec<usize>,
        max_state: u64,
        zeros_target: usize,
    }

    impl Search<'_> {
        fn go(&mut self, cur: u64, steps_left: usize, zeros: usize) -> u64 {
            if zeros > self.zeros_target {
                return 0;
            }
            if steps_left == 0 {
                return u64::from(zeros == self.zeros_target);
            }
            let lo = cur.saturating_sub(1);
            let mut total = 0;
            for next in lo..=self.max_state {
                let r = zero_adjusted_increment(cur, next) as usize;
                if r >= self.remaining.len() || self.remaining[r] == 0 {
                    continue;
                }
                self.remaining[r] -= 1;
                total += self.go(next, steps_left - 1, zeros + usize::from(next == 0));
                self.remaining[r] += 1;
            }
            total
        }
    }

    let mut search = Search { remaining: &mut remaining, max_state, zeros_target: target.zero_count };
    Ok(search.go(s.first(), s.len() - 1, usize::from(s.first() == 0)))
}

/// Every down-skip-free string of length `len` with symbols in `0..=max_state`,
/// in lexicographic order.
pub fn enumerate_dss(len: usize, max_state: u64) -> Vec<DssString> {
    fn extend(prefix: &mut Vec<u64>, len: usize, max_state: u64, out: &mut Vec<DssString>) {
        if prefix.len() == len {
            out.push(DssString(prefix.clone()));
            return;
        }
        let lo = prefix.last().map_or(0, |&p| p.saturating_sub(1));
        for next in lo..=max_state {
            prefix.push(next);
            extend(prefix, len, max_state, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if len > 0 {
        extend(&mut Vec::with_capacity(len), len, max_state, &mut out);
    }
    out
}

/// Groups strings by their `tau` value.
pub fn tau_classes(strings: &[DssString]) -> Vec<Vec<DssString>> {
    let mut classes: HashMap<TauSummary, Vec<DssString>> = HashMap::new();
    for s in strings {
        classes.entry(tau(s)).or_default().push(s.clone());
    }
    let mut out: Vec<_> = classes.into_values().collect();
    out.sort();
    out
}

#[derive(Debug, Clone, Copy)]
pub struct ExhaustiveConfig {
    pub max_len: usize,
    pub max_state: u64,
}

impl Default for ExhaustiveConfig {
    fn default() -> Self {
        Self { max_len: 7, max_state: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyRow {
    pub property: &'static str,
    pub checked: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveReport {
    pub config_max_len: usize,
    pub config_max_state: u64,
    pub rows: Vec<PropertyRow>,
}

impl ExhaustiveReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.violations == 0)
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<28} {:>14} {:>11}\n", "property", "checked", "violations");
        for r in &self.rows {
            out.push_str(&format!("{:<28} {:>14} {:>11}\n", r.property, r.checked, r.violations));
        }
        out
    }
}

/// Checks the terminal-state lemma, S-structure closure, `t => tau` and the
/// departure invariant on every string (pair, quadruple) up to the bounds.
pub fn run_exhaustive(config: ExhaustiveConfig) -> ExhaustiveReport {
    let by_len: Vec<Vec<DssString>> = (0..=config.max_len).map(|l| enumerate_dss(l, config.max_state)).collect();
    let classes: Vec<Vec<Vec<DssString>>> = by_len.iter().map(|s| tau_classes(s)).collect();

    let mut terminal = PropertyRow { property: "terminal-state lemma", checked: 0, violations: 0 };
    let mut departures = PropertyRow { property: "departures invariant", checked: 0, violations: 0 };
    let mut t_implies_tau = PropertyRow { property: "t-equiv implies tau-equiv", checked: 0, violations: 0 };
    let mut s_structure = PropertyRow { property: "S-structure closure", checked: 0, violations: 0 };

    for len_classes in &classes {
        for class in len_classes {
            for x in class {
                for y in class {
                    terminal.checked += 1;
                    if !check_terminal_lemma(x, y).unwrap_or(false) {
                        terminal.violations += 1;
                    }
                    departures.checked += 1;
                    if !departures_invariant_check(x, y).map(|f| f.departures_equal()).unwrap_or(false) {
                        departures.violations += 1;
                    }
                }
            }
        }
    }

    for strings in &by_len {
        let mut by_t: HashMap<TransitionCounts, Vec<&DssString>> = HashMap::new();
        for s in strings {
            by_t.entry(transition_counts(s)).or_default().push(s);
        }
        for group in by_t.values() {
            let taus: Vec<TauSummary> = group.iter().map(|s| tau(s)).collect();
            for tx in &taus {
                for ty in &taus {
                    t_implies_tau.checked += 1;
                    if tx != ty {
                        t_implies_tau.violations += 1;
                    }
                }
            }
        }
    }

    for n in 1..config.max_len {
        for m in 1..=config.max_len - n {
            for left in &classes[n] {
                for right in &classes[m] {
                    for a in left {
                        for b in left {
                            for x in right {
                                for y in right {
                                    if a.last() > x.first() + 1 || b.last() > y.first() + 1 {
                                        continue;
                                    }
                                    s_structure.checked += 1;
                                    if !check_s_structure(a, b, x, y).unwrap_or(false) {
                                        s_structure.violations += 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    ExhaustiveReport {
        config_max_len: config.max_len,
        config_max_state: config.max_state,
        rows: vec![terminal, s_structure, t_implies_tau, departures],
    }
}
