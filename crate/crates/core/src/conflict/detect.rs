use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    Condition, Conflict, ConflictContext, ConflictKind, Constraint, Rule, RuleId, TimeWindow, UserId, Weekday,
};

/// Windows per day in which a rule applies.
type DayWindows = BTreeMap<Weekday, Vec<TimeWindow>>;

/// Unordered user pair, smaller id first.
type Pair = (UserId, UserId);

fn pair(a: &UserId, b: &UserId) -> Pair {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Pieces of pairwise overlap, grouped so that contiguous pieces with the same
/// key collapse into one conflict.
#[derive(Default)]
struct Buckets {
    pieces: BTreeMap<BucketKey, Vec<(TimeWindow, [RuleId; 2])>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct BucketKey {
    kind: ConflictKind,
    day: Weekday,
    pair: Pair,
    resource: Option<String>,
    attribute: Option<String>,
}

impl Buckets {
    fn add(&mut self, key: BucketKey, window: TimeWindow, rules: [RuleId; 2]) {
        self.pieces.entry(key).or_default().push((window, rules));
    }

    fn into_conflicts(self) -> Vec<Conflict> {
        let mut out = Vec::new();
        for (key, mut pieces) in self.pieces {
            pieces.sort_by_key(|(w, _)| (w.start, w.end));
            let mut current: Option<(TimeWindow, BTreeSet<RuleId>)> = None;
            for (w, rules) in pieces {
                match &mut current {
                    Some((cw, ids)) if w.start <= cw.end => {
                        cw.end = cw.end.max(w.end);
                        ids.extend(rules);
                    }
                    _ => {
                        if let Some(done) = current.take() {
                            out.push(build(&key, done));
                        }
                        current = Some((w, rules.into_iter().collect()));
                    }
                }
            }
            if let Some(done) = current {
                out.push(build(&key, done));
            }
        }
        out
    }
}

fn build(key: &BucketKey, (window, rule_ids): (TimeWindow, BTreeSet<RuleId>)) -> Conflict {
    let participants = [key.pair.0.clone(), key.pair.1.clone()].into_iter().collect();
    Conflict::new(
        key.kind,
        participants,
        rule_ids,
        ConflictContext {
            day: key.day,
            start: window.start,
            end: window.end,
            resource: key.resource.clone(),
            attribute: key.attribute.clone(),
        },
    )
}

/// Detects every multi-user conflict among `rules` on the `horizon` days.
///
/// * Two users' schedule entries overlapping on the same resource are a
///   resource contention; overlapping entries that both lack a resource
///   compete for the shared assistant and are a schedule overlap.
/// * Two users' constraints on the same attribute and compatible zones that
///   admit no common value while both apply are a constraint contradiction.
///
/// Windows are half-open. One conflict is emitted per user pair, resource (or
/// zone) and contiguous overlapping region. Output order is
/// `(day, start, kind, participants)`.
pub fn detect_conflicts(rules: &[Rule], horizon: &[Weekday]) -> Vec<Conflict> {
    let in_horizon = |d: &Weekday| horizon.contains(d);
    let mut buckets = Buckets::default();

    // Schedule entries: sweep per (day, resource) over start-sorted entries.
    let mut lanes: BTreeMap<(Weekday, Option<String>), Vec<&Rule>> = BTreeMap::new();
    for r in rules {
        if let Some(e) = r.schedule() {
            if in_horizon(&e.day) && e.start < e.end {
                lanes.entry((e.day, e.resource.clone())).or_default().push(r);
            }
        }
    }
    for ((day, resource), mut lane) in lanes {
        lane.sort_by_key(|r| {
            let e = r.schedule().expect("lane holds schedule rules");
            (e.start, e.end)
        });
        let kind = if resource.is_some() { ConflictKind::ResourceContention } else { ConflictKind::ScheduleOverlap };
        for (i, a) in lane.iter().enumerate() {
            let ea = a.schedule().expect("schedule");
            for b in &lane[i + 1..] {
                let eb = b.schedule().expect("schedule");
                if eb.start >= ea.end {
                    break;
                }
                if a.owner == b.owner {
                    continue;
                }
                if let Some(w) = ea.window().intersect(&eb.window()) {
                    buckets.add(
                        BucketKey {
                            kind,
                            day,
                            pair: pair(&a.owner, &b.owner),
                            resource: resource.clone(),
                            attribute: None,
                        },
                        w,
                        [a.rule_id.clone(), b.rule_id.clone()],
                    );
                }
            }
        }
    }

    // Constraints: pairwise over contradicting constraints, intersecting
    // their per-day applicability.
    let constraints: Vec<(&Rule, &Constraint, DayWindows)> =
        rules.iter().filter_map(|r| r.constraint().map(|c| (r, c, applicability(r, c, rules, horizon)))).collect();
    for (i, (ra, ca, aa)) in constraints.iter().enumerate() {
        for (rb, cb, ab) in &constraints[i + 1..] {
            if ra.owner == rb.owner || !contradict(ca, cb) {
                continue;
            }
            let zone = match (&ca.zone, &cb.zone) {
                (Some(z), _) | (None, Some(z)) => Some(z.to_lowercase()),
                (None, None) => None,
            };
            for (day, wa) in aa {
                let Some(wb) = ab.get(day) else { continue };
                for x in wa {
                    for y in wb {
                        if let Some(w) = x.intersect(y) {
                            buckets.add(
                                BucketKey {
                                    kind: ConflictKind::ConstraintContradiction,
                                    day: *day,
                                    pair: pair(&ra.owner, &rb.owner),
                                    resource: zone.clone(),
                                    attribute: Some(ca.attribute.to_lowercase()),
                                },
                                w,
                                [ra.rule_id.clone(), rb.rule_id.clone()],
                            );
                        }
                    }
                }
            }
        }
    }

    let mut conflicts = buckets.into_conflicts();
    sort_conflicts(&mut conflicts);
    conflicts
}

/// Canonical conflict order: `(day, start, kind, participants)`, then the
/// remaining context for full determinism.
pub fn sort_conflicts(conflicts: &mut [Conflict]) {
    conflicts.sort_by(|a, b| {
        (
            a.context.day,
            a.context.start,
            a.kind,
            &a.participants,
            a.context.end,
            &a.context.resource,
            &a.context.attribute,
            &a.rule_ids,
        )
            .cmp(&(
                b.context.day,
                b.context.start,
                b.kind,
                &b.participants,
                b.context.end,
                &b.context.resource,
                &b.context.attribute,
                &b.rule_ids,
            ))
    });
}

/// Same attribute, unit and overlapping zone, and no value satisfies both.
pub(crate) fn contradict(a: &Constraint, b: &Constraint) -> bool {
    let same_unit = match (&a.unit, &b.unit) {
        (None, None) => true,
        (Some(x), Some(y)) => x.eq_ignore_ascii_case(y),
        _ => false,
    };
    let zones_meet = match (&a.zone, &b.zone) {
        (Some(x), Some(y)) => x.eq_ignore_ascii_case(y),
        _ => true,
    };
    a.attribute.eq_ignore_ascii_case(&b.attribute) && same_unit && zones_meet && !a.compatible_with(b)
}

/// Day windows during which a constraint applies, merged and sorted.
pub(crate) fn applicability(rule: &Rule, c: &Constraint, rules: &[Rule], horizon: &[Weekday]) -> DayWindows {
    let mut out = DayWindows::new();
    match &c.condition {
        None => {
            for d in horizon {
                out.entry(*d).or_default().push(TimeWindow::FULL_DAY);
            }
        }
        Some(Condition::Window { days, start, end }) => {
            let w = TimeWindow::new(*start, *end);
            if !w.is_empty() {
                for d in days.iter().filter(|d| horizon.contains(d)) {
                    out.entry(*d).or_default().push(w);
                }
            }
        }
        Some(Condition::Activity { activity }) => {
            for other in rules.iter().filter(|o| o.owner == rule.owner) {
                if let Some(e) = other.schedule() {
                    if e.activity.eq_ignore_ascii_case(activity) && horizon.contains(&e.day) && e.start < e.end {
                        out.entry(e.day).or_default().push(e.window());
                    }
                }
            }
        }
    }
    for windows in out.values_mut() {
        windows.sort();
        let mut merged: Vec<TimeWindow> = Vec::with_capacity(windows.len());
        for w in windows.drain(..) {
            match merged.last_mut() {
                Some(last) if w.start <= last.end => last.end = last.end.max(w.end),
                _ => merged.push(w),
            }
        }
        *windows = merged;
    }
    out
}
