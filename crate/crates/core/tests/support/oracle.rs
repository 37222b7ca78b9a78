//! Per-minute brute-force conflict oracle and random rule-set generators,
//! shared by property tests across crates. Shares no code with the engine.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mup_core::model::*;
use proptest::prelude::*;

pub const DAYS: [Weekday; 3] = [Weekday::Mon, Weekday::Tue, Weekday::Wed];
pub const USERS: [&str; 5] = ["ava", "ben", "cy", "dee", "eli"];

pub type Key = (ConflictKind, Weekday, (String, String), Option<String>, Option<String>);
pub type Expected = BTreeSet<(Key, Minute, Minute, BTreeSet<String>)>;

fn interval(c: &Constraint) -> (f64, f64) {
    match c.comparator {
        Comparator::LE => (f64::NEG_INFINITY, c.value),
        Comparator::GE => (c.value, f64::INFINITY),
        Comparator::EQ => (c.value, c.value),
    }
}

fn minutes_applicable(rule: &Rule, c: &Constraint, rules: &[Rule], horizon: &[Weekday]) -> BTreeSet<(Weekday, Minute)> {
    let mut out = BTreeSet::new();
    match &c.condition {
        None => {
            for d in horizon {
                out.extend((0..MINUTES_PER_DAY).map(|m| (*d, m)));
            }
        }
        Some(Condition::Window { days, start, end }) => {
            for d in days.iter().filter(|d| horizon.contains(d)) {
                out.extend((*start..*end).map(|m| (*d, m)));
            }
        }
        Some(Condition::Activity { activity }) => {
            for r in rules.iter().filter(|r| r.owner == rule.owner) {
                if let Some(Payload::Schedule(e)) = &r.payload {
                    if e.activity.to_lowercase() == activity.to_lowercase() && horizon.contains(&e.day) {
                        out.extend((e.start..e.end).map(|m| (e.day, m)));
                    }
                }
            }
        }
    }
    out
}

pub fn brute_force(rules: &[Rule], horizon: &[Weekday]) -> Expected {
    let mut marks: BTreeMap<Key, BTreeMap<Minute, BTreeSet<String>>> = BTreeMap::new();
    for (i, a) in rules.iter().enumerate() {
        for b in &rules[i + 1..] {
            if a.owner == b.owner {
                continue;
            }
            let pair = if a.owner <= b.owner {
                (a.owner.to_string(), b.owner.to_string())
            } else {
                (b.owner.to_string(), a.owner.to_string())
            };
            let ids: BTreeSet<String> = [a.rule_id.to_string(), b.rule_id.to_string()].into();
            let mut hits: Vec<(Key, Weekday, Minute)> = Vec::new();
            match (&a.payload, &b.payload) {
                (Some(Payload::Schedule(x)), Some(Payload::Schedule(y))) => {
                    if x.day == y.day && x.resource == y.resource && horizon.contains(&x.day) {
                        let kind = if x.resource.is_some() {
                            ConflictKind::ResourceContention
                        } else {
                            ConflictKind::ScheduleOverlap
                        };
                        for m in 0..MINUTES_PER_DAY {
                            if x.start <= m && m < x.end && y.start <= m && m < y.end {
                                hits.push(((kind, x.day, pair.clone(), x.resource.clone(), None), x.day, m));
                            }
                        }
                    }
                }
                (Some(Payload::Constraint(x)), Some(Payload::Constraint(y))) => {
                    let (xl, xh) = interval(x);
                    let (yl, yh) = interval(y);
                    let disjoint = xl.max(yl) > xh.min(yh);
                    let zone_ok = match (&x.zone, &y.zone) {
                        (Some(p), Some(q)) => p.to_lowercase() == q.to_lowercase(),
                        _ => true,
                    };
                    let unit_ok =
                        x.unit.as_ref().map(|u| u.to_lowercase()) == y.unit.as_ref().map(|u| u.to_lowercase());
                    if disjoint && zone_ok && unit_ok && x.attribute.to_lowercase() == y.attribute.to_lowercase() {
                        let zone = x.zone.clone().or_else(|| y.zone.clone()).map(|z| z.to_lowercase());
                        let ma = minutes_applicable(a, x, rules, horizon);
                        let mb = minutes_applicable(b, y, rules, horizon);
                        for (d, m) in ma.intersection(&mb) {
                            let key = (
                                ConflictKind::ConstraintContradiction,
                                *d,
                                pair.clone(),
                                zone.clone(),
                                Some(x.attribute.to_lowercase()),
                            );
                            hits.push((key, *d, *m));
                        }
                    }
                }
                _ => {}
            }
            for (key, _, m) in hits {
                marks.entry(key).or_default().entry(m).or_default().extend(ids.iter().cloned());
            }
        }
    }
    let mut out = Expected::new();
    for (key, minutes) in marks {
        let mut run: Option<(Minute, Minute, BTreeSet<String>)> = None;
        for (m, ids) in minutes {
            match &mut run {
                Some((_, end, acc)) if *end == m => {
                    *end = m + 1;
                    acc.extend(ids);
                }
                _ => {
                    if let Some((s, e, acc)) = run.take() {
                        out.insert((key.clone(), s, e, acc));
                    }
                    run = Some((m, m + 1, ids));
                }
            }
        }
        if let Some((s, e, acc)) = run {
            out.insert((key, s, e, acc));
        }
    }
    out
}

pub fn as_expected(conflicts: &[Conflict]) -> Expected {
    conflicts
        .iter()
        .map(|c| {
            let p: Vec<String> = c.participants.iter().map(|u| u.to_string()).collect();
            (
                (
                    c.kind,
                    c.context.day,
                    (p[0].clone(), p[1].clone()),
                    c.context.resource.clone(),
                    c.context.attribute.clone(),
                ),
                c.context.start,
                c.context.end,
                c.rule_ids.iter().map(|r| r.to_string()).collect(),
            )
        })
        .collect()
}

fn arb_schedule(users: usize) -> impl Strategy<Value = (usize, Weekday, Minute, Minute, Option<&'static str>, usize)> {
    (
        0..users,
        prop::sample::select(DAYS.to_vec()),
        0u32..16,
        1u32..6,
        prop::sample::select(vec![None, Some("Sun room"), Some("Apple room")]),
        0usize..3,
    )
        .prop_map(|(u, d, s, len, res, act)| (u, d, 480 + s * 15, 480 + (s + len) * 15, res, act))
}

fn arb_constraint(
    users: usize,
) -> impl Strategy<Value = (usize, Comparator, f64, Option<&'static str>, Option<Condition>)> {
    let cond = prop_oneof![
        Just(None),
        (prop::sample::subsequence(DAYS.to_vec(), 1..=3), 0u32..16, 1u32..8)
            .prop_map(|(days, s, l)| Some(Condition::Window { days, start: 480 + s * 15, end: 480 + (s + l) * 15 })),
        prop::sample::select(vec!["workout", "study"])
            .prop_map(|a| Some(Condition::Activity { activity: a.to_string() })),
    ];
    (
        0..users,
        prop::sample::select(vec![Comparator::LE, Comparator::GE, Comparator::EQ]),
        prop::sample::select(vec![64.0, 68.0, 70.0, 72.0, 78.0]),
        prop::sample::select(vec![None, Some("gym"), Some("Study")]),
        cond,
    )
}

pub const ACTIVITIES: [&str; 3] = ["workout", "study", "meeting"];
pub const CLASSES: [&str; 3] = ["client_consultation", "team_meeting", "other"];

/// Random rule sets over `users` users with up to `max_rules` rules, about a
/// third of them constraints.
pub fn arb_rules(users: usize, max_rules: usize) -> impl Strategy<Value = Vec<Rule>> {
    let cons = max_rules / 3;
    (
        prop::collection::vec(arb_schedule(users), 0..=max_rules - cons),
        prop::collection::vec(arb_constraint(users), 0..=cons),
    )
        .prop_map(|(sched, cons)| {
            let mut rules = Vec::new();
            for (i, (u, day, start, end, res, act)) in sched.into_iter().enumerate() {
                rules.push(Rule {
                    rule_id: format!("s{i:02}").into(),
                    owner: USERS[u].into(),
                    kind: RuleKind::Schedule,
                    text: String::from("entry"),
                    payload: Some(Payload::Schedule(ScheduleEntry {
                        day,
                        start,
                        end,
                        activity: ACTIVITIES[act].into(),
                        activity_class: ActivityClass::new(CLASSES[act]),
                        resource: res.map(str::to_string),
                    })),
                    checker: None,
                });
            }
            for (i, (u, comparator, value, zone, condition)) in cons.into_iter().enumerate() {
                rules.push(Rule {
                    rule_id: format!("c{i:02}").into(),
                    owner: USERS[u].into(),
                    kind: RuleKind::Preference,
                    text: String::from("constraint"),
                    payload: Some(Payload::Constraint(Constraint {
                        attribute: "temperature".into(),
                        comparator,
                        value,
                        unit: Some("F".into()),
                        zone: zone.map(str::to_string),
                        condition,
                    })),
                    checker: None,
                });
            }
            rules
        })
}
