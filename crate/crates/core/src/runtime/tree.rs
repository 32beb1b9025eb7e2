//! Navigation over activity forests, shared by both clock backends.

use std::collections::BTreeMap;

use super::redex::{redex, Redex};
use super::{Activity, View};
use crate::syntax::Name;

pub type Activities<V = super::LocalView> = BTreeMap<Name, Activity<V>>;

/// Activities on whose behalf a finish body runs, nearest last.
///
/// The body of `finish e` runs in a child activity; it acts for its parent
/// when transmitting clocks to activities it spawns.
pub type Owners<'a, V> = Vec<(&'a Name, &'a Activity<V>)>;

/// The label of the finish-body child an activity is waiting on.
pub fn joined_child<V>(a: &Activity<V>) -> Option<&Name> {
    match redex(&a.expr) {
        Some(Redex::Join(l)) => Some(l),
        _ => None,
    }
}

/// Pre-order walk; siblings in label order. The callback receives the
/// path, the activity and its owner chain.
pub fn walk<'a, V>(
    acts: &'a Activities<V>,
    f: &mut impl FnMut(&[Name], &'a Activity<V>, &[(&'a Name, &'a Activity<V>)]),
) {
    fn visit<'a, V>(
        label: &'a Name,
        a: &'a Activity<V>,
        path: &mut Vec<Name>,
        owners: &Owners<'a, V>,
        f: &mut impl FnMut(&[Name], &'a Activity<V>, &[(&'a Name, &'a Activity<V>)]),
    ) {
        path.push(label.clone());
        f(path, a, owners);
        let body = joined_child(a);
        for (cl, child) in &a.children {
            let chain = if body == Some(cl) {
                let mut c = owners.clone();
                c.push((label, a));
                c
            } else {
                Vec::new()
            };
            visit(cl, child, path, &chain, f);
        }
        path.pop();
    }

    let mut path = Vec::new();
    for (label, a) in acts {
        visit(label, a, &mut path, &Vec::new(), f);
    }
}

/// Finds the activity at `path` and its owner chain.
pub fn locate<'a, V>(
    acts: &'a Activities<V>,
    path: &[Name],
) -> Option<(&'a Activity<V>, Owners<'a, V>)> {
    let (first, rest) = path.split_first()?;
    let (mut label, mut cur) = acts.get_key_value(first)?;
    let mut owners: Owners<'a, V> = Vec::new();
    for next in rest {
        let (nl, child) = cur.children.get_key_value(next)?;
        if joined_child(cur) == Some(nl) {
            owners.push((label, cur));
        } else {
            owners.clear();
        }
        label = nl;
        cur = child;
    }
    Some((cur, owners))
}

/// Runs `f` on the activity at `path`; the activities it returns are added
/// as siblings of that activity. Returns `None` if the path is dangling.
pub(crate) fn apply_at<V: View, R>(
    acts: &mut Activities<V>,
    path: &[Name],
    f: impl FnOnce(&mut Activity<V>) -> (Vec<(Name, Activity<V>)>, R),
) -> Option<R> {
    let (first, rest) = path.split_first()?;
    if rest.is_empty() {
        let a = acts.get_mut(first)?;
        let (spawned, out) = f(a);
        acts.extend(spawned);
        return Some(out);
    }
    apply_at(&mut acts.get_mut(first)?.children, rest, f)
}
