use alloc::string::String;
use alloc::vec::Vec;

use super::slice::FixAction;
use super::template::FixTemplate;

/// Greedy first-fit clustering: each action joins the first cluster whose
/// template it anti-unifies with, otherwise it starts a new one. Templates
/// come back sorted by support (descending), ties by rendered text.
pub fn cluster_and_rank(actions: &[FixAction]) -> Vec<FixTemplate> {
    let mut clusters: Vec<FixTemplate> = Vec::new();
    for action in actions {
        let merged = clusters.iter_mut().find_map(|t| t.absorb(action).map(|g| (t, g)));
        match merged {
            Some((slot, g)) => *slot = g,
            None => clusters.push(FixTemplate::from_action(action)),
        }
    }
    let mut keyed: Vec<(String, FixTemplate)> = clusters.into_iter().map(|t| (t.render(), t)).collect();
    keyed.sort_by(|(ra, a), (rb, b)| b.support.cmp(&a.support).then_with(|| ra.cmp(rb)));
    keyed.into_iter().map(|(_, t)| t).collect()
}
