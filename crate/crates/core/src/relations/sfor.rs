use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Edge, OwnerGraph, RelationKind, SocialGraph};
use crate::model::{DeviceId, DeviceRecord, OwnerId};

pub const DEFAULT_MAX_HOPS: u32 = 3;

/// Trust weight between devices whose owners are `hops` apart: 1 for a shared
/// owner, 0.75 for friends, `1/hops` beyond that, nothing past `max_hops`.
pub fn sfor_weight(hops: u32, max_hops: u32) -> Option<f64> {
    match hops {
        h if h > max_hops => None,
        0 => Some(1.0),
        1 => Some(0.75),
        h => Some(1.0 / f64::from(h)),
    }
}

/// Ownership/friendship graph over the private devices.
///
/// Public devices are left out: they are trusted by everyone and the
/// discovery index flags them instead of materializing their edges.
pub fn build_sfor(devices: &[DeviceRecord], owners: &OwnerGraph, max_hops: u32) -> Result<SocialGraph> {
    let mut by_owner: BTreeMap<OwnerId, Vec<DeviceId>> = BTreeMap::new();
    for d in devices.iter().filter(|d| !d.is_public()) {
        if !owners.contains(d.owner_id) {
            return Err(Error::UnknownOwner {
                device: d.device_id,
                owner: d.owner_id,
            });
        }
        by_owner.entry(d.owner_id).or_default().push(d.device_id);
    }

    let adjacency = owners.adjacency();
    let mut edges = Vec::new();
    for (&owner, mine) in &by_owner {
        let distances = owners.distances_from(&adjacency, owner, max_hops);
        for (&other, theirs) in by_owner.range(owner..) {
            let Some(&hops) = distances.get(&other) else {
                continue;
            };
            let Some(weight) = sfor_weight(hops, max_hops) else {
                continue;
            };
            if other == owner {
                for (i, &a) in mine.iter().enumerate() {
                    for &b in &mine[i + 1..] {
                        edges.push(Edge { a, b, weight });
                    }
                }
            } else {
                for &a in mine {
                    for &b in theirs {
                        edges.push(Edge { a, b, weight });
                    }
                }
            }
        }
    }
    let nodes = devices.iter().filter(|d| !d.is_public()).map(|d| d.device_id);
    SocialGraph::new(RelationKind::Sfor, nodes, edges)
}
