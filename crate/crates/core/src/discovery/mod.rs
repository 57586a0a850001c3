//! Request resolution: nearest CLOR community, SFOR trust filter and
//! capability filter, intersected into the final device list.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::community::{Cover, Partition};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::model::{
    ApplicationType, CapabilityMap, DeviceId, DeviceRecord, OwnerId, Position, RequestMetadata, TrustLevel,
};
use crate::nlp::ParsedRequest;

/// Slack for comparing SFOR weights against a level's threshold.
const WEIGHT_SLACK: f64 = 1e-12;

/// Immutable bundle of everything a query needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryIndex {
    devices: Vec<DeviceRecord>,
    clor: Partition,
    centroids: Vec<Position>,
    sfor_graph: SocialGraph,
    sfor: Cover,
    sor: Partition,
    capability_map: CapabilityMap,
    public: BTreeSet<DeviceId>,
    owners: BTreeMap<OwnerId, Vec<DeviceId>>,
    external_owners: BTreeSet<OwnerId>,
}

fn mismatch(what: &str, id: DeviceId) -> Error {
    Error::NodeSetMismatch(format!("{what} refers to device {id}, which is not in the device table"))
}

pub fn build_index(
    devices: &[DeviceRecord],
    clor: Partition,
    sfor_graph: SocialGraph,
    sfor: Cover,
    sor: Partition,
    capability_map: CapabilityMap,
) -> Result<DiscoveryIndex> {
    let mut devices = devices.to_vec();
    devices.sort_by_key(|d| d.device_id);
    if let Some(w) = devices.windows(2).find(|w| w[0].device_id == w[1].device_id) {
        return Err(Error::NodeSetMismatch(format!("device {} appears twice", w[0].device_id)));
    }
    let ids: Vec<DeviceId> = devices.iter().map(|d| d.device_id).collect();
    if clor.nodes() != ids.as_slice() {
        return Err(Error::NodeSetMismatch(format!(
            "CLOR partition covers {} nodes, device table has {}",
            clor.nodes().len(),
            ids.len()
        )));
    }
    let known = |id: &DeviceId| ids.binary_search(id).is_ok();
    if let Some(&id) = sfor_graph.nodes().iter().find(|id| !known(id)) {
        return Err(mismatch("SFOR graph", id));
    }
    if let Some(&id) = sfor.communities.iter().flat_map(|c| &c.members).find(|id| !sfor_graph.contains(**id)) {
        return Err(mismatch("SFOR cover", id));
    }
    if let Some(&id) = sor.nodes().iter().find(|id| !known(id)) {
        return Err(mismatch("SOR partition", id));
    }

    let mut sums = vec![(0.0, 0.0, 0usize); clor.n_communities()];
    for (d, &label) in devices.iter().zip(clor.labels()) {
        let s = &mut sums[label as usize];
        s.0 += d.position.x;
        s.1 += d.position.y;
        s.2 += 1;
    }
    let centroids = sums
        .into_iter()
        .map(|(x, y, n)| Position {
            x: x / n as f64,
            y: y / n as f64,
        })
        .collect();

    let public = devices.iter().filter(|d| d.is_public()).map(|d| d.device_id).collect();
    let mut owners: BTreeMap<OwnerId, Vec<DeviceId>> = BTreeMap::new();
    for d in devices.iter().filter(|d| !d.is_public()) {
        owners.entry(d.owner_id).or_default().push(d.device_id);
    }
    Ok(DiscoveryIndex {
        devices,
        clor,
        centroids,
        sfor_graph,
        sfor,
        sor,
        capability_map,
        public,
        owners,
        external_owners: BTreeSet::new(),
    })
}

impl DiscoveryIndex {
    /// Registers requesters that own no catalogued device.
    pub fn with_external_owners(mut self, owners: impl IntoIterator<Item = OwnerId>) -> Self {
        self.external_owners.extend(owners);
        self
    }

    pub fn devices(&self) -> &[DeviceRecord] {
        &self.devices
    }

    pub fn device(&self, id: DeviceId) -> Option<&DeviceRecord> {
        self.devices
            .binary_search_by_key(&id, |d| d.device_id)
            .ok()
            .map(|i| &self.devices[i])
    }

    pub fn clor(&self) -> &Partition {
        &self.clor
    }

    pub fn centroids(&self) -> &[Position] {
        &self.centroids
    }

    pub fn sfor_graph(&self) -> &SocialGraph {
        &self.sfor_graph
    }

    pub fn sfor(&self) -> &Cover {
        &self.sfor
    }

    pub fn sor(&self) -> &Partition {
        &self.sor
    }

    pub fn capability_map(&self) -> &CapabilityMap {
        &self.capability_map
    }

    pub fn public_devices(&self) -> &BTreeSet<DeviceId> {
        &self.public
    }

    pub fn knows_owner(&self, owner: OwnerId) -> bool {
        self.owners.contains_key(&owner) || self.external_owners.contains(&owner)
    }

    pub fn devices_of(&self, owner: OwnerId) -> &[DeviceId] {
        self.owners.get(&owner).map_or(&[], Vec::as_slice)
    }
}

/// Community whose centroid is closest to `position`; ties go to the lowest id.
pub fn nearest_clor_community(index: &DiscoveryIndex, position: Position) -> Result<u32> {
    let mut best: Option<(u32, f64)> = None;
    for (id, c) in index.centroids.iter().enumerate() {
        let d = c.distance(&position);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((id as u32, d));
        }
    }
    best.map(|(id, _)| id).ok_or(Error::NoCommunities)
}

/// Devices the requester may use at `level`.
///
/// Public devices and the requester's own devices always qualify. Other
/// private devices qualify through an SFOR edge of sufficient weight from one
/// of the requester's devices, and only if the cover places them in some
/// community; devices outside every community qualify only at `Any`.
pub fn eligible_by_trust(index: &DiscoveryIndex, requester: OwnerId, level: TrustLevel) -> Result<BTreeSet<DeviceId>> {
    let Some(threshold) = level.min_sfor_weight() else {
        return Ok(index.devices.iter().map(|d| d.device_id).collect());
    };
    if !index.knows_owner(requester) {
        return Err(Error::UnknownRequester(requester));
    }
    let own: BTreeSet<DeviceId> = index.devices_of(requester).iter().copied().collect();
    let covered = index.sfor.covered();
    let mut eligible: BTreeSet<DeviceId> = index.public.union(&own).copied().collect();
    for e in index.sfor_graph.edges() {
        if e.weight + WEIGHT_SLACK < threshold {
            continue;
        }
        let other = match (own.contains(&e.a), own.contains(&e.b)) {
            (true, false) => e.b,
            (false, true) => e.a,
            _ => continue,
        };
        if covered.contains(&other) {
            eligible.insert(other);
        }
    }
    Ok(eligible)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Clor,
    Trust,
    Capability,
    Sor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub clor_members: usize,
    pub after_trust: usize,
    pub after_capability: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub after_sor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryResult {
    pub application: ApplicationType,
    pub clor_community: u32,
    pub centroid: Position,
    pub target_position: Position,
    pub target_name: Option<String>,
    pub trust_level: TrustLevel,
    /// Size of the trust-eligible set over the whole catalogue.
    pub trust_eligible: usize,
    pub devices: Vec<DeviceId>,
    pub stages: StageCounts,
    /// First stage that left nothing, if the result is empty.
    pub emptied_at: Option<Stage>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoverOptions {
    /// Additionally keep only devices sharing a SOR community with another device.
    pub sor_filter: bool,
}

pub fn discover(index: &DiscoveryIndex, parsed: &ParsedRequest, metadata: &RequestMetadata) -> Result<DiscoveryResult> {
    discover_with(index, parsed, metadata, DiscoverOptions::default())
}

pub fn discover_with(
    index: &DiscoveryIndex,
    parsed: &ParsedRequest,
    metadata: &RequestMetadata,
    options: DiscoverOptions,
) -> Result<DiscoveryResult> {
    let community = nearest_clor_community(index, parsed.target_position)?;
    let trusted = eligible_by_trust(index, metadata.requester_id, parsed.trust_level)?;

    let members = index.clor.members(community);
    let after_trust: Vec<DeviceId> = members.iter().copied().filter(|d| trusted.contains(d)).collect();
    let mut devices: Vec<DeviceId> = after_trust
        .iter()
        .copied()
        .filter(|&d| index.device(d).is_some_and(|r| r.can_serve(&parsed.application)))
        .collect();
    let after_capability = devices.len();

    let mut after_sor = None;
    if options.sor_filter {
        let sizes = index.sor.sizes();
        devices.retain(|&d| index.sor.community_of(d).is_some_and(|c| sizes[c as usize] > 1));
        after_sor = Some(devices.len());
    }

    let stages = StageCounts {
        clor_members: members.len(),
        after_trust: after_trust.len(),
        after_capability,
        after_sor,
    };
    let emptied_at = if stages.clor_members == 0 {
        Some(Stage::Clor)
    } else if stages.after_trust == 0 {
        Some(Stage::Trust)
    } else if stages.after_capability == 0 {
        Some(Stage::Capability)
    } else if after_sor == Some(0) {
        Some(Stage::Sor)
    } else {
        None
    };

    Ok(DiscoveryResult {
        application: parsed.application.clone(),
        clor_community: community,
        centroid: index.centroids[community as usize],
        target_position: parsed.target_position,
        target_name: parsed.target_name.clone(),
        trust_level: parsed.trust_level,
        trust_eligible: trusted.len(),
        devices,
        stages,
        emptied_at,
    })
}
