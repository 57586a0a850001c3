use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use siot_core::community::{detect_overlapping, louvain, Cover, CoverCommunity, LouvainConfig, OverlapConfig, Partition};
use siot_core::discovery::{
    build_index, discover, discover_with, eligible_by_trust, nearest_clor_community, DiscoverOptions, DiscoveryIndex,
    Stage,
};
use siot_core::graph::{OwnerGraph, RelationKind, SocialGraph};
use siot_core::ingest::{generate_synthetic_city, SyntheticCity, SyntheticCityParams};
use siot_core::model::{
    ApplicationType, CapabilityMap, DeviceId, DeviceRecord, DeviceType, OwnerId, Position, RequestMetadata,
    TrustLevel, Visibility,
};
use siot_core::nlp::ParsedRequest;
use siot_core::relations::{build_clor, build_sfor, build_sor, SorRule};
use siot_core::Error;

fn device(id: u32, ty: DeviceType, owner: u32, public: bool, x: f64, y: f64) -> DeviceRecord {
    let mut d = DeviceRecord {
        device_id: DeviceId(id),
        device_type: ty,
        owner_id: OwnerId(owner),
        visibility: if public { Visibility::Public } else { Visibility::Private },
        position: Position { x, y },
        capabilities: BTreeSet::new(),
    };
    CapabilityMap::default().apply(std::slice::from_mut(&mut d));
    d
}

fn partition_of(graph: &SocialGraph) -> Partition {
    if graph.edge_count() == 0 {
        Partition::singletons(graph)
    } else {
        louvain(graph, &LouvainConfig::default()).unwrap()
    }
}

fn index_for(devices: &[DeviceRecord], owners: &OwnerGraph, sor: &SocialGraph, cover: Option<Cover>) -> DiscoveryIndex {
    let clor = build_clor(devices, 0.8).unwrap();
    let sfor = build_sfor(devices, owners, 3).unwrap();
    let cover = cover.unwrap_or_else(|| {
        if sfor.edge_count() == 0 {
            Cover::empty(RelationKind::Sfor, 0.1, sfor.nodes())
        } else {
            detect_overlapping(&sfor, &OverlapConfig { n_trials: 4, ..Default::default() }).unwrap()
        }
    });
    build_index(devices, partition_of(&clor), sfor, cover, partition_of(sor), CapabilityMap::default()).unwrap()
}

fn city(n: usize, seed: u64) -> (SyntheticCity, DiscoveryIndex) {
    let city = generate_synthetic_city(&SyntheticCityParams::three_clusters(n, seed)).unwrap();
    let sor = build_sor(&city.contacts, &SorRule::default()).unwrap();
    let index = index_for(&city.devices, &city.owners, &sor, None);
    (city, index)
}

fn request(app: ApplicationType, target: Position, trust: TrustLevel) -> ParsedRequest {
    ParsedRequest {
        application: app,
        score: 1.0,
        target_position: target,
        target_name: None,
        trust_level: trust,
        raw_tokens: Vec::new(),
    }
}

fn metadata(owner: OwnerId, trust: TrustLevel) -> RequestMetadata {
    RequestMetadata::new(owner, Position { x: 0.5, y: 0.5 }, trust).unwrap()
}

/// Owner-graph hop distances by plain BFS.
fn hops_from(owners: &OwnerGraph, source: OwnerId) -> HashMap<OwnerId, u32> {
    let mut dist = HashMap::from([(source, 0)]);
    let mut frontier = vec![source];
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for &u in &frontier {
            for &(a, b) in owners.edges() {
                let v = if a == u { b } else if b == u { a } else { continue };
                if !dist.contains_key(&v) {
                    dist.insert(v, d);
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    dist
}

/// Scan of the whole table with the trust ladder evaluated from owner hops.
fn reference_filter(
    index: &DiscoveryIndex,
    owners: &OwnerGraph,
    community: u32,
    app: &ApplicationType,
    requester: OwnerId,
    level: TrustLevel,
) -> Vec<DeviceId> {
    let hops = hops_from(owners, requester);
    let covered = index.sfor().covered();
    let requester_has_devices = index.devices().iter().any(|d| !d.is_public() && d.owner_id == requester);
    index
        .devices()
        .iter()
        .filter(|d| index.clor().community_of(d.device_id) == Some(community))
        .filter(|d| {
            let Some(threshold) = level.min_sfor_weight() else { return true };
            if d.is_public() || d.owner_id == requester {
                return true;
            }
            let weight = match hops.get(&d.owner_id) {
                Some(1) => 0.75,
                Some(&h) if (2..=3).contains(&h) => 1.0 / h as f64,
                _ => 0.0,
            };
            requester_has_devices && covered.contains(&d.device_id) && weight >= threshold
        })
        .filter(|d| d.capabilities.contains(app))
        .map(|d| d.device_id)
        .collect()
}

fn levels() -> [TrustLevel; 4] {
    [TrustLevel::Owner, TrustLevel::Friend, TrustLevel::FriendOfFriend(3), TrustLevel::Any]
}

#[test]
fn centroid_is_member_mean() {
    let devices = vec![
        device(0, DeviceType::Smartphone, 0, false, 0.0, 0.0),
        device(1, DeviceType::Smartphone, 0, false, 1.0, 0.0),
        device(2, DeviceType::Smartphone, 0, false, 0.5, 1.0),
    ];
    let owners = OwnerGraph::new([OwnerId(0)], []).unwrap();
    let clor = Partition::from_groups(RelationKind::Clor, &[devices.iter().map(|d| d.device_id).collect()]).unwrap();
    let sfor = build_sfor(&devices, &owners, 3).unwrap();
    let sor = Partition::new(RelationKind::Sor, vec![], vec![]).unwrap();
    let cover = Cover::empty(RelationKind::Sfor, 0.1, sfor.nodes());
    let index = build_index(&devices, clor, sfor, cover, sor, CapabilityMap::default()).unwrap();
    let c = index.centroids()[0];
    assert!((c.x - 0.5).abs() < 1e-15 && (c.y - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(nearest_clor_community(&index, c).unwrap(), 0);
}

#[test]
fn build_index_rejects_foreign_nodes() {
    let devices = vec![device(0, DeviceType::Smartphone, 0, false, 0.1, 0.1)];
    let owners = OwnerGraph::new([OwnerId(0)], []).unwrap();
    let sfor = build_sfor(&devices, &owners, 3).unwrap();
    let clor = Partition::new(RelationKind::Clor, vec![DeviceId(0), DeviceId(1)], vec![0, 0]).unwrap();
    let sor = Partition::new(RelationKind::Sor, vec![], vec![]).unwrap();
    let cover = Cover::empty(RelationKind::Sfor, 0.1, &[]);
    let r = build_index(&devices, clor, sfor.clone(), cover.clone(), sor.clone(), CapabilityMap::default());
    assert!(matches!(r, Err(Error::NodeSetMismatch(_))));

    let clor = Partition::new(RelationKind::Clor, vec![DeviceId(0)], vec![0]).unwrap();
    let stray = Partition::new(RelationKind::Sor, vec![DeviceId(5)], vec![0]).unwrap();
    let r = build_index(&devices, clor, sfor, cover, stray, CapabilityMap::default());
    assert!(matches!(r, Err(Error::NodeSetMismatch(_))));
}

/// Positions placed so centroids 2 and 5 sit symmetrically around (0.5, 0.5).
#[test]
fn nearest_community_ties_go_to_lowest_id() {
    let coords = [(0.1, 0.1), (0.9, 0.1), (0.4, 0.5), (0.1, 0.9), (0.9, 0.9), (0.6, 0.5)];
    let devices: Vec<DeviceRecord> = coords
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| device(i as u32, DeviceType::WeatherSensor, 0, true, x, y))
        .collect();
    let owners = OwnerGraph::new([OwnerId(0)], []).unwrap();
    let clor = Partition::new(RelationKind::Clor, (0..6).map(DeviceId).collect(), (0..6).collect()).unwrap();
    let sfor = build_sfor(&devices, &owners, 3).unwrap();
    let sor = Partition::new(RelationKind::Sor, vec![], vec![]).unwrap();
    let index = build_index(&devices, clor, sfor, Cover::empty(RelationKind::Sfor, 0.1, &[]), sor, CapabilityMap::default()).unwrap();
    assert_eq!(nearest_clor_community(&index, Position { x: 0.5, y: 0.5 }).unwrap(), 2);
    assert_eq!(nearest_clor_community(&index, Position { x: 0.9, y: 0.9 }).unwrap(), 4);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let p = Position { x: rng.random(), y: rng.random() };
        let brute = (0..6)
            .min_by(|&a, &b| {
                let da = index.centroids()[a].distance(&p);
                let db = index.centroids()[b].distance(&p);
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
            .unwrap();
        assert_eq!(nearest_clor_community(&index, p).unwrap(), brute as u32);
    }
}

#[test]
fn empty_index_has_no_communities() {
    let sfor = SocialGraph::new(RelationKind::Sfor, [], vec![]).unwrap();
    let clor = Partition::new(RelationKind::Clor, vec![], vec![]).unwrap();
    let sor = Partition::new(RelationKind::Sor, vec![], vec![]).unwrap();
    let index = build_index(&[], clor, sfor, Cover::empty(RelationKind::Sfor, 0.1, &[]), sor, CapabilityMap::default()).unwrap();
    assert!(matches!(nearest_clor_community(&index, Position { x: 0.5, y: 0.5 }), Err(Error::NoCommunities)));
}

/// Five owners in a chain 0-1-2-3-4, owner 0 owning three devices, owner 1
/// two, and three public sensors.
fn trust_fixture() -> (Vec<DeviceRecord>, OwnerGraph) {
    let devices = vec![
        device(0, DeviceType::Smartphone, 0, false, 0.10, 0.10),
        device(1, DeviceType::Tablet, 0, false, 0.11, 0.10),
        device(2, DeviceType::PersonalComputer, 0, false, 0.12, 0.10),
        device(3, DeviceType::Smartphone, 1, false, 0.10, 0.11),
        device(4, DeviceType::Smartwatch, 1, false, 0.10, 0.12),
        device(5, DeviceType::Smartphone, 2, false, 0.11, 0.11),
        device(6, DeviceType::Tablet, 2, false, 0.12, 0.11),
        device(7, DeviceType::Smartphone, 3, false, 0.12, 0.12),
        device(8, DeviceType::PersonalComputer, 4, false, 0.13, 0.12),
        device(9, DeviceType::WeatherSensor, 4, true, 0.13, 0.13),
        device(10, DeviceType::TransportSensor, 4, true, 0.11, 0.13),
        device(11, DeviceType::WeatherSensor, 4, true, 0.10, 0.13),
    ];
    let owners = OwnerGraph::new(
        (0..5).map(OwnerId),
        [(0, 1), (1, 2), (2, 3), (3, 4)].map(|(a, b)| (OwnerId(a), OwnerId(b))),
    )
    .unwrap();
    (devices, owners)
}

fn full_cover(sfor: &SocialGraph) -> Cover {
    Cover {
        relation: RelationKind::Sfor,
        threshold: 0.1,
        communities: vec![CoverCommunity {
            members: sfor.nodes().to_vec(),
            significance: 0.0,
        }],
        homeless: vec![],
    }
}

fn ids(v: &[u32]) -> BTreeSet<DeviceId> {
    v.iter().map(|&i| DeviceId(i)).collect()
}

#[test]
fn trust_levels_on_fixture() {
    let (devices, owners) = trust_fixture();
    let sfor = build_sfor(&devices, &owners, 3).unwrap();
    let sor = SocialGraph::new(RelationKind::Sor, [], vec![]).unwrap();
    let index = index_for(&devices, &owners, &sor, Some(full_cover(&sfor)));
    let at = |level| eligible_by_trust(&index, OwnerId(0), level).unwrap();
    assert_eq!(at(TrustLevel::Owner), ids(&[0, 1, 2, 9, 10, 11]));
    assert_eq!(at(TrustLevel::Friend), ids(&[0, 1, 2, 3, 4, 9, 10, 11]));
    assert_eq!(at(TrustLevel::FriendOfFriend(2)), ids(&[0, 1, 2, 3, 4, 5, 6, 9, 10, 11]));
    assert_eq!(at(TrustLevel::FriendOfFriend(3)), ids(&[0, 1, 2, 3, 4, 5, 6, 7, 9, 10, 11]));
    assert_eq!(at(TrustLevel::Any).len(), 12);
    assert!(matches!(
        eligible_by_trust(&index, OwnerId(42), TrustLevel::Friend),
        Err(Error::UnknownRequester(OwnerId(42)))
    ));
    assert_eq!(eligible_by_trust(&index, OwnerId(42), TrustLevel::Any).unwrap().len(), 12);
    let external = index.clone().with_external_owners([OwnerId(42)]);
    assert_eq!(eligible_by_trust(&external, OwnerId(42), TrustLevel::Friend).unwrap(), ids(&[9, 10, 11]));
}

#[test]
fn empty_cover_trusts_only_public_and_own() {
    let (devices, owners) = trust_fixture();
    let sfor = build_sfor(&devices, &owners, 3).unwrap();
    let sor = SocialGraph::new(RelationKind::Sor, [], vec![]).unwrap();
    let index = index_for(&devices, &owners, &sor, Some(Cover::empty(RelationKind::Sfor, 0.1, sfor.nodes())));
    for level in [TrustLevel::Owner, TrustLevel::Friend, TrustLevel::FriendOfFriend(3)] {
        assert_eq!(eligible_by_trust(&index, OwnerId(0), level).unwrap(), ids(&[0, 1, 2, 9, 10, 11]));
    }
}

#[test]
fn synthetic_city_centroids_sit_in_their_discs() {
    let (city, index) = city(150, 3);
    let params = SyntheticCityParams::three_clusters(150, 3);
    assert_eq!(index.centroids().len(), 3);
    for (d, &cluster) in city.devices.iter().zip(&city.cluster_of) {
        let c = index.clor().community_of(d.device_id).unwrap();
        let centroid = index.centroids()[c as usize];
        let disc = &params.clusters[cluster];
        assert!(centroid.distance(&disc.center) < disc.radius);
    }
}

#[test]
fn weather_at_beach_with_any_trust_is_every_beach_weather_sensor() {
    let (city, index) = city(150, 3);
    let params = SyntheticCityParams::three_clusters(150, 3);
    let beach = params.clusters.iter().position(|c| c.name == "beach").unwrap();
    let req = request(ApplicationType::weather(), params.clusters[beach].center, TrustLevel::Any);
    let result = discover(&index, &req, &metadata(OwnerId(0), TrustLevel::Any)).unwrap();
    let expected: Vec<DeviceId> = city
        .devices
        .iter()
        .zip(&city.cluster_of)
        .filter(|(d, &c)| c == beach && d.device_type == DeviceType::WeatherSensor)
        .map(|(d, _)| d.device_id)
        .collect();
    assert!(!expected.is_empty());
    assert_eq!(result.devices, expected);
    assert_eq!(result.emptied_at, None);
    assert_eq!(result, discover(&index, &req, &metadata(OwnerId(0), TrustLevel::Any)).unwrap());
}

#[test]
fn cluster_without_capability_empties_at_capability_stage() {
    let (devices, owners) = trust_fixture();
    let sor = SocialGraph::new(RelationKind::Sor, [], vec![]).unwrap();
    let index = index_for(&devices, &owners, &sor, None);
    let req = request(ApplicationType::new("irrigation"), Position { x: 0.1, y: 0.1 }, TrustLevel::Any);
    let r = discover(&index, &req, &metadata(OwnerId(0), TrustLevel::Any)).unwrap();
    assert!(r.devices.is_empty());
    assert_eq!(r.emptied_at, Some(Stage::Capability));
    assert!(r.stages.after_trust > 0);
}

#[test]
fn discover_matches_reference_on_city_grid() {
    let (city, index) = city(240, 9);
    let params = SyntheticCityParams::three_clusters(240, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for app in [ApplicationType::weather(), ApplicationType::transportation(), ApplicationType::computation()] {
        for cluster in &params.clusters {
            let private: Vec<_> = city.devices.iter().filter(|d| !d.is_public()).collect();
            let requester = private[rng.random_range(0..private.len())].owner_id;
            let mut previous: Option<BTreeSet<DeviceId>> = None;
            for level in levels() {
                let req = request(app.clone(), cluster.center, level);
                let r = discover(&index, &req, &metadata(requester, level)).unwrap();
                let expected = reference_filter(&index, &city.owners, r.clor_community, &app, requester, level);
                assert_eq!(r.devices, expected, "{app:?} {} {level}", cluster.name);
                let members: BTreeSet<_> = index.clor().members(r.clor_community).into_iter().collect();
                let now: BTreeSet<_> = r.devices.iter().copied().collect();
                assert!(now.is_subset(&members));
                if let Some(prev) = previous {
                    assert!(prev.is_subset(&now));
                }
                previous = Some(now);
            }
        }
    }
}

#[test]
fn permuted_table_gives_same_results() {
    let (city, index) = city(120, 5);
    let mut shuffled = city.devices.clone();
    shuffled.reverse();
    let sor = build_sor(&city.contacts, &SorRule::default()).unwrap();
    let other = index_for(&shuffled, &city.owners, &sor, Some(index.sfor().clone()));
    let req = request(ApplicationType::computation(), Position { x: 0.45, y: 0.8 }, TrustLevel::Friend);
    let requester = city.devices.iter().find(|d| !d.is_public()).unwrap().owner_id;
    let a = discover(&index, &req, &metadata(requester, TrustLevel::Friend)).unwrap();
    let b = discover(&other, &req, &metadata(requester, TrustLevel::Friend)).unwrap();
    assert_eq!(a.devices, b.devices);
}

#[test]
fn sor_filter_only_narrows() {
    let (city, index) = city(150, 3);
    let req = request(ApplicationType::computation(), Position { x: 0.2, y: 0.25 }, TrustLevel::Any);
    let md = metadata(city.devices[0].owner_id, TrustLevel::Any);
    let plain = discover(&index, &req, &md).unwrap();
    let narrowed = discover_with(&index, &req, &md, DiscoverOptions { sor_filter: true }).unwrap();
    assert!(narrowed.devices.iter().all(|d| plain.devices.contains(d)));
    assert_eq!(narrowed.stages.after_sor, Some(narrowed.devices.len()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trust_is_monotone(seed in 0u64..1000, x in 0.0f64..1.0, y in 0.0f64..1.0, pick in any::<prop::sample::Index>(), app in 0usize..3) {
        let (city, index) = city(90, seed);
        let app = [ApplicationType::weather(), ApplicationType::transportation(), ApplicationType::computation()][app].clone();
        let private: Vec<_> = city.devices.iter().filter(|d| !d.is_public()).collect();
        let requester = private[pick.index(private.len())].owner_id;
        let mut previous: Option<BTreeSet<DeviceId>> = None;
        for level in [TrustLevel::Owner, TrustLevel::Friend, TrustLevel::FriendOfFriend(2), TrustLevel::FriendOfFriend(3), TrustLevel::Any] {
            let req = request(app.clone(), Position { x, y }, level);
            let r = discover(&index, &req, &metadata(requester, level)).unwrap();
            let now: BTreeSet<_> = r.devices.into_iter().collect();
            if let Some(prev) = &previous {
                prop_assert!(prev.is_subset(&now));
            }
            previous = Some(now);
        }
    }
}
