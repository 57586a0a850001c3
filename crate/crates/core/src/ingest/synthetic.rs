use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::OwnerGraph;
use crate::ingest::generate_watts_strogatz;
use crate::model::{
    ApplicationType, CapabilityMap, ContactEvent, DeviceId, DeviceRecord, DeviceType, OwnerId, Position, Visibility,
};

const MINUTE: i64 = 60;
const HOUR: i64 = 3600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialCluster {
    pub name: String,
    pub center: Position,
    pub radius: f64,
    /// Fraction of all devices placed in this cluster.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCityParams {
    pub n_devices: usize,
    pub n_owners: usize,
    pub clusters: Vec<SpatialCluster>,
    #[serde(default = "default_ws_k")]
    pub ws_k: usize,
    #[serde(default = "default_ws_p")]
    pub ws_p: f64,
    #[serde(default = "default_trace_hours")]
    pub trace_length_hours: f64,
    #[serde(default)]
    pub seed: u64,
    /// Relative frequency of each device type label.
    #[serde(default = "default_type_mix")]
    pub type_mix: BTreeMap<String, f64>,
    /// Probability that a weather or transport sensor is public.
    #[serde(default = "default_public_sensor_fraction")]
    pub public_sensor_fraction: f64,
    /// Pairs that must satisfy the SOR rule.
    #[serde(default)]
    pub sor_pairs: Vec<(u32, u32)>,
    /// Extra random qualifying pairs among co-located computation devices.
    #[serde(default)]
    pub n_sor_pairs: usize,
    /// Pairs that meet but each break exactly one SOR clause.
    #[serde(default)]
    pub n_decoy_pairs: usize,
}

fn default_ws_k() -> usize {
    6
}

fn default_ws_p() -> f64 {
    0.1
}

fn default_trace_hours() -> f64 {
    72.0
}

fn default_public_sensor_fraction() -> f64 {
    0.5
}

fn default_type_mix() -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("smartphone".into(), 0.30),
        ("smartwatch".into(), 0.05),
        ("tablet".into(), 0.10),
        ("personal-computer".into(), 0.15),
        ("weather-sensor".into(), 0.20),
        ("transport-sensor".into(), 0.20),
    ])
}

impl SyntheticCityParams {
    /// Three well-separated districts, used by the demos and tests.
    pub fn three_clusters(n_devices: usize, seed: u64) -> Self {
        SyntheticCityParams {
            n_devices,
            n_owners: (n_devices / 3).max(8),
            clusters: vec![
                SpatialCluster {
                    name: "west".into(),
                    center: Position::new(0.2, 0.25),
                    radius: 0.1,
                    share: 0.4,
                },
                SpatialCluster {
                    name: "beach".into(),
                    center: Position::new(0.8, 0.35),
                    radius: 0.1,
                    share: 0.3,
                },
                SpatialCluster {
                    name: "north".into(),
                    center: Position::new(0.45, 0.8),
                    radius: 0.1,
                    share: 0.3,
                },
            ],
            ws_k: default_ws_k(),
            ws_p: default_ws_p(),
            trace_length_hours: default_trace_hours(),
            seed,
            type_mix: default_type_mix(),
            public_sensor_fraction: default_public_sensor_fraction(),
            sor_pairs: Vec::new(),
            n_sor_pairs: n_devices / 10,
            n_decoy_pairs: n_devices / 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_devices == 0 {
            return bad("n_devices must be positive".into());
        }
        if self.clusters.is_empty() {
            return bad("at least one spatial cluster is required".into());
        }
        let share_sum: f64 = self.clusters.iter().map(|c| c.share).sum();
        if (share_sum - 1.0).abs() > 1e-9 {
            return bad(format!("cluster shares sum to {share_sum}, expected 1"));
        }
        for c in &self.clusters {
            if c.share < 0.0 || c.radius <= 0.0 {
                return bad(format!("cluster `{}` needs share >= 0 and radius > 0", c.name));
            }
            let inside = [c.center.x - c.radius, c.center.y - c.radius, c.center.x + c.radius, c.center.y + c.radius]
                .iter()
                .all(|v| (0.0..=1.0).contains(v));
            if !inside {
                return bad(format!("cluster `{}` disc leaves the unit square", c.name));
            }
        }
        if self.ws_k < 2 || self.ws_k % 2 != 0 || self.ws_k >= self.n_owners {
            return bad(format!(
                "ws_k must be even, >= 2 and below n_owners ({}), got {}",
                self.n_owners, self.ws_k
            ));
        }
        if !(0.0..=1.0).contains(&self.ws_p) {
            return bad(format!("ws_p {} outside [0, 1]", self.ws_p));
        }
        if self.trace_length_hours < 24.0 {
            return bad("trace_length_hours must be at least 24".into());
        }
        if !(0.0..=1.0).contains(&self.public_sensor_fraction) {
            return bad("public_sensor_fraction outside [0, 1]".into());
        }
        if self.type_mix.is_empty() || self.type_mix.values().any(|w| *w < 0.0) || self.type_mix.values().sum::<f64>() <= 0.0 {
            return bad("type_mix needs non-negative weights with a positive sum".into());
        }
        for &(a, b) in &self.sor_pairs {
            if a == b || a as usize >= self.n_devices || b as usize >= self.n_devices {
                return bad(format!("sor pair ({a}, {b}) is not two distinct generated devices"));
            }
        }
        Ok(())
    }
}

/// Which SOR clause a decoy pair breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoyKind {
    TooFewMeetings,
    TooShort,
    GapTooLong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCity {
    pub devices: Vec<DeviceRecord>,
    pub owners: OwnerGraph,
    pub contacts: Vec<ContactEvent>,
    /// Cluster index of each device, aligned with `devices`.
    pub cluster_of: Vec<usize>,
    pub sor_pairs: BTreeSet<(DeviceId, DeviceId)>,
    pub decoy_pairs: Vec<((DeviceId, DeviceId), DecoyKind)>,
}

fn cluster_counts(n: usize, clusters: &[SpatialCluster]) -> Vec<usize> {
    let exact: Vec<f64> = clusters.iter().map(|c| c.share * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|v| v.floor() as usize).collect();
    let mut remaining = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        counts[i] += 1;
        remaining -= 1;
    }
    counts
}

/// Meeting schedule (start, end) beginning at `t0`.
fn schedule(t0: i64, durations: &[i64], gaps: &[i64]) -> Vec<(i64, i64)> {
    let mut out = Vec::with_capacity(durations.len());
    let mut t = t0;
    for (i, &d) in durations.iter().enumerate() {
        out.push((t, t + d));
        t += d;
        if let Some(&g) = gaps.get(i) {
            t += g;
        }
    }
    out
}

fn pair_key(a: DeviceId, b: DeviceId) -> (DeviceId, DeviceId) {
    (a.min(b), a.max(b))
}

/// Seeded synthetic city: devices in cluster discs, a Watts–Strogatz owner
/// network and a contact trace whose SOR-qualifying pairs are known.
pub fn generate_synthetic_city(params: &SyntheticCityParams) -> Result<SyntheticCity> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let capability_map = CapabilityMap::default();
    let type_labels: Vec<(&String, f64)> = params.type_mix.iter().map(|(k, v)| (k, *v)).collect();
    let mix_total: f64 = type_labels.iter().map(|(_, w)| w).sum();

    let counts = cluster_counts(params.n_devices, &params.clusters);
    let mut devices = Vec::with_capacity(params.n_devices);
    let mut cluster_of = Vec::with_capacity(params.n_devices);
    let mut next_private_owner = 0usize;
    for (ci, (cluster, &count)) in params.clusters.iter().zip(&counts).enumerate() {
        for _ in 0..count {
            let r = cluster.radius * rng.random::<f64>().sqrt();
            let theta = TAU * rng.random::<f64>();
            let position = Position::new(
                (cluster.center.x + r * theta.cos()).clamp(0.0, 1.0),
                (cluster.center.y + r * theta.sin()).clamp(0.0, 1.0),
            );
            let mut pick = rng.random::<f64>() * mix_total;
            let mut label = type_labels[type_labels.len() - 1].0;
            for (l, w) in &type_labels {
                if pick < *w {
                    label = l;
                    break;
                }
                pick -= w;
            }
            let device_type: DeviceType = match label.parse() {
                Ok(t) => t,
                Err(never) => match never {},
            };
            let is_sensor = matches!(device_type, DeviceType::WeatherSensor | DeviceType::TransportSensor);
            let public_roll = rng.random::<f64>();
            let visibility = if is_sensor && public_roll < params.public_sensor_fraction {
                Visibility::Public
            } else {
                Visibility::Private
            };
            let owner_id = match visibility {
                Visibility::Private => {
                    let o = next_private_owner % params.n_owners;
                    next_private_owner += 1;
                    OwnerId(o as u32)
                }
                Visibility::Public => OwnerId(params.n_owners as u32),
            };
            devices.push(DeviceRecord {
                device_id: DeviceId(devices.len() as u32),
                device_type,
                owner_id,
                visibility,
                position,
                capabilities: BTreeSet::new(),
            });
            cluster_of.push(ci);
        }
    }
    capability_map.apply(&mut devices);

    let owners = generate_watts_strogatz(params.n_owners, params.ws_k, params.ws_p, rng.random())?;

    let trace_len = (params.trace_length_hours * HOUR as f64) as i64;
    let computation = ApplicationType::computation();
    let mut by_cluster: Vec<Vec<DeviceId>> = vec![Vec::new(); params.clusters.len()];
    for (d, &c) in devices.iter().zip(&cluster_of) {
        if d.can_serve(&computation) {
            by_cluster[c].push(d.device_id);
        }
    }

    let mut sor_pairs: BTreeSet<(DeviceId, DeviceId)> = params
        .sor_pairs
        .iter()
        .map(|&(a, b)| pair_key(DeviceId(a), DeviceId(b)))
        .collect();
    let mut used = sor_pairs.clone();
    let draw_pair = |rng: &mut ChaCha8Rng, used: &mut BTreeSet<(DeviceId, DeviceId)>| {
        let eligible: Vec<&Vec<DeviceId>> = by_cluster.iter().filter(|m| m.len() >= 2).collect();
        for _ in 0..1000 {
            let members = eligible.choose(rng)?;
            let a = *members.choose(rng)?;
            let b = *members.choose(rng)?;
            if a != b && used.insert(pair_key(a, b)) {
                return Some(pair_key(a, b));
            }
        }
        None
    };
    for _ in 0..params.n_sor_pairs {
        match draw_pair(&mut rng, &mut used) {
            Some(pair) => {
                sor_pairs.insert(pair);
            }
            None => break,
        }
    }
    let mut decoy_pairs = Vec::new();
    let kinds = [DecoyKind::TooFewMeetings, DecoyKind::TooShort, DecoyKind::GapTooLong];
    for i in 0..params.n_decoy_pairs {
        match draw_pair(&mut rng, &mut used) {
            Some(pair) => decoy_pairs.push((pair, kinds[i % kinds.len()])),
            None => break,
        }
    }

    let mut contacts = Vec::new();
    let mut emit = |rng: &mut ChaCha8Rng, pair: (DeviceId, DeviceId), durations: Vec<i64>, gaps: Vec<i64>| {
        let span: i64 = durations.iter().sum::<i64>() + gaps.iter().sum::<i64>();
        let t0 = rng.random_range(0..=(trace_len - span).max(0));
        let (a, b) = if rng.random::<bool>() { pair } else { (pair.1, pair.0) };
        for (start, end) in schedule(t0, &durations, &gaps) {
            contacts.push(ContactEvent::new(a, b, start, end).expect("generated meetings are well-formed"));
        }
    };
    for &pair in &sor_pairs {
        let meetings = rng.random_range(3..=5usize);
        let durations: Vec<i64> = (0..meetings).map(|_| rng.random_range(10..=20) * MINUTE).collect();
        let gaps: Vec<i64> = (1..meetings).map(|_| rng.random_range(30..=330) * MINUTE).collect();
        emit(&mut rng, pair, durations, gaps);
    }
    for &(pair, kind) in &decoy_pairs {
        let (durations, gaps) = match kind {
            DecoyKind::TooFewMeetings => (
                (0..2).map(|_| rng.random_range(20..=40) * MINUTE).collect(),
                vec![rng.random_range(30..=300) * MINUTE],
            ),
            DecoyKind::TooShort => (
                (0..3).map(|_| rng.random_range(5..=9) * MINUTE).collect::<Vec<_>>(),
                (0..2).map(|_| rng.random_range(30..=300) * MINUTE).collect(),
            ),
            DecoyKind::GapTooLong => {
                let long = rng.random_range(7 * 60..=10 * 60) * MINUTE;
                let short = rng.random_range(30..=300) * MINUTE;
                let gaps = if rng.random::<bool>() { vec![long, short] } else { vec![short, long] };
                ((0..3).map(|_| rng.random_range(15..=20) * MINUTE).collect(), gaps)
            }
        };
        emit(&mut rng, pair, durations, gaps);
    }
    contacts.sort_by_key(|e| (e.start_time, e.end_time, e.pair()));

    Ok(SyntheticCity {
        devices,
        owners,
        contacts,
        cluster_of,
        sor_pairs,
        decoy_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn devices_stay_in_their_discs() {
        let params = SyntheticCityParams::three_clusters(300, 11);
        let city = generate_synthetic_city(&params).unwrap();
        assert_eq!(city.devices.len(), 300);
        for (d, &c) in city.devices.iter().zip(&city.cluster_of) {
            let cluster = &params.clusters[c];
            assert!(d.position.distance(&cluster.center) <= cluster.radius + 1e-12);
            assert!(!d.capabilities.is_empty());
        }
        let per_cluster: Vec<usize> = (0..3).map(|c| city.cluster_of.iter().filter(|&&x| x == c).count()).collect();
        assert_eq!(per_cluster, [120, 90, 90]);
    }

    #[test]
    fn same_seed_same_city() {
        let params = SyntheticCityParams::three_clusters(200, 5);
        assert_eq!(generate_synthetic_city(&params).unwrap(), generate_synthetic_city(&params).unwrap());
        let mut other = params.clone();
        other.seed = 6;
        assert_ne!(generate_synthetic_city(&params).unwrap(), generate_synthetic_city(&other).unwrap());
    }

    #[test]
    fn private_owners_round_robin() {
        let params = SyntheticCityParams::three_clusters(120, 2);
        let city = generate_synthetic_city(&params).unwrap();
        let private: Vec<_> = city.devices.iter().filter(|d| !d.is_public()).collect();
        for (i, d) in private.iter().enumerate() {
            assert_eq!(d.owner_id, OwnerId((i % params.n_owners) as u32));
        }
        assert!(private.iter().all(|d| city.owners.contains(d.owner_id)));
    }

    #[test]
    fn largest_remainder_counts() {
        let clusters: Vec<SpatialCluster> = [0.5, 0.25, 0.25]
            .iter()
            .map(|&share| SpatialCluster {
                name: String::new(),
                center: Position::new(0.5, 0.5),
                radius: 0.1,
                share,
            })
            .collect();
        assert_eq!(cluster_counts(7, &clusters), [3, 2, 2]);
        assert_eq!(cluster_counts(8, &clusters), [4, 2, 2]);
        assert_eq!(cluster_counts(0, &clusters), [0, 0, 0]);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = SyntheticCityParams::three_clusters(100, 0);
        p.clusters[0].share = 0.5;
        assert!(generate_synthetic_city(&p).is_err());
        let mut p = SyntheticCityParams::three_clusters(100, 0);
        p.ws_k = 3;
        assert!(generate_synthetic_city(&p).is_err());
        let mut p = SyntheticCityParams::three_clusters(100, 0);
        p.clusters[1].center = Position::new(0.95, 0.5);
        assert!(generate_synthetic_city(&p).is_err());
    }
}
