//! Domain types shared by every stage of the pipeline.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OwnerId(pub u32);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for OwnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Kind of device as listed in a catalog.
///
/// Labels outside the built-in vocabulary parse to [`DeviceType::Custom`]; they
/// are only accepted when the capability map declares them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceType {
    Smartphone,
    Smartwatch,
    WeatherSensor,
    PersonalComputer,
    Tablet,
    TransportSensor,
    Other,
    Custom(String),
}

impl DeviceType {
    pub fn label(&self) -> &str {
        match self {
            DeviceType::Smartphone => "smartphone",
            DeviceType::Smartwatch => "smartwatch",
            DeviceType::WeatherSensor => "weather-sensor",
            DeviceType::PersonalComputer => "personal-computer",
            DeviceType::Tablet => "tablet",
            DeviceType::TransportSensor => "transport-sensor",
            DeviceType::Other => "other",
            DeviceType::Custom(label) => label,
        }
    }
}

impl FromStr for DeviceType {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let label = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        Ok(match label.as_str() {
            "smartphone" => DeviceType::Smartphone,
            "smartwatch" => DeviceType::Smartwatch,
            "weather-sensor" => DeviceType::WeatherSensor,
            "personal-computer" | "pc" => DeviceType::PersonalComputer,
            "tablet" => DeviceType::Tablet,
            "transport-sensor" => DeviceType::TransportSensor,
            "other" => DeviceType::Other,
            _ => DeviceType::Custom(label),
        })
    }
}

impl fmt::Display for DeviceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for DeviceType {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for DeviceType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        match s.parse() {
            Ok(t) => Ok(t),
            Err(never) => match never {},
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Private,
    Public,
}

impl FromStr for Visibility {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "private" => Ok(Visibility::Private),
            "public" => Ok(Visibility::Public),
            other => Err(Error::InvalidParameter(format!(
                "visibility must be `private` or `public`, got `{other}`"
            ))),
        }
    }
}

/// A point on the map, normalized to the unit square at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

impl FromStr for Position {
    type Err = Error;

    /// Parses `x,y`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("expected `x,y`, got `{s}`"));
        let (x, y) = s.split_once(',').ok_or_else(bad)?;
        let x: f64 = x.trim().parse().map_err(|_| bad())?;
        let y: f64 = y.trim().parse().map_err(|_| bad())?;
        Ok(Position { x, y })
    }
}

/// Application taxonomy label, e.g. `weather`. The closed set is whatever the
/// loaded configuration declares.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ApplicationType(String);

impl ApplicationType {
    pub fn new(name: impl AsRef<str>) -> Self {
        ApplicationType(name.as_ref().trim().to_ascii_lowercase())
    }

    pub fn weather() -> Self {
        Self::new("weather")
    }

    pub fn transportation() -> Self {
        Self::new("transportation")
    }

    pub fn computation() -> Self {
        Self::new("computation")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ApplicationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub device_id: DeviceId,
    pub device_type: DeviceType,
    pub owner_id: OwnerId,
    pub visibility: Visibility,
    pub position: Position,
    #[serde(default)]
    pub capabilities: BTreeSet<ApplicationType>,
}

impl DeviceRecord {
    pub fn is_public(&self) -> bool {
        self.visibility == Visibility::Public
    }

    pub fn can_serve(&self, application: &ApplicationType) -> bool {
        self.capabilities.contains(application)
    }
}

/// Which applications each device type can serve, keyed by device-type label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, BTreeSet<ApplicationType>>")]
pub struct CapabilityMap(BTreeMap<String, BTreeSet<ApplicationType>>);

impl From<BTreeMap<String, BTreeSet<ApplicationType>>> for CapabilityMap {
    fn from(entries: BTreeMap<String, BTreeSet<ApplicationType>>) -> Self {
        CapabilityMap::new(entries)
    }
}

impl CapabilityMap {
    pub fn new(entries: BTreeMap<String, BTreeSet<ApplicationType>>) -> Self {
        let entries = entries
            .into_iter()
            .map(|(label, apps)| {
                let label = match label.parse::<DeviceType>() {
                    Ok(t) => t.label().to_string(),
                    Err(never) => match never {},
                };
                (label, apps)
            })
            .collect();
        CapabilityMap(entries)
    }

    pub fn get(&self, device_type: &DeviceType) -> Option<&BTreeSet<ApplicationType>> {
        self.0.get(device_type.label())
    }

    pub fn declares(&self, device_type: &DeviceType) -> bool {
        self.0.contains_key(device_type.label())
    }

    pub fn applications(&self) -> BTreeSet<&ApplicationType> {
        self.0.values().flatten().collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &BTreeSet<ApplicationType>)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Fills each record's capability set from its device type. Undeclared
    /// types get an empty set, which validation reports.
    pub fn apply(&self, devices: &mut [DeviceRecord]) {
        for device in devices {
            device.capabilities = self.get(&device.device_type).cloned().unwrap_or_default();
        }
    }
}

impl Default for CapabilityMap {
    fn default() -> Self {
        let computation = || BTreeSet::from([ApplicationType::computation()]);
        CapabilityMap::new(BTreeMap::from([
            (
                "weather-sensor".to_string(),
                BTreeSet::from([ApplicationType::weather()]),
            ),
            (
                "transport-sensor".to_string(),
                BTreeSet::from([ApplicationType::transportation()]),
            ),
            ("personal-computer".to_string(), computation()),
            ("smartphone".to_string(), computation()),
            ("tablet".to_string(), computation()),
            ("smartwatch".to_string(), computation()),
        ]))
    }
}

/// Requester trust requirement, ordered from most to least restrictive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrustLevel {
    Owner,
    Friend,
    FriendOfFriend(u32),
    Any,
}

impl TrustLevel {
    pub fn friend_of_friend(hops: u32) -> Result<Self> {
        if hops < 2 {
            return Err(Error::InvalidParameter(format!(
                "friend-of-friend hop count must be >= 2, got {hops}"
            )));
        }
        Ok(TrustLevel::FriendOfFriend(hops))
    }

    /// Smallest SFOR weight a device must share with one of the requester's
    /// devices to be eligible. `None` means no trust filtering.
    pub fn min_sfor_weight(&self) -> Option<f64> {
        match *self {
            TrustLevel::Owner => Some(1.0),
            TrustLevel::Friend => Some(0.75),
            TrustLevel::FriendOfFriend(hops) => Some(1.0 / f64::from(hops)),
            TrustLevel::Any => None,
        }
    }
}

impl fmt::Display for TrustLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrustLevel::Owner => f.write_str("owner"),
            TrustLevel::Friend => f.write_str("friend"),
            TrustLevel::FriendOfFriend(n) => write!(f, "fof:{n}"),
            TrustLevel::Any => f.write_str("any"),
        }
    }
}

impl FromStr for TrustLevel {
    type Err = Error;

    /// Accepts `owner`, `friend`, `any`, and `fof:N` / `friend-of-friend:N`
    /// (bare `fof` means two hops).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (head, hops) = match s.split_once(':') {
            Some((head, hops)) => (head.to_string(), Some(hops.to_string())),
            None => (s.clone(), None),
        };
        match (head.as_str(), hops) {
            ("owner", None) => Ok(TrustLevel::Owner),
            ("friend", None) => Ok(TrustLevel::Friend),
            ("any" | "all", None) => Ok(TrustLevel::Any),
            ("fof" | "friend-of-friend", None) => TrustLevel::friend_of_friend(2),
            ("fof" | "friend-of-friend", Some(n)) => {
                let hops = n.trim().parse().map_err(|_| {
                    Error::InvalidParameter(format!("bad hop count in trust level `{s}`"))
                })?;
                TrustLevel::friend_of_friend(hops)
            }
            _ => Err(Error::InvalidParameter(format!("unknown trust level `{s}`"))),
        }
    }
}

impl Serialize for TrustLevel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TrustLevel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequestMetadata {
    pub requester_id: OwnerId,
    pub requester_position: Position,
    pub trust_level: TrustLevel,
}

impl RequestMetadata {
    pub fn new(
        requester_id: OwnerId,
        requester_position: Position,
        trust_level: TrustLevel,
    ) -> Result<Self> {
        if !requester_position.in_unit_square() {
            return Err(Error::InvalidParameter(format!(
                "requester position ({}, {}) outside the unit square",
                requester_position.x, requester_position.y
            )));
        }
        if let TrustLevel::FriendOfFriend(hops) = trust_level {
            TrustLevel::friend_of_friend(hops)?;
        }
        Ok(RequestMetadata {
            requester_id,
            requester_position,
            trust_level,
        })
    }
}

/// One meeting between two devices, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContactEvent {
    pub device_a: DeviceId,
    pub device_b: DeviceId,
    pub start_time: i64,
    pub end_time: i64,
}

impl ContactEvent {
    pub fn new(device_a: DeviceId, device_b: DeviceId, start_time: i64, end_time: i64) -> Result<Self> {
        if device_a == device_b {
            return Err(Error::InvalidParameter(format!(
                "contact event pairs device {device_a} with itself"
            )));
        }
        if end_time <= start_time {
            return Err(Error::InvalidParameter(format!(
                "contact event end {end_time} is not after start {start_time}"
            )));
        }
        Ok(ContactEvent {
            device_a,
            device_b,
            start_time,
            end_time,
        })
    }

    /// Unordered pair key with the smaller id first.
    pub fn pair(&self) -> (DeviceId, DeviceId) {
        if self.device_a < self.device_b {
            (self.device_a, self.device_b)
        } else {
            (self.device_b, self.device_a)
        }
    }

    pub fn duration_secs(&self) -> i64 {
        self.end_time - self.start_time
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    DuplicateId { device: DeviceId },
    PositionOutOfRange { device: DeviceId, position: Position },
    UnknownDeviceType { device: DeviceId, label: String },
    NoCapabilities { device: DeviceId },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::DuplicateId { device } => write!(f, "duplicate device_id {device}"),
            Finding::PositionOutOfRange { device, position } => write!(
                f,
                "device {device} position ({}, {}) outside the unit square",
                position.x, position.y
            ),
            Finding::UnknownDeviceType { device, label } => {
                write!(f, "device {device} has undeclared device type `{label}`")
            }
            Finding::NoCapabilities { device } => {
                write!(f, "device {device} maps to no application capability")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_accepted(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_accepted() {
            return Ok(());
        }
        let shown: Vec<String> = self.findings.iter().take(5).map(|f| f.to_string()).collect();
        let more = self.findings.len().saturating_sub(shown.len());
        let mut message = shown.join("; ");
        if more > 0 {
            message.push_str(&format!("; and {more} more"));
        }
        Err(Error::InvalidTable(message))
    }
}

pub fn validate_device_table(table: &[DeviceRecord], capability_map: &CapabilityMap) -> ValidationReport {
    let mut findings = Vec::new();
    let mut seen = HashSet::with_capacity(table.len());
    let mut reported = HashSet::new();
    for device in table {
        let id = device.device_id;
        if !seen.insert(id) && reported.insert(id) {
            findings.push(Finding::DuplicateId { device: id });
        }
        if !device.position.in_unit_square() {
            findings.push(Finding::PositionOutOfRange {
                device: id,
                position: device.position,
            });
        }
        match capability_map.get(&device.device_type) {
            None => findings.push(Finding::UnknownDeviceType {
                device: id,
                label: device.device_type.label().to_string(),
            }),
            Some(apps) if apps.is_empty() => findings.push(Finding::NoCapabilities { device: id }),
            Some(_) => {}
        }
    }
    ValidationReport { findings }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device(id: u32, label: &str, x: f64, y: f64) -> DeviceRecord {
        DeviceRecord {
            device_id: DeviceId(id),
            device_type: label.parse().unwrap(),
            owner_id: OwnerId(0),
            visibility: Visibility::Private,
            position: Position::new(x, y),
            capabilities: BTreeSet::new(),
        }
    }

    #[test]
    fn empty_table_is_accepted() {
        let report = validate_device_table(&[], &CapabilityMap::default());
        assert!(report.is_accepted());
    }

    #[test]
    fn duplicate_id_is_reported_once() {
        let table = vec![
            device(7, "smartphone", 0.1, 0.1),
            device(7, "tablet", 0.2, 0.2),
            device(7, "tablet", 0.3, 0.2),
        ];
        let report = validate_device_table(&table, &CapabilityMap::default());
        assert_eq!(
            report.findings,
            vec![Finding::DuplicateId {
                device: DeviceId(7)
            }]
        );
        assert!(!report.is_accepted());
    }

    #[test]
    fn out_of_range_and_unknown_type() {
        let table = vec![device(1, "toaster", 0.5, 0.5), device(2, "tablet", 1.5, 0.0)];
        let report = validate_device_table(&table, &CapabilityMap::default());
        assert_eq!(report.findings.len(), 2);
        assert!(matches!(
            &report.findings[0],
            Finding::UnknownDeviceType { label, .. } if label == "toaster"
        ));
        assert!(matches!(report.findings[1], Finding::PositionOutOfRange { .. }));
    }

    #[test]
    fn other_type_needs_declaration() {
        let table = vec![device(1, "other", 0.5, 0.5)];
        assert!(!validate_device_table(&table, &CapabilityMap::default()).is_accepted());

        let mut entries = BTreeMap::new();
        entries.insert("other".to_string(), BTreeSet::from([ApplicationType::computation()]));
        assert!(validate_device_table(&table, &CapabilityMap::new(entries)).is_accepted());
    }

    #[test]
    fn declared_type_without_capabilities() {
        let mut entries = BTreeMap::new();
        entries.insert("drone".to_string(), BTreeSet::new());
        let table = vec![device(3, "drone", 0.5, 0.5)];
        let report = validate_device_table(&table, &CapabilityMap::new(entries));
        assert_eq!(
            report.findings,
            vec![Finding::NoCapabilities {
                device: DeviceId(3)
            }]
        );
    }

    #[test]
    fn default_capabilities() {
        let map = CapabilityMap::default();
        let mut table = vec![device(1, "weather_sensor", 0.0, 0.0), device(2, "PC", 1.0, 1.0)];
        map.apply(&mut table);
        assert!(table[0].can_serve(&ApplicationType::weather()));
        assert!(table[1].can_serve(&ApplicationType::computation()));
        assert!(!table[1].can_serve(&ApplicationType::weather()));
    }

    #[test]
    fn trust_level_parsing() {
        assert_eq!("owner".parse::<TrustLevel>().unwrap(), TrustLevel::Owner);
        assert_eq!("FoF:3".parse::<TrustLevel>().unwrap(), TrustLevel::FriendOfFriend(3));
        assert_eq!("fof".parse::<TrustLevel>().unwrap(), TrustLevel::FriendOfFriend(2));
        assert!("fof:1".parse::<TrustLevel>().is_err());
        assert!("stranger".parse::<TrustLevel>().is_err());
        assert_eq!(TrustLevel::FriendOfFriend(4).min_sfor_weight(), Some(0.25));
        let json = serde_json::to_string(&TrustLevel::FriendOfFriend(2)).unwrap();
        assert_eq!(json, "\"fof:2\"");
        assert_eq!(serde_json::from_str::<TrustLevel>(&json).unwrap(), TrustLevel::FriendOfFriend(2));
    }

    #[test]
    fn metadata_checks() {
        assert!(RequestMetadata::new(OwnerId(1), Position::new(0.2, 1.2), TrustLevel::Any).is_err());
        assert!(RequestMetadata::new(OwnerId(1), Position::new(0.2, 0.2), TrustLevel::FriendOfFriend(1)).is_err());
        assert!(RequestMetadata::new(OwnerId(1), Position::new(0.2, 0.2), TrustLevel::Friend).is_ok());
    }

    #[test]
    fn contact_event_invariants() {
        assert!(ContactEvent::new(DeviceId(1), DeviceId(1), 0, 10).is_err());
        assert!(ContactEvent::new(DeviceId(1), DeviceId(2), 10, 10).is_err());
        let e = ContactEvent::new(DeviceId(5), DeviceId(2), 0, 60).unwrap();
        assert_eq!(e.pair(), (DeviceId(2), DeviceId(5)));
        assert_eq!(e.duration_secs(), 60);
    }
}
