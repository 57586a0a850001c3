use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{parse_delimited, render_delimited};
use crate::model::{
    validate_device_table, CapabilityMap, DeviceId, DeviceRecord, DeviceType, OwnerId, Position, Visibility,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogFormat {
    Delimited,
    Json,
}

impl CatalogFormat {
    /// `.json` means JSON, anything else is delimited text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => CatalogFormat::Json,
            _ => CatalogFormat::Delimited,
        }
    }
}

/// Axis-aligned map rectangle in raw catalog coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub const UNIT: BoundingBox = BoundingBox {
        x_min: 0.0,
        y_min: 0.0,
        x_max: 1.0,
        y_max: 1.0,
    };

    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        if !(x_max > x_min && y_max > y_min) || ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "degenerate bounding box ({x_min}, {y_min}, {x_max}, {y_max})"
            )));
        }
        Ok(BoundingBox { x_min, y_min, x_max, y_max })
    }

    pub fn contains(&self, p: &Position) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    pub fn normalize(&self, p: &Position) -> Position {
        Position::new(
            (p.x - self.x_min) / (self.x_max - self.x_min),
            (p.y - self.y_min) / (self.y_max - self.y_min),
        )
    }
}

impl FromStr for BoundingBox {
    type Err = Error;

    /// Parses `x_min,y_min,x_max,y_max`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidParameter(format!("bad bounding box `{s}`")))?;
        match parts.as_slice() {
            &[a, b, c, d] => BoundingBox::new(a, b, c, d),
            _ => Err(Error::InvalidParameter(format!(
                "bounding box needs four numbers, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawDevice {
    device_id: u32,
    device_type: String,
    owner_id: u32,
    visibility: String,
    x: f64,
    y: f64,
}

#[derive(Debug, Deserialize)]
struct JsonCatalog {
    schema_version: u32,
    #[serde(default)]
    bbox: Option<BoundingBox>,
    devices: Vec<RawDevice>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum JsonDocument {
    Catalog(JsonCatalog),
    Bare(Vec<RawDevice>),
}

fn record(raw: &RawDevice, bbox: &BoundingBox) -> Result<DeviceRecord> {
    let device_type = match raw.device_type.parse::<DeviceType>() {
        Ok(t) => t,
        Err(never) => match never {},
    };
    Ok(DeviceRecord {
        device_id: DeviceId(raw.device_id),
        device_type,
        owner_id: OwnerId(raw.owner_id),
        visibility: raw.visibility.parse::<Visibility>()?,
        position: bbox.normalize(&Position::new(raw.x, raw.y)),
        capabilities: BTreeSet::new(),
    })
}

fn parse_bbox_meta(meta: Option<&String>) -> Result<BoundingBox> {
    meta.map_or(Ok(BoundingBox::UNIT), |s| s.parse())
}

/// Parses a catalog, normalizes positions through the declared bounding box
/// (unit square when none is declared), applies the capability map and
/// rejects the table if validation finds anything.
pub fn parse_devices(text: &str, format: CatalogFormat, context: &str, capability_map: &CapabilityMap) -> Result<Vec<DeviceRecord>> {
    let mut devices = match format {
        CatalogFormat::Delimited => {
            let table = parse_delimited(text, context)?;
            let bbox = parse_bbox_meta(table.meta.get("bbox"))?;
            let cols = [
                table.column("device_id")?,
                table.column("device_type")?,
                table.column("owner_id")?,
                table.column("visibility")?,
                table.column("x")?,
                table.column("y")?,
            ];
            let mut out = Vec::with_capacity(table.rows.len());
            for (line, row) in &table.rows {
                let raw = RawDevice {
                    device_id: table.field(*line, row, cols[0], "device_id")?,
                    device_type: row[cols[1]].clone(),
                    owner_id: table.field(*line, row, cols[2], "owner_id")?,
                    visibility: row[cols[3]].clone(),
                    x: table.field(*line, row, cols[4], "x")?,
                    y: table.field(*line, row, cols[5], "y")?,
                };
                out.push(record(&raw, &bbox).map_err(|e| table.parse_error(*line, e.to_string()))?);
            }
            out
        }
        CatalogFormat::Json => {
            let doc: JsonDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
                context: context.to_string(),
                line: e.line() as u64,
                message: e.to_string(),
            })?;
            let (bbox, raws) = match doc {
                JsonDocument::Catalog(c) => {
                    if c.schema_version != crate::io::FILE_SCHEMA_VERSION {
                        return Err(Error::SchemaVersion {
                            context: context.to_string(),
                            found: c.schema_version,
                            expected: crate::io::FILE_SCHEMA_VERSION,
                        });
                    }
                    (c.bbox.unwrap_or(BoundingBox::UNIT), c.devices)
                }
                JsonDocument::Bare(devices) => (BoundingBox::UNIT, devices),
            };
            raws.iter().map(|r| record(r, &bbox)).collect::<Result<_>>()?
        }
    };
    capability_map.apply(&mut devices);
    validate_device_table(&devices, capability_map).into_result()?;
    Ok(devices)
}

pub fn load_devices(path: &Path, format: CatalogFormat, capability_map: &CapabilityMap) -> Result<Vec<DeviceRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_devices(&text, format, &path.display().to_string(), capability_map)
}

/// Delimited catalog text for already-normalized devices.
pub fn write_devices(devices: &[DeviceRecord]) -> String {
    render_delimited(
        &[("bbox", "0,0,1,1".into())],
        &["device_id", "device_type", "owner_id", "visibility", "x", "y"],
        devices.iter().map(|d| {
            vec![
                d.device_id.to_string(),
                d.device_type.to_string(),
                d.owner_id.to_string(),
                match d.visibility {
                    Visibility::Private => "private".into(),
                    Visibility::Public => "public".into(),
                },
                d.position.x.to_string(),
                d.position.y.to_string(),
            ]
        }),
    )
}

/// Keeps devices inside `area` (given in the devices' current unit-square
/// coordinates) and rescales their positions so the area becomes the unit
/// square.
pub fn restrict_to_area(devices: &[DeviceRecord], area: &BoundingBox) -> Vec<DeviceRecord> {
    devices
        .iter()
        .filter(|d| area.contains(&d.position))
        .map(|d| DeviceRecord {
            position: area.normalize(&d.position),
            ..d.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ApplicationType;

    const HEADER: &str = "# schema_version: 1\n# bbox: 0,0,200,100\ndevice_id,device_type,owner_id,visibility,x,y\n";

    #[test]
    fn normalizes_by_bbox() {
        let text = format!("{HEADER}1,smartphone,10,private,50,25\n2,weather-sensor,0,public,200,100\n");
        let devices = parse_devices(&text, CatalogFormat::Delimited, "t", &CapabilityMap::default()).unwrap();
        assert_eq!(devices.len(), 2);
        assert_eq!(devices[0].position, Position::new(0.25, 0.25));
        assert_eq!(devices[1].position, Position::new(1.0, 1.0));
        assert!(devices[1].is_public());
        assert!(devices[1].can_serve(&ApplicationType::weather()));
    }

    #[test]
    fn empty_file_with_header() {
        let devices = parse_devices(HEADER, CatalogFormat::Delimited, "t", &CapabilityMap::default()).unwrap();
        assert!(devices.is_empty());
    }

    #[test]
    fn parse_error_names_line() {
        let text = format!("{HEADER}1,smartphone,10,private,50,25\n2,tablet,x,private,1,1\n");
        match parse_devices(&text, CatalogFormat::Delimited, "t", &CapabilityMap::default()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 5);
                assert!(message.contains("owner_id"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column_is_named() {
        let text = "# schema_version: 1\ndevice_id,device_type,owner_id,x,y\n";
        match parse_devices(text, CatalogFormat::Delimited, "t", &CapabilityMap::default()) {
            Err(Error::MissingField { field, .. }) => assert_eq!(field, "visibility"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_invalid_table() {
        let text = format!("{HEADER}1,smartphone,10,private,50,25\n1,tablet,10,private,5,5\n");
        assert!(matches!(
            parse_devices(&text, CatalogFormat::Delimited, "t", &CapabilityMap::default()),
            Err(Error::InvalidTable(_))
        ));
        let text = format!("{HEADER}1,smartphone,10,private,250,25\n");
        assert!(parse_devices(&text, CatalogFormat::Delimited, "t", &CapabilityMap::default()).is_err());
    }

    #[test]
    fn json_forms() {
        let doc = r#"{"schema_version":1,"bbox":{"x_min":0,"y_min":0,"x_max":10,"y_max":10},
            "devices":[{"device_id":3,"device_type":"tablet","owner_id":1,"visibility":"private","x":5,"y":1}]}"#;
        let devices = parse_devices(doc, CatalogFormat::Json, "t", &CapabilityMap::default()).unwrap();
        assert_eq!(devices[0].position, Position::new(0.5, 0.1));
        let bare = r#"[{"device_id":3,"device_type":"tablet","owner_id":1,"visibility":"private","x":0.5,"y":0.1}]"#;
        let devices = parse_devices(bare, CatalogFormat::Json, "t", &CapabilityMap::default()).unwrap();
        assert_eq!(devices[0].position, Position::new(0.5, 0.1));
    }

    #[test]
    fn write_then_parse() {
        let text = format!("{HEADER}1,smartphone,10,private,50,25\n2,weather-sensor,0,public,13,97\n");
        let devices = parse_devices(&text, CatalogFormat::Delimited, "t", &CapabilityMap::default()).unwrap();
        let again = parse_devices(&write_devices(&devices), CatalogFormat::Delimited, "t", &CapabilityMap::default()).unwrap();
        assert_eq!(devices, again);
    }

    #[test]
    fn area_restriction_rescales() {
        let text = format!("{HEADER}1,smartphone,10,private,100,50\n2,tablet,10,private,10,10\n");
        let devices = parse_devices(&text, CatalogFormat::Delimited, "t", &CapabilityMap::default()).unwrap();
        let area = BoundingBox::new(0.25, 0.25, 0.75, 0.75).unwrap();
        let inside = restrict_to_area(&devices, &area);
        assert_eq!(inside.len(), 1);
        assert_eq!(inside[0].position, Position::new(0.5, 0.5));
    }
}
