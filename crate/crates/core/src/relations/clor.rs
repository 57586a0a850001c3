use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{Edge, RelationKind, SocialGraph};
use crate::model::{DeviceRecord, Position};

pub const DEFAULT_CLOR_THRESHOLD: f64 = 0.8;

/// Longest distance between two points of the normalized map.
pub const UNIT_SQUARE_DIAGONAL: f64 = std::f64::consts::SQRT_2;

/// Co-location strength `1 - d/d_max` for Euclidean distance `d`.
pub fn clor_weight(a: &Position, b: &Position, d_max: f64) -> Result<f64> {
    if !(d_max > 0.0) {
        return Err(Error::InvalidParameter(format!("d_max must be positive, got {d_max}")));
    }
    let distance = a.distance(b);
    if distance > d_max {
        return Err(Error::DistanceExceedsMax { distance, d_max });
    }
    Ok(1.0 - distance / d_max)
}

/// Links every device pair whose co-location weight reaches `threshold`.
///
/// Candidate pairs come from a uniform grid whose cell side equals the
/// largest linkable distance, so only neighbouring cells are compared.
pub fn build_clor(devices: &[DeviceRecord], threshold: f64) -> Result<SocialGraph> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!("CLOR threshold {threshold} outside [0, 1]")));
    }
    let d_max = UNIT_SQUARE_DIAGONAL;
    let reach = ((1.0 - threshold) * d_max).max(1e-9) * (1.0 + 1e-9);
    let cell_of = |p: &Position| ((p.x / reach).floor() as i64, (p.y / reach).floor() as i64);

    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, d) in devices.iter().enumerate() {
        grid.entry(cell_of(&d.position)).or_default().push(i);
    }

    let mut edges = Vec::new();
    for di in devices {
        let (cx, cy) = cell_of(&di.position);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    let dj = &devices[j];
                    if dj.device_id <= di.device_id {
                        continue;
                    }
                    let weight = clor_weight(&di.position, &dj.position, d_max)?;
                    if weight >= threshold && weight > 0.0 {
                        edges.push(Edge {
                            a: di.device_id,
                            b: dj.device_id,
                            weight,
                        });
                    }
                }
            }
        }
    }
    SocialGraph::new(RelationKind::Clor, devices.iter().map(|d| d.device_id), edges)
}
