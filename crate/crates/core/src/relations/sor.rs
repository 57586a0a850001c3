use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, RelationKind, SocialGraph};
use crate::model::{ContactEvent, DeviceId};

/// When repeated meetings turn into a social-object relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SorRule {
    pub min_meetings: usize,
    pub min_total_minutes: f64,
    /// Largest allowed idle time between one meeting's end and the next
    /// meeting's start.
    pub max_gap_hours: f64,
    /// Total contact time that saturates the edge weight at 1.
    pub reference_minutes: f64,
}

impl Default for SorRule {
    fn default() -> Self {
        SorRule {
            min_meetings: 3,
            min_total_minutes: 30.0,
            max_gap_hours: 6.0,
            reference_minutes: 120.0,
        }
    }
}

impl SorRule {
    pub fn validate(&self) -> Result<()> {
        if self.min_meetings < 1 || !(self.min_total_minutes > 0.0) || !(self.max_gap_hours > 0.0) || !(self.reference_minutes > 0.0) {
            return Err(Error::InvalidParameter(format!("invalid SOR rule {self:?}")));
        }
        Ok(())
    }

    /// Qualifying contact minutes for one pair's meetings (sorted by start),
    /// or `None` when the pair does not qualify.
    ///
    /// Meetings are chained while the gap to the previous one stays within
    /// `max_gap_hours`; a chain qualifies when it holds at least
    /// `min_meetings` meetings and `min_total_minutes` of contact.
    pub fn qualifying_minutes(&self, meetings: &[ContactEvent]) -> Option<f64> {
        let max_gap = self.max_gap_hours * 3600.0;
        let mut total = 0.0;
        let mut qualified = false;
        let mut chain_count = 0usize;
        let mut chain_secs = 0i64;
        let mut chain_end: Option<i64> = None;
        let mut close = |count: usize, secs: i64| {
            let minutes = secs as f64 / 60.0;
            if count >= self.min_meetings && minutes >= self.min_total_minutes {
                qualified = true;
                total += minutes;
            }
        };
        for m in meetings {
            if let Some(end) = chain_end {
                if (m.start_time - end) as f64 > max_gap {
                    close(chain_count, chain_secs);
                    chain_count = 0;
                    chain_secs = 0;
                    chain_end = None;
                }
            }
            chain_count += 1;
            chain_secs += m.duration_secs();
            chain_end = Some(chain_end.map_or(m.end_time, |e| e.max(m.end_time)));
        }
        close(chain_count, chain_secs);
        qualified.then_some(total)
    }

    pub fn weight(&self, minutes: f64) -> f64 {
        (minutes / self.reference_minutes).min(1.0)
    }
}

/// Social-object graph from a contact trace. Nodes are the devices seen in
/// the trace.
pub fn build_sor(trace: &[ContactEvent], rule: &SorRule) -> Result<SocialGraph> {
    rule.validate()?;
    let mut by_pair: BTreeMap<(DeviceId, DeviceId), Vec<ContactEvent>> = BTreeMap::new();
    for event in trace {
        by_pair.entry(event.pair()).or_default().push(*event);
    }
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for ((a, b), mut meetings) in by_pair {
        nodes.push(a);
        nodes.push(b);
        meetings.sort_by_key(|m| (m.start_time, m.end_time));
        if let Some(minutes) = rule.qualifying_minutes(&meetings) {
            edges.push(Edge {
                a,
                b,
                weight: rule.weight(minutes),
            });
        }
    }
    SocialGraph::new(RelationKind::Sor, nodes, edges)
}
