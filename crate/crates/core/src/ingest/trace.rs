use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{parse_delimited, render_delimited};
use crate::model::{ContactEvent, DeviceId};

/// Parses `device_a,device_b,start,end` rows (seconds) and returns the events
/// sorted by start time.
pub fn parse_contact_trace(text: &str, context: &str) -> Result<Vec<ContactEvent>> {
    let table = parse_delimited(text, context)?;
    let cols = [
        table.column("device_a")?,
        table.column("device_b")?,
        table.column("start")?,
        table.column("end")?,
    ];
    let mut events = Vec::with_capacity(table.rows.len());
    for (line, row) in &table.rows {
        let a = DeviceId(table.field(*line, row, cols[0], "device_a")?);
        let b = DeviceId(table.field(*line, row, cols[1], "device_b")?);
        let start: i64 = table.field(*line, row, cols[2], "start")?;
        let end: i64 = table.field(*line, row, cols[3], "end")?;
        if end <= start {
            return Err(table.parse_error(*line, format!("end {end} is not after start {start}")));
        }
        let event = ContactEvent::new(a, b, start, end).map_err(|e| table.parse_error(*line, e.to_string()))?;
        events.push(event);
    }
    events.sort_by_key(|e| (e.start_time, e.end_time, e.pair()));
    Ok(events)
}

pub fn load_contact_trace(path: &Path) -> Result<Vec<ContactEvent>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_contact_trace(&text, &path.display().to_string())
}

pub fn render_contact_trace(events: &[ContactEvent]) -> String {
    render_delimited(
        &[],
        &["device_a", "device_b", "start", "end"],
        events.iter().map(|e| {
            vec![
                e.device_a.to_string(),
                e.device_b.to_string(),
                e.start_time.to_string(),
                e.end_time.to_string(),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "# schema_version: 1\ndevice_a,device_b,start,end\n";

    #[test]
    fn empty_trace() {
        assert!(parse_contact_trace(HEADER, "t").unwrap().is_empty());
    }

    #[test]
    fn end_before_start_reports_line() {
        let text = format!("{HEADER}1,2,0,600\n1,2,900,300\n");
        match parse_contact_trace(&text, "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn three_rows_sorted() {
        let text = format!("{HEADER}4,9,7200,8100\n9,4,0,900\n4,9,3600,4500\n");
        let events = parse_contact_trace(&text, "t").unwrap();
        let expected = vec![
            ContactEvent::new(DeviceId(9), DeviceId(4), 0, 900).unwrap(),
            ContactEvent::new(DeviceId(4), DeviceId(9), 3600, 4500).unwrap(),
            ContactEvent::new(DeviceId(4), DeviceId(9), 7200, 8100).unwrap(),
        ];
        assert_eq!(events, expected);
    }

    #[test]
    fn self_contact_rejected() {
        let text = format!("{HEADER}3,3,0,10\n");
        assert!(matches!(parse_contact_trace(&text, "t"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn render_round_trip() {
        let events = vec![
            ContactEvent::new(DeviceId(1), DeviceId(2), 0, 60).unwrap(),
            ContactEvent::new(DeviceId(3), DeviceId(2), 30, 90).unwrap(),
        ];
        assert_eq!(parse_contact_trace(&render_contact_trace(&events), "t").unwrap(), events);
    }
}
