use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use siot_core::ingest::{generate_synthetic_city, render_contact_trace, write_devices, DecoyKind, SyntheticCity, SyntheticCityParams};
use siot_core::model::DeviceId;

/// Parameter file: either a full parameter set or a named preset.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum CityParamsFile {
    Preset { preset: Preset, n_devices: usize },
    Full(SyntheticCityParams),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    ThreeClusters,
}

impl CityParamsFile {
    pub fn resolve(self, seed: u64) -> SyntheticCityParams {
        let mut params = match self {
            CityParamsFile::Preset {
                preset: Preset::ThreeClusters,
                n_devices,
            } => SyntheticCityParams::three_clusters(n_devices, seed),
            CityParamsFile::Full(p) => p,
        };
        params.seed = seed;
        params
    }
}

#[derive(Debug, Serialize)]
pub struct GroundTruth<'a> {
    pub params: &'a SyntheticCityParams,
    /// Cluster name per device id.
    pub cluster_of: Vec<(DeviceId, &'a str)>,
    pub sor_pairs: Vec<(DeviceId, DeviceId)>,
    pub decoy_pairs: &'a [((DeviceId, DeviceId), DecoyKind)],
}

pub fn write_city(city: &SyntheticCity, params: &SyntheticCityParams, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    };
    write("devices.csv", write_devices(&city.devices))?;
    write("owners.csv", city.owners.to_edge_list())?;
    write("contacts.csv", render_contact_trace(&city.contacts))?;
    let truth = GroundTruth {
        params,
        cluster_of: city
            .devices
            .iter()
            .zip(&city.cluster_of)
            .map(|(d, &c)| (d.device_id, params.clusters[c].name.as_str()))
            .collect(),
        sor_pairs: city.sor_pairs.iter().copied().collect(),
        decoy_pairs: &city.decoy_pairs,
    };
    write("ground_truth.json", serde_json::to_string_pretty(&truth)? + "\n")
}

pub fn cmd_generate(params_path: &Path, seed: u64, out: &Path) -> anyhow::Result<SyntheticCity> {
    let text = std::fs::read_to_string(params_path).with_context(|| format!("reading {}", params_path.display()))?;
    let file: CityParamsFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", params_path.display()))?;
    let params = file.resolve(seed);
    let city = generate_synthetic_city(&params)?;
    write_city(&city, &params, out)?;
    Ok(city)
}
