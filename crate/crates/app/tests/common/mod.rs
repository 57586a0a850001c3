#![allow(dead_code)]

use std::collections::BTreeMap;

use siot_app::{build, BuildParams, IndexArchive, OwnerSource, SorSource};
use siot_core::config::DiscoveryConfig;
use siot_core::ingest::{generate_synthetic_city, SyntheticCity, SyntheticCityParams};

pub fn city(n: usize, seed: u64) -> (SyntheticCityParams, SyntheticCity) {
    let params = SyntheticCityParams::three_clusters(n, seed);
    let city = generate_synthetic_city(&params).unwrap();
    (params, city)
}

pub fn build_params(seed: u64) -> BuildParams {
    let mut p = BuildParams::default().with_seed(seed);
    p.overlap.n_trials = 5;
    p
}

pub fn archive_for(city: &SyntheticCity, seed: u64) -> IndexArchive {
    build(
        city.devices.clone(),
        OwnerSource::Graph(city.owners.clone()),
        SorSource::Trace(city.contacts.clone()),
        DiscoveryConfig::default(),
        build_params(seed),
        BTreeMap::new(),
    )
    .unwrap()
}
